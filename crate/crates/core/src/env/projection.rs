use serde::{Deserialize, Serialize};

/// Long-only portfolio weights on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn one_hot(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn active(&self) -> usize {
        self.0.iter().filter(|&&w| w > 0.0).count()
    }

    /// L1 distance to `other`.
    pub fn turnover(&self, other: &WeightVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn dot(&self, r: &[f64]) -> f64 {
        self.0.iter().zip(r).map(|(w, x)| w * x).sum()
    }
}

/// Indices of the `k` largest values; ties go to the lower index.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps lower indices first among equals.
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx.truncate(k.min(values.len()));
    idx
}

/// Sparse projection of actor logits onto the simplex.
///
/// Keeps the Top-K logits, applies a softmax over them, zeroes weights below
/// `tau` and renormalises. If thresholding removes everything, all weight
/// goes to the largest logit (lowest index on ties).
pub fn action_to_weights(logits: &[f64], k: usize, tau: f64) -> WeightVector {
    let n = logits.len();
    assert!(n > 0, "empty logit vector");
    let k = k.clamp(1, n);
    let keep = top_k_indices(logits, k);
    let max = logits[keep[0]];
    let mut w = vec![0.0; n];
    let mut total = 0.0;
    for &i in &keep {
        let e = (logits[i] - max).exp();
        w[i] = e;
        total += e;
    }
    let mut kept = 0.0;
    for &i in &keep {
        w[i] /= total;
        if w[i] < tau {
            w[i] = 0.0;
        }
        kept += w[i];
    }
    if kept <= 0.0 {
        return WeightVector::one_hot(n, keep[0]);
    }
    w.iter_mut().for_each(|x| *x /= kept);
    WeightVector(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_logits_break_ties_low() {
        let w = action_to_weights(&[0.0; 4], 2, 0.0);
        assert_eq!(w.0, vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn hand_softmax() {
        let w = action_to_weights(&[2.0, 1.0, 0.0, -1.0], 2, 0.0);
        let e2 = 2f64.exp();
        let e1 = 1f64.exp();
        assert!((w.0[0] - e2 / (e2 + e1)).abs() < 1e-15);
        assert!((w.0[1] - e1 / (e2 + e1)).abs() < 1e-15);
        assert!((w.0[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert_eq!(&w.0[2..], &[0.0, 0.0]);
    }

    #[test]
    fn fallback_to_argmax() {
        let w = action_to_weights(&[1.0, 1.0, 1.0, 1.0], 4, 0.3);
        assert_eq!(w.0, vec![1.0, 0.0, 0.0, 0.0]);
        let w = action_to_weights(&[0.0, 5.0, 5.0, 5.0, 5.0], 4, 0.3);
        assert_eq!(w.0, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn k_clamped_to_n() {
        let w = action_to_weights(&[0.0, 0.0], 10, 0.0);
        assert_eq!(w.0, vec![0.5, 0.5]);
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let w = action_to_weights(&[1e300, -1e300, 0.0], 3, 0.01);
        assert_eq!(w.0, vec![1.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn raising_a_selected_logit_keeps_it(
            logits in prop::collection::vec(-5.0f64..5.0, 2..40),
            k in 1usize..10,
            bump in 0.0f64..3.0,
            pick in any::<prop::sample::Index>(),
        ) {
            let sel = top_k_indices(&logits, k);
            let i = sel[pick.index(sel.len())];
            let mut raised = logits.clone();
            raised[i] += bump;
            prop_assert!(top_k_indices(&raised, k).contains(&i));
        }

        #[test]
        fn turnover_bounded(a in prop::collection::vec(-5.0f64..5.0, 8), b in prop::collection::vec(-5.0f64..5.0, 8)) {
            let wa = action_to_weights(&a, 3, 0.05);
            let wb = action_to_weights(&b, 5, 0.0);
            let t = wa.turnover(&wb);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&t));
        }
    }
}
