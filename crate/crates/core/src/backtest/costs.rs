use super::BacktestError;
use crate::env::WeightVector;

/// `gross_t = r_t . w_t` for each traded row.
pub fn gross_returns(returns: &[Vec<f64>], weights: &[WeightVector]) -> Result<Vec<f64>, BacktestError> {
    if returns.len() != weights.len() {
        return Err(BacktestError::Length(format!(
            "{} return rows for {} weight rows",
            returns.len(),
            weights.len()
        )));
    }
    Ok(returns.iter().zip(weights).map(|(r, w)| w.dot(r)).collect())
}

/// `net_t = gross_t - tc * |w_t - w_{t-1}|_1`, starting from uniform weights.
pub fn apply_costs(gross: &[f64], weights: &[WeightVector], tc: f64) -> Result<Vec<f64>, BacktestError> {
    if gross.len() != weights.len() {
        return Err(BacktestError::Length(format!(
            "{} gross returns for {} weight rows",
            gross.len(),
            weights.len()
        )));
    }
    let Some(first) = weights.first() else {
        return Ok(Vec::new());
    };
    let mut prev = WeightVector::uniform(first.len());
    let mut net = Vec::with_capacity(gross.len());
    for (g, w) in gross.iter().zip(weights) {
        net.push(g - tc * w.turnover(&prev));
        prev = w.clone();
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_weights_cost_nothing() {
        let w = vec![WeightVector::uniform(4); 3];
        let g = [0.01, -0.02, 0.03];
        assert_eq!(apply_costs(&g, &w, 0.001).unwrap(), g.to_vec());
    }

    #[test]
    fn full_rotation_into_one_asset() {
        let w = vec![WeightVector::one_hot(4, 0)];
        let net = apply_costs(&[0.0], &w, 0.001).unwrap();
        // Turnover 0.75 + 3 * 0.25 = 1.5.
        assert!((net[0] + 0.0015).abs() < 1e-15);
        let free = apply_costs(&[0.0], &w, 0.0).unwrap();
        assert_eq!(free, vec![0.0]);
    }

    #[test]
    fn misaligned() {
        assert!(apply_costs(&[0.0, 0.1], &[WeightVector::uniform(2)], 0.001).is_err());
        assert!(gross_returns(&[vec![0.0, 0.1]], &[]).is_err());
    }

    proptest! {
        #[test]
        fn higher_cost_never_helps(
            logits in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 5), 1..20),
            tc in 0.0f64..0.01,
            extra in 0.0f64..0.01,
        ) {
            let w: Vec<_> = logits.iter().map(|l| crate::env::action_to_weights(l, 3, 0.01)).collect();
            let g: Vec<f64> = (0..w.len()).map(|k| (k as f64).sin() * 0.02).collect();
            let a = apply_costs(&g, &w, tc).unwrap();
            let b = apply_costs(&g, &w, tc + extra).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(y <= x);
            }
        }
    }
}
