use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::DataError;

/// Chronological train/test partition of row indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Range<usize>,
    pub test: Range<usize>,
    pub ratio: f64,
}

impl SplitPlan {
    pub fn n_rows(&self) -> usize {
        self.test.end
    }
}

/// Train gets `floor(ratio * rows)` leading rows, test gets the rest.
pub fn chronological_split(rows: usize, ratio: f64) -> Result<SplitPlan, DataError> {
    let bad = || DataError::BadSplit { rows, ratio };
    if !(ratio > 0.0 && ratio < 1.0) || rows < 2 {
        return Err(bad());
    }
    let n_train = (ratio * rows as f64).floor() as usize;
    if n_train == 0 || n_train >= rows {
        return Err(bad());
    }
    Ok(SplitPlan {
        train: 0..n_train,
        test: n_train..rows,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventy_thirty() {
        let s = chronological_split(10, 0.7).unwrap();
        assert_eq!((s.train, s.test), (0..7, 7..10));
        let s = chronological_split(4, 0.7).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (2, 2));
        let s = chronological_split(10, 0.99).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (9, 1));
    }

    #[test]
    fn rejects_degenerate() {
        assert!(chronological_split(1, 0.5).is_err());
        assert!(chronological_split(10, 0.05).is_err());
        assert!(chronological_split(10, 1.0).is_err());
        assert!(chronological_split(10, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn ranges_partition_rows(rows in 2usize..500, ratio in 0.01f64..0.99) {
            if let Ok(s) = chronological_split(rows, ratio) {
                prop_assert_eq!(s.train.start, 0);
                prop_assert_eq!(s.train.end, s.test.start);
                prop_assert_eq!(s.test.end, rows);
                prop_assert!(!s.train.is_empty() && !s.test.is_empty());
            }
        }
    }
}
