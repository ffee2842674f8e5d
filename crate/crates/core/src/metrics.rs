//! Run summaries: accepted-set overlap and speedup ceilings.

use std::collections::BTreeSet;

use crate::error::{invalid, Result};

/// `|A ∩ B| / |A ∪ B|`, and 1 when both sets are empty. Duplicates are
/// ignored.
pub fn jaccard_similarity(a: &[usize], b: &[usize]) -> f64 {
    let a: BTreeSet<usize> = a.iter().copied().collect();
    let b: BTreeSet<usize> = b.iter().copied().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Amdahl speedup ceiling `1 / (t + (1 − t)/K)` for serial fraction `t`.
pub fn amdahl_bound(t: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!("serial fraction must lie in [0, 1], got {t}")));
    }
    if k == 0 {
        return Err(invalid("amdahl bound needs K >= 1"));
    }
    Ok(1.0 / (t + (1.0 - t) / k as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard_similarity(&[1, 2], &[1, 2]), 1.0);
        assert_eq!(jaccard_similarity(&[1], &[2]), 0.0);
        assert_eq!(jaccard_similarity(&[1, 2, 3], &[2, 3, 4]), 0.5);
        assert_eq!(jaccard_similarity(&[], &[]), 1.0);
    }

    #[test]
    fn amdahl_examples() {
        assert_eq!(amdahl_bound(0.0, 8).unwrap(), 8.0);
        assert_eq!(amdahl_bound(1.0, 17).unwrap(), 1.0);
        assert!((amdahl_bound(0.1, 4).unwrap() - 1.0 / 0.325).abs() < 1e-12);
        assert!(amdahl_bound(1.5, 2).is_err());
        assert!(amdahl_bound(0.5, 0).is_err());
    }
}
