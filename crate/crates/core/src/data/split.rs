use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub cv_fraction: f64,
    pub seed: u64,
}

/// Shuffles `items` with `spec.seed` and splits them into
/// `(train, cv)` with `ceil(n * (1 - f))` training items.
pub fn split<T: Clone>(items: &[T], spec: SplitSpec) -> Result<(Vec<T>, Vec<T>)> {
    let f = spec.cv_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidArgument(format!("cv_fraction must lie in (0, 1), got {f}")));
    }
    let n = items.len();
    // ceil(n (1 - f)) == n - floor(n f); the nudge absorbs products like 10 * 0.3.
    let cv_len = ((n as f64) * f + 1e-9).floor() as usize;
    let train_len = n - cv_len;
    if cv_len == 0 || train_len == 0 {
        return Err(Error::InvalidArgument(format!(
            "split of {n} items at cv_fraction {f} leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(spec.seed).shuffle(&mut order);
    let train = order[..train_len].iter().map(|&i| items[i].clone()).collect();
    let cv = order[train_len..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, cv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_ceiling_rule() {
        let items: Vec<u32> = (0..10).collect();
        let (t, c) = split(&items, SplitSpec { cv_fraction: 0.5, seed: 1 }).unwrap();
        assert_eq!((t.len(), c.len()), (5, 5));
        let (t, c) = split(&items, SplitSpec { cv_fraction: 0.3, seed: 1 }).unwrap();
        assert_eq!((t.len(), c.len()), (7, 3));
        let (t, c) = split(&items, SplitSpec { cv_fraction: 0.25, seed: 1 }).unwrap();
        assert_eq!((t.len(), c.len()), (8, 2));
    }

    #[test]
    fn union_is_the_input_multiset() {
        let items: Vec<u32> = (0..37).map(|i| i % 5).collect();
        let (t, c) = split(&items, SplitSpec { cv_fraction: 0.2, seed: 9 }).unwrap();
        let mut all: Vec<u32> = t.into_iter().chain(c).collect();
        all.sort();
        let mut expected = items.clone();
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn deterministic_per_seed() {
        let items: Vec<u32> = (0..50).collect();
        let spec = SplitSpec { cv_fraction: 0.2, seed: 4 };
        assert_eq!(split(&items, spec).unwrap(), split(&items, spec).unwrap());
    }

    #[test]
    fn rejects_bad_fractions_and_empty_sides() {
        let items: Vec<u32> = (0..3).collect();
        assert!(split(&items, SplitSpec { cv_fraction: 0.0, seed: 1 }).is_err());
        assert!(split(&items, SplitSpec { cv_fraction: 1.0, seed: 1 }).is_err());
        assert!(split(&items, SplitSpec { cv_fraction: 0.1, seed: 1 }).is_err());
    }
}
