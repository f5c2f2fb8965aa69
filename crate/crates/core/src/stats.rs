//! Small reductions used on Monte Carlo ensembles.

use crate::scalar::Scalar;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation; the result depends only on the order of
/// `xs`, never on how work was scheduled.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().fold(T::zero(), |s, &x| s + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    pairwise_sum(xs) / T::from_usize_lossy(xs.len())
}

/// Sample variance with divisor `len - 1` (zero for fewer than two values).
pub fn variance<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let mu = mean(xs);
    let sq: Vec<T> = xs.iter().map(|&x| (x - mu) * (x - mu)).collect();
    pairwise_sum(&sq) / T::from_usize_lossy(xs.len() - 1)
}

/// Standard error of the sample mean.
pub fn std_error<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    (variance(xs) / T::from_usize_lossy(xs.len())).sqrt()
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], prob: f64) -> T {
    match sorted.len() {
        0 => T::zero(),
        1 => sorted[0],
        len => {
            let h = prob.clamp(0.0, 1.0) * (len - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            let w = T::lit(h - lo as f64);
            sorted[lo] + (sorted[hi] - sorted[lo]) * w
        }
    }
}

pub fn quantiles<T: Scalar>(xs: &[T], probs: &[f64]) -> Vec<T> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simple_moments() {
        let xs = [1.0_f64, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(quantiles(&xs, &[0.0, 0.5, 1.0]), vec![1.0, 2.5, 4.0]);
    }

    proptest! {
        #[test]
        fn pairwise_matches_naive(xs in proptest::collection::vec(-1e6f64..1e6, 0..500)) {
            let naive: f64 = xs.iter().sum();
            let scale = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-12 * scale);
        }
    }
}
