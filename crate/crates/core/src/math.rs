//! Small numeric helpers shared across the crate.

use num_traits::Float;

#[inline]
pub(crate) fn lit<T: Float>(v: f64) -> T {
    T::from(v).expect("literal representable in scalar type")
}

#[inline]
pub(crate) fn count<T: Float>(n: u32) -> T {
    T::from(n).expect("count representable in scalar type")
}

/// `log(exp(a) + exp(b))` without overflow; `-inf` is the identity.
#[inline]
pub fn log_add_exp<T: Float>(a: T, b: T) -> T {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == T::neg_infinity() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Log of the sum of exponentials of `xs`. Returns `-inf` for an empty slice
/// or when every entry is `-inf`.
pub fn log_sum_exp<T: Float>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() || !max.is_finite() {
        return max;
    }
    let sum = xs.iter().fold(T::zero(), |acc, &x| acc + (x - max).exp());
    max + sum.ln()
}

/// `log(1 - exp(-x))` for `x > 0`.
#[inline]
pub fn log1mexp<T: Float>(x: T) -> T {
    if x > lit(std::f64::consts::LN_2) {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_for_moderate_values() {
        let xs = [0.1_f64, -2.0, 3.5, 1.0];
        let naive: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-14);
    }

    #[test]
    fn lse_handles_extremes() {
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        let v = log_sum_exp(&[-1e4_f64, -1e4]);
        assert!((v - (-1e4 + 2f64.ln())).abs() < 1e-9);
        let v = log_sum_exp(&[1e4_f64, 0.0]);
        assert!((v - 1e4).abs() < 1e-9);
    }

    #[test]
    fn log_add_exp_identity() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 2.0), 2.0);
        assert!((log_add_exp(0.0_f64, 0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log1mexp_both_branches() {
        assert!((log1mexp(1e-12_f64) - 1e-12_f64.ln()).abs() < 1e-9);
        for x in [0.3_f64, 0.7, 5.0, 40.0] {
            let naive = (1.0 - (-x).exp()).ln();
            let got = log1mexp(x);
            assert!((got - naive).abs() <= 1e-9 * naive.abs().max(1.0), "x={x}");
        }
    }
}
