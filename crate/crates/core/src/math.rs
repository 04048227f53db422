//! Log-factorial table and binomial helpers shared by the state factories and
//! noise channels. Everything is computed in log space so that sectors with a
//! couple of thousand particles stay inside f64 range.

use std::sync::{OnceLock, RwLock};

fn ln_fact_table() -> &'static RwLock<Vec<f64>> {
    static TABLE: OnceLock<RwLock<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(vec![0.0, 0.0]))
}

/// `ln(n!)`, extended on demand with compensated summation.
pub fn ln_factorial(n: usize) -> f64 {
    {
        let t = ln_fact_table().read().unwrap();
        if n < t.len() {
            return t[n];
        }
    }
    let mut t = ln_fact_table().write().unwrap();
    // Kahan compensation keeps the absolute error near machine epsilon even
    // for tables tens of thousands of entries long.
    let mut sum = *t.last().unwrap();
    let mut comp = 0.0f64;
    for k in t.len()..=n {
        let y = (k as f64).ln() - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        t.push(sum);
    }
    t[n]
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Binomial pmf `C(n,k) p^k (1-p)^{n-k}` evaluated in log space; exact at the
/// endpoints `p = 0` and `p = 1`. Test oracle for the channel weights.
#[cfg(test)]
pub fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

/// Square root of the binomial pmf, the amplitude-damping Kraus coefficient
/// `<n-k| A_k |n>`.
pub fn kraus_coeff(n: usize, k: usize, eta: f64) -> f64 {
    if eta == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if eta == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (0.5 * (ln_binomial(n, k) + k as f64 * eta.ln() + (n - k) as f64 * (1.0 - eta).ln())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factorials_match_direct_products() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        let mut acc = 1.0f64;
        for n in 2..=20 {
            acc *= n as f64;
            assert_relative_eq!(ln_factorial(n), acc.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn binomial_against_multiplicative_recurrence() {
        // independent route: C(n, k+1) = C(n, k) (n-k)/(k+1)
        for n in [5usize, 40, 300, 2000] {
            let mut c = 1.0f64;
            for k in 0..=n.min(60) {
                assert_relative_eq!(ln_binomial(n, k), c.ln(), epsilon = 1e-12, max_relative = 1e-11);
                c *= (n - k) as f64 / (k + 1) as f64;
            }
        }
    }

    #[test]
    fn pmf_rows_sum_to_one() {
        for n in [3usize, 17, 120] {
            for p in [0.0, 0.2, 0.5, 0.9, 1.0] {
                let s: f64 = (0..=n).map(|k| binomial_pmf(n, k, p)).sum();
                assert_relative_eq!(s, 1.0, epsilon = 1e-12);
            }
        }
    }
}
