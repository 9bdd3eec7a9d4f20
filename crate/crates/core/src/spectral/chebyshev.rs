//! Shifted Chebyshev expansions on `[0, lambda_max]`.
//!
//! A kernel `k` is approximated as `c_0 / 2 + sum_{m>=1} c_m T_m(y)` with
//! `y = 2 lambda / lambda_max - 1`.

use std::f64::consts::PI;

/// Expansion coefficients `c_0..=c_M` of `kernel` on `[0, lambda_max]`,
/// computed by Gauss-Chebyshev quadrature on `M + 1` nodes.
pub fn cheby_coefficients(kernel: impl Fn(f64) -> f64, degree: usize, lambda_max: f64) -> Vec<f64> {
    let nodes = degree + 1;
    let half = lambda_max / 2.0;
    let samples: Vec<(f64, f64)> = (0..nodes)
        .map(|i| {
            let theta = PI * (i as f64 + 0.5) / nodes as f64;
            (theta, kernel(half * theta.cos() + half))
        })
        .collect();
    (0..=degree)
        .map(|m| {
            2.0 / nodes as f64
                * samples
                    .iter()
                    .map(|&(theta, v)| v * (m as f64 * theta).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Evaluates an expansion at `lambda` with the three-term recurrence.
pub fn cheby_eval(coeffs: &[f64], lambda: f64, lambda_max: f64) -> f64 {
    let Some(&c0) = coeffs.first() else { return 0.0 };
    let y = 2.0 * lambda / lambda_max - 1.0;
    let (mut prev, mut cur) = (1.0, y);
    let mut acc = 0.5 * c0;
    for (m, &c) in coeffs.iter().enumerate().skip(1) {
        if m > 1 {
            let next = 2.0 * y * cur - prev;
            prev = cur;
            cur = next;
        }
        acc += c * cur;
    }
    acc
}

/// Sup-norm error of an expansion against `kernel` on a uniform grid of
/// `points` samples over `[0, lambda_max]`.
pub fn truncation_error(kernel: impl Fn(f64) -> f64, coeffs: &[f64], lambda_max: f64, points: usize) -> f64 {
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let x = lambda_max * i as f64 / (points - 1) as f64;
            (cheby_eval(coeffs, x, lambda_max) - kernel(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// Coefficients of the pointwise product of two expansions (same interval),
/// in the same halved-`c_0` convention.
pub fn cheby_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    // plain coefficients: p(y) = sum_k a_k T_k(y)
    let plain = |c: &[f64]| {
        let mut v = c.to_vec();
        v[0] *= 0.5;
        v
    };
    let (pa, pb) = (plain(a), plain(b));
    let mut out = vec![0.0; pa.len() + pb.len() - 1];
    // T_m T_n = (T_{m+n} + T_{|m-n|}) / 2
    for (m, &x) in pa.iter().enumerate() {
        for (n, &y) in pb.iter().enumerate() {
            out[m + n] += 0.5 * x * y;
            out[m.abs_diff(n)] += 0.5 * x * y;
        }
    }
    out[0] *= 2.0;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_kernel() {
        let c = cheby_coefficients(|_| 1.0, 8, 5.0);
        assert!((c[0] - 2.0).abs() < 1e-14);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn identity_kernel_is_exact_at_degree_one() {
        for m in [1, 2, 7] {
            let c = cheby_coefficients(|x| x, m, 3.0);
            assert!(truncation_error(|x| x, &c, 3.0, 1000) < 1e-13);
        }
    }

    #[test]
    fn product_matches_pointwise() {
        let f = |x: f64| (x * 0.7).sin() + 0.3;
        let g = |x: f64| (-x).exp();
        let (cf, cg) = (cheby_coefficients(f, 20, 4.0), cheby_coefficients(g, 15, 4.0));
        let cp = cheby_product(&cf, &cg);
        assert_eq!(cp.len(), 36);
        for i in 0..50 {
            let x = 4.0 * i as f64 / 49.0;
            let want = cheby_eval(&cf, x, 4.0) * cheby_eval(&cg, x, 4.0);
            assert!((cheby_eval(&cp, x, 4.0) - want).abs() < 1e-13);
        }
    }
}
