//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.
#![allow(dead_code)]

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

/// Upper-tail p-value of Pearson's statistic for `observed` against
/// `expected_probs` (which must sum to 1).
pub fn chi_square_p_value(observed: &[u64], expected_probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_probs)
        .map(|(&o, &p)| {
            let e = total as f64 * p;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let df = (observed.len() - 1) as f64;
    ChiSquared::new(df).unwrap().sf(stat)
}

/// `(d e^eps + k - d)^2 / (d (k - d))` evaluated independently.
pub fn objective(k: usize, epsilon: f64, d: usize) -> f64 {
    let e = epsilon.exp();
    let (k, d) = (k as f64, d as f64);
    (d * e + k - d).powi(2) / (d * (k - d))
}

/// Exhaustive argmin over `1..k`, ties to the smaller `d`.
pub fn exhaustive_d_star(k: usize, epsilon: f64) -> usize {
    let mut best = 1;
    let mut best_val = objective(k, epsilon, 1);
    for d in 2..k {
        let v = objective(k, epsilon, d);
        if v < best_val {
            best = d;
            best_val = v;
        }
    }
    best
}

/// `M(k, eps)` from the exhaustive `d*`.
pub fn m_oracle(k: usize, epsilon: f64) -> f64 {
    let d = exhaustive_d_star(k, epsilon);
    let kf = k as f64;
    (kf - 1.0).powi(2) / (kf * kf * (epsilon.exp() - 1.0).powi(2)) * objective(k, epsilon, d)
}

/// Estimator coefficients `(A, B)` written out directly.
pub fn coefficients_oracle(k: usize, epsilon: f64, d: usize) -> (f64, f64) {
    let e = epsilon.exp();
    let (k, d) = (k as f64, d as f64);
    let a = ((k - 1.0) * e + (k - 1.0) * (k - d) / d) / ((k - d) * (e - 1.0));
    let b = ((d - 1.0) * e + k - d) / ((k - d) * (e - 1.0));
    (a, b)
}

/// `E|A t / n - B - p_i|^u` for `t ~ Binomial(n, (p_i + B) / A)`, by direct
/// summation over the pmf (terms beyond 14 standard deviations are dropped).
pub fn exact_coordinate_moment(a: f64, b: f64, p_i: f64, n: u64, u: f64) -> f64 {
    let q = (p_i + b) / a;
    let dist = Binomial::new(q, n).unwrap();
    let mean = n as f64 * q;
    let sd = (n as f64 * q * (1.0 - q)).sqrt();
    let lo = (mean - 14.0 * sd - 1.0).floor().max(0.0) as u64;
    let hi = ((mean + 14.0 * sd + 1.0).ceil() as u64).min(n);
    (lo..=hi)
        .map(|t| dist.pmf(t) * (a * t as f64 / n as f64 - b - p_i).abs().powf(u))
        .sum()
}

/// `C_u = E|Z|^u` by Simpson quadrature after substituting `x = s^2`, which
/// makes the integrand smooth at the origin for every `u > 0`.
pub fn c_u_quadrature(u: f64) -> f64 {
    // E|Z|^u = 2 int_0^inf x^u phi(x) dx = 4 int_0^inf s^{2u+1} phi(s^2) ds
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |s: f64| 4.0 * s.powf(2.0 * u + 1.0) * phi(s * s);
    let (upper, steps) = (7.0, 200_000usize);
    let h = upper / steps as f64;
    let mut acc = f(0.0) + f(upper);
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}
