//! Descriptive statistics and the special functions behind F-test p-values.

use std::f64::consts::PI;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (`n - 1` denominator). Zero for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_MAX_ITER: usize = 1000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `I_x(a, b)` given both `x` and `1 - x`, so callers can pass a complement
/// computed without cancellation.
fn incomplete_beta_split(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * one_minus_x.ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, one_minus_x) / b
    }
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`, `x ∈ [0, 1]`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    let x = x.clamp(0.0, 1.0);
    incomplete_beta_split(a, b, x, 1.0 - x)
}

/// Upper-tail probability `P(X ≥ f)` for `X ~ F(df1, df2)`.
pub fn f_pvalue(f: f64, df1: u32, df2: u32) -> f64 {
    assert!(df1 >= 1 && df2 >= 1, "degrees of freedom must be positive");
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    let denom = d2 + d1 * f;
    incomplete_beta_split(d2 / 2.0, d1 / 2.0, d2 / denom, d1 * f / denom).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sd_convention() {
        assert_eq!(sample_sd(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(sample_sd(&[4.0]), 0.0);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_relative_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_relative_eq!(ln_gamma(0.5), PI.sqrt().ln(), epsilon = 1e-14);
        assert_relative_eq!(ln_gamma(100.0), 359.134_205_369_575_4, max_relative = 1e-14);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x ; I_x(a, 1) = x^a ; I_x(1, b) = 1 - (1 - x)^b
        for &x in &[0.0, 0.1, 0.5, 0.9, 1.0] {
            assert_relative_eq!(regularized_incomplete_beta(1.0, 1.0, x), x, epsilon = 1e-14);
            assert_relative_eq!(regularized_incomplete_beta(2.5, 1.0, x), x.powf(2.5), epsilon = 1e-14);
            assert_relative_eq!(regularized_incomplete_beta(1.0, 3.0, x), 1.0 - (1.0 - x).powi(3), epsilon = 1e-14);
        }
    }

    #[test]
    fn f_pvalue_edges() {
        assert_eq!(f_pvalue(0.0, 3, 7), 1.0);
        assert_eq!(f_pvalue(f64::INFINITY, 3, 7), 0.0);
        for nu in [1, 2, 5, 17, 40] {
            assert_relative_eq!(f_pvalue(1.0, nu, nu), 0.5, epsilon = 1e-13);
        }
        // F(2, d2) has the closed-form tail (1 + 2F/d2)^(-d2/2)
        for &f in &[0.3, 1.7, 12.0, 150.0] {
            let exact = (1.0 + 2.0 * f / 9.0f64).powf(-4.5);
            assert_relative_eq!(f_pvalue(f, 2, 9), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn f_pvalue_tiny_tail_relative_accuracy() {
        // F(2, 30) tail at F = 1e6: (1 + 2F/30)^-15
        let f = 1e6;
        let exact = (1.0 + 2.0 * f / 30.0f64).powf(-15.0);
        assert!(exact < 1e-70);
        assert_relative_eq!(f_pvalue(f, 2, 30), exact, max_relative = 1e-10);
    }

    #[test]
    fn f_pvalue_strictly_decreasing() {
        let mut prev = 1.0;
        for i in 1..200 {
            let p = f_pvalue(i as f64 * 0.05, 4, 25);
            assert!(p < prev);
            prev = p;
        }
    }
}
