//! Deterministic reductions and small numerical helpers shared by the modules.

use num_complex::Complex64;

const PAIRWISE_BLOCK: usize = 16;

/// Pairwise (cascade) summation. The association order depends only on the
/// slice length, so the result is reproducible bit for bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    if values.len() <= PAIRWISE_BLOCK {
        let mut acc = Complex64::new(0.0, 0.0);
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// Pairwise sum of `f(0), …, f(len-1)`.
pub fn pairwise_sum_by(len: usize, f: impl Fn(usize) -> f64) -> f64 {
    let terms: Vec<f64> = (0..len).map(f).collect();
    pairwise_sum(&terms)
}

/// Ordinary least squares fit `y = intercept + slope * x`.
/// Returns `(slope, intercept, rms_residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let sxy = pairwise_sum_by(xs.len(), |i| (xs[i] - mx) * (ys[i] - my));
    let sxx = pairwise_sum_by(xs.len(), |i| (xs[i] - mx).powi(2));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = pairwise_sum_by(xs.len(), |i| (ys[i] - intercept - slope * xs[i]).powi(2));
    (slope, intercept, (rss / n).sqrt())
}

/// Uniformly spaced samples from `t0` to `t1` inclusive.
pub fn linspace(t0: f64, t1: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![t0],
        _ => {
            let step = (t1 - t0) / (samples - 1) as f64;
            (0..samples).map(|i| t0 + i as f64 * step).collect()
        }
    }
}

/// Trapezoid-rule nodes for a Gaussian-weighted integral over `±half_width`
/// standard deviations: returns `(nodes, weights)` in standardized units with
/// weights already including the unit-normal density.
pub(crate) fn standard_normal_rule(half_width: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * half_width / (points - 1) as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let nodes: Vec<f64> = (0..points).map(|i| -half_width + i as f64 * h).collect();
    let weights = nodes
        .iter()
        .map(|s| h * (-0.5 * s * s).exp() / norm)
        .collect();
    (nodes, weights)
}

/// Formats a double with 17 significant digits, enough to round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_exact_values() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.5 * x).collect();
        let (slope, intercept, rms) = linear_fit(&xs, &ys);
        assert!((slope + 0.5).abs() < 1e-14);
        assert!((intercept - 1.5).abs() < 1e-14);
        assert!(rms < 1e-14);
    }

    #[test]
    fn fmt_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn linspace_endpoints_negate_exactly() {
        let a = linspace(0.5, 7.25, 11);
        let b = linspace(-0.5, -7.25, 11);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(*x, -*y);
        }
    }
}
