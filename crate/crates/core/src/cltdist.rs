//! Closed-form limit distributions of the block variables.
//!
//! The single-variable limit is a normal density with mean `⟨x⟩` and variance
//! `σ²_x/N`. The joint real-part distribution `P_re` is a bivariate normal
//! written in principal axes: with `(θ, Δ)` from [`rotation_params`],
//!
//! ```text
//! u = (X−⟨x⟩)cosθ + (P−⟨p⟩)sinθ,   v = (P−⟨p⟩)cosθ − (X−⟨x⟩)sinθ
//! P_re ∝ exp(−u²/((σ²_x+σ²_p+Δ)/N)) · exp(−v²/((σ²_x+σ²_p−Δ)/N))
//! ```
//!
//! The imaginary-part distribution `P_im` is the difference of the same
//! construction driven by the commutator moment `⟨xp⟩_−` and the product
//! Gaussian `diag(σ²_x, σ²_p)/N`. Every component carries unit mass.
//!
//! For canonical pairs `⟨xp⟩_− = −ħ`, so whenever `σ²_xσ²_p < ħ²` the
//! commutator-driven component has one negative axis variance. It is then a
//! formal Gaussian: its moments are the polynomial (Wick) moments of its
//! covariance matrix, and quadrature along a negative-variance axis runs on
//! the imaginary contour `u = i·s`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::moments::MomentSet;
use crate::numeric::{pairwise_sum_complex, standard_normal_rule};
use crate::{Error, Result};

/// Half-width of the quadrature box, in standard deviations per principal axis.
pub const QUADRATURE_SIGMAS: f64 = 10.0;
/// Nodes per principal axis for the on-demand 2D quadratures.
pub const QUADRATURE_POINTS: usize = 161;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaussian1D {
    pub mean: f64,
    pub var: f64,
    pub n: u64,
}

impl Gaussian1D {
    pub fn std(&self) -> f64 {
        self.var.sqrt()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        -0.5 * (x - self.mean).powi(2) / self.var - 0.5 * (2.0 * PI * self.var).ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
}

fn check_n(n: u64) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    Ok(())
}

/// Limit density of `X = (1/N)Σ x_i`: normal with mean `⟨x⟩`, variance `σ²_x/N`.
pub fn single_var_density(ms: &MomentSet, n: u64) -> Result<Gaussian1D> {
    check_n(n)?;
    if !(ms.var_x > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "var_x must be positive, got {}",
            ms.var_x
        )));
    }
    Ok(Gaussian1D {
        mean: ms.mean_x,
        var: ms.var_x / n as f64,
        n,
    })
}

/// Momentum analogue of [`single_var_density`] for `P = (1/N)Σ p_i`.
pub fn momentum_density(ms: &MomentSet, n: u64) -> Result<Gaussian1D> {
    check_n(n)?;
    ms.require_joint()?;
    Ok(Gaussian1D {
        mean: ms.mean_p,
        var: ms.var_p / n as f64,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rotation {
    pub theta: f64,
    pub delta: f64,
}

/// Principal-axis angle and eigenvalue gap of `[[var_x, off],[off, var_p]]`.
///
/// `2θ = atan2(2·off, var_x − var_p)`, so that `Δcos2θ = var_x − var_p` and
/// `Δsin2θ = 2·off` hold in every quadrant; `θ ∈ (−π/2, π/2]`, and `θ = 0`
/// when both arguments vanish.
pub fn rotation_params(var_x: f64, var_p: f64, off_diag: f64) -> Rotation {
    let a = var_x - var_p;
    let b = 2.0 * off_diag;
    let delta = a.hypot(b);
    let theta = if a == 0.0 && b == 0.0 {
        0.0
    } else {
        0.5 * b.atan2(a)
    };
    Rotation { theta, delta }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaussian2D {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub theta: f64,
    pub delta: f64,
    pub axis_vars: [f64; 2],
    pub n: u64,
}

impl Gaussian2D {
    /// Joint Gaussian with covariance `[[var_x, off],[off, var_p]]/n`.
    pub fn from_moments(
        mean: [f64; 2],
        var_x: f64,
        var_p: f64,
        off_diag: f64,
        n: u64,
    ) -> Result<Self> {
        check_n(n)?;
        let nf = n as f64;
        let Rotation { theta, delta } = rotation_params(var_x, var_p, off_diag);
        let trace = var_x + var_p;
        Ok(Gaussian2D {
            mean,
            cov: [[var_x / nf, off_diag / nf], [off_diag / nf, var_p / nf]],
            theta,
            delta,
            axis_vars: [(trace + delta) / (2.0 * nf), (trace - delta) / (2.0 * nf)],
            n,
        })
    }

    /// Covariance rebuilt from the principal axes, `R(θ)·diag(axis_vars)·R(θ)ᵀ`.
    pub fn reconstructed_cov(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        let [a, b] = self.axis_vars;
        [
            [c * c * a + s * s * b, c * s * (a - b)],
            [c * s * (a - b), s * s * a + c * c * b],
        ]
    }

    /// Both axis variances positive, i.e. an ordinary probability density.
    pub fn is_proper(&self) -> bool {
        self.axis_vars[0] > 0.0 && self.axis_vars[1] > 0.0
    }

    pub fn determinant(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    pub fn condition_number(&self) -> f64 {
        let [a, b] = self.axis_vars;
        a.abs().max(b.abs()) / a.abs().min(b.abs())
    }

    fn axes(&self, x: f64, p: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = x - self.mean[0];
        let dp = p - self.mean[1];
        (dx * c + dp * s, dp * c - dx * s)
    }

    /// Log density in the rotated form; `NaN` when not [`is_proper`](Self::is_proper).
    pub fn ln_pdf(&self, x: f64, p: f64) -> f64 {
        if !self.is_proper() {
            return f64::NAN;
        }
        let (u, v) = self.axes(x, p);
        let [a, b] = self.axis_vars;
        -u * u / (2.0 * a) - v * v / (2.0 * b) - (2.0 * PI).ln() - 0.5 * (a * b).ln()
    }

    pub fn pdf(&self, x: f64, p: f64) -> f64 {
        self.ln_pdf(x, p).exp()
    }

    pub fn marginal_x(&self) -> Gaussian1D {
        Gaussian1D {
            mean: self.mean[0],
            var: self.cov[0][0],
            n: self.n,
        }
    }

    pub fn marginal_p(&self) -> Gaussian1D {
        Gaussian1D {
            mean: self.mean[1],
            var: self.cov[1][1],
            n: self.n,
        }
    }

    fn axis_rule(var: f64, points: usize) -> Vec<(Complex64, f64)> {
        if var == 0.0 {
            return vec![(Complex64::new(0.0, 0.0), 1.0)];
        }
        let (nodes, weights) = standard_normal_rule(QUADRATURE_SIGMAS, points);
        let sd = var.abs().sqrt();
        nodes
            .into_iter()
            .zip(weights)
            .map(|(s, w)| {
                let u = if var > 0.0 {
                    Complex64::new(sd * s, 0.0)
                } else {
                    Complex64::new(0.0, sd * s)
                };
                (u, w)
            })
            .collect()
    }

    /// `∫ f(X, P) dG` by a tensor trapezoid rule on the principal axes,
    /// `±10` standard deviations each, with `points` nodes per axis.
    /// Negative-variance axes use the imaginary contour.
    pub fn expect_quadrature(
        &self,
        points: usize,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Complex64 {
        let (s, c) = self.theta.sin_cos();
        let rule_u = Self::axis_rule(self.axis_vars[0], points);
        let rule_v = Self::axis_rule(self.axis_vars[1], points);
        let mut rows = Vec::with_capacity(rule_u.len());
        for &(u, wu) in &rule_u {
            let terms: Vec<Complex64> = rule_v
                .iter()
                .map(|&(v, wv)| {
                    let x = self.mean[0] + c * u - s * v;
                    let p = self.mean[1] + s * u + c * v;
                    f(x, p) * wv
                })
                .collect();
            rows.push(pairwise_sum_complex(&terms) * wu);
        }
        pairwise_sum_complex(&rows)
    }

    /// `E[X^m P^n]` by [`expect_quadrature`](Self::expect_quadrature).
    pub fn moment_quadrature(&self, m: u32, n: u32) -> f64 {
        self.expect_quadrature(QUADRATURE_POINTS, |x, p| x.powu(m) * p.powu(n))
            .re
    }

    /// Integral of [`pdf`](Self::pdf) over the `±10σ` principal-axis box.
    pub fn mass_quadrature(&self) -> Result<f64> {
        if !self.is_proper() {
            return Err(Error::Domain("density of an improper Gaussian".into()));
        }
        let (s, c) = self.theta.sin_cos();
        let pts = QUADRATURE_POINTS;
        let su = self.axis_vars[0].sqrt();
        let sv = self.axis_vars[1].sqrt();
        let hu = 2.0 * QUADRATURE_SIGMAS * su / (pts - 1) as f64;
        let hv = 2.0 * QUADRATURE_SIGMAS * sv / (pts - 1) as f64;
        let rows: Vec<f64> = (0..pts)
            .map(|i| {
                let u = -QUADRATURE_SIGMAS * su + i as f64 * hu;
                let terms: Vec<f64> = (0..pts)
                    .map(|j| {
                        let v = -QUADRATURE_SIGMAS * sv + j as f64 * hv;
                        self.pdf(self.mean[0] + c * u - s * v, self.mean[1] + s * u + c * v)
                    })
                    .collect();
                crate::numeric::pairwise_sum(&terms) * hv
            })
            .collect();
        Ok(crate::numeric::pairwise_sum(&rows) * hu)
    }
}

/// `P_re`: joint Gaussian of `(X, P)` built from `(θ₊, Δ₊)` with `⟨xp⟩_c`.
pub fn joint_re_density(ms: &MomentSet, n: u64) -> Result<Gaussian2D> {
    ms.require_joint()?;
    Gaussian2D::from_moments([ms.mean_x, ms.mean_p], ms.var_x, ms.var_p, ms.cov_c, n)
}

/// `P_im = plus − minus`, each of unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignedGaussianPair {
    /// Built from `(θ₋, Δ₋)` with the commutator moment as off-diagonal.
    pub plus: Gaussian2D,
    /// Product Gaussian `diag(σ²_x, σ²_p)/N`.
    pub minus: Gaussian2D,
    pub weights: [f64; 2],
}

impl SignedGaussianPair {
    /// True when both components coincide (commuting input).
    pub fn is_zero(&self) -> bool {
        self.plus == self.minus
    }

    /// `E_plus[f] − E_minus[f]` by quadrature.
    pub fn expect_quadrature(
        &self,
        points: usize,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> f64 {
        let a = self.plus.expect_quadrature(points, &f);
        let b = self.minus.expect_quadrature(points, &f);
        (self.weights[0] * a + self.weights[1] * b).re
    }

    pub fn total_mass_quadrature(&self) -> f64 {
        self.expect_quadrature(QUADRATURE_POINTS, |_, _| Complex64::new(1.0, 0.0))
    }

    /// Pointwise value; `NaN` if the plus component is improper.
    pub fn pdf(&self, x: f64, p: f64) -> f64 {
        self.weights[0] * self.plus.pdf(x, p) + self.weights[1] * self.minus.pdf(x, p)
    }
}

pub fn joint_im_density(ms: &MomentSet, n: u64) -> Result<SignedGaussianPair> {
    ms.require_joint()?;
    let mean = [ms.mean_x, ms.mean_p];
    Ok(SignedGaussianPair {
        plus: Gaussian2D::from_moments(mean, ms.var_x, ms.var_p, ms.comm_m, n)?,
        minus: Gaussian2D::from_moments(mean, ms.var_x, ms.var_p, 0.0, n)?,
        weights: [1.0, -1.0],
    })
}
