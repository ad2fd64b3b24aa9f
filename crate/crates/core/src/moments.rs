//! Moment statistics of a constituent state.

use num_complex::Complex64;
use serde::Serialize;

use crate::expr::Expr;
use crate::gridstate::{to_momentum, Units, WaveFunction};
use crate::numeric::{pairwise_sum, pairwise_sum_by, pairwise_sum_complex};
use crate::{Error, Result};

/// Requested `N` below this multiple of the validity ratio triggers the
/// small-system advisory.
pub const VALIDITY_MARGIN: f64 = 100.0;

/// The scalars that parameterize every limit distribution.
///
/// `x3` is the raw third moment `⟨x³⟩`; `validity_ratio` is `|⟨x³⟩| / ⟨x²⟩`.
/// When built from a `g`-transformed state, the `x` fields describe `g(x)`
/// and the momentum and cross fields are `NaN` with `joint == false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_c: f64,
    pub comm_m: f64,
    pub x3: f64,
    pub validity_ratio: f64,
    pub joint: bool,
    #[serde(skip)]
    pub units: Units,
}

impl MomentSet {
    /// A moment set given directly by its scalars. `x3` defaults to the value
    /// a Gaussian with these moments would have, `⟨x⟩³ + 3⟨x⟩σ²_x`.
    pub fn from_scalars(
        mean_x: f64,
        mean_p: f64,
        var_x: f64,
        var_p: f64,
        cov_c: f64,
        comm_m: f64,
        units: Units,
    ) -> Result<Self> {
        for (name, v) in [
            ("mean_x", mean_x),
            ("mean_p", mean_p),
            ("var_x", var_x),
            ("var_p", var_p),
            ("cov_c", cov_c),
            ("comm_m", comm_m),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if !(var_x > 0.0 && var_p > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "variances must be positive, got var_x = {var_x}, var_p = {var_p}"
            )));
        }
        units.validate()?;
        let x3 = mean_x.powi(3) + 3.0 * mean_x * var_x;
        Ok(MomentSet {
            mean_x,
            mean_p,
            var_x,
            var_p,
            cov_c,
            comm_m,
            x3,
            validity_ratio: ratio(x3, var_x + mean_x * mean_x),
            joint: true,
            units,
        })
    }

    /// Replaces the raw third moment.
    pub fn with_x3(mut self, x3: f64) -> Self {
        self.x3 = x3;
        self.validity_ratio = ratio(x3, self.raw_x2());
        self
    }

    pub fn raw_x2(&self) -> f64 {
        self.var_x + self.mean_x * self.mean_x
    }

    /// Time-reversed moments: `⟨p⟩ → −⟨p⟩`, `⟨xp⟩_c → −⟨xp⟩_c`.
    pub fn reversed(&self) -> Self {
        MomentSet {
            mean_p: -self.mean_p,
            cov_c: -self.cov_c,
            ..*self
        }
    }

    /// `var_x·var_p − cov_c²`, bounded below by `ħ²/4` for physical states.
    pub fn uncertainty_determinant(&self) -> f64 {
        self.var_x * self.var_p - self.cov_c * self.cov_c
    }

    pub fn require_joint(&self) -> Result<()> {
        if self.joint {
            Ok(())
        } else {
            Err(Error::JointUnavailable)
        }
    }

    /// Advisory when `n` is not large compared with `|⟨x³⟩/⟨x²⟩|`.
    pub fn advisory(&self, n: u64) -> Option<String> {
        let threshold = VALIDITY_MARGIN * self.validity_ratio;
        if (n as f64) < threshold {
            Some(format!(
                "N = {n} is not large compared with |<x^3>/<x^2>| = {:.6}; \
                 the Gaussian limit may be inaccurate (recommended N >= {threshold:.1})",
                self.validity_ratio
            ))
        } else {
            None
        }
    }
}

fn ratio(x3: f64, x2: f64) -> f64 {
    (x3 / x2).abs()
}

/// Weighted trapezoid sum `Σ w_j f_j dx` of grid samples.
fn quad(weights: &[f64], dx: f64, f: impl Fn(usize) -> f64) -> f64 {
    pairwise_sum_by(weights.len(), |j| weights[j] * f(j)) * dx
}

fn check_order(k: u32) -> Result<()> {
    if k > 4 {
        return Err(Error::InvalidArgument(format!(
            "moment order must be in 0..=4, got {k}"
        )));
    }
    Ok(())
}

/// Raw position moment `∫ x^k |ψ|² dx`.
pub fn position_moment(psi: &WaveFunction, k: u32) -> Result<f64> {
    check_order(k)?;
    let grid = psi.grid();
    let rho = psi.density();
    Ok(quad(&rho, grid.dx(), |j| grid.x(j).powi(k as i32)))
}

/// Raw momentum moment `∫ p^k |φ(p)|² dp`.
pub fn momentum_moment(psi: &WaveFunction, k: u32) -> Result<f64> {
    check_order(k)?;
    let phi = to_momentum(psi);
    let rho = phi.density();
    Ok(quad(&rho, phi.dp, |j| phi.p(j).powi(k as i32)))
}

/// `⟨x̂p̂⟩ = ∫ ψ* x (−iħ ∂ψ)` with a spectral derivative.
fn xp_expectation(psi: &WaveFunction) -> Complex64 {
    let grid = psi.grid();
    let hbar = psi.units().hbar;
    let amps = psi.amplitudes();
    let deriv = psi.spectral_derivative();
    let terms: Vec<Complex64> = (0..amps.len())
        .map(|j| amps[j].conj() * grid.x(j) * Complex64::new(0.0, -hbar) * deriv[j])
        .collect();
    pairwise_sum_complex(&terms) * grid.dx()
}

/// Returns `(⟨xp⟩_c, ⟨xp⟩_−)`: the symmetrized covariance
/// `½⟨x̂p̂ + p̂x̂⟩ − ⟨x̂⟩⟨p̂⟩` and the commutator moment `i⟨x̂p̂ − p̂x̂⟩`,
/// using `⟨p̂x̂⟩ = conj⟨x̂p̂⟩`.
pub fn cross_moments(psi: &WaveFunction) -> (f64, f64) {
    let xp = xp_expectation(psi);
    let px = xp.conj();
    let mean_x = position_moment(psi, 1).expect("order 1");
    let mean_p = momentum_moment(psi, 1).expect("order 1");
    let cov_c = 0.5 * (xp + px).re - mean_x * mean_p;
    let comm_m = (Complex64::i() * (xp - px)).re;
    (cov_c, comm_m)
}

/// All scalar moments of `psi`. With `g`, the position statistics are those of
/// `g(x)` under `|ψ|²` and the joint fields are unavailable.
pub fn extract_moments(psi: &WaveFunction, g: Option<&Expr>) -> Result<MomentSet> {
    let grid = psi.grid();
    let dx = grid.dx();
    let rho = psi.density();
    let units = *psi.units();
    match g {
        None => {
            let mean_x = quad(&rho, dx, |j| grid.x(j));
            let var_x = quad(&rho, dx, |j| (grid.x(j) - mean_x).powi(2));
            let x3 = quad(&rho, dx, |j| grid.x(j).powi(3));

            let phi = to_momentum(psi);
            let rho_p = phi.density();
            let mean_p = quad(&rho_p, phi.dp, |k| phi.p(k));
            let var_p = quad(&rho_p, phi.dp, |k| (phi.p(k) - mean_p).powi(2));

            let xp = xp_expectation(psi);
            let px = xp.conj();
            let cov_c = 0.5 * (xp + px).re - mean_x * mean_p;
            let comm_m = (Complex64::i() * (xp - px)).re;

            Ok(MomentSet {
                mean_x,
                mean_p,
                var_x,
                var_p,
                cov_c,
                comm_m,
                x3,
                validity_ratio: ratio(x3, var_x + mean_x * mean_x),
                joint: true,
                units,
            })
        }
        Some(g) => {
            let max_rho = rho.iter().cloned().fold(0.0, f64::max);
            let mut values = Vec::with_capacity(rho.len());
            for (j, &r) in rho.iter().enumerate() {
                let x = grid.x(j);
                let z = g.eval(x)?;
                if r > 1e-30 * max_rho && z.im.abs() > 1e-12 * (1.0 + z.re.abs()) {
                    return Err(Error::Domain(format!(
                        "g(x) = {z} is not real at x = {x} on the state's support"
                    )));
                }
                values.push(z.re);
            }
            let mean = quad(&rho, dx, |j| values[j]);
            let var = quad(&rho, dx, |j| (values[j] - mean).powi(2));
            let g3 = quad(&rho, dx, |j| values[j].powi(3));
            if !(var > 0.0) {
                return Err(Error::Domain(format!(
                    "g(x) has zero variance under the state (var = {var})"
                )));
            }
            Ok(MomentSet {
                mean_x: mean,
                mean_p: f64::NAN,
                var_x: var,
                var_p: f64::NAN,
                cov_c: f64::NAN,
                comm_m: f64::NAN,
                x3: g3,
                validity_ratio: ratio(g3, var + mean * mean),
                joint: false,
                units,
            })
        }
    }
}

/// Mean of a sampled density, used by the oracle checks.
pub(crate) fn density_mean_var(values: &[f64], x0: f64, dx: f64) -> (f64, f64, f64) {
    let mass = pairwise_sum(values) * dx;
    let mean = pairwise_sum_by(values.len(), |k| values[k] * (x0 + k as f64 * dx)) * dx / mass;
    let var = pairwise_sum_by(values.len(), |k| {
        values[k] * (x0 + k as f64 * dx - mean).powi(2)
    }) * dx
        / mass;
    (mass, mean, var)
}
