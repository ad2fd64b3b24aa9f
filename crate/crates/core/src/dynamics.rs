//! Closed-form Heisenberg-picture moment flows for the free particle, the
//! constant force and the harmonic oscillator.
//!
//! All three Hamiltonians are at most quadratic, so `x̂(t)` and `p̂(t)` are
//! linear in `x̂(0)` and `p̂(0)`:
//!
//! ```text
//! free:      x(t) = x + p t/m,                 p(t) = p
//! force a:   x(t) = x + p t/m + a t²/2m,       p(t) = p + a t
//! oscillator x(t) = x cos ωt + p sin ωt/(mω),  p(t) = p cos ωt − mω x sin ωt
//! ```
//!
//! Second moments follow by bilinearity; in particular the symmetrized
//! covariance evolves as `cov_c + tσ²_p/m` (free, force) and as
//! `cos2ωt·cov_c + sin ωt cos ωt (σ²_p/(mω) − mωσ²_x)` (oscillator).

use serde::Serialize;

use crate::gridstate::{propagate, SystemSpec, WaveFunction};
use crate::moments::{extract_moments, MomentSet};
use crate::Result;

/// A moment set paired with the system that moves it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentFlow {
    pub system: SystemSpec,
    pub ms0: MomentSet,
}

impl MomentFlow {
    pub fn new(system: SystemSpec, ms0: MomentSet) -> Result<Self> {
        system.validate()?;
        ms0.require_joint()?;
        Ok(MomentFlow { system, ms0 })
    }

    pub fn at(&self, t: f64) -> MomentSet {
        flow(&self.system, &self.ms0, t)
    }
}

pub fn evolve_moments(system: &SystemSpec, ms0: &MomentSet, t: f64) -> Result<MomentSet> {
    Ok(MomentFlow::new(*system, *ms0)?.at(t))
}

fn flow(system: &SystemSpec, ms: &MomentSet, t: f64) -> MomentSet {
    let m = ms.units.mass;
    let (sx, sp, c) = (ms.var_x, ms.var_p, ms.cov_c);
    let free_second = |t: f64| {
        (
            sx + t * t * sp / (m * m) + 2.0 * t * c / m,
            sp,
            c + t * sp / m,
        )
    };
    let (mean_x, mean_p, (var_x, var_p, cov_c)) = match *system {
        SystemSpec::Free => (ms.mean_x + ms.mean_p * t / m, ms.mean_p, free_second(t)),
        SystemSpec::ConstantForce { a } => (
            ms.mean_x + ms.mean_p * t / m + a * t * t / (2.0 * m),
            ms.mean_p + a * t,
            free_second(t),
        ),
        SystemSpec::Oscillator { omega } => {
            let (s, co) = (omega * t).sin_cos();
            let mw = m * omega;
            (
                ms.mean_x * co + ms.mean_p * s / mw,
                ms.mean_p * co - mw * ms.mean_x * s,
                (
                    co * co * sx + s * s * sp / (mw * mw) + 2.0 * s * co * c / mw,
                    co * co * sp + mw * mw * s * s * sx - 2.0 * mw * s * co * c,
                    (co * co - s * s) * c + s * co * (sp / mw - mw * sx),
                ),
            )
        }
    };
    let moved = MomentSet {
        mean_x,
        mean_p,
        var_x,
        var_p,
        cov_c,
        ..*ms
    };
    // the Gaussian-consistent third moment keeps the small-N advisory meaningful
    moved.with_x3(mean_x.powi(3) + 3.0 * mean_x * var_x)
}

/// Per-field absolute differences between propagated and closed-form moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discrepancy {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_c: f64,
    pub max_abs: f64,
}

/// Moments from both routes together with their discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorCheck {
    pub t: f64,
    pub n_steps: usize,
    pub propagated: MomentSet,
    pub closed_form: MomentSet,
    pub discrepancy: Discrepancy,
}

/// Propagates `psi0` on the grid and compares its moments with
/// [`evolve_moments`] applied to the initial moments.
pub fn verify_against_propagator(
    system: &SystemSpec,
    psi0: &WaveFunction,
    t: f64,
    n_steps: usize,
) -> Result<PropagatorCheck> {
    let ms0 = extract_moments(psi0, None)?;
    let closed_form = evolve_moments(system, &ms0, t)?;
    let psi_t = propagate(psi0, system, t, n_steps)?;
    let propagated = extract_moments(&psi_t, None)?;
    let d = |a: f64, b: f64| (a - b).abs();
    let mut discrepancy = Discrepancy {
        mean_x: d(propagated.mean_x, closed_form.mean_x),
        mean_p: d(propagated.mean_p, closed_form.mean_p),
        var_x: d(propagated.var_x, closed_form.var_x),
        var_p: d(propagated.var_p, closed_form.var_p),
        cov_c: d(propagated.cov_c, closed_form.cov_c),
        max_abs: 0.0,
    };
    discrepancy.max_abs = [
        discrepancy.mean_x,
        discrepancy.mean_p,
        discrepancy.var_x,
        discrepancy.var_p,
        discrepancy.cov_c,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(PropagatorCheck {
        t,
        n_steps,
        propagated,
        closed_form,
        discrepancy,
    })
}
