//! Differential entropy of the joint block distribution relative to its
//! marginals.
//!
//! With an invariant measure supplied by the product of marginals, the
//! continuum limit of the Shannon entropy of a binned `P_re` becomes
//!
//! ```text
//! DEnt = k_B ∫∫ P_re ln(P_re / (P_X · P_P)) dX dP,
//! ```
//!
//! which is the mutual information of `(X, P)`. For the bivariate normal
//! `P_re` this is `−(k_B/2) ln(1 − ρ²)` with `ρ = ⟨xp⟩_c/(σ_xσ_p)`. The `1/N`
//! scaling of the covariance cancels in `ρ`, so `DEnt` does not depend on `N`.

use rayon::prelude::*;
use serde::Serialize;

use crate::cltdist::{Gaussian2D, QUADRATURE_POINTS, QUADRATURE_SIGMAS};
use crate::dynamics::MomentFlow;
use crate::gridstate::SystemSpec;
use crate::moments::MomentSet;
use crate::numeric::{linspace, pairwise_sum, standard_normal_rule};
use crate::{Error, Result};

/// Covariances whose principal-axis variance ratio exceeds this are refused
/// by [`dent_quadrature`].
pub const MAX_CONDITION: f64 = 1e12;

/// Squared correlation coefficient `cov_c²/(σ²_xσ²_p)`.
pub fn correlation_sqr(ms: &MomentSet) -> f64 {
    ms.cov_c * ms.cov_c / (ms.var_x * ms.var_p)
}

/// Closed-form `DEnt` in units where the entropy carries `k_B` from `ms.units`.
///
/// A degenerate covariance (`|ρ| ≥ 1`) has divergent entropy; the result is
/// `+∞` and a warning is logged.
pub fn dent_closed(ms: &MomentSet) -> f64 {
    let rho2 = correlation_sqr(ms);
    if !(rho2 < 1.0) {
        log::warn!(
            "degenerate covariance: |cov_c| = {:e} >= sigma_x sigma_p = {:e}, entropy diverges",
            ms.cov_c.abs(),
            (ms.var_x * ms.var_p).sqrt()
        );
        return f64::INFINITY;
    }
    -0.5 * ms.units.k_b * (-rho2).ln_1p()
}

/// `∫∫ P ln(P/(P_X P_P))` of a proper `Gaussian2D` by trapezoid quadrature on
/// its principal axes, `±10` standard deviations each, in units of `k_B`.
pub fn dent_quadrature(dist: &Gaussian2D) -> Result<f64> {
    if !dist.is_proper() {
        return Err(Error::Domain("entropy of an improper Gaussian".into()));
    }
    let cond = dist.condition_number();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularCovariance(cond));
    }
    let (mx, mp) = (dist.marginal_x(), dist.marginal_p());
    let (s, c) = dist.theta.sin_cos();
    let (su, sv) = (dist.axis_vars[0].sqrt(), dist.axis_vars[1].sqrt());
    // the rule's weights already carry the axis densities, so only the log
    // ratio is sampled
    let (nodes, weights) = standard_normal_rule(QUADRATURE_SIGMAS, QUADRATURE_POINTS);
    let rows: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&a, &wa)| {
            let u = su * a;
            let terms: Vec<f64> = nodes
                .iter()
                .zip(&weights)
                .map(|(&b, &wb)| {
                    let v = sv * b;
                    let x = dist.mean[0] + c * u - s * v;
                    let p = dist.mean[1] + s * u + c * v;
                    wb * (dist.ln_pdf(x, p) - mx.ln_pdf(x) - mp.ln_pdf(p))
                })
                .collect();
            wa * pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&rows))
}

/// Entropy along a closed-form moment flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropySeries {
    pub times: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_p: Vec<f64>,
    pub cov_c: Vec<f64>,
    pub dent: Vec<f64>,
}

impl EntropySeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Samples `dent_closed(evolve_moments(system, ms0, t))` on `n_samples`
/// uniformly spaced times from `t0` to `t1`.
pub fn entropy_series(
    system: &SystemSpec,
    ms0: &MomentSet,
    t0: f64,
    t1: f64,
    n_samples: usize,
) -> Result<EntropySeries> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be >= 2, got {n_samples}"
        )));
    }
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time window must be finite, got [{t0}, {t1}]"
        )));
    }
    let flow = MomentFlow::new(*system, *ms0)?;
    let times = linspace(t0, t1, n_samples);
    let samples: Vec<(f64, f64, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let ms = flow.at(t);
            (ms.var_x, ms.var_p, ms.cov_c, dent_closed(&ms))
        })
        .collect();
    let mut series = EntropySeries {
        times,
        var_x: Vec::with_capacity(n_samples),
        var_p: Vec::with_capacity(n_samples),
        cov_c: Vec::with_capacity(n_samples),
        dent: Vec::with_capacity(n_samples),
    };
    for (vx, vp, c, d) in samples {
        series.var_x.push(vx);
        series.var_p.push(vp);
        series.cov_c.push(c);
        series.dent.push(d);
    }
    Ok(series)
}
