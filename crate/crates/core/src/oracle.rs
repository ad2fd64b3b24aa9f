//! Finite-`N` ground truth for product states.
//!
//! [`convolve_density`] gives the exact distribution of `X = (1/N) Σ x_i` for
//! `N` copies of a grid state by repeated self-convolution of `|ψ|²`.
//! [`exact_block_moment`] gives closed-form product-state identities that hold
//! at every `N`. [`fit_convergence_rate`] measures how fast the convolution
//! approaches the Gaussian limit.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::cltdist::{single_var_density, Gaussian1D};
use crate::gridstate::WaveFunction;
use crate::moments::{density_mean_var, extract_moments, MomentSet};
use crate::numeric::{linear_fit, pairwise_sum};
use crate::{Error, Result};

pub const MAX_BLOCK_SIZE: u64 = 1 << 14;
/// Mass allowed in the unused tail of the padded domain.
pub const ALIAS_TOLERANCE: f64 = 1e-8;
/// Sup errors below this floor at every `N` mark the state as the fixed point.
pub const FIXED_POINT_FLOOR: f64 = 1e-9;
/// Grid samples below this fraction of the peak are trimmed before convolving.
const TRIM_RELATIVE: f64 = 1e-25;
const KL_FLOOR: f64 = 1e-300;

/// Density of `X` sampled on `x_k = x0 + k·dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl Density1D {
    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.values) * self.dx
    }

    pub fn mean_var(&self) -> (f64, f64) {
        let (_, mean, var) = density_mean_var(&self.values, self.x0, self.dx);
        (mean, var)
    }

    /// Sup-norm distance to `g` in the standardized variable
    /// `z = (X − mean)/σ_X`, i.e. `σ_X · max_k |f(x_k) − g(x_k)|`.
    pub fn sup_distance(&self, g: &Gaussian1D) -> f64 {
        let sup = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &f)| (f - g.pdf(self.x(k))).abs())
            .fold(0.0, f64::max);
        sup * g.std()
    }

    /// `∫ f ln(f/g)` over points where both densities exceed `1e-300`.
    pub fn kl_divergence(&self, g: &Gaussian1D) -> f64 {
        let terms: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .filter_map(|(k, &f)| {
                let q = g.pdf(self.x(k));
                (f > KL_FLOOR && q > KL_FLOOR).then(|| f * (f.ln() - g.ln_pdf(self.x(k))))
            })
            .collect();
        pairwise_sum(&terms) * self.dx
    }
}

/// Exact density of `X = (1/n) Σ x_i` for `n` independent copies of `psi`.
///
/// The grid masses `|ψ_j|² dx` are convolved `n` times with zero-padded FFTs
/// (padded length at least `n·(support−1)+1`, so no circular wrap), then
/// rescaled to the `X` lattice of spacing `dx/n`.
pub fn convolve_density(psi: &WaveFunction, n: u64) -> Result<Density1D> {
    if !(1..=MAX_BLOCK_SIZE).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "block size must be in 1..={MAX_BLOCK_SIZE}, got {n}"
        )));
    }
    let grid = psi.grid();
    let dx = grid.dx();
    let rho = psi.density();
    if n == 1 {
        return Ok(Density1D {
            x0: grid.x_min,
            dx,
            values: rho,
        });
    }

    let peak = rho.iter().cloned().fold(0.0, f64::max);
    let first = rho
        .iter()
        .position(|&r| r > TRIM_RELATIVE * peak)
        .unwrap_or(0);
    let last = rho
        .iter()
        .rposition(|&r| r > TRIM_RELATIVE * peak)
        .unwrap_or(rho.len() - 1);
    let masses: Vec<f64> = rho[first..=last].iter().map(|r| r * dx).collect();
    let support = masses.len();
    let nu = n as usize;
    let out_len = nu * (support - 1) + 1;
    let padded = (out_len + 16).next_power_of_two();

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(padded);
    let inverse = planner.plan_fft_inverse(padded);
    let mut buf: Vec<Complex64> = masses
        .iter()
        .map(|&m| Complex64::new(m, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(padded)
        .collect();
    forward.process(&mut buf);
    for v in buf.iter_mut() {
        *v = v.powu(n as u32);
    }
    inverse.process(&mut buf);
    let inv = 1.0 / padded as f64;

    let tail: f64 = buf[out_len..].iter().map(|v| (v.re * inv).abs()).sum();
    if tail > ALIAS_TOLERANCE {
        return Err(Error::Aliasing(tail));
    }

    let x_step = dx / n as f64;
    let values = buf[..out_len]
        .iter()
        .map(|v| (v.re * inv).max(0.0) / x_step)
        .collect();
    Ok(Density1D {
        x0: grid.x(first),
        dx: x_step,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockMoment {
    MeanX,
    MeanP,
    VarX,
    VarP,
    /// Central symmetrized covariance `½⟨X̂P̂ + P̂X̂⟩ − ⟨X̂⟩⟨P̂⟩`.
    SymCov,
    /// `i⟨X̂P̂ − P̂X̂⟩`.
    Commutator,
    /// Raw third moment `⟨X̂³⟩`.
    X3,
}

/// Exact product-state value of a block moment at finite `n`.
pub fn exact_block_moment(ms: &MomentSet, n: u64, which: BlockMoment) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let nf = n as f64;
    match which {
        BlockMoment::MeanX | BlockMoment::VarX | BlockMoment::X3 => {}
        _ => ms.require_joint()?,
    }
    Ok(match which {
        BlockMoment::MeanX => ms.mean_x,
        BlockMoment::MeanP => ms.mean_p,
        BlockMoment::VarX => ms.var_x / nf,
        BlockMoment::VarP => ms.var_p / nf,
        BlockMoment::SymCov => ms.cov_c / nf,
        BlockMoment::Commutator => ms.comm_m / nf,
        BlockMoment::X3 => {
            let (m1, m2, m3) = (ms.mean_x, ms.raw_x2(), ms.x3);
            (nf * m3 + 3.0 * nf * (nf - 1.0) * m2 * m1 + nf * (nf - 1.0) * (nf - 2.0) * m1.powi(3))
                / nf.powi(3)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub n_values: Vec<u64>,
    /// Sup-norm distance to the limit Gaussian, standardized units.
    pub errors: Vec<f64>,
    pub kl_errors: Vec<f64>,
    /// Least-squares slope of `ln(error)` against `ln(n)`; absent at the fixed point.
    pub fitted_exponent: Option<f64>,
    /// RMS residual of the log-log fit.
    pub fit_residual: Option<f64>,
    /// Every error is below the numerical floor: the state is already Gaussian.
    pub exact_fixed_point: bool,
}

/// Distance between the exact block density and its Gaussian limit for each
/// `n`, and the log-log convergence slope.
pub fn fit_convergence_rate(psi: &WaveFunction, n_values: &[u64]) -> Result<RateReport> {
    if n_values.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 block sizes to fit a rate, got {}",
            n_values.len()
        )));
    }
    if n_values.iter().any(|&n| n < 2) || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "block sizes must be >= 2 and strictly increasing".into(),
        ));
    }
    let ms = extract_moments(psi, None)?;
    let rows: Vec<(f64, f64)> = n_values
        .par_iter()
        .map(|&n| {
            let exact = convolve_density(psi, n)?;
            let limit = single_var_density(&ms, n)?;
            Ok((exact.sup_distance(&limit), exact.kl_divergence(&limit)))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let kl_errors: Vec<f64> = rows.iter().map(|r| r.1).collect();

    let exact_fixed_point = errors.iter().all(|&e| e < FIXED_POINT_FLOOR);
    let (fitted_exponent, fit_residual) = if exact_fixed_point {
        (None, None)
    } else {
        let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let (slope, _, rms) = linear_fit(&xs, &ys);
        (Some(slope), Some(rms))
    };
    Ok(RateReport {
        n_values: n_values.to_vec(),
        errors,
        kl_errors,
        fitted_exponent,
        fit_residual,
        exact_fixed_point,
    })
}
