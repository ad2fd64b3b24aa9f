//! Single-particle wavefunctions on a uniform periodic grid.
//!
//! Position amplitudes are sampled at `x_j = x_min + j·dx`. Momentum
//! amplitudes use the unitary transform
//! `φ(p_k) = dx/√(2πħ) Σ_j ψ_j exp(−i p_k x_j/ħ)` on the conjugate grid
//! `p_k = k·2πħ/(n·dx)`, `k ∈ [−n/2, n/2)`, so that `Σ|φ_k|² dp = Σ|ψ_j|² dx`.
//! All quadratures are trapezoid sums on the periodic grid, which are
//! spectrally accurate for contained smooth states.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::expr;
use crate::numeric::pairwise_sum_by;
use crate::{Error, Result};

/// Largest amplitude magnitude allowed at either end of the grid.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;
/// Half-width, in standard deviations of `|ψ|²`, the grid must cover.
pub const CONTAINMENT_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one", rename = "k_B")]
    pub k_b: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Units {
    fn default() -> Self {
        Units {
            hbar: 1.0,
            mass: 1.0,
            k_b: 1.0,
        }
    }
}

impl Units {
    pub fn new(hbar: f64, mass: f64, k_b: f64) -> Result<Self> {
        let units = Units { hbar, mass, k_b };
        units.validate()?;
        Ok(units)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("mass", self.mass), ("k_B", self.k_b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidUnits(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        let grid = GridSpec {
            x_min,
            x_max,
            n_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_max > self.x_min) {
            return Err(Error::InvalidGrid(format!(
                "need finite x_max > x_min, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < 64 || !self.n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 64, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Momentum spacing of the conjugate grid.
    pub fn dp(&self, hbar: f64) -> f64 {
        2.0 * PI * hbar / (self.n_points as f64 * self.dx())
    }

    /// Angular wavenumber of FFT bin `q` (standard FFT ordering).
    fn wavenumber(&self, q: usize) -> f64 {
        let n = self.n_points as i64;
        let k = if (q as i64) < n / 2 {
            q as i64
        } else {
            q as i64 - n
        };
        2.0 * PI * k as f64 / (self.n_points as f64 * self.dx())
    }
}

/// One Gaussian packet `exp(−(x−x0)²/(4·width²) + i·chirp·(x−x0)² + i·p0·(x−x0)/ħ)`;
/// `width` is the standard deviation of `|ψ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Packet {
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub p0: f64,
    pub width: f64,
    #[serde(default)]
    pub chirp: f64,
}

impl Packet {
    fn amplitude(&self, x: f64, hbar: f64) -> Complex64 {
        let d = x - self.x0;
        let re = -d * d / (4.0 * self.width * self.width);
        let im = self.chirp * d * d + self.p0 * d / hbar;
        Complex64::new(re, im).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    /// Variance of this normal component.
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Gaussian(Packet),
    /// `Σ c_k · packet_k`, normalized afterwards. Coefficients are `[re, im]`.
    Superposition {
        packets: Vec<Packet>,
        coefficients: Vec<[f64; 2]>,
    },
    /// Real amplitude `√(Σ w_k N(x; μ_k, v_k))`, i.e. a prescribed position density.
    SqrtMixture {
        components: Vec<MixtureComponent>,
    },
    Expression {
        expr: String,
    },
}

/// Builds and normalizes a state on `grid`.
pub fn build_state(spec: &StateSpec, grid: GridSpec, units: Units) -> Result<WaveFunction> {
    grid.validate()?;
    units.validate()?;
    let xs = grid.points();
    let amplitudes: Vec<Complex64> = match spec {
        StateSpec::Gaussian(packet) => {
            check_packet(packet)?;
            xs.iter()
                .map(|&x| packet.amplitude(x, units.hbar))
                .collect()
        }
        StateSpec::Superposition {
            packets,
            coefficients,
        } => {
            if packets.is_empty() || packets.len() != coefficients.len() {
                return Err(Error::InvalidArgument(format!(
                    "superposition needs matching packets and coefficients ({} vs {})",
                    packets.len(),
                    coefficients.len()
                )));
            }
            for p in packets {
                check_packet(p)?;
            }
            xs.iter()
                .map(|&x| {
                    packets
                        .iter()
                        .zip(coefficients)
                        .map(|(p, c)| Complex64::new(c[0], c[1]) * p.amplitude(x, units.hbar))
                        .sum()
                })
                .collect()
        }
        StateSpec::SqrtMixture { components } => {
            if components.is_empty() {
                return Err(Error::InvalidArgument("mixture has no components".into()));
            }
            for c in components {
                if !(c.weight >= 0.0 && c.var > 0.0 && c.mean.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "mixture component needs weight >= 0 and var > 0: {c:?}"
                    )));
                }
            }
            xs.iter()
                .map(|&x| {
                    let density: f64 = components
                        .iter()
                        .map(|c| {
                            c.weight * (-(x - c.mean).powi(2) / (2.0 * c.var)).exp()
                                / (2.0 * PI * c.var).sqrt()
                        })
                        .sum();
                    Complex64::new(density.sqrt(), 0.0)
                })
                .collect()
        }
        StateSpec::Expression { expr: src } => {
            let ast = expr::parse(src)?;
            xs.iter().map(|&x| ast.eval(x)).collect::<Result<_>>()?
        }
    };
    WaveFunction::from_amplitudes(grid, amplitudes, units)
}

fn check_packet(p: &Packet) -> Result<()> {
    if !(p.width > 0.0 && p.width.is_finite() && p.x0.is_finite() && p.p0.is_finite())
        || !p.chirp.is_finite()
    {
        return Err(Error::InvalidArgument(format!(
            "invalid gaussian packet {p:?}"
        )));
    }
    Ok(())
}

/// Normalized, grid-contained single-particle state. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    amplitudes: Vec<Complex64>,
    units: Units,
}

impl WaveFunction {
    /// Normalizes `amplitudes` and checks containment.
    pub fn from_amplitudes(
        grid: GridSpec,
        amplitudes: Vec<Complex64>,
        units: Units,
    ) -> Result<Self> {
        grid.validate()?;
        units.validate()?;
        if amplitudes.len() != grid.n_points {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes, got {}",
                grid.n_points,
                amplitudes.len()
            )));
        }
        let dx = grid.dx();
        let norm2 = pairwise_sum_by(amplitudes.len(), |j| amplitudes[j].norm_sqr()) * dx;
        if !(norm2.is_finite() && norm2 > 0.0) {
            return Err(Error::NotNormalizable(norm2));
        }
        let scale = 1.0 / norm2.sqrt();
        let amplitudes = amplitudes.into_iter().map(|a| a * scale).collect();
        let psi = WaveFunction {
            grid,
            amplitudes,
            units,
        };
        psi.check_containment()?;
        Ok(psi)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn units(&self) -> &Units {
        &self.units
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `|ψ_j|²` at every grid point.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        pairwise_sum_by(self.amplitudes.len(), |j| self.amplitudes[j].norm_sqr()) * self.grid.dx()
    }

    /// `⟨self|other⟩` by trapezoid quadrature.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        let dx = self.grid.dx();
        let terms: Vec<Complex64> = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .collect();
        crate::numeric::pairwise_sum_complex(&terms) * dx
    }

    pub fn fidelity(&self, other: &WaveFunction) -> f64 {
        self.inner(other).norm()
    }

    pub fn l2_distance(&self, other: &WaveFunction) -> f64 {
        let dx = self.grid.dx();
        (pairwise_sum_by(self.amplitudes.len(), |j| {
            (self.amplitudes[j] - other.amplitudes[j]).norm_sqr()
        }) * dx)
            .sqrt()
    }

    /// Boundary amplitude and ±8σ coverage of the position density.
    pub fn check_containment(&self) -> Result<()> {
        let n = self.grid.n_points;
        let edge = self.amplitudes[0].norm().max(self.amplitudes[n - 1].norm());
        if !(edge < BOUNDARY_TOLERANCE) {
            return Err(Error::Containment(format!(
                "boundary amplitude {edge:e} exceeds {BOUNDARY_TOLERANCE:e}"
            )));
        }
        let dx = self.grid.dx();
        let rho = self.density();
        let mean = pairwise_sum_by(n, |j| rho[j] * self.grid.x(j)) * dx;
        let var = pairwise_sum_by(n, |j| rho[j] * (self.grid.x(j) - mean).powi(2)) * dx;
        let reach = CONTAINMENT_SIGMAS * var.sqrt();
        if mean - reach < self.grid.x_min || mean + reach > self.grid.x_max {
            return Err(Error::Containment(format!(
                "mean {mean} ± {CONTAINMENT_SIGMAS}σ ({reach}) leaves [{}, {}]",
                self.grid.x_min, self.grid.x_max
            )));
        }
        Ok(())
    }

    /// `e^{iα} ψ`.
    pub fn with_global_phase(&self, alpha: f64) -> WaveFunction {
        let phase = Complex64::from_polar(1.0, alpha);
        WaveFunction {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
            units: self.units,
        }
    }

    /// Complex conjugate state (time reversal for a spinless particle).
    pub fn conjugate(&self) -> WaveFunction {
        WaveFunction {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect(),
            units: self.units,
        }
    }

    /// Spectral first derivative `∂ψ/∂x`; the Nyquist bin is dropped.
    pub(crate) fn spectral_derivative(&self) -> Vec<Complex64> {
        let n = self.grid.n_points;
        let plans = FftPair::new(n);
        let mut buf = self.amplitudes.clone();
        plans.forward.process(&mut buf);
        for (q, v) in buf.iter_mut().enumerate() {
            if q == n / 2 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::new(0.0, self.grid.wavenumber(q));
            }
        }
        plans.inverse.process(&mut buf);
        let inv_n = 1.0 / n as f64;
        buf.iter_mut().for_each(|v| *v *= inv_n);
        buf
    }
}

/// Momentum amplitudes in ascending `p`, `p_k = p_min + k·dp`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumAmplitudes {
    pub p_min: f64,
    pub dp: f64,
    pub amplitudes: Vec<Complex64>,
}

impl MomentumAmplitudes {
    pub fn p(&self, k: usize) -> f64 {
        self.p_min + k as f64 * self.dp
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `Σ|φ_k|² dp`, which equals the position norm (Parseval).
    pub fn norm_sqr(&self) -> f64 {
        pairwise_sum_by(self.amplitudes.len(), |k| self.amplitudes[k].norm_sqr()) * self.dp
    }
}

pub fn to_momentum(psi: &WaveFunction) -> MomentumAmplitudes {
    let grid = psi.grid;
    let n = grid.n_points;
    let hbar = psi.units.hbar;
    let dx = grid.dx();
    let dp = grid.dp(hbar);
    let plans = FftPair::new(n);
    let mut buf = psi.amplitudes.clone();
    plans.forward.process(&mut buf);
    let scale = dx / (2.0 * PI * hbar).sqrt();
    let half = n / 2;
    let amplitudes = (0..n)
        .map(|k| {
            // ascending index k ↔ signed wavenumber index k - n/2
            let signed = k as i64 - half as i64;
            let q = signed.rem_euclid(n as i64) as usize;
            let p = signed as f64 * dp;
            buf[q] * Complex64::from_polar(scale, -p * grid.x_min / hbar)
        })
        .collect();
    MomentumAmplitudes {
        p_min: -(half as f64) * dp,
        dp,
        amplitudes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `H = p²/2m`
    Free,
    /// `H = p²/2m − a·x`
    ConstantForce { a: f64 },
    /// `H = p²/2m + m ω² x²/2`
    Oscillator { omega: f64 },
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SystemSpec::Free => Ok(()),
            SystemSpec::ConstantForce { a } if a.is_finite() => Ok(()),
            SystemSpec::Oscillator { omega } if omega.is_finite() && omega > 0.0 => Ok(()),
            other => Err(Error::InvalidArgument(format!("invalid system {other:?}"))),
        }
    }

    pub fn potential(&self, x: f64, units: &Units) -> f64 {
        match *self {
            SystemSpec::Free => 0.0,
            SystemSpec::ConstantForce { a } => -a * x,
            SystemSpec::Oscillator { omega } => 0.5 * units.mass * omega * omega * x * x,
        }
    }

    /// Largest time step of the step rule: `0.01/ω` for the oscillator and
    /// `0.01·m·dx²/ħ` otherwise.
    ///
    /// For the free particle and the linear potential the Strang splitting
    /// reproduces the exact evolution up to a global phase (the splitting
    /// commutators vanish or are c-numbers), so [`propagate`] does not require
    /// this bound for them; it is the conservative default.
    pub fn max_time_step(&self, grid: &GridSpec, units: &Units) -> f64 {
        match *self {
            SystemSpec::Oscillator { omega } => 0.01 / omega,
            _ => 0.01 * units.mass * grid.dx().powi(2) / units.hbar,
        }
    }

    pub fn recommended_steps(&self, grid: &GridSpec, units: &Units, t: f64) -> usize {
        ((t.abs() / self.max_time_step(grid, units)).ceil() as usize).max(1)
    }
}

struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftPair {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Second-order (Strang) split-operator evolution of `psi` to time `t` in
/// `n_steps` equal steps: half potential kick, kinetic drift, half kick.
///
/// The amplitude at both grid ends is checked after every step; a state that
/// reaches the boundary aborts with [`Error::Containment`]. The final state
/// must also satisfy the ±8σ rule.
pub fn propagate(
    psi: &WaveFunction,
    system: &SystemSpec,
    t: f64,
    n_steps: usize,
) -> Result<WaveFunction> {
    system.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time must be finite, got {t}"
        )));
    }
    let grid = psi.grid;
    let units = psi.units;
    let n = grid.n_points;
    let dt = t / n_steps as f64;
    let hbar = units.hbar;

    let half_kick: Vec<Complex64> = (0..n)
        .map(|j| {
            Complex64::from_polar(
                1.0,
                -system.potential(grid.x(j), &units) * dt / (2.0 * hbar),
            )
        })
        .collect();
    let inv_n = 1.0 / n as f64;
    // 1/n of the inverse FFT is folded into the drift factors
    let drift: Vec<Complex64> = (0..n)
        .map(|q| {
            let p = hbar * grid.wavenumber(q);
            Complex64::from_polar(inv_n, -p * p * dt / (2.0 * units.mass * hbar))
        })
        .collect();

    let plans = FftPair::new(n);
    let mut buf = psi.amplitudes.clone();
    let mut scratch = vec![Complex64::new(0.0, 0.0); plans.forward.get_inplace_scratch_len()];
    let mut scratch_inv = vec![Complex64::new(0.0, 0.0); plans.inverse.get_inplace_scratch_len()];
    for step in 0..n_steps {
        if step == 0 {
            buf.iter_mut().zip(&half_kick).for_each(|(a, k)| *a *= k);
        } else {
            // two consecutive half kicks merge into one full kick
            buf.iter_mut()
                .zip(&half_kick)
                .for_each(|(a, k)| *a *= k * k);
        }
        plans.forward.process_with_scratch(&mut buf, &mut scratch);
        buf.iter_mut().zip(&drift).for_each(|(a, d)| *a *= d);
        plans
            .inverse
            .process_with_scratch(&mut buf, &mut scratch_inv);
        let edge = buf[0].norm().max(buf[n - 1].norm());
        if !(edge < BOUNDARY_TOLERANCE) {
            return Err(Error::Containment(format!(
                "boundary amplitude {edge:e} after step {} of {n_steps} (t = {})",
                step + 1,
                (step + 1) as f64 * dt
            )));
        }
    }
    buf.iter_mut().zip(&half_kick).for_each(|(a, k)| *a *= k);

    let out = WaveFunction {
        grid,
        amplitudes: buf,
        units,
    };
    out.check_containment()?;
    Ok(out)
}
