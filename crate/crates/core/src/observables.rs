//! Hermitian polynomials in the block variables and their expectation values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cltdist::{joint_im_density, joint_re_density, single_var_density, Gaussian2D};
use crate::moments::MomentSet;
use crate::{Error, Result};

pub const MAX_DEGREE: u32 = 8;

/// One term `c·X^m P^n + c*·P^n X^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub m: u32,
    pub n: u32,
    pub c: Complex64,
}

/// `Σ c_mn X^m P^n + c*_mn P^n X^m`; hermitian by construction.
///
/// Serialized as a list of `[m, n, re(c), im(c)]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HermitianPolynomial {
    terms: Vec<Term>,
}

impl HermitianPolynomial {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if t.m + t.n > MAX_DEGREE {
                return Err(Error::DegreeOverflow(t.m + t.n));
            }
            if !(t.c.re.is_finite() && t.c.im.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient {}",
                    t.c
                )));
            }
        }
        Ok(HermitianPolynomial { terms })
    }

    pub fn term(m: u32, n: u32, re: f64, im: f64) -> Result<Self> {
        Self::new(vec![Term {
            m,
            n,
            c: Complex64::new(re, im),
        }])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Builds from `[m, n, re, im]` rows.
    pub fn from_literal(rows: &[[f64; 4]]) -> Result<Self> {
        let terms = rows
            .iter()
            .map(|r| {
                let m = as_degree(r[0])?;
                let n = as_degree(r[1])?;
                Ok(Term {
                    m,
                    n,
                    c: Complex64::new(r[2], r[3]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    pub fn to_literal(&self) -> Vec<[f64; 4]> {
        self.terms
            .iter()
            .map(|t| [t.m as f64, t.n as f64, t.c.re, t.c.im])
            .collect()
    }
}

fn as_degree(v: f64) -> Result<u32> {
    if v >= 0.0 && v.fract() == 0.0 && v <= MAX_DEGREE as f64 {
        Ok(v as u32)
    } else if v > MAX_DEGREE as f64 && v.fract() == 0.0 {
        Err(Error::DegreeOverflow(v as u32))
    } else {
        Err(Error::InvalidArgument(format!(
            "exponent must be a non-negative integer, got {v}"
        )))
    }
}

impl Serialize for HermitianPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_literal().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<[f64; 4]>::deserialize(d)?;
        HermitianPolynomial::from_literal(&rows).map_err(serde::de::Error::custom)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn double_factorial_odd(k: u32) -> f64 {
    // (k−1)!! for even k; number of perfect matchings of k items
    (1..k).step_by(2).fold(1.0, |acc, i| acc * i as f64)
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Central moment `E[δX^i δP^j]` of a zero-mean Gaussian by Isserlis' theorem:
/// a sum over pairings with `k` mixed pairs, `C(i,k)·C(j,k)·k!·(i−k−1)!!·(j−k−1)!!`
/// pairings of each kind.
pub fn central_moment(cov: &[[f64; 2]; 2], i: u32, j: u32) -> f64 {
    if (i + j) % 2 == 1 {
        return 0.0;
    }
    let (cxx, cpp, cxp) = (cov[0][0], cov[1][1], cov[0][1]);
    let mut total = 0.0;
    let mut k = i % 2;
    while k <= i.min(j) {
        let count = binomial(i, k)
            * binomial(j, k)
            * factorial(k)
            * double_factorial_odd(i - k)
            * double_factorial_odd(j - k);
        total += count
            * cxx.powi(((i - k) / 2) as i32)
            * cpp.powi(((j - k) / 2) as i32)
            * cxp.powi(k as i32);
        k += 2;
    }
    total
}

/// `E[X^m P^n]` under a (possibly formal) Gaussian, by binomial expansion
/// around the mean and [`central_moment`].
pub fn gaussian2d_moment(g: &Gaussian2D, m: u32, n: u32) -> Result<f64> {
    if m + n > MAX_DEGREE {
        return Err(Error::DegreeOverflow(m + n));
    }
    let [mx, mp] = g.mean;
    let mut total = 0.0;
    for i in 0..=m {
        for j in 0..=n {
            if (i + j) % 2 == 1 {
                continue;
            }
            total += binomial(m, i)
                * binomial(n, j)
                * mx.powi((m - i) as i32)
                * mp.powi((n - j) as i32)
                * central_moment(&g.cov, i, j);
        }
    }
    Ok(total)
}

/// `E[X^m]` under a one-dimensional Gaussian.
fn gaussian1d_moment(mean: f64, var: f64, m: u32) -> f64 {
    let cov = [[var, 0.0], [0.0, 0.0]];
    (0..=m)
        .filter(|i| i % 2 == 0)
        .map(|i| binomial(m, i) * mean.powi((m - i) as i32) * central_moment(&cov, i, 0))
        .sum()
}

fn check_n(n: u64) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    Ok(())
}

/// Limit expectation value: `Σ 2Re(c)·E_re[X^mP^n] + Im(c)·(E_plus − E_minus)[X^mP^n]`.
///
/// For a `g`-transformed moment set only terms with `n = 0` and real `c`
/// are defined; they use the single-variable Gaussian. The result is real.
pub fn expect_poly(ms: &MomentSet, n: u64, poly: &HermitianPolynomial) -> Result<f64> {
    check_n(n)?;
    if !ms.joint {
        if poly.terms.iter().any(|t| t.n > 0 || t.c.im != 0.0) {
            return Err(Error::JointUnavailable);
        }
        let g = single_var_density(ms, n)?;
        return Ok(poly
            .terms
            .iter()
            .map(|t| 2.0 * t.c.re * gaussian1d_moment(g.mean, g.var, t.m))
            .sum());
    }
    let re = joint_re_density(ms, n)?;
    let im = joint_im_density(ms, n)?;
    let mut total = 0.0;
    for t in &poly.terms {
        if t.c.re != 0.0 {
            total += 2.0 * t.c.re * gaussian2d_moment(&re, t.m, t.n)?;
        }
        if t.c.im != 0.0 {
            let signed =
                gaussian2d_moment(&im.plus, t.m, t.n)? - gaussian2d_moment(&im.minus, t.m, t.n)?;
            total += t.c.im * signed;
        }
    }
    Ok(total)
}

/// `N → ∞` limit `2 Σ Re(c)·⟨x⟩^m ⟨p⟩^n`.
pub fn classical_limit(poly: &HermitianPolynomial, ms: &MomentSet) -> Result<f64> {
    if !ms.joint && poly.terms.iter().any(|t| t.n > 0) {
        return Err(Error::JointUnavailable);
    }
    Ok(poly
        .terms
        .iter()
        .map(|t| {
            let p_part = if t.n == 0 {
                1.0
            } else {
                ms.mean_p.powi(t.n as i32)
            };
            2.0 * t.c.re * ms.mean_x.powi(t.m as i32) * p_part
        })
        .sum())
}
