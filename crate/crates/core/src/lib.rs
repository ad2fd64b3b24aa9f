//! Coarse-grained block variables of `N` identical, non-interacting quantum
//! constituents.
//!
//! A single-particle state on a uniform grid ([`gridstate`]) is reduced to its
//! moment statistics ([`moments`]). Those scalars parameterize the limiting
//! distributions of the block averages `X = (1/N) Σ x_i` and `P = (1/N) Σ p_i`
//! ([`cltdist`]), the expectation values of hermitian polynomials in `X` and `P`
//! ([`observables`]), and the relative entropy of the joint distribution against
//! its marginals ([`entropy`]). The moment flows of three simple Hamiltonians
//! live in [`dynamics`]. Finite-`N` ground truth (exact convolution densities
//! and exact product-state identities) lives in [`oracle`].

// `!(a < b)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cltdist;
pub mod dynamics;
pub mod entropy;
mod error;
pub mod expr;
pub mod gridstate;
pub mod moments;
pub mod numeric;
pub mod observables;
pub mod oracle;

pub use error::{Error, Result};
