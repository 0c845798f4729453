//! Computable Rieffel deformations.
//!
//! The crate models a Fréchet algebra `A` with an action `α` of `V = R^d` by
//! finite *spectral* carriers (matrix algebras with an inner action, trigonometric
//! polynomials, scalars), and the Schwartz space `S(V; A)` by periodic grids.
//! On top of that it provides
//!
//! * the deformed product `a ×_J b` ([`deform`]), with an oscillatory-integral
//!   reference evaluation,
//! * the smooth crossed product, its two representations `π`, `π_J` and the
//!   isomorphism `Θ_J` relating them ([`grid`], [`crossed`]),
//! * the twisted group algebra picture: the cocycle `Ω_J`, twisted translations,
//!   quantization maps `T_ν` and smoothing maps `Φ_ν` ([`kasprzak`]),
//! * the Moyal product of scalar functions on `R^d` ([`moyal`]).
//!
//! Throughout, `e(t) = exp(2πi t)` and the pairing on `V` is the standard dot
//! product, so Fourier transforms carry no `2π` prefactors.

pub mod carrier;
pub mod crossed;
pub mod deform;
mod error;
pub mod grid;
pub mod kasprzak;
pub mod moyal;
pub mod quad;

pub use carrier::{Carrier, CarrierKind, Frequency, SpectralElement, Term};
pub use crossed::{
    dual_action, rep_pi, rep_pi_reference, rep_pi_single, rep_pij, rep_pij_reference,
    rep_pij_single, theta, twisted_dual_action,
};
pub use deform::{deformed_mul, oscillatory_oracle, DeformedAlgebra, OracleParams, SkewForm};
pub use error::{Error, Result};
pub use grid::{GridComponent, GridFunction, GridSpec};
pub use kasprzak::{
    choi_check, cocycle, embed_crossed, embed_spectral, phi_nu, r_omega, t_nu, twisted_mul,
    vector_functional, Functional, TwistedElement, TwistedOperator,
};

pub use num_complex::Complex64;

/// `e(t) = exp(2πi t)`.
///
/// The argument is reduced modulo 1 first so large phases keep full relative
/// accuracy.
#[inline]
pub fn e(t: f64) -> Complex64 {
    let r = t - t.round();
    Complex64::cis(std::f64::consts::TAU * r)
}

/// Euclidean pairing `⟨x, y⟩`.
#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
