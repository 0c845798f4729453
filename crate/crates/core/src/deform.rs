//! The deformed product `a ×_J b`.
//!
//! For a skew-symmetric `J` the deformed product is defined by the oscillatory
//! integral
//!
//! ```text
//! a ×_J b = ∬ α_{Jx}(a) α_y(b) e(x·y) dx dy .
//! ```
//!
//! On homogeneous elements `a ∈ A_p`, `b ∈ A_q` the integral collapses to the
//! phase `e(⟨Jp, q⟩)`, which is what [`deformed_mul`] evaluates. The
//! [`oscillatory_oracle`] evaluates the integral itself, regularized by a
//! Gaussian damping factor, and is only used to validate that phase.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::carrier::{act, product_with_phase, Carrier, SpectralElement};
use crate::quad::Rule;
use crate::{dot, e, Error, Result};

/// Maximal `|J + Jᵀ|` entry accepted as skew-symmetric.
pub const SKEW_TOL: f64 = 1e-12;

/// A skew-symmetric `d × d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewForm(DMatrix<f64>);

impl SkewForm {
    pub fn new(j: DMatrix<f64>) -> Result<Self> {
        if j.nrows() != j.ncols() || j.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "J must be a non-empty square matrix, got {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        if j.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("J has non-finite entries".into()));
        }
        let asym = (&j + j.transpose()).amax();
        if asym > SKEW_TOL {
            return Err(Error::NotSkew(asym));
        }
        Ok(SkewForm(j))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter("J must be square".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, k| rows[i][k]))
    }

    pub fn zero(d: usize) -> Self {
        SkewForm(DMatrix::zeros(d, d))
    }

    /// `[[0, θ], [-θ, 0]]`.
    pub fn theta(theta: f64) -> Self {
        SkewForm(DMatrix::from_row_slice(2, 2, &[0.0, theta, -theta, 0.0]))
    }

    /// The block-diagonal form with `J² = -π²h²·Id` (`d` even, `h > 0`).
    pub fn vacuum_compatible(h: f64, d: usize) -> Result<Self> {
        if d == 0 || !d.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("vacuum form needs even d, got {d}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!("vacuum form needs h > 0, got {h}")));
        }
        let mut j = DMatrix::zeros(d, d);
        for b in 0..d / 2 {
            j[(2 * b, 2 * b + 1)] = PI * h;
            j[(2 * b + 1, 2 * b)] = -PI * h;
        }
        Ok(SkewForm(j))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn neg(&self) -> SkewForm {
        SkewForm(-&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// `Jx`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|k| self.0[(i, k)] * x[k]).sum()).collect()
    }

    /// `Jᵀx`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|k| self.0[(k, i)] * x[k]).sum()).collect()
    }

    /// `⟨Jp, q⟩`.
    pub fn pairing(&self, p: &[f64], q: &[f64]) -> f64 {
        dot(&self.apply(p), q)
    }

    /// `max |J² + π²h²·Id|`.
    pub fn vacuum_defect(&self, h: f64) -> f64 {
        let sq = &self.0 * &self.0;
        let target = DMatrix::<f64>::identity(self.dim(), self.dim()) * (PI * PI * h * h);
        (sq + target).amax()
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() == d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: d, got: self.dim() })
        }
    }
}

/// `a ×_J b`: bilinear extension of `(p, u) ×_J (q, v) = e(⟨Jp, q⟩) (p + q, uv)`.
pub fn deformed_mul(j: &SkewForm, a: &SpectralElement, b: &SpectralElement) -> Result<SpectralElement> {
    a.check_carrier(b.carrier())?;
    j.check_dim(a.carrier().dim())?;
    Ok(product_with_phase(a, b, |p, q| e(j.pairing(p, q))))
}

/// The deformed algebra `A_J`: the carrier's vector space with `×_J`.
#[derive(Clone, Debug)]
pub struct DeformedAlgebra {
    carrier: Arc<Carrier>,
    j: SkewForm,
}

impl DeformedAlgebra {
    pub fn new(carrier: Arc<Carrier>, j: SkewForm) -> Result<Self> {
        j.check_dim(carrier.dim())?;
        Ok(DeformedAlgebra { carrier, j })
    }

    pub fn carrier(&self) -> &Arc<Carrier> {
        &self.carrier
    }

    pub fn form(&self) -> &SkewForm {
        &self.j
    }

    pub fn mul(&self, a: &SpectralElement, b: &SpectralElement) -> Result<SpectralElement> {
        a.check_carrier(&self.carrier)?;
        deformed_mul(&self.j, a, b)
    }

    /// `α^J_x`, which is `α_x` on the same underlying elements.
    pub fn act(&self, x: &[f64], a: &SpectralElement) -> Result<SpectralElement> {
        act(&self.carrier, x, a)
    }
}

/// Parameters of the damped reference integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleParams {
    /// Damping `ε` in `exp(-ε(|x|² + |y|²))`.
    pub eps: f64,
    /// Half side of the integration box.
    pub r: f64,
    /// Quadrature points per axis.
    pub n_quad: usize,
}

impl OracleParams {
    /// Box and node count large enough that truncation and quadrature errors
    /// stay below `1e-13` for frequencies of order one.
    pub fn resolved(eps: f64) -> Self {
        let r = (40.0 / eps).sqrt();
        // the chirp e(s²/2) makes ~r² oscillations on [-r, r]; keep two per 16-point panel
        let n_quad = 16 * (r * r).ceil() as usize;
        OracleParams { eps, r, n_quad }
    }
}

/// Regularized evaluation of `∬ α_{Jx}(a) α_y(b) e(x·y) e^{-ε(|x|²+|y|²)} dx dy`
/// for homogeneous `a`, `b`.
///
/// With `a ∈ A_p`, `b ∈ A_q` the integrand is `uv` times a scalar that factors
/// over coordinate pairs `(x_i, y_i)`. Each planar factor is integrated in the
/// rotated coordinates `s = (x+y)/√2`, `t = (x-y)/√2`, where `x·y = (s² - t²)/2`
/// and the damped integrand splits into two one-dimensional chirps, each
/// handled by a composite Gauss–Legendre rule on `[-R, R]`.
///
/// The normalization is `∬ e(x·y) dx dy = 1`. For finite `ε` the result differs
/// from `e(⟨Jp,q⟩) uv` by a factor `1 - O(ε(|Jᵀp|² + |q|²))`.
pub fn oscillatory_oracle(
    j: &SkewForm,
    a: &SpectralElement,
    b: &SpectralElement,
    params: OracleParams,
) -> Result<SpectralElement> {
    let OracleParams { eps, r, n_quad } = params;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("damping must be positive, got {eps}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("cutoff radius must be positive, got {r}")));
    }
    a.check_carrier(b.carrier())?;
    j.check_dim(a.carrier().dim())?;
    let p = a.homogeneous_frequency()?;
    let q = b.homogeneous_frequency()?;

    let rule = Rule::symmetric(r, n_quad)?;
    // α_{Jx}(a) = e(-⟨x, Jᵀp⟩) a
    let jt_p = j.apply_transpose(p);
    let mut phase = Complex64::new(1.0, 0.0);
    for i in 0..j.dim() {
        phase *= planar_factor(&rule, eps, -jt_p[i], q[i]);
    }
    let coeff = (&a.terms()[0].coeff * &b.terms()[0].coeff) * phase;
    Ok(SpectralElement::from_parts_unchecked(
        a.carrier(),
        vec![crate::Term { freq: p.add(q), coeff }],
    ))
}

/// `∬ e(αx - βy + xy) e^{-ε(x²+y²)} dx dy` in rotated coordinates.
fn planar_factor(rule: &Rule, eps: f64, alpha: f64, beta: f64) -> Complex64 {
    let cs = (alpha - beta) * FRAC_1_SQRT_2;
    let ct = (alpha + beta) * FRAC_1_SQRT_2;
    let fs = rule.integrate(|s| e(cs * s + 0.5 * s * s) * (-eps * s * s).exp());
    let ft = rule.integrate(|t| e(ct * t - 0.5 * t * t) * (-eps * t * t).exp());
    fs * ft
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::mul;

    #[test]
    fn rejects_non_skew() {
        assert!(matches!(
            SkewForm::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]),
            Err(Error::NotSkew(_))
        ));
        assert!(SkewForm::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).is_ok());
    }

    #[test]
    fn vacuum_form_squares_to_minus_pi2h2() {
        let j = SkewForm::vacuum_compatible(0.7, 4).unwrap();
        assert!(j.vacuum_defect(0.7) < 1e-14);
        assert!(SkewForm::vacuum_compatible(0.7, 3).is_err());
    }

    #[test]
    fn torus_generators_phase() {
        let t = Carrier::standard_torus(2).unwrap();
        let (u1, u2) = (t.generator(0).unwrap(), t.generator(1).unwrap());
        let j = SkewForm::theta(0.1);
        let u12 = deformed_mul(&j, &u1, &u2).unwrap();
        let u21 = deformed_mul(&j, &u2, &u1).unwrap();
        let plain = mul(&t, &u1, &u2).unwrap();
        assert!(u12.max_abs_diff(&plain.scale(e(-0.1))).unwrap() < 1e-15);
        assert!(u21.max_abs_diff(&plain.scale(e(0.1))).unwrap() < 1e-15);
    }

    #[test]
    fn zero_form_is_undeformed() {
        let car = Carrier::matrix(vec![vec![0.0, 0.0], vec![0.3, -0.2]], None).unwrap();
        let a = car.matrix_unit(0, 1).unwrap();
        let b = car.matrix_unit(1, 0).unwrap();
        let j = SkewForm::zero(2);
        assert_eq!(deformed_mul(&j, &a, &b).unwrap(), mul(&car, &a, &b).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let t = Carrier::standard_torus(2).unwrap();
        let u = t.generator(0).unwrap();
        assert!(deformed_mul(&SkewForm::zero(3), &u, &u).is_err());
    }

    #[test]
    fn oracle_requires_homogeneous_and_positive_damping() {
        let t = Carrier::standard_torus(2).unwrap();
        let (u1, u2) = (t.generator(0).unwrap(), t.generator(1).unwrap());
        let sum = u1.add(&u2).unwrap();
        let j = SkewForm::theta(0.1);
        let params = OracleParams { eps: 1e-2, r: 10.0, n_quad: 64 };
        assert!(matches!(
            oscillatory_oracle(&j, &sum, &u1, params),
            Err(Error::NotHomogeneous { terms: 2 })
        ));
        let bad = OracleParams { eps: 0.0, ..params };
        assert!(oscillatory_oracle(&j, &u1, &u2, bad).is_err());
    }

    #[test]
    fn oracle_at_zero_frequencies_is_damped_delta() {
        // ∬ e(xy) e^{-ε(x²+y²)} = π / sqrt(π² + ε²) per coordinate pair.
        let car = Carrier::matrix(vec![vec![0.0, 0.0], vec![0.0, 0.0]], None).unwrap();
        let a = car.scalar_element(Complex64::new(0.5, 0.25));
        let j = SkewForm::theta(0.1);
        for eps in [1e-2, 1e-3] {
            let out = oscillatory_oracle(&j, &a, &a, OracleParams::resolved(eps)).unwrap();
            let damp = (PI / (PI * PI + eps * eps).sqrt()).powi(2);
            let exact = mul(&car, &a, &a).unwrap().scale(Complex64::new(damp, 0.0));
            assert!(out.max_abs_diff(&exact).unwrap() < 1e-12);
        }
    }
}
