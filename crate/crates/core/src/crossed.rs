//! The representations `π`, `π_J` of the smooth crossed product on grid
//! vectors, the isomorphism `Θ_J`, and the dual actions.
//!
//! Vectors `ξ` are grid functions with the same carrier as the algebra; the
//! algebra acts on their values by left multiplication.
//!
//! Every fast path works per spectral component. For `f` with component `f_p`
//! at frequency `p`:
//!
//! ```text
//! (π(f)ξ)(x)   = e(x·p) (f_p ⊛ ξ)(x)
//! (π_J(f)ξ)(x) = e(x·p) F⁻¹[ f̂_p(k) e(k·Jp) ξ̂(k) ](x)
//! Θ_J(f)_p     = F⁻¹[ e(k·Jp) f̂_p(k) ] = f_p(· + Jp)
//! ```
//!
//! and the discrete convolution theorem makes `π_J(f) = π(Θ_J f)` an identity
//! of finite sums.

use std::sync::Arc;

use num_complex::Complex64;

use crate::carrier::{act, mul, Carrier, SpectralElement};
use crate::deform::SkewForm;
use crate::grid::{field_matmul_acc, transform_planes, Domain, GridComponent, GridFunction, GridSpec};
use crate::{dot, e, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_carrier(c: &Carrier, f: &GridFunction) -> Result<()> {
    if c == &**f.carrier() {
        Ok(())
    } else {
        Err(Error::CarrierMismatch(format!("{c} vs {}", f.carrier())))
    }
}

fn dim_check(spec: &GridSpec, v: &[f64]) -> Result<()> {
    if v.len() == spec.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: spec.dim(), got: v.len() })
    }
}

fn phase_field(spec: &GridSpec, dual: bool, k: &[f64], sign: f64) -> Vec<Complex64> {
    (0..spec.len())
        .map(|i| {
            let x = if dual { spec.dual_node(i) } else { spec.node(i) };
            e(sign * dot(&x, k))
        })
        .collect()
}

fn times_field(data: &mut [Complex64], w: &[Complex64]) {
    let len = w.len();
    for (i, z) in data.iter_mut().enumerate() {
        *z *= w[i % len];
    }
}

fn forward(spec: &GridSpec, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    transform_planes(spec, &mut out, true);
    out
}

fn backward(spec: &GridSpec, mut data: Vec<Complex64>) -> Vec<Complex64> {
    transform_planes(spec, &mut data, false);
    data
}

/// Constant coefficient `u` as an entry-major field.
fn constant_field(u: &nalgebra::DMatrix<Complex64>, len: usize) -> Vec<Complex64> {
    let m = u.nrows();
    let mut out = vec![ZERO; m * m * len];
    for j in 0..m {
        for k in 0..m {
            out[(j * m + k) * len..][..len].fill(u[(j, k)]);
        }
    }
    out
}

/// `(π(a)ξ)(x) = α_{-x}(a) ξ(x)`.
pub fn rep_pi_single(a: &SpectralElement, xi: &GridFunction) -> Result<GridFunction> {
    xi.require(Domain::Position)?;
    check_carrier(a.carrier(), xi)?;
    let spec = *xi.spec();
    let len = spec.len();
    let m = xi.carrier().coeff_size();
    let mut out = GridFunction::zeros(spec, xi.carrier(), Domain::Position);
    for t in a.terms() {
        let w = phase_field(&spec, false, &t.freq, 1.0);
        let a_field = constant_field(&t.coeff, len);
        for c in xi.components() {
            let mut prod = vec![ZERO; m * m * len];
            field_matmul_acc(m, len, &a_field, &c.data, ONE, &mut prod);
            times_field(&mut prod, &w);
            out.accumulate(&t.freq.add(&c.freq), &prod, ONE);
        }
    }
    out.finish();
    Ok(out)
}

/// `(π(f)ξ)(x) = Σ_y α_{-x}(f(y)) ξ(x - y) Δ^d`, periodically.
pub fn rep_pi(f: &GridFunction, xi: &GridFunction) -> Result<GridFunction> {
    f.check_compatible(xi)?;
    f.require(Domain::Position)?;
    let spec = *f.spec();
    let len = spec.len();
    let m = f.carrier().coeff_size();
    let xi_hat: Vec<_> = xi.components().iter().map(|c| (c, forward(&spec, &c.data))).collect();
    let mut out = GridFunction::zeros(spec, f.carrier(), Domain::Position);
    for fc in f.components() {
        let f_hat = forward(&spec, &fc.data);
        let w = phase_field(&spec, false, &fc.freq, 1.0);
        for (c, c_hat) in &xi_hat {
            let mut prod = vec![ZERO; m * m * len];
            field_matmul_acc(m, len, &f_hat, c_hat, ONE, &mut prod);
            let mut prod = backward(&spec, prod);
            times_field(&mut prod, &w);
            out.accumulate(&fc.freq.add(&c.freq), &prod, ONE);
        }
    }
    out.finish();
    Ok(out)
}

/// Direct double sum over output and source nodes for [`rep_pi`], using the
/// carrier's `act` and `mul`. Cost `O(N^{2d})`.
pub fn rep_pi_reference(f: &GridFunction, xi: &GridFunction) -> Result<GridFunction> {
    f.check_compatible(xi)?;
    f.require(Domain::Position)?;
    let spec = *f.spec();
    let carrier = f.carrier().clone();
    let len = spec.len();
    let fv: Vec<SpectralElement> = (0..len).map(|i| f.value(i)).collect();
    let xv: Vec<SpectralElement> = (0..len).map(|i| xi.value(i)).collect();
    let cell = Complex64::new(spec.cell(), 0.0);
    let values = (0..len)
        .map(|x| {
            let xn: Vec<f64> = spec.node(x).iter().map(|v| -v).collect();
            let mut acc = SpectralElement::zero(&carrier);
            for y in 0..len {
                if fv[y].is_zero() {
                    continue;
                }
                let a = act(&carrier, &xn, &fv[y])?;
                let term = mul(&carrier, &a, &xv[spec.difference_index(x, y)])?;
                acc = acc.add(&term)?;
            }
            Ok(acc.scale(cell))
        })
        .collect::<Result<Vec<_>>>()?;
    from_values(spec, &carrier, Domain::Position, &values)
}

pub(crate) fn from_values(
    spec: GridSpec,
    carrier: &Arc<Carrier>,
    domain: Domain,
    values: &[SpectralElement],
) -> Result<GridFunction> {
    let len = spec.len();
    let m = carrier.coeff_size();
    let mut out = GridFunction::zeros(spec, carrier, domain);
    for (node, v) in values.iter().enumerate() {
        for t in v.terms() {
            let mut data = vec![ZERO; m * m * len];
            for j in 0..m {
                for k in 0..m {
                    data[(j * m + k) * len + node] = t.coeff[(j, k)];
                }
            }
            out.accumulate(&t.freq, &data, ONE);
        }
    }
    out.finish();
    Ok(out)
}

/// `(π_J(a)ξ)(x) = ∫ α_{Jy-x}(a) ξ̂(y) e(x·y) dy`; for `a ∈ A_z` this is
/// `α_{-x}(a) ξ(x + Jz)`, with the shift applied as a Fourier phase.
pub fn rep_pij_single(j: &SkewForm, a: &SpectralElement, xi: &GridFunction) -> Result<GridFunction> {
    xi.require(Domain::Position)?;
    check_carrier(a.carrier(), xi)?;
    let spec = *xi.spec();
    j.check_dim(spec.dim())?;
    let len = spec.len();
    let m = xi.carrier().coeff_size();
    let xi_hat: Vec<_> = xi.components().iter().map(|c| (c, forward(&spec, &c.data))).collect();
    let mut out = GridFunction::zeros(spec, xi.carrier(), Domain::Position);
    for t in a.terms() {
        let jz = j.apply(&t.freq);
        let shift = phase_field(&spec, true, &jz, 1.0);
        let w = phase_field(&spec, false, &t.freq, 1.0);
        let a_field = constant_field(&t.coeff, len);
        for (c, c_hat) in &xi_hat {
            let mut shifted = c_hat.clone();
            times_field(&mut shifted, &shift);
            let shifted = backward(&spec, shifted);
            let mut prod = vec![ZERO; m * m * len];
            field_matmul_acc(m, len, &a_field, &shifted, ONE, &mut prod);
            times_field(&mut prod, &w);
            out.accumulate(&t.freq.add(&c.freq), &prod, ONE);
        }
    }
    out.finish();
    Ok(out)
}

/// `(π_J(f)ξ)(x) = ∫ α_{Jy-x}(f̂(y)) ξ̂(y) e(x·y) dy`, factored per spectral
/// component of `f`.
pub fn rep_pij(j: &SkewForm, f: &GridFunction, xi: &GridFunction) -> Result<GridFunction> {
    f.check_compatible(xi)?;
    f.require(Domain::Position)?;
    let spec = *f.spec();
    j.check_dim(spec.dim())?;
    let len = spec.len();
    let m = f.carrier().coeff_size();
    let xi_hat: Vec<_> = xi.components().iter().map(|c| (c, forward(&spec, &c.data))).collect();
    let mut out = GridFunction::zeros(spec, f.carrier(), Domain::Position);
    for fc in f.components() {
        let mut f_hat = forward(&spec, &fc.data);
        times_field(&mut f_hat, &phase_field(&spec, true, &j.apply(&fc.freq), 1.0));
        let w = phase_field(&spec, false, &fc.freq, 1.0);
        for (c, c_hat) in &xi_hat {
            let mut prod = vec![ZERO; m * m * len];
            field_matmul_acc(m, len, &f_hat, c_hat, ONE, &mut prod);
            let mut prod = backward(&spec, prod);
            times_field(&mut prod, &w);
            out.accumulate(&fc.freq.add(&c.freq), &prod, ONE);
        }
    }
    out.finish();
    Ok(out)
}

/// Transform values at every dual node by direct summation, `O(N^{2d})`.
fn direct_transform(f: &GridFunction) -> Vec<SpectralElement> {
    let spec = *f.spec();
    let len = spec.len();
    let m = f.carrier().coeff_size();
    let xs = spec.nodes();
    let cell = spec.cell();
    let mut comps = Vec::new();
    for c in f.components() {
        let mut data = vec![ZERO; m * m * len];
        for k in 0..len {
            let kk = spec.dual_node(k);
            let ph: Vec<Complex64> = xs.iter().map(|x| e(-dot(&kk, x)) * cell).collect();
            for ent in 0..m * m {
                let plane = &c.data[ent * len..][..len];
                data[ent * len + k] = plane.iter().zip(&ph).map(|(a, b)| a * b).sum();
            }
        }
        comps.push(GridComponent { freq: c.freq.clone(), data });
    }
    let fh = GridFunction::from_components(spec, f.carrier(), Domain::Frequency, comps)
        .expect("transform preserves the carrier invariant");
    (0..len).map(|k| fh.value(k)).collect()
}

/// Direct double sum over output nodes `x` and dual nodes `y` for [`rep_pij`],
/// with transforms computed by direct summation. Cost `O(N^{2d})`.
pub fn rep_pij_reference(j: &SkewForm, f: &GridFunction, xi: &GridFunction) -> Result<GridFunction> {
    f.check_compatible(xi)?;
    f.require(Domain::Position)?;
    let spec = *f.spec();
    j.check_dim(spec.dim())?;
    let carrier = f.carrier().clone();
    let len = spec.len();
    let f_hat = direct_transform(f);
    let xi_hat = direct_transform(xi);
    let jy: Vec<Vec<f64>> = (0..len).map(|k| j.apply(&spec.dual_node(k))).collect();
    let dual_cell = spec.dual_cell();
    let values = (0..len)
        .map(|x| {
            let xn = spec.node(x);
            let mut acc = SpectralElement::zero(&carrier);
            for k in 0..len {
                if f_hat[k].is_zero() {
                    continue;
                }
                let shift: Vec<f64> = jy[k].iter().zip(&xn).map(|(a, b)| a - b).collect();
                let a = act(&carrier, &shift, &f_hat[k])?;
                let term = mul(&carrier, &a, &xi_hat[k])?;
                let w = e(dot(&xn, &spec.dual_node(k))) * dual_cell;
                acc = acc.add(&term.scale(w))?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    from_values(spec, &carrier, Domain::Position, &values)
}

/// `Θ_J(f)(x) = ∫ α_{Jy}(f̂(y)) e(x·y) dy`. Inverse is `Θ_{-J}`.
pub fn theta(j: &SkewForm, f: &GridFunction) -> Result<GridFunction> {
    f.require(Domain::Position)?;
    let spec = *f.spec();
    j.check_dim(spec.dim())?;
    Ok(f.map_components(Domain::Position, |c| {
        let mut hat = forward(&spec, &c.data);
        times_field(&mut hat, &phase_field(&spec, true, &j.apply(&c.freq), 1.0));
        backward(&spec, hat)
    }))
}

/// `(α̂_y f)(x) = e(-x·y) f(x)`.
pub fn dual_action(y: &[f64], f: &GridFunction) -> Result<GridFunction> {
    f.require(Domain::Position)?;
    dim_check(f.spec(), y)?;
    let w = phase_field(f.spec(), false, y, -1.0);
    Ok(f.map_components(Domain::Position, |c| {
        let mut d = c.data.clone();
        times_field(&mut d, &w);
        d
    }))
}

/// `(α̂^Ω_y f)(x) = e(-x·y) α_{-Jy}(f(x))`.
pub fn twisted_dual_action(j: &SkewForm, y: &[f64], f: &GridFunction) -> Result<GridFunction> {
    f.require(Domain::Position)?;
    dim_check(f.spec(), y)?;
    j.check_dim(y.len())?;
    let w = phase_field(f.spec(), false, y, -1.0);
    let jy = j.apply(y);
    Ok(f.map_components(Domain::Position, |c| {
        // α_{-Jy} on A_p multiplies by e(Jy·p)
        let s = e(dot(&jy, &c.freq));
        c.data.iter().enumerate().map(|(i, z)| z * w[i % w.len()] * s).collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample, translate};
    use std::f64::consts::PI;

    fn gauss(x: &[f64]) -> f64 {
        (-PI * dot(x, x)).exp()
    }

    fn setup() -> (GridSpec, Arc<Carrier>) {
        let spec = GridSpec::new(2, 8, 4.0).unwrap();
        let car = Carrier::matrix(vec![vec![0.0, 0.0], vec![0.25, -0.5]], Some(4.0)).unwrap();
        (spec, car)
    }

    fn probe(spec: GridSpec, car: &Arc<Carrier>, s: f64) -> GridFunction {
        let mats = [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(j, k)| car.matrix_unit(j, k).unwrap());
        sample(spec, car, |x| {
            let mut acc = SpectralElement::zero(car);
            for (i, a) in mats.iter().enumerate() {
                let c = Complex64::new(gauss(x) * (1.0 + s * i as f64), (s + x[0] * i as f64).sin());
                acc = acc.add(&a.scale(c)).unwrap();
            }
            acc
        })
        .unwrap()
    }

    #[test]
    fn fast_paths_match_references() {
        let (spec, car) = setup();
        let f = probe(spec, &car, 0.3);
        let xi = probe(spec, &car, -0.7);
        let a = rep_pi(&f, &xi).unwrap();
        let b = rep_pi_reference(&f, &xi).unwrap();
        assert!(a.rel_l2_error(&b).unwrap() < 1e-12);
        let j = SkewForm::theta(0.37);
        let a = rep_pij(&j, &f, &xi).unwrap();
        let b = rep_pij_reference(&j, &f, &xi).unwrap();
        assert!(a.rel_l2_error(&b).unwrap() < 1e-12);
    }

    #[test]
    fn zero_form_gives_undeformed() {
        let (spec, car) = setup();
        let f = probe(spec, &car, 0.1);
        let xi = probe(spec, &car, 0.9);
        let z = SkewForm::zero(2);
        assert!(rep_pij(&z, &f, &xi).unwrap().rel_l2_error(&rep_pi(&f, &xi).unwrap()).unwrap() < 1e-13);
        assert!(theta(&z, &f).unwrap().rel_l2_error(&f).unwrap() < 1e-14);
        let a = car.matrix_unit(1, 0).unwrap();
        let u = rep_pij_single(&z, &a, &xi).unwrap();
        assert!(u.rel_l2_error(&rep_pi_single(&a, &xi).unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn twisted_rep_factors_through_theta() {
        let (spec, car) = setup();
        let f = probe(spec, &car, 0.4);
        let xi = probe(spec, &car, 1.3);
        let j = SkewForm::theta(0.61);
        let lhs = rep_pij(&j, &f, &xi).unwrap();
        let rhs = rep_pi(&theta(&j, &f).unwrap(), &xi).unwrap();
        assert!(lhs.rel_l2_error(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn theta_inverse() {
        let (spec, car) = setup();
        let f = probe(spec, &car, 0.2);
        let j = SkewForm::theta(0.8);
        let back = theta(&j.neg(), &theta(&j, &f).unwrap()).unwrap();
        assert!(back.rel_l2_error(&f).unwrap() < 1e-13);
    }

    #[test]
    fn covariance() {
        let (spec, car) = setup();
        let xi = probe(spec, &car, 0.5);
        let a = car.matrix_unit(0, 1).unwrap();
        let s = [2i64, -3];
        let x: Vec<f64> = s.iter().map(|v| *v as f64 * spec.spacing()).collect();
        let lhs = translate(&s, &rep_pi_single(&a, &translate(&[-2, 3], &xi).unwrap()).unwrap()).unwrap();
        let rhs = rep_pi_single(&act(&car, &x, &a).unwrap(), &xi).unwrap();
        assert!(lhs.rel_l2_error(&rhs).unwrap() < 1e-14);
    }

    #[test]
    fn dual_actions() {
        let (spec, car) = setup();
        let f = probe(spec, &car, 0.5);
        let y = [0.25, -0.5];
        let y2 = [0.5, 0.75];
        let both = dual_action(&y, &dual_action(&y2, &f).unwrap()).unwrap();
        let sum = dual_action(&[0.75, 0.25], &f).unwrap();
        assert!(both.rel_l2_error(&sum).unwrap() < 1e-14);
        assert!((dual_action(&y, &f).unwrap().norm_l2() - f.norm_l2()).abs() < 1e-13);
        let z = SkewForm::zero(2);
        assert_eq!(twisted_dual_action(&z, &y, &f).unwrap(), dual_action(&y, &f).unwrap());
        assert!(dual_action(&[1.0], &f).is_err());
    }

    #[test]
    fn carrier_mismatch() {
        let (spec, car) = setup();
        let xi = probe(spec, &car, 0.5);
        let other = Carrier::standard_torus(2).unwrap();
        let u = other.generator(0).unwrap();
        assert!(matches!(rep_pi_single(&u, &xi), Err(Error::CarrierMismatch(_))));
    }
}
