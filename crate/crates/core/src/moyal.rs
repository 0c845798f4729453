//! The Moyal product of scalar functions on `R^d`.
//!
//! With `V` acting by translations, the plane wave `e(p·z)` spans `A_p`, and
//! the deformed product becomes a twisted convolution of Fourier transforms:
//!
//! ```text
//! (f ×_J g)^(m) = ∫ f̂(k) ĝ(m - k) e(⟨Jk, m - k⟩) dk .
//! ```
//!
//! [`moyal_product`] evaluates this as a sum over the dual nodes of a grid.
//! Terms whose partner frequency `m - k` falls outside the dual window are
//! dropped, so the data must be band-limited to the window.

use num_complex::Complex64;

use crate::carrier::{CarrierKind, Frequency};
use crate::deform::SkewForm;
use crate::grid::{fourier, inv_fourier, scalar_values, Domain, GridFunction};
use crate::quad::pairwise_sum;
use crate::{e, Error, Result};

/// `f ×_J g` for scalar grid functions.
///
/// ```
/// use rieffel::{grid, moyal::moyal_product, GridSpec, SkewForm, Complex64};
///
/// let spec = GridSpec::new(2, 16, 6.0)?;
/// let gauss = |x: &[f64]| Complex64::new((-std::f64::consts::PI * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0);
/// let f = grid::sample_scalar(spec, gauss)?;
/// let one = grid::sample_scalar(spec, |_| Complex64::new(1.0, 0.0))?;
/// // constants are central
/// let h = moyal_product(&SkewForm::theta(0.3), &f, &one)?;
/// assert!(h.rel_l2_error(&f)? < 1e-12);
/// # Ok::<(), rieffel::Error>(())
/// ```
pub fn moyal_product(j: &SkewForm, f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    for v in [f, g] {
        if !matches!(v.carrier().kind(), CarrierKind::Scalar) {
            return Err(Error::InvalidCarrier("the Moyal product takes scalar functions".into()));
        }
    }
    f.check_compatible(g)?;
    f.require(Domain::Position)?;
    let spec = *f.spec();
    j.check_dim(spec.dim())?;
    let fh = scalar_values(&fourier(f)?);
    let gh = scalar_values(&fourier(g)?);
    let n = spec.points_per_axis() as i64;
    let half = n / 2;
    let len = spec.len();
    let idx: Vec<Vec<i64>> =
        (0..len).map(|i| spec.multi_index(i).iter().map(|&v| v as i64 - half).collect()).collect();
    let duals = spec.dual_nodes();
    let jk: Vec<Vec<f64>> = duals.iter().map(|k| j.apply(k)).collect();
    let w = spec.dual_cell();
    let mut out = Vec::with_capacity(len);
    let mut terms = Vec::with_capacity(len);
    for m in 0..len {
        terms.clear();
        for k in 0..len {
            if fh[k] == Complex64::new(0.0, 0.0) {
                continue;
            }
            // partner index m - k, dropped when it leaves the window
            let mut flat = 0usize;
            let mut inside = true;
            for (im, ik) in idx[m].iter().zip(&idx[k]) {
                let r = im - ik;
                if r < -half || r >= half {
                    inside = false;
                    break;
                }
                flat = flat * n as usize + (r + half) as usize;
            }
            if !inside {
                continue;
            }
            let phase: f64 = jk[k].iter().zip(&duals[flat]).map(|(a, b)| a * b).sum();
            terms.push(fh[k] * gh[flat] * e(phase) * w);
        }
        out.push(pairwise_sum(&terms));
    }
    let carrier = f.carrier().clone();
    let hat = GridFunction::from_components(
        spec,
        &carrier,
        Domain::Frequency,
        vec![crate::GridComponent { freq: Frequency::zero(spec.dim()), data: out }],
    )?;
    inv_fourier(&hat)
}
