//! Seeded probe data.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rieffel::grid::{inv_fourier, sample, Domain};
use rieffel::{dot, e, Carrier, CarrierKind, Complex64, Frequency, GridComponent, GridFunction, GridSpec, SpectralElement};

/// Independent stream per (seed, label) so checks do not depend on order.
pub fn rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    // FNV-1a of the label picks the stream
    let stream = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    r.set_stream(stream);
    r
}

pub fn cplx(r: &mut impl Rng) -> Complex64 {
    Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

/// Frequencies touched by probe data: the spectrum of a matrix carrier, or
/// `0, ±b_i` for a torus basis.
pub fn frequencies(c: &Carrier) -> Vec<Frequency> {
    match c.kind() {
        CarrierKind::Torus { basis } => {
            let mut out = vec![Frequency::zero(c.dim())];
            for b in basis {
                out.push(b.clone());
                out.push(b.neg());
            }
            out
        }
        _ => c.spectrum(),
    }
}

/// Random homogeneous element: a scaled matrix unit, or a scaled monomial.
pub fn homogeneous(c: &Arc<Carrier>, r: &mut impl Rng) -> SpectralElement {
    match c.kind() {
        CarrierKind::Matrix { h } => {
            let n = h.len();
            let (j, k) = (r.random_range(0..n), r.random_range(0..n));
            c.matrix_unit(j, k).expect("index in range").scale(cplx(r))
        }
        _ => {
            let f = frequencies(c);
            let p = f[r.random_range(0..f.len())].clone();
            c.monomial(p).expect("carrier frequency").scale(cplx(r))
        }
    }
}

/// Random element with a component in every probe frequency.
pub fn element(c: &Arc<Carrier>, r: &mut impl Rng) -> SpectralElement {
    let mut acc = SpectralElement::zero(c);
    match c.kind() {
        CarrierKind::Matrix { h } => {
            for j in 0..h.len() {
                for k in 0..h.len() {
                    acc = acc.add(&c.matrix_unit(j, k).expect("index in range").scale(cplx(r))).expect("same carrier");
                }
            }
        }
        _ => {
            for p in frequencies(c) {
                acc = acc.add(&c.monomial(p).expect("carrier frequency").scale(cplx(r))).expect("same carrier");
            }
        }
    }
    acc
}

/// Three Gaussian bumps with random centers, modulations and coefficients.
pub fn gaussian(spec: GridSpec, c: &Arc<Carrier>, r: &mut impl Rng) -> GridFunction {
    let d = spec.dim();
    let bumps: Vec<(Vec<f64>, Vec<f64>, SpectralElement)> = (0..3)
        .map(|_| {
            let center = (0..d).map(|_| r.random_range(-0.5..0.5)).collect();
            let k = (0..d).map(|_| r.random_range(-0.5..0.5)).collect();
            (center, k, element(c, r))
        })
        .collect();
    sample(spec, c, |x| {
        let mut acc = SpectralElement::zero(c);
        for (center, k, a) in &bumps {
            let y: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
            acc = acc.add(&a.scale(e(dot(k, x)) * (-PI * dot(&y, &y)).exp())).expect("same carrier");
        }
        acc
    })
    .expect("finite samples")
}

/// Random data with every plane's spectrum inside `|m_i| ≤ band`.
pub fn band_limited(spec: GridSpec, c: &Arc<Carrier>, band: usize, r: &mut impl Rng) -> GridFunction {
    let len = spec.len();
    let half = spec.points_per_axis() / 2;
    let n = c.coeff_size();
    let inside: Vec<bool> =
        (0..len).map(|i| spec.multi_index(i).iter().all(|&m| m.abs_diff(half) <= band)).collect();
    let groups: Vec<(Frequency, Vec<(usize, usize)>)> = match c.kind() {
        CarrierKind::Matrix { .. } => {
            let mut groups: Vec<(Frequency, Vec<(usize, usize)>)> = Vec::new();
            for j in 0..n {
                for k in 0..n {
                    let p = c.entry_frequency(j, k);
                    match groups.iter_mut().find(|g| c.same_frequency(&g.0, &p)) {
                        Some(g) => g.1.push((j, k)),
                        None => groups.push((p, vec![(j, k)])),
                    }
                }
            }
            groups
        }
        _ => frequencies(c).into_iter().map(|p| (p, vec![(0, 0)])).collect(),
    };
    let comps = groups
        .into_iter()
        .map(|(p, entries)| {
            let mut data = vec![Complex64::new(0.0, 0.0); n * n * len];
            for (j, k) in entries {
                for i in (0..len).filter(|&i| inside[i]) {
                    data[(j * n + k) * len + i] = cplx(r);
                }
            }
            GridComponent { freq: p, data }
        })
        .collect();
    let hat = GridFunction::from_components(spec, c, Domain::Frequency, comps).expect("valid components");
    inv_fourier(&hat).expect("frequency data")
}

/// `a/Δ^d` at the node `x = 0`, zero elsewhere.
pub fn delta(spec: GridSpec, a: &SpectralElement) -> GridFunction {
    let c = a.carrier();
    let n = c.coeff_size();
    let len = spec.len();
    let origin = spec.flat_index(&vec![spec.points_per_axis() / 2; spec.dim()]);
    let comps = a
        .terms()
        .iter()
        .map(|t| {
            let mut data = vec![Complex64::new(0.0, 0.0); n * n * len];
            for j in 0..n {
                for k in 0..n {
                    data[(j * n + k) * len + origin] = t.coeff[(j, k)] / spec.cell();
                }
            }
            GridComponent { freq: t.freq.clone(), data }
        })
        .collect();
    GridFunction::from_components(spec, c, Domain::Position, comps).expect("valid components")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = rng(7, "theorem1").random();
        let b: f64 = rng(7, "theorem1").random();
        let c: f64 = rng(7, "homomorphism").random();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, c);
    }

    #[test]
    fn delta_sits_at_the_origin() {
        let spec = GridSpec::new(2, 8, 4.0).unwrap();
        let c = Carrier::scalar(2).unwrap();
        let f = delta(spec, &c.scalar_element(Complex64::new(1.0, 0.0)));
        let origin = spec.flat_index(&[4, 4]);
        assert!(spec.node(origin).iter().all(|x| x.abs() < 1e-15));
        assert_eq!(f.value(origin).max_abs(), 1.0 / spec.cell());
    }
}
