#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rieffel::grid::{inv_fourier, Domain};
use rieffel::{dot, e, Carrier, Complex64, GridComponent, GridFunction, GridSpec, SpectralElement};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cplx(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Frequencies used for random elements: the point spectrum of a matrix
/// carrier, or `0, ±b_i, b_0 + b_1` for a torus basis `b`.
pub fn frequencies(c: &Arc<Carrier>) -> Vec<rieffel::Frequency> {
    match c.kind() {
        rieffel::CarrierKind::Torus { basis } => {
            let mut out = vec![rieffel::Frequency::zero(c.dim())];
            for b in basis {
                out.push(b.clone());
                out.push(b.neg());
            }
            if basis.len() >= 2 {
                out.push(basis[0].add(&basis[1]));
            }
            out
        }
        _ => c.spectrum(),
    }
}

/// Random element supported on every spectral subspace of a matrix carrier.
pub fn random_element(c: &Arc<Carrier>, rng: &mut impl Rng) -> SpectralElement {
    let n = c.coeff_size();
    let mut acc = SpectralElement::zero(c);
    match c.kind() {
        rieffel::CarrierKind::Matrix { .. } => {
            for j in 0..n {
                for k in 0..n {
                    let u = c.matrix_unit(j, k).unwrap().scale(cplx(rng));
                    acc = acc.add(&u).unwrap();
                }
            }
        }
        _ => {
            for p in frequencies(c) {
                acc = acc.add(&c.monomial(p).unwrap().scale(cplx(rng))).unwrap();
            }
        }
    }
    acc
}

/// Random grid function whose every plane has spectrum inside `|m_i| ≤ band`.
pub fn band_limited(spec: GridSpec, c: &Arc<Carrier>, band: usize, rng: &mut impl Rng) -> GridFunction {
    let len = spec.len();
    let half = spec.points_per_axis() / 2;
    let n = c.coeff_size();
    let inside: Vec<bool> = (0..len)
        .map(|i| spec.multi_index(i).iter().all(|&m| m.abs_diff(half) <= band))
        .collect();
    let mut comps = Vec::new();
    let supports: Vec<(rieffel::Frequency, Vec<(usize, usize)>)> = match c.kind() {
        rieffel::CarrierKind::Matrix { .. } => {
            let mut groups: Vec<(rieffel::Frequency, Vec<(usize, usize)>)> = Vec::new();
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
    for (p, entries) in supports {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n * len];
        for (j, k) in entries {
            for i in 0..len {
                if inside[i] {
                    data[(j * n + k) * len + i] = cplx(rng);
                }
            }
        }
        comps.push(GridComponent { freq: p, data });
    }
    let hat = GridFunction::from_components(spec, c, Domain::Frequency, comps).unwrap();
    inv_fourier(&hat).unwrap()
}

/// Random superposition of unit Gaussians with random centers and modulations,
/// times random coefficients in every spectral subspace.
pub fn gaussian_probe(spec: GridSpec, c: &Arc<Carrier>, rng: &mut impl Rng) -> GridFunction {
    let d = spec.dim();
    let bumps: Vec<(Vec<f64>, Vec<f64>, SpectralElement)> = (0..3)
        .map(|_| {
            let center = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
            let k = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
            (center, k, random_element(c, rng))
        })
        .collect();
    rieffel::grid::sample(spec, c, |x| {
        let mut acc = SpectralElement::zero(c);
        for (center, k, a) in &bumps {
            let r: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
            let w = e(dot(k, x)) * (-PI * dot(&r, &r)).exp();
            acc = acc.add(&a.scale(w)).unwrap();
        }
        acc
    })
    .unwrap()
}

/// Scalar Gaussian probe on the scalar carrier.
pub fn scalar_gaussian(spec: GridSpec, rng: &mut impl Rng) -> GridFunction {
    let c = Carrier::scalar(spec.dim()).unwrap();
    gaussian_probe(spec, &c, rng)
}

/// `M_2` carrier on `R^2` with small lattice frequencies.
pub fn m2_lattice(l: f64) -> Arc<Carrier> {
    Carrier::matrix(vec![vec![0.0, 0.0], vec![1.0 / l, -2.0 / l]], Some(l)).unwrap()
}

/// `M_3` carrier with generic (non-lattice) frequencies.
pub fn m3_generic() -> Arc<Carrier> {
    Carrier::matrix(vec![vec![0.0, 0.0], vec![0.37, -0.21], vec![-0.13, 0.52]], None).unwrap()
}
