//! Periodic grid model of `S(V; A)`.
//!
//! A [`GridSpec`] fixes `N` points per axis on the box `[-L/2, L/2)^d` with
//! spacing `Δ = L/N`, and the dual nodes `k_m = m/L`, `m ∈ [-N/2, N/2)`. Dual
//! nodes satisfy `e(k·(x + L e_j)) = e(k·x)`, so every identity below that
//! only involves lattice phases holds exactly on the grid.
//!
//! A [`GridFunction`] stores an `A`-valued function as a list of spectral
//! components: for each frequency `p` of the carrier a field of `n × n`
//! coefficient matrices. The Fourier transform
//!
//! ```text
//! f̂(k_m) = Δ^d Σ_n f(x_n) e(-k_m·x_n),    f(x_n) = L^{-d} Σ_m f̂(k_m) e(k_m·x_n)
//! ```
//!
//! acts componentwise and is unitary between the measures `Δ^d` and `L^{-d}`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::carrier::{Carrier, Frequency, SpectralElement, Term};
use crate::deform::SkewForm;
use crate::{dot, e, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform box lattice: `d` axes, `n` (even, ≥ 4) points each, side `l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    d: usize,
    n: usize,
    l: f64,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, l: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidGrid("d must be >= 1".into()));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("N must be even and >= 4, got {n}")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidGrid(format!("L must be positive, got {l}")));
        }
        if n.checked_pow(d as u32).is_none_or(|t| t > 1 << 26) {
            return Err(Error::InvalidGrid(format!("{n}^{d} nodes is too many")));
        }
        Ok(GridSpec { d, n, l })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.l
    }

    /// `Δ = L/N`.
    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Total number of nodes `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `Δ^d` of position nodes.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Quadrature weight `L^{-d}` of dual nodes.
    pub fn dual_cell(&self) -> f64 {
        self.l.powi(-(self.d as i32))
    }

    /// Per-axis indices of a flat node index (axis 0 varies slowest).
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        let mut rem = flat;
        for axis in (0..self.d).rev() {
            idx[axis] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Position `x = -L/2 + iΔ` per axis.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(flat)
            .into_iter()
            .map(|i| -0.5 * self.l + i as f64 * h)
            .collect()
    }

    /// Dual node `k = (i - N/2)/L` per axis.
    pub fn dual_node(&self, flat: usize) -> Vec<f64> {
        let half = (self.n / 2) as f64;
        self.multi_index(flat)
            .into_iter()
            .map(|i| (i as f64 - half) / self.l)
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn dual_nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.dual_node(i)).collect()
    }

    /// Flat index of the node `x - y` (periodically wrapped), given node indices.
    pub fn difference_index(&self, x: usize, y: usize) -> usize {
        let (xi, yi) = (self.multi_index(x), self.multi_index(y));
        let half = self.n / 2;
        let idx: Vec<usize> = xi
            .iter()
            .zip(&yi)
            .map(|(&a, &b)| (a + half + self.n - b) % self.n)
            .collect();
        self.flat_index(&idx)
    }

    /// Whether `p` lies on the dual lattice `(1/L) Z^d` (to `1e-9`).
    pub fn on_dual_lattice(&self, p: &[f64]) -> bool {
        p.iter().all(|x| {
            let s = x * self.l;
            (s - s.round()).abs() <= 1e-9 * self.l.max(1.0)
        })
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Whether grid values are indexed by position nodes or dual nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Position,
    Frequency,
}

/// One spectral component: the field of coefficients at a fixed frequency.
///
/// `data` is entry-major: entry `(j, k)` of the coefficient matrix occupies
/// `data[(j*n + k) * N^d ..][..N^d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridComponent {
    pub freq: Frequency,
    pub data: Vec<Complex64>,
}

/// An `A`-valued function on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    carrier: Arc<Carrier>,
    domain: Domain,
    comps: Vec<GridComponent>,
}

impl GridFunction {
    pub fn zeros(spec: GridSpec, carrier: &Arc<Carrier>, domain: Domain) -> Self {
        GridFunction { spec, carrier: carrier.clone(), domain, comps: Vec::new() }
    }

    /// Builds a grid function from explicit components, checking sizes and the
    /// carrier's support invariant.
    pub fn from_components(
        spec: GridSpec,
        carrier: &Arc<Carrier>,
        domain: Domain,
        comps: Vec<GridComponent>,
    ) -> Result<Self> {
        let m = carrier.coeff_size();
        let len = spec.len();
        let mut out = GridFunction::zeros(spec, carrier, domain);
        for c in comps {
            carrier.check_frequency(&c.freq)?;
            if c.data.len() != m * m * len {
                return Err(Error::InvalidGrid(format!(
                    "component has {} values, expected {}",
                    c.data.len(),
                    m * m * len
                )));
            }
            if let Some(i) = c.data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite { node: i % len });
            }
            let freq = carrier.canonical(&c.freq);
            for j in 0..m {
                for k in 0..m {
                    let e = j * m + k;
                    let plane = &c.data[e * len..(e + 1) * len];
                    if plane.iter().any(|z| *z != ZERO)
                        && !carrier.same_frequency(&carrier.entry_frequency(j, k), &freq)
                    {
                        return Err(Error::InvalidElement(format!(
                            "entry ({j},{k}) is nonzero in the component at {freq}"
                        )));
                    }
                }
            }
            out.accumulate(&freq, &c.data, Complex64::new(1.0, 0.0));
        }
        out.finish();
        Ok(out)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn carrier(&self) -> &Arc<Carrier> {
        &self.carrier
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn components(&self) -> &[GridComponent] {
        &self.comps
    }

    pub fn component(&self, p: &Frequency) -> Option<&GridComponent> {
        let p = self.carrier.canonical(p);
        self.comps.iter().find(|c| self.carrier.same_frequency(&c.freq, &p))
    }

    fn entries(&self) -> usize {
        let m = self.carrier.coeff_size();
        m * m
    }

    /// The value at a node as a spectral element.
    pub fn value(&self, node: usize) -> SpectralElement {
        let m = self.carrier.coeff_size();
        let len = self.spec.len();
        let terms = self
            .comps
            .iter()
            .map(|c| Term {
                freq: c.freq.clone(),
                coeff: nalgebra::DMatrix::from_fn(m, m, |j, k| c.data[(j * m + k) * len + node]),
            })
            .collect();
        SpectralElement::from_parts_unchecked(&self.carrier, terms)
    }

    pub(crate) fn accumulate(&mut self, freq: &Frequency, data: &[Complex64], scale: Complex64) {
        let freq = self.carrier.canonical(freq);
        let idx = match self.comps.iter().position(|c| self.carrier.same_frequency(&c.freq, &freq)) {
            Some(i) => i,
            None => {
                self.comps.push(GridComponent { freq, data: vec![ZERO; data.len()] });
                self.comps.len() - 1
            }
        };
        for (acc, z) in self.comps[idx].data.iter_mut().zip(data) {
            *acc += z * scale;
        }
    }

    pub(crate) fn finish(&mut self) {
        self.comps.retain(|c| c.data.iter().any(|z| *z != ZERO));
        self.comps.sort_by(|a, b| {
            a.freq
                .iter()
                .zip(b.freq.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    pub(crate) fn with_components(&self, domain: Domain, comps: Vec<GridComponent>) -> Self {
        let mut out = GridFunction::zeros(self.spec, &self.carrier, domain);
        for c in comps {
            out.accumulate(&c.freq, &c.data, Complex64::new(1.0, 0.0));
        }
        out.finish();
        out
    }

    pub(crate) fn map_components(
        &self,
        domain: Domain,
        mut f: impl FnMut(&GridComponent) -> Vec<Complex64>,
    ) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|c| GridComponent { freq: c.freq.clone(), data: f(c) })
            .collect();
        self.with_components(domain, comps)
    }

    pub(crate) fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        self.spec.check_same(&other.spec)?;
        if *self.carrier != *other.carrier {
            return Err(Error::CarrierMismatch(format!("{} vs {}", self.carrier, other.carrier)));
        }
        if self.domain != other.domain {
            return Err(Error::GridMismatch("position vs frequency domain".into()));
        }
        Ok(())
    }

    pub(crate) fn require(&self, domain: Domain) -> Result<()> {
        if self.domain == domain {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("expected {domain:?} data, got {:?}", self.domain)))
        }
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for c in &other.comps {
            out.accumulate(&c.freq, &c.data, Complex64::new(1.0, 0.0));
        }
        out.finish();
        Ok(out)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for c in &other.comps {
            out.accumulate(&c.freq, &c.data, Complex64::new(-1.0, 0.0));
        }
        out.finish();
        Ok(out)
    }

    pub fn scale(&self, z: Complex64) -> GridFunction {
        self.map_components(self.domain, |c| c.data.iter().map(|v| v * z).collect())
    }

    /// Pointwise multiplication by a scalar field given per node.
    pub fn mul_scalar_field(&self, field: impl Fn(usize) -> Complex64) -> GridFunction {
        let len = self.spec.len();
        let w: Vec<Complex64> = (0..len).map(field).collect();
        self.map_components(self.domain, |c| {
            c.data.iter().enumerate().map(|(i, v)| v * w[i % len]).collect()
        })
    }

    /// `y ↦ α_x(f(y))`: the component at `p` picks up `e(-x·p)`.
    pub fn act(&self, x: &[f64]) -> Result<GridFunction> {
        if x.len() != self.spec.dim() {
            return Err(Error::DimensionMismatch { expected: self.spec.dim(), got: x.len() });
        }
        Ok(self.map_components(self.domain, |c| {
            let w = e(-dot(x, &c.freq));
            c.data.iter().map(|z| z * w).collect()
        }))
    }

    /// L² norm for the domain's measure (`Δ^d` or `L^{-d}`), Hilbert–Schmidt on
    /// coefficients.
    pub fn norm_l2(&self) -> f64 {
        let w = match self.domain {
            Domain::Position => self.spec.cell(),
            Domain::Frequency => self.spec.dual_cell(),
        };
        let s: f64 = self.comps.iter().flat_map(|c| c.data.iter()).map(|z| z.norm_sqr()).sum();
        (s * w).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.data.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `|self - other|₂ / |other|₂` (absolute when `other` vanishes).
    pub fn rel_l2_error(&self, other: &GridFunction) -> Result<f64> {
        let diff = self.sub(other)?.norm_l2();
        let n = other.norm_l2();
        Ok(if n > 0.0 { diff / n } else { diff })
    }

    /// Sum over all components; a plain matrix field for matrix carriers.
    /// Returned entry-major, like a component.
    pub fn reassembled(&self) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.entries() * self.spec.len()];
        for c in &self.comps {
            for (o, z) in out.iter_mut().zip(&c.data) {
                *o += z;
            }
        }
        out
    }
}

/// Samples `φ` at every node.
pub fn sample(
    spec: GridSpec,
    carrier: &Arc<Carrier>,
    phi: impl Fn(&[f64]) -> SpectralElement,
) -> Result<GridFunction> {
    let len = spec.len();
    let m = carrier.coeff_size();
    let mut out = GridFunction::zeros(spec, carrier, Domain::Position);
    let mut comps: Vec<GridComponent> = Vec::new();
    for node in 0..len {
        let x = spec.node(node);
        let v = phi(&x);
        v.check_carrier(carrier)?;
        for t in v.terms() {
            if t.coeff.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite { node });
            }
            let idx = match comps.iter().position(|c| carrier.same_frequency(&c.freq, &t.freq)) {
                Some(i) => i,
                None => {
                    comps.push(GridComponent { freq: t.freq.clone(), data: vec![ZERO; m * m * len] });
                    comps.len() - 1
                }
            };
            for j in 0..m {
                for k in 0..m {
                    comps[idx].data[(j * m + k) * len + node] += t.coeff[(j, k)];
                }
            }
        }
    }
    for c in comps {
        out.accumulate(&c.freq, &c.data, Complex64::new(1.0, 0.0));
    }
    out.finish();
    Ok(out)
}

/// Samples a complex scalar function on the scalar carrier of dimension `spec.dim()`.
pub fn sample_scalar(spec: GridSpec, phi: impl Fn(&[f64]) -> Complex64) -> Result<GridFunction> {
    let carrier = Carrier::scalar(spec.dim())?;
    let len = spec.len();
    let mut data = Vec::with_capacity(len);
    for node in 0..len {
        let z = phi(&spec.node(node));
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        data.push(z);
    }
    let mut out = GridFunction::zeros(spec, &carrier, Domain::Position);
    out.accumulate(&Frequency::zero(spec.dim()), &data, Complex64::new(1.0, 0.0));
    out.finish();
    Ok(out)
}

/// Scalar samples of a scalar-carrier grid function (zeros if empty).
pub fn scalar_values(f: &GridFunction) -> Vec<Complex64> {
    match f.components().first() {
        Some(c) if f.carrier().coeff_size() == 1 && f.components().len() == 1 => c.data.clone(),
        _ => {
            let mut out = vec![ZERO; f.spec().len()];
            if f.carrier().coeff_size() == 1 {
                for c in f.components() {
                    for (o, z) in out.iter_mut().zip(&c.data) {
                        *o += z;
                    }
                }
            }
            out
        }
    }
}

/// Continuum-normalized transform applied plane by plane.
pub(crate) fn transform_planes(spec: &GridSpec, data: &mut [Complex64], forward: bool) {
    let n = spec.points_per_axis();
    let d = spec.dim();
    let len = spec.len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if forward { planner.plan_fft_forward(n) } else { planner.plan_fft_inverse(n) };
    let half = n / 2;
    // (-1)^m with m = i - N/2
    let sign = |i: usize| if (i + half).is_multiple_of(2) { 1.0 } else { -1.0 };
    let scale = if forward { spec.spacing() } else { 1.0 / spec.side() };
    let mut line = vec![ZERO; n];
    let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
    for plane in data.chunks_mut(len) {
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            let outer = len / (n * stride);
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    if forward {
                        for (i, v) in line.iter_mut().enumerate() {
                            *v = plane[base + i * stride];
                        }
                        fft.process_with_scratch(&mut line, &mut scratch);
                        // dual index i ↔ m = i - N/2 ↔ DFT bin m mod N
                        for i in 0..n {
                            let bin = (i + half) % n;
                            plane[base + i * stride] = line[bin] * (sign(i) * scale);
                        }
                    } else {
                        for i in 0..n {
                            let bin = (i + half) % n;
                            line[bin] = plane[base + i * stride] * sign(i);
                        }
                        fft.process_with_scratch(&mut line, &mut scratch);
                        for (i, v) in line.iter().enumerate() {
                            plane[base + i * stride] = v * scale;
                        }
                    }
                }
            }
        }
    }
}

/// `f̂(k) = ∫ f(y) e(-k·y) dy`, componentwise.
pub fn fourier(f: &GridFunction) -> Result<GridFunction> {
    f.require(Domain::Position)?;
    Ok(f.map_components(Domain::Frequency, |c| {
        let mut data = c.data.clone();
        transform_planes(&f.spec, &mut data, true);
        data
    }))
}

/// Inverse of [`fourier`].
pub fn inv_fourier(f: &GridFunction) -> Result<GridFunction> {
    f.require(Domain::Frequency)?;
    Ok(f.map_components(Domain::Position, |c| {
        let mut data = c.data.clone();
        transform_planes(&f.spec, &mut data, false);
        data
    }))
}

/// Pointwise matrix product of two entry-major fields, accumulated into `out`.
pub(crate) fn field_matmul_acc(
    m: usize,
    len: usize,
    a: &[Complex64],
    b: &[Complex64],
    scale: Complex64,
    out: &mut [Complex64],
) {
    let nonzero = |data: &[Complex64], e: usize| data[e * len..(e + 1) * len].iter().any(|z| *z != ZERO);
    for j in 0..m {
        for k in 0..m {
            if !nonzero(a, j * m + k) {
                continue;
            }
            for l in 0..m {
                if !nonzero(b, k * m + l) {
                    continue;
                }
                let pa = &a[(j * m + k) * len..][..len];
                let pb = &b[(k * m + l) * len..][..len];
                let po = &mut out[(j * m + l) * len..][..len];
                for i in 0..len {
                    po[i] += pa[i] * pb[i] * scale;
                }
            }
        }
    }
}

fn modulated(spec: &GridSpec, data: &[Complex64], k: &[f64], sign: f64) -> Vec<Complex64> {
    let len = spec.len();
    let w: Vec<Complex64> = (0..len).map(|i| e(sign * dot(&spec.node(i), k))).collect();
    data.iter().enumerate().map(|(i, z)| z * w[i % len]).collect()
}

fn convolve_with_phase(
    f: &GridFunction,
    g: &GridFunction,
    phase: impl Fn(&Frequency, &Frequency) -> Complex64,
) -> Result<GridFunction> {
    f.check_compatible(g)?;
    f.require(Domain::Position)?;
    let spec = f.spec;
    let len = spec.len();
    let m = f.carrier.coeff_size();
    let g_hat: Vec<(Frequency, Vec<Complex64>)> = g
        .comps
        .iter()
        .map(|c| {
            let mut data = c.data.clone();
            transform_planes(&spec, &mut data, true);
            (c.freq.clone(), data)
        })
        .collect();
    let mut acc = GridFunction::zeros(spec, &f.carrier, Domain::Frequency);
    for fc in &f.comps {
        for (q, gq) in &g_hat {
            // f_p(y) α_y(g_q(x - y)) = f_p(y) e(-y·q) g_q(x - y)
            let mut fm = modulated(&spec, &fc.data, q, -1.0);
            transform_planes(&spec, &mut fm, true);
            let mut prod = vec![ZERO; m * m * len];
            field_matmul_acc(m, len, &fm, gq, phase(&fc.freq, q), &mut prod);
            acc.accumulate(&fc.freq.add(q), &prod, Complex64::new(1.0, 0.0));
        }
    }
    acc.finish();
    inv_fourier(&acc)
}

/// Crossed-product convolution `(f ∗ g)(x) = ∫ f(y) α_y(g(x - y)) dy`, as a
/// periodic sum with weight `Δ^d`.
///
/// The defining display for this product writes `f` in both slots; the second
/// factor must be `g` for the product to be bilinear.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    convolve_with_phase(f, g, |_, _| Complex64::new(1.0, 0.0))
}

/// Convolution in `V ⋉ A_J`: `Σ_y f(y) ×_J α_y(g(x - y)) Δ^d`.
pub fn convolve_deformed(j: &SkewForm, f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    j.check_dim(f.spec.dim())?;
    convolve_with_phase(f, g, |p, q| e(j.pairing(p, q)))
}

/// `(λ_x ξ)(y) = ξ(y - x)` for `x = shift·Δ` on the node lattice (circular).
pub fn translate(shift: &[i64], xi: &GridFunction) -> Result<GridFunction> {
    xi.require(Domain::Position)?;
    let spec = xi.spec;
    if shift.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: shift.len() });
    }
    let n = spec.points_per_axis() as i64;
    let len = spec.len();
    let src: Vec<usize> = (0..len)
        .map(|i| {
            let idx: Vec<usize> = spec
                .multi_index(i)
                .iter()
                .zip(shift)
                .map(|(&a, &s)| (a as i64 - s).rem_euclid(n) as usize)
                .collect();
            spec.flat_index(&idx)
        })
        .collect();
    Ok(xi.map_components(Domain::Position, |c| {
        (0..c.data.len()).map(|i| c.data[(i / len) * len + src[i % len]]).collect()
    }))
}

/// `(λ_x ξ)(y) = ξ(y - x)` for arbitrary `x`, via the phase `e(-k·x)` on the
/// transform. Exact for functions whose spectrum is carried by the grid.
pub fn translate_fourier(x: &[f64], xi: &GridFunction) -> Result<GridFunction> {
    xi.require(Domain::Position)?;
    if x.len() != xi.spec.dim() {
        return Err(Error::DimensionMismatch { expected: xi.spec.dim(), got: x.len() });
    }
    let spec = xi.spec;
    let len = spec.len();
    let w: Vec<Complex64> = (0..len).map(|i| e(-dot(&spec.dual_node(i), x))).collect();
    Ok(xi.map_components(Domain::Position, |c| {
        let mut data = c.data.clone();
        transform_planes(&spec, &mut data, true);
        for (i, z) in data.iter_mut().enumerate() {
            *z *= w[i % len];
        }
        transform_planes(&spec, &mut data, false);
        data
    }))
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `f` as CSV: comment header lines naming the carrier, grid and
/// component frequencies, a column header, then one row per node.
pub fn write_csv(f: &GridFunction, mut w: impl Write) -> Result<()> {
    let io = |e: std::io::Error| Error::Csv(e.to_string());
    let spec = f.spec;
    let m = f.carrier.coeff_size();
    writeln!(w, "# rieffel-grid v1").map_err(io)?;
    writeln!(w, "# carrier: {}", f.carrier).map_err(io)?;
    writeln!(w, "# grid: d={} n={} l={}", spec.d, spec.n, fmt_f64(spec.l)).map_err(io)?;
    let domain = match f.domain {
        Domain::Position => "position",
        Domain::Frequency => "frequency",
    };
    writeln!(w, "# domain: {domain}").map_err(io)?;
    let freqs: Vec<String> = f
        .comps
        .iter()
        .map(|c| c.freq.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","))
        .collect();
    writeln!(w, "# components: {}", freqs.join(";")).map_err(io)?;
    let mut header: Vec<String> = (0..spec.d).map(|a| format!("i{a}")).collect();
    for ci in 0..f.comps.len() {
        for j in 0..m {
            for k in 0..m {
                header.push(format!("c{ci}_{j}{k}_re"));
                header.push(format!("c{ci}_{j}{k}_im"));
            }
        }
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    let len = spec.len();
    for node in 0..len {
        let mut row: Vec<String> = spec.multi_index(node).iter().map(|i| i.to_string()).collect();
        for c in &f.comps {
            for e in 0..m * m {
                let z = c.data[e * len + node];
                row.push(fmt_f64(z.re));
                row.push(fmt_f64(z.im));
            }
        }
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    Ok(())
}

/// Reads the format produced by [`write_csv`]; values round-trip bit-exactly.
pub fn read_csv(r: impl BufRead) -> Result<GridFunction> {
    let bad = |m: String| Error::Csv(m);
    let mut lines = r.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(bad(format!("line {}: {e}", i + 1))),
            None => Err(bad(format!("unexpected end of file, expected {what}"))),
        }
    };
    let header_value = |(no, line): (usize, String), key: &str| -> Result<String> {
        line.strip_prefix(&format!("# {key}:"))
            .map(|s| s.trim().to_string())
            .ok_or_else(|| bad(format!("line {no}: expected '# {key}:'")))
    };
    let (no, magic) = next("header")?;
    if magic.trim() != "# rieffel-grid v1" {
        return Err(bad(format!("line {no}: not a rieffel grid file")));
    }
    let carrier: Carrier = header_value(next("carrier")?, "carrier")?.parse()?;
    let carrier = Arc::new(carrier);
    let grid_line = next("grid")?;
    let grid_no = grid_line.0;
    let grid = header_value(grid_line, "grid")?;
    let (mut d, mut n, mut l) = (None, None, None);
    for kv in grid.split_whitespace() {
        match kv.split_once('=') {
            Some(("d", v)) => d = v.parse::<usize>().ok(),
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            Some(("l", v)) => l = v.parse::<f64>().ok(),
            _ => return Err(bad(format!("line {grid_no}: bad grid entry '{kv}'"))),
        }
    }
    let spec = match (d, n, l) {
        (Some(d), Some(n), Some(l)) => GridSpec::new(d, n, l)?,
        _ => return Err(bad(format!("line {grid_no}: incomplete grid description"))),
    };
    let domain = match header_value(next("domain")?, "domain")?.as_str() {
        "position" => Domain::Position,
        "frequency" => Domain::Frequency,
        other => return Err(bad(format!("unknown domain '{other}'"))),
    };
    let comp_line = header_value(next("components")?, "components")?;
    let freqs: Vec<Frequency> = if comp_line.is_empty() {
        Vec::new()
    } else {
        comp_line
            .split(';')
            .map(|s| {
                s.split(',')
                    .map(|v| v.parse::<f64>().map_err(|e| bad(format!("component frequency: {e}"))))
                    .collect::<Result<Vec<f64>>>()
                    .map(Frequency::new)
            })
            .collect::<Result<_>>()?
    };
    let m = carrier.coeff_size();
    let len = spec.len();
    let (no, cols) = next("column header")?;
    let expected_cols = spec.d + freqs.len() * m * m * 2;
    if cols.split(',').count() != expected_cols {
        return Err(bad(format!("line {no}: expected {expected_cols} columns")));
    }
    let mut comps: Vec<GridComponent> = freqs
        .into_iter()
        .map(|freq| GridComponent { freq, data: vec![ZERO; m * m * len] })
        .collect();
    let mut seen = vec![false; len];
    for _ in 0..len {
        let (no, row) = next("data row")?;
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != expected_cols {
            return Err(bad(format!("line {no}: expected {expected_cols} fields")));
        }
        let idx: Vec<usize> = fields[..spec.d]
            .iter()
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("line {no}: node index: {e}")))?;
        if idx.iter().any(|&i| i >= spec.n) {
            return Err(bad(format!("line {no}: node index out of range")));
        }
        let node = spec.flat_index(&idx);
        seen[node] = true;
        let vals: Vec<f64> = fields[spec.d..]
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("line {no}: value: {e}")))?;
        for (ci, c) in comps.iter_mut().enumerate() {
            for e in 0..m * m {
                let base = (ci * m * m + e) * 2;
                c.data[e * len + node] = Complex64::new(vals[base], vals[base + 1]);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(bad("missing node rows".into()));
    }
    GridFunction::from_components(spec, &carrier, domain, comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(x: &[f64]) -> Complex64 {
        Complex64::new((-PI * dot(x, x)).exp(), 0.0)
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(1, 6, 1.0).is_ok());
        assert!(GridSpec::new(1, 7, 1.0).is_err());
        assert!(GridSpec::new(1, 2, 1.0).is_err());
        assert!(GridSpec::new(1, 8, 0.0).is_err());
        assert!(GridSpec::new(0, 8, 1.0).is_err());
    }

    #[test]
    fn nodes_and_dual_nodes() {
        let s = GridSpec::new(2, 8, 4.0).unwrap();
        assert_eq!(s.node(0), vec![-2.0, -2.0]);
        assert_eq!(s.node(s.flat_index(&[4, 5])), vec![0.0, 0.5]);
        assert_eq!(s.dual_node(0), vec![-1.0, -1.0]);
        assert_eq!(s.dual_node(s.flat_index(&[4, 6])), vec![0.0, 0.5]);
        // x_i - x_j lands on the node with index i - j + N/2
        let x = s.flat_index(&[1, 7]);
        let y = s.flat_index(&[3, 2]);
        let dxy = s.difference_index(x, y);
        assert_eq!(s.multi_index(dxy), vec![2, 1]);
    }

    #[test]
    fn gaussian_is_self_dual() {
        let s = GridSpec::new(1, 96, 16.0).unwrap();
        let f = sample_scalar(s, gaussian).unwrap();
        let fh = fourier(&f).unwrap();
        let vals = scalar_values(&fh);
        let err = (0..s.len())
            .map(|i| (vals[i] - gaussian(&s.dual_node(i))).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        let back = inv_fourier(&fh).unwrap();
        assert!(back.rel_l2_error(&f).unwrap() < 1e-12);
    }

    #[test]
    fn transform_sees_periodized_spectrum() {
        // N = 64, L = 16: the window ends at |k| = 2 and the sampled transform
        // is the 4-periodization of e^{-πk²}
        let s = GridSpec::new(1, 64, 16.0).unwrap();
        let vals = scalar_values(&fourier(&sample_scalar(s, gaussian).unwrap()).unwrap());
        for i in 0..s.len() {
            let k = s.dual_node(i)[0];
            let periodized: f64 = (-3..=3).map(|j| gaussian(&[k + 4.0 * j as f64]).re).sum();
            assert!((vals[i].re - periodized).abs() < 1e-15, "{k}");
        }
        assert!((vals[0].re - 2.0 * (-4.0 * PI).exp()).abs() < 1e-15);
    }

    #[test]
    fn modulation_shifts_transform() {
        let s = GridSpec::new(1, 32, 8.0).unwrap();
        let k0 = 3.0 / 8.0;
        let f = sample_scalar(s, gaussian).unwrap();
        let g = sample_scalar(s, |x| gaussian(x) * e(x[0] * k0)).unwrap();
        let fh = scalar_values(&fourier(&f).unwrap());
        let gh = scalar_values(&fourier(&g).unwrap());
        for i in 0..s.len() {
            let j = (i + s.len() - 3) % s.len();
            assert!((gh[i] - fh[j]).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_sample() {
        let s = GridSpec::new(2, 4, 1.0).unwrap();
        let car = Carrier::matrix(vec![vec![0.0, 0.0], vec![0.5, 0.0]], None).unwrap();
        let a = car.matrix_unit(0, 1).unwrap();
        let f = sample(s, &car, |_| a.clone()).unwrap();
        for node in 0..s.len() {
            assert_eq!(f.value(node), a);
        }
        let nan = sample_scalar(s, |_| Complex64::new(f64::NAN, 0.0));
        assert!(matches!(nan, Err(Error::NonFinite { node: 0 })));
    }

    #[test]
    fn discrete_delta_is_unit() {
        let s = GridSpec::new(2, 8, 4.0).unwrap();
        let origin = s.flat_index(&[4, 4]);
        let car = Carrier::matrix(vec![vec![0.0, 0.0], vec![0.25, 0.5]], Some(4.0)).unwrap();
        let one = car.scalar_element(Complex64::new(1.0 / s.cell(), 0.0));
        let delta = sample(s, &car, |x| {
            if x.iter().all(|v| *v == 0.0) {
                one.clone()
            } else {
                SpectralElement::zero(&car)
            }
        })
        .unwrap();
        assert_eq!(delta.value(origin), one);
        let a = car.matrix_unit(0, 1).unwrap();
        let g = sample(s, &car, |x| a.scale(gaussian(x))).unwrap();
        assert!(convolve(&delta, &g).unwrap().rel_l2_error(&g).unwrap() < 1e-14);
    }

    #[test]
    fn gaussian_convolution_identity() {
        let s = GridSpec::new(1, 128, 16.0).unwrap();
        let f = sample_scalar(s, gaussian).unwrap();
        let out = scalar_values(&convolve(&f, &f).unwrap());
        let err = (0..s.len())
            .map(|i| {
                let x = s.node(i);
                (out[i] - Complex64::new((-PI * x[0] * x[0] / 2.0).exp() / 2f64.sqrt(), 0.0)).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn translation_group_law() {
        let s = GridSpec::new(2, 8, 4.0).unwrap();
        let f = sample_scalar(s, |x| gaussian(x) * e(0.3 * x[0] - 0.1 * x[1])).unwrap();
        assert_eq!(translate(&[0, 0], &f).unwrap(), f);
        let there = translate(&[3, -2], &f).unwrap();
        assert_eq!(translate(&[-3, 2], &there).unwrap(), f);
        // lattice translation agrees with the Fourier-phase mode
        let x = [3.0 * s.spacing(), -2.0 * s.spacing()];
        assert!(translate_fourier(&x, &f).unwrap().rel_l2_error(&there).unwrap() < 1e-13);
    }

    #[test]
    fn off_lattice_translation_of_gaussian() {
        let s = GridSpec::new(2, 96, 12.0).unwrap();
        let f = sample_scalar(s, gaussian).unwrap();
        let x0 = [0.137, -0.291];
        let shifted = scalar_values(&translate_fourier(&x0, &f).unwrap());
        let err = (0..s.len())
            .map(|i| {
                let y = s.node(i);
                let z = [y[0] - x0[0], y[1] - x0[1]];
                (shifted[i] - gaussian(&z)).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let s = GridSpec::new(2, 4, 3.0).unwrap();
        let car = Carrier::matrix(vec![vec![0.0, 0.0], vec![1.0 / 3.0, 0.1]], None).unwrap();
        let a = car.matrix_unit(0, 1).unwrap();
        let b = car.matrix_unit(1, 1).unwrap();
        let f = sample(s, &car, |x| {
            a.scale(Complex64::new(x[0].sin() / 7.0, -x[1].exp()))
                .add(&b.scale(Complex64::new(-0.0, PI * x[0])))
                .unwrap()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let back = read_csv(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(back.components().len(), f.components().len());
        for (x, y) in back.components().iter().zip(f.components()) {
            assert_eq!(x.freq, y.freq);
            for (u, v) in x.data.iter().zip(&y.data) {
                assert_eq!(u.re.to_bits(), v.re.to_bits());
                assert_eq!(u.im.to_bits(), v.im.to_bits());
            }
        }
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_csv(std::io::Cursor::new("hello\n")).is_err());
    }
}
