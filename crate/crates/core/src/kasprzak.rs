//! The twisted group algebra picture of the deformation.
//!
//! The bicharacter `Ω_J(x, y) = e(x·Jy)` twists the translations of the dual
//! group: `λ^Ω_χ λ^Ω_χ' = conj Ω(χ, χ') λ^Ω_{χ+χ'}`. The deformed algebra sits
//! inside the twisted algebra as the span of `λ^Ω_χ ⊗ a` with `a ∈ A_χ`
//! ([`embed_spectral`]), and normal functionals `ν` on the twisted group algebra
//! give quantization maps [`t_nu`] and smoothing maps [`phi_nu`].
//!
//! Functionals are limited to those whose symbol `x ↦ ν(λ^{Ω̄}_x)` is the
//! Fourier transform of an integrable density `g_ν`; see [`Functional`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::carrier::{act, decompose, mul, Carrier, CarrierKind, Frequency, SpectralElement, FREQ_EPS};
use crate::crossed::rep_pi_single;
use crate::deform::SkewForm;
use crate::grid::{
    fourier, scalar_values, transform_planes, translate_fourier, Domain, GridFunction, GridSpec,
};
use crate::quad::{pairwise_sum, tensor_integrate, Rule};
use crate::{dot, e, Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative size allowed for vector data at the edge of the grid box, in
/// position and in frequency.
pub const DECAY_TOL: f64 = 1e-9;

/// `Ω_J(x, y) = e(x·Jy)`.
pub fn cocycle(j: &SkewForm, x: &[f64], y: &[f64]) -> Result<Complex64> {
    j.check_dim(x.len())?;
    j.check_dim(y.len())?;
    Ok(e(dot(x, &j.apply(y))))
}

/// The homomorphism `r_Ω` with `e(x'·r_Ω(x)) = Ω(x', x)`; for `Ω_J` it is `J`.
pub fn r_omega(j: &SkewForm) -> DMatrix<f64> {
    j.matrix().clone()
}

/// A finite sum `Σ λ^Ω_χ ⊗ a_χ` with `a_χ ∈ A_χ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedElement {
    carrier: Arc<Carrier>,
    terms: Vec<(Frequency, SpectralElement)>,
}

impl TwistedElement {
    pub fn zero(carrier: &Arc<Carrier>) -> Self {
        TwistedElement { carrier: carrier.clone(), terms: Vec::new() }
    }

    /// `c · λ^Ω_χ ⊗ a`; `a` must be homogeneous of frequency `χ` (or zero).
    pub fn term(c: Complex64, chi: Frequency, a: &SpectralElement) -> Result<Self> {
        let carrier = a.carrier().clone();
        carrier.check_frequency(&chi)?;
        let chi = carrier.canonical(&chi);
        if !a.is_zero() {
            let p = a.homogeneous_frequency()?;
            if !carrier.same_frequency(p, &chi) {
                return Err(Error::InvalidElement(format!(
                    "twisted term at {chi} carries an element of frequency {p}"
                )));
            }
        }
        let mut out = TwistedElement::zero(&carrier);
        out.push(chi, a.scale(c));
        out.finish();
        Ok(out)
    }

    pub fn carrier(&self) -> &Arc<Carrier> {
        &self.carrier
    }

    /// Canonical terms: one per `χ`, sorted, nonzero.
    pub fn terms(&self) -> &[(Frequency, SpectralElement)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, chi: Frequency, a: SpectralElement) {
        let chi = self.carrier.canonical(&chi);
        match self.terms.iter_mut().find(|(c, _)| self.carrier.same_frequency(c, &chi)) {
            Some((_, b)) => *b = b.add(&a).expect("shared carrier"),
            None => self.terms.push((chi, a)),
        }
    }

    fn finish(&mut self) {
        self.terms.retain(|(_, a)| !a.is_zero());
        self.terms.sort_by(|x, y| cmp_freq(&x.0, &y.0));
    }

    pub fn add(&self, other: &TwistedElement) -> Result<TwistedElement> {
        if *self.carrier != *other.carrier {
            return Err(Error::CarrierMismatch(format!("{} vs {}", self.carrier, other.carrier)));
        }
        let mut out = self.clone();
        for (chi, a) in &other.terms {
            out.push(chi.clone(), a.clone());
        }
        out.finish();
        Ok(out)
    }

    pub fn scale(&self, z: Complex64) -> TwistedElement {
        let mut out = self.clone();
        for (_, a) in &mut out.terms {
            *a = a.scale(z);
        }
        out.finish();
        out
    }

    /// Largest coefficient difference over all terms.
    pub fn max_abs_diff(&self, other: &TwistedElement) -> Result<f64> {
        let diff = self.add(&other.scale(-ONE))?;
        Ok(diff.terms.iter().map(|(_, a)| a.max_abs()).fold(0.0, f64::max))
    }
}

fn cmp_freq(a: &Frequency, b: &Frequency) -> std::cmp::Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// `(λ_χ ⊗ a)(λ_χ' ⊗ a') = conj Ω_J(χ, χ') λ_{χ+χ'} ⊗ aa'`, bilinearly.
pub fn twisted_mul(j: &SkewForm, u: &TwistedElement, v: &TwistedElement) -> Result<TwistedElement> {
    if *u.carrier != *v.carrier {
        return Err(Error::CarrierMismatch(format!("{} vs {}", u.carrier, v.carrier)));
    }
    j.check_dim(u.carrier.dim())?;
    let mut out = TwistedElement::zero(&u.carrier);
    for (chi, a) in &u.terms {
        for (chi2, b) in &v.terms {
            let w = cocycle(j, chi, chi2)?.conj();
            out.push(chi.add(chi2), mul(&u.carrier, a, b)?.scale(w));
        }
    }
    out.finish();
    Ok(out)
}

/// `a ↦ Σ_p λ^Ω_p ⊗ a_p`; multiplicative from `(A, ×_J)`.
pub fn embed_spectral(j: &SkewForm, a: &SpectralElement) -> Result<TwistedElement> {
    j.check_dim(a.carrier().dim())?;
    let mut out = TwistedElement::zero(a.carrier());
    for t in a.terms() {
        let part = SpectralElement::homogeneous(a.carrier(), t.freq.clone(), t.coeff.clone())?;
        out.push(t.freq.clone(), part);
    }
    out.finish();
    Ok(out)
}

/// The operator `α(a)(λ_{-r_Ω(p)} ⊗ 1)` on grid vectors, for `a ∈ A_p`:
/// `ξ ↦ α_{-x}(a) ξ(x + Jp)`, the shift applied as a Fourier phase.
pub fn embed_crossed(j: &SkewForm, a: &SpectralElement, xi: &GridFunction) -> Result<GridFunction> {
    let shift = crossed_shift(j, a)?;
    rep_pi_single(a, &translate_fourier(&shift, xi)?)
}

/// The same operator written as `(λ_{-r_Ω(p)} ⊗ 1) α(a)`.
pub fn embed_crossed_swapped(
    j: &SkewForm,
    a: &SpectralElement,
    xi: &GridFunction,
) -> Result<GridFunction> {
    let shift = crossed_shift(j, a)?;
    translate_fourier(&shift, &rep_pi_single(a, xi)?)
}

fn crossed_shift(j: &SkewForm, a: &SpectralElement) -> Result<Vec<f64>> {
    j.check_dim(a.carrier().dim())?;
    let zero = Frequency::zero(a.carrier().dim());
    let p = if a.is_zero() { &zero } else { a.homogeneous_frequency()? };
    let r = r_omega(j);
    let d = p.dim();
    // λ_{-r(p)} ξ = ξ(· + r(p)), i.e. translation by -r(p)
    Ok((0..d).map(|i| -(0..d).map(|k| r[(i, k)] * p[k]).sum::<f64>()).collect())
}

/// A finite sum `Σ c_χ λ^Ω_χ` in the twisted group algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedOperator {
    dim: usize,
    terms: Vec<(Frequency, Complex64)>,
}

impl TwistedOperator {
    pub fn new(dim: usize, terms: impl IntoIterator<Item = (Frequency, Complex64)>) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().collect();
        if let Some((chi, _)) = terms.iter().find(|(chi, _)| chi.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: chi.dim() });
        }
        Ok(Self::collect(dim, terms))
    }

    // Merges terms whose frequencies agree on the FREQ_EPS lattice.
    fn collect(dim: usize, terms: impl IntoIterator<Item = (Frequency, Complex64)>) -> Self {
        let mut acc: BTreeMap<Vec<i64>, (Frequency, Complex64)> = BTreeMap::new();
        for (chi, c) in terms {
            let key = chi.iter().map(|x| (x / FREQ_EPS).round() as i64).collect();
            acc.entry(key).and_modify(|t| t.1 += c).or_insert((chi, c));
        }
        let terms = acc.into_values().filter(|(_, c)| *c != Complex64::new(0.0, 0.0)).collect();
        TwistedOperator { dim, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Frequency, Complex64)] {
        &self.terms
    }

    /// Coefficient of `λ_χ` (zero when absent).
    pub fn coefficient(&self, chi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .find(|(x, _)| x.iter().zip(chi).all(|(a, b)| (a - b).abs() <= FREQ_EPS))
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }

    /// Twisted product.
    pub fn mul(&self, j: &SkewForm, other: &TwistedOperator) -> Result<TwistedOperator> {
        j.check_dim(self.dim)?;
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut prods = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (chi, c) in &self.terms {
            for (chi2, c2) in &other.terms {
                prods.push((chi.add(chi2), c * c2 * cocycle(j, chi, chi2)?.conj()));
            }
        }
        Ok(Self::collect(self.dim, prods))
    }

    /// `Σ c_χ e(χ·x)`: the function whose Fourier expansion this is when
    /// `J = 0`.
    pub fn expand_at(&self, x: &[f64]) -> Complex64 {
        let terms: Vec<Complex64> = self.terms.iter().map(|(chi, c)| c * e(dot(chi, x))).collect();
        pairwise_sum(&terms)
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A normal functional `ν` on the twisted group algebra, given through its
/// symbol `x ↦ ν(λ^{Ω̄}_x)` and density `g_ν` (with `ĝ_ν = symbol`).
#[derive(Clone)]
pub enum Functional {
    /// The vacuum state for `J² = -π²h²`: `g = (πh)^{-d/2} e^{-|x|²/h}`,
    /// symbol `e^{-π²h|x|²}`.
    Vacuum { h: f64, dim: usize },
    /// `ν = (· ξ, ζ)` for scalar grid vectors.
    Vector(Box<VectorFunctional>),
    /// Closed-form symbol and density.
    Symbolic(SymbolicFunctional),
}

/// Closed-form functional. `radius` bounds the effective support of the
/// density; `norm_bound` is an upper bound for `‖ν‖`.
#[derive(Clone)]
pub struct SymbolicFunctional {
    pub name: String,
    pub dim: usize,
    pub symbol: ScalarFn,
    pub density: ScalarFn,
    pub radius: f64,
    pub norm_bound: f64,
}

/// Vector functional data: the vectors, the form, and `g_ν` sampled on the
/// dual nodes of the vectors' grid.
#[derive(Clone, Debug)]
pub struct VectorFunctional {
    xi: GridFunction,
    zeta: GridFunction,
    j: SkewForm,
    density: Vec<Complex64>,
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Vacuum { h, dim } => write!(f, "Vacuum {{ h: {h}, dim: {dim} }}"),
            Functional::Vector(v) => write!(f, "Vector({:?}, J = {:?})", v.xi.spec(), v.j),
            Functional::Symbolic(s) => write!(f, "Symbolic({}, radius = {})", s.name, s.radius),
        }
    }
}

impl Functional {
    /// The vacuum state; `J` must satisfy `J² = -π²h²·Id`.
    pub fn vacuum(h: f64, j: &SkewForm) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Functional(format!("vacuum needs h > 0, got {h}")));
        }
        let defect = j.vacuum_defect(h);
        if defect > 1e-12 * (PI * PI * h * h).max(1.0) {
            return Err(Error::Functional(format!(
                "J² + π²h² = {defect:e} away from zero; no vacuum state for this J"
            )));
        }
        Ok(Functional::Vacuum { h, dim: j.dim() })
    }

    /// Normalized Gaussian density of width `w`: `g = w^{-d} e^{-π|x|²/w²}`,
    /// symbol `e^{-πw²|x|²}`.
    pub fn gaussian(dim: usize, w: f64) -> Result<Self> {
        Self::modulated_gaussian(vec![0.0; dim], w).map(|f| match f {
            Functional::Symbolic(mut s) => {
                s.name = "gaussian".into();
                Functional::Symbolic(s)
            }
            other => other,
        })
    }

    /// Gaussian density modulated by `e(x·k₀)`; symbol `e^{-πw²|x - k₀|²}`.
    pub fn modulated_gaussian(k0: Vec<f64>, w: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) || k0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Functional(format!("bad gaussian parameters w={w}, k0={k0:?}")));
        }
        let dim = k0.len();
        let k1 = k0.clone();
        let norm = w.powi(-(dim as i32));
        Ok(Functional::Symbolic(SymbolicFunctional {
            name: "modulated-gaussian".into(),
            dim,
            symbol: Arc::new(move |x: &[f64]| {
                let r2: f64 = x.iter().zip(&k0).map(|(a, b)| (a - b) * (a - b)).sum();
                Complex64::new((-PI * w * w * r2).exp(), 0.0)
            }),
            density: Arc::new(move |x: &[f64]| {
                e(dot(x, &k1)) * (norm * (-PI * dot(x, x) / (w * w)).exp())
            }),
            radius: w * (40.0 / PI).sqrt(),
            norm_bound: 1.0,
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Functional::Vacuum { dim, .. } => *dim,
            Functional::Vector(v) => v.j.dim(),
            Functional::Symbolic(s) => s.dim,
        }
    }

    /// `ν(λ^{Ω̄}_x)`.
    pub fn symbol(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        match self {
            Functional::Vacuum { h, .. } => Ok(Complex64::new((-PI * PI * h * dot(x, x)).exp(), 0.0)),
            Functional::Vector(v) => v.symbol(x),
            Functional::Symbolic(s) => Ok((s.symbol)(x)),
        }
    }

    /// `ĝ_ν(z) = ∫ e(-x·z) g_ν(x) dx` by quadrature of the density.
    pub fn density_transform(&self, z: &[f64]) -> Result<Complex64> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        match self {
            Functional::Vacuum { h, .. } => {
                // the density factors over axes, so the tensor rule does too
                let r = (40.0 * h).sqrt();
                let c = 1.0 / (PI * h).sqrt();
                let mut out = ONE;
                for &zi in z {
                    let rule = Rule::symmetric(r, quad_points(r, zi.abs()))?;
                    out *= rule.integrate(|x| e(-x * zi) * (c * (-x * x / h).exp()));
                }
                Ok(out)
            }
            Functional::Vector(v) => Ok(v.density_transform(z)),
            Functional::Symbolic(s) => {
                let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let rule = Rule::symmetric(s.radius, quad_points(s.radius, zmax))?;
                let val = tensor_integrate(&rule, s.dim, |x| e(-dot(x, z)) * (s.density)(x));
                if !(val.re.is_finite() && val.im.is_finite()) {
                    return Err(Error::Functional(format!("density of {} is not integrable", s.name)));
                }
                Ok(val)
            }
        }
    }

    /// Upper bound for `‖ν‖`.
    pub fn norm_bound(&self) -> f64 {
        match self {
            Functional::Vacuum { .. } => 1.0,
            Functional::Vector(v) => v.xi.norm_l2() * v.zeta.norm_l2(),
            Functional::Symbolic(s) => s.norm_bound,
        }
    }

    pub fn as_vector(&self) -> Option<&VectorFunctional> {
        match self {
            Functional::Vector(v) => Some(v),
            _ => None,
        }
    }
}

fn quad_points(r: f64, freq: f64) -> usize {
    // 16-point panels, at least four per unit of decay scale and two per oscillation
    let by_width = 64.0 * r;
    let by_osc = 32.0 * r * freq;
    (by_width.max(by_osc).ceil() as usize).max(128)
}

impl VectorFunctional {
    pub fn xi(&self) -> &GridFunction {
        &self.xi
    }

    pub fn zeta(&self) -> &GridFunction {
        &self.zeta
    }

    pub fn form(&self) -> &SkewForm {
        &self.j
    }

    /// `g_ν` at the dual nodes of the grid.
    pub fn density_samples(&self) -> &[Complex64] {
        &self.density
    }

    /// `∫ ξ(y - x) conj ζ(y) e(x·Jy) dy` on the grid, with `ξ(· - x)` by Fourier phase.
    pub fn symbol(&self, x: &[f64]) -> Result<Complex64> {
        let spec = *self.xi.spec();
        let shifted = scalar_values(&translate_fourier(x, &self.xi)?);
        let zeta = scalar_values(&self.zeta);
        let cell = spec.cell();
        let terms: Vec<Complex64> = (0..spec.len())
            .map(|i| {
                let y = spec.node(i);
                shifted[i] * zeta[i].conj() * e(dot(x, &self.j.apply(&y))) * cell
            })
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// Dual-lattice Riemann sum `L^{-d} Σ_k e(-k·z) g_ν(k)`.
    pub fn density_transform(&self, z: &[f64]) -> Complex64 {
        let spec = *self.xi.spec();
        let w = spec.dual_cell();
        let terms: Vec<Complex64> = (0..spec.len())
            .map(|i| e(-dot(&spec.dual_node(i), z)) * self.density[i] * w)
            .collect();
        pairwise_sum(&terms)
    }
}

fn edge_ratio(spec: &GridSpec, values: &[Complex64]) -> f64 {
    let max = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let edge = (0..spec.len())
        .filter(|&i| spec.multi_index(i).contains(&0))
        .map(|i| values[i].norm())
        .fold(0.0, f64::max);
    edge / max
}

/// `ν = (· ξ, ζ)` with
/// `g_ν(x) = ∫ ξ̂(x + Jy) conj ζ(y) e(x·y) dy` sampled at the dual nodes.
///
/// Each `ξ̂(k + Jy)` row for a fixed node `y` is one transform of
/// `ξ(w) e(-Jy·w)`; the `y`-integral is the grid sum. Vectors whose values or
/// transforms do not decay to [`DECAY_TOL`] at the edge of the box are rejected.
pub fn vector_functional(xi: &GridFunction, zeta: &GridFunction, j: &SkewForm) -> Result<Functional> {
    for (name, v) in [("xi", xi), ("zeta", zeta)] {
        if !matches!(v.carrier().kind(), CarrierKind::Scalar) {
            return Err(Error::Functional(format!("{name} must be scalar-valued")));
        }
        v.require(Domain::Position)?;
    }
    xi.check_compatible(zeta)?;
    let spec = *xi.spec();
    j.check_dim(spec.dim())?;
    let xs = scalar_values(xi);
    let zs = scalar_values(zeta);
    for (name, v) in [("xi", xi), ("zeta", zeta)] {
        let vals = scalar_values(v);
        let hat = scalar_values(&fourier(v)?);
        let (a, b) = (edge_ratio(&spec, &vals), edge_ratio(&spec, &hat));
        if a > DECAY_TOL || b > DECAY_TOL {
            return Err(Error::Functional(format!(
                "{name} does not decay inside the grid box (edge ratio {:e} in position, {:e} in frequency)",
                a, b
            )));
        }
    }
    let len = spec.len();
    let nodes = spec.nodes();
    let duals = spec.dual_nodes();
    let cell = spec.cell();
    // per dual node k: Σ_y ξ̂(k + Jy) conj ζ(y) e(k·y) Δ^d
    let mut acc = vec![Vec::with_capacity(len); len];
    let mut row = vec![Complex64::new(0.0, 0.0); len];
    for (y, yv) in nodes.iter().enumerate() {
        if zs[y] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let jy = j.apply(yv);
        for (i, w) in nodes.iter().enumerate() {
            row[i] = xs[i] * e(-dot(&jy, w));
        }
        transform_planes(&spec, &mut row, true);
        let zc = zs[y].conj() * cell;
        for (k, kv) in duals.iter().enumerate() {
            acc[k].push(row[k] * zc * e(dot(kv, yv)));
        }
    }
    let density = acc.iter().map(|t| pairwise_sum(t)).collect();
    Ok(Functional::Vector(Box::new(VectorFunctional {
        xi: xi.clone(),
        zeta: zeta.clone(),
        j: j.clone(),
        density,
    })))
}

/// `T_ν(f) = Σ_χ f̂(χ) ν(λ^{Ω̄}_χ) λ^Ω_χ L^{-d}` over the dual nodes.
pub fn t_nu(j: &SkewForm, nu: &Functional, f: &GridFunction) -> Result<TwistedOperator> {
    if !matches!(f.carrier().kind(), CarrierKind::Scalar) {
        return Err(Error::Functional("T_ν takes scalar functions".into()));
    }
    let spec = *f.spec();
    j.check_dim(spec.dim())?;
    let fh = scalar_values(&fourier(f)?);
    let w = spec.dual_cell();
    let mut terms = Vec::with_capacity(spec.len());
    for (i, c) in fh.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let chi = spec.dual_node(i);
        let s = nu.symbol(&chi)?;
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::Functional(format!("symbol not finite at {chi:?}")));
        }
        terms.push((Frequency::new(chi), c * s * w));
    }
    TwistedOperator::new(spec.dim(), terms)
}

/// `Φ_ν(a) = ∫ α_x(a) g_ν(x) dx`: each term `(z, u)` is scaled by `ĝ_ν(z)`.
pub fn phi_nu(nu: &Functional, a: &SpectralElement) -> Result<SpectralElement> {
    let c = a.carrier();
    if c.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: nu.dim(), got: c.dim() });
    }
    let mut terms = Vec::with_capacity(a.terms().len());
    for t in a.terms() {
        let w = nu.density_transform(&t.freq)?;
        terms.push(crate::Term { freq: t.freq.clone(), coeff: &t.coeff * w });
    }
    SpectralElement::from_terms(c, terms)
}

/// Smallest eigenvalue of the Choi matrix `Σ_jk E_jk ⊗ Φ_ν(E_jk)` of `Φ_ν` on
/// a matrix carrier with at most 8 levels.
pub fn choi_check(nu: &Functional, c: &Arc<Carrier>) -> Result<f64> {
    let n = match c.kind() {
        CarrierKind::Matrix { h } if h.len() <= 8 => h.len(),
        CarrierKind::Matrix { h } => {
            return Err(Error::InvalidParameter(format!("Choi check needs n ≤ 8, got {}", h.len())))
        }
        _ => return Err(Error::InvalidCarrier("Choi check needs a matrix carrier".into())),
    };
    let mut choi = DMatrix::<Complex64>::zeros(n * n, n * n);
    for j in 0..n {
        for k in 0..n {
            let mut unit = DMatrix::zeros(n, n);
            unit[(j, k)] = ONE;
            let image = phi_nu(nu, &decompose(c, &unit)?)?.reassemble();
            for a in 0..n {
                for b in 0..n {
                    choi[(j * n + a, k * n + b)] = image[(a, b)];
                }
            }
        }
    }
    // symmetrize against quadrature roundoff before the Hermitian solver
    let herm = (&choi + choi.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `max ‖Φ_ν(a)‖_op / (‖ν‖ ‖a‖_op)` over the sample matrices; at most 1 when
/// the cb-norm bound holds.
pub fn norm_ratio(nu: &Functional, c: &Arc<Carrier>, samples: &[DMatrix<Complex64>]) -> Result<f64> {
    let bound = nu.norm_bound();
    let mut worst: f64 = 0.0;
    for m in samples {
        let a = decompose(c, m)?;
        let image = phi_nu(nu, &a)?.reassemble();
        let na = m.clone().singular_values().max();
        if na == 0.0 {
            continue;
        }
        let ni = image.singular_values().max();
        worst = worst.max(ni / (bound * na));
    }
    Ok(worst)
}

/// `max (‖Φ_ν(a)‖_op - ‖ν‖ ‖a‖_op)` over the sample matrices; non-positive
/// when the cb-norm bound holds.
pub fn norm_excess(nu: &Functional, c: &Arc<Carrier>, samples: &[DMatrix<Complex64>]) -> Result<f64> {
    let bound = nu.norm_bound();
    let mut worst = f64::NEG_INFINITY;
    for m in samples {
        let image = phi_nu(nu, &decompose(c, m)?)?.reassemble();
        let na = m.clone().singular_values().max();
        worst = worst.max(image.singular_values().max() - bound * na);
    }
    Ok(worst)
}

/// `α_x` applied to each algebra part of a twisted element (used to check that
/// the embedding intertwines `α` with the action on the algebra factor).
pub fn act_twisted(x: &[f64], u: &TwistedElement) -> Result<TwistedElement> {
    let mut out = TwistedElement::zero(&u.carrier);
    for (chi, a) in &u.terms {
        out.push(chi.clone(), act(&u.carrier, x, a)?);
    }
    out.finish();
    Ok(out)
}
