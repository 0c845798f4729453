//! Homogeneous algebra backends.
//!
//! A [`Carrier`] is a finite model of a Fréchet algebra `A` with an
//! almost periodic action of `R^d`. Every element is stored as a finite sum of
//! homogeneous terms `(p, u)`, where `u` lies in the spectral subspace
//! `A_p = { a : α_x(a) = e(-x·p) a }`.
//!
//! * `Matrix`: `M_n(C)` with `α_x = Ad diag(e(x·h_1), …, e(x·h_n))`, so the
//!   matrix unit `E_jk` is homogeneous of frequency `h_k - h_j`.
//! * `Torus`: trigonometric polynomials `Σ c_p u_p` over a frequency lattice,
//!   with `u_p u_q = u_{p+q}`.
//! * `Scalar`: `C` with the trivial action.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{dot, e, Error, Result};

/// Tolerance used to identify frequencies on carriers without a lattice.
pub const FREQ_EPS: f64 = 1e-9;

/// A spectral label `p ∈ R^d`, dual to `V` under `e(x·p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frequency(Vec<f64>);

impl Frequency {
    pub fn new(components: impl Into<Vec<f64>>) -> Self {
        Frequency(components.into())
    }

    pub fn zero(d: usize) -> Self {
        Frequency(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn add(&self, other: &Frequency) -> Frequency {
        Frequency(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Frequency) -> Frequency {
        Frequency(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Frequency {
        Frequency(self.0.iter().map(|a| -a).collect())
    }

    pub fn max_abs_diff(&self, other: &Frequency) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn lex_cmp(&self, other: &Frequency) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl std::ops::Deref for Frequency {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Frequency {
    fn from(v: Vec<f64>) -> Self {
        Frequency(v)
    }
}

impl From<&[f64]> for Frequency {
    fn from(v: &[f64]) -> Self {
        Frequency(v.to_vec())
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CarrierKind {
    /// `M_n(C)` in the eigenbasis of the action, with eigenfrequencies `h_j`.
    Matrix { h: Vec<Frequency> },
    /// Trigonometric polynomials whose frequencies are integer combinations of `basis`.
    Torus { basis: Vec<Frequency> },
    Scalar,
}

/// A finite model of `(A, α)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Carrier {
    dim: usize,
    kind: CarrierKind,
    /// Side length `L` of the commensuration lattice `(1/L) Z^d`, if any.
    lattice: Option<f64>,
    /// Inverse of the torus basis matrix (columns = basis vectors).
    basis_inv: Option<DMatrix<f64>>,
}

impl Carrier {
    /// `M_n(C)` with `α_x = Ad diag(e(x·h_j))`.
    ///
    /// Eigenfrequencies closer than [`FREQ_EPS`] are merged. With a lattice the
    /// `h_j` must lie on `(1/L) Z^d` and are snapped to it.
    pub fn matrix(h: Vec<Vec<f64>>, lattice: Option<f64>) -> Result<Arc<Carrier>> {
        if h.is_empty() {
            return Err(Error::InvalidCarrier("matrix carrier needs n >= 1".into()));
        }
        let d = h[0].len();
        if d == 0 {
            return Err(Error::InvalidCarrier("dimension d must be >= 1".into()));
        }
        check_lattice(lattice)?;
        let mut hs: Vec<Frequency> = Vec::with_capacity(h.len());
        for v in h {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidCarrier("non-finite eigenfrequency".into()));
            }
            let mut f = Frequency(v);
            if let Some(l) = lattice {
                f = snap_checked(&f, l)?;
            }
            if let Some(prev) = hs.iter().find(|g| g.max_abs_diff(&f) <= FREQ_EPS) {
                f = prev.clone();
            }
            hs.push(f);
        }
        Ok(Arc::new(Carrier { dim: d, kind: CarrierKind::Matrix { h: hs }, lattice, basis_inv: None }))
    }

    /// Trigonometric polynomials on a torus with the given frequency lattice basis
    /// (`d` linearly independent vectors).
    pub fn torus(basis: Vec<Vec<f64>>, lattice: Option<f64>) -> Result<Arc<Carrier>> {
        let d = basis.len();
        if d == 0 {
            return Err(Error::InvalidCarrier("torus basis is empty".into()));
        }
        check_lattice(lattice)?;
        let mut b = DMatrix::<f64>::zeros(d, d);
        let mut fs = Vec::with_capacity(d);
        for (col, v) in basis.into_iter().enumerate() {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
            let mut f = Frequency(v);
            if let Some(l) = lattice {
                f = snap_checked(&f, l)?;
            }
            for (row, x) in f.iter().enumerate() {
                b[(row, col)] = *x;
            }
            fs.push(f);
        }
        let inv = b
            .try_inverse()
            .ok_or_else(|| Error::InvalidCarrier("torus basis is singular".into()))?;
        Ok(Arc::new(Carrier {
            dim: d,
            kind: CarrierKind::Torus { basis: fs },
            lattice,
            basis_inv: Some(inv),
        }))
    }

    /// The standard torus `T^d`: generators `u_i` of frequency `e_i`.
    pub fn standard_torus(d: usize) -> Result<Arc<Carrier>> {
        let basis = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Carrier::torus(basis, Some(1.0))
    }

    pub fn scalar(d: usize) -> Result<Arc<Carrier>> {
        if d == 0 {
            return Err(Error::InvalidCarrier("dimension d must be >= 1".into()));
        }
        Ok(Arc::new(Carrier { dim: d, kind: CarrierKind::Scalar, lattice: None, basis_inv: None }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &CarrierKind {
        &self.kind
    }

    pub fn lattice(&self) -> Option<f64> {
        self.lattice
    }

    /// Size of coefficient matrices: `n` for `M_n`, 1 otherwise.
    pub fn coeff_size(&self) -> usize {
        match &self.kind {
            CarrierKind::Matrix { h } => h.len(),
            _ => 1,
        }
    }

    /// Frequency of the matrix unit `E_jk`, i.e. `h_k - h_j` (zero for 1×1 carriers).
    pub fn entry_frequency(&self, j: usize, k: usize) -> Frequency {
        match &self.kind {
            CarrierKind::Matrix { h } => self.canonical(&h[k].sub(&h[j])),
            _ => Frequency::zero(self.dim),
        }
    }

    /// Canonical representative of a frequency (lattice rounding when a lattice is declared).
    pub fn canonical(&self, p: &Frequency) -> Frequency {
        match self.lattice {
            Some(l) => snap(p, l),
            None => p.clone(),
        }
    }

    /// Whether two canonical frequencies label the same spectral subspace.
    pub fn same_frequency(&self, p: &Frequency, q: &Frequency) -> bool {
        match self.lattice {
            Some(_) => p == q,
            None => p.max_abs_diff(q) <= FREQ_EPS,
        }
    }

    /// Checks that `p` is a possible spectral label for this carrier.
    pub fn check_frequency(&self, p: &Frequency) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: p.dim() });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidElement("non-finite frequency".into()));
        }
        if let Some(l) = self.lattice {
            snap_checked(p, l).map_err(|_| {
                Error::InvalidElement(format!("frequency {p} is off the lattice (1/{l})Z^d"))
            })?;
        }
        match &self.kind {
            CarrierKind::Scalar => {
                if p.iter().any(|x| x.abs() > FREQ_EPS) {
                    return Err(Error::InvalidElement(format!(
                        "scalar carrier has only frequency 0, got {p}"
                    )));
                }
            }
            CarrierKind::Torus { .. } => {
                let inv = self.basis_inv.as_ref().expect("torus carries its basis inverse");
                for row in 0..self.dim {
                    let c: f64 = (0..self.dim).map(|col| inv[(row, col)] * p[col]).sum();
                    if (c - c.round()).abs() > FREQ_EPS {
                        return Err(Error::InvalidElement(format!(
                            "frequency {p} is not in the torus frequency lattice"
                        )));
                    }
                }
            }
            CarrierKind::Matrix { .. } => {}
        }
        Ok(())
    }

    fn check_term(&self, t: &Term) -> Result<()> {
        self.check_frequency(&t.freq)?;
        let n = self.coeff_size();
        if t.coeff.nrows() != n || t.coeff.ncols() != n {
            return Err(Error::InvalidElement(format!(
                "coefficient is {}x{}, carrier needs {n}x{n}",
                t.coeff.nrows(),
                t.coeff.ncols()
            )));
        }
        if let CarrierKind::Matrix { .. } = self.kind {
            for j in 0..n {
                for k in 0..n {
                    let z = t.coeff[(j, k)];
                    if z != Complex64::new(0.0, 0.0)
                        && !self.same_frequency(&self.entry_frequency(j, k), &t.freq)
                    {
                        return Err(Error::InvalidElement(format!(
                            "entry ({j},{k}) has frequency {} but sits in the term at {}",
                            self.entry_frequency(j, k),
                            t.freq
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The matrix unit `E_jk` as a homogeneous element.
    pub fn matrix_unit(self: &Arc<Self>, j: usize, k: usize) -> Result<SpectralElement> {
        let n = self.coeff_size();
        if !matches!(self.kind, CarrierKind::Matrix { .. }) || j >= n || k >= n {
            return Err(Error::InvalidParameter(format!("no matrix unit E_{j}{k} on this carrier")));
        }
        let mut m = DMatrix::zeros(n, n);
        m[(j, k)] = Complex64::new(1.0, 0.0);
        SpectralElement::homogeneous(self, self.entry_frequency(j, k), m)
    }

    /// The torus monomial `u_p`.
    pub fn monomial(self: &Arc<Self>, p: impl Into<Frequency>) -> Result<SpectralElement> {
        SpectralElement::homogeneous(self, p.into(), DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)))
    }

    /// The `i`-th torus generator `u_i`.
    pub fn generator(self: &Arc<Self>, i: usize) -> Result<SpectralElement> {
        match &self.kind {
            CarrierKind::Torus { basis } if i < basis.len() => self.monomial(basis[i].clone()),
            _ => Err(Error::InvalidParameter(format!("no torus generator {i} on this carrier"))),
        }
    }

    /// `z·1`.
    pub fn scalar_element(self: &Arc<Self>, z: Complex64) -> SpectralElement {
        let n = self.coeff_size();
        SpectralElement {
            carrier: self.clone(),
            terms: vec![Term {
                freq: Frequency::zero(self.dim),
                coeff: DMatrix::from_diagonal_element(n, n, z),
            }],
        }
    }

    /// Distinct frequencies carried by matrix entries (the point spectrum of `α`).
    pub fn spectrum(&self) -> Vec<Frequency> {
        let n = self.coeff_size();
        let mut out: Vec<Frequency> = Vec::new();
        for j in 0..n {
            for k in 0..n {
                let p = self.entry_frequency(j, k);
                if !out.iter().any(|q| self.same_frequency(q, &p)) {
                    out.push(p);
                }
            }
        }
        out.sort_by(|a, b| a.lex_cmp(b));
        out
    }
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[Frequency]| {
            v.iter()
                .map(|p| p.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(","))
                .collect::<Vec<_>>()
                .join(";")
        };
        match &self.kind {
            CarrierKind::Matrix { h } => write!(f, "matrix d={} h={}", self.dim, list(h))?,
            CarrierKind::Torus { basis } => write!(f, "torus d={} basis={}", self.dim, list(basis))?,
            CarrierKind::Scalar => write!(f, "scalar d={}", self.dim)?,
        }
        if let Some(l) = self.lattice {
            write!(f, " lattice={l:.16e}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Carrier {
    type Err = Error;

    /// Parses the textual descriptor produced by `Display`.
    fn from_str(s: &str) -> Result<Carrier> {
        let bad = |m: &str| Error::InvalidCarrier(format!("descriptor '{s}': {m}"));
        let mut words = s.split_whitespace();
        let kind = words.next().ok_or_else(|| bad("empty"))?;
        let (mut d, mut vecs, mut lattice) = (None, None, None);
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            match k {
                "d" => d = Some(v.parse::<usize>().map_err(|_| bad("bad d"))?),
                "h" | "basis" => {
                    let rows: std::result::Result<Vec<Vec<f64>>, _> = v
                        .split(';')
                        .map(|r| r.split(',').map(str::parse::<f64>).collect())
                        .collect();
                    vecs = Some(rows.map_err(|_| bad("bad vector list"))?);
                }
                "lattice" => lattice = Some(v.parse::<f64>().map_err(|_| bad("bad lattice"))?),
                _ => return Err(bad(&format!("unknown key '{k}'"))),
            }
        }
        let c = match kind {
            "matrix" => Carrier::matrix(vecs.ok_or_else(|| bad("missing h"))?, lattice)?,
            "torus" => Carrier::torus(vecs.ok_or_else(|| bad("missing basis"))?, lattice)?,
            "scalar" => Carrier::scalar(d.ok_or_else(|| bad("missing d"))?)?,
            _ => return Err(bad("unknown kind")),
        };
        Ok(Arc::try_unwrap(c).unwrap_or_else(|a| (*a).clone()))
    }
}

fn check_lattice(lattice: Option<f64>) -> Result<()> {
    match lattice {
        Some(l) if !(l.is_finite() && l > 0.0) => {
            Err(Error::InvalidCarrier(format!("lattice side must be positive, got {l}")))
        }
        _ => Ok(()),
    }
}

fn snap(p: &Frequency, l: f64) -> Frequency {
    Frequency(p.iter().map(|x| (x * l).round() / l).collect())
}

fn snap_checked(p: &Frequency, l: f64) -> Result<Frequency> {
    for x in p.iter() {
        let s = x * l;
        if (s - s.round()).abs() > FREQ_EPS * l.max(1.0) {
            return Err(Error::InvalidCarrier(format!("{x} is not a multiple of 1/{l}")));
        }
    }
    Ok(snap(p, l))
}

/// One homogeneous term `(p, u)` with `u ∈ A_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub freq: Frequency,
    pub coeff: DMatrix<Complex64>,
}

/// A finite sum of homogeneous terms with pairwise distinct frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralElement {
    carrier: Arc<Carrier>,
    terms: Vec<Term>,
}

impl SpectralElement {
    pub fn zero(carrier: &Arc<Carrier>) -> Self {
        SpectralElement { carrier: carrier.clone(), terms: Vec::new() }
    }

    pub fn homogeneous(
        carrier: &Arc<Carrier>,
        freq: Frequency,
        coeff: DMatrix<Complex64>,
    ) -> Result<Self> {
        Self::from_terms(carrier, [Term { freq, coeff }])
    }

    /// Builds an element from arbitrary terms, merging equal frequencies.
    pub fn from_terms(
        carrier: &Arc<Carrier>,
        terms: impl IntoIterator<Item = Term>,
    ) -> Result<Self> {
        let mut out = SpectralElement::zero(carrier);
        for t in terms {
            carrier.check_term(&t)?;
            out.push(t.freq, t.coeff);
        }
        out.finish();
        Ok(out)
    }

    pub fn carrier(&self) -> &Arc<Carrier> {
        &self.carrier
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The frequency of a single-term element.
    pub fn homogeneous_frequency(&self) -> Result<&Frequency> {
        match self.terms.as_slice() {
            [t] => Ok(&t.freq),
            ts => Err(Error::NotHomogeneous { terms: ts.len() }),
        }
    }

    /// Coefficient at frequency `p` (zero when absent).
    pub fn component(&self, p: &Frequency) -> DMatrix<Complex64> {
        let p = self.carrier.canonical(p);
        self.terms
            .iter()
            .find(|t| self.carrier.same_frequency(&t.freq, &p))
            .map(|t| t.coeff.clone())
            .unwrap_or_else(|| {
                let n = self.carrier.coeff_size();
                DMatrix::zeros(n, n)
            })
    }

    // Unchecked accumulation; callers guarantee the carrier invariant.
    pub(crate) fn push(&mut self, freq: Frequency, coeff: DMatrix<Complex64>) {
        let freq = self.carrier.canonical(&freq);
        if let Some(t) = self.terms.iter_mut().find(|t| self.carrier.same_frequency(&t.freq, &freq)) {
            t.coeff += coeff;
        } else {
            self.terms.push(Term { freq, coeff });
        }
    }

    pub(crate) fn finish(&mut self) {
        let zero = Complex64::new(0.0, 0.0);
        self.terms.retain(|t| t.coeff.iter().any(|z| *z != zero));
        self.terms.sort_by(|a, b| a.freq.lex_cmp(&b.freq));
    }

    pub(crate) fn from_parts_unchecked(carrier: &Arc<Carrier>, terms: Vec<Term>) -> Self {
        let mut out = SpectralElement::zero(carrier);
        for t in terms {
            out.push(t.freq, t.coeff);
        }
        out.finish();
        out
    }

    fn check_same_carrier(&self, other: &SpectralElement) -> Result<()> {
        if Arc::ptr_eq(&self.carrier, &other.carrier) || *self.carrier == *other.carrier {
            Ok(())
        } else {
            Err(Error::CarrierMismatch(format!("{} vs {}", self.carrier, other.carrier)))
        }
    }

    pub(crate) fn check_carrier(&self, c: &Carrier) -> Result<()> {
        if *self.carrier == *c {
            Ok(())
        } else {
            Err(Error::CarrierMismatch(format!("element lives on {}, expected {c}", self.carrier)))
        }
    }

    pub fn add(&self, other: &SpectralElement) -> Result<SpectralElement> {
        self.check_same_carrier(other)?;
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.freq.clone(), t.coeff.clone());
        }
        out.finish();
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralElement) -> Result<SpectralElement> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: Complex64) -> SpectralElement {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= z;
        }
        out.finish();
        out
    }

    /// Entrywise conjugate transpose; frequencies flip sign.
    pub fn adjoint(&self) -> SpectralElement {
        let terms = self
            .terms
            .iter()
            .map(|t| Term { freq: t.freq.neg(), coeff: t.coeff.adjoint() })
            .collect();
        SpectralElement::from_parts_unchecked(&self.carrier, terms)
    }

    /// Largest coefficient modulus over all terms.
    pub fn max_abs(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| t.coeff.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |self - other|` over coefficients of matching frequencies.
    pub fn max_abs_diff(&self, other: &SpectralElement) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Sum of all coefficients: the underlying matrix of a `Matrix` carrier element.
    pub fn reassemble(&self) -> DMatrix<Complex64> {
        let n = self.carrier.coeff_size();
        self.terms.iter().fold(DMatrix::zeros(n, n), |acc, t| acc + &t.coeff)
    }
}

/// `α_x(a)`: the term `(p, u)` becomes `(p, e(-x·p) u)`.
pub fn act(c: &Carrier, x: &[f64], a: &SpectralElement) -> Result<SpectralElement> {
    a.check_carrier(c)?;
    if x.len() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: x.len() });
    }
    let mut out = a.clone();
    for t in &mut out.terms {
        t.coeff *= e(-dot(x, &t.freq));
    }
    Ok(out)
}

/// Undeformed product; `(p, u)(q, v) = (p + q, uv)`.
pub fn mul(c: &Carrier, a: &SpectralElement, b: &SpectralElement) -> Result<SpectralElement> {
    a.check_carrier(c)?;
    b.check_carrier(c)?;
    Ok(product_with_phase(a, b, |_, _| Complex64::new(1.0, 0.0)))
}

/// Bilinear product with a scalar phase on each pair of frequencies.
pub(crate) fn product_with_phase(
    a: &SpectralElement,
    b: &SpectralElement,
    phase: impl Fn(&Frequency, &Frequency) -> Complex64,
) -> SpectralElement {
    let mut out = SpectralElement::zero(&a.carrier);
    for s in &a.terms {
        for t in &b.terms {
            let coeff = (&s.coeff * &t.coeff) * phase(&s.freq, &t.freq);
            out.push(s.freq.add(&t.freq), coeff);
        }
    }
    out.finish();
    out
}

/// Splits a raw matrix into its spectral components `Σ_{h_k - h_j = p} m_jk E_jk`.
pub fn decompose(c: &Arc<Carrier>, m: &DMatrix<Complex64>) -> Result<SpectralElement> {
    let n = match c.kind() {
        CarrierKind::Matrix { h } => h.len(),
        _ => return Err(Error::InvalidCarrier("decompose needs a matrix carrier".into())),
    };
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows().max(m.ncols()) });
    }
    let mut out = SpectralElement::zero(c);
    for j in 0..n {
        for k in 0..n {
            let mut u = DMatrix::zeros(n, n);
            u[(j, k)] = m[(j, k)];
            out.push(c.entry_frequency(j, k), u);
        }
    }
    out.finish();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn m2() -> Arc<Carrier> {
        Carrier::matrix(vec![vec![0.0], vec![0.5]], None).unwrap()
    }

    #[test]
    fn matrix_unit_frequency() {
        let car = m2();
        let e12 = car.matrix_unit(0, 1).unwrap();
        assert_eq!(e12.homogeneous_frequency().unwrap().as_slice(), &[0.5]);
        let e21 = car.matrix_unit(1, 0).unwrap();
        assert_eq!(e21.homogeneous_frequency().unwrap().as_slice(), &[-0.5]);
    }

    #[test]
    fn one_by_one_matrix_carrier_is_trivial() {
        let car = Carrier::matrix(vec![vec![0.37, -1.2]], None).unwrap();
        assert_eq!(car.spectrum(), vec![Frequency::zero(2)]);
        let a = car.scalar_element(c(2.0, 1.0));
        assert_eq!(act(&car, &[3.1, 0.4], &a).unwrap(), a);
    }

    #[test]
    fn lattice_carrier_frequencies() {
        let car = Carrier::matrix(vec![vec![0.0, 0.0], vec![0.75, 0.25]], Some(4.0)).unwrap();
        for p in car.spectrum() {
            for x in p.iter() {
                assert_eq!((x * 4.0).fract(), 0.0);
            }
        }
        assert!(Carrier::matrix(vec![vec![0.0, 0.0], vec![0.3, 0.25]], Some(4.0)).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(Carrier::matrix(vec![], None).is_err());
        assert!(matches!(
            Carrier::matrix(vec![vec![0.0], vec![0.0, 1.0]], None),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Carrier::torus(vec![vec![1.0, 0.0], vec![2.0, 0.0]], None).is_err());
    }

    #[test]
    fn near_degenerate_eigenfrequencies_merge() {
        let car = Carrier::matrix(vec![vec![0.25], vec![0.25 + 1e-12]], None).unwrap();
        assert_eq!(car.spectrum(), vec![Frequency::zero(1)]);
    }

    #[test]
    fn act_flips_sign_at_half_frequency() {
        let car = m2();
        let e12 = car.matrix_unit(0, 1).unwrap();
        let out = act(&car, &[1.0], &e12).unwrap();
        let z = out.component(&Frequency::new(vec![0.5]))[(0, 1)];
        assert!((z - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(act(&car, &[0.0], &e12).unwrap(), e12);
        let diag = car.scalar_element(c(0.3, 0.7));
        assert_eq!(act(&car, &[0.123], &diag).unwrap(), diag);
    }

    #[test]
    fn matrix_units_multiply() {
        let car = m2();
        let e12 = car.matrix_unit(0, 1).unwrap();
        let e21 = car.matrix_unit(1, 0).unwrap();
        let p = mul(&car, &e12, &e21).unwrap();
        assert_eq!(p, car.matrix_unit(0, 0).unwrap());
        assert!(p.homogeneous_frequency().unwrap().is_zero());
        // E12·E12 = 0 leaves no term at frequency 1.
        assert!(mul(&car, &e12, &e12).unwrap().is_zero());
        assert!(mul(&car, &e12, &SpectralElement::zero(&car)).unwrap().is_zero());
    }

    #[test]
    fn torus_generators_multiply() {
        let t = Carrier::standard_torus(2).unwrap();
        let u1 = t.generator(0).unwrap();
        let u2 = t.generator(1).unwrap();
        let p = mul(&t, &u1, &u2).unwrap();
        assert_eq!(p.homogeneous_frequency().unwrap().as_slice(), &[1.0, 1.0]);
        assert!(t.monomial(vec![0.5, 0.0]).is_err());
    }

    #[test]
    fn carrier_mismatch_is_rejected() {
        let a = m2().matrix_unit(0, 1).unwrap();
        let t = Carrier::standard_torus(1).unwrap();
        assert!(matches!(mul(&t, &a, &a), Err(Error::CarrierMismatch(_))));
        assert!(act(&t, &[0.0], &a).is_err());
    }

    #[test]
    fn decompose_groups_by_frequency() {
        let car = m2();
        let diag = DMatrix::from_diagonal(&nalgebra::dvector![c(1.0, 0.0), c(2.0, -1.0)]);
        let d = decompose(&car, &diag).unwrap();
        assert_eq!(d.terms().len(), 1);
        assert!(d.terms()[0].freq.is_zero());

        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        let d = decompose(&car, &m).unwrap();
        assert_eq!(d, car.matrix_unit(0, 1).unwrap());
        assert!(decompose(&car, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn invalid_support_is_rejected() {
        let car = m2();
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(SpectralElement::homogeneous(&car, Frequency::zero(1), m).is_err());
    }

    #[test]
    fn descriptor_roundtrip() {
        let car = Carrier::matrix(vec![vec![0.0, 0.0], vec![0.75, 0.25]], Some(4.0)).unwrap();
        let back: Carrier = car.to_string().parse().unwrap();
        assert_eq!(back, *car);
        let t = Carrier::standard_torus(2).unwrap();
        assert_eq!(t.to_string().parse::<Carrier>().unwrap(), *t);
        let s = Carrier::scalar(3).unwrap();
        assert_eq!(s.to_string().parse::<Carrier>().unwrap(), *s);
    }
}
