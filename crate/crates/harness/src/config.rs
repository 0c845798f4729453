//! Scenario files.
//!
//! A config is TOML with three kinds of array tables: `[[scenario]]` for
//! `verify`, `[[moyal]]` for `moyal` and `[[sweep]]` for `sweep`. The schema is
//! documented in the book chapter on the harness. Everything is validated up
//! front; errors carry the line of the offending key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rieffel::grid::{read_csv, sample_scalar};
use rieffel::{dot, e, vector_functional, Carrier, CarrierKind, Complex64, Functional, GridFunction, GridSpec, SkewForm};
use serde::Deserialize;
use toml::Spanned;

/// Built-in scenario set; covers every acceptance criterion.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}: `{key}`: {msg}")]
    Invalid { line: usize, key: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Lattice frequencies and band-limited probes: discrete identities are exact.
    Commensurate,
    /// Gaussian probes on any carrier; errors are resolution limited.
    Tolerance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Theorem1,
    ThetaInverse,
    Homomorphism,
    DualIntertwine,
    KasprzakEmbed,
    Proposition,
    Vacuum,
    Choi,
    Moyal,
    Nctorus,
    OracleConvergence,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::Theorem1,
        Check::ThetaInverse,
        Check::Homomorphism,
        Check::DualIntertwine,
        Check::KasprzakEmbed,
        Check::Proposition,
        Check::Vacuum,
        Check::Choi,
        Check::Moyal,
        Check::Nctorus,
        Check::OracleConvergence,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Check::Theorem1 => "theorem1",
            Check::ThetaInverse => "theta-inverse",
            Check::Homomorphism => "homomorphism",
            Check::DualIntertwine => "dual-intertwine",
            Check::KasprzakEmbed => "kasprzak-embed",
            Check::Proposition => "proposition",
            Check::Vacuum => "vacuum",
            Check::Choi => "choi",
            Check::Moyal => "moyal",
            Check::Nctorus => "nctorus",
            Check::OracleConvergence => "oracle-convergence",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.id() == s)
    }
}

/// A declared functional with the flags the checks need.
#[derive(Clone, Debug)]
pub struct FunctionalDecl {
    pub label: String,
    pub functional: Functional,
    /// `ν` is a positive functional, so `Φ_ν` should be completely positive.
    pub positive: bool,
    /// Density known in closed form (tighter Choi threshold).
    pub closed_form: bool,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub checks: Vec<Check>,
    pub mode: Mode,
    pub seed: u64,
    pub probes: usize,
    pub j: SkewForm,
    pub grid: GridSpec,
    pub carrier: Arc<Carrier>,
    pub tolerances: BTreeMap<String, f64>,
    pub functionals: Vec<FunctionalDecl>,
    pub thetas: Vec<f64>,
    pub band: usize,
    pub eps: f64,
    /// Canonical text of every parameter; hashed into the report digests.
    pub canonical: String,
}

impl Scenario {
    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }
}

/// `x ↦ e(k·x) exp(-π|x - c|²/w²)`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gaussian {
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub k: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

impl Gaussian {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn k(&self) -> Vec<f64> {
        self.k.clone().unwrap_or_else(|| vec![0.0; self.dim()])
    }

    pub fn value(&self, x: &[f64]) -> Complex64 {
        let r: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        e(dot(&self.k(), x)) * (-std::f64::consts::PI * dot(&r, &r) / (self.width * self.width)).exp()
    }

    /// `∫ e(-p·x) value(x) dx`.
    pub fn transform(&self, p: &[f64]) -> Complex64 {
        let q: Vec<f64> = p.iter().zip(self.k()).map(|(a, b)| a - b).collect();
        let w = self.width;
        e(-dot(&q, &self.center))
            * w.powi(self.dim() as i32)
            * (-std::f64::consts::PI * w * w * dot(&q, &q)).exp()
    }

    fn canonical(&self) -> String {
        format!("gaussian c={:?} w={:e} k={:?}", self.center, self.width, self.k())
    }
}

#[derive(Clone, Debug)]
pub struct MoyalJob {
    pub name: String,
    pub j: SkewForm,
    pub grid: GridSpec,
    pub f: Gaussian,
    pub g: Gaussian,
    pub output: String,
    pub oracle: bool,
}

#[derive(Clone, Debug)]
pub enum SweepKind {
    /// Oscillatory oracle of `a ×_J b` at `ε = start/2^k`.
    Oracle { j: SkewForm, a: rieffel::SpectralElement, b: rieffel::SpectralElement },
    /// `Φ_ν(a) → a` for Gaussian densities of width `start/2^k`.
    PhiWidth { a: rieffel::SpectralElement },
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub name: String,
    pub kind: SweepKind,
    pub start: f64,
    pub halvings: usize,
    pub output: String,
}

#[derive(Clone, Debug, Default)]
pub struct Config {
    pub scenarios: Vec<Scenario>,
    pub moyal: Vec<MoyalJob>,
    pub sweeps: Vec<Sweep>,
    /// Canonical text of the whole file (for the coverage row digest).
    pub canonical: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    scenario: Vec<RawScenario>,
    #[serde(default)]
    moyal: Vec<RawMoyal>,
    #[serde(default)]
    sweep: Vec<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Spanned<String>,
    checks: Spanned<Vec<Spanned<String>>>,
    mode: Option<Spanned<String>>,
    #[serde(default)]
    seed: u64,
    probes: Option<Spanned<usize>>,
    j: Spanned<RawForm>,
    grid: Spanned<RawGrid>,
    carrier: Spanned<RawCarrier>,
    #[serde(default)]
    tolerances: BTreeMap<Spanned<String>, Spanned<f64>>,
    #[serde(default)]
    functional: Vec<Spanned<RawFunctional>>,
    thetas: Option<Spanned<Vec<f64>>>,
    band: Option<Spanned<usize>>,
    eps: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawForm {
    Name(String),
    Theta { theta: f64 },
    Matrix { matrix: Vec<Vec<f64>> },
    Vacuum { vacuum: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    d: usize,
    n: usize,
    l: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCarrier {
    Descriptor(String),
    Table {
        kind: String,
        h: Option<Vec<Vec<f64>>>,
        basis: Option<Vec<Vec<f64>>>,
        lattice: Option<f64>,
        d: Option<usize>,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawFunctional {
    Vacuum {
        h: f64,
    },
    Vector {
        xi: RawVector,
        zeta: Option<RawVector>,
    },
    Symbolic {
        name: String,
        #[serde(default = "one")]
        width: f64,
        k0: Option<Vec<f64>>,
    },
}

#[derive(Clone, Deserialize, PartialEq)]
#[serde(untagged)]
enum RawVector {
    File(String),
    Gaussian(Gaussian),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMoyal {
    name: Spanned<String>,
    j: Spanned<RawForm>,
    grid: Spanned<RawGrid>,
    f: Spanned<Gaussian>,
    g: Spanned<Gaussian>,
    output: Option<String>,
    #[serde(default)]
    oracle: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    name: Spanned<String>,
    kind: Spanned<String>,
    carrier: Spanned<RawCarrier>,
    j: Option<Spanned<RawForm>>,
    pair: Option<Spanned<Vec<[usize; 2]>>>,
    element: Option<Spanned<[usize; 2]>>,
    start: Spanned<f64>,
    halvings: usize,
    output: Option<String>,
}

struct Ctx<'a> {
    src: &'a str,
    base: &'a Path,
}

impl Ctx<'_> {
    fn err(&self, span: Range<usize>, key: impl Into<String>, msg: impl ToString) -> ConfigError {
        let line = self.src[..span.start.min(self.src.len())].matches('\n').count() + 1;
        ConfigError::Invalid { line, key: key.into(), msg: msg.to_string() }
    }
}

/// Reads and validates a config file; relative paths resolve against its directory.
pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let src = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&src, base)
}

/// The built-in scenario set.
pub fn builtin() -> Config {
    parse(DEFAULT_CONFIG, Path::new(".")).expect("built-in config is valid")
}

pub fn parse(src: &str, base: &Path) -> Result<Config, ConfigError> {
    let raw: RawFile = toml::from_str(src).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let cx = Ctx { src, base };
    let mut cfg = Config::default();
    let mut names = std::collections::BTreeSet::new();
    for (i, s) in raw.scenario.into_iter().enumerate() {
        let scen = scenario(&cx, i, s)?;
        if !names.insert(scen.name.clone()) {
            return Err(ConfigError::Invalid {
                line: 0,
                key: format!("scenario[{i}].name"),
                msg: format!("duplicate scenario name '{}'", scen.name),
            });
        }
        cfg.canonical.push_str(&scen.canonical);
        cfg.scenarios.push(scen);
    }
    for (i, m) in raw.moyal.into_iter().enumerate() {
        cfg.moyal.push(moyal(&cx, i, m)?);
    }
    for (i, s) in raw.sweep.into_iter().enumerate() {
        cfg.sweeps.push(sweep(&cx, i, s)?);
    }
    Ok(cfg)
}

fn grid(cx: &Ctx, key: &str, g: Spanned<RawGrid>) -> Result<GridSpec, ConfigError> {
    let span = g.span();
    let g = g.into_inner();
    GridSpec::new(g.d, g.n, g.l).map_err(|e| cx.err(span, key, e))
}

fn form(cx: &Ctx, key: &str, j: Spanned<RawForm>, d: usize) -> Result<SkewForm, ConfigError> {
    let span = j.span();
    let err = |m: String| cx.err(span.clone(), key, m);
    let out = match j.into_inner() {
        RawForm::Name(n) if n == "zero" => Ok(SkewForm::zero(d)),
        RawForm::Name(n) => return Err(err(format!("unknown form '{n}' (expected \"zero\")"))),
        RawForm::Theta { theta } if d == 2 && theta.is_finite() => Ok(SkewForm::theta(theta)),
        RawForm::Theta { .. } => return Err(err(format!("theta form needs d = 2 and finite θ, grid has d = {d}"))),
        RawForm::Matrix { matrix } => SkewForm::from_rows(&matrix),
        RawForm::Vacuum { vacuum } => SkewForm::vacuum_compatible(vacuum, d),
    };
    let j = out.map_err(|e| err(e.to_string()))?;
    if j.dim() != d {
        return Err(err(format!("form has dimension {}, expected {d}", j.dim())));
    }
    Ok(j)
}

fn carrier(cx: &Ctx, key: &str, c: Spanned<RawCarrier>) -> Result<Arc<Carrier>, ConfigError> {
    let span = c.span();
    let err = |m: String| cx.err(span.clone(), key, m);
    match c.into_inner() {
        RawCarrier::Descriptor(s) => s.parse::<Carrier>().map(Arc::new).map_err(|e| err(e.to_string())),
        RawCarrier::Table { kind, h, basis, lattice, d } => {
            let out = match kind.as_str() {
                "matrix" => Carrier::matrix(h.ok_or_else(|| err("matrix carrier needs `h`".into()))?, lattice),
                "torus" => match basis {
                    Some(b) => Carrier::torus(b, lattice),
                    None => Carrier::standard_torus(d.ok_or_else(|| err("torus needs `basis` or `d`".into()))?),
                },
                "scalar" => Carrier::scalar(d.ok_or_else(|| err("scalar carrier needs `d`".into()))?),
                k => return Err(err(format!("unknown carrier kind '{k}'"))),
            };
            out.map_err(|e| err(e.to_string()))
        }
    }
}

fn carrier_frequencies(c: &Carrier) -> Vec<rieffel::Frequency> {
    match c.kind() {
        CarrierKind::Torus { basis } => basis.clone(),
        _ => c.spectrum(),
    }
}

fn scenario(cx: &Ctx, i: usize, s: RawScenario) -> Result<Scenario, ConfigError> {
    let key = |k: &str| format!("scenario[{i}].{k}");
    let name_span = s.name.span();
    let name = s.name.into_inner();
    if name.is_empty() || name.contains(|c: char| c.is_whitespace() || c == ',' || c == '/') {
        return Err(cx.err(name_span, key("name"), "names must be non-empty without spaces, commas or '/'"));
    }
    let grid_spec = grid(cx, &key("grid"), s.grid)?;
    let d = grid_spec.dim();
    let car_span = s.carrier.span();
    let car = carrier(cx, &key("carrier"), s.carrier)?;
    if car.dim() != d {
        return Err(cx.err(car_span, key("carrier"), format!("carrier has d = {}, grid has d = {d}", car.dim())));
    }
    let j_span = s.j.span();
    let j = form(cx, &key("j"), s.j, d)?;

    let mut checks = Vec::new();
    for c in s.checks.into_inner() {
        let span = c.span();
        let id = c.into_inner();
        let ch = Check::parse(&id).ok_or_else(|| {
            let known: Vec<_> = Check::ALL.iter().map(|c| c.id()).collect();
            cx.err(span.clone(), key("checks"), format!("unknown check '{id}' (known: {})", known.join(", ")))
        })?;
        if checks.contains(&ch) {
            return Err(cx.err(span, key("checks"), format!("check '{id}' listed twice")));
        }
        checks.push(ch);
    }

    let mode = match s.mode {
        None => Mode::Tolerance,
        Some(m) => match m.get_ref().as_str() {
            "commensurate" => Mode::Commensurate,
            "tolerance" => Mode::Tolerance,
            other => {
                return Err(cx.err(m.span(), key("mode"), format!("mode must be commensurate or tolerance, got '{other}'")))
            }
        },
    };
    if mode == Mode::Commensurate {
        for p in carrier_frequencies(&car) {
            if !grid_spec.on_dual_lattice(&p) {
                return Err(cx.err(
                    car_span.clone(),
                    key("carrier"),
                    format!("commensurate mode needs frequencies on the 1/L lattice; {:?} is not", p.as_slice()),
                ));
            }
        }
    }

    let probes = match s.probes {
        None => 8,
        Some(p) if *p.get_ref() >= 1 => p.into_inner(),
        Some(p) => return Err(cx.err(p.span(), key("probes"), "need at least one probe")),
    };
    let n = grid_spec.points_per_axis();
    let band = match s.band {
        None => (n / 8).max(1),
        Some(b) if *b.get_ref() >= 1 && *b.get_ref() < n / 4 => b.into_inner(),
        Some(b) => return Err(cx.err(b.span(), key("band"), format!("band must lie in 1..{}", n / 4))),
    };
    let eps = match s.eps {
        None => 1e-3,
        Some(v) if *v.get_ref() > 0.0 && v.get_ref().is_finite() => v.into_inner(),
        Some(v) => return Err(cx.err(v.span(), key("eps"), "eps must be positive")),
    };
    let thetas = match s.thetas {
        Some(t) => t.into_inner(),
        None if d == 2 => vec![j.matrix()[(0, 1)]],
        None => Vec::new(),
    };
    if checks.contains(&Check::Nctorus) && thetas.is_empty() {
        return Err(cx.err(j_span, key("thetas"), "nctorus needs `thetas` when d ≠ 2"));
    }

    let mut tolerances = BTreeMap::new();
    for (k, v) in s.tolerances {
        let kspan = k.span();
        let k = k.into_inner();
        let head = k.split('.').next().unwrap_or("");
        if Check::parse(head).is_none() {
            return Err(cx.err(kspan, key("tolerances"), format!("'{k}' does not name a check")));
        }
        let t = v.into_inner();
        if !(t.is_finite() && t >= 0.0) {
            return Err(cx.err(kspan, key("tolerances"), format!("tolerance for '{k}' must be ≥ 0")));
        }
        tolerances.insert(k, t);
    }

    let mut functionals = Vec::new();
    let mut fcanon = String::new();
    for (fi, f) in s.functional.into_iter().enumerate() {
        let fkey = key(&format!("functional[{fi}]"));
        let span = f.span();
        let err = |m: String| cx.err(span.clone(), fkey.clone(), m);
        let decl = match f.into_inner() {
            RawFunctional::Vacuum { h } => {
                let nu = Functional::vacuum(h, &j).map_err(|e| err(e.to_string()))?;
                let _ = write!(fcanon, "vacuum h={h:e};");
                FunctionalDecl { label: format!("vacuum{fi}"), functional: nu, positive: true, closed_form: true }
            }
            RawFunctional::Vector { xi, zeta } => {
                let positive = zeta.as_ref().is_none_or(|z| *z == xi);
                let xv = vector(cx, &xi, grid_spec).map_err(&err)?;
                let zv = match &zeta {
                    Some(z) => vector(cx, z, grid_spec).map_err(&err)?,
                    None => xv.clone(),
                };
                let nu = vector_functional(&xv, &zv, &j).map_err(|e| err(e.to_string()))?;
                let _ = write!(fcanon, "vector xi={} zeta={};", vector_canon(&xi), zeta.as_ref().map_or("xi".into(), vector_canon));
                FunctionalDecl { label: format!("vector{fi}"), functional: nu, positive, closed_form: false }
            }
            RawFunctional::Symbolic { name, width, k0 } => {
                let nu = match name.as_str() {
                    "gaussian" => Functional::gaussian(d, width),
                    "modulated-gaussian" => {
                        Functional::modulated_gaussian(k0.clone().unwrap_or_else(|| vec![0.0; d]), width)
                    }
                    other => {
                        return Err(err(format!("unknown symbolic functional '{other}' (gaussian, modulated-gaussian)")))
                    }
                }
                .map_err(|e| err(e.to_string()))?;
                if nu.dim() != d {
                    return Err(err(format!("functional has d = {}, grid has d = {d}", nu.dim())));
                }
                let _ = write!(fcanon, "symbolic {name} w={width:e} k0={k0:?};");
                FunctionalDecl {
                    label: format!("{name}{fi}"),
                    functional: nu,
                    positive: name == "gaussian",
                    closed_form: true,
                }
            }
        };
        functionals.push(decl);
    }
    let needs_functional = [Check::Proposition, Check::Choi];
    if functionals.is_empty() {
        if let Some(c) = checks.iter().find(|c| needs_functional.contains(c)) {
            return Err(cx.err(name_span, key("functional"), format!("check '{}' needs at least one functional", c.id())));
        }
    }
    if checks.contains(&Check::Vacuum) && !functionals.iter().any(|f| matches!(f.functional, Functional::Vacuum { .. })) {
        return Err(cx.err(name_span, key("functional"), "check 'vacuum' needs a vacuum functional"));
    }
    if checks.contains(&Check::Moyal) && !matches!(car.kind(), CarrierKind::Scalar) {
        return Err(cx.err(car_span, key("carrier"), "check 'moyal' needs the scalar carrier"));
    }
    if checks.contains(&Check::Choi) && !matches!(car.kind(), CarrierKind::Matrix { h } if h.len() <= 8) {
        return Err(cx.err(car_span, key("carrier"), "check 'choi' needs a matrix carrier with n ≤ 8"));
    }
    if checks.contains(&Check::OracleConvergence) && !matches!(car.kind(), CarrierKind::Matrix { .. }) {
        return Err(cx.err(car_span, key("carrier"), "check 'oracle-convergence' needs a matrix carrier"));
    }

    let mut canonical = String::new();
    let _ = writeln!(
        canonical,
        "scenario {name} mode={mode:?} seed={} probes={probes} band={band} eps={eps:e}",
        s.seed
    );
    let _ = writeln!(canonical, "carrier {car}");
    let _ = writeln!(canonical, "grid d={d} n={n} l={:e}", grid_spec.side());
    let jm: Vec<String> = j.matrix().iter().map(|v| format!("{v:e}")).collect();
    let _ = writeln!(canonical, "j {}", jm.join(","));
    let _ = writeln!(canonical, "thetas {thetas:?}");
    let _ = writeln!(canonical, "tolerances {tolerances:?}");
    let _ = writeln!(canonical, "functionals {fcanon}");

    Ok(Scenario {
        name,
        checks,
        mode,
        seed: s.seed,
        probes,
        j,
        grid: grid_spec,
        carrier: car,
        tolerances,
        functionals,
        thetas,
        band,
        eps,
        canonical,
    })
}

fn vector_canon(v: &RawVector) -> String {
    match v {
        RawVector::File(p) => format!("file:{p}"),
        RawVector::Gaussian(g) => g.canonical(),
    }
}

fn vector(cx: &Ctx, v: &RawVector, spec: GridSpec) -> Result<GridFunction, String> {
    match v {
        RawVector::File(p) => {
            let path = cx.base.join(p);
            let file = std::fs::File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let f = read_csv(std::io::BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))?;
            if *f.spec() != spec {
                return Err(format!("{}: grid does not match the scenario grid", path.display()));
            }
            Ok(f)
        }
        RawVector::Gaussian(g) => {
            if g.dim() != spec.dim() || g.width.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(format!("gaussian vector needs a {}-dimensional center and positive width", spec.dim()));
            }
            sample_scalar(spec, |x| g.value(x)).map_err(|e| e.to_string())
        }
    }
}

fn moyal(cx: &Ctx, i: usize, m: RawMoyal) -> Result<MoyalJob, ConfigError> {
    let key = |k: &str| format!("moyal[{i}].{k}");
    let spec = grid(cx, &key("grid"), m.grid)?;
    let d = spec.dim();
    let j = form(cx, &key("j"), m.j, d)?;
    let check = |g: &Spanned<Gaussian>, k: &str| {
        let v = g.get_ref();
        if v.dim() != d || v.width.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || v.k.as_ref().is_some_and(|k| k.len() != d) {
            Err(cx.err(g.span(), key(k), format!("need a {d}-dimensional center (and k) and positive width")))
        } else {
            Ok(v.clone())
        }
    };
    let (f, g) = (check(&m.f, "f")?, check(&m.g, "g")?);
    let name = m.name.into_inner();
    Ok(MoyalJob { output: m.output.unwrap_or_else(|| format!("{name}.csv")), name, j, grid: spec, f, g, oracle: m.oracle })
}

fn sweep(cx: &Ctx, i: usize, s: RawSweep) -> Result<Sweep, ConfigError> {
    let key = |k: &str| format!("sweep[{i}].{k}");
    let car = carrier(cx, &key("carrier"), s.carrier)?;
    let d = car.dim();
    let start = *s.start.get_ref();
    if !(start > 0.0 && start.is_finite()) {
        return Err(cx.err(s.start.span(), key("start"), "start must be positive"));
    }
    let unit = |jk: [usize; 2], span: Range<usize>, k: &str| {
        car.matrix_unit(jk[0], jk[1]).map_err(|e| cx.err(span, key(k), e))
    };
    let kind_span = s.kind.span();
    let kind = match s.kind.get_ref().as_str() {
        "oracle" => {
            let j = match s.j {
                Some(j) => form(cx, &key("j"), j, d)?,
                None => return Err(cx.err(kind_span, key("j"), "oracle sweep needs `j`")),
            };
            let (a, b) = match car.kind() {
                CarrierKind::Torus { .. } => (
                    car.generator(0).map_err(|e| cx.err(kind_span.clone(), key("carrier"), e))?,
                    car.generator(1 % d).map_err(|e| cx.err(kind_span.clone(), key("carrier"), e))?,
                ),
                _ => {
                    let p = s.pair.ok_or_else(|| cx.err(kind_span.clone(), key("pair"), "oracle sweep needs `pair`"))?;
                    let span = p.span();
                    let p = p.into_inner();
                    if p.len() != 2 {
                        return Err(cx.err(span, key("pair"), "pair lists two matrix units"));
                    }
                    (unit(p[0], span.clone(), "pair")?, unit(p[1], span, "pair")?)
                }
            };
            SweepKind::Oracle { j, a, b }
        }
        "phi-width" => {
            let el = s.element.ok_or_else(|| cx.err(kind_span.clone(), key("element"), "phi-width sweep needs `element`"))?;
            let span = el.span();
            SweepKind::PhiWidth { a: unit(el.into_inner(), span, "element")? }
        }
        other => return Err(cx.err(kind_span, key("kind"), format!("unknown sweep kind '{other}' (oracle, phi-width)"))),
    };
    let name = s.name.into_inner();
    Ok(Sweep { output: s.output.unwrap_or_else(|| format!("{name}.dat")), name, kind, start, halvings: s.halvings })
}
