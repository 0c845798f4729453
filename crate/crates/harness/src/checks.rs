//! The check set. Each check returns graded lines; the runner prefixes them
//! with the scenario name and attaches digests and timings.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rieffel::grid::{convolve, convolve_deformed, sample_scalar, scalar_values, translate};
use rieffel::kasprzak::{embed_crossed_swapped, norm_excess, SymbolicFunctional};
use rieffel::moyal::moyal_product;
use rieffel::{
    choi_check, cocycle, deformed_mul, dot, dual_action, e, embed_crossed, embed_spectral, oscillatory_oracle,
    phi_nu, r_omega, rep_pi, rep_pi_single, rep_pij, rep_pij_single, t_nu, theta, twisted_dual_action,
    twisted_mul, Carrier, CarrierKind, Complex64, Functional, GridFunction, OracleParams, Result, SkewForm,
    SpectralElement,
};

use crate::config::{Check, Gaussian, Mode, Scenario};
use crate::oracle::moyal_direct;
use crate::probes::{self, rng};

/// One graded line of a check.
#[derive(Clone, Debug)]
pub struct Line {
    /// Appended to the check id after a dot.
    pub detail: Option<String>,
    pub metric: f64,
    pub tolerance: f64,
    pub info: bool,
}

fn line(detail: Option<String>, metric: f64, tolerance: f64) -> Line {
    Line { detail, metric, tolerance, info: false }
}

/// Operations of the library modules, by the names used in the coverage row.
pub const OPS: [&str; 27] = [
    "make_matrix_carrier",
    "act",
    "mul",
    "decompose",
    "deformed_mul",
    "oscillatory_oracle",
    "sample",
    "fourier",
    "convolve",
    "convolve_deformed",
    "translate",
    "rep_pi_single",
    "rep_pi",
    "rep_piJ_single",
    "rep_piJ",
    "theta",
    "dual_action",
    "twisted_dual_action",
    "cocycle",
    "r_omega",
    "twisted_mul",
    "embed_spectral",
    "embed_crossed",
    "t_nu",
    "phi_nu",
    "vector_functional",
    "choi_check",
];

/// Operations a check exercises in this scenario.
pub fn ops(check: Check, s: &Scenario) -> Vec<&'static str> {
    let mut out: Vec<&'static str> = match check {
        Check::Theorem1 => vec!["sample", "fourier", "rep_pi", "rep_piJ", "rep_pi_single", "rep_piJ_single", "theta", "mul"],
        Check::ThetaInverse => vec!["sample", "fourier", "theta"],
        Check::Homomorphism => vec!["sample", "fourier", "convolve", "convolve_deformed", "theta", "rep_pi", "rep_piJ"],
        Check::DualIntertwine => vec!["fourier", "theta", "dual_action", "twisted_dual_action", "translate", "act", "rep_piJ"],
        Check::KasprzakEmbed => vec![
            "cocycle", "r_omega", "twisted_mul", "embed_spectral", "embed_crossed", "deformed_mul", "rep_piJ_single", "mul",
        ],
        Check::Proposition => vec!["phi_nu", "embed_crossed", "rep_piJ_single"],
        Check::Vacuum => vec!["phi_nu"],
        Check::Choi => vec!["choi_check", "decompose", "phi_nu"],
        Check::Moyal => vec!["sample", "fourier", "t_nu"],
        Check::Nctorus => vec!["deformed_mul", "mul"],
        Check::OracleConvergence => vec!["oscillatory_oracle", "deformed_mul"],
    };
    if matches!(s.carrier.kind(), CarrierKind::Matrix { .. }) {
        out.push("make_matrix_carrier");
    }
    if matches!(check, Check::Proposition | Check::Choi)
        && s.functionals.iter().any(|f| matches!(f.functional, Functional::Vector(_)))
    {
        out.push("vector_functional");
    }
    out
}

pub fn run(check: Check, s: &Scenario) -> Result<Vec<Line>> {
    match check {
        Check::Theorem1 => theorem1(s),
        Check::ThetaInverse => theta_inverse(s),
        Check::Homomorphism => homomorphism(s),
        Check::DualIntertwine => dual_intertwine(s),
        Check::KasprzakEmbed => kasprzak_embed(s),
        Check::Proposition => proposition(s),
        Check::Vacuum => vacuum(s),
        Check::Choi => choi(s),
        Check::Moyal => moyal(s),
        Check::Nctorus => nctorus(s),
        Check::OracleConvergence => oracle_convergence(s),
    }
}

fn exact(s: &Scenario) -> bool {
    s.mode == Mode::Commensurate
}

fn probe(s: &Scenario, r: &mut impl Rng) -> GridFunction {
    match s.mode {
        Mode::Commensurate => probes::band_limited(s.grid, &s.carrier, s.band, r),
        Mode::Tolerance => probes::gaussian(s.grid, &s.carrier, r),
    }
}

fn rel(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    a.rel_l2_error(b)
}

fn theorem1(s: &Scenario) -> Result<Vec<Line>> {
    let mut r = rng(s.seed, "theorem1");
    let (mut worst, mut single) = (0.0f64, 0.0f64);
    for _ in 0..s.probes {
        let f = probe(s, &mut r);
        let xi = probe(s, &mut r);
        worst = worst.max(rel(&rep_pij(&s.j, &f, &xi)?, &rep_pi(&theta(&s.j, &f)?, &xi)?)?);
        let a = probes::homogeneous(&s.carrier, &mut r);
        let d = probes::delta(s.grid, &a);
        single = single
            .max(rel(&rep_pij(&s.j, &d, &xi)?, &rep_pij_single(&s.j, &a, &xi)?)?)
            .max(rel(&rep_pi(&d, &xi)?, &rep_pi_single(&a, &xi)?)?);
    }
    Ok(vec![
        line(None, worst, s.tolerance("theorem1", 1e-10)),
        line(Some("single".into()), single, s.tolerance("theorem1.single", 1e-12)),
    ])
}

fn theta_inverse(s: &Scenario) -> Result<Vec<Line>> {
    let mut r = rng(s.seed, "theta-inverse");
    let mut worst = 0.0f64;
    for _ in 0..s.probes {
        let f = probe(s, &mut r);
        worst = worst.max(rel(&theta(&s.j.neg(), &theta(&s.j, &f)?)?, &f)?);
    }
    Ok(vec![line(None, worst, s.tolerance("theta-inverse", 1e-12))])
}

fn homomorphism(s: &Scenario) -> Result<Vec<Line>> {
    let mut r = rng(s.seed, "homomorphism");
    let j = &s.j;
    let (mut iso, mut pi, mut pij) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..s.probes {
        let f = probe(s, &mut r);
        let g = probe(s, &mut r);
        let lhs = theta(j, &convolve_deformed(j, &f, &g)?)?;
        iso = iso.max(rel(&lhs, &convolve(&theta(j, &f)?, &theta(j, &g)?)?)?);
        if exact(s) {
            let xi = probe(s, &mut r);
            pi = pi.max(rel(&rep_pi(&convolve(&f, &g)?, &xi)?, &rep_pi(&f, &rep_pi(&g, &xi)?)?)?);
            pij = pij.max(rel(&rep_pij(j, &convolve_deformed(j, &f, &g)?, &xi)?, &rep_pij(j, &f, &rep_pij(j, &g, &xi)?)?)?);
        }
    }
    let mut out = vec![line(None, iso, s.tolerance("homomorphism", if exact(s) { 1e-10 } else { 1e-6 }))];
    if exact(s) {
        out.push(line(Some("pi".into()), pi, s.tolerance("homomorphism.pi", 1e-11)));
        out.push(line(Some("pij".into()), pij, s.tolerance("homomorphism.pij", 1e-10)));
    }
    Ok(out)
}

/// Five small lattice points `m/L`.
fn lattice_points(s: &Scenario) -> Vec<Vec<f64>> {
    let d = s.grid.dim();
    let l = s.grid.side();
    let unit = |i: usize| (0..d).map(|k| if k == i % d { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    let ms: Vec<Vec<f64>> = vec![
        unit(0),
        unit(1),
        unit(0).iter().zip(unit(1)).map(|(a, b)| a + b).collect(),
        unit(0).iter().map(|a| -a).collect(),
        unit(0).iter().zip(unit(d - 1)).map(|(a, b)| 2.0 * a - b).collect(),
    ];
    ms.into_iter().map(|m| m.into_iter().map(|v| v / l).collect()).collect()
}

fn dual_intertwine(s: &Scenario) -> Result<Vec<Line>> {
    let mut r = rng(s.seed, "dual-intertwine");
    let j = &s.j;
    let (mut worst, mut cov) = (0.0f64, 0.0f64);
    let ys = lattice_points(s);
    let d = s.grid.dim();
    for _ in 0..s.probes {
        let f = probe(s, &mut r);
        for y in &ys {
            let lhs = theta(j, &dual_action(y, &f)?)?;
            worst = worst.max(rel(&lhs, &twisted_dual_action(j, y, &theta(j, &f)?)?)?);
        }
        let xi = probe(s, &mut r);
        let shift: Vec<i64> = (0..d).map(|_| r.random_range(-3i64..=3)).collect();
        let back: Vec<i64> = shift.iter().map(|v| -v).collect();
        let x: Vec<f64> = shift.iter().map(|v| *v as f64 * s.grid.spacing()).collect();
        let lhs = translate(&shift, &rep_pij(j, &f, &translate(&back, &xi)?)?)?;
        cov = cov.max(rel(&lhs, &rep_pij(j, &f.act(&x)?, &xi)?)?);
    }
    let (t, tc) = if exact(s) { (1e-11, 1e-12) } else { (1e-6, 1e-6) };
    Ok(vec![
        line(None, worst, s.tolerance("dual-intertwine", t)),
        line(Some("covariance".into()), cov, s.tolerance("dual-intertwine.covariance", tc)),
    ])
}

fn kasprzak_embed(s: &Scenario) -> Result<Vec<Line>> {
    let mut r = rng(s.seed, "kasprzak-embed");
    let (j, c) = (&s.j, &s.carrier);
    let mut spectral = 0.0f64;
    for _ in 0..100 {
        let a = probes::homogeneous(c, &mut r);
        let b = probes::homogeneous(c, &mut r);
        let lhs = embed_spectral(j, &deformed_mul(j, &a, &b)?)?;
        let rhs = twisted_mul(j, &embed_spectral(j, &a)?, &embed_spectral(j, &b)?)?;
        spectral = spectral.max(lhs.max_abs_diff(&rhs)?);
    }
    let d = c.dim();
    let mut bichar = (r_omega(j) - j.matrix()).abs().max();
    for _ in 0..100 {
        let mut v = || (0..d).map(|_| r.random_range(-3.0..3.0)).collect::<Vec<f64>>();
        let (x, x2, y) = (v(), v(), v());
        let xx: Vec<f64> = x.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let lhs = cocycle(j, &xx, &y)?;
        bichar = bichar.max((lhs - cocycle(j, &x, &y)? * cocycle(j, &x2, &y)?).norm());
    }
    let (mut crossed, mut swap) = (0.0f64, 0.0f64);
    for _ in 0..s.probes {
        let xi = probe(s, &mut r);
        let a = probes::homogeneous(c, &mut r);
        let emb = embed_crossed(j, &a, &xi)?;
        crossed = crossed.max(rel(&emb, &rep_pij_single(j, &a, &xi)?)?);
        swap = swap.max(rel(&emb, &embed_crossed_swapped(j, &a, &xi)?)?);
    }
    Ok(vec![
        line(None, spectral, s.tolerance("kasprzak-embed", 1e-14)),
        line(Some("cocycle".into()), bichar, s.tolerance("kasprzak-embed.cocycle", 1e-12)),
        line(Some("crossed".into()), crossed, s.tolerance("kasprzak-embed.crossed", 1e-10)),
        line(Some("swap".into()), swap, s.tolerance("kasprzak-embed.swap", 1e-12)),
    ])
}

fn proposition(s: &Scenario) -> Result<Vec<Line>> {
    let mut out = Vec::new();
    for decl in &s.functionals {
        let mut r = rng(s.seed, &format!("proposition.{}", decl.label));
        let nu = &decl.functional;
        let mut worst = 0.0f64;
        for _ in 0..s.probes {
            let xi = probe(s, &mut r);
            let a = probes::homogeneous(&s.carrier, &mut r);
            let z = a.homogeneous_frequency()?.to_vec();
            let lhs = rep_pij_single(&s.j, &phi_nu(nu, &a)?, &xi)?;
            let rhs = embed_crossed(&s.j, &a, &xi)?.scale(nu.symbol(&z)?);
            worst = worst.max(rel(&lhs, &rhs)?);
        }
        let default = if matches!(nu, Functional::Vector(_)) { 1e-6 } else { 1e-8 };
        let key = format!("proposition.{}", decl.label);
        out.push(line(Some(decl.label.clone()), worst, s.tolerance(&key, default)));
    }
    Ok(out)
}

/// Nine frequency probes: a 3×3 grid in the plane, otherwise points on the diagonal.
fn nine_points(d: usize) -> Vec<Vec<f64>> {
    const S: [f64; 3] = [-0.6, 0.0, 0.6];
    if d == 2 {
        S.iter().flat_map(|a| S.iter().map(move |b| vec![*a, *b])).collect()
    } else {
        (0..9).map(|i| vec![0.6 * (i as f64 - 4.0) / 4.0 / (d as f64).sqrt(); d]).collect()
    }
}

fn vacuum(s: &Scenario) -> Result<Vec<Line>> {
    let mut out = Vec::new();
    for decl in &s.functionals {
        let Functional::Vacuum { h, dim } = decl.functional else { continue };
        let mut worst = 0.0f64;
        for p in nine_points(dim) {
            let want = (-PI * PI * h * dot(&p, &p)).exp();
            worst = worst.max((decl.functional.density_transform(&p)? - want).norm());
        }
        // total mass one: frequency-zero elements are fixed
        let one = s.carrier.scalar_element(Complex64::new(1.0, 0.0));
        worst = worst.max(phi_nu(&decl.functional, &one)?.max_abs_diff(&one)?);
        let key = format!("vacuum.{}", decl.label);
        out.push(line(Some(decl.label.clone()), worst, s.tolerance(&key, 1e-8)));
    }
    Ok(out)
}

fn choi(s: &Scenario) -> Result<Vec<Line>> {
    let n = s.carrier.coeff_size();
    let mut r = rng(s.seed, "choi");
    let samples: Vec<DMatrix<Complex64>> =
        (0..50).map(|_| DMatrix::from_fn(n, n, |_, _| probes::cplx(&mut r))).collect();
    let mut out = Vec::new();
    for decl in &s.functionals {
        let neg = (-choi_check(&decl.functional, &s.carrier)?).max(0.0);
        let key = format!("choi.{}", decl.label);
        let tol = s.tolerance(&key, if decl.closed_form { 1e-10 } else { 1e-8 });
        out.push(Line { detail: Some(decl.label.clone()), metric: neg, tolerance: tol, info: !decl.positive });
        let excess = norm_excess(&decl.functional, &s.carrier, &samples)?.max(0.0);
        let key = format!("choi.{}.norm", decl.label);
        out.push(line(Some(format!("{}.norm", decl.label)), excess, s.tolerance(&key, 1e-8)));
    }
    Ok(out)
}

fn unit_symbol(d: usize) -> Functional {
    Functional::Symbolic(SymbolicFunctional {
        name: "unit".into(),
        dim: d,
        symbol: Arc::new(|_| Complex64::new(1.0, 0.0)),
        density: Arc::new(|_| Complex64::new(0.0, 0.0)),
        radius: 1.0,
        norm_bound: 1.0,
    })
}

/// Sup error of the grid Moyal product of two Gaussians against the direct
/// quadrature, relative to the sup of the reference.
pub fn moyal_error(j: &SkewForm, spec: rieffel::GridSpec, f: &Gaussian, g: &Gaussian) -> Result<(GridFunction, f64)> {
    let fs = sample_scalar(spec, |x| f.value(x))?;
    let gs = sample_scalar(spec, |x| g.value(x))?;
    let h = moyal_product(j, &fs, &gs)?;
    let want = moyal_direct(j, f, g, &spec.nodes())?;
    let got = scalar_values(&h);
    let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
    Ok((h, err))
}

fn moyal(s: &Scenario) -> Result<Vec<Line>> {
    let mut r = rng(s.seed, "moyal");
    let d = s.grid.dim();
    let gauss = |r: &mut rand_chacha::ChaCha8Rng| Gaussian {
        center: (0..d).map(|_| r.random_range(-0.25..0.25)).collect(),
        width: 1.0,
        k: Some((0..d).map(|_| r.random_range(-0.2..0.2)).collect()),
    };
    let (f, g) = (gauss(&mut r), gauss(&mut r));
    let (_, err) = moyal_error(&s.j, s.grid, &f, &g)?;

    // T_ν with unit symbol turns the grid product into the twisted product
    let scalar = Carrier::scalar(d)?;
    let nu = unit_symbol(d);
    let mut worst = 0.0f64;
    for _ in 0..s.probes.min(4) {
        let fb = probes::band_limited(s.grid, &scalar, s.band, &mut r);
        let gb = probes::band_limited(s.grid, &scalar, s.band, &mut r);
        let prod = t_nu(&s.j, &nu, &fb)?.mul(&s.j, &t_nu(&s.j, &nu, &gb)?)?;
        let h = t_nu(&s.j, &nu, &moyal_product(&s.j, &fb, &gb)?)?;
        let scale = h.terms().iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        for (chi, c) in prod.terms() {
            worst = worst.max((c - h.coefficient(chi)).norm() / scale);
        }
        for (chi, c) in h.terms() {
            worst = worst.max((c - prod.coefficient(chi)).norm() / scale);
        }
    }
    Ok(vec![
        line(None, err, s.tolerance("moyal", 1e-6)),
        line(Some("tnu".into()), worst, s.tolerance("moyal.tnu", 1e-12)),
    ])
}

fn nctorus(s: &Scenario) -> Result<Vec<Line>> {
    let c = Carrier::standard_torus(2)?;
    let (u1, u2) = (c.generator(0)?, c.generator(1)?);
    let plain = rieffel::carrier::mul(&c, &u1, &u2)?;
    let mut out = Vec::new();
    for &th in &s.thetas {
        let j = SkewForm::theta(th);
        let a = deformed_mul(&j, &u1, &u2)?;
        let b = deformed_mul(&j, &u2, &u1)?;
        let err = b.max_abs_diff(&a.scale(e(2.0 * th)))?.max(a.max_abs_diff(&plain.scale(e(-th)))?);
        let key = format!("nctorus.{th}");
        out.push(line(Some(th.to_string()), err, s.tolerance(&key, 1e-14)));
    }
    Ok(out)
}

/// Homogeneous pairs `(E_ij, E_jk)` with `|Jᵀp|² + |q|² < 0.9`, at most eight.
fn oracle_pairs(s: &Scenario) -> Result<Vec<(SpectralElement, SpectralElement)>> {
    let c = &s.carrier;
    let n = c.coeff_size();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (a, b) = (c.matrix_unit(i, j)?, c.matrix_unit(j, k)?);
                let jt = s.j.apply_transpose(&c.entry_frequency(i, j));
                let q = c.entry_frequency(j, k);
                if dot(&jt, &jt) + dot(&q, &q) < 0.9 && out.len() < 8 {
                    out.push((a, b));
                }
            }
        }
    }
    Ok(out)
}

fn oracle_convergence(s: &Scenario) -> Result<Vec<Line>> {
    let eps: Vec<f64> = (0..3).map(|k| s.eps / 2f64.powi(k)).collect();
    let (mut first, mut ratio) = (0.0f64, 0.0f64);
    for (a, b) in oracle_pairs(s)? {
        let exact = deformed_mul(&s.j, &a, &b)?;
        let errs = eps
            .iter()
            .map(|&ep| Ok(oscillatory_oracle(&s.j, &a, &b, OracleParams::resolved(ep))?.max_abs_diff(&exact)? / exact.max_abs()))
            .collect::<Result<Vec<f64>>>()?;
        first = first.max(errs[0]);
        for w in errs.windows(2) {
            ratio = ratio.max(w[1] / w[0]);
        }
    }
    let mut out = vec![
        line(None, first, s.tolerance("oracle-convergence", 1e-3)),
        line(Some("monotone".into()), ratio, s.tolerance("oracle-convergence.monotone", 1.0 - f64::EPSILON)),
    ];
    if s.j.dim() == 2 {
        let t = Carrier::standard_torus(2)?;
        let (u1, u2) = (t.generator(0)?, t.generator(1)?);
        let exact = deformed_mul(&s.j, &u1, &u2)?;
        let got = oscillatory_oracle(&s.j, &u1, &u2, OracleParams::resolved(s.eps))?;
        let (cg, ce) = (got.terms()[0].coeff[(0, 0)], exact.terms()[0].coeff[(0, 0)]);
        let phase = (cg * ce.conj()).arg().abs();
        out.push(line(Some("torus-phase".into()), phase, s.tolerance("oracle-convergence.torus-phase", 1e-3)));
        out.push(Line {
            detail: Some("torus-modulus".into()),
            metric: (cg - ce).norm(),
            tolerance: s.tolerance("oracle-convergence.torus-modulus", 1e-3),
            info: true,
        });
    }
    Ok(out)
}
