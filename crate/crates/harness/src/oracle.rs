//! Brute-force references that share no code path with the FFT engine.

use rieffel::quad::{pairwise_sum, Rule};
use rieffel::{dot, e, Complex64, Result, SkewForm};

use crate::config::Gaussian;

/// `(f ×_J g)(z) = ∫ f̂(p) e(p·z) g(z + Jp) dp` at each point, by tensor
/// Gauss–Legendre over `p` with the closed-form `f̂`.
///
/// The `p`-box is centred on `f`'s modulation and wide enough for `f̂` to drop
/// below `e^{-30}`; the panel count follows the largest oscillation rate in `p`.
pub fn moyal_direct(j: &SkewForm, f: &Gaussian, g: &Gaussian, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let d = f.dim();
    let kf = f.k.clone().unwrap_or_else(|| vec![0.0; d]);
    let kg = g.k.clone().unwrap_or_else(|| vec![0.0; d]);
    let r = (30.0 / std::f64::consts::PI).sqrt() / f.width;
    let zmax = points.iter().map(|z| dot(z, z).sqrt()).fold(0.0, f64::max);
    let jnorm = j.matrix().norm();
    let rate = zmax + jnorm * (dot(&kg, &kg).sqrt() + 3.0 / g.width) + 1.0;
    // 16-point panels stay below ~1.6 radians of phase per node spacing
    let panels = (2.0 * r * rate * std::f64::consts::TAU / 6.0).ceil() as usize;
    let rule = Rule::composite(-r, r, panels.max(4), 16)?;

    let n = rule.len();
    let total = n.pow(d as u32);
    let mut ps = Vec::with_capacity(total);
    let mut jps = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut p = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        let mut w = 1.0;
        for axis in (0..d).rev() {
            let i = rem % n;
            rem /= n;
            p[axis] = kf[axis] + rule.nodes[i];
            w *= rule.weights[i];
        }
        weights.push(f.transform(&p) * w);
        jps.push(j.apply(&p));
        ps.push(p.clone());
    }
    let mut shifted = vec![0.0; d];
    let mut terms = vec![Complex64::new(0.0, 0.0); total];
    Ok(points
        .iter()
        .map(|z| {
            for i in 0..total {
                for a in 0..d {
                    shifted[a] = z[a] + jps[i][a];
                }
                terms[i] = weights[i] * e(dot(&ps[i], z)) * g.value(&shifted);
            }
            pairwise_sum(&terms)
        })
        .collect())
}
