mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rieffel::carrier::{act, decompose, mul};
use rieffel::{
    deformed_mul, e, oscillatory_oracle, Carrier, Complex64, OracleParams, SkewForm, SpectralElement,
};

fn skew(a: f64, b: f64, c: f64) -> SkewForm {
    SkewForm::from_rows(&[vec![0.0, a, b], vec![-a, 0.0, c], vec![-b, -c, 0.0]]).unwrap()
}

fn seeded(seed: u64) -> (std::sync::Arc<Carrier>, [SpectralElement; 3]) {
    let c = Carrier::matrix(vec![vec![0.0, 0.1, 0.0], vec![0.3, -0.2, 0.5], vec![-0.4, 0.25, 0.05]], None)
        .unwrap();
    let mut r = common::rng(seed);
    let els = [
        common::random_element(&c, &mut r),
        common::random_element(&c, &mut r),
        common::random_element(&c, &mut r),
    ];
    (c, els)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn act_is_a_group_action(seed in any::<u64>(), x in prop::array::uniform3(-3.0..3.0f64), y in prop::array::uniform3(-3.0..3.0f64)) {
        let (c, [a, _, _]) = seeded(seed);
        let xy: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u + v).collect();
        let lhs = act(&c, &x, &act(&c, &y, &a).unwrap()).unwrap();
        let rhs = act(&c, &xy, &a).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-13);
        prop_assert_eq!(act(&c, &[0.0; 3], &a).unwrap(), a);
    }

    #[test]
    fn product_is_equivariant(seed in any::<u64>(), x in prop::array::uniform3(-3.0..3.0f64)) {
        let (c, [a, b, _]) = seeded(seed);
        let lhs = act(&c, &x, &mul(&c, &a, &b).unwrap()).unwrap();
        let rhs = mul(&c, &act(&c, &x, &a).unwrap(), &act(&c, &x, &b).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-13);
    }

    #[test]
    fn product_frequencies_add(seed in any::<u64>()) {
        let (c, [a, b, _]) = seeded(seed);
        let prod = mul(&c, &a, &b).unwrap();
        // raw matrix product agrees with the spectral product
        let raw = a.reassemble() * b.reassemble();
        prop_assert!((prod.reassemble() - &raw).camax() < 1e-13);
        for t in prod.terms() {
            let q = c.canonical(&t.freq);
            for j in 0..3 {
                for k in 0..3 {
                    if t.coeff[(j, k)].norm() > 0.0 {
                        prop_assert!(c.same_frequency(&c.entry_frequency(j, k), &q));
                    }
                }
            }
        }
    }

    #[test]
    fn decompose_reassembles(seed in any::<u64>()) {
        let (c, _) = seeded(seed);
        let mut r = common::rng(seed);
        let m = nalgebra::DMatrix::from_fn(3, 3, |_, _| common::cplx(&mut r));
        let back = decompose(&c, &m).unwrap().reassemble();
        prop_assert!((back - m).camax() <= 1e-14);
    }

    #[test]
    fn deformed_product_is_associative(seed in any::<u64>(), t in prop::array::uniform3(-2.0..2.0f64)) {
        let (_, [a, b, c3]) = seeded(seed);
        let j = skew(t[0], t[1], t[2]);
        let left = deformed_mul(&j, &deformed_mul(&j, &a, &b).unwrap(), &c3).unwrap();
        let right = deformed_mul(&j, &a, &deformed_mul(&j, &b, &c3).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
    }

    #[test]
    fn action_stays_automorphic(seed in any::<u64>(), t in prop::array::uniform3(-2.0..2.0f64), x in prop::array::uniform3(-3.0..3.0f64)) {
        let (c, [a, b, _]) = seeded(seed);
        let j = skew(t[0], t[1], t[2]);
        let lhs = act(&c, &x, &deformed_mul(&j, &a, &b).unwrap()).unwrap();
        let rhs = deformed_mul(&j, &act(&c, &x, &a).unwrap(), &act(&c, &x, &b).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn reversed_form_conjugates_phases(p in prop::array::uniform2(-3i32..=3), q in prop::array::uniform2(-3i32..=3), th in -1.0..1.0f64) {
        let c = Carrier::standard_torus(2).unwrap();
        let up = c.monomial(vec![p[0] as f64, p[1] as f64]).unwrap();
        let uq = c.monomial(vec![q[0] as f64, q[1] as f64]).unwrap();
        let j = SkewForm::theta(th);
        let fwd = deformed_mul(&j, &uq, &up).unwrap().terms()[0].coeff[(0, 0)];
        let rev = deformed_mul(&j.neg(), &up, &uq).unwrap().terms()[0].coeff[(0, 0)];
        prop_assert!((fwd - rev).norm() < 1e-13);
        prop_assert!((rev.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_form_is_undeformed(seed in any::<u64>()) {
        let (c, [a, b, _]) = seeded(seed);
        let lhs = deformed_mul(&SkewForm::zero(3), &a, &b).unwrap();
        prop_assert_eq!(lhs, mul(&c, &a, &b).unwrap());
    }
}

#[test]
fn act_examples() {
    let c = Carrier::matrix(vec![vec![0.0], vec![0.5]], None).unwrap();
    let e12 = c.matrix_unit(0, 1).unwrap();
    assert_eq!(e12.homogeneous_frequency().unwrap().as_slice(), &[0.5]);
    let flipped = act(&c, &[1.0], &e12).unwrap();
    assert!(flipped.max_abs_diff(&e12.scale(Complex64::new(-1.0, 0.0))).unwrap() < 1e-15);
    let e11 = c.matrix_unit(0, 0).unwrap();
    assert_eq!(act(&c, &[0.731], &e11).unwrap(), e11);
    let e21 = c.matrix_unit(1, 0).unwrap();
    assert_eq!(mul(&c, &e12, &e21).unwrap(), e11);
    assert!(mul(&c, &e12, &SpectralElement::zero(&c)).unwrap().is_zero());
}

#[test]
fn torus_commutation_phases() {
    let c = Carrier::standard_torus(2).unwrap();
    let (u1, u2) = (c.generator(0).unwrap(), c.generator(1).unwrap());
    let th = 0.1;
    let j = SkewForm::theta(th);
    let plain = mul(&c, &u1, &u2).unwrap();
    let a = deformed_mul(&j, &u1, &u2).unwrap();
    let b = deformed_mul(&j, &u2, &u1).unwrap();
    assert!(a.max_abs_diff(&plain.scale(e(-th))).unwrap() < 1e-15);
    assert!(b.max_abs_diff(&plain.scale(e(th))).unwrap() < 1e-15);
    assert!(b.max_abs_diff(&a.scale(e(2.0 * th))).unwrap() < 1e-15);
}

/// Closed form of the damped planar factor `∬ e(αx - βy + xy) e^{-ε(x²+y²)}`.
fn damped_planar(alpha: f64, beta: f64, eps: f64) -> Complex64 {
    let s = PI * PI + eps * eps;
    let amp = PI / s.sqrt() * (-eps * (alpha * alpha + beta * beta) * PI * PI / s).exp();
    Complex64::from_polar(amp, 2.0 * PI * alpha * beta * PI * PI / s)
}

#[test]
fn oracle_matches_closed_form_of_damped_integral() {
    let c = Carrier::matrix(vec![vec![0.0, 0.0], vec![0.3, -0.2], vec![0.1, 0.45]], None).unwrap();
    let j = SkewForm::theta(0.7);
    let a = c.matrix_unit(0, 1).unwrap();
    let b = c.matrix_unit(1, 2).unwrap();
    let p = a.homogeneous_frequency().unwrap().to_vec();
    let q = b.homogeneous_frequency().unwrap().to_vec();
    let jt = j.apply_transpose(&p);
    for eps in [0.05, 0.01] {
        let got = oscillatory_oracle(&j, &a, &b, OracleParams::resolved(eps)).unwrap();
        let want = damped_planar(-jt[0], q[0], eps) * damped_planar(-jt[1], q[1], eps);
        let coeff = got.terms()[0].coeff[(0, 2)];
        assert!((coeff - want).norm() < 1e-12, "eps={eps}: {coeff} vs {want}");
    }
}

#[test]
fn oracle_converges_monotonically_to_the_phase() {
    let c = Carrier::standard_torus(2).unwrap();
    let (u1, u2) = (c.generator(0).unwrap(), c.generator(1).unwrap());
    let j = SkewForm::theta(0.1);
    let exact = deformed_mul(&j, &u1, &u2).unwrap();
    let mut last = f64::INFINITY;
    for k in 0..4 {
        let eps = 8e-3 / 2f64.powi(k);
        let got = oscillatory_oracle(&j, &u1, &u2, OracleParams::resolved(eps)).unwrap();
        let err = got.max_abs_diff(&exact).unwrap();
        assert!(err < last, "eps={eps}: {err} !< {last}");
        // the bias is ε(|Jᵀp|² + |q|²) to first order
        assert!((err / (eps * (0.01 + 1.0)) - 1.0).abs() < 0.02, "eps={eps}: {err}");
        let ph = got.terms()[0].coeff[(0, 0)];
        // the phase carries a second-order bias 2πθ·ε²/(π² + ε²)
        let phase_bias = 2.0 * PI * 0.1 * eps * eps / (PI * PI + eps * eps);
        assert!(((ph.arg() + 0.2 * PI).abs() - phase_bias).abs() < 1e-12);
        last = err;
    }
}

#[test]
fn oracle_for_zero_form_is_plain_product() {
    let c = Carrier::matrix(vec![vec![0.0, 0.0], vec![0.25, 0.5]], None).unwrap();
    let a = c.matrix_unit(0, 1).unwrap();
    let b = c.matrix_unit(1, 1).unwrap();
    let got = oscillatory_oracle(&SkewForm::zero(2), &a, &b, OracleParams::resolved(1e-3)).unwrap();
    let want = mul(&c, &a, &b).unwrap();
    let rel = got.max_abs_diff(&want).unwrap() / want.max_abs();
    assert!(rel < 1e-3, "{rel}");
}
