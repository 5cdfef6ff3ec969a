use std::sync::Arc;

use proptest::prelude::*;

use nullfrenet_core::builtin::Helix;
use nullfrenet_core::curve::{
    frame_at, frame_at_lambda, reparametrize, CurveSource, NullFrame, Reparametrized, Tolerances,
};
use nullfrenet_core::field::{PolynomialField, WindowField};
use nullfrenet_core::jet::Jet;
use nullfrenet_core::minkowski::{
    dot, levi_civita_contract3, levi_civita_contract4, levi_civita_dual3, wedge, BiVector, Dim, FourVector,
};
use nullfrenet_core::models::quadrature_period;
use nullfrenet_core::noether::charges_arclength;
use nullfrenet_core::profile::ConstantProfile;
use nullfrenet_core::reconstruct::{closed_form, restore_frame, CurveState};
use nullfrenet_core::variation::{delta_kappa1, delta_kappa2, omega, DeformationField};

fn comp() -> impl Strategy<Value = f64> {
    -3.0..3.0f64
}

fn vec4() -> impl Strategy<Value = FourVector> {
    (comp(), comp(), comp(), comp()).prop_map(|(t, x, y, z)| FourVector::new(t, x, y, z))
}

fn vec3() -> impl Strategy<Value = FourVector> {
    (comp(), comp(), comp()).prop_map(|(t, x, y)| FourVector::new3(t, x, y))
}

fn bivec4() -> impl Strategy<Value = BiVector> {
    (vec4(), vec4(), vec4(), vec4()).prop_map(|(a, b, c, d)| wedge(&a, &b).unwrap() + wedge(&c, &d).unwrap())
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            d = -d;
        }
        d *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(r);
            for (x, y) in lower[0][col..n].iter_mut().zip(&upper[col][col..n]) {
                *x -= f * y;
            }
        }
    }
    d
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect()
}

/// `eps_{mu nu rho sigma} P^nu M^{rho sigma}` with the covariant symbol
/// written as minus the determinant of the slot vectors; index raised.
fn contract4_oracle(p: &FourVector, m: &BiVector) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (mu, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for &(r, q) in BiVector::index_pairs(Dim::Four) {
            let rows = vec![unit(4, mu), p.components().to_vec(), unit(4, r), unit(4, q)];
            s += 2.0 * m.get(r, q) * -det(rows);
        }
        *o = if mu == 0 { s } else { -s };
    }
    out
}

fn contract3_oracle(p: &FourVector, x: &FourVector) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (mu, o) in out.iter_mut().enumerate() {
        let s = -det(vec![unit(3, mu), p.components().to_vec(), x.components().to_vec()]);
        *o = if mu == 0 { s } else { -s };
    }
    out
}

fn boost(v: &FourVector, rapidity: f64, angle: f64) -> FourVector {
    let c = v.components();
    let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
    let (t, x) = (ch * c[0] + sh * c[1], sh * c[0] + ch * c[1]);
    let (y, z) = (angle.cos() * c[2] - angle.sin() * c.get(3).copied().unwrap_or(0.0), 0.0);
    match v.dim() {
        Dim::Three => FourVector::new3(t, x, y),
        Dim::Four => {
            let z = z + angle.sin() * c[2] + angle.cos() * c[3];
            FourVector::new(t, x, y, z)
        }
    }
}

fn boost_state(s: &CurveState, rapidity: f64, angle: f64) -> CurveState {
    CurveState { sigma: s.sigma, x: boost(&s.x, rapidity, angle), frame: s.frame.map(|v| boost(v, rapidity, angle)) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dot_is_symmetric_and_bilinear(a in vec4(), b in vec4(), c in vec4(), s in comp()) {
        let ab = dot(&a, &b).unwrap();
        prop_assert_eq!(ab, dot(&b, &a).unwrap());
        let lhs = dot(&(a * s + b), &c).unwrap();
        let rhs = s * dot(&a, &c).unwrap() + dot(&b, &c).unwrap();
        let scale = (a.euclidean_norm() * s.abs() + b.euclidean_norm()) * c.euclidean_norm();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * scale.max(1.0));
    }

    #[test]
    fn contract4_matches_determinant_oracle(p in vec4(), m in bivec4()) {
        let v = levi_civita_contract4(&p, &m).unwrap();
        let o = contract4_oracle(&p, &m);
        let scale = p.euclidean_norm() * m.max_abs() * 24.0;
        for (a, b) in v.components().iter().zip(o) {
            prop_assert!((a - b).abs() <= 1e-13 * scale.max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn contract3_matches_determinant_oracle(p in vec3(), x in vec3()) {
        let v = levi_civita_contract3(&p, &x).unwrap();
        let o = contract3_oracle(&p, &x);
        let scale = p.euclidean_norm() * x.euclidean_norm() * 6.0;
        for (a, b) in v.components().iter().zip(o) {
            prop_assert!((a - b).abs() <= 1e-13 * scale.max(1e-300));
        }
        // the dual of a wedge is twice half the contraction
        let d = levi_civita_dual3(&wedge(&p, &x).unwrap()).unwrap();
        prop_assert!((d - v).max_abs() <= 1e-13 * scale.max(1e-300));
    }

    #[test]
    fn curvature_variations_are_linear(
        a in prop::collection::vec(-1.0..1.0f64, 6),
        b in prop::collection::vec(-1.0..1.0f64, 6),
        k1 in -2.0..2.0f64,
        k2 in 0.0..2.0f64,
        c in -2.0..2.0f64,
        s in 0.0..2.0f64,
    ) {
        let p = ConstantProfile::new(Dim::Four, k1, k2, 3.0).unwrap();
        let field = |v: &[f64]| -> Arc<PolynomialField> { Arc::new(PolynomialField::new(v.to_vec())) };
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| c * x + y).collect();
        let fa = DeformationField::new(Dim::Four, field(&a), field(&b)).unwrap();
        let fb = DeformationField::new(Dim::Four, field(&b), field(&a)).unwrap();
        let swapped: Vec<f64> = b.iter().zip(&a).map(|(x, y)| c * x + y).collect();
        let fc = DeformationField::new(Dim::Four, field(&combo), field(&swapped)).unwrap();
        type Op = fn(&DeformationField, &ConstantProfile, f64) -> nullfrenet_core::Result<f64>;
        let ops: [Op; 3] = [
            |d, p, s| omega(d, p, s),
            |d, p, s| delta_kappa1(d, p, s),
            |d, p, s| delta_kappa2(d, p, s),
        ];
        for op in ops {
            let lhs = op(&fc, &p, s).unwrap();
            let rhs = c * op(&fa, &p, s).unwrap() + op(&fb, &p, s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn restore_is_idempotent(noise in prop::collection::vec(-1e-7..1e-7f64, 16), rap in -1.0..1.0f64, ang in -3.0..3.0f64) {
        let f0 = NullFrame::standard(Dim::Four).map(|v| boost(v, rap, ang));
        let mut k = noise.chunks(4);
        let mut jiggle = |v: &FourVector| {
            let n = k.next().unwrap();
            *v + FourVector::new(n[0], n[1], n[2], n[3])
        };
        let noisy = NullFrame {
            e_plus: jiggle(&f0.e_plus),
            e_minus: jiggle(&f0.e_minus),
            e1: jiggle(&f0.e1),
            e2: f0.e2.as_ref().map(&mut jiggle),
        };
        let once = restore_frame(&noisy).unwrap();
        let twice = restore_frame(&once).unwrap();
        prop_assert!(once.gram_residual() <= 1e-14);
        for (a, b) in once.legs().iter().zip(twice.legs()) {
            prop_assert!((*a - b).max_abs() <= 1e-14);
        }
        for (a, b) in once.legs().iter().zip(noisy.legs()) {
            prop_assert!((*a - b).max_abs() <= 1e-5);
        }
    }

    #[test]
    fn casimirs_are_lorentz_invariant(k1 in -2.0..-0.1f64, k2 in 0.0..1.0f64, s in 0.0..4.0f64, rap in -1.5..1.5f64, ang in -3.0..3.0f64) {
        let helix = Helix::new(Dim::Four, k1, k2, 5.0).unwrap();
        let st = helix.state_at(s);
        let a = charges_arclength(1.0, &st, k1).unwrap();
        let b = charges_arclength(1.0, &boost_state(&st, rap, ang), k1).unwrap();
        let scale = rap.cosh().powi(4);
        prop_assert!((a.mass2 - b.mass2).abs() <= 1e-12 * scale);
        prop_assert!((a.casimir2 - b.casimir2).abs() <= 1e-11 * scale * (1.0 + a.casimir2.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn curvatures_do_not_depend_on_parametrization(k1 in -1.5..0.5f64, k2 in 0.05..1.0f64, c in 0.2..0.9f64) {
        let helix: Arc<dyn CurveSource> = Arc::new(Helix::new(Dim::Four, k1, k2, 4.0).unwrap());
        // lambda(mu) = mu + c sin(mu) / 2 is increasing on [0, 3]
        let re = Arc::new(Reparametrized::new(helix.clone(), (0.0, 3.0), move |m: &Jet| *m + m.sin() * (0.5 * c)));
        let tol = Tolerances::default();
        for mu in [0.4, 1.3, 2.6] {
            let (_, a) = frame_at_lambda(re.as_ref(), mu, &tol).unwrap();
            let (_, b) = frame_at_lambda(helix.as_ref(), re.inner_parameter(mu), &tol).unwrap();
            prop_assert!((a.kappa1 - b.kappa1).abs() <= 1e-10);
            prop_assert!((a.kappa2 - b.kappa2).abs() <= 1e-10);
        }
        let map = reparametrize(re.clone()).unwrap();
        prop_assert!((map.total() - re.inner_parameter(3.0)).abs() <= 1e-10);
        let mut last = -1.0;
        for i in 0..=30 {
            let s = map.sigma_of(3.0 * i as f64 / 30.0).unwrap();
            prop_assert!(s > last);
            last = s;
        }
        let (_, k) = frame_at(&map, 1.7, &tol).unwrap();
        // the helix is parametrized by pseudo-arclength
        prop_assert!((k.kappa1 - k1).abs() <= 1e-9 && (k.kappa2 - k2).abs() <= 1e-9);
    }

    #[test]
    fn period_matches_agm(r1 in -3.0..0.0f64, gap1 in 0.1..2.0f64, gap2 in 0.05..3.0f64) {
        let (r2, r3) = (r1 + gap1, r1 + gap1 + gap2);
        let m = (r2 - r1) / (r3 - r1);
        // K(m) = pi / (2 AGM(1, sqrt(1 - m)))
        let (mut a, mut g) = (1.0f64, (1.0 - m).sqrt());
        for _ in 0..40 {
            let next = (0.5 * (a + g), (a * g).sqrt());
            a = next.0;
            g = next.1;
        }
        let k = std::f64::consts::PI / (2.0 * a);
        let agm = 4.0 * k / (r3 - r1).sqrt();
        let q = quadrature_period(r1, r2, r3).unwrap();
        prop_assert!((q - agm).abs() <= 1e-10 * agm, "{q} vs {agm}");
    }
}

#[test]
fn helix_closed_form_is_a_one_parameter_group() {
    let st = CurveState::standard(Dim::Four);
    let k = nullfrenet_core::curve::CurvaturePair { kappa1: -0.7, kappa2: 0.4 };
    let a = closed_form(k, &closed_form(k, &st, 1.1), 3.4);
    let b = closed_form(k, &st, 3.4);
    assert!((a.x - b.x).max_abs() < 1e-12);
    for (u, v) in a.frame.legs().iter().zip(b.frame.legs()) {
        assert!((*u - v).max_abs() < 1e-12);
    }
}

#[test]
fn compact_deformations_vanish_outside_their_window() {
    let def = DeformationField::planar(Dim::Three, Arc::new(WindowField::bump(1.0, 2.0, 8).unwrap()));
    let p = ConstantProfile::new(Dim::Three, -0.5, 0.0, 3.0).unwrap();
    for s in [0.5, 1.0, 2.0, 2.5] {
        assert_eq!(omega(&def, &p, s).unwrap(), 0.0);
        assert_eq!(delta_kappa1(&def, &p, s).unwrap(), 0.0);
    }
}
