use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use nullfrenet_core::curve::{frame_at, reparametrize, Tolerances};
use nullfrenet_core::jet::Jet;
use nullfrenet_core::minkowski::Dim;
use nullfrenet_core::profile::{AnalyticProfile, CurvatureProfile};
use nullfrenet_core::reconstruct::{integrate, CurveState};

/// `k1 = a0 + a1 sin(w1 s + p1)` in `[-5, -1/2]` and
/// `k2 = b0 + b1 cos(w2 s + p2)` in `(0, 1.3]`; frame components then grow
/// by at most about `e^5` over the domain.
fn random_profile(rng: &mut StdRng, dim: Dim) -> AnalyticProfile {
    let a1 = rng.gen_range(0.0..1.0);
    let a0 = rng.gen_range(-4.0..-1.5);
    let (w1, p1) = (rng.gen_range(0.2..2.0), rng.gen_range(0.0..6.0));
    let b1 = rng.gen_range(0.0..0.3);
    let b0 = rng.gen_range(0.3..1.0);
    let (w2, p2) = (rng.gen_range(0.2..2.0), rng.gen_range(0.0..6.0));
    AnalyticProfile::new(dim, (0.0, 5.0), move |s: &Jet| {
        let k1 = (*s * w1 + p1).sin() * a1 + a0;
        let k2 = match dim {
            Dim::Four => (*s * w2 + p2).cos() * b1 + b0,
            Dim::Three => Jet::constant(0.0, s.len()),
        };
        (k1, k2)
    })
}

fn round_trip_error(profile: &AnalyticProfile) -> f64 {
    let init = CurveState::standard(profile.dim());
    let traj = integrate(profile, &init, 1e-3, 10).unwrap();
    let curve = Arc::new(traj.to_curve_source(5).unwrap());
    let map = reparametrize(curve).unwrap();
    let tol = Tolerances::sampled();
    let mut worst: f64 = 0.0;
    for i in 1..50 {
        let s = 0.1 * i as f64;
        let (_, k) = frame_at(&map, s, &tol).unwrap();
        let (k1, k2) = profile.kappa(s).unwrap();
        worst = worst.max((k.kappa1 - k1).abs() / k1.abs().max(1.0));
        worst = worst.max((k.kappa2 - k2).abs() / k2.abs().max(1.0));
    }
    worst
}

#[test]
fn reconstruct_then_extract_recovers_curvatures() {
    let mut rng = StdRng::seed_from_u64(11);
    for dim in [Dim::Three, Dim::Four] {
        for _ in 0..3 {
            let p = random_profile(&mut rng, dim);
            let e = round_trip_error(&p);
            assert!(e <= 1e-6, "{dim:?}: {e:e}");
        }
    }
}
