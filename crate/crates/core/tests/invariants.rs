use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use magflow::fourier::{bundle_scale, torus_scale, Fourier2, Fourier3};
use magflow::hyperbolic::{distance, Mobius};
use magflow::orbits::{ClosedOrbit, OrbitDatabase, OrbitRecord, TopologicalClass};
use magflow::parallel::{ordered_sum, par_map_range, with_jobs};
use magflow::smbundle::{frame_at, magnetic_commutators_check, LiouvilleQuadrature, SmFunction, TrigFunction, UnitTangent};
use magflow::spectrum::{circular_distance, mod1};
use magflow::surface::{ConformalTorusSpec, HyperbolicConstantSpec, SurfacePoint, SurfaceModel, TangentVector};
use magflow::system::{MagneticSystem, OneForm};
use magflow::variational::{pestov_pointwise, theorem_b_mechanism};

fn torus(seed: u64) -> MagneticSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Fourier2::random(&mut rng, [2, 2], 0.15, torus_scale());
    let mut l = Fourier2::random(&mut rng, [2, 2], 0.4, torus_scale());
    l.add_constant(0.3);
    MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::new(u, l, 2).unwrap())).unwrap()
}

proptest! {
    #[test]
    fn mod1_lands_in_unit_interval(x in -1e6f64..1e6, n in -1000i32..1000) {
        let r = mod1(x);
        prop_assert!((0.0..1.0).contains(&r));
        prop_assert!(circular_distance(mod1(x + n as f64), r) < 1e-9);
    }

    #[test]
    fn circular_distance_is_a_metric_on_the_circle(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0) {
        let (ab, ba) = (circular_distance(a, b), circular_distance(b, a));
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=0.5).contains(&ab));
        prop_assert!(ab <= circular_distance(a, c) + circular_distance(c, b) + 1e-12);
    }

    #[test]
    fn rotation_is_a_complex_structure(x1 in 0.0f64..1.0, x2 in 0.0f64..1.0, v1 in -3.0f64..3.0, v2 in -3.0f64..3.0, seed in 0u64..50) {
        prop_assume!(v1.hypot(v2) > 1e-6);
        let sys = torus(seed);
        let p = SurfacePoint::new(x1, x2);
        let v = TangentVector::new(v1, v2);
        let iv = sys.surface.rotate_tangent(p, v).unwrap();
        let iiv = sys.surface.rotate_tangent(p, iv).unwrap();
        prop_assert!((iiv.v1 + v1).abs() < 1e-15 && (iiv.v2 + v2).abs() < 1e-15);
        let g = sys.metric(p).unwrap();
        let (a, b) = ([v1, v2], [iv.v1, iv.v2]);
        prop_assert!((g.inner(a, a) - g.inner(b, b)).abs() < 1e-12 * g.inner(a, a));
        prop_assert!(g.inner(a, b).abs() < 1e-12 * g.inner(a, a));
    }

    #[test]
    fn disk_automorphisms_are_isometries(ar in -0.6f64..0.6, ai in -0.6f64..0.6, phi in 0.0f64..std::f64::consts::TAU,
                                         p in (-0.7f64..0.7, -0.7f64..0.7), q in (-0.7f64..0.7, -0.7f64..0.7)) {
        let (p, q) = (Complex64::new(p.0, p.1), Complex64::new(q.0, q.1));
        prop_assume!(p.norm() < 0.95 && q.norm() < 0.95);
        let a = Complex64::new(ar, ai);
        let rot = Complex64::from_polar(1.0, phi);
        let m = Mobius::new(rot, -rot * a, -a.conj(), Complex64::new(1.0, 0.0));
        let (d0, d1) = (distance(p, q), distance(m.apply(p), m.apply(q)));
        prop_assert!((d0 - d1).abs() < 1e-9 * (1.0 + d0), "{d0} vs {d1}");
    }

    #[test]
    fn trig_series_are_real(seed in 0u64..1000, x1 in 0.0f64..1.0, x2 in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Fourier2::random(&mut rng, [3, 3], 1.0, torus_scale());
        let (_, imag) = f.jet_with_imag([x1, x2]);
        prop_assert!(imag.abs() < 1e-13);
        // periodicity
        prop_assert!((f.value([x1, x2]) - f.value([x1 + 1.0, x2 - 2.0])).abs() < 1e-12);
    }

    #[test]
    fn ordered_sum_ignores_the_thread_count(seed in 0u64..1000, jobs in 1usize..6) {
        let terms = |_| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..500).map(|_| rand::Rng::gen_range(&mut rng, -1e3..1e3)).collect::<Vec<f64>>()
        };
        let data: Vec<f64> = terms(());
        let a = with_jobs(1, || ordered_sum(&par_map_range(data.len(), |i| data[i].sin() * 1e-3)));
        let b = with_jobs(jobs, || ordered_sum(&par_map_range(data.len(), |i| data[i].sin() * 1e-3)));
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_identity_and_commutators_hold_pointwise(seed in 0u64..10_000, x1 in 0.0f64..1.0, x2 in 0.0f64..1.0, th in 0.0f64..std::f64::consts::TAU) {
        let sys = torus(seed % 7);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = TrigFunction(Fourier3::random(&mut rng, [2, 2, 2], 1.0, bundle_scale()));
        let z = UnitTangent::new(x1, x2, th);
        prop_assert!(pestov_pointwise(&sys, &phi, &z).unwrap().relative() < 1e-9);
        let jet = phi.jet(&sys, &z).unwrap();
        let r = magnetic_commutators_check(&frame_at(&sys, &z).unwrap(), &jet).relative();
        prop_assert!(r.iter().all(|v| *v < 1e-9), "{r:?}");
    }

    #[test]
    fn hyperbolic_identity_inside_the_disk(r in 0.0f64..0.85, a in 0.0f64..std::f64::consts::TAU, th in 0.0f64..std::f64::consts::TAU, lam in -0.9f64..0.9, seed in 0u64..1000) {
        let sys = MagneticSystem::new(SurfaceModel::Hyperbolic(HyperbolicConstantSpec::new(lam).unwrap())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = magflow::smbundle::DiskPolynomial::random(&mut rng, 3, 2, 1.0);
        let z = UnitTangent::new(r * a.cos(), r * a.sin(), th);
        prop_assert!(pestov_pointwise(&sys, &phi, &z).unwrap().relative() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn liouville_measure_is_flip_and_rotation_invariant(seed in 0u64..10_000) {
        let sys = torus(seed % 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = OneForm {
            w1: Fourier2::random(&mut rng, [2, 2], 1.0, torus_scale()),
            w2: Fourier2::random(&mut rng, [2, 2], 1.0, torus_scale()),
        };
        let q = LiouvilleQuadrature::for_degree(&sys, [8, 8, 2], 40).unwrap();
        let m = theorem_b_mechanism(&sys, &Fourier2::zero(torus_scale()), &w, None, &q).unwrap();
        prop_assert!(m.omega_mean.abs() < 1e-10);
        prop_assert!(m.symmetry_gap < 1e-10 * m.omega_sq.max(1.0));
    }

    #[test]
    fn orbit_store_round_trips(period in 0.1f64..50.0, x in 0.0f64..1.0, tau in -1.0f64..1.0, m in -3i64..3) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("orbits.jsonl");
        let orbit = ClosedOrbit {
            z0: UnitTangent::new(x, 1.0 - x, 0.25),
            period,
            class: TopologicalClass::Torus { m, n: 1, winding: 0 },
            newton_residual: 1e-13,
            stability: None,
        };
        let mut db = OrbitDatabase::open(&path).unwrap();
        db.insert(OrbitRecord { system_hash: "h".into(), class: orbit.class.key(), tau, orbit: orbit.clone() }).unwrap();
        let reopened = OrbitDatabase::open(&path).unwrap();
        prop_assert_eq!(reopened.get("h", &orbit.class.key(), tau), Some(&orbit));
        prop_assert!(reopened.get("h", &orbit.class.key(), tau + 1e-3).is_none());
    }
}
