use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magflow::fourier::{bundle_scale, torus_scale, Fourier2, Fourier3};
use magflow::hyperbolic::Word;
use magflow::orbits::{hyperbolic_class, hyperbolic_orbit_oracle, shoot_and_refine, ClosedOrbit, ShootingOptions, TopologicalClass};
use magflow::smbundle::{BasicFunction, CorruptedFrame, FieldKind, TrigFunction, UnitTangent};
use magflow::spectrum::{action_entry, FnCurve, HolonomyOptions, OrbitCurve, Profile, Reparametrized};
use magflow::surface::{ConformalTorusSpec, HyperbolicConstantSpec, SurfaceModel};
use magflow::system::{MagneticSystem, OneForm};
use magflow::variational::*;

fn random_torus(rng: &mut ChaCha8Rng) -> MagneticSystem {
    let u = Fourier2::random(rng, [2, 2], 0.15, torus_scale());
    let mut l = Fourier2::random(rng, [2, 2], 0.5, torus_scale());
    l.add_constant(0.3);
    MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::new(u, l, 2).unwrap())).unwrap()
}

fn random_phi(rng: &mut ChaCha8Rng, deg: usize) -> TrigFunction {
    TrigFunction(Fourier3::random(rng, [deg, deg, deg], 1.0, bundle_scale()))
}

fn random_point(rng: &mut ChaCha8Rng) -> UnitTangent {
    UnitTangent::new(rng.gen(), rng.gen(), rng.gen_range(0.0..TAU))
}

fn flat(l: f64) -> MagneticSystem {
    MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::flat(l))).unwrap()
}

fn circle(sys: &MagneticSystem, l0: f64) -> ClosedOrbit {
    let opts = ShootingOptions {
        allow_degenerate: true,
        ..Default::default()
    };
    let class = TopologicalClass::Torus { m: 0, n: 0, winding: 1 };
    shoot_and_refine(sys, &class, UnitTangent::new(0.2, 0.7, 1.1), TAU / l0, &opts).unwrap()
}

fn hyperbolic_orbit(lam: f64, w: &str) -> (MagneticSystem, ClosedOrbit) {
    let spec = HyperbolicConstantSpec::new(lam).unwrap();
    let sys = MagneticSystem::new(SurfaceModel::Hyperbolic(spec.clone())).unwrap();
    let word = Word::parse(w).unwrap();
    let oracle = hyperbolic_orbit_oracle(&spec, &word).unwrap();
    let class = hyperbolic_class(&spec.deck_generators, &word).unwrap();
    let orbit = shoot_and_refine(&sys, &class, oracle.seed(), oracle.period, &Default::default()).unwrap();
    (sys, orbit)
}

#[test]
fn pestov_holds_pointwise_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for _ in 0..25 {
        let sys = random_torus(&mut rng);
        for _ in 0..4 {
            let phi = random_phi(&mut rng, 2);
            for _ in 0..5 {
                let r = pestov_pointwise(&sys, &phi, &random_point(&mut rng)).unwrap();
                worst = worst.max(r.relative());
            }
        }
    }
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn pestov_trivial_and_geodesic_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sys = random_torus(&mut rng);
    let mut c = Fourier3::zero(bundle_scale());
    c.add_constant(2.5);
    let r = pestov_pointwise(&sys, &TrigFunction(c), &random_point(&mut rng)).unwrap();
    assert_eq!(r.residual, 0.0);

    let u = Fourier2::random(&mut rng, [2, 2], 0.2, torus_scale());
    let geo = MagneticSystem::with_c(
        SurfaceModel::Torus(ConformalTorusSpec::new(u, Fourier2::zero(torus_scale()), 2).unwrap()),
        1.0,
    )
    .unwrap();
    for _ in 0..20 {
        let phi = random_phi(&mut rng, 2);
        assert!(pestov_pointwise(&geo, &phi, &random_point(&mut rng)).unwrap().relative() < 1e-9);
    }
}

#[test]
fn pestov_detects_a_wrong_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sys = random_torus(&mut rng);
    let bad = CorruptedFrame {
        sys: &sys,
        field: FieldKind::H,
        component: 2,
        factor: 1.1,
    };
    let worst = (0..20)
        .map(|_| pestov_pointwise(&bad, &random_phi(&mut rng, 2), &random_point(&mut rng)).unwrap().relative())
        .fold(0.0, f64::max);
    assert!(worst > 1e-4);
}

#[test]
fn integrated_identities_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3 {
        let sys = random_torus(&mut rng);
        let phi = random_phi(&mut rng, 2);
        let q = identity_quadrature(&sys, &phi, 40).unwrap();
        let r = integrated_identities(&sys, &phi, &q).unwrap();
        assert!(r.integrated_pestov < 1e-9, "{r:?}");
        assert!(r.expansion < 1e-9, "{r:?}");
        assert!(r.final_identity < 1e-9, "{r:?}");
        assert!(r.divergence.iter().all(|d| *d < 1e-10), "{r:?}");
        assert!(r.pointwise_max < 1e-9);
    }
}

#[test]
fn integrated_identities_reject_coarse_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sys = random_torus(&mut rng);
    let phi = random_phi(&mut rng, 3);
    let q = magflow::smbundle::LiouvilleQuadrature::new(&sys, [9, 9, 5]).unwrap();
    assert!(integrated_identities(&sys, &phi, &q).is_err());
}

#[test]
fn basic_functions_balance_the_final_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sys = random_torus(&mut rng);
    let h = Fourier2::random(&mut rng, [2, 2], 1.0, torus_scale());
    let phi = BasicFunction(h.clone());
    let q = identity_quadrature(&sys, &phi, 40).unwrap();
    let r = integrated_identities(&sys, &phi, &q).unwrap();
    assert!(r.final_lhs.abs() < 1e-12);
    assert!(r.final_rhs.abs() < 1e-9 * r.final_lhs.abs().max(1.0));

    let m = theorem_b_mechanism(&sys, &Fourier2::zero(torus_scale()), &OneForm::exact(&h), Some(&phi), &q).unwrap();
    assert!(m.cohomological_residual.unwrap() < 1e-12);
    assert!(m.mechanism_residual.unwrap() < 1e-9, "{m:?}");
    assert!(m.omega_mean.abs() < 1e-10);
    assert!(m.symmetry_gap < 1e-10);
}

#[test]
fn obstruction_of_a_constant_potential() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sys = random_torus(&mut rng);
    let mut g = Fourier2::zero(torus_scale());
    g.add_constant(0.7);
    let q = magflow::smbundle::LiouvilleQuadrature::new(&sys, [40, 40, 9]).unwrap();
    let m = theorem_b_mechanism(&sys, &g, &OneForm::zero(), None, &q).unwrap();
    assert!((m.g_sq - 0.49 * q.total_mass()).abs() < 1e-12);
    assert!(m.rhs.is_none() && m.omega_sq == 0.0);
}

#[test]
fn index_form_on_hypercycles() {
    let (sys, orbit) = hyperbolic_orbit(0.5, "a");
    let one = PeriodicFunction::constant(orbit.period, 1.0);
    let e = &index_form(&sys, &orbit, &[one], 256).unwrap()[0];
    assert!((e.value - 0.75 * orbit.period).abs() < 1e-9);
    assert!((e.riccati.unwrap() - e.value).abs() < 1e-7);

    let sweep = index_form_sweep(&sys, &orbit, 100, 4, 7, 256).unwrap();
    assert!(sweep.min_value > -1e-9);
    assert!(sweep.margin >= 0.75 - 1e-9);
    assert!(sweep.max_route_gap < 1e-7, "{sweep:?}");
    assert_eq!(sweep.zero_value, 0.0);
    assert!(sweep.riccati_available);
}

#[test]
fn index_form_goes_negative_without_hyperbolicity() {
    let sys = flat(0.5);
    let orbit = circle(&sys, 0.5);
    let sweep = index_form_sweep(&sys, &orbit, 50, 3, 1, 256).unwrap();
    assert!(sweep.min_value < 0.0);
    assert!(!sweep.riccati_available);
    let one = PeriodicFunction::constant(orbit.period, 1.0);
    let e = &index_form(&sys, &orbit, &[one], 64).unwrap()[0];
    assert!((e.value + 0.25 * orbit.period).abs() < 1e-9);
}

#[test]
fn index_form_needs_a_closed_orbit() {
    let sys = flat(0.5);
    let mut orbit = circle(&sys, 0.5);
    orbit.period *= 0.9;
    assert!(index_form(&sys, &orbit, &[], 64).is_err());
}

#[test]
fn free_time_action_at_the_energy_level_is_the_action() {
    let opts = HolonomyOptions::default();
    let sys = flat(0.8);
    let orbit = circle(&sys, 0.8);
    let curve = OrbitCurve::new(&sys, &orbit, 1e-12).unwrap();
    let a = free_time_action(&sys, &curve, 0.5, &opts).unwrap();
    let e = action_entry(&sys, &orbit, &opts).unwrap();
    assert!((a.value_lift - e.action_lift).abs() < 1e-8);
    assert!((a.kinetic - 0.5 * TAU / 0.8).abs() < 1e-9);

    // non-unit speed: kinetic part changes, geometric part does not
    let re = Reparametrized {
        base: &curve,
        period: 6.0,
        amplitude: 0.2,
    };
    let b = free_time_action(&sys, &re, 0.5, &opts).unwrap();
    assert!((b.value_lift - a.value_lift).abs() > 1e-3);
    assert!((b.holonomy_lift - a.holonomy_lift).abs() < 1e-8);

    let (hsys, horbit) = hyperbolic_orbit(0.5, "ab");
    let hc = OrbitCurve::new(&hsys, &horbit, 1e-12).unwrap();
    let a = free_time_action(&hsys, &hc, 0.5, &opts).unwrap();
    let e = action_entry(&hsys, &horbit, &opts).unwrap();
    assert!((a.value_lift - e.action_lift).abs() < 1e-8);
}

#[test]
fn constant_curve_has_only_the_energy_term() {
    let sys = flat(0.8);
    let point = FnCurve {
        period: 2.5,
        class: TopologicalClass::Torus { m: 0, n: 0, winding: 0 },
        pos: |_| [0.3, 0.4],
        vel: |_| [0.0, 0.0],
    };
    let a = free_time_action(&sys, &point, 0.7, &HolonomyOptions::default()).unwrap();
    assert_eq!(a.kinetic, 0.0);
    assert!((a.value_lift - 1.75).abs() < 1e-15);
}

#[test]
fn orbits_are_critical_for_the_free_time_action() {
    let opts = HolonomyOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sys = flat(0.8);
    let orbit = circle(&sys, 0.8);
    let curve = OrbitCurve::new(&sys, &orbit, 1e-13).unwrap();
    for _ in 0..5 {
        let p = Profile::random(&mut rng, 3, 0.05);
        let r = first_variation_check(&sys, &curve, &p, rng.gen_range(-0.5..0.5), 0.5, 1e-3, &opts).unwrap();
        assert!(r.derivative.abs() < 1e-6, "{r:?}");
    }
    let (hsys, horbit) = hyperbolic_orbit(0.5, "a");
    let hc = OrbitCurve::new(&hsys, &horbit, 1e-13).unwrap();
    for _ in 0..3 {
        let p = Profile::random(&mut rng, 3, 0.05);
        let r = first_variation_check(&hsys, &hc, &p, rng.gen_range(-0.5..0.5), 0.5, 1e-3, &opts).unwrap();
        assert!(r.derivative.abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn non_orbits_are_not_critical() {
    let sys = flat(0.8);
    // unit-speed circle of the wrong radius
    let r0 = 0.9;
    let curve = FnCurve {
        period: TAU * r0,
        class: TopologicalClass::Torus { m: 0, n: 0, winding: 1 },
        pos: move |t: f64| [r0 * (t / r0).cos(), r0 * (t / r0).sin()],
        vel: move |t: f64| [-(t / r0).sin(), (t / r0).cos()],
    };
    // radial push; a pure period stretch would not do, since any unit-speed
    // loop is critical for the stretch at energy 1/2
    let p = Profile {
        a: vec![(1, 0.1, 0.0)],
        b: vec![(1, 0.0, 0.1)],
    };
    let r = first_variation_check(&sys, &curve, &p, 0.0, 0.5, 1e-3, &HolonomyOptions::default()).unwrap();
    assert!(r.derivative.abs() > 1e-2, "{r:?}");
}

#[test]
fn time_shift_leaves_the_action_unchanged() {
    let opts = HolonomyOptions::default();
    let sys = flat(0.8);
    let orbit = circle(&sys, 0.8);
    let curve = OrbitCurve::new(&sys, &orbit, 1e-12).unwrap();
    let a0 = free_time_action(&sys, &curve, 0.5, &opts).unwrap().value_lift;
    for s in [0.4, 1.9, 5.0] {
        let shifted = ClosedOrbit {
            z0: curve.solution().state_at(s),
            ..orbit.clone()
        };
        let c = OrbitCurve::new(&sys, &shifted, 1e-12).unwrap();
        let a = free_time_action(&sys, &c, 0.5, &opts).unwrap().value_lift;
        assert!((a - a0).abs() < 1e-9);
    }
}
