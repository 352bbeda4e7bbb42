use crate::error::{Error, Result};
use crate::smbundle::UnitTangent;
use crate::surface::{HyperbolicConstantSpec, SurfaceModel};
use crate::system::MagneticSystem;

use super::{shoot_and_refine, ClosedOrbit, ShootingOptions, TopologicalClass};

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationPoint {
    pub tau: f64,
    pub orbit: ClosedOrbit,
}

const MAX_HALVINGS: u32 = 5;

fn predict(points: &[ContinuationPoint], tau: f64) -> (UnitTangent, f64) {
    let last = &points[points.len() - 1];
    if points.len() < 2 {
        return (last.orbit.z0, last.orbit.period);
    }
    let prev = &points[points.len() - 2];
    let dt = last.tau - prev.tau;
    if dt == 0.0 {
        return (last.orbit.z0, last.orbit.period);
    }
    let s = (tau - last.tau) / dt;
    let a = last.orbit.z0.state();
    let b = prev.orbit.z0.state();
    let z = UnitTangent::from_state(std::array::from_fn(|i| a[i] + s * (a[i] - b[i])));
    (z, last.orbit.period + s * (last.orbit.period - prev.orbit.period))
}

fn same_class(a: &TopologicalClass, b: &TopologicalClass) -> bool {
    match (a, b) {
        (TopologicalClass::Torus { m, n, .. }, TopologicalClass::Torus { m: p, n: q, .. }) => m == p && n == q,
        _ => a == b,
    }
}

/// Predictor-corrector continuation of a nondegenerate closed orbit along the
/// deformation parameter of `sys`, returning the orbit at each `taus` value
/// (in the given order, starting from `tau0`). Failed corrector steps are
/// retried with halved parameter steps; a degenerate orbit or repeated failure
/// halts the continuation.
pub fn continue_in_parameter(
    sys: &MagneticSystem,
    orbit: &ClosedOrbit,
    tau0: f64,
    taus: &[f64],
    opts: &ShootingOptions,
) -> Result<Vec<ContinuationPoint>> {
    if let Some(st) = &orbit.stability {
        if !st.nondegenerate && !opts.allow_degenerate {
            return Err(Error::ContinuationHalted {
                tau: tau0,
                reason: "starting orbit is degenerate".into(),
            });
        }
    }
    let mut path = vec![ContinuationPoint {
        tau: tau0,
        orbit: orbit.clone(),
    }];
    let mut out = Vec::with_capacity(taus.len());
    for &target in taus {
        advance(sys, &mut path, target, opts, 0)?;
        let p = path.last().expect("nonempty").clone();
        if !same_class(&p.orbit.class, &orbit.class) {
            return Err(Error::ContinuationHalted {
                tau: target,
                reason: format!("class changed to {}", p.orbit.class.key()),
            });
        }
        out.push(p);
    }
    Ok(out)
}

fn advance(
    sys: &MagneticSystem,
    path: &mut Vec<ContinuationPoint>,
    target: f64,
    opts: &ShootingOptions,
    depth: u32,
) -> Result<()> {
    let from = path.last().expect("nonempty").tau;
    if from == target {
        return Ok(());
    }
    let (z, t) = predict(path, target);
    let class = path.last().expect("nonempty").orbit.class.clone();
    match shoot_and_refine(&sys.at_tau(target), &class, z, t, opts) {
        Ok(o) => {
            path.push(ContinuationPoint { tau: target, orbit: o });
            Ok(())
        }
        Err(Error::DegenerateOrbit { sigma_min, .. }) => Err(Error::ContinuationHalted {
            tau: target,
            reason: format!("degenerate orbit (sigma_min {sigma_min:e})"),
        }),
        Err(e) if depth >= MAX_HALVINGS => Err(Error::ContinuationHalted {
            tau: target,
            reason: e.to_string(),
        }),
        Err(_) => {
            let mid = 0.5 * (from + target);
            advance(sys, path, mid, opts, depth + 1)?;
            advance(sys, path, target, opts, depth + 1)
        }
    }
}

/// The same system with `lambda` multiplied by `s`.
pub fn scale_lambda(sys: &MagneticSystem, s: f64) -> Result<MagneticSystem> {
    let mut out = sys.clone();
    out.surface = match &sys.surface {
        SurfaceModel::Torus(spec) => {
            let mut spec = spec.clone();
            spec.lambda = spec.lambda.scaled(s);
            SurfaceModel::Torus(spec)
        }
        SurfaceModel::Hyperbolic(spec) => SurfaceModel::Hyperbolic(HyperbolicConstantSpec::with_generators(
            spec.lambda_const * s,
            spec.deck_generators.clone(),
        )?),
    };
    Ok(out)
}

/// Seed a closed orbit of `sys` from a closed orbit of the geodesic flow
/// (`lambda` scaled to zero) by continuing in the scale in `steps` equal
/// increments. Intermediate orbits may be degenerate; only the final one is
/// held to `opts`.
pub fn continue_in_lambda_scale(
    sys: &MagneticSystem,
    class: &TopologicalClass,
    seed: UnitTangent,
    t_seed: f64,
    steps: usize,
    opts: &ShootingOptions,
) -> Result<ClosedOrbit> {
    let steps = steps.max(1);
    let loose = ShootingOptions {
        allow_degenerate: true,
        ..*opts
    };
    let mut path: Vec<ContinuationPoint> = Vec::new();
    for k in 0..=steps {
        let s = k as f64 / steps as f64;
        let scaled = scale_lambda(sys, s)?;
        let (z, t) = if path.is_empty() { (seed, t_seed) } else { predict(&path, s) };
        let o = if k == steps {
            shoot_and_refine(&scaled, class, z, t, opts)
        } else {
            shoot_and_refine(&scaled, class, z, t, &loose)
        }
        .map_err(|e| match e {
            Error::DegenerateOrbit { .. } => e,
            other => Error::ContinuationHalted {
                tau: s,
                reason: other.to_string(),
            },
        })?;
        path.push(ContinuationPoint { tau: s, orbit: o });
    }
    Ok(path.pop().expect("nonempty").orbit)
}
