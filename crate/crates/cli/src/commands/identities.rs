use rand::Rng;
use serde::Serialize;

use magflow::fourier::{bundle_scale, torus_scale, Fourier2, Fourier3};
use magflow::parallel::try_par_map_range;
use magflow::smbundle::{
    dual_pairings, magnetic_commutators_check, riemannian_commutators_check, BasicFunction, CorruptedFrame,
    DiskPolynomial, FieldKind, FrameProvider, LiouvilleQuadrature, SmFunction, TrigFunction, UnitTangent,
};
use magflow::surface::{ConformalTorusSpec, SurfaceModel};
use magflow::system::{MagneticSystem, OneForm};
use magflow::variational::{identity_quadrature, integrated_identities, pestov_pointwise, theorem_b_mechanism, IdentityRecord};
use magflow::{Error, Result};

use super::{max_of, random_point, Context, Outcome};

/// Torus with random conformal factor (degree 2, amplitude 0.15) and random
/// magnetic intensity around 0.3.
pub fn random_torus_system<R: Rng + ?Sized>(rng: &mut R) -> Result<MagneticSystem> {
    let u = Fourier2::random(rng, [2, 2], 0.15, torus_scale());
    let mut l = Fourier2::random(rng, [2, 2], 0.5, torus_scale());
    l.add_constant(0.3);
    MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::new(u, l, 2)?))
}

fn random_function<R: Rng + ?Sized>(sys: &MagneticSystem, rng: &mut R, degree: usize) -> Box<dyn SmFunction> {
    if sys.surface.is_torus() {
        Box::new(TrigFunction(Fourier3::random(rng, [degree; 3], 1.0, bundle_scale())))
    } else {
        Box::new(DiskPolynomial::random(rng, degree as u32 + 1, degree as u32, 1.0))
    }
}

fn field(name: &str) -> Result<FieldKind> {
    match name {
        "X" => Ok(FieldKind::X),
        "H" => Ok(FieldKind::H),
        "V" => Ok(FieldKind::V),
        other => Err(Error::Config(format!("unknown frame field {other:?} (expected X, H or V)"))),
    }
}

const RIEMANNIAN: [&str; 3] = ["commutator [V,X] = H", "commutator [V,H] = -X", "commutator [X,H] = K V"];
const MAGNETIC: [&str; 3] = [
    "commutator [V,X_l] = H",
    "commutator [V,H] = -X_l + l V",
    "commutator [X_l,H] = -l X_l + K_eff V",
];

struct Sample {
    system: usize,
    phi: Box<dyn SmFunction>,
    points: Vec<UnitTangent>,
}

#[derive(Serialize)]
struct PointwiseSummary {
    systems: usize,
    triples: usize,
    pestov_max: f64,
    riemannian_max: [f64; 3],
    magnetic_max: [f64; 3],
    duality_max: f64,
    corrupted: Option<String>,
}

/// Draw systems, functions and points up front so the random stream does not
/// depend on evaluation order.
fn draw_samples(ctx: &Context) -> Result<(Vec<MagneticSystem>, Vec<Sample>)> {
    let p = &ctx.cfg.verify;
    let mut rng = ctx.rng()?;
    let mut systems = vec![ctx.sys.clone()];
    for _ in 0..p.random_systems {
        systems.push(random_torus_system(&mut rng)?);
    }
    let mut samples = Vec::new();
    for (si, sys) in systems.iter().enumerate() {
        for _ in 0..p.functions {
            let phi = random_function(sys, &mut rng, p.degree);
            let points = (0..p.points_per_function).map(|_| random_point(sys, &mut rng)).collect();
            samples.push(Sample { system: si, phi, points });
        }
    }
    Ok((systems, samples))
}

fn providers<'a>(ctx: &Context, systems: &'a [MagneticSystem]) -> Result<Vec<Box<dyn FrameProvider + 'a>>> {
    systems
        .iter()
        .map(|s| -> Result<Box<dyn FrameProvider + 'a>> {
            Ok(match &ctx.cfg.verify.corrupt {
                Some(c) => {
                    if c.component > 2 {
                        return Err(Error::Config(format!("frame component {} out of range", c.component)));
                    }
                    Box::new(CorruptedFrame {
                        sys: s,
                        field: field(&c.field)?,
                        component: c.component,
                        factor: c.factor,
                    })
                }
                None => Box::new(s.clone()),
            })
        })
        .collect()
}

/// Pestov (optional), commutator and duality residuals over all samples.
fn pointwise(ctx: &Context, with_pestov: bool) -> Result<(Vec<IdentityRecord>, PointwiseSummary)> {
    let (systems, samples) = draw_samples(ctx)?;
    let frames = providers(ctx, &systems)?;
    let rows = try_par_map_range(samples.len(), |i| {
        let s = &samples[i];
        let fp = frames[s.system].as_ref();
        let mut out = [0.0_f64; 8];
        for z in &s.points {
            if with_pestov {
                out[0] = out[0].max(pestov_pointwise(fp, s.phi.as_ref(), z)?.relative());
            }
            let f = fp.frame(z)?;
            let jet = s.phi.jet(fp.system(), z)?;
            let r = riemannian_commutators_check(&f, &jet).relative();
            let m = magnetic_commutators_check(&f, &jet).relative();
            for k in 0..3 {
                out[1 + k] = out[1 + k].max(r[k]);
                out[4 + k] = out[4 + k].max(m[k]);
            }
            let d = dual_pairings(&f);
            for (a, row) in d.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    out[7] = out[7].max((v - want).abs());
                }
            }
        }
        Ok::<_, Error>(out)
    })?;
    let col = |k: usize| max_of(rows.iter().map(|r| r[k]));
    let tol = ctx.cfg.tolerances.pointwise;
    let mut records = Vec::new();
    if with_pestov {
        records.push(IdentityRecord::new("pestov pointwise", col(0), tol));
    }
    for k in 0..3 {
        records.push(IdentityRecord::new(RIEMANNIAN[k], col(1 + k), tol));
    }
    for k in 0..3 {
        records.push(IdentityRecord::new(MAGNETIC[k], col(4 + k), tol));
    }
    records.push(IdentityRecord::new("dual pairings", col(7), 1e-12));
    let summary = PointwiseSummary {
        systems: systems.len(),
        triples: samples.iter().map(|s| s.points.len()).sum(),
        pestov_max: col(0),
        riemannian_max: [col(1), col(2), col(3)],
        magnetic_max: [col(4), col(5), col(6)],
        duality_max: col(7),
        corrupted: ctx
            .cfg
            .verify
            .corrupt
            .as_ref()
            .map(|c| format!("{} component {} x {}", c.field, c.component, c.factor)),
    };
    Ok((records, summary))
}

#[derive(Serialize)]
struct IntegratedRow {
    system: usize,
    function: usize,
    nodes: [usize; 3],
    integrated_pestov: f64,
    expansion: f64,
    final_identity: f64,
    divergence: [f64; 3],
}

#[derive(Serialize)]
struct FormRow {
    mean: f64,
    symmetry_gap: f64,
}

#[derive(Serialize)]
struct VerifyDetails {
    pointwise: PointwiseSummary,
    integrated: Vec<IntegratedRow>,
    forms: Vec<FormRow>,
    mechanism_residual: Option<f64>,
    mechanism_rhs: Option<f64>,
}

fn random_form<R: Rng + ?Sized>(rng: &mut R) -> OneForm {
    OneForm {
        w1: Fourier2::random(rng, [2, 2], 1.0, torus_scale()),
        w2: Fourier2::random(rng, [2, 2], 1.0, torus_scale()),
    }
}

pub fn verify_identities(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.cfg.verify;
    let torus_systems = p.random_systems + usize::from(ctx.sys.surface.is_torus());
    if ctx.dry_run {
        ctx.seed()?;
        if let Some(c) = &p.corrupt {
            field(&c.field)?;
        }
        return Ok(Outcome::Plan(vec![
            format!(
                "pointwise: {} systems x {} functions x {} points (Pestov, 6 commutators, dual pairings)",
                1 + p.random_systems,
                p.functions,
                p.points_per_function
            ),
            format!(
                "integrated: {} torus systems x {} functions, quadrature >= {} nodes per spatial axis",
                torus_systems, p.integrated_functions, p.quadrature_min_nodes
            ),
            format!("measure symmetry: {} random 1-forms", if ctx.sys.surface.is_torus() { p.forms } else { 0 }),
        ]));
    }
    let (mut records, summary) = pointwise(ctx, true)?;

    // integrated identities on torus systems; a separate stream of the same
    // seed, so the pointwise draws are unaffected by these settings
    let mut extra = ctx.rng()?;
    extra.set_stream(1);
    let mut systems = Vec::new();
    if ctx.sys.surface.is_torus() {
        systems.push(ctx.sys.clone());
    }
    for _ in 0..p.random_systems {
        systems.push(random_torus_system(&mut extra)?);
    }
    let mut jobs = Vec::new();
    for si in 0..systems.len() {
        for fi in 0..p.integrated_functions {
            jobs.push((si, fi, TrigFunction(Fourier3::random(&mut extra, [p.degree; 3], 1.0, bundle_scale()))));
        }
    }
    let mut integrated = Vec::new();
    for (si, fi, phi) in &jobs {
        let sys = &systems[*si];
        let q = identity_quadrature(sys, phi, p.quadrature_min_nodes)?;
        let r = integrated_identities(sys, phi, &q)?;
        integrated.push(IntegratedRow {
            system: *si,
            function: *fi,
            nodes: q.nodes,
            integrated_pestov: r.integrated_pestov,
            expansion: r.expansion,
            final_identity: r.final_identity,
            divergence: r.divergence,
        });
    }
    let t = &ctx.cfg.tolerances;
    if !integrated.is_empty() {
        let col = |f: &dyn Fn(&IntegratedRow) -> f64| max_of(integrated.iter().map(f));
        records.push(IdentityRecord::new("integrated pestov", col(&|r| r.integrated_pestov), t.integrated));
        records.push(IdentityRecord::new("expansion of (X_l V phi)^2", col(&|r| r.expansion), t.integrated));
        records.push(IdentityRecord::new("final identity", col(&|r| r.final_identity), t.integrated));
        records.push(IdentityRecord::new("divergence X_l phi", col(&|r| r.divergence[0]), t.divergence));
        records.push(IdentityRecord::new("divergence H phi", col(&|r| r.divergence[1]), t.divergence));
        records.push(IdentityRecord::new("divergence V phi", col(&|r| r.divergence[2]), t.divergence));
    }

    let mut forms = Vec::new();
    let mut mechanism = None;
    if ctx.sys.surface.is_torus() {
        let q = LiouvilleQuadrature::for_degree(&ctx.sys, [8, 8, 2], p.quadrature_min_nodes)?;
        for _ in 0..p.forms {
            let w = random_form(&mut extra);
            let m = theorem_b_mechanism(&ctx.sys, &Fourier2::zero(torus_scale()), &w, None, &q)?;
            forms.push(FormRow {
                mean: m.omega_mean,
                symmetry_gap: m.symmetry_gap,
            });
        }
        if !forms.is_empty() {
            records.push(IdentityRecord::new("measure symmetry mean", max_of(forms.iter().map(|f| f.mean)), t.divergence));
            records.push(IdentityRecord::new(
                "measure symmetry rotation",
                max_of(forms.iter().map(|f| f.symmetry_gap)),
                t.divergence,
            ));
        }
        // exact potential: X_l (h o pi) = dh(v), no obstruction
        let h = Fourier2::random(&mut extra, [2, 2], 1.0, torus_scale());
        let phi = BasicFunction(h.clone());
        let q = identity_quadrature(&ctx.sys, &phi, p.quadrature_min_nodes)?;
        let m = theorem_b_mechanism(&ctx.sys, &Fourier2::zero(torus_scale()), &OneForm::exact(&h), Some(&phi), &q)?;
        records.push(IdentityRecord::new(
            "exact potential mechanism",
            m.mechanism_residual.unwrap_or(f64::NAN),
            t.integrated,
        ));
        mechanism = Some(m);
    }
    let details = VerifyDetails {
        pointwise: summary,
        integrated,
        forms,
        mechanism_residual: mechanism.as_ref().and_then(|m| m.mechanism_residual),
        mechanism_rhs: mechanism.as_ref().and_then(|m| m.rhs),
    };
    Ok(Outcome::Report(ctx.report(records, details)?))
}

pub fn commutators(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.cfg.verify;
    if ctx.dry_run {
        ctx.seed()?;
        return Ok(Outcome::Plan(vec![format!(
            "{} systems x {} functions x {} points: 6 commutators, dual pairings",
            1 + p.random_systems,
            p.functions,
            p.points_per_function
        )]));
    }
    let (records, summary) = pointwise(ctx, false)?;
    Ok(Outcome::Report(ctx.report(records, summary)?))
}

