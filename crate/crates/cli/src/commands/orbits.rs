use rand::Rng;
use serde::Serialize;

use magflow::flow::hyperbolicity_diagnostic;
use magflow::flow::HyperbolicityStatus;
use magflow::hyperbolic::Word;
use magflow::orbits::{
    closure_defect, continue_in_lambda_scale, continue_in_parameter, hyperbolic_class, hyperbolic_orbit_oracle,
    shoot_and_refine, ClosedOrbit, OrbitDatabase, OrbitRecord, ShootingOptions, TopologicalClass,
};
use magflow::parallel::par_map_range;
use magflow::smbundle::UnitTangent;
use magflow::spectrum::{
    action_entry, action_spectrum, circular_distance, isospectral_derivative_check, mod1, write_spectrum_csv,
    HolonomyOptions, OrbitCurve, Perturbed, Profile, SPECTRUM_TOL,
};
use magflow::surface::SurfaceModel;
use magflow::variational::{first_variation_check, index_form_sweep, IdentityRecord, IndexSweep};
use magflow::{Error, Result};

use crate::config::OrbitTarget;

use super::{max_of, Context, Outcome};

/// A closed orbit for one configured target, with the closed-form data of the
/// constant-curvature model when it applies.
#[derive(Clone, Debug)]
pub struct FoundOrbit {
    pub label: String,
    pub orbit: ClosedOrbit,
    pub oracle_period: Option<f64>,
    pub expected_action: Option<f64>,
    pub cached: bool,
}

pub struct Search {
    pub found: Vec<FoundOrbit>,
    /// `(label, error)` for targets that could not be solved.
    pub failed: Vec<(String, String)>,
}

impl Search {
    fn failure_records(&self, what: &str) -> Vec<IdentityRecord> {
        self.failed
            .iter()
            .map(|(label, _)| IdentityRecord::new(format!("{what} {label}"), f64::NAN, 0.0))
            .collect()
    }
}

fn shooting(ctx: &Context, allow_degenerate: bool) -> ShootingOptions {
    ShootingOptions {
        integration_tol: ctx.cfg.orbits.integration_tol,
        allow_degenerate,
        ..Default::default()
    }
}

fn matches(target: &OrbitTarget, class: &str) -> bool {
    match target {
        OrbitTarget::Word { word } => class == format!("word({word})"),
        OrbitTarget::Torus { m, n, .. } => class.starts_with(&format!("torus({m},{n};")),
        OrbitTarget::Contractible { .. } => class.starts_with("torus(0,0;") && class != "torus(0,0;w0)",
    }
}

struct Oracle {
    period: f64,
    action: f64,
}

fn solve(ctx: &Context, target: &OrbitTarget) -> Result<(ClosedOrbit, Option<Oracle>)> {
    let sys = &ctx.sys;
    match (target, &sys.surface) {
        (OrbitTarget::Word { word }, SurfaceModel::Hyperbolic(spec)) => {
            let w = Word::parse(word)?;
            let oracle = hyperbolic_orbit_oracle(spec, &w)?;
            let class = hyperbolic_class(&spec.deck_generators, &w)?;
            let orbit = shoot_and_refine(sys, &class, oracle.seed(), oracle.period, &shooting(ctx, false))?;
            let lam = spec.lambda_const;
            let closed_form = Oracle {
                period: oracle.period,
                action: oracle.translation_length * (1.0 - lam * lam).sqrt(),
            };
            Ok((orbit, Some(closed_form)))
        }
        (
            OrbitTarget::Torus {
                m,
                n,
                seed,
                period,
                lambda_steps,
                allow_degenerate,
            },
            SurfaceModel::Torus(_),
        ) => {
            let class = TopologicalClass::Torus { m: *m, n: *n, winding: 0 };
            let z = UnitTangent::from_state(*seed);
            let opts = shooting(ctx, *allow_degenerate);
            let orbit = if *lambda_steps > 0 {
                continue_in_lambda_scale(sys, &class, z, *period, *lambda_steps, &opts)?
            } else {
                shoot_and_refine(sys, &class, z, *period, &opts)?
            };
            Ok((orbit, None))
        }
        (OrbitTarget::Contractible { seed, period, allow_degenerate }, SurfaceModel::Torus(_)) => {
            let class = TopologicalClass::Torus { m: 0, n: 0, winding: 1 };
            let orbit = shoot_and_refine(sys, &class, UnitTangent::from_state(*seed), *period, &shooting(ctx, *allow_degenerate))?;
            Ok((orbit, None))
        }
        (t, _) => Err(Error::Config(format!("target {} does not fit the {} backend", t.label(), backend(ctx)))),
    }
}

fn backend(ctx: &Context) -> &'static str {
    if ctx.sys.surface.is_torus() {
        "torus"
    } else {
        "hyperbolic"
    }
}

fn db_path(ctx: &Context) -> std::path::PathBuf {
    ctx.out.join("orbits.jsonl")
}

/// Solve every configured target at `tau = 0`, reusing orbits stored in
/// `<out>/orbits.jsonl` for the same system.
pub fn find_orbits(ctx: &Context) -> Result<Search> {
    let targets = &ctx.cfg.orbits.targets;
    if targets.is_empty() {
        return Err(Error::Config("no [[orbits.targets]] configured".into()));
    }
    for t in targets {
        let fits = matches!(t, OrbitTarget::Word { .. }) != ctx.sys.surface.is_torus();
        if !fits {
            return Err(Error::Config(format!("target {} does not fit the {} backend", t.label(), backend(ctx))));
        }
        if let OrbitTarget::Word { word } = t {
            Word::parse(word)?;
        }
    }
    std::fs::create_dir_all(&ctx.out)?;
    let mut db = OrbitDatabase::open(db_path(ctx))?;
    let cached: Vec<Option<ClosedOrbit>> = targets
        .iter()
        .map(|t| {
            db.records()
                .find(|r| r.system_hash == ctx.hash && r.tau == 0.0 && matches(t, &r.class))
                .map(|r| r.orbit.clone())
        })
        .collect();
    let solved = par_map_range(targets.len(), |i| {
        let t = &targets[i];
        match &cached[i] {
            // oracles are cheap; recompute them for cached orbits
            Some(o) => solve_oracle(ctx, t).map(|or| (o.clone(), or, true)),
            None => solve(ctx, t).map(|(o, or)| (o, or, false)),
        }
    });
    let mut found = Vec::new();
    let mut failed = Vec::new();
    for (t, r) in targets.iter().zip(solved) {
        match r {
            Ok((orbit, oracle, was_cached)) => {
                if !was_cached {
                    db.insert(OrbitRecord {
                        system_hash: ctx.hash.clone(),
                        class: orbit.class.key(),
                        tau: 0.0,
                        orbit: orbit.clone(),
                    })?;
                }
                found.push(FoundOrbit {
                    label: orbit.class.key(),
                    oracle_period: oracle.as_ref().map(|o| o.period),
                    expected_action: oracle.as_ref().map(|o| o.action),
                    orbit,
                    cached: was_cached,
                });
            }
            Err(e) => failed.push((t.label(), e.to_string())),
        }
    }
    Ok(Search { found, failed })
}

fn solve_oracle(ctx: &Context, target: &OrbitTarget) -> Result<Option<Oracle>> {
    match (target, &ctx.sys.surface) {
        (OrbitTarget::Word { word }, SurfaceModel::Hyperbolic(spec)) => {
            let oracle = hyperbolic_orbit_oracle(spec, &Word::parse(word)?)?;
            let lam = spec.lambda_const;
            Ok(Some(Oracle {
                period: oracle.period,
                action: oracle.translation_length * (1.0 - lam * lam).sqrt(),
            }))
        }
        _ => Ok(None),
    }
}

fn plan_targets(ctx: &Context) -> Vec<String> {
    ctx.cfg
        .orbits
        .targets
        .iter()
        .map(|t| format!("target {} ({} backend)", t.label(), backend(ctx)))
        .collect()
}

#[derive(Serialize)]
struct OrbitRow {
    class: String,
    z0: [f64; 3],
    period: f64,
    oracle_period: Option<f64>,
    newton_residual: f64,
    closure_defect: f64,
    nondegenerate: Option<bool>,
    transverse_trace: Option<f64>,
}

#[derive(Serialize)]
struct OrbitsDetails {
    orbits: Vec<OrbitRow>,
    failed: Vec<(String, String)>,
}

pub fn orbits(ctx: &Context) -> Result<Outcome> {
    if ctx.dry_run {
        let mut plan = plan_targets(ctx);
        plan.push(format!("store {}", db_path(ctx).display()));
        return Ok(Outcome::Plan(plan));
    }
    let search = find_orbits(ctx)?;
    let tol = &ctx.cfg.tolerances;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut csv = String::from("class,t,x1,x2,theta\n");
    for f in &search.found {
        let defect = closure_defect(&ctx.sys, &f.orbit, ctx.cfg.orbits.integration_tol / 10.0)?;
        records.push(IdentityRecord::new(format!("closure {}", f.label), f.orbit.newton_residual, tol.closure));
        records.push(IdentityRecord::new(format!("re-closure {}", f.label), defect, 1e-8));
        if let Some(p) = f.oracle_period {
            records.push(IdentityRecord::new(format!("oracle period {}", f.label), f.orbit.period - p, tol.oracle));
        }
        let curve = OrbitCurve::new(&ctx.sys, &f.orbit, SPECTRUM_TOL)?;
        let n = ctx.cfg.orbits.csv_samples.max(1);
        for i in 0..=n {
            let t = f.orbit.period * i as f64 / n as f64;
            let s = curve.solution().state_at(t);
            csv.push_str(&format!("\"{}\",{t:.12},{:.15},{:.15},{:.15}\n", f.label, s.p.x1, s.p.x2, s.theta));
        }
        rows.push(OrbitRow {
            class: f.label.clone(),
            z0: f.orbit.z0.state(),
            period: f.orbit.period,
            oracle_period: f.oracle_period,
            newton_residual: f.orbit.newton_residual,
            closure_defect: defect,
            nondegenerate: f.orbit.stability.as_ref().map(|s| s.nondegenerate),
            transverse_trace: f.orbit.stability.as_ref().map(|s| s.transverse_trace),
        });
    }
    records.extend(search.failure_records("closure"));
    ctx.write("orbits.csv", csv.as_bytes())?;
    let details = OrbitsDetails {
        orbits: rows,
        failed: search.failed,
    };
    Ok(Outcome::Report(ctx.report(records, details)?))
}

#[derive(Serialize)]
struct IndexDetails {
    hyperbolicity: magflow::flow::HyperbolicityReport,
    certified: bool,
    sweeps: Vec<IndexSweep>,
    failed: Vec<(String, String)>,
}

pub fn index_form(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.cfg.index;
    if ctx.dry_run {
        ctx.seed()?;
        let mut plan = plan_targets(ctx);
        plan.push(format!("{} random test functions with {} modes per orbit, {} nodes", p.samples, p.modes, p.nodes));
        return Ok(Outcome::Plan(plan));
    }
    let mut rng = ctx.rng()?;
    let search = find_orbits(ctx)?;
    let starts: Vec<UnitTangent> = search.found.iter().map(|f| f.orbit.z0).collect();
    let hyper = hyperbolicity_diagnostic(&ctx.sys, &starts, p.riccati_time)?;
    let certified = hyper.status == HyperbolicityStatus::CertifiedNegative;
    let mut records = Vec::new();
    let mut sweeps = Vec::new();
    for f in &search.found {
        let seed: u64 = rng.gen();
        let s = index_form_sweep(&ctx.sys, &f.orbit, p.samples, p.modes, seed, p.nodes)?;
        records.push(IdentityRecord::new(format!("index form I(0) = 0 {}", f.label), s.zero_value, 1e-15));
        records.push(IdentityRecord::new(format!("index form routes {}", f.label), s.max_route_gap, 1e-7));
        if certified {
            // I >= -tol, recorded as the negative part
            let neg = (-s.min_value).max(0.0);
            records.push(IdentityRecord::new(format!("index form nonnegative {}", f.label), neg, ctx.cfg.tolerances.index));
        }
        sweeps.push(s);
    }
    records.extend(search.failure_records("index form"));
    let details = IndexDetails {
        hyperbolicity: hyper,
        certified,
        sweeps,
        failed: search.failed,
    };
    Ok(Outcome::Report(ctx.report(records, details)?))
}

fn holonomy_options(ctx: &Context) -> HolonomyOptions {
    HolonomyOptions {
        curve_nodes: ctx.cfg.spectrum.curve_nodes,
        fill_nodes: ctx.cfg.spectrum.fill_nodes,
    }
}

#[derive(Serialize)]
struct SpectrumDetails {
    entries: Vec<magflow::spectrum::ActionEntry>,
    failed: Vec<(String, String)>,
}

pub fn spectrum(ctx: &Context) -> Result<Outcome> {
    if ctx.dry_run {
        let mut plan = plan_targets(ctx);
        plan.push(format!(
            "holonomy with {} curve nodes, {} fill nodes",
            ctx.cfg.spectrum.curve_nodes, ctx.cfg.spectrum.fill_nodes
        ));
        return Ok(Outcome::Plan(plan));
    }
    let search = find_orbits(ctx)?;
    let orbits: Vec<ClosedOrbit> = search.found.iter().map(|f| f.orbit.clone()).collect();
    let entries = action_spectrum(&ctx.sys, &orbits, &holonomy_options(ctx))?;
    let mut csv = Vec::new();
    write_spectrum_csv(&mut csv, &entries)?;
    ctx.write("spectrum.csv", &csv)?;
    ctx.write_json("spectrum.json", &entries)?;

    let mut records = Vec::new();
    records.push(IdentityRecord::new(
        "fill independence",
        max_of(entries.iter().map(|e| e.fill_discrepancy)),
        ctx.cfg.spectrum.fill_tolerance,
    ));
    for f in &search.found {
        if let Some(want) = f.expected_action {
            let e = entries.iter().find(|e| e.class == f.label).expect("entry per orbit");
            records.push(IdentityRecord::new(
                &format!("action oracle {}", f.label),
                circular_distance(e.action, mod1(want)),
                ctx.cfg.tolerances.oracle,
            ));
        }
    }
    records.extend(search.failure_records("action"));
    let details = SpectrumDetails {
        entries,
        failed: search.failed,
    };
    Ok(Outcome::Report(ctx.report(records, details)?))
}

#[derive(Serialize)]
struct DeformRow {
    class: String,
    tau: f64,
    period: f64,
    action_lift: f64,
    action_derivative: f64,
    line_integral: f64,
    residual: f64,
}

#[derive(Serialize)]
struct DeformDetails {
    exact: bool,
    note: String,
    rows: Vec<DeformRow>,
    failed: Vec<(String, String)>,
}

pub fn deform(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.cfg.deform;
    let beta = ctx
        .sys
        .beta
        .as_ref()
        .ok_or_else(|| Error::Config("deform needs a [[deformation]] family in the system".into()))?;
    if p.taus.is_empty() || !(p.h > 0.0) {
        return Err(Error::Config("deform needs taus and a positive stencil spacing h".into()));
    }
    if ctx.dry_run {
        let mut plan = plan_targets(ctx);
        plan.push(format!("stencils of spacing {} around tau in {:?}", p.h, p.taus));
        plan.push(if beta.is_exact() {
            "exact family: actions should not move".into()
        } else {
            "non-exact family".into()
        });
        return Ok(Outcome::Plan(plan));
    }
    let search = find_orbits(ctx)?;
    let grid: Vec<f64> = p.taus.iter().flat_map(|t| (-2..=2).map(move |k| t + k as f64 * p.h)).collect();
    let opts = holonomy_options(ctx);
    let shoot = shooting(ctx, false);
    let mut db = OrbitDatabase::open(db_path(ctx))?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut failed = search.failed.clone();
    let exact = beta.is_exact();
    for f in &search.found {
        let path = match continue_in_parameter(&ctx.sys, &f.orbit, 0.0, &grid, &shoot) {
            Ok(path) => path,
            Err(e) => {
                records.push(IdentityRecord::new(format!("isospectral relation {}", f.label), f64::NAN, 0.0));
                failed.push((f.label.clone(), e.to_string()));
                continue;
            }
        };
        for pt in &path {
            db.insert(OrbitRecord {
                system_hash: ctx.hash.clone(),
                class: pt.orbit.class.key(),
                tau: pt.tau,
                orbit: pt.orbit.clone(),
            })?;
        }
        let a0 = action_entry(&ctx.sys.at_tau(0.0), &f.orbit, &opts)?.action_lift;
        let mut worst = 0.0_f64;
        let mut drift = 0.0_f64;
        for &t in &p.taus {
            let r = isospectral_derivative_check(&ctx.sys, &path, t, p.h, &opts)?;
            let centre = path
                .iter()
                .find(|q| (q.tau - t).abs() < 1e-12 * (1.0 + t.abs()))
                .expect("stencil centre on the path");
            let a = action_entry(&ctx.sys.at_tau(t), &centre.orbit, &opts)?.action_lift;
            worst = max_of([worst, r.residual]);
            drift = max_of([drift, a - a0]);
            rows.push(DeformRow {
                class: f.label.clone(),
                tau: t,
                period: centre.orbit.period,
                action_lift: a,
                action_derivative: r.action_derivative,
                line_integral: r.line_integral,
                residual: r.residual,
            });
        }
        records.push(IdentityRecord::new(
            &format!("isospectral relation {}", f.label),
            worst,
            ctx.cfg.tolerances.variational,
        ));
        if exact {
            records.push(IdentityRecord::new(format!("action invariance {}", f.label), drift, p.invariance_tolerance));
        }
    }
    let note = if exact {
        "trivial deformation detected: exact family, actions constant".to_string()
    } else {
        let lines: Vec<String> = rows.iter().map(|r| format!("{}@{}: {:.3e}", r.class, r.tau, r.line_integral)).collect();
        format!("non-exact family; line integrals {}", lines.join(", "))
    };
    eprintln!("{note}");
    let mut csv = String::from("class,tau,period,action_lift,action_derivative,line_integral,residual\n");
    for r in &rows {
        csv.push_str(&format!(
            "\"{}\",{:.12},{:.15},{:.15},{:.15e},{:.15e},{:.6e}\n",
            r.class, r.tau, r.period, r.action_lift, r.action_derivative, r.line_integral, r.residual
        ));
    }
    ctx.write("deform.csv", csv.as_bytes())?;
    let details = DeformDetails { exact, note, rows, failed };
    Ok(Outcome::Report(ctx.report(records, details)?))
}

#[derive(Serialize)]
struct VariationRow {
    class: String,
    stretch: f64,
    derivative: f64,
    derivative_coarse: f64,
}

#[derive(Serialize)]
struct ControlRow {
    class: String,
    derivative: f64,
}

#[derive(Serialize)]
struct VariationDetails {
    variations: Vec<VariationRow>,
    controls: Vec<ControlRow>,
    failed: Vec<(String, String)>,
}

pub fn action_variation(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.cfg.variation;
    if ctx.dry_run {
        ctx.seed()?;
        let mut plan = plan_targets(ctx);
        plan.push(format!("{} random variations per orbit, step {}", p.count, p.delta));
        plan.push(format!("non-orbit control at offset {}", p.control_offset));
        return Ok(Outcome::Plan(plan));
    }
    let mut rng = ctx.rng()?;
    let search = find_orbits(ctx)?;
    let opts = holonomy_options(ctx);
    let mut records = Vec::new();
    let mut variations = Vec::new();
    let mut controls = Vec::new();
    for f in &search.found {
        let curve = OrbitCurve::new(&ctx.sys, &f.orbit, 1e-13)?;
        let draws: Vec<(Profile, f64)> = (0..p.count)
            .map(|_| (Profile::random(&mut rng, p.modes, p.amplitude), rng.gen_range(-p.max_stretch..=p.max_stretch)))
            .collect();
        let reports = magflow::parallel::try_par_map_range(draws.len(), |i| {
            first_variation_check(&ctx.sys, &curve, &draws[i].0, draws[i].1, 0.5, p.delta, &opts)
        })?;
        let worst = max_of(reports.iter().map(|r| r.derivative));
        records.push(IdentityRecord::new(format!("first variation {}", f.label), worst, ctx.cfg.tolerances.variational));
        for (r, (_, s)) in reports.iter().zip(&draws) {
            variations.push(VariationRow {
                class: f.label.clone(),
                stretch: *s,
                derivative: r.derivative,
                derivative_coarse: r.derivative_coarse,
            });
        }
        // a pushed-off loop varied in the same direction is not critical
        let push = draws[0].0.clone();
        let off = Perturbed::new(&ctx.sys, &curve, push.clone(), p.control_offset, 0.0);
        let c = first_variation_check(&ctx.sys, &off, &push, 0.0, 0.5, p.delta, &opts)?;
        records.push(IdentityRecord::exceeds(
            &format!("non-orbit control {}", f.label),
            c.derivative,
            p.control_threshold,
        ));
        controls.push(ControlRow {
            class: f.label.clone(),
            derivative: c.derivative,
        });
    }
    records.extend(search.failure_records("first variation"));
    let details = VariationDetails {
        variations,
        controls,
        failed: search.failed,
    };
    Ok(Outcome::Report(ctx.report(records, details)?))
}
