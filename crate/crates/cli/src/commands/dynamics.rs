use rand::Rng;
use serde::Serialize;

use magflow::flow::{
    hyperbolicity_diagnostic, integrate_jacobi, integrate_orbit, jacobi_step_sweep, lyapunov_exponent,
    riccati_advance, HyperbolicityReport, JacobiInitial,
};
use magflow::parallel::try_par_map_range;
use magflow::smbundle::UnitTangent;
use magflow::variational::IdentityRecord;
use magflow::{Error, Result};

use super::{max_of, random_point, Context, Outcome};

#[derive(Serialize)]
struct JacobiRow {
    start: [f64; 3],
    initial: [f64; 3],
    residual_x: f64,
    residual_y: f64,
}

#[derive(Serialize)]
struct SweepSummary {
    start: [f64; 3],
    direction: [f64; 3],
    time: f64,
    observed_orders: Vec<f64>,
    leading_order: Option<f64>,
    floor: f64,
}

#[derive(Serialize)]
struct JacobiDetails {
    orbits: Vec<JacobiRow>,
    sweep: SweepSummary,
}

pub fn jacobi_check(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.cfg.jacobi;
    if ctx.dry_run {
        ctx.seed()?;
        return Ok(Outcome::Plan(vec![
            format!("{} random orbits of length {}, {} residual samples each", p.orbits, p.length, p.samples),
            format!("flow differencing at t = {} with steps {:?}", p.sweep_time, p.sweep_steps),
        ]));
    }
    if p.sweep_steps.len() < 2 {
        return Err(Error::Config("jacobi.sweep_steps needs at least two steps".into()));
    }
    let mut rng = ctx.rng()?;
    let starts: Vec<(UnitTangent, [f64; 3])> = (0..p.orbits)
        .map(|_| {
            let z = random_point(&ctx.sys, &mut rng);
            let ic = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            (z, ic)
        })
        .collect();
    let rows = try_par_map_range(starts.len(), |i| {
        let (z, ic) = starts[i];
        let orbit = integrate_orbit(&ctx.sys, z, (0.0, p.length), p.tol)?;
        let j = integrate_jacobi(&ctx.sys, &orbit, JacobiInitial::new(ic[0], ic[1], ic[2]))?;
        let [rx, ry] = j.residuals(&ctx.sys, &orbit, p.samples)?;
        Ok::<_, Error>(JacobiRow {
            start: z.state(),
            initial: ic,
            residual_x: rx,
            residual_y: ry,
        })
    })?;

    let z = random_point(&ctx.sys, &mut rng);
    let xi = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let sweep = jacobi_step_sweep(&ctx.sys, z, xi, p.sweep_time, &p.sweep_steps, p.tol)?;
    let order = sweep.leading_order(100.0);

    let mut csv = String::from("h,t,jacobi_x,jacobi_y,differenced_x,differenced_y,abs_error,rel_error\n");
    for r in &sweep.reports {
        csv.push_str(&format!(
            "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.h, r.t, r.jacobi[0], r.jacobi[1], r.differenced[0], r.differenced[1], r.abs_error, r.rel_error
        ));
    }
    ctx.write("jacobi_sweep.csv", csv.as_bytes())?;

    let tol = ctx.cfg.tolerances.jacobi;
    let records = vec![
        IdentityRecord::new("jacobi x' = l y residual", max_of(rows.iter().map(|r| r.residual_x)), tol),
        IdentityRecord::new("jacobi y'' + K_eff y residual", max_of(rows.iter().map(|r| r.residual_y)), tol),
        IdentityRecord::exceeds("flow differencing order", order.unwrap_or(f64::NAN), p.min_order),
        IdentityRecord::new("flow differencing floor", sweep.floor, p.max_floor),
    ];
    let details = JacobiDetails {
        orbits: rows,
        sweep: SweepSummary {
            start: z.state(),
            direction: xi,
            time: p.sweep_time,
            observed_orders: sweep.observed_orders.clone(),
            leading_order: order,
            floor: sweep.floor,
        },
    };
    Ok(Outcome::Report(ctx.report(records, details)?))
}

#[derive(Serialize)]
struct LyapunovRow {
    start: [f64; 3],
    exponent: f64,
    tail_slope: f64,
    riccati_final: f64,
}

#[derive(Serialize)]
struct LyapunovDetails {
    expected: Option<f64>,
    starts: Vec<LyapunovRow>,
    hyperbolicity: HyperbolicityReport,
}

pub fn lyapunov(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.cfg.lyapunov;
    if ctx.dry_run {
        ctx.seed()?;
        return Ok(Outcome::Plan(vec![
            format!("{} starts, T = {}, tol {:e}", p.starts, p.t_total, p.tol),
            format!("Riccati from u = 0 over [0, {}]; K_eff range on a grid", p.riccati_time),
            match p.expected {
                Some(e) => format!("compare with {e} +/- {:e}", p.tolerance),
                None => "no closed-form exponent given".into(),
            },
        ]));
    }
    if p.starts == 0 {
        return Err(Error::Config("lyapunov.starts must be positive".into()));
    }
    let mut rng = ctx.rng()?;
    let starts: Vec<UnitTangent> = (0..p.starts).map(|_| random_point(&ctx.sys, &mut rng)).collect();
    let results = try_par_map_range(starts.len(), |i| {
        let z = starts[i];
        let est = lyapunov_exponent(&ctx.sys, z, p.t_total, p.tol)?;
        let orbit = integrate_orbit(&ctx.sys, z, (0.0, p.riccati_time), p.tol)?;
        let ric = riccati_advance(&ctx.sys, &orbit, 0.0, (0.0, p.riccati_time))?;
        Ok::<_, Error>((est, ric.final_value()))
    })?;

    let mut csv = String::from("start,t,estimate\n");
    for (i, (est, _)) in results.iter().enumerate() {
        for (t, e) in &est.convergence {
            csv.push_str(&format!("{i},{t},{e:.15e}\n"));
        }
    }
    ctx.write("lyapunov_convergence.csv", csv.as_bytes())?;

    let hyperbolicity = hyperbolicity_diagnostic(&ctx.sys, &starts, p.riccati_time)?;
    let rows: Vec<LyapunovRow> = results
        .iter()
        .zip(&starts)
        .map(|((est, ric), z)| LyapunovRow {
            start: z.state(),
            exponent: est.exponent,
            tail_slope: est.tail_slope,
            riccati_final: *ric,
        })
        .collect();
    let mut records = Vec::new();
    if let Some(expected) = p.expected {
        records.push(IdentityRecord::new(
            "lyapunov exponent",
            max_of(rows.iter().map(|r| r.tail_slope - expected)),
            p.tolerance,
        ));
        records.push(IdentityRecord::new(
            "riccati fixed point",
            max_of(rows.iter().map(|r| r.riccati_final - expected)),
            1e-8,
        ));
    }
    let details = LyapunovDetails {
        expected: p.expected,
        starts: rows,
        hyperbolicity,
    };
    Ok(Outcome::Report(ctx.report(records, details)?))
}
