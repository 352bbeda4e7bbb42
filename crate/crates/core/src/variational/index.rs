use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{integrate_orbit, potentials, riccati_advance, OrbitSolution};
use crate::orbits::{closure_defect, ClosedOrbit};
use crate::parallel::try_par_map_range;
use crate::system::MagneticSystem;

/// `z(t) = Σ a_k cos(2 pi k t / T) + b_k sin(2 pi k t / T)`; periodic with its
/// first derivative by construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicFunction {
    pub period: f64,
    pub terms: Vec<(u32, f64, f64)>,
}

impl PeriodicFunction {
    pub fn zero(period: f64) -> Self {
        Self {
            period,
            terms: Vec::new(),
        }
    }

    pub fn constant(period: f64, a: f64) -> Self {
        Self {
            period,
            terms: vec![(0, a, 0.0)],
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, period: f64, modes: u32, amp: f64) -> Self {
        let terms = (0..=modes)
            .map(|k| {
                let s = amp / (1.0 + k as f64);
                (k, rng.gen_range(-s..s), if k == 0 { 0.0 } else { rng.gen_range(-s..s) })
            })
            .collect();
        Self { period, terms }
    }

    /// `(z, z', z'')` at `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let w = std::f64::consts::TAU / self.period;
        self.terms.iter().fold([0.0; 3], |[z, dz, ddz], &(k, a, b)| {
            let kw = k as f64 * w;
            let (s, c) = (kw * t).sin_cos();
            [z + a * c + b * s, dz + kw * (b * c - a * s), ddz - kw * kw * (a * c + b * s)]
        })
    }

    /// `int_0^T z^2 dt`.
    pub fn norm_sq(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(k, a, b)| if k == 0 { a * a } else { 0.5 * (a * a + b * b) })
            .sum::<f64>()
            * self.period
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexFormEvaluation {
    pub class: String,
    pub period: f64,
    /// `int (z'^2 - K_eff z^2) dt`.
    pub value: f64,
    /// `-int z (z'' + K_eff z) dt`.
    pub by_parts: f64,
    /// `int (z' - u z)^2 dt` with `u` the periodic Riccati solution, when one exists.
    pub riccati: Option<f64>,
    /// Difference against the same rule on half the nodes.
    pub quadrature_error: f64,
    pub norm_sq: f64,
}

impl IndexFormEvaluation {
    pub fn route_gap(&self) -> f64 {
        let mut g = (self.value - self.by_parts).abs();
        if let Some(r) = self.riccati {
            g = g.max((self.value - r).abs());
        }
        g
    }
}

/// Samples of `K_eff` and of the periodic Riccati solution along one period.
struct Samples {
    k_eff: Vec<f64>,
    u: Option<Vec<f64>>,
}

fn samples(sys: &MagneticSystem, orbit: &ClosedOrbit, nodes: usize) -> Result<(Samples, OrbitSolution)> {
    if nodes < 8 || !nodes.is_multiple_of(2) {
        return Err(Error::Contract(format!("index form needs an even node count >= 8, got {nodes}")));
    }
    let defect = closure_defect(sys, orbit, 1e-12)?;
    if !(defect < 1e-7) {
        return Err(Error::Contract(format!("orbit does not close (defect {defect:e})")));
    }
    let sol = integrate_orbit(sys, orbit.z0, (0.0, orbit.period), 1e-12)?;
    let h = orbit.period / nodes as f64;
    let k_eff = try_par_map_range(nodes, |i| potentials(sys, &sol.state_at(i as f64 * h)).map(|p| p.k_eff))?;
    let u = periodic_riccati(sys, &sol, orbit.period)?.map(|st| (0..nodes).map(|i| st.sol.eval(i as f64 * h)[0]).collect());
    Ok((Samples { k_eff, u }, sol))
}

/// Periodic solution of `u' = -u^2 - K_eff` along a closed orbit, found by
/// iterating the period map from `sqrt(-K_eff(0))`. Exists along orbits of
/// Anosov flows; returns `None` when the iteration blows up or stalls.
pub fn periodic_riccati(
    sys: &MagneticSystem,
    sol: &OrbitSolution,
    period: f64,
) -> Result<Option<crate::flow::RiccatiState>> {
    let k0 = potentials(sys, &sol.state_at(0.0))?.k_eff;
    if k0 >= 0.0 {
        return Ok(None);
    }
    let mut u = (-k0).sqrt();
    for _ in 0..80 {
        let st = riccati_advance(sys, sol, u, (0.0, period))?;
        if !st.is_bounded() {
            return Ok(None);
        }
        let next = st.final_value();
        if (next - u).abs() < 1e-13 * u.abs().max(1.0) {
            return Ok(Some(st));
        }
        u = next;
    }
    Ok(None)
}

fn evaluate(orbit: &ClosedOrbit, s: &Samples, z: &PeriodicFunction) -> IndexFormEvaluation {
    let n = s.k_eff.len();
    let h = orbit.period / n as f64;
    let rule = |stride: usize| {
        let mut acc = [0.0; 3];
        for i in (0..n).step_by(stride) {
            let [zv, dz, ddz] = z.eval(i as f64 * h);
            let k = s.k_eff[i];
            acc[0] += dz * dz - k * zv * zv;
            acc[1] -= zv * (ddz + k * zv);
            if let Some(u) = &s.u {
                let r = dz - u[i] * zv;
                acc[2] += r * r;
            }
        }
        acc.map(|a| a * h * stride as f64)
    };
    let fine = rule(1);
    let coarse = rule(2);
    IndexFormEvaluation {
        class: orbit.class.key(),
        period: orbit.period,
        value: fine[0],
        by_parts: fine[1],
        riccati: s.u.as_ref().map(|_| fine[2]),
        quadrature_error: (fine[0] - coarse[0]).abs(),
        norm_sq: z.norm_sq(),
    }
}

/// The index form of a closed orbit on each periodic test function, by the
/// defining integrand, by parts, and (when available) as the Riccati square.
pub fn index_form(
    sys: &MagneticSystem,
    orbit: &ClosedOrbit,
    zs: &[PeriodicFunction],
    nodes: usize,
) -> Result<Vec<IndexFormEvaluation>> {
    let (s, _) = samples(sys, orbit, nodes)?;
    for z in zs {
        if (z.period - orbit.period).abs() > 1e-12 * orbit.period {
            return Err(Error::Contract("test function period differs from the orbit period".into()));
        }
    }
    Ok(zs.iter().map(|z| evaluate(orbit, &s, z)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexSweep {
    pub class: String,
    pub count: usize,
    pub min_value: f64,
    /// Smallest `I / ||z||^2`.
    pub margin: f64,
    pub max_route_gap: f64,
    pub max_quadrature_error: f64,
    /// Value at `z = 0`.
    pub zero_value: f64,
    pub riccati_available: bool,
}

/// `count` random periodic test functions with `modes` Fourier modes, drawn
/// from `seed`, plus the zero function.
pub fn index_form_sweep(
    sys: &MagneticSystem,
    orbit: &ClosedOrbit,
    count: usize,
    modes: u32,
    seed: u64,
    nodes: usize,
) -> Result<IndexSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zs: Vec<_> = (0..count)
        .map(|_| PeriodicFunction::random(&mut rng, orbit.period, modes, 1.0))
        .collect();
    zs.push(PeriodicFunction::zero(orbit.period));
    let evals = index_form(sys, orbit, &zs, nodes)?;
    let (zero, random) = evals.split_last().expect("nonempty");
    Ok(IndexSweep {
        class: orbit.class.key(),
        count,
        min_value: random.iter().map(|e| e.value).fold(f64::INFINITY, f64::min),
        margin: random.iter().map(|e| e.value / e.norm_sq).fold(f64::INFINITY, f64::min),
        max_route_gap: evals.iter().map(|e| e.route_gap()).fold(0.0, f64::max),
        max_quadrature_error: evals.iter().map(|e| e.quadrature_error).fold(0.0, f64::max),
        zero_value: zero.value,
        riccati_available: zero.riccati.is_some(),
    })
}
