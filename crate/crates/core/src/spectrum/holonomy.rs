use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::{area_primitive, geodesic_segment, Mobius};
use crate::orbits::{hyperbolic_orbit_oracle, TopologicalClass};
use crate::surface::{HyperbolicConstantSpec, SurfaceModel, SurfacePoint};
use crate::system::{MagneticSystem, OneForm};

use super::curves::{check_closed, ClosedCurve};
use super::quadrature::{composite_gauss, gauss_legendre};

/// Integrality constant and deformation family of the connection `alpha_tau`.
///
/// Conventions: `log hol(boundary of S) = c * int_S Omega` and
/// `log hol_{alpha_tau} = log hol_alpha + (1/2 pi) int beta_tau`, so that the
/// curvature of `alpha_tau` is `Omega_tau = Omega + (1/(2 pi c)) d beta_tau`.
/// Non-contractible classes are measured against a fixed reference loop whose
/// undeformed holonomy is set to zero (a gauge choice): on the torus the
/// straight loop `t -> t (m, n)` from the origin, on the hyperbolic disk the
/// axis segment of the deck element starting at the axis point nearest the
/// origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionData {
    pub c: f64,
    pub deformed: bool,
}

impl ConnectionData {
    pub fn from_system(sys: &MagneticSystem) -> Self {
        Self {
            c: sys.c,
            deformed: sys.beta.is_some(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HolonomyOptions {
    /// Nodes along the curve parameter.
    pub curve_nodes: usize,
    /// Gauss–Legendre nodes across the fill.
    pub fill_nodes: usize,
}

impl Default for HolonomyOptions {
    fn default() -> Self {
        Self {
            curve_nodes: 512,
            fill_nodes: 24,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Holonomy {
    /// Real lift of `log hol` given by the fixed 2-chain convention.
    pub lift: f64,
    /// `lift mod 1` in `[0, 1)`.
    pub reduced: f64,
    /// Largest circular distance between the value above and alternative
    /// fills (a different 2-chain with the same boundary).
    pub fill_discrepancy: f64,
}

pub fn mod1(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = mod1(a - b);
    d.min(1.0 - d)
}

/// `int_0^T beta(c(t)) . c'(t) dt` by the periodic trapezoid rule (torus).
pub fn line_integral_periodic(form: &OneForm, curve: &dyn ClosedCurve, n: usize) -> f64 {
    let t_len = curve.period();
    let h = t_len / n as f64;
    (0..n)
        .map(|i| {
            let (p, v) = curve.point(i as f64 * h);
            let b = form.at(p);
            b[0] * v[0] + b[1] * v[1]
        })
        .sum::<f64>()
        * h
}

/// Straight-line homotopy integral `int int rho(f) det(f_s, f_t)` with
/// `f(s, t) = (1 - s) a(t) + s b(t)` over `[0,1] x [0, T]`, trapezoid in `t`
/// (the integrand is periodic on the torus) and Gauss–Legendre in `s`.
fn straight_fill(
    rho: &(dyn Fn([f64; 2]) -> Result<f64> + Sync),
    a: &(dyn Fn(f64) -> ([f64; 2], [f64; 2]) + Sync),
    b: &(dyn Fn(f64) -> ([f64; 2], [f64; 2]) + Sync),
    period: f64,
    opts: &HolonomyOptions,
) -> Result<f64> {
    let (xs, ws) = gauss_legendre(opts.fill_nodes);
    let n = opts.curve_nodes;
    let h = period / n as f64;
    let rows = crate::parallel::try_par_map_range(n, |i| {
        let t = i as f64 * h;
        let (pa, va) = a(t);
        let (pb, vb) = b(t);
        let fs = [pb[0] - pa[0], pb[1] - pa[1]];
        let mut acc = 0.0;
        for (s, w) in xs.iter().zip(&ws) {
            let f = [pa[0] + s * fs[0], pa[1] + s * fs[1]];
            let ft = [(1.0 - s) * va[0] + s * vb[0], (1.0 - s) * va[1] + s * vb[1]];
            acc += w * rho(f)? * (fs[0] * ft[1] - fs[1] * ft[0]);
        }
        Ok::<f64, Error>(acc)
    })?;
    Ok(crate::parallel::ordered_sum(&rows) * h)
}

fn torus_flux_density(sys: &MagneticSystem) -> impl Fn([f64; 2]) -> Result<f64> + Sync + '_ {
    move |p| sys.flux_density(SurfacePoint::new(p[0], p[1]))
}

/// `c * int_Sigma Omega_tau` over the straight-line fill from the reference
/// loop (shifted in phase by `phase`) to the curve, plus the gauge term.
fn torus_lift(
    sys: &MagneticSystem,
    curve: &dyn ClosedCurve,
    m: i64,
    n: i64,
    phase: f64,
    opts: &HolonomyOptions,
) -> Result<f64> {
    let period = curve.period();
    let dir = [m as f64, n as f64];
    let reference = move |t: f64| {
        let s = t / period + phase;
        ([s * dir[0], s * dir[1]], [dir[0] / period, dir[1] / period])
    };
    let target = |t: f64| curve.point(t);
    let rho = torus_flux_density(sys);
    Ok(sys.c * straight_fill(&rho, &reference, &target, period, opts)?)
}

/// `c * int Omega` over the cone from `apex` to a contractible curve.
fn cone_lift(sys: &MagneticSystem, curve: &dyn ClosedCurve, apex: [f64; 2], opts: &HolonomyOptions) -> Result<f64> {
    let a = move |_t: f64| (apex, [0.0, 0.0]);
    let b = |t: f64| curve.point(t);
    let rho = torus_flux_density(sys);
    Ok(sys.c * straight_fill(&rho, &a, &b, curve.period(), opts)?)
}

fn deform_line_term(sys: &MagneticSystem, curve: &dyn ClosedCurve, n: usize) -> f64 {
    match &sys.beta {
        Some(b) => line_integral_periodic(&b.at(sys.tau), curve, n) / std::f64::consts::TAU,
        None => 0.0,
    }
}

/// Undeformed system used for the `Omega` part of the fill.
fn base_system(sys: &MagneticSystem) -> MagneticSystem {
    let mut s = sys.clone();
    s.beta = None;
    s.tau = 0.0;
    s
}

/// Holonomy of `alpha_tau` around a closed curve at the system's `tau`.
pub fn holonomy(sys: &MagneticSystem, curve: &dyn ClosedCurve, opts: &HolonomyOptions) -> Result<Holonomy> {
    check_closed(sys, curve, 1e-7)?;
    match (&sys.surface, curve.class()) {
        (SurfaceModel::Torus(_), TopologicalClass::Torus { m, n, .. }) => {
            let base = base_system(sys);
            let line = deform_line_term(sys, curve, opts.curve_nodes);
            let mut alternatives = Vec::new();
            let lift = if *m == 0 && *n == 0 {
                let (p0, _) = curve.point(0.0);
                let k = 64;
                let centroid = (0..k).fold([0.0, 0.0], |acc, i| {
                    let (p, _) = curve.point(curve.period() * i as f64 / k as f64);
                    [acc[0] + p[0] / k as f64, acc[1] + p[1] / k as f64]
                });
                let main = cone_lift(&base, curve, centroid, opts)? + line;
                alternatives.push(cone_lift(&base, curve, p0, opts)? + line);
                if sys.beta.is_some() {
                    // Omega_tau over the same cone, no line term
                    alternatives.push(cone_lift(sys, curve, centroid, opts)?);
                }
                main
            } else {
                let main = torus_lift(&base, curve, *m, *n, 0.0, opts)? + line;
                alternatives.push(torus_lift(&base, curve, *m, *n, 0.37, opts)? + line);
                if let Some(b) = &sys.beta {
                    // Omega_tau over the fill, plus beta along the reference loop
                    let period = curve.period();
                    let dir = [*m as f64, *n as f64];
                    let reference = super::curves::FnCurve {
                        period,
                        class: curve.class().clone(),
                        pos: move |t: f64| [t / period * dir[0], t / period * dir[1]],
                        vel: move |_t: f64| [dir[0] / period, dir[1] / period],
                    };
                    let ref_line = line_integral_periodic(&b.at(sys.tau), &reference, opts.curve_nodes)
                        / std::f64::consts::TAU;
                    alternatives.push(torus_lift(sys, curve, *m, *n, 0.0, opts)? + ref_line);
                }
                main
            };
            Ok(finish(lift, &alternatives))
        }
        (SurfaceModel::Hyperbolic(spec), TopologicalClass::Hyperbolic { word, .. }) => {
            let deck = spec_deck(spec, word)?;
            let base_point = axis_base_point(spec, word)?;
            let main = sys.c * spec.lambda_const * hyperbolic_area(curve, &deck, base_point, 0.0, opts)?;
            let alt = sys.c * spec.lambda_const * hyperbolic_area(curve, &deck, base_point, 0.3, opts)?;
            Ok(finish(main, &[alt]))
        }
        (SurfaceModel::Hyperbolic(_), TopologicalClass::Torus { .. }) | (SurfaceModel::Torus(_), _) => Err(
            Error::Config(format!("no reference loop registered for class {} on this surface", curve.class().key())),
        ),
    }
}

fn finish(lift: f64, alternatives: &[f64]) -> Holonomy {
    let fill_discrepancy = alternatives
        .iter()
        .map(|a| circular_distance(*a, lift))
        .fold(0.0, f64::max);
    Holonomy {
        lift,
        reduced: mod1(lift),
        fill_discrepancy,
    }
}

fn spec_deck(spec: &HyperbolicConstantSpec, word: &crate::hyperbolic::Word) -> Result<Mobius> {
    Ok(word.evaluate(&spec.deck_generators)?.to_disk())
}

/// Point of the axis of the word's deck element nearest the disk origin.
pub fn axis_base_point(spec: &HyperbolicConstantSpec, word: &crate::hyperbolic::Word) -> Result<Complex64> {
    let geodesic = HyperbolicConstantSpec::with_generators(0.0, spec.deck_generators.clone())?;
    let s = hyperbolic_orbit_oracle(&geodesic, word)?.seed();
    Ok(Complex64::new(s.p.x1, s.p.x2))
}

/// Line integral of the area primitive along a chart path given by
/// position/velocity on `[a, b]`.
fn eta_integral(path: impl Fn(f64) -> (Complex64, Complex64), a: f64, b: f64, panels: usize) -> f64 {
    composite_gauss(a, b, panels, 16)
        .into_iter()
        .map(|(t, w)| {
            let (p, v) = path(t);
            w * area_primitive(p, v)
        })
        .sum()
}

/// Hyperbolic area of the 2-chain bounded by the curve, the axis segment from
/// `q` to `D q` (with `q` the base point slid `slide` along the axis), and the
/// geodesic connectors `q -> c(0)` and `D q -> c(T)`.
fn hyperbolic_area(
    curve: &dyn ClosedCurve,
    deck: &Mobius,
    base: Complex64,
    slide: f64,
    opts: &HolonomyOptions,
) -> Result<f64> {
    let q = if slide == 0.0 {
        base
    } else {
        geodesic_segment(base, deck.apply(base), slide).0
    };
    let dq = deck.apply(q);
    let period = curve.period();
    let panels = (opts.curve_nodes / 16).max(4);
    let along = eta_integral(
        |t| {
            let (p, v) = curve.point(t);
            (Complex64::new(p[0], p[1]), Complex64::new(v[0], v[1]))
        },
        0.0,
        period,
        panels,
    );
    let reference = eta_integral(|s| geodesic_segment(q, dq, s), 0.0, 1.0, 8);
    let (c0, _) = curve.point(0.0);
    let (c1, _) = curve.point(period);
    let (c0, c1) = (Complex64::new(c0[0], c0[1]), Complex64::new(c1[0], c1[1]));
    let start = eta_integral(|s| geodesic_segment(q, c0, s), 0.0, 1.0, 4);
    let end = eta_integral(|s| geodesic_segment(dq, c1, s), 0.0, 1.0, 4);
    Ok(along - reference + start - end)
}
