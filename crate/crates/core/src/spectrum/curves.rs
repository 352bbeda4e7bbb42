use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::{integrate_orbit, magnetic_rhs, OrbitSolution};
use crate::hyperbolic::exp_map;
use crate::orbits::{ClosedOrbit, Deck, TopologicalClass};
use crate::system::MagneticSystem;

/// A closed curve in the surface, presented by a lift `c: [0, T] -> cover`
/// with `c(T) = D c(0)` for the deck map `D` of its class.
pub trait ClosedCurve: Sync {
    fn period(&self) -> f64;
    /// Chart position and chart velocity at `t`.
    fn point(&self, t: f64) -> ([f64; 2], [f64; 2]);
    fn class(&self) -> &TopologicalClass;
}

/// A closed orbit re-integrated with dense output.
pub struct OrbitCurve {
    pub orbit: ClosedOrbit,
    sol: OrbitSolution,
    sys: MagneticSystem,
}

impl OrbitCurve {
    pub fn new(sys: &MagneticSystem, orbit: &ClosedOrbit, tol: f64) -> Result<Self> {
        let sol = integrate_orbit(sys, orbit.z0, (0.0, orbit.period), tol)?;
        Ok(Self {
            orbit: orbit.clone(),
            sol,
            sys: sys.clone(),
        })
    }

    pub fn solution(&self) -> &OrbitSolution {
        &self.sol
    }
}

impl ClosedCurve for OrbitCurve {
    fn period(&self) -> f64 {
        self.orbit.period
    }

    fn point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let s = self.sol.sol.eval(t);
        let v = magnetic_rhs(&self.sys, &s).unwrap_or([f64::NAN; 3]);
        ([s[0], s[1]], [v[0], v[1]])
    }

    fn class(&self) -> &TopologicalClass {
        &self.orbit.class
    }
}

/// Curve given by closures for position and velocity.
pub struct FnCurve<P, V> {
    pub period: f64,
    pub class: TopologicalClass,
    pub pos: P,
    pub vel: V,
}

impl<P, V> ClosedCurve for FnCurve<P, V>
where
    P: Fn(f64) -> [f64; 2] + Sync,
    V: Fn(f64) -> [f64; 2] + Sync,
{
    fn period(&self) -> f64 {
        self.period
    }

    fn point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        ((self.pos)(t), (self.vel)(t))
    }

    fn class(&self) -> &TopologicalClass {
        &self.class
    }
}

/// Orientation-preserving reparametrization `t -> base(phi(t))` with
/// `phi(t) = t * T_base / T + a sin(2 pi t / T)`, `|a| < T_base / (2 pi)`.
pub struct Reparametrized<'a> {
    pub base: &'a dyn ClosedCurve,
    pub period: f64,
    pub amplitude: f64,
}

impl Reparametrized<'_> {
    fn phi(&self, t: f64) -> (f64, f64) {
        let w = std::f64::consts::TAU / self.period;
        let r = self.base.period() / self.period;
        (r * t + self.amplitude * (w * t).sin(), r + self.amplitude * w * (w * t).cos())
    }
}

impl ClosedCurve for Reparametrized<'_> {
    fn period(&self) -> f64 {
        self.period
    }

    fn point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let (s, ds) = self.phi(t);
        let (p, v) = self.base.point(s);
        (p, [v[0] * ds, v[1] * ds])
    }

    fn class(&self) -> &TopologicalClass {
        self.base.class()
    }
}

/// Periodic perturbation profile `(a(s), b(s))` as a trigonometric polynomial
/// in `s / T` with derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    /// `(k, cos coefficient, sin coefficient)` per component.
    pub a: Vec<(u32, f64, f64)>,
    pub b: Vec<(u32, f64, f64)>,
}

impl Profile {
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, modes: u32, amp: f64) -> Self {
        let draw = |rng: &mut R| {
            (0..=modes)
                .map(|k| {
                    let s = amp / (1.0 + k as f64);
                    (k, rng.gen_range(-s..s), if k == 0 { 0.0 } else { rng.gen_range(-s..s) })
                })
                .collect()
        };
        let a = draw(rng);
        let b = draw(rng);
        Self { a, b }
    }

    fn eval(terms: &[(u32, f64, f64)], x: f64, period: f64) -> (f64, f64) {
        let w = std::f64::consts::TAU / period;
        terms.iter().fold((0.0, 0.0), |(v, d), &(k, c, s)| {
            let kw = k as f64 * w;
            let (sn, cs) = (kw * x).sin_cos();
            (v + c * cs + s * sn, d + kw * (-c * sn + s * cs))
        })
    }

    /// `((a, b), (a', b'))` at `s` for a curve of period `period`.
    pub fn at(&self, s: f64, period: f64) -> ([f64; 2], [f64; 2]) {
        let (a, da) = Self::eval(&self.a, s, period);
        let (b, db) = Self::eval(&self.b, s, period);
        ([a, b], [da, db])
    }
}

/// The variation `gamma_tau` of a closed curve: the loop is pushed by
/// `tau * profile` and the period stretched to `T (1 + tau * stretch)`.
///
/// On the torus the push is additive in the chart,
/// `gamma(s) + tau (a(s), b(s))`. On the hyperbolic disk it is
/// `exp_{gamma(s)}(tau (a gamma'(s) + b i gamma'(s)))`, which commutes with deck maps
/// so the perturbed lift stays in the same class.
pub struct Perturbed<'a> {
    pub base: &'a dyn ClosedCurve,
    pub profile: Profile,
    pub tau: f64,
    pub stretch: f64,
    hyperbolic: bool,
}

impl<'a> Perturbed<'a> {
    pub fn new(sys: &MagneticSystem, base: &'a dyn ClosedCurve, profile: Profile, tau: f64, stretch: f64) -> Self {
        Self {
            base,
            profile,
            tau,
            stretch,
            hyperbolic: !sys.surface.is_torus(),
        }
    }

    fn scale(&self) -> f64 {
        1.0 + self.tau * self.stretch
    }

    fn position(&self, s: f64) -> [f64; 2] {
        let (p, v) = self.base.point(s);
        let ([a, b], _) = self.profile.at(s, self.base.period());
        if self.hyperbolic {
            let vc = Complex64::new(v[0], v[1]);
            let xi = self.tau * (a * vc + b * Complex64::i() * vc);
            let q = exp_map(Complex64::new(p[0], p[1]), xi);
            [q.re, q.im]
        } else {
            [p[0] + self.tau * a, p[1] + self.tau * b]
        }
    }
}

impl ClosedCurve for Perturbed<'_> {
    fn period(&self) -> f64 {
        self.base.period() * self.scale()
    }

    fn point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let k = self.scale();
        let s = t / k;
        if !self.hyperbolic {
            let (p, v) = self.base.point(s);
            let ([a, b], [da, db]) = self.profile.at(s, self.base.period());
            return (
                [p[0] + self.tau * a, p[1] + self.tau * b],
                [(v[0] + self.tau * da) / k, (v[1] + self.tau * db) / k],
            );
        }
        // velocity of the exponential push by fourth-order differences
        let h = 1e-4 * self.base.period();
        let f = |x: f64| self.position(x);
        let (m2, m1, p1, p2) = (f(s - 2.0 * h), f(s - h), f(s + h), f(s + 2.0 * h));
        let d = |i: usize| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h) / k;
        (f(s), [d(0), d(1)])
    }

    fn class(&self) -> &TopologicalClass {
        self.base.class()
    }
}

/// Deck map of a curve's class.
pub fn curve_deck(sys: &MagneticSystem, curve: &dyn ClosedCurve) -> Result<Deck> {
    Deck::for_class(sys, curve.class())
}

/// Check the lift really closes: `c(T) = D c(0)` within `tol`.
pub fn check_closed(sys: &MagneticSystem, curve: &dyn ClosedCurve, tol: f64) -> Result<()> {
    let deck = curve_deck(sys, curve)?;
    let (p0, _) = curve.point(0.0);
    let (p1, _) = curve.point(curve.period());
    let moved = deck.apply(&crate::smbundle::UnitTangent::new(p0[0], p0[1], 0.0));
    let gap = (moved.p.x1 - p1[0]).hypot(moved.p.x2 - p1[1]);
    if !(gap < tol) {
        return Err(Error::Contract(format!("curve is not closed in its class (gap {gap:e})")));
    }
    Ok(())
}
