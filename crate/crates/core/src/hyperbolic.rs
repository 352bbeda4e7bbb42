//! Isometries of the hyperbolic plane in the Poincaré disk chart.
//!
//! Deck generators are specified as real unit-determinant matrices acting on the
//! upper half-plane and transported to the disk by the Cayley map
//! `w = (z - i) / (z + i)`. The default group is the genus-2 regular-octagon
//! (Bolza) group: in the disk its four side pairings are
//!
//! ```text
//! g_k = [[1 + √2,            √(2 + 2√2) e^{ikπ/4}],
//!        [√(2 + 2√2) e^{-ikπ/4}, 1 + √2          ]],   k = 0, 1, 2, 3,
//! ```
//!
//! with relation `g0 g1⁻¹ g2 g3⁻¹ g0⁻¹ g1 g2⁻¹ g3 = 1`. Each has trace
//! `2 + 2√2` and translation length `2 arccosh(1 + √2) ≈ 3.0571`. Words use the
//! letters `a b c d` for `g0..g3` and `A B C D` for their inverses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real 2x2 matrix of unit determinant acting on the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix(pub [[f64; 2]; 2]);

impl RealMatrix {
    pub fn det(&self) -> f64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2.0
    }

    /// `2 arccosh(|tr| / 2)`.
    pub fn translation_length(&self) -> f64 {
        2.0 * (0.5 * self.trace().abs()).acosh()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let a = self.0;
        let b = o.0;
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(m)
    }

    pub fn inverse(&self) -> Self {
        let m = self.0;
        let d = self.det();
        Self([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    pub fn identity() -> Self {
        Self([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn apply_upper(&self, z: Complex64) -> Complex64 {
        let m = self.0;
        (z * m[0][0] + m[0][1]) / (z * m[1][0] + m[1][1])
    }

    pub fn to_disk(&self) -> Mobius {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let c = [[one, -i], [one, i]];
        let cinv = [[i, i], [-one, one]];
        let m = self.0.map(|r| r.map(|v| Complex64::new(v, 0.0)));
        let p = cmul(&cmul(&c, &m), &cinv);
        Mobius::new(p[0][0], p[0][1], p[1][0], p[1][1])
    }
}

fn cmul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

/// Orientation-preserving Möbius map `w -> (a w + b) / (c w + d)`, normalized to
/// unit determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        let s = (a * d - b * c).sqrt();
        Self {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::new(one, zero, zero, one)
    }

    pub fn apply(&self, w: Complex64) -> Complex64 {
        (self.a * w + self.b) / (self.c * w + self.d)
    }

    pub fn derivative(&self, w: Complex64) -> Complex64 {
        let q = self.c * w + self.d;
        Complex64::new(1.0, 0.0) / (q * q)
    }

    pub fn compose(&self, o: &Self) -> Self {
        Self::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    /// `|trace|` of the unit-determinant representative (sign ambiguous).
    pub fn abs_trace(&self) -> f64 {
        (self.a + self.d).norm()
    }

    pub fn translation_length(&self) -> f64 {
        2.0 * (0.5 * self.abs_trace()).max(1.0).acosh()
    }

    /// Disk automorphism taking `p` to the origin.
    pub fn to_origin(p: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self::new(one, -p, -p.conj(), one)
    }

    /// Act on a unit tangent vector given as disk position and chart angle.
    pub fn act(&self, w: Complex64, theta: f64) -> (Complex64, f64) {
        (self.apply(w), theta + self.derivative(w).arg())
    }

    /// Chart Jacobian of the induced map on `(x1, x2, theta)`.
    pub fn state_jacobian(&self, w: Complex64) -> [[f64; 3]; 3] {
        let fp = self.derivative(w);
        // arg f'(w) = -2 arg(c w + d)
        let q = self.c / (self.c * w + self.d);
        let darg_dx = -2.0 * q.im;
        let darg_dy = -2.0 * q.re;
        [
            [fp.re, -fp.im, 0.0],
            [fp.im, fp.re, 0.0],
            [darg_dx, darg_dy, 1.0],
        ]
    }

    pub fn max_entry_distance(&self, o: &Self) -> f64 {
        // projective comparison up to overall sign
        let d = |s: f64| {
            [
                (self.a - o.a * s).norm(),
                (self.b - o.b * s).norm(),
                (self.c - o.c * s).norm(),
                (self.d - o.d * s).norm(),
            ]
            .into_iter()
            .fold(0.0, f64::max)
        };
        d(1.0).min(d(-1.0))
    }
}

/// Hyperbolic distance between two disk points.
pub fn distance(p: Complex64, q: Complex64) -> f64 {
    let m = Mobius::to_origin(p).apply(q).norm();
    2.0 * m.min(1.0 - 1e-16).atanh()
}

/// Conformal factor `e^u = 2 / (1 - |w|^2)` of the disk metric.
pub fn conformal_factor(w: Complex64) -> f64 {
    2.0 / (1.0 - w.norm_sqr())
}

/// Riemannian exponential map at `p` applied to the chart vector `xi`.
pub fn exp_map(p: Complex64, xi: Complex64) -> Complex64 {
    if xi.norm() == 0.0 {
        return p;
    }
    let to0 = Mobius::to_origin(p);
    let v0 = xi * to0.derivative(p);
    let len = 2.0 * v0.norm();
    let q = v0 / v0.norm() * (0.5 * len).tanh();
    to0.inverse().apply(q)
}

/// Geodesic from `p` to `q` parametrized proportionally to arc length on `[0, 1]`,
/// returning position and chart velocity.
pub fn geodesic_segment(p: Complex64, q: Complex64, s: f64) -> (Complex64, Complex64) {
    let to0 = Mobius::to_origin(p);
    let back = to0.inverse();
    let q0 = to0.apply(q);
    let r = q0.norm();
    if r == 0.0 {
        return (p, Complex64::new(0.0, 0.0));
    }
    let dir = q0 / r;
    let big_l = r.atanh();
    let w0 = dir * (s * big_l).tanh();
    let dw0 = dir * big_l * (1.0 - (s * big_l).tanh().powi(2));
    (back.apply(w0), back.derivative(w0) * dw0)
}

/// Primitive `eta` of the hyperbolic area form on the disk, `d eta = dA`:
/// `eta = 2 (x dy - y dx) / (1 - r^2)`. Returns `eta(w)(v)`.
pub fn area_primitive(w: Complex64, v: Complex64) -> f64 {
    2.0 * (w.re * v.im - w.im * v.re) / (1.0 - w.norm_sqr())
}

/// Default Bolza-group side pairings as disk maps.
pub fn octagon_disk_generators() -> [Mobius; 4] {
    let a = 1.0 + std::f64::consts::SQRT_2;
    let b = (2.0 + 2.0 * std::f64::consts::SQRT_2).sqrt();
    std::array::from_fn(|k| {
        let phase = Complex64::from_polar(1.0, k as f64 * std::f64::consts::FRAC_PI_4);
        Mobius::new(
            Complex64::new(a, 0.0),
            phase * b,
            phase.conj() * b,
            Complex64::new(a, 0.0),
        )
    })
}

/// The default generators converted to real upper half-plane matrices.
pub fn octagon_real_generators() -> Vec<RealMatrix> {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    // M = C^{-1} g C with C = [[1, -i], [1, i]], C^{-1} ~ [[i, i], [-1, 1]]
    let c = [[one, -i], [one, i]];
    let cinv = [[i, i], [-one, one]];
    octagon_disk_generators()
        .iter()
        .map(|g| {
            let gm = [[g.a, g.b], [g.c, g.d]];
            let m = cmul(&cmul(&cinv, &gm), &c);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let s = det.sqrt();
            // the product is real up to a common complex phase
            let mut r = m.map(|row| row.map(|v| v / s));
            if r[0][0].re.abs() < r[0][0].im.abs() {
                r = r.map(|row| row.map(|v| v * Complex64::new(0.0, -1.0)));
            }
            RealMatrix(r.map(|row| row.map(|v| v.re)))
        })
        .collect()
}

/// A reduced word in the deck generators and their inverses.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(String);

impl Word {
    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Config("empty generator word".into()));
        }
        for ch in s.chars() {
            if !ch.is_ascii_alphabetic() {
                return Err(Error::Config(format!("invalid generator letter {ch:?}")));
            }
        }
        let chars: Vec<char> = s.chars().collect();
        for w in chars.windows(2) {
            if w[0] != w[1] && w[0].eq_ignore_ascii_case(&w[1]) {
                return Err(Error::Config(format!("word {s} is not reduced")));
            }
        }
        Ok(Self(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Cyclically reduced: first and last letters are not mutually inverse.
    pub fn is_cyclically_reduced(&self) -> bool {
        let first = self.0.chars().next();
        let last = self.0.chars().last();
        match (first, last) {
            (Some(f), Some(l)) if self.0.len() > 1 => !(f != l && f.eq_ignore_ascii_case(&l)),
            _ => true,
        }
    }

    /// Evaluate against generator matrices; letter `n` of the alphabet is generator `n`.
    pub fn evaluate(&self, generators: &[RealMatrix]) -> Result<RealMatrix> {
        let mut m = RealMatrix::identity();
        for ch in self.0.chars() {
            let idx = (ch.to_ascii_lowercase() as u8 - b'a') as usize;
            let g = generators
                .get(idx)
                .ok_or_else(|| Error::Config(format!("no generator for letter {ch}")))?;
            let g = if ch.is_ascii_uppercase() {
                g.inverse()
            } else {
                *g
            };
            m = m.mul(&g);
        }
        Ok(m)
    }

    /// All reduced, cyclically reduced words up to `max_len` over `n` generators,
    /// in shortlex order.
    pub fn enumerate(n: usize, max_len: usize) -> Vec<Word> {
        let letters: Vec<char> = (0..n)
            .flat_map(|i| {
                let c = (b'a' + i as u8) as char;
                [c, c.to_ascii_uppercase()]
            })
            .collect();
        let mut out = Vec::new();
        let mut frontier = vec![String::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for &l in &letters {
                    if let Some(last) = w.chars().last() {
                        if last != l && last.eq_ignore_ascii_case(&l) {
                            continue;
                        }
                    }
                    let mut s = w.clone();
                    s.push(l);
                    next.push(s);
                }
            }
            for s in &next {
                let word = Word(s.clone());
                if word.is_cyclically_reduced() {
                    out.push(word);
                }
            }
            frontier = next;
        }
        out
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Greedy Dirichlet-domain reduction: repeatedly apply the side pairing that
/// brings `w` closest to the origin. Returns the reduced point, the rotated
/// angle, and the accumulated isometry applied.
pub fn reduce_to_fundamental_domain(
    generators: &[Mobius],
    w: Complex64,
    theta: f64,
) -> (Complex64, f64, Mobius) {
    let all: Vec<Mobius> = generators
        .iter()
        .flat_map(|g| [*g, g.inverse()])
        .collect();
    let mut cur = w;
    let mut ang = theta;
    let mut acc = Mobius::identity();
    for _ in 0..10_000 {
        let mut best: Option<(f64, Mobius)> = None;
        for g in &all {
            let r = g.apply(cur).norm();
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, *g));
            }
        }
        match best {
            Some((r, g)) if r < cur.norm() * (1.0 - 1e-14) => {
                let (nw, na) = g.act(cur, ang);
                cur = nw;
                ang = na;
                acc = g.compose(&acc);
            }
            _ => break,
        }
    }
    (cur, ang, acc)
}
