use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hyperbolic::{distance, Mobius, RealMatrix, Word};
use crate::smbundle::UnitTangent;
use crate::surface::HyperbolicConstantSpec;

/// Closed-form closed magnetic geodesic in the class of a hyperbolic deck
/// element for `K = -1` and constant `|lambda| < 1`: the hypercycle at distance
/// `d` from the axis with `tanh d = |lambda|`, of period `l / sqrt(1 - lambda^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypercycleOracle {
    pub word: Word,
    pub translation_length: f64,
    pub lambda: f64,
    pub period: f64,
    /// Distance from the axis.
    pub axis_distance: f64,
    /// Upper half-plane map taking the standard picture (axis on the imaginary
    /// axis, translation `z -> e^l z`) to the deck element's axis.
    pub normalizer: RealMatrix,
    /// Ray angle of the hypercycle in the standard picture.
    pub ray_angle: f64,
    /// `log r` of the point on the ray closest to the disk origin.
    pub log_r0: f64,
}

fn cayley(z: Complex64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let w = (z - i) / (z + i);
    let dw = 2.0 * i / ((z + i) * (z + i));
    (w, dw)
}

impl HypercycleOracle {
    /// Point of the orbit at time `t` after the seed, as a unit tangent vector
    /// in the disk chart.
    pub fn state_at(&self, t: f64) -> UnitTangent {
        let s = self.ray_angle.sin();
        let z_std = Complex64::from_polar((self.log_r0 + s * t).exp(), self.ray_angle);
        let m = self.normalizer.0;
        let q = z_std * m[1][0] + m[1][1];
        let z = self.normalizer.apply_upper(z_std);
        let dz = Complex64::new(1.0, 0.0) / (q * q);
        let (w, dw) = cayley(z);
        UnitTangent::new(w.re, w.im, self.ray_angle + dz.arg() + dw.arg())
    }

    pub fn seed(&self) -> UnitTangent {
        self.state_at(0.0)
    }
}

/// `h` in `SL(2, R)` with `g = ± h diag(e^{l/2}, e^{-l/2}) h^{-1}`.
fn normalizer(g: &RealMatrix) -> RealMatrix {
    let mut m = g.0;
    if g.trace() < 0.0 {
        m = m.map(|r| r.map(|v| -v));
    }
    let tr = m[0][0] + m[1][1];
    let disc = (tr * tr - 4.0).max(0.0).sqrt();
    let (mu_p, mu_m) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
    let eig = |mu: f64| -> [f64; 2] {
        let a = [m[0][1], mu - m[0][0]];
        let b = [mu - m[1][1], m[1][0]];
        if a[0].hypot(a[1]) >= b[0].hypot(b[1]) {
            a
        } else {
            b
        }
    };
    let vp = eig(mu_p);
    let mut vm = eig(mu_m);
    let mut det = vp[0] * vm[1] - vm[0] * vp[1];
    if det < 0.0 {
        vm = [-vm[0], -vm[1]];
        det = -det;
    }
    let s = det.sqrt();
    RealMatrix([[vp[0] / s, vm[0] / s], [vp[1] / s, vm[1] / s]])
}

pub fn hyperbolic_orbit_oracle(spec: &HyperbolicConstantSpec, word: &Word) -> Result<HypercycleOracle> {
    let lambda = spec.lambda_const;
    if lambda.abs() >= 1.0 {
        return Err(Error::Regime(lambda));
    }
    let g = word.evaluate(&spec.deck_generators)?;
    if !g.is_hyperbolic() {
        return Err(Error::DegenerateInput(format!("word {word} is not hyperbolic")));
    }
    let l = g.translation_length();
    let root = (1.0 - lambda * lambda).sqrt();
    // the curvature vector points toward the axis; Y(v) = lambda iv turns left,
    // so lambda > 0 keeps the axis on the left of the outward ray
    let ray_angle = if lambda >= 0.0 {
        root.asin()
    } else {
        std::f64::consts::PI - root.asin()
    };
    let h = normalizer(&g);
    let mut oracle = HypercycleOracle {
        word: word.clone(),
        translation_length: l,
        lambda,
        period: l / root,
        axis_distance: lambda.abs().atanh(),
        normalizer: h,
        ray_angle,
        log_r0: 0.0,
    };
    // start from the point of the hypercycle nearest the disk origin
    let origin_dist = |lr: f64| {
        let z = h.apply_upper(Complex64::from_polar(lr.exp(), ray_angle));
        distance(Complex64::new(0.0, 0.0), cayley(z).0)
    };
    let (mut a, mut b) = (-40.0_f64, 40.0_f64);
    let n = 800;
    let best = (0..=n)
        .map(|i| a + (b - a) * i as f64 / n as f64)
        .min_by(|x, y| origin_dist(*x).total_cmp(&origin_dist(*y)))
        .unwrap_or(0.0);
    a = best - 0.1;
    b = best + 0.1;
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - gr * (b - a);
        let d = a + gr * (b - a);
        if origin_dist(c) < origin_dist(d) {
            b = d;
        } else {
            a = c;
        }
    }
    oracle.log_r0 = 0.5 * (a + b);
    Ok(oracle)
}

/// The deck element of a word as a disk map.
pub fn disk_deck(spec: &HyperbolicConstantSpec, word: &Word) -> Result<Mobius> {
    Ok(word.evaluate(&spec.deck_generators)?.to_disk())
}
