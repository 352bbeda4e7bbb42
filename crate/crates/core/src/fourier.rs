//! Real trigonometric series with exact term-wise derivatives through order two.
//!
//! A series is stored as a conjugate-closed list of complex coefficients
//! `c_k` multiplying `exp(i <w, x>)` with `w_j = scale_j * k_j`. The spatial
//! torus axes use `scale = 2π`, the fiber angle uses `scale = 1`.

use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Value, gradient and Hessian of a scalar function of `D` variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const D: usize> {
    pub value: f64,
    pub grad: [f64; D],
    pub hess: [[f64; D]; D],
}

impl<const D: usize> Default for Jet<D> {
    fn default() -> Self {
        Self {
            value: 0.0,
            grad: [0.0; D],
            hess: [[0.0; D]; D],
        }
    }
}

impl<const D: usize> Jet<D> {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            ..Default::default()
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        out.value += other.value;
        for i in 0..D {
            out.grad[i] += other.grad[i];
            for j in 0..D {
                out.hess[i][j] += other.hess[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.value *= s;
        for i in 0..D {
            out.grad[i] *= s;
            for j in 0..D {
                out.hess[i][j] *= s;
            }
        }
        out
    }

    /// Product rule through second order.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        out.value = self.value * other.value;
        for i in 0..D {
            out.grad[i] = self.grad[i] * other.value + self.value * other.grad[i];
            for j in 0..D {
                out.hess[i][j] = self.hess[i][j] * other.value
                    + self.grad[i] * other.grad[j]
                    + self.grad[j] * other.grad[i]
                    + self.value * other.hess[i][j];
            }
        }
        out
    }

    /// Compose with a scalar function given its value and first two derivatives.
    pub fn compose(&self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::default();
        out.value = f;
        for i in 0..D {
            out.grad[i] = df * self.grad[i];
            for j in 0..D {
                out.hess[i][j] = df * self.hess[i][j] + d2f * self.grad[i] * self.grad[j];
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries<const D: usize> {
    terms: Vec<([i32; D], Complex64)>,
    scale: [f64; D],
}

impl<const D: usize> TrigSeries<D> {
    pub fn zero(scale: [f64; D]) -> Self {
        Self {
            terms: Vec::new(),
            scale,
        }
    }

    /// Build from raw terms. Duplicate wave indices are merged; the result must
    /// be conjugate-closed up to `1e-14` relative.
    pub fn from_terms(terms: Vec<([i32; D], Complex64)>, scale: [f64; D]) -> Result<Self> {
        let mut merged: BTreeMap<[i32; D], Complex64> = BTreeMap::new();
        for (k, c) in terms {
            *merged.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let norm = merged.values().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for (k, c) in &merged {
            let neg = k.map(|v| -v);
            let partner = merged.get(&neg).copied().unwrap_or_default();
            if (partner - c.conj()).norm() > 1e-14 * norm {
                return Err(Error::Parse(format!(
                    "coefficient table is not conjugate-symmetric at wave index {k:?}"
                )));
            }
        }
        Ok(Self {
            terms: merged.into_iter().filter(|(_, c)| c.norm() != 0.0).collect(),
            scale,
        })
    }

    pub fn terms(&self) -> &[([i32; D], Complex64)] {
        &self.terms
    }

    pub fn scale(&self) -> [f64; D] {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `|k_j|` over all terms and axes.
    pub fn max_degree(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|(k, _)| k.iter().map(|v| v.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    /// Largest `|k_j|` on one axis.
    pub fn axis_degree(&self, axis: usize) -> usize {
        self.terms
            .iter()
            .map(|(k, _)| k[axis].unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// `a * cos(<w, x>)`.
    pub fn add_cos(&mut self, k: [i32; D], a: f64) {
        if k.iter().all(|v| *v == 0) {
            self.terms.push((k, Complex64::new(a, 0.0)));
        } else {
            self.terms.push((k, Complex64::new(0.5 * a, 0.0)));
            self.terms.push((k.map(|v| -v), Complex64::new(0.5 * a, 0.0)));
        }
        self.normalize();
    }

    /// `a * sin(<w, x>)`.
    pub fn add_sin(&mut self, k: [i32; D], a: f64) {
        if k.iter().all(|v| *v == 0) {
            return;
        }
        self.terms.push((k, Complex64::new(0.0, -0.5 * a)));
        self.terms.push((k.map(|v| -v), Complex64::new(0.0, 0.5 * a)));
        self.normalize();
    }

    pub fn add_constant(&mut self, a: f64) {
        self.add_cos([0; D], a);
    }

    fn normalize(&mut self) {
        let terms = std::mem::take(&mut self.terms);
        // merging never breaks conjugate symmetry of symmetric inputs
        *self = Self::from_terms(terms, self.scale).expect("symmetric by construction");
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect(),
            scale: self.scale,
        }
    }

    pub fn sum(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::from_terms(terms, self.scale).expect("sum of symmetric series")
    }

    /// Term-wise partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        let w = self.scale[axis];
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k[axis] != 0)
                .map(|(k, c)| (*k, c * Complex64::new(0.0, w * k[axis] as f64)))
                .collect(),
            scale: self.scale,
        }
    }

    /// Mean value (the zero-mode coefficient).
    pub fn mean(&self) -> f64 {
        self.terms
            .iter()
            .find(|(k, _)| k.iter().all(|v| *v == 0))
            .map(|(_, c)| c.re)
            .unwrap_or(0.0)
    }

    /// Random real series with all wave indices `|k_j| <= degree`; coefficient
    /// magnitudes decay like `amplitude / (1 + |k|^2)`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        degree: [usize; D],
        amplitude: f64,
        scale: [f64; D],
    ) -> Self {
        let mut terms = Vec::new();
        let mut idx = [0i32; D];
        let lo: [i32; D] = degree.map(|d| -(d as i32));
        idx.copy_from_slice(&lo);
        loop {
            let neg = idx.map(|v| -v);
            // keep one representative of each +-k pair: lexicographically positive
            if idx > neg {
                let k2: f64 = idx.iter().map(|v| (*v as f64).powi(2)).sum();
                let amp = amplitude / (1.0 + k2);
                let c = Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
                terms.push((idx, c));
                terms.push((neg, c.conj()));
            } else if idx == neg {
                terms.push((idx, Complex64::new(rng.gen_range(-amplitude..amplitude), 0.0)));
            }
            // odometer increment
            let mut axis = 0;
            loop {
                if axis == D {
                    return Self::from_terms(terms, scale).expect("symmetric by construction");
                }
                if idx[axis] < degree[axis] as i32 {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = lo[axis];
                axis += 1;
            }
        }
    }

    /// Real value with derivatives through order two; the second component is the
    /// imaginary part of the raw complex sum (zero up to roundoff).
    pub fn jet_with_imag(&self, x: [f64; D]) -> (Jet<D>, f64) {
        let mut jet = Jet::<D>::default();
        let mut imag = 0.0;
        for (k, c) in &self.terms {
            let mut w = [0.0; D];
            let mut phase = 0.0;
            for j in 0..D {
                w[j] = self.scale[j] * k[j] as f64;
                phase += w[j] * x[j];
            }
            let e = c * Complex64::from_polar(1.0, phase);
            jet.value += e.re;
            imag += e.im;
            // d/dx_j e = i w_j e  ->  Re = -w_j Im(e)
            for a in 0..D {
                jet.grad[a] -= w[a] * e.im;
                for b in 0..D {
                    jet.hess[a][b] -= w[a] * w[b] * e.re;
                }
            }
        }
        (jet, imag)
    }

    pub fn jet(&self, x: [f64; D]) -> Jet<D> {
        self.jet_with_imag(x).0
    }

    pub fn value(&self, x: [f64; D]) -> f64 {
        let mut v = 0.0;
        for (k, c) in &self.terms {
            let phase: f64 = (0..D).map(|j| self.scale[j] * k[j] as f64 * x[j]).sum();
            v += (c * Complex64::from_polar(1.0, phase)).re;
        }
        v
    }
}

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Series on the unit 2-torus.
pub type Fourier2 = TrigSeries<2>;
/// Series on the torus bundle coordinates `(x1, x2, theta)`.
pub type Fourier3 = TrigSeries<3>;

pub fn torus_scale() -> [f64; 2] {
    [TWO_PI, TWO_PI]
}

pub fn bundle_scale() -> [f64; 3] {
    [TWO_PI, TWO_PI, 1.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cos_sin_build_real_series() {
        let mut f = Fourier2::zero(torus_scale());
        f.add_cos([1, 0], 0.1);
        f.add_sin([0, 1], 0.05);
        f.add_constant(0.3);
        let x = [0.13, 0.71];
        let expect = 0.3 + 0.1 * (TWO_PI * x[0]).cos() + 0.05 * (TWO_PI * x[1]).sin();
        assert!((f.value(x) - expect).abs() < 1e-15);
        assert_eq!(f.max_degree(), 1);
        assert!((f.mean() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_table_rejected() {
        let terms = vec![([1, 0], Complex64::new(1.0, 0.5))];
        assert!(Fourier2::from_terms(terms, torus_scale()).is_err());
    }

    #[test]
    fn random_series_is_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Fourier3::random(&mut rng, [2, 2, 3], 1.0, bundle_scale());
        for i in 0..50 {
            let x = [0.01 * i as f64, 0.37 - 0.003 * i as f64, 0.2 * i as f64];
            let (_, im) = f.jet_with_imag(x);
            assert!(im.abs() < 1e-13);
        }
    }

    #[test]
    fn jet_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = Fourier3::random(&mut rng, [2, 1, 2], 1.0, bundle_scale());
        let x = [0.3, 0.8, 1.1];
        let jet = f.jet(x);
        let h = 1e-5;
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let fd = (f.value(xp) - f.value(xm)) / (2.0 * h);
            assert!((fd - jet.grad[a]).abs() < 1e-7, "axis {a}");
            let gp = f.jet(xp).grad;
            let gm = f.jet(xm).grad;
            for b in 0..3 {
                let fd2 = (gp[b] - gm[b]) / (2.0 * h);
                assert!((fd2 - jet.hess[a][b]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn derivative_series_matches_jet() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Fourier2::random(&mut rng, [3, 3], 1.0, torus_scale());
        let d1 = f.derivative(0);
        let x = [0.42, 0.17];
        assert!((d1.value(x) - f.jet(x).grad[0]).abs() < 1e-12);
    }

    #[test]
    fn jet_product_rule() {
        let a = Jet::<2> {
            value: 2.0,
            grad: [1.0, -1.0],
            hess: [[0.5, 0.0], [0.0, 1.0]],
        };
        let b = Jet::<2> {
            value: -1.0,
            grad: [0.0, 3.0],
            hess: [[1.0, 2.0], [2.0, 0.0]],
        };
        let p = a.mul(&b);
        assert_eq!(p.value, -2.0);
        assert_eq!(p.grad, [-1.0, 7.0]);
        // d2/dx2dx2 = a22 b + 2 a2 b2 + a b22 = -1 - 6 + 0
        assert_eq!(p.hess[1][1], -7.0);
    }
}
