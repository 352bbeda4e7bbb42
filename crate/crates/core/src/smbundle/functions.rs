//! Test functions on `SM` with exact jets through order two.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fourier::{Fourier2, Fourier3, Jet};
use crate::surface::SurfaceModel;
use crate::system::{MagneticSystem, OneForm};

use super::UnitTangent;

/// A smooth function `SM -> R` evaluable with chart derivatives through order 2.
pub trait SmFunction: Sync {
    fn jet(&self, sys: &MagneticSystem, z: &UnitTangent) -> Result<Jet<3>>;

    /// Trigonometric degree per axis `(x1, x2, theta)` used for bandwidth checks.
    /// Functions involving the conformal factor report the degree of their
    /// polynomial part only.
    fn degree(&self) -> [usize; 3];
}

fn lift2(j: &Jet<2>) -> Jet<3> {
    let mut out = Jet::<3>::constant(j.value);
    for a in 0..2 {
        out.grad[a] = j.grad[a];
        for b in 0..2 {
            out.hess[a][b] = j.hess[a][b];
        }
    }
    out
}

fn cos_sin_theta(theta: f64) -> (Jet<3>, Jet<3>) {
    let (s, c) = theta.sin_cos();
    let mut cj = Jet::<3>::constant(c);
    cj.grad[2] = -s;
    cj.hess[2][2] = -c;
    let mut sj = Jet::<3>::constant(s);
    sj.grad[2] = c;
    sj.hess[2][2] = -s;
    (cj, sj)
}

/// Trigonometric polynomial in `(x1, x2, theta)` on the torus bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigFunction(pub Fourier3);

impl SmFunction for TrigFunction {
    fn jet(&self, sys: &MagneticSystem, z: &UnitTangent) -> Result<Jet<3>> {
        if !sys.surface.is_torus() {
            return Err(Error::Unsupported("trigonometric test functions live on the torus".into()));
        }
        Ok(self.0.jet(z.state()))
    }

    fn degree(&self) -> [usize; 3] {
        [self.0.axis_degree(0), self.0.axis_degree(1), self.0.axis_degree(2)]
    }
}

/// A basic function `h o π`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasicFunction(pub Fourier2);

impl SmFunction for BasicFunction {
    fn jet(&self, sys: &MagneticSystem, z: &UnitTangent) -> Result<Jet<3>> {
        sys.surface.check_domain(z.p)?;
        Ok(lift2(&self.0.jet(z.p.as_array())))
    }

    fn degree(&self) -> [usize; 3] {
        [self.0.axis_degree(0), self.0.axis_degree(1), 0]
    }
}

/// `(x, v) -> omega_x(v)`, or `omega_x(iv)` when `rotated`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneFormFunction {
    pub form: OneForm,
    pub rotated: bool,
}

impl SmFunction for OneFormFunction {
    fn jet(&self, sys: &MagneticSystem, z: &UnitTangent) -> Result<Jet<3>> {
        let m = sys.metric(z.p)?;
        let e = lift2(&m.u).compose(m.inv_conformal, -m.inv_conformal, m.inv_conformal);
        let [w1, w2] = self.form.jets(z.p.as_array()).map(|j| lift2(&j));
        let (c, s) = cos_sin_theta(z.theta);
        // v = e^{-u}(c, s); iv = e^{-u}(-s, c)
        let inner = if self.rotated {
            w1.mul(&s).scale(-1.0).add(&w2.mul(&c))
        } else {
            w1.mul(&c).add(&w2.mul(&s))
        };
        Ok(e.mul(&inner))
    }

    fn degree(&self) -> [usize; 3] {
        [
            self.form.w1.axis_degree(0).max(self.form.w2.axis_degree(0)),
            self.form.w1.axis_degree(1).max(self.form.w2.axis_degree(1)),
            1,
        ]
    }
}

/// `Σ x1^a x2^b (C cos(m theta) + S sin(m theta))` on the disk chart.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskPolynomial {
    /// `(a, b, m, C, S)`.
    pub terms: Vec<(u32, u32, u32, f64, f64)>,
}

impl DiskPolynomial {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, poly_degree: u32, fiber_degree: u32, amp: f64) -> Self {
        let mut terms = Vec::new();
        for a in 0..=poly_degree {
            for b in 0..=(poly_degree - a) {
                for m in 0..=fiber_degree {
                    let c = rng.gen_range(-amp..amp);
                    let s = if m == 0 { 0.0 } else { rng.gen_range(-amp..amp) };
                    terms.push((a, b, m, c, s));
                }
            }
        }
        Self { terms }
    }
}

fn power_jet(x: f64, n: u32) -> (f64, f64, f64) {
    let n_f = n as f64;
    let p = |k: i32| if k < 0 { 0.0 } else { x.powi(k) };
    (
        p(n as i32),
        n_f * p(n as i32 - 1),
        n_f * (n_f - 1.0) * p(n as i32 - 2),
    )
}

impl SmFunction for DiskPolynomial {
    fn jet(&self, sys: &MagneticSystem, z: &UnitTangent) -> Result<Jet<3>> {
        if !matches!(sys.surface, SurfaceModel::Hyperbolic(_)) {
            return Err(Error::Unsupported("disk polynomials live on the disk chart".into()));
        }
        sys.surface.check_domain(z.p)?;
        let mut out = Jet::<3>::default();
        for &(a, b, m, cc, ss) in &self.terms {
            let (pa, da, dda) = power_jet(z.p.x1, a);
            let (pb, db, ddb) = power_jet(z.p.x2, b);
            let mf = m as f64;
            let (s, c) = (mf * z.theta).sin_cos();
            let t = cc * c + ss * s;
            let dt = mf * (-cc * s + ss * c);
            let ddt = -mf * mf * t;
            let term = Jet::<3> {
                value: pa * pb * t,
                grad: [da * pb * t, pa * db * t, pa * pb * dt],
                hess: [
                    [dda * pb * t, da * db * t, da * pb * dt],
                    [da * db * t, pa * ddb * t, pa * db * dt],
                    [da * pb * dt, pa * db * dt, pa * pb * ddt],
                ],
            };
            out = out.add(&term);
        }
        Ok(out)
    }

    fn degree(&self) -> [usize; 3] {
        let deg = |f: fn(&(u32, u32, u32, f64, f64)) -> u32| {
            self.terms.iter().map(f).max().unwrap_or(0) as usize
        };
        [deg(|t| t.0), deg(|t| t.1), deg(|t| t.2)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::torus_scale;
    use crate::surface::{ConformalTorusSpec, HyperbolicConstantSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fd_check<F: SmFunction>(f: &F, sys: &MagneticSystem, z: UnitTangent) {
        let jet = f.jet(sys, &z).unwrap();
        let h = 1e-5;
        for a in 0..3 {
            let mut sp = z.state();
            let mut sm = z.state();
            sp[a] += h;
            sm[a] -= h;
            let jp = f.jet(sys, &UnitTangent::from_state(sp)).unwrap();
            let jm = f.jet(sys, &UnitTangent::from_state(sm)).unwrap();
            assert!(((jp.value - jm.value) / (2.0 * h) - jet.grad[a]).abs() < 1e-7);
            for b in 0..3 {
                assert!(((jp.grad[b] - jm.grad[b]) / (2.0 * h) - jet.hess[a][b]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn one_form_jet_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = Fourier2::random(&mut rng, [1, 2], 0.2, torus_scale());
        let sys = MagneticSystem::with_c(
            SurfaceModel::Torus(ConformalTorusSpec::new(u, Fourier2::zero(torus_scale()), 2).unwrap()),
            1.0,
        )
        .unwrap();
        let form = OneForm {
            w1: Fourier2::random(&mut rng, [2, 2], 1.0, torus_scale()),
            w2: Fourier2::random(&mut rng, [2, 2], 1.0, torus_scale()),
        };
        for rotated in [false, true] {
            let f = OneFormFunction { form: form.clone(), rotated };
            fd_check(&f, &sys, UnitTangent::new(0.3, 0.6, 2.0));
        }
    }

    #[test]
    fn disk_polynomial_jet_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sys = MagneticSystem::new(SurfaceModel::Hyperbolic(HyperbolicConstantSpec::new(0.3).unwrap()))
            .unwrap();
        let f = DiskPolynomial::random(&mut rng, 3, 2, 1.0);
        fd_check(&f, &sys, UnitTangent::new(0.2, -0.4, 1.0));
        assert_eq!(f.degree(), [3, 3, 2]);
    }
}
