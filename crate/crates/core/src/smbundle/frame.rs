use crate::error::Result;
use crate::fourier::Jet;
use crate::surface::MetricJet;
use crate::system::{MagneticSystem, ScalarJet};

use super::UnitTangent;

/// Chart coefficients `a_i` of a vector field and their partials
/// `da[i][j] = ∂_j a_i` with respect to `(x1, x2, theta)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FieldCoeffs {
    pub a: [f64; 3],
    pub da: [[f64; 3]; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    X,
    H,
    V,
    XLambda,
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::X => "X",
            FieldKind::H => "H",
            FieldKind::V => "V",
            FieldKind::XLambda => "X_lambda",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameCoefficients {
    pub x: FieldCoeffs,
    pub h: FieldCoeffs,
    pub v: FieldCoeffs,
    pub xl: FieldCoeffs,
    pub metric: MetricJet,
    pub lambda: ScalarJet,
    /// `H lambda = <grad lambda, iv>`.
    pub h_lambda: f64,
    pub theta: f64,
}

impl FrameCoefficients {
    pub fn field(&self, kind: FieldKind) -> &FieldCoeffs {
        match kind {
            FieldKind::X => &self.x,
            FieldKind::H => &self.h,
            FieldKind::V => &self.v,
            FieldKind::XLambda => &self.xl,
        }
    }

    pub fn field_mut(&mut self, kind: FieldKind) -> &mut FieldCoeffs {
        match kind {
            FieldKind::X => &mut self.x,
            FieldKind::H => &mut self.h,
            FieldKind::V => &mut self.v,
            FieldKind::XLambda => &mut self.xl,
        }
    }

    /// Effective curvature `K - H lambda + lambda^2`.
    pub fn effective_curvature(&self) -> f64 {
        self.metric.curvature - self.h_lambda + self.lambda.value * self.lambda.value
    }
}

/// Chart expressions of `X`, `H`, `V` and `X_lambda = X + lambda V`.
///
/// With `E = e^{-u}`, `c = cos theta`, `s = sin theta`:
/// `X = (E c, E s, E(-u_1 s + u_2 c))`, `H = (-E s, E c, -E(u_1 c + u_2 s))`,
/// `V = (0, 0, 1)`.
pub fn frame_at(sys: &MagneticSystem, z: &UnitTangent) -> Result<FrameCoefficients> {
    let m = sys.metric(z.p)?;
    let lam = sys.eval_lambda_jet(z.p)?;
    let (s, c) = z.theta.sin_cos();
    let e = m.inv_conformal;
    let u1 = m.u.grad[0];
    let u2 = m.u.grad[1];
    let uh = m.u.hess;

    let mut x = FieldCoeffs::default();
    x.a = [e * c, e * s, e * (-u1 * s + u2 * c)];
    for j in 0..2 {
        let uj = m.u.grad[j];
        x.da[0][j] = -uj * x.a[0];
        x.da[1][j] = -uj * x.a[1];
        x.da[2][j] = -uj * x.a[2] + e * (-uh[0][j] * s + uh[1][j] * c);
    }
    x.da[0][2] = -e * s;
    x.da[1][2] = e * c;
    x.da[2][2] = e * (-u1 * c - u2 * s);

    let mut h = FieldCoeffs::default();
    h.a = [-e * s, e * c, -e * (u1 * c + u2 * s)];
    for j in 0..2 {
        let uj = m.u.grad[j];
        h.da[0][j] = -uj * h.a[0];
        h.da[1][j] = -uj * h.a[1];
        h.da[2][j] = -uj * h.a[2] - e * (uh[0][j] * c + uh[1][j] * s);
    }
    h.da[0][2] = -e * c;
    h.da[1][2] = -e * s;
    h.da[2][2] = -e * (-u1 * s + u2 * c);

    let v = FieldCoeffs {
        a: [0.0, 0.0, 1.0],
        da: [[0.0; 3]; 3],
    };

    let mut xl = x;
    xl.a[2] += lam.value;
    xl.da[2][0] += lam.grad[0];
    xl.da[2][1] += lam.grad[1];

    let h_lambda = h.a[0] * lam.grad[0] + h.a[1] * lam.grad[1];
    Ok(FrameCoefficients {
        x,
        h,
        v,
        xl,
        metric: m,
        lambda: lam,
        h_lambda,
        theta: z.theta,
    })
}

/// Rows: the dual forms `alpha`, `beta`, `psi`; columns: `X`, `H`, `V`.
/// Should be the identity matrix.
pub fn dual_pairings(frame: &FrameCoefficients) -> [[f64; 3]; 3] {
    let (s, c) = frame.theta.sin_cos();
    let eu = 1.0 / frame.metric.inv_conformal;
    let u = frame.metric.u.grad;
    let alpha = [eu * c, eu * s, 0.0];
    let beta = [-eu * s, eu * c, 0.0];
    let psi = [-u[1], u[0], 1.0];
    let fields = [frame.x.a, frame.h.a, frame.v.a];
    let dot = |f: &[f64; 3], a: &[f64; 3]| f[0] * a[0] + f[1] * a[1] + f[2] * a[2];
    [alpha, beta, psi].map(|form| fields.map(|f| dot(&form, &f)))
}

/// Value and chart gradient of a derived function such as `X f`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FieldJet {
    pub value: f64,
    pub grad: [f64; 3],
}

pub fn apply_field(frame: &FrameCoefficients, kind: FieldKind, f: &Jet<3>) -> f64 {
    let a = &frame.field(kind).a;
    a[0] * f.grad[0] + a[1] * f.grad[1] + a[2] * f.grad[2]
}

/// `Z f` together with its gradient: `∂_j (a . ∇f) = Σ_i ∂_j a_i ∂_i f + a_i ∂_ij f`.
pub fn apply_field_jet(frame: &FrameCoefficients, kind: FieldKind, f: &Jet<3>) -> FieldJet {
    let fc = frame.field(kind);
    let mut out = FieldJet {
        value: apply_field(frame, kind, f),
        grad: [0.0; 3],
    };
    for j in 0..3 {
        let mut g = 0.0;
        for i in 0..3 {
            g += fc.da[i][j] * f.grad[i] + fc.a[i] * f.hess[i][j];
        }
        out.grad[j] = g;
    }
    out
}

/// `outer(inner f)`.
pub fn compose_fields(frame: &FrameCoefficients, outer: FieldKind, inner: FieldKind, f: &Jet<3>) -> f64 {
    let g = apply_field_jet(frame, inner, f);
    let a = &frame.field(outer).a;
    a[0] * g.grad[0] + a[1] * g.grad[1] + a[2] * g.grad[2]
}

fn bracket(frame: &FrameCoefficients, a: FieldKind, b: FieldKind, f: &Jet<3>) -> f64 {
    compose_fields(frame, a, b, f) - compose_fields(frame, b, a, f)
}

/// Source of frames; the system itself, or a deliberately corrupted fixture.
pub trait FrameProvider: Sync {
    fn frame(&self, z: &UnitTangent) -> Result<FrameCoefficients>;
    fn system(&self) -> &MagneticSystem;
}

impl FrameProvider for MagneticSystem {
    fn frame(&self, z: &UnitTangent) -> Result<FrameCoefficients> {
        frame_at(self, z)
    }

    fn system(&self) -> &MagneticSystem {
        self
    }
}

/// Negative-control fixture: scales one chart coefficient of one field.
pub struct CorruptedFrame<'a> {
    pub sys: &'a MagneticSystem,
    pub field: FieldKind,
    pub component: usize,
    pub factor: f64,
}

impl FrameProvider for CorruptedFrame<'_> {
    fn frame(&self, z: &UnitTangent) -> Result<FrameCoefficients> {
        let mut f = frame_at(self.sys, z)?;
        let fc = f.field_mut(self.field);
        fc.a[self.component] *= self.factor;
        for j in 0..3 {
            fc.da[self.component][j] *= self.factor;
        }
        if self.field == FieldKind::X {
            // keep X_lambda = X + lambda V consistent with the corrupted X
            f.xl.a[self.component] = f.x.a[self.component]
                + if self.component == 2 { f.lambda.value } else { 0.0 };
            for j in 0..3 {
                let extra = if self.component == 2 && j < 2 { f.lambda.grad[j] } else { 0.0 };
                f.xl.da[self.component][j] = f.x.da[self.component][j] + extra;
            }
        }
        Ok(f)
    }

    fn system(&self) -> &MagneticSystem {
        self.sys
    }
}

/// Residuals of three commutation relations, in the order they are listed by
/// the producing function, plus the magnitude of the largest term involved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorResiduals {
    pub residuals: [f64; 3],
    pub scale: f64,
}

impl CommutatorResiduals {
    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Residuals relative to `max(1, scale)`.
    pub fn relative(&self) -> [f64; 3] {
        let s = self.scale.max(1.0);
        self.residuals.map(|r| r.abs() / s)
    }
}

/// `[V,X] = H`, `[V,H] = -X`, `[X,H] = K V`.
pub fn riemannian_commutators_check(frame: &FrameCoefficients, f: &Jet<3>) -> CommutatorResiduals {
    use FieldKind::*;
    let vx = bracket(frame, V, X, f);
    let vh = bracket(frame, V, H, f);
    let xh = bracket(frame, X, H, f);
    let hf = apply_field(frame, H, f);
    let xf = apply_field(frame, X, f);
    let kvf = frame.metric.curvature * apply_field(frame, V, f);
    let scale = [vx, vh, xh, hf, xf, kvf].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    CommutatorResiduals {
        residuals: [vx - hf, vh + xf, xh - kvf],
        scale,
    }
}

/// `[V,X_l] = H`, `[V,H] = -X_l + lambda V`, `[X_l,H] = -lambda X_l + (K - H lambda + lambda^2) V`.
pub fn magnetic_commutators_check(frame: &FrameCoefficients, f: &Jet<3>) -> CommutatorResiduals {
    use FieldKind::*;
    let lam = frame.lambda.value;
    let vxl = bracket(frame, V, XLambda, f);
    let vh = bracket(frame, V, H, f);
    let xlh = bracket(frame, XLambda, H, f);
    let hf = apply_field(frame, H, f);
    let xlf = apply_field(frame, XLambda, f);
    let vf = apply_field(frame, V, f);
    let r2 = -xlf + lam * vf;
    let r3 = -lam * xlf + frame.effective_curvature() * vf;
    let scale = [vxl, vh, xlh, hf, r2, r3].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    CommutatorResiduals {
        residuals: [vxl - hf, vh - r2, xlh - r3],
        scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{bundle_scale, torus_scale, Fourier2, Fourier3};
    use crate::smbundle::{BasicFunction, SmFunction, TrigFunction};
    use crate::surface::{ConformalTorusSpec, HyperbolicConstantSpec, SurfaceModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(seed: u64) -> MagneticSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Fourier2::random(&mut rng, [2, 2], 0.15, torus_scale());
        let l = Fourier2::random(&mut rng, [2, 2], 0.5, torus_scale());
        let surface = SurfaceModel::Torus(ConformalTorusSpec::new(u, l, 2).unwrap());
        MagneticSystem::with_c(surface.clone(), 1.0)
            .or_else(|_| MagneticSystem::new(surface))
            .unwrap()
    }

    #[test]
    fn flat_frame_is_euclidean() {
        let sys = MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::flat(0.0))).unwrap();
        let f = frame_at(&sys, &UnitTangent::new(0.2, 0.3, 0.0)).unwrap();
        assert_eq!(f.x.a, [1.0, 0.0, 0.0]);
        assert_eq!(f.h.a, [-0.0, 1.0, -0.0]);
        assert_eq!(f.v.a, [0.0, 0.0, 1.0]);
        let th = 1.234;
        let f = frame_at(&sys, &UnitTangent::new(0.2, 0.3, th)).unwrap();
        assert!((f.x.a[0] - th.cos()).abs() < 1e-15 && (f.x.a[1] - th.sin()).abs() < 1e-15);
        assert_eq!(f.x.a[2], 0.0);
    }

    #[test]
    fn duality_holds() {
        let sys = random_system(1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let z = UnitTangent::new(rng.gen(), rng.gen(), rng.gen_range(0.0..6.3));
            let pairing = dual_pairings(&frame_at(&sys, &z).unwrap());
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((pairing[i][j] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn coefficient_partials_match_differences() {
        let sys = random_system(3);
        let z = UnitTangent::new(0.31, 0.77, 2.1);
        let f0 = frame_at(&sys, &z).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let mut sp = z.state();
            let mut sm = z.state();
            sp[j] += h;
            sm[j] -= h;
            let fp = frame_at(&sys, &UnitTangent::from_state(sp)).unwrap();
            let fm = frame_at(&sys, &UnitTangent::from_state(sm)).unwrap();
            for kind in [FieldKind::X, FieldKind::H, FieldKind::XLambda] {
                for i in 0..3 {
                    let fd = (fp.field(kind).a[i] - fm.field(kind).a[i]) / (2.0 * h);
                    assert!(
                        (fd - f0.field(kind).da[i][j]).abs() < 1e-7,
                        "{kind:?} a{i} d{j}: {fd} vs {}",
                        f0.field(kind).da[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn commutators_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..5 {
            let sys = random_system(100 + k);
            for _ in 0..20 {
                let phi = TrigFunction(Fourier3::random(&mut rng, [2, 2, 2], 1.0, bundle_scale()));
                let z = UnitTangent::new(rng.gen(), rng.gen(), rng.gen_range(0.0..6.3));
                let frame = frame_at(&sys, &z).unwrap();
                let jet = phi.jet(&sys, &z).unwrap();
                let r = riemannian_commutators_check(&frame, &jet);
                assert!(r.relative().iter().all(|v| *v < 1e-9), "{r:?}");
                let m = magnetic_commutators_check(&frame, &jet);
                assert!(m.relative().iter().all(|v| *v < 1e-9), "{m:?}");
            }
        }
    }

    #[test]
    fn commutators_on_disk() {
        let sys = MagneticSystem::new(SurfaceModel::Hyperbolic(HyperbolicConstantSpec::new(0.5).unwrap()))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let phi = crate::smbundle::DiskPolynomial::random(&mut rng, 3, 2, 1.0);
        for _ in 0..50 {
            let r = rng.gen_range(0.0..0.8f64);
            let a = rng.gen_range(0.0..6.3f64);
            let z = UnitTangent::new(r * a.cos(), r * a.sin(), rng.gen_range(0.0..6.3));
            let frame = frame_at(&sys, &z).unwrap();
            let jet = phi.jet(&sys, &z).unwrap();
            assert!(magnetic_commutators_check(&frame, &jet).relative().iter().all(|v| *v < 1e-9));
            assert!((frame.effective_curvature() + 0.75).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_lambda_flat_bracket_reduction() {
        let sys = MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::flat(0.5))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = TrigFunction(Fourier3::random(&mut rng, [2, 2, 2], 1.0, bundle_scale()));
        let z = UnitTangent::new(0.1, 0.6, 0.4);
        let frame = frame_at(&sys, &z).unwrap();
        let jet = phi.jet(&sys, &z).unwrap();
        let lhs = bracket(&frame, FieldKind::XLambda, FieldKind::H, &jet);
        let rhs = -0.5 * apply_field(&frame, FieldKind::XLambda, &jet)
            + 0.25 * apply_field(&frame, FieldKind::V, &jet);
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn basic_function_derivatives() {
        let sys = random_system(11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = Fourier2::random(&mut rng, [2, 2], 1.0, torus_scale());
        let f = BasicFunction(h.clone());
        for _ in 0..100 {
            let z = UnitTangent::new(rng.gen(), rng.gen(), rng.gen_range(0.0..6.3));
            let frame = frame_at(&sys, &z).unwrap();
            let jet = f.jet(&sys, &z).unwrap();
            assert_eq!(apply_field(&frame, FieldKind::V, &jet), 0.0);
            // chain rule oracle: X_lambda (h o pi) = dh(v), v = e^{-u}(cos, sin)
            let dh = h.jet(z.p.as_array()).grad;
            let e = frame.metric.inv_conformal;
            let expect = e * (dh[0] * z.theta.cos() + dh[1] * z.theta.sin());
            assert!((apply_field(&frame, FieldKind::XLambda, &jet) - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn corrupted_frame_breaks_commutator() {
        let sys = random_system(13);
        let bad = CorruptedFrame {
            sys: &sys,
            field: FieldKind::H,
            component: 2,
            factor: 1.1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let phi = TrigFunction(Fourier3::random(&mut rng, [2, 2, 2], 1.0, bundle_scale()));
        let z = UnitTangent::new(0.3, 0.4, 0.5);
        let frame = bad.frame(&z).unwrap();
        let jet = phi.jet(&sys, &z).unwrap();
        assert!(riemannian_commutators_check(&frame, &jet).max_abs() > 1e-4);
    }
}
