use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{Fourier2, Jet};
use crate::parallel::try_par_map_range;
use crate::smbundle::{
    apply_field, apply_field_jet, compose_fields, FieldKind, FrameCoefficients, FrameProvider, LiouvilleQuadrature,
    OneFormFunction, SmFunction, UnitTangent,
};
use crate::system::{MagneticSystem, OneForm};

use FieldKind::{XLambda as XL, H, V};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PestovResidual {
    /// Left side minus right side.
    pub residual: f64,
    /// Largest absolute term in the identity.
    pub scale: f64,
}

impl PestovResidual {
    pub fn relative(&self) -> f64 {
        relative(self.residual, self.scale)
    }
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff.abs() / scale
    } else {
        diff.abs()
    }
}

fn pestov_from_frame(f: &FrameCoefficients, phi: &Jet<3>) -> PestovResidual {
    let xl = apply_field(f, XL, phi);
    let h = apply_field(f, H, phi);
    let v = apply_field(f, V, phi);
    let k = f.effective_curvature();
    let v_xl = compose_fields(f, V, XL, phi);
    let terms = [
        xl * xl,
        h * h,
        -k * v * v,
        // X_lambda(H phi . V phi)
        h * compose_fields(f, XL, V, phi),
        v * compose_fields(f, XL, H, phi),
        // -H(X_lambda phi . V phi)
        -xl * compose_fields(f, H, V, phi),
        -v * compose_fields(f, H, XL, phi),
        // V(X_lambda phi . H phi)
        xl * compose_fields(f, V, H, phi),
        h * v_xl,
    ];
    let lhs = 2.0 * h * v_xl;
    let rhs: f64 = terms.iter().sum();
    let scale = terms.iter().fold(lhs.abs(), |m, t| m.max(t.abs()));
    PestovResidual {
        residual: lhs - rhs,
        scale,
    }
}

/// Both sides of the magnetic Pestov identity
/// `2 H phi . V X_l phi = (X_l phi)^2 + (H phi)^2 - K_eff (V phi)^2
///   + X_l(H phi . V phi) - H(X_l phi . V phi) + V(X_l phi . H phi)`,
/// with every second derivative taken from exact jets.
pub fn pestov_pointwise(frames: &dyn FrameProvider, phi: &dyn SmFunction, z: &UnitTangent) -> Result<PestovResidual> {
    let f = frames.frame(z)?;
    let jet = phi.jet(frames.system(), z)?;
    Ok(pestov_from_frame(&f, &jet))
}

/// Integrated forms of the identity chain over `SM`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PestovReport {
    /// `2 int H phi V X_l phi = int (X_l phi)^2 + int (H phi)^2 - int K_eff (V phi)^2`.
    pub integrated_pestov: f64,
    /// `int (X_l V phi)^2 = int (V X_l phi)^2 + int (H phi)^2 - 2 int V X_l phi H phi`.
    pub expansion: f64,
    /// `int {(X_l V phi)^2 - K_eff (V phi)^2} = int (V X_l phi)^2 - int (X_l phi)^2`.
    pub final_identity: f64,
    /// `|int X_l phi|`, `|int H phi|`, `|int V phi|`.
    pub divergence: [f64; 3],
    /// Pointwise relative residuals over the quadrature nodes.
    pub pointwise_max: f64,
    pub pointwise_rms: f64,
    /// The two sides of the final identity.
    pub final_lhs: f64,
    pub final_rhs: f64,
}

/// Degree of the identity integrands for a test function of degree `d`, on a
/// system whose data have degree `m`.
fn integrand_degree(d: [usize; 3], m: usize) -> [usize; 3] {
    [2 * d[0] + 2 * m, 2 * d[1] + 2 * m, 2 * d[2] + 2]
}

/// Quadrature resolving the identity integrands of `phi`.
pub fn identity_quadrature(sys: &MagneticSystem, phi: &dyn SmFunction, min_spatial: usize) -> Result<LiouvilleQuadrature> {
    let m = match &sys.surface {
        crate::surface::SurfaceModel::Torus(t) => t.max_degree,
        _ => 0,
    };
    LiouvilleQuadrature::for_degree(sys, integrand_degree(phi.degree(), m), min_spatial)
}

pub fn integrated_identities(sys: &MagneticSystem, phi: &dyn SmFunction, q: &LiouvilleQuadrature) -> Result<PestovReport> {
    let m = match &sys.surface {
        crate::surface::SurfaceModel::Torus(t) => t.max_degree,
        _ => 0,
    };
    q.check_bandwidth(integrand_degree(phi.degree(), m))?;
    let [hv, xx, hh, kv, xv2, vx2, dx, dh, dv] = q.integrate_many::<9, _>(|z| {
        let f = crate::smbundle::frame_at(sys, z)?;
        let jet = phi.jet(sys, z)?;
        let xl = apply_field(&f, XL, &jet);
        let h = apply_field(&f, H, &jet);
        let v = apply_field(&f, V, &jet);
        let v_xl = compose_fields(&f, V, XL, &jet);
        let xl_v = compose_fields(&f, XL, V, &jet);
        let k = f.effective_curvature();
        Ok([h * v_xl, xl * xl, h * h, k * v * v, xl_v * xl_v, v_xl * v_xl, xl, h, v])
    })?;
    let [n1, n2, nt] = q.nodes;
    let pointwise = try_par_map_range(n1 * n2 * nt, |idx| {
        let z = q.node(idx / (n2 * nt), (idx / nt) % n2, idx % nt);
        Ok::<f64, Error>(pestov_pointwise(sys, phi, &z)?.relative())
    })?;
    let pointwise_max = pointwise.iter().fold(0.0_f64, |m, r| m.max(*r));
    let pointwise_rms = (pointwise.iter().map(|r| r * r).sum::<f64>() / pointwise.len() as f64).sqrt();

    let scale7 = [2.0 * hv, xx, hh, kv].iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let scale8 = [xv2, vx2, hh, 2.0 * hv].iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let final_lhs = xv2 - kv;
    let final_rhs = vx2 - xx;
    let scale9 = [xv2, kv, vx2, xx].iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    Ok(PestovReport {
        integrated_pestov: relative(2.0 * hv - (xx + hh - kv), scale7),
        expansion: relative(xv2 - (vx2 + hh - 2.0 * hv), scale8),
        final_identity: relative(final_lhs - final_rhs, scale9),
        divergence: [dx.abs(), dh.abs(), dv.abs()],
        pointwise_max,
        pointwise_rms,
        final_lhs,
        final_rhs,
    })
}

/// The step from the final identity to the inequality used for rigidity:
/// when `X_l phi = G + omega(v)`, the right side of the final identity equals
/// `-int G^2 dmu`, by the symmetries of the Liouville measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismReport {
    /// `int omega(v) dmu`.
    pub omega_mean: f64,
    pub omega_sq: f64,
    pub omega_i_sq: f64,
    /// `|int omega(v)^2 - int omega(iv)^2|`.
    pub symmetry_gap: f64,
    /// `int G^2 dmu`; the right side of the final identity should equal its negative.
    pub g_sq: f64,
    /// Sup over nodes of `|X_l phi - G - omega(v)|` and `|V X_l phi - omega(iv)|`,
    /// when a potential `phi` was supplied.
    pub cohomological_residual: Option<f64>,
    /// `int (V X_l phi)^2 - int (X_l phi)^2`.
    pub rhs: Option<f64>,
    /// `|rhs + int G^2|`, relative to the largest integral involved.
    pub mechanism_residual: Option<f64>,
}

pub fn theorem_b_mechanism(
    sys: &MagneticSystem,
    g: &Fourier2,
    omega: &OneForm,
    phi: Option<&dyn SmFunction>,
    q: &LiouvilleQuadrature,
) -> Result<MechanismReport> {
    let w = OneFormFunction {
        form: omega.clone(),
        rotated: false,
    };
    let wi = OneFormFunction {
        form: omega.clone(),
        rotated: true,
    };
    let [mean, sq, isq, gsq, vx2, xx] = q.integrate_many::<6, _>(|z| {
        let a = w.jet(sys, z)?.value;
        let b = wi.jet(sys, z)?.value;
        let gv = g.value(z.p.as_array());
        let (v_xl, xl) = match phi {
            Some(phi) => {
                let f = crate::smbundle::frame_at(sys, z)?;
                let jet = phi.jet(sys, z)?;
                (compose_fields(&f, V, XL, &jet), apply_field(&f, XL, &jet))
            }
            None => (0.0, 0.0),
        };
        Ok([a, a * a, b * b, gv * gv, v_xl * v_xl, xl * xl])
    })?;
    let mut report = MechanismReport {
        omega_mean: mean,
        omega_sq: sq,
        omega_i_sq: isq,
        symmetry_gap: (sq - isq).abs(),
        g_sq: gsq,
        cohomological_residual: None,
        rhs: None,
        mechanism_residual: None,
    };
    if let Some(phi) = phi {
        let [n1, n2, nt] = q.nodes;
        let res = try_par_map_range(n1 * n2 * nt, |idx| {
            let z = q.node(idx / (n2 * nt), (idx / nt) % n2, idx % nt);
            let f = crate::smbundle::frame_at(sys, &z)?;
            let jet = phi.jet(sys, &z)?;
            let xl = apply_field_jet(&f, XL, &jet);
            let v_xl = compose_fields(&f, V, XL, &jet);
            let gv = g.value(z.p.as_array());
            let a = w.jet(sys, &z)?.value;
            let b = wi.jet(sys, &z)?.value;
            Ok::<f64, Error>((xl.value - gv - a).abs().max((v_xl - b).abs()))
        })?;
        let rhs = vx2 - xx;
        let scale = vx2.abs().max(xx.abs()).max(gsq);
        report.cohomological_residual = Some(res.iter().fold(0.0_f64, |m, r| m.max(*r)));
        report.rhs = Some(rhs);
        report.mechanism_residual = Some(relative(rhs + gsq, scale));
    }
    Ok(report)
}

