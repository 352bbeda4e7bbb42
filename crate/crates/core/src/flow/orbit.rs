use crate::error::{Error, Result};
use std::io::{Read, Write};

use crate::integrator::{integrate, DenseSegment, Options, Solution, Stats};
use crate::smbundle::{frame_at, UnitTangent};
use crate::system::MagneticSystem;

use super::central_derivatives;

/// A magnetic geodesic sampled with dense output in chart coordinates of the
/// universal cover.
#[derive(Clone, Debug)]
pub struct OrbitSolution {
    pub z0: UnitTangent,
    pub tol: f64,
    pub sol: Solution<3>,
}

impl OrbitSolution {
    pub fn t_start(&self) -> f64 {
        self.sol.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn state_at(&self, t: f64) -> UnitTangent {
        UnitTangent::from_state(self.sol.eval(t))
    }

    pub fn final_state(&self) -> UnitTangent {
        UnitTangent::from_state(self.sol.final_state())
    }

    pub fn stats(&self) -> Stats {
        self.sol.stats
    }

    /// CSV with header `t,x1,x2,theta` on a uniform grid of `n + 1` times.
    pub fn write_csv<W: Write>(&self, mut w: W, n: usize) -> Result<()> {
        writeln!(w, "t,x1,x2,theta")?;
        for s in self.uniform_samples(n) {
            writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e}", s[0], s[1], s[2], s[3])?;
        }
        Ok(())
    }

    /// Binary dense output. Little-endian layout: the 8-byte magic
    /// `MFDENSE1`, `u64` segment count, then per segment `t0`, `h` and the 5x3
    /// interpolation coefficients as `f64` (row-major, 17 values). A segment
    /// evaluates at `s = (t - t0)/h` as
    /// `c0 + s (c1 + (1-s)(c2 + s (c3 + (1-s) c4)))`.
    pub fn write_dense<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DENSE_MAGIC)?;
        w.write_all(&(self.sol.segments.len() as u64).to_le_bytes())?;
        for seg in &self.sol.segments {
            w.write_all(&seg.t0.to_le_bytes())?;
            w.write_all(&seg.h.to_le_bytes())?;
            for row in seg.coefficients() {
                for v in row {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// `(t, x1, x2, theta)` on a uniform grid.
    pub fn uniform_samples(&self, n: usize) -> Vec<[f64; 4]> {
        let (a, b) = (self.t_start(), self.t_end());
        (0..=n)
            .map(|i| {
                let t = a + (b - a) * i as f64 / n as f64;
                let s = self.sol.eval(t);
                [t, s[0], s[1], s[2]]
            })
            .collect()
    }
}

const DENSE_MAGIC: &[u8; 8] = b"MFDENSE1";

/// Reads segments written by [`OrbitSolution::write_dense`].
pub fn read_dense<R: Read>(mut r: R) -> Result<Vec<DenseSegment<3>>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DENSE_MAGIC {
        return Err(Error::Parse("not a dense orbit file".into()));
    }
    let mut buf = [0u8; 8];
    let mut next = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut buf)?;
        Ok(f64::from_le_bytes(buf))
    };
    let mut count = [0u8; 8];
    r.read_exact(&mut count)?;
    let n = u64::from_le_bytes(count) as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let t0 = next(&mut r)?;
        let h = next(&mut r)?;
        let mut c = [[0.0; 3]; 5];
        for row in c.iter_mut() {
            for v in row.iter_mut() {
                *v = next(&mut r)?;
            }
        }
        out.push(DenseSegment::from_parts(t0, h, c));
    }
    Ok(out)
}

/// Chart components of `X_lambda`: `(e^{-u} cos, e^{-u} sin, e^{-u}(-u_1 sin + u_2 cos) + lambda)`.
pub fn magnetic_rhs(sys: &MagneticSystem, s: &[f64; 3]) -> Result<[f64; 3]> {
    Ok(frame_at(sys, &UnitTangent::from_state(*s))?.xl.a)
}

pub fn integrate_orbit(sys: &MagneticSystem, z0: UnitTangent, t_span: (f64, f64), tol: f64) -> Result<OrbitSolution> {
    if !(tol > 0.0) {
        return Err(Error::Contract(format!("tolerance must be positive, got {tol}")));
    }
    let opts = Options::with_tol(tol);
    let sol = integrate(|_, s| magnetic_rhs(sys, s), t_span.0, z0.state(), t_span.1, &opts)?;
    Ok(OrbitSolution { z0, tol, sol })
}

/// Geodesic curvature of the projected curve at `t`, measured from chart
/// positions only: `<D gamma'/dt, i gamma'>_g / |gamma'|_g^3` with the conformal
/// Christoffel symbols `Γ^k_ij = δ_ik u_j + δ_jk u_i - δ_ij u_k`.
pub fn geodesic_curvature(sys: &MagneticSystem, orbit: &OrbitSolution, t: f64, h: f64) -> Result<f64> {
    let (d1x, d2x) = central_derivatives(|s| orbit.sol.eval(s)[0], t, h);
    let (d1y, d2y) = central_derivatives(|s| orbit.sol.eval(s)[1], t, h);
    let st = orbit.sol.eval(t);
    let m = sys.metric(crate::surface::SurfacePoint::new(st[0], st[1]))?;
    let v = [d1x, d1y];
    let u = m.u.grad;
    let vu = v[0] * u[0] + v[1] * u[1];
    let vv = v[0] * v[0] + v[1] * v[1];
    // Γ^k_ij v^i v^j = 2 v^k (v.u) - |v|^2 u_k
    let acc = [d2x + 2.0 * v[0] * vu - vv * u[0], d2y + 2.0 * v[1] * vu - vv * u[1]];
    let iv = [-v[1], v[0]];
    let speed = m.area_density.sqrt() * vv.sqrt();
    Ok(m.inner(acc, iv) / speed.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{torus_scale, Fourier2};
    use crate::surface::{ConformalTorusSpec, HyperbolicConstantSpec, SurfaceModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn flat(l: f64) -> MagneticSystem {
        MagneticSystem::new(SurfaceModel::Torus(ConformalTorusSpec::flat(l))).unwrap()
    }

    #[test]
    fn flat_geodesic_is_a_line() {
        let orbit = integrate_orbit(&flat(0.0), UnitTangent::new(0.0, 0.25, 0.0), (0.0, 3.7), 1e-12).unwrap();
        for s in orbit.uniform_samples(50) {
            assert!((s[1] - s[0]).abs() < 1e-10);
            assert!((s[2] - 0.25).abs() < 1e-12);
        }
        // reduced mod 1 on the torus
        let end = orbit.final_state().p.reduced_mod1();
        assert!((end.x1 - 0.7).abs() < 1e-10);
    }

    #[test]
    fn flat_constant_field_gives_circles() {
        let l0 = 0.8;
        let th0 = 0.3;
        let orbit = integrate_orbit(&flat(l0), UnitTangent::new(0.1, 0.2, th0), (0.0, 10.0), 1e-12).unwrap();
        let r = 1.0 / l0;
        // centre lies to the left of the initial velocity
        let cx = 0.1 - r * th0.sin();
        let cy = 0.2 + r * th0.cos();
        for s in orbit.uniform_samples(100) {
            let th = th0 + l0 * s[0];
            assert!((s[3] - th).abs() < 1e-10);
            assert!((s[1] - (cx + r * th.sin())).abs() < 1e-10);
            assert!((s[2] - (cy - r * th.cos())).abs() < 1e-10);
        }
        let period = TAU / l0;
        let back = orbit.state_at(period);
        assert!((back.p.x1 - 0.1).abs() < 1e-10 && (back.p.x2 - 0.2).abs() < 1e-10);
    }

    #[test]
    fn hyperbolic_curvature_equals_lambda() {
        let sys = MagneticSystem::new(SurfaceModel::Hyperbolic(HyperbolicConstantSpec::new(0.5).unwrap())).unwrap();
        let orbit = integrate_orbit(&sys, UnitTangent::new(0.1, -0.2, 1.0), (0.0, 4.0), 1e-13).unwrap();
        for i in 1..20 {
            let t = 0.2 * i as f64;
            let k = geodesic_curvature(&sys, &orbit, t, 1e-3).unwrap();
            assert!((k - 0.5).abs() < 1e-6, "t = {t}: {k}");
        }
    }

    #[test]
    fn unit_speed_and_time_reversal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = Fourier2::random(&mut rng, [2, 2], 0.15, torus_scale());
        let l = Fourier2::random(&mut rng, [2, 2], 0.4, torus_scale());
        let surface = SurfaceModel::Torus(ConformalTorusSpec::new(u, l, 2).unwrap());
        let sys = MagneticSystem::new(surface).unwrap();
        let tol = 1e-11;
        let z0 = UnitTangent::new(0.3, 0.1, 2.0);
        let fwd = integrate_orbit(&sys, z0, (0.0, 8.0), tol).unwrap();
        for s in fwd.uniform_samples(40) {
            let v = magnetic_rhs(&sys, &[s[1], s[2], s[3]]).unwrap();
            let m = sys.metric(crate::surface::SurfacePoint::new(s[1], s[2])).unwrap();
            assert!((m.inner([v[0], v[1]], [v[0], v[1]]).sqrt() - 1.0).abs() < 1e-12);
        }
        // global error grows with the local expansion rate, so the 10 tol
        // bound is checked over times of order one
        for tol in [1e-10, 1e-12] {
            let fwd = integrate_orbit(&sys, z0, (0.0, 2.0), tol).unwrap();
            let back = integrate_orbit(&sys, fwd.final_state(), (2.0, 0.0), tol).unwrap();
            let z = back.final_state();
            let err = [z.p.x1 - z0.p.x1, z.p.x2 - z0.p.x2, z.theta - z0.theta];
            assert!(err.iter().all(|e| e.abs() < 10.0 * tol), "{err:?}");
        }
    }

    #[test]
    fn dense_dump_roundtrip() {
        let orbit = integrate_orbit(&flat(0.4), UnitTangent::new(0.1, 0.2, 0.3), (0.0, 5.0), 1e-10).unwrap();
        let mut bytes = Vec::new();
        orbit.write_dense(&mut bytes).unwrap();
        let segs = read_dense(bytes.as_slice()).unwrap();
        assert_eq!(segs, orbit.sol.segments);
        let mut csv = Vec::new();
        orbit.write_csv(&mut csv, 10).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(read_dense(&b"garbage!"[..]).is_err());
    }

    #[test]
    fn bad_tolerance_rejected() {
        assert!(integrate_orbit(&flat(0.0), UnitTangent::new(0.0, 0.0, 0.0), (0.0, 1.0), 0.0).is_err());
    }
}
