use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::parallel::{ordered_sum, try_par_map_range};
use crate::surface::SurfacePoint;
use crate::system::MagneticSystem;

use super::UnitTangent;

/// Tensor-product trapezoid rule on `[0,1)^2 x [0, 2π)` with weights carrying
/// the Liouville density `e^{2u}`. Sums run over `x1` slices in parallel and are
/// combined in slice order.
#[derive(Clone, Debug)]
pub struct LiouvilleQuadrature {
    pub nodes: [usize; 3],
    /// Per spatial node `(i, j)`: the density `e^{2u}` times the cell measure.
    weights: Vec<f64>,
}

impl LiouvilleQuadrature {
    pub fn new(sys: &MagneticSystem, nodes: [usize; 3]) -> Result<Self> {
        if !sys.surface.is_torus() {
            return Err(Error::Unsupported(
                "global SM quadrature is only available on the torus backend".into(),
            ));
        }
        if nodes.contains(&0) {
            return Err(Error::Bandwidth {
                nodes: 0,
                required: 1,
            });
        }
        let [n1, n2, nt] = nodes;
        let cell = TAU / (n1 * n2 * nt) as f64;
        let mut weights = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                let p = SurfacePoint::new(i as f64 / n1 as f64, j as f64 / n2 as f64);
                weights.push(sys.metric(p)?.area_density * cell);
            }
        }
        Ok(Self { nodes, weights })
    }

    /// Node counts `2 * degree + 1` per axis, raised to at least `min_spatial`
    /// on the spatial axes (the conformal density is not a polynomial).
    pub fn for_degree(sys: &MagneticSystem, degree: [usize; 3], min_spatial: usize) -> Result<Self> {
        let n = [
            (2 * degree[0] + 1).max(min_spatial),
            (2 * degree[1] + 1).max(min_spatial),
            2 * degree[2] + 1,
        ];
        Self::new(sys, n)
    }

    /// Errors when an integrand of the given degree is not resolved exactly.
    pub fn check_bandwidth(&self, degree: [usize; 3]) -> Result<()> {
        for a in 0..3 {
            let required = 2 * degree[a] + 1;
            if self.nodes[a] < required {
                return Err(Error::Bandwidth {
                    nodes: self.nodes[a],
                    required,
                });
            }
        }
        Ok(())
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> UnitTangent {
        let [n1, n2, nt] = self.nodes;
        UnitTangent::new(
            i as f64 / n1 as f64,
            j as f64 / n2 as f64,
            TAU * k as f64 / nt as f64,
        )
    }

    pub fn total_mass(&self) -> f64 {
        ordered_sum(&self.weights) * self.nodes[2] as f64
    }

    pub fn len(&self) -> usize {
        self.weights.len() * self.nodes[2]
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `∫_SM f dμ`.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&UnitTangent) -> Result<f64> + Sync + Send,
    {
        Ok(self.integrate_many::<1, _>(|z| Ok([f(z)?]))?[0])
    }

    /// Bandwidth-checked variant of [`integrate`](Self::integrate).
    pub fn integrate_with_degree<F>(&self, degree: [usize; 3], f: F) -> Result<f64>
    where
        F: Fn(&UnitTangent) -> Result<f64> + Sync + Send,
    {
        self.check_bandwidth(degree)?;
        self.integrate(f)
    }

    /// Integrate `N` integrands sharing one evaluation per node.
    pub fn integrate_many<const N: usize, F>(&self, f: F) -> Result<[f64; N]>
    where
        F: Fn(&UnitTangent) -> Result<[f64; N]> + Sync + Send,
    {
        let [n1, n2, nt] = self.nodes;
        let slices = try_par_map_range(n1, |i| {
            let mut acc = [0.0; N];
            for j in 0..n2 {
                let w = self.weights[i * n2 + j];
                for k in 0..nt {
                    let vals = f(&self.node(i, j, k))?;
                    for (a, v) in acc.iter_mut().zip(vals) {
                        *a += w * v;
                    }
                }
            }
            Ok::<_, Error>(acc)
        })?;
        let mut out = [0.0; N];
        for s in &slices {
            for (o, v) in out.iter_mut().zip(s) {
                *o += v;
            }
        }
        Ok(out)
    }
}
