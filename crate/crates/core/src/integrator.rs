//! Dormand–Prince 5(4) with the fourth-order continuous extension.
//!
//! Tableau and dense-output coefficients follow Hairer, Nørsett & Wanner
//! (DOPRI5). Integration runs forward or backward in time.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn uniform(tol: f64) -> Self {
        Self { rtol: tol, atol: tol }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub tol: Tolerance,
    pub h_max: f64,
    pub max_steps: usize,
    pub h_min: f64,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol: Tolerance::uniform(tol),
            h_max: 0.1,
            max_steps: 5_000_000,
            h_min: 1e-14,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest accepted normalized local error estimate.
    pub max_error: f64,
}

/// One accepted step's interpolation data.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        std::array::from_fn(|i| c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i]))))
    }

    pub fn coefficients(&self) -> &[[f64; N]; 5] {
        &self.cont
    }

    pub fn from_parts(t0: f64, h: f64, cont: [[f64; N]; 5]) -> Self {
        Self { t0, h, cont }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub segments: Vec<DenseSegment<N>>,
    pub stats: Stats,
}

impl<const N: usize> Solution<N> {
    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("nonempty")
    }

    pub fn final_state(&self) -> [f64; N] {
        *self.y.last().expect("nonempty")
    }

    /// Dense output at any time in the integrated span.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.segments.is_empty() {
            return self.y[0];
        }
        let forward = self.segments[0].h > 0.0;
        // segments are ordered in integration direction
        let idx = self.segments.partition_point(|s| {
            if forward {
                s.t1() < t
            } else {
                s.t1() > t
            }
        });
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        seg.eval(t)
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

/// Integrate `y' = f(t, y)` from `t0` to `t1`.
pub fn integrate<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t1: f64, opts: &Options) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut sol = Solution {
        t: vec![t0],
        y: vec![y0],
        segments: Vec::new(),
        stats: Stats::default(),
    };
    if t1 == t0 {
        return Ok(sol);
    }
    let dir = (t1 - t0).signum();
    let tol = opts.tol;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    sol.stats.evaluations += 1;

    let scale = |a: &[f64; N], b: &[f64; N], i: usize| tol.atol + tol.rtol * a[i].abs().max(b[i].abs());
    // initial step guess
    let d0 = (y.iter().enumerate().map(|(i, v)| (v / scale(&y, &y, i)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d1 = (k1.iter().enumerate().map(|(i, v)| (v / scale(&y, &y, i)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min((t1 - t0).abs());
    // second-derivative estimate from one explicit Euler step
    let y_euler = axpy(&y, h0 * dir, &[(1.0, &k1)]);
    let f1 = f(t + h0 * dir, &y_euler)?;
    sol.stats.evaluations += 1;
    let d2 = (f1
        .iter()
        .zip(&k1)
        .enumerate()
        .map(|(i, (a, b))| ((a - b) / scale(&y, &y, i)).powi(2))
        .sum::<f64>()
        / N as f64)
        .sqrt()
        / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    // floor guards against states with tiny nonzero components, whose
    // scaled norm makes the heuristic collapse; error control shrinks it if needed
    let mut h = (100.0 * h0).min(h1).max(1e-6).min(opts.h_max).min((t1 - t0).abs()) * dir;

    let mut fac_old: f64 = 1e-4;
    let mut last = false;
    loop {
        if sol.stats.accepted + sol.stats.rejected > opts.max_steps {
            return Err(Error::Stiffness { t, h });
        }
        // absorb remainders too small to step over
        if (t + h * (1.0 + 1e-8) - t1) * dir >= 0.0 {
            h = t1 - t;
            last = true;
        }
        if h.abs() < opts.h_min * t.abs().max(1.0) {
            return Err(Error::Stiffness { t, h });
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y_new)?;
        sol.stats.evaluations += 6;
        let err_vec = axpy(
            &[0.0; N],
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let err = (err_vec
            .iter()
            .enumerate()
            .map(|(i, e)| (e / scale(&y, &y_new, i)).powi(2))
            .sum::<f64>()
            / N as f64)
            .sqrt();
        if !err.is_finite() {
            h *= 0.2;
            last = false;
            sol.stats.rejected += 1;
            continue;
        }
        // PI step-size control
        let fac11 = err.powf(0.2 - 0.04 * 0.75);
        let mut fac = fac11 / fac_old.powf(0.04);
        fac = (fac / 0.9).clamp(1.0 / 10.0, 1.0 / 0.2);
        let h_new = h / fac;
        if err <= 1.0 {
            fac_old = err.max(1e-4);
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let cont = [
                y,
                ydiff,
                bspl,
                std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                }),
            ];
            sol.segments.push(DenseSegment { t0: t, h, cont });
            t += h;
            if last {
                t = t1;
            }
            y = y_new;
            k1 = k7;
            sol.t.push(t);
            sol.y.push(y);
            sol.stats.accepted += 1;
            sol.stats.max_error = sol.stats.max_error.max(err);
            if last {
                return Ok(sol);
            }
            h = h_new.abs().min(opts.h_max) * dir;
        } else {
            h /= (fac11 / 0.9).min(1.0 / 0.2);
            last = false;
            sol.stats.rejected += 1;
        }
    }
}
