//! Adaptive Dormand-Prince 5(4) integration on fixed-size state vectors, with
//! an optional per-step projection, a step observer and dense evaluation from
//! stored checkpoints.

use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// One Dormand-Prince step. Returns the fifth-order solution, the embedded
/// error estimate and the derivative at the new point.
#[inline]
fn dopri_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    let k2 = f(t + C2 * h, &comb(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &comb(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &comb(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &comb(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &comb(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y_new = comb(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y_new);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y_new, err, k7)
}

/// A single fifth-order step of size `h` from `(t, y)` with no error control.
pub fn single_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    if h == 0.0 {
        return *y;
    }
    let k1 = f(t, y);
    dopri_step(f, t, y, &k1, h).0
}

/// Maps a state back onto a constraint set after each step.
pub type Projection<'a, const N: usize> = &'a dyn Fn(&mut [f64; N]);

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `project` is applied to every accepted state; `observe` sees every accepted
/// `(t, y)` including the initial one.
pub fn integrate<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
    project: Option<Projection<N>>,
    observe: &mut dyn FnMut(f64, &[f64; N]),
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    let mut t = t0;
    let mut y = y0;
    observe(t, &y);
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y);
    }
    let dir = span.signum();
    let mut k1 = f(t, &y);
    let mut h = initial_step(&y, &k1, opts, span.abs()).min(opts.h_max);
    let mut steps = 0usize;
    let mut last_ratio = 1e-4f64;
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let h_min = 1e-14 * t.abs().max(span.abs()).max(1.0);
        if step < h_min && !last {
            return Err(Error::IntegratorFailure(format!("step size underflow at t = {t:.12}")));
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::IntegratorFailure(format!("step budget exhausted at t = {t:.12}")));
        }
        let (mut y_new, err, mut k_new) = dopri_step(f, t, &y, &k1, dir * step);
        let mut ratio = 0.0;
        for i in 0..N {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let e = err[i] / sc;
            ratio += e * e;
        }
        ratio = (ratio / N as f64).sqrt();
        if !ratio.is_finite() {
            h = step * 0.2;
            continue;
        }
        if ratio <= 1.0 {
            let t_new = if last { t1 } else { t + dir * step };
            if let Some(p) = project {
                p(&mut y_new);
                k_new = f(t_new, &y_new);
            }
            t = t_new;
            y = y_new;
            k1 = k_new;
            observe(t, &y);
            // PI controller
            let fac = 0.9 * ratio.max(1e-10).powf(-0.7 / 5.0) * last_ratio.powf(0.4 / 5.0);
            last_ratio = ratio.max(1e-4);
            h = (step * fac.clamp(0.2, 10.0)).min(opts.h_max);
            if last {
                break;
            }
        } else {
            let fac = (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
            h = step * fac;
        }
    }
    Ok(y)
}

fn initial_step<const N: usize>(y: &[f64; N], k1: &[f64; N], opts: &OdeOptions, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (k1[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0.min(span).max(1e-12 * span)
}

type Rhs<const N: usize> = Arc<dyn Fn(f64, &[f64; N]) -> [f64; N] + Send + Sync>;

/// A solved trajectory: checkpoints at every accepted step. Evaluation at an
/// arbitrary time takes one fifth-order step from the nearest checkpoint.
#[derive(Clone)]
pub struct Trajectory<const N: usize> {
    rhs: Rhs<N>,
    times: Vec<f64>,
    states: Vec<[f64; N]>,
}

impl<const N: usize> std::fmt::Debug for Trajectory<N> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory").field("checkpoints", &self.times.len()).finish()
    }
}

impl<const N: usize> Trajectory<N> {
    /// Solves on `[t0, t1]` (`t1 > t0`).
    pub fn solve(rhs: Rhs<N>, t0: f64, y0: [f64; N], t1: f64, opts: &OdeOptions) -> Result<Self> {
        let mut times = Vec::new();
        let mut states = Vec::new();
        integrate(rhs.as_ref(), t0, y0, t1, opts, None, &mut |t, y| {
            times.push(t);
            states.push(*y);
        })?;
        Ok(Trajectory { rhs, times, states })
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn end_state(&self) -> [f64; N] {
        *self.states.last().unwrap()
    }

    pub fn checkpoints(&self) -> impl Iterator<Item = (f64, &[f64; N])> {
        self.times.iter().copied().zip(self.states.iter())
    }

    /// State at `t`, clamped to the solved interval.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let t = t.clamp(self.t_start(), self.t_end());
        let idx = self.times.partition_point(|&s| s <= t);
        let i = idx.saturating_sub(1);
        let mut j = i;
        if i + 1 < self.times.len() && (self.times[i + 1] - t) < (t - self.times[i]) {
            j = i + 1;
        }
        let h = t - self.times[j];
        if h == 0.0 {
            return self.states[j];
        }
        single_step(self.rhs.as_ref(), self.times[j], &self.states[j], h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator() -> Rhs<2> {
        Arc::new(|_t, y: &[f64; 2]| [-y[1], y[0]])
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let y = integrate(oscillator().as_ref(), 0.0, [1.0, 0.0], 10.0, &OdeOptions::default(), None, &mut |_, _| {}).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] - 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn backward_integration() {
        let y = integrate(oscillator().as_ref(), 0.0, [1.0, 0.0], -3.0, &OdeOptions::default(), None, &mut |_, _| {}).unwrap();
        assert!((y[0] - 3f64.cos()).abs() < 1e-9);
        assert!((y[1] + 3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn dense_evaluation_matches_closed_form() {
        let traj = Trajectory::solve(oscillator(), 0.0, [1.0, 0.0], 7.0, &OdeOptions::default()).unwrap();
        for k in 0..=70 {
            let t = 0.1 * k as f64 + 0.013;
            let y = traj.eval(t);
            let tc = t.min(7.0);
            assert!((y[0] - tc.cos()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn h_max_is_respected() {
        let mut last = 0.0;
        let mut worst: f64 = 0.0;
        integrate(oscillator().as_ref(), 0.0, [1.0, 0.0], 1.0, &OdeOptions::default().with_h_max(0.01), None, &mut |t, _| {
            worst = worst.max(t - last);
            last = t;
        })
        .unwrap();
        assert!(worst <= 0.01 + 1e-15);
    }

    #[test]
    fn projection_is_applied() {
        let proj = |y: &mut [f64; 2]| {
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            y[0] /= r;
            y[1] /= r;
        };
        let y = integrate(oscillator().as_ref(), 0.0, [1.0, 0.0], 50.0, &OdeOptions::default(), Some(&proj), &mut |_, _| {}).unwrap();
        assert!(((y[0] * y[0] + y[1] * y[1]).sqrt() - 1.0).abs() < 1e-15);
    }
}
