//! Path evaluators: symplectic paths `t -> Psi(t)` in Sp(2) and Lagrangian
//! paths `t -> Lambda(t)` given by frames, both on `[0, T]`.

use std::fmt;
use std::sync::Arc;

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::linalg::{conj, graph_frame_unchecked, rotation, symplectic_defect, symplectic_inverse, LineFrame, Mat2};

type MatFn = Arc<dyn Fn(f64) -> Mat2 + Send + Sync>;

/// A path of 2x2 symplectic matrices on `[0, T]`.
///
/// Evaluation outside `[0, T]` uses the cocycle rule
/// `Psi(t + kT) = Psi(t) Psi(T)^k`.
#[derive(Clone)]
pub struct SymplecticPath {
    t_end: f64,
    f: MatFn,
    symmetric: bool,
}

impl fmt::Debug for SymplecticPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymplecticPath").field("t_end", &self.t_end).field("symmetric", &self.symmetric).finish()
    }
}

impl SymplecticPath {
    pub fn new(t_end: f64, f: impl Fn(f64) -> Mat2 + Send + Sync + 'static) -> Self {
        SymplecticPath { t_end, f: Arc::new(f), symmetric: false }
    }

    /// `Psi(t) = exp(c t J0)` on `[0, t_end]`.
    pub fn rotation(c: f64, t_end: f64) -> Self {
        SymplecticPath::new(t_end, move |t| rotation(c * t)).symmetric(true)
    }

    /// `Psi(t) = diag(e^{a t}, e^{-a t}) exp(w t J0)`.
    pub fn hyperbolic(a: f64, w: f64, t_end: f64) -> Self {
        SymplecticPath::new(t_end, move |t| Mat2::new((a * t).exp(), 0.0, 0.0, (-a * t).exp()) * rotation(w * t))
    }

    /// Piecewise geodesic interpolation of samples `Psi(t_k)` in Sp(2):
    /// `Psi(t) = Psi_k exp(s log(Psi_k^{-1} Psi_{k+1}))`.
    pub fn sampled(times: Vec<f64>, mats: Vec<Mat2>) -> Result<Self> {
        if times.len() != mats.len() || times.len() < 2 {
            return Err(Error::ShapeMismatch(format!("{} times and {} matrices", times.len(), mats.len())));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("sample times must start at 0 and increase".into()));
        }
        let mut logs = Vec::with_capacity(mats.len() - 1);
        for w in mats.windows(2) {
            let step = symplectic_inverse(&w[0]) * w[1];
            let log = crate::linalg::sl2_log(&step)
                .ok_or_else(|| Error::InvalidInput("consecutive samples too far apart to interpolate".into()))?;
            logs.push(log);
        }
        let t_end = *times.last().unwrap();
        Ok(SymplecticPath::new(t_end, move |t| {
            let t = t.clamp(0.0, t_end);
            let k = times.partition_point(|&s| s <= t).saturating_sub(1).min(logs.len() - 1);
            let s = (t - times[k]) / (times[k + 1] - times[k]);
            mats[k] * crate::linalg::sl2_exp(&(logs[k] * s))
        }))
    }

    pub fn symmetric(mut self, flag: bool) -> Self {
        self.symmetric = flag;
        self
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// `Psi(t)` for `t` in `[0, T]`.
    pub fn eval(&self, t: f64) -> Mat2 {
        (self.f)(t)
    }

    /// `Psi(t)` for any real `t` by the cocycle rule.
    pub fn eval_extended(&self, t: f64) -> Mat2 {
        let tt = self.t_end;
        if (0.0..=tt).contains(&t) {
            return self.eval(t);
        }
        let k = (t / tt).floor();
        let r = t - k * tt;
        let mono = self.eval(tt);
        let base = if k >= 0.0 { mono } else { symplectic_inverse(&mono) };
        let mut p = Mat2::identity();
        for _ in 0..(k.abs() as u64) {
            p *= base;
        }
        self.eval(r) * p
    }

    /// Same evaluator on the shorter interval `[0, t_end]`.
    pub fn restrict(&self, t_end: f64) -> Self {
        SymplecticPath { t_end, f: self.f.clone(), symmetric: false }
    }

    /// The `m`-fold iterate on `[0, mT]` built by the cocycle rule.
    pub fn iterate(&self, m: u32) -> Self {
        let base = self.clone();
        let sym = self.symmetric;
        SymplecticPath::new(self.t_end * m as f64, move |t| base.eval_extended(t)).symmetric(sym)
    }

    /// Checks `Psi(0) = 1`, symplecticity at 64 probes and, if flagged, the
    /// reflection symmetry `Psi(-t) = I Psi(t) I`.
    pub fn validate(&self) -> Result<()> {
        let d0 = (self.eval(0.0) - Mat2::identity()).abs().max();
        if d0 > 1e-9 {
            return Err(Error::InvalidInput(format!("Psi(0) differs from identity by {d0:.3e}")));
        }
        for k in 0..64 {
            let t = self.t_end * k as f64 / 63.0;
            let m = self.eval(t);
            let defect = symplectic_defect(&m);
            if defect > 1e-9 * m.norm_squared().max(1.0) {
                return Err(Error::NotSymplectic { defect });
            }
        }
        if self.symmetric {
            let residual = self.symmetry_residual();
            if residual > 1e-8 {
                return Err(Error::SymmetryViolated { residual });
            }
        }
        Ok(())
    }

    /// `max |Psi(-t) - I Psi(t) I|` on a 64-point probe grid in `[0, T]`.
    pub fn symmetry_residual(&self) -> f64 {
        let i = conj();
        (0..64)
            .map(|k| {
                let t = self.t_end * k as f64 / 63.0;
                (self.eval_extended(-t) - i * self.eval(t) * i).abs().max()
            })
            .fold(0.0, f64::max)
    }
}

type FrameFn<const D: usize, const N: usize> = Arc<dyn Fn(f64) -> SMatrix<f64, D, N> + Send + Sync>;

/// A path of Lagrangian frames on `[0, T]`. Frames need not be orthonormal.
#[derive(Clone)]
pub struct LagrangianPath<const D: usize, const N: usize> {
    t_end: f64,
    f: FrameFn<D, N>,
}

pub type LinePath = LagrangianPath<2, 1>;
pub type PlanePath = LagrangianPath<4, 2>;

impl<const D: usize, const N: usize> fmt::Debug for LagrangianPath<D, N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LagrangianPath").field("dim", &D).field("t_end", &self.t_end).finish()
    }
}

impl<const D: usize, const N: usize> LagrangianPath<D, N> {
    pub fn new(t_end: f64, f: impl Fn(f64) -> SMatrix<f64, D, N> + Send + Sync + 'static) -> Self {
        LagrangianPath { t_end, f: Arc::new(f) }
    }

    /// The constant path at `frame`.
    pub fn constant(frame: SMatrix<f64, D, N>, t_end: f64) -> Self {
        LagrangianPath::new(t_end, move |_| frame)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn frame(&self, t: f64) -> SMatrix<f64, D, N> {
        (self.f)(t.clamp(0.0, self.t_end))
    }

    /// `t -> Lambda(T - t)`.
    pub fn reversed(&self) -> Self {
        let f = self.f.clone();
        let tt = self.t_end;
        LagrangianPath::new(tt, move |t| f(tt - t))
    }

    /// `t -> Lambda(T phi(t / T))` for an increasing `phi: [0,1] -> [0,1]`
    /// fixing both ends.
    pub fn reparametrized(&self, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let f = self.f.clone();
        let tt = self.t_end;
        LagrangianPath::new(tt, move |t| f(tt * phi(t / tt).clamp(0.0, 1.0)))
    }

    /// `other # self`: first `self`, then `other`, on `[0, T1 + T2]`.
    pub fn then(&self, other: &Self) -> Self {
        let (f1, f2) = (self.f.clone(), other.f.clone());
        let t1 = self.t_end;
        LagrangianPath::new(t1 + other.t_end, move |t| if t <= t1 { f1(t) } else { f2(t - t1) })
    }

    /// Restriction to `[a, b]`, shifted to start at 0.
    pub fn segment(&self, a: f64, b: f64) -> Self {
        let f = self.f.clone();
        LagrangianPath::new(b - a, move |t| f(a + t))
    }
}

impl LinePath {
    /// `t -> Psi(t) V` on the domain of `psi`.
    pub fn image(psi: &SymplecticPath, v: &LineFrame) -> Self {
        let psi = psi.clone();
        let col = *v.columns();
        LagrangianPath::new(psi.t_end(), move |t| psi.eval(t) * col)
    }

    /// `t -> exp((a + t) J0) V` for `t` in `[0, b - a]`.
    pub fn rotation_line(a: f64, b: f64, v: &LineFrame) -> Self {
        let col = *v.columns();
        LagrangianPath::new(b - a, move |t| rotation(a + t) * col)
    }

    /// `t -> G(t) Lambda(t)` for a matrix-valued `G` on the same interval.
    pub fn transformed(&self, g: impl Fn(f64) -> Mat2 + Send + Sync + 'static) -> Self {
        let f = self.f.clone();
        LagrangianPath::new(self.t_end, move |t| g(t) * f(t))
    }
}

impl PlanePath {
    /// The anti-graph path `t -> {(x, -Psi(t) x)}`.
    pub fn antigraph(psi: &SymplecticPath) -> Self {
        let psi = psi.clone();
        LagrangianPath::new(psi.t_end(), move |t| *graph_frame_unchecked(&psi.eval(t)).columns())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::j0;

    #[test]
    fn rotation_path_is_valid_and_symmetric() {
        let p = SymplecticPath::rotation(2.0, 1.0);
        p.validate().unwrap();
        assert!(p.symmetry_residual() < 1e-14);
    }

    #[test]
    fn cocycle_extension_of_rotation() {
        let p = SymplecticPath::rotation(1.3, 0.7);
        for t in [-2.1, -0.3, 1.9, 3.3] {
            assert!((p.eval_extended(t) - rotation(1.3 * t)).norm() < 1e-12);
        }
        let it = p.iterate(3);
        assert!((it.t_end() - 2.1).abs() < 1e-15);
        assert!((it.eval(2.0) - rotation(2.6)).norm() < 1e-12);
    }

    #[test]
    fn sampled_path_reproduces_one_parameter_group() {
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
        let mats = times.iter().map(|&t| rotation(3.0 * t)).collect();
        let p = SymplecticPath::sampled(times, mats).unwrap();
        assert!((p.eval(0.523) - rotation(1.569)).norm() < 1e-12);
        p.validate().unwrap();
    }

    #[test]
    fn hyperbolic_is_not_symmetric_under_flag() {
        let p = SymplecticPath::hyperbolic(1.0, 0.1, 1.0).symmetric(true);
        assert!(p.validate().is_err());
    }

    #[test]
    fn lagrangian_combinators() {
        let l = LinePath::rotation_line(0.0, 1.0, &LineFrame::real());
        let r = l.reversed();
        assert!((r.frame(0.25) - l.frame(0.75)).norm() < 1e-15);
        let c = l.then(&LinePath::rotation_line(1.0, 2.0, &LineFrame::real()));
        assert!((c.frame(1.5) - rotation(1.5).column(0)).norm() < 1e-15);
        let g = l.transformed(|_| j0());
        assert!((g.frame(0.0) - SMatrix::<f64, 2, 1>::new(0.0, 1.0)).norm() < 1e-15);
    }
}
