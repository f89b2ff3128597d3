//! Eigenvalues and winding numbers of `A = -J0 d/dt - S(t)` on loops (periodic
//! problem) and on half-period paths with both ends on `R` or on `iR`
//! (boundary problems), found by shooting with the fundamental solution of
//! `gamma' = J0 (S + lambda) gamma`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{conj, lagrangian_intersection_dim, HalfInt, LineFrame, Mat2, Vec2, RANK_TOL};
use crate::maslov::{cz_index, rs_imaginary, rs_real, PropertyTally};
use crate::ode::{integrate, OdeOptions, Trajectory};
use crate::par::par_map;
use crate::paths::SymplecticPath;

/// Cubic Hermite table of symmetric matrices on a uniform periodic grid.
#[derive(Clone, Debug)]
pub struct Table {
    period: f64,
    values: Vec<Mat2>,
    slopes: Vec<Mat2>,
}

impl Table {
    /// `values[k]` is the sample at `k * period / values.len()`; slopes come
    /// from periodic central differences unless given.
    pub fn periodic(period: f64, values: Vec<Mat2>, slopes: Option<Vec<Mat2>>) -> Result<Self> {
        let n = values.len();
        if n < 4 {
            return Err(Error::InvalidInput("a coefficient table needs at least 4 samples".into()));
        }
        let h = period / n as f64;
        let slopes = match slopes {
            Some(s) if s.len() == n => s,
            Some(s) => return Err(Error::ShapeMismatch(format!("{n} samples and {} slopes", s.len()))),
            None => (0..n).map(|k| (values[(k + 1) % n] - values[(k + n - 1) % n]) / (2.0 * h)).collect(),
        };
        Ok(Table { period, values, slopes })
    }

    fn eval(&self, t: f64) -> Mat2 {
        let n = self.values.len();
        let h = self.period / n as f64;
        let x = t.rem_euclid(self.period) / h;
        let k = (x.floor() as usize).min(n - 1);
        let s = x - k as f64;
        let (p0, p1) = (self.values[k], self.values[(k + 1) % n]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[(k + 1) % n] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        p0 * (2.0 * s3 - 3.0 * s2 + 1.0) + m0 * (s3 - 2.0 * s2 + s) + p1 * (-2.0 * s3 + 3.0 * s2) + m1 * (s3 - s2)
    }
}

/// A symmetric-matrix-valued function of time.
#[derive(Clone, Debug)]
pub enum Coefficients {
    Constant(Mat2),
    /// `S = [[a, b], [b, c]]` with each entry a trigonometric polynomial in
    /// `2 pi t / period`; `*_cos[j]` multiplies `cos(2 pi j t / period)` from
    /// `j = 0`, `*_sin[j]` multiplies `sin(2 pi (j + 1) t / period)`.
    Trig {
        period: f64,
        a_cos: Vec<f64>,
        a_sin: Vec<f64>,
        b_cos: Vec<f64>,
        b_sin: Vec<f64>,
        c_cos: Vec<f64>,
        c_sin: Vec<f64>,
    },
    Table(Arc<Table>),
    /// Alternates `D(t)` and `I D(H - t) I` on consecutive blocks of length `H`.
    Reflected { base: Arc<Coefficients>, half: f64 },
    /// `S(t) + shift * 1`.
    Shifted { base: Arc<Coefficients>, shift: f64 },
}

/// Accumulates `sum cos[j] cos(j x) + sum sin[j] sin((j + 1) x)`.
fn trig_sum(cos: &[f64], sin: &[f64], x: f64) -> f64 {
    let (s1, c1) = x.sin_cos();
    let (mut c, mut s) = (1.0, 0.0);
    let n = cos.len().max(sin.len() + 1);
    let mut v = 0.0;
    for j in 0..n {
        if let Some(a) = cos.get(j) {
            v += a * c;
        }
        if j > 0 {
            if let Some(b) = sin.get(j - 1) {
                v += b * s;
            }
        }
        (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
    }
    v
}

impl Coefficients {
    pub fn eval(&self, t: f64) -> Mat2 {
        match self {
            Coefficients::Constant(m) => *m,
            Coefficients::Trig { period, a_cos, a_sin, b_cos, b_sin, c_cos, c_sin } => {
                let x = 2.0 * PI * t / period;
                let a = trig_sum(a_cos, a_sin, x);
                let b = trig_sum(b_cos, b_sin, x);
                let c = trig_sum(c_cos, c_sin, x);
                Mat2::new(a, b, b, c)
            }
            Coefficients::Table(tab) => tab.eval(t),
            Coefficients::Reflected { base, half } => {
                let k = (t / half).floor();
                let s = t - k * half;
                if (k as i64).rem_euclid(2) == 0 {
                    base.eval(s)
                } else {
                    let i = conj();
                    i * base.eval(half - s) * i
                }
            }
            Coefficients::Shifted { base, shift } => base.eval(t) + Mat2::identity() * *shift,
        }
    }

    /// An upper bound for the operator norm over all `t`.
    pub fn norm_bound(&self) -> f64 {
        match self {
            Coefficients::Constant(m) => m.norm(),
            Coefficients::Trig { a_cos, a_sin, b_cos, b_sin, c_cos, c_sin, .. } => {
                let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
                (l1(a_cos) + l1(a_sin)).max(l1(c_cos) + l1(c_sin)) + l1(b_cos) + l1(b_sin)
            }
            Coefficients::Table(tab) => {
                let n = tab.values.len() as f64;
                let h = tab.period / n;
                tab.values
                    .iter()
                    .zip(&tab.slopes)
                    .map(|(v, s)| v.norm() + 0.5 * h * s.norm())
                    .fold(0.0, f64::max)
                    * 1.05
            }
            Coefficients::Reflected { base, .. } => base.norm_bound(),
            Coefficients::Shifted { base, shift } => base.norm_bound() + shift.abs(),
        }
    }

    pub fn shifted(&self, shift: f64) -> Coefficients {
        Coefficients::Shifted { base: Arc::new(self.clone()), shift }
    }
}

/// A `T`-periodic loop of symmetric matrices.
#[derive(Clone, Debug)]
pub struct SymmetricLoop {
    pub period: f64,
    pub coeff: Coefficients,
    /// Whether `S(-t) = I S(t) I` is asserted.
    pub symmetric: bool,
}

impl SymmetricLoop {
    pub fn new(period: f64, coeff: Coefficients, symmetric: bool) -> Result<Self> {
        let s = SymmetricLoop { period, coeff, symmetric };
        s.validate()?;
        Ok(s)
    }

    /// `S = c * 1`.
    pub fn constant(c: f64, period: f64) -> Self {
        SymmetricLoop { period, coeff: Coefficients::Constant(Mat2::identity() * c), symmetric: true }
    }

    /// A random loop with `S(-t) = I S(t) I`: the diagonal entries are cosine
    /// series of order `degree`, the off-diagonal entry a sine series, all
    /// coefficients uniform in `[-amp, amp]`.
    pub fn random_symmetric<R: Rng>(rng: &mut R, degree: usize, amp: f64, period: f64) -> Self {
        let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(-amp..=amp)).collect::<Vec<f64>>();
        let a_cos = draw(degree + 1);
        let c_cos = draw(degree + 1);
        let b_sin = draw(degree);
        SymmetricLoop {
            period,
            coeff: Coefficients::Trig { period, a_cos, a_sin: vec![], b_cos: vec![], b_sin, c_cos, c_sin: vec![] },
            symmetric: true,
        }
    }

    pub fn eval(&self, t: f64) -> Mat2 {
        self.coeff.eval(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidInput(format!("period must be positive, got {}", self.period)));
        }
        let i = conj();
        for k in 0..64 {
            let t = self.period * (k as f64 + 0.37) / 64.0;
            let s = self.eval(t);
            if (s - s.transpose()).abs().max() > 1e-12 {
                return Err(Error::InvalidInput(format!("S({t:.6}) is not symmetric")));
            }
            let p = (self.eval(t + self.period) - s).abs().max();
            if p > 1e-10 * s.norm().max(1.0) {
                return Err(Error::InvalidInput(format!("S is not periodic (residual {p:.3e})")));
            }
            if self.symmetric {
                let residual = (self.eval(-t) - i * s * i).abs().max();
                if residual > 1e-8 {
                    return Err(Error::SymmetryViolated { residual });
                }
            }
        }
        Ok(())
    }

    /// The restriction to `[0, T/2]`.
    pub fn half(&self) -> BoundarySymmetricPath {
        BoundarySymmetricPath { half_period: 0.5 * self.period, coeff: self.coeff.clone() }
    }

    /// `Psi` solving `Psi' = J0 S Psi`, `Psi(0) = 1`, on `[0, T]`.
    pub fn psi(&self) -> Result<SymplecticPath> {
        Ok(fundamental_solution(&self.coeff, 0.0, self.period)?.symmetric(self.symmetric))
    }
}

/// Symmetric matrices `D(t)` on `[0, H]` with `D(0)`, `D(H)` diagonal.
#[derive(Clone, Debug)]
pub struct BoundarySymmetricPath {
    pub half_period: f64,
    pub coeff: Coefficients,
}

impl BoundarySymmetricPath {
    pub fn new(half_period: f64, coeff: Coefficients) -> Result<Self> {
        let d = BoundarySymmetricPath { half_period, coeff };
        d.validate()?;
        Ok(d)
    }

    pub fn constant(c: f64, half_period: f64) -> Self {
        BoundarySymmetricPath { half_period, coeff: Coefficients::Constant(Mat2::identity() * c) }
    }

    pub fn eval(&self, t: f64) -> Mat2 {
        self.coeff.eval(t)
    }

    /// Largest off-diagonal magnitude at the two ends.
    pub fn endpoint_offdiagonal(&self) -> f64 {
        let a = self.eval(0.0);
        let b = self.eval(self.half_period);
        a[(0, 1)].abs().max(a[(1, 0)].abs()).max(b[(0, 1)].abs()).max(b[(1, 0)].abs())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_period > 0.0 && self.half_period.is_finite()) {
            return Err(Error::InvalidInput(format!("half period must be positive, got {}", self.half_period)));
        }
        let off = self.endpoint_offdiagonal();
        if off > 1e-10 {
            return Err(Error::InvalidInput(format!("D is not diagonal at the ends (off-diagonal {off:.3e})")));
        }
        Ok(())
    }

    /// Coefficients of the `m`-fold iterated chord on `[0, m H]`.
    pub fn iterate(&self, m: u32) -> Result<BoundarySymmetricPath> {
        if m == 0 {
            return Err(Error::InvalidInput("iteration count must be positive".into()));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let residual = self.endpoint_offdiagonal() * 2.0;
        if residual > 1e-8 {
            return Err(Error::SymmetryViolated { residual });
        }
        Ok(BoundarySymmetricPath {
            half_period: self.half_period * m as f64,
            coeff: Coefficients::Reflected { base: Arc::new(self.coeff.clone()), half: self.half_period },
        })
    }

    /// The periodic loop of period `2H` obtained by reflection.
    pub fn doubled_loop(&self) -> SymmetricLoop {
        SymmetricLoop {
            period: 2.0 * self.half_period,
            coeff: Coefficients::Reflected { base: Arc::new(self.coeff.clone()), half: self.half_period },
            symmetric: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    /// `gamma(0) = gamma(T)`.
    Periodic,
    /// `gamma(0), gamma(H)` on the real axis.
    #[serde(rename = "I")]
    BcI,
    /// `gamma(0), gamma(H)` on the imaginary axis.
    #[serde(rename = "-I")]
    BcMinusI,
}

impl Problem {
    pub fn label(self) -> &'static str {
        match self {
            Problem::Periodic => "periodic",
            Problem::BcI => "I",
            Problem::BcMinusI => "-I",
        }
    }
}

fn ode_opts() -> OdeOptions {
    OdeOptions::default()
}

fn mat_from(y: &[f64; 4]) -> Mat2 {
    Mat2::new(y[0], y[1], y[2], y[3])
}

/// `J0 (S + lambda) Y` for `Y` stored row-major.
#[inline]
fn matrix_rhs(coeff: &Coefficients, lambda: f64, t: f64, y: &[f64; 4]) -> [f64; 4] {
    let s = coeff.eval(t);
    let (a, b, c) = (s[(0, 0)] + lambda, s[(0, 1)], s[(1, 1)] + lambda);
    // (S + lambda) Y
    let r0 = [a * y[0] + b * y[2], a * y[1] + b * y[3]];
    let r1 = [b * y[0] + c * y[2], b * y[1] + c * y[3]];
    [-r1[0], -r1[1], r0[0], r0[1]]
}

#[inline]
fn vector_rhs(coeff: &Coefficients, lambda: f64, t: f64, y: &[f64; 2]) -> [f64; 2] {
    let s = coeff.eval(t);
    let (a, b, c) = (s[(0, 0)] + lambda, s[(0, 1)], s[(1, 1)] + lambda);
    [-(b * y[0] + c * y[1]), a * y[0] + b * y[1]]
}

fn check_symplectic(m: &Mat2) -> Result<()> {
    let drift = (m.determinant() - 1.0).abs();
    if drift > 1e-8 * m.norm_squared().max(1.0) {
        return Err(Error::IntegratorFailure(format!("fundamental solution lost symplecticity (|det - 1| = {drift:.3e})")));
    }
    Ok(())
}

/// `Phi_lambda` on `[0, t_end]` with checkpoints for evaluation at any time.
pub fn fundamental_solution(coeff: &Coefficients, lambda: f64, t_end: f64) -> Result<SymplecticPath> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    let c = coeff.clone();
    let rhs = Arc::new(move |t: f64, y: &[f64; 4]| matrix_rhs(&c, lambda, t, y));
    let traj = Trajectory::solve(rhs, 0.0, [1.0, 0.0, 0.0, 1.0], t_end, &ode_opts())?;
    check_symplectic(&mat_from(&traj.end_state()))?;
    Ok(SymplecticPath::new(t_end, move |t| mat_from(&traj.eval(t))))
}

/// `Phi_lambda(t_end)` without storing the trajectory.
pub fn monodromy(coeff: &Coefficients, lambda: f64, t_end: f64) -> Result<Mat2> {
    let f = |t: f64, y: &[f64; 4]| matrix_rhs(coeff, lambda, t, y);
    let y = integrate(&f, 0.0, [1.0, 0.0, 0.0, 1.0], t_end, &ode_opts(), None, &mut |_, _| {})?;
    let m = mat_from(&y);
    check_symplectic(&m)?;
    Ok(m)
}

fn propagate(coeff: &Coefficients, lambda: f64, t_end: f64, v0: Vec2) -> Result<Vec2> {
    let f = |t: f64, y: &[f64; 2]| vector_rhs(coeff, lambda, t, y);
    let y = integrate(&f, 0.0, [v0[0], v0[1]], t_end, &ode_opts(), None, &mut |_, _| {})?;
    Ok(Vec2::new(y[0], y[1]))
}

/// Continuous change of `arg gamma` over `[0, t_end]` in units of full turns,
/// with steps small enough that each increment stays below a quarter turn.
fn winding_turns(coeff: &Coefficients, lambda: f64, t_end: f64, v0: Vec2) -> Result<f64> {
    let f = |t: f64, y: &[f64; 2]| vector_rhs(coeff, lambda, t, y);
    let rate = coeff.norm_bound() + lambda.abs();
    let opts = ode_opts().with_h_max((PI / 4.0) / rate.max(1e-12));
    let scale = v0.norm();
    let mut prev: Option<[f64; 2]> = None;
    let mut total = 0.0;
    let mut vanished = None;
    integrate(&f, 0.0, [v0[0], v0[1]], t_end, &opts, None, &mut |t, y| {
        if (y[0] * y[0] + y[1] * y[1]).sqrt() < 1e-12 * scale && vanished.is_none() {
            vanished = Some(t);
        }
        if let Some(p) = prev {
            total += (p[0] * y[1] - p[1] * y[0]).atan2(p[0] * y[0] + p[1] * y[1]);
        }
        prev = Some(*y);
    })?;
    if let Some(t) = vanished {
        return Err(Error::ZeroEigenfunction { t });
    }
    Ok(total / (2.0 * PI))
}

/// Interval and initial vector of a problem for coefficients on `[0, t_end]`.
fn root_function(coeff: &Coefficients, problem: Problem, t_end: f64, lambda: f64) -> Result<f64> {
    match problem {
        Problem::Periodic => Ok(monodromy(coeff, lambda, t_end)?.trace() - 2.0),
        Problem::BcI => Ok(propagate(coeff, lambda, t_end, Vec2::new(1.0, 0.0))?[1]),
        Problem::BcMinusI => Ok(propagate(coeff, lambda, t_end, Vec2::new(0.0, 1.0))?[0]),
    }
}

/// Winding of the eigenfunction for eigenvalue `lambda` of `problem`, for
/// coefficients on `[0, t_end]` (`t_end` is the period or the half period).
pub fn winding_of(coeff: &Coefficients, t_end: f64, lambda: f64, problem: Problem) -> Result<HalfInt> {
    let residual = root_function(coeff, problem, t_end, lambda)?;
    let scale = match problem {
        Problem::Periodic => 1.0,
        _ => 1.0,
    };
    if residual.abs() > 1e-8 * scale {
        return Err(Error::PreconditionViolated(format!("lambda = {lambda} is not an eigenvalue (residual {residual:.3e})")));
    }
    winding_unchecked(coeff, t_end, lambda, problem)
}

fn winding_unchecked(coeff: &Coefficients, t_end: f64, lambda: f64, problem: Problem) -> Result<HalfInt> {
    let v0 = match problem {
        Problem::Periodic => {
            let m = monodromy(coeff, lambda, t_end)? - Mat2::identity();
            if m.norm() <= 1e-6 {
                Vec2::new(1.0, 0.0)
            } else {
                let svd = m.svd(false, true);
                let vt = svd.v_t.expect("right singular vectors requested");
                let i = if svd.singular_values[0] <= svd.singular_values[1] { 0 } else { 1 };
                Vec2::new(vt[(i, 0)], vt[(i, 1)])
            }
        }
        Problem::BcI => Vec2::new(1.0, 0.0),
        Problem::BcMinusI => Vec2::new(0.0, 1.0),
    };
    let turns = winding_turns(coeff, lambda, t_end, v0)?;
    let twice = match problem {
        Problem::Periodic => 2.0 * turns.round(),
        _ => (2.0 * turns).round(),
    };
    let off = (2.0 * turns - twice).abs();
    if off > 0.1 {
        return Err(Error::NoConvergence(format!(
            "eigenfunction at lambda = {lambda} closes up only to {off:.3e} half turns"
        )));
    }
    Ok(HalfInt::from_twice(twice as i64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub lambda: f64,
    pub winding: HalfInt,
    pub multiplicity: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumSlice {
    pub problem: Problem,
    pub window: (f64, f64),
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumSlice {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,winding_num,winding_den,multiplicity\n");
        for e in &self.entries {
            out.push_str(&format!("{:.12},{},{},{}\n", e.lambda, e.winding.num(), e.winding.den(), e.multiplicity));
        }
        out
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }

    /// Winding values are nondecreasing along increasing eigenvalues.
    pub fn windings_monotone(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].winding <= w[1].winding)
    }
}

const CELLS_PER_SPACING: f64 = 512.0;
const ROOT_TOL: f64 = 1e-10;
const DOUBLE_TOL: f64 = 1e-6;

/// Illinois false position on a sign-changing bracket.
fn bracket_root(g: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0i32;
    for _ in 0..200 {
        if (b - a).abs() <= ROOT_TOL {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = g(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        // guard against slow one-sided convergence
        if side != 0 && (b - a).abs() > 4.0 * ROOT_TOL {
            let m = 0.5 * (a + b);
            let fm = g(m)?;
            if (fm > 0.0) == (fa > 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
fn golden_min(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

/// Eigenvalues in `[a, b]` with multiplicities, before winding numbers.
fn locate(coeff: &Coefficients, problem: Problem, t_end: f64, full_period: f64, a: f64, b: f64) -> Result<Vec<(f64, u8)>> {
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid window [{a}, {b}]")));
    }
    let spacing = 2.0 * PI / full_period;
    let cells = (((b - a) / spacing) * CELLS_PER_SPACING).ceil().max(8.0) as usize;
    let grid: Vec<f64> = (0..=cells).map(|k| a + (b - a) * k as f64 / cells as f64).collect();
    let g = |l: f64| root_function(coeff, problem, t_end, l);
    let values: Vec<f64> = par_map(grid.clone(), g).into_iter().collect::<Result<Vec<f64>>>()?;

    let mut roots: Vec<(f64, u8)> = Vec::new();
    for i in 0..cells {
        let (fa, fb) = (values[i], values[i + 1]);
        if fa == 0.0 {
            roots.push((grid[i], 1));
        } else if fa * fb < 0.0 {
            roots.push((bracket_root(&g, grid[i], fa, grid[i + 1], fb)?, 1));
        }
    }
    if values[cells] == 0.0 {
        roots.push((grid[cells], 1));
    }

    if problem == Problem::Periodic {
        let h = |l: f64| -> Result<f64> { Ok((monodromy(coeff, l, t_end)? - Mat2::identity()).norm()) };
        for i in 1..cells {
            let v = values[i];
            if !(v <= 0.0 && v >= values[i - 1] && v >= values[i + 1]) || values[i - 1] > 0.0 || values[i + 1] > 0.0 {
                continue;
            }
            let neg_g = |l: f64| -> Result<f64> { Ok(-g(l)?) };
            let (lm, gm) = golden_min(&neg_g, grid[i - 1], grid[i + 1], 1e-9)?;
            let gmax = -gm;
            if gmax > 0.0 {
                roots.push((bracket_root(&g, grid[i - 1], values[i - 1], lm, gmax)?, 1));
                roots.push((bracket_root(&g, lm, gmax, grid[i + 1], values[i + 1])?, 1));
            } else {
                let (ld, hd) = golden_min(&h, grid[i - 1], grid[i + 1], 1e-12)?;
                if hd <= DOUBLE_TOL {
                    roots.push((ld, 2));
                }
            }
        }
    }
    roots.sort_by(|x, y| x.0.total_cmp(&y.0));

    // coincident simple roots are a double eigenvalue or an unresolved pair
    let mut merged: Vec<(f64, u8)> = Vec::new();
    for (l, m) in roots {
        if let Some(last) = merged.last_mut() {
            if (l - last.0).abs() < 1e-9 {
                let h = (monodromy(coeff, l, t_end)? - Mat2::identity()).norm();
                if problem == Problem::Periodic && h <= DOUBLE_TOL {
                    *last = (0.5 * (l + last.0), 2);
                    continue;
                }
                return Err(Error::WindowTooCoarse(format!("two eigenvalues collide near lambda = {l:.10}")));
            }
        }
        merged.push((l, m));
    }
    Ok(merged)
}

fn spectrum(coeff: &Coefficients, problem: Problem, t_end: f64, full_period: f64, window: (f64, f64)) -> Result<SpectrumSlice> {
    let located = locate(coeff, problem, t_end, full_period, window.0, window.1)?;
    let windings = par_map(located.clone(), |(l, _)| winding_unchecked(coeff, t_end, l, problem));
    let mut entries = Vec::with_capacity(located.len());
    for ((lambda, multiplicity), w) in located.into_iter().zip(windings) {
        entries.push(SpectrumEntry { lambda, winding: w?, multiplicity });
    }
    Ok(SpectrumSlice { problem, window, entries })
}

/// Spectrum of the periodic problem in `window`.
pub fn periodic_spectrum(s: &SymmetricLoop, window: (f64, f64)) -> Result<SpectrumSlice> {
    spectrum(&s.coeff, Problem::Periodic, s.period, s.period, window)
}

/// Spectrum of a boundary problem in `window`.
pub fn boundary_spectrum(d: &BoundarySymmetricPath, bc: Problem, window: (f64, f64)) -> Result<SpectrumSlice> {
    if bc == Problem::Periodic {
        return Err(Error::InvalidInput("boundary_spectrum needs bc I or -I".into()));
    }
    spectrum(&d.coeff, bc, d.half_period, 2.0 * d.half_period, window)
}

/// Default window `[-4 pi (m + 2) / T, 4 pi (m + 2) / T]`.
pub fn default_window(period: f64, m: u32) -> (f64, f64) {
    let w = 4.0 * PI / period * (m as f64 + 2.0);
    (-w, w)
}

const MAX_WINDOW_DOUBLINGS: usize = 12;

/// Largest negative and smallest positive eigenvalue entries, growing the
/// window until both are present.
fn around_zero(
    coeff: &Coefficients,
    problem: Problem,
    t_end: f64,
    full_period: f64,
) -> Result<(SpectrumEntry, SpectrumEntry)> {
    let mut w = 2.0 * 2.0 * PI / full_period;
    for _ in 0..MAX_WINDOW_DOUBLINGS {
        let slice = spectrum(coeff, problem, t_end, full_period, (-w, w))?;
        let neg = slice.entries.iter().rfind(|e| e.lambda < 0.0);
        let pos = slice.entries.iter().find(|e| e.lambda > 0.0);
        if let (Some(n), Some(p)) = (neg, pos) {
            return Ok((*n, *p));
        }
        w *= 2.0;
    }
    Err(Error::WindowTooCoarse("no eigenvalue on one side of 0 within the maximal window".into()))
}

/// The eigenvalue of a boundary problem closest to 0.
pub fn nearest_eigenvalue(d: &BoundarySymmetricPath, bc: Problem) -> Result<f64> {
    if bc == Problem::Periodic {
        return Err(Error::InvalidInput("expected a boundary problem".into()));
    }
    let (neg, pos) = around_zero(&d.coeff, bc, d.half_period, 2.0 * d.half_period)?;
    Ok(if -neg.lambda < pos.lambda { neg.lambda } else { pos.lambda })
}

/// `mu(S) = 2 alpha(S) + p(S)`.
pub fn mu_spec(s: &SymmetricLoop) -> Result<HalfInt> {
    let g0 = root_function(&s.coeff, Problem::Periodic, s.period, 0.0)?;
    if g0.abs() <= 1e-8 {
        return Err(Error::DegenerateSpectrum { residual: g0.abs() });
    }
    let (neg, pos) = around_zero(&s.coeff, Problem::Periodic, s.period, s.period)?;
    let alpha = neg.winding;
    let p = pos.winding - alpha;
    if p != HalfInt::ZERO && p != HalfInt::from_int(1) {
        return Err(Error::NoConvergence(format!("winding jump {p} across 0 is not 0 or 1")));
    }
    Ok(alpha * 2 + p)
}

fn mu_boundary(d: &BoundarySymmetricPath, bc: Problem) -> Result<HalfInt> {
    let axis = if bc == Problem::BcI { LineFrame::real() } else { LineFrame::imaginary() };
    let end = monodromy(&d.coeff, 0.0, d.half_period)?;
    let image = LineFrame::from_vector(end * axis.columns());
    let dim = lagrangian_intersection_dim(&image, &axis, RANK_TOL)?;
    if dim > 0 {
        return Err(Error::KernelNonTrivial { dim });
    }
    let g0 = root_function(&d.coeff, bc, d.half_period, 0.0)?;
    if g0.abs() <= 1e-8 {
        return Err(Error::DegenerateSpectrum { residual: g0.abs() });
    }
    let (neg, pos) = around_zero(&d.coeff, bc, d.half_period, 2.0 * d.half_period)?;
    if pos.winding.twice() != neg.winding.twice() + 1 {
        return Err(Error::NoConvergence(format!(
            "relative windings {} and {} around 0 are not consecutive",
            neg.winding, pos.winding
        )));
    }
    // max{k : lambda_k < 0} + 1/2 with winding k/2
    Ok(HalfInt::from_twice(2 * neg.winding.twice() + 1))
}

/// `mu_I(D) = max{k : lambda_k < 0} + 1/2` over the real-axis problem.
pub fn mu_i(d: &BoundarySymmetricPath) -> Result<HalfInt> {
    mu_boundary(d, Problem::BcI)
}

/// The same over the imaginary-axis problem.
pub fn mu_minus_i(d: &BoundarySymmetricPath) -> Result<HalfInt> {
    mu_boundary(d, Problem::BcMinusI)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    /// `dim(R ∩ Psi(H)^{-1} R)`.
    pub dim: usize,
    /// Eigenvalues of the real-axis problem within 1e-6 of 0.
    pub zero_eigenvalues: usize,
    pub agree: bool,
}

/// Compares the kernel of `A_D` read from `Psi(H) = Phi_0(H)` with the count of
/// eigenvalues of the real-axis problem at 0.
pub fn kernel_test(d: &BoundarySymmetricPath) -> Result<KernelReport> {
    let end = monodromy(&d.coeff, 0.0, d.half_period)?;
    let pulled = crate::linalg::symplectic_inverse(&end) * Vec2::new(1.0, 0.0);
    let dim = lagrangian_intersection_dim(&LineFrame::real(), &LineFrame::from_vector(pulled), RANK_TOL)?;
    let slice = spectrum(&d.coeff, Problem::BcI, d.half_period, 2.0 * d.half_period, (-0.5, 0.5))?;
    let zero_eigenvalues = slice.entries.iter().filter(|e| e.lambda.abs() <= 1e-6).count();
    Ok(KernelReport { dim, zero_eigenvalues, agree: dim == zero_eigenvalues })
}

/// All four indices of a symmetric loop by both methods.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexRelationReport {
    pub mu_spectral: HalfInt,
    pub mu_i: HalfInt,
    pub mu_minus_i: HalfInt,
    pub cz_crossing: HalfInt,
    pub rs_real: HalfInt,
    pub rs_imaginary: HalfInt,
    /// `mu(S) = mu_I + mu_{-I}`.
    pub relation_holds: bool,
    pub cz_agrees: bool,
    pub rs_real_agrees: bool,
    pub rs_imaginary_agrees: bool,
}

impl IndexRelationReport {
    pub fn all_hold(&self) -> bool {
        self.relation_holds && self.cz_agrees && self.rs_real_agrees && self.rs_imaginary_agrees
    }

    /// Names of the failing comparisons.
    pub fn disagreements(&self) -> Vec<&'static str> {
        let mut out = vec![];
        if !self.relation_holds {
            out.push("mu(S) vs mu_I + mu_-I");
        }
        if !self.cz_agrees {
            out.push("mu(S) vs crossing-form mu_CZ");
        }
        if !self.rs_real_agrees {
            out.push("mu_I vs crossing-form mu_RS(Psi R, R)");
        }
        if !self.rs_imaginary_agrees {
            out.push("mu_-I vs crossing-form mu_RS(Psi iR, iR)");
        }
        out
    }
}

/// Computes `mu(S_Psi)`, `mu_I(D_Psi)`, `mu_{-I}(D_Psi)` spectrally and
/// `mu_CZ(Psi)`, `mu_RS(Psi R, R)`, `mu_RS(Psi iR, iR)` by crossing forms,
/// for `Psi` the fundamental solution of a symmetric loop.
pub fn verify_index_relation(s: &SymmetricLoop) -> Result<IndexRelationReport> {
    if !s.symmetric {
        return Err(Error::PreconditionViolated("loop is not flagged symmetric".into()));
    }
    let psi = s.psi()?;
    let half = psi.restrict(0.5 * s.period);
    crate::maslov::check_boundary_pairs(&half.eval(half.t_end()))?;
    let cz_crossing = cz_index(&psi)?.0;
    let rs_r = rs_real(&half)?;
    let rs_i = rs_imaginary(&half)?;
    let d = s.half();
    let mu_spectral = mu_spec(s)?;
    let mi = mu_i(&d)?;
    let mmi = mu_minus_i(&d)?;
    Ok(IndexRelationReport {
        mu_spectral,
        mu_i: mi,
        mu_minus_i: mmi,
        cz_crossing,
        rs_real: rs_r,
        rs_imaginary: rs_i,
        relation_holds: mu_spectral == mi + mmi,
        cz_agrees: mu_spectral == cz_crossing,
        rs_real_agrees: mi == rs_r,
        rs_imaginary_agrees: mmi == rs_i,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NondegSplitReport {
    /// `dim ker(Psi(T) - 1)`.
    pub kernel_dim: usize,
    /// `Psi(H) R ∩ R != 0`, i.e. the lower-left entry of `Psi(H)` vanishes.
    pub real_pair_degenerate: bool,
    /// `Psi(H) iR ∩ iR != 0`, i.e. the upper-right entry vanishes.
    pub imaginary_pair_degenerate: bool,
    /// The intersection tests agree with the block entries.
    pub blocks_consistent: bool,
    /// `kernel_dim == 0` iff both pairs are nondegenerate.
    pub equivalence_holds: bool,
}

/// Nondegeneracy of `Psi` on `[0, T]` versus that of the two boundary pairs
/// on `[0, T/2]`, for a symmetric `Psi`.
pub fn verify_nondeg_split(psi: &SymplecticPath) -> Result<NondegSplitReport> {
    if !psi.is_symmetric() {
        return Err(Error::PreconditionViolated("path is not flagged symmetric".into()));
    }
    let tt = psi.t_end();
    let half = psi.eval(0.5 * tt);
    let full = psi.eval(tt);
    let kernel_dim = crate::linalg::kernel_dim_minus_identity(&full, RANK_TOL);
    let scale = half.norm().max(1.0);
    let c_zero = half[(1, 0)].abs() <= RANK_TOL * scale;
    let b_zero = half[(0, 1)].abs() <= RANK_TOL * scale;
    let real_deg = lagrangian_intersection_dim(&LineFrame::from_vector(half * Vec2::new(1.0, 0.0)), &LineFrame::real(), RANK_TOL)? > 0;
    let imag_deg =
        lagrangian_intersection_dim(&LineFrame::from_vector(half * Vec2::new(0.0, 1.0)), &LineFrame::imaginary(), RANK_TOL)? > 0;
    Ok(NondegSplitReport {
        kernel_dim,
        real_pair_degenerate: real_deg,
        imaginary_pair_degenerate: imag_deg,
        blocks_consistent: real_deg == c_zero && imag_deg == b_zero,
        equivalence_holds: (kernel_dim == 0) == (!real_deg && !imag_deg),
    })
}

/// Checks of the iteration inequalities on a family of boundary data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationCheck {
    pub base: HalfInt,
    pub iterates: Vec<HalfInt>,
    pub holds: bool,
}

/// `mu_I` of the iterated chord data for `m = 1..=max_m` and the implications
/// `mu_I >= 3/2 => mu_I(m) >= (2m+1)/2`, `mu_I >= 1/2 => mu_I(m) >= 1/2`,
/// `mu_I < 1/2 => mu_I(m) < 1/2`.
pub fn check_iteration(d: &BoundarySymmetricPath, max_m: u32) -> Result<IterationCheck> {
    let base = mu_i(d)?;
    let mut iterates = Vec::new();
    let mut holds = true;
    for m in 1..=max_m {
        let v = mu_i(&d.iterate(m)?)?;
        holds &= iteration_implications(base, v, m);
        iterates.push(v);
    }
    Ok(IterationCheck { base, iterates, holds })
}

/// The chord iteration implications for one `m`.
pub fn iteration_implications(base: HalfInt, iterate: HalfInt, m: u32) -> bool {
    let half = HalfInt::HALF;
    let mut ok = true;
    if base >= HalfInt::from_twice(3) {
        ok &= iterate >= HalfInt::from_twice(2 * m as i64 + 1);
    }
    if base >= half {
        ok &= iterate >= half;
    } else {
        ok &= iterate < half;
    }
    ok
}

/// The periodic-orbit counterparts: `mu < 1 => mu(m) < 1`, `mu >= 1 =>
/// mu(m) >= 1`, `mu >= 3 => mu(m) >= 2m + 1`.
pub fn cz_iteration_implications(base: HalfInt, iterate: HalfInt, m: u32) -> bool {
    let one = HalfInt::from_int(1);
    let mut ok = if base < one { iterate < one } else { iterate >= one };
    if base >= HalfInt::from_int(3) {
        ok &= iterate >= HalfInt::from_int(2 * m as i64 + 1);
    }
    ok
}

/// Checks the nondegeneracy split on the fundamental solution of `s` and on
/// that of `s + lambda`, for `lambda` the real-axis eigenvalue nearest 0,
/// which is degenerate on the real side by construction.
pub fn nondeg_split_instance(s: &SymmetricLoop) -> Result<bool> {
    let generic = verify_nondeg_split(&s.psi()?)?;
    let near = nearest_eigenvalue(&s.half(), Problem::BcI)?;
    let shifted = SymmetricLoop { period: s.period, coeff: s.coeff.shifted(near), symmetric: true };
    let forced = verify_nondeg_split(&shifted.psi()?)?;
    Ok(generic.equivalence_holds
        && generic.blocks_consistent
        && forced.equivalence_holds
        && forced.blocks_consistent
        && forced.real_pair_degenerate
        && forced.kernel_dim > 0)
}

/// The nondegeneracy split on `count` random symmetric loops.
pub fn nondeg_split_suite(seed: u64, count: usize) -> PropertyTally {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let loops: Vec<SymmetricLoop> = (0..count).map(|_| SymmetricLoop::random_symmetric(&mut rng, 3, 2.0, 1.0)).collect();
    let mut tally = PropertyTally { name: "nondeg_split".into(), ..Default::default() };
    for (idx, r) in par_map(loops, |s| nondeg_split_instance(&s)).into_iter().enumerate() {
        tally.record(r, || format!("instance {idx}"));
    }
    tally
}

/// Aggregated outcome of the random symmetric-loop suite.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LoopSuiteReport {
    pub instances: usize,
    pub degenerate_skipped: usize,
    pub two_method: PropertyTally,
    pub index_relation: PropertyTally,
    pub hormander: PropertyTally,
    pub corollary: PropertyTally,
}

/// Draws `count` random symmetric loops of period 1 (degree 3, coefficients
/// in `[-2, 2]`) and checks the two-method agreement, the index relation, the
/// Hörmander bound and the chord/orbit implication.
pub fn random_loop_suite(seed: u64, count: usize) -> LoopSuiteReport {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let loops: Vec<SymmetricLoop> = (0..count).map(|_| SymmetricLoop::random_symmetric(&mut rng, 3, 2.0, 1.0)).collect();
    let results = par_map(loops, |s| verify_index_relation(&s));
    let mut rep = LoopSuiteReport {
        instances: count,
        two_method: PropertyTally { name: "two_method".into(), ..Default::default() },
        index_relation: PropertyTally { name: "index_relation".into(), ..Default::default() },
        hormander: PropertyTally { name: "hormander".into(), ..Default::default() },
        corollary: PropertyTally { name: "corollary".into(), ..Default::default() },
        ..Default::default()
    };
    for (idx, rel) in results.into_iter().enumerate() {
        match rel {
            Ok(r) => {
                rep.two_method.record(Ok(r.cz_agrees && r.rs_real_agrees && r.rs_imaginary_agrees), || {
                    format!("instance {idx}: {}", r.disagreements().join(", "))
                });
                rep.index_relation.record(Ok(r.relation_holds && r.cz_crossing == r.rs_real + r.rs_imaginary), || {
                    format!("instance {idx}: {} != {} + {}", r.mu_spectral, r.mu_i, r.mu_minus_i)
                });
                let diff = r.rs_real - r.rs_imaginary;
                let bound = (r.cz_crossing - r.rs_real * 2).twice().abs() <= 2;
                rep.hormander.record(Ok(diff.twice().abs() <= 2 && diff.is_integer() && bound), || {
                    format!("instance {idx}: difference {diff}")
                });
                let implication = r.cz_crossing < HalfInt::from_int(3) || r.rs_real >= HalfInt::from_twice(3);
                rep.corollary.record(Ok(implication), || format!("instance {idx}: mu_CZ {} mu_RS {}", r.cz_crossing, r.rs_real));
            }
            Err(e) => {
                rep.degenerate_skipped += 1;
                for t in [&mut rep.two_method, &mut rep.index_relation, &mut rep.hormander, &mut rep.corollary] {
                    t.record(Err(e.clone()), String::new);
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation;

    #[test]
    fn constant_fundamental_solution_is_rotation() {
        let p = fundamental_solution(&Coefficients::Constant(Mat2::identity() * 0.7), 1.1, 2.0).unwrap();
        for k in 0..=20 {
            let t = 0.1 * k as f64;
            assert!((p.eval(t) - rotation(1.8 * t)).norm() < 1e-9);
            assert!((p.eval(t).determinant() - 1.0).abs() < 1e-9);
        }
        let full = monodromy(&Coefficients::Constant(Mat2::zeros()), 2.0 * PI, 1.0).unwrap();
        assert!((full - Mat2::identity()).norm() < 1e-9);
    }

    #[test]
    fn free_spectrum() {
        let s = SymmetricLoop::constant(0.0, 1.0);
        let slice = periodic_spectrum(&s, (-7.0, 7.0)).unwrap();
        assert_eq!(slice.entries.len(), 3);
        for (e, k) in slice.entries.iter().zip(-1..=1) {
            assert!((e.lambda - 2.0 * PI * k as f64).abs() < 1e-8, "{e:?}");
            assert_eq!(e.winding, HalfInt::from_int(k));
            assert_eq!(e.multiplicity, 2);
        }
    }

    #[test]
    fn constant_shift_moves_spectrum() {
        let c = 1.3;
        let slice = periodic_spectrum(&SymmetricLoop::constant(c, 1.0), (-15.0, 15.0)).unwrap();
        for e in &slice.entries {
            let k = e.winding.num() as f64;
            assert!((e.lambda - (2.0 * PI * k - c)).abs() < 1e-8);
        }
        for bc in [Problem::BcI, Problem::BcMinusI] {
            let slice = boundary_spectrum(&BoundarySymmetricPath::constant(c, 0.5), bc, (-15.0, 15.0)).unwrap();
            assert!(slice.entries.windows(2).all(|w| w[0].lambda < w[1].lambda));
            for e in &slice.entries {
                let k = e.winding.twice() as f64;
                assert!((e.lambda - (2.0 * PI * k - c)).abs() < 1e-8, "{e:?}");
                assert_eq!(e.multiplicity, 1);
            }
        }
    }

    #[test]
    fn boundary_windings_for_three_halves_turn() {
        let c = 3.0 * PI;
        let d = BoundarySymmetricPath::constant(c, 0.5);
        for k in 0..3 {
            let l = 2.0 * PI * (k as f64 - 1.5);
            assert_eq!(winding_of(&d.coeff, 0.5, l, Problem::BcI).unwrap(), HalfInt::from_twice(k));
        }
        assert_eq!(winding_of(&Coefficients::Constant(Mat2::zeros()), 1.0, 2.0 * PI, Problem::Periodic).unwrap(), HalfInt::from_int(1));
    }

    #[test]
    fn indices_of_constant_loops() {
        assert_eq!(mu_spec(&SymmetricLoop::constant(1.0, 1.0)).unwrap(), HalfInt::from_int(1));
        assert_eq!(mu_spec(&SymmetricLoop::constant(3.0 * PI, 1.0)).unwrap(), HalfInt::from_int(3));
        let d = BoundarySymmetricPath::constant(3.0 * PI, 0.5);
        assert_eq!(mu_i(&d).unwrap(), HalfInt::from_twice(3));
        assert_eq!(mu_minus_i(&d).unwrap(), HalfInt::from_twice(3));
        assert_eq!(mu_i(&BoundarySymmetricPath::constant(2.0, 0.5)).unwrap(), HalfInt::HALF);
        assert_eq!(mu_spec(&SymmetricLoop::constant(0.0, 1.0)).unwrap_err().name(), "DegenerateSpectrum");
    }

    #[test]
    fn kernel_examples() {
        // rotation by pi over [0, 1/2]
        let r = kernel_test(&BoundarySymmetricPath::constant(2.0 * PI, 0.5)).unwrap();
        assert_eq!((r.dim, r.zero_eigenvalues), (1, 1));
        let r = kernel_test(&BoundarySymmetricPath::constant(PI, 0.5)).unwrap();
        assert_eq!((r.dim, r.zero_eigenvalues), (0, 0));
        assert_eq!(mu_i(&BoundarySymmetricPath::constant(2.0 * PI, 0.5)).unwrap_err().name(), "KernelNonTrivial");
    }

    #[test]
    fn iteration_of_constant_data() {
        let d = BoundarySymmetricPath::constant(3.0 * PI, 0.5);
        assert_eq!(d.iterate(1).unwrap().half_period, 0.5);
        let d3 = d.iterate(3).unwrap();
        // witness eigenvalue -pi has winding 1/2 on the chord and 3/2 on C^3
        assert_eq!(winding_of(&d.coeff, 0.5, -PI, Problem::BcI).unwrap(), HalfInt::from_twice(1));
        assert_eq!(winding_of(&d3.coeff, 1.5, -PI, Problem::BcI).unwrap(), HalfInt::from_twice(3));
        // rotation by 1.3 pi per chord: mu_I(C^m) = floor(1.3 m) + 1/2
        let c = check_iteration(&BoundarySymmetricPath::constant(2.6 * PI, 0.5), 5).unwrap();
        assert!(c.holds);
        assert_eq!(c.base, HalfInt::from_twice(3));
        let twice: Vec<i64> = c.iterates.iter().map(|h| h.twice()).collect();
        assert_eq!(twice, vec![3, 5, 7, 11, 13]);
    }

    #[test]
    fn doubled_chord_is_the_loop() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let s = SymmetricLoop::random_symmetric(&mut rng, 3, 2.0, 1.0);
        let d2 = s.half().iterate(2).unwrap();
        for k in 0..40 {
            let t = k as f64 / 40.0;
            assert!((d2.eval(t) - s.eval(t)).norm() < 1e-12);
        }
        assert_eq!(mu_spec(&d2.doubled_loop().clone()).ok(), mu_spec(&SymmetricLoop { period: 1.0, ..s.clone() }).ok());
    }

    #[test]
    fn index_relation_closed_forms() {
        let r = verify_index_relation(&SymmetricLoop::constant(3.0 * PI, 1.0)).unwrap();
        assert!(r.all_hold(), "{r:?}");
        assert_eq!(r.mu_spectral, HalfInt::from_int(3));
        let r = verify_index_relation(&SymmetricLoop::constant(0.5, 1.0)).unwrap();
        assert!(r.all_hold());
        assert_eq!((r.mu_i, r.mu_minus_i), (HalfInt::HALF, HalfInt::HALF));
    }

    #[test]
    fn nondeg_split_examples() {
        let full_turn = SymplecticPath::rotation(2.0 * PI, 1.0);
        let r = verify_nondeg_split(&full_turn).unwrap();
        assert!(r.real_pair_degenerate && r.imaginary_pair_degenerate && r.kernel_dim == 2 && r.equivalence_holds);
        let third = SymplecticPath::rotation(2.0 * PI / 3.0, 1.0);
        let r = verify_nondeg_split(&third).unwrap();
        assert!(!r.real_pair_degenerate && !r.imaginary_pair_degenerate && r.kernel_dim == 0 && r.equivalence_holds);
    }

    #[test]
    fn random_suite_small() {
        let rep = random_loop_suite(5, 4);
        for t in [&rep.two_method, &rep.index_relation, &rep.hormander, &rep.corollary] {
            assert!(t.all_passed(), "{t:?}");
        }
    }

    #[test]
    fn nondeg_split_small() {
        let t = nondeg_split_suite(3, 6);
        assert_eq!(t.checked, 6);
        assert!(t.all_passed(), "{t:?}");
    }
}
