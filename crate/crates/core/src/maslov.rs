//! Robbin-Salamon index of Lagrangian paths by crossing forms, the
//! Conley-Zehnder index through the anti-graph, the Hörmander-type difference
//! of boundary indices, and checkers for the standard index properties.
//!
//! A crossing of `Lambda` with `V` is a time where `Lambda(t) ∩ V != 0`. With
//! orthonormal frames `Z(t)` of `Lambda(t)` and `Y` of `V`, crossings are the
//! zeros of the smallest singular value of `Z(t)^T W Y`, and the crossing form
//! on `Lambda(t) ∩ V` is `u -> <Z u, W Z' u>` restricted to the left kernel.
//! Endpoint crossings count with weight one half.

use nalgebra::{DMatrix, SMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    conj, lagrangian_intersection_dim, omega, orthonormalize, rotation, sigma_min_small, symplectic_inverse, HalfInt,
    LagrangianFrame, LineFrame, Mat2, PlaneFrame, RANK_TOL,
};
use crate::par::par_map;
use crate::paths::{LagrangianPath, LinePath, PlanePath, SymplecticPath};

/// Numerical thresholds of the crossing-form computation.
#[derive(Clone, Copy, Debug)]
pub struct CrossingOptions {
    /// Finite-difference step for the frame derivative.
    pub h: f64,
    /// Eigenvalues of the crossing form below this are treated as zero.
    pub sig_tol: f64,
    /// Smallest singular value at or below which a crossing is declared.
    pub crossing_tol: f64,
    /// Width to which crossing times are localized.
    pub time_tol: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        CrossingOptions { h: 1e-5, sig_tol: 1e-7, crossing_tol: 1e-7, time_tol: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    pub signature: i32,
    /// `dim Lambda(t) ∩ V`.
    pub dim: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CrossingReport {
    pub crossings: Vec<Crossing>,
    pub start_is_crossing: bool,
    pub end_is_crossing: bool,
}

impl CrossingReport {
    pub fn times(&self) -> Vec<f64> {
        self.crossings.iter().map(|c| c.t).collect()
    }

    pub fn signatures(&self) -> Vec<i32> {
        self.crossings.iter().map(|c| c.signature).collect()
    }
}

const INITIAL_CELLS: usize = 64;
const MIN_WIDTH_LEVELS: i32 = 24;
const MAX_SAMPLES: usize = 400_000;
const CANDIDATE_SIGMA: f64 = 0.2;
const MERGE_GAP: f64 = 1e-9;
const CLUSTER_GAP: f64 = 1e-8;
const KERNEL_TOL: f64 = 1e-6;

struct Sample<const D: usize, const N: usize> {
    t: f64,
    sigma: f64,
    z: SMatrix<f64, D, N>,
}

struct Scanner<'a, const D: usize, const N: usize> {
    path: &'a LagrangianPath<D, N>,
    /// `W Y` for the orthonormalized reference frame `Y`.
    wy: SMatrix<f64, D, N>,
    opts: CrossingOptions,
}

impl<'a, const D: usize, const N: usize> Scanner<'a, D, N> {
    fn new(path: &'a LagrangianPath<D, N>, v: &LagrangianFrame<D, N>, opts: CrossingOptions) -> Result<Self> {
        let (y, pivot) = orthonormalize(v.columns());
        if pivot < 1e-8 {
            return Err(Error::FrameDegenerate { pivot });
        }
        Ok(Scanner { path, wy: omega::<D>() * y, opts })
    }

    fn orth_frame(&self, t: f64) -> SMatrix<f64, D, N> {
        orthonormalize(&self.path.frame(t)).0
    }

    fn pairing(&self, z: &SMatrix<f64, D, N>) -> SMatrix<f64, N, N> {
        z.transpose() * self.wy
    }

    fn sample(&self, t: f64) -> Sample<D, N> {
        let z = self.orth_frame(t);
        Sample { t, sigma: sigma_min_small(&self.pairing(&z)), z }
    }

    fn sigma(&self, t: f64) -> f64 {
        sigma_min_small(&self.pairing(&self.orth_frame(t)))
    }

    /// Adaptive sampling: a cell is accepted once the frame moves little across
    /// it and the singular values at its ends are too large for a zero inside.
    fn samples(&self) -> Result<Vec<Sample<D, N>>> {
        let tt = self.path.t_end();
        let min_width = tt * 2f64.powi(-MIN_WIDTH_LEVELS);
        let mut out = vec![self.sample(0.0)];
        for k in 0..INITIAL_CELLS {
            let b = self.sample(tt * (k + 1) as f64 / INITIAL_CELLS as f64);
            let mut stack = vec![b];
            // depth-first refinement keeps `out` sorted
            while let Some(right) = stack.pop() {
                let left = &out[out.len() - 1];
                let d = (right.z - left.z).norm();
                let width = right.t - left.t;
                let needs = d > 0.1 || left.sigma + right.sigma < 1.5 * d;
                if needs && width > min_width {
                    let mid = self.sample(0.5 * (left.t + right.t));
                    stack.push(right);
                    stack.push(mid);
                } else {
                    out.push(right);
                }
                if out.len() + stack.len() > MAX_SAMPLES {
                    return Err(Error::NoConvergence("crossing scan exceeded its sample budget".into()));
                }
            }
        }
        Ok(out)
    }

    /// Golden-section minimization of the smallest singular value on `[a, b]`.
    fn localize(&self, mut a: f64, mut b: f64) -> (f64, f64) {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = self.sigma(c);
        let mut fd = self.sigma(d);
        while b - a > self.opts.time_tol {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.sigma(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.sigma(d);
            }
        }
        let t = 0.5 * (a + b);
        let candidates = [(t, self.sigma(t)), (a, self.sigma(a)), (b, self.sigma(b))];
        candidates.into_iter().fold((t, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
    }

    fn derivative(&self, t: f64, h: f64) -> SMatrix<f64, D, N> {
        let tt = self.path.t_end();
        if t - h < 0.0 {
            (self.orth_frame(t) * -3.0 + self.orth_frame(t + h) * 4.0 - self.orth_frame(t + 2.0 * h)) / (2.0 * h)
        } else if t + h > tt {
            (self.orth_frame(t) * 3.0 - self.orth_frame(t - h) * 4.0 + self.orth_frame(t - 2.0 * h)) / (2.0 * h)
        } else {
            (self.orth_frame(t + h) - self.orth_frame(t - h)) / (2.0 * h)
        }
    }

    /// Signature and kernel dimension of the crossing form at `t`.
    fn crossing_form(&self, t: f64) -> Result<(i32, usize)> {
        let z = self.orth_frame(t);
        let m = self.pairing(&z);
        let md = DMatrix::from_fn(N, N, |i, j| m[(i, j)]);
        let svd = md.svd(true, false);
        let u = svd.u.as_ref().expect("left singular vectors requested");
        let kernel: Vec<usize> = (0..N).filter(|&i| svd.singular_values[i] <= KERNEL_TOL).collect();
        if kernel.is_empty() {
            return Ok((0, 0));
        }
        let k = DMatrix::from_fn(N, kernel.len(), |i, j| u[(i, kernel[j])]);
        let mut h = self.opts.h;
        let mut worst = 0.0;
        for _ in 0..2 {
            let zd = self.derivative(t, h);
            let full = z.transpose() * omega::<D>() * zd;
            let full = DMatrix::from_fn(N, N, |i, j| 0.5 * (full[(i, j)] + full[(j, i)]));
            let q = k.transpose() * full * &k;
            let eig = q.symmetric_eigenvalues();
            worst = eig.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
            if worst >= self.opts.sig_tol {
                let sig = eig.iter().map(|e| if *e > 0.0 { 1 } else { -1 }).sum();
                return Ok((sig, kernel.len()));
            }
            h /= 10.0;
        }
        Err(Error::DegenerateCrossing { t, min_eig: worst })
    }
}

/// Robbin-Salamon index of `path` relative to `v`, with its crossing report.
pub fn rs_index<const D: usize, const N: usize>(
    path: &LagrangianPath<D, N>,
    v: &LagrangianFrame<D, N>,
) -> Result<(HalfInt, CrossingReport)> {
    rs_index_with(path, v, &CrossingOptions::default())
}

pub fn rs_index_with<const D: usize, const N: usize>(
    path: &LagrangianPath<D, N>,
    v: &LagrangianFrame<D, N>,
    opts: &CrossingOptions,
) -> Result<(HalfInt, CrossingReport)> {
    let tt = path.t_end();
    if !(tt > 0.0 && tt.is_finite()) {
        return Err(Error::InvalidInput(format!("path length must be positive, got {tt}")));
    }
    let sc = Scanner::new(path, v, *opts)?;
    let mut report = CrossingReport::default();

    let start = sc.sigma(0.0) <= opts.crossing_tol;
    let end = sc.sigma(tt) <= opts.crossing_tol;
    let mut found: Vec<f64> = Vec::new();
    if start {
        found.push(0.0);
    }
    // the start is checked first so that stationary paths fail fast
    let start_form = if start { Some(sc.crossing_form(0.0)?) } else { None };

    let samples = sc.samples()?;
    let n = samples.len();
    for i in 0..n {
        let s = samples[i].sigma;
        if s >= CANDIDATE_SIGMA {
            continue;
        }
        let left_ok = i == 0 || samples[i - 1].sigma >= s;
        let right_ok = i + 1 == n || samples[i + 1].sigma >= s;
        if !(left_ok && right_ok) {
            continue;
        }
        let a = samples[i.saturating_sub(1)].t;
        let b = samples[(i + 1).min(n - 1)].t;
        let (t, sigma) = sc.localize(a, b);
        if sigma <= opts.crossing_tol {
            found.push(t);
        }
    }
    if end {
        found.push(tt);
    }
    found.sort_by(f64::total_cmp);

    // merge duplicates; snap to the endpoints
    let mut merged: Vec<f64> = Vec::new();
    for t in found {
        let t = if start && t < MERGE_GAP {
            0.0
        } else if end && tt - t < MERGE_GAP {
            tt
        } else {
            t
        };
        match merged.last() {
            Some(&prev) if t - prev < MERGE_GAP => {
                if t == 0.0 || t == tt {
                    *merged.last_mut().unwrap() = t;
                }
            }
            Some(&prev) if t - prev < CLUSTER_GAP => {
                return Err(Error::CrossingClusterTooDense { t1: prev, t2: t });
            }
            _ => merged.push(t),
        }
    }

    let mut twice = 0i64;
    for &t in &merged {
        let (signature, dim) = if t == 0.0 { start_form.unwrap_or((0, 0)) } else { sc.crossing_form(t)? };
        if dim == 0 {
            continue;
        }
        let endpoint = t == 0.0 || t == tt;
        twice += if endpoint { signature as i64 } else { 2 * signature as i64 };
        report.crossings.push(Crossing { t, signature, dim });
    }
    report.start_is_crossing = report.crossings.first().is_some_and(|c| c.t == 0.0);
    report.end_is_crossing = report.crossings.last().is_some_and(|c| c.t == tt);
    Ok((HalfInt::from_twice(twice), report))
}

/// `|det(Psi(T) - 1)|` for a 2x2 symplectic matrix is `|2 - tr|`.
pub fn degeneracy(psi_t: &Mat2) -> f64 {
    (Mat2::identity() - psi_t).determinant().abs()
}

/// Conley-Zehnder index of a nondegenerate path with `Psi(0) = 1`, as the
/// Robbin-Salamon index of the anti-graph relative to the anti-diagonal.
pub fn cz_index(psi: &SymplecticPath) -> Result<(HalfInt, CrossingReport)> {
    cz_index_with(psi, &CrossingOptions::default())
}

pub fn cz_index_with(psi: &SymplecticPath, opts: &CrossingOptions) -> Result<(HalfInt, CrossingReport)> {
    let d0 = (psi.eval(0.0) - Mat2::identity()).abs().max();
    if d0 > 1e-9 {
        return Err(Error::InvalidInput(format!("Psi(0) differs from identity by {d0:.3e}")));
    }
    let det = degeneracy(&psi.eval(psi.t_end()));
    if det < 1e-8 {
        return Err(Error::DegeneratePath { det });
    }
    rs_index_with(&PlanePath::antigraph(psi), &PlaneFrame::antidiagonal(), opts)
}

/// `mu_RS(Psi R, R)` over the whole domain of `psi`.
pub fn rs_real(psi: &SymplecticPath) -> Result<HalfInt> {
    Ok(rs_index(&LinePath::image(psi, &LineFrame::real()), &LineFrame::real())?.0)
}

/// `mu_RS(Psi iR, iR)` over the whole domain of `psi`.
pub fn rs_imaginary(psi: &SymplecticPath) -> Result<HalfInt> {
    Ok(rs_index(&LinePath::image(psi, &LineFrame::imaginary()), &LineFrame::imaginary())?.0)
}

/// Checks that `Psi(end) L ∩ L = 0` for `L = R` and `L = iR`.
pub fn check_boundary_pairs(psi_end: &Mat2) -> Result<()> {
    for (which, l) in [("real", LineFrame::real()), ("imaginary", LineFrame::imaginary())] {
        let image = LineFrame::from_vector(psi_end * l.columns());
        if lagrangian_intersection_dim(&image, &l, RANK_TOL)? > 0 {
            return Err(Error::DegeneratePair { which });
        }
    }
    Ok(())
}

/// `mu_RS(Psi R, R) - mu_RS(Psi iR, iR)` for a path on `[0, T/2]`.
pub fn hormander_index(psi_half: &SymplecticPath) -> Result<HalfInt> {
    check_boundary_pairs(&psi_half.eval(psi_half.t_end()))?;
    Ok(rs_real(psi_half)? - rs_imaginary(psi_half)?)
}

/// Outcome counts of one checked property.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PropertyTally {
    pub name: String,
    pub checked: usize,
    pub passed: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl PropertyTally {
    fn new(name: &str) -> Self {
        PropertyTally { name: name.to_string(), ..Default::default() }
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.checked
    }

    /// Folds one instance outcome: `Ok(true)` pass, `Ok(false)` fail with
    /// `detail`, `Err` skipped.
    pub fn record(&mut self, outcome: Result<bool>, detail: impl FnOnce() -> String) {
        match outcome {
            Ok(true) => {
                self.checked += 1;
                self.passed += 1;
            }
            Ok(false) => {
                self.checked += 1;
                self.failures.push(detail());
            }
            Err(_) => self.skipped += 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub properties: Vec<PropertyTally>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(PropertyTally::all_passed)
    }
}

/// `t -> exp(phi(t) J0) V` with `phi(t) = a t + b sin(2 pi j t / T)`.
fn wobbly_line(a: f64, b: f64, j: f64, t_end: f64, v: LineFrame) -> LinePath {
    let col = *v.columns();
    LagrangianPath::new(t_end, move |t| {
        rotation(a * t + b * (2.0 * std::f64::consts::PI * j * t / t_end).sin()) * col
    })
}

/// Generates `count` instances per property from `seed` and checks the
/// Maslov, reversal, naturality, homotopy and catenation properties.
/// Instances with degenerate crossings are skipped and counted.
pub fn verify_rs_axioms(seed: u64, count: usize) -> AxiomReport {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    #[derive(Clone, Copy)]
    struct Draw {
        k: i32,
        b: f64,
        j: f64,
        t_end: f64,
        v0: f64,
        vs: [f64; 3],
        gamma: (f64, f64),
        phi: f64,
        split: f64,
    }
    let draws: Vec<Draw> = (0..count)
        .map(|_| {
            let mut k = rng.gen_range(-3..=3);
            if k == 0 {
                k = 1;
            }
            Draw {
                k,
                b: rng.gen_range(-0.6..0.6),
                j: rng.gen_range(1..=3) as f64,
                t_end: rng.gen_range(0.5..2.0),
                v0: rng.gen_range(0.0..PI),
                vs: [rng.gen_range(0.05..3.09), rng.gen_range(0.05..3.09), rng.gen_range(0.05..3.09)],
                gamma: (rng.gen_range(-4.0..4.0), rng.gen_range(-1.0..1.0)),
                phi: rng.gen_range(-0.9..0.9),
                split: rng.gen_range(0.2..0.8),
            }
        })
        .collect();

    let outcomes = par_map(draws, |d| {
        let t_end = d.t_end;
        let k = d.k as f64;
        // a loop of lines winding k half-turns
        let lp = wobbly_line(k * PI / t_end, d.b, d.j, t_end, LineFrame::line(d.v0));
        let maslov = (|| {
            let reference = rs_index(&lp, &LineFrame::real())?.0;
            let mut same = true;
            for &a in &d.vs {
                same &= rs_index(&lp, &LineFrame::line(a))?.0 == reference;
            }
            Ok(same && reference == HalfInt::from_int(d.k as i64))
        })();

        // a non-closed path
        let open = wobbly_line(k * 1.3 / t_end, d.b, d.j, t_end, LineFrame::line(d.v0));
        let v = LineFrame::line(d.vs[0]);
        let reversal = (|| {
            let fwd = rs_index(&open, &v)?.0;
            let bwd = rs_index(&open.reversed(), &v)?.0;
            Ok(fwd == -bwd)
        })();

        let (a, b) = d.gamma;
        let gamma = move |t: f64| rotation(a * t) * Mat2::new((b * t).exp(), 0.0, 0.0, (-b * t).exp());
        let v1 = LineFrame::line(d.vs[1]);
        let v2 = LineFrame::line(d.vs[2]);
        let naturality = (|| {
            let lhs = rs_index(&LinePath::constant(*v1.columns(), t_end).transformed(gamma), &v2)?.0;
            let rhs = rs_index(
                &LinePath::constant(*v2.columns(), t_end).transformed(move |t| symplectic_inverse(&gamma(t))),
                &v1,
            )?
            .0;
            // an antisymplectic path G I has G I ... inverse I G^{-1}
            let anti = move |t: f64| gamma(t) * conj();
            let lhs_a = rs_index(&LinePath::constant(*v1.columns(), t_end).transformed(anti), &v2)?.0;
            let rhs_a = rs_index(
                &LinePath::constant(*v2.columns(), t_end).transformed(move |t| conj() * symplectic_inverse(&gamma(t))),
                &v1,
            )?
            .0;
            Ok(lhs == -rhs && lhs_a == rhs_a)
        })();

        let phi = d.phi;
        let homotopy = (|| {
            let base = rs_index(&open, &v)?.0;
            let re = open.reparametrized(move |s| s + phi * (2.0 * PI * s).sin() / (2.0 * PI));
            let same_ends = {
                let o = open.clone();
                LagrangianPath::new(t_end, move |t| {
                    rotation(phi * (PI * t / t_end).sin() * (PI * t / t_end).sin()) * o.frame(t)
                })
            };
            Ok(rs_index(&re, &v)?.0 == base && rs_index(&same_ends, &v)?.0 == base)
        })();

        let catenation = (|| {
            let tau = d.split * t_end;
            let whole = rs_index(&open, &v)?;
            if whole.1.crossings.iter().any(|c| (c.t - tau).abs() < 1e-6) {
                return Err(Error::DegenerateCrossing { t: tau, min_eig: 0.0 });
            }
            let first = rs_index(&open.segment(0.0, tau), &v)?.0;
            let second = rs_index(&open.segment(tau, t_end), &v)?.0;
            let sum2d = first + second == whole.0;
            // the same on an anti-graph path in R^4
            let psi = SymplecticPath::new(t_end, move |t| gamma(t) * rotation(2.0 * t));
            let g = PlanePath::antigraph(&psi);
            let dbar = PlaneFrame::antidiagonal();
            let whole4 = rs_index(&g, &dbar)?.0;
            let parts4 = rs_index(&g.segment(0.0, tau), &dbar)?.0 + rs_index(&g.segment(tau, t_end), &dbar)?.0;
            Ok(sum2d && whole4 == parts4)
        })();
        [maslov, reversal, naturality, homotopy, catenation]
    });

    let names = ["maslov", "reversal", "naturality", "homotopy", "catenation"];
    let mut tallies: Vec<PropertyTally> = names.iter().map(|n| PropertyTally::new(n)).collect();
    for (idx, row) in outcomes.into_iter().enumerate() {
        for (tally, outcome) in tallies.iter_mut().zip(row) {
            tally.record(outcome, || format!("instance {idx}"));
        }
    }
    AxiomReport { properties: tallies }
}

/// Result of checking the two loop identities on one instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopReport {
    /// `mu_RS(Gamma Lambda, V)`.
    pub product: HalfInt,
    /// `mu_RS(Lambda, V)`.
    pub path: HalfInt,
    /// `mu_RS(Gamma V, V)`.
    pub loop_index: HalfInt,
    /// `mu_RS(Gamma_1 V, V)` on the first half, when the halving identity applies.
    pub half_loop_index: Option<HalfInt>,
    pub product_identity_holds: bool,
    pub halving_identity_holds: Option<bool>,
}

fn lines_equal(a: &SMatrix<f64, 2, 1>, b: &SMatrix<f64, 2, 1>) -> bool {
    let (a, b) = (a.normalize(), b.normalize());
    (a[0] * b[1] - a[1] * b[0]).abs() <= 1e-9
}

/// Index of `t -> Gamma(t) V` relative to `V`; a path that never leaves `V`
/// has index 0.
fn loop_rs(gamma: &SymplecticPath, v: &LineFrame) -> Result<HalfInt> {
    let path = LinePath::image(gamma, v);
    let stationary = (0..=64).all(|k| lines_equal(&path.frame(gamma.t_end() * k as f64 / 64.0), v.columns()));
    if stationary {
        return Ok(HalfInt::ZERO);
    }
    Ok(rs_index(&path, v)?.0)
}

/// Checks `mu(Gamma Lambda, V) = mu(Lambda, V) + mu(Gamma V, V)` and, when
/// `I_V Gamma(t) I_V = Gamma(T - t)` for the reflection `I_V` fixing `V`,
/// `mu(Gamma V, V) = 2 mu(Gamma_1 V, V)`.
pub fn verify_loop_props(gamma: &SymplecticPath, lambda: &LinePath, v: &LineFrame) -> Result<LoopReport> {
    let tt = gamma.t_end();
    if (lambda.t_end() - tt).abs() > 1e-12 {
        return Err(Error::PreconditionViolated("Gamma and Lambda must share their interval".into()));
    }
    let vc = *v.columns();
    if !lines_equal(&lambda.frame(0.0), &vc) {
        return Err(Error::PreconditionViolated("Lambda(0) = V".into()));
    }
    if !lines_equal(&(gamma.eval(0.0) * vc), &vc) {
        return Err(Error::PreconditionViolated("Gamma(0) V = V".into()));
    }
    if !lines_equal(&(gamma.eval(tt) * vc), &vc) {
        return Err(Error::PreconditionViolated("Gamma(T) V = V".into()));
    }
    let end = lambda.frame(tt);
    if !lines_equal(&(gamma.eval(0.0) * end), &end) {
        return Err(Error::PreconditionViolated("Gamma(0) Lambda(T) = Lambda(T)".into()));
    }
    let product_path = {
        let g = gamma.clone();
        lambda.transformed(move |t| g.eval(t))
    };
    let product = rs_index(&product_path, v)?.0;
    let path = rs_index(lambda, v)?.0;
    let loop_index = loop_rs(gamma, v)?;

    // reflection fixing V: R I R^{-1} with R rotating R onto V
    let angle = vc[1].atan2(vc[0]);
    let iv = rotation(angle) * conj() * rotation(-angle);
    let reflected = (0..=64).all(|k| {
        let t = tt * k as f64 / 64.0;
        (iv * gamma.eval(t) * iv - gamma.eval(tt - t)).abs().max() <= 1e-9
    });
    let (half_loop_index, halving_identity_holds) = if reflected {
        let h = loop_rs(&gamma.restrict(0.5 * tt), v)?;
        (Some(h), Some(loop_index == h * 2))
    } else {
        (None, None)
    };
    Ok(LoopReport {
        product,
        path,
        loop_index,
        half_loop_index,
        product_identity_holds: product == path + loop_index,
        halving_identity_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn quarter_turn() -> LinePath {
        LinePath::rotation_line(0.0, PI / 4.0, &LineFrame::real())
    }

    #[test]
    fn quarter_turn_is_one_half() {
        let (mu, rep) = rs_index(&quarter_turn(), &LineFrame::real()).unwrap();
        assert_eq!(mu, HalfInt::from_twice(1));
        assert_eq!(rep.times(), vec![0.0]);
        assert_eq!(rep.signatures(), vec![1]);
        assert!(rep.start_is_crossing && !rep.end_is_crossing);
    }

    #[test]
    fn constant_path_is_rejected() {
        let p = LinePath::constant(*LineFrame::real().columns(), 1.0);
        assert_eq!(rs_index(&p, &LineFrame::real()).unwrap_err().name(), "DegenerateCrossing");
    }

    #[test]
    fn half_turn_loop_is_one() {
        let p = LinePath::rotation_line(0.0, PI, &LineFrame::real());
        let (mu, rep) = rs_index(&p, &LineFrame::real()).unwrap();
        assert_eq!(mu, HalfInt::from_int(1));
        assert!(rep.start_is_crossing && rep.end_is_crossing);
        let (mu2, _) = rs_index(&p, &LineFrame::line(0.7)).unwrap();
        assert_eq!(mu2, HalfInt::from_int(1));
    }

    #[test]
    fn reversed_quarter_turn() {
        let (mu, _) = rs_index(&quarter_turn().reversed(), &LineFrame::real()).unwrap();
        assert_eq!(mu, HalfInt::from_twice(-1));
    }

    #[test]
    fn catenation_of_half_turns() {
        let a = LinePath::rotation_line(0.0, PI / 2.0, &LineFrame::real());
        let b = LinePath::rotation_line(PI / 2.0, PI, &LineFrame::real());
        let ia = rs_index(&a, &LineFrame::real()).unwrap().0;
        let ib = rs_index(&b, &LineFrame::real()).unwrap().0;
        let iab = rs_index(&a.then(&b), &LineFrame::real()).unwrap().0;
        assert_eq!(ia + ib, iab);
        assert_eq!(iab, HalfInt::from_int(1));
    }

    #[test]
    fn cz_examples() {
        let (mu, rep) = cz_index(&SymplecticPath::rotation(3.0 * PI, 1.0)).unwrap();
        assert_eq!(mu, HalfInt::from_int(3));
        assert_eq!(rep.signatures(), vec![2, 2]);
        assert!((rep.crossings[1].t - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(rep.crossings[1].dim, 2);

        assert_eq!(cz_index(&SymplecticPath::rotation(0.5, 1.0)).unwrap().0, HalfInt::from_int(1));

        let (mu, rep) = cz_index(&SymplecticPath::hyperbolic(1.0, 0.0, 1.0)).unwrap();
        assert_eq!(mu, HalfInt::ZERO);
        assert_eq!(rep.signatures(), vec![0]);
    }

    #[test]
    fn cz_sweep() {
        for c in [0.3, 1.0, 3.0, 6.4, 9.5, 12.7] {
            let expected = 2 * (c / (2.0 * PI)).floor() as i64 + 1;
            assert_eq!(cz_index(&SymplecticPath::rotation(c, 1.0)).unwrap().0, HalfInt::from_int(expected), "c = {c}");
        }
    }

    #[test]
    fn cz_rejects_full_turn() {
        let err = cz_index(&SymplecticPath::rotation(2.0 * PI, 1.0)).unwrap_err();
        assert_eq!(err.name(), "DegeneratePath");
    }

    #[test]
    fn hormander_examples() {
        assert_eq!(hormander_index(&SymplecticPath::rotation(1.3, 1.0)).unwrap(), HalfInt::ZERO);
        let v = hormander_index(&SymplecticPath::hyperbolic(1.0, 0.1, 0.5)).unwrap();
        assert!(v.twice().abs() <= 2);
        // frozen value of the direct computation: both boundary indices are 1/2
        assert_eq!(v, HalfInt::ZERO);
    }

    #[test]
    fn loop_props_examples() {
        let gamma = SymplecticPath::rotation(2.0 * PI, 1.0);
        let lambda = LinePath::new(1.0, |t| rotation(0.25 * t) * LineFrame::real().columns());
        let r = verify_loop_props(&gamma, &lambda, &LineFrame::real()).unwrap();
        assert!(r.product_identity_holds);
        assert_eq!(r.product, HalfInt::from_twice(5));
        assert_eq!(r.loop_index, HalfInt::from_int(2));
        assert_eq!(r.half_loop_index, Some(HalfInt::from_int(1)));
        assert_eq!(r.halving_identity_holds, Some(true));

        let id = SymplecticPath::new(1.0, |_| Mat2::identity());
        let r = verify_loop_props(&id, &lambda, &LineFrame::real()).unwrap();
        assert_eq!(r.loop_index, HalfInt::ZERO);
        assert_eq!(r.product, r.path);
    }

    #[test]
    fn loop_props_precondition() {
        let gamma = SymplecticPath::rotation(1.0, 1.0);
        let lambda = LinePath::rotation_line(0.0, 1.0, &LineFrame::real());
        let err = verify_loop_props(&gamma, &lambda, &LineFrame::real()).unwrap_err();
        assert_eq!(err.name(), "PreconditionViolated");
        assert!(err.to_string().contains("Gamma(T) V = V"));
    }

    #[test]
    fn crossings_agree_with_intersection_dimension() {
        let psi = SymplecticPath::new(2.0, |t| rotation(5.0 * t) * Mat2::new(1.0, 0.3 * t, 0.0, 1.0));
        let g = PlanePath::antigraph(&psi);
        let (_, rep) = rs_index(&g, &PlaneFrame::antidiagonal()).unwrap();
        for c in &rep.crossings {
            let f = LagrangianFrame::new_unchecked(g.frame(c.t));
            let dim = lagrangian_intersection_dim(&f, &PlaneFrame::antidiagonal(), 1e-6).unwrap();
            assert_eq!(dim, c.dim, "t = {}", c.t);
        }
    }

    #[test]
    fn axioms_hold_on_generated_suite() {
        let rep = verify_rs_axioms(11, 12);
        for p in &rep.properties {
            assert!(p.all_passed(), "{p:?}");
            assert!(p.checked >= 8, "{p:?}");
        }
    }
}
