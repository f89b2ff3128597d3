//! Starshaped hypersurfaces `M = F^{-1}(1)` in `C^2 = R^4`, coordinates
//! `(x1, y1, x2, y2)`, with `omega = dx1^dy1 + dx2^dy2`, Liouville field
//! `L = p/2`, contact form `lambda = i_L omega` and the involution
//! `rho(z1, z2) = (conj z1, conj z2)`. Provides the Reeb flow, symmetric
//! periodic orbits, symmetric trivializations of `xi = ker lambda` and the
//! trivialized linearized flow.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Complex, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{HalfInt, Mat2, Mat4, Vec4};
use crate::maslov::{cz_index, rs_real};
use crate::ode::{integrate, OdeOptions, Trajectory};
use crate::par::par_map;
use crate::paths::SymplecticPath;
use crate::spectral::{
    cz_iteration_implications, iteration_implications, mu_i, mu_spec, BoundarySymmetricPath, Coefficients, SymmetricLoop,
    Table,
};

/// Tolerance for `|F(p) - 1|` on inputs.
pub const SURFACE_TOL: f64 = 1e-9;
/// Orbits with a transverse Floquet multiplier this close to 1 are degenerate.
pub const FLOQUET_BAND: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    /// Exponents of `(x1, y1, x2, y2)`.
    pub powers: [u32; 4],
    pub coeff: f64,
}

fn default_true() -> bool {
    true
}

/// Surface description as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SurfaceSpec {
    Ellipsoid {
        r: [f64; 2],
        #[serde(default = "default_true")]
        symmetric: bool,
    },
    Polynomial {
        monomials: Vec<Monomial>,
        #[serde(default = "default_true")]
        symmetric: bool,
    },
}

/// A validated starshaped level set `F = 1` of a polynomial.
#[derive(Clone, Debug)]
pub struct Surface {
    spec: SurfaceSpec,
    terms: Vec<Monomial>,
    symmetric: bool,
}

pub fn rho(p: &Vec4) -> Vec4 {
    Vec4::new(p[0], -p[1], p[2], -p[3])
}

/// Multiplication by `i` on each complex coordinate.
pub fn j4(v: &Vec4) -> Vec4 {
    Vec4::new(-v[1], v[0], -v[3], v[2])
}

/// `omega(u, v)`.
pub fn omega(u: &Vec4, v: &Vec4) -> f64 {
    u[0] * v[1] - u[1] * v[0] + u[2] * v[3] - u[3] * v[2]
}

/// `lambda_p(v) = omega(p/2, v)`.
pub fn liouville_form(p: &Vec4, v: &Vec4) -> f64 {
    0.5 * omega(p, v)
}

fn ipow(x: f64, n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(n as i32),
    }
}

impl Surface {
    pub fn from_spec(spec: SurfaceSpec) -> Result<Self> {
        let (terms, symmetric) = match &spec {
            SurfaceSpec::Ellipsoid { r, symmetric } => {
                if !(r[0] > 0.0 && r[1] > 0.0 && r[0].is_finite() && r[1].is_finite()) {
                    return Err(Error::InvalidInput(format!("ellipsoid radii must be positive, got {r:?}")));
                }
                let mut t = vec![];
                for (j, rj) in r.iter().enumerate() {
                    for k in 0..2 {
                        let mut powers = [0; 4];
                        powers[2 * j + k] = 2;
                        t.push(Monomial { powers, coeff: 1.0 / (rj * rj) });
                    }
                }
                (t, *symmetric)
            }
            SurfaceSpec::Polynomial { monomials, symmetric } => {
                if monomials.is_empty() {
                    return Err(Error::InvalidInput("polynomial surface has no monomials".into()));
                }
                (monomials.clone(), *symmetric)
            }
        };
        let s = Surface { spec, terms, symmetric };
        s.validate()?;
        Ok(s)
    }

    pub fn ellipsoid(r1: f64, r2: f64) -> Result<Self> {
        Surface::from_spec(SurfaceSpec::Ellipsoid { r: [r1, r2], symmetric: true })
    }

    /// `|z1|^2/r1^2 + |z2|^2/r2^2 + eps x1^2 x2^2`.
    pub fn perturbed_ellipsoid(r1: f64, r2: f64, eps: f64) -> Result<Self> {
        let mut monomials = vec![];
        for (j, rj) in [r1, r2].iter().enumerate() {
            for k in 0..2 {
                let mut powers = [0; 4];
                powers[2 * j + k] = 2;
                monomials.push(Monomial { powers, coeff: 1.0 / (rj * rj) });
            }
        }
        monomials.push(Monomial { powers: [2, 0, 2, 0], coeff: eps });
        Surface::from_spec(SurfaceSpec::Polynomial { monomials, symmetric: true })
    }

    pub fn spec(&self) -> &SurfaceSpec {
        &self.spec
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Ellipsoid radii, if the surface is one.
    pub fn ellipsoid_radii(&self) -> Option<(f64, f64)> {
        match self.spec {
            SurfaceSpec::Ellipsoid { r, .. } => Some((r[0], r[1])),
            _ => None,
        }
    }

    /// Distances from the origin to `M` along the `x1` and `x2` axes.
    pub fn axis_radii(&self) -> Result<(f64, f64)> {
        let a = self.project(&Vec4::new(1.0, 0.0, 0.0, 0.0))?;
        let b = self.project(&Vec4::new(0.0, 0.0, 1.0, 0.0))?;
        Ok((a.norm(), b.norm()))
    }

    pub fn f(&self, p: &Vec4) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coeff * (0..4).map(|i| ipow(p[i], m.powers[i])).product::<f64>())
            .sum()
    }

    pub fn grad(&self, p: &Vec4) -> Vec4 {
        let mut g = Vec4::zeros();
        for m in &self.terms {
            for i in 0..4 {
                if m.powers[i] == 0 {
                    continue;
                }
                let mut v = m.coeff * m.powers[i] as f64;
                for k in 0..4 {
                    let e = if k == i { m.powers[k] - 1 } else { m.powers[k] };
                    v *= ipow(p[k], e);
                }
                g[i] += v;
            }
        }
        g
    }

    pub fn hessian(&self, p: &Vec4) -> Mat4 {
        let mut h = Mat4::zeros();
        for m in &self.terms {
            for i in 0..4 {
                for j in i..4 {
                    let mut e = m.powers;
                    let mut c = m.coeff;
                    if e[i] == 0 {
                        continue;
                    }
                    c *= e[i] as f64;
                    e[i] -= 1;
                    if e[j] == 0 {
                        continue;
                    }
                    c *= e[j] as f64;
                    e[j] -= 1;
                    let v = c * (0..4).map(|k| ipow(p[k], e[k])).product::<f64>();
                    h[(i, j)] += v;
                    if i != j {
                        h[(j, i)] += v;
                    }
                }
            }
        }
        h
    }

    /// `dF(L) = p . grad F / 2`, which is also `lambda(X_F)`.
    pub fn liouville_pairing(&self, p: &Vec4) -> f64 {
        0.5 * p.dot(&self.grad(p))
    }

    /// The point of `M` on the ray through `p`.
    pub fn project(&self, p: &Vec4) -> Result<Vec4> {
        let n = p.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidInput("cannot project the origin".into()));
        }
        let u = p / n;
        let f0 = self.f(&u);
        let mut k = if f0 > 0.0 { 1.0 / f0.sqrt() } else { 1.0 };
        for _ in 0..100 {
            let q = u * k;
            let r = self.f(&q) - 1.0;
            if r.abs() <= 1e-15 {
                return Ok(q);
            }
            let d = u.dot(&self.grad(&q));
            if d <= 0.0 {
                return Err(Error::NotStarshaped { value: 0.5 * k * d });
            }
            let mut next = k - r / d;
            if next <= 0.0 {
                next = 0.5 * k;
            }
            if (next - k).abs() <= 1e-16 * k {
                return Ok(u * next);
            }
            k = next;
        }
        let q = u * k;
        if (self.f(&q) - 1.0).abs() <= 1e-12 {
            return Ok(q);
        }
        Err(Error::NoConvergence("projection onto the surface did not converge".into()))
    }

    /// Points of `M` over a 32^3 grid of directions on `S^3`.
    pub fn probe_points(&self) -> Result<Vec<Vec4>> {
        let n = 32;
        let mut out = Vec::with_capacity(n * n * n);
        for a in 0..n {
            let eta = (a as f64 + 0.5) / n as f64 * 0.5 * PI;
            for b in 0..n {
                let t1 = 2.0 * PI * b as f64 / n as f64;
                for c in 0..n {
                    let t2 = 2.0 * PI * (c as f64 + 0.25) / n as f64;
                    let u = Vec4::new(eta.cos() * t1.cos(), eta.cos() * t1.sin(), eta.sin() * t2.cos(), eta.sin() * t2.sin());
                    out.push(self.project(&u)?);
                }
            }
        }
        Ok(out)
    }

    /// Smallest `dF(L)` over the probe points.
    pub fn starshaped_margin(&self) -> Result<f64> {
        Ok(self.probe_points()?.iter().map(|p| self.liouville_pairing(p)).fold(f64::INFINITY, f64::min))
    }

    /// Largest `|F(rho p) - F(p)|` over the probe directions.
    pub fn rho_residual(&self) -> Result<f64> {
        Ok(self.probe_points()?.iter().map(|p| (self.f(&rho(p)) - self.f(p)).abs()).fold(0.0, f64::max))
    }

    fn validate(&self) -> Result<()> {
        let margin = self.starshaped_margin()?;
        if margin <= 0.0 {
            return Err(Error::NotStarshaped { value: margin });
        }
        if self.symmetric {
            let residual = self.rho_residual()?;
            if residual > 1e-12 {
                return Err(Error::SymmetryViolated { residual });
            }
        }
        Ok(())
    }

    pub fn check_on_surface(&self, p: &Vec4) -> Result<()> {
        let residual = (self.f(p) - 1.0).abs();
        if residual > SURFACE_TOL {
            return Err(Error::NotOnSurface { residual });
        }
        Ok(())
    }

    /// `X = X_F / lambda(X_F)` without the on-surface check.
    pub fn reeb_unchecked(&self, p: &Vec4) -> Vec4 {
        let g = self.grad(p);
        j4(&g) / (0.5 * p.dot(&g))
    }

    /// The Reeb vector field at a point of `M`.
    pub fn reeb_field(&self, p: &Vec4) -> Result<Vec4> {
        self.check_on_surface(p)?;
        let value = self.liouville_pairing(p);
        if value.abs() < 1e-10 {
            return Err(Error::VanishingPairing { value });
        }
        Ok(self.reeb_unchecked(p))
    }

    /// Jacobian of `X` at `p`.
    pub fn reeb_jacobian(&self, p: &Vec4) -> Mat4 {
        let g = self.grad(p);
        let h = self.hessian(p);
        let l = 0.5 * p.dot(&g);
        let dl = (g + h * p) * 0.5;
        let mut jm = Mat4::zeros();
        for c in 0..4 {
            let col = j4(&h.column(c).into_owned());
            jm.set_column(c, &col);
        }
        jm / l - j4(&g) * dl.transpose() / (l * l)
    }

    /// `phi^t(p)` with projection back to `M` after every step.
    pub fn flow(&self, p: &Vec4, t: f64) -> Result<Vec4> {
        self.check_on_surface(p)?;
        self.flow_unchecked(p, t, &mut |_, _| {})
    }

    fn flow_unchecked(&self, p: &Vec4, t: f64, observe: &mut dyn FnMut(f64, &[f64; 4])) -> Result<Vec4> {
        let rhs = |_t: f64, y: &[f64; 4]| {
            let x = self.reeb_unchecked(&Vec4::from(*y));
            [x[0], x[1], x[2], x[3]]
        };
        let proj = |y: &mut [f64; 4]| {
            if let Ok(q) = self.project(&Vec4::from(*y)) {
                *y = [q[0], q[1], q[2], q[3]];
            }
        };
        let y = integrate(&rhs, 0.0, [p[0], p[1], p[2], p[3]], t, &OdeOptions::default(), Some(&proj), observe)?;
        Ok(Vec4::from(y))
    }

    /// `phi^t(p)` reporting every accepted step to `observe`.
    pub fn flow_observed(&self, p: &Vec4, t: f64, observe: &mut dyn FnMut(f64, &[f64; 4])) -> Result<Vec4> {
        self.check_on_surface(p)?;
        self.flow_unchecked(p, t, observe)
    }

    /// The point of `Fix rho ∩ M` at angle `s` in the `(x1, x2)` plane.
    pub fn fixed_locus_point(&self, s: f64) -> Result<Vec4> {
        self.project(&Vec4::new(s.cos(), 0.0, s.sin(), 0.0))
    }
}

/// A periodic Reeb orbit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReebOrbit {
    pub start: [f64; 4],
    pub period: f64,
    pub symmetric: bool,
    /// `|phi^T(start) - start|`.
    pub residual: f64,
    /// `phi^{T/2}(start)`; on `Fix rho` for symmetric orbits.
    pub midpoint: [f64; 4],
    /// Distance of the transverse Floquet multipliers to 1, if computed.
    pub floquet_distance: Option<f64>,
    pub degenerate: Option<bool>,
}

impl ReebOrbit {
    pub fn start_vec(&self) -> Vec4 {
        Vec4::from(self.start)
    }

    /// Builds an orbit record from a start point and period, measuring the
    /// closing residual.
    pub fn from_start(surface: &Surface, start: Vec4, period: f64, symmetric: bool) -> Result<Self> {
        surface.check_on_surface(&start)?;
        let mid = surface.flow(&start, 0.5 * period)?;
        let end = surface.flow(&mid, 0.5 * period)?;
        let residual = (end - start).norm();
        if symmetric {
            let off = start[1].abs().max(start[3].abs()).max(mid[1].abs()).max(mid[3].abs());
            if off > 1e-7 {
                return Err(Error::SymmetryViolated { residual: off });
            }
        }
        Ok(ReebOrbit {
            start: [start[0], start[1], start[2], start[3]],
            period,
            symmetric,
            residual,
            midpoint: [mid[0], mid[1], mid[2], mid[3]],
            floquet_distance: None,
            degenerate: None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitSearch {
    /// Seeds along `Fix rho ∩ M`.
    pub angle_seeds: usize,
    /// Seeds in the half period.
    pub time_seeds: usize,
    /// Only orbits with period below this are reported.
    pub period_cap: f64,
}

impl Default for OrbitSearch {
    fn default() -> Self {
        OrbitSearch { angle_seeds: 24, time_seeds: 24, period_cap: 6.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSearchReport {
    pub orbits: Vec<ReebOrbit>,
    pub seeds: usize,
    pub failed_seeds: usize,
}

/// `(y1, y2)` of `phi^tau(p(s))`.
fn shooting_residual(surface: &Surface, s: f64, tau: f64) -> Result<(nalgebra::Vector2<f64>, Vec4)> {
    let p = surface.fixed_locus_point(s)?;
    let q = surface.flow_unchecked(&p, tau, &mut |_, _| {})?;
    Ok((nalgebra::Vector2::new(q[1], q[3]), q))
}

fn newton_shoot(surface: &Surface, mut s: f64, mut tau: f64, tau_min: f64, tau_max: f64) -> Result<(f64, f64)> {
    let (mut r, mut q) = shooting_residual(surface, s, tau)?;
    for _ in 0..40 {
        if r.norm() <= 1e-12 {
            return Ok((s, tau));
        }
        let hs = 1e-6;
        let (rp, _) = shooting_residual(surface, s + hs, tau)?;
        let (rm, _) = shooting_residual(surface, s - hs, tau)?;
        let ds = (rp - rm) / (2.0 * hs);
        let x = surface.reeb_unchecked(&q);
        let dt = nalgebra::Vector2::new(x[1], x[3]);
        let jac = Matrix2::from_columns(&[ds, dt]);
        let step = jac
            .svd(true, true)
            .solve(&r, 1e-10 * jac.norm())
            .map_err(|e| Error::NoConvergence(format!("shooting Jacobian: {e}")))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let (s1, t1) = (s - lambda * step[0], tau - lambda * step[1]);
            if t1 > tau_min && t1 < tau_max {
                let (r1, q1) = shooting_residual(surface, s1, t1)?;
                if r1.norm() < r.norm() {
                    s = s1;
                    tau = t1;
                    r = r1;
                    q = q1;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.norm() <= 1e-10 {
        Ok((s, tau))
    } else {
        Err(Error::NoConvergence(format!("shooting residual {:.3e}", r.norm())))
    }
}

/// Symmetric periodic orbits with period below the cap: shoots from
/// `Fix rho ∩ M` for a half period `tau` back onto `Fix rho`, so `T = 2 tau`.
/// Orbits are sorted by period; multiple covers and repeated hits of the same
/// orbit are dropped.
pub fn find_symmetric_orbits(surface: &Surface, search: &OrbitSearch) -> Result<OrbitSearchReport> {
    if !surface.is_symmetric() {
        return Err(Error::PreconditionViolated("surface is not flagged rho-invariant".into()));
    }
    let na = search.angle_seeds.max(4);
    let nt = search.time_seeds.max(4);
    let tau_max = 0.5 * search.period_cap;
    let tau_min = 0.02 * tau_max;
    let grid: Vec<(usize, usize)> = (0..na).flat_map(|i| (0..nt).map(move |j| (i, j))).collect();
    let angle = |i: usize| 2.0 * PI * (i as f64 + 0.5) / na as f64;
    let time = |j: usize| tau_min + (tau_max - tau_min) * (j as f64 + 0.5) / nt as f64;
    let norms: Vec<f64> = par_map(grid.clone(), |(i, j)| {
        shooting_residual(surface, angle(i), time(j)).map(|(r, _)| r.norm()).unwrap_or(f64::INFINITY)
    });
    let at = |i: usize, j: usize| norms[i * nt + j];
    let mut seeds = vec![];
    for &(i, j) in &grid {
        let v = at(i, j);
        let mut is_min = v.is_finite();
        for di in [na - 1, 0, 1] {
            for dj in [-1i64, 0, 1] {
                let jj = j as i64 + dj;
                if (di == 0 && dj == 0) || jj < 0 || jj >= nt as i64 {
                    continue;
                }
                if at((i + di) % na, jj as usize) < v {
                    is_min = false;
                }
            }
        }
        if is_min {
            seeds.push((angle(i), time(j)));
        }
    }
    let solved = par_map(seeds.clone(), |(s, t)| -> Result<ReebOrbit> {
        let (s, tau) = newton_shoot(surface, s, t, tau_min, tau_max * 1.02)?;
        let start = surface.fixed_locus_point(s)?;
        ReebOrbit::from_start(surface, start, 2.0 * tau, true)
    });
    let mut failed = 0;
    let mut found: Vec<ReebOrbit> = vec![];
    for r in solved {
        match r {
            Ok(o) if o.residual <= 1e-7 && o.period < search.period_cap => found.push(o),
            _ => failed += 1,
        }
    }
    found.sort_by(|a, b| a.period.total_cmp(&b.period));
    let mut kept: Vec<ReebOrbit> = vec![];
    for o in found {
        let st = o.start_vec();
        let dup = kept.iter().any(|k| {
            let near = (st - k.start_vec()).norm() < 1e-5 || (st - Vec4::from(k.midpoint)).norm() < 1e-5;
            let ratio = o.period / k.period;
            near && (ratio - ratio.round()).abs() < 1e-6
        });
        if !dup {
            kept.push(o);
        }
    }
    Ok(OrbitSearchReport { orbits: kept, seeds: seeds.len(), failed_seeds: failed })
}

/// Which global frame of the contact structure the trivialization starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseFrame {
    /// `(-conj g2, conj g1)` for `g = grad F` read as a complex vector.
    Gradient,
    /// `(-conj z2, conj z1)` projected orthogonally onto `xi`.
    Position,
}

/// A symmetric symplectic trivialization of `xi` along an orbit of period
/// `period`, optionally twisted by `exp(2 pi k t / T J0)`.
#[derive(Clone, Debug)]
pub struct Trivialization {
    surface: Arc<Surface>,
    pub base: BaseFrame,
    pub twist: i32,
    pub period: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrivializationResiduals {
    /// `|omega(f1, f2) - 1|` plus the components of `f1, f2` off `xi`.
    pub unitarity: f64,
    /// `|rho f1(P(t)) - f1(P(-t))| + |rho f2(P(t)) + f2(P(-t))|`.
    pub symmetry: f64,
}

impl Trivialization {
    pub fn new(surface: Arc<Surface>, base: BaseFrame, twist: i32, period: f64) -> Self {
        Trivialization { surface, base, twist, period }
    }

    /// `(f1, f2)` at `p` and time `t`.
    pub fn frame(&self, p: &Vec4, t: f64) -> Result<(Vec4, Vec4)> {
        let s = &self.surface;
        let x = s.reeb_unchecked(p);
        let (f1, f2) = match self.base {
            BaseFrame::Gradient => {
                let g = s.grad(p);
                let e = Vec4::new(-g[2], g[3], g[0], -g[1]);
                let n = e.norm();
                if n < 1e-8 {
                    return Err(Error::FrameDegenerate { pivot: n });
                }
                let je = j4(&e);
                let f1 = (e - x * liouville_form(p, &e)) / n;
                let f2 = (je - x * liouville_form(p, &je)) / n;
                let w = omega(&f1, &f2);
                if w < 1e-8 {
                    return Err(Error::FrameDegenerate { pivot: w });
                }
                (f1 / w.sqrt(), f2 / w.sqrt())
            }
            BaseFrame::Position => {
                let g = s.grad(p);
                let n1 = g / g.norm();
                let jp = j4(p);
                let v2 = jp - n1 * n1.dot(&jp);
                let piv = v2.norm();
                if piv < 1e-8 {
                    return Err(Error::FrameDegenerate { pivot: piv });
                }
                let n2 = v2 / piv;
                let proj = |v: Vec4| v - n1 * n1.dot(&v) - n2 * n2.dot(&v);
                let u = Vec4::new(-p[2], p[3], p[0], -p[1]);
                let f1 = proj(u);
                let f2 = proj(j4(&u));
                let w = omega(&f1, &f2);
                if w < 1e-8 {
                    return Err(Error::FrameDegenerate { pivot: w });
                }
                (f1 / w.sqrt(), f2 / w.sqrt())
            }
        };
        if self.twist == 0 {
            return Ok((f1, f2));
        }
        let th = 2.0 * PI * self.twist as f64 * t / self.period;
        let (sn, cs) = th.sin_cos();
        Ok((f1 * cs + f2 * sn, f2 * cs - f1 * sn))
    }

    /// Residuals along an orbit sampled at 64 times.
    pub fn residuals(&self, orbit_point: &dyn Fn(f64) -> Vec4) -> Result<TrivializationResiduals> {
        let mut unitarity: f64 = 0.0;
        let mut symmetry: f64 = 0.0;
        for k in 0..64 {
            let t = self.period * k as f64 / 64.0;
            let p = orbit_point(t);
            let (f1, f2) = self.frame(&p, t)?;
            let g = self.surface.grad(&p);
            let off = [f1, f2].iter().map(|f| liouville_form(&p, f).abs() + g.dot(f).abs() / g.norm()).sum::<f64>();
            unitarity = unitarity.max((omega(&f1, &f2) - 1.0).abs() + off);
            let pm = orbit_point(self.period - t);
            let (h1, h2) = self.frame(&pm, -t)?;
            symmetry = symmetry.max((rho(&f1) - h1).norm() + (rho(&f2) + h2).norm());
        }
        Ok(TrivializationResiduals { unitarity, symmetry })
    }
}

/// The trivialized linearized flow along an orbit and its generator.
#[derive(Clone, Debug)]
pub struct Linearization {
    pub psi: SymplecticPath,
    /// `S_P`, symmetrized under `t -> -t` when the orbit is symmetric.
    pub loop_s: SymmetricLoop,
    /// `max |Psi(-t) - I Psi(t) I|` over probes.
    pub psi_symmetry_residual: f64,
    /// Off-diagonal part of `S_P(0)` and `S_P(T/2)` before symmetrization.
    pub endpoint_offdiagonal: f64,
    /// `max |det Psi(t) - 1|` over probes.
    pub det_drift: f64,
    pub trivialization: TrivializationResiduals,
}

const TABLE_SAMPLES: usize = 1024;

/// Integrates the variational equation along `orbit` and reads it in the
/// frames of `triv`: `Psi(t) = Phi(t)^{-1} T phi^t Phi(0)`, plus the loop
/// `S_P = -J0 Psi' Psi^{-1}` tabulated from the generator
/// `Phi^{-1} (DX Phi - Phi')`.
pub fn linearized_flow(surface: &Arc<Surface>, orbit: &ReebOrbit, triv: &Trivialization) -> Result<Linearization> {
    let tt = orbit.period;
    let s2 = surface.clone();
    let rhs = Arc::new(move |_t: f64, y: &[f64; 20]| {
        let x = Vec4::new(y[0], y[1], y[2], y[3]);
        let v = Mat4::from_row_slice(&y[4..]);
        let xd = s2.reeb_unchecked(&x);
        let vd = s2.reeb_jacobian(&x) * v;
        let mut out = [0.0; 20];
        out[..4].copy_from_slice(xd.as_slice());
        for r in 0..4 {
            for c in 0..4 {
                out[4 + 4 * r + c] = vd[(r, c)];
            }
        }
        out
    });
    let mut y0 = [0.0; 20];
    y0[..4].copy_from_slice(&orbit.start);
    for i in 0..4 {
        y0[4 + 5 * i] = 1.0;
    }
    let traj = Arc::new(Trajectory::solve(rhs, 0.0, y0, tt, &OdeOptions::default())?);
    let point = {
        let traj = traj.clone();
        move |t: f64| {
            let y = traj.eval(t.rem_euclid(tt).min(tt));
            Vec4::new(y[0], y[1], y[2], y[3])
        }
    };
    let residuals = triv.residuals(&point)?;
    let (e1, e2) = triv.frame(&orbit.start_vec(), 0.0)?;
    let psi_at = {
        let traj = traj.clone();
        let triv = triv.clone();
        move |t: f64| -> Mat2 {
            let y = traj.eval(t);
            let x = Vec4::new(y[0], y[1], y[2], y[3]);
            let v = Mat4::from_row_slice(&y[4..]);
            let (w1, w2) = (v * e1, v * e2);
            match triv.frame(&x, t) {
                Ok((g1, g2)) => Mat2::new(omega(&w1, &g2), omega(&w2, &g2), omega(&g1, &w1), omega(&g1, &w2)),
                Err(_) => Mat2::from_element(f64::NAN),
            }
        }
    };
    let psi = SymplecticPath::new(tt, psi_at).symmetric(orbit.symmetric);
    let mut det_drift: f64 = 0.0;
    for k in 0..=64 {
        let m = psi.eval(tt * k as f64 / 64.0);
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::FrameDegenerate { pivot: 0.0 });
        }
        det_drift = det_drift.max((m.determinant() - 1.0).abs());
    }
    if det_drift > 1e-6 {
        return Err(Error::NonSymplecticDrift { drift: det_drift });
    }
    let psi_symmetry_residual = if orbit.symmetric { psi.symmetry_residual() } else { f64::NAN };

    // generator samples on a uniform grid
    let n = TABLE_SAMPLES;
    let grid: Vec<usize> = (0..n).collect();
    let s_samples: Vec<Result<Mat2>> = par_map(grid, |k| {
        let t = tt * k as f64 / n as f64;
        let x = point(t);
        let (g1, g2) = triv.frame(&x, t)?;
        let a = surface.reeb_jacobian(&x);
        let xv = surface.reeb_unchecked(&x);
        let h = 1e-6;
        let (p1, p2) = triv.frame(&(x + xv * h), t + h)?;
        let (m1, m2) = triv.frame(&(x - xv * h), t - h)?;
        let d1 = (p1 - m1) / (2.0 * h);
        let d2 = (p2 - m2) / (2.0 * h);
        let u1 = a * g1 - d1;
        let u2 = a * g2 - d2;
        let b = Mat2::new(omega(&u1, &g2), omega(&u2, &g2), omega(&g1, &u1), omega(&g1, &u2));
        let s = -crate::linalg::j0() * b;
        Ok((s + s.transpose()) * 0.5)
    });
    let mut values = s_samples.into_iter().collect::<Result<Vec<Mat2>>>()?;
    let endpoint_offdiagonal = values[0][(0, 1)].abs().max(values[n / 2][(0, 1)].abs());
    if orbit.symmetric {
        let i = crate::linalg::conj();
        let orig = values.clone();
        for k in 0..n {
            values[k] = (orig[k] + i * orig[(n - k) % n] * i) * 0.5;
        }
    }
    let table = Table::periodic(tt, values, None)?;
    let loop_s = SymmetricLoop { period: tt, coeff: Coefficients::Table(Arc::new(table)), symmetric: orbit.symmetric };
    if orbit.symmetric && (psi_symmetry_residual > 1e-6 || endpoint_offdiagonal > 1e-6) {
        return Err(Error::SymmetryViolated { residual: psi_symmetry_residual.max(endpoint_offdiagonal) });
    }
    Ok(Linearization { psi, loop_s, psi_symmetry_residual, endpoint_offdiagonal, det_drift, trivialization: residuals })
}

/// Distance to 1 of the eigenvalues of `m^power` for `m` in `Sp(2)`.
pub fn floquet_distance(m: &Mat2, power: u32) -> f64 {
    let tr = m.trace();
    let disc = Complex::new(tr * tr - 4.0 * m.determinant(), 0.0).sqrt();
    let mu1 = (Complex::new(tr, 0.0) + disc) / 2.0;
    let mu2 = (Complex::new(tr, 0.0) - disc) / 2.0;
    let one = Complex::new(1.0, 0.0);
    (mu1.powu(power) - one).norm().min((mu2.powu(power) - one).norm())
}

/// Indices of `P^m` (and `C^m` for symmetric orbits) by crossing forms and by
/// spectral windings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitIndices {
    pub m: u32,
    pub period: f64,
    pub mu_cz: HalfInt,
    pub mu_rs: Option<HalfInt>,
    pub floquet_distance: f64,
    /// `mu_CZ(P)` and `mu_RS(C)` of the underlying simple orbit.
    pub base_cz: HalfInt,
    pub base_rs: Option<HalfInt>,
    /// The iteration implications for `P^m` (and `C^m`), and
    /// `mu_CZ(P^m) >= 3 => mu_RS(C^m) >= 3/2`.
    pub implications_hold: bool,
}

/// Marks an orbit degenerate or not from its linearization.
pub fn classify(orbit: &mut ReebOrbit, lin: &Linearization) {
    let d = floquet_distance(&lin.psi.eval(orbit.period), 1);
    orbit.floquet_distance = Some(d);
    orbit.degenerate = Some(d <= FLOQUET_BAND);
}

pub fn orbit_indices(lin: &Linearization, orbit: &ReebOrbit, m: u32) -> Result<OrbitIndices> {
    if m == 0 {
        return Err(Error::InvalidInput("iteration count must be positive".into()));
    }
    let tt = orbit.period;
    let mono = lin.psi.eval(tt);
    let distance = floquet_distance(&mono, m);
    if distance <= FLOQUET_BAND {
        return Err(Error::DegenerateOrbit { distance });
    }
    let psi_m = lin.psi.iterate(m);
    let mu_cz = cz_index(&psi_m)?.0;
    let loop_m = SymmetricLoop { period: m as f64 * tt, coeff: lin.loop_s.coeff.clone(), symmetric: orbit.symmetric };
    let spectral_cz = mu_spec(&loop_m)?;
    if spectral_cz != mu_cz {
        return Err(Error::MethodDisagreement { what: "mu_CZ", crossing: mu_cz, spectral: spectral_cz });
    }
    let base_cz = if m == 1 { mu_cz } else { cz_index(&lin.psi)?.0 };
    let (mu_rs, base_rs) = if orbit.symmetric {
        let half = psi_m.restrict(0.5 * m as f64 * tt);
        let rs = rs_real(&half)?;
        let d = BoundarySymmetricPath { half_period: 0.5 * m as f64 * tt, coeff: lin.loop_s.coeff.clone() };
        let spectral_rs = mu_i(&d)?;
        if spectral_rs != rs {
            return Err(Error::MethodDisagreement { what: "mu_RS", crossing: rs, spectral: spectral_rs });
        }
        let base = if m == 1 { rs } else { rs_real(&lin.psi.restrict(0.5 * tt))? };
        (Some(rs), Some(base))
    } else {
        (None, None)
    };
    let mut implications_hold = cz_iteration_implications(base_cz, mu_cz, m);
    if let (Some(rs), Some(b)) = (mu_rs, base_rs) {
        implications_hold &= iteration_implications(b, rs, m);
        if mu_cz >= HalfInt::from_int(3) {
            implications_hold &= rs >= HalfInt::from_twice(3);
        }
    }
    Ok(OrbitIndices {
        m,
        period: m as f64 * tt,
        mu_cz,
        mu_rs,
        floquet_distance: distance,
        base_cz,
        base_rs,
        implications_hold,
    })
}

/// Finds symmetric orbits, linearizes each in the default trivialization and
/// classifies degeneracy.
pub fn analyze_orbits(surface: &Arc<Surface>, search: &OrbitSearch) -> Result<(OrbitSearchReport, Vec<Result<Linearization>>)> {
    let mut report = find_symmetric_orbits(surface, search)?;
    let lins: Vec<Result<Linearization>> = par_map(report.orbits.clone(), |o| {
        let triv = Trivialization::new(surface.clone(), BaseFrame::Gradient, 0, o.period);
        linearized_flow(surface, &o, &triv)
    });
    for (o, l) in report.orbits.iter_mut().zip(&lins) {
        if let Ok(l) = l {
            classify(o, l);
        }
    }
    Ok((report, lins))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipsoid() -> Arc<Surface> {
        Arc::new(Surface::ellipsoid(1.0, 1.3).unwrap())
    }

    #[test]
    fn reeb_field_closed_form() {
        let s = ellipsoid();
        let x = s.reeb_field(&Vec4::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!((x - Vec4::new(0.0, 2.0, 0.0, 0.0)).norm() < 1e-14);
        let p = s.project(&Vec4::new(0.3, -0.2, 0.5, 0.7)).unwrap();
        let x = s.reeb_field(&p).unwrap();
        assert!((liouville_form(&p, &x) - 1.0).abs() < 1e-12);
        assert!((rho(&x) + s.reeb_field(&rho(&p)).unwrap()).norm() < 1e-12);
        assert_eq!(s.reeb_field(&Vec4::new(2.0, 0.0, 0.0, 0.0)).unwrap_err().name(), "NotOnSurface");
    }

    #[test]
    fn jacobian_matches_differences() {
        let s = Surface::perturbed_ellipsoid(1.0, 1.3, 0.05).unwrap();
        let p = s.project(&Vec4::new(0.3, -0.2, 0.5, 0.7)).unwrap();
        let jm = s.reeb_jacobian(&p);
        for c in 0..4 {
            let mut e = Vec4::zeros();
            e[c] = 1e-6;
            let d = (s.reeb_unchecked(&(p + e)) - s.reeb_unchecked(&(p - e))) / 2e-6;
            assert!((d - jm.column(c)).norm() < 1e-7);
        }
    }

    #[test]
    fn ellipsoid_flow_closed_form() {
        let s = ellipsoid();
        let p = Vec4::new(1.0, 0.0, 0.0, 0.0);
        let q = s.flow(&p, 0.9).unwrap();
        assert!((q - Vec4::new(1.8f64.cos(), 1.8f64.sin(), 0.0, 0.0)).norm() < 1e-9);
        let a = s.project(&Vec4::new(0.4, 0.1, -0.6, 0.3)).unwrap();
        let two = s.flow(&s.flow(&a, 0.7).unwrap(), 1.1).unwrap();
        assert!((two - s.flow(&a, 1.8).unwrap()).norm() < 1e-8);
        let rev = rho(&s.flow(&a, 1.3).unwrap()) - s.flow(&rho(&a), -1.3).unwrap();
        assert!(rev.norm() < 1e-8);
    }

    #[test]
    fn non_starshaped_rejected() {
        let spec = SurfaceSpec::Polynomial {
            monomials: vec![
                Monomial { powers: [2, 0, 0, 0], coeff: 1.0 },
                Monomial { powers: [0, 2, 0, 0], coeff: 1.0 },
                Monomial { powers: [0, 0, 2, 0], coeff: -1.0 },
                Monomial { powers: [0, 0, 0, 2], coeff: 1.0 },
            ],
            symmetric: true,
        };
        assert!(Surface::from_spec(spec).is_err());
    }

    #[test]
    fn ellipsoid_orbits_and_indices() {
        let s = ellipsoid();
        let (rep, lins) = analyze_orbits(&s, &OrbitSearch::default()).unwrap();
        assert_eq!(rep.orbits.len(), 2, "{rep:?}");
        assert!((rep.orbits[0].period - PI).abs() < 1e-7);
        assert!((rep.orbits[1].period - 1.69 * PI).abs() < 1e-7);
        let l1 = lins[0].as_ref().unwrap();
        let i1 = orbit_indices(l1, &rep.orbits[0], 1).unwrap();
        assert_eq!(i1.mu_cz, HalfInt::from_int(3));
        assert_eq!(i1.mu_rs, Some(HalfInt::from_twice(3)));
        let i2 = orbit_indices(lins[1].as_ref().unwrap(), &rep.orbits[1], 1).unwrap();
        assert_eq!(i2.mu_cz, HalfInt::from_int(5));
        assert!(l1.psi_symmetry_residual < 1e-6 && l1.endpoint_offdiagonal < 1e-6);
        assert!(l1.trivialization.unitarity < 1e-7 && l1.trivialization.symmetry < 1e-7);
        // transverse multipliers exp(+-2 pi i / 1.69)
        let mono = l1.psi.eval(PI);
        assert!((mono.trace() - 2.0 * (2.0 * PI / 1.69).cos()).abs() < 1e-7);
    }
}
