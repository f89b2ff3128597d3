//! Disk-like surfaces of section `{z2 in theta R+} ∩ M` bounded by the orbit
//! in `z2 = 0`, their first-return maps, reversibility, area and the
//! symmetric open book obtained by flowing one page.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use nalgebra::{Complex, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vec4;
use crate::ode::{integrate, OdeOptions};
use crate::par::par_map;
use crate::reeb::{omega, rho, ReebOrbit, Surface};

/// Chart points closer than this to the unit circle are not sampled.
pub const EDGE_BAND: f64 = 1e-3;
/// Return-time bracket tolerance.
pub const TIME_TOL: f64 = 1e-10;

/// A page `D_theta` with chart `w -> project(r1 w, r2 theta sqrt(1 - |w|^2))`
/// on the closed unit disk.
#[derive(Clone, Debug)]
pub struct DiskPage {
    surface: Arc<Surface>,
    /// `arg theta`.
    pub angle: f64,
    pub r1: f64,
    pub r2: f64,
    pub spanning: ReebOrbit,
}

fn angle_diff(a: f64, b: f64) -> f64 {
    (a - b + PI).rem_euclid(2.0 * PI) - PI
}

/// `(t, state, unwrapped page angle)` along a trajectory.
type Sample = (f64, [f64; 4], f64);

fn cx(p: &Vec4) -> (Complex<f64>, Complex<f64>) {
    (Complex::new(p[0], p[1]), Complex::new(p[2], p[3]))
}

impl DiskPage {
    /// The explicit page of the ellipsoid `E(r1, r2)`.
    pub fn ellipsoid(r1: f64, r2: f64, angle: f64) -> Result<Self> {
        if (r1 - r2).abs() < 1e-6 {
            return Err(Error::DegenerateRatio { gap: (r1 - r2).abs() });
        }
        let surface = Arc::new(Surface::ellipsoid(r1, r2)?);
        let spanning = ReebOrbit::from_start(&surface, Vec4::new(r1, 0.0, 0.0, 0.0), PI * r1 * r1, true)?;
        Ok(DiskPage { surface, angle, r1, r2, spanning })
    }

    /// The ellipsoid chart carried to `surface` along Liouville rays. The
    /// circle `z2 = 0` must be a periodic orbit; transversality is checked.
    pub fn continuation(surface: Arc<Surface>, angle: f64) -> Result<Self> {
        let (r1, r2) = surface.axis_radii()?;
        let start = Vec4::new(r1, 0.0, 0.0, 0.0);
        let period = binding_period(&surface, &start)?;
        let spanning = ReebOrbit::from_start(&surface, start, period, surface.is_symmetric())?;
        if spanning.residual > 1e-7 {
            return Err(Error::PreconditionViolated(format!(
                "binding circle does not close up (residual {:.3e})",
                spanning.residual
            )));
        }
        let page = DiskPage { surface, angle, r1, r2, spanning };
        let margin = page.transversality_margin()?;
        if margin <= 0.0 {
            return Err(Error::PreconditionViolated(format!("page is not transverse to the flow (margin {margin:.3e})")));
        }
        Ok(page)
    }

    pub fn surface(&self) -> &Arc<Surface> {
        &self.surface
    }

    pub fn theta(&self) -> Complex<f64> {
        Complex::from_polar(1.0, self.angle)
    }

    /// Whether `rho` maps the page to itself (`theta = +-1`).
    pub fn is_rho_invariant(&self) -> bool {
        self.angle.sin().abs() < 1e-12
    }

    fn raw(&self, w: Complex<f64>) -> Vec4 {
        let s = (1.0 - w.norm_sqr()).max(0.0).sqrt();
        let z2 = self.theta() * (self.r2 * s);
        Vec4::new(self.r1 * w.re, self.r1 * w.im, z2.re, z2.im)
    }

    pub fn chart(&self, w: Complex<f64>) -> Result<Vec4> {
        if w.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!("chart point {w} outside the unit disk")));
        }
        self.surface.project(&self.raw(w))
    }

    /// Inverse chart for points of the page.
    pub fn chart_inverse(&self, q: &Vec4) -> Complex<f64> {
        let (z1, z2) = cx(q);
        let a = z1 / self.r1;
        let b = z2.norm() / self.r2;
        a / (a.norm_sqr() + b * b).sqrt()
    }

    /// `arg(z2 conj theta)`.
    pub fn page_angle(&self, q: &Vec4) -> f64 {
        let (_, z2) = cx(q);
        (z2 * self.theta().conj()).arg()
    }

    /// Partial derivatives of the chart in `w = wx + i wy`.
    pub fn chart_derivative(&self, w: Complex<f64>) -> Result<(Vec4, Vec4)> {
        let u = self.raw(w);
        let q = self.chart(w)?;
        let k = q.norm() / u.norm();
        let s = (1.0 - w.norm_sqr()).sqrt();
        let th = self.theta();
        let du = |dx: f64, dy: f64| {
            let ds = -(w.re * dx + w.im * dy) / s;
            Vec4::new(self.r1 * dx, self.r1 * dy, self.r2 * th.re * ds, self.r2 * th.im * ds)
        };
        let g = self.surface.grad(&q);
        let gu = g.dot(&u);
        let d = |v: Vec4| (v - u * (g.dot(&v) / gu)) * k;
        Ok((d(du(1.0, 0.0)), d(du(0.0, 1.0))))
    }

    /// Pullback of `d lambda = omega` in chart coordinates.
    pub fn area_density(&self, w: Complex<f64>) -> Result<f64> {
        let (a, b) = self.chart_derivative(w)?;
        Ok(omega(&a, &b))
    }

    /// Rate of the page angle along the flow.
    pub fn crossing_rate(&self, q: &Vec4) -> f64 {
        let x = self.surface.reeb_unchecked(q);
        let (_, z2) = cx(q);
        let (_, v2) = cx(&x);
        (v2 * z2.conj()).im / z2.norm_sqr()
    }

    /// Deterministic probe points filling `|w| <= 1 - EDGE_BAND`.
    pub fn probes(n: usize) -> Vec<Complex<f64>> {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|k| Complex::from_polar((1.0 - EDGE_BAND) * ((k as f64 + 0.5) / n as f64).sqrt(), golden * k as f64))
            .collect()
    }

    /// Smallest crossing rate over 200 probes.
    pub fn transversality_margin(&self) -> Result<f64> {
        let mut m = f64::INFINITY;
        for w in Self::probes(200) {
            m = m.min(self.crossing_rate(&self.chart(w)?));
        }
        Ok(m)
    }

    /// Smallest `|omega|`-density over 200 probes.
    pub fn density_margin(&self) -> Result<f64> {
        let mut m = f64::INFINITY;
        for w in Self::probes(200) {
            m = m.min(self.area_density(w)?.abs());
        }
        Ok(m)
    }

    /// Largest `|z2|` and `|F - 1|` on the boundary circle.
    pub fn boundary_residual(&self) -> Result<f64> {
        let mut r: f64 = 0.0;
        for k in 0..256 {
            let w = Complex::from_polar(1.0, 2.0 * PI * k as f64 / 256.0);
            let q = self.chart(w)?;
            let (_, z2) = cx(&q);
            r = r.max(z2.norm()).max((self.surface.f(&q) - 1.0).abs());
        }
        Ok(r)
    }

    /// `max |rho(chart(w)) - chart(conj w)|` over probes.
    pub fn chart_symmetry_residual(&self) -> Result<f64> {
        let mut r: f64 = 0.0;
        for w in Self::probes(200) {
            r = r.max((rho(&self.chart(w)?) - self.chart(w.conj())?).norm());
        }
        Ok(r)
    }

    /// First return to the page in forward (`dir = 1`) or backward (`-1`)
    /// time.
    pub fn first_return(&self, w: Complex<f64>, dir: f64) -> Result<Return> {
        if w.norm() > 1.0 - EDGE_BAND {
            return Err(Error::EdgeTooClose { radius: w.norm() });
        }
        let p = self.chart(w)?;
        let (point, tau) = self.return_from(&p, dir)?;
        Ok(Return { image: self.chart_inverse(&point), point, tau })
    }

    fn return_from(&self, p: &Vec4, dir: f64) -> Result<(Vec4, f64)> {
        let surface = &self.surface;
        let period = self.spanning.period;
        let cap = 50.0 * period;
        let chunk = period / 4.0;
        let target = 2.0 * PI * dir;
        let rhs = |_t: f64, y: &[f64; 4]| {
            let x = surface.reeb_unchecked(&Vec4::from(*y));
            [x[0], x[1], x[2], x[3]]
        };
        let proj = |y: &mut [f64; 4]| {
            if let Ok(q) = surface.project(&Vec4::from(*y)) {
                *y = [q[0], q[1], q[2], q[3]];
            }
        };
        let opts = OdeOptions::default().with_h_max(period / 64.0);
        let mut t: f64 = 0.0;
        let mut y = [p[0], p[1], p[2], p[3]];
        let mut phase = 0.0;
        while t.abs() < cap {
            let mut prev: Option<Sample> = None;
            let mut hit: Option<(Sample, f64)> = None;
            let mut last_angle = self.page_angle(&Vec4::from(y));
            let mut acc = phase;
            let t0 = t;
            let end = integrate(&rhs, 0.0, y, dir * chunk, &opts, Some(&proj), &mut |s, st| {
                if hit.is_some() {
                    return;
                }
                let a = self.page_angle(&Vec4::from(*st));
                acc += angle_diff(a, last_angle);
                last_angle = a;
                if let Some(pv) = prev {
                    if (acc - target) * dir >= 0.0 && (pv.2 - target) * dir < 0.0 {
                        hit = Some((pv, t0 + s));
                    }
                }
                prev = Some((t0 + s, *st, acc));
            })?;
            if let Some(((ta, ya, pa), tb)) = hit {
                return self.refine_return(&rhs, &proj, ta, ya, pa, tb, target);
            }
            y = end;
            t += dir * chunk;
            phase = acc;
        }
        Err(Error::EscapeTimeout { cap })
    }

    #[allow(clippy::too_many_arguments)]
    fn refine_return(
        &self,
        rhs: &dyn Fn(f64, &[f64; 4]) -> [f64; 4],
        proj: &dyn Fn(&mut [f64; 4]),
        ta: f64,
        ya: [f64; 4],
        pa: f64,
        tb: f64,
        target: f64,
    ) -> Result<(Vec4, f64)> {
        let a0 = self.page_angle(&Vec4::from(ya));
        let opts = OdeOptions::default();
        let phase_at = |h: f64| -> Result<(f64, [f64; 4])> {
            let y = integrate(rhs, 0.0, ya, h, &opts, Some(proj), &mut |_, _| {})?;
            Ok((pa + angle_diff(self.page_angle(&Vec4::from(y)), a0) - target, y))
        };
        let (mut lo, mut hi) = (0.0, tb - ta);
        let (mut flo, _) = phase_at(lo)?;
        let (mut fhi, mut yhi) = phase_at(hi)?;
        for _ in 0..100 {
            if (hi - lo).abs() <= TIME_TOL {
                break;
            }
            // secant guess kept inside the middle of the bracket
            let mut mid = lo - flo * (hi - lo) / (fhi - flo);
            let span = hi - lo;
            if !mid.is_finite() || (mid - lo).abs() < 0.05 * span.abs() || (hi - mid).abs() < 0.05 * span.abs() {
                mid = 0.5 * (lo + hi);
            }
            let (fm, ym) = phase_at(mid)?;
            if fm == 0.0 {
                return Ok((Vec4::from(ym), ta + mid));
            }
            if (fm > 0.0) == (fhi > 0.0) {
                hi = mid;
                fhi = fm;
                yhi = ym;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        Ok((Vec4::from(yhi), ta + hi))
    }

    /// The return map in chart coordinates.
    pub fn return_map(&self, w: Complex<f64>) -> Result<Complex<f64>> {
        Ok(self.first_return(w, 1.0)?.image)
    }
}

/// Period of the orbit through `start` in the plane `z2 = 0`, from the first
/// full turn of `arg z1`.
fn binding_period(surface: &Surface, start: &Vec4) -> Result<f64> {
    let mut turns = 0.0;
    let mut last = 0.0f64;
    let mut crossing: Option<(f64, f64, f64, f64)> = None;
    let mut prev = (0.0, 0.0);
    let mut off_plane: f64 = 0.0;
    let guess = 200.0;
    surface.flow_observed(start, guess, &mut |t, y| {
        if crossing.is_some() {
            return;
        }
        let a = y[1].atan2(y[0]);
        turns += angle_diff(a, last);
        last = a;
        off_plane = off_plane.max(y[2].hypot(y[3]));
        if turns >= 2.0 * PI {
            crossing = Some((prev.0, prev.1, t, turns));
        }
        prev = (t, turns);
    })?;
    if off_plane > 1e-9 {
        return Err(Error::PreconditionViolated(format!("the circle z2 = 0 is not invariant (drift {off_plane:.3e})")));
    }
    let (ta, pa, tb, pb) = crossing.ok_or_else(|| Error::NoConvergence("binding orbit did not close".into()))?;
    // refine by bisection on the unwrapped angle
    let (mut lo, mut hi) = (ta, tb);
    let (mut flo, mut fhi) = (pa - 2.0 * PI, pb - 2.0 * PI);
    let base = surface.flow(start, ta)?;
    let a0 = base[1].atan2(base[0]);
    for _ in 0..80 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let q = surface.flow(&base, mid - ta)?;
        let f = pa + angle_diff(q[1].atan2(q[0]), a0) - 2.0 * PI;
        if (f > 0.0) == (fhi > 0.0) {
            hi = mid;
            fhi = f;
        } else {
            lo = mid;
            flo = f;
        }
    }
    let _ = flo;
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Return {
    pub image: Complex<f64>,
    pub point: Vec4,
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PageReport {
    pub angle: f64,
    pub r1: f64,
    pub r2: f64,
    pub spanning_period: f64,
    pub boundary_residual: f64,
    pub transversality_margin: f64,
    pub density_margin: f64,
    pub rho_invariant: bool,
    pub chart_symmetry_residual: Option<f64>,
}

pub fn page_report(page: &DiskPage) -> Result<PageReport> {
    Ok(PageReport {
        angle: page.angle,
        r1: page.r1,
        r2: page.r2,
        spanning_period: page.spanning.period,
        boundary_residual: page.boundary_residual()?,
        transversality_margin: page.transversality_margin()?,
        density_margin: page.density_margin()?,
        rho_invariant: page.is_rho_invariant(),
        chart_symmetry_residual: if page.is_rho_invariant() { Some(page.chart_symmetry_residual()?) } else { None },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReturnSample {
    pub x: [f64; 2],
    pub fx: [f64; 2],
    pub tau: f64,
    /// Return time in backward time.
    pub tau_back: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub w: [f64; 2],
    pub tau: f64,
    pub residual: f64,
    pub symmetric: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnMapReport {
    pub samples: Vec<ReturnSample>,
    /// `max |f(rho x) - rho f^{-1}(x)|`.
    pub reversibility_residual: f64,
    /// `max |tau_x - tau_{rho f(x)}|`.
    pub tau_symmetry_residual: f64,
    /// Smallest distance between two sampled images.
    pub min_image_separation: f64,
    /// Largest relative area change of small quadrilaterals.
    pub area_drift: f64,
    pub fixed_points: Vec<FixedPoint>,
}

impl ReturnMapReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_chart,y_chart,fx,fy,tau\n");
        for s in &self.samples {
            out.push_str(&format!("{:.12},{:.12},{:.12},{:.12},{:.12}\n", s.x[0], s.x[1], s.fx[0], s.fx[1], s.tau));
        }
        out
    }

    /// Scatter plot of `x` (grey) and `f(x)` (red) in the unit disk.
    pub fn to_svg(&self) -> String {
        let mut out = String::from(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.05 -1.05 2.1 2.1\" width=\"480\" height=\"480\">\n<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"none\" stroke=\"black\" stroke-width=\"0.005\"/>\n",
        );
        for s in &self.samples {
            out.push_str(&format!("<circle cx=\"{:.5}\" cy=\"{:.5}\" r=\"0.008\" fill=\"#999\"/>\n", s.x[0], -s.x[1]));
            out.push_str(&format!("<circle cx=\"{:.5}\" cy=\"{:.5}\" r=\"0.008\" fill=\"#c22\"/>\n", s.fx[0], -s.fx[1]));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn square_grid(n: usize, radius: f64) -> Vec<Complex<f64>> {
    let mut out = vec![];
    for i in 0..n {
        for j in 0..n {
            let x = -0.9 + 1.8 * j as f64 / (n - 1).max(1) as f64;
            let y = 0.9 - 1.8 * i as f64 / (n - 1).max(1) as f64;
            let w = Complex::new(x, y);
            if w.norm() <= radius {
                out.push(w);
            }
        }
    }
    out
}

fn shoelace(p: &[Complex<f64>]) -> f64 {
    let n = p.len();
    0.5 * (0..n).map(|i| p[i].re * p[(i + 1) % n].im - p[(i + 1) % n].re * p[i].im).sum::<f64>()
}

/// Newton iteration for `f(w) = w` with a finite-difference Jacobian.
fn newton_fixed(page: &DiskPage, mut w: Complex<f64>) -> Result<FixedPoint> {
    let f = |w: Complex<f64>| page.first_return(w, 1.0);
    let mut r = f(w)?;
    for _ in 0..30 {
        let res = r.image - w;
        if res.norm() <= 1e-11 {
            break;
        }
        let h = 1e-6;
        let gx = (f(w + h)?.image - f(w - h)?.image) / (2.0 * h) - 1.0;
        let gy = (f(w + Complex::<f64>::i() * h)?.image - f(w - Complex::<f64>::i() * h)?.image) / (2.0 * h) - Complex::<f64>::i();
        let jac = Matrix2::new(gx.re, gy.re, gx.im, gy.im);
        let step = jac
            .lu()
            .solve(&Vector2::new(res.re, res.im))
            .ok_or_else(|| Error::NoConvergence("singular fixed-point Jacobian".into()))?;
        let next = w - Complex::new(step[0], step[1]);
        if next.norm() > 1.0 - EDGE_BAND {
            return Err(Error::NoConvergence("fixed-point iteration left the page".into()));
        }
        w = next;
        r = f(w)?;
    }
    let residual = (r.image - w).norm();
    if residual > 1e-9 {
        return Err(Error::NoConvergence(format!("fixed-point residual {residual:.3e}")));
    }
    Ok(FixedPoint { w: [w.re, w.im], tau: r.tau, residual, symmetric: false })
}

/// Samples the return map on an `n x n` grid, checks reversibility and area
/// preservation on `quads` random quadrilaterals, and locates fixed points by
/// Newton from an 11 x 11 grid and along the `rho`-fixed diameter.
pub fn return_map_report(page: &DiskPage, n: usize, quads: usize, seed: u64) -> Result<ReturnMapReport> {
    if !page.is_rho_invariant() {
        return Err(Error::PreconditionViolated("page is not rho-invariant".into()));
    }
    let grid = square_grid(n, 0.95);
    let forward = par_map(grid.clone(), |w| -> Result<(Return, Return, Return, Return)> {
        let fwd = page.first_return(w, 1.0)?;
        let back = page.first_return(w, -1.0)?;
        let mirrored = page.first_return(w.conj(), 1.0)?;
        let echo = page.first_return(fwd.image.conj(), 1.0)?;
        Ok((fwd, back, mirrored, echo))
    });
    let mut samples = vec![];
    let mut reversibility_residual: f64 = 0.0;
    let mut tau_symmetry_residual: f64 = 0.0;
    for (w, r) in grid.iter().zip(forward) {
        let (fwd, back, mirrored, echo) = r?;
        reversibility_residual = reversibility_residual.max((mirrored.image - back.image.conj()).norm());
        tau_symmetry_residual = tau_symmetry_residual.max((fwd.tau - echo.tau).abs());
        samples.push(ReturnSample { x: [w.re, w.im], fx: [fwd.image.re, fwd.image.im], tau: fwd.tau, tau_back: back.tau });
    }
    let mut min_image_separation = f64::INFINITY;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let d = Complex::new(samples[i].fx[0] - samples[j].fx[0], samples[i].fx[1] - samples[j].fx[1]).norm();
            min_image_separation = min_image_separation.min(d);
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let eps = 1e-3;
    let centers: Vec<Complex<f64>> = (0..quads)
        .map(|_| Complex::from_polar(0.8 * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>()))
        .collect();
    let drifts = par_map(centers, |c| -> Result<f64> {
        let corners = [Complex::new(-eps, -eps), Complex::new(eps, -eps), Complex::new(eps, eps), Complex::new(-eps, eps)]
            .map(|d| c + d);
        let images = corners.iter().map(|&w| page.return_map(w)).collect::<Result<Vec<_>>>()?;
        let before = shoelace(&corners) * page.area_density(c)?;
        let centroid = images.iter().sum::<Complex<f64>>() / 4.0;
        let after = shoelace(&images) * page.area_density(centroid)?;
        Ok(((after - before) / before).abs())
    });
    let mut area_drift: f64 = 0.0;
    for d in drifts {
        area_drift = area_drift.max(d?);
    }

    let mut seeds: Vec<(f64, Complex<f64>)> = vec![];
    for w in square_grid(11, 0.95) {
        if let Ok(r) = page.first_return(w, 1.0) {
            seeds.push(((r.image - w).norm(), w));
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    seeds.truncate(4);
    let line: Vec<f64> = (0..41).map(|k| -0.95 + 1.9 * k as f64 / 40.0).collect();
    let line_res: Vec<f64> = line
        .iter()
        .map(|&x| page.first_return(Complex::new(x, 0.0), 1.0).map(|r| (r.image - x).norm()).unwrap_or(f64::INFINITY))
        .collect();
    for k in 0..line.len() {
        let left = if k > 0 { line_res[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < line.len() { line_res[k + 1] } else { f64::INFINITY };
        if line_res[k] <= left && line_res[k] <= right && line_res[k].is_finite() {
            seeds.push((line_res[k], Complex::new(line[k], 0.0)));
        }
    }
    let mut fixed_points: Vec<FixedPoint> = vec![];
    for (_, w) in seeds {
        if let Ok(mut fp) = newton_fixed(page, w) {
            if fixed_points.iter().all(|q| Complex::new(q.w[0] - fp.w[0], q.w[1] - fp.w[1]).norm() > 1e-6) {
                fp.symmetric = fp.w[1].abs() <= 1e-6;
                fixed_points.push(fp);
            }
        }
    }
    fixed_points.sort_by(|a, b| a.w[0].total_cmp(&b.w[0]).then(a.w[1].total_cmp(&b.w[1])));
    Ok(ReturnMapReport {
        samples,
        reversibility_residual,
        tau_symmetry_residual,
        min_image_separation,
        area_drift,
        fixed_points,
    })
}

/// `∫ d lambda` over the page, in coordinates `w = (1 - s^2) e^{i phi}` so the
/// integrand stays smooth up to the boundary.
pub fn page_area(page: &DiskPage) -> Result<f64> {
    let integrand = |ns: usize, nphi: usize| -> Result<f64> {
        let gl = GaussLegendre::new(NonZeroUsize::new(ns).expect("nonzero degree"));
        let mut failure = None;
        let total = gl.integrate(0.0, 1.0, |s| {
            let mut row = 0.0;
            for k in 0..nphi {
                let phi = 2.0 * PI * k as f64 / nphi as f64;
                let e = Complex::from_polar(1.0, phi);
                let w = e * (1.0 - s * s);
                match page.chart_derivative(w) {
                    Ok((a, b)) => {
                        let ws = e * (-2.0 * s);
                        let wp = Complex::<f64>::i() * w;
                        let cs = a * ws.re + b * ws.im;
                        let cp = a * wp.re + b * wp.im;
                        row += omega(&cs, &cp);
                    }
                    Err(e) => failure = Some(e),
                }
            }
            row * 2.0 * PI / nphi as f64
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(total.abs()),
        }
    };
    let (mut ns, mut nphi) = (8, 16);
    let mut prev = integrand(ns, nphi)?;
    let mut change = f64::INFINITY;
    for _ in 0..7 {
        ns *= 2;
        nphi *= 2;
        let next = integrand(ns, nphi)?;
        change = ((next - prev) / next).abs();
        prev = next;
        if change < 1e-9 {
            return Ok(next);
        }
    }
    if change < 1e-5 {
        return Ok(prev);
    }
    Err(Error::QuadratureNoConvergence { change })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpenBookReport {
    pub pages: usize,
    pub samples: usize,
    /// `max |rho Phi(theta, x) - Phi(1 - theta, rho f(x))|` over `theta = j/n`.
    pub symmetry_residual: f64,
    /// Same at `theta = 0` in the form `|rho chart(x) - chart(conj x)|`.
    pub invariance_zero: f64,
    /// The relation at `theta = 1/2`.
    pub invariance_half: f64,
    /// `max |arg z2(Phi(theta, x)) - arg theta - 2 pi theta|`; vanishes when
    /// the return time is constant.
    pub page_angle_deviation: f64,
}

/// Pages `Phi(theta_j, x) = phi^{theta_j tau_x}(x)`, `theta_j = j / n_pages`,
/// sampled at `samples` chart points.
pub fn open_book(page: &DiskPage, n_pages: usize, samples: usize) -> Result<OpenBookReport> {
    if !page.is_rho_invariant() {
        return Err(Error::PreconditionViolated("page is not rho-invariant".into()));
    }
    if n_pages < 2 {
        return Err(Error::InvalidInput("need at least 2 pages".into()));
    }
    let surface = page.surface().clone();
    let points: Vec<Complex<f64>> = DiskPage::probes(samples).into_iter().map(|w| w * 0.9).collect();
    let rows = par_map(points, |w| -> Result<(f64, f64, f64, f64)> {
        let x = page.chart(w)?;
        let fwd = page.first_return(w, 1.0)?;
        let y_w = fwd.image.conj();
        let y = page.chart(y_w)?;
        let ry = page.first_return(y_w, 1.0)?;
        let mut sym: f64 = 0.0;
        let mut half: f64 = 0.0;
        let mut dev: f64 = 0.0;
        for j in 0..=n_pages {
            let th = j as f64 / n_pages as f64;
            let a = surface.flow(&x, th * fwd.tau)?;
            let b = surface.flow(&y, (1.0 - th) * ry.tau)?;
            let r = (rho(&a) - b).norm();
            if j > 0 && j < n_pages {
                sym = sym.max(r);
            }
            if 2 * j == n_pages {
                half = r;
            }
            let (_, z2) = cx(&a);
            dev = dev.max(angle_diff(z2.arg(), page.angle + 2.0 * PI * th).abs());
        }
        let zero = (rho(&x) - page.chart(w.conj())?).norm();
        Ok((sym, zero, half, dev))
    });
    let mut rep = OpenBookReport {
        pages: n_pages,
        samples,
        symmetry_residual: 0.0,
        invariance_zero: 0.0,
        invariance_half: 0.0,
        page_angle_deviation: 0.0,
    };
    for r in rows {
        let (s, z, h, d) = r?;
        rep.symmetry_residual = rep.symmetry_residual.max(s);
        rep.invariance_zero = rep.invariance_zero.max(z);
        rep.invariance_half = rep.invariance_half.max(h);
        rep.page_angle_deviation = rep.page_angle_deviation.max(d);
    }
    if n_pages % 2 == 1 {
        rep.invariance_half = f64::NAN;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipsoid_return_is_rotation() {
        let page = DiskPage::ellipsoid(1.0, 1.3, 0.0).unwrap();
        let w = Complex::new(0.3, -0.4);
        let r = page.first_return(w, 1.0).unwrap();
        assert!((r.tau - 1.69 * PI).abs() < 1e-8, "{}", r.tau);
        let expected = w * Complex::from_polar(1.0, 2.0 * PI * 0.69);
        assert!((r.image - expected).norm() < 1e-8);
        let b = page.first_return(w, -1.0).unwrap();
        assert!((b.image - w * Complex::from_polar(1.0, -2.0 * PI * 0.69)).norm() < 1e-8);
        assert_eq!(page.first_return(Complex::new(0.9995, 0.0), 1.0).unwrap_err().name(), "EdgeTooClose");
    }

    #[test]
    fn ellipsoid_page_geometry() {
        let page = DiskPage::ellipsoid(1.0, 1.3, 0.0).unwrap();
        let rep = page_report(&page).unwrap();
        assert!(rep.boundary_residual < 1e-6);
        assert!(rep.chart_symmetry_residual.unwrap() < 1e-9);
        assert!((rep.transversality_margin - 2.0 / 1.69).abs() < 1e-9);
        assert!((rep.density_margin - 1.0).abs() < 1e-9);
        assert!((page_area(&page).unwrap() - PI).abs() < 1e-4 * PI);
        let other = DiskPage::ellipsoid(0.8, 1.1, 0.0).unwrap();
        assert!((page_area(&other).unwrap() - 0.64 * PI).abs() < 1e-4 * 0.64 * PI);
        assert_eq!(DiskPage::ellipsoid(1.0, 1.0, 0.0).unwrap_err().name(), "DegenerateRatio");
    }

    #[test]
    fn continuation_on_ellipsoid_matches_explicit_page() {
        let s = Arc::new(Surface::ellipsoid(1.0, 1.3).unwrap());
        let page = DiskPage::continuation(s, 0.0).unwrap();
        assert!((page.spanning.period - PI).abs() < 1e-9);
        assert!((page.r2 - 1.3).abs() < 1e-12);
    }
}
