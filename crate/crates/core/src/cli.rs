//! Command-line front end.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::linalg::{rotation, LineFrame};
use crate::maslov::{check_boundary_pairs, cz_index_with, rs_index_with, Crossing, CrossingOptions};
use crate::paths::{LagrangianPath, LinePath, SymplecticPath};
use crate::reeb::{
    analyze_orbits, linearized_flow, orbit_indices, BaseFrame, Linearization, OrbitSearch, ReebOrbit, Surface, SurfaceSpec,
    Trivialization,
};
use crate::section::{open_book, page_area, page_report, return_map_report, DiskPage};
use crate::spectral::{
    boundary_spectrum, default_window, mu_i, mu_minus_i, mu_spec, periodic_spectrum, Coefficients, Problem, SymmetricLoop,
};
use crate::suite::run_suite;
use crate::{Error, ErrorClass, HalfInt, Result};

const CONSTANTS_HELP: &str = "Constants: pi = 3.14159265358979, 2 pi = 6.28318530717959, pi/2 = 1.5707963267949, pi/4 = 0.785398163397448.

Path specifications: rotation:c=C,T=T | hyperbolic:a=A,w=W,T=T | constant:c=C,T=T |
rotation-lagrangian:span=A..B,axis=real|imaginary | a JSON file with a \"kind\" field.
Surface specifications: ellipsoid:R1,R2 | perturbed:R1,R2,EPS | a JSON surface file.

Exit codes: 0 ok, 1 usage, 2 degenerate input, 3 numerical failure or failed verification.";

#[derive(Debug, Parser)]
#[command(name = "symreeb", version, about = "Maslov-type indices and symmetric Reeb dynamics", after_help = CONSTANTS_HELP)]
pub struct Cli {
    /// Crossing detection threshold for `index`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub emit: Option<Emit>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IndexKind {
    Rs,
    Cz,
    Hormander,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Real,
    Imaginary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bc {
    I,
    MinusI,
    Periodic,
}

fn parse_bc(s: &str) -> std::result::Result<Bc, String> {
    match s {
        "I" | "i" => Ok(Bc::I),
        "-I" | "-i" => Ok(Bc::MinusI),
        "periodic" => Ok(Bc::Periodic),
        _ => Err(format!("expected I, -I or periodic, got {s}")),
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.trim().parse().map_err(|_| format!("bad number {a}"))?,
            b.trim().parse().map_err(|_| format!("bad number {b}"))?,
        )),
        _ => Err(format!("expected A,B, got {s}")),
    }
}

fn parse_theta(s: &str) -> std::result::Result<f64, String> {
    match s {
        "1" => Ok(0.0),
        "i" => Ok(0.5 * PI),
        "-1" => Ok(PI),
        "-i" => Ok(-0.5 * PI),
        _ => {
            let (re, im) = parse_pair(s)?;
            if re == 0.0 && im == 0.0 {
                return Err("theta must be nonzero".into());
            }
            Ok(im.atan2(re))
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robbin-Salamon, Conley-Zehnder or boundary-difference index of a path.
    Index {
        #[arg(value_enum)]
        kind: IndexKind,
        #[arg(long)]
        path: String,
        /// Reference line of `rs` for symplectic paths.
        #[arg(long, value_enum, default_value_t = Axis::Real)]
        axis: Axis,
    },
    /// Eigenvalues and windings of the asymptotic operator of a loop.
    Spectrum {
        #[arg(long = "loop")]
        loop_spec: String,
        #[arg(long, value_parser = parse_bc, default_value = "periodic", allow_hyphen_values = true)]
        bc: Bc,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        window: Option<(f64, f64)>,
    },
    /// Symmetric periodic Reeb orbits.
    Orbit {
        #[command(subcommand)]
        action: OrbitAction,
    },
    /// Disk-like surfaces of section and their return maps.
    Section {
        #[command(subcommand)]
        action: SectionAction,
    },
    /// Runs the verification matrix.
    Verify {
        /// Comma-separated keys to run.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
    },
}

#[derive(Debug, Subcommand)]
pub enum OrbitAction {
    Find {
        #[arg(long)]
        surface: String,
        /// Search among orbits invariant under complex conjugation.
        #[arg(long)]
        symmetric: bool,
        #[arg(long, default_value_t = 6.0)]
        period_cap: f64,
    },
    Index {
        #[arg(long)]
        surface: String,
        #[arg(long)]
        symmetric: bool,
        /// Start point `x1,y1,x2,y2`; without it every found orbit is indexed.
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        #[arg(long)]
        period: Option<f64>,
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Twist of the trivialization.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        twist: i32,
        #[arg(long)]
        position_frame: bool,
    },
}

#[derive(Debug, clap::Args)]
pub struct PageArgs {
    #[arg(long, default_value = "ellipsoid:1,1.3")]
    surface: String,
    /// Page label `1`, `-1`, `i`, `-i` or `re,im`.
    #[arg(long, value_parser = parse_theta, default_value = "1", allow_hyphen_values = true)]
    theta: f64,
}

#[derive(Debug, Subcommand)]
pub enum SectionAction {
    Page {
        #[command(flatten)]
        page: PageArgs,
    },
    Return {
        #[command(flatten)]
        page: PageArgs,
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[arg(long, default_value_t = 100)]
        quads: usize,
        /// Also write an SVG scatter of the samples.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    Area {
        #[command(flatten)]
        page: PageArgs,
    },
    Openbook {
        #[command(flatten)]
        page: PageArgs,
        #[arg(long, default_value_t = 10)]
        pages: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

/// Declarative path and loop inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PathSpec {
    Rotation {
        c: f64,
        #[serde(rename = "T")]
        t: f64,
    },
    Hyperbolic {
        a: f64,
        w: f64,
        #[serde(rename = "T")]
        t: f64,
    },
    Sampled {
        times: Vec<f64>,
        /// Row-major `[a, b, c, d]`.
        matrices: Vec<[f64; 4]>,
    },
    /// `Psi' = J0 S Psi` with constant symmetric `S = [[a, b], [b, c]]`.
    Ode {
        #[serde(rename = "S")]
        s: [f64; 3],
        #[serde(rename = "T")]
        t: f64,
    },
    Constant {
        c: f64,
        #[serde(rename = "T")]
        t: f64,
    },
    Trig {
        #[serde(rename = "T")]
        t: f64,
        #[serde(default)]
        a_cos: Vec<f64>,
        #[serde(default)]
        a_sin: Vec<f64>,
        #[serde(default)]
        b_cos: Vec<f64>,
        #[serde(default)]
        b_sin: Vec<f64>,
        #[serde(default)]
        c_cos: Vec<f64>,
        #[serde(default)]
        c_sin: Vec<f64>,
        #[serde(default = "yes")]
        symmetric: bool,
    },
    #[serde(alias = "from_orbit")]
    FromOrbit {
        surface: SurfaceSpec,
        start: [f64; 4],
        #[serde(rename = "T")]
        t: f64,
        #[serde(default = "yes")]
        symmetric: bool,
    },
    #[serde(alias = "rotation_lagrangian")]
    RotationLagrangian {
        span: [f64; 2],
        #[serde(default = "real_axis")]
        axis: String,
    },
}

fn yes() -> bool {
    true
}

fn real_axis() -> String {
    "real".into()
}

/// Reads `kind:key=value,...` or a JSON file.
pub fn parse_path_spec(s: &str) -> Result<PathSpec> {
    let value = if Path::new(s).is_file() {
        let text = std::fs::read_to_string(s).map_err(|e| Error::InvalidInput(format!("{s}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{s}: {e}")))?
    } else {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(kind.to_string()));
        for item in rest.split(',').filter(|x| !x.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("expected key=value, got {item}")))?;
            let value = if let Some((a, b)) = v.split_once("..") {
                json!([number(a)?, number(b)?])
            } else if let Ok(x) = v.parse::<f64>() {
                json!(x)
            } else {
                json!(v)
            };
            obj.insert(k.to_string(), value);
        }
        Value::Object(obj)
    };
    serde_json::from_value(value).map_err(|e| Error::InvalidInput(format!("path specification {s}: {e}")))
}

fn number(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::InvalidInput(format!("bad number {s}")))
}

fn orbit_loop(surface: SurfaceSpec, start: [f64; 4], t: f64, symmetric: bool) -> Result<Linearization> {
    let surface = Arc::new(Surface::from_spec(surface)?);
    let orbit = ReebOrbit::from_start(&surface, nalgebra::Vector4::from(start), t, symmetric)?;
    let triv = Trivialization::new(surface.clone(), BaseFrame::Gradient, 0, t);
    linearized_flow(&surface, &orbit, &triv)
}

impl PathSpec {
    /// The loop `S` of a loop-type specification.
    pub fn symmetric_loop(&self) -> Result<SymmetricLoop> {
        match self.clone() {
            PathSpec::Constant { c, t } => {
                let s = SymmetricLoop::constant(c, t);
                s.validate()?;
                Ok(s)
            }
            PathSpec::Ode { s, t } => {
                SymmetricLoop::new(t, Coefficients::Constant(Matrix2::new(s[0], s[1], s[1], s[2])), s[1] == 0.0)
            }
            PathSpec::Trig { t, a_cos, a_sin, b_cos, b_sin, c_cos, c_sin, symmetric } => {
                SymmetricLoop::new(t, Coefficients::Trig { period: t, a_cos, a_sin, b_cos, b_sin, c_cos, c_sin }, symmetric)
            }
            PathSpec::FromOrbit { surface, start, t, symmetric } => {
                let lin = orbit_loop(surface, start, t, symmetric)?;
                Ok(lin.loop_s)
            }
            _ => Err(Error::InvalidInput("expected a loop specification (constant, ode, trig or from-orbit)".into())),
        }
    }

    /// The symplectic path of a path- or loop-type specification.
    pub fn symplectic_path(&self) -> Result<SymplecticPath> {
        match self.clone() {
            PathSpec::Rotation { c, t } => Ok(SymplecticPath::rotation(c, t)),
            PathSpec::Hyperbolic { a, w, t } => Ok(SymplecticPath::hyperbolic(a, w, t)),
            PathSpec::Sampled { times, matrices } => {
                let mats = matrices.iter().map(|m| Matrix2::new(m[0], m[1], m[2], m[3])).collect();
                let p = SymplecticPath::sampled(times, mats)?;
                p.validate()?;
                Ok(p)
            }
            PathSpec::FromOrbit { surface, start, t, symmetric } => Ok(orbit_loop(surface, start, t, symmetric)?.psi),
            PathSpec::RotationLagrangian { .. } => {
                Err(Error::InvalidInput("rotation-lagrangian is a Lagrangian path, not a symplectic one".into()))
            }
            _ => self.symmetric_loop()?.psi(),
        }
    }
}

fn axis_frame(name: &str) -> Result<LineFrame> {
    match name {
        "real" => Ok(LineFrame::real()),
        "imaginary" => Ok(LineFrame::imaginary()),
        _ => Err(Error::InvalidInput(format!("axis must be real or imaginary, got {name}"))),
    }
}

/// `ellipsoid:R1,R2`, `perturbed:R1,R2,EPS` or a JSON surface file.
pub fn parse_surface(s: &str) -> Result<Surface> {
    if Path::new(s).is_file() {
        let text = std::fs::read_to_string(s).map_err(|e| Error::InvalidInput(format!("{s}: {e}")))?;
        let spec: SurfaceSpec = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{s}: {e}")))?;
        return Surface::from_spec(spec);
    }
    let (kind, rest) = s.split_once(':').ok_or_else(|| Error::InvalidInput(format!("unknown surface {s}")))?;
    let nums = rest.split(',').map(number).collect::<Result<Vec<f64>>>()?;
    match (kind, nums.as_slice()) {
        ("ellipsoid", [a, b]) => Surface::ellipsoid(*a, *b),
        ("perturbed", [a, b, e]) => Surface::perturbed_ellipsoid(*a, *b, *e),
        _ => Err(Error::InvalidInput(format!("unknown surface {s}"))),
    }
}

#[derive(Serialize)]
struct CrossingRecord {
    t: f64,
    signature: i32,
}

fn crossing_records(c: &[Crossing]) -> Vec<CrossingRecord> {
    c.iter().map(|c| CrossingRecord { t: c.t, signature: c.signature }).collect()
}

fn crossings_csv(c: &[Crossing]) -> String {
    let mut out = String::from("t,signature\n");
    for x in c {
        out.push_str(&format!("{:.12},{}\n", x.t, x.signature));
    }
    out
}

/// Output of a command before it is written.
struct Outcome {
    body: String,
    extra: Option<(PathBuf, String)>,
    failure: Option<String>,
}

impl Outcome {
    fn body(body: String) -> Self {
        Outcome { body, extra: None, failure: None }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(cli: &Cli, json: impl FnOnce() -> String, csv: Option<String>) -> Result<Outcome> {
    match (cli.emit.unwrap_or(Emit::Json), csv) {
        (Emit::Json, _) => Ok(Outcome::body(json())),
        (Emit::Csv, Some(c)) => Ok(Outcome::body(c)),
        (Emit::Csv, None) => Err(Error::InvalidInput("this command has no CSV form".into())),
    }
}

fn crossing_options(cli: &Cli) -> CrossingOptions {
    let mut opts = CrossingOptions::default();
    if let Some(t) = cli.tol {
        opts.crossing_tol = t;
    }
    opts
}

fn cmd_index(cli: &Cli, kind: IndexKind, path: &str, axis: Axis) -> Result<Outcome> {
    let spec = parse_path_spec(path)?;
    let opts = crossing_options(cli);
    let (mu, crossings) = match (kind, &spec) {
        (IndexKind::Rs, PathSpec::RotationLagrangian { span, axis }) => {
            let v = axis_frame(axis)?;
            let col = *v.columns();
            let (a, b) = (span[0], span[1]);
            if b <= a {
                return Err(Error::InvalidInput("span must be increasing".into()));
            }
            let line: LinePath = LagrangianPath::new(b - a, move |t| rotation(a + t) * col);
            let (mu, rep) = rs_index_with(&line, &v, &opts)?;
            (mu, rep.crossings)
        }
        (IndexKind::Rs, _) => {
            let psi = spec.symplectic_path()?;
            let v = if axis == Axis::Real { LineFrame::real() } else { LineFrame::imaginary() };
            let (mu, rep) = rs_index_with(&LinePath::image(&psi, &v), &v, &opts)?;
            (mu, rep.crossings)
        }
        (IndexKind::Cz, _) => {
            let (mu, rep) = cz_index_with(&spec.symplectic_path()?, &opts)?;
            (mu, rep.crossings)
        }
        (IndexKind::Hormander, _) => {
            let psi = spec.symplectic_path()?;
            let half = psi.restrict(0.5 * psi.t_end());
            check_boundary_pairs(&half.eval(half.t_end()))?;
            let (re, a) = rs_index_with(&LinePath::image(&half, &LineFrame::real()), &LineFrame::real(), &opts)?;
            let (im, b) = rs_index_with(&LinePath::image(&half, &LineFrame::imaginary()), &LineFrame::imaginary(), &opts)?;
            let mut all = a.crossings;
            all.extend(b.crossings);
            (re - im, all)
        }
    };
    let csv = crossings_csv(&crossings);
    emit(cli, || to_json(&json!({ "mu": mu, "crossings": crossing_records(&crossings) })), Some(csv))
}

fn cmd_spectrum(cli: &Cli, loop_spec: &str, bc: Bc, window: Option<(f64, f64)>) -> Result<Outcome> {
    let s = parse_path_spec(loop_spec)?.symmetric_loop()?;
    let window = window.unwrap_or_else(|| default_window(s.period, 1));
    if window.0 >= window.1 {
        return Err(Error::InvalidInput("window must be increasing".into()));
    }
    let (slice, mu) = match bc {
        Bc::Periodic => (periodic_spectrum(&s, window)?, mu_spec(&s)),
        Bc::I => (boundary_spectrum(&s.half(), Problem::BcI, window)?, mu_i(&s.half())),
        Bc::MinusI => (boundary_spectrum(&s.half(), Problem::BcMinusI, window)?, mu_minus_i(&s.half())),
    };
    let mu = mu?;
    let csv = slice.to_csv();
    emit(
        cli,
        || to_json(&json!({ "problem": slice.problem.label(), "window": [window.0, window.1], "entries": slice.entries, "mu": mu })),
        Some(csv),
    )
}

#[derive(Serialize)]
struct OrbitRecord {
    start: [f64; 4],
    #[serde(rename = "T")]
    t: f64,
    symmetric: bool,
    residual: f64,
    m: u32,
    mu_cz: Option<HalfInt>,
    mu_rs: Option<HalfInt>,
    degenerate: Option<bool>,
    error: Option<String>,
}

fn orbit_record(orbit: &ReebOrbit, idx: Result<crate::reeb::OrbitIndices>, m: u32) -> OrbitRecord {
    let (mu_cz, mu_rs, error) = match idx {
        Ok(i) => (Some(i.mu_cz), i.mu_rs, None),
        Err(e) => (None, None, Some(e.name().to_string())),
    };
    OrbitRecord {
        start: orbit.start,
        t: orbit.period,
        symmetric: orbit.symmetric,
        residual: orbit.residual,
        m,
        mu_cz,
        mu_rs,
        degenerate: orbit.degenerate,
        error,
    }
}

fn orbits_csv(rows: &[OrbitRecord]) -> String {
    let mut out = String::from("x1,y1,x2,y2,T,symmetric,residual,m,mu_cz,mu_rs\n");
    let show = |h: Option<HalfInt>| h.map(|h| h.to_string()).unwrap_or_default();
    for r in rows {
        let [a, b, c, d] = r.start;
        out.push_str(&format!(
            "{a:.12},{b:.12},{c:.12},{d:.12},{:.12},{},{:.3e},{},{},{}\n",
            r.t,
            r.symmetric,
            r.residual,
            r.m,
            show(r.mu_cz),
            show(r.mu_rs)
        ));
    }
    out
}

fn require_symmetric(symmetric: bool) -> Result<()> {
    if !symmetric {
        return Err(Error::InvalidInput("only the symmetric orbit search is available; pass --symmetric".into()));
    }
    Ok(())
}

fn cmd_orbit(cli: &Cli, action: &OrbitAction) -> Result<Outcome> {
    let rows = match action {
        OrbitAction::Find { surface, symmetric, period_cap } => {
            require_symmetric(*symmetric)?;
            let surface = Arc::new(parse_surface(surface)?);
            let search = OrbitSearch { period_cap: *period_cap, ..OrbitSearch::default() };
            let (rep, lins) = analyze_orbits(&surface, &search)?;
            rep.orbits
                .iter()
                .zip(lins)
                .map(|(o, l)| orbit_record(o, l.and_then(|l| orbit_indices(&l, o, 1)), 1))
                .collect::<Vec<_>>()
        }
        OrbitAction::Index { surface, symmetric, start, period, m, twist, position_frame } => {
            require_symmetric(*symmetric)?;
            let surface = Arc::new(parse_surface(surface)?);
            let orbits = match (start, period) {
                (Some(s), Some(t)) => {
                    let v = s.split(',').map(number).collect::<Result<Vec<f64>>>()?;
                    if v.len() != 4 {
                        return Err(Error::InvalidInput("start needs four coordinates".into()));
                    }
                    vec![ReebOrbit::from_start(&surface, nalgebra::Vector4::new(v[0], v[1], v[2], v[3]), *t, true)?]
                }
                (None, None) => crate::reeb::find_symmetric_orbits(&surface, &OrbitSearch::default())?.orbits,
                _ => return Err(Error::InvalidInput("give both --start and --period or neither".into())),
            };
            let base = if *position_frame { BaseFrame::Position } else { BaseFrame::Gradient };
            orbits
                .iter()
                .map(|o| {
                    let triv = Trivialization::new(surface.clone(), base, *twist, o.period);
                    let idx = linearized_flow(&surface, o, &triv).and_then(|l| orbit_indices(&l, o, *m));
                    orbit_record(o, idx, *m)
                })
                .collect()
        }
    };
    let csv = orbits_csv(&rows);
    emit(cli, || to_json(&rows), Some(csv))
}

fn build_page(args: &PageArgs) -> Result<DiskPage> {
    let surface = parse_surface(&args.surface)?;
    match surface.ellipsoid_radii() {
        Some((a, b)) => DiskPage::ellipsoid(a, b, args.theta),
        None => DiskPage::continuation(Arc::new(surface), args.theta),
    }
}

fn cmd_section(cli: &Cli, action: &SectionAction) -> Result<Outcome> {
    match action {
        SectionAction::Page { page } => {
            let rep = page_report(&build_page(page)?)?;
            emit(cli, || to_json(&rep), None)
        }
        SectionAction::Return { page, grid, quads, svg } => {
            let rep = return_map_report(&build_page(page)?, *grid, *quads, cli.seed)?;
            let mut out = emit(cli, || to_json(&rep), Some(rep.to_csv()))?;
            out.extra = svg.as_ref().map(|p| (p.clone(), rep.to_svg()));
            Ok(out)
        }
        SectionAction::Area { page } => {
            let p = build_page(page)?;
            let area = page_area(&p)?;
            emit(cli, || to_json(&json!({ "area": area, "spanning_period": p.spanning.period })), None)
        }
        SectionAction::Openbook { page, pages, samples } => {
            let rep = open_book(&build_page(page)?, *pages, *samples)?;
            emit(cli, || to_json(&rep), None)
        }
    }
}

fn cmd_verify(cli: &Cli, only: Option<&[String]>) -> Result<Outcome> {
    let rep = run_suite(cli.seed, only)?;
    let body = match cli.emit {
        Some(Emit::Json) => to_json(&rep),
        Some(Emit::Csv) => return Err(Error::InvalidInput("verify has no CSV form".into())),
        None => rep.to_text(),
    };
    let failure = rep.first_failure().map(|e| format!("verification failed: {}", e.key));
    Ok(Outcome { body, extra: None, failure })
}

fn execute(cli: &Cli) -> Result<Outcome> {
    if cli.tol.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    match &cli.command {
        Command::Index { kind, path, axis } => cmd_index(cli, *kind, path, *axis),
        Command::Spectrum { loop_spec, bc, window } => cmd_spectrum(cli, loop_spec, *bc, *window),
        Command::Orbit { action } => cmd_orbit(cli, action),
        Command::Section { action } => cmd_section(cli, action),
        Command::Verify { only } => cmd_verify(cli, only.as_deref()),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Usage => 1,
        ErrorClass::Degenerate => 2,
        ErrorClass::Numerical => 3,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = match cli.jobs {
        Some(j) => crate::par::with_jobs(j, || execute(&cli)),
        None => execute(&cli),
    };
    match result {
        Ok(outcome) => {
            let written = match &cli.out {
                Some(p) => std::fs::write(p, &outcome.body),
                None => out.write_all(outcome.body.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "IoError: {e}");
                return 1;
            }
            if let Some((p, text)) = outcome.extra {
                if let Err(e) = std::fs::write(&p, text) {
                    let _ = writeln!(err, "IoError: {}: {e}", p.display());
                    return 1;
                }
            }
            match outcome.failure {
                Some(msg) => {
                    let _ = writeln!(err, "{msg}");
                    3
                }
                None => 0,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            exit_code(&e)
        }
    }
}
