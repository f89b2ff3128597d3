//! The verification matrix: every invariant suite keyed by a descriptive name,
//! deterministic for a fixed seed.

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::linalg::{rotation, HalfInt};
use crate::maslov::{cz_index, rs_real, verify_loop_props, verify_rs_axioms, PropertyTally};
use crate::paths::{LagrangianPath, SymplecticPath};
use crate::reeb::{
    analyze_orbits, linearized_flow, orbit_indices, BaseFrame, Linearization, OrbitSearch, OrbitSearchReport, ReebOrbit,
    Surface, Trivialization,
};
use crate::section::{open_book, page_area, page_report, return_map_report, DiskPage};
use crate::spectral::{
    boundary_spectrum, check_iteration, kernel_test, mu_i, mu_minus_i, mu_spec, nearest_eigenvalue, nondeg_split_suite,
    periodic_spectrum, random_loop_suite, BoundarySymmetricPath, LoopSuiteReport, Problem, SpectrumSlice, SymmetricLoop,
};
use crate::{Error, Result};

/// Keys of the matrix in report order, with the statement each one checks.
pub const KEYS: [(&str, &str); 19] = [
    ("cz_normalization", "mu_CZ of exp(c J0 t) on [0,1] is 2 floor(c / 2 pi) + 1"),
    ("rs_axioms", "Robbin-Salamon index axioms on generated Lagrangian paths"),
    ("loop_properties", "loop product and halving identities"),
    ("two_method", "crossing-form and spectral indices agree"),
    ("index_relation", "mu_CZ = mu_I + mu_-I"),
    ("hormander", "|mu_RS(real) - mu_RS(imaginary)| <= 1"),
    ("corollary_chord", "mu_CZ >= 3 implies mu_RS >= 3/2 on random loops"),
    ("nondeg_split", "Psi(T) nondegenerate iff both boundary pairs are"),
    ("spectrum_structure", "multiplicities, monotone windings, closed forms"),
    ("kernel_test", "kernel of A_D equals Lagrangian intersection"),
    ("chord_iteration", "iterated chord inequalities and doubled loops"),
    ("ellipsoid_orbits", "symmetric orbits of E(1, 1.3) and their indices"),
    ("orbit_iteration", "mu_CZ of iterated ellipsoid orbits"),
    ("trivialization_change", "index shift under a change of trivialization"),
    ("dynamical_convexity", "found orbits have mu_CZ >= 3 and mu_RS >= 3/2"),
    ("section_page", "ellipsoid page: area, spanning index, reversible return map"),
    ("open_book", "rho Phi(theta) = Phi(1 - theta) on the ellipsoid open book"),
    ("perturbed_surface", "perturbed ellipsoid: orbits, indices, continued page"),
    ("suite_sizes", "degenerate draws stay below one in ten"),
];

pub const LOOP_COUNT: usize = 50;
pub const SPLIT_COUNT: usize = 100;
pub const PERTURBATION: f64 = 0.05;
pub const RADII: (f64, f64) = (1.0, 1.3);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub key: String,
    pub statement: String,
    pub passed: usize,
    pub checked: usize,
    pub skipped: usize,
    pub ok: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub entries: Vec<SuiteEntry>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.ok)
    }

    pub fn first_failure(&self) -> Option<&SuiteEntry> {
        self.entries.iter().find(|e| !e.ok)
    }

    /// One line per key: `key  statement: passed/checked PASS|FAIL`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let verdict = if e.ok { "PASS" } else { "FAIL" };
            let skipped = if e.skipped > 0 { format!(" ({} skipped)", e.skipped) } else { String::new() };
            let _ = writeln!(out, "{:<22} {}: {}/{}{} {}", e.key, e.statement, e.passed, e.checked, skipped, verdict);
            for f in &e.failures {
                let _ = writeln!(out, "    {f}");
            }
        }
        out
    }
}

fn entry(key: &str, tally: PropertyTally) -> SuiteEntry {
    let statement = KEYS.iter().find(|(k, _)| *k == key).map(|(_, s)| s.to_string()).unwrap_or_default();
    SuiteEntry {
        key: key.to_string(),
        statement,
        ok: tally.checked > 0 && tally.all_passed(),
        passed: tally.passed,
        checked: tally.checked,
        skipped: tally.skipped,
        failures: tally.failures,
    }
}

fn tally(name: &str) -> PropertyTally {
    PropertyTally { name: name.to_string(), ..Default::default() }
}

/// Records a required check: errors count as failures, not skips.
fn require(t: &mut PropertyTally, label: &str, outcome: Result<std::result::Result<(), String>>) {
    let r = match outcome {
        Ok(Ok(())) => Ok(true),
        Ok(Err(why)) => {
            t.checked += 1;
            t.failures.push(format!("{label}: {why}"));
            return;
        }
        Err(e) => {
            t.checked += 1;
            t.failures.push(format!("{label}: {}: {e}", e.name()));
            return;
        }
    };
    t.record(r, String::new);
}

fn expect(cond: bool, why: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

/// Lazily shared computations of one run.
struct Context {
    seed: u64,
    loops: OnceCell<LoopSuiteReport>,
    ellipsoid: OnceCell<std::result::Result<Analysis, Error>>,
    perturbed: OnceCell<std::result::Result<Analysis, Error>>,
}

struct Analysis {
    surface: Arc<Surface>,
    report: OrbitSearchReport,
    lins: Vec<Result<Linearization>>,
}

impl Context {
    fn loops(&self) -> &LoopSuiteReport {
        self.loops.get_or_init(|| random_loop_suite(self.seed, LOOP_COUNT))
    }

    fn analysis(cell: &OnceCell<std::result::Result<Analysis, Error>>, make: impl FnOnce() -> Result<Surface>) -> Result<&Analysis> {
        cell.get_or_init(|| {
            let surface = Arc::new(make()?);
            let (report, lins) = analyze_orbits(&surface, &OrbitSearch::default())?;
            Ok(Analysis { surface, report, lins })
        })
        .as_ref()
        .map_err(Clone::clone)
    }

    fn ellipsoid(&self) -> Result<&Analysis> {
        Self::analysis(&self.ellipsoid, || Surface::ellipsoid(RADII.0, RADII.1))
    }

    fn perturbed(&self) -> Result<&Analysis> {
        Self::analysis(&self.perturbed, || Surface::perturbed_ellipsoid(RADII.0, RADII.1, PERTURBATION))
    }
}

/// Runs the matrix, restricted to `only` when given. Unknown keys are a usage
/// error.
pub fn run_suite(seed: u64, only: Option<&[String]>) -> Result<SuiteReport> {
    if let Some(keys) = only {
        for k in keys {
            if !KEYS.iter().any(|(key, _)| key == k) {
                return Err(Error::InvalidInput(format!("unknown verify key {k}")));
            }
        }
    }
    let ctx = Context { seed, loops: OnceCell::new(), ellipsoid: OnceCell::new(), perturbed: OnceCell::new() };
    let mut entries = vec![];
    for (key, _) in KEYS {
        if only.is_some_and(|keys| !keys.iter().any(|k| k == key)) {
            continue;
        }
        let t = match key {
            "cz_normalization" => cz_normalization(),
            "rs_axioms" => rs_axioms(seed),
            "loop_properties" => loop_properties(seed),
            "two_method" => ctx.loops().two_method.clone(),
            "index_relation" => ctx.loops().index_relation.clone(),
            "hormander" => ctx.loops().hormander.clone(),
            "corollary_chord" => ctx.loops().corollary.clone(),
            "nondeg_split" => nondeg_split_suite(seed.wrapping_add(1), SPLIT_COUNT),
            "spectrum_structure" => spectrum_structure(seed),
            "kernel_test" => kernel_suite(seed),
            "chord_iteration" => chord_iteration(),
            "ellipsoid_orbits" => ellipsoid_orbits(&ctx),
            "orbit_iteration" => orbit_iteration(&ctx),
            "trivialization_change" => trivialization_change(&ctx),
            "dynamical_convexity" => dynamical_convexity(&ctx),
            "section_page" => section_page(seed),
            "open_book" => open_book_suite(),
            "perturbed_surface" => perturbed_surface(&ctx, seed),
            "suite_sizes" => suite_sizes(&ctx),
            _ => unreachable!("key list and dispatch agree"),
        };
        entries.push(entry(key, t));
    }
    Ok(SuiteReport { seed, entries })
}

pub const NORMALIZATION_CONSTANTS: [f64; 6] = [0.3, 1.0, 3.0, 6.4, 9.5, 12.7];

/// `2 floor(c / 2 pi) + 1`.
pub fn rotation_cz(c: f64) -> HalfInt {
    HalfInt::from_int(2 * (c / (2.0 * PI)).floor() as i64 + 1)
}

fn cz_normalization() -> PropertyTally {
    let mut t = tally("cz_normalization");
    for c in NORMALIZATION_CONSTANTS {
        let r = cz_index(&SymplecticPath::rotation(c, 1.0)).map(|(mu, _)| {
            let want = rotation_cz(c);
            expect(mu == want, || format!("got {mu}, expected {want}"))
        });
        require(&mut t, &format!("c = {c}"), r);
    }
    t
}

fn rs_axioms(seed: u64) -> PropertyTally {
    let rep = verify_rs_axioms(seed, 20);
    let mut t = tally("rs_axioms");
    for p in rep.properties {
        t.checked += p.checked;
        t.passed += p.passed;
        t.skipped += p.skipped;
        t.failures.extend(p.failures.into_iter().map(|f| format!("{}: {f}", p.name)));
    }
    t
}

fn loop_properties(seed: u64) -> PropertyTally {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x6c6f_6f70);
    let mut t = tally("loop_properties");
    for k in 1..=3 {
        for _ in 0..4 {
            let a = rng.gen_range(0.2..5.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let beta = rng.gen_range(0.0..0.5);
            let c = 2.0 * PI * k as f64;
            let gamma = SymplecticPath::new(1.0, move |s| rotation(c * s + beta * (2.0 * PI * s).sin()));
            let v = crate::linalg::LineFrame::real();
            let col = *v.columns();
            let lambda = LagrangianPath::new(1.0, move |s| rotation(a * s) * col);
            let r = verify_loop_props(&gamma, &lambda, &v).map(|r| {
                let halving = r.halving_identity_holds != Some(false);
                expect(r.product_identity_holds && halving && r.loop_index == HalfInt::from_int(2 * k), || {
                    format!("product {} path {} loop {}", r.product, r.path, r.loop_index)
                })
            });
            match r {
                Err(e) if e.class() == crate::ErrorClass::Degenerate => t.skipped += 1,
                r => require(&mut t, &format!("k = {k}, a = {a:.4}, beta = {beta:.4}"), r),
            }
        }
    }
    t
}

fn periodic_structure(p: &SpectrumSlice) -> std::result::Result<(), String> {
    expect(p.windings_monotone(), || "windings not monotone".into())?;
    let mut groups: Vec<(HalfInt, usize)> = vec![];
    for e in &p.entries {
        match groups.last_mut() {
            Some((w, m)) if *w == e.winding => *m += e.multiplicity as usize,
            _ => groups.push((e.winding, e.multiplicity as usize)),
        }
    }
    for (i, (w, m)) in groups.iter().enumerate() {
        expect(w.is_integer(), || format!("periodic winding {w} is not an integer"))?;
        let edge = i == 0 || i + 1 == groups.len();
        expect(*m == 2 || (edge && *m == 1), || format!("winding {w} has multiplicity {m}"))?;
        if i > 0 {
            expect(*w - groups[i - 1].0 == HalfInt::from_int(1), || format!("gap before winding {w}"))?;
        }
    }
    Ok(())
}

fn boundary_structure(b: &SpectrumSlice) -> std::result::Result<(), String> {
    expect(b.windings_monotone(), || format!("{} windings not monotone", b.problem.label()))?;
    for (i, e) in b.entries.iter().enumerate() {
        expect(e.multiplicity == 1, || format!("{} eigenvalue {} has multiplicity {}", b.problem.label(), e.lambda, e.multiplicity))?;
        if i > 0 {
            let step = e.winding - b.entries[i - 1].winding;
            expect(step == HalfInt::HALF, || format!("{} winding step {step} at {}", b.problem.label(), e.lambda))?;
        }
    }
    Ok(())
}

fn union_matches(p: &SpectrumSlice, a: &SpectrumSlice, b: &SpectrumSlice) -> std::result::Result<(), String> {
    let mut full: Vec<f64> = p.entries.iter().flat_map(|e| std::iter::repeat_n(e.lambda, e.multiplicity as usize)).collect();
    let mut halves: Vec<f64> = a.lambdas().into_iter().chain(b.lambdas()).collect();
    full.sort_by(f64::total_cmp);
    halves.sort_by(f64::total_cmp);
    expect(full.len() == halves.len(), || format!("{} periodic vs {} boundary eigenvalues", full.len(), halves.len()))?;
    let gap = full.iter().zip(&halves).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    expect(gap <= 1e-6, || format!("boundary eigenvalues differ from periodic ones by {gap:.3e}"))
}

fn structure_of(s: &SymmetricLoop, closed_form: Option<f64>) -> Result<std::result::Result<(), String>> {
    let window = (-15.0, 15.0);
    let p = periodic_spectrum(s, window)?;
    let a = boundary_spectrum(&s.half(), Problem::BcI, window)?;
    let b = boundary_spectrum(&s.half(), Problem::BcMinusI, window)?;
    Ok((|| {
        periodic_structure(&p)?;
        boundary_structure(&a)?;
        boundary_structure(&b)?;
        union_matches(&p, &a, &b)?;
        if let Some(c) = closed_form {
            let want: Vec<f64> = (-10..=10).map(|k| 2.0 * PI * k as f64 / s.period - c).filter(|l| l.abs() < 15.0).collect();
            let got = p.lambdas();
            expect(want.len() == got.len(), || format!("{} eigenvalues, expected {}", got.len(), want.len()))?;
            let gap = want.iter().zip(&got).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            expect(gap <= 1e-8, || format!("closed-form eigenvalues off by {gap:.3e}"))?;
            expect(p.entries.iter().all(|e| e.multiplicity == 2), || "constant data must give double eigenvalues".into())?;
        }
        Ok(())
    })())
}

fn spectrum_structure(seed: u64) -> PropertyTally {
    let mut t = tally("spectrum_structure");
    for c in [3.0, 9.42477796, -2.0, 6.4] {
        require(&mut t, &format!("constant c = {c}"), structure_of(&SymmetricLoop::constant(c, 1.0), Some(c)));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x7370_6563);
    for i in 0..6 {
        let s = SymmetricLoop::random_symmetric(&mut rng, 3, 2.0, 1.0);
        require(&mut t, &format!("random loop {i}"), structure_of(&s, None));
    }
    t
}

fn kernel_suite(seed: u64) -> PropertyTally {
    let mut t = tally("kernel_test");
    let check = |d: &BoundarySymmetricPath, dim: usize| {
        kernel_test(d).map(|k| expect(k.agree && k.dim == dim, || format!("dim {} vs {} zero eigenvalues, expected {dim}", k.dim, k.zero_eigenvalues)))
    };
    require(&mut t, "constant 2 pi", check(&BoundarySymmetricPath::constant(2.0 * PI, 0.5), 1));
    require(&mut t, "constant pi", check(&BoundarySymmetricPath::constant(PI, 0.5), 0));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x6b65_726e);
    for i in 0..6 {
        let d = SymmetricLoop::random_symmetric(&mut rng, 3, 2.0, 1.0).half();
        let shifted = nearest_eigenvalue(&d, Problem::BcI)
            .map(|l| BoundarySymmetricPath { half_period: d.half_period, coeff: d.coeff.shifted(l) });
        match kernel_test(&d) {
            Ok(k) if k.dim == 0 => require(&mut t, &format!("random {i}"), Ok(expect(k.agree, || format!("{k:?}")))),
            Ok(_) => t.skipped += 1,
            Err(e) => require(&mut t, &format!("random {i}"), Err(e)),
        }
        require(&mut t, &format!("random {i} shifted onto an eigenvalue"), shifted.and_then(|s| check(&s, 1)));
    }
    t
}

/// Constant chord data covering the regimes `mu_I < 1/2`, `1/2 <= mu_I < 3/2`
/// and `mu_I >= 3/2`, with the expected base index (in halves).
pub const CHORD_FAMILY: [(f64, i64); 3] = [(-1.0, -1), (2.0, 1), (2.6 * PI, 3)];

fn chord_iteration() -> PropertyTally {
    let mut t = tally("chord_iteration");
    for (c, base) in CHORD_FAMILY {
        let d = BoundarySymmetricPath::constant(c, 0.5);
        let r = check_iteration(&d, 5).map(|it| {
            expect(it.holds && it.base == HalfInt::from_twice(base), || format!("base {} iterates {:?}", it.base, it.iterates))
        });
        require(&mut t, &format!("c = {c:.6}"), r);
        for m in 1..=3 {
            let r = d.iterate(m).and_then(|dm| {
                let whole = mu_spec(&dm.doubled_loop())?;
                let parts = mu_i(&dm)? + mu_minus_i(&dm)?;
                Ok(expect(whole == parts, || format!("doubled loop {whole} vs {parts}")))
            });
            match r {
                Err(e) if e.class() == crate::ErrorClass::Degenerate => t.skipped += 1,
                r => require(&mut t, &format!("c = {c:.6}, doubled m = {m}"), r),
            }
        }
    }
    t
}

/// `2m + 2 floor(m a^2 / b^2) + 1` for the orbit of `E(a, b)` in the `a` plane.
pub fn ellipsoid_cz(m: u32, a: f64, b: f64) -> HalfInt {
    let m = m as i64;
    HalfInt::from_int(2 * m + 2 * ((m as f64) * a * a / (b * b)).floor() as i64 + 1)
}

fn ellipsoid_orbit_checks(a: &Analysis) -> std::result::Result<(), String> {
    let (r1, r2) = RADII;
    let orbits = &a.report.orbits;
    expect(orbits.len() == 2, || format!("found {} orbits", orbits.len()))?;
    let periods = [PI * r1 * r1, PI * r2 * r2];
    for (o, want) in orbits.iter().zip(periods) {
        expect((o.period - want).abs() <= 1e-7, || format!("period {} vs {want}", o.period))?;
        expect(o.symmetric && o.residual <= 1e-8, || format!("orbit at T = {} residual {:.3e}", o.period, o.residual))?;
    }
    Ok(())
}

fn index_check(lin: &Linearization, orbit: &ReebOrbit, m: u32, cz: HalfInt, rs: Option<HalfInt>) -> Result<std::result::Result<(), String>> {
    let idx = orbit_indices(lin, orbit, m)?;
    Ok(expect(idx.mu_cz == cz && (rs.is_none() || idx.mu_rs == rs) && idx.implications_hold, || {
        format!("m = {m}: mu_CZ {} mu_RS {:?}, expected {cz} {rs:?}", idx.mu_cz, idx.mu_rs.map(|r| r.to_string()))
    }))
}

fn ellipsoid_orbits(ctx: &Context) -> PropertyTally {
    let mut t = tally("ellipsoid_orbits");
    let a = match ctx.ellipsoid() {
        Ok(a) => a,
        Err(e) => {
            require(&mut t, "orbit search", Err(e));
            return t;
        }
    };
    require(&mut t, "closed-form orbits", Ok(ellipsoid_orbit_checks(a)));
    if a.report.orbits.len() != 2 {
        return t;
    }
    let expected = [(HalfInt::from_int(3), Some(HalfInt::from_twice(3))), (HalfInt::from_int(5), Some(HalfInt::from_twice(5)))];
    for (i, (o, (cz, rs))) in a.report.orbits.iter().zip(expected).enumerate() {
        let r = a.lins[i].clone().and_then(|l| {
            let geometry = expect(
                l.psi_symmetry_residual <= 1e-6 && l.trivialization.unitarity <= 1e-7 && l.trivialization.symmetry <= 1e-7,
                || format!("linearization residuals {:.3e} {:?}", l.psi_symmetry_residual, l.trivialization),
            );
            Ok(index_check(&l, o, 1, cz, rs)?.and(geometry))
        });
        require(&mut t, &format!("orbit T = {:.6}", o.period), r);
    }
    t
}

fn orbit_iteration(ctx: &Context) -> PropertyTally {
    let mut t = tally("orbit_iteration");
    let (r1, r2) = RADII;
    let a = match ctx.ellipsoid() {
        Ok(a) if a.report.orbits.len() == 2 => a,
        Ok(_) => {
            require(&mut t, "orbit search", Ok(Err("expected two orbits".into())));
            return t;
        }
        Err(e) => {
            require(&mut t, "orbit search", Err(e));
            return t;
        }
    };
    for (i, (p, q, max_m)) in [(r1, r2, 4), (r2, r1, 3)].into_iter().enumerate() {
        for m in 1..=max_m {
            let r = a.lins[i].clone().and_then(|l| index_check(&l, &a.report.orbits[i], m, ellipsoid_cz(m, p, q), None));
            require(&mut t, &format!("orbit {} m = {m}", i + 1), r);
        }
    }
    t
}

fn trivialization_change(ctx: &Context) -> PropertyTally {
    let mut t = tally("trivialization_change");
    let a = match ctx.ellipsoid() {
        Ok(a) if a.report.orbits.len() == 2 => a,
        Ok(_) => {
            require(&mut t, "orbit search", Ok(Err("expected two orbits".into())));
            return t;
        }
        Err(e) => {
            require(&mut t, "orbit search", Err(e));
            return t;
        }
    };
    for (o, lin) in a.report.orbits.iter().zip(&a.lins) {
        let r = (|| {
            let grad = orbit_indices(lin.as_ref().map_err(Clone::clone)?, o, 1)?;
            let triv = Trivialization::new(a.surface.clone(), BaseFrame::Position, 0, o.period);
            let pos = orbit_indices(&linearized_flow(&a.surface, o, &triv)?, o, 1)?;
            Ok(expect(grad.mu_cz == pos.mu_cz && grad.mu_rs == pos.mu_rs, || {
                format!("gradient frame {} vs position frame {}", grad.mu_cz, pos.mu_cz)
            }))
        })();
        require(&mut t, &format!("position frame, T = {:.6}", o.period), r);
    }
    let o = &a.report.orbits[0];
    for k in 1..=2 {
        let r = (|| {
            let triv = Trivialization::new(a.surface.clone(), BaseFrame::Gradient, k, o.period);
            let idx = orbit_indices(&linearized_flow(&a.surface, o, &triv)?, o, 1)?;
            let line = rs_real(&SymplecticPath::rotation(2.0 * PI * k as f64 / o.period, o.period).restrict(0.5 * o.period))?;
            let cz = HalfInt::from_int(3) - line * 2;
            let rs = HalfInt::from_twice(3) - line;
            Ok(expect(idx.mu_cz == cz && idx.mu_rs == Some(rs), || {
                format!("twist {k}: mu_CZ {} mu_RS {:?}, expected {cz} {rs}", idx.mu_cz, idx.mu_rs.map(|r| r.to_string()))
            }))
        })();
        require(&mut t, &format!("twist {k}"), r);
    }
    t
}

fn convexity_of(t: &mut PropertyTally, label: &str, a: Result<&Analysis>) {
    let a = match a {
        Ok(a) => a,
        Err(e) => {
            require(t, label, Err(e));
            return;
        }
    };
    for (o, l) in a.report.orbits.iter().zip(&a.lins) {
        if o.degenerate != Some(false) {
            t.skipped += 1;
            continue;
        }
        let r = l.clone().and_then(|l| {
            let idx = orbit_indices(&l, o, 1)?;
            Ok(expect(idx.mu_cz >= HalfInt::from_int(3) && idx.mu_rs.is_none_or(|r| r >= HalfInt::from_twice(3)), || {
                format!("mu_CZ {}", idx.mu_cz)
            }))
        });
        require(t, &format!("{label} T = {:.6}", o.period), r);
    }
}

fn dynamical_convexity(ctx: &Context) -> PropertyTally {
    let mut t = tally("dynamical_convexity");
    convexity_of(&mut t, "ellipsoid", ctx.ellipsoid());
    convexity_of(&mut t, "perturbed", ctx.perturbed());
    t
}

fn section_page(seed: u64) -> PropertyTally {
    let mut t = tally("section_page");
    let (r1, r2) = RADII;
    let page = match DiskPage::ellipsoid(r1, r2, 0.0) {
        Ok(p) => p,
        Err(e) => {
            require(&mut t, "page", Err(e));
            return t;
        }
    };
    require(&mut t, "page geometry", page_report(&page).map(|r| {
        expect(
            r.boundary_residual <= 1e-6 && r.transversality_margin > 0.0 && r.density_margin > 0.0 && r.chart_symmetry_residual.is_some_and(|c| c <= 1e-9),
            || format!("{r:?}"),
        )
    }));
    let spanning = (|| {
        let s = page.surface().clone();
        let triv = Trivialization::new(s.clone(), BaseFrame::Gradient, 0, page.spanning.period);
        let idx = orbit_indices(&linearized_flow(&s, &page.spanning, &triv)?, &page.spanning, 1)?;
        Ok(expect(idx.mu_cz == HalfInt::from_int(3) || idx.mu_cz == HalfInt::from_int(4), || format!("spanning index {}", idx.mu_cz)))
    })();
    require(&mut t, "spanning orbit index", spanning);
    for (a, b) in [(r1, r2), (0.8, 1.1)] {
        let r = DiskPage::ellipsoid(a, b, 0.0).and_then(|p| page_area(&p)).map(|area| {
            let want = PI * a * a;
            expect((area - want).abs() <= 1e-4 * want, || format!("area {area} vs {want}"))
        });
        require(&mut t, &format!("area of E({a}, {b})"), r);
    }
    let r = return_map_report(&page, 20, 100, seed).map(|r| {
        let fixed = r.fixed_points.iter().any(|f| f.symmetric && f.w[0].hypot(f.w[1]) <= 1e-6 && (f.tau - PI * r2 * r2).abs() <= 1e-6);
        expect(r.reversibility_residual <= 1e-6, || format!("reversibility {:.3e}", r.reversibility_residual))
            .and(expect(r.area_drift <= 1e-4, || format!("area drift {:.3e}", r.area_drift)))
            .and(expect(r.min_image_separation > 1e-3, || format!("image separation {:.3e}", r.min_image_separation)))
            .and(expect(fixed, || format!("no symmetric fixed point at the second orbit: {:?}", r.fixed_points)))
    });
    require(&mut t, "return map", r);
    let quarter = DiskPage::ellipsoid(r1, r2, 0.5 * PI).map(|p| {
        let rejected = matches!(return_map_report(&p, 4, 1, seed), Err(Error::PreconditionViolated(_)));
        expect(!p.is_rho_invariant() && rejected, || "page at theta = i treated as invariant".into())
    });
    require(&mut t, "non-real page", quarter);
    t
}

fn open_book_checks(page: &DiskPage, angle_tol: Option<f64>) -> Result<std::result::Result<(), String>> {
    let r = open_book(page, 10, 200)?;
    Ok(expect(r.symmetry_residual <= 1e-6 && r.invariance_zero <= 1e-6 && r.invariance_half <= 1e-6, || {
        format!("symmetry {:.3e} zero {:.3e} half {:.3e}", r.symmetry_residual, r.invariance_zero, r.invariance_half)
    })
    .and(expect(angle_tol.is_none_or(|tol| r.page_angle_deviation <= tol), || format!("page angle deviation {:.3e}", r.page_angle_deviation))))
}

fn open_book_suite() -> PropertyTally {
    let mut t = tally("open_book");
    for angle in [0.0, PI] {
        let r = DiskPage::ellipsoid(RADII.0, RADII.1, angle).and_then(|p| open_book_checks(&p, Some(1e-6)));
        require(&mut t, &format!("page angle {angle:.4}"), r);
    }
    t
}

fn perturbed_surface(ctx: &Context, seed: u64) -> PropertyTally {
    let mut t = tally("perturbed_surface");
    let a = match ctx.perturbed() {
        Ok(a) => a,
        Err(e) => {
            require(&mut t, "orbit search", Err(e));
            return t;
        }
    };
    let symmetric = a.report.orbits.iter().filter(|o| o.symmetric).count();
    require(&mut t, "orbit count", Ok(expect(symmetric >= 2, || format!("{symmetric} symmetric orbits"))));
    for (o, l) in a.report.orbits.iter().zip(&a.lins) {
        for m in 1..=3 {
            let r = l.clone().and_then(|l| {
                let idx = orbit_indices(&l, o, m)?;
                Ok(expect(idx.implications_hold, || format!("mu_CZ {} mu_RS {:?}", idx.mu_cz, idx.mu_rs.map(|r| r.to_string()))))
            });
            match r {
                Err(Error::DegenerateOrbit { .. }) => t.skipped += 1,
                r => require(&mut t, &format!("T = {:.6} m = {m}", o.period), r),
            }
        }
    }
    let page = match DiskPage::continuation(a.surface.clone(), 0.0) {
        Ok(p) => p,
        Err(e) => {
            require(&mut t, "continuation page", Err(e));
            return t;
        }
    };
    require(&mut t, "page geometry", page_report(&page).map(|r| {
        expect(r.transversality_margin > 0.0 && r.density_margin > 0.0 && r.boundary_residual <= 1e-6, || format!("{r:?}"))
    }));
    let r = return_map_report(&page, 12, 40, seed).map(|r| {
        expect(r.reversibility_residual <= 1e-6, || format!("reversibility {:.3e}", r.reversibility_residual))
            .and(expect(r.area_drift <= 1e-4, || format!("area drift {:.3e}", r.area_drift)))
    });
    require(&mut t, "return map", r);
    let r = page_area(&page).map(|area| {
        let want = page.spanning.period;
        expect((area - want).abs() <= 1e-4 * want, || format!("area {area} vs spanning period {want}"))
    });
    require(&mut t, "page area", r);
    require(&mut t, "open book", open_book_checks(&page, None));
    t
}

fn suite_sizes(ctx: &Context) -> PropertyTally {
    let mut t = tally("suite_sizes");
    let loops = ctx.loops();
    let ok = loops.degenerate_skipped * 10 < loops.instances;
    require(&mut t, "random loops", Ok(expect(ok, || format!("{} of {} skipped", loops.degenerate_skipped, loops.instances))));
    t
}
