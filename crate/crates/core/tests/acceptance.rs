//! Acceptance criteria, one pass/fail line each.

use std::time::{Duration, Instant};

use symreeb::maslov::cz_index;
use symreeb::paths::SymplecticPath;
use symreeb::spectral::{random_loop_suite, LoopSuiteReport};
use symreeb::suite::{rotation_cz, run_suite, SuiteEntry, LOOP_COUNT, NORMALIZATION_CONSTANTS};

struct Line {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn keys(list: &[&str]) -> (bool, String, Duration) {
    let only: Vec<String> = list.iter().map(|k| k.to_string()).collect();
    let start = Instant::now();
    let rep = run_suite(7, Some(&only)).expect("known keys");
    let elapsed = start.elapsed();
    let summary = rep
        .entries
        .iter()
        .map(|e: &SuiteEntry| {
            let mut s = format!("{} {}/{}", e.key, e.passed, e.checked);
            for f in &e.failures {
                s.push_str(&format!(" [{f}]"));
            }
            s
        })
        .collect::<Vec<_>>()
        .join(", ");
    (rep.all_passed(), summary, elapsed)
}

fn loops_line(name: &'static str, loops: &LoopSuiteReport, pick: &[&symreeb::maslov::PropertyTally]) -> Line {
    let ok = pick.iter().all(|t| t.all_passed() && t.checked > 0) && loops.degenerate_skipped * 10 < loops.instances;
    let detail = pick.iter().map(|t| format!("{} {}/{}", t.name, t.passed, t.checked)).collect::<Vec<_>>().join(", ");
    Line { name, ok, detail: format!("{detail}, {} degenerate skipped", loops.degenerate_skipped) }
}

fn main() {
    let mut lines = vec![];

    let start = Instant::now();
    let mut ok = true;
    for c in NORMALIZATION_CONSTANTS {
        ok &= cz_index(&SymplecticPath::rotation(c, 1.0)).map(|(mu, _)| mu == rotation_cz(c)).unwrap_or(false);
    }
    let t = start.elapsed();
    lines.push(Line { name: "index normalization", ok: ok && t < Duration::from_secs(1), detail: format!("{t:.2?}") });

    let start = Instant::now();
    let loops = random_loop_suite(7, LOOP_COUNT);
    let t = start.elapsed();
    let mut two = loops_line("two-method agreement", &loops, &[&loops.two_method]);
    two.ok &= t < Duration::from_secs(60);
    two.detail.push_str(&format!(", {t:.2?}"));
    lines.push(two);
    lines.push(loops_line("index relation", &loops, &[&loops.index_relation]));
    lines.push(loops_line("Hormander bound", &loops, &[&loops.hormander, &loops.corollary]));

    let (ok, detail, _) = keys(&["spectrum_structure"]);
    lines.push(Line { name: "spectrum structure", ok, detail });

    let (ok, detail, _) = keys(&["chord_iteration", "orbit_iteration"]);
    lines.push(Line { name: "iteration", ok, detail });

    let (ok, detail, t) = keys(&["ellipsoid_orbits"]);
    lines.push(Line { name: "ellipsoid dynamics", ok: ok && t < Duration::from_secs(30), detail: format!("{detail}, {t:.2?}") });

    let (ok, detail, _) = keys(&["section_page"]);
    lines.push(Line { name: "ellipsoid page", ok, detail });

    let (ok, detail, _) = keys(&["open_book"]);
    lines.push(Line { name: "symmetric open book", ok, detail });

    let (ok, detail, t) = keys(&["perturbed_surface"]);
    lines.push(Line { name: "perturbed surface", ok: ok && t < Duration::from_secs(300), detail: format!("{detail}, {t:.2?}") });

    let verify = || {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = symreeb::cli::run(["symreeb", "verify", "--seed", "7"], &mut out, &mut err);
        (code, out)
    };
    let (code_a, a) = verify();
    let (code_b, b) = verify();
    let same = a == b;
    lines.push(Line {
        name: "determinism",
        ok: same && code_a == 0 && code_b == 0,
        detail: format!("{} bytes, identical: {same}, exit codes {code_a} {code_b}", a.len()),
    });

    let mut failed = 0;
    for (i, l) in lines.iter().enumerate() {
        println!("{:>2}. {:<24} {}  ({})", i + 1, l.name, if l.ok { "PASS" } else { "FAIL" }, l.detail);
        if !l.ok {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
