//! Browser bindings: Conley-Zehnder index of a rotation, the spectrum of a
//! symmetric loop, and the return map of an ellipsoid page.

use serde_json::{json, Value};
use symreeb::maslov::cz_index;
use symreeb::paths::SymplecticPath;
use symreeb::section::{return_map_report, DiskPage};
use symreeb::spectral::{boundary_spectrum, mu_i, mu_minus_i, mu_spec, periodic_spectrum, Coefficients, Problem, SymmetricLoop};
use wasm_bindgen::prelude::*;

fn reply(r: symreeb::Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.name(), "message": e.to_string() }).to_string(),
    }
}

/// `mu_CZ` of `t -> exp(c t J0)` on `[0, t_end]` with its crossings.
#[wasm_bindgen]
pub fn rotation_index(c: f64, t_end: f64) -> String {
    reply(cz_index(&SymplecticPath::rotation(c, t_end)).map(|(mu, rep)| {
        let crossings: Vec<Value> = rep.crossings.iter().map(|x| json!({ "t": x.t, "signature": x.signature })).collect();
        json!({ "mu": mu, "crossings": crossings })
    }))
}

/// Spectrum of `S(t) = [[a0 + a1 cos 2 pi t, b1 sin 2 pi t], [b1 sin 2 pi t, c0]]`
/// on period 1 for `bc` in `periodic`, `I`, `-I`.
#[wasm_bindgen]
pub fn loop_spectrum(a0: f64, a1: f64, b1: f64, c0: f64, bc: &str, lo: f64, hi: f64) -> String {
    reply((|| {
        let coeff = Coefficients::Trig {
            period: 1.0,
            a_cos: vec![a0, a1],
            a_sin: vec![],
            b_cos: vec![],
            b_sin: vec![b1],
            c_cos: vec![c0],
            c_sin: vec![],
        };
        let s = SymmetricLoop::new(1.0, coeff, true)?;
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(symreeb::Error::InvalidInput("window must be increasing".into()));
        }
        let (slice, mu) = match bc {
            "I" => (boundary_spectrum(&s.half(), Problem::BcI, (lo, hi))?, mu_i(&s.half())),
            "-I" => (boundary_spectrum(&s.half(), Problem::BcMinusI, (lo, hi))?, mu_minus_i(&s.half())),
            _ => (periodic_spectrum(&s, (lo, hi))?, mu_spec(&s)),
        };
        let mu = match mu {
            Ok(m) => json!(m),
            Err(e) => json!({ "error": e.name() }),
        };
        Ok(json!({ "entries": slice.entries, "mu": mu }))
    })())
}

/// Return map of the page `z2 > 0` real of `E(r1, r2)` on an `n x n` grid.
#[wasm_bindgen]
pub fn ellipsoid_return_map(r1: f64, r2: f64, n: usize) -> String {
    reply((|| {
        let page = DiskPage::ellipsoid(r1, r2, 0.0)?;
        let rep = return_map_report(&page, n.clamp(2, 40), 20, 1)?;
        Ok(json!({
            "samples": rep.samples,
            "reversibility": rep.reversibility_residual,
            "area_drift": rep.area_drift,
            "fixed_points": rep.fixed_points,
        }))
    })())
}
