//! Browser bindings: each export takes plain numbers and strings and
//! returns a JSON document, `{"error": ...}` on failure.

use bisimplex::action::{Gamma, Rep};
use bisimplex::fit::linspace;
use bisimplex::geometry::{dihedral_angles_3d, Simplex4};
use bisimplex::onshell::{certify, perturbed_simplex, CertifyConfig, DEFAULT_LAPSE};
use bisimplex::pathint::{suppression_curve, suppression_slope, AreaKind, SLOPE_RANGE};
use bisimplex::{Error, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn parse_kind(kind: &str) -> Result<AreaKind> {
    match kind {
        "spacelike" => Ok(AreaKind::Spacelike),
        "timelike" => Ok(AreaKind::Timelike),
        _ => Err(Error::Config(format!("unknown area kind {kind:?}"))),
    }
}

/// Single-triangle amplitude `|N0|` against `|v|` in `[5, 20]` with the
/// fitted exponential rate.
#[wasm_bindgen]
pub fn suppression(rep: &str, kind: &str, gamma: f64, points: usize) -> String {
    respond((|| {
        let rep: Rep = rep.parse()?;
        let kind = parse_kind(kind)?;
        let g = Gamma::new(gamma)?;
        let rows = suppression_curve(rep, kind, g, SLOPE_RANGE, points.clamp(2, 400))?;
        let slope = suppression_slope(rep, kind, g, SLOPE_RANGE)?;
        let abs_v: Vec<f64> = rows.iter().map(|r| r.v2.abs().sqrt()).collect();
        let n0: Vec<f64> = rows.iter().map(|r| r.closed.norm()).collect();
        let rel: Vec<f64> = rows.iter().map(|r| r.rel_err).collect();
        Ok(json!({ "abs_v": abs_v, "n0": n0, "rel_err": rel, "slope": slope }))
    })())
}

/// 3-d dihedral angles of the skewed cubic lattice over a range of lambda,
/// with the validity of the angle sectors.
#[wasm_bindgen]
pub fn lattice_angles(lambda_min: f64, lambda_max: f64, points: usize) -> String {
    respond((|| {
        let rows = linspace(lambda_min, lambda_max, points.clamp(2, 400))
            .into_iter()
            .map(|l| {
                Ok(match dihedral_angles_3d(l) {
                    Ok(t) => json!({
                        "lambda": l,
                        "angles": [t.a2_43_1, t.a1_42_3, t.a4_31_2, t.a4_23_1, t.a4_12_3],
                        "min_angle": t.min_angle,
                        "valid": t.validate_sector().is_ok(),
                    }),
                    Err(e) => json!({ "lambda": l, "error": e.to_string() }),
                })
            })
            .collect::<Result<Vec<Value>>>()?;
        Ok(json!({ "rows": rows }))
    })())
}

/// Certify the stationary connections of a lattice simplex at `lambda`
/// whose edges are perturbed by relative `amplitude`.
#[wasm_bindgen]
pub fn onshell_gap(lambda: f64, amplitude: f64, seed: u64, rep: &str) -> String {
    respond((|| {
        let rep: Rep = rep.parse()?;
        let base = Simplex4::pseudo_cubic(lambda, DEFAULT_LAPSE)?;
        let s = if amplitude == 0.0 { base } else { perturbed_simplex(&base, amplitude, seed)? };
        let r = certify("demo", &s, rep, &CertifyConfig::default())?;
        Ok(serde_json::to_value(r).map_err(|e| Error::Config(e.to_string()))?)
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn suppression_reports_slope() {
        let v = parse(&suppression("so3", "spacelike", 1.0, 20));
        assert_eq!(v["n0"].as_array().unwrap().len(), 20);
        assert!((v["slope"].as_f64().unwrap() + 0.5).abs() < 0.05);
        assert!(parse(&suppression("u1", "spacelike", 1.0, 20)).get("error").is_some());
        assert!(parse(&suppression("su2", "spacelike", 0.0, 20)).get("error").is_some());
    }

    #[test]
    fn lattice_angles_mark_validity() {
        let v = parse(&lattice_angles(-0.45, 0.2, 14));
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 14);
        assert_eq!(rows[0]["valid"], false);
        assert_eq!(rows[13]["valid"], false);
        assert!(rows.iter().any(|r| r["valid"] == true));
    }

    #[test]
    fn onshell_gap_certifies() {
        let v = parse(&onshell_gap(-1.0 / 3.0, 0.05, 3, "su2"));
        assert_eq!(v["certified"], true, "{v}");
        assert!(parse(&onshell_gap(2.0, 0.0, 0, "su2")).get("error").is_some());
    }
}
