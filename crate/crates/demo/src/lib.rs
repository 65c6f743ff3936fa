//! Browser bindings for three chamberflow operations. The plain functions
//! return `Result<String, String>` so they can be tested natively; the
//! `wasm_bindgen` wrappers turn errors into JS exceptions.

use chamberflow_core::fixtures;
use chamberflow_core::io::{to_json_string, MatrixJson};
use chamberflow_core::linalg::{cartan_kak, iwasawa_kan, jordan_projection, relative_error};
use chamberflow_core::plot::cone_svg;
use chamberflow_core::schottky::{build_schottky, limit_cone, DEFAULT_WORD_CAP};
use chamberflow_core::GroupElement;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Longest word the page may ask for; length 7 is already 3280 words.
pub const MAX_CONE_LENGTH: usize = 7;

/// KAN and KAK a-parts and the Jordan projection of a matrix given as JSON
/// rows, e.g. `[[2,1],[1,1]]`.
pub fn decompose_json(rows: &str) -> Result<String, String> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(rows).map_err(|e| format!("bad matrix: {e}"))?;
    let m = MatrixJson { n: rows.len(), rows }.to_mat()?;
    let g = GroupElement::new(m).map_err(|e| e.to_string())?;
    let kan = iwasawa_kan(&g).map_err(|e| e.to_string())?;
    let kak = cartan_kak(&g).map_err(|e| e.to_string())?;
    Ok(to_json_string(&json!({
        "iwasawa_a": kan.a,
        "iwasawa_residual": relative_error(&kan.reconstruct(), g.matrix()),
        "cartan_a": kak.a,
        "cartan_residual": relative_error(&kak.reconstruct(), g.matrix()),
        "jordan": jordan_projection(&g),
    })))
}

/// SVG of the sampled limit cone of the engineered SL(3) family.
pub fn cone_svg_for(max_len: usize) -> Result<String, String> {
    if !(1..=MAX_CONE_LENGTH).contains(&max_len) {
        return Err(format!("word length must be between 1 and {MAX_CONE_LENGTH}"));
    }
    let fx = fixtures::sl3_engineered();
    let fam = build_schottky(&fx.seeds, fx.r, fx.eps, fx.max_power).map_err(|e| e.to_string())?;
    let cone = limit_cone(&fam, max_len, DEFAULT_WORD_CAP).map_err(|e| e.to_string())?;
    cone_svg(&cone).ok_or_else(|| "no picture for this rank".to_string())
}

/// Certified powers and Schottky margins of the SL(2) reference pair at the
/// given (r, ε).
pub fn certify_pair_json(r: f64, eps: f64) -> Result<String, String> {
    if !(r > 0.0 && eps > 0.0 && eps <= r) {
        return Err("need 0 < eps <= r".into());
    }
    let fx = fixtures::sl2_pair();
    let fam = build_schottky(&fx.seeds, r, eps, fx.max_power).map_err(|e| e.to_string())?;
    Ok(to_json_string(&json!({
        "powers": fam.powers,
        "lambda": fam.generators.iter().map(|g| g.lambda.clone()).collect::<Vec<_>>(),
        "pairwise_margins": fam.pairwise_margins,
        "required_margin": 6.0 * r,
        "certificates": fam.certificates,
    })))
}

#[wasm_bindgen]
pub fn decompose(rows: &str) -> Result<String, JsError> {
    decompose_json(rows).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn limit_cone_svg(max_len: usize) -> Result<String, JsError> {
    cone_svg_for(max_len).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn certify_pair(r: f64, eps: f64) -> Result<String, JsError> {
    certify_pair_json(r, eps).map_err(|e| JsError::new(&e))
}
