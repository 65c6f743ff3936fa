use chamberflow_demo::{certify_pair_json, cone_svg_for, decompose_json};
use serde_json::Value;

#[test]
fn decompose_reports_small_residuals() {
    let v: Value = serde_json::from_str(&decompose_json("[[2,1],[1,1]]").unwrap()).unwrap();
    assert!(v["iwasawa_residual"].as_f64().unwrap() < 1e-12);
    assert!(v["cartan_residual"].as_f64().unwrap() < 1e-12);
    // eigenvalues of [[2,1],[1,1]] are φ² and φ⁻²
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let top = v["jordan"][0].as_f64().unwrap();
    assert!((top - 2.0 * phi.ln()).abs() < 1e-12);
}

#[test]
fn decompose_rejects_bad_input() {
    assert!(decompose_json("[[1,2],[3,4]]").is_err());
    assert!(decompose_json("[[1,0]]").is_err());
    assert!(decompose_json("nope").is_err());
}

#[test]
fn cone_picture_is_svg() {
    let svg = cone_svg_for(3).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(cone_svg_for(0).is_err());
    assert!(cone_svg_for(9).is_err());
}

#[test]
fn pair_certificate_meets_the_margins() {
    let v: Value = serde_json::from_str(&certify_pair_json(0.12, 0.05).unwrap()).unwrap();
    let need = v["required_margin"].as_f64().unwrap();
    for row in v["pairwise_margins"].as_array().unwrap() {
        for m in row.as_array().unwrap() {
            assert!(m.as_f64().unwrap() >= need);
        }
    }
    assert!(certify_pair_json(0.05, 0.1).is_err());
}
