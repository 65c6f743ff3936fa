//! CSV and SVG output for sampled limit cones.

use std::fmt::Write;

use crate::density::cartan_coordinates;
use crate::group::CartanVector;
use crate::io::format_float;
use crate::schottky::ConeEstimate;

/// First two coordinates of the unit direction in an orthonormal basis of
/// the trace-zero plane (zero-padded for n = 2).
pub fn plane_direction(lambda: &CartanVector) -> (f64, f64) {
    let y = cartan_coordinates(&lambda.normalized());
    (y.first().copied().unwrap_or(0.0), y.get(1).copied().unwrap_or(0.0))
}

/// One row per sampled word: word_id, length, lambda_1..lambda_n, dir_x, dir_y.
pub fn cone_csv(cone: &ConeEstimate) -> String {
    let n = cone.samples.first().map_or(0, |w| w.lambda.n());
    let mut out = String::from("word_id,length");
    for i in 1..=n {
        let _ = write!(out, ",lambda_{i}");
    }
    out.push_str(",dir_x,dir_y\n");
    for (id, w) in cone.samples.iter().enumerate() {
        let _ = write!(out, "{id},{}", w.word.len());
        for x in w.lambda.coords() {
            let _ = write!(out, ",{}", format_float(*x));
        }
        let (dx, dy) = plane_direction(&w.lambda);
        let _ = writeln!(out, ",{},{}", format_float(dx), format_float(dy));
    }
    out
}

const SIZE: f64 = 480.0;
const PAD: f64 = 24.0;

fn to_px(x: f64, y: f64) -> (f64, f64) {
    let s = (SIZE - 2.0 * PAD) / 2.0;
    (SIZE / 2.0 + s * x, SIZE / 2.0 - s * y)
}

fn pt(out: &mut String, x: f64, y: f64) {
    let (a, b) = to_px(x, y);
    let _ = write!(out, "{a:.3},{b:.3} ");
}

/// Plot of the unit directions in the trace-zero plane of SL(3): the Weyl
/// chamber walls, one dot per sampled word and the hull as a polyline.
/// Returns None unless n = 3.
pub fn cone_svg(cone: &ConeEstimate) -> Option<String> {
    if cone.samples.first()?.lambda.n() != 3 {
        return None;
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    // walls λ1 = λ2 and λ2 = λ3
    let walls = [
        CartanVector::new(vec![1.0, 1.0, -2.0]).expect("trace zero"),
        CartanVector::new(vec![2.0, -1.0, -1.0]).expect("trace zero"),
    ];
    let mut path = String::new();
    let (wx, wy) = plane_direction(&walls[0]);
    pt(&mut path, wx, wy);
    pt(&mut path, 0.0, 0.0);
    let (wx, wy) = plane_direction(&walls[1]);
    pt(&mut path, wx, wy);
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#999999" stroke-width="1"/>"##,
        path.trim_end()
    );

    for w in &cone.samples {
        let (x, y) = plane_direction(&w.lambda);
        let (a, b) = to_px(x, y);
        let _ = writeln!(out, r##"<circle cx="{a:.3}" cy="{b:.3}" r="2" fill="#1f5fa8"/>"##);
    }

    let mut hull: Vec<(f64, f64)> = cone.hull.iter().map(plane_direction).collect();
    hull.sort_by(|p, q| p.1.atan2(p.0).total_cmp(&q.1.atan2(q.0)));
    let mut path = String::new();
    for &(x, y) in &hull {
        pt(&mut path, x, y);
    }
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##,
        path.trim_end()
    );
    out.push_str("</svg>\n");
    Some(out)
}
