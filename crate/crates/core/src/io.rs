//! JSON shapes shared by the CLI and the demo, and a writer that prints
//! every float with 17 significant digits.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::group::{GroupElement, Mat};

/// Row-major matrix: `{"n": 3, "rows": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_mat(m: &Mat) -> Self {
        MatrixJson {
            n: m.nrows(),
            rows: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn to_mat(&self) -> Result<Mat, String> {
        let n = self.n;
        if self.rows.len() != n || self.rows.iter().any(|r| r.len() != n) {
            return Err(format!("matrix is declared {n}x{n} but rows do not match"));
        }
        Ok(Mat::from_fn(n, n, |i, j| self.rows[i][j]))
    }
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from_mat(self.matrix()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        let m = j.to_mat().map_err(serde::de::Error::custom)?;
        GroupElement::new(m).map_err(serde::de::Error::custom)
    }
}

/// Pretty JSON with floats as `{:.16e}`. Non-finite floats become null,
/// as serde_json would emit them.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialize");
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    out
}

pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // keep the sign of negative zero out of reports
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if num.is_f64() {
                out.push_str(&format_float(num.as_f64().unwrap()));
            } else {
                out.push_str(&num.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // short numeric rows stay on one line
            if items.iter().all(|x| x.is_number()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, level, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                indent(level + 1, out);
                write_value(x, level + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(level, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let len = map.len();
            for (i, (k, x)) in map.iter().enumerate() {
                indent(level + 1, out);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_value(x, level + 1, out);
                if i + 1 < len {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(level, out);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_significant_digits() {
        let s = to_json_string(&vec![1.0f64 / 3.0]);
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], 1.0 / 3.0);
    }

    #[test]
    fn matrix_round_trip() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let j = MatrixJson::from_mat(&m);
        assert_eq!(j.to_mat().unwrap(), m);
        assert!(MatrixJson { n: 3, rows: j.rows }.to_mat().is_err());
    }
}
