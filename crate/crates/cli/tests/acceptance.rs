//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use chamberflow_core::verify::{self, IdentityResult, VerifyConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn find<'a>(results: &'a [IdentityResult], name: &str) -> &'a IdentityResult {
    results
        .iter()
        .find(|r| r.name == name)
        .unwrap_or_else(|| panic!("no entry {name}"))
}

/// Passes when the entry passed, covers `instances` cases and its residual
/// is below `bound`.
fn residual_ok(results: &[IdentityResult], name: &str, instances: usize, bound: f64) -> (bool, String) {
    let r = find(results, name);
    let x = r.max_residual.unwrap_or(f64::INFINITY);
    let ok = r.pass && r.instances >= instances && x < bound;
    (ok, format!("{name} {x:.2e} over {}", r.instances))
}

fn all_of(parts: Vec<(bool, String)>) -> Outcome {
    Outcome {
        pass: parts.iter().all(|p| p.0),
        detail: parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; "),
    }
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let el = t.elapsed();
    if el > budget {
        o.pass = false;
    }
    o.detail = format!("{} [{:.1} s of {} s]", o.detail, el.as_secs_f64(), budget.as_secs());
    o
}

fn checks_ok(results: &[IdentityResult]) -> (bool, String) {
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    (failed.is_empty(), if failed.is_empty() { "all entries pass".into() } else { format!("failed: {}", failed.join(", ")) })
}

fn strip_timestamp(s: &str) -> String {
    s.lines().filter(|l| !l.contains("\"timestamp_unix\"")).collect::<Vec<_>>().join("\n")
}

fn main() {
    let cfg = VerifyConfig::default();
    let secs = Duration::from_secs;
    let mut outcomes: Vec<(&str, Outcome)> = Vec::new();

    outcomes.push((
        "decompositions",
        timed(secs(10), || {
            let r = verify::decompositions(&cfg);
            all_of(
                ["iwasawa_kan_roundtrip", "iwasawa_kan_minus_roundtrip", "cartan_kak_roundtrip", "bruhat_lu_roundtrip"]
                    .iter()
                    .map(|n| residual_ok(&r, n, 1000, 1e-9))
                    .collect(),
            )
        }),
    ));

    let cocycles = verify::cocycles(&cfg);
    outcomes.push((
        "cocycle algebra",
        all_of(
            ["cocycle_relation", "transition_chasles", "cohomology_bridge"]
                .iter()
                .map(|n| residual_ok(&cocycles, n, 200, 1e-8))
                .collect(),
        ),
    ));
    outcomes.push((
        "hopf compatibility",
        all_of(vec![residual_ok(&cocycles, "hopf_compatibility", 200, 1e-9)]),
    ));

    outcomes.push(("loxodromic identities", {
        let r = verify::loxodromy(&cfg);
        all_of(vec![
            residual_ok(&r, "sigma_at_attracting_flag", 100, 1e-8),
            residual_ok(&r, "power_cocycle_exactness", 800, 1e-8),
            residual_ok(&r, "extended_jordan_a_part", 100, 1e-8),
        ])
    }));

    outcomes.push((
        "product estimate",
        timed(secs(60), || {
            let r = verify::prop_crucial(&cfg);
            all_of(vec![checks_ok(&r)])
        }),
    ));

    outcomes.push((
        "sign group and decorrelation",
        timed(secs(120), || {
            let r = verify::schottky(&cfg);
            let order = find(&r, "sign_group_order");
            let decor = find(&r, "decorrelation_components");
            all_of(vec![
                (order.pass, order.detail.clone().unwrap_or_default()),
                (decor.pass, decor.detail.clone().unwrap_or_default()),
            ])
        }),
    ));

    outcomes.push((
        "density",
        timed(secs(60), || {
            let r = verify::density(&cfg);
            all_of(
                [
                    "dense_subgroup_generators",
                    "dense_subgroup_reverification",
                    "semigroup_cone_covering",
                    "semigroup_cone_reverification",
                ]
                .iter()
                .map(|n| {
                    let e = find(&r, n);
                    (e.pass, format!("{n}: {}", e.detail.clone().unwrap_or_default()))
                })
                .collect(),
            )
        }),
    ));

    outcomes.push((
        "mixing contrast",
        timed(secs(300), || match verify::mixing_contrast(200_000) {
            Ok(m) => Outcome {
                pass: m.pass,
                detail: format!("interior {} hits, exterior {} hits", m.interior_hits, m.exterior_hits),
            },
            Err(e) => Outcome {
                pass: false,
                detail: e.to_string(),
            },
        }),
    ));

    outcomes.push(("determinism", {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_chamberflow"))
                .args(["--seed", "42", "verify"])
                .env_remove("CHAMBERFLOW_SEED")
                .output()
                .expect("binary runs")
        };
        let (a, b) = (run(), run());
        let (sa, sb) = (String::from_utf8_lossy(&a.stdout), String::from_utf8_lossy(&b.stdout));
        let same = strip_timestamp(&sa) == strip_timestamp(&sb);
        Outcome {
            pass: same && !sa.is_empty() && a.status.code() == b.status.code(),
            detail: format!("{} bytes, exit {:?}, identical apart from timestamp: {same}", sa.len(), a.status.code()),
        }
    }));

    let mut failed = 0;
    for (i, (name, o)) in outcomes.iter().enumerate() {
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
