use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use chamberflow_core::density::{
    jordan_density_bridge, reverify, select_dense_subgroup_generators, semigroup_cone_density, BridgeParams,
    TorusPoint, Window,
};
use chamberflow_core::fixtures::{self, SchottkyFixture};
use chamberflow_core::flag::transversality;
use chamberflow_core::io::{to_json_string, MatrixJson};
use chamberflow_core::linalg::{bruhat_lu, cartan_kak, iwasawa_kan, iwasawa_kan_minus, relative_error};
use chamberflow_core::loxodromy::{certify_r_eps, classify};
use chamberflow_core::plot::{cone_csv, cone_svg};
use chamberflow_core::sampling::{random_sl, rng};
use chamberflow_core::schottky::{
    build_schottky, decorrelation_discret_check, hull_residual, jordan_line_density_probe, limit_cone, sign_group,
    SchottkyFamily, CERT_GRID,
};
use chamberflow_core::verify::{self, Suite, VerifyConfig};
use chamberflow_core::{cocycle, iwasawa_cocycle, CartanVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::input::{read_flag, read_matrix, read_points, read_section, read_seeds};
use crate::*;

/// Writes the report envelope and returns the exit code.
fn emit(command: &str, cfg: &RunConfig, result: Value, ok: bool, output: Option<&Path>) -> Result<u8, CliError> {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let report = json!({
        "command": command,
        "config": cfg,
        "config_hash": cfg.hash(),
        "result": result,
        "timestamp_unix": timestamp,
    });
    let text = to_json_string(&report);
    match output {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(if ok { 0 } else { 1 })
}

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

pub fn dispatch(cmd: &Command, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    match cmd {
        Command::Decompose(a) => decompose(a, cfg, output),
        Command::Transverse(a) => transverse(a, cfg, output),
        Command::Cocycle(a) => cocycle_cmd(a, cfg, output),
        Command::Lox(a) => lox(a, cfg, output),
        Command::Schottky(SchottkyCommand::Build(a)) => build(a, cfg, output),
        Command::Schottky(SchottkyCommand::LimitCone(a)) | Command::LimitCone(a) => cone(a, cfg, output),
        Command::Schottky(SchottkyCommand::SignGroup(a)) | Command::SignGroup(a) => signs(a, cfg, output),
        Command::Schottky(SchottkyCommand::DecorCheck(a)) | Command::DecorCheck(a) => decor(a, cfg, output),
        Command::Schottky(SchottkyCommand::MixProbe(a)) | Command::MixProbe(a) => probe(a, cfg, output),
        Command::Density(DensityCommand::Select(a)) => density_select(a, cfg, output),
        Command::Density(DensityCommand::Cone(a)) => density_cone(a, cfg, output),
        Command::Density(DensityCommand::Bridge(a)) => bridge(a, cfg, output),
        Command::Verify(a) => verify_cmd(a, cfg, output),
    }
}

fn decompose(a: &DecomposeArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let g = match &a.matrix {
        Some(p) => read_matrix(p, &cfg.tolerances)?,
        None => random_sl(&mut rng(cfg.seed), cfg.n),
    };
    let m = g.matrix();
    let mat = |x: &chamberflow_core::Mat| value(&MatrixJson::from_mat(x));
    let want = |k: DecompositionKind| matches!(a.kind, DecompositionKind::All) || std::mem::discriminant(&a.kind) == std::mem::discriminant(&k);
    let mut out = serde_json::Map::new();
    out.insert("input".into(), mat(m));
    let mut ok = true;
    let mut record = |name: &str, r: Result<Value, chamberflow_core::Error>| {
        let v = r.unwrap_or_else(|e| {
            ok = false;
            json!({ "error": e.to_string() })
        });
        out.insert(name.into(), v);
    };
    if want(DecompositionKind::Kan) {
        record(
            "kan",
            iwasawa_kan(&g).map(|t| {
                json!({"k": mat(&t.k), "a": value(&t.a), "u": mat(&t.u), "residual": relative_error(&t.reconstruct(), m)})
            }),
        );
    }
    if want(DecompositionKind::KanMinus) {
        record(
            "kan_minus",
            iwasawa_kan_minus(&g).map(|t| {
                json!({"k": mat(&t.k), "a": value(&t.a), "u": mat(&t.u), "residual": relative_error(&t.reconstruct(), m)})
            }),
        );
    }
    if want(DecompositionKind::Kak) {
        record(
            "kak",
            cartan_kak(&g).map(|t| {
                json!({"k1": mat(&t.k1), "a": value(&t.a), "k2": mat(&t.k2), "residual": relative_error(&t.reconstruct(), m)})
            }),
        );
    }
    if want(DecompositionKind::Bruhat) {
        record(
            "bruhat",
            bruhat_lu(&g, &cfg.tolerances).map(|t| {
                json!({
                    "u_minus": mat(&t.u_minus),
                    "x": value(&t.x),
                    "u_plus": mat(&t.u_plus),
                    "residual": relative_error(&t.reconstruct(), m),
                })
            }),
        );
    }
    emit("decompose", cfg, Value::Object(out), ok, output)
}

fn transverse(a: &TransverseArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let (xi, xc) = (read_flag(&a.xi)?, read_flag(&a.xi_check)?);
    if xi.n() != xc.n() {
        return Err(CliError::Input(format!("flags have sizes {} and {}", xi.n(), xc.n())));
    }
    let t = transversality(&xi, &xc, &cfg.tolerances);
    emit("transverse", cfg, value(&t), t.transverse, output)
}

fn cocycle_cmd(a: &CocycleArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let s1 = read_section(&a.s1, a.kind)?;
    let s0 = read_section(&a.s0, a.kind)?;
    let g = read_matrix(&a.g, &cfg.tolerances)?;
    let xi = read_flag(&a.xi)?;
    if [s1.n(), s0.n(), xi.n()].iter().any(|&k| k != g.n()) {
        return Err(CliError::Input("sections, flag and matrix must have the same size".into()));
    }
    let b = cocycle(&s1, &s0, &g, &xi)?;
    let result = json!({
        "a": value(&b.a),
        "m": value(&b.m),
        "iwasawa_cocycle": value(&iwasawa_cocycle(&g, &xi)),
    });
    emit("cocycle", cfg, result, true, output)
}

fn lox(a: &LoxArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let g = read_matrix(&a.matrix, &cfg.tolerances)?;
    let l = classify(&g, &cfg.tolerances)?;
    let mut result = json!({
        "lambda": value(&l.lambda),
        "signs": value(&l.signs),
        "attracting": value(&l.attracting),
        "repelling": value(&l.repelling),
        "gap": l.gap,
    });
    if let (Some(r), Some(eps)) = (a.r, a.eps) {
        result["certificate"] = value(&certify_r_eps(&l, r, eps, CERT_GRID)?);
    }
    emit("lox", cfg, result, true, output)
}

fn fixture(f: FixtureArg) -> SchottkyFixture {
    match f {
        FixtureArg::Sl2Pair => fixtures::sl2_pair(),
        FixtureArg::Sl2IrrationalPair => fixtures::sl2_irrational_pair(),
        FixtureArg::Sl3Triple => fixtures::sl3_triple(),
        FixtureArg::Sl3Engineered => fixtures::sl3_engineered(),
    }
}

fn family(a: &FamilyArgs, cfg: &RunConfig) -> Result<SchottkyFamily, CliError> {
    let fx = fixture(a.fixture);
    let seeds = match &a.seeds {
        Some(p) => read_seeds(p, &cfg.tolerances)?,
        None => fx.seeds,
    };
    let (r, eps) = (a.r.unwrap_or(fx.r), a.eps.unwrap_or(fx.eps));
    Ok(build_schottky(&seeds, r, eps, cfg.budgets.max_power)?)
}

fn build(a: &FamilyArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let fam = family(a, cfg)?;
    emit("schottky build", cfg, value(&fam), true, output)
}

fn cone(a: &ConeArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let fam = family(&a.family, cfg)?;
    let c = limit_cone(&fam, a.max_len, cfg.budgets.max_words)?;
    let dir = Path::new(&cfg.io.out_dir);
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
        Ok::<String, CliError>(p.display().to_string())
    };
    let csv = write("cone.csv", &cone_csv(&c))?;
    let (svg, notice) = match cone_svg(&c) {
        Some(text) => (Some(write("cone.svg", &text)?), None),
        None => {
            let msg = format!("cone.svg skipped: the plot is only drawn for n = 3 (n = {})", fam.n());
            eprintln!("chamberflow: {msg}");
            (None, Some(msg))
        }
    };
    let result = json!({
        "words": c.rays.len(),
        "word_length": c.word_length,
        "hull": value(&c.hull),
        "hull_residual": hull_residual(&c),
        "csv": csv,
        "svg": svg,
        "notice": notice,
    });
    emit("limit-cone", cfg, result, true, output)
}

fn signs(a: &SignGroupArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let fam = family(&a.family, cfg)?;
    let r = sign_group(&fam, a.max_len, cfg.budgets.max_words)?;
    emit("sign-group", cfg, value(&r), true, output)
}

fn decor(a: &DecorArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let fam = family(&a.family, cfg)?;
    let sg = sign_group(&fam, a.max_len, cfg.budgets.max_words)?;
    let d = decorrelation_discret_check(&fam, &sg, a.power)?;
    let result = json!({ "sign_group": value(&sg), "decorrelation": value(&d) });
    emit("decor-check", cfg, result, d.pass, output)
}

fn probe(a: &ProbeArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let fam = family(&a.family, cfg)?;
    let theta = match &a.theta {
        Some(t) => {
            if t.len() != fam.n() {
                return Err(CliError::Input(format!("θ has {} coordinates, expected {}", t.len(), fam.n())));
            }
            CartanVector::new(t.clone())?.normalized()
        }
        None => {
            let c = limit_cone(&fam, a.cone_len, cfg.budgets.max_words)?;
            let (inside, outside) = fixtures::probe_directions(&c);
            match a.direction {
                DirectionArg::Interior => inside,
                DirectionArg::Exterior => outside,
            }
        }
    };
    let window = a.window.unwrap_or(fixtures::PROBE_WINDOW);
    let delta0 = a.delta0.unwrap_or(fixtures::PROBE_DELTA0);
    let budget = a.budget.unwrap_or(cfg.budgets.max_words);
    let r = jordan_line_density_probe(&fam, &theta, window, delta0, budget)?;
    if let Some(w) = &r.warning {
        eprintln!("chamberflow: warning: {w}");
    }
    emit("mix-probe", cfg, value(&r), true, output)
}

fn window_for(points: &[TorusPoint], w: Option<(f64, f64)>) -> Result<Window, CliError> {
    let d = points
        .first()
        .map(TorusPoint::d)
        .ok_or_else(|| CliError::Input("point set is empty".into()))?;
    Ok(match w {
        Some((a, b)) => Window::cube(d, a, b),
        None => Window::default_for(d),
    })
}

fn density_select(a: &DensityArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let pts = read_points(&a.input)?;
    let window = window_for(&pts, a.window)?;
    let c = select_dense_subgroup_generators(&pts, a.delta, &window, a.coeff_bound)?;
    let rv = reverify(&c, c.delta);
    let ok = c.covered && rv.covered;
    let result = json!({ "certificate": value(&c), "reverification": value(&rv) });
    emit("density select", cfg, result, ok, output)
}

fn density_cone(a: &DensityArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let pts = read_points(&a.input)?;
    let window = window_for(&pts, a.window)?;
    let (v_f, c) = semigroup_cone_density(&pts, a.delta, &window, a.coeff_bound)?;
    let rv = reverify(&c, c.delta);
    let ok = c.covered && rv.covered;
    let result = json!({ "v_f": v_f, "certificate": value(&c), "reverification": value(&rv) });
    emit("density cone", cfg, result, ok, output)
}

fn bridge(a: &BridgeArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let fam = family(&a.family, cfg)?;
    let d = fam.n() - 1;
    let window = match a.window {
        Some((lo, hi)) => Window::cube(d, lo, hi),
        None => Window::default_for(d),
    };
    let params = BridgeParams {
        coeff_bound: a.coeff_bound,
        mc_samples: cfg.budgets.mc_samples,
        seed: cfg.seed,
    };
    let r = jordan_density_bridge(&fam, a.delta, &window, params)?;
    let ok = r.residual_pass && r.certificate.covered;
    emit("density bridge", cfg, value(&r), ok, output)
}

fn verify_cmd(a: &VerifyArgs, cfg: &RunConfig, output: Option<&Path>) -> Result<u8, CliError> {
    let mut suites = Vec::new();
    for s in &a.suites {
        if s == "all" {
            suites.extend(Suite::ALL);
        } else {
            suites.push(Suite::parse(s).ok_or_else(|| CliError::Config(format!("unknown suite {s:?}")))?);
        }
    }
    suites.dedup();
    let vc = VerifyConfig {
        n: cfg.n,
        seed: cfg.seed,
        tolerances: cfg.tolerances,
        max_words: cfg.budgets.max_words,
        mc_samples: cfg.budgets.mc_samples,
        ..VerifyConfig::default()
    };
    let report = verify::run(&suites, &vc).map_err(|e| CliError::Config(e.to_string()))?;
    for r in &report.results {
        let measured = match (r.max_residual, r.tolerance) {
            (Some(x), Some(t)) => format!("{x:.3e} {} {t:.3e}", if x <= t { "<=" } else { ">" }),
            _ => String::new(),
        };
        eprintln!(
            "{:<4} {:<14} {:<36} {:<26} {}",
            if r.pass { "ok" } else { "FAIL" },
            r.suite,
            r.name,
            measured,
            r.detail.as_deref().unwrap_or("")
        );
    }
    let names: Vec<&str> = suites.iter().map(|s| s.name()).collect();
    let result = json!({ "suites": names, "results": value(&report.results), "pass": report.pass });
    emit("verify", cfg, result, report.pass, output)
}
