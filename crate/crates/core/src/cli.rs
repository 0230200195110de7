//! The `btp` command line. Exit codes: 0 when every asserted check passes,
//! 1 when one fails, 2 for unreadable input or a failed precondition.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use crate::chart::{ad_crosscheck, lee_form_check, vaisman_pde_residual, ConformalChart};
use crate::classify::{self, ClassificationReport};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::forms::StructureEquations;
use crate::tensor::{cx, Cx};
use crate::{catalog, io};

#[derive(Debug, Parser)]
#[command(name = "btp", version, about = "Torsion, curvature and classification of left-invariant Hermitian structures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Residual tolerance; verdicts between tol and 10·tol are indeterminate.
    #[arg(long, global = true, default_value_t = crate::tensor::DEFAULT_TOL)]
    tol: f64,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// d² = 0 and integrability report.
    Validate { file: PathBuf },
    /// Every classification flag with its residual.
    Classify { file: PathBuf },
    /// Residual table of the identities that hold on every Hermitian structure.
    Identities { file: PathBuf },
    /// The four curvature criteria for torsion parallelism against the direct test.
    #[command(name = "theorem11")]
    Criteria { file: PathBuf },
    /// Case label and discriminants of a non-balanced BTP threefold.
    Threefold { file: PathBuf },
    /// Built-in examples.
    Catalog {
        #[command(subcommand)]
        action: CatalogCmd,
    },
    /// Pointwise checks in coordinate charts.
    Chart {
        #[command(subcommand)]
        action: ChartCmd,
    },
    /// Identity suite and BTP equivalence over random structures.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogCmd {
    List,
    Emit {
        name: String,
        /// key=value, repeatable.
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, String)>,
    },
}

#[derive(Debug, Subcommand)]
enum ChartCmd {
    /// Conformal-Vaisman equations for u = −½ log(|z_1−a|² + |z_2−b|²).
    Vaisman {
        /// a_re,a_im,b_re,b_im
        #[arg(long, default_value = "0,0,0,0")]
        center: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_kv(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())).ok_or_else(|| format!("expected key=value, got {s}"))
}

struct Outcome {
    passed: bool,
    body: Value,
}

/// Runs the CLI and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        let _ = writeln!(err, "error: --tol must be a positive number");
        return 2;
    }
    if let Cmd::Catalog { action: CatalogCmd::Emit { name, params } } = &cli.cmd {
        let params: BTreeMap<String, String> = params.iter().cloned().collect();
        return match emit_entry(name, &params) {
            Ok(bytes) => {
                let _ = out.write_all(&bytes);
                0
            }
            Err(e) => report_error(&cli, &e, out, err),
        };
    }
    match dispatch(&cli) {
        Ok(o) => {
            let text = if cli.json {
                serde_json::to_string_pretty(&o.body).expect("values serialize") + "\n"
            } else {
                render(&o.body)
            };
            let _ = out.write_all(text.as_bytes());
            if o.passed {
                0
            } else {
                1
            }
        }
        Err(e) => report_error(&cli, &e, out, err),
    }
}

fn report_error(cli: &Cli, e: &Error, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let code = match e {
        Error::Indeterminate(_) => 1,
        _ => 2,
    };
    if cli.json {
        let _ = writeln!(out, "{}", json!({ "error": e.to_string(), "exit_code": code }));
    }
    let _ = writeln!(err, "error: {e}");
    code
}

fn load(path: &PathBuf) -> Result<StructureEquations> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::PreconditionFailed(format!("cannot read {}: {e}", path.display())))?;
    io::parse(&bytes)
}

fn emit_entry(name: &str, params: &BTreeMap<String, String>) -> Result<Vec<u8>> {
    let lower = name.to_lowercase();
    if params.is_empty() {
        if let Some(e) = catalog::catalog().into_iter().find(|e| e.name == name || e.name == lower) {
            return Ok(io::emit(&e.s));
        }
    }
    Ok(io::emit(&catalog::lookup(&lower, params)?))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let tol = cli.tol;
    match &cli.cmd {
        Cmd::Validate { file } => validate(&load(file)?, tol),
        Cmd::Classify { file } => classify_cmd(&load(file)?, tol),
        Cmd::Identities { file } => identities(&load(file)?, tol),
        Cmd::Criteria { file } => criteria(&load(file)?, tol),
        Cmd::Threefold { file } => threefold(&load(file)?, tol),
        Cmd::Catalog { action: CatalogCmd::List } => Ok(catalog_list()),
        Cmd::Catalog { action: CatalogCmd::Emit { .. } } => unreachable!("handled before dispatch"),
        Cmd::Chart { action: ChartCmd::Vaisman { center, samples, seed } } => chart_vaisman(center, *samples, *seed, tol),
        Cmd::Fuzz { seed, count, n, r } => fuzz(*seed, *count, *n, *r, tol),
    }
}

fn validate(s: &StructureEquations, tol: f64) -> Result<Outcome> {
    let r = s.report();
    let passed = r.d2_residual < tol && r.g_max == 0.0;
    Ok(Outcome {
        passed,
        body: json!({
            "name": s.name(),
            "n": s.n(),
            "d2_residual": r.d2_residual,
            "worst_generator": r.worst_generator + 1,
            "g_max": r.g_max,
            "validated": r.validated,
            "integrable": r.integrable,
            "passed": passed,
        }),
    })
}

/// Cross-checks that must hold between the verdicts of one report.
pub fn consistency(e: &Engine, r: &ClassificationReport, tol: f64) -> Result<BTreeMap<String, bool>> {
    let mut c = BTreeMap::new();
    c.insert("btp_criteria_agree".to_string(), r.btp_direct == r.btp_criteria);
    c.insert("bkl_iff_btp_and_pluriclosed".to_string(), r.bkl == (r.btp_direct && r.pluriclosed));
    c.insert("btp_implies_gauduchon".to_string(), !r.btp_direct || r.gauduchon);
    if r.btp_direct {
        let worst = classify::torsion_identities(e, tol)?.values().fold(0.0f64, |m, v| m.max(*v));
        c.insert("torsion_identities".to_string(), worst < tol);
    }
    if r.degenerate_torsion.is_some() {
        let res = |k: &str| r.residuals.get(k).copied().unwrap_or(f64::INFINITY);
        c.insert("admissible_frame".to_string(), res("admissible_frame") < tol);
        c.insert("bismut_last_row_column".to_string(), res("bismut_last_row_column") < tol);
        c.insert("chi_holomorphic".to_string(), res("chi_holomorphic") < tol);
        c.insert("vaisman_routes_agree".to_string(), (res("vaisman_from_frame") < tol) == r.vaisman);
        if r.n >= 3 {
            c.insert("lp_iff_degenerate_torsion".to_string(), Some(r.lp) == r.degenerate_torsion);
        }
    }
    if r.threefold_case != classify::ThreefoldCase::NotApplicable {
        c.insert("case1_iff_bkl".to_string(), (r.threefold_case == classify::ThreefoldCase::Case1) == r.bkl);
    }
    Ok(c)
}

fn classify_cmd(s: &StructureEquations, tol: f64) -> Result<Outcome> {
    let e = Engine::new(s)?;
    let r = classify::classify_engine(&e, tol)?;
    let checks = consistency(&e, &r, tol)?;
    let passed = checks.values().all(|v| *v);
    let mut body = serde_json::to_value(&r).expect("reports serialize");
    body["consistency"] = json!(checks);
    body["passed"] = json!(passed);
    Ok(Outcome { passed, body })
}

fn identities(s: &StructureEquations, tol: f64) -> Result<Outcome> {
    let e = Engine::new(s)?;
    let suite = e.identity_suite();
    let cross = e.pluriclosed_formula_crosscheck()?;
    let worst = suite.values().fold(cross, |m, v| m.max(*v));
    let passed = worst < tol;
    Ok(Outcome {
        passed,
        body: json!({
            "name": s.name(),
            "identities": suite,
            "pluriclosed_formula_crosscheck": cross,
            "levi_civita": e.levi_civita_residual(),
            "max_residual": worst,
            "passed": passed,
        }),
    })
}

fn criteria(s: &StructureEquations, tol: f64) -> Result<Outcome> {
    let e = Engine::new(s)?;
    let c = classify::btp_criteria(&e, tol)?;
    let d = classify::is_btp_direct(&e, tol)?;
    let equivalent = c.flag == d.flag;
    Ok(Outcome {
        passed: equivalent,
        body: json!({
            "name": s.name(),
            "c1_bismut_curvature_20": c.c1,
            "c2_bismut_curvature_pair_symmetry": c.c2,
            "c3_parallel_ric_q": c.c3,
            "c4_ric_q_along_eta": c.c4,
            "criteria_flag": c.flag,
            "btp_direct": d.flag,
            "btp_direct_residual": d.residual,
            "equivalent": equivalent,
        }),
    })
}

fn threefold(s: &StructureEquations, tol: f64) -> Result<Outcome> {
    let e = Engine::new(s)?;
    let t = classify::threefold_case(&e, tol)?;
    let bkl = classify::is_bkl(&e, tol)?.flag;
    let consistent = (t.case == classify::ThreefoldCase::Case1) == bkl;
    Ok(Outcome {
        passed: consistent,
        body: json!({
            "name": s.name(),
            "case": t.case.to_string(),
            "a1": t.a1,
            "a2": t.a2,
            "s": t.s.re,
            "t_imag": t.t.im,
            "bkl": bkl,
            "case1_iff_bkl": consistent,
        }),
    })
}

fn catalog_list() -> Outcome {
    let entries: Vec<Value> = catalog::catalog()
        .iter()
        .map(|e| json!({ "name": e.name, "n": e.s.n(), "notes": e.notes, "expected": e.expected }))
        .collect();
    Outcome { passed: true, body: json!({ "families": catalog::names(), "entries": entries }) }
}

fn parse_center(s: &str) -> Result<[Cx; 2]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidParameter(format!("--center {s}: expected four numbers")))?;
    if v.len() != 4 || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("--center {s}: expected four numbers")));
    }
    Ok([cx(v[0], v[1]), cx(v[2], v[3])])
}

fn chart_vaisman(center: &str, samples: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let p = parse_center(center)?;
    let chart = ConformalChart::inverse_distance(&p)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut pde, mut ad, mut lee) = (0.0f64, 0.0f64, 0.0f64);
    let mut taken = 0;
    while taken < samples {
        let z: Vec<Cx> = p.iter().map(|c| c + cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
        if !chart.admits(&z) {
            continue;
        }
        pde = pde.max(vaisman_pde_residual(&chart, &z)?);
        lee = lee.max(lee_form_check(&chart, &z)?);
        match ad_crosscheck(&chart, &z, 1e-5) {
            Ok(v) => ad = ad.max(v),
            Err(Error::SingularPoint) => {}
            Err(e) => return Err(e),
        }
        taken += 1;
    }
    let passed = pde < tol && ad < 1e-6;
    Ok(Outcome {
        passed,
        body: json!({
            "center": p,
            "samples": samples,
            "seed": seed,
            "max_pde_residual": pde,
            "max_lee_form_residual": lee,
            "max_ad_relative_error": ad,
            "passed": passed,
        }),
    })
}

fn fuzz(seed: u64, count: usize, n: Option<usize>, r: Option<usize>, tol: f64) -> Result<Outcome> {
    if let Some(n) = n {
        if !(2..=crate::tensor::MAX_DIM).contains(&n) {
            return Err(Error::InvalidParameter(format!("--n {n} outside 2..={}", crate::tensor::MAX_DIM)));
        }
    }
    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    let (mut btp, mut disagree, mut indeterminate) = (0usize, Vec::new(), Vec::new());
    for k in 0..count {
        let nk = n.unwrap_or(2 + k % 4);
        let rk = r.unwrap_or(1 + (k / 4) % (nk - 1));
        let s = catalog::random_2step(seed + k as u64, nk, rk, 0.7)?;
        let e = Engine::new(&s)?;
        for (name, v) in e.identity_suite() {
            if v > worst {
                worst = v;
                worst_name = name;
            }
        }
        let cross = e.pluriclosed_formula_crosscheck()?;
        if cross > worst {
            worst = cross;
            worst_name = "pluriclosed_formula_crosscheck".into();
        }
        match (classify::is_btp_direct(&e, tol), classify::btp_criteria(&e, tol)) {
            (Ok(d), Ok(c)) => {
                btp += d.flag as usize;
                if d.flag != c.flag {
                    disagree.push(s.name().to_string());
                }
            }
            (Err(Error::Indeterminate(_)), _) | (_, Err(Error::Indeterminate(_))) => indeterminate.push(s.name().to_string()),
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    let passed = worst < tol && disagree.is_empty();
    Ok(Outcome {
        passed,
        body: json!({
            "seed": seed,
            "count": count,
            "max_identity_residual": worst,
            "worst_identity": worst_name,
            "btp_count": btp,
            "disagreements": disagree,
            "indeterminate": indeterminate,
            "passed": passed,
        }),
    })
}

/// Plain-text view of a JSON body, one field per line.
fn render(v: &Value) -> String {
    let mut s = String::new();
    render_into(v, 0, &mut s);
    s
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            Some(format!("[{}]", a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        Value::Array(a) if a.iter().all(|x| x.as_array().is_some_and(|y| y.len() == 2 && y.iter().all(Value::is_number))) => {
            Some(format!("[{}]", a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn render_into(v: &Value, indent: usize, s: &mut String) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(m) => {
            let width = m.keys().map(|k| k.chars().count()).max().unwrap_or(0);
            for (k, x) in m {
                match scalar(x) {
                    Some(t) => s.push_str(&format!("{pad}{k:<width$}  {t}\n")),
                    None => {
                        s.push_str(&format!("{pad}{k}:\n"));
                        render_into(x, indent + 2, s);
                    }
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                match scalar(x) {
                    Some(t) => s.push_str(&format!("{pad}[{i}]  {t}\n")),
                    None => {
                        s.push_str(&format!("{pad}[{i}]:\n"));
                        render_into(x, indent + 2, s);
                    }
                }
            }
        }
        other => s.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}
