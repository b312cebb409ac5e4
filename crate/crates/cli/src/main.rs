//! `qdual` — quiver mutation and duality-identity checking from the shell.
//!
//! Exit status: 0 on success (all checks PASS), 1 when an identity check
//! fails, 2 on usage or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdual_core::checker::{self, CheckReport, CheckSpec, Selection};
use qdual_core::fixpoints::{self, Family, Ranks, StepId};
use qdual_core::ifun::{family_model, restricted_series, Prune};
use qdual_core::quiver::{MapRule, Quiver};
use qdual_core::series::DegreeBox;

#[derive(Parser)]
#[command(name = "qdual", version, about = "cluster-quiver mutation and Seiberg-duality identity checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// Per-variable truncation radius of the comparison box
    #[arg(long = "box", default_value_t = 3)]
    box_radius: i64,
    /// Number of independent generic parameter points
    #[arg(long, default_value_t = 3)]
    trials: u32,
    /// Master seed; all randomness flows from it
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path (file or directory depending on the command)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent (fixed point x trial) jobs
    #[arg(long)]
    jobs: Option<usize>,
    /// Print per-pair progress and diagnostics
    #[arg(long, short, default_value_t = false)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a mutation sequence to a quiver file and log the variable maps
    Mutate {
        /// Quiver JSON file
        file: PathBuf,
        /// Node sequence, e.g. "3" or "3,1,2,3,1,2,3,1,2"
        #[arg(long, value_name = "SEQ")]
        seq: String,
        #[command(flatten)]
        run: RunOpts,
    },
    /// List the torus-fixed points of a catalogued family
    Fixpoints {
        #[arg(long)]
        family: String,
        #[arg(long, value_name = "N1,N2,...")]
        ranks: String,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Dump restricted I-function series at selected fixed points
    Ifun {
        #[arg(long)]
        family: String,
        #[arg(long, value_name = "N1,N2,...")]
        ranks: String,
        /// Index into the enumerated fixed-point list
        #[arg(long = "point-index", default_value_t = 0)]
        point_index: usize,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Verify a catalogued identity; exit 0 iff it PASSes
    Check {
        /// building-block | d3-step | d3-cycle | star
        identity: String,
        /// Ranks: "r,n,m" for building-block, "N1,N2,N3,N4" for the D3
        /// chain, nine integers for star
        #[arg(long, value_name = "RANKS")]
        ranks: Option<String>,
        /// Chain step name for d3-step (e.g. x0-z1)
        #[arg(long)]
        step: Option<String>,
        /// all | distinguished | sample:K | distinguished+K
        #[arg(long, default_value = "all")]
        pairs: String,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Trace the cumulative variable transformations of the D3 cycle
    Cycle {
        #[arg(long, value_name = "N1,N2,N3,N4")]
        ranks: String,
        /// Also run the per-step I-function checks
        #[arg(long, default_value_t = false)]
        full: bool,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Emit a catalogued quiver as a canonical JSON file
    Quiver {
        #[arg(long)]
        family: String,
        #[arg(long, value_name = "N1,N2,...")]
        ranks: String,
        #[command(flatten)]
        run: RunOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Mutate { file, seq, run } => cmd_mutate(&file, &seq, &run),
        Command::Fixpoints { family, ranks, run } => cmd_fixpoints(&family, &ranks, &run),
        Command::Ifun { family, ranks, point_index, run } => {
            cmd_ifun(&family, &ranks, point_index, &run)
        }
        Command::Check { identity, ranks, step, pairs, run } => {
            cmd_check(&identity, ranks.as_deref(), step.as_deref(), &pairs, &run)
        }
        Command::Cycle { ranks, full, run } => cmd_cycle(&ranks, full, &run),
        Command::Quiver { family, ranks, run } => cmd_quiver(&family, &ranks, &run),
    }
}

fn cmd_quiver(family: &str, ranks: &str, run: &RunOpts) -> Result<bool, String> {
    let fam = Family::parse(family).ok_or_else(|| format!("unknown family '{}'", family))?;
    let ranks = parse_ranks(fam, ranks)?;
    let mut q = fixpoints::family_quiver(fam, &ranks).map_err(|e| e.to_string())?;
    q.meta = Default::default();
    let text = q.to_json_string();
    match &run.out {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{}", text),
    }
    Ok(true)
}

fn setup_jobs(run: &RunOpts) {
    if let Some(j) = run.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
}

fn parse_u32_list(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|e| format!("bad rank '{}': {}", t, e)))
        .collect()
}

fn parse_ranks(family: Family, s: &str) -> Result<Ranks, String> {
    let v = parse_u32_list(s)?;
    match family {
        Family::GrBlock | Family::GrBlockDual => {
            if v.len() != 3 {
                return Err("building block ranks are r,n,m".into());
            }
            Ok(Ranks::Gr { r: v[0], n: v[1], m: v[2] })
        }
        Family::Star | Family::StarDual => {
            if v.len() != 9 {
                return Err("star ranks are N1,...,N7,N8,N9".into());
            }
            Ok(Ranks::Star { n: v.try_into().unwrap() })
        }
        _ => {
            if v.len() != 4 {
                return Err("D3 ranks are N1,N2,N3,N4".into());
            }
            Ok(Ranks::D3 { n: v.try_into().unwrap() })
        }
    }
}

fn parse_selection(s: &str) -> Result<Selection, String> {
    if s == "all" {
        Ok(Selection::All)
    } else if s == "distinguished" {
        Ok(Selection::Distinguished)
    } else if let Some(k) = s.strip_prefix("sample:") {
        Ok(Selection::Sample(k.parse().map_err(|_| "bad sample count")?))
    } else if let Some(k) = s.strip_prefix("distinguished+") {
        Ok(Selection::DistinguishedPlusSample(
            k.parse().map_err(|_| "bad sample count")?,
        ))
    } else {
        Err(format!("unknown pair selection '{}'", s))
    }
}

/// Write atomically: temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), String> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| format!("write {}: {}", tmp.display(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| format!("rename to {}: {}", path.display(), e))
}

fn out_dir(run: &RunOpts) -> Result<PathBuf, String> {
    let dir = run.out.clone().unwrap_or_else(|| PathBuf::from("."));
    if !dir.exists() {
        std::fs::create_dir_all(&dir).map_err(|e| format!("create {}: {}", dir.display(), e))?;
    }
    Ok(dir)
}

fn cmd_mutate(file: &Path, seq: &str, run: &RunOpts) -> Result<bool, String> {
    let text = std::fs::read_to_string(file).map_err(|e| format!("read {}: {}", file.display(), e))?;
    let mut quiver = Quiver::from_json_str(&text).map_err(|e| e.to_string())?;
    let nodes = parse_u32_list(seq)?;
    let dir = out_dir(run)?;
    let mut log = Vec::new();
    for (i, &k) in nodes.iter().enumerate() {
        let res = quiver.mutate(k).map_err(|e| e.to_string())?;
        let conjecture = Quiver::kahler_map_for(&res, MapRule::ConjectureGeneral)
            .map(|m| m.to_json())
            .unwrap_or(serde_json::Value::Null);
        let proved = Quiver::kahler_map_for(&res, MapRule::PaperProvedCase)
            .map(|m| m.to_json())
            .unwrap_or(serde_json::Value::Null);
        log.push(serde_json::json!({
            "step": i + 1,
            "node": k,
            "case": format!("{:?}", res.kahler_case),
            "annihilated": res
                .annihilated
                .iter()
                .map(|((a, b), c)| serde_json::json!([a, b, c]))
                .collect::<Vec<_>>(),
            "conjecture_map": conjecture,
            "proved_map": proved,
        }));
        quiver = res.quiver;
        let path = dir.join(format!("mutated_{}.json", i + 1));
        write_atomic(&path, &quiver.to_json_string())?;
        if run.verbose {
            eprintln!("step {}: mutated at node {} -> {}", i + 1, k, path.display());
        }
    }
    let log_path = dir.join("kahler_log.json");
    let mut body = serde_json::to_string_pretty(&log).unwrap();
    body.push('\n');
    write_atomic(&log_path, &body)?;
    Ok(true)
}

fn cmd_fixpoints(family: &str, ranks: &str, run: &RunOpts) -> Result<bool, String> {
    let fam = Family::parse(family).ok_or_else(|| format!("unknown family '{}'", family))?;
    let ranks = parse_ranks(fam, ranks)?;
    let fps = fixpoints::enumerate(fam, &ranks).map_err(|e| e.to_string())?;
    let body = serde_json::json!({
        "family": fam.name(),
        "count": fps.len(),
        "points": fps.iter().map(|p| serde_json::json!(p.labels)).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&body).unwrap();
    text.push('\n');
    match &run.out {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{}", text),
    }
    Ok(true)
}

fn cmd_ifun(family: &str, ranks: &str, point_index: usize, run: &RunOpts) -> Result<bool, String> {
    let fam = Family::parse(family).ok_or_else(|| format!("unknown family '{}'", family))?;
    let ranks = parse_ranks(fam, ranks)?;
    let fps = fixpoints::enumerate(fam, &ranks).map_err(|e| e.to_string())?;
    if point_index >= fps.len() {
        return Err(format!(
            "point index {} out of range ({} fixed points)",
            point_index,
            fps.len()
        ));
    }
    let model = family_model(fam, &ranks).map_err(|e| e.to_string())?;
    let point = fixpoints::generic_point(ranks.param_names(), run.seed, run.box_radius);
    // per-family degree orientation is handled by the support; a symmetric
    // box around zero covers both power-series and Laurent directions
    let totals = DegreeBox::radius(model.vars.len(), run.box_radius);
    let series = restricted_series(&model, &fps[point_index], &point, &totals, Prune::Matched)
        .map_err(|e| e.to_string())?;
    let body = serde_json::json!({
        "family": fam.name(),
        "point_index": point_index,
        "fixed_point": fps[point_index].labels,
        "parameters": point.to_json(),
        "series": series.to_json(),
    });
    let mut text = serde_json::to_string_pretty(&body).unwrap();
    text.push('\n');
    match &run.out {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{}", text),
    }
    Ok(true)
}

fn spec_from(run: &RunOpts, selection: Selection) -> CheckSpec {
    CheckSpec {
        box_radius: run.box_radius,
        trials: run.trials,
        seed: run.seed,
        selection,
        audit: true,
        force_trivial_prefactor: false,
    }
}

fn emit_report(report: &CheckReport, run: &RunOpts) -> Result<(), String> {
    if let Some(dir) = &run.out {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        let name = report
            .identity
            .replace(['(', ')', ',', ':', '='], "_")
            .trim_matches('_')
            .to_string();
        let path = dir.join(format!("report_{}.json", name));
        write_atomic(&path, &report.to_json_string())?;
        let summary = checker::run_summary(&[(report.identity.clone(), report.pass(), report.timing_ms)]);
        let mut s = serde_json::to_string_pretty(&summary).unwrap();
        s.push('\n');
        write_atomic(&dir.join("summary.json"), &s)?;
    }
    println!("{}: {}", report.identity, report.verdict);
    Ok(())
}

fn cmd_check(
    identity: &str,
    ranks: Option<&str>,
    step: Option<&str>,
    pairs: &str,
    run: &RunOpts,
) -> Result<bool, String> {
    setup_jobs(run);
    let selection = parse_selection(pairs)?;
    let spec = spec_from(run, selection);
    let need_ranks = || ranks.ok_or_else(|| "missing --ranks".to_string());
    match identity {
        "building-block" => {
            let v = parse_u32_list(need_ranks()?)?;
            if v.len() != 3 {
                return Err("building-block ranks are r,n,m".into());
            }
            let report = checker::check_building_block(v[0], v[1], v[2], &spec)
                .map_err(|e| e.to_string())?;
            emit_report(&report, run)?;
            Ok(report.pass())
        }
        "d3-step" => {
            let s = step.ok_or("missing --step")?;
            let step = StepId::parse(s).ok_or_else(|| format!("unknown step '{}'", s))?;
            let ranks = parse_ranks(Family::X0, need_ranks()?)?;
            let report = checker::check_d3_step(step, &ranks, &spec).map_err(|e| e.to_string())?;
            emit_report(&report, run)?;
            Ok(report.pass())
        }
        "d3-cycle" => {
            let ranks = parse_ranks(Family::X0, need_ranks()?)?;
            let report = checker::check_cycle(&ranks, &spec).map_err(|e| e.to_string())?;
            if let Some(dir) = &run.out {
                std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                write_atomic(&dir.join("report_d3_cycle.json"), &report.to_json_string())?;
            }
            println!("d3-cycle: {}", report.verdict);
            for r in &report.step_reports {
                println!("  {}: {}", r.identity, r.verdict);
            }
            Ok(report.pass())
        }
        "star" => {
            let ranks = parse_ranks(Family::Star, need_ranks()?)?;
            let report = checker::check_star(&ranks, &spec).map_err(|e| e.to_string())?;
            emit_report(&report, run)?;
            Ok(report.pass())
        }
        other => Err(format!("unknown identity '{}'", other)),
    }
}

fn cmd_cycle(ranks: &str, full: bool, run: &RunOpts) -> Result<bool, String> {
    setup_jobs(run);
    let ranks = parse_ranks(Family::X0, ranks)?;
    if full {
        let spec = spec_from(run, Selection::All);
        let report = checker::check_cycle(&ranks, &spec).map_err(|e| e.to_string())?;
        print_cycle_trace(&report);
        if let Some(dir) = &run.out {
            std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
            write_atomic(&dir.join("report_d3_cycle.json"), &report.to_json_string())?;
        }
        return Ok(report.pass());
    }
    // symbolic part only: table rows and the composed identity
    let rows = checker::expected_table_rows(&ranks).map_err(|e| e.to_string())?;
    let mut cumulative = qdual_core::KahlerMap::identity(vec!["q1".into(), "q2".into(), "q3".into()]);
    let mut ok = true;
    for (step, (mutation, variety, want)) in fixpoints::ALL_STEPS[..9].iter().zip(rows) {
        let sigma = checker::chain_step_map(*step, &ranks).map_err(|e| e.to_string())?;
        cumulative = cumulative.compose_after(&sigma).map_err(|e| e.to_string())?;
        let pass = cumulative.normalized() == want;
        ok &= pass;
        println!(
            "{} {}  [{}]  {}",
            mutation,
            variety,
            if pass { "ok" } else { "MISMATCH" },
            cumulative.image_strings().join(", ")
        );
    }
    let relabel = checker::chain_step_map(StepId::X9X0, &ranks).map_err(|e| e.to_string())?;
    let composed = cumulative.compose_after(&relabel).map_err(|e| e.to_string())?;
    let id = composed.is_identity();
    ok &= id;
    println!("composition with node relabel is identity: {}", id);
    Ok(ok)
}

fn print_cycle_trace(report: &checker::CycleReport) {
    for r in &report.rows {
        println!(
            "{} {}  [{}]  {}",
            r.mutation,
            r.variety,
            if r.pass { "ok" } else { "MISMATCH" },
            r.got.join(", ")
        );
    }
    println!("composition is identity: {}", report.composition_is_identity);
    for r in &report.step_reports {
        println!("  {}: {}", r.identity, r.verdict);
    }
    println!("d3-cycle: {}", report.verdict);
}
