//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bluegreen_core::damage::{buildings_csv, counts_table_csv, totals_table_csv};
use bluegreen_core::exposure::exposure_csv;
use bluegreen_core::fixtures::SyntheticOptions;
use bluegreen_core::geodata::TileId;
use bluegreen_core::hydro::InterventionSpec;
use bluegreen_core::planner::{
    evaluate_intervention, intervention_table_csv, ranking_csv, run_keys, run_matrix, InterventionEvaluation,
    MatrixOutcome, MatrixRequest, ScenarioKey, ScenarioKind,
};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::artifacts::{self, key_slug, to_bytes};
use crate::engine::Engine;
use crate::error::{io_err, ServiceError, SCHEMA_VERSION};
use crate::project::write_demo;
use crate::render;

#[derive(Debug, Parser)]
#[command(name = "bluegreen", version, about = "Pluvial flood cost-benefit planner")]
pub struct Cli {
    /// Project file.
    #[arg(long, global = true, default_value = "project.json")]
    pub project: PathBuf,
    /// Run registry directory; defaults to the one named in the project.
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,
    /// Parallel solver runs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Accepted for reproducible invocations; the engine has no randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Select {
    /// Return periods, e.g. `10,100`; default all configured storms.
    #[arg(long, value_delimiter = ',')]
    pub rp: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and check the project.
    Validate,
    /// Run the baseline storms.
    Baseline(Select),
    /// Baselines plus one rainfall-capture run per tile and storm.
    CaptureScan {
        #[command(flatten)]
        select: Select,
        /// Tile ids, e.g. `1,5,9`, or `all`.
        #[arg(long, default_value = "all")]
        tiles: String,
        #[arg(long, default_value_t = 1.0)]
        capture_fraction: f64,
    },
    /// Rank tiles from completed capture runs.
    Rank {
        #[command(flatten)]
        select: Select,
        #[arg(long, default_value_t = 1.0)]
        capture_fraction: f64,
    },
    /// Store an intervention set, run it and compare against the baselines.
    Intervene {
        #[command(flatten)]
        select: Select,
        /// JSON file: a list of intervention specs, or `{"specs": [...]}`.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        set_id: String,
    },
    /// Write tables and rasters for every completed run.
    Report {
        #[command(flatten)]
        select: Select,
        #[arg(long, default_value_t = 1.0)]
        capture_fraction: f64,
    },
    /// Start the HTTP service; the port comes from BLUEGREEN_PORT.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Queued jobs beyond this are refused.
        #[arg(long, default_value_t = 64)]
        queue: usize,
    },
    /// Write the synthetic valley project into a directory.
    Demo {
        #[arg(long)]
        out: PathBuf,
        /// 8 m cells instead of 2 m.
        #[arg(long)]
        coarse: bool,
    },
}

/// Parse, run and report. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = ServiceError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match run(cli) {
        Ok(v) => {
            if !v.is_null() {
                let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&v).expect("json"));
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn workers(cli: &Cli) -> usize {
    cli.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn open(cli: &Cli) -> Result<Engine, ServiceError> {
    Engine::open(&cli.project, cli.registry.as_deref())
}

fn return_periods(engine: &Engine, sel: &Select) -> Result<Vec<f64>, ServiceError> {
    if sel.rp.is_empty() {
        return Ok(engine.catchment().return_periods());
    }
    for &rp in &sel.rp {
        engine.catchment().storm(rp)?;
    }
    Ok(sel.rp.clone())
}

fn parse_tiles(engine: &Engine, text: &str) -> Result<Vec<TileId>, ServiceError> {
    if text.trim() == "all" {
        return Ok(engine.catchment().partition.ids().collect());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| ServiceError::Usage(format!("bad tile id '{t}' (ids or 'all')")))
        })
        .collect()
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), ServiceError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir.display(), e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path.display(), e))
}

fn outcome_json(engine: &Engine, scheduled: usize, out: &MatrixOutcome) -> Result<Value, ServiceError> {
    if let Some((k, e)) = out.failures.iter().next() {
        return Err(ServiceError::Io(format!("{} of {scheduled} runs failed; first {k}: {e}", out.failures.len())));
    }
    let runs: Vec<Value> = out
        .results
        .iter()
        .map(|(k, r)| {
            let d = r.damages();
            json!({
                "key": k,
                "content_hash": r.meta.content_hash,
                "commercial": d.commercial,
                "residential": d.residential,
                "total": d.total,
                "medium": d.counts.medium,
                "high": d.counts.high,
                "boundary_outflow_m3": r.ledger().boundary_outflow,
            })
        })
        .collect();
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "scheduled": scheduled,
        "solver_runs": engine.registry.solver_runs(),
        "runs": runs,
    }))
}

fn write_totals(dir: &Path, out: &MatrixOutcome) -> Result<(), ServiceError> {
    let rows: Vec<_> = out.results.values().map(|r| r.damages()).collect();
    write_file(&dir.join("totals.csv"), totals_table_csv(&rows))?;
    write_file(&dir.join("counts.csv"), counts_table_csv(&rows))
}

fn read_specs(path: &Path) -> Result<Vec<InterventionSpec>, ServiceError> {
    if !path.is_file() {
        return Err(ServiceError::MissingFile(path.display().to_string()));
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path.display(), e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| ServiceError::Invalid(format!("{}: {e}", path.display())))?;
    let list = match v {
        Value::Object(mut o) if o.contains_key("specs") => o.remove("specs").expect("checked"),
        other => other,
    };
    serde_json::from_value(list).map_err(|e| ServiceError::Invalid(format!("{}: {e}", path.display())))
}

fn evaluation_json(e: &InterventionEvaluation, version: u64) -> Value {
    let mut v = serde_json::to_value(e).expect("json");
    v["schema_version"] = json!(SCHEMA_VERSION);
    v["version"] = json!(version);
    v
}

pub fn run(cli: Cli) -> Result<Value, ServiceError> {
    let n = workers(&cli);
    if let Some(seed) = cli.seed {
        tracing::debug!(seed, "seed accepted; runs are deterministic");
    }
    match &cli.command {
        Command::Demo { out, coarse } => {
            let opts = if *coarse { SyntheticOptions::coarse() } else { SyntheticOptions::default() };
            let path = write_demo(out, &opts)?;
            Ok(json!({"schema_version": SCHEMA_VERSION, "project": path}))
        }
        Command::Validate => {
            let engine = open(&cli)?;
            let mut v = engine.project.summary();
            v["valid"] = json!(true);
            Ok(v)
        }
        Command::Baseline(sel) => {
            let engine = open(&cli)?;
            let keys: Vec<ScenarioKey> = return_periods(&engine, sel)?
                .into_iter()
                .map(ScenarioKey::baseline)
                .collect();
            let out = run_keys(engine.catchment(), &engine.registry, &keys, n)?;
            let v = outcome_json(&engine, keys.len(), &out)?;
            if let Some(dir) = &sel.out {
                write_totals(dir, &out)?;
            }
            Ok(v)
        }
        Command::CaptureScan {
            select,
            tiles,
            capture_fraction,
        } => {
            let engine = open(&cli)?;
            let req = MatrixRequest {
                return_periods: return_periods(&engine, select)?,
                tiles: parse_tiles(&engine, tiles)?,
                capture_fraction: *capture_fraction,
            };
            let scheduled = req.keys().len();
            tracing::info!(scheduled, workers = n, "capture scan");
            let out = run_matrix(engine.catchment(), &engine.registry, &req, n)?;
            let v = outcome_json(&engine, scheduled, &out)?;
            if let Some(dir) = &select.out {
                write_totals(dir, &out)?;
            }
            Ok(v)
        }
        Command::Rank {
            select,
            capture_fraction,
        } => {
            let engine = open(&cli)?;
            let mut csv = String::new();
            for (i, rp) in return_periods(&engine, select)?.into_iter().enumerate() {
                let r = engine.ranking(rp, *capture_fraction)?;
                let text = ranking_csv(&r);
                if let Some(dir) = &select.out {
                    write_file(&dir.join(format!("ranking_rp{rp}.csv")), &text)?;
                    write_file(&dir.join(format!("ranking_rp{rp}.json")), to_bytes(&artifacts::ranking_json(&r)))?;
                }
                let skip = if i == 0 { 0 } else { 1 };
                for line in text.lines().skip(skip) {
                    csv.push_str(line);
                    csv.push('\n');
                }
            }
            let _ = std::io::stdout().write_all(csv.as_bytes());
            Ok(Value::Null)
        }
        Command::Intervene { select, spec, set_id } => {
            let engine = open(&cli)?;
            let rps = return_periods(&engine, select)?;
            let set = engine.put_set(set_id, None, read_specs(spec)?)?;
            let eval = evaluate_intervention(engine.catchment(), &engine.registry, set_id, &set.specs, &rps, n)?;
            let v = evaluation_json(&eval, set.version);
            if let Some(dir) = &select.out {
                write_file(&dir.join(format!("intervention_{set_id}.csv")), intervention_table_csv(&[&eval]))?;
                write_file(&dir.join(format!("intervention_{set_id}.json")), to_bytes(&v))?;
            }
            Ok(v)
        }
        Command::Report {
            select,
            capture_fraction,
        } => {
            let dir = select
                .out
                .clone()
                .ok_or_else(|| ServiceError::Usage("report needs --out".into()))?;
            let engine = open(&cli)?;
            report(&engine, &return_periods(&engine, select)?, *capture_fraction, &dir, n)
        }
        Command::Serve { bind, queue } => {
            let engine = Arc::new(open(&cli)?);
            crate::serve(engine, bind, *queue, n)?;
            Ok(Value::Null)
        }
    }
}

/// Write every artifact for completed runs at the given return periods.
pub fn report(
    engine: &Engine,
    rps: &[f64],
    capture_fraction: f64,
    dir: &Path,
    workers: usize,
) -> Result<Value, ServiceError> {
    let c = engine.catchment();
    let results: Vec<_> = engine
        .current_results()?
        .into_iter()
        .filter(|(k, _)| rps.iter().any(|rp| rp.to_bits() == k.return_period.to_bits()))
        .collect();
    if results.is_empty() {
        return Err(ServiceError::NotFound("no completed runs to report; run baseline or capture-scan first".into()));
    }
    let mut files = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<(), ServiceError> {
        write_file(&dir.join(&name), bytes)?;
        files.push(name);
        Ok(())
    };

    let damages: Vec<_> = results.iter().map(|(_, r)| r.damages()).collect();
    let baselines: Vec<_> = results.iter().filter(|(k, _)| k.is_baseline()).map(|(_, r)| r.damages()).collect();
    put("counts.csv".into(), counts_table_csv(&baselines).into_bytes())?;
    put("totals.csv".into(), totals_table_csv(&damages).into_bytes())?;

    for (k, r) in &results {
        let base = format!("results/{}", key_slug(k));
        put(format!("{base}/damages.json"), to_bytes(&artifacts::damages_json(r)))?;
        put(format!("{base}/buildings.csv"), buildings_csv(r.damages()).into_bytes())?;
        put(format!("{base}/exposure.geojson"), to_bytes(&artifacts::exposure_json(c, r)))?;
        put(format!("{base}/exposure.csv"), exposure_csv(&r.meta.exposure).into_bytes())?;
        put(format!("{base}/depth.bgdr"), artifacts::depth_bgdr(r))?;
        put(format!("{base}/depth.asc"), artifacts::depth_asc(r))?;
        put(format!("{base}/depth.png"), render::depth_png(&r.max_depth))?;
    }

    for &rp in rps {
        match engine.ranking(rp, capture_fraction) {
            Ok(r) => {
                put(format!("ranking_rp{rp}.csv"), ranking_csv(&r).into_bytes())?;
                put(format!("ranking_rp{rp}.json"), to_bytes(&artifacts::ranking_json(&r)))?;
            }
            Err(ServiceError::Plan(bluegreen_core::planner::PlanError::NotFound(_))) => {}
            Err(e) => return Err(e),
        }
    }

    let mut evals = Vec::new();
    for set in engine.interventions.list() {
        let done: Vec<f64> = rps
            .iter()
            .copied()
            .filter(|&rp| {
                results.iter().any(|(k, _)| {
                    k.return_period.to_bits() == rp.to_bits()
                        && matches!(&k.kind, ScenarioKind::Intervention { set_id } if *set_id == set.set_id)
                }) && results.iter().any(|(k, _)| k.is_baseline() && k.return_period.to_bits() == rp.to_bits())
            })
            .collect();
        if done.is_empty() {
            continue;
        }
        let eval = evaluate_intervention(c, &engine.registry, &set.set_id, &set.specs, &done, workers)?;
        put(format!("interventions/{}.json", set.set_id), to_bytes(&evaluation_json(&eval, set.version)))?;
        evals.push(eval);
    }
    if !evals.is_empty() {
        let refs: Vec<&InterventionEvaluation> = evals.iter().collect();
        put("interventions.csv".into(), intervention_table_csv(&refs).into_bytes())?;
    }

    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "out": dir,
        "runs": results.iter().map(|(k, _)| k).collect::<Vec<_>>(),
        "files": files,
    }))
}
