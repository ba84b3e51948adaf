//! Command-line driver: model → diagrams → hierarchy → sweep, with artifacts on disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::ansatz::build_qca;
use crate::checks;
use crate::config::{HierarchyTag, RunConfig};
use crate::diagrams::{build_diagram, enumerate_leading, export_dot, k_label, leading_groups};
use crate::error::{Error, Result};
use crate::hierarchy::{estimate_thetas, priority_from_estimates, HierarchyEstimates};
use crate::perturbation::PerturbationSeries;
use crate::vqe::{hierarchy_sweep, OptimizerOptions, SweepResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pertvqe", version, about = "Perturbative VQE ansatz construction")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for tie-breaking and optimizer restarts.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate θ̃ for every leading slot and write the ranked hierarchy.
    Hierarchy {
        /// Hierarchy variant, e.g. `pert`, `rev`, `2loc*`.
        #[arg(long)]
        mode: Option<HierarchyTag>,
        #[arg(long)]
        k_max: Option<u32>,
    },
    /// Write one DOT file per leading diagram.
    Diagrams {
        #[arg(long)]
        k_max: Option<u32>,
    },
    /// Run the configured hierarchy sweeps.
    Sweep {
        #[arg(long)]
        n_p_max: Option<usize>,
    },
    /// Run the property checks on the configured model.
    Verify,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Config(_) | Error::InvalidArgument(_) | Error::ParsePauli { .. } => EXIT_USAGE,
        _ => EXIT_MODEL,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <FILE> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.hierarchy.tie_seed = Some(seed);
        cfg.sweep.optimizer.seed = seed;
    }
    match &cli.command {
        Command::Hierarchy { mode, k_max } => {
            if let Some(t) = mode {
                cfg.hierarchy.mode = t.mode;
                cfg.hierarchy.ordering = t.ordering;
            }
            if let Some(k) = k_max {
                cfg.k_max = *k;
            }
            print!("{}", cmd_hierarchy(&cfg)?);
            Ok(EXIT_OK)
        }
        Command::Diagrams { k_max } => {
            if let Some(k) = k_max {
                cfg.k_max = *k;
            }
            let files = cmd_diagrams(&cfg)?;
            println!("wrote {} diagrams to {}", files.len(), cfg.out.join("diagrams").display());
            Ok(EXIT_OK)
        }
        Command::Sweep { n_p_max } => {
            if let Some(n) = n_p_max {
                cfg.sweep.n_p_max = *n;
            }
            let results = cmd_sweep(&cfg, cli.jobs.max(1))?;
            let mut code = EXIT_OK;
            for (r, res) in &results {
                let last = res.last().map_or(f64::NAN, |x| x.epsilon);
                println!("J/h={r:<6} {:<6} eps(N_p={}) = {last:.3e}", res.tag, res.rows.len() - 1);
                if let Some(msg) = &res.aborted {
                    eprintln!("sweep {} at J/h={r} aborted: {msg}", res.tag);
                    code = EXIT_MODEL;
                }
            }
            Ok(code)
        }
        Command::Verify => {
            let seed = cli.seed.unwrap_or(0);
            let report = cmd_verify(&cfg, seed)?;
            let mut ok = true;
            for c in &report {
                let tag = if c.pass { "PASS" } else { "FAIL" };
                ok &= c.pass;
                println!("{tag} {:<26} {:.6e} (required {})", c.name, c.value, c.rule);
            }
            Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn estimates(cfg: &RunConfig, model_ratio: Option<f64>, k_max: u32) -> Result<HierarchyEstimates> {
    let model = match model_ratio {
        Some(r) => cfg.model.at_ratio(r)?,
        None => cfg.model.build()?,
    };
    estimate_thetas(&model, &build_qca(model.n_qubits())?, k_max)
}

/// Writes `hierarchy.json` and `coefficients.json`; returns the printed table.
pub fn cmd_hierarchy(cfg: &RunConfig) -> Result<String> {
    let model = cfg.model.build()?;
    let est = estimates(cfg, None, cfg.k_max)?;
    let list = priority_from_estimates(&est, cfg.hierarchy.mode, cfg.hierarchy.ordering, cfg.hierarchy.tie_seed)?;
    write(&cfg.out.join("hierarchy.json"), &(list.to_json()? + "\n"))?;
    let table = PerturbationSeries::new(&model).table(cfg.k_max)?;
    write(
        &cfg.out.join("coefficients.json"),
        &(serde_json::to_string_pretty(&table)? + "\n"),
    )?;
    let mut s = String::new();
    let _ = writeln!(s, "{:>4}  {:<w$}  {:<w$}  a  order  {:>14}  {:>12}", "rank", "generator", "s", "theta_tilde", "j_weight", w = model.n_qubits().max(9) + 4);
    for e in &list.entries {
        let _ = writeln!(
            s,
            "{:>4}  {:<w$}  {:<w$}  {}  {:>5}  {:>14.6e}  {:>12.4e}",
            e.rank,
            e.pauli.to_string(),
            e.s.to_string(),
            e.a,
            e.order,
            e.theta_tilde,
            e.j_weight,
            w = model.n_qubits().max(9) + 4
        );
    }
    Ok(s)
}

/// Writes one DOT file per leading multi-index plus `leading.json`; returns the DOT paths.
pub fn cmd_diagrams(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let model = cfg.model.build()?;
    let groups = enumerate_leading(&model, cfg.k_max)?;
    let dir = cfg.out.join("diagrams");
    let mut files = Vec::new();
    let summary = leading_groups(&groups);
    for g in &summary {
        for k in &g.k_list {
            let path = dir.join(format!("k_{}.dot", k_label(k)));
            write(&path, &export_dot(&build_diagram(&model, k)?))?;
            files.push(path);
        }
    }
    write(&dir.join("leading.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    Ok(files)
}

#[derive(Serialize)]
struct ManifestRun {
    hierarchy: String,
    csv: String,
    theta: String,
    final_epsilon: Option<f64>,
    aborted: Option<String>,
}

#[derive(Serialize)]
struct ManifestRegime {
    j_over_h: f64,
    e0: f64,
    runs: Vec<ManifestRun>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    model: &'a crate::config::ModelSpec,
    rank_j_over_h: f64,
    k_max: u32,
    n_p_max: usize,
    optimizer: OptimizerOptions,
    regimes: Vec<ManifestRegime>,
}

fn file_stem(r: f64, tag: &HierarchyTag) -> String {
    format!("jh{r}_{}", tag.to_string().replace('*', "_star"))
}

/// Runs every (regime, hierarchy) sweep on `jobs` threads and writes CSV, θ* sidecars and
/// `manifest.json`. Results come back in configuration order.
pub fn cmd_sweep(cfg: &RunConfig, jobs: usize) -> Result<Vec<(f64, SweepResult)>> {
    let sc = &cfg.sweep;
    let est = estimates(cfg, Some(cfg.hierarchy.rank_j_over_h), sc.k_max)?;
    let mut tasks = Vec::new();
    for &r in &sc.regimes {
        for tag in &sc.hierarchies {
            let list = priority_from_estimates(&est, tag.mode, tag.ordering, cfg.hierarchy.tie_seed)?;
            list.take(sc.n_p_max)?;
            tasks.push((r, *tag, list));
        }
    }
    let models = sc
        .regimes
        .iter()
        .map(|&r| cfg.model.at_ratio(r))
        .collect::<Result<Vec<_>>>()?;
    let slots: Vec<Mutex<Option<Result<SweepResult>>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(tasks.len()).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((r, _, list)) = tasks.get(i) else { break };
                let m = &models[sc.regimes.iter().position(|x| x == r).expect("regime")];
                let res = hierarchy_sweep(m, list, sc.n_p_max, &sc.optimizer);
                *slots[i].lock().expect("result slot") = Some(res);
            });
        }
    });
    let dir = cfg.out.join("sweep");
    let mut out = Vec::new();
    let mut regimes: Vec<ManifestRegime> = Vec::new();
    for ((r, tag, _), slot) in tasks.iter().zip(slots) {
        let res = slot.into_inner().expect("result slot").expect("task ran")?;
        let stem = file_stem(*r, tag);
        write(&dir.join(format!("{stem}.csv")), &res.to_csv())?;
        write(&dir.join(format!("{stem}.theta.json")), &(res.theta_json()? + "\n"))?;
        let run = ManifestRun {
            hierarchy: tag.to_string(),
            csv: format!("{stem}.csv"),
            theta: format!("{stem}.theta.json"),
            final_epsilon: res.last().map(|x| x.epsilon),
            aborted: res.aborted.clone(),
        };
        match regimes.iter_mut().find(|g| g.j_over_h == *r) {
            Some(g) => g.runs.push(run),
            None => regimes.push(ManifestRegime {
                j_over_h: *r,
                e0: res.e0,
                runs: vec![run],
            }),
        }
        out.push((*r, res));
    }
    let manifest = Manifest {
        model: &cfg.model,
        rank_j_over_h: cfg.hierarchy.rank_j_over_h,
        k_max: sc.k_max,
        n_p_max: sc.n_p_max,
        optimizer: sc.optimizer,
        regimes,
    };
    write(&dir.join("manifest.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig, seed: u64) -> Result<Vec<checks::Check>> {
    let model = cfg.model.build()?;
    checks::run_all(&model, cfg.k_max, seed)
}
