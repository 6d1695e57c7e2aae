//! Command-line front end: configuration files, run orchestration and
//! result files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::path::{Path, PathBuf};

use clap::Parser;
use pcfsqueeze::report::{run_study, write_outputs, CsvOptions, Written};
use pcfsqueeze::{RunManifest, Simulation};

use config::{describe, load_config, Overrides, RunConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PCFSQUEEZE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Polarisation squeezing in a PCF Sagnac loop")]
pub struct Args {
    /// Run configuration (`key = value` file) or a JSON manifest from an
    /// earlier run.
    pub config: PathBuf,
    /// Built-in parameter preset applied under the file's own values.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory (default: $PCFSQUEEZE_OUT_DIR, else `results`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parse and print the resolved configuration without computing.
    #[arg(long)]
    pub validate_only: bool,
}

impl Args {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset.clone(),
            seed: self.seed,
            paths: self.paths,
            workers: self.workers,
            out: self.out.clone(),
        }
    }
}

fn is_manifest(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Turns the arguments into a manifest describing the run to do, plus the
/// output directory.
pub fn resolve(args: &Args) -> Result<(RunManifest, PathBuf, Option<RunConfig>), String> {
    let env_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    if is_manifest(&args.config) {
        if args.preset.is_some() {
            return Err("--preset cannot be combined with a manifest".into());
        }
        let mut m = RunManifest::load(&args.config).map_err(|e| e.to_string())?;
        if let Some(s) = args.seed {
            m.setup.seed = s;
        }
        if let Some(p) = args.paths {
            if p < 2 {
                return Err(format!("paths: {p} is out of range (must be >= 2)"));
            }
            m.paths = p;
        }
        if let Some(w) = args.workers {
            m.setup.workers = w;
        }
        m.setup.validate().map_err(|e| e.to_string())?;
        let dir = args.out.clone().or(env_dir).unwrap_or_else(|| PathBuf::from("results"));
        return Ok((m, dir, None));
    }
    let cfg = load_config(&args.config, &args.overrides()).map_err(|e| format!("{}: {e}", args.config.display()))?;
    let dir = cfg
        .out_dir
        .clone()
        .or(env_dir)
        .unwrap_or_else(|| PathBuf::from("results"));
    let m = RunManifest::new(
        cfg.setup.clone(),
        cfg.study.clone(),
        cfg.paths,
        CsvOptions { timings: cfg.timings },
    );
    Ok((m, dir, Some(cfg)))
}

/// Runs a resolved manifest and writes its outputs. Errors if anything
/// failed, after writing whatever was produced.
pub fn execute(manifest: &RunManifest, dir: &Path) -> Result<Written, String> {
    let sim = Simulation::new(manifest.setup.clone())
        .map_err(|e| e.to_string())?
        .with_progress(|msg| eprintln!("{msg}"));
    eprintln!(
        "{}: {} paths, {} points, dz {}, {} worker(s)",
        manifest.study.name(),
        manifest.paths,
        manifest.setup.n_points,
        manifest.setup.dz,
        manifest.setup.workers
    );
    let out = run_study(&sim, &manifest.study, manifest.paths).map_err(|e| e.to_string())?;
    let written = write_outputs(dir, manifest, &out).map_err(|e| e.to_string())?;
    for line in &out.summary {
        eprintln!("{line}");
    }
    let failures = out.failures().count();
    if failures > 0 {
        return Err(format!(
            "{failures} record(s) failed; see {}",
            written.manifest.display()
        ));
    }
    Ok(written)
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let (manifest, dir, cfg) = match resolve(&args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if args.validate_only {
        match &cfg {
            Some(c) => print!("{}", describe(c)),
            None => println!("{}", serde_json::to_string_pretty(&manifest).unwrap_or_default()),
        }
        return 0;
    }
    match execute(&manifest, &dir) {
        Ok(w) => {
            eprintln!("wrote {}", w.csv.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
