//! Experiment configuration, subcommand dispatch and result persistence.
//!
//! A run writes into `<out>/<subcommand>/`: one or more CSV tables, a
//! `summary.json` holding the [`ResultBundle`], and `config.json`, the fully
//! defaulted configuration that reproduces the run.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

pub use config::{
    scan_rng, slip_rng, AssembleKnobs, BasisSpec, BoxSpec, ExperimentConfig, IdentityKnobs, IntegralKnobs,
    JacobianKnobs, JumpKnobs, LipschitzKnobs, ProjectorKnobs, RankKnobs, ResidualKnobs, SlipSpec, SlipSpecKind,
    TransportCase, TransportKnobs,
};

use crate::error::{Error, Result};
use crate::stability_lab::{ScanResult, ScanRow};

pub const TOOL_VERSION: &str = concat!("faultstab ", env!("CARGO_PKG_VERSION"));
pub const RNG_NAME: &str = "ChaCha8Rng";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    VerifyJumps,
    VerifyIntegrals,
    Assemble,
    JacobianCheck,
    LipschitzScan,
    RankScan,
    ResidualGrowth,
    ProjectorScan,
    TransportCheck,
    IdentityCheck,
}

impl Subcommand {
    pub const ALL: [Subcommand; 10] = [
        Subcommand::VerifyJumps,
        Subcommand::VerifyIntegrals,
        Subcommand::Assemble,
        Subcommand::JacobianCheck,
        Subcommand::LipschitzScan,
        Subcommand::RankScan,
        Subcommand::ResidualGrowth,
        Subcommand::ProjectorScan,
        Subcommand::TransportCheck,
        Subcommand::IdentityCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::VerifyJumps => "verify-jumps",
            Subcommand::VerifyIntegrals => "verify-integrals",
            Subcommand::Assemble => "assemble",
            Subcommand::JacobianCheck => "jacobian-check",
            Subcommand::LipschitzScan => "lipschitz-scan",
            Subcommand::RankScan => "rank-scan",
            Subcommand::ResidualGrowth => "residual-growth",
            Subcommand::ProjectorScan => "projector-scan",
            Subcommand::TransportCheck => "transport-check",
            Subcommand::IdentityCheck => "identity-check",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|s| s.name()).collect()
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config("subcommand", format!("unknown subcommand `{s}`")))
    }
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Cell {
    F(f64),
    U(usize),
    S(String),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
}

/// 17 significant digits in scientific notation, independent of locale.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn from_scan(name: &str, scan: &ScanResult) -> Self {
        let mut t = Table::new(name, &ScanRow::HEADER);
        for (i, r) in scan.rows.iter().enumerate() {
            let mut row = vec![Cell::S(r.label.clone())];
            row.extend(r.m.iter().chain(&r.other).map(|&v| Cell::F(v)));
            row.extend([Cell::F(r.t), Cell::F(r.metric), Cell::F(r.reference), Cell::B(r.flag), Cell::U(i)]);
            t.push(row);
        }
        t
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path).map_err(std::io::Error::from)?;
        w.write_record(&self.header).map_err(std::io::Error::from)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(std::io::Error::from)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// What a subcommand hands back before anything is written.
pub(crate) struct Outcome {
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
    pub passed: bool,
}

/// Record of one run, also written as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ResultBundle {
    pub subcommand: Subcommand,
    pub tool_version: String,
    pub rng: String,
    pub seed: u64,
    /// Whether every acceptance threshold of the subcommand was met.
    pub passed: bool,
    pub dir: PathBuf,
    pub csv: Vec<PathBuf>,
    pub config_echo: PathBuf,
    pub summary: serde_json::Value,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl ResultBundle {
    pub fn summary_path(&self) -> PathBuf {
        self.dir.join("summary.json")
    }
}

/// Validates `config`, runs `sub` and writes its bundle.
pub fn run(sub: Subcommand, config: &ExperimentConfig, opts: &RunOptions) -> Result<ResultBundle> {
    let start = Instant::now();
    let mut config = config.clone();
    if let Some(out) = &opts.out_dir {
        config.out_dir = out.clone();
    }
    config.validate()?;
    let mut timings = BTreeMap::new();
    timings.insert("validate".to_string(), start.elapsed().as_secs_f64());

    let compute = Instant::now();
    let outcome = match opts.threads {
        Some(n) => {
            if n == 0 {
                return Err(Error::config("threads", "must be at least 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            pool.install(|| commands::dispatch(sub, &config))?
        }
        None => commands::dispatch(sub, &config)?,
    };
    timings.insert("compute".to_string(), compute.elapsed().as_secs_f64());

    let write = Instant::now();
    let dir = config.out_dir.join(sub.name());
    fs::create_dir_all(&dir)?;
    let csv = outcome.tables.iter().map(|t| t.write(&dir)).collect::<Result<Vec<_>>>()?;
    let config_echo = dir.join("config.json");
    fs::write(&config_echo, config.to_json()?)?;
    timings.insert("write".to_string(), write.elapsed().as_secs_f64());
    timings.insert("total".to_string(), start.elapsed().as_secs_f64());

    let bundle = ResultBundle {
        subcommand: sub,
        tool_version: TOOL_VERSION.into(),
        rng: RNG_NAME.into(),
        seed: config.seed,
        passed: outcome.passed,
        dir,
        csv,
        config_echo,
        summary: outcome.summary,
        timings,
    };
    fs::write(bundle.summary_path(), serde_json::to_string_pretty(&bundle)?)?;
    Ok(bundle)
}

/// [`run`] with the configuration read from `path`.
pub fn run_file(sub: Subcommand, path: &Path, opts: &RunOptions) -> Result<ResultBundle> {
    run(sub, &ExperimentConfig::load(path)?, opts)
}
