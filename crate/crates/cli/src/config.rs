//! Run configuration: command-line flags merged over an optional JSON file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaugetn::lattice::GaugeGraph;
use gaugetn::{Error, LatticeKind, LatticeSpec, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "1";

#[derive(Parser, Debug)]
#[command(
    name = "gaugetn",
    version,
    about = "Exact contraction of Abelian lattice gauge theory tensor network states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Emit the state (or its sandwich over --sites) as network JSON.
    Build,
    /// Reduced density matrix over --sites, with its entropy.
    Rho,
    /// Topological entanglement entropy from three regions.
    Stop,
    /// Connected two-point correlator.
    Corr,
    /// Entropy of a string region with impurities, over masks and angles (CSV).
    StringScan,
    /// Topological entropy around two impurities, over angles (CSV).
    ImpurityStop,
    /// Compare the rewrite pipeline with the brute-force oracle.
    Verify,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Pipeline,
    Oracle,
}

/// Every flag is optional so that a config file can supply it instead.
#[derive(Args, Debug, Default, Clone)]
pub struct Opts {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// hexagonal (hex), square, kagome or triangular.
    #[arg(long, global = true)]
    pub lattice: Option<String>,
    /// Unit cells as L1xL2.
    #[arg(long, global = true)]
    pub cells: Option<String>,
    /// Group literal such as Z2, Z3 or Z2xZ2.
    #[arg(long, global = true)]
    pub group: Option<String>,
    /// Impurity as vertex:theta; repeatable. Z2 only.
    #[arg(long = "impurity", global = true)]
    pub impurities: Vec<String>,
    /// Comma-separated site ids (x:y:sub).
    #[arg(long, global = true)]
    pub sites: Option<String>,
    /// `auto`, or a vertex index whose spins are split 1 + 1 + rest.
    #[arg(long, global = true)]
    pub vertex_regions: Option<String>,
    #[arg(long, global = true)]
    pub region_a: Option<String>,
    #[arg(long, global = true)]
    pub region_b: Option<String>,
    #[arg(long, global = true)]
    pub region_c: Option<String>,
    /// Operators for `corr`: z, x, n, or p<k> (projector on element k).
    #[arg(long, global = true)]
    pub op1: Option<String>,
    #[arg(long, global = true)]
    pub op2: Option<String>,
    /// String length for `string-scan`.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// `all`, or comma-separated 0/1 strings of length n + 1.
    #[arg(long, global = true)]
    pub masks: Option<String>,
    /// Number of evenly spaced angles in [0, pi/2].
    #[arg(long, global = true)]
    pub theta_grid: Option<usize>,
    /// adjacent-to-A, remote or both.
    #[arg(long, global = true)]
    pub placement: Option<String>,
    /// Grow region A past the second impurity (adjacent placement).
    #[arg(long, global = true)]
    pub enlarge: bool,
    /// Number of sites kept open by `verify`.
    #[arg(long, global = true)]
    pub keep: Option<usize>,
    /// Tolerance for `verify`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub oracle_budget: Option<f64>,
    #[arg(long, value_enum, global = true)]
    pub method: Option<MethodArg>,
    /// Output file; standard output if absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write the rewrite trace as JSON lines to this file.
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
    /// Report entropies in bits as well as nats.
    #[arg(long, global = true)]
    pub bits: bool,
    /// Worker threads for scans; defaults to the available cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

/// The config file layout. Keys mirror the flag names.
#[derive(Serialize, Deserialize, Debug, Default, Clone)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub schema: String,
    pub command: Option<Command>,
    pub lattice: Option<String>,
    pub cells: Option<String>,
    /// Explicit gauge graph for a custom lattice.
    pub graph: Option<GaugeGraph>,
    pub group: Option<String>,
    #[serde(default)]
    pub impurities: Vec<String>,
    pub sites: Option<String>,
    pub vertex_regions: Option<String>,
    pub region_a: Option<String>,
    pub region_b: Option<String>,
    pub region_c: Option<String>,
    pub op1: Option<String>,
    pub op2: Option<String>,
    pub n: Option<usize>,
    pub masks: Option<String>,
    pub theta_grid: Option<usize>,
    pub placement: Option<String>,
    pub enlarge: Option<bool>,
    pub keep: Option<usize>,
    pub tol: Option<f64>,
    pub oracle_budget: Option<f64>,
    pub method: Option<MethodArg>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub trace: Option<PathBuf>,
    pub bits: Option<bool>,
    pub workers: Option<usize>,
}

/// Fully merged configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub opts: Opts,
    pub graph: Option<GaugeGraph>,
}

pub fn load(cli: Cli) -> Result<RunConfig> {
    let mut file = FileConfig::default();
    if let Some(path) = &cli.opts.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        file = serde_json::from_str(&text)
            .map_err(|e| Error::Validation(format!("bad config {}: {e}", path.display())))?;
        if file.schema != SCHEMA {
            return Err(Error::Validation(format!(
                "config schema {:?} is not supported, expected {SCHEMA:?}",
                file.schema
            )));
        }
    }
    let command = cli
        .command
        .or(file.command)
        .ok_or_else(|| Error::Validation("no command given on the command line or in the config".into()))?;
    let f = file.clone();
    let o = cli.opts;
    let opts = Opts {
        config: o.config,
        lattice: o.lattice.or(f.lattice),
        cells: o.cells.or(f.cells),
        group: o.group.or(f.group),
        impurities: if o.impurities.is_empty() {
            f.impurities
        } else {
            o.impurities
        },
        sites: o.sites.or(f.sites),
        vertex_regions: o.vertex_regions.or(f.vertex_regions),
        region_a: o.region_a.or(f.region_a),
        region_b: o.region_b.or(f.region_b),
        region_c: o.region_c.or(f.region_c),
        op1: o.op1.or(f.op1),
        op2: o.op2.or(f.op2),
        n: o.n.or(f.n),
        masks: o.masks.or(f.masks),
        theta_grid: o.theta_grid.or(f.theta_grid),
        placement: o.placement.or(f.placement),
        enlarge: o.enlarge || f.enlarge.unwrap_or(false),
        keep: o.keep.or(f.keep),
        tol: o.tol.or(f.tol),
        oracle_budget: o.oracle_budget.or(f.oracle_budget),
        method: o.method.or(f.method),
        output: o.output.or(f.output),
        format: o.format.or(f.format),
        trace: o.trace.or(f.trace),
        bits: o.bits || f.bits.unwrap_or(false),
        workers: o.workers.or(f.workers),
    };
    Ok(RunConfig {
        command,
        opts,
        graph: file.graph,
    })
}

pub fn parse_cells(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Validation(format!("bad cell count {s:?}, expected L1xL2"));
    let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

impl RunConfig {
    /// The lattice named by the config, if any.
    pub fn lattice(&self) -> Result<Option<LatticeSpec>> {
        let Some(kind) = &self.opts.lattice else {
            return Ok(self.graph.clone().map(LatticeSpec::custom));
        };
        let kind: LatticeKind = kind.parse()?;
        if kind == LatticeKind::Custom {
            let g = self
                .graph
                .clone()
                .ok_or_else(|| Error::Validation("a custom lattice needs a \"graph\" in the config file".into()))?;
            return Ok(Some(LatticeSpec::custom(g)));
        }
        let (l1, l2) = match &self.opts.cells {
            Some(c) => parse_cells(c)?,
            None => (2, 2),
        };
        Ok(Some(LatticeSpec::periodic(kind, l1, l2)))
    }
}
