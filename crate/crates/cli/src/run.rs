//! Command execution.

use std::collections::BTreeSet;
use std::f64::consts::LN_2;
use std::io::Write;

use gaugetn::network::{build_lattice_state, build_sandwich, insert_impurity, ImpuritySpec};
use gaugetn::observables::{self as obs, EvalOptions, Method, Placement, Region};
use gaugetn::oracle::{compare_to_pipeline_with, ComparisonReport, DEFAULT_BUDGET};
use gaugetn::rewrite::simplify;
use gaugetn::{DenseTensor, Error, GroupSpec, LatticeKind, LatticeSpec, Result, SiteId, TensorNetwork};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{Command, Format, MethodArg, RunConfig};

/// Mismatch found by `verify`; maps to its own exit code.
pub struct Mismatch(pub String);

pub enum Failure {
    Lib(Error),
    Mismatch(Mismatch),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn invalid<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::Lib(Error::Validation(msg.into())))
}

pub fn execute(cfg: &RunConfig) -> Outcome {
    match cfg.command {
        Command::Build => build(cfg),
        Command::Rho => rho(cfg),
        Command::Stop => stop(cfg),
        Command::Corr => corr(cfg),
        Command::StringScan => string_scan(cfg),
        Command::ImpurityStop => impurity_stop(cfg),
        Command::Verify => verify(cfg),
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Outcome {
    match &cfg.opts.output {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn emit_json(cfg: &RunConfig, v: &Value) -> Outcome {
    if cfg.opts.format == Some(Format::Csv) {
        return invalid(format!("{:?} only writes JSON", cfg.command));
    }
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    emit(cfg, &s)
}

fn group(cfg: &RunConfig) -> Result<GroupSpec> {
    cfg.opts.group.as_deref().unwrap_or("Z2").parse()
}

fn require_lattice(cfg: &RunConfig) -> Result<LatticeSpec> {
    cfg.lattice()?
        .ok_or_else(|| Error::Validation("this command needs --lattice".into()))
}

fn parse_sites(s: &str) -> Result<Vec<SiteId>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

fn parse_impurity(s: &str) -> Result<ImpuritySpec> {
    let bad = || Error::Validation(format!("bad impurity {s:?}, expected vertex:theta"));
    let (v, t) = s.split_once(':').ok_or_else(bad)?;
    Ok(ImpuritySpec {
        vertex: v.trim().parse().map_err(|_| bad())?,
        theta: t.trim().parse().map_err(|_| bad())?,
    })
}

/// The lattice state with any requested impurities.
fn state(cfg: &RunConfig, lattice: &LatticeSpec) -> Result<TensorNetwork> {
    let mut net = build_lattice_state(lattice, &group(cfg)?)?;
    for s in &cfg.opts.impurities {
        net = insert_impurity(&net, parse_impurity(s)?)?;
    }
    Ok(net)
}

fn eval_options(cfg: &RunConfig) -> EvalOptions {
    let budget = cfg.opts.oracle_budget.unwrap_or(DEFAULT_BUDGET);
    match cfg.opts.method {
        Some(MethodArg::Oracle) => EvalOptions::oracle(budget),
        _ => EvalOptions {
            oracle_budget: budget,
            ..EvalOptions::default()
        },
    }
}

fn lattice_json(l: &LatticeSpec) -> Value {
    json!({ "kind": l.kind.to_string(), "cells": [l.cells.0, l.cells.1] })
}

fn inputs(cfg: &RunConfig, lattice: &LatticeSpec) -> Result<Value> {
    Ok(json!({
        "lattice": lattice_json(lattice),
        "group": group(cfg)?.to_string(),
        "impurities": cfg.opts.impurities,
    }))
}

fn write_trace(cfg: &RunConfig, lines: &str) -> Outcome {
    if let Some(p) = &cfg.opts.trace {
        std::fs::write(p, lines)?;
    }
    Ok(())
}

fn build(cfg: &RunConfig) -> Outcome {
    let lattice = require_lattice(cfg)?;
    let ket = state(cfg, &lattice)?;
    let net = match &cfg.opts.sites {
        Some(s) => build_sandwich(&ket, &parse_sites(s)?.into_iter().collect())?,
        None => ket,
    };
    if cfg.opts.trace.is_some() {
        let (_, trace) = simplify(&net);
        write_trace(cfg, &trace.to_json_lines())?;
    }
    emit_json(cfg, &net.to_json())
}

fn matrix_json(m: &nalgebra::DMatrix<Complex64>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
        .collect();
    Value::Array(rows)
}

fn entropy_fields(v: &mut Value, key: &str, nats: f64, bits: bool) {
    v[format!("{key}_nats")] = json!(nats);
    if bits {
        v[format!("{key}_bits")] = json!(nats / LN_2);
    }
}

fn rho(cfg: &RunConfig) -> Outcome {
    let lattice = require_lattice(cfg)?;
    let Some(sites) = &cfg.opts.sites else {
        return invalid("rho needs --sites");
    };
    let sites: BTreeSet<SiteId> = parse_sites(sites)?.into_iter().collect();
    let net = state(cfg, &lattice)?;
    let opts = eval_options(cfg);
    let rho = obs::rdm_with(&net, &sites, &opts)?;
    let s = obs::von_neumann_entropy(&rho)?;
    let mut v = json!({
        "inputs": inputs(cfg, &lattice)?,
        "sites": sites.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "method": opts.method,
        "rho": matrix_json(&rho.to_matrix(sites.len())),
    });
    entropy_fields(&mut v, "S", s, cfg.opts.bits);
    emit_json(cfg, &v)
}

fn regions(cfg: &RunConfig, lattice: &LatticeSpec) -> Result<[Region; 3]> {
    let o = &cfg.opts;
    match (&o.vertex_regions, &o.region_a, &o.region_b, &o.region_c) {
        (Some(v), None, None, None) if v == "auto" => obs::auto_regions(lattice),
        (Some(v), None, None, None) => {
            let v: usize = v
                .parse()
                .map_err(|_| Error::Validation(format!("--vertex-regions takes auto or a vertex index, got {v:?}")))?;
            let graph = lattice.gauge_graph()?;
            if v >= graph.num_vertices {
                return Err(Error::Validation(format!("vertex {v} out of range")));
            }
            obs::vertex_regions(&graph, v)
        }
        (None, Some(a), Some(b), Some(c)) => Ok([
            Region::new("A", parse_sites(a)?)?,
            Region::new("B", parse_sites(b)?)?,
            Region::new("C", parse_sites(c)?)?,
        ]),
        _ => Err(Error::Validation(
            "give either --vertex-regions or all of --region-a, --region-b, --region-c".into(),
        )),
    }
}

fn stop(cfg: &RunConfig) -> Outcome {
    let lattice = require_lattice(cfg)?;
    let net = state(cfg, &lattice)?;
    let [a, b, c] = regions(cfg, &lattice)?;
    let opts = eval_options(cfg);
    let t = obs::topological_entropy_with(&net, &a, &b, &c, &opts)?;
    let mut v = serde_json::to_value(&t).expect("serializable");
    v["inputs"] = inputs(cfg, &lattice)?;
    v["method"] = json!(opts.method);
    v["units"] = json!("nats");
    if cfg.opts.bits {
        v["S_top_bits"] = json!(t.s_top / LN_2);
    }
    emit_json(cfg, &v)
}

/// Single-site operator by name, in the element basis.
fn operator(name: &str, g: &GroupSpec) -> Result<DenseTensor> {
    let d = g.order();
    let one = Complex64::new(1.0, 0.0);
    let name = name.trim().to_ascii_lowercase();
    let t = match name.as_str() {
        "z" => DenseTensor::from_fn(vec![d, d], |i| {
            if i[0] == i[1] {
                g.character(1 % d, i[0])
            } else {
                Complex64::default()
            }
        }),
        "x" => DenseTensor::from_fn(vec![d, d], |i| {
            if i[0] == g.add(i[1], 1 % d) {
                one
            } else {
                Complex64::default()
            }
        }),
        "n" => DenseTensor::from_fn(vec![d, d], |i| {
            if i[0] == i[1] {
                Complex64::new(i[0] as f64, 0.0)
            } else {
                Complex64::default()
            }
        }),
        _ => {
            let k: usize = name
                .strip_prefix('p')
                .and_then(|k| k.parse().ok())
                .filter(|&k| k < d)
                .ok_or_else(|| Error::Validation(format!("unknown operator {name:?}; use z, x, n or p<k>")))?;
            DenseTensor::from_fn(vec![d, d], |i| {
                if i[0] == k && i[1] == k {
                    one
                } else {
                    Complex64::default()
                }
            })
        }
    };
    Ok(t)
}

fn corr(cfg: &RunConfig) -> Outcome {
    let lattice = require_lattice(cfg)?;
    let g = group(cfg)?;
    let sites = match &cfg.opts.sites {
        Some(s) => parse_sites(s)?,
        None => return invalid("corr needs --sites with two site ids"),
    };
    let [s1, s2] = sites.as_slice() else {
        return invalid("corr needs exactly two sites");
    };
    let name1 = cfg.opts.op1.as_deref().unwrap_or("z");
    let name2 = cfg.opts.op2.as_deref().unwrap_or(name1);
    let net = state(cfg, &lattice)?;
    let c = obs::connected_correlator(&net, &operator(name1, &g)?, *s1, &operator(name2, &g)?, *s2)?;
    emit_json(
        cfg,
        &json!({
            "inputs": inputs(cfg, &lattice)?,
            "sites": [s1.to_string(), s2.to_string()],
            "operators": [name1, name2],
            "connected": [c.re, c.im],
            "method": Method::Pipeline,
        }),
    )
}

fn masks(spec: &str, n: usize) -> Result<Vec<Vec<bool>>> {
    if spec.trim() == "all" {
        return Ok((0..1u64 << (n + 1))
            .map(|b| (0..=n).map(|i| b >> i & 1 == 1).collect())
            .collect());
    }
    spec.split(',')
        .map(|m| {
            let m = m.trim();
            if m.len() != n + 1 || !m.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::Validation(format!(
                    "mask {m:?} must be {} characters of 0/1",
                    n + 1
                )));
            }
            Ok(m.chars().map(|c| c == '1').collect())
        })
        .collect()
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Validation(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"))
}

fn num(x: f64) -> String {
    format!("{x:.15e}")
}

fn string_scan(cfg: &RunConfig) -> Outcome {
    if cfg.opts.format == Some(Format::Json) {
        return invalid("string-scan writes CSV");
    }
    let n = cfg.opts.n.unwrap_or(4);
    if n == 0 {
        return invalid("--n must be at least 1");
    }
    let lattice = cfg.lattice()?.unwrap_or_else(|| obs::string_lattice(n));
    let masks = masks(cfg.opts.masks.as_deref().unwrap_or("all"), n)?;
    let thetas = obs::theta_grid(cfg.opts.theta_grid.unwrap_or(33));
    let rows = obs::string_scan_grid(&lattice, n, &masks, &thetas, &eval_options(cfg))?;
    let mut header = vec!["n", "m", "mask", "theta", "S_nats", "method"];
    if cfg.opts.bits {
        header.push("S_bits");
    }
    let rows = rows
        .into_iter()
        .map(|r| {
            let mut v = vec![
                r.n.to_string(),
                r.m.to_string(),
                r.mask,
                num(r.theta),
                num(r.s_nats),
                r.method.to_string(),
            ];
            if cfg.opts.bits {
                v.push(num(r.s_nats / LN_2));
            }
            v
        })
        .collect();
    emit(cfg, &csv_text(&header, rows)?)
}

fn impurity_stop(cfg: &RunConfig) -> Outcome {
    if cfg.opts.format == Some(Format::Json) {
        return invalid("impurity-stop writes CSV");
    }
    let lattice = cfg.lattice()?.unwrap_or_else(obs::impurity_lattice);
    let placements = match cfg.opts.placement.as_deref().unwrap_or("both") {
        "both" => vec![Placement::AdjacentToA, Placement::Remote],
        p => vec![p.parse::<Placement>()?],
    };
    let thetas = obs::theta_grid(cfg.opts.theta_grid.unwrap_or(33));
    let opts = eval_options(cfg);
    let enlarge = cfg.opts.enlarge;
    let points: Vec<(Placement, f64)> = placements
        .iter()
        .flat_map(|&p| thetas.iter().map(move |&t| (p, t)))
        .collect();
    use rayon::prelude::*;
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(p, t)| Ok(obs::impurity_stop_on(&lattice, t, p, enlarge && p == Placement::AdjacentToA, &opts)?.s_top))
        .collect::<Result<_>>()?;
    let mut header = vec!["placement", "enlarged", "theta", "S_top_nats", "method"];
    if cfg.opts.bits {
        header.push("S_top_bits");
    }
    let rows = points
        .iter()
        .zip(values)
        .map(|(&(p, t), s)| {
            let mut v = vec![
                p.to_string(),
                (enlarge && p == Placement::AdjacentToA).to_string(),
                num(t),
                num(s),
                opts.method.to_string(),
            ];
            if cfg.opts.bits {
                v.push(num(s / LN_2));
            }
            v
        })
        .collect();
    emit(cfg, &csv_text(&header, rows)?)
}

fn verify_one(
    cfg: &RunConfig,
    lattice: &LatticeSpec,
    g: &GroupSpec,
    keep: usize,
    tol: f64,
    budget: f64,
) -> Result<(Value, ComparisonReport, String)> {
    let mut ket = build_lattice_state(lattice, g)?;
    for s in &cfg.opts.impurities {
        ket = insert_impurity(&ket, parse_impurity(s)?)?;
    }
    let kept: BTreeSet<SiteId> = match &cfg.opts.sites {
        Some(s) => parse_sites(s)?.into_iter().collect(),
        None => ket.sites().into_iter().take(keep).collect(),
    };
    let net = build_sandwich(&ket, &kept)?;
    let report = compare_to_pipeline_with(&net, tol, budget)?;
    let (_, trace) = simplify(&net);
    let v = json!({
        "lattice": lattice_json(lattice),
        "group": g.to_string(),
        "kept": kept.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "report": report,
    });
    Ok((v, report, trace.to_json_lines()))
}

fn verify(cfg: &RunConfig) -> Outcome {
    let tol = cfg.opts.tol.unwrap_or(1e-10);
    if tol.is_nan() || tol < 0.0 {
        return invalid(format!("--tol must be non-negative, got {tol}"));
    }
    let keep = cfg.opts.keep.unwrap_or(2);
    let budget = cfg.opts.oracle_budget.unwrap_or(DEFAULT_BUDGET);
    let lattices = match cfg.lattice()? {
        Some(l) => vec![l],
        None => [
            LatticeKind::Hexagonal,
            LatticeKind::Square,
            LatticeKind::Kagome,
            LatticeKind::Triangular,
        ]
        .into_iter()
        .map(|k| LatticeSpec::periodic(k, 1, 1))
        .collect(),
    };
    let groups: Vec<GroupSpec> = match &cfg.opts.group {
        Some(g) => vec![g.parse()?],
        None => ["Z2", "Z3", "Z2xZ2"]
            .iter()
            .map(|g| g.parse().expect("literal"))
            .collect(),
    };
    let mut cases = Vec::new();
    let mut traces = String::new();
    let mut failed = Vec::new();
    for lattice in &lattices {
        for g in &groups {
            let (v, report, trace) = verify_one(cfg, lattice, g, keep, tol, budget)?;
            if !report.pass {
                failed.push(format!(
                    "{} {}x{} {g}: deviation {:e} > {tol:e}",
                    lattice.kind, lattice.cells.0, lattice.cells.1, report.max_abs_deviation
                ));
            }
            traces.push_str(&trace);
            cases.push(v);
        }
    }
    write_trace(cfg, &traces)?;
    emit_json(
        cfg,
        &json!({ "tolerance": tol, "pass": failed.is_empty(), "cases": cases }),
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Mismatch(Mismatch(failed.join("; "))))
    }
}
