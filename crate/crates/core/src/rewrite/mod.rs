//! Exact graphical simplification and contraction.
//!
//! [`simplify`] runs the rule catalog in phases, each to a fixpoint, and records
//! every application. [`contract`] then sums out what is left.

mod residual;
pub(crate) mod rules;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{validation, Error, Result};
use crate::network::{NodeId, TensorNetwork};
use crate::tensor::{DenseTensor, NodeKind, ScalarAccumulator};

/// The exact local identities the engine knows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RewriteRule {
    LayerFuse,
    CopyFusion,
    PlusFusion,
    Bialgebra,
    Hopf,
    PlusToFourierCopy { conjugate: bool },
    FourierCancel,
    CopyPoint,
    UnitElim,
    SelfLoopTrace,
    SubCopyForm,
    SubCopyFusion,
}

impl RewriteRule {
    pub const ALL: [RewriteRule; 12] = [
        RewriteRule::LayerFuse,
        RewriteRule::CopyFusion,
        RewriteRule::PlusFusion,
        RewriteRule::Bialgebra,
        RewriteRule::Hopf,
        RewriteRule::PlusToFourierCopy { conjugate: false },
        RewriteRule::FourierCancel,
        RewriteRule::CopyPoint,
        RewriteRule::UnitElim,
        RewriteRule::SelfLoopTrace,
        RewriteRule::SubCopyForm,
        RewriteRule::SubCopyFusion,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RewriteRule::LayerFuse => "LayerFuse",
            RewriteRule::CopyFusion => "CopyFusion",
            RewriteRule::PlusFusion => "PlusFusion",
            RewriteRule::Bialgebra => "Bialgebra",
            RewriteRule::Hopf => "Hopf",
            RewriteRule::PlusToFourierCopy { .. } => "PlusToFourierCopy",
            RewriteRule::FourierCancel => "FourierCancel",
            RewriteRule::CopyPoint => "CopyPoint",
            RewriteRule::UnitElim => "UnitElim",
            RewriteRule::SelfLoopTrace => "SelfLoopTrace",
            RewriteRule::SubCopyForm => "SubCopyForm",
            RewriteRule::SubCopyFusion => "SubCopyFusion",
        }
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewriteRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RewriteRule::ALL
            .iter()
            .find(|r| r.name() == s)
            .copied()
            .ok_or_else(|| Error::Validation(format!("unknown rewrite rule {s:?}")))
    }
}

/// One rule application: the matched nodes (anchor first) and the scalar it contributed.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub rule: RewriteRule,
    pub nodes: Vec<NodeId>,
    pub scalar: Complex64,
}

impl TraceStep {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "rule": self.rule.name(),
            "nodes": self.nodes.iter().map(|n| n.0).collect::<Vec<_>>(),
            "scalar": [self.scalar.re, self.scalar.im],
        });
        if let RewriteRule::PlusToFourierCopy { conjugate } = self.rule {
            v["conjugate"] = json!(conjugate);
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let name = v["rule"]
            .as_str()
            .ok_or_else(|| Error::Validation("trace step without rule".into()))?;
        let mut rule: RewriteRule = name.parse()?;
        if let RewriteRule::PlusToFourierCopy { conjugate } = &mut rule {
            *conjugate = v["conjugate"].as_bool().unwrap_or(false);
        }
        let nodes = v["nodes"]
            .as_array()
            .ok_or_else(|| Error::Validation("trace step without nodes".into()))?
            .iter()
            .map(|x| x.as_u64().map(|n| NodeId(n as u32)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Validation("bad node id in trace".into()))?;
        if nodes.is_empty() {
            return validation("trace step with no nodes");
        }
        let s = v["scalar"].as_array().filter(|a| a.len() == 2);
        let scalar = match s.map(|a| (a[0].as_f64(), a[1].as_f64())) {
            Some((Some(re), Some(im))) => Complex64::new(re, im),
            _ => return validation("trace step scalar must be [re, im]"),
        };
        Ok(TraceStep { rule, nodes, scalar })
    }
}

/// Ordered record of every rule application made by [`simplify`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RewriteTrace {
    pub steps: Vec<TraceStep>,
}

impl RewriteTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for step in &self.steps {
            s.push_str(&step.to_json().to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v: Value =
                serde_json::from_str(line).map_err(|e| Error::Validation(format!("trace line {}: {e}", i + 1)))?;
            steps.push(TraceStep::from_json(&v)?);
        }
        Ok(RewriteTrace { steps })
    }

    /// Number of applications per rule name.
    pub fn counts(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for s in &self.steps {
            *m.entry(s.rule.name()).or_insert(0) += 1;
        }
        m
    }
}

/// Applies `rule` anchored at `anchor`, if it matches there.
pub fn apply_rule_at(net: &TensorNetwork, rule: RewriteRule, anchor: NodeId) -> Option<(TensorNetwork, TraceStep)> {
    let mut out = net.clone();
    let step = apply_in_place(&mut out, rule, anchor)?;
    Some((out, step))
}

fn apply_in_place(net: &mut TensorNetwork, rule: RewriteRule, anchor: NodeId) -> Option<TraceStep> {
    let applied = rules::apply(net, rule, anchor)?;
    net.scalar.mul(applied.scalar);
    Some(TraceStep {
        rule,
        nodes: applied.nodes,
        scalar: applied.scalar,
    })
}

/// Re-applies a recorded trace to the network it was recorded on.
pub fn replay(initial: &TensorNetwork, trace: &RewriteTrace) -> Result<TensorNetwork> {
    let mut net = initial.clone();
    for (i, step) in trace.steps.iter().enumerate() {
        let got = apply_in_place(&mut net, step.rule, step.nodes[0])
            .ok_or_else(|| Error::Validation(format!("trace step {i}: {} does not match", step.rule)))?;
        if got.nodes != step.nodes {
            return validation(format!(
                "trace step {i}: matched {:?}, recorded {:?}",
                got.nodes, step.nodes
            ));
        }
        if (got.scalar - step.scalar).norm() > 1e-12 * step.scalar.norm().max(1.0) {
            return validation(format!("trace step {i}: scalar mismatch"));
        }
    }
    Ok(net)
}

const CLEANUP: [RewriteRule; 5] = [
    RewriteRule::SelfLoopTrace,
    RewriteRule::CopyFusion,
    RewriteRule::UnitElim,
    RewriteRule::CopyPoint,
    RewriteRule::LayerFuse,
];

const FOURIER: [RewriteRule; 7] = [
    RewriteRule::SelfLoopTrace,
    RewriteRule::CopyFusion,
    RewriteRule::FourierCancel,
    RewriteRule::UnitElim,
    RewriteRule::CopyPoint,
    RewriteRule::SubCopyFusion,
    RewriteRule::SubCopyForm,
];

/// Runs `rules` (in priority order) until no rule matches anywhere.
fn run_phase(net: &mut TensorNetwork, rules: &[RewriteRule], trace: &mut RewriteTrace) {
    let mut dirty: BTreeSet<NodeId> = net.nodes.keys().copied().collect();
    loop {
        while let Some(id) = dirty.pop_first() {
            if !net.contains(id) {
                continue;
            }
            for &rule in rules {
                if let Some(applied) = rules::apply(net, rule, id) {
                    net.scalar.mul(applied.scalar);
                    dirty.extend(applied.touched.iter().copied().filter(|n| net.contains(*n)));
                    dirty.extend(applied.nodes.iter().copied().filter(|n| net.contains(*n)));
                    trace.steps.push(TraceStep {
                        rule,
                        nodes: applied.nodes,
                        scalar: applied.scalar,
                    });
                    break;
                }
            }
        }
        // confirm the fixpoint with a full sweep
        let mut fired = false;
        for id in net.node_ids() {
            if !net.contains(id) {
                continue;
            }
            for &rule in rules {
                if let Some(applied) = rules::apply(net, rule, id) {
                    net.scalar.mul(applied.scalar);
                    dirty.extend(applied.touched.iter().copied().filter(|n| net.contains(*n)));
                    trace.steps.push(TraceStep {
                        rule,
                        nodes: applied.nodes,
                        scalar: applied.scalar,
                    });
                    fired = true;
                    break;
                }
            }
        }
        if !fired {
            break;
        }
    }
}

/// Conjugation flag per GroupPlus node of arity >= 3, from a 2-coloring of the
/// graph of direct GroupPlus-GroupPlus edges. `None` if that graph has an odd cycle.
fn plus_coloring(net: &TensorNetwork) -> Option<BTreeMap<NodeId, bool>> {
    let wide = |id: NodeId| matches!(net.kind(id), Some(NodeKind::GroupPlus)) && net.arity(id) >= 3;
    let mut color: BTreeMap<NodeId, bool> = BTreeMap::new();
    for start in net.node_ids().into_iter().filter(|&id| wide(id)) {
        if color.contains_key(&start) {
            continue;
        }
        color.insert(start, false);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let cu = color[&u];
            for (_, q) in net.neighbors(u) {
                if !wide(q.node) {
                    continue;
                }
                match color.get(&q.node) {
                    Some(&c) if c == cu => return None,
                    Some(_) => {}
                    None => {
                        color.insert(q.node, !cu);
                        queue.push_back(q.node);
                    }
                }
            }
        }
    }
    Some(color)
}

/// Runs the rewrite phases to a fixpoint. The result equals the input exactly,
/// scalar included.
pub fn simplify(net: &TensorNetwork) -> (TensorNetwork, RewriteTrace) {
    let mut net = net.clone();
    let mut trace = RewriteTrace::default();
    run_phase(&mut net, &CLEANUP, &mut trace);

    let mut p2 = vec![RewriteRule::PlusFusion, RewriteRule::Hopf];
    p2.extend(CLEANUP);
    p2.push(RewriteRule::Bialgebra);
    run_phase(&mut net, &p2, &mut trace);

    // exponent-2 groups are fully handled by fusion; staying out of the Fourier
    // basis keeps every tensor non-negative, so tiny amplitudes survive exactly
    if net.group().exponent() <= 2 {
        return (net, trace);
    }
    let coloring = plus_coloring(&net);
    for id in net.node_ids() {
        if !(matches!(net.kind(id), Some(NodeKind::GroupPlus)) && net.arity(id) >= 3) {
            continue;
        }
        let conjugate = coloring.as_ref().is_some_and(|c| c[&id]);
        if let Some(step) = apply_in_place(&mut net, RewriteRule::PlusToFourierCopy { conjugate }, id) {
            trace.steps.push(step);
        }
    }
    run_phase(&mut net, &FOURIER, &mut trace);
    (net, trace)
}

/// Size guards for the final dense contraction.
#[derive(Clone, Copy, Debug)]
pub struct ContractOptions {
    pub max_output_entries: usize,
    pub max_intermediate_entries: usize,
}

impl Default for ContractOptions {
    fn default() -> Self {
        Self {
            max_output_entries: 1 << 24,
            max_intermediate_entries: 1 << 25,
        }
    }
}

/// Exact value of a network: `tensor` times `scalar`, axes in sorted leg order.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub tensor: DenseTensor,
    pub scalar: ScalarAccumulator,
    pub trace: RewriteTrace,
    /// Nodes left after the rewrite phases.
    pub residual_nodes: usize,
}

impl Contraction {
    /// The tensor with the scalar folded in; overflows to infinity for huge scalars.
    pub fn value(&self) -> DenseTensor {
        self.tensor.scale(self.scalar.value())
    }
}

pub fn contract(net: &TensorNetwork, opts: &ContractOptions) -> Result<Contraction> {
    net.validate()?;
    let (simplified, trace) = simplify(net);
    let r = residual::contract_residual(&simplified, opts.max_output_entries, opts.max_intermediate_entries)?;
    Ok(Contraction {
        tensor: r.tensor,
        scalar: r.scalar,
        trace,
        residual_nodes: r.nodes,
    })
}

/// Simplifies and contracts, returning the value with legs in sorted order.
pub fn contract_exactly(net: &TensorNetwork) -> Result<DenseTensor> {
    Ok(contract(net, &ContractOptions::default())?.value())
}
