//! Brute-force ground truth: dense pairwise contraction with no rewriting, and
//! direct amplitude evaluation of lattice states.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::lattice::SiteId;
use crate::network::{LegLabel, Link, NodeId, Port, TensorNetwork};
use crate::rewrite::{contract, ContractOptions};
use crate::tensor::{contract_pair, DenseTensor, NodeKind};

/// Default cap on scalar multiply-adds for one brute-force contraction.
pub const DEFAULT_BUDGET: f64 = 1e8;

/// One basis configuration: an element index for every site.
pub type EdgeConfig = BTreeMap<SiteId, usize>;

/// Order in which the oracle combines tensors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ContractionOrder {
    /// Greedy pairwise order; the cheapest of a few greedy scores is used.
    #[default]
    Greedy,
    /// Absorb nodes one by one in id order.
    NodeIdSweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Leg {
    Edge(u32),
    Open(LegLabel),
}

struct Item {
    legs: Vec<Leg>,
    tensor: Option<DenseTensor>,
}

fn legs_of(net: &TensorNetwork, id: NodeId) -> Vec<Leg> {
    (0..net.arity(id))
        .map(|port| match net.link(Port { node: id, port }) {
            Link::Edge(e) => Leg::Edge(e.0),
            Link::Open(l) => Leg::Open(l),
            Link::Free => unreachable!("validated network has no free ports"),
        })
        .collect()
}

/// Legs left after joining two leg lists (a's free legs, then b's).
fn joined(a: &[Leg], b: &[Leg]) -> (Vec<Leg>, Vec<(usize, usize)>) {
    let mut pairs = Vec::new();
    for (i, l) in a.iter().enumerate() {
        if let Leg::Edge(_) = l {
            if let Some(j) = b.iter().position(|m| m == l) {
                pairs.push((i, j));
            }
        }
    }
    let mut out: Vec<Leg> = a
        .iter()
        .enumerate()
        .filter(|(i, _)| !pairs.iter().any(|p| p.0 == *i))
        .map(|(_, l)| *l)
        .collect();
    out.extend(
        b.iter()
            .enumerate()
            .filter(|(j, _)| !pairs.iter().any(|p| p.1 == *j))
            .map(|(_, l)| *l),
    );
    (out, pairs)
}

/// Pairs of positions holding the same edge within one leg list.
fn self_pairs(legs: &[Leg]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..legs.len() {
        for j in i + 1..legs.len() {
            if legs[i] == legs[j] {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn pow(d: usize, k: usize) -> f64 {
    (d as f64).powi(k as i32)
}

#[derive(Clone, Copy)]
enum Heuristic {
    ResultSize,
    Growth,
    StepCost,
    /// Samples pairs with weight `exp(-log(step cost) / temperature)`.
    Sampled {
        temperature: f64,
    },
}

/// Randomized plans tried on top of the deterministic greedy ones.
const SAMPLED_PLANS: usize = 256;

/// Largest intermediate tensor the oracle will allocate.
pub const MAX_ORACLE_ENTRIES: f64 = (1u64 << 26) as f64;

/// Pair steps, predicted multiply-adds, largest intermediate.
type Plan = (Vec<(usize, usize)>, f64, f64);

/// The sequence of pair contractions, as indices into the item list, with its cost.
fn plan(items: &[Vec<Leg>], d: usize, order: ContractionOrder) -> Plan {
    match order {
        ContractionOrder::NodeIdSweep => plan_with(items, d, None, &mut ChaCha8Rng::seed_from_u64(0)),
        ContractionOrder::Greedy => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            let mut heuristics = vec![Heuristic::ResultSize, Heuristic::Growth, Heuristic::StepCost];
            heuristics.extend((0..SAMPLED_PLANS).map(|k| Heuristic::Sampled {
                temperature: 0.1 + (k % 8) as f64 * 0.15,
            }));
            let mut best: Option<Plan> = None;
            for h in heuristics {
                let p = plan_with(items, d, Some(h), &mut rng);
                if best.as_ref().is_none_or(|b| p.1 < b.1) {
                    best = Some(p);
                }
            }
            best.expect("at least one plan")
        }
    }
}

fn plan_with(items: &[Vec<Leg>], d: usize, heuristic: Option<Heuristic>, rng: &mut ChaCha8Rng) -> Plan {
    let mut live: BTreeMap<usize, Vec<Leg>> = items.iter().cloned().enumerate().collect();
    let mut next = items.len();
    let mut steps = Vec::new();
    let mut cost: f64 = items.iter().map(|l| pow(d, l.len())).sum();
    let mut peak: f64 = items.iter().map(|l| pow(d, l.len())).fold(0.0, f64::max);
    while live.len() > 1 {
        let (a, b) = match heuristic {
            None => {
                let mut it = live.keys();
                (*it.next().expect("two"), *it.next().expect("two"))
            }
            Some(h) => {
                // candidate pairs share an edge; a disconnected rest falls back to all pairs
                let mut owner: HashMap<Leg, usize> = HashMap::new();
                let mut cands: BTreeSet<(usize, usize)> = BTreeSet::new();
                for (&i, legs) in &live {
                    for l in legs {
                        if let Leg::Edge(_) = l {
                            if let Some(&j) = owner.get(l) {
                                cands.insert((j.min(i), j.max(i)));
                            } else {
                                owner.insert(*l, i);
                            }
                        }
                    }
                }
                if cands.is_empty() {
                    let keys: Vec<usize> = live.keys().copied().collect();
                    for (x, &i) in keys.iter().enumerate() {
                        for &j in &keys[x + 1..] {
                            cands.insert((i, j));
                        }
                    }
                }
                let scored: Vec<(f64, usize, usize)> = cands
                    .into_iter()
                    .map(|(i, j)| {
                        let (out, pairs) = joined(&live[&i], &live[&j]);
                        let score = match h {
                            Heuristic::ResultSize => pow(d, out.len()),
                            Heuristic::Growth => pow(d, out.len()) - pow(d, live[&i].len()) - pow(d, live[&j].len()),
                            Heuristic::StepCost | Heuristic::Sampled { .. } => pow(d, out.len() + pairs.len()),
                        };
                        (score, i, j)
                    })
                    .collect();
                match h {
                    Heuristic::Sampled { temperature } => {
                        let lmin = scored.iter().map(|s| s.0.ln()).fold(f64::INFINITY, f64::min);
                        let w: Vec<f64> = scored
                            .iter()
                            .map(|s| (-(s.0.ln() - lmin) / temperature).exp())
                            .collect();
                        let k = WeightedIndex::new(&w).expect("positive weights").sample(rng);
                        (scored[k].1, scored[k].2)
                    }
                    _ => {
                        let best = scored
                            .iter()
                            .min_by(|x, y| x.partial_cmp(y).expect("finite scores"))
                            .expect("candidates");
                        (best.1, best.2)
                    }
                }
            }
        };
        let la = live.remove(&a).expect("live");
        let lb = live.remove(&b).expect("live");
        let (out, pairs) = joined(&la, &lb);
        cost += pow(d, out.len() + pairs.len());
        peak = peak.max(pow(d, out.len()));
        steps.push((a, b));
        live.insert(next, out);
        next += 1;
    }
    (steps, cost, peak)
}

/// Contracts a network by dense pairwise products, with no rewrite rules.
///
/// Axes of the result follow the sorted open-leg order, as in [`crate::rewrite::contract_exactly`].
pub fn brute_force_contract(net: &TensorNetwork) -> Result<DenseTensor> {
    brute_force_contract_with(net, DEFAULT_BUDGET, ContractionOrder::Greedy)
}

pub fn brute_force_contract_with(net: &TensorNetwork, budget: f64, order: ContractionOrder) -> Result<DenseTensor> {
    net.validate()?;
    let d = net.group().order();
    let ids = net.node_ids();
    let mut items: Vec<Item> = Vec::with_capacity(ids.len());
    let mut leg_lists = Vec::with_capacity(ids.len());
    let mut cost = 0.0;
    for &id in &ids {
        let mut legs = legs_of(net, id);
        let sp = self_pairs(&legs);
        if !sp.is_empty() {
            cost += pow(d, legs.len());
            legs = legs
                .into_iter()
                .enumerate()
                .filter(|(i, _)| !sp.iter().any(|p| p.0 == *i || p.1 == *i))
                .map(|(_, l)| l)
                .collect();
        }
        leg_lists.push(legs.clone());
        items.push(Item { legs, tensor: None });
    }
    let (steps, plan_cost, peak) = plan(&leg_lists, d, order);
    cost += plan_cost;
    if peak > MAX_ORACLE_ENTRIES {
        return Err(Error::Budget(format!(
            "brute-force contraction needs an intermediate of {peak:.3e} entries, limit is {MAX_ORACLE_ENTRIES:.3e}"
        )));
    }
    if cost > budget {
        return Err(Error::Budget(format!(
            "brute-force contraction needs about {cost:.3e} operations, budget is {budget:.3e}"
        )));
    }
    for (k, &id) in ids.iter().enumerate() {
        let kind = net.kind(id).expect("node");
        let raw_legs = legs_of(net, id);
        let mut t = kind.materialize(net.group(), raw_legs.len())?;
        let sp = self_pairs(&raw_legs);
        if !sp.is_empty() {
            t = t.trace_pairs(&sp)?;
        }
        items[k].tensor = Some(t);
    }
    for (a, b) in steps {
        let ta = items[a].tensor.take().expect("live");
        let tb = items[b].tensor.take().expect("live");
        let (out, pairs) = joined(&items[a].legs, &items[b].legs);
        let t = contract_pair(&ta, &tb, &pairs)?;
        items.push(Item {
            legs: out,
            tensor: Some(t),
        });
    }
    let last = items.iter_mut().rev().find(|i| i.tensor.is_some());
    let (legs, t) = match last {
        Some(item) => (item.legs.clone(), item.tensor.take().expect("some")),
        None => (Vec::new(), DenseTensor::scalar(Complex64::new(1.0, 0.0))),
    };
    // reorder axes into sorted open-leg order
    let sorted: Vec<LegLabel> = net.open_legs().into_iter().map(|(l, _)| l).collect();
    let perm: Vec<usize> = sorted
        .iter()
        .map(|l| {
            legs.iter()
                .position(|x| *x == Leg::Open(*l))
                .expect("open leg survives")
        })
        .collect();
    let t = t.permute(&perm)?;
    Ok(t.scale(net.scalar().value()))
}

/// Amplitude of one basis configuration of a lattice state.
///
/// Labels flow from the open legs through Copy nodes; every other node is then
/// evaluated at the labels of its ports.
pub fn amplitude(net: &TensorNetwork, config: &EdgeConfig) -> Result<Complex64> {
    let d = net.group().order();
    let legs = net.open_legs();
    if legs.iter().any(|(l, _)| l.layer != crate::network::Layer::Ket) {
        return validation("amplitude needs a ket-only network");
    }
    let sites = net.sites();
    if config.len() != sites.len() || config.keys().any(|s| !sites.contains(s)) {
        return validation(format!(
            "configuration covers {} sites, network has {}",
            config.len(),
            sites.len()
        ));
    }
    if let Some((s, g)) = config.iter().find(|(_, &g)| g >= d) {
        return validation(format!("site {s}: element {g} out of range for {}", net.group()));
    }
    let mut label: HashMap<Port, usize> = HashMap::new();
    let mut stack: Vec<(Port, usize)> = legs.iter().map(|(l, p)| (*p, config[&l.site])).collect();
    while let Some((p, g)) = stack.pop() {
        match label.get(&p) {
            Some(&h) if h != g => return Ok(Complex64::new(0.0, 0.0)),
            Some(_) => continue,
            None => {}
        }
        label.insert(p, g);
        if let Some(q) = net.neighbor(p) {
            stack.push((q, g));
        }
        if matches!(net.kind(p.node), Some(NodeKind::Copy)) {
            for port in 0..net.arity(p.node) {
                stack.push((Port { node: p.node, port }, g));
            }
        }
    }
    let mut amp = net.scalar().value();
    for id in net.node_ids() {
        let kind = net.kind(id).expect("node");
        if matches!(kind, NodeKind::Copy) {
            continue;
        }
        let idx = (0..net.arity(id))
            .map(|port| label.get(&Port { node: id, port }).copied())
            .collect::<Option<Vec<usize>>>()
            .ok_or_else(|| Error::Validation(format!("node {} is not fixed by the configuration", id.0)))?;
        amp *= kind.entry(net.group(), &idx);
    }
    Ok(amp)
}

/// Outcome of checking the rewrite pipeline against the oracle.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub max_abs_deviation: f64,
    pub oracle_max_abs: f64,
    pub entries: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares exact scalars-included outputs of the pipeline and the oracle.
pub fn compare_to_pipeline(net: &TensorNetwork, tol: f64) -> Result<ComparisonReport> {
    compare_to_pipeline_with(net, tol, DEFAULT_BUDGET)
}

pub fn compare_to_pipeline_with(net: &TensorNetwork, tol: f64, budget: f64) -> Result<ComparisonReport> {
    let oracle = brute_force_contract_with(net, budget, ContractionOrder::Greedy)?;
    let pipeline = contract(net, &ContractOptions::default())?.value();
    let dev = oracle.max_abs_diff(&pipeline)?;
    Ok(ComparisonReport {
        max_abs_deviation: dev,
        oracle_max_abs: oracle.max_abs(),
        entries: oracle.len(),
        tolerance: tol,
        pass: dev <= tol,
    })
}
