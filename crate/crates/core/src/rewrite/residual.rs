//! Exact contraction of whatever the rewrite phases leave behind.
//!
//! Copy and SubCopy nodes are hyperedges: all their ports share one summation
//! variable. Every other node is a factor over the variables of its ports.
//! Variables are summed out one at a time, cheapest first.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;

use super::rules;
use super::RewriteRule;
use crate::error::{Error, Result};
use crate::network::{Port, TensorNetwork};
use crate::tensor::{DenseTensor, NodeKind, ScalarAccumulator};

/// GroupPlus factors up to this many entries stay dense in the final contraction.
const DENSE_PLUS_ENTRIES: f64 = 16384.0;

#[derive(Clone, Debug)]
struct Factor {
    vars: Vec<usize>,
    data: Vec<Complex64>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn pow_checked(d: usize, k: usize, limit: usize, what: &str) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..k {
        n = n
            .checked_mul(d)
            .filter(|&v| v <= limit)
            .ok_or_else(|| Error::Budget(format!("{what} would exceed {limit} entries ({d}^{k})")))?;
    }
    Ok(n)
}

/// Multiplies `factors` over the union of their variables, summing out `sum`.
fn combine(factors: &[&Factor], sum: Option<usize>, d: usize, limit: usize) -> Result<Factor> {
    let mut all: BTreeSet<usize> = BTreeSet::new();
    for f in factors {
        all.extend(f.vars.iter().copied());
    }
    let out_vars: Vec<usize> = all.iter().copied().filter(|&v| Some(v) != sum).collect();
    let mut iter_vars = out_vars.clone();
    if let Some(s) = sum {
        iter_vars.push(s);
    }
    let k = iter_vars.len();
    let total = pow_checked(d, k, limit, "intermediate tensor")?;
    // stride of each iteration variable inside each factor
    let strides: Vec<Vec<usize>> = factors
        .iter()
        .map(|f| {
            let n = f.vars.len();
            iter_vars
                .iter()
                .map(|v| match f.vars.iter().position(|x| x == v) {
                    Some(p) => d.pow((n - 1 - p) as u32),
                    None => 0,
                })
                .collect()
        })
        .collect();
    let inner = if sum.is_some() { d } else { 1 };
    let mut out = vec![Complex64::new(0.0, 0.0); total / inner];
    let mut digits = vec![0usize; k];
    let mut offs = vec![0usize; factors.len()];
    for lin in 0..total {
        let mut prod = Complex64::new(1.0, 0.0);
        for (f, &o) in factors.iter().zip(&offs) {
            prod *= f.data[o];
            if prod == Complex64::new(0.0, 0.0) {
                break;
            }
        }
        out[lin / inner] += prod;
        // odometer increment, last variable fastest
        let mut p = k;
        while p > 0 {
            p -= 1;
            digits[p] += 1;
            if digits[p] < d {
                for (o, s) in offs.iter_mut().zip(&strides) {
                    *o += s[p];
                }
                break;
            }
            digits[p] = 0;
            for (o, s) in offs.iter_mut().zip(&strides) {
                *o -= (d - 1) * s[p];
            }
        }
    }
    Ok(Factor {
        vars: out_vars,
        data: out,
    })
}

/// Moves the magnitude of a factor into the accumulator when it drifts far from 1.
fn rebalance(f: &mut Factor, acc: &mut ScalarAccumulator) {
    let m = f.data.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if m == 0.0 || (1e-100..1e100).contains(&m) {
        return;
    }
    let e = m.log2().round() as i32;
    let s = 2f64.powi(-e);
    for z in &mut f.data {
        *z *= s;
    }
    acc.mul_acc(&ScalarAccumulator::from_parts(Complex64::new(1.0, 0.0), e as i64));
}

/// Result of the final contraction: `tensor * scalar` is the network value.
pub(crate) struct Residual {
    pub tensor: DenseTensor,
    pub scalar: ScalarAccumulator,
    pub nodes: usize,
}

pub(crate) fn contract_residual(input: &TensorNetwork, max_output: usize, max_intermediate: usize) -> Result<Residual> {
    let mut net = input.clone();
    let residual_nodes = net.num_nodes();
    let mut scalar = net.scalar;
    // wide GroupPlus tensors are cheaper as Copy plus Fourier legs
    let d = net.group.order();
    for id in net.node_ids() {
        let wide = (d as f64).powi(net.arity(id) as i32) > DENSE_PLUS_ENTRIES;
        if matches!(net.kind(id), Some(NodeKind::GroupPlus)) && net.arity(id) >= 4 && wide {
            let a = rules::apply(&mut net, RewriteRule::PlusToFourierCopy { conjugate: false }, id).expect("plus node");
            scalar.mul(a.scalar);
        }
    }
    let legs = net.open_legs();
    pow_checked(d, legs.len(), max_output, "output tensor")?;

    let mut index: HashMap<Port, usize> = HashMap::new();
    let mut ports = Vec::new();
    for (&id, n) in &net.nodes {
        for port in 0..n.links.len() {
            index.insert(Port { node: id, port }, ports.len());
            ports.push(Port { node: id, port });
        }
    }
    let mut uf = UnionFind::new(ports.len());
    for (a, b) in net.edges.values() {
        uf.union(index[a], index[b]);
    }
    let mut factors: Vec<Factor> = Vec::new();
    let mut masks: Vec<usize> = Vec::new();
    for (&id, n) in &net.nodes {
        let a = n.links.len();
        match n.kind {
            NodeKind::Copy | NodeKind::SubCopy => {
                for port in 1..a {
                    uf.union(index[&Port { node: id, port: 0 }], index[&Port { node: id, port }]);
                }
                if a == 0 {
                    let v = if matches!(n.kind, NodeKind::Copy) {
                        d
                    } else {
                        net.group.self_inverse_count()
                    };
                    scalar.mul(Complex64::new(v as f64, 0.0));
                } else if matches!(n.kind, NodeKind::SubCopy) {
                    masks.push(index[&Port { node: id, port: 0 }]);
                }
            }
            _ => {}
        }
    }
    for p in masks {
        let v = uf.find(p);
        let data = (0..d)
            .map(|x| Complex64::new(net.group.is_self_inverse(x) as u8 as f64, 0.0))
            .collect();
        factors.push(Factor { vars: vec![v], data });
    }
    for (&id, n) in &net.nodes {
        if matches!(n.kind, NodeKind::Copy | NodeKind::SubCopy) {
            continue;
        }
        let a = n.links.len();
        let t = n.kind.materialize(&net.group, a)?;
        let scope: Vec<usize> = (0..a).map(|port| uf.find(index[&Port { node: id, port }])).collect();
        factors.push(diagonal(&t, &scope, d));
    }
    let mut vars: BTreeSet<usize> = BTreeSet::new();
    for i in 0..ports.len() {
        vars.insert(uf.find(i));
    }
    let out_vars: Vec<usize> = legs.iter().map(|(_, p)| uf.find(index[p])).collect();
    let keep: BTreeSet<usize> = out_vars.iter().copied().collect();

    let mut live: BTreeMap<usize, Factor> = factors.into_iter().enumerate().collect();
    let mut next_id = live.len();
    let mut pending: BTreeSet<usize> = vars.difference(&keep).copied().collect();
    while !pending.is_empty() {
        let mut best: Option<(usize, usize)> = None;
        for &v in &pending {
            let mut scope: BTreeSet<usize> = BTreeSet::new();
            for f in live.values() {
                if f.vars.contains(&v) {
                    scope.extend(f.vars.iter().copied());
                }
            }
            let size = scope.len();
            if best.is_none_or(|(s, _)| size < s) {
                best = Some((size, v));
            }
        }
        let (_, v) = best.expect("pending is non-empty");
        pending.remove(&v);
        let ids: Vec<usize> = live
            .iter()
            .filter(|(_, f)| f.vars.contains(&v))
            .map(|(&i, _)| i)
            .collect();
        if ids.is_empty() {
            scalar.mul(Complex64::new(d as f64, 0.0));
            continue;
        }
        let group: Vec<Factor> = ids.iter().map(|i| live.remove(i).expect("live")).collect();
        let refs: Vec<&Factor> = group.iter().collect();
        let mut f = combine(&refs, Some(v), d, max_intermediate)?;
        rebalance(&mut f, &mut scalar);
        if f.vars.is_empty() {
            scalar.mul(f.data[0]);
        } else {
            live.insert(next_id, f);
            next_id += 1;
        }
    }
    let rest: Vec<&Factor> = live.values().collect();
    let mut f = combine(&rest, None, d, max_intermediate)?;
    rebalance(&mut f, &mut scalar);
    // one axis per leg; legs on the same variable must agree, and a variable no
    // factor mentions is an all-ones axis
    let uniq: Vec<usize> = keep.iter().copied().collect();
    let leg_slot: Vec<usize> = out_vars
        .iter()
        .map(|v| uniq.binary_search(v).expect("output var"))
        .collect();
    let f_slot: Vec<usize> = f
        .vars
        .iter()
        .map(|v| uniq.binary_search(v).expect("output var"))
        .collect();
    let dims = vec![d; out_vars.len()];
    let mut values = vec![0usize; uniq.len()];
    let tensor = DenseTensor::from_fn(dims, |idx| {
        values.iter_mut().for_each(|x| *x = usize::MAX);
        for (k, &slot) in leg_slot.iter().enumerate() {
            if values[slot] != usize::MAX && values[slot] != idx[k] {
                return Complex64::new(0.0, 0.0);
            }
            values[slot] = idx[k];
        }
        let off = f_slot.iter().fold(0, |acc, &slot| acc * d + values[slot]);
        f.data[off]
    });
    Ok(Residual {
        tensor,
        scalar,
        nodes: residual_nodes,
    })
}

/// Restricts a tensor to the diagonal of repeated scope variables.
fn diagonal(t: &DenseTensor, scope: &[usize], d: usize) -> Factor {
    let mut uniq: Vec<usize> = Vec::new();
    for v in scope {
        if !uniq.contains(v) {
            uniq.push(*v);
        }
    }
    if uniq.len() == scope.len() {
        // reorder axes so variables ascend
        let mut order: Vec<usize> = (0..scope.len()).collect();
        order.sort_by_key(|&k| scope[k]);
        let p = t.permute(&order).expect("valid permutation");
        let mut vars = scope.to_vec();
        vars.sort();
        return Factor {
            vars,
            data: p.data().to_vec(),
        };
    }
    let mut vars = uniq.clone();
    vars.sort();
    let n = vars.len();
    let size = d.pow(n as u32);
    let strides = crate::tensor::strides(t.dims());
    let mut data = Vec::with_capacity(size);
    for lin in 0..size {
        let mut rem = lin;
        let mut val = vec![0usize; n];
        for k in (0..n).rev() {
            val[k] = rem % d;
            rem /= d;
        }
        let off: usize = scope
            .iter()
            .enumerate()
            .map(|(axis, v)| val[vars.iter().position(|x| x == v).expect("var")] * strides[axis])
            .sum();
        data.push(t.data()[off]);
    }
    Factor { vars, data }
}
