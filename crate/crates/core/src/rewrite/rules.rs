//! Pattern matchers and in-place rewrites for each rule of the catalog.
//!
//! Every function either leaves the network untouched and returns `None`, or
//! applies one rewrite anchored at the given node and reports the scalar that
//! must multiply the network to keep it equal to the original.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use super::RewriteRule;
use crate::network::{Link, NodeId, Port, Splice, TensorNetwork};
use crate::tensor::{DenseTensor, NodeKind};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest dense tensor (in entries) a rule may create.
const MAX_DENSE_ENTRIES: usize = 4096;

pub(crate) struct Applied {
    pub nodes: Vec<NodeId>,
    pub scalar: Complex64,
    pub touched: Vec<NodeId>,
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn kind(net: &TensorNetwork, id: NodeId) -> &NodeKind {
    &net.nodes[&id].kind
}

fn set_kind(net: &mut TensorNetwork, id: NodeId, k: NodeKind) {
    net.nodes.get_mut(&id).expect("node exists").kind = k;
}

fn far(net: &TensorNetwork, node: NodeId, port: usize) -> Option<Port> {
    net.neighbor(Port { node, port })
}

fn order(net: &TensorNetwork) -> f64 {
    net.group.order() as f64
}

fn exponent_two(net: &TensorNetwork) -> bool {
    net.group.exponent() <= 2
}

fn is_inv(net: &TensorNetwork, id: NodeId) -> bool {
    matches!(kind(net, id), NodeKind::GroupPlus) && net.arity(id) == 2
}

fn is_fourier(k: &NodeKind) -> bool {
    matches!(k, NodeKind::Fourier | NodeKind::FourierConj)
}

fn is_ket(k: &NodeKind) -> bool {
    matches!(k, NodeKind::BasisKet(_) | NodeKind::UniformKet)
}

/// Port order that `remove_ports` leaves behind: entry `k` is the old index of new port `k`.
pub(crate) fn ports_after_removal(arity: usize, idx: &[usize]) -> Vec<usize> {
    let mut ports: Vec<usize> = (0..arity).collect();
    let mut idx = idx.to_vec();
    idx.sort_unstable_by(|a, b| b.cmp(a));
    idx.dedup();
    for i in idx {
        ports.swap_remove(i);
    }
    ports
}

/// Rewrites nodes of degenerate arity to their canonical kinds.
///
/// Copy(0), SubCopy(0) and GroupPlus(0) become scalars; Copy(1) is the uniform
/// vector and GroupPlus(1) the identity basis vector.
pub(crate) fn normalize(net: &mut TensorNetwork, id: NodeId) -> Complex64 {
    let Some(n) = net.nodes.get(&id) else {
        return ONE;
    };
    let a = n.links.len();
    match (&n.kind, a) {
        (NodeKind::Copy, 0) => {
            net.remove_node(id);
            real(order(net))
        }
        (NodeKind::SubCopy, 0) => {
            net.remove_node(id);
            real(net.group.self_inverse_count() as f64)
        }
        (NodeKind::GroupPlus, 0) => {
            net.remove_node(id);
            ONE
        }
        (NodeKind::Copy, 1) => {
            set_kind(net, id, NodeKind::UniformKet);
            ONE
        }
        (NodeKind::GroupPlus, 1) => {
            set_kind(net, id, NodeKind::BasisKet(0));
            ONE
        }
        _ => ONE,
    }
}

/// Joins the far sides of two ports. Returns the trace factor of a closed loop.
fn wire(net: &mut TensorNetwork, a: Port, b: Port) -> Complex64 {
    match net.splice(a, b) {
        Splice::Joined => ONE,
        Splice::ClosedLoop => real(order(net)),
        Splice::BothOpen => {
            let c = net.add_node(NodeKind::Copy, 2);
            net.move_link(a, Port { node: c, port: 0 });
            net.move_link(b, Port { node: c, port: 1 });
            ONE
        }
    }
}

fn far_nodes(net: &TensorNetwork, id: NodeId) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = net.neighbors(id).into_iter().map(|(_, q)| q.node).collect();
    v.sort();
    v.dedup();
    v
}

/// Larger arity survives; ties go to the lower id.
fn survivor(net: &TensorNetwork, a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    let (x, y) = (net.arity(a), net.arity(b));
    if x > y || (x == y && a < b) {
        (a, b)
    } else {
        (b, a)
    }
}

struct Merge {
    shared: usize,
    loops: usize,
    neighbors: Vec<NodeId>,
}

/// Moves every link of `drop` onto `keep` and deletes `drop`. Edges between the
/// two nodes and self-loops of `drop` are removed instead of moved.
fn merge_into(net: &mut TensorNetwork, keep: NodeId, drop: NodeId) -> Merge {
    let arity = net.arity(drop);
    let mut keep_free = Vec::new();
    let mut m = Merge {
        shared: 0,
        loops: 0,
        neighbors: Vec::new(),
    };
    for port in 0..arity {
        let p = Port { node: drop, port };
        match net.link(p) {
            Link::Free => {}
            Link::Edge(_) => {
                let q = net.neighbor(p).expect("edge");
                if q.node == keep {
                    net.remove_edge_at(p);
                    keep_free.push(q.port);
                    m.shared += 1;
                } else if q.node == drop {
                    net.remove_edge_at(p);
                    m.loops += 1;
                } else {
                    let np = net.add_port(keep);
                    net.move_link(p, np);
                    m.neighbors.push(q.node);
                }
            }
            Link::Open(_) => {
                let np = net.add_port(keep);
                net.move_link(p, np);
            }
        }
    }
    net.remove_ports(keep, keep_free);
    net.nodes.remove(&drop);
    m
}

fn first_neighbor(net: &TensorNetwork, id: NodeId, pred: impl Fn(&TensorNetwork, NodeId) -> bool) -> Option<NodeId> {
    let a = net.arity(id);
    (0..a).find_map(|port| far(net, id, port).map(|q| q.node).filter(|&n| n != id && pred(net, n)))
}

pub(crate) fn apply(net: &mut TensorNetwork, rule: RewriteRule, anchor: NodeId) -> Option<Applied> {
    if !net.contains(anchor) {
        return None;
    }
    match rule {
        RewriteRule::LayerFuse => layer_fuse(net, anchor),
        RewriteRule::CopyFusion => copy_fusion(net, anchor),
        RewriteRule::PlusFusion => plus_fusion(net, anchor),
        RewriteRule::Bialgebra => bialgebra(net, anchor),
        RewriteRule::Hopf => hopf(net, anchor),
        RewriteRule::PlusToFourierCopy { conjugate } => plus_to_fourier_copy(net, anchor, conjugate),
        RewriteRule::FourierCancel => fourier_cancel(net, anchor),
        RewriteRule::CopyPoint => copy_point(net, anchor),
        RewriteRule::UnitElim => unit_elim(net, anchor),
        RewriteRule::SelfLoopTrace => self_loop_trace(net, anchor),
        RewriteRule::SubCopyForm => sub_copy_form(net, anchor),
        RewriteRule::SubCopyFusion => sub_copy_fusion(net, anchor),
    }
}

/// Copy neighbors of every port, if all ports lead to Copy nodes other than `id`.
fn port_copies(net: &TensorNetwork, id: NodeId) -> Option<Vec<NodeId>> {
    (0..net.arity(id))
        .map(|port| {
            far(net, id, port)
                .map(|q| q.node)
                .filter(|&n| n != id && matches!(kind(net, n), NodeKind::Copy))
        })
        .collect()
}

/// Entrywise product of two tensors of equal arity, as a kind.
fn product_kind(net: &TensorNetwork, a: &NodeKind, b: &NodeKind, arity: usize) -> Option<NodeKind> {
    use NodeKind::*;
    let same = match (a, b) {
        (GroupPlus, GroupPlus) => Some(GroupPlus),
        (Copy, Copy) => Some(Copy),
        (SubCopy, SubCopy) | (SubCopy, Copy) | (Copy, SubCopy) => Some(SubCopy),
        (UniformKet, UniformKet) => Some(UniformKet),
        (BasisKet(g), BasisKet(h)) if g == h => Some(BasisKet(*g)),
        _ => None,
    };
    if same.is_some() {
        return same;
    }
    let numeric = matches!(a, Impurity { .. } | Dense(_)) || matches!(b, Impurity { .. } | Dense(_));
    if !numeric || is_fourier(a) || is_fourier(b) {
        return None;
    }
    let size = net.group.order().checked_pow(arity as u32)?;
    if size > MAX_DENSE_ENTRIES {
        return None;
    }
    let ta = a.materialize(&net.group, arity).ok()?;
    let tb = b.materialize(&net.group, arity).ok()?;
    let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
    Some(Dense(DenseTensor::new(ta.dims().to_vec(), data).ok()?))
}

/// Two nodes whose ports attach pairwise to the same Copy nodes collapse into
/// their entrywise product, attached once to each Copy.
fn layer_fuse(net: &mut TensorNetwork, a: NodeId) -> Option<Applied> {
    let ka = kind(net, a).clone();
    let r = net.arity(a);
    if r == 0 || is_fourier(&ka) {
        return None;
    }
    let copies_a = port_copies(net, a)?;
    let mut sorted_a = copies_a.clone();
    sorted_a.sort();
    let candidates: Vec<NodeId> = far_nodes(net, copies_a[0])
        .into_iter()
        .filter(|&b| b != a && net.arity(b) == r)
        .collect();
    for b in candidates {
        let kb = kind(net, b).clone();
        let Some(copies_b) = port_copies(net, b) else {
            continue;
        };
        let matched = if ka.is_symmetric() && kb.is_symmetric() {
            let mut sorted_b = copies_b.clone();
            sorted_b.sort();
            sorted_a == sorted_b
        } else {
            copies_a == copies_b
        };
        if !matched {
            continue;
        }
        let Some(prod) = product_kind(net, &ka, &kb, r) else {
            continue;
        };
        let mut removals: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for port in 0..r {
            let q = net.remove_edge_at(Port { node: b, port }).expect("edge");
            removals.entry(q.node).or_default().push(q.port);
        }
        net.nodes.remove(&b);
        for (c, idx) in &removals {
            net.remove_ports(*c, idx.clone());
        }
        set_kind(net, a, prod);
        let mut scalar = ONE;
        for c in removals.keys() {
            scalar *= normalize(net, *c);
        }
        let mut touched = vec![a];
        touched.extend(removals.keys());
        return Some(Applied {
            nodes: vec![a, b],
            scalar,
            touched,
        });
    }
    None
}

/// Two Copy nodes sharing an edge merge; every shared edge disappears.
fn copy_fusion(net: &mut TensorNetwork, a: NodeId) -> Option<Applied> {
    if !matches!(kind(net, a), NodeKind::Copy) {
        return None;
    }
    let b = first_neighbor(net, a, |n, x| matches!(kind(n, x), NodeKind::Copy))?;
    let (keep, drop) = survivor(net, a, b);
    let m = merge_into(net, keep, drop);
    let scalar = normalize(net, keep);
    let mut touched = vec![keep];
    touched.extend(m.neighbors);
    Some(Applied {
        nodes: vec![a, b],
        scalar,
        touched,
    })
}

/// Two GroupPlus nodes sharing an edge merge (exponent-2 groups only). One shared
/// edge is contracted; each further shared edge is a traced loop worth |G|.
fn plus_fusion(net: &mut TensorNetwork, a: NodeId) -> Option<Applied> {
    if !exponent_two(net) || !matches!(kind(net, a), NodeKind::GroupPlus) {
        return None;
    }
    let b = first_neighbor(net, a, |n, x| matches!(kind(n, x), NodeKind::GroupPlus))?;
    let (keep, drop) = survivor(net, a, b);
    let m = merge_into(net, keep, drop);
    let loops = (m.shared - 1 + m.loops) as i32;
    let scalar = real(order(net).powi(loops)) * normalize(net, keep);
    let mut touched = vec![keep];
    touched.extend(m.neighbors);
    Some(Applied {
        nodes: vec![a, b],
        scalar,
        touched,
    })
}

/// Two GroupPlus(r) nodes joined through r-1 Copy nodes (one edge each) become a
/// single GroupPlus(r) on those copies plus a Copy(3) joining the two leftover legs.
fn bialgebra(net: &mut TensorNetwork, p: NodeId) -> Option<Applied> {
    if !matches!(kind(net, p), NodeKind::GroupPlus) {
        return None;
    }
    let r = net.arity(p);
    if r < 2 {
        return None;
    }
    let copy_ports = |net: &TensorNetwork, x: NodeId| -> Vec<(usize, Option<(NodeId, usize)>)> {
        (0..net.arity(x))
            .map(|port| {
                let q = far(net, x, port).filter(|q| q.node != x && matches!(kind(net, q.node), NodeKind::Copy));
                (port, q.map(|q| (q.node, q.port)))
            })
            .collect()
    };
    let pp = copy_ports(net, p);
    let mut candidates = BTreeSet::new();
    for (_, c) in &pp {
        if let Some((c, _)) = c {
            for q in far_nodes(net, *c) {
                if q != p && net.arity(q) == r && matches!(kind(net, q), NodeKind::GroupPlus) {
                    candidates.insert(q);
                }
            }
        }
    }
    for q in candidates {
        let qp = copy_ports(net, q);
        let mut pool: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (port, c) in &qp {
            if let Some((c, _)) = c {
                pool.entry(*c).or_default().push(*port);
            }
        }
        for v in pool.values_mut() {
            v.reverse();
        }
        let mut pairs = Vec::new();
        for (port, c) in &pp {
            if pairs.len() == r - 1 {
                break;
            }
            if let Some((c, _)) = c {
                if let Some(qport) = pool.get_mut(c).and_then(|v| v.pop()) {
                    pairs.push((*port, qport));
                }
            }
        }
        if pairs.len() < r - 1 {
            continue;
        }
        let p_star = (0..r).find(|i| !pairs.iter().any(|x| x.0 == *i)).expect("one left");
        let q_star = (0..r).find(|j| !pairs.iter().any(|x| x.1 == *j)).expect("one left");
        let n = net.add_node(NodeKind::GroupPlus, r);
        let m = net.add_node(NodeKind::Copy, 3);
        let mut removals: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        let mut matched = vec![p, q];
        for (k, &(pi, qi)) in pairs.iter().enumerate() {
            let cp = net.remove_edge_at(Port { node: p, port: pi }).expect("edge");
            let cq = net.remove_edge_at(Port { node: q, port: qi }).expect("edge");
            net.raw_connect(Port { node: n, port: k }, cp);
            removals.entry(cq.node).or_default().push(cq.port);
            matched.push(cp.node);
        }
        net.raw_connect(Port { node: n, port: r - 1 }, Port { node: m, port: 0 });
        net.move_link(Port { node: p, port: p_star }, Port { node: m, port: 1 });
        net.move_link(Port { node: q, port: q_star }, Port { node: m, port: 2 });
        net.nodes.remove(&p);
        net.nodes.remove(&q);
        for (c, idx) in &removals {
            net.remove_ports(*c, idx.clone());
        }
        let mut scalar = ONE;
        for c in removals.keys() {
            scalar *= normalize(net, *c);
        }
        let mut touched = vec![n, m];
        touched.extend(removals.keys());
        touched.extend(far_nodes(net, m));
        return Some(Applied {
            nodes: matched,
            scalar,
            touched,
        });
    }
    None
}

/// A Copy and a GroupPlus joined by two edges lose both edges (exponent-2 groups only).
fn hopf(net: &mut TensorNetwork, anchor: NodeId) -> Option<Applied> {
    if !exponent_two(net) {
        return None;
    }
    let want_plus = match kind(net, anchor) {
        NodeKind::Copy => true,
        NodeKind::GroupPlus => false,
        _ => return None,
    };
    let mut ports: BTreeMap<NodeId, Vec<(usize, usize)>> = BTreeMap::new();
    let mut first_seen = Vec::new();
    for port in 0..net.arity(anchor) {
        if let Some(q) = far(net, anchor, port) {
            let ok = if want_plus {
                matches!(kind(net, q.node), NodeKind::GroupPlus)
            } else {
                matches!(kind(net, q.node), NodeKind::Copy)
            };
            if ok && q.node != anchor {
                let e = ports.entry(q.node).or_default();
                if e.is_empty() {
                    first_seen.push(q.node);
                }
                e.push((port, q.port));
            }
        }
    }
    let other = first_seen.into_iter().find(|n| ports[n].len() >= 2)?;
    let (i1, j1) = ports[&other][0];
    let (i2, j2) = ports[&other][1];
    net.remove_edge_at(Port { node: anchor, port: i1 });
    net.remove_edge_at(Port { node: anchor, port: i2 });
    net.remove_ports(anchor, vec![i1, i2]);
    net.remove_ports(other, vec![j1, j2]);
    let scalar = normalize(net, anchor) * normalize(net, other);
    let mut touched = vec![anchor, other];
    for id in [anchor, other] {
        if net.contains(id) {
            touched.extend(far_nodes(net, id));
        }
    }
    Some(Applied {
        nodes: vec![anchor, other],
        scalar,
        touched,
    })
}

/// GroupPlus(n) = (1/|G|) Copy(n) with a Fourier matrix on every leg.
fn plus_to_fourier_copy(net: &mut TensorNetwork, p: NodeId, conjugate: bool) -> Option<Applied> {
    if !matches!(kind(net, p), NodeKind::GroupPlus) || net.arity(p) == 0 {
        return None;
    }
    set_kind(net, p, NodeKind::Copy);
    let fk = if conjugate {
        NodeKind::FourierConj
    } else {
        NodeKind::Fourier
    };
    let mut touched = vec![p];
    for i in 0..net.arity(p) {
        let f = net.add_node(fk.clone(), 2);
        net.move_link(Port { node: p, port: i }, Port { node: f, port: 1 });
        net.raw_connect(Port { node: p, port: i }, Port { node: f, port: 0 });
        touched.push(f);
    }
    Some(Applied {
        nodes: vec![p],
        scalar: real(1.0 / order(net)),
        touched,
    })
}

/// `H H* = |G| 1`, `H H = H* H* = |G| Inv`, and `Inv H = H*`.
fn fourier_cancel(net: &mut TensorNetwork, f: NodeId) -> Option<Applied> {
    let kf = kind(net, f).clone();
    if !is_fourier(&kf) {
        return None;
    }
    for i in 0..2 {
        let Some(q) = far(net, f, i) else { continue };
        if q.node == f || !is_fourier(kind(net, q.node)) {
            continue;
        }
        let g = q.node;
        let kg = kind(net, g).clone();
        let mut near = far_nodes(net, f);
        near.extend(far_nodes(net, g));
        net.remove_edge_at(Port { node: f, port: i });
        let fo = Port { node: f, port: 1 - i };
        let go = Port {
            node: g,
            port: 1 - q.port,
        };
        let mut touched = Vec::new();
        let scalar = if kf != kg {
            let extra = wire(net, fo, go);
            real(order(net)) * extra
        } else {
            let inv = net.add_node(NodeKind::GroupPlus, 2);
            net.move_link(fo, Port { node: inv, port: 0 });
            net.move_link(go, Port { node: inv, port: 1 });
            touched.push(inv);
            real(order(net))
        };
        net.remove_node(f);
        net.remove_node(g);
        touched.extend(near.into_iter().filter(|&x| x != f && x != g));
        return Some(Applied {
            nodes: vec![f, g],
            scalar,
            touched,
        });
    }
    for i in 0..2 {
        let Some(q) = far(net, f, i) else { continue };
        if q.node == f || !is_inv(net, q.node) {
            continue;
        }
        let g = q.node;
        net.remove_edge_at(Port { node: f, port: i });
        net.move_link(
            Port {
                node: g,
                port: 1 - q.port,
            },
            Port { node: f, port: i },
        );
        net.nodes.remove(&g);
        set_kind(net, f, kf.conj());
        let mut touched = vec![f];
        touched.extend(far_nodes(net, f));
        return Some(Applied {
            nodes: vec![f, g],
            scalar: ONE,
            touched,
        });
    }
    None
}

/// Replaces node `n` by a ket of kind `k` on each of its remaining legs.
fn spread_kets(net: &mut TensorNetwork, n: NodeId, k: NodeKind) -> Vec<NodeId> {
    let mut out = Vec::new();
    for port in 0..net.arity(n) {
        let p = Port { node: n, port };
        if net.link(p) == Link::Free {
            continue;
        }
        let t = net.add_node(k.clone(), 1);
        net.move_link(p, Port { node: t, port: 0 });
        out.push(t);
    }
    net.nodes.remove(&n);
    let mut touched = out.clone();
    for &t in &out {
        if net.contains(t) {
            touched.extend(far_nodes(net, t));
        }
    }
    touched
}

/// Replaces the arity-2 node `n` by a ket on its far leg `port`.
fn pass_through(net: &mut TensorNetwork, n: NodeId, port: usize, k: NodeKind) -> Vec<NodeId> {
    let t = net.add_node(k, 1);
    net.move_link(Port { node: n, port }, Port { node: t, port: 0 });
    net.remove_node(n);
    let mut touched = vec![t];
    touched.extend(far_nodes(net, t));
    touched
}

/// Basis vectors copied through Copy nodes, uniform vectors through GroupPlus
/// nodes, ket-ket contractions and kets passing through Fourier or inversion nodes.
fn copy_point(net: &mut TensorNetwork, k: NodeId) -> Option<Applied> {
    let kk = kind(net, k).clone();
    if !is_ket(&kk) {
        return None;
    }
    let q = far(net, k, 0)?;
    let n = q.node;
    let kn = kind(net, n).clone();
    let d = order(net);
    let (scalar, touched) = match (&kk, &kn) {
        (NodeKind::BasisKet(g), NodeKind::Copy | NodeKind::SubCopy) => {
            let s = if matches!(kn, NodeKind::SubCopy) && !net.group.is_self_inverse(*g) {
                0.0
            } else {
                1.0
            };
            net.remove_node(k);
            (real(s), spread_kets(net, n, kk.clone()))
        }
        (NodeKind::UniformKet, NodeKind::GroupPlus) => {
            net.remove_node(k);
            (ONE, spread_kets(net, n, NodeKind::UniformKet))
        }
        (_, NodeKind::BasisKet(_) | NodeKind::UniformKet) => {
            let s = match (&kk, &kn) {
                (NodeKind::BasisKet(g), NodeKind::BasisKet(h)) => (g == h) as u8 as f64,
                (NodeKind::UniformKet, NodeKind::UniformKet) => d,
                _ => 1.0,
            };
            net.remove_node(k);
            net.remove_node(n);
            (real(s), Vec::new())
        }
        (NodeKind::UniformKet, NodeKind::Fourier | NodeKind::FourierConj) => {
            net.remove_node(k);
            (real(d), pass_through(net, n, 1 - q.port, NodeKind::BasisKet(0)))
        }
        (NodeKind::BasisKet(0), NodeKind::Fourier | NodeKind::FourierConj) => {
            net.remove_node(k);
            (ONE, pass_through(net, n, 1 - q.port, NodeKind::UniformKet))
        }
        (NodeKind::BasisKet(g), NodeKind::GroupPlus) if net.arity(n) == 2 => {
            let inv = net.group.neg(*g);
            net.remove_node(k);
            (ONE, pass_through(net, n, 1 - q.port, NodeKind::BasisKet(inv)))
        }
        _ => return None,
    };
    Some(Applied {
        nodes: vec![k, n],
        scalar,
        touched,
    })
}

/// The identity basis vector is a unit for GroupPlus; the uniform vector is a
/// unit for Copy and SubCopy.
fn unit_elim(net: &mut TensorNetwork, k: NodeId) -> Option<Applied> {
    let kk = kind(net, k).clone();
    let q = match kk {
        NodeKind::BasisKet(0) | NodeKind::UniformKet => far(net, k, 0)?,
        _ => return None,
    };
    let n = q.node;
    let ok = matches!(
        (&kk, kind(net, n)),
        (NodeKind::BasisKet(0), NodeKind::GroupPlus) | (NodeKind::UniformKet, NodeKind::Copy | NodeKind::SubCopy)
    );
    if !ok {
        return None;
    }
    net.remove_node(k);
    net.remove_ports(n, vec![q.port]);
    let scalar = normalize(net, n);
    let mut touched = vec![n];
    if net.contains(n) {
        touched.extend(far_nodes(net, n));
    }
    Some(Applied {
        nodes: vec![k, n],
        scalar,
        touched,
    })
}

/// Traces self-loops, turns identity-like arity-2 nodes into plain wires and
/// normalizes nodes of arity 0 and 1.
fn self_loop_trace(net: &mut TensorNetwork, n: NodeId) -> Option<Applied> {
    let kn = kind(net, n).clone();
    let a = net.arity(n);
    let loop_ports = (0..a).find_map(|i| far(net, n, i).filter(|q| q.node == n).map(|q| (i, q.port)));
    if let Some((i, j)) = loop_ports {
        let scalar = match kn {
            NodeKind::Copy | NodeKind::SubCopy => {
                net.remove_edge_at(Port { node: n, port: i });
                net.remove_ports(n, vec![i, j]);
                normalize(net, n)
            }
            NodeKind::GroupPlus if exponent_two(net) => {
                net.remove_edge_at(Port { node: n, port: i });
                net.remove_ports(n, vec![i, j]);
                real(order(net)) * normalize(net, n)
            }
            _ => {
                let size = net.group.order().checked_pow(a.saturating_sub(2) as u32)?;
                if size > MAX_DENSE_ENTRIES {
                    return None;
                }
                let t = kn.materialize(&net.group, a).ok()?.trace_pairs(&[(i, j)]).ok()?;
                net.remove_edge_at(Port { node: n, port: i });
                if a == 2 {
                    net.remove_node(n);
                    t.scalar_value().expect("rank 0")
                } else {
                    // free indices of `t` are in ascending old-port order
                    let kept: Vec<usize> = (0..a).filter(|&x| x != i && x != j).collect();
                    let order_after = ports_after_removal(a, &[i, j]);
                    let perm: Vec<usize> = order_after
                        .iter()
                        .map(|old| kept.iter().position(|k| k == old).expect("kept"))
                        .collect();
                    net.remove_ports(n, vec![i, j]);
                    set_kind(net, n, NodeKind::Dense(t.permute(&perm).ok()?));
                    ONE
                }
            }
        };
        let mut touched = vec![n];
        if net.contains(n) {
            touched.extend(far_nodes(net, n));
        }
        return Some(Applied {
            nodes: vec![n],
            scalar,
            touched,
        });
    }
    let wire_like = match (&kn, a) {
        (NodeKind::Copy, 2) => true,
        (NodeKind::GroupPlus, 2) => exponent_two(net),
        _ => false,
    };
    if wire_like {
        let ends = far_nodes(net, n);
        let (p0, p1) = (Port { node: n, port: 0 }, Port { node: n, port: 1 });
        return match net.splice(p0, p1) {
            Splice::BothOpen => {
                if matches!(kn, NodeKind::GroupPlus) {
                    set_kind(net, n, NodeKind::Copy);
                    Some(Applied {
                        nodes: vec![n],
                        scalar: ONE,
                        touched: vec![n],
                    })
                } else {
                    None
                }
            }
            Splice::Joined | Splice::ClosedLoop => {
                net.nodes.remove(&n);
                Some(Applied {
                    nodes: vec![n],
                    scalar: ONE,
                    touched: ends,
                })
            }
        };
    }
    let degenerate = matches!(
        (&kn, a),
        (NodeKind::Copy | NodeKind::SubCopy | NodeKind::GroupPlus, 0) | (NodeKind::Copy | NodeKind::GroupPlus, 1)
    );
    if degenerate {
        let ends = far_nodes(net, n);
        let scalar = normalize(net, n);
        let mut touched = ends;
        touched.push(n);
        return Some(Applied {
            nodes: vec![n],
            scalar,
            touched,
        });
    }
    None
}

/// Inversion loops on Copy nodes and triangles of Copy nodes joined pairwise by
/// inversion wires both restrict to self-inverse values: they become SubCopy tensors.
fn sub_copy_form(net: &mut TensorNetwork, c: NodeId) -> Option<Applied> {
    if !matches!(kind(net, c), NodeKind::Copy) {
        return None;
    }
    let a = net.arity(c);
    // (port on c, inversion node, port of the inversion node's far side)
    let mut invs: Vec<(usize, NodeId, usize)> = Vec::new();
    for i in 0..a {
        if let Some(q) = far(net, c, i) {
            if q.node != c && is_inv(net, q.node) {
                invs.push((i, q.node, 1 - q.port));
            }
        }
    }
    // inversion self-loop: both legs of one inversion node on c
    for x in 0..invs.len() {
        for y in x + 1..invs.len() {
            if invs[x].1 == invs[y].1 {
                let (i, inv, _) = invs[x];
                let j = invs[y].0;
                net.remove_node(inv);
                net.remove_ports(c, vec![i, j]);
                set_kind(net, c, NodeKind::SubCopy);
                let scalar = normalize(net, c);
                let mut touched = vec![c];
                if net.contains(c) {
                    touched.extend(far_nodes(net, c));
                }
                return Some(Applied {
                    nodes: vec![c, inv],
                    scalar,
                    touched,
                });
            }
        }
    }
    let copy_beyond = |net: &TensorNetwork, inv: NodeId, port: usize| -> Option<NodeId> {
        far(net, inv, port)
            .map(|q| q.node)
            .filter(|&n| n != c && n != inv && matches!(kind(net, n), NodeKind::Copy))
    };
    for x in 0..invs.len() {
        let Some(c1) = copy_beyond(net, invs[x].1, invs[x].2) else {
            continue;
        };
        for y in x + 1..invs.len() {
            let Some(c2) = copy_beyond(net, invs[y].1, invs[y].2) else {
                continue;
            };
            if c2 == c1 {
                continue;
            }
            let i3 = (0..net.arity(c1)).find_map(|k| {
                let q = far(net, c1, k)?;
                if q.node == invs[x].1 || !is_inv(net, q.node) {
                    return None;
                }
                let beyond = far(net, q.node, 1 - q.port)?;
                (beyond.node == c2).then_some(q.node)
            });
            let Some(i3) = i3 else { continue };
            let (i1, i2) = (invs[x].1, invs[y].1);
            let mut freed: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
            for inv in [i1, i2, i3] {
                for port in 0..2 {
                    if let Some(q) = far(net, inv, port) {
                        freed.entry(q.node).or_default().push(q.port);
                    }
                }
                net.remove_node(inv);
            }
            for (n, idx) in freed {
                net.remove_ports(n, idx);
            }
            let s = net.add_node(NodeKind::SubCopy, 3);
            for (k, n) in [c, c1, c2].into_iter().enumerate() {
                let p = net.add_port(n);
                net.raw_connect(Port { node: s, port: k }, p);
            }
            return Some(Applied {
                nodes: vec![c, c1, c2, i1, i2, i3],
                scalar: ONE,
                touched: vec![s, c, c1, c2],
            });
        }
    }
    None
}

/// SubCopy absorbs adjacent Copy and SubCopy nodes and inversion wires.
fn sub_copy_fusion(net: &mut TensorNetwork, s: NodeId) -> Option<Applied> {
    if !matches!(kind(net, s), NodeKind::SubCopy) {
        return None;
    }
    if let Some(b) = first_neighbor(net, s, |n, x| matches!(kind(n, x), NodeKind::Copy | NodeKind::SubCopy)) {
        let (keep, drop) = survivor(net, s, b);
        let m = merge_into(net, keep, drop);
        set_kind(net, keep, NodeKind::SubCopy);
        let scalar = normalize(net, keep);
        let mut touched = vec![keep];
        touched.extend(m.neighbors);
        return Some(Applied {
            nodes: vec![s, b],
            scalar,
            touched,
        });
    }
    let a = net.arity(s);
    for i in 0..a {
        let Some(q) = far(net, s, i) else { continue };
        if q.node == s || !is_inv(net, q.node) {
            continue;
        }
        let inv = q.node;
        net.remove_edge_at(Port { node: s, port: i });
        let other = Port {
            node: inv,
            port: 1 - q.port,
        };
        let back = far(net, inv, other.port);
        let scalar = if back.map(|b| b.node) == Some(s) {
            let j = back.expect("edge").port;
            net.remove_edge_at(other);
            net.nodes.remove(&inv);
            net.remove_ports(s, vec![i, j]);
            normalize(net, s)
        } else {
            net.move_link(other, Port { node: s, port: i });
            net.nodes.remove(&inv);
            ONE
        };
        let mut touched = vec![s];
        if net.contains(s) {
            touched.extend(far_nodes(net, s));
        }
        return Some(Applied {
            nodes: vec![s, inv],
            scalar,
            touched,
        });
    }
    None
}
