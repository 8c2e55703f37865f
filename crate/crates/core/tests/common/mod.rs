//! Random small networks built around the left-hand side of one rewrite rule.

#![allow(dead_code)]

use gaugetn::network::Port;
use gaugetn::oracle::brute_force_contract;
use gaugetn::rewrite::{apply_rule_at, RewriteRule};
use gaugetn::{DenseTensor, GroupSpec, LegLabel, NodeId, NodeKind, SiteId, TensorNetwork};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

/// Open legs allowed per case; with |G| <= 4 the oracle output stays tiny.
const MAX_OPEN: usize = 4;
/// Bound on edges plus open legs per case.
pub const MAX_LEGS: usize = 12;

struct Builder {
    net: TensorNetwork,
    free: Vec<Port>,
    open: u32,
}

impl Builder {
    fn new(group: GroupSpec) -> Self {
        Builder {
            net: TensorNetwork::new(group),
            free: Vec::new(),
            open: 0,
        }
    }

    fn add(&mut self, kind: NodeKind, arity: usize) -> NodeId {
        let id = self.net.add_node(kind, arity);
        self.free.extend((0..arity).map(|port| Port { node: id, port }));
        id
    }

    fn join(&mut self, a: NodeId, i: usize, b: NodeId, j: usize) {
        let p = Port { node: a, port: i };
        let q = Port { node: b, port: j };
        self.free.retain(|x| *x != p && *x != q);
        self.net.connect(p, q).expect("free ports");
    }

    fn open(&mut self, p: Port) {
        let label = LegLabel::ket(SiteId::new(self.open, 0, 0));
        self.open += 1;
        self.net.attach_open(p, label).expect("free port");
    }

    /// Closes every remaining port with open legs, random kets or pairings.
    fn finish(mut self, rng: &mut impl Rng) -> TensorNetwork {
        let d = self.net.group().order();
        self.free.shuffle(rng);
        while let Some(p) = self.free.pop() {
            let roll: f64 = rng.gen();
            if (self.open as usize) < MAX_OPEN && roll < 0.55 {
                self.open(p);
            } else if roll < 0.8 || self.free.is_empty() {
                let ket = random_ket(rng, d);
                let k = self.net.add_node(ket, 1);
                self.net.connect(p, Port { node: k, port: 0 }).unwrap();
            } else {
                let q = self.free.pop().unwrap();
                self.net.connect(p, q).unwrap();
            }
        }
        self.net
    }
}

fn random_ket(rng: &mut impl Rng, d: usize) -> NodeKind {
    match rng.gen_range(0..3) {
        0 => NodeKind::UniformKet,
        1 => NodeKind::BasisKet(rng.gen_range(0..d)),
        _ => NodeKind::Dense(random_dense(rng, d, 1)),
    }
}

fn random_dense(rng: &mut impl Rng, d: usize, arity: usize) -> DenseTensor {
    DenseTensor::from_fn(vec![d; arity], |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn any_group(rng: &mut impl Rng) -> GroupSpec {
    ["Z2", "Z3", "Z4", "Z2xZ2"].choose(rng).unwrap().parse().unwrap()
}

fn exponent_two_group(rng: &mut impl Rng) -> GroupSpec {
    ["Z2", "Z2xZ2"].choose(rng).unwrap().parse().unwrap()
}

/// A kind of the given arity that layer fusion can multiply with `other`.
fn fusable_kind(rng: &mut impl Rng, group: &GroupSpec, arity: usize) -> NodeKind {
    let d = group.order();
    let mut options = vec![NodeKind::GroupPlus, NodeKind::Copy, NodeKind::SubCopy];
    options.push(NodeKind::Dense(random_dense(rng, d, arity)));
    if arity == 3 && d == 2 {
        options.push(NodeKind::Impurity {
            theta: rng.gen_range(0.0..std::f64::consts::FRAC_PI_2),
        });
    }
    if arity == 1 {
        options.push(NodeKind::UniformKet);
    }
    options.choose(rng).unwrap().clone()
}

/// Builds a random network containing a match for `rule` and returns it with the anchor.
pub fn rule_case(rng: &mut impl Rng, rule: RewriteRule) -> (TensorNetwork, NodeId) {
    use NodeKind::*;
    match rule {
        RewriteRule::LayerFuse => {
            let group = any_group(rng);
            let mut b = Builder::new(group.clone());
            let k = rng.gen_range(1..=3);
            let ka = fusable_kind(rng, &group, k);
            let mut kb = if rng.gen_bool(0.5) {
                ka.clone()
            } else {
                fusable_kind(rng, &group, k)
            };
            let numeric = |k: &NodeKind| matches!(k, Dense(_) | Impurity { .. });
            let compatible = matches!((&ka, &kb), (Copy | SubCopy, Copy | SubCopy));
            if !numeric(&ka) && !numeric(&kb) && !compatible {
                kb = ka.clone();
            }
            let a = b.add(ka, k);
            let c = b.add(kb, k);
            for i in 0..k {
                let arity = 2 + rng.gen_range(0..2);
                let cp = b.add(Copy, arity);
                b.join(a, i, cp, 0);
                b.join(c, i, cp, 1);
            }
            (b.finish(rng), a)
        }
        RewriteRule::CopyFusion | RewriteRule::PlusFusion => {
            let (group, kind) = if rule == RewriteRule::CopyFusion {
                (any_group(rng), Copy)
            } else {
                (exponent_two_group(rng), GroupPlus)
            };
            let mut b = Builder::new(group);
            let shared = rng.gen_range(1..=2);
            let x = b.add(kind.clone(), shared + rng.gen_range(0..3));
            let y = b.add(kind, shared + rng.gen_range(0..3));
            for i in 0..shared {
                b.join(x, i, y, i);
            }
            (b.finish(rng), x)
        }
        RewriteRule::Bialgebra => {
            let mut b = Builder::new(any_group(rng));
            let r = rng.gen_range(2..=4);
            let p = b.add(GroupPlus, r);
            let q = b.add(GroupPlus, r);
            for i in 0..r - 1 {
                let cp = b.add(Copy, 2 + rng.gen_range(0..2));
                b.join(p, i, cp, 0);
                b.join(q, i, cp, 1);
            }
            (b.finish(rng), p)
        }
        RewriteRule::Hopf => {
            let mut b = Builder::new(exponent_two_group(rng));
            let c = b.add(Copy, 2 + rng.gen_range(0..3));
            let p = b.add(GroupPlus, 2 + rng.gen_range(0..3));
            b.join(c, 0, p, 0);
            b.join(c, 1, p, 1);
            let anchor = if rng.gen_bool(0.5) { c } else { p };
            (b.finish(rng), anchor)
        }
        RewriteRule::PlusToFourierCopy { .. } => {
            let mut b = Builder::new(any_group(rng));
            let p = b.add(GroupPlus, rng.gen_range(1..=4));
            (b.finish(rng), p)
        }
        RewriteRule::FourierCancel => {
            let mut b = Builder::new(any_group(rng));
            let pick = |rng: &mut dyn rand::RngCore| if rng.gen_bool(0.5) { Fourier } else { FourierConj };
            let f = b.add(pick(rng), 2);
            let other = match rng.gen_range(0..3) {
                0 => GroupPlus,
                _ => pick(rng),
            };
            let g = b.add(other, 2);
            b.join(f, rng.gen_range(0..2), g, rng.gen_range(0..2));
            if rng.gen_bool(0.2) {
                let (pf, pg) = (b.free[0], b.free[1]);
                b.join(pf.node, pf.port, pg.node, pg.port);
            }
            (b.finish(rng), f)
        }
        RewriteRule::CopyPoint => {
            let group = any_group(rng);
            let d = group.order();
            let mut b = Builder::new(group);
            let (ket, target, arity) = match rng.gen_range(0..5) {
                0 => (BasisKet(rng.gen_range(0..d)), Copy, rng.gen_range(1..=4)),
                1 => (UniformKet, GroupPlus, rng.gen_range(1..=4)),
                2 => (
                    UniformKet,
                    [UniformKet, BasisKet(rng.gen_range(0..d))].choose(rng).unwrap().clone(),
                    1,
                ),
                3 => (
                    if rng.gen_bool(0.5) { UniformKet } else { BasisKet(0) },
                    if rng.gen_bool(0.5) { Fourier } else { FourierConj },
                    2,
                ),
                _ => (BasisKet(rng.gen_range(0..d)), GroupPlus, 2),
            };
            let k = b.add(ket, 1);
            let t = b.add(target, arity);
            b.join(k, 0, t, rng.gen_range(0..arity));
            (b.finish(rng), k)
        }
        RewriteRule::UnitElim => {
            let mut b = Builder::new(any_group(rng));
            let (ket, target) = match rng.gen_range(0..3) {
                0 => (BasisKet(0), GroupPlus),
                1 => (UniformKet, Copy),
                _ => (UniformKet, SubCopy),
            };
            let arity = rng.gen_range(2..=4);
            let k = b.add(ket, 1);
            let t = b.add(target, arity);
            b.join(k, 0, t, 0);
            (b.finish(rng), k)
        }
        RewriteRule::SelfLoopTrace => {
            let group = any_group(rng);
            let d = group.order();
            let mut b = Builder::new(group);
            let n = match rng.gen_range(0..4) {
                0 => {
                    let n = b.add(Copy, 2);
                    let k = b.add(random_ket(rng, d), 1);
                    b.join(n, 0, k, 0);
                    n
                }
                1 => b.add(GroupPlus, rng.gen_range(0..=1)),
                _ => {
                    let arity = rng.gen_range(2..=4);
                    let kind = [Copy, GroupPlus, SubCopy, Dense(random_dense(rng, d, arity))]
                        .choose(rng)
                        .unwrap()
                        .clone();
                    let n = b.add(kind, arity);
                    b.join(n, 0, n, 1);
                    n
                }
            };
            (b.finish(rng), n)
        }
        RewriteRule::SubCopyForm => {
            let mut b = Builder::new(any_group(rng));
            if rng.gen_bool(0.5) {
                let c = b.add(Copy, 2 + rng.gen_range(0..3));
                let inv = b.add(GroupPlus, 2);
                b.join(c, 0, inv, 0);
                b.join(c, 1, inv, 1);
                (b.finish(rng), c)
            } else {
                let cs: Vec<NodeId> = (0..3).map(|_| b.add(Copy, 2 + rng.gen_range(0..2))).collect();
                for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                    let inv = b.add(GroupPlus, 2);
                    b.join(cs[i], 0, inv, 0);
                    b.join(cs[j], 1, inv, 1);
                }
                (b.finish(rng), cs[0])
            }
        }
        RewriteRule::SubCopyFusion => {
            let mut b = Builder::new(any_group(rng));
            let s = b.add(SubCopy, 1 + rng.gen_range(0..3));
            let (kind, arity) = match rng.gen_range(0..3) {
                0 => (Copy, 1 + rng.gen_range(0..3)),
                1 => (SubCopy, 1 + rng.gen_range(0..3)),
                _ => (GroupPlus, 2),
            };
            let o = b.add(kind, arity);
            b.join(s, 0, o, 0);
            (b.finish(rng), s)
        }
    }
}

/// Outcome of one soundness check.
pub struct SoundnessCheck {
    pub applied: bool,
    pub deviation: f64,
    pub scale: f64,
}

/// Applies `rule` at `anchor` (or, failing that, the first node where it
/// matches) and compares oracle contractions before and after.
pub fn check_rule(net: &TensorNetwork, rule: RewriteRule, anchor: NodeId) -> SoundnessCheck {
    let mut anchors = vec![anchor];
    anchors.extend(net.node_ids().into_iter().filter(|&n| n != anchor));
    let Some((after, _step)) = anchors.into_iter().find_map(|a| apply_rule_at(net, rule, a)) else {
        return SoundnessCheck {
            applied: false,
            deviation: 0.0,
            scale: 0.0,
        };
    };
    let x = brute_force_contract(net).expect("oracle before");
    let y = brute_force_contract(&after).expect("oracle after");
    SoundnessCheck {
        applied: true,
        deviation: x.max_abs_diff(&y).unwrap_or(f64::INFINITY),
        scale: x.max_abs().max(1.0),
    }
}

pub fn legs(net: &TensorNetwork) -> usize {
    net.num_edges() + net.num_open()
}

/// Draws cases for `rule` until one fits the leg bound.
pub fn small_rule_case(rng: &mut impl Rng, rule: RewriteRule) -> (TensorNetwork, NodeId) {
    loop {
        let (net, anchor) = rule_case(rng, rule);
        if legs(&net) <= MAX_LEGS {
            return (net, anchor);
        }
    }
}
