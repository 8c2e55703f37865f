//! The tensor-network data model and the state builders.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{validation, Error, Result};
use crate::group::GroupSpec;
use crate::lattice::{LatticeSpec, SiteId};
use crate::tensor::{DenseTensor, NodeKind, ScalarAccumulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct EdgeId(pub u32);

/// A port is a numbered leg of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Port {
    pub node: NodeId,
    pub port: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Ket,
    Bra,
}

/// Label of an open leg. Sorting is by site, then ket before bra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LegLabel {
    pub site: SiteId,
    pub layer: Layer,
}

impl LegLabel {
    pub fn ket(site: SiteId) -> Self {
        LegLabel {
            site,
            layer: Layer::Ket,
        }
    }

    pub fn bra(site: SiteId) -> Self {
        LegLabel {
            site,
            layer: Layer::Bra,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Link {
    Edge(EdgeId),
    Open(LegLabel),
    Free,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Node {
    pub kind: NodeKind,
    pub links: Vec<Link>,
}

/// What sits at the far side of a port.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PortTarget {
    Port(Port),
    Open(LegLabel),
}

/// A typed multigraph of tensors with labeled open legs and a global scalar.
#[derive(Clone, Debug)]
pub struct TensorNetwork {
    pub(crate) group: GroupSpec,
    pub(crate) nodes: BTreeMap<NodeId, Node>,
    pub(crate) edges: BTreeMap<EdgeId, (Port, Port)>,
    pub(crate) open: BTreeMap<LegLabel, Port>,
    pub(crate) scalar: ScalarAccumulator,
    pub(crate) next_node: u32,
    pub(crate) next_edge: u32,
}

/// Outcome of joining the far sides of two ports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Splice {
    Joined,
    /// The two ports were the ends of one edge, leaving a closed loop of this trace value.
    ClosedLoop,
    /// Both sides are open legs; nothing was changed.
    BothOpen,
}

impl TensorNetwork {
    pub fn new(group: GroupSpec) -> Self {
        TensorNetwork {
            group,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            open: BTreeMap::new(),
            scalar: ScalarAccumulator::one(),
            next_node: 0,
            next_edge: 0,
        }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn scalar(&self) -> ScalarAccumulator {
        self.scalar
    }

    pub fn set_scalar(&mut self, s: ScalarAccumulator) {
        self.scalar = s;
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn kind(&self, id: NodeId) -> Option<&NodeKind> {
        self.nodes.get(&id).map(|n| &n.kind)
    }

    pub fn arity(&self, id: NodeId) -> usize {
        self.nodes.get(&id).map_or(0, |n| n.links.len())
    }

    pub fn count_kind(&self, pred: impl Fn(&NodeKind) -> bool) -> usize {
        self.nodes.values().filter(|n| pred(&n.kind)).count()
    }

    /// Open legs in sorted (site, layer) order.
    pub fn open_legs(&self) -> Vec<(LegLabel, Port)> {
        self.open.iter().map(|(l, p)| (*l, *p)).collect()
    }

    pub fn num_open(&self) -> usize {
        self.open.len()
    }

    /// Sites carrying a ket leg.
    pub fn sites(&self) -> BTreeSet<SiteId> {
        self.open
            .keys()
            .filter(|l| l.layer == Layer::Ket)
            .map(|l| l.site)
            .collect()
    }

    pub fn target(&self, p: Port) -> Option<PortTarget> {
        match self.nodes.get(&p.node)?.links.get(p.port)? {
            Link::Edge(e) => {
                let (a, b) = self.edges[e];
                Some(PortTarget::Port(if a == p { b } else { a }))
            }
            Link::Open(l) => Some(PortTarget::Open(*l)),
            Link::Free => None,
        }
    }

    /// Far end of the edge at a port, if the port holds an edge.
    pub fn neighbor(&self, p: Port) -> Option<Port> {
        match self.target(p)? {
            PortTarget::Port(q) => Some(q),
            PortTarget::Open(_) => None,
        }
    }

    /// All edges as `(node_a, port_a, node_b, port_b)` in edge creation order.
    pub fn edge_list(&self) -> Vec<(Port, Port)> {
        self.edges.values().copied().collect()
    }

    /// Adds a node with `arity` unconnected ports. The network is invalid until
    /// every port is connected or labeled.
    pub fn add_node(&mut self, kind: NodeKind, arity: usize) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        self.nodes.insert(
            id,
            Node {
                kind,
                links: vec![Link::Free; arity],
            },
        );
        id
    }

    fn check_free(&self, p: Port) -> Result<()> {
        match self.nodes.get(&p.node).and_then(|n| n.links.get(p.port)) {
            Some(Link::Free) => Ok(()),
            Some(_) => validation(format!("port {}:{} is already in use", p.node.0, p.port)),
            None => validation(format!("port {}:{} does not exist", p.node.0, p.port)),
        }
    }

    pub fn connect(&mut self, a: Port, b: Port) -> Result<()> {
        self.check_free(a)?;
        self.check_free(b)?;
        if a == b {
            return validation("cannot connect a port to itself");
        }
        self.raw_connect(a, b);
        Ok(())
    }

    pub fn attach_open(&mut self, p: Port, label: LegLabel) -> Result<()> {
        self.check_free(p)?;
        if self.open.contains_key(&label) {
            return validation(format!("duplicate open leg {:?} at site {}", label.layer, label.site));
        }
        self.raw_open(p, label);
        Ok(())
    }

    pub(crate) fn raw_connect(&mut self, a: Port, b: Port) -> EdgeId {
        let e = EdgeId(self.next_edge);
        self.next_edge += 1;
        self.edges.insert(e, (a, b));
        self.set_link(a, Link::Edge(e));
        self.set_link(b, Link::Edge(e));
        e
    }

    pub(crate) fn raw_open(&mut self, p: Port, label: LegLabel) {
        self.open.insert(label, p);
        self.set_link(p, Link::Open(label));
    }

    pub(crate) fn link(&self, p: Port) -> Link {
        self.nodes[&p.node].links[p.port]
    }

    fn set_link(&mut self, p: Port, l: Link) {
        self.nodes.get_mut(&p.node).expect("node exists").links[p.port] = l;
    }

    /// Points whatever references `old` at `new` instead; `new` takes the link.
    fn repoint(&mut self, old: Port, new: Port, link: Link) {
        match link {
            Link::Edge(e) => {
                let ends = self.edges.get_mut(&e).expect("edge exists");
                if ends.0 == old {
                    ends.0 = new;
                } else {
                    ends.1 = new;
                }
            }
            Link::Open(l) => {
                self.open.insert(l, new);
            }
            Link::Free => {}
        }
        self.set_link(new, link);
    }

    /// Moves the link held by `from` onto the free port `to`.
    pub(crate) fn move_link(&mut self, from: Port, to: Port) {
        let l = self.link(from);
        self.set_link(from, Link::Free);
        self.repoint(from, to, l);
    }

    pub(crate) fn remove_edge_at(&mut self, p: Port) -> Option<Port> {
        let Link::Edge(e) = self.link(p) else {
            return None;
        };
        let (a, b) = self.edges.remove(&e).expect("edge exists");
        self.set_link(a, Link::Free);
        self.set_link(b, Link::Free);
        Some(if a == p { b } else { a })
    }

    pub(crate) fn add_port(&mut self, node: NodeId) -> Port {
        let links = &mut self.nodes.get_mut(&node).expect("node exists").links;
        links.push(Link::Free);
        Port {
            node,
            port: links.len() - 1,
        }
    }

    /// Removes free ports by index with swap-remove, fixing moved references.
    pub(crate) fn remove_ports(&mut self, node: NodeId, mut idx: Vec<usize>) {
        idx.sort_unstable_by(|a, b| b.cmp(a));
        idx.dedup();
        for i in idx {
            let links = &mut self.nodes.get_mut(&node).expect("node exists").links;
            debug_assert_eq!(links[i], Link::Free);
            let last = links.len() - 1;
            links.swap_remove(i);
            if i != last {
                let moved = links[i];
                links[i] = Link::Free;
                self.repoint(Port { node, port: last }, Port { node, port: i }, moved);
            }
        }
    }

    /// Removes a node, dropping all its edges and open legs.
    pub(crate) fn remove_node(&mut self, id: NodeId) -> Node {
        let arity = self.arity(id);
        for port in 0..arity {
            let p = Port { node: id, port };
            match self.link(p) {
                Link::Edge(_) => {
                    self.remove_edge_at(p);
                }
                Link::Open(l) => {
                    self.open.remove(&l);
                    self.set_link(p, Link::Free);
                }
                Link::Free => {}
            }
        }
        self.nodes.remove(&id).expect("node exists")
    }

    /// Joins what is attached at `a` with what is attached at `b` and frees both ports.
    pub(crate) fn splice(&mut self, a: Port, b: Port) -> Splice {
        let (la, lb) = (self.link(a), self.link(b));
        match (la, lb) {
            (Link::Open(_), Link::Open(_)) => Splice::BothOpen,
            (Link::Edge(e1), Link::Edge(e2)) if e1 == e2 => {
                self.remove_edge_at(a);
                Splice::ClosedLoop
            }
            (Link::Edge(_), Link::Edge(_)) => {
                let fa = self.remove_edge_at(a).expect("edge");
                let fb = self.remove_edge_at(b).expect("edge");
                self.raw_connect(fa, fb);
                Splice::Joined
            }
            (Link::Open(l), Link::Edge(_)) | (Link::Edge(_), Link::Open(l)) => {
                let (edge_side, open_side) = if matches!(la, Link::Open(_)) { (b, a) } else { (a, b) };
                let far = self.remove_edge_at(edge_side).expect("edge");
                self.open.remove(&l);
                self.set_link(open_side, Link::Free);
                self.raw_open(far, l);
                Splice::Joined
            }
            _ => panic!("splice on a free port"),
        }
    }

    /// Ports of `id` whose edges lead to other nodes, with the far ports.
    pub fn neighbors(&self, id: NodeId) -> Vec<(usize, Port)> {
        let Some(n) = self.nodes.get(&id) else {
            return Vec::new();
        };
        (0..n.links.len())
            .filter_map(|port| {
                self.neighbor(Port { node: id, port })
                    .filter(|q| q.node != id)
                    .map(|q| (port, q))
            })
            .collect()
    }

    /// Checks that every port is used exactly once and all references agree.
    pub fn validate(&self) -> Result<()> {
        for (&id, n) in &self.nodes {
            n.kind.validate(&self.group, n.links.len())?;
            for (port, l) in n.links.iter().enumerate() {
                let p = Port { node: id, port };
                match l {
                    Link::Free => return validation(format!("port {}:{port} is unused", id.0)),
                    Link::Edge(e) => {
                        let Some(&(a, b)) = self.edges.get(e) else {
                            return validation(format!("port {}:{port} names a missing edge", id.0));
                        };
                        if a != p && b != p {
                            return validation(format!("edge at {}:{port} does not point back", id.0));
                        }
                    }
                    Link::Open(label) => {
                        if self.open.get(label) != Some(&p) {
                            return validation(format!("open leg at {}:{port} is not registered", id.0));
                        }
                    }
                }
            }
        }
        for (e, &(a, b)) in &self.edges {
            for p in [a, b] {
                match self.nodes.get(&p.node).and_then(|n| n.links.get(p.port)) {
                    Some(Link::Edge(x)) if x == e => {}
                    _ => return validation(format!("edge {} has a dangling end", e.0)),
                }
            }
        }
        for (label, p) in &self.open {
            match self.nodes.get(&p.node).and_then(|n| n.links.get(p.port)) {
                Some(Link::Open(l)) if l == label => {}
                _ => return validation(format!("open leg at site {} has a dangling port", label.site)),
            }
        }
        Ok(())
    }

    /// Copy of this network with every tensor conjugated and kets relabeled as bras.
    fn mirrored(&self) -> TensorNetwork {
        let mut out = self.clone();
        for n in out.nodes.values_mut() {
            n.kind = n.kind.conj();
            for l in n.links.iter_mut() {
                if let Link::Open(label) = l {
                    label.layer = Layer::Bra;
                }
            }
        }
        out.open = out.open.into_iter().map(|(l, p)| (LegLabel::bra(l.site), p)).collect();
        out.scalar = self.scalar.conj();
        out
    }

    /// Places `other` beside this network with shifted node and edge ids.
    fn absorb(&mut self, other: TensorNetwork) -> Result<()> {
        let (dn, de) = (self.next_node, self.next_edge);
        let shift = |p: Port| Port {
            node: NodeId(p.node.0 + dn),
            port: p.port,
        };
        for (id, mut n) in other.nodes {
            for l in n.links.iter_mut() {
                if let Link::Edge(e) = l {
                    *l = Link::Edge(EdgeId(e.0 + de));
                }
            }
            self.nodes.insert(NodeId(id.0 + dn), n);
        }
        for (e, (a, b)) in other.edges {
            self.edges.insert(EdgeId(e.0 + de), (shift(a), shift(b)));
        }
        for (l, p) in other.open {
            if self.open.insert(l, shift(p)).is_some() {
                return validation(format!("duplicate open leg at site {}", l.site));
            }
        }
        self.next_node += other.next_node;
        self.next_edge += other.next_edge;
        self.scalar.mul_acc(&other.scalar);
        Ok(())
    }

    /// Joins the ket leg and the bra leg of a site with an edge.
    fn join_site(&mut self, site: SiteId) -> Result<()> {
        let k = self
            .open
            .remove(&LegLabel::ket(site))
            .ok_or_else(|| Error::Validation(format!("site {site} has no ket leg")))?;
        let b = self
            .open
            .remove(&LegLabel::bra(site))
            .ok_or_else(|| Error::Validation(format!("site {site} has no bra leg")))?;
        self.set_link(k, Link::Free);
        self.set_link(b, Link::Free);
        self.raw_connect(k, b);
        Ok(())
    }

    fn require_ket_only(&self) -> Result<()> {
        if self.open.keys().any(|l| l.layer == Layer::Bra) {
            return validation("expected a ket network with no bra legs");
        }
        Ok(())
    }

    /// Splits the network into one network per cyclic factor of the group, if
    /// every tensor factorizes. The scalar is carried by the first factor.
    pub fn factorize(&self) -> Option<Vec<TensorNetwork>> {
        let factors = self.group.cyclic_factors();
        if factors.len() < 2 {
            return None;
        }
        let mut out = Vec::with_capacity(factors.len());
        for (i, g) in factors.into_iter().enumerate() {
            let mut net = self.clone();
            net.group = g;
            for n in net.nodes.values_mut() {
                n.kind = match &n.kind {
                    NodeKind::BasisKet(a) => NodeKind::BasisKet(self.group.digits(*a)[i]),
                    NodeKind::Impurity { .. } | NodeKind::Dense(_) => return None,
                    k => k.clone(),
                };
            }
            if i > 0 {
                net.scalar = ScalarAccumulator::one();
            }
            out.push(net);
        }
        Some(out)
    }

    /// Serializes to the network JSON format.
    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|(id, n)| {
                let params = match &n.kind {
                    NodeKind::Impurity { theta } => json!({ "theta": theta }),
                    NodeKind::BasisKet(g) => json!({ "element": g }),
                    NodeKind::Dense(t) => json!({ "tensor": t }),
                    _ => json!({}),
                };
                json!({"id": id.0, "kind": n.kind.name(), "params": params, "arity": n.links.len()})
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .values()
            .map(|(a, b)| json!([a.node.0, a.port, b.node.0, b.port]))
            .collect();
        let open: Vec<Value> = self
            .open
            .iter()
            .map(|(l, p)| json!({"node": p.node.0, "port": p.port, "site": l.site, "layer": l.layer}))
            .collect();
        let m = self.scalar.mantissa();
        let mut v = json!({
            "group": self.group,
            "nodes": nodes,
            "edges": edges,
            "open": open,
            "scalar": [m.re, m.im],
        });
        if self.scalar.exp2() != 0 {
            v["scalar_exp2"] = json!(self.scalar.exp2());
        }
        v
    }

    /// Parses the network JSON format and validates the result.
    pub fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct NodeJson {
            id: u32,
            kind: String,
            #[serde(default)]
            params: Value,
            arity: usize,
        }
        #[derive(Deserialize)]
        struct OpenJson {
            node: u32,
            port: usize,
            site: SiteId,
            layer: Layer,
        }
        #[derive(Deserialize)]
        struct NetJson {
            group: GroupSpec,
            nodes: Vec<NodeJson>,
            edges: Vec<(u32, usize, u32, usize)>,
            open: Vec<OpenJson>,
            scalar: (f64, f64),
            #[serde(default)]
            scalar_exp2: i64,
        }
        let raw: NetJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Validation(format!("malformed network JSON: {e}")))?;
        let mut net = TensorNetwork::new(raw.group);
        for n in raw.nodes {
            let kind = match n.kind.as_str() {
                "Copy" => NodeKind::Copy,
                "GroupPlus" => NodeKind::GroupPlus,
                "Fourier" => NodeKind::Fourier,
                "FourierConj" => NodeKind::FourierConj,
                "SubCopy" => NodeKind::SubCopy,
                "UniformKet" => NodeKind::UniformKet,
                "Impurity" => NodeKind::Impurity {
                    theta: n.params["theta"]
                        .as_f64()
                        .ok_or_else(|| Error::Validation("Impurity needs params.theta".into()))?,
                },
                "BasisKet" => NodeKind::BasisKet(
                    n.params["element"]
                        .as_u64()
                        .ok_or_else(|| Error::Validation("BasisKet needs params.element".into()))?
                        as usize,
                ),
                "Dense" => NodeKind::Dense(
                    serde_json::from_value::<DenseTensor>(n.params["tensor"].clone())
                        .map_err(|e| Error::Validation(format!("bad Dense tensor: {e}")))?,
                ),
                other => return validation(format!("unknown node kind {other:?}")),
            };
            let id = NodeId(n.id);
            if net.nodes.contains_key(&id) {
                return validation(format!("duplicate node id {}", n.id));
            }
            net.nodes.insert(
                id,
                Node {
                    kind,
                    links: vec![Link::Free; n.arity],
                },
            );
            net.next_node = net.next_node.max(n.id + 1);
        }
        for (a, pa, b, pb) in raw.edges {
            net.connect(
                Port {
                    node: NodeId(a),
                    port: pa,
                },
                Port {
                    node: NodeId(b),
                    port: pb,
                },
            )?;
        }
        for o in raw.open {
            net.attach_open(
                Port {
                    node: NodeId(o.node),
                    port: o.port,
                },
                LegLabel {
                    site: o.site,
                    layer: o.layer,
                },
            )?;
        }
        net.scalar = ScalarAccumulator::from_parts(Complex64::new(raw.scalar.0, raw.scalar.1), raw.scalar_exp2);
        net.validate()?;
        Ok(net)
    }
}

/// Builds the gauge-theory ground state: one GroupPlus per vertex and one Copy(3)
/// per edge whose third port is the spin.
///
/// Vertex `v` becomes node `v` and edge `e` becomes node `V + e`, so impurities can be
/// addressed by vertex index.
pub fn build_lattice_state(lattice: &LatticeSpec, group: &GroupSpec) -> Result<TensorNetwork> {
    let graph = lattice.gauge_graph()?;
    let inc = graph.incident();
    let mut net = TensorNetwork::new(group.clone());
    for row in &inc {
        net.add_node(NodeKind::GroupPlus, row.len());
    }
    for (e, &(u, w)) in graph.edges.iter().enumerate() {
        let c = net.add_node(NodeKind::Copy, 3);
        for (end, v) in [u, w].into_iter().enumerate() {
            // the k-th occurrence of e in inc[v] is the port for this end
            let slot = inc[v]
                .iter()
                .enumerate()
                .filter(|&(_, &x)| x == e)
                .map(|(i, _)| i)
                .nth(if u == w { end } else { 0 })
                .expect("edge is incident");
            net.raw_connect(
                Port {
                    node: NodeId(v as u32),
                    port: slot,
                },
                Port { node: c, port: end },
            );
        }
        net.raw_open(Port { node: c, port: 2 }, LegLabel::ket(graph.sites[e]));
    }
    Ok(net)
}

/// The `n`-party GHZ state as a single Copy(n) node; sites are `0:0:i`.
pub fn build_ghz(n: usize, group: &GroupSpec) -> Result<TensorNetwork> {
    if n < 2 {
        return validation(format!("GHZ needs at least 2 parties, got {n}"));
    }
    let mut net = TensorNetwork::new(group.clone());
    let c = net.add_node(NodeKind::Copy, n);
    for i in 0..n {
        net.raw_open(Port { node: c, port: i }, LegLabel::ket(SiteId::new(0, 0, i as u32)));
    }
    Ok(net)
}

/// The GHZ state as a chain: Copy(2) at each end, Copy(3) in between.
pub fn build_ghz_chain(n: usize, group: &GroupSpec) -> Result<TensorNetwork> {
    if n < 2 {
        return validation(format!("GHZ needs at least 2 parties, got {n}"));
    }
    let mut net = TensorNetwork::new(group.clone());
    let ids: Vec<NodeId> = (0..n)
        .map(|i| net.add_node(NodeKind::Copy, if i == 0 || i == n - 1 { 2 } else { 3 }))
        .collect();
    for (i, &c) in ids.iter().enumerate() {
        net.raw_open(Port { node: c, port: 0 }, LegLabel::ket(SiteId::new(0, 0, i as u32)));
    }
    for i in 0..n - 1 {
        let right_port = if i == 0 { 1 } else { 2 };
        net.raw_connect(
            Port {
                node: ids[i],
                port: right_port,
            },
            Port {
                node: ids[i + 1],
                port: 1,
            },
        );
    }
    Ok(net)
}

/// Position and strength of an impurity tensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpuritySpec {
    pub vertex: usize,
    pub theta: f64,
}

/// Replaces the GroupPlus(3) tensor at a vertex by an impurity tensor.
pub fn insert_impurity(net: &TensorNetwork, spec: ImpuritySpec) -> Result<TensorNetwork> {
    if net.group.order() != 2 {
        return validation(format!("impurities need the group Z2, got {}", net.group));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&spec.theta) {
        return validation(format!("impurity theta {} outside [0, pi/2]", spec.theta));
    }
    let id = NodeId(spec.vertex as u32);
    match net.kind(id) {
        Some(NodeKind::GroupPlus) if net.arity(id) == 3 => {}
        Some(NodeKind::GroupPlus) => {
            return Err(Error::Unsupported(format!(
                "impurity at vertex {} of degree {}; only degree 3 is supported",
                spec.vertex,
                net.arity(id)
            )))
        }
        _ => return validation(format!("vertex {} does not hold a GroupPlus tensor", spec.vertex)),
    }
    let mut out = net.clone();
    out.nodes.get_mut(&id).expect("checked").kind = NodeKind::Impurity { theta: spec.theta };
    Ok(out)
}

/// Double-layer network for `<psi|psi>` with the sites outside `keep` traced.
///
/// Ket nodes keep their ids; bra nodes are shifted past them.
pub fn build_sandwich(ket: &TensorNetwork, keep: &BTreeSet<SiteId>) -> Result<TensorNetwork> {
    ket.require_ket_only()?;
    let sites = ket.sites();
    if let Some(s) = keep.iter().find(|s| !sites.contains(s)) {
        return validation(format!("unknown site {s}"));
    }
    let mut net = ket.clone();
    net.absorb(ket.mirrored())?;
    for s in sites.iter().filter(|s| !keep.contains(s)) {
        net.join_site(*s)?;
    }
    Ok(net)
}

/// Closed network for `<a|b>`: the conjugate of `a` joined to `b` on every site.
pub fn build_overlap(a: &TensorNetwork, b: &TensorNetwork) -> Result<TensorNetwork> {
    a.require_ket_only()?;
    b.require_ket_only()?;
    if a.group != b.group {
        return validation("states are over different groups");
    }
    let sites = a.sites();
    if sites != b.sites() {
        return validation("states have different site sets");
    }
    let mut net = b.clone();
    net.absorb(a.mirrored())?;
    for s in &sites {
        net.join_site(*s)?;
    }
    Ok(net)
}
