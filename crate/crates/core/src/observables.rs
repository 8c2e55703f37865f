//! Entanglement and correlation quantities from exact contractions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::group::GroupSpec;
use crate::lattice::{GaugeGraph, LatticeSpec, SiteId};
use crate::network::{
    build_lattice_state, build_overlap, build_sandwich, insert_impurity, ImpuritySpec, TensorNetwork,
};
use crate::oracle::{brute_force_contract_with, ContractionOrder, DEFAULT_BUDGET};
use crate::rewrite::{contract, ContractOptions};
use crate::tensor::{DenseTensor, ScalarAccumulator};

/// Eigenvalues at or below this are treated as exact zeros.
pub const EIGEN_CUTOFF: f64 = 1e-14;

const RDM_TOL: f64 = 1e-10;

/// Which contraction produced a number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Pipeline,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pipeline => "pipeline",
            Method::Oracle => "oracle",
        })
    }
}

/// How a reduced density matrix is evaluated.
#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub method: Method,
    pub oracle_budget: f64,
    pub contract: ContractOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            method: Method::Pipeline,
            oracle_budget: DEFAULT_BUDGET,
            contract: ContractOptions::default(),
        }
    }
}

impl EvalOptions {
    pub fn oracle(budget: f64) -> Self {
        Self {
            method: Method::Oracle,
            oracle_budget: budget,
            ..Self::default()
        }
    }
}

/// A labelled, non-empty set of sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    pub sites: BTreeSet<SiteId>,
}

impl Region {
    pub fn new(label: impl Into<String>, sites: impl IntoIterator<Item = SiteId>) -> Result<Self> {
        let r = Region {
            label: label.into(),
            sites: sites.into_iter().collect(),
        };
        if r.sites.is_empty() {
            return validation(format!("region {} is empty", r.label));
        }
        Ok(r)
    }
}

/// A named number with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableReport {
    pub name: String,
    pub value: ReportValue,
    pub units: Option<String>,
    pub method: Method,
    pub inputs: serde_json::Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ReportValue {
    Real(f64),
    Complex(Complex64),
}

/// Contracts a network whose legs are all closed into one extended-range scalar.
fn closed_value(net: &TensorNetwork, opts: &EvalOptions) -> Result<ScalarAccumulator> {
    match opts.method {
        Method::Pipeline => {
            let c = contract(net, &opts.contract)?;
            let mut s = c.scalar;
            s.mul(c.tensor.scalar_value().expect("closed network"));
            Ok(s)
        }
        Method::Oracle => {
            let t = brute_force_contract_with(net, opts.oracle_budget, ContractionOrder::Greedy)?;
            Ok(ScalarAccumulator::from_complex(
                t.scalar_value().expect("closed network"),
            ))
        }
    }
}

/// Reduced density matrix over `sites`, as a tensor with the ket axes first and
/// then the bra axes, each in sorted site order. Normalized to unit trace.
pub fn reduced_density_matrix(state: &TensorNetwork, region: &Region) -> Result<DenseTensor> {
    rdm_with(state, &region.sites, &EvalOptions::default())
}

pub fn rdm_with(state: &TensorNetwork, sites: &BTreeSet<SiteId>, opts: &EvalOptions) -> Result<DenseTensor> {
    let d = state.group().order();
    let k = sites.len();
    let entries = (d as f64).powi(2 * k as i32);
    if entries > opts.contract.max_output_entries as f64 {
        return Err(Error::Budget(format!(
            "density matrix over {k} sites has {entries:.3e} entries, limit is {}",
            opts.contract.max_output_entries
        )));
    }
    let net = build_sandwich(state, sites)?;
    let t = match opts.method {
        Method::Pipeline => contract(&net, &opts.contract)?.tensor,
        Method::Oracle => brute_force_contract_with(&net, opts.oracle_budget, ContractionOrder::Greedy)?,
    };
    // legs come as (site0 ket, site0 bra, site1 ket, ...)
    let perm: Vec<usize> = (0..k).map(|i| 2 * i).chain((0..k).map(|i| 2 * i + 1)).collect();
    let t = t.permute(&perm)?;
    let m = t.to_matrix(k);
    let tr = m.trace();
    if tr.norm() == 0.0 || !tr.norm().is_finite() {
        return validation("the state has zero norm");
    }
    Ok(t.scale(tr.inv()))
}

/// `-sum lambda ln lambda` over the eigenvalues of a density matrix.
///
/// Accepts a square matrix or a tensor of even rank (row axes first).
pub fn von_neumann_entropy(rho: &DenseTensor) -> Result<f64> {
    if !rho.rank().is_multiple_of(2) {
        return validation(format!("density matrix needs even rank, got {}", rho.rank()));
    }
    let half = rho.rank() / 2;
    let m = rho.to_matrix(half);
    if m.nrows() != m.ncols() {
        return validation(format!("density matrix is {}x{}", m.nrows(), m.ncols()));
    }
    let asym = (&m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if asym > RDM_TOL {
        return validation(format!("density matrix is not Hermitian (deviation {asym:e})"));
    }
    let tr = m.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > RDM_TOL {
        return validation(format!("density matrix trace is {tr}, not 1"));
    }
    let herm = (&m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -RDM_TOL {
        return validation(format!("density matrix has eigenvalue {min:e}"));
    }
    Ok(eig.iter().filter(|&&l| l > EIGEN_CUTOFF).map(|&l| -l * l.ln()).sum())
}

/// Entropy of the sites, splitting a non-cyclic group into cyclic factors when
/// the full density matrix would be too large.
pub fn region_entropy(state: &TensorNetwork, sites: &BTreeSet<SiteId>, opts: &EvalOptions) -> Result<f64> {
    let d = state.group().order() as f64;
    let entries = d.powi(2 * sites.len() as i32);
    if entries > opts.contract.max_output_entries as f64 {
        if let Some(parts) = state.factorize() {
            return parts.iter().map(|p| region_entropy(p, sites, opts)).sum();
        }
    }
    von_neumann_entropy(&rdm_with(state, sites, opts)?)
}

/// The seven entropies and their signed combination.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopoEntropy {
    pub regions: BTreeMap<String, Vec<String>>,
    pub terms: BTreeMap<String, f64>,
    #[serde(rename = "S_top")]
    pub s_top: f64,
}

pub fn topological_entropy(state: &TensorNetwork, a: &Region, b: &Region, c: &Region) -> Result<TopoEntropy> {
    topological_entropy_with(state, a, b, c, &EvalOptions::default())
}

pub fn topological_entropy_with(
    state: &TensorNetwork,
    a: &Region,
    b: &Region,
    c: &Region,
    opts: &EvalOptions,
) -> Result<TopoEntropy> {
    for (x, y) in [(a, b), (b, c), (a, c)] {
        if let Some(s) = x.sites.intersection(&y.sites).next() {
            return validation(format!("regions {} and {} share site {s}", x.label, y.label));
        }
    }
    let union = |rs: &[&Region]| -> BTreeSet<SiteId> { rs.iter().flat_map(|r| r.sites.iter().copied()).collect() };
    let combos: [(&str, Vec<&Region>, f64); 7] = [
        ("S_A", vec![a], 1.0),
        ("S_B", vec![b], 1.0),
        ("S_C", vec![c], 1.0),
        ("S_AB", vec![a, b], -1.0),
        ("S_BC", vec![b, c], -1.0),
        ("S_CA", vec![c, a], -1.0),
        ("S_ABC", vec![a, b, c], 1.0),
    ];
    let values: Vec<f64> = combos
        .par_iter()
        .map(|(_, rs, _)| region_entropy(state, &union(rs), opts))
        .collect::<Result<_>>()?;
    let mut terms = BTreeMap::new();
    let mut s_top = 0.0;
    for ((name, _, sign), v) in combos.iter().zip(values) {
        terms.insert(name.to_string(), v);
        s_top += sign * v;
    }
    let regions = [("A", a), ("B", b), ("C", c)]
        .into_iter()
        .map(|(k, r)| (k.to_string(), r.sites.iter().map(|s| s.to_string()).collect()))
        .collect();
    Ok(TopoEntropy { regions, terms, s_top })
}

fn trace_with(rho: &nalgebra::DMatrix<Complex64>, op: &nalgebra::DMatrix<Complex64>) -> Complex64 {
    (rho * op).trace()
}

fn operator_matrix(o: &DenseTensor, d: usize, what: &str) -> Result<nalgebra::DMatrix<Complex64>> {
    if o.dims() != [d, d] {
        return validation(format!("{what} must be {d}x{d}, got dims {:?}", o.dims()));
    }
    Ok(o.to_matrix(1))
}

/// `<O1 O2> - <O1><O2>` from the two-site density matrix.
pub fn connected_correlator(
    state: &TensorNetwork,
    o1: &DenseTensor,
    s1: SiteId,
    o2: &DenseTensor,
    s2: SiteId,
) -> Result<Complex64> {
    if s1 == s2 {
        return validation("correlator sites must differ");
    }
    let d = state.group().order();
    let m1 = operator_matrix(o1, d, "first operator")?;
    let m2 = operator_matrix(o2, d, "second operator")?;
    let sites: BTreeSet<SiteId> = [s1, s2].into_iter().collect();
    let rho = rdm_with(state, &sites, &EvalOptions::default())?.to_matrix(2);
    // the first matrix factor is the smaller site
    let (ma, mb) = if s1 < s2 { (&m1, &m2) } else { (&m2, &m1) };
    let joint = trace_with(&rho, &ma.kronecker(mb));
    let mut rho_a = nalgebra::DMatrix::<Complex64>::zeros(d, d);
    let mut rho_b = nalgebra::DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                rho_a[(i, j)] += rho[(i * d + k, j * d + k)];
                rho_b[(i, j)] += rho[(k * d + i, k * d + j)];
            }
        }
    }
    Ok(joint - trace_with(&rho_a, ma) * trace_with(&rho_b, mb))
}

/// A simple path of `n` edges starting at vertex 0: at each step the lowest
/// incident edge leading to an unvisited vertex. Returns (vertices, edges).
pub fn string_path(graph: &GaugeGraph, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let inc = graph.incident();
    let mut verts = vec![0usize];
    let mut edges = Vec::new();
    while edges.len() < n {
        let v = *verts.last().expect("non-empty");
        let step = inc[v].iter().copied().find(|&e| {
            let w = graph.other_end(e, v);
            !verts.contains(&w)
        });
        match step {
            Some(e) => {
                verts.push(graph.other_end(e, v));
                edges.push(e);
            }
            None => return validation(format!("no simple path of {n} edges from vertex 0")),
        }
    }
    Ok((verts, edges))
}

/// Z2 hexagonal state with impurities of strength `theta` on the masked path vertices.
fn string_state(
    lattice: &LatticeSpec,
    n: usize,
    mask: &[bool],
    theta: f64,
) -> Result<(TensorNetwork, BTreeSet<SiteId>)> {
    if mask.len() != n + 1 {
        return validation(format!("mask needs {} entries, got {}", n + 1, mask.len()));
    }
    let graph = lattice.gauge_graph()?;
    let (verts, edges) = string_path(&graph, n)?;
    let mut state = build_lattice_state(lattice, &GroupSpec::z2())?;
    for (&v, &on) in verts.iter().zip(mask) {
        if on {
            state = insert_impurity(&state, ImpuritySpec { vertex: v, theta })?;
        }
    }
    Ok((state, edges.iter().map(|&e| graph.sites[e]).collect()))
}

/// Default host lattice for string scans.
pub fn string_lattice(n: usize) -> LatticeSpec {
    let l = n.max(3);
    LatticeSpec::hexagonal(l, l)
}

/// Entropy of an `n`-spin string region with impurities on the masked vertices
/// along it (mask has `n + 1` entries).
pub fn string_entropy_scan(n: usize, mask: &[bool], theta: f64) -> Result<f64> {
    string_entropy_on(&string_lattice(n), n, mask, theta, &EvalOptions::default())
}

pub fn string_entropy_on(
    lattice: &LatticeSpec,
    n: usize,
    mask: &[bool],
    theta: f64,
    opts: &EvalOptions,
) -> Result<f64> {
    let (state, sites) = string_state(lattice, n, mask, theta)?;
    region_entropy(&state, &sites, opts)
}

/// One row of a string scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub m: usize,
    pub mask: String,
    pub theta: f64,
    #[serde(rename = "S_nats")]
    pub s_nats: f64,
    pub method: Method,
}

pub fn mask_string(mask: &[bool]) -> String {
    mask.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Evaluates every (mask, theta) pair in parallel; rows keep the input order.
pub fn string_scan_grid(
    lattice: &LatticeSpec,
    n: usize,
    masks: &[Vec<bool>],
    thetas: &[f64],
    opts: &EvalOptions,
) -> Result<Vec<ScanRow>> {
    let points: Vec<(&Vec<bool>, f64)> = masks.iter().flat_map(|m| thetas.iter().map(move |&t| (m, t))).collect();
    points
        .par_iter()
        .map(|(mask, theta)| {
            let s = string_entropy_on(lattice, n, mask, *theta, opts)?;
            Ok(ScanRow {
                n,
                m: mask.iter().filter(|&&b| b).count(),
                mask: mask_string(mask),
                theta: *theta,
                s_nats: s,
                method: opts.method,
            })
        })
        .collect()
}

/// `count` evenly spaced angles from 0 to pi/2 inclusive.
pub fn theta_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Where the second impurity sits relative to region A.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    AdjacentToA,
    Remote,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::AdjacentToA => "adjacent-to-A",
            Placement::Remote => "remote",
        })
    }
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adjacent-to-a" | "adjacent" => Ok(Placement::AdjacentToA),
            "remote" => Ok(Placement::Remote),
            _ => validation(format!("unknown placement {s:?}; use adjacent-to-A or remote")),
        }
    }
}

fn bfs_distances(graph: &GaugeGraph, from: usize) -> Vec<usize> {
    let inc = graph.incident();
    let mut dist = vec![usize::MAX; graph.num_vertices];
    dist[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(v) = q.pop_front() {
        for &e in &inc[v] {
            let w = graph.other_end(e, v);
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                q.push_back(w);
            }
        }
    }
    dist
}

/// Geometry of the two-impurity setup: the first impurity at vertex 0, regions
/// A, B, C the spins on its three edges, and the second impurity's vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpurityLayout {
    pub first: usize,
    pub second: usize,
    pub regions: [Region; 3],
    /// Region A grown by the two other spins at the second impurity (adjacent placement only).
    pub enlarged_a: Option<Region>,
}

pub fn impurity_layout(lattice: &LatticeSpec, placement: Placement) -> Result<ImpurityLayout> {
    let graph = lattice.gauge_graph()?;
    let inc = graph.incident();
    let v = 0;
    if inc[v].len() != 3 {
        return validation("the impurity setup needs a degree-3 vertex 0");
    }
    let [a, b, c] = [inc[v][0], inc[v][1], inc[v][2]];
    let regions = [
        Region::new("A", [graph.sites[a]])?,
        Region::new("B", [graph.sites[b]])?,
        Region::new("C", [graph.sites[c]])?,
    ];
    let near: BTreeSet<usize> = [a, b, c]
        .iter()
        .flat_map(|&e| [graph.edges[e].0, graph.edges[e].1])
        .collect();
    let (second, enlarged_a) = match placement {
        Placement::AdjacentToA => {
            let w = graph.other_end(a, v);
            if w == v {
                return validation("edge A is a self-loop");
            }
            let mut sites = regions[0].sites.clone();
            sites.extend(inc[w].iter().filter(|&&e| e != a).map(|&e| graph.sites[e]));
            (w, Some(Region::new("A", sites)?))
        }
        Placement::Remote => {
            let dist = bfs_distances(&graph, v);
            let w = (0..graph.num_vertices)
                .filter(|u| !near.contains(u) && dist[*u] != usize::MAX)
                .max_by_key(|&u| (dist[u], std::cmp::Reverse(u)))
                .ok_or_else(|| Error::Validation("lattice too small for a remote impurity".into()))?;
            (w, None)
        }
    };
    Ok(ImpurityLayout {
        first: v,
        second,
        regions,
        enlarged_a,
    })
}

/// Default host lattice for the two-impurity setup.
pub fn impurity_lattice() -> LatticeSpec {
    LatticeSpec::hexagonal(4, 4)
}

/// S_top around the first of two equal impurities.
pub fn impurity_stop_curve(theta: f64, placement: Placement) -> Result<f64> {
    Ok(impurity_stop_on(&impurity_lattice(), theta, placement, false, &EvalOptions::default())?.s_top)
}

pub fn impurity_stop_on(
    lattice: &LatticeSpec,
    theta: f64,
    placement: Placement,
    enlarge: bool,
    opts: &EvalOptions,
) -> Result<TopoEntropy> {
    let layout = impurity_layout(lattice, placement)?;
    let state = impurity_state(lattice, &layout, theta)?;
    let [ra, rb, rc] = &layout.regions;
    let a = if enlarge {
        layout
            .enlarged_a
            .clone()
            .ok_or_else(|| Error::Validation("region enlargement needs the adjacent placement".into()))?
    } else {
        ra.clone()
    };
    topological_entropy_with(&state, &a, rb, rc, opts)
}

pub fn impurity_state(lattice: &LatticeSpec, layout: &ImpurityLayout, theta: f64) -> Result<TensorNetwork> {
    let state = build_lattice_state(lattice, &GroupSpec::z2())?;
    let state = insert_impurity(
        &state,
        ImpuritySpec {
            vertex: layout.first,
            theta,
        },
    )?;
    insert_impurity(
        &state,
        ImpuritySpec {
            vertex: layout.second,
            theta,
        },
    )
}

/// `<a|b> / (|a| |b|)`.
pub fn norm_and_overlap(a: &TensorNetwork, b: &TensorNetwork) -> Result<Complex64> {
    norm_and_overlap_with(a, b, &EvalOptions::default())
}

pub fn norm_and_overlap_with(a: &TensorNetwork, b: &TensorNetwork, opts: &EvalOptions) -> Result<Complex64> {
    let ab = closed_value(&build_overlap(a, b)?, opts)?;
    let aa = closed_value(&build_overlap(a, a)?, opts)?;
    let bb = closed_value(&build_overlap(b, b)?, opts)?;
    if aa.is_zero() || bb.is_zero() {
        return validation("a state has zero norm");
    }
    let m = ab.mantissa() / (aa.mantissa().re * bb.mantissa().re).sqrt();
    let e = ab.exp2() as f64 - 0.5 * (aa.exp2() + bb.exp2()) as f64;
    Ok(m * e.exp2())
}

/// The spins at vertex `v` split 1 + 1 + rest.
pub fn vertex_regions(graph: &GaugeGraph, v: usize) -> Result<[Region; 3]> {
    split_regions(&vertex_sites(graph, v))
}

fn split_regions(sites: &[SiteId]) -> Result<[Region; 3]> {
    if sites.len() < 3 {
        return validation(format!("need at least 3 distinct sites, got {}", sites.len()));
    }
    Ok([
        Region::new("A", [sites[0]])?,
        Region::new("B", [sites[1]])?,
        Region::new("C", sites[2..].iter().copied())?,
    ])
}

/// Three regions for S_top. On bipartite lattices: the spins around the lowest
/// vertex, split 1 + 1 + rest. On lattices with triangles: the three spins of
/// the first triangle, since a single vertex star there only sees the local
/// Gauss law.
pub fn auto_regions(lattice: &LatticeSpec) -> Result<[Region; 3]> {
    let graph = lattice.gauge_graph()?;
    let sites = match graph.first_triangle() {
        Some(t) if !graph.is_bipartite() => t.iter().map(|&e| graph.sites[e]).collect(),
        _ => vertex_sites(&graph, 0),
    };
    split_regions(&sites)
}

/// Distinct spins on the edges at vertex `v`, in incidence order.
pub fn vertex_sites(graph: &GaugeGraph, v: usize) -> Vec<SiteId> {
    let mut out = Vec::new();
    for &e in &graph.incident()[v] {
        let s = graph.sites[e];
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_ghz;
    use std::f64::consts::LN_2;

    fn diag(v: &[f64]) -> DenseTensor {
        let n = v.len();
        DenseTensor::from_fn(vec![n, n], |i| {
            Complex64::new(if i[0] == i[1] { v[i[0]] } else { 0.0 }, 0.0)
        })
    }

    #[test]
    fn test_entropy_closed_forms() {
        assert!((von_neumann_entropy(&diag(&[0.5, 0.5])).unwrap() - LN_2).abs() < 1e-14);
        assert!(von_neumann_entropy(&diag(&[1.0, 0.0])).unwrap().abs() < 1e-14);
        let expect = 0.75 * (4.0f64 / 3.0).ln() + 0.25 * 4.0f64.ln();
        assert!((von_neumann_entropy(&diag(&[0.75, 0.25])).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn test_entropy_rejects_bad_input() {
        assert!(von_neumann_entropy(&diag(&[0.7, 0.7])).is_err());
        assert!(von_neumann_entropy(&diag(&[1.5, -0.5])).is_err());
        let mut t = diag(&[0.5, 0.5]);
        t.set(&[0, 1], Complex64::new(0.1, 0.0));
        assert!(von_neumann_entropy(&t).is_err());
    }

    #[test]
    fn test_ghz_two_site_rdm() {
        let ket = build_ghz(5, &GroupSpec::z2()).unwrap();
        let sites: BTreeSet<SiteId> = ket.sites().into_iter().take(2).collect();
        let rho = rdm_with(&ket, &sites, &EvalOptions::default()).unwrap();
        let m = rho.to_matrix(2);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j && (i == 0 || i == 3) { 0.5 } else { 0.0 };
                assert!((m[(i, j)].re - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn test_theta_grid() {
        let g = theta_grid(33);
        assert_eq!(g.len(), 33);
        assert_eq!(g[32], std::f64::consts::FRAC_PI_2);
        assert!((g[16] - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn test_placement_parse() {
        assert_eq!("adjacent-to-A".parse::<Placement>().unwrap(), Placement::AdjacentToA);
        assert_eq!("remote".parse::<Placement>().unwrap(), Placement::Remote);
    }
}
