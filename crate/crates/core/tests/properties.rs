use std::collections::BTreeSet;

use gaugetn::group::{f_symbol, FourierMatrix};
use gaugetn::lattice::GaugeGraph;
use gaugetn::network::{build_ghz, build_lattice_state, build_sandwich};
use gaugetn::observables::{rdm_with, EvalOptions};
use gaugetn::oracle::{amplitude, brute_force_contract, brute_force_contract_with, ContractionOrder, EdgeConfig};
use gaugetn::rewrite::{contract, replay, simplify, ContractOptions, RewriteTrace};
use gaugetn::tensor::contract_pair;
use gaugetn::{DenseTensor, GroupSpec, LatticeKind, LatticeSpec, NodeKind, ScalarAccumulator, SiteId, TensorNetwork};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

const KINDS: [LatticeKind; 4] = [
    LatticeKind::Hexagonal,
    LatticeKind::Square,
    LatticeKind::Kagome,
    LatticeKind::Triangular,
];

fn group(s: &str) -> GroupSpec {
    s.parse().unwrap()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

// ---------- groups ----------

#[test]
fn group_laws_hold_exhaustively() {
    for g in [
        "Z2", "Z3", "Z4", "Z2xZ2", "Z6", "Z2xZ3", "Z2xZ2xZ2", "Z3xZ3", "Z2xZ3xZ4", "Z24",
    ] {
        let g = group(g);
        let n = g.order();
        assert!(n <= 24);
        for a in 0..n {
            assert_eq!(g.add(a, 0), a);
            assert_eq!(g.add(a, g.neg(a)), 0);
            for b in 0..n {
                assert_eq!(g.add(a, b), g.add(b, a));
                for x in 0..n {
                    assert_eq!(g.add(g.add(a, b), x), g.add(a, g.add(b, x)));
                }
            }
        }
    }
}

fn fourier_deviation(h: &FourierMatrix) -> f64 {
    let n = h.order;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s: Complex64 = (0..n).map(|k| h.get(i, k) * h.get(k, j).conj()).sum();
            let want = if i == j { n as f64 } else { 0.0 };
            dev = dev.max((s - c(want)).norm());
        }
    }
    dev
}

#[test]
fn fourier_matrix_is_unitary_up_to_order() {
    for g in ["Z2", "Z3", "Z4", "Z5", "Z2xZ2", "Z2xZ3", "Z3xZ3", "Z2xZ3xZ4"] {
        assert!(fourier_deviation(&group(g).fourier_matrix()) < 1e-12, "{g}");
    }
}

#[test]
fn self_inverse_elements_form_a_subgroup() {
    for g in ["Z2", "Z3", "Z4", "Z6", "Z2xZ2", "Z2xZ3xZ4", "Z8", "Z4xZ4"] {
        let g = group(g);
        let sub: Vec<usize> = (0..g.order()).filter(|&a| g.is_self_inverse(a)).collect();
        assert!(sub.contains(&0));
        for &a in &sub {
            for &b in &sub {
                assert!(sub.contains(&g.add(a, b)));
            }
        }
        assert_eq!(g.order() % sub.len(), 0);
        assert_eq!(sub.len(), g.self_inverse_count());
    }
}

proptest! {
    #[test]
    fn f_symbol_invariant_under_inversion(gi in 0usize..4, labels in proptest::collection::vec(0usize..64, 6)) {
        let g = group(["Z2", "Z3", "Z4", "Z2xZ2"][gi]);
        let l: Vec<usize> = labels.iter().map(|x| x % g.order()).collect();
        let e = |i: usize| g.element(i);
        let inv = |i: usize| g.element(g.neg(i));
        let a = f_symbol(&g, &e(l[0]), &e(l[1]), &e(l[2]), &e(l[3]), &e(l[4]), &e(l[5])).unwrap();
        let b = f_symbol(&g, &inv(l[0]), &inv(l[1]), &inv(l[2]), &inv(l[3]), &inv(l[4]), &inv(l[5])).unwrap();
        prop_assert_eq!(a, b);
    }
}

// ---------- tensors ----------

fn nonzero(t: &DenseTensor) -> usize {
    t.data().iter().filter(|z| z.norm() > 0.0).count()
}

#[test]
fn materialized_unit_counts() {
    for g in ["Z2", "Z3", "Z4", "Z2xZ2", "Z6"] {
        let g = group(g);
        let d = g.order();
        for n in 1..=4 {
            let p = NodeKind::GroupPlus.materialize(&g, n).unwrap();
            assert_eq!(nonzero(&p), d.pow(n as u32 - 1));
            assert!(p.data().iter().all(|z| *z == c(0.0) || *z == c(1.0)));
            let cp = NodeKind::Copy.materialize(&g, n).unwrap();
            assert_eq!(nonzero(&cp), d);
        }
    }
}

#[test]
fn impurity_limits() {
    let z2 = GroupSpec::z2();
    let x0 = NodeKind::Impurity { theta: 0.0 }.materialize(&z2, 3).unwrap();
    let plus = NodeKind::GroupPlus.materialize(&z2, 3).unwrap();
    assert!(x0.max_abs_diff(&plus).unwrap() < 1e-15);

    let mid = NodeKind::Impurity {
        theta: std::f64::consts::FRAC_PI_4,
    }
    .materialize(&z2, 3)
    .unwrap();
    for front in 0..3 {
        let mut perm = vec![front];
        perm.extend((0..3).filter(|&i| i != front));
        let m = mid.permute(&perm).unwrap().to_matrix(1);
        let sv = m.singular_values();
        let rank = sv.iter().filter(|&&s| s > 1e-12 * sv[0]).count();
        assert_eq!(rank, 1, "index {front}");
    }
}

fn arb_tensor(dims: Vec<usize>) -> impl Strategy<Value = DenseTensor> {
    let n: usize = dims.iter().product();
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(move |v| {
        DenseTensor::new(dims.clone(), v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn contract_pair_is_associative(
        a in arb_tensor(vec![3, 2]),
        b in arb_tensor(vec![2, 4, 2]),
        x in arb_tensor(vec![2, 3]),
    ) {
        // a_{i j} b_{j k l} x_{l m}
        let left = contract_pair(&contract_pair(&a, &b, &[(1, 0)]).unwrap(), &x, &[(2, 0)]).unwrap();
        let right = contract_pair(&a, &contract_pair(&b, &x, &[(2, 0)]).unwrap(), &[(1, 0)]).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
    }

    #[test]
    fn scalar_accumulator_matches_direct_product(factors in proptest::collection::vec((0.1f64..10.0, -3.0f64..3.0), 1..40)) {
        let mut acc = ScalarAccumulator::one();
        let mut direct = c(1.0);
        for (r, phi) in &factors {
            let z = Complex64::from_polar(*r, *phi);
            acc.mul(z);
            direct *= z;
        }
        prop_assert!((acc.value() - direct).norm() <= 1e-12 * direct.norm());
    }
}

// ---------- lattice states and the oracle ----------

fn config_from_index(sites: &[SiteId], d: usize, mut idx: usize) -> (EdgeConfig, Vec<usize>) {
    let mut digits = vec![0; sites.len()];
    for k in (0..sites.len()).rev() {
        digits[k] = idx % d;
        idx /= d;
    }
    (sites.iter().copied().zip(digits.iter().copied()).collect(), digits)
}

fn vertex_sums(graph: &GaugeGraph, g: &GroupSpec, digits: &[usize]) -> Vec<usize> {
    let mut sums = vec![0; graph.num_vertices];
    for (e, &(u, v)) in graph.edges.iter().enumerate() {
        sums[u] = g.add(sums[u], digits[e]);
        sums[v] = g.add(sums[v], digits[e]);
    }
    sums
}

/// Every basis configuration of small lattices: the oracle slice, the direct
/// amplitude and the Gauss law all agree.
#[test]
fn amplitudes_match_oracle_slices_and_gauss_law() {
    let cases: Vec<(LatticeSpec, &str)> = vec![
        (LatticeSpec::hexagonal(1, 1), "Z2"),
        (LatticeSpec::square(1, 1), "Z2"),
        (LatticeSpec::kagome(1, 1), "Z2"),
        (LatticeSpec::triangular(1, 1), "Z2"),
        (LatticeSpec::hexagonal(2, 2), "Z2"),
        (LatticeSpec::square(2, 2), "Z2"),
        (LatticeSpec::hexagonal(1, 1), "Z3"),
        (LatticeSpec::kagome(1, 1), "Z3"),
        (LatticeSpec::square(2, 2), "Z3"),
    ];
    for (lat, g) in cases {
        let g = group(g);
        let d = g.order();
        let ket = build_lattice_state(&lat, &g).unwrap();
        let graph = lat.gauge_graph().unwrap();
        let sites = graph.sites.clone();
        assert!(sites.len() <= if d == 2 { 12 } else { 8 });
        let full = brute_force_contract(&ket).unwrap();
        let sorted: Vec<SiteId> = ket.sites().into_iter().collect();
        for idx in 0..d.pow(sites.len() as u32) {
            let (cfg, digits) = config_from_index(&sites, d, idx);
            let a = amplitude(&ket, &cfg).unwrap();
            let slice: Vec<usize> = sorted.iter().map(|s| cfg[s]).collect();
            assert!((a - full.get(&slice)).norm() < 1e-12, "{lat:?} {cfg:?}");
            let closed = vertex_sums(&graph, &g, &digits).iter().all(|&s| s == 0);
            assert_eq!(a, c(if closed { 1.0 } else { 0.0 }), "{lat:?} {cfg:?}");
        }
    }
}

/// Simple cycles of the given length through vertex 0, as edge lists.
fn cycles(graph: &GaugeGraph, len: usize) -> Vec<Vec<usize>> {
    fn walk(
        g: &GaugeGraph,
        len: usize,
        at: usize,
        seen: &mut Vec<usize>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        for (e, &(u, v)) in g.edges.iter().enumerate() {
            if path.contains(&e) || (u != at && v != at) {
                continue;
            }
            let next = if u == at { v } else { u };
            path.push(e);
            if next == 0 && path.len() == len {
                out.push(path.clone());
            } else if path.len() < len && !seen.contains(&next) && next != 0 {
                seen.push(next);
                walk(g, len, next, seen, path, out);
                seen.pop();
            }
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(graph, len, 0, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

#[test]
fn plaquette_moves_preserve_amplitudes_z2() {
    let lat = LatticeSpec::hexagonal(2, 2);
    let z2 = GroupSpec::z2();
    let ket = build_lattice_state(&lat, &z2).unwrap();
    let graph = lat.gauge_graph().unwrap();
    let loops = cycles(&graph, 6);
    assert!(!loops.is_empty());
    let n = graph.sites.len();
    for idx in 0..1usize << n {
        let (cfg, _) = config_from_index(&graph.sites, 2, idx);
        let a = amplitude(&ket, &cfg).unwrap();
        for cyc in &loops {
            let mut flipped = cfg.clone();
            for &e in cyc {
                *flipped.get_mut(&graph.sites[e]).unwrap() ^= 1;
            }
            assert_eq!(amplitude(&ket, &flipped).unwrap(), a);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// On bipartite lattices, adding g and -g alternately around an even cycle
    /// leaves every vertex sum, hence every amplitude, unchanged.
    #[test]
    fn alternating_plaquette_moves_preserve_amplitudes(
        gi in 0usize..3,
        li in 0usize..2,
        seed in proptest::collection::vec(0usize..12, 16),
        shift in 1usize..12,
    ) {
        let g = group(["Z3", "Z4", "Z2xZ2"][gi]);
        let lat = [LatticeSpec::hexagonal(2, 2), LatticeSpec::square(2, 2)][li].clone();
        let ket = build_lattice_state(&lat, &g).unwrap();
        let graph = lat.gauge_graph().unwrap();
        let d = g.order();
        let cfg: EdgeConfig = graph.sites.iter().zip(&seed).map(|(s, &x)| (*s, x % d)).collect();
        let a = amplitude(&ket, &cfg).unwrap();
        let shift = shift % d;
        for cyc in cycles(&graph, if li == 0 { 6 } else { 4 }) {
            let mut moved = cfg.clone();
            let mut at = 0;
            for (k, &e) in cyc.iter().enumerate() {
                let (u, v) = graph.edges[e];
                at = if u == at { v } else { u };
                let x = moved.get_mut(&graph.sites[e]).unwrap();
                *x = if k % 2 == 0 { g.add(*x, shift) } else { g.add(*x, g.neg(shift)) };
            }
            prop_assert_eq!(at, 0);
            prop_assert_eq!(amplitude(&ket, &moved).unwrap(), a);
        }
    }

    #[test]
    fn contraction_order_does_not_matter(
        ki in 0usize..4,
        gi in 0usize..3,
        picks in proptest::collection::vec(0usize..64, 0..3),
    ) {
        // the naive sweep order is only affordable on the smallest networks
        let g = group(["Z2", "Z3", "Z2xZ2"][gi]);
        let ket = match ki {
            0 => build_ghz(5, &g).unwrap(),
            1 => build_lattice_state(&LatticeSpec::hexagonal(1, 1), &g).unwrap(),
            2 => build_lattice_state(&LatticeSpec::square(1, 1), &g).unwrap(),
            _ => build_lattice_state(&LatticeSpec::triangular(1, 1), &g).unwrap(),
        };
        let sites: Vec<SiteId> = ket.sites().into_iter().collect();
        let keep: BTreeSet<SiteId> = picks.iter().map(|p| sites[p % sites.len()]).collect();
        let net = build_sandwich(&ket, &keep).unwrap();
        let x = brute_force_contract_with(&net, 1e9, ContractionOrder::Greedy).unwrap();
        let y = brute_force_contract_with(&net, 1e9, ContractionOrder::NodeIdSweep).unwrap();
        prop_assert!(x.max_abs_diff(&y).unwrap() <= 1e-12 * x.max_abs().max(1.0));
    }
}

// ---------- rewrite engine ----------

fn sandwich(kind: LatticeKind, l: usize, g: &GroupSpec, picks: &[usize]) -> TensorNetwork {
    let ket = build_lattice_state(&LatticeSpec::periodic(kind, l, l), g).unwrap();
    let sites: Vec<SiteId> = ket.sites().into_iter().collect();
    let keep: BTreeSet<SiteId> = picks.iter().map(|p| sites[p % sites.len()]).collect();
    build_sandwich(&ket, &keep).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simplify_is_deterministic_and_replayable(
        ki in 0usize..4,
        l in 1usize..4,
        gi in 0usize..4,
        picks in proptest::collection::vec(0usize..200, 0..3),
    ) {
        let g = group(["Z2", "Z3", "Z4", "Z2xZ2"][gi]);
        let net = sandwich(KINDS[ki], l, &g, &picks);
        let (a, ta) = simplify(&net);
        let (b, tb) = simplify(&net);
        prop_assert_eq!(&ta, &tb);
        prop_assert_eq!(a.to_json(), b.to_json());
        let parsed = RewriteTrace::from_json_lines(&ta.to_json_lines()).unwrap();
        prop_assert_eq!(parsed.len(), ta.len());
        let replayed = replay(&net, &parsed).unwrap();
        prop_assert_eq!(replayed.to_json(), a.to_json());
    }
}

/// Whether the kept spins close a loop of the gauge lattice.
fn encloses_cycle(graph: &GaugeGraph, keep: &BTreeSet<SiteId>) -> bool {
    let mut parent: Vec<usize> = (0..graph.num_vertices).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for s in keep {
        let (u, v) = graph.edges[graph.edge_of_site(*s).unwrap()];
        let (a, b) = (root(&mut parent, u), root(&mut parent, v));
        if a == b {
            return true;
        }
        parent[a] = b;
    }
    false
}

/// Regions that enclose a gauge-lattice loop keep a larger (still tiny)
/// residual and are left out here.
#[test]
fn residual_stays_small() {
    for kind in KINDS {
        for l in 2..=4 {
            let graph = LatticeSpec::periodic(kind, l, l).gauge_graph().unwrap();
            for g in ["Z2", "Z3", "Z4", "Z2xZ2"] {
                let g = group(g);
                for (k, step) in (0..=3usize).flat_map(|k| [(k, 1), (k, 5), (k, 7)]) {
                    let picks: Vec<usize> = (0..k).map(|i| i * step).collect();
                    let net = sandwich(kind, l, &g, &picks);
                    if encloses_cycle(&graph, &net.sites()) {
                        continue;
                    }
                    let open = net.sites().len();
                    let r = contract(&net, &ContractOptions::default()).unwrap();
                    if open == 0 {
                        assert_eq!(r.residual_nodes, 0, "{kind:?} {l} closed");
                    } else {
                        assert!(r.residual_nodes <= 4 * open, "{kind:?} {l} {k}: {}", r.residual_nodes);
                    }
                }
            }
        }
    }
}

// ---------- density matrices ----------

fn as_matrix(rho: &DenseTensor) -> DMatrix<Complex64> {
    rho.to_matrix(rho.rank() / 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rdms_are_density_matrices(
        ki in 0usize..4,
        l in 1usize..3,
        gi in 0usize..4,
        picks in proptest::collection::vec(0usize..200, 1..4),
    ) {
        let g = group(["Z2", "Z3", "Z4", "Z2xZ2"][gi]);
        let ket = build_lattice_state(&LatticeSpec::periodic(KINDS[ki], l, l), &g).unwrap();
        let sites: Vec<SiteId> = ket.sites().into_iter().collect();
        let keep: BTreeSet<SiteId> = picks.iter().map(|p| sites[p % sites.len()]).collect();
        let m = as_matrix(&rdm_with(&ket, &keep, &EvalOptions::default()).unwrap());
        let asym = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(asym < 1e-12);
        prop_assert!((m.trace() - c(1.0)).norm() < 1e-12);
        let h = (&m + m.adjoint()).scale(0.5);
        let min = h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min > -1e-10);
    }
}

#[test]
fn vertex_neighbourhood_rdm_is_maximally_mixed() {
    for lat in [
        LatticeSpec::hexagonal(2, 2),
        LatticeSpec::hexagonal(3, 3),
        LatticeSpec::square(4, 4),
    ] {
        for g in ["Z2", "Z3", "Z4", "Z2xZ2"] {
            let g = group(g);
            let d = g.order();
            let ket = build_lattice_state(&lat, &g).unwrap();
            let graph = lat.gauge_graph().unwrap();
            let at: Vec<SiteId> = graph.incident()[0].iter().map(|&e| graph.sites[e]).collect();
            for skip in 0..at.len() {
                let keep: BTreeSet<SiteId> = at
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, s)| *s)
                    .collect();
                let m = as_matrix(&rdm_with(&ket, &keep, &EvalOptions::default()).unwrap());
                let n = m.nrows();
                assert_eq!(n, d.pow(keep.len() as u32));
                let dev = (&m - DMatrix::<Complex64>::identity(n, n).scale(1.0 / n as f64))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                assert!(dev < 1e-10, "{lat:?} skip {skip}: {dev:e}");
            }
        }
    }
}

#[test]
fn vertex_rdms_do_not_depend_on_lattice_size() {
    let z2 = GroupSpec::z2();
    let mut seen: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)> = Vec::new();
    for l in 2..=4 {
        let lat = LatticeSpec::hexagonal(l, l);
        let ket = build_lattice_state(&lat, &z2).unwrap();
        let graph = lat.gauge_graph().unwrap();
        let at: Vec<SiteId> = graph.incident()[0].iter().map(|&e| graph.sites[e]).collect();
        let two: BTreeSet<SiteId> = at[..2].iter().copied().collect();
        let three: BTreeSet<SiteId> = at.iter().copied().collect();
        let opts = EvalOptions::default();
        seen.push((
            as_matrix(&rdm_with(&ket, &two, &opts).unwrap()),
            as_matrix(&rdm_with(&ket, &three, &opts).unwrap()),
        ));
    }
    for (two, three) in &seen[1..] {
        assert!((two - &seen[0].0).iter().all(|z| z.norm() < 1e-12));
        assert!((three - &seen[0].1).iter().all(|z| z.norm() < 1e-12));
    }
}
