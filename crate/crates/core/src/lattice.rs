//! Gauge-lattice graphs: vertices carry the Gauss-law tensors, edges carry spins.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{validation, Error, Result};

/// Identifier of a physical spin: unit cell coordinates plus a sublattice index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId {
    pub x: u32,
    pub y: u32,
    pub sub: u32,
}

impl SiteId {
    pub fn new(x: u32, y: u32, sub: u32) -> Self {
        SiteId { x, y, sub }
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.x, self.y, self.sub)
    }
}

impl FromStr for SiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let parse = |p: &str| {
            p.parse::<u32>()
                .map_err(|_| Error::Validation(format!("bad site id {s:?}, expected x:y:sub")))
        };
        match parts.as_slice() {
            [x, y, k] => Ok(SiteId::new(parse(x)?, parse(y)?, parse(k)?)),
            [k] => Ok(SiteId::new(0, 0, parse(k)?)),
            _ => validation(format!("bad site id {s:?}, expected x:y:sub")),
        }
    }
}

impl Serialize for SiteId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SiteId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Hexagonal,
    Square,
    Kagome,
    Triangular,
    Custom,
}

impl FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hex" | "hexagonal" | "honeycomb" => Ok(LatticeKind::Hexagonal),
            "square" | "sq" => Ok(LatticeKind::Square),
            "kagome" | "kag" => Ok(LatticeKind::Kagome),
            "triangular" | "tri" => Ok(LatticeKind::Triangular),
            "custom" => Ok(LatticeKind::Custom),
            other => validation(format!("unknown lattice kind {other:?}")),
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LatticeKind::Hexagonal => "hexagonal",
            LatticeKind::Square => "square",
            LatticeKind::Kagome => "kagome",
            LatticeKind::Triangular => "triangular",
            LatticeKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// A multigraph with spins on its edges. Parallel edges and self-loops are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeGraph {
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub sites: Vec<SiteId>,
}

impl GaugeGraph {
    /// A custom graph whose sites are numbered by edge index.
    pub fn from_edges(num_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let sites = (0..edges.len() as u32).map(|e| SiteId::new(0, 0, e)).collect();
        let g = GaugeGraph {
            num_vertices,
            edges,
            sites,
        };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<()> {
        for &(u, v) in &self.edges {
            if u >= self.num_vertices || v >= self.num_vertices {
                return validation(format!(
                    "edge ({u}, {v}) refers to a vertex outside 0..{}",
                    self.num_vertices
                ));
            }
        }
        if self.sites.len() != self.edges.len() {
            return validation("one site id per edge is required");
        }
        let mut sorted = self.sites.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.sites.len() {
            return validation("site ids must be distinct");
        }
        Ok(())
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges at each vertex in port order; a self-loop appears twice.
    pub fn incident(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.num_vertices];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            inc[u].push(e);
            inc[v].push(e);
        }
        inc
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| (a == v) as usize + (b == v) as usize)
            .sum()
    }

    pub fn edge_of_site(&self, site: SiteId) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    pub fn is_connected(&self) -> bool {
        if self.num_vertices == 0 {
            return true;
        }
        self.components().iter().all(|&c| c == 0)
    }

    fn components(&self) -> Vec<usize> {
        let inc = self.incident();
        let mut comp = vec![usize::MAX; self.num_vertices];
        let mut next = 0;
        for s in 0..self.num_vertices {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &e in &inc[v] {
                    let (a, b) = self.edges[e];
                    let w = if a == v { b } else { a };
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// A proper two-coloring of the vertices, if one exists.
    pub fn two_coloring(&self) -> Option<Vec<u8>> {
        let inc = self.incident();
        let mut color = vec![u8::MAX; self.num_vertices];
        for s in 0..self.num_vertices {
            if color[s] != u8::MAX {
                continue;
            }
            color[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &e in &inc[v] {
                    let (a, b) = self.edges[e];
                    let w = if a == v { b } else { a };
                    if color[w] == u8::MAX {
                        color[w] = 1 - color[v];
                        queue.push_back(w);
                    } else if color[w] == color[v] {
                        return None;
                    }
                }
            }
        }
        Some(color)
    }

    pub fn is_bipartite(&self) -> bool {
        self.two_coloring().is_some()
    }

    /// The lowest-indexed triangle of three distinct vertices, returned as
    /// three edge indices.
    pub fn first_triangle(&self) -> Option<[usize; 3]> {
        let inc = self.incident();
        for v in 0..self.num_vertices {
            for &e1 in &inc[v] {
                let a = self.other_end(e1, v);
                if a == v {
                    continue;
                }
                for &e2 in &inc[a] {
                    let b = self.other_end(e2, a);
                    if e2 == e1 || b == a || b == v {
                        continue;
                    }
                    for &e3 in &inc[b] {
                        if self.other_end(e3, b) == v && e3 != e2 && e3 != e1 {
                            return Some([e1, e2, e3]);
                        }
                    }
                }
            }
        }
        None
    }

    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }
}

/// A named periodic lattice or a custom gauge graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub cells: (usize, usize),
    pub periodic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<GaugeGraph>,
}

impl LatticeSpec {
    pub fn periodic(kind: LatticeKind, l1: usize, l2: usize) -> Self {
        LatticeSpec {
            kind,
            cells: (l1, l2),
            periodic: true,
            custom: None,
        }
    }

    pub fn hexagonal(l1: usize, l2: usize) -> Self {
        Self::periodic(LatticeKind::Hexagonal, l1, l2)
    }

    pub fn square(l1: usize, l2: usize) -> Self {
        Self::periodic(LatticeKind::Square, l1, l2)
    }

    pub fn kagome(l1: usize, l2: usize) -> Self {
        Self::periodic(LatticeKind::Kagome, l1, l2)
    }

    pub fn triangular(l1: usize, l2: usize) -> Self {
        Self::periodic(LatticeKind::Triangular, l1, l2)
    }

    pub fn custom(graph: GaugeGraph) -> Self {
        LatticeSpec {
            kind: LatticeKind::Custom,
            cells: (1, 1),
            periodic: false,
            custom: Some(graph),
        }
    }

    /// Vertices and edges of one unit cell.
    pub fn cell_counts(kind: LatticeKind) -> Option<(usize, usize)> {
        match kind {
            LatticeKind::Hexagonal => Some((2, 3)),
            LatticeKind::Square => Some((1, 2)),
            LatticeKind::Kagome => Some((3, 6)),
            LatticeKind::Triangular => Some((1, 3)),
            LatticeKind::Custom => None,
        }
    }

    /// Expands the specification into its gauge graph.
    ///
    /// Vertex `k` of cell `(x, y)` has index `k + nv (x + L1 y)`; edge `k` of that
    /// cell has index `k + ne (x + L1 y)` and site id `x:y:k`.
    pub fn gauge_graph(&self) -> Result<GaugeGraph> {
        if self.kind == LatticeKind::Custom {
            let g = self
                .custom
                .clone()
                .ok_or_else(|| Error::Validation("custom lattice without a graph".into()))?;
            g.check()?;
            if !g.is_connected() {
                return validation("custom gauge graph must be connected");
            }
            return Ok(g);
        }
        if !self.periodic {
            return Err(Error::Unsupported(format!(
                "open boundaries are not supported for the {} lattice",
                self.kind
            )));
        }
        let (l1, l2) = self.cells;
        if l1 == 0 || l2 == 0 {
            return validation("cell counts must be at least 1");
        }
        let (nv, _) = Self::cell_counts(self.kind).expect("named lattice");
        let vid = |x: i64, y: i64, k: usize| {
            let x = x.rem_euclid(l1 as i64) as usize;
            let y = y.rem_euclid(l2 as i64) as usize;
            k + nv * (x + l1 * y)
        };
        let mut edges = Vec::new();
        let mut sites = Vec::new();
        for y in 0..l2 as i64 {
            for x in 0..l1 as i64 {
                let cell: Vec<(usize, usize)> = match self.kind {
                    LatticeKind::Hexagonal => vec![
                        (vid(x, y, 0), vid(x, y, 1)),
                        (vid(x, y, 0), vid(x - 1, y, 1)),
                        (vid(x, y, 0), vid(x, y - 1, 1)),
                    ],
                    LatticeKind::Square => vec![(vid(x, y, 0), vid(x + 1, y, 0)), (vid(x, y, 0), vid(x, y + 1, 0))],
                    LatticeKind::Kagome => vec![
                        (vid(x, y, 0), vid(x, y, 1)),
                        (vid(x, y, 1), vid(x, y, 2)),
                        (vid(x, y, 2), vid(x, y, 0)),
                        (vid(x, y, 0), vid(x - 1, y, 1)),
                        (vid(x - 1, y, 1), vid(x, y - 1, 2)),
                        (vid(x, y - 1, 2), vid(x, y, 0)),
                    ],
                    LatticeKind::Triangular => vec![
                        (vid(x, y, 0), vid(x + 1, y, 0)),
                        (vid(x, y, 0), vid(x, y + 1, 0)),
                        (vid(x, y, 0), vid(x + 1, y + 1, 0)),
                    ],
                    LatticeKind::Custom => unreachable!(),
                };
                for (k, e) in cell.into_iter().enumerate() {
                    edges.push(e);
                    sites.push(SiteId::new(x as u32, y as u32, k as u32));
                }
            }
        }
        Ok(GaugeGraph {
            num_vertices: nv * l1 * l2,
            edges,
            sites,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_cell_counts() {
        let g = LatticeSpec::hexagonal(2, 2).gauge_graph().unwrap();
        assert_eq!((g.num_vertices, g.num_edges()), (8, 12));
        assert!((0..8).all(|v| g.degree(v) == 3));
        let g = LatticeSpec::square(2, 2).gauge_graph().unwrap();
        assert_eq!((g.num_vertices, g.num_edges()), (4, 8));
        assert!((0..4).all(|v| g.degree(v) == 4));
        let g = LatticeSpec::kagome(1, 1).gauge_graph().unwrap();
        assert_eq!((g.num_vertices, g.num_edges()), (3, 6));
        assert!((0..3).all(|v| g.degree(v) == 4));
        let g = LatticeSpec::triangular(3, 3).gauge_graph().unwrap();
        assert_eq!((g.num_vertices, g.num_edges()), (9, 27));
        assert!((0..9).all(|v| g.degree(v) == 6));
    }

    #[test]
    fn test_bipartiteness() {
        assert!(LatticeSpec::hexagonal(3, 3).gauge_graph().unwrap().is_bipartite());
        assert!(LatticeSpec::square(2, 4).gauge_graph().unwrap().is_bipartite());
        assert!(!LatticeSpec::square(3, 3).gauge_graph().unwrap().is_bipartite());
        assert!(!LatticeSpec::kagome(2, 2).gauge_graph().unwrap().is_bipartite());
        assert!(!LatticeSpec::triangular(2, 2).gauge_graph().unwrap().is_bipartite());
    }

    #[test]
    fn test_triangles() {
        let g = LatticeSpec::kagome(2, 1).gauge_graph().unwrap();
        let [a, b, c] = g.first_triangle().unwrap();
        let mut vs: Vec<usize> = [a, b, c].iter().flat_map(|&e| [g.edges[e].0, g.edges[e].1]).collect();
        vs.sort();
        vs.dedup();
        assert_eq!(vs.len(), 3);
        assert!(LatticeSpec::hexagonal(3, 3)
            .gauge_graph()
            .unwrap()
            .first_triangle()
            .is_none());
    }

    #[test]
    fn test_open_boundary_rejected() {
        let mut spec = LatticeSpec::hexagonal(2, 2);
        spec.periodic = false;
        assert!(matches!(spec.gauge_graph(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn test_site_id_round_trip() {
        let s = SiteId::new(3, 1, 2);
        assert_eq!(s.to_string().parse::<SiteId>().unwrap(), s);
        assert_eq!("5".parse::<SiteId>().unwrap(), SiteId::new(0, 0, 5));
        assert!("1:2".parse::<SiteId>().is_err());
    }

    #[test]
    fn test_custom_graph_checks() {
        assert!(GaugeGraph::from_edges(2, vec![(0, 2)]).is_err());
        let g = GaugeGraph::from_edges(3, vec![(0, 1)]).unwrap();
        assert!(LatticeSpec::custom(g).gauge_graph().is_err());
    }
}
