//! Undirected simple graphs, the generator families used for the dataset,
//! and the plain-text edge-list format.
//!
//! Edge-list format: the first non-comment line holds the vertex count `n`,
//! every following non-empty line holds one edge `u v` with 0-based
//! endpoints. Lines starting with `#` are comments. Serialization always
//! emits the canonical form: `u < v`, edges sorted lexicographically.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Edge = (usize, usize);

/// An undirected simple graph on vertices `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    matrix: Vec<bool>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range
    /// endpoints. Edge orientation in the input does not matter.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::Range { vertex: v, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(Self::from_canonical(n, set.into_iter().collect()))
    }

    fn from_canonical(n: usize, edges: Vec<Edge>) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut matrix = vec![false; n * n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
            matrix[u * n + v] = true;
            matrix[v * n + u] = true;
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph {
            n,
            edges,
            adj,
            matrix,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Canonical edges, `u < v`, sorted.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.matrix[u * self.n + v]
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Removes the given edges; the vertex set is unchanged.
    pub fn delete_edges(&self, removed: &[Edge]) -> Result<Graph> {
        let mut drop = BTreeSet::new();
        for &(a, b) in removed {
            let e = (a.min(b), a.max(b));
            if a >= self.n || b >= self.n || !self.has_edge(a, b) {
                return Err(Error::UnknownEdge(e.0, e.1));
            }
            drop.insert(e);
        }
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|e| !drop.contains(e))
            .collect();
        Ok(Self::from_canonical(self.n, edges))
    }

    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut n = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("{s:?}: {e}"),
                })
            };
            match n {
                None => {
                    if fields.len() != 1 {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "expected the vertex count".into(),
                        });
                    }
                    n = Some(parse(fields[0])?);
                }
                Some(_) => {
                    if fields.len() != 2 {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("expected \"u v\", got {line:?}"),
                        });
                    }
                    edges.push((parse(fields[0])?, parse(fields[1])?));
                }
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "missing vertex count".into(),
        })?;
        Graph::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// Named graphs bundled with the crate, all with large automorphism groups.
pub const NAMED_GRAPHS: &[(&str, &str)] = &[
    ("petersen", include_str!("../data/named/petersen.txt")),
    ("heawood", include_str!("../data/named/heawood.txt")),
    (
        "moebius-kantor",
        include_str!("../data/named/moebius-kantor.txt"),
    ),
    ("pappus", include_str!("../data/named/pappus.txt")),
    (
        "dodecahedron",
        include_str!("../data/named/dodecahedron.txt"),
    ),
    ("desargues", include_str!("../data/named/desargues.txt")),
    ("icosahedron", include_str!("../data/named/icosahedron.txt")),
];

pub fn named_graph(name: &str) -> Result<Graph> {
    NAMED_GRAPHS
        .iter()
        .find(|(k, _)| *k == name)
        .ok_or_else(|| Error::InvalidParams(format!("unknown named graph {name:?}")))
        .and_then(|(_, text)| Graph::parse_edge_list(text))
}

const MAX_RANDOM_ATTEMPTS: usize = 1000;

/// A graph family with its parameters. The textual form is
/// `name:p1,p2,...` (e.g. `cycle:7`, `grid2d:3,4`, `hand-picked:petersen`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphFamily {
    Complete {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    /// `n` vertices in total: one center and `n - 1` leaves.
    Star {
        n: usize,
    },
    /// `n` vertices in total: one hub and a rim cycle of `n - 1`.
    Wheel {
        n: usize,
    },
    /// The 2 x `k` grid.
    Ladder {
        k: usize,
    },
    /// The prism over a `k`-cycle.
    CircularLadder {
        k: usize,
    },
    Antiprism {
        k: usize,
    },
    Grid2d {
        rows: usize,
        cols: usize,
    },
    RandomRegular {
        n: usize,
        k: usize,
        seed: u64,
    },
    /// Random spanning tree plus `extra` random edges, resampled until the
    /// automorphism group is trivial.
    TrivialAut {
        n: usize,
        extra: usize,
        seed: u64,
    },
    HandPicked {
        name: String,
    },
}

impl GraphFamily {
    pub fn name(&self) -> &'static str {
        match self {
            GraphFamily::Complete { .. } => "complete",
            GraphFamily::Cycle { .. } => "cycle",
            GraphFamily::Star { .. } => "star",
            GraphFamily::Wheel { .. } => "wheel",
            GraphFamily::Ladder { .. } => "ladder",
            GraphFamily::CircularLadder { .. } => "circular-ladder",
            GraphFamily::Antiprism { .. } => "antiprism",
            GraphFamily::Grid2d { .. } => "grid2d",
            GraphFamily::RandomRegular { .. } => "random-regular",
            GraphFamily::TrivialAut { .. } => "trivial-aut",
            GraphFamily::HandPicked { .. } => "hand-picked",
        }
    }

    /// Label used to stratify splits. Random regular graphs are split by degree.
    pub fn stratum(&self) -> String {
        match self {
            GraphFamily::RandomRegular { k, .. } => format!("random-{k}-regular"),
            other => other.name().to_string(),
        }
    }

    /// Vertex count of the generated graph, without generating it.
    pub fn vertex_count(&self) -> Option<usize> {
        Some(match self {
            GraphFamily::Complete { n }
            | GraphFamily::Cycle { n }
            | GraphFamily::Star { n }
            | GraphFamily::Wheel { n }
            | GraphFamily::RandomRegular { n, .. }
            | GraphFamily::TrivialAut { n, .. } => *n,
            GraphFamily::Ladder { k }
            | GraphFamily::CircularLadder { k }
            | GraphFamily::Antiprism { k } => 2 * k,
            GraphFamily::Grid2d { rows, cols } => rows * cols,
            GraphFamily::HandPicked { .. } => return None,
        })
    }

    /// Returns a copy with the seed replaced, for random families.
    pub fn with_seed(&self, seed: u64) -> GraphFamily {
        let mut out = self.clone();
        match &mut out {
            GraphFamily::RandomRegular { seed: s, .. }
            | GraphFamily::TrivialAut { seed: s, .. } => *s = seed,
            _ => {}
        }
        out
    }

    pub fn generate(&self) -> Result<Graph> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        match *self {
            GraphFamily::Complete { n } => {
                if n < 2 {
                    return bad(format!("complete graph needs n >= 2, got {n}"));
                }
                let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
                Graph::new(n, edges)
            }
            GraphFamily::Cycle { n } => {
                if n < 3 {
                    return bad(format!("cycle needs n >= 3, got {n}"));
                }
                Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
            }
            GraphFamily::Star { n } => {
                if n < 2 {
                    return bad(format!("star needs n >= 2, got {n}"));
                }
                Graph::new(n, (1..n).map(|i| (0, i)))
            }
            GraphFamily::Wheel { n } => {
                if n < 4 {
                    return bad(format!("wheel needs n >= 4, got {n}"));
                }
                let rim = n - 1;
                let spokes = (1..n).map(|i| (0, i));
                let ring = (0..rim).map(|i| (1 + i, 1 + (i + 1) % rim));
                Graph::new(n, spokes.chain(ring))
            }
            GraphFamily::Ladder { k } => {
                if k < 2 {
                    return bad(format!("ladder needs k >= 2, got {k}"));
                }
                GraphFamily::Grid2d { rows: 2, cols: k }.generate()
            }
            GraphFamily::CircularLadder { k } => {
                if k < 3 {
                    return bad(format!("circular ladder needs k >= 3, got {k}"));
                }
                let outer = (0..k).map(|i| (i, (i + 1) % k));
                let inner = (0..k).map(|i| (k + i, k + (i + 1) % k));
                let rungs = (0..k).map(|i| (i, k + i));
                Graph::new(2 * k, outer.chain(inner).chain(rungs))
            }
            GraphFamily::Antiprism { k } => {
                if k < 3 {
                    return bad(format!("antiprism needs k >= 3, got {k}"));
                }
                let outer = (0..k).map(|i| (i, (i + 1) % k));
                let inner = (0..k).map(|i| (k + i, k + (i + 1) % k));
                let straight = (0..k).map(|i| (i, k + i));
                let diagonal = (0..k).map(|i| ((i + 1) % k, k + i));
                Graph::new(2 * k, outer.chain(inner).chain(straight).chain(diagonal))
            }
            GraphFamily::Grid2d { rows, cols } => {
                if rows < 1 || cols < 1 || rows * cols < 2 {
                    return bad(format!("grid needs at least 2 cells, got {rows}x{cols}"));
                }
                let id = |r: usize, c: usize| r * cols + c;
                let mut edges = Vec::new();
                for r in 0..rows {
                    for c in 0..cols {
                        if c + 1 < cols {
                            edges.push((id(r, c), id(r, c + 1)));
                        }
                        if r + 1 < rows {
                            edges.push((id(r, c), id(r + 1, c)));
                        }
                    }
                }
                Graph::new(rows * cols, edges)
            }
            GraphFamily::RandomRegular { n, k, seed } => random_regular(n, k, seed),
            GraphFamily::TrivialAut { n, extra, seed } => trivial_aut(n, extra, seed),
            GraphFamily::HandPicked { ref name } => named_graph(name),
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.name();
        match self {
            GraphFamily::Complete { n }
            | GraphFamily::Cycle { n }
            | GraphFamily::Star { n }
            | GraphFamily::Wheel { n } => write!(f, "{name}:{n}"),
            GraphFamily::Ladder { k }
            | GraphFamily::CircularLadder { k }
            | GraphFamily::Antiprism { k } => write!(f, "{name}:{k}"),
            GraphFamily::Grid2d { rows, cols } => write!(f, "{name}:{rows},{cols}"),
            GraphFamily::RandomRegular { n, k, seed } => write!(f, "{name}:{n},{k}@{seed}"),
            GraphFamily::TrivialAut { n, extra, seed } => {
                write!(f, "{name}:{n},{extra}@{seed}")
            }
            GraphFamily::HandPicked { name: g } => write!(f, "{name}:{g}"),
        }
    }
}

impl FromStr for GraphFamily {
    type Err = Error;

    /// Parses `name:params[@seed]`. A missing seed defaults to 0.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("cannot parse graph family {s:?}"));
        let (name, rest) = s.split_once(':').ok_or_else(bad)?;
        let (params, seed) = match rest.split_once('@') {
            Some((p, seed)) => (p, seed.parse::<u64>().map_err(|_| bad())?),
            None => (rest, 0),
        };
        if name == "hand-picked" {
            return Ok(GraphFamily::HandPicked {
                name: params.to_string(),
            });
        }
        let nums = params
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        let arity = |k: usize| if nums.len() == k { Ok(()) } else { Err(bad()) };
        Ok(match name {
            "complete" => {
                arity(1)?;
                GraphFamily::Complete { n: nums[0] }
            }
            "cycle" => {
                arity(1)?;
                GraphFamily::Cycle { n: nums[0] }
            }
            "star" => {
                arity(1)?;
                GraphFamily::Star { n: nums[0] }
            }
            "wheel" => {
                arity(1)?;
                GraphFamily::Wheel { n: nums[0] }
            }
            "ladder" => {
                arity(1)?;
                GraphFamily::Ladder { k: nums[0] }
            }
            "circular-ladder" => {
                arity(1)?;
                GraphFamily::CircularLadder { k: nums[0] }
            }
            "antiprism" => {
                arity(1)?;
                GraphFamily::Antiprism { k: nums[0] }
            }
            "grid2d" => {
                arity(2)?;
                GraphFamily::Grid2d {
                    rows: nums[0],
                    cols: nums[1],
                }
            }
            "random-regular" => {
                arity(2)?;
                GraphFamily::RandomRegular {
                    n: nums[0],
                    k: nums[1],
                    seed,
                }
            }
            "trivial-aut" => {
                if nums.is_empty() || nums.len() > 2 {
                    return Err(bad());
                }
                GraphFamily::TrivialAut {
                    n: nums[0],
                    extra: nums.get(1).copied().unwrap_or(0),
                    seed,
                }
            }
            _ => return Err(bad()),
        })
    }
}

/// Configuration model with rejection of loops, multi-edges and
/// disconnected results.
fn random_regular(n: usize, k: usize, seed: u64) -> Result<Graph> {
    if k == 0 || k >= n || !(n * k).is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "no connected {k}-regular graph on {n} vertices"
        )));
    }
    // Pair stubs one edge at a time, rejecting loops and repeats as they come
    // up, and restart when no valid pair is left.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..MAX_RANDOM_ATTEMPTS {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
        let mut edges = BTreeSet::new();
        while !stubs.is_empty() {
            let mut placed = false;
            for _ in 0..4 * stubs.len() {
                let i = rng.gen_range(0..stubs.len());
                let j = rng.gen_range(0..stubs.len());
                let (a, b) = (stubs[i], stubs[j]);
                if a == b || edges.contains(&(a.min(b), a.max(b))) {
                    continue;
                }
                edges.insert((a.min(b), a.max(b)));
                stubs.swap_remove(i.max(j));
                stubs.swap_remove(i.min(j));
                placed = true;
                break;
            }
            if !placed {
                continue 'attempt;
            }
        }
        let g = Graph::from_canonical(n, edges.into_iter().collect());
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::InvalidParams(format!(
        "random {k}-regular graph on {n} vertices not found in {MAX_RANDOM_ATTEMPTS} attempts"
    )))
}

fn trivial_aut(n: usize, extra: usize, seed: u64) -> Result<Graph> {
    // The smallest asymmetric graphs have 6 vertices.
    if n < 6 || n - 1 + extra > n * (n - 1) / 2 {
        return Err(Error::InvalidParams(format!(
            "no asymmetric graph with {n} vertices and {extra} extra edges is generated"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RANDOM_ATTEMPTS {
        // Random labelled tree from a Pruefer sequence.
        let pruefer: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
        let mut degree = vec![1usize; n];
        for &v in &pruefer {
            degree[v] += 1;
        }
        let mut edges = BTreeSet::new();
        for &v in &pruefer {
            let leaf = (0..n)
                .find(|&u| degree[u] == 1)
                .expect("tree always has a leaf");
            edges.insert((leaf.min(v), leaf.max(v)));
            degree[leaf] -= 1;
            degree[v] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
        edges.insert((rest[0], rest[1]));
        while edges.len() < n - 1 + extra {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let g = Graph::from_canonical(n, edges.into_iter().collect());
        let grp = crate::autgroup::automorphism_generators(&g)?;
        if grp.generators().is_empty() {
            return Ok(g);
        }
    }
    Err(Error::InvalidParams(format!(
        "no asymmetric graph on {n} vertices found in {MAX_RANDOM_ATTEMPTS} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees(g: &Graph) -> Vec<usize> {
        (0..g.n()).map(|v| g.degree(v)).collect()
    }

    #[test]
    fn complete_and_star_sizes() {
        let k4 = GraphFamily::Complete { n: 4 }.generate().unwrap();
        assert_eq!(k4.num_edges(), 6);
        let star = GraphFamily::Star { n: 21 }.generate().unwrap();
        assert_eq!(star.num_edges(), 20);
        assert_eq!(star.degree(0), 20);
    }

    #[test]
    fn random_regular_is_regular_and_reproducible() {
        let fam = GraphFamily::RandomRegular {
            n: 10,
            k: 3,
            seed: 7,
        };
        let g = fam.generate().unwrap();
        assert_eq!(g.num_edges(), 15);
        assert!(degrees(&g).iter().all(|&d| d == 3));
        assert_eq!(g, fam.generate().unwrap());
        let other = fam.with_seed(8).generate().unwrap();
        assert_ne!(g, other);
    }

    #[test]
    fn impossible_regular_parameters() {
        let err = GraphFamily::RandomRegular {
            n: 5,
            k: 3,
            seed: 0,
        }
        .generate();
        assert!(matches!(err, Err(Error::InvalidParams(_))));
        assert!(GraphFamily::RandomRegular {
            n: 4,
            k: 4,
            seed: 0
        }
        .generate()
        .is_err());
    }

    #[test]
    fn parse_examples() {
        let g = Graph::parse_edge_list("3\n0 1\n1 2\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert!(matches!(
            Graph::parse_edge_list("2\n0 0\n"),
            Err(Error::SelfLoop(0))
        ));
        assert!(matches!(
            Graph::parse_edge_list("2\n0 2\n"),
            Err(Error::Range { vertex: 2, n: 2 })
        ));
        assert!(matches!(
            Graph::parse_edge_list("3\n0 1\n1 0\n"),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            Graph::parse_edge_list("3\n0 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn parse_skips_comments_and_canonicalizes() {
        let g = Graph::parse_edge_list("# tri\n3\n\n2 1\n# mid\n0 2\n1 0\n").unwrap();
        assert_eq!(g.to_edge_list(), "3\n0 1\n0 2\n1 2\n");
    }

    #[test]
    fn delete_edges_examples() {
        let k4 = GraphFamily::Complete { n: 4 }.generate().unwrap();
        assert_eq!(k4.delete_edges(&[(0, 1)]).unwrap().num_edges(), 5);
        assert_eq!(k4.delete_edges(&[]).unwrap(), k4);

        let c5 = GraphFamily::Cycle { n: 5 }.generate().unwrap();
        let path = c5.delete_edges(&[(4, 0)]).unwrap();
        assert_eq!(path.n(), 5);
        assert_eq!(path.edges(), &[(0, 1), (1, 2), (2, 3), (3, 4)]);

        let err = c5.delete_edges(&[(0, 2)]);
        assert!(matches!(err, Err(Error::UnknownEdge(0, 2))));
    }

    #[test]
    fn family_string_round_trip() {
        for s in [
            "complete:5",
            "grid2d:3,4",
            "random-regular:10,3@7",
            "trivial-aut:9,1@3",
            "hand-picked:petersen",
            "circular-ladder:6",
        ] {
            let fam: GraphFamily = s.parse().unwrap();
            assert_eq!(fam.to_string(), s);
        }
        assert!("wheel".parse::<GraphFamily>().is_err());
        assert!("grid2d:3".parse::<GraphFamily>().is_err());
    }

    #[test]
    fn named_graphs_load() {
        for (name, _) in NAMED_GRAPHS {
            let g = named_graph(name).unwrap();
            assert!(g.is_connected());
            assert!(degrees(&g).iter().all(|&d| d == degrees(&g)[0]));
        }
        assert!(named_graph("nope").is_err());
    }

    #[test]
    fn structured_families_have_expected_shape() {
        let w = GraphFamily::Wheel { n: 6 }.generate().unwrap();
        assert_eq!(w.num_edges(), 10);
        let l = GraphFamily::Ladder { k: 4 }.generate().unwrap();
        assert_eq!((l.n(), l.num_edges()), (8, 10));
        let cl = GraphFamily::CircularLadder { k: 5 }.generate().unwrap();
        assert!(degrees(&cl).iter().all(|&d| d == 3));
        let ap = GraphFamily::Antiprism { k: 5 }.generate().unwrap();
        assert!(degrees(&ap).iter().all(|&d| d == 4));
        let grid = GraphFamily::Grid2d { rows: 3, cols: 4 }.generate().unwrap();
        assert_eq!(grid.num_edges(), 17);
    }
}
