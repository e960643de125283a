//! Automorphism groups of graphs.
//!
//! Generators are found by individualization-refinement: the first path of
//! the search tree is followed down to a discrete partition, and then, from
//! the deepest level up, every vertex of each target cell that is not yet
//! known to share an orbit with the first-path choice gets a subtree search
//! for a leaf equivalent to the first leaf. The generators found this way
//! form a strong generating set relative to the first-path base.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::perm::{Perm, PermGroup};

/// Default cap on the number of search-tree nodes visited.
pub const DEFAULT_SEARCH_BUDGET: u64 = 10_000_000;

/// An ordered partition of the vertices. `colors[v]` is the index of the
/// cell holding `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    colors: Vec<usize>,
    cells: Vec<Vec<usize>>,
}

impl Coloring {
    pub fn uniform(n: usize) -> Self {
        Coloring {
            colors: vec![0; n],
            cells: if n == 0 {
                Vec::new()
            } else {
                vec![(0..n).collect()]
            },
        }
    }

    /// Builds a coloring from arbitrary color ids; cells are ordered by
    /// color id and ids are compacted to `0..k`.
    pub fn from_colors(raw: &[usize]) -> Self {
        let mut ids: Vec<usize> = raw.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut cells = vec![Vec::new(); ids.len()];
        let mut colors = vec![0; raw.len()];
        for (v, c) in raw.iter().enumerate() {
            let k = ids.binary_search(c).unwrap();
            colors[v] = k;
            cells[k].push(v);
        }
        Coloring { colors, cells }
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn is_discrete(&self) -> bool {
        self.cells.len() == self.colors.len()
    }

    fn rebuild_colors(&mut self) {
        for (c, cell) in self.cells.iter().enumerate() {
            for &v in cell {
                self.colors[v] = c;
            }
        }
    }

    /// Splits `v` off its cell into a singleton placed just before the rest.
    fn individualize(&self, v: usize) -> Coloring {
        let c = self.colors[v];
        let mut cells = Vec::with_capacity(self.cells.len() + 1);
        cells.extend_from_slice(&self.cells[..c]);
        cells.push(vec![v]);
        cells.push(self.cells[c].iter().copied().filter(|&u| u != v).collect());
        cells.extend_from_slice(&self.cells[c + 1..]);
        let mut out = Coloring {
            colors: self.colors.clone(),
            cells,
        };
        out.rebuild_colors();
        out
    }

    /// First smallest non-singleton cell.
    fn target_cell(&self) -> Option<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.len() > 1)
            .min_by_key(|(i, c)| (c.len(), *i))
            .map(|(i, _)| i)
    }
}

/// Cell sizes plus the quotient matrix of an equitable partition. Equal for
/// any two nodes related by an automorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
struct NodeInvariant {
    sizes: Vec<usize>,
    quotient: Vec<u32>,
}

fn neighbor_counts(g: &Graph, col: &Coloring) -> Vec<u32> {
    let k = col.num_cells();
    let mut counts = vec![0u32; g.n() * k];
    for &(u, v) in g.edges() {
        counts[u * k + col.colors[v]] += 1;
        counts[v * k + col.colors[u]] += 1;
    }
    counts
}

/// Coarsest equitable refinement of `init`. Cells are split by their
/// vertices' neighbor-count vectors and the pieces ordered by those vectors,
/// so the result does not depend on vertex labels.
pub fn color_refine(g: &Graph, init: &Coloring) -> Coloring {
    refine_with_invariant(g, init).0
}

fn refine_with_invariant(g: &Graph, init: &Coloring) -> (Coloring, NodeInvariant) {
    let mut col = init.clone();
    loop {
        let k = col.num_cells();
        let counts = neighbor_counts(g, &col);
        let row = |v: usize| &counts[v * k..(v + 1) * k];
        let mut cells = Vec::with_capacity(k);
        for cell in &col.cells {
            let mut sorted = cell.clone();
            sorted.sort_by(|&a, &b| row(a).cmp(row(b)).then(a.cmp(&b)));
            let mut start = 0;
            for i in 1..=sorted.len() {
                if i == sorted.len() || row(sorted[i]) != row(sorted[start]) {
                    cells.push(sorted[start..i].to_vec());
                    start = i;
                }
            }
        }
        let split = cells.len() != k;
        col.cells = cells;
        col.rebuild_colors();
        if !split {
            let quotient = col
                .cells
                .iter()
                .flat_map(|cell| row(cell[0]).to_vec())
                .collect();
            let sizes = col.cells.iter().map(Vec::len).collect();
            return (col, NodeInvariant { sizes, quotient });
        }
    }
}

pub fn is_automorphism(g: &Graph, perm: &Perm) -> bool {
    perm.degree() == g.n()
        && g.edges()
            .iter()
            .all(|&(u, v)| g.has_edge(perm.apply(u), perm.apply(v)))
}

#[derive(Debug, Clone)]
struct PathNode {
    coloring: Coloring,
    invariant: NodeInvariant,
}

/// Result of the search, including the order computed from the base orbits
/// found during the search (kept as a cross-check on the stabilizer chain).
#[derive(Debug, Clone)]
pub struct AutSearch {
    pub group: PermGroup,
    pub base: Vec<usize>,
    pub base_orbit_sizes: Vec<usize>,
    pub nodes_visited: u64,
}

struct Search<'a> {
    g: &'a Graph,
    path: Vec<PathNode>,
    first_leaf: Vec<usize>,
    budget: u64,
    visited: u64,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<()> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(Error::SearchBudgetExceeded(self.budget));
        }
        Ok(())
    }

    /// Looks for a leaf below `col` (sitting at `depth`) equivalent to the
    /// first leaf; returns the induced automorphism.
    fn find_equivalent(&mut self, col: Coloring, depth: usize) -> Result<Option<Perm>> {
        self.tick()?;
        let (col, inv) = refine_with_invariant(self.g, &col);
        if inv != self.path[depth].invariant {
            return Ok(None);
        }
        if col.is_discrete() {
            let mut images = vec![0; self.g.n()];
            for (i, &v) in self.first_leaf.iter().enumerate() {
                images[v] = col.cells[i][0];
            }
            let perm = Perm::new(images).expect("leaf is a bijection");
            return Ok(is_automorphism(self.g, &perm).then_some(perm));
        }
        let target = col.target_cell().expect("non-discrete coloring");
        for &u in &col.cells[target].clone() {
            if let Some(found) = self.find_equivalent(col.individualize(u), depth + 1)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }
}

fn orbit_of(n: usize, gens: &[Perm], start: usize) -> Vec<bool> {
    let mut mark = vec![false; n];
    mark[start] = true;
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for g in gens {
            let y = g.apply(x);
            if !mark[y] {
                mark[y] = true;
                stack.push(y);
            }
        }
    }
    mark
}

pub fn automorphism_generators(g: &Graph) -> Result<PermGroup> {
    automorphism_search(g, DEFAULT_SEARCH_BUDGET).map(|s| s.group)
}

pub fn automorphism_search(g: &Graph, budget: u64) -> Result<AutSearch> {
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidParams("graph has no vertices".into()));
    }
    let mut search = Search {
        g,
        path: Vec::new(),
        first_leaf: Vec::new(),
        budget,
        visited: 0,
    };

    // First path: always individualize the first vertex of the target cell.
    let mut base = Vec::new();
    let mut col = Coloring::uniform(n);
    loop {
        search.tick()?;
        let (refined, invariant) = refine_with_invariant(g, &col);
        search.path.push(PathNode {
            coloring: refined.clone(),
            invariant,
        });
        match refined.target_cell() {
            None => {
                search.first_leaf = refined.cells.iter().map(|c| c[0]).collect();
                break;
            }
            Some(t) => {
                let v = refined.cells[t][0];
                base.push(v);
                col = refined.individualize(v);
            }
        }
    }

    let mut gens: Vec<Perm> = Vec::new();
    let mut base_orbit_sizes = vec![0; base.len()];
    for level in (0..base.len()).rev() {
        let node = search.path[level].coloring.clone();
        let target = node.target_cell().unwrap();
        let chosen = base[level];
        let mut known = orbit_of(n, &gens, chosen);
        for &w in &node.cells[target] {
            if known[w] {
                continue;
            }
            if let Some(perm) = search.find_equivalent(node.individualize(w), level + 1)? {
                debug_assert_eq!(perm.apply(chosen), w);
                gens.push(perm);
                known = orbit_of(n, &gens, chosen);
            }
        }
        base_orbit_sizes[level] = known.iter().filter(|&&b| b).count();
    }

    gens.reverse();
    Ok(AutSearch {
        group: PermGroup::new(n, gens)?,
        base,
        base_orbit_sizes,
        nodes_visited: search.visited,
    })
}

/// Orbits of a group acting on `{0,1}^n` by permuting bit positions,
/// optionally extended by the global complement `x ↦ !x`.
#[derive(Debug, Clone)]
pub struct BitstringOrbits {
    n: usize,
    orbit_of: Vec<u32>,
    orbits: Vec<Vec<usize>>,
}

/// Largest `n` for which bitstring orbits are enumerated explicitly.
pub const MAX_EXPLICIT_QUBITS: usize = 20;

pub fn bitstring_orbits(grp: &PermGroup, include_global_flip: bool) -> Result<BitstringOrbits> {
    let n = grp.degree();
    if n > MAX_EXPLICIT_QUBITS {
        return Err(Error::SizeLimit(format!(
            "bitstring orbits need explicit enumeration of 2^{n} strings (limit 2^{MAX_EXPLICIT_QUBITS})"
        )));
    }
    let dim = 1usize << n;
    let mask = dim - 1;
    let mut orbit_of = vec![u32::MAX; dim];
    let mut orbits = Vec::new();
    let mut stack = Vec::new();
    for x in 0..dim {
        if orbit_of[x] != u32::MAX {
            continue;
        }
        let id = orbits.len() as u32;
        let mut members = vec![x];
        orbit_of[x] = id;
        stack.push(x);
        while let Some(y) = stack.pop() {
            let flipped = include_global_flip.then_some(y ^ mask);
            let images = grp
                .generators()
                .iter()
                .map(|g| g.permute_bits(y))
                .chain(flipped);
            for z in images {
                if orbit_of[z] == u32::MAX {
                    orbit_of[z] = id;
                    members.push(z);
                    stack.push(z);
                }
            }
        }
        members.sort_unstable();
        orbits.push(members);
    }
    Ok(BitstringOrbits {
        n,
        orbit_of,
        orbits,
    })
}

impl BitstringOrbits {
    /// Wraps an explicit partition of `{0..2^n}` (used for orbit checks with
    /// hand-built partitions).
    pub fn from_partition(n: usize, mut orbits: Vec<Vec<usize>>) -> Result<Self> {
        let dim = 1usize << n;
        let mut orbit_of = vec![u32::MAX; dim];
        for o in &mut orbits {
            o.sort_unstable();
        }
        orbits.sort();
        for (id, o) in orbits.iter().enumerate() {
            for &x in o {
                if x >= dim || orbit_of[x] != u32::MAX {
                    return Err(Error::InvalidParams(
                        "not a partition of the bitstrings".into(),
                    ));
                }
                orbit_of[x] = id as u32;
            }
        }
        if orbit_of.contains(&u32::MAX) {
            return Err(Error::InvalidParams(
                "partition does not cover all bitstrings".into(),
            ));
        }
        Ok(BitstringOrbits {
            n,
            orbit_of,
            orbits,
        })
    }

    /// Every bitstring in its own orbit.
    pub fn singletons(n: usize) -> Self {
        let dim = 1usize << n;
        BitstringOrbits {
            n,
            orbit_of: (0..dim as u32).collect(),
            orbits: (0..dim).map(|x| vec![x]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    /// Orbits as sorted member lists, ordered by smallest member.
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn orbit_index(&self, x: usize) -> usize {
        self.orbit_of[x] as usize
    }

    pub fn same_orbit(&self, x: usize, y: usize) -> bool {
        self.orbit_of[x] == self.orbit_of[y]
    }
}
