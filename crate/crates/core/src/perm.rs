//! Permutations of `{0..n}` and permutation groups given by generators.
//!
//! Group order and membership come from a stabilizer chain built with the
//! deterministic Schreier-Sims algorithm: for every level, every Schreier
//! generator is sifted through the levels below until all of them sift to
//! the identity.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

/// A permutation in image notation: `images[i]` is where `i` is sent.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    images: Vec<usize>,
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm{:?}", self.images)
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for im in &self.images {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{im}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Perm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let images = s
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: 0,
                msg: format!("permutation {s:?}: {e}"),
            })?;
        Perm::new(images)
    }
}

impl Perm {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &im in &images {
            if im >= n || seen[im] {
                return Err(Error::InvalidParams(format!(
                    "{images:?} is not a permutation"
                )));
            }
            seen[im] = true;
        }
        Ok(Perm { images })
    }

    pub fn identity(n: usize) -> Self {
        Perm {
            images: (0..n).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut images = vec![0; self.images.len()];
        for (i, &im) in self.images.iter().enumerate() {
            images[im] = i;
        }
        Perm { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &im)| i == im)
    }

    /// Cycle lengths, fixed points included.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let n = self.images.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.images[i];
                len += 1;
            }
            out.push(len);
        }
        out
    }

    /// Moves bit `i` of `x` to position `self(i)`.
    #[inline]
    pub fn permute_bits(&self, x: usize) -> usize {
        let mut out = 0;
        let mut rest = x;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            out |= 1 << self.images[i];
            rest &= rest - 1;
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Level {
    base: usize,
    /// Strong generators whose first level is this one.
    own_gens: Vec<Perm>,
    /// `transversal[x]` maps `base` to `x`, for every `x` in the base orbit.
    transversal: Vec<Option<Perm>>,
    orbit: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StabChain {
    n: usize,
    levels: Vec<Level>,
}

impl StabChain {
    pub fn build(n: usize, gens: &[Perm]) -> StabChain {
        let mut chain = StabChain {
            n,
            levels: Vec::new(),
        };
        for g in gens {
            if let Some((residue, depth)) = chain.sift(g, 0) {
                chain.add_strong_generator(residue, depth);
            }
        }
        chain.complete();
        chain
    }

    fn gens_at(&self, level: usize) -> Vec<&Perm> {
        self.levels[level..]
            .iter()
            .flat_map(|l| l.own_gens.iter())
            .collect()
    }

    fn add_strong_generator(&mut self, g: Perm, depth: usize) {
        if depth == self.levels.len() {
            let base = (0..self.n)
                .find(|&i| g.apply(i) != i)
                .expect("residue is not the identity");
            let mut transversal = vec![None; self.n];
            transversal[base] = Some(Perm::identity(self.n));
            self.levels.push(Level {
                base,
                own_gens: Vec::new(),
                transversal,
                orbit: vec![base],
            });
        }
        self.levels[depth].own_gens.push(g);
        for lvl in 0..=depth {
            self.extend_orbit(lvl);
        }
    }

    fn extend_orbit(&mut self, level: usize) {
        let gens: Vec<Perm> = self.gens_at(level).into_iter().cloned().collect();
        let lvl = &mut self.levels[level];
        let mut i = 0;
        // Re-scan the whole orbit: new generators may move old points.
        while i < lvl.orbit.len() {
            let x = lvl.orbit[i];
            let ux = lvl.transversal[x]
                .clone()
                .expect("orbit point has a transversal");
            for h in &gens {
                let y = h.apply(x);
                if lvl.transversal[y].is_none() {
                    lvl.transversal[y] = Some(h.compose(&ux));
                    lvl.orbit.push(y);
                }
            }
            i += 1;
        }
    }

    /// Sifts `g` starting at `from`. Returns `None` if `g` is in the group
    /// described by the chain, else the residue and the level where it stuck.
    fn sift(&self, g: &Perm, from: usize) -> Option<(Perm, usize)> {
        let mut g = g.clone();
        for (depth, lvl) in self.levels.iter().enumerate().skip(from) {
            let x = g.apply(lvl.base);
            match &lvl.transversal[x] {
                Some(u) => g = u.inverse().compose(&g),
                None => return Some((g, depth)),
            }
        }
        if g.is_identity() {
            None
        } else {
            Some((g, self.levels.len()))
        }
    }

    /// Levels are verified bottom-up; a new strong generator at `depth`
    /// invalidates levels `0..=depth` only, so verification resumes there.
    fn complete(&mut self) {
        let mut level = self.levels.len();
        while level > 0 {
            level -= 1;
            if let Some((residue, depth)) = self.failing_schreier_generator(level) {
                self.add_strong_generator(residue, depth);
                level = depth + 1;
            }
        }
    }

    fn failing_schreier_generator(&self, level: usize) -> Option<(Perm, usize)> {
        let lvl = &self.levels[level];
        let gens = self.gens_at(level);
        for &x in &lvl.orbit {
            let ux = lvl.transversal[x].as_ref().unwrap();
            for h in &gens {
                let uy = lvl.transversal[h.apply(x)].as_ref().unwrap();
                let schreier = uy.inverse().compose(&h.compose(ux));
                if let Some(found) = self.sift(&schreier, level + 1) {
                    return Some(found);
                }
            }
        }
        None
    }

    pub fn order(&self) -> BigUint {
        self.levels
            .iter()
            .fold(BigUint::one(), |acc, l| acc * BigUint::from(l.orbit.len()))
    }

    pub fn base(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.base).collect()
    }

    pub fn contains(&self, g: &Perm) -> bool {
        g.degree() == self.n && self.sift(g, 0).is_none()
    }

    /// Visits every group element exactly once.
    pub fn for_each_element(&self, mut visit: impl FnMut(&Perm)) {
        fn walk(chain: &StabChain, depth: usize, acc: &Perm, visit: &mut dyn FnMut(&Perm)) {
            if depth == chain.levels.len() {
                visit(acc);
                return;
            }
            let lvl = &chain.levels[depth];
            for &x in &lvl.orbit {
                let u = lvl.transversal[x].as_ref().unwrap();
                walk(chain, depth + 1, &acc.compose(u), visit);
            }
        }
        walk(self, 0, &Perm::identity(self.n), &mut visit);
    }
}

/// A permutation group of degree `n` given by generators.
#[derive(Debug)]
pub struct PermGroup {
    n: usize,
    generators: Vec<Perm>,
    chain: OnceLock<StabChain>,
}

impl Clone for PermGroup {
    fn clone(&self) -> Self {
        let chain = OnceLock::new();
        if let Some(c) = self.chain.get() {
            let _ = chain.set(c.clone());
        }
        PermGroup {
            n: self.n,
            generators: self.generators.clone(),
            chain,
        }
    }
}

impl PermGroup {
    pub fn new(n: usize, generators: Vec<Perm>) -> Result<Self> {
        for g in &generators {
            if g.degree() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: g.degree(),
                });
            }
        }
        let generators = generators
            .into_iter()
            .filter(|g| !g.is_identity())
            .collect();
        Ok(PermGroup {
            n,
            generators,
            chain: OnceLock::new(),
        })
    }

    pub fn trivial(n: usize) -> Self {
        PermGroup {
            n,
            generators: Vec::new(),
            chain: OnceLock::new(),
        }
    }

    /// The full symmetric group, from a transposition and an `n`-cycle.
    pub fn symmetric(n: usize) -> Self {
        if n < 2 {
            return Self::trivial(n);
        }
        let mut swap: Vec<usize> = (0..n).collect();
        swap.swap(0, 1);
        let cycle: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let gens = vec![Perm { images: swap }, Perm { images: cycle }];
        Self::new(n, gens).expect("valid generators")
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn chain(&self) -> &StabChain {
        self.chain
            .get_or_init(|| StabChain::build(self.n, &self.generators))
    }

    pub fn order(&self) -> BigUint {
        self.chain().order()
    }

    /// Natural logarithm of the group order.
    pub fn log_order(&self) -> f64 {
        self.chain()
            .levels
            .iter()
            .fold(0.0, |acc, l| acc + (l.orbit.len() as f64).ln())
    }

    pub fn order_u64(&self) -> Option<u64> {
        self.order().to_u64()
    }

    pub fn contains(&self, g: &Perm) -> bool {
        self.chain().contains(g)
    }

    /// Orbits of the natural action on `{0..n}`, each sorted, ordered by
    /// smallest element.
    pub fn vertex_orbits(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for g in &self.generators {
            for i in 0..self.n {
                let (a, b) = (find(&mut parent, i), find(&mut parent, g.apply(i)));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.n];
        for i in 0..self.n {
            let r = find(&mut parent, i);
            if slot[r] == usize::MAX {
                slot[r] = orbits.len();
                orbits.push(Vec::new());
            }
            orbits[slot[r]].push(i);
        }
        orbits
    }

    pub fn for_each_element(&self, visit: impl FnMut(&Perm)) {
        self.chain().for_each_element(visit)
    }

    /// Generators in image notation, one per line.
    pub fn generators_to_string(&self) -> String {
        self.generators.iter().map(|g| format!("{g}\n")).collect()
    }
}
