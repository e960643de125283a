//! Symmetry features of a graph: exact measures from `Aut(G)` and their
//! averages over graphs with one or two edges deleted.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autgroup::automorphism_generators;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};

/// `(1/n) Σ |A_i| ln |A_i|` over orbit sizes.
pub fn graph_entropy(orbit_sizes: &[usize], n: usize) -> f64 {
    let total: f64 = orbit_sizes.iter().fold(0.0, |acc, &s| {
        let s = s as f64;
        acc + s * s.ln()
    });
    total / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactFeatures {
    pub log_aut: f64,
    pub n_orbits: usize,
    pub entropy: f64,
}

pub fn exact_features(g: &Graph) -> Result<ExactFeatures> {
    let grp = automorphism_generators(g)?;
    let orbits = grp.vertex_orbits();
    let sizes: Vec<usize> = orbits.iter().map(Vec::len).collect();
    Ok(ExactFeatures {
        log_aut: grp.log_order(),
        n_orbits: orbits.len(),
        entropy: graph_entropy(&sizes, g.n()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxFeatures {
    pub avg_log_aut: f64,
    pub avg_orbits: f64,
    pub avg_entropy: f64,
    /// Number of edge-deleted graphs actually averaged over.
    pub samples: usize,
}

/// Options for the two-edge averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureOptions {
    /// When the graph has more than `pair_cap_edges` edges and `max_pairs`
    /// is set, two-edge deletions are subsampled uniformly down to
    /// `max_pairs` pairs.
    pub max_pairs: Option<usize>,
    pub pair_cap_edges: usize,
    pub seed: u64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            max_pairs: None,
            pair_cap_edges: 60,
            seed: 0,
        }
    }
}

fn deletion_sets(g: &Graph, depth: usize, opts: &FeatureOptions) -> Vec<Vec<Edge>> {
    let edges = g.edges();
    match depth {
        1 => edges.iter().map(|&e| vec![e]).collect(),
        _ => {
            let m = edges.len();
            let total = m * (m - 1) / 2;
            let pair = |idx: usize| {
                // Unrank idx into the lexicographic list of pairs i < j.
                let mut i = 0;
                let mut rest = idx;
                while rest >= m - 1 - i {
                    rest -= m - 1 - i;
                    i += 1;
                }
                vec![edges[i], edges[i + 1 + rest]]
            };
            match opts.max_pairs {
                Some(cap) if m > opts.pair_cap_edges && total > cap => {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    let mut picked = rand::seq::index::sample(&mut rng, total, cap).into_vec();
                    picked.sort_unstable();
                    picked.into_iter().map(pair).collect()
                }
                _ => (0..total).map(pair).collect(),
            }
        }
    }
}

/// Mean of the exact features over all graphs obtained by deleting `depth`
/// edges (1 or 2). Disconnected results are kept.
pub fn approx_features(g: &Graph, depth: usize, opts: &FeatureOptions) -> Result<ApproxFeatures> {
    if !(1..=2).contains(&depth) {
        return Err(Error::InvalidParams(format!(
            "deletion depth must be 1 or 2, got {depth}"
        )));
    }
    if g.num_edges() < depth {
        return Err(Error::EmptyGraph {
            needed: depth,
            have: g.num_edges(),
        });
    }
    let sets = deletion_sets(g, depth, opts);
    let per: Vec<ExactFeatures> = sets
        .par_iter()
        .map(|removed| exact_features(&g.delete_edges(removed)?))
        .collect::<Result<_>>()?;
    let k = per.len() as f64;
    Ok(ApproxFeatures {
        avg_log_aut: per.iter().map(|f| f.log_aut).sum::<f64>() / k,
        avg_orbits: per.iter().map(|f| f.n_orbits as f64).sum::<f64>() / k,
        avg_entropy: per.iter().map(|f| f.entropy).sum::<f64>() / k,
        samples: per.len(),
    })
}

/// The ten symmetry features, in their serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryFeatures {
    pub log_aut: f64,
    pub avg_log_aut_1: f64,
    pub avg_log_aut_2: f64,
    pub n_vertices: usize,
    pub n_orbits: usize,
    pub avg_orbits_1: f64,
    pub avg_orbits_2: f64,
    pub entropy: f64,
    pub avg_entropy_1: f64,
    pub avg_entropy_2: f64,
}

impl SymmetryFeatures {
    pub const NAMES: [&'static str; 10] = [
        "log_aut",
        "avg_log_aut_1",
        "avg_log_aut_2",
        "n_vertices",
        "n_orbits",
        "avg_orbits_1",
        "avg_orbits_2",
        "entropy",
        "avg_entropy_1",
        "avg_entropy_2",
    ];

    pub fn to_array(&self) -> [f64; 10] {
        [
            self.log_aut,
            self.avg_log_aut_1,
            self.avg_log_aut_2,
            self.n_vertices as f64,
            self.n_orbits as f64,
            self.avg_orbits_1,
            self.avg_orbits_2,
            self.entropy,
            self.avg_entropy_1,
            self.avg_entropy_2,
        ]
    }

    /// Fixed-order comma-separated record.
    pub fn to_csv_row(&self) -> String {
        self.to_array()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn feature_vector(g: &Graph) -> Result<SymmetryFeatures> {
    feature_vector_with(g, &FeatureOptions::default()).map(|(f, _)| f)
}

/// Also returns how many two-edge deletions were averaged.
pub fn feature_vector_with(g: &Graph, opts: &FeatureOptions) -> Result<(SymmetryFeatures, usize)> {
    if g.num_edges() < 2 {
        return Err(Error::EmptyGraph {
            needed: 2,
            have: g.num_edges(),
        });
    }
    let exact = exact_features(g)?;
    let one = approx_features(g, 1, opts)?;
    let two = approx_features(g, 2, opts)?;
    Ok((
        SymmetryFeatures {
            log_aut: exact.log_aut,
            avg_log_aut_1: one.avg_log_aut,
            avg_log_aut_2: two.avg_log_aut,
            n_vertices: g.n(),
            n_orbits: exact.n_orbits,
            avg_orbits_1: one.avg_orbits,
            avg_orbits_2: two.avg_orbits,
            entropy: exact.entropy,
            avg_entropy_1: one.avg_entropy,
            avg_entropy_2: two.avg_entropy,
        },
        two.samples,
    ))
}
