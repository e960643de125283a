//! Full statevector QAOA simulation.
//!
//! Bit convention, used throughout the crate: bit `j` of a basis-state index
//! is qubit `j`, which is vertex `j`; vertex 0 is the least significant bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::autgroup::BitstringOrbits;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default memory bound for dense diagonals and statevectors.
pub const MAX_QUBITS: usize = 26;

/// A diagonal cost Hamiltonian: `values[x] = f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDiagonal {
    n: usize,
    values: Vec<f64>,
    /// `Some(levels)` when every value is an integer in `0..levels`; lets the
    /// phase operator use a lookup table.
    integer_levels: Option<usize>,
}

impl CostDiagonal {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("cost values must be finite".into()));
        }
        let integer_levels = values
            .iter()
            .all(|&v| v >= 0.0 && v.fract() == 0.0 && v < 1e5)
            .then(|| values.iter().fold(0.0f64, |m, &v| m.max(v)) as usize + 1);
        Ok(CostDiagonal {
            n,
            values,
            integer_levels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn maxcut_diagonal(g: &Graph) -> Result<CostDiagonal> {
    maxcut_diagonal_limited(g, MAX_QUBITS)
}

/// Number of cut edges for every assignment.
pub fn maxcut_diagonal_limited(g: &Graph, max_qubits: usize) -> Result<CostDiagonal> {
    let n = g.n();
    if n > max_qubits {
        return Err(Error::SizeLimit(format!(
            "{n} qubits exceeds the statevector limit of {max_qubits}"
        )));
    }
    let masks: Vec<usize> = g
        .edges()
        .iter()
        .map(|&(u, v)| (1 << u) | (1 << v))
        .collect();
    let values = (0..1usize << n)
        .map(|x| masks.iter().filter(|&&m| (x & m).count_ones() == 1).count() as f64)
        .collect();
    CostDiagonal::new(n, values)
}

/// Per-layer angles `(β_j, γ_j)`, `j = 1..p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    betas: Vec<f64>,
    gammas: Vec<f64>,
}

impl Angles {
    pub fn new(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        if betas.len() != gammas.len() {
            return Err(Error::DimensionMismatch {
                expected: betas.len(),
                got: gammas.len(),
            });
        }
        if betas.is_empty() {
            return Err(Error::InvalidParams("QAOA depth must be at least 1".into()));
        }
        Ok(Angles { betas, gammas })
    }

    pub fn depth(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `(β_j, γ_j)` pairs in application order.
    pub fn layers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.betas.iter().copied().zip(self.gammas.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|+⟩^⊗n`.
    pub fn plus(n: usize) -> Self {
        let a = Complex64::new((1usize << n) as f64, 0.0).sqrt().inv();
        StateVector {
            n,
            amplitudes: vec![a; 1 << n],
        }
    }

    pub fn basis(n: usize, x: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[x] = Complex64::new(1.0, 0.0);
        StateVector { n, amplitudes }
    }

    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: amplitudes.len(),
            });
        }
        Ok(StateVector { n, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Multiplies amplitude `x` by `e^{-iγ f(x)}`.
    pub fn apply_phase(&mut self, diag: &CostDiagonal, gamma: f64) {
        match diag.integer_levels {
            Some(levels) => {
                let table: Vec<Complex64> = (0..levels)
                    .map(|k| Complex64::cis(-gamma * k as f64))
                    .collect();
                for (a, &f) in self.amplitudes.iter_mut().zip(&diag.values) {
                    *a *= table[f as usize];
                }
            }
            None => {
                for (a, &f) in self.amplitudes.iter_mut().zip(&diag.values) {
                    *a *= Complex64::cis(-gamma * f);
                }
            }
        }
    }

    /// Applies `e^{-iβX}` to every qubit in turn.
    pub fn apply_mixer(&mut self, beta: f64) {
        let (c, s) = (beta.cos(), beta.sin());
        for j in 0..self.n {
            let stride = 1usize << j;
            for block in self.amplitudes.chunks_exact_mut(2 * stride) {
                let (lo, hi) = block.split_at_mut(stride);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    // a ← c·a − i s·b, b ← c·b − i s·a
                    let (x, y) = (*a, *b);
                    *a = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
                    *b = Complex64::new(c * y.re + s * x.im, c * y.im - s * x.re);
                }
            }
        }
    }
}

/// `U_B(β_p) U_C(γ_p) ··· U_B(β_1) U_C(γ_1) |+⟩^⊗n`.
pub fn evolve(diag: &CostDiagonal, angles: &Angles) -> StateVector {
    let mut state = StateVector::plus(diag.n);
    for (beta, gamma) in angles.layers() {
        state.apply_phase(diag, gamma);
        state.apply_mixer(beta);
    }
    state
}

pub fn expectation(state: &StateVector, diag: &CostDiagonal) -> Result<f64> {
    if state.n != diag.n {
        return Err(Error::DimensionMismatch {
            expected: diag.n,
            got: state.n,
        });
    }
    Ok(state
        .amplitudes
        .iter()
        .zip(&diag.values)
        .map(|(a, f)| a.norm_sqr() * f)
        .sum())
}

pub fn probabilities(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// `bitstring,probability` rows. Bitstrings are written most significant
/// bit first, so vertex 0 is the rightmost character.
pub fn probabilities_csv(state: &StateVector) -> String {
    let n = state.n;
    let mut out = String::from("bitstring,probability\n");
    for (x, p) in probabilities(state).iter().enumerate() {
        out.push_str(&format!("{x:0n$b},{p}\n"));
    }
    out
}

/// Largest discrepancies inside any orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSpread {
    pub probability: f64,
    pub amplitude: f64,
}

pub fn orbit_spread(state: &StateVector, orbits: &BitstringOrbits) -> Result<OrbitSpread> {
    if orbits.n() != state.n {
        return Err(Error::DimensionMismatch {
            expected: state.n,
            got: orbits.n(),
        });
    }
    let mut spread = OrbitSpread {
        probability: 0.0,
        amplitude: 0.0,
    };
    for orbit in orbits.orbits() {
        let first = state.amplitudes[orbit[0]];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in orbit {
            let a = state.amplitudes[x];
            let p = a.norm_sqr();
            lo = lo.min(p);
            hi = hi.max(p);
            spread.amplitude = spread.amplitude.max((a - first).norm());
        }
        spread.probability = spread.probability.max(hi - lo);
    }
    Ok(spread)
}

/// Largest `n` accepted by [`check_symmetry_conditions`].
pub const MAX_SYMMETRY_CHECK_QUBITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryFlags {
    /// `f(a(x)) = f(x)` for all `x`.
    pub cost_commutes: bool,
    /// `{a(x^(j))}_j = {a(x)^(j)}_j` for all `x`, where `x^(j)` flips bit `j`.
    pub mixer_commutes: bool,
}

impl SymmetryFlags {
    pub fn both(&self) -> bool {
        self.cost_commutes && self.mixer_commutes
    }
}

/// Checks whether a permutation of the basis states commutes with the cost
/// and the transverse-field mixer.
pub fn check_symmetry_conditions(mapping: &[usize], diag: &CostDiagonal) -> Result<SymmetryFlags> {
    let n = diag.n;
    if n > MAX_SYMMETRY_CHECK_QUBITS {
        return Err(Error::SizeLimit(format!(
            "symmetry check limited to {MAX_SYMMETRY_CHECK_QUBITS} qubits"
        )));
    }
    let dim = 1usize << n;
    if mapping.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mapping.len(),
        });
    }
    let mut seen = vec![false; dim];
    for &y in mapping {
        if y >= dim || seen[y] {
            return Err(Error::NotBijection);
        }
        seen[y] = true;
    }
    let cost_commutes = (0..dim).all(|x| diag.values[mapping[x]] == diag.values[x]);
    let mut lhs = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let mixer_commutes = (0..dim).all(|x| {
        lhs.clear();
        rhs.clear();
        lhs.extend((0..n).map(|j| mapping[x ^ (1 << j)]));
        rhs.extend((0..n).map(|j| mapping[x] ^ (1 << j)));
        lhs.sort_unstable();
        rhs.sort_unstable();
        lhs == rhs
    });
    Ok(SymmetryFlags {
        cost_commutes,
        mixer_commutes,
    })
}
