//! Symmetry-reduced QAOA dynamics.
//!
//! When a group of basis-state permutations commutes with both the cost and
//! the mixer, amplitudes are constant on orbits and the evolution can be
//! carried out in the basis of normalized orbit sums
//! `|o_k⟩ = |orbit_k|^{-1/2} Σ_{x ∈ orbit_k} |x⟩`. Only the `|+⟩^⊗n` start
//! state is supported; it lies in the span of the orbit sums.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::autgroup::{automorphism_generators, bitstring_orbits, BitstringOrbits};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::perm::PermGroup;
use crate::sim::{Angles, CostDiagonal, StateVector};

/// Largest `n` for the generic orbit basis.
pub const MAX_GENERIC_QUBITS: usize = 16;
/// Largest reduced dimension for which the dense mixer is assembled.
pub const MAX_DENSE_DIM: usize = 4096;
/// Largest group (including the flip) whose elements are enumerated.
pub const MAX_ENUMERATED_ELEMENTS: u64 = 10_000_000;
/// Largest `|A| · 2^n` for which fixed points are counted string by string.
pub const MAX_EXPLICIT_PAIRS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointMethod {
    /// Every `(element, bitstring)` pair tested.
    Explicit,
    /// From the cycle type of each element.
    CycleType,
}

/// Orbit count of a bitstring symmetry group, with the data behind each of
/// the three counting formulas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientDimension {
    pub dim: u64,
    pub group_order: u64,
    /// `(1/|A|) Σ_A |B^A|`.
    pub fixed_point_average: f64,
    /// `(1/|A|) Σ_x |A_x|`.
    pub stabilizer_average: f64,
    /// `Σ_x 1/|A·x|`.
    pub inverse_orbit_sum: f64,
    pub fixed_point_sum: u128,
    pub stabilizer_sum: u128,
    /// `(fixed-point count, number of group elements with that count)`.
    pub fixed_point_histogram: Vec<(u64, u64)>,
    pub method: FixedPointMethod,
    /// Orbits counted directly, when `n` allows enumeration.
    pub explicit_orbits: Option<u64>,
}

impl QuotientDimension {
    /// All available routes give the same integer.
    pub fn consistent(&self) -> bool {
        let order = self.group_order as u128;
        let exact = |sum: u128| sum.is_multiple_of(order) && (sum / order) as u64 == self.dim;
        exact(self.fixed_point_sum)
            && exact(self.stabilizer_sum)
            && (self.inverse_orbit_sum - self.dim as f64).abs() < 1e-6
            && self.explicit_orbits.is_none_or(|o| o == self.dim)
    }
}

/// Counts orbits of `{0,1}^n` under the bit permutations of `grp`, extended
/// by the global flip when `include_flip` is set.
pub fn quotient_dimension(grp: &PermGroup, include_flip: bool) -> Result<QuotientDimension> {
    let n = grp.degree();
    let order_big: BigUint = grp.order() * BigUint::from(if include_flip { 2u32 } else { 1 });
    let order = order_big
        .to_u64()
        .filter(|&o| o <= MAX_ENUMERATED_ELEMENTS)
        .ok_or_else(|| {
            Error::SizeLimit(format!(
                "group of order {order_big} is too large to enumerate (limit {MAX_ENUMERATED_ELEMENTS})"
            ))
        })?;
    if n > 63 {
        return Err(Error::SizeLimit(format!("{n} qubits")));
    }
    let dim_b = 1u64 << n;
    let explicit = n <= crate::autgroup::MAX_EXPLICIT_QUBITS
        && (order as u128) * (dim_b as u128) <= MAX_EXPLICIT_PAIRS as u128;
    let mask = (dim_b - 1) as usize;

    let mut histogram = std::collections::BTreeMap::<u64, u64>::new();
    let mut fixed_point_sum: u128 = 0;
    let mut stabilizers = if explicit {
        vec![0u64; dim_b as usize]
    } else {
        Vec::new()
    };
    let flips: &[bool] = if include_flip {
        &[false, true]
    } else {
        &[false]
    };
    grp.for_each_element(|sigma| {
        for &flip in flips {
            let fixed = if explicit {
                let mut count = 0u64;
                for x in 0..dim_b as usize {
                    let mut y = sigma.permute_bits(x);
                    if flip {
                        y ^= mask;
                    }
                    if y == x {
                        count += 1;
                        stabilizers[x] += 1;
                    }
                }
                count
            } else {
                let cycles = sigma.cycle_lengths();
                if flip && cycles.iter().any(|c| c % 2 == 1) {
                    0
                } else {
                    1u64 << cycles.len()
                }
            };
            fixed_point_sum += fixed as u128;
            *histogram.entry(fixed).or_insert(0) += 1;
        }
    });

    let orbits = if n <= crate::autgroup::MAX_EXPLICIT_QUBITS {
        Some(bitstring_orbits(grp, include_flip)?)
    } else {
        None
    };
    let (stabilizer_sum, inverse_orbit_sum) = match &orbits {
        Some(orbits) => {
            let inv: f64 = orbits
                .orbits()
                .iter()
                .map(|o| o.len() as f64 * (1.0 / o.len() as f64))
                .sum();
            let stab: u128 = if explicit {
                stabilizers.iter().map(|&s| s as u128).sum()
            } else {
                // Orbit-stabilizer: |A_x| = |A| / |A·x|.
                orbits
                    .orbits()
                    .iter()
                    .map(|o| o.len() as u128 * (order as u128 / o.len() as u128))
                    .sum()
            };
            (stab, inv)
        }
        None => (fixed_point_sum, fixed_point_sum as f64 / order as f64),
    };

    let dim = (fixed_point_sum / order as u128) as u64;
    Ok(QuotientDimension {
        dim,
        group_order: order,
        fixed_point_average: fixed_point_sum as f64 / order as f64,
        stabilizer_average: stabilizer_sum as f64 / order as f64,
        inverse_orbit_sum,
        fixed_point_sum,
        stabilizer_sum,
        fixed_point_histogram: histogram.into_iter().collect(),
        method: if explicit {
            FixedPointMethod::Explicit
        } else {
            FixedPointMethod::CycleType
        },
        explicit_orbits: orbits.map(|o| o.len() as u64),
    })
}

/// A partition of the bitstrings into symmetry orbits.
#[derive(Debug, Clone)]
pub struct OrbitBasis {
    n: usize,
    orbits: BitstringOrbits,
}

impl OrbitBasis {
    pub fn from_orbits(orbits: BitstringOrbits) -> Self {
        OrbitBasis {
            n: orbits.n(),
            orbits,
        }
    }

    /// Hamming-weight classes (the orbits of all qubit permutations).
    pub fn hamming(n: usize) -> Result<Self> {
        if n > crate::autgroup::MAX_EXPLICIT_QUBITS {
            return Err(Error::SizeLimit(format!(
                "{n} qubits for an explicit basis"
            )));
        }
        let mut classes = vec![Vec::new(); n + 1];
        for x in 0..1usize << n {
            classes[x.count_ones() as usize].push(x);
        }
        Ok(Self::from_orbits(BitstringOrbits::from_partition(
            n, classes,
        )?))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.orbits.len()
    }

    pub fn orbits(&self) -> &BitstringOrbits {
        &self.orbits
    }

    /// Smallest member of each orbit.
    pub fn representatives(&self) -> Vec<usize> {
        self.orbits.orbits().iter().map(|o| o[0]).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.orbits.orbits().iter().map(Vec::len).collect()
    }

    /// Expands reduced amplitudes to a full statevector.
    pub fn lift(&self, reduced: &[Complex64]) -> Result<StateVector> {
        if reduced.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: reduced.len(),
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << self.n];
        for (orbit, &a) in self.orbits.orbits().iter().zip(reduced) {
            let v = a / (orbit.len() as f64).sqrt();
            for &x in orbit {
                amps[x] = v;
            }
        }
        StateVector::from_amplitudes(self.n, amps)
    }
}

/// Orbits of `Aut(g)` on bitstrings, optionally with the global flip.
pub fn build_orbit_basis(g: &Graph, include_flip: bool) -> Result<OrbitBasis> {
    if g.n() > MAX_GENERIC_QUBITS {
        return Err(Error::SizeLimit(format!(
            "generic orbit basis limited to {MAX_GENERIC_QUBITS} qubits, got {}",
            g.n()
        )));
    }
    let grp = automorphism_generators(g)?;
    Ok(OrbitBasis::from_orbits(bitstring_orbits(
        &grp,
        include_flip,
    )?))
}

/// Cost, mixer and start state in an orbit-sum basis.
#[derive(Debug, Clone)]
pub struct ReducedOperators {
    cost: Vec<f64>,
    mixer: DMatrix<f64>,
    init: Vec<f64>,
    eigen: OnceLock<(Vec<f64>, DMatrix<f64>)>,
}

impl ReducedOperators {
    fn new(cost: Vec<f64>, mixer: DMatrix<f64>, init: Vec<f64>) -> Self {
        ReducedOperators {
            cost,
            mixer,
            init,
            eigen: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.cost.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn mixer(&self) -> &DMatrix<f64> {
        &self.mixer
    }

    pub fn init(&self) -> &[f64] {
        &self.init
    }

    /// Eigenvalues and eigenvectors (as columns) of the mixer, computed once.
    fn eigen(&self) -> &(Vec<f64>, DMatrix<f64>) {
        self.eigen.get_or_init(|| {
            let eig = SymmetricEigen::new(self.mixer.clone());
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        })
    }
}

/// Projects the cost and mixer onto an orbit basis. Fails if the cost is not
/// constant on every orbit.
pub fn reduce_operators(diag: &CostDiagonal, basis: &OrbitBasis) -> Result<ReducedOperators> {
    let n = basis.n;
    if diag.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: diag.n(),
        });
    }
    let values = diag.values();
    let orbits = basis.orbits.orbits();
    let dim = orbits.len();
    if dim > MAX_DENSE_DIM {
        return Err(Error::SizeLimit(format!(
            "reduced dimension {dim} exceeds the dense limit {MAX_DENSE_DIM}"
        )));
    }
    let mut cost = Vec::with_capacity(dim);
    for orbit in orbits {
        let f = values[orbit[0]];
        if orbit.iter().any(|&x| values[x] != f) {
            return Err(Error::NotInvariant(orbit[0]));
        }
        cost.push(f);
    }
    let sizes: Vec<f64> = orbits.iter().map(|o| o.len() as f64).collect();
    let mut mixer = DMatrix::<f64>::zeros(dim, dim);
    for (k, orbit) in orbits.iter().enumerate() {
        let x = orbit[0];
        for j in 0..n {
            let l = basis.orbits.orbit_index(x ^ (1 << j));
            mixer[(k, l)] += 1.0;
        }
    }
    for k in 0..dim {
        for l in 0..dim {
            mixer[(k, l)] *= (sizes[k] / sizes[l]).sqrt();
        }
    }
    let mixer = (&mixer + mixer.transpose()) * 0.5;
    let total = (1u64 << n) as f64;
    let init = sizes.iter().map(|s| (s / total).sqrt()).collect();
    Ok(ReducedOperators::new(cost, mixer, init))
}

/// Closed-form operators for MaxCut on `K_n` in the Hamming-weight basis.
pub fn hamming_reduced_ops(n: usize) -> Result<ReducedOperators> {
    if n == 0 {
        return Err(Error::InvalidParams("need at least one qubit".into()));
    }
    let dim = n + 1;
    let nf = n as f64;
    let cost = (0..dim).map(|d| (n * d - d * d) as f64).collect();
    let mut mixer = DMatrix::<f64>::zeros(dim, dim);
    for d in 0..n {
        let df = d as f64;
        // ⟨d+1|B|d⟩ = √((d+1)(n-d))
        let v = ((df + 1.0) * (nf - df)).sqrt();
        mixer[(d + 1, d)] = v;
        mixer[(d, d + 1)] = v;
    }
    let mut log_binom = 0.0f64;
    let log_total = nf * std::f64::consts::LN_2;
    let mut init = Vec::with_capacity(dim);
    for d in 0..dim {
        if d > 0 {
            log_binom += ((n - d + 1) as f64).ln() - (d as f64).ln();
        }
        init.push(((log_binom - log_total) * 0.5).exp());
    }
    Ok(ReducedOperators::new(cost, mixer, init))
}

#[derive(Debug, Clone)]
pub struct ReducedState {
    pub amplitudes: Vec<Complex64>,
    pub expectation: f64,
}

/// Alternates `e^{-iγ·cost}` and `e^{-iβ·M}` starting from the reduced
/// `|+⟩^⊗n`.
pub fn reduced_evolve(ops: &ReducedOperators, angles: &Angles) -> ReducedState {
    let dim = ops.dim();
    let (evals, evecs) = ops.eigen();
    let mut amps: Vec<Complex64> = ops.init.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    let mut tmp = vec![Complex64::new(0.0, 0.0); dim];
    for (beta, gamma) in angles.layers() {
        for (a, &c) in amps.iter_mut().zip(&ops.cost) {
            *a *= Complex64::cis(-gamma * c);
        }
        // tmp = diag(e^{-iβλ}) Vᵀ a
        for (i, t) in tmp.iter_mut().enumerate() {
            let col = evecs.column(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (v, a) in col.iter().zip(&amps) {
                acc += a * *v;
            }
            *t = acc * Complex64::cis(-beta * evals[i]);
        }
        // a = V tmp
        for (r, a) in amps.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, t) in tmp.iter().enumerate() {
                acc += t * evecs[(r, i)];
            }
            *a = acc;
        }
    }
    let expectation = amps
        .iter()
        .zip(&ops.cost)
        .map(|(a, c)| a.norm_sqr() * c)
        .sum();
    ReducedState {
        amplitudes: amps,
        expectation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphFamily;
    use crate::sim::{evolve, expectation, maxcut_diagonal};
    use std::f64::consts::PI;

    #[test]
    fn quotient_dimension_examples() {
        for n in 2..=6 {
            let trivial = quotient_dimension(&PermGroup::trivial(n), false).unwrap();
            assert_eq!(trivial.dim, 1 << n);
            let z2 = quotient_dimension(&PermGroup::trivial(n), true).unwrap();
            assert_eq!(z2.dim, 1 << (n - 1));
            let sn = quotient_dimension(&PermGroup::symmetric(n), false).unwrap();
            assert_eq!(sn.dim, n as u64 + 1);
            for q in [trivial, z2, sn] {
                assert!(q.consistent());
            }
        }
    }

    #[test]
    fn cycle_type_route_matches_explicit() {
        let grp = PermGroup::symmetric(5);
        for flip in [false, true] {
            let q = quotient_dimension(&grp, flip).unwrap();
            assert_eq!(q.method, FixedPointMethod::Explicit);
            let mut by_cycles = 0u128;
            grp.for_each_element(|s| {
                let c = s.cycle_lengths();
                by_cycles += 1u128 << c.len();
                if flip && c.iter().all(|l| l % 2 == 0) {
                    by_cycles += 1u128 << c.len();
                }
            });
            assert_eq!(by_cycles, q.fixed_point_sum);
        }
    }

    #[test]
    fn basis_dimensions() {
        let edge = Graph::new(2, [(0, 1)]).unwrap();
        assert_eq!(build_orbit_basis(&edge, true).unwrap().dim(), 2);
        for n in 3..=8 {
            let k = GraphFamily::Complete { n }.generate().unwrap();
            let expect = if n % 2 == 1 { n.div_ceil(2) } else { n / 2 + 1 };
            assert_eq!(build_orbit_basis(&k, true).unwrap().dim(), expect, "K_{n}");
        }
    }

    #[test]
    fn hamming_ops_n2() {
        let ops = hamming_reduced_ops(2).unwrap();
        let r2 = 2f64.sqrt();
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, r2, 0.0, r2, 0.0, r2, 0.0, r2, 0.0]);
        assert!((ops.mixer() - expect).abs().max() < 1e-15);
        assert_eq!(ops.cost(), &[0.0, 1.0, 0.0]);
        let norm: f64 = ops.init().iter().map(|a| a * a).sum();
        assert!((norm - 1.0).abs() < 1e-15);
        let ops = hamming_reduced_ops(7).unwrap();
        assert_eq!(ops.mixer()[(0, 1)], 7f64.sqrt());
        assert!((1..8).all(|l| l == 1 || ops.mixer()[(0, l)] == 0.0));
    }

    #[test]
    fn generic_reduction_matches_closed_form_on_complete_graphs() {
        for n in 2..=6 {
            let k = GraphFamily::Complete { n }.generate().unwrap();
            let d = maxcut_diagonal(&k).unwrap();
            let generic = reduce_operators(&d, &build_orbit_basis(&k, false).unwrap()).unwrap();
            let closed = hamming_reduced_ops(n).unwrap();
            assert_eq!(generic.cost(), closed.cost());
            assert!((generic.mixer() - closed.mixer()).abs().max() < 1e-12);
        }
        let k3 = GraphFamily::Complete { n: 3 }.generate().unwrap();
        let ops = reduce_operators(
            &maxcut_diagonal(&k3).unwrap(),
            &OrbitBasis::hamming(3).unwrap(),
        )
        .unwrap();
        assert_eq!(ops.cost(), &[0.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn mixer_row_identity() {
        let g = GraphFamily::Wheel { n: 6 }.generate().unwrap();
        let basis = build_orbit_basis(&g, true).unwrap();
        let ops = reduce_operators(&maxcut_diagonal(&g).unwrap(), &basis).unwrap();
        let sizes = basis.sizes();
        for k in 0..ops.dim() {
            let lhs: f64 = (0..ops.dim())
                .map(|l| ops.mixer()[(k, l)] * (sizes[l] as f64).sqrt())
                .sum();
            assert!((lhs - 6.0 * (sizes[k] as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn non_invariant_cost_rejected() {
        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let d = maxcut_diagonal(&path).unwrap();
        assert!(matches!(
            reduce_operators(&d, &OrbitBasis::hamming(3).unwrap()),
            Err(Error::NotInvariant(_))
        ));
    }

    #[test]
    fn reduced_matches_full_small_cases() {
        let edge = Graph::new(2, [(0, 1)]).unwrap();
        let ops = reduce_operators(
            &maxcut_diagonal(&edge).unwrap(),
            &build_orbit_basis(&edge, true).unwrap(),
        )
        .unwrap();
        let angles = Angles::new(vec![PI / 8.0], vec![PI / 2.0]).unwrap();
        assert!((reduced_evolve(&ops, &angles).expectation - 1.0).abs() < 1e-12);

        let k5 = GraphFamily::Complete { n: 5 }.generate().unwrap();
        let d = maxcut_diagonal(&k5).unwrap();
        let angles = Angles::new(vec![0.3, 0.7, 1.9], vec![0.4, 2.2, 0.1]).unwrap();
        let full = expectation(&evolve(&d, &angles), &d).unwrap();
        let red = reduced_evolve(&hamming_reduced_ops(5).unwrap(), &angles);
        assert!((full - red.expectation).abs() < 1e-9);
        let zero = Angles::new(vec![0.5], vec![0.0]).unwrap();
        assert!(
            (reduced_evolve(&hamming_reduced_ops(5).unwrap(), &zero).expectation - 5.0).abs()
                < 1e-12
        );
    }
}
