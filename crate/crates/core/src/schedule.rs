//! Linear parameter schedules, their optimization, and the minimum-depth
//! search.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autgroup::{automorphism_generators, bitstring_orbits};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::reduced::{
    hamming_reduced_ops, reduce_operators, reduced_evolve, OrbitBasis, ReducedOperators,
    MAX_GENERIC_QUBITS,
};
use crate::sim::{evolve, expectation, maxcut_diagonal, Angles, CostDiagonal, MAX_QUBITS};

pub const BETA_MAX: f64 = PI;
/// Largest orbit basis the evaluator will diagonalize.
pub const MAX_REDUCED_DIM: usize = 768;
pub const GAMMA_MAX: f64 = 2.0 * PI;

/// Angles varying affinely with the layer index, given by their endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSchedule {
    pub p: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub gamma_start: f64,
    pub gamma_end: f64,
}

impl LinearSchedule {
    pub fn new(p: usize, beta: (f64, f64), gamma: (f64, f64)) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParams(
                "schedule depth must be at least 1".into(),
            ));
        }
        Ok(LinearSchedule {
            p,
            beta_start: beta.0,
            beta_end: beta.1,
            gamma_start: gamma.0,
            gamma_end: gamma.1,
        })
    }

    fn from_params(p: usize, x: &[f64; 4]) -> Self {
        LinearSchedule {
            p,
            beta_start: x[0],
            beta_end: x[1],
            gamma_start: x[2],
            gamma_end: x[3],
        }
    }

    fn params(&self) -> [f64; 4] {
        [
            self.beta_start,
            self.beta_end,
            self.gamma_start,
            self.gamma_end,
        ]
    }

    pub fn with_depth(&self, p: usize) -> Self {
        LinearSchedule { p, ..*self }
    }

    /// `(slope, intercept)` of `β_j = slope·j + intercept`, `j = 1..p`.
    pub fn beta_line(&self) -> (f64, f64) {
        line(self.p, self.beta_start, self.beta_end)
    }

    pub fn gamma_line(&self) -> (f64, f64) {
        line(self.p, self.gamma_start, self.gamma_end)
    }

    pub fn expand(&self) -> Angles {
        let ramp = |start: f64, end: f64| -> Vec<f64> {
            if self.p == 1 {
                return vec![start];
            }
            let step = (end - start) / (self.p - 1) as f64;
            let mut v: Vec<f64> = (0..self.p).map(|j| start + j as f64 * step).collect();
            v[self.p - 1] = end;
            v
        };
        Angles::new(
            ramp(self.beta_start, self.beta_end),
            ramp(self.gamma_start, self.gamma_end),
        )
        .expect("depth is positive")
    }
}

fn line(p: usize, start: f64, end: f64) -> (f64, f64) {
    let slope = if p > 1 {
        (end - start) / (p - 1) as f64
    } else {
        0.0
    };
    (slope, start - slope)
}

/// Exact maximum cut by Gray-code enumeration with the last vertex pinned.
pub fn max_cut_brute(g: &Graph) -> Result<usize> {
    let n = g.n();
    if n > MAX_QUBITS {
        return Err(Error::SizeLimit(format!(
            "brute-force max cut limited to {MAX_QUBITS} vertices"
        )));
    }
    if n <= 1 {
        return Ok(0);
    }
    let mut side = vec![false; n];
    let mut cut: i64 = 0;
    let mut best = 0;
    for step in 1u64..(1u64 << (n - 1)) {
        let v = step.trailing_zeros() as usize;
        for &u in g.neighbors(v) {
            cut += if side[u] == side[v] { 1 } else { -1 };
        }
        side[v] = !side[v];
        best = best.max(cut);
    }
    Ok(best as usize)
}

/// How `⟨C⟩` is computed for a graph.
#[derive(Debug, Clone)]
pub enum Backend {
    Full(CostDiagonal),
    Reduced(ReducedOperators),
}

/// Computes `⟨C⟩_p` and approximation ratios for one MaxCut instance.
#[derive(Debug, Clone)]
pub struct QaoaEvaluator {
    backend: Backend,
    optimum: usize,
    num_edges: usize,
}

impl QaoaEvaluator {
    /// Picks the closed-form Hamming basis for complete graphs, an orbit
    /// basis when the symmetry reduction is small enough to pay off, and the
    /// full statevector otherwise.
    pub fn new(g: &Graph) -> Result<Self> {
        let optimum = max_cut_brute(g)?;
        let n = g.n();
        let complete = g.num_edges() == n * (n.saturating_sub(1)) / 2 && n >= 2;
        let backend = if complete {
            Backend::Reduced(hamming_reduced_ops(n)?)
        } else {
            let diag = maxcut_diagonal(g)?;
            match Self::orbit_backend(g, &diag)? {
                Some(ops) => Backend::Reduced(ops),
                None => Backend::Full(diag),
            }
        };
        Ok(QaoaEvaluator {
            backend,
            optimum,
            num_edges: g.num_edges(),
        })
    }

    pub fn full(g: &Graph) -> Result<Self> {
        Ok(QaoaEvaluator {
            backend: Backend::Full(maxcut_diagonal(g)?),
            optimum: max_cut_brute(g)?,
            num_edges: g.num_edges(),
        })
    }

    fn orbit_backend(g: &Graph, diag: &CostDiagonal) -> Result<Option<ReducedOperators>> {
        let n = g.n();
        if n > MAX_GENERIC_QUBITS {
            return Ok(None);
        }
        let grp = automorphism_generators(g)?;
        // A layer costs about dim² in the reduced basis and n·2^n in full.
        // |orbits| ≥ 2^n / (2|Aut|) rules most graphs out before enumeration.
        let budget = (n << n) as f64;
        let order = grp.order_u64().map_or(f64::INFINITY, |o| o as f64);
        let lower = (1u64 << n) as f64 / (2.0 * order);
        if lower * lower > budget || lower > MAX_REDUCED_DIM as f64 {
            return Ok(None);
        }
        let orbits = bitstring_orbits(&grp, true)?;
        let dim = orbits.len();
        if (dim * dim) as f64 > budget || dim > MAX_REDUCED_DIM {
            return Ok(None);
        }
        reduce_operators(diag, &OrbitBasis::from_orbits(orbits)).map(Some)
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn is_reduced(&self) -> bool {
        matches!(self.backend, Backend::Reduced(_))
    }

    pub fn optimum(&self) -> usize {
        self.optimum
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn expectation(&self, angles: &Angles) -> f64 {
        match &self.backend {
            Backend::Full(diag) => expectation(&evolve(diag, angles), diag).expect("same size"),
            Backend::Reduced(ops) => reduced_evolve(ops, angles).expectation,
        }
    }

    pub fn ratio(&self, schedule: &LinearSchedule) -> f64 {
        if self.optimum == 0 {
            return 1.0;
        }
        self.expectation(&schedule.expand()) / self.optimum as f64
    }
}

/// `⟨C⟩_p / max cut` for a linear schedule.
pub fn approx_ratio(g: &Graph, s: &LinearSchedule) -> Result<f64> {
    Ok(QaoaEvaluator::new(g)?.ratio(s))
}

/// Nelder-Mead settings. Points are projected onto the box after every move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMead {
    pub initial_step: f64,
    pub tolerance: f64,
    pub max_evals: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            initial_step: 0.15,
            tolerance: 1e-6,
            max_evals: 500,
        }
    }
}

const LOWER: [f64; 4] = [0.0, 0.0, 0.0, 0.0];
const UPPER: [f64; 4] = [BETA_MAX, BETA_MAX, GAMMA_MAX, GAMMA_MAX];

fn clamp(mut x: [f64; 4]) -> [f64; 4] {
    for i in 0..4 {
        x[i] = x[i].clamp(LOWER[i], UPPER[i]);
    }
    x
}

impl NelderMead {
    /// Minimizes `f` from `start`. Returns the best point, its value and
    /// the number of evaluations.
    pub fn minimize(
        &self,
        f: impl Fn(&[f64; 4]) -> f64,
        start: [f64; 4],
    ) -> ([f64; 4], f64, usize) {
        const ALPHA: f64 = 1.0;
        const GAMMA: f64 = 2.0;
        const RHO: f64 = 0.5;
        const SIGMA: f64 = 0.5;

        let evals = std::cell::Cell::new(0usize);
        let eval = |x: [f64; 4]| {
            evals.set(evals.get() + 1);
            (x, f(&x))
        };
        let start = clamp(start);
        let mut simplex = vec![eval(start)];
        for i in 0..4 {
            let mut x = start;
            x[i] += self.initial_step;
            if x[i] > UPPER[i] {
                x[i] = start[i] - self.initial_step;
            }
            simplex.push(eval(clamp(x)));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, worst) = (simplex[0].1, simplex[4].1);
            if worst - best < self.tolerance || evals.get() >= self.max_evals {
                break;
            }
            let mut centroid = [0.0; 4];
            for (x, _) in &simplex[..4] {
                for i in 0..4 {
                    centroid[i] += x[i] / 4.0;
                }
            }
            let toward = |t: f64| {
                let w = simplex[4].0;
                let mut y = [0.0; 4];
                for i in 0..4 {
                    y[i] = centroid[i] + t * (w[i] - centroid[i]);
                }
                clamp(y)
            };
            let reflected = eval(toward(-ALPHA));
            if reflected.1 < simplex[0].1 {
                let expanded = eval(toward(-ALPHA * GAMMA));
                simplex[4] = if expanded.1 < reflected.1 {
                    expanded
                } else {
                    reflected
                };
                continue;
            }
            if reflected.1 < simplex[3].1 {
                simplex[4] = reflected;
                continue;
            }
            let contracted = if reflected.1 < simplex[4].1 {
                eval(toward(-ALPHA * RHO))
            } else {
                eval(toward(RHO))
            };
            if contracted.1 < simplex[4].1.min(reflected.1) {
                simplex[4] = contracted;
                continue;
            }
            let anchor = simplex[0].0;
            for k in 1..5 {
                let mut y = [0.0; 4];
                for i in 0..4 {
                    y[i] = anchor[i] + SIGMA * (simplex[k].0[i] - anchor[i]);
                }
                simplex[k] = eval(clamp(y));
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        (simplex[0].0, simplex[0].1, evals.get())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimized {
    pub schedule: LinearSchedule,
    pub ratio: f64,
    pub evaluations: usize,
}

/// Multistart Nelder-Mead over the four endpoints. Warm starts run first,
/// followed by `restarts` uniform random starts; restart `i` draws from
/// stream `i` of the seeded generator. Ties go to the earliest start.
pub fn optimize_linear(
    eval: &QaoaEvaluator,
    p: usize,
    restarts: usize,
    seed: u64,
    warm_starts: &[LinearSchedule],
    nm: &NelderMead,
) -> Result<Optimized> {
    if restarts == 0 && warm_starts.is_empty() {
        return Err(Error::InvalidParams("need at least one restart".into()));
    }
    if p == 0 {
        return Err(Error::InvalidParams("depth must be at least 1".into()));
    }
    let mut starts: Vec<[f64; 4]> = warm_starts.iter().map(|s| s.params()).collect();
    starts.extend((0..restarts).map(|i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        [
            rng.gen_range(0.0..BETA_MAX),
            rng.gen_range(0.0..BETA_MAX),
            rng.gen_range(0.0..GAMMA_MAX),
            rng.gen_range(0.0..GAMMA_MAX),
        ]
    }));
    let objective = |x: &[f64; 4]| -eval.ratio(&LinearSchedule::from_params(p, x));
    let runs: Vec<([f64; 4], usize)> = starts
        .par_iter()
        .map(|&x0| {
            let (x, _, evals) = nm.minimize(objective, x0);
            (x, evals)
        })
        .collect();
    let mut best: Option<Optimized> = None;
    let mut total = 0;
    for (x, evals) in runs {
        total += evals;
        let schedule = LinearSchedule::from_params(p, &x);
        let ratio = eval.ratio(&schedule);
        if best.is_none_or(|b| ratio > b.ratio) {
            best = Some(Optimized {
                schedule,
                ratio,
                evaluations: 0,
            });
        }
    }
    let mut best = best.expect("at least one start");
    best.evaluations = total;
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PminConfig {
    pub target_ratio: f64,
    pub p_start: usize,
    pub p_cap: usize,
    pub restarts: usize,
    pub seed: u64,
    pub nelder_mead: NelderMead,
}

impl Default for PminConfig {
    fn default() -> Self {
        PminConfig {
            target_ratio: 0.95,
            p_start: 2,
            p_cap: 25,
            restarts: 50,
            seed: 0,
            nelder_mead: NelderMead::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub p: usize,
    pub best_ratio: f64,
    pub schedule: LinearSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PminResult {
    /// `None` when no depth up to the cap reached the target.
    pub p_min: Option<usize>,
    pub ratio_achieved: f64,
    pub best_schedule: LinearSchedule,
    pub optimum_cut: usize,
    pub trace: Vec<TraceRow>,
}

impl PminResult {
    pub fn censored(&self) -> bool {
        self.p_min.is_none()
    }

    /// `p,best_ratio,beta_start,beta_end,gamma_start,gamma_end` rows.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("p,best_ratio,beta_start,beta_end,gamma_start,gamma_end\n");
        for row in &self.trace {
            let s = row.schedule;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.p, row.best_ratio, s.beta_start, s.beta_end, s.gamma_start, s.gamma_end
            ));
        }
        out
    }
}

/// Seed for depth `p`, derived from the base seed.
fn depth_seed(seed: u64, p: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (p as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Smallest depth in `[p_start, p_cap]` whose optimized linear schedule
/// reaches the target ratio. Each depth is warm-started from the best
/// schedule of the previous depth, so the per-depth trace does not depend on
/// the target.
pub fn find_pmin(g: &Graph, cfg: &PminConfig) -> Result<PminResult> {
    find_pmin_with(&QaoaEvaluator::new(g)?, cfg)
}

pub fn find_pmin_with(eval: &QaoaEvaluator, cfg: &PminConfig) -> Result<PminResult> {
    if !(cfg.target_ratio > 0.0 && cfg.target_ratio.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "target ratio must be positive, got {}",
            cfg.target_ratio
        )));
    }
    if cfg.p_start == 0 || cfg.p_cap < cfg.p_start {
        return Err(Error::InvalidParams(format!(
            "bad depth range {}..={}",
            cfg.p_start, cfg.p_cap
        )));
    }
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut best: Option<Optimized> = None;
    for p in cfg.p_start..=cfg.p_cap {
        let warm: Vec<LinearSchedule> = trace
            .last()
            .map(|r| r.schedule.with_depth(p))
            .into_iter()
            .collect();
        let opt = optimize_linear(
            eval,
            p,
            cfg.restarts,
            depth_seed(cfg.seed, p),
            &warm,
            &cfg.nelder_mead,
        )?;
        trace.push(TraceRow {
            p,
            best_ratio: opt.ratio,
            schedule: opt.schedule,
        });
        if best.is_none_or(|b| opt.ratio > b.ratio) {
            best = Some(opt);
        }
        if opt.ratio >= cfg.target_ratio {
            return Ok(PminResult {
                p_min: Some(p),
                ratio_achieved: opt.ratio,
                best_schedule: opt.schedule,
                optimum_cut: eval.optimum(),
                trace,
            });
        }
    }
    let best = best.expect("at least one depth");
    Ok(PminResult {
        p_min: None,
        ratio_achieved: best.ratio,
        best_schedule: best.schedule,
        optimum_cut: eval.optimum(),
        trace,
    })
}
