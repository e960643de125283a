//! Acceptance checks, one PASS/FAIL line each. Runs as a plain binary so the
//! lines show up in `cargo test` output.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use qaoasym::autgroup::{automorphism_generators, bitstring_orbits};
use qaoasym::dataset::{gen_dataset, read_records, DatasetConfig, InstanceRecord};
use qaoasym::features::{approx_features, exact_features, FeatureOptions};
use qaoasym::graph::{Graph, GraphFamily};
use qaoasym::ml::Predictor;
use qaoasym::perm::PermGroup;
use qaoasym::pipeline::{train, TrainConfig, EXPECTED_SIGNS};
use qaoasym::reduced::{
    build_orbit_basis, hamming_reduced_ops, quotient_dimension, reduce_operators, reduced_evolve,
};
use qaoasym::sim::{evolve, expectation, maxcut_diagonal, orbit_spread, Angles};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_family(rng: &mut ChaCha8Rng, idx: usize) -> GraphFamily {
    let seed = rng.gen_range(0..1_000_000u64);
    match idx % 11 {
        0 => GraphFamily::Complete {
            n: rng.gen_range(3..=10),
        },
        1 => GraphFamily::Cycle {
            n: rng.gen_range(3..=10),
        },
        2 => GraphFamily::Star {
            n: rng.gen_range(4..=10),
        },
        3 => GraphFamily::Wheel {
            n: rng.gen_range(5..=10),
        },
        4 => GraphFamily::Ladder {
            k: rng.gen_range(3..=5),
        },
        5 => GraphFamily::CircularLadder {
            k: rng.gen_range(3..=5),
        },
        6 => GraphFamily::Antiprism {
            k: rng.gen_range(3..=5),
        },
        7 => {
            let (rows, cols) = [(2, 2), (2, 3), (3, 3), (2, 4), (2, 5)][rng.gen_range(0..5)];
            GraphFamily::Grid2d { rows, cols }
        }
        8 => {
            let (n, k) = [(8, 3), (10, 3), (9, 4), (10, 4), (10, 5)][rng.gen_range(0..5)];
            GraphFamily::RandomRegular { n, k, seed }
        }
        9 => GraphFamily::TrivialAut {
            n: rng.gen_range(7..=10),
            extra: 0,
            seed,
        },
        _ => GraphFamily::HandPicked {
            name: "petersen".into(),
        },
    }
}

fn random_angles(rng: &mut ChaCha8Rng, p: usize) -> Angles {
    let betas = (0..p).map(|_| rng.gen_range(0.0..PI)).collect();
    let gammas = (0..p).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    Angles::new(betas, gammas).unwrap()
}

fn invariance() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_p, mut worst_a) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let fam = random_family(&mut rng, i);
        let p = rng.gen_range(1..=4);
        let angles = random_angles(&mut rng, p);
        let g = fam.generate().unwrap();
        let orbits = bitstring_orbits(&automorphism_generators(&g).unwrap(), true).unwrap();
        let state = evolve(&maxcut_diagonal(&g).unwrap(), &angles);
        let s = orbit_spread(&state, &orbits).unwrap();
        worst_p = worst_p.max(s.probability);
        worst_a = worst_a.max(s.amplitude);
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst_p < 1e-10 && worst_a < 1e-10 && secs < 60.0,
        format!("50 cases, max spread prob {worst_p:.1e} amp {worst_a:.1e}, {secs:.2}s"),
    )
}

fn quotient_counts() -> Outcome {
    let mut bad = Vec::new();
    for n in 2..=10usize {
        let trivial = PermGroup::trivial(n);
        let sym = PermGroup::symmetric(n);
        let cases = [
            (
                quotient_dimension(&trivial, true).unwrap(),
                1u64 << (n - 1),
                "Z2",
            ),
            (quotient_dimension(&sym, false).unwrap(), n as u64 + 1, "Sn"),
            (
                quotient_dimension(&trivial, false).unwrap(),
                1u64 << n,
                "trivial",
            ),
            (
                quotient_dimension(&sym, true).unwrap(),
                (n / 2 + 1) as u64,
                "Sn x Z2",
            ),
        ];
        for (q, want, name) in cases {
            if q.dim != want || !q.consistent() {
                bad.push(format!("n={n} {name}: {} vs {want}", q.dim));
            }
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            "n = 2..10, four groups, all routes agree".into()
        } else {
            bad.join("; ")
        },
    )
}

fn reduced_vs_full() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_h = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=12);
        let p = rng.gen_range(1..=6);
        let angles = random_angles(&mut rng, p);
        let diag = maxcut_diagonal(&GraphFamily::Complete { n }.generate().unwrap()).unwrap();
        let full = expectation(&evolve(&diag, &angles), &diag).unwrap();
        let red = reduced_evolve(&hamming_reduced_ops(n).unwrap(), &angles).expectation;
        worst_h = worst_h.max((full - red).abs());
    }
    let mut worst_g = 0.0f64;
    for i in 0..30 {
        let fam = random_family(&mut rng, i);
        let p = rng.gen_range(1..=6);
        let angles = random_angles(&mut rng, p);
        let g = fam.generate().unwrap();
        let diag = maxcut_diagonal(&g).unwrap();
        let full = expectation(&evolve(&diag, &angles), &diag).unwrap();
        let ops = reduce_operators(&diag, &build_orbit_basis(&g, true).unwrap()).unwrap();
        worst_g = worst_g.max((full - reduced_evolve(&ops, &angles).expectation).abs());
    }
    outcome(
        worst_h < 1e-9 && worst_g < 1e-9,
        format!(
            "Hamming 100 cases max err {worst_h:.1e}; orbit basis 30 cases max err {worst_g:.1e}"
        ),
    )
}

/// ⟨C⟩ for one edge at depth 1 from explicit 4×4 matrices.
fn single_edge_dense(beta: f64, gamma: f64) -> f64 {
    let c = Complex64::new(beta.cos(), 0.0);
    let s = Complex64::new(0.0, -beta.sin());
    let rx = [[c, s], [s, c]];
    let cost = [0.0, 1.0, 1.0, 0.0];
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (x, row) in m.iter_mut().enumerate() {
        for (y, v) in row.iter_mut().enumerate() {
            *v = rx[x & 1][y & 1] * rx[x >> 1][y >> 1];
        }
    }
    let phased: Vec<Complex64> = cost
        .iter()
        .map(|&f| Complex64::cis(-gamma * f) * 0.5)
        .collect();
    (0..4)
        .map(|x| {
            let a: Complex64 = (0..4).map(|y| m[x][y] * phased[y]).sum();
            a.norm_sqr() * cost[x]
        })
        .sum()
}

fn closed_form() -> Outcome {
    let g = Graph::new(2, [(0, 1)]).unwrap();
    let diag = maxcut_diagonal(&g).unwrap();
    let mut worst = 0.0f64;
    for i in 0..50 {
        for j in 0..50 {
            let beta = PI * i as f64 / 50.0;
            let gamma = 2.0 * PI * j as f64 / 50.0;
            let formula = 0.5 + 0.5 * (4.0 * beta).sin() * gamma.sin();
            let dense = single_edge_dense(beta, gamma);
            let sim = expectation(
                &evolve(&diag, &Angles::new(vec![beta], vec![gamma]).unwrap()),
                &diag,
            )
            .unwrap();
            worst = worst
                .max((formula - dense).abs())
                .max((formula - sim).abs());
        }
    }
    outcome(worst < 1e-12, format!("50x50 grid, max err {worst:.1e}"))
}

fn feature_values() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let k20 = exact_features(&GraphFamily::Complete { n: 20 }.generate().unwrap()).unwrap();
    let ok = (k20.log_aut - 42.3).abs() <= 0.05
        && k20.n_orbits == 1
        && (k20.entropy - 3.0).abs() <= 0.05;
    pass &= ok;
    notes.push(format!(
        "K20 ({:.3}, {}, {:.3})",
        k20.log_aut, k20.n_orbits, k20.entropy
    ));
    let mut worst_cycle = 0.0f64;
    for n in 4..=20 {
        let g = GraphFamily::Cycle { n }.generate().unwrap();
        let a = approx_features(&g, 1, &FeatureOptions::default()).unwrap();
        worst_cycle = worst_cycle.max((a.avg_log_aut - 0.7).abs());
    }
    pass &= worst_cycle <= 0.05;
    notes.push(format!(
        "cycle one-edge max |avg log - 0.7| {worst_cycle:.3}"
    ));
    let mut trivial_ok = true;
    for n in 7..=19 {
        for seed in 0..3 {
            let g = GraphFamily::TrivialAut { n, extra: 0, seed }
                .generate()
                .unwrap();
            let f = exact_features(&g).unwrap();
            trivial_ok &= f.log_aut == 0.0 && f.entropy == 0.0 && f.n_orbits == n;
        }
    }
    pass &= trivial_ok;
    notes.push(format!("trivial n=7..19 log|Aut| = I(G) = 0: {trivial_ok}"));
    outcome(pass, notes.join("; "))
}

struct Desk {
    records: Vec<InstanceRecord>,
    path: std::path::PathBuf,
    gen_secs: f64,
    outcome: qaoasym::pipeline::TrainOutcome,
}

fn correlation_signs(d: &Desk) -> Outcome {
    let families: std::collections::BTreeSet<&str> =
        d.records.iter().map(|r| r.generator.name()).collect();
    let max_n = d.records.iter().map(|r| r.n).max().unwrap_or(0);
    let shape_ok = d.records.len() >= 120 && max_n <= 14 && families.len() >= 11;
    let rows = &d.outcome.report.correlations;
    let agree = d.outcome.report.sign_agreement();
    let mags: Vec<String> = rows
        .iter()
        .zip(EXPECTED_SIGNS)
        .map(|(c, s)| {
            format!(
                "{} {:+.2} (want {})",
                c.feature,
                c.r.unwrap_or(f64::NAN),
                if s < 0 { '-' } else { '+' }
            )
        })
        .collect();
    outcome(
        shape_ok && agree >= 9,
        format!(
            "{} records, {} families, n <= {max_n}; {agree}/10 signs match; {}",
            d.records.len(),
            families.len(),
            mags.join(", ")
        ),
    )
}

fn prediction_quality(d: &Desk) -> Outcome {
    let r = &d.outcome.report;
    let (a, b) = (&r.regression, &r.ordinal);
    let pass = a.test_median_abs_err <= 2.5
        && b.test_median_abs_err <= 2.5
        && a.test_pearson.is_some_and(|v| v >= 0.4)
        && b.test_pearson.is_some_and(|v| v >= 0.4);
    outcome(
        pass,
        format!(
            "regression MAE {:.2} r {:.2}; ordinal MAE {:.2} r {:.2}",
            a.test_median_abs_err,
            a.test_pearson.unwrap_or(f64::NAN),
            b.test_median_abs_err,
            b.test_pearson.unwrap_or(f64::NAN)
        ),
    )
}

fn mean_by_n<'a>(records: impl Iterator<Item = &'a InstanceRecord>) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for r in records.filter(|r| !r.censored()) {
        let e = acc.entry(r.n).or_default();
        e.0 += r.p_min.unwrap() as f64;
        e.1 += 1.0;
    }
    acc.into_iter().map(|(n, (s, c))| (n, s / c)).collect()
}

fn symmetric_vs_trivial(d: &Desk) -> Outcome {
    let sym = mean_by_n(
        d.records
            .iter()
            .filter(|r| matches!(r.generator.name(), "complete" | "star")),
    );
    let triv = mean_by_n(
        d.records
            .iter()
            .filter(|r| r.generator.name() == "trivial-aut"),
    );
    let common: Vec<usize> = sym
        .keys()
        .filter(|n| triv.contains_key(n))
        .copied()
        .collect();
    let rows: Vec<String> = common
        .iter()
        .map(|n| format!("n={n} {:.1}<={:.1}", sym[n], triv[n]))
        .collect();
    outcome(
        !common.is_empty() && common.iter().all(|n| sym[n] <= triv[n]),
        rows.join(" "),
    )
}

fn performance(d: &Desk) -> Outcome {
    let g = GraphFamily::RandomRegular {
        n: 16,
        k: 3,
        seed: 5,
    }
    .generate()
    .unwrap();
    let diag = maxcut_diagonal(&g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let angles = random_angles(&mut rng, 10);
    let t0 = Instant::now();
    let e = expectation(&evolve(&diag, &angles), &diag).unwrap();
    let evolve_secs = t0.elapsed().as_secs_f64();
    assert!(e.is_finite());

    let cfg = DatasetConfig::profile("wide").unwrap();
    let mut worst = 0.0f64;
    let mut count = 0;
    for fam in cfg.instances().unwrap() {
        let g = fam.generate().unwrap();
        let t = Instant::now();
        automorphism_generators(&g).unwrap();
        worst = worst.max(t.elapsed().as_secs_f64());
        count += 1;
    }
    let threads = rayon::current_num_threads();
    let pass = evolve_secs < 5.0 && worst < 1.0 && d.gen_secs < 4.0 * 3600.0;
    outcome(
        pass,
        format!(
            "evolve n=16 p=10 {evolve_secs:.3}s; aut search max {worst:.4}s over {count} graphs (n <= 22); \
             desk generation {:.0}s on {threads} thread(s)",
            d.gen_secs
        ),
    )
}

fn determinism(d: &Desk, cfg: &DatasetConfig, dir: &Path) -> Outcome {
    let original = std::fs::read_to_string(&d.path).unwrap();
    let keep: String = original
        .lines()
        .take(100)
        .map(|l| format!("{l}\n"))
        .collect();
    let rerun = dir.join("rerun.jsonl");
    std::fs::write(&rerun, keep).unwrap();
    let summary = gen_dataset(cfg, &rerun).unwrap();
    let identical = std::fs::read_to_string(&rerun).unwrap() == original;

    let again = train(&d.records, &TrainConfig::default()).unwrap();
    let model_path = dir.join("model.txt");
    again.predictor.save(&model_path).unwrap();
    let loaded = Predictor::load(&model_path).unwrap();
    let mut worst = 0.0f64;
    for r in &d.records {
        let x = r.features.to_array();
        for (a, b) in [
            (
                d.outcome.predictor.predict_regression(&x).unwrap(),
                loaded.predict_regression(&x).unwrap(),
            ),
            (
                d.outcome.predictor.predict_ordinal(&x).unwrap(),
                loaded.predict_ordinal(&x).unwrap(),
            ),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    let same_split = again.split == d.outcome.split;
    outcome(
        identical && same_split && worst <= 1e-9,
        format!(
            "regenerated {} of {} records, byte-identical file: {identical}; same split: {same_split}; \
             max prediction diff after retrain + reload {worst:.1e}",
            summary.written, summary.instances
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let o = f();
        println!(
            "{} {id:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, name, o));
    };
    run(1, "orbit invariance", &mut invariance);
    run(2, "quotient dimensions", &mut quotient_counts);
    run(3, "reduced matches full", &mut reduced_vs_full);
    run(4, "single-edge closed form", &mut closed_form);
    run(5, "feature values", &mut feature_values);

    let dir = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig::profile("desk").unwrap();
    let path = dir.path().join("desk.jsonl");
    let t0 = Instant::now();
    gen_dataset(&cfg, &path).unwrap();
    let gen_secs = t0.elapsed().as_secs_f64();
    let records = read_records(&path).unwrap();
    let outcome = train(&records, &TrainConfig::default()).unwrap();
    let desk = Desk {
        records,
        path,
        gen_secs,
        outcome,
    };
    run(6, "correlation signs", &mut || correlation_signs(&desk));
    run(7, "prediction quality", &mut || prediction_quality(&desk));
    run(8, "symmetric families need less depth", &mut || {
        symmetric_vs_trivial(&desk)
    });
    run(9, "performance", &mut || performance(&desk));
    run(10, "determinism", &mut || {
        determinism(&desk, &cfg, dir.path())
    });

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
