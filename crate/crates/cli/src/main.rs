use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qaoasym::autgroup::{automorphism_search, bitstring_orbits, DEFAULT_SEARCH_BUDGET};
use qaoasym::dataset::{gen_dataset, read_records, DatasetConfig, SplitSpec};
use qaoasym::features::{feature_vector_with, FeatureOptions, SymmetryFeatures};
use qaoasym::graph::{Graph, GraphFamily};
use qaoasym::ml::Predictor;
use qaoasym::pipeline::{
    correlation_table, feature_correlations, predict_graph, train, TrainConfig,
};
use qaoasym::reduced::{build_orbit_basis, quotient_dimension, reduce_operators, reduced_evolve};
use qaoasym::schedule::{find_pmin, LinearSchedule, PminConfig, BETA_MAX, GAMMA_MAX};
use qaoasym::sim::{
    check_symmetry_conditions, evolve, expectation, maxcut_diagonal, orbit_spread,
    probabilities_csv, MAX_SYMMETRY_CHECK_QUBITS,
};

/// Exit code for a failed symmetry verification.
const EXIT_VERIFY: u8 = 4;
const SPREAD_TOLERANCE: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "qaoasym",
    version,
    about = "QAOA depth, graph symmetry and symmetry-reduced simulation"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Base seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    target_ratio: Option<f64>,
    #[arg(long, global = true)]
    p_start: Option<usize>,
    #[arg(long, global = true)]
    p_cap: Option<usize>,
    /// Random restarts per depth.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

impl Global {
    fn pmin_config(&self) -> PminConfig {
        let d = PminConfig::default();
        PminConfig {
            target_ratio: self.target_ratio.unwrap_or(d.target_ratio),
            p_start: self.p_start.unwrap_or(d.p_start),
            p_cap: self.p_cap.unwrap_or(d.p_cap),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed: self.seed.unwrap_or(0),
            nelder_mead: d.nelder_mead,
        }
    }
}

/// A graph given as an edge-list file or a family spec such as `cycle:8`,
/// `random-regular:12,3@7` or `hand-picked:petersen`.
#[derive(Args)]
struct GraphArg {
    graph: String,
}

impl GraphArg {
    fn load(&self) -> anyhow::Result<Graph> {
        let path = Path::new(&self.graph);
        if path.is_file() {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            return Ok(Graph::parse_edge_list(&text)?);
        }
        let fam: GraphFamily = self.graph.parse()?;
        Ok(fam.generate()?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write edge lists for family specs or for every instance of a config.
    GenGraphs {
        families: Vec<String>,
        /// Dataset config file or built-in profile name.
        #[arg(long)]
        config: Option<String>,
        /// Directory for `<id>.txt` files; stdout if omitted.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// The ten symmetry features.
    Features {
        #[command(flatten)]
        graph: GraphArg,
        /// Subsample two-edge deletions to this many pairs on large graphs.
        #[arg(long)]
        max_pairs: Option<usize>,
    },
    /// Smallest depth reaching the target approximation ratio.
    Pmin {
        #[command(flatten)]
        graph: GraphArg,
        /// Write the per-depth trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evolve a linear schedule and report ⟨C⟩.
    Simulate {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, short)]
        p: usize,
        /// `beta_start,beta_end,gamma_start,gamma_end`; random if omitted.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        schedule: Option<Vec<f64>>,
        /// Write basis-state probabilities as CSV.
        #[arg(long)]
        probs: Option<PathBuf>,
    },
    /// Quotient dimensions and, with `--p`, a reduced-vs-full comparison.
    Reduce {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, short)]
        p: Option<usize>,
    },
    /// Check orbit invariance of the evolved state; exit 4 on failure.
    Verify {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, short, default_value_t = 3)]
        p: usize,
    },
    /// Generate a JSONL dataset from a config file or profile.
    GenDataset {
        #[arg(long, default_value = "desk")]
        config: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train both models and write the report.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Model file to write.
        #[arg(long)]
        model: PathBuf,
        /// Directory for report.md, report.json and scatter.csv.
        #[arg(long)]
        report_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0.30)]
        test_fraction: f64,
    },
    /// Predict p_min for a graph, or for every record of a dataset.
    Predict {
        #[arg(long)]
        model: PathBuf,
        graph: Option<String>,
        #[arg(long, conflicts_with = "graph")]
        dataset: Option<PathBuf>,
    },
    /// Summarize a dataset: counts per family and feature correlations.
    Report {
        #[arg(long)]
        dataset: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<qaoasym::Error>())
                .map_or(1, |q| q.exit_code());
            ExitCode::from(code as u8)
        }
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap());
}

fn random_schedule(p: usize, seed: u64) -> anyhow::Result<LinearSchedule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(LinearSchedule::new(
        p,
        (rng.gen_range(0.0..BETA_MAX), rng.gen_range(0.0..BETA_MAX)),
        (rng.gen_range(0.0..GAMMA_MAX), rng.gen_range(0.0..GAMMA_MAX)),
    )?)
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::GenGraphs {
            families,
            config,
            out_dir,
        } => {
            let mut fams: Vec<GraphFamily> = families
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_, _>>()?;
            if let Some(c) = config {
                fams.extend(DatasetConfig::load(c)?.instances()?);
            }
            if fams.is_empty() {
                bail!(qaoasym::Error::InvalidParams("no families given".into()));
            }
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(dir)?;
            }
            for fam in fams {
                let graph = fam.generate()?;
                let id = fam.to_string();
                match out_dir {
                    Some(dir) => {
                        let name: String = id
                            .chars()
                            .map(|c| {
                                if c.is_ascii_alphanumeric() || c == '-' {
                                    c
                                } else {
                                    '_'
                                }
                            })
                            .collect();
                        std::fs::write(dir.join(format!("{name}.txt")), graph.to_edge_list())?;
                    }
                    None => print!("# {id}\n{}", graph.to_edge_list()),
                }
            }
        }
        Command::Features { graph, max_pairs } => {
            let graph = graph.load()?;
            let opts = FeatureOptions {
                max_pairs: *max_pairs,
                seed: g.seed.unwrap_or(0),
                ..FeatureOptions::default()
            };
            let (f, pairs) = feature_vector_with(&graph, &opts)?;
            if g.json {
                print_json(&json!({ "features": f, "pair_samples": pairs }));
            } else {
                for (name, v) in SymmetryFeatures::NAMES.iter().zip(f.to_array()) {
                    println!("{name:>14}  {v:.6}");
                }
            }
        }
        Command::Pmin { graph, trace } => {
            let graph = graph.load()?;
            let res = find_pmin(&graph, &g.pmin_config())?;
            if let Some(path) = trace {
                std::fs::write(path, res.trace_csv())?;
            }
            if g.json {
                print_json(&serde_json::to_value(&res)?);
            } else {
                match res.p_min {
                    Some(p) => println!("p_min = {p}"),
                    None => println!(
                        "p_min censored (no depth up to {} reached the target)",
                        g.pmin_config().p_cap
                    ),
                }
                let s = res.best_schedule;
                println!(
                    "ratio = {:.6}, optimum cut = {}",
                    res.ratio_achieved, res.optimum_cut
                );
                println!(
                    "beta {:.6} -> {:.6}, gamma {:.6} -> {:.6}",
                    s.beta_start, s.beta_end, s.gamma_start, s.gamma_end
                );
            }
        }
        Command::Simulate {
            graph,
            p,
            schedule,
            probs,
        } => {
            let graph = graph.load()?;
            let sched = match schedule {
                Some(v) => LinearSchedule::new(*p, (v[0], v[1]), (v[2], v[3]))?,
                None => random_schedule(*p, g.seed.unwrap_or(0))?,
            };
            let diag = maxcut_diagonal(&graph)?;
            let state = evolve(&diag, &sched.expand());
            let e = expectation(&state, &diag)?;
            let opt = diag.max();
            if let Some(path) = probs {
                std::fs::write(path, probabilities_csv(&state))?;
            }
            if g.json {
                print_json(
                    &json!({ "schedule": sched, "expectation": e, "optimum_cut": opt, "ratio": e / opt }),
                );
            } else {
                println!("<C> = {e:.10}, optimum = {opt}, ratio = {:.6}", e / opt);
            }
        }
        Command::Reduce { graph, p } => {
            let graph = graph.load()?;
            let search = automorphism_search(&graph, DEFAULT_SEARCH_BUDGET)?;
            let without = quotient_dimension(&search.group, false)?;
            let with = quotient_dimension(&search.group, true)?;
            let mut out = json!({
                "n": graph.n(),
                "aut_order": search.group.order().to_string(),
                "dim_without_flip": without,
                "dim_with_flip": with,
            });
            if let Some(p) = p {
                let sched = random_schedule(*p, g.seed.unwrap_or(0))?;
                let angles = sched.expand();
                let diag = maxcut_diagonal(&graph)?;
                let full = expectation(&evolve(&diag, &angles), &diag)?;
                let ops = reduce_operators(&diag, &build_orbit_basis(&graph, true)?)?;
                let red = reduced_evolve(&ops, &angles).expectation;
                out["comparison"] = json!({ "p": p, "full": full, "reduced": red, "difference": (full - red).abs() });
            }
            if g.json {
                print_json(&out);
            } else {
                println!("|Aut| = {}", search.group.order());
                for (label, q) in [("without flip", &without), ("with flip", &with)] {
                    println!(
                        "{label}: dim {} (fixed-point avg {}, stabilizer avg {}, Σ1/|orbit| {:.6}, consistent {})",
                        q.dim,
                        q.fixed_point_average,
                        q.stabilizer_average,
                        q.inverse_orbit_sum,
                        q.consistent()
                    );
                }
                if let Some(c) = out.get("comparison") {
                    println!(
                        "p = {}: full {:.12}, reduced {:.12}, |diff| {:.3e}",
                        c["p"],
                        c["full"],
                        c["reduced"],
                        c["difference"].as_f64().unwrap()
                    );
                }
            }
        }
        Command::Verify { graph, p } => {
            let graph = graph.load()?;
            let grp = qaoasym::autgroup::automorphism_generators(&graph)?;
            let orbits = bitstring_orbits(&grp, true)?;
            let sched = random_schedule(*p, g.seed.unwrap_or(0))?;
            let diag = maxcut_diagonal(&graph)?;
            let state = evolve(&diag, &sched.expand());
            let spread = orbit_spread(&state, &orbits)?;
            let mut conditions = Vec::new();
            if graph.n() <= MAX_SYMMETRY_CHECK_QUBITS {
                let mask = (1usize << graph.n()) - 1;
                for gen in grp.generators() {
                    let map: Vec<usize> = (0..=mask).map(|x| gen.permute_bits(x)).collect();
                    conditions.push((gen.to_string(), check_symmetry_conditions(&map, &diag)?));
                }
                let flip: Vec<usize> = (0..=mask).map(|x| x ^ mask).collect();
                conditions.push(("flip".to_string(), check_symmetry_conditions(&flip, &diag)?));
            }
            let ok = spread.probability <= SPREAD_TOLERANCE
                && spread.amplitude <= SPREAD_TOLERANCE
                && conditions.iter().all(|(_, f)| f.both());
            if g.json {
                let conds: Vec<_> = conditions
                    .iter()
                    .map(|(name, f)| json!({ "symmetry": name, "cost_commutes": f.cost_commutes, "mixer_commutes": f.mixer_commutes }))
                    .collect();
                print_json(&json!({
                    "orbits": orbits.len(),
                    "schedule": sched,
                    "spread": spread,
                    "conditions": conds,
                    "ok": ok,
                }));
            } else {
                println!(
                    "{} bitstring orbits under Aut(G) and the global flip",
                    orbits.len()
                );
                println!(
                    "max spread within an orbit: probability {:.3e}, amplitude {:.3e}",
                    spread.probability, spread.amplitude
                );
                for (name, f) in &conditions {
                    println!(
                        "{name}: cost {} mixer {}",
                        f.cost_commutes, f.mixer_commutes
                    );
                }
                println!("{}", if ok { "OK" } else { "FAILED" });
            }
            if !ok {
                return Ok(EXIT_VERIFY);
            }
        }
        Command::GenDataset { config, out } => {
            let mut cfg = DatasetConfig::load(config)?;
            if let Some(s) = g.seed {
                cfg.seed = s;
            }
            cfg.target_ratio = g.target_ratio.unwrap_or(cfg.target_ratio);
            cfg.p_start = g.p_start.unwrap_or(cfg.p_start);
            cfg.p_cap = g.p_cap.unwrap_or(cfg.p_cap);
            cfg.restarts = g.restarts.unwrap_or(cfg.restarts);
            let summary = gen_dataset(&cfg, out)?;
            if g.json {
                print_json(&serde_json::to_value(summary)?);
            } else {
                println!(
                    "{} instances: {} already present, {} written ({} censored)",
                    summary.instances, summary.already_present, summary.written, summary.censored
                );
            }
        }
        Command::Train {
            dataset,
            model,
            report_dir,
            test_fraction,
        } => {
            let records = read_records(dataset)?;
            let seed = g.seed.unwrap_or(0);
            let cfg = TrainConfig {
                split: SplitSpec {
                    test_fraction: *test_fraction,
                    seed,
                },
                cv_seed: seed,
                ..TrainConfig::default()
            };
            let outcome = train(&records, &cfg)?;
            outcome.predictor.save(model)?;
            if let Some(dir) = report_dir {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("report.md"), outcome.report.to_markdown())?;
                std::fs::write(
                    dir.join("report.json"),
                    serde_json::to_string_pretty(&outcome.report)?,
                )?;
                std::fs::write(dir.join("scatter.csv"), outcome.report.scatter_csv())?;
                let split = json!({
                    "train": outcome.split.train.iter().map(|&i| &records[i].id).collect::<Vec<_>>(),
                    "test": outcome.split.test.iter().map(|&i| &records[i].id).collect::<Vec<_>>(),
                });
                std::fs::write(
                    dir.join("split.json"),
                    serde_json::to_string_pretty(&split)?,
                )?;
            }
            if g.json {
                let mut r = serde_json::to_value(&outcome.report)?;
                r.as_object_mut().unwrap().remove("scatter");
                print_json(&r);
            } else {
                print!("{}", outcome.report.to_markdown());
            }
        }
        Command::Predict {
            model,
            graph,
            dataset,
        } => {
            let predictor = Predictor::load(model)?;
            match (graph, dataset) {
                (Some(spec), None) => {
                    let graph = GraphArg {
                        graph: spec.clone(),
                    }
                    .load()?;
                    let pred = predict_graph(&predictor, &graph, &FeatureOptions::default())?;
                    if g.json {
                        print_json(&serde_json::to_value(&pred)?);
                    } else {
                        println!(
                            "regression {:.4}, ordinal {:.4}",
                            pred.regression, pred.ordinal
                        );
                    }
                }
                (None, Some(path)) => {
                    let records = read_records(path)?;
                    if g.json {
                        let rows: Vec<_> = records
                            .iter()
                            .map(|r| {
                                let x = r.features.to_array();
                                Ok(json!({
                                    "id": r.id,
                                    "p_min": r.p_min,
                                    "regression": predictor.predict_regression(&x)?,
                                    "ordinal": predictor.predict_ordinal(&x)?,
                                }))
                            })
                            .collect::<qaoasym::Result<_>>()?;
                        print_json(&serde_json::Value::Array(rows));
                    } else {
                        println!("id,p_min,regression,ordinal");
                        for r in &records {
                            let x = r.features.to_array();
                            println!(
                                "{},{},{:?},{:?}",
                                r.id,
                                r.p_min.map_or(String::new(), |p| p.to_string()),
                                predictor.predict_regression(&x)?,
                                predictor.predict_ordinal(&x)?
                            );
                        }
                    }
                }
                _ => bail!(qaoasym::Error::InvalidParams(
                    "give a graph or --dataset".into()
                )),
            }
        }
        Command::Report { dataset } => {
            let records = read_records(dataset)?;
            let mut families: std::collections::BTreeMap<
                &str,
                Vec<&qaoasym::dataset::InstanceRecord>,
            > = Default::default();
            for r in &records {
                families.entry(&r.family).or_default().push(r);
            }
            let corr = feature_correlations(&records)?;
            if g.json {
                let fam: Vec<_> = families
                    .iter()
                    .map(|(name, rs)| {
                        let p: Vec<usize> = rs.iter().filter_map(|r| r.p_min).collect();
                        json!({
                            "family": name,
                            "count": rs.len(),
                            "censored": rs.len() - p.len(),
                            "min_n": rs.iter().map(|r| r.n).min(),
                            "max_n": rs.iter().map(|r| r.n).max(),
                            "min_p_min": p.iter().min(),
                            "max_p_min": p.iter().max(),
                        })
                    })
                    .collect();
                print_json(
                    &json!({ "records": records.len(), "families": fam, "correlations": corr }),
                );
            } else {
                println!("| family | count | n | p_min | censored |\n|---|---|---|---|---|");
                for (name, rs) in &families {
                    let p: Vec<usize> = rs.iter().filter_map(|r| r.p_min).collect();
                    let span = |v: Vec<usize>| match (v.iter().min(), v.iter().max()) {
                        (Some(a), Some(b)) => format!("{a}-{b}"),
                        _ => "-".into(),
                    };
                    println!(
                        "| {name} | {} | {} | {} | {} |",
                        rs.len(),
                        span(rs.iter().map(|r| r.n).collect()),
                        span(p.clone()),
                        rs.len() - p.len()
                    );
                }
                println!();
                print!("{}", correlation_table(&corr));
            }
        }
    }
    Ok(0)
}
