use proptest::prelude::*;
use qaoasym::dataset::{InstanceRecord, Timing, SCHEMA_VERSION};
use qaoasym::features::SymmetryFeatures;
use qaoasym::graph::{Graph, GraphFamily};
use qaoasym::schedule::LinearSchedule;

fn arb_graph() -> impl Strategy<Value = Graph> {
    (1usize..=12).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let m = pairs.len();
        proptest::collection::vec(any::<bool>(), m).prop_map(move |mask| {
            Graph::new(
                n,
                pairs.iter().zip(&mask).filter(|(_, &k)| k).map(|(&e, _)| e),
            )
            .unwrap()
        })
    })
}

fn arb_family() -> impl Strategy<Value = GraphFamily> {
    prop_oneof![
        (1usize..30).prop_map(|n| GraphFamily::Complete { n }),
        (1usize..30).prop_map(|n| GraphFamily::Cycle { n }),
        (1usize..30).prop_map(|n| GraphFamily::Star { n }),
        (1usize..30).prop_map(|n| GraphFamily::Wheel { n }),
        (1usize..15).prop_map(|k| GraphFamily::Ladder { k }),
        (1usize..15).prop_map(|k| GraphFamily::CircularLadder { k }),
        (1usize..15).prop_map(|k| GraphFamily::Antiprism { k }),
        (1usize..8, 1usize..8).prop_map(|(rows, cols)| GraphFamily::Grid2d { rows, cols }),
        (1usize..30, 1usize..6, any::<u64>()).prop_map(|(n, k, seed)| GraphFamily::RandomRegular {
            n,
            k,
            seed
        }),
        (1usize..30, 0usize..6, any::<u64>())
            .prop_map(|(n, extra, seed)| GraphFamily::TrivialAut { n, extra, seed }),
        "[a-z][a-z-]{0,12}".prop_map(|name| GraphFamily::HandPicked { name }),
    ]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3f64..1e3
    ]
}

prop_compose! {
    fn arb_record()(
        fam in arb_family(),
        g in arb_graph(),
        feats in proptest::collection::vec(finite(), 8),
        counts in (1usize..40, 1usize..40),
        p_min in proptest::option::of(1usize..30),
        sched in (1usize..30, finite(), finite(), finite(), finite()),
        misc in (finite(), 0usize..500, any::<u64>(), any::<bool>()),
        timing in proptest::option::of((0.0f64..1e4, 0.0f64..1e4)),
    ) -> InstanceRecord {
        InstanceRecord {
            schema_version: SCHEMA_VERSION,
            id: fam.to_string(),
            family: fam.stratum(),
            generator: fam,
            n: g.n(),
            edges: g.edges().to_vec(),
            optimum_cut: misc.1,
            features: SymmetryFeatures {
                log_aut: feats[0],
                avg_log_aut_1: feats[1],
                avg_log_aut_2: feats[2],
                n_vertices: counts.0,
                n_orbits: counts.1,
                avg_orbits_1: feats[3],
                avg_orbits_2: feats[4],
                entropy: feats[5],
                avg_entropy_1: feats[6],
                avg_entropy_2: feats[7],
            },
            pair_samples: misc.1 * 3,
            p_min,
            ratio_achieved: misc.0,
            best_schedule: LinearSchedule {
                p: sched.0,
                beta_start: sched.1,
                beta_end: sched.2,
                gamma_start: sched.3,
                gamma_end: sched.4,
            },
            target_ratio: 0.95,
            p_start: 2,
            p_cap: 25,
            restarts: 50,
            search_seed: misc.2,
            reduced_backend: misc.3,
            software_version: "0.1.0".into(),
            timing: timing.map(|(a, b)| Timing { features_secs: a, pmin_secs: b }),
        }
    }
}

proptest! {
    #[test]
    fn edge_list_round_trip(g in arb_graph()) {
        let text = g.to_edge_list();
        prop_assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn family_spec_round_trip(fam in arb_family()) {
        let s = fam.to_string();
        prop_assert_eq!(s.parse::<GraphFamily>().unwrap(), fam);
    }

    #[test]
    fn jsonl_record_round_trip(rec in arb_record()) {
        let line = rec.to_json_line().unwrap();
        prop_assert!(!line.contains('\n'));
        let back = InstanceRecord::from_json_line(&line).unwrap();
        prop_assert_eq!(&back, &rec);
        prop_assert_eq!(back.to_json_line().unwrap(), line);
    }
}

#[test]
fn wrong_schema_version_is_rejected() {
    let cfg = qaoasym::dataset::DatasetConfig::from_toml(
        "name = 't'\nseed = 3\nrestarts = 1\nfamilies = []",
    )
    .unwrap();
    let rec = qaoasym::dataset::compute_record(&GraphFamily::Cycle { n: 4 }, &cfg).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&rec.to_json_line().unwrap()).unwrap();
    assert!(InstanceRecord::from_json_line(&v.to_string()).is_ok());
    v["schema_version"] = serde_json::json!(SCHEMA_VERSION + 1);
    assert!(InstanceRecord::from_json_line(&v.to_string()).is_err());
}
