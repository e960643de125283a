use num_complex::Complex64;
use proptest::prelude::*;
use qaoasym::graph::{Graph, GraphFamily};
use qaoasym::schedule::max_cut_brute;
use qaoasym::sim::{evolve, expectation, maxcut_diagonal, probabilities, Angles, StateVector};

fn cut(g: &Graph, x: usize) -> f64 {
    g.edges()
        .iter()
        .filter(|&&(u, v)| ((x >> u) ^ (x >> v)) & 1 == 1)
        .count() as f64
}

/// ⟨x| e^{-iβ ΣX} |y⟩ = Π_j (cos β if x_j = y_j else −i sin β).
fn mixer_element(n: usize, beta: f64, x: usize, y: usize) -> Complex64 {
    let d = (x ^ y).count_ones() as i32;
    Complex64::new(beta.cos(), 0.0).powi(n as i32 - d) * Complex64::new(0.0, -beta.sin()).powi(d)
}

/// Dense-matrix evolution, independent of the in-place kernels.
fn dense_evolve(g: &Graph, betas: &[f64], gammas: &[f64]) -> Vec<Complex64> {
    let n = g.n();
    let dim = 1usize << n;
    let mut psi = vec![Complex64::new((dim as f64).sqrt().recip(), 0.0); dim];
    for (&b, &c) in betas.iter().zip(gammas) {
        let phased: Vec<Complex64> = (0..dim)
            .map(|x| psi[x] * Complex64::cis(-c * cut(g, x)))
            .collect();
        psi = (0..dim)
            .map(|x| {
                (0..dim)
                    .map(|y| mixer_element(n, b, x, y) * phased[y])
                    .sum()
            })
            .collect();
    }
    psi
}

fn arb_small_graph() -> impl Strategy<Value = Graph> {
    (2usize..=6).prop_flat_map(|n| {
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

fn arb_angles(max_p: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_p).prop_flat_map(|p| {
        (
            proptest::collection::vec(-4.0f64..4.0, p),
            proptest::collection::vec(-7.0f64..7.0, p),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_dense_matrix_oracle(g in arb_small_graph(), (betas, gammas) in arb_angles(3)) {
        let diag = maxcut_diagonal(&g).unwrap();
        let state = evolve(&diag, &Angles::new(betas.clone(), gammas.clone()).unwrap());
        let want = dense_evolve(&g, &betas, &gammas);
        for (a, b) in state.amplitudes().iter().zip(&want) {
            prop_assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn norm_is_conserved(g in arb_small_graph(), (betas, gammas) in arb_angles(8)) {
        let diag = maxcut_diagonal(&g).unwrap();
        let state = evolve(&diag, &Angles::new(betas, gammas).unwrap());
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        let total: f64 = probabilities(&state).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_is_bounded(g in arb_small_graph(), (betas, gammas) in arb_angles(4)) {
        let diag = maxcut_diagonal(&g).unwrap();
        let e = expectation(&evolve(&diag, &Angles::new(betas, gammas).unwrap()), &diag).unwrap();
        prop_assert!(e >= -1e-12 && e <= diag.max() + 1e-12);
    }

    #[test]
    fn diagonal_is_the_cut_function(g in arb_small_graph()) {
        let diag = maxcut_diagonal(&g).unwrap();
        for x in 0..1usize << g.n() {
            prop_assert_eq!(diag.values()[x], cut(&g, x));
        }
        prop_assert_eq!(diag.max() as usize, max_cut_brute(&g).unwrap());
    }
}

#[test]
fn zero_angles_leave_the_plus_state() {
    let g = GraphFamily::Cycle { n: 5 }.generate().unwrap();
    let diag = maxcut_diagonal(&g).unwrap();
    let state = evolve(&diag, &Angles::new(vec![0.0; 3], vec![0.0; 3]).unwrap());
    let plus = StateVector::plus(5);
    for (a, b) in state.amplitudes().iter().zip(plus.amplitudes()) {
        assert!((a - b).norm() < 1e-15);
    }
    // ⟨C⟩ of |+⟩ is |E|/2.
    assert!((expectation(&state, &diag).unwrap() - 2.5).abs() < 1e-12);
}

#[test]
fn known_optima() {
    assert_eq!(
        max_cut_brute(&GraphFamily::Complete { n: 4 }.generate().unwrap()).unwrap(),
        4
    );
    assert_eq!(
        max_cut_brute(&GraphFamily::Complete { n: 7 }.generate().unwrap()).unwrap(),
        12
    );
    assert_eq!(
        max_cut_brute(&GraphFamily::Cycle { n: 7 }.generate().unwrap()).unwrap(),
        6
    );
    assert_eq!(
        max_cut_brute(&GraphFamily::Cycle { n: 8 }.generate().unwrap()).unwrap(),
        8
    );
    let petersen = GraphFamily::HandPicked {
        name: "petersen".into(),
    }
    .generate()
    .unwrap();
    assert_eq!(max_cut_brute(&petersen).unwrap(), 12);
}
