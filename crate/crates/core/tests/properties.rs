use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use relest::estimators::{
    dist_ls_em, gd_wls, lae, ls_em, wls, DistEmConfig, GdConfig, LaeConfig, LsEmConfig,
};
use relest::graph::{
    incidence_matrix, kernel_dimension, pinv_laplacian, spectral_norm, weighted_laplacian, Graph,
    KERNEL_REL_TOL,
};
use relest::metrics::{nqe, summarize};
use relest::noise::{generate_er_graph, generate_state, sample_measurements, MixtureNoise};
use relest::objectives::{
    entropy, log_likelihood, objective_v, posterior, project_smallest, SoftLabels,
};
use relest::simnet::{run_rounds, SimConfig};
use relest::Problem;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn graph(n: usize, p_edge: f64, seed: u64) -> Graph {
    generate_er_graph(n, p_edge, seed).unwrap()
}

fn instance(n: usize, p_edge: f64, seed: u64) -> Problem {
    let g = graph(n, p_edge, seed);
    let x = generate_state(n, seed).unwrap();
    sample_measurements(&g, &x, MixtureNoise::new(0.05, 0.25, 0.1).unwrap(), seed)
        .unwrap()
        .problem()
        .unwrap()
}

fn weights(m: usize, seed: u64) -> Vec<f64> {
    // deterministic spread over [0.1, 10]
    (0..m)
        .map(|k| {
            let h = relest::noise::derive_seed(seed, k as u64);
            0.1 + 9.9 * (h >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn incidence_rows_have_one_plus_and_one_minus(n in 2usize..30, p_edge in 0.1f64..1.0, seed: u64) {
        let a = incidence_matrix(&graph(n, p_edge, seed)).to_dense();
        for row in a.row_iter() {
            prop_assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            prop_assert_eq!(row.iter().filter(|&&v| v == -1.0).count(), 1);
            prop_assert_eq!(row.iter().filter(|&&v| v == 0.0).count(), n - 2);
        }
        let ones = DVector::from_element(n, 1.0);
        prop_assert!((&a * ones).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pseudo_inverse_satisfies_penrose_identities(n in 2usize..50, p_edge in 0.1f64..1.0, seed: u64) {
        let g = graph(n, p_edge, seed);
        let a = incidence_matrix(&g);
        let l = weighted_laplacian(&a, &weights(g.n_edges(), seed)).unwrap();
        let lm = l.as_matrix();
        let pinv = pinv_laplacian(&l);
        let p = &pinv.matrix;
        prop_assert!(rel(&(lm * p * lm), lm) < 1e-10);
        prop_assert!(rel(&(p * lm * p), p) < 1e-10);
        let lp = lm * p;
        let pl = p * lm;
        prop_assert!(rel(&lp.transpose(), &lp) < 1e-10);
        prop_assert!(rel(&pl.transpose(), &pl) < 1e-10);
        prop_assert_eq!(pinv.kernel_dim, 1);
        prop_assert_eq!(kernel_dimension(&l, KERNEL_REL_TOL), 1);
        let ones = DVector::from_element(n, 1.0);
        prop_assert!((p * ones).norm() < 1e-10 * p.norm());
    }

    #[test]
    fn spectral_norm_squared_is_top_eigenvalue(n in 2usize..40, p_edge in 0.1f64..1.0, seed: u64, c in 0.1f64..10.0) {
        let a = incidence_matrix(&graph(n, p_edge, seed));
        let dense = a.to_dense();
        let ata = dense.transpose() * &dense;
        let top = ata.symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max);
        let s = a.spectral_norm();
        prop_assert!((s * s - top).abs() <= 1e-10 * top);
        prop_assert!((spectral_norm(&dense) - s).abs() <= 1e-10 * s);
        prop_assert!((spectral_norm(&(dense * c)) - c * s).abs() <= 1e-10 * c * s);
    }

    #[test]
    fn posterior_grows_with_residual_size(
        r1 in -5.0f64..5.0, r2 in -5.0f64..5.0,
        alpha in 0.01f64..1.0, ratio in 1.01f64..20.0, p in 0.001f64..0.499,
    ) {
        let beta = alpha * ratio;
        let (lo, hi) = if r1.abs() <= r2.abs() { (r1, r2) } else { (r2, r1) };
        let a = posterior(lo, alpha, beta, p).unwrap();
        let b = posterior(hi, alpha, beta, p).unwrap();
        prop_assert!(a <= b, "{} > {}", a, b);
    }

    #[test]
    fn posterior_stays_finite_at_extremes(r in -1e6f64..1e6, alpha in 1e-6f64..1.0, ratio in 1.0f64..1e3, p in 1e-9f64..0.4999) {
        let xi = posterior(r, alpha, alpha * ratio, p).unwrap();
        prop_assert!(xi.is_finite() && (0.0..=1.0).contains(&xi));
    }

    #[test]
    fn entropy_is_symmetric(xi in 0.0f64..=1.0) {
        prop_assert!((entropy(xi).unwrap() - entropy(1.0 - xi).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn projection_is_idempotent_and_shrinking(xi in prop::collection::vec(0.0f64..=1.0, 1..40), frac in 0.0f64..=1.0) {
        let s = ((xi.len() as f64) * frac).floor() as usize;
        let labels = SoftLabels::new(xi.clone()).unwrap();
        let once = project_smallest(&labels, s).unwrap();
        let twice = project_smallest(&once, s).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.as_slice().iter().zip(&xi).all(|(a, b)| a <= b));
        prop_assert!(once.as_slice().iter().filter(|&&v| v == 0.0).count() >= s);
    }

    #[test]
    fn labels_minimizing_v_recover_the_likelihood(
        n in 2usize..20, seed: u64, alpha in 0.02f64..0.5, ratio in 1.5f64..10.0, p in 0.01f64..0.49,
        spread in 0.0f64..1.0,
    ) {
        let prob = instance(n, 0.5, seed);
        let beta = alpha * ratio;
        let x = DVector::from_iterator(n, (0..n).map(|i| spread * ((i * 7 + 3) % 5) as f64 / 5.0));
        let r = prob.residual(&x);
        let pi: Vec<f64> = r.iter().map(|&v| posterior(v, alpha, beta, p).unwrap()).collect();
        let v = objective_v(&prob, &x, &SoftLabels::new(pi).unwrap(), alpha, beta, p).unwrap();
        let ll = log_likelihood(&prob, &x, alpha, beta, p).unwrap();
        let m = prob.n_edges() as f64;
        let gap = ll + v + 0.5 * m * LN_2PI;
        prop_assert!(gap.abs() < 1e-9, "gap {:e}", gap);
    }

    #[test]
    fn nqe_ignores_offsets_and_scale(
        x in prop::collection::vec(-10.0f64..10.0, 3..20), c in -100.0f64..100.0, k in 0.01f64..100.0,
    ) {
        let n = x.len();
        let mut t: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let m = mean(&t);
        t.iter_mut().for_each(|v| *v -= m);
        let base = nqe(&x, &t).unwrap();
        prop_assert!(base >= 0.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        prop_assert!((nqe(&shifted, &t).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
        let xs: Vec<f64> = x.iter().map(|v| v * k).collect();
        let ts: Vec<f64> = t.iter().map(|v| v * k).collect();
        prop_assert!((nqe(&xs, &ts).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn summary_statistics_are_ordered(values in prop::collection::vec(-1e3f64..1e3, 1..60)) {
        let s = summarize(&values).unwrap();
        prop_assert!(s.whisker_low <= s.q25 + 1e-12);
        prop_assert!(s.q25 <= s.median && s.median <= s.q75);
        prop_assert!(s.q75 <= s.whisker_high + 1e-12);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-9 <= s.mean && s.mean <= hi + 1e-9);
        prop_assert_eq!(s.n, values.len());
    }

    #[test]
    fn generated_data_is_valid_and_reproducible(n in 2usize..40, p_edge in 0.2f64..1.0, seed: u64) {
        let g = graph(n, p_edge, seed);
        let x = generate_state(n, seed).unwrap();
        prop_assert!(mean(&x).abs() < 1e-12);
        let noise = MixtureNoise::new(0.05, 0.25, 0.1).unwrap();
        let a = sample_measurements(&g, &x, noise, seed).unwrap();
        let b = sample_measurements(&g, &x, noise, seed).unwrap();
        prop_assert!(a.validate().is_ok());
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn estimates_are_centered(n in 3usize..16, seed: u64) {
        let prob = instance(n, 0.6, seed);
        let w = vec![1.0; prob.n_edges()];
        let outs = [
            wls(&prob, &w).unwrap().x_hat,
            lae(&prob, &LaeConfig::default()).unwrap().x_hat,
            lae(&prob, &LaeConfig::subgradient(0.05, 0.5, 200)).unwrap().x_hat,
            ls_em(&prob, &LsEmConfig::default()).unwrap().x_hat,
            dist_ls_em(&prob, &DistEmConfig::new(0.1, 0.05, 0.25)).unwrap().x_hat,
        ];
        for x in outs {
            prop_assert!(x.iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_descent_reaches_the_closed_form(n in 3usize..14, seed: u64, scale in prop::sample::select(vec![0.1, 0.5, 0.9, 1.5])) {
        let prob = instance(n, 0.6, seed);
        let w = weights(prob.n_edges(), seed);
        let l = weighted_laplacian(prob.incidence(), &w).unwrap();
        let tau = scale / spectral_norm(l.as_matrix());
        let gd = gd_wls(&prob, &w, &GdConfig { tau, tol: 1e-14, max_iter: 2_000_000 }).unwrap();
        let exact = wls(&prob, &w).unwrap();
        for (a, b) in gd.x_hat.iter().zip(&exact.x_hat) {
            prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
        }
    }

    // Only at the experiment scale: on small graphs the scale update, which
    // adds epsilon rather than epsilon ||1 - pi||_1 / |E|, can raise V~.
    #[test]
    fn ls_em_traces_are_monotone(seed: u64) {
        let prob = instance(50, 0.3, seed);
        let r = ls_em(&prob, &LsEmConfig::default()).unwrap();
        prop_assert!(r.iterations <= 500);
        for pair in r.trace.windows(2) {
            prop_assert!(pair[1].objective <= pair[0].objective + 1e-9);
            let (e0, e1) = (pair[0].epsilon.unwrap(), pair[1].epsilon.unwrap());
            prop_assert!(e1 <= e0 && e1 >= 0.0);
        }
    }

    #[test]
    fn distributed_traces_are_monotone(n in 5usize..25, seed: u64) {
        let prob = instance(n, 0.4, seed);
        let r = dist_ls_em(&prob, &DistEmConfig::new(0.1, 0.05, 0.25)).unwrap();
        for pair in r.trace.windows(2) {
            prop_assert!(pair[1].objective <= pair[0].objective + 1e-9);
        }
    }

    #[test]
    fn simulator_matches_matrix_form(n in 3usize..20, seed: u64, rounds in 1usize..60) {
        let prob = instance(n, 0.5, seed);
        let dist = DistEmConfig { tol: f64::MIN_POSITIVE, max_iter: rounds, ..DistEmConfig::new(0.1, 0.05, 0.25) };
        let matrix = dist_ls_em(&prob, &dist).unwrap();
        let sim = run_rounds(&prob, &SimConfig { log_messages: true, ..SimConfig::new(dist) }).unwrap();
        prop_assert_eq!(sim.rounds, matrix.iterations);
        for (a, b) in sim.result.x_hat.iter().zip(&matrix.x_hat) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let g = prob.graph();
        for m in sim.message_log().unwrap() {
            prop_assert!(g.has_edge_between(m.sender, m.receiver));
        }
    }
}
