use nalgebra::DVector;

use relest::estimators::{
    dist_ls_em, gd_wls, l0_oracle, l1_objective, lae, ls, ls_em, wls, DistEmConfig, GdConfig,
    LaeConfig, LsEmConfig,
};
use relest::example1 as ex;
use relest::graph::{spectral_norm, weighted_laplacian, Graph};
use relest::metrics::nqe;
use relest::noise::{generate_er_graph, generate_state, sample_measurements, MixtureNoise};
use relest::objectives::{edge_weights, posterior};
use relest::Problem;

fn noiseless(n: usize, seed: u64) -> (Problem, Vec<f64>) {
    let g = generate_er_graph(n, 0.5, seed).unwrap();
    let x = generate_state(n, seed).unwrap();
    let b = relest::graph::incidence_matrix(&g).apply(&DVector::from_column_slice(&x));
    (Problem::new(g, b).unwrap(), x)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn example_wls_and_ls_match_printed_estimates() {
    let p = ex::problem();
    let w = wls(&p, &ex::true_weights()).unwrap();
    assert!(
        max_diff(&w.x_hat, &ex::WLS_ESTIMATE) <= 5e-4,
        "{:?}",
        w.x_hat
    );
    let l = ls(&p).unwrap();
    assert!(
        max_diff(&l.x_hat, &ex::LS_ESTIMATE) <= 5e-4,
        "{:?}",
        l.x_hat
    );
    let ratio = |x: &[f64]| nqe(x, &ex::X_TRUE).unwrap() / 100.0;
    assert!((ratio(&w.x_hat) / ex::WLS_NQE_RATIO - 1.0).abs() <= 0.02);
    assert!((ratio(&l.x_hat) / ex::LS_NQE_RATIO - 1.0).abs() <= 0.02);
}

#[test]
fn example_lae_error_ratio() {
    let r = lae(&ex::problem(), &LaeConfig::default()).unwrap();
    assert!(r.converged);
    let ratio = nqe(&r.x_hat, &ex::X_TRUE).unwrap() / 100.0;
    assert!((ratio / ex::LAE_NQE_RATIO - 1.0).abs() <= 0.10, "{ratio}");
}

#[test]
fn noiseless_data_is_recovered() {
    for seed in 0..5 {
        let (p, x) = noiseless(12, seed);
        let w: Vec<f64> = (0..p.n_edges()).map(|k| 1.0 + k as f64).collect();
        assert!(max_diff(&wls(&p, &w).unwrap().x_hat, &x) < 1e-10);
        assert!(max_diff(&lae(&p, &LaeConfig::default()).unwrap().x_hat, &x) < 1e-6);
        let em = ls_em(&p, &LsEmConfig::default()).unwrap();
        assert!(max_diff(&em.x_hat, &x) < 1e-6, "seed {seed}");
        assert!(em.alpha_hat.unwrap().is_finite() && em.beta_hat.unwrap().is_finite());
        assert!(em.x_hat.iter().all(|v| v.is_finite()));
        let (small, _) = noiseless(6, seed);
        let z = l0_oracle(&small, 0.1, 1.0).unwrap();
        assert_eq!(z.support(), 0);
        let r = small.residual(&DVector::from_vec(z.x));
        assert!(r.amax() <= 0.3 + 1e-9);
    }
}

#[test]
fn gradient_descent_on_the_example_reaches_wls() {
    let p = ex::problem();
    let w = ex::true_weights();
    let l = weighted_laplacian(p.incidence(), &w).unwrap();
    let cfg = GdConfig {
        tau: 1.0 / spectral_norm(l.as_matrix()),
        tol: 1e-14,
        max_iter: 1_000_000,
    };
    let gd = gd_wls(&p, &w, &cfg).unwrap();
    assert!(gd.converged);
    assert!(max_diff(&gd.x_hat, &wls(&p, &w).unwrap().x_hat) < 1e-8);
}

#[test]
fn lae_modes_agree_on_the_objective() {
    for seed in 0..10 {
        let g = generate_er_graph(15, 0.4, seed).unwrap();
        let x = generate_state(15, seed).unwrap();
        let p = sample_measurements(&g, &x, MixtureNoise::new(0.05, 0.5, 0.2).unwrap(), seed)
            .unwrap()
            .problem()
            .unwrap();
        let irls = lae(&p, &LaeConfig::default()).unwrap();
        let sub = lae(&p, &LaeConfig::subgradient(0.05, 0.5, 20_000)).unwrap();
        let a = l1_objective(&p, &DVector::from_vec(irls.x_hat));
        let b = l1_objective(&p, &DVector::from_vec(sub.x_hat));
        assert!(
            (a - b).abs() <= 0.01 * a,
            "seed {seed}: irls {a} subgradient {b}"
        );
    }
}

#[test]
fn l0_oracle_on_the_example() {
    let p = ex::problem();
    let sol = l0_oracle(&p, ex::ALPHA, ex::BETA).unwrap();
    assert!(sol.support() <= 2, "{:?}", sol.z);
    let r = p.residual(&DVector::from_vec(sol.x.clone()));
    for (k, &zk) in sol.z.iter().enumerate() {
        let band = 3.0 * ex::ALPHA + 3.0 * f64::from(zk) * (ex::BETA - ex::ALPHA);
        assert!(r[k].abs() <= band + 1e-9, "edge {k}: |r| = {}", r[k].abs());
    }
}

#[test]
fn l0_oracle_single_edge_needs_no_outlier() {
    let g = Graph::from_pairs(2, &[(1, 0)]).unwrap();
    let p = Problem::new(g, DVector::from_vec(vec![10.0])).unwrap();
    assert_eq!(l0_oracle(&p, 0.1, 1.0).unwrap().z, vec![0]);
}

#[test]
fn ls_em_on_the_example_flags_the_bad_edges() {
    let cfg = LsEmConfig {
        s: Some(4),
        alpha0: 0.3,
        beta0: 0.6,
        ..LsEmConfig::default()
    };
    let r = ls_em(&ex::problem(), &cfg).unwrap();
    assert!(r.converged);
    let ratio = nqe(&r.x_hat, &ex::X_TRUE).unwrap() / 100.0;
    assert!(ratio < ex::LS_NQE_RATIO, "{ratio}");
    let pi = r.pi.unwrap().into_vec();
    let mut order: Vec<usize> = (0..pi.len()).collect();
    order.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]));
    let mut top = order[..2].to_vec();
    top.sort();
    assert_eq!(top, vec![4, 5], "{pi:?}");
}

#[test]
fn distributed_em_on_the_example_reaches_a_fixed_point() {
    let p = ex::problem();
    let cfg = DistEmConfig {
        tol: 1e-13,
        max_iter: 200_000,
        ..DistEmConfig::new(ex::P, ex::ALPHA, ex::BETA)
    };
    let r = dist_ls_em(&p, &cfg).unwrap();
    assert!(r.converged);
    let x = DVector::from_vec(r.x_hat.clone());
    let pi = r.pi.unwrap().into_vec();
    let w = edge_weights(&pi, ex::ALPHA, ex::BETA);
    let l = weighted_laplacian(p.incidence(), &w).unwrap();
    let wb = DVector::from_iterator(w.len(), w.iter().zip(p.b().iter()).map(|(a, b)| a * b));
    let gap = (l.as_matrix() * &x - p.incidence().apply_transpose(&wb)).norm();
    assert!(gap < 1e-6, "{gap:e}");
    let r_final = p.residual(&x);
    for (k, &q) in pi.iter().enumerate() {
        let want = posterior(r_final[k], ex::ALPHA, ex::BETA, ex::P).unwrap();
        assert!((q - want).abs() < 1e-8);
    }
}

#[test]
fn iterations_respect_the_budget() {
    let p = ex::problem();
    let cfg = LsEmConfig {
        max_iter: 3,
        tol: 1e-300,
        ..LsEmConfig::default()
    };
    let r = ls_em(&p, &cfg).unwrap();
    assert_eq!(r.iterations, 3);
    assert_eq!(r.trace.len(), 4);
}
