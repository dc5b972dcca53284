//! Structural-model generator and estimators against Monte-Carlo and
//! closed-form oracles.

mod common;

use approx::assert_abs_diff_eq;
use causal_compression::copula::{normal_scores_correlation, pearson_correlation};
use causal_compression::gaussian_info::{delayed_directed_information, instantaneous_coupling, Direction};
use causal_compression::synth::BoxMuller;
use causal_compression::{LinkSpec, Matrix, SamplePanel};

fn sample_covariance(panel: &SamplePanel<f64>) -> Matrix<f64> {
    let v = panel.values();
    let (d, k) = (v.rows(), v.cols());
    let mean: Vec<f64> = (0..k).map(|j| (0..d).map(|i| v[(i, j)]).sum::<f64>() / d as f64).collect();
    Matrix::from_fn(k, k, |a, b| {
        (0..d).map(|i| (v[(i, a)] - mean[a]) * (v[(i, b)] - mean[b])).sum::<f64>() / (d - 1) as f64
    })
}

#[test]
fn white_noise_sample_covariance_is_identity() {
    let mut spec = LinkSpec::null_model(3, 17);
    spec.markov_order = 0;
    let panel = spec.sample::<f64>(100_000).unwrap();
    let s = sample_covariance(&panel);
    assert!(s.max_abs_diff(&Matrix::identity(6)) < 0.02, "{}", s.max_abs_diff(&Matrix::identity(6)));
}

#[test]
fn fixture_sample_covariance_approaches_population() {
    let spec = LinkSpec::default_fixture().with_seed(3);
    let pop = spec.population_covariance::<f64>().unwrap();
    let p = pop.matrix();
    let s = sample_covariance(&spec.sample::<f64>(100_000).unwrap());
    // variances reach ~35 here, so deviations are measured in units of
    // √(Σᵢᵢ Σⱼⱼ), i.e. on the correlation scale
    let mut worst = 0.0f64;
    for i in 0..24 {
        for j in 0..24 {
            worst = worst.max((s[(i, j)] - p[(i, j)]).abs() / (p[(i, i)] * p[(j, j)]).sqrt());
        }
    }
    assert!(worst < 0.03, "worst scaled deviation {worst}");
}

#[test]
fn fixture_condition_number_is_pinned() {
    let cov = LinkSpec::default_fixture().population_covariance::<f64>().unwrap();
    let m = cov.matrix();
    let largest = m.spectral_radius_estimate(2_000);
    let inv = causal_compression::linalg::Cholesky::new(m).unwrap().inverse();
    let smallest = 1.0 / inv.spectral_radius_estimate(2_000);
    let cond = largest / smallest;
    // reference from a symmetric eigensolver: 579.097480721937
    assert_abs_diff_eq!(cond, 579.097480721937, epsilon = 1e-6);
    assert!(cond < 1e6);
    assert!(!cov.was_jittered());
}

#[test]
fn fixture_has_the_planted_link_counts() {
    let f = LinkSpec::default_fixture();
    assert_eq!((f.links_x_to_y.len(), f.links_y_to_x.len(), f.couplings.len()), (3, 4, 2));
    assert!(f.links_x_to_y.iter().chain(&f.links_y_to_x).all(|&(j, i, _)| j < i));
    assert_eq!((f.n, f.markov_order, f.sigma), (12, 6, 1.0));
}

#[test]
fn forward_only_links_leave_backward_flow_at_zero() {
    let mut spec = LinkSpec::null_model(8, 0);
    spec.links_x_to_y = vec![(1, 3, 0.8), (4, 5, 0.8), (6, 8, 0.8)];
    let cov = spec.population_covariance::<f64>().unwrap();
    assert!(delayed_directed_information(&cov, Direction::XToY).unwrap() > 0.1);
    assert_abs_diff_eq!(delayed_directed_information(&cov, Direction::YToX).unwrap(), 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(instantaneous_coupling(&cov).unwrap(), 0.0, epsilon = 1e-10);
}

#[test]
fn single_link_population_model() {
    let mut spec = LinkSpec::null_model(2, 0);
    spec.markov_order = 0;
    spec.links_x_to_y = vec![(1, 2, 0.8)];
    let cov = spec.population_covariance::<f64>().unwrap();
    // Y₂ = 0.8 X₁ + ξ: I(X₁; Y₂) = ½ ln(1.64)
    assert_abs_diff_eq!(delayed_directed_information(&cov, Direction::XToY).unwrap(), 0.5 * 1.64f64.ln(), epsilon = 1e-12);
    assert_abs_diff_eq!(delayed_directed_information(&cov, Direction::YToX).unwrap(), 0.0, epsilon = 1e-10);
}

#[test]
fn single_coupling_is_instantaneous_only() {
    // without autoregression: otherwise X₁ predicts Y₂ through X₂
    let mut spec = LinkSpec::null_model(4, 0);
    spec.markov_order = 0;
    spec.couplings = vec![(2, 0.8)];
    let cov = spec.population_covariance::<f64>().unwrap();
    assert!(instantaneous_coupling(&cov).unwrap() > 0.1);
    for dir in [Direction::XToY, Direction::YToX] {
        assert_abs_diff_eq!(delayed_directed_information(&cov, dir).unwrap(), 0.0, epsilon = 1e-10);
    }
}

#[test]
fn sampling_is_reproducible() {
    let spec = LinkSpec::default_fixture().with_seed(99);
    let a = spec.sample::<f64>(50).unwrap();
    let b = spec.sample::<f64>(50).unwrap();
    assert_eq!(a, b);
    let c = spec.with_seed(100).sample::<f64>(50).unwrap();
    assert_ne!(a, c);
}

#[test]
fn box_muller_moments() {
    let mut g = BoxMuller::new(5);
    let xs: Vec<f64> = (0..200_000).map(|_| g.next()).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
    let fourth = xs.iter().map(|x| x.powi(4)).sum::<f64>() / xs.len() as f64;
    assert!(mean.abs() < 0.01);
    assert!((var - 1.0).abs() < 0.01);
    assert!((fourth - 3.0).abs() < 0.06);
}

fn bivariate(rho: f64, d: usize, seed: u64) -> SamplePanel<f64> {
    let mut g = BoxMuller::new(seed);
    let s = (1.0 - rho * rho).sqrt();
    let mut v = Matrix::zeros(d, 2);
    for i in 0..d {
        let (a, b) = (g.next(), g.next());
        v[(i, 0)] = a;
        v[(i, 1)] = rho * a + s * b;
    }
    SamplePanel::new(1, v).unwrap()
}

#[test]
fn normal_scores_recover_gaussian_correlation() {
    for seed in 0..5 {
        let panel = bivariate(0.6, 5_000, 40 + seed);
        let r = normal_scores_correlation(&panel).unwrap().matrix()[(0, 1)];
        assert!((r - 0.6).abs() < 0.05, "seed {seed}: {r}");
        let p = pearson_correlation(&panel).unwrap().matrix()[(0, 1)];
        assert!((p - 0.6).abs() < 0.05);
    }
}

#[test]
fn normal_scores_ignore_heavy_marginals() {
    let panel = bivariate(0.6, 5_000, 77);
    let skewed = panel.map_column(0, |x| x.exp()).unwrap().map_column(1, |x| x.powi(3)).unwrap();
    let r = normal_scores_correlation(&skewed).unwrap().matrix()[(0, 1)];
    assert!((r - 0.6).abs() < 0.05);
    // the plain sample correlation is biased by the transforms
    let p = pearson_correlation(&skewed).unwrap().matrix()[(0, 1)];
    assert!((p - 0.6).abs() > 0.05, "{p}");
}

#[test]
fn link_spec_json_round_trip() {
    let f = LinkSpec::default_fixture().with_seed(12);
    let back = LinkSpec::from_json(&f.to_json()).unwrap();
    assert_eq!(f, back);
    let minimal = LinkSpec::from_json(r#"{"n": 4, "links_x_to_y": [[1, 3, 0.5]]}"#).unwrap();
    assert_eq!(minimal.markov_order, 6);
    assert_eq!(minimal.sigma, 1.0);
    assert!(LinkSpec::from_json(r#"{"n": 4, "links_x_to_y": [[3, 3, 0.5]]}"#).is_err());
    assert!(LinkSpec::from_json(r#"{"n": 4, "couplings": [[5, 0.5]]}"#).is_err());
}
