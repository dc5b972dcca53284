//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run alone with `cargo test -p causal-compression --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use causal_compression::gaussian_info::{
    directed_information_terms, mi_decomposition, objective_value, Direction,
};
use causal_compression::report::{bipartite_json, segmentation_json};
use causal_compression::solver::{
    analytic_gradient, finite_difference_gradient, information_scores, null_threshold, NullSettings,
};
use causal_compression::tasks::{bipartite_kinds, bipartite_with_paths, segment_with_paths, SEGMENTATION_KINDS};
use causal_compression::{
    CouplingRule, Estimator, LinkSpec, ObjectiveKind, SamplePanel, SolutionPath, SolverConfig, Termination,
};

use common::{f1, random_correlation, random_weights};

const D_SAMPLES: usize = 500;
const SEEDS: u64 = 20;
const CALIBRATION_SEED: u64 = 2024;

/// Shared bookkeeping across criteria.
#[derive(Default)]
struct Suite {
    lines: Vec<(bool, String)>,
    /// Smallest directed-information or conditional-MI value seen anywhere.
    min_information: f64,
    information_values: usize,
    path_violations: Vec<String>,
    paths_checked: usize,
}

impl Suite {
    fn record(&mut self, id: usize, title: &str, ok: bool, elapsed: Duration, limit: Option<Duration>, detail: String) {
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = ok && in_time;
        let timing = match limit {
            Some(l) => format!("{:.2}s, limit {}s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        let line = format!(
            "[{}] {id}. {title}: {detail} ({timing})",
            if pass { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push((pass, line));
    }

    fn information(&mut self, v: f64) {
        self.min_information = self.min_information.min(v);
        self.information_values += 1;
    }

    fn check_path(&mut self, label: &str, path: &SolutionPath<f64>) {
        self.paths_checked += 1;
        let eps = path.epsilon;
        let mut prev_obj = path.initial_objective;
        let mut prev_kappa = 0.0;
        self.information(path.initial_objective);
        for s in &path.steps {
            if s.objective < prev_obj - 1e-9 {
                self.path_violations
                    .push(format!("{label}: objective fell by {:e} at step {}", prev_obj - s.objective, s.step_index));
            }
            if ((s.kappa - prev_kappa) - eps).abs() > 1e-12 {
                self.path_violations.push(format!("{label}: kappa increment {} at step {}", s.kappa - prev_kappa, s.step_index));
            }
            let mass: f64 = s.weights.iter().sum();
            if (mass - s.kappa).abs() > 1e-9 {
                self.path_violations.push(format!("{label}: weight mass {mass} vs kappa {}", s.kappa));
            }
            self.information(s.objective);
            prev_obj = s.objective;
            prev_kappa = s.kappa;
        }
        if !matches!(path.terminated_by, Termination::Budget | Termination::NonpositiveGradient) {
            self.path_violations.push(format!("{label}: terminated by {:?}", path.terminated_by));
        }
    }
}

fn decomposition_identity(suite: &mut Suite) {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let n = 2 + (k as usize % 7);
        let cov = random_correlation(n, 1_000 + k);
        let dec = mi_decomposition(&cov).unwrap();
        let rel = dec.residual().abs() / dec.total.max(1e-6);
        worst = worst.max(rel);
        for v in [dec.total, dec.x_to_y, dec.y_to_x, dec.instantaneous] {
            suite.information(v);
        }
        for dir in [Direction::XToY, Direction::YToX] {
            for v in directed_information_terms(&cov, dir).unwrap() {
                suite.information(v);
            }
        }
    }
    suite.record(
        1,
        "decomposition identity",
        worst < 1e-8,
        start.elapsed(),
        Some(Duration::from_secs(5)),
        format!("max relative residual {worst:.2e} over 100 matrices, n in 2..=8 (tol 1e-8)"),
    );
}

fn gradient_correctness(suite: &mut Suite) {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let n = 2 + (k as usize % 9);
        let cov = random_correlation(n, 2_000 + k);
        // keep every coordinate away from zero so all differences are central
        let d = random_weights(n, 0.01, 2.0, 3_000 + k);
        let analytic = analytic_gradient(&cov, &d).unwrap();
        let fd = finite_difference_gradient(&cov, &d, ObjectiveKind::OutgoingDelayed).unwrap();
        let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1e-12);
        let err = analytic.iter().zip(&fd).fold(0.0f64, |m, (a, f)| m.max((a - f).abs()));
        worst = worst.max(err / scale);
        suite.information(objective_value(&cov, &d, ObjectiveKind::OutgoingDelayed).unwrap());
    }
    suite.record(
        2,
        "gradient correctness",
        worst < 1e-5,
        start.elapsed(),
        Some(Duration::from_secs(10)),
        format!("max relative error {worst:.2e} over 50 instances, n in 2..=10 (tol 1e-5)"),
    );
}

fn transform_panel(panel: &SamplePanel<f64>, which: usize) -> SamplePanel<f64> {
    let mut out = panel.clone();
    for k in 0..2 * panel.n() {
        let kf = k as f64;
        out = match which {
            0 => out.map_column(k, |x| (x * (0.5 + 0.05 * kf)).exp()),
            1 => out.map_column(k, |x| x * x * x + x),
            _ => out.map_column(k, |x| (0.5 + kf) * x + (kf - 3.0)),
        }
        .unwrap();
    }
    out
}

fn marginal_invariance(suite: &mut Suite) {
    let start = Instant::now();
    let fixture = LinkSpec::default_fixture();
    let config = SolverConfig::for_length(fixture.n);
    let run = |panel: &SamplePanel<f64>| {
        let cov = Estimator::Copula.estimate(panel).unwrap();
        let (seg, _) = segment_with_paths(&cov, &config, 0.0).unwrap();
        let (g, _) = bipartite_with_paths(&cov, &config, 0.0, CouplingRule::Both).unwrap();
        (segmentation_json(&seg), bipartite_json(&g))
    };
    let mut mismatches = 0;
    for k in 0..10u64 {
        let panel = fixture.with_seed(4_000 + k).sample::<f64>(D_SAMPLES).unwrap();
        let reference = run(&panel);
        for which in 0..3 {
            if run(&transform_panel(&panel, which)) != reference {
                mismatches += 1;
            }
        }
    }
    suite.record(
        3,
        "marginal invariance",
        mismatches == 0,
        start.elapsed(),
        Some(Duration::from_secs(60)),
        format!("{mismatches} of 30 transformed runs differ from the raw run (exp, x^3 + x, affine)"),
    );
}

struct Thresholds {
    segmentation: f64,
    bipartite: f64,
}

fn calibrate(n: usize, config: &SolverConfig<f64>) -> Thresholds {
    let settings = NullSettings {
        n,
        d_samples: D_SAMPLES,
        reps: 50,
        quantile: 0.95,
        seed: CALIBRATION_SEED,
        estimator: Estimator::Copula,
    };
    Thresholds {
        segmentation: null_threshold(&settings, &SEGMENTATION_KINDS, config).unwrap(),
        bipartite: null_threshold(&settings, &bipartite_kinds(n), config).unwrap(),
    }
}

fn synthetic_recovery(suite: &mut Suite) -> Thresholds {
    let start = Instant::now();
    let fixture = LinkSpec::default_fixture();
    let n = fixture.n;
    let config = SolverConfig::for_length(n);
    let thr = calibrate(n, &config);
    let truth = fixture.ground_truth();
    let mut truth_arrows: Vec<(u8, usize, usize)> = truth.arrows_x_to_y.iter().map(|&(j, i)| (0, j, i)).collect();
    truth_arrows.extend(truth.arrows_y_to_x.iter().map(|&(j, i)| (1, j, i)));

    let mut sums = [0.0f64; 4];
    for seed in 0..SEEDS {
        let panel = fixture.with_seed(seed).sample::<f64>(D_SAMPLES).unwrap();
        let cov = Estimator::Copula.estimate(&panel).unwrap();
        let (seg, seg_paths) = segment_with_paths(&cov, &config, thr.segmentation).unwrap();
        let (g, bip_paths) = bipartite_with_paths(&cov, &config, thr.bipartite, CouplingRule::Both).unwrap();
        for p in seg_paths.iter().chain(&bip_paths) {
            suite.check_path(&format!("fixture seed {seed} {}", p.kind.label()), p);
        }
        let mut found: Vec<(u8, usize, usize)> = g.arrows_x_to_y().iter().map(|a| (0, a.source, a.target)).collect();
        found.extend(g.arrows_y_to_x().iter().map(|a| (1, a.source, a.target)));
        sums[0] += f1(&truth.x_out, &seg.out_indices());
        sums[1] += f1(&truth.x_in, &seg.in_indices());
        sums[2] += f1(&truth.x_eq, &seg.eq_indices());
        sums[3] += f1(&truth_arrows, &found);
    }
    let mean = sums.map(|s| s / SEEDS as f64);
    suite.record(
        4,
        "synthetic recovery",
        mean[..3].iter().all(|&m| m >= 0.8) && mean[3] >= 0.7,
        start.elapsed(),
        Some(Duration::from_secs(300)),
        format!(
            "mean F1 x_out {:.3}, x_in {:.3}, x_eq {:.3} (>= 0.8); arrows {:.3} (>= 0.7); thresholds {:.4} / {:.4}",
            mean[0], mean[1], mean[2], mean[3], thr.segmentation, thr.bipartite
        ),
    );
    thr
}

fn null_specificity(suite: &mut Suite, thr: &Thresholds) {
    let start = Instant::now();
    let n = LinkSpec::default_fixture().n;
    let config = SolverConfig::for_length(n);
    let (mut seg_frac, mut bip_frac) = (0.0, 0.0);
    for k in 0..SEEDS {
        let panel = LinkSpec::null_model(n, 9_000 + k).sample::<f64>(D_SAMPLES).unwrap();
        let cov = Estimator::Copula.estimate(&panel).unwrap();
        let (_, seg_paths) = segment_with_paths(&cov, &config, thr.segmentation).unwrap();
        let (_, bip_paths) = bipartite_with_paths(&cov, &config, thr.bipartite, CouplingRule::Both).unwrap();
        let fraction = |paths: &[SolutionPath<f64>], t: f64| {
            let (mut selected, mut kept) = (0usize, 0usize);
            for p in paths {
                for (_, e) in information_scores(p).selected() {
                    selected += 1;
                    kept += usize::from(e.score >= t);
                }
            }
            kept as f64 / selected.max(1) as f64
        };
        seg_frac += fraction(&seg_paths, thr.segmentation);
        bip_frac += fraction(&bip_paths, thr.bipartite);
        for p in seg_paths.iter().chain(&bip_paths) {
            suite.check_path(&format!("null panel {k} {}", p.kind.label()), p);
        }
    }
    seg_frac /= SEEDS as f64;
    bip_frac /= SEEDS as f64;
    suite.record(
        5,
        "null specificity",
        seg_frac <= 0.10 && bip_frac <= 0.10,
        start.elapsed(),
        Some(Duration::from_secs(120)),
        format!(
            "mean surviving fraction {seg_frac:.3} (segmentation), {bip_frac:.3} (bipartite) over 20 panels (<= 0.10)"
        ),
    );
}

fn path_properties(suite: &mut Suite) {
    let detail = if suite.path_violations.is_empty() {
        format!("{} paths from criteria 4 and 5 checked, no violations", suite.paths_checked)
    } else {
        format!(
            "{} violations in {} paths, first: {}",
            suite.path_violations.len(),
            suite.paths_checked,
            suite.path_violations[0]
        )
    };
    let ok = suite.path_violations.is_empty() && suite.paths_checked > 0;
    suite.record(6, "path properties", ok, Duration::ZERO, None, detail);
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn complexity_scaling(suite: &mut Suite) {
    let start = Instant::now();
    let sizes = [25usize, 50, 100, 200];
    let mut times = Vec::new();
    for &n in &sizes {
        let cov = random_correlation(n, 5_000 + n as u64);
        let d = random_weights(n, 0.0, 1.0, 6_000 + n as u64);
        let _ = analytic_gradient(&cov, &d).unwrap();
        // median of repeated calls, each batch long enough to time reliably
        let batch = (20_000_000 / (n * n * n)).max(1);
        let mut samples = Vec::new();
        for _ in 0..7 {
            let t = Instant::now();
            for _ in 0..batch {
                std::hint::black_box(analytic_gradient(&cov, &d).unwrap());
            }
            samples.push(t.elapsed().as_secs_f64() / batch as f64);
        }
        samples.sort_by(f64::total_cmp);
        times.push(samples[samples.len() / 2]);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let per_n: Vec<String> = sizes.iter().zip(&times).map(|(n, t)| format!("n={n}: {:.3}ms", t * 1e3)).collect();
    suite.record(
        7,
        "complexity scaling",
        (2.5..=3.5).contains(&slope),
        start.elapsed(),
        Some(Duration::from_secs(120)),
        format!("log-log slope {slope:.2} in [2.5, 3.5]; {}", per_n.join(", ")),
    );
}

fn nonnegativity(suite: &mut Suite) {
    let min = suite.min_information;
    let count = suite.information_values;
    suite.record(
        8,
        "nonnegativity",
        min >= -1e-10 && count > 0,
        Duration::ZERO,
        None,
        format!("minimum {min:.3e} over {count} information values (>= -1e-10)"),
    );
}

fn main() {
    let mut suite = Suite {
        min_information: f64::INFINITY,
        ..Suite::default()
    };
    decomposition_identity(&mut suite);
    gradient_correctness(&mut suite);
    marginal_invariance(&mut suite);
    let thresholds = synthetic_recovery(&mut suite);
    null_specificity(&mut suite, &thresholds);
    path_properties(&mut suite);
    complexity_scaling(&mut suite);
    nonnegativity(&mut suite);

    let failed = suite.lines.iter().filter(|(ok, _)| !ok).count();
    println!("acceptance: {} passed, {failed} failed", suite.lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
