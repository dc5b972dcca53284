//! Recovery of the planted structure of the default fixture over a few
//! seeds, with a null-calibrated threshold.
//!
//! cargo run --release -p causal-compression --example fixture_recovery

use std::collections::BTreeSet;

use causal_compression::solver::{null_threshold, NullSettings};
use causal_compression::tasks::{bipartite, bipartite_kinds, segment, SEGMENTATION_KINDS};
use causal_compression::{Estimator, LinkSpec, SolverConfig};

fn f1<T: Ord + Clone>(truth: &[T], found: &[T]) -> f64 {
    let t: BTreeSet<T> = truth.iter().cloned().collect();
    let f: BTreeSet<T> = found.iter().cloned().collect();
    if t.is_empty() && f.is_empty() {
        return 1.0;
    }
    2.0 * t.intersection(&f).count() as f64 / (t.len() + f.len()) as f64
}

fn main() -> causal_compression::Result<()> {
    let fixture = LinkSpec::default_fixture();
    let n = fixture.n;
    let config = SolverConfig::<f64>::for_length(n);
    let settings = NullSettings {
        n,
        d_samples: 500,
        reps: 50,
        quantile: 0.95,
        seed: 7,
        estimator: Estimator::Copula,
    };
    let seg_threshold = null_threshold(&settings, &SEGMENTATION_KINDS, &config)?;
    let bip_threshold = null_threshold(&settings, &bipartite_kinds(n), &config)?;
    println!("thresholds: segmentation {seg_threshold:.4}, bipartite {bip_threshold:.4}");

    let truth = fixture.ground_truth();
    for seed in 0..5 {
        let panel = fixture.with_seed(seed).sample::<f64>(500)?;
        let cov = Estimator::Copula.estimate(&panel)?;
        let s = segment(&cov, &config, seg_threshold)?;
        let g = bipartite(&cov, &config, bip_threshold)?;
        let xy: Vec<(usize, usize)> = g.arrows_x_to_y().iter().map(|a| (a.source, a.target)).collect();
        let yx: Vec<(usize, usize)> = g.arrows_y_to_x().iter().map(|a| (a.source, a.target)).collect();
        println!(
            "seed {seed}: x_out {:?} x_in {:?} x_eq {:?} | X->Y {xy:?} (F1 {:.2}) Y->X {yx:?} (F1 {:.2})",
            s.out_indices(),
            s.in_indices(),
            s.eq_indices(),
            f1(&truth.arrows_x_to_y, &xy),
            f1(&truth.arrows_y_to_x, &yx),
        );
    }
    Ok(())
}
