use std::path::Path;

use causal_compression::report::{bipartite_dot, bipartite_json, panel_csv, path_csv, segmentation_json};
use causal_compression::solver::{null_scores, quantile, NullSettings};
use causal_compression::tasks::{bipartite_kinds, bipartite_with_paths, segment_with_paths, SEGMENTATION_KINDS};
use causal_compression::{Estimator, GradientMode, LinkSpec, ObjectiveKind, SolutionPath, SolverConfig};
use clap::Parser;
use serde_json::json;

use crate::args::{
    BipartiteArgs, Cli, Command, SegmentArgs, SeriesArg, SolveArgs, SynthArgs, TaskArg, ThresholdArgs, ThresholdMode,
};
use crate::io;
use crate::manifest::{now, RunManifest};
use crate::CliError;

pub fn run(command: Command, argv: &[String]) -> Result<(), CliError> {
    let started = now();
    match command {
        Command::Synth(a) => synth(a, RunManifest::new("synth", argv, started)),
        Command::Segment(a) => segment(a, RunManifest::new("segment", argv, started)),
        Command::Bipartite(a) => bipartite(a, RunManifest::new("bipartite", argv, started)),
        Command::Threshold(a) => threshold(a, RunManifest::new("threshold", argv, started)),
        Command::Rerun { manifest } => {
            let recorded = RunManifest::read(&manifest)?;
            let replay = std::iter::once("causal-compress".to_owned()).chain(recorded.argv.iter().cloned());
            let cli = Cli::try_parse_from(replay)
                .map_err(|e| CliError::Validation(format!("{}: recorded arguments: {e}", manifest.display())))?;
            if matches!(cli.command, Command::Rerun { .. }) {
                return Err(CliError::Validation("a manifest cannot record a rerun".into()));
            }
            run(cli.command, &recorded.argv)
        }
    }
}

fn synth(a: SynthArgs, mut manifest: RunManifest) -> Result<(), CliError> {
    let mut spec = match &a.spec {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            manifest.inputs.push(path.clone());
            LinkSpec::from_json(&text)?
        }
        None => LinkSpec::default_fixture(),
    };
    if let Some(seed) = a.seed {
        spec = spec.with_seed(seed);
    }
    let panel = spec.sample::<f64>(a.d_samples)?;
    io::write(&a.out, &panel_csv(&panel))?;
    manifest.outputs.push(a.out.clone());
    manifest.config = json!({ "spec": spec, "d_samples": a.d_samples, "seed": spec.seed });
    manifest.write_next_to(&a.out)?;
    Ok(())
}

struct Prepared {
    cov: causal_compression::CovarianceModel<f64>,
    config: SolverConfig<f64>,
    threshold: f64,
}

/// Reads and estimates the panel, builds the solver config and resolves
/// the threshold, calibrating it on null panels of the same shape if asked.
fn prepare(
    s: &SolveArgs,
    kinds: impl Fn(usize) -> Vec<ObjectiveKind>,
    manifest: &mut RunManifest,
) -> Result<Prepared, CliError> {
    let panel = io::read_panel(&s.input)?;
    manifest.inputs.push(s.input.clone());
    let estimator: Estimator = s.estimator.into();
    let cov = estimator.estimate(&panel)?;
    let n = panel.n();

    let mut config = SolverConfig::<f64>::for_length(n);
    config.epsilon = s.epsilon;
    config = config.with_kappa(s.kappa.unwrap_or(config.kappa_max));
    if s.finite_differences {
        config.gradient_mode = GradientMode::FiniteDifference;
    }
    config.validate()?;

    let (threshold, mode) = match s.threshold {
        ThresholdMode::Fixed(t) => (t, json!({ "mode": "fixed" })),
        ThresholdMode::Null { reps, quantile } => {
            let settings = NullSettings {
                n,
                d_samples: panel.d_samples(),
                reps,
                quantile,
                seed: s.seed,
                estimator,
            };
            let t = causal_compression::solver::null_threshold(&settings, &kinds(n), &config)?;
            (t, json!({ "mode": "null", "reps": reps, "quantile": quantile, "d_samples": panel.d_samples() }))
        }
    };
    manifest.config = json!({
        "estimator": s.estimator,
        "epsilon": config.epsilon,
        "kappa": config.kappa_max,
        "per_target_kappa": config.per_target(n).kappa_max,
        "gradient": config.gradient_mode,
        "threshold": threshold,
        "threshold_mode": mode,
        "seed": s.seed,
        "n": n,
        "d_samples": panel.d_samples(),
        "jittered": cov.was_jittered(),
    });
    Ok(Prepared { cov, config, threshold })
}

fn write_path(out: &Path, label: &str, path: &SolutionPath<f64>, manifest: &mut RunManifest) -> Result<(), CliError> {
    let file = io::sibling(out, &format!("{label}.path"), "csv");
    io::write(&file, &path_csv(path))?;
    manifest.outputs.push(file);
    Ok(())
}

fn segment(a: SegmentArgs, mut manifest: RunManifest) -> Result<(), CliError> {
    let s = &a.solve;
    let mut p = prepare(s, |_| SEGMENTATION_KINDS.to_vec(), &mut manifest)?;
    if a.series == SeriesArg::Y {
        p.cov = p.cov.swapped();
    }
    let (seg, paths) = segment_with_paths(&p.cov, &p.config, p.threshold)?;
    io::write(&s.out, &segmentation_json(&seg))?;
    manifest.outputs.push(s.out.clone());
    for (label, path) in ["out", "in", "eq"].iter().zip(&paths) {
        write_path(&s.out, label, path, &mut manifest)?;
    }
    manifest.config["series"] = json!(a.series);
    manifest.write_next_to(&s.out)?;
    Ok(())
}

fn bipartite(a: BipartiteArgs, mut manifest: RunManifest) -> Result<(), CliError> {
    let s = &a.solve;
    let p = prepare(s, bipartite_kinds, &mut manifest)?;
    let n = p.cov.n();
    let (graph, paths) = bipartite_with_paths(&p.cov, &p.config, p.threshold, a.coupling.into())?;
    io::write(&s.out, &bipartite_json(&graph))?;
    manifest.outputs.push(s.out.clone());
    let dot = a.dot.clone().unwrap_or_else(|| s.out.with_extension("dot"));
    io::write(&dot, &bipartite_dot(&graph))?;
    manifest.outputs.push(dot);

    let targets = n.saturating_sub(1);
    for (k, path) in paths.iter().enumerate() {
        let label = if k < targets {
            format!("out-{}", k + 2)
        } else if k < 2 * targets {
            format!("in-{}", k - targets + 2)
        } else if k == 2 * targets {
            "eq-x".to_owned()
        } else {
            "eq-y".to_owned()
        };
        write_path(&s.out, &label, path, &mut manifest)?;
    }
    manifest.config["coupling"] = json!(a.coupling);
    manifest.write_next_to(&s.out)?;
    Ok(())
}

fn threshold(a: ThresholdArgs, mut manifest: RunManifest) -> Result<(), CliError> {
    let estimator: Estimator = a.estimator.into();
    let settings = NullSettings {
        n: a.n,
        d_samples: a.d_samples,
        reps: a.reps,
        quantile: a.quantile,
        seed: a.seed,
        estimator,
    };
    settings.validate()?;
    let mut config = SolverConfig::<f64>::for_length(a.n);
    config.epsilon = a.epsilon;
    config = config.with_kappa(a.kappa.unwrap_or(config.kappa_max));
    config.validate()?;
    let kinds = match a.task {
        TaskArg::Segmentation => SEGMENTATION_KINDS.to_vec(),
        TaskArg::Bipartite => bipartite_kinds(a.n),
    };
    let scores = null_scores(&settings, &kinds, &config)?;
    let t = quantile(&scores, a.quantile).unwrap_or(0.0);

    let mut csv = String::from("score\n");
    for s in &scores {
        csv.push_str(&s.to_string());
        csv.push('\n');
    }
    io::write(&a.out, &csv)?;
    manifest.outputs.push(a.out.clone());
    manifest.config = json!({
        "settings": settings,
        "task": a.task,
        "epsilon": config.epsilon,
        "kappa": config.kappa_max,
        "threshold": t,
        "scores": scores.len(),
    });
    manifest.write_next_to(&a.out)?;
    println!("{t}");
    Ok(())
}
