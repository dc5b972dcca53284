//! Causal segmentation and causal bipartite graph retrieval.
//!
//! Both tasks are sequences of independent stagewise solves over one shared
//! model; a time point is reported when its information score reaches the
//! threshold. Solves run in parallel and results are assembled in a fixed
//! order, so output never depends on scheduling.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_info::{CovarianceModel, ObjectiveKind};
use crate::scalar::Real;
use crate::solver::{information_scores, stagewise_solve, SolutionPath, SolverConfig};

/// A 1-based time index with its information score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredIndex<T> {
    pub t: usize,
    pub score: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTotals<T> {
    pub out: T,
    #[serde(rename = "in")]
    pub incoming: T,
    pub eq: T,
}

/// Time points of X with outgoing, incoming and instantaneous flow.
///
/// Membership is per objective; a point may sit in several sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation<T> {
    pub n: usize,
    pub x_out: Vec<ScoredIndex<T>>,
    pub x_in: Vec<ScoredIndex<T>>,
    pub x_eq: Vec<ScoredIndex<T>>,
    pub threshold_used: T,
    /// Final objective values of the three solves; absent when the
    /// segmentation was derived from a graph.
    pub objective_totals: Option<ObjectiveTotals<T>>,
}

impl<T: Real> Segmentation<T> {
    pub fn out_indices(&self) -> Vec<usize> {
        self.x_out.iter().map(|s| s.t).collect()
    }

    pub fn in_indices(&self) -> Vec<usize> {
        self.x_in.iter().map(|s| s.t).collect()
    }

    pub fn eq_indices(&self) -> Vec<usize> {
        self.x_eq.iter().map(|s| s.t).collect()
    }
}

/// Arrow `source → target` between time points, `source < target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrow<T> {
    pub source: usize,
    pub target: usize,
    pub score: T,
}

/// Undirected `X_i - Y_i` edge with the score from each compression side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingEdge<T> {
    pub t: usize,
    pub score_x: T,
    pub score_y: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteCausalGraph<T> {
    n: usize,
    arrows_x_to_y: Vec<Arrow<T>>,
    arrows_y_to_x: Vec<Arrow<T>>,
    coupling_edges: Vec<CouplingEdge<T>>,
    threshold_used: T,
}

impl<T: Real> BipartiteCausalGraph<T> {
    /// Validates and sorts the edge lists.
    pub fn new(
        n: usize,
        mut arrows_x_to_y: Vec<Arrow<T>>,
        mut arrows_y_to_x: Vec<Arrow<T>>,
        mut coupling_edges: Vec<CouplingEdge<T>>,
        threshold_used: T,
    ) -> Result<Self> {
        for arrows in [&mut arrows_x_to_y, &mut arrows_y_to_x] {
            arrows.sort_by_key(|a| (a.target, a.source));
            for a in arrows.iter() {
                if a.source == 0 || a.target > n || a.source >= a.target {
                    return Err(Error::Domain(format!(
                        "arrow {} -> {} must satisfy 1 <= j < i <= {n}",
                        a.source, a.target
                    )));
                }
            }
            if let Some(w) = arrows
                .windows(2)
                .find(|w| (w[0].source, w[0].target) == (w[1].source, w[1].target))
            {
                return Err(Error::Domain(format!(
                    "duplicate arrow {} -> {}",
                    w[0].source, w[0].target
                )));
            }
        }
        coupling_edges.sort_by_key(|c| c.t);
        if let Some(c) = coupling_edges.iter().find(|c| c.t == 0 || c.t > n) {
            return Err(Error::Domain(format!("coupling index {} outside 1..={n}", c.t)));
        }
        if let Some(w) = coupling_edges.windows(2).find(|w| w[0].t == w[1].t) {
            return Err(Error::Domain(format!("duplicate coupling at {}", w[0].t)));
        }
        Ok(Self {
            n,
            arrows_x_to_y,
            arrows_y_to_x,
            coupling_edges,
            threshold_used,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Arrows `X_j → Y_i`, sorted by target then source.
    pub fn arrows_x_to_y(&self) -> &[Arrow<T>] {
        &self.arrows_x_to_y
    }

    /// Arrows `Y_j → X_i`, sorted by target then source.
    pub fn arrows_y_to_x(&self) -> &[Arrow<T>] {
        &self.arrows_y_to_x
    }

    pub fn coupling_edges(&self) -> &[CouplingEdge<T>] {
        &self.coupling_edges
    }

    pub fn threshold_used(&self) -> T {
        self.threshold_used
    }

    pub fn is_empty(&self) -> bool {
        self.arrows_x_to_y.is_empty() && self.arrows_y_to_x.is_empty() && self.coupling_edges.is_empty()
    }
}

/// When to draw an `X_i - Y_i` edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRule {
    /// `i` survives when compressing X and when compressing Y.
    #[default]
    Both,
    /// `i` survives in either compression.
    Either,
}

/// The three objectives a segmentation solves, in output order.
pub const SEGMENTATION_KINDS: [ObjectiveKind; 3] = [
    ObjectiveKind::OutgoingDelayed,
    ObjectiveKind::IncomingDelayed,
    ObjectiveKind::Instantaneous,
];

/// Every objective a bipartite retrieval solves on the X-compressed side.
/// The Y-side instantaneous solve runs on the swapped model.
pub fn bipartite_kinds(n: usize) -> Vec<ObjectiveKind> {
    let mut kinds: Vec<ObjectiveKind> = (2..=n)
        .flat_map(|i| [ObjectiveKind::PerTargetOutgoing(i), ObjectiveKind::PerTargetIncoming(i)])
        .collect();
    kinds.push(ObjectiveKind::Instantaneous);
    kinds
}

fn surviving<T: Real>(path: &SolutionPath<T>, threshold: T) -> Vec<ScoredIndex<T>> {
    information_scores(path)
        .selected()
        .filter(|(_, e)| e.score >= threshold)
        .map(|(j, e)| ScoredIndex { t: j + 1, score: e.score })
        .collect()
}

fn check_threshold<T: Real>(threshold: T) -> Result<()> {
    if !(threshold >= T::zero()) || !threshold.is_finite() {
        return Err(Error::InvalidConfig(format!("threshold {threshold} must be finite and >= 0")));
    }
    Ok(())
}

/// Segmentation plus the three solution paths (outgoing, incoming, instantaneous).
pub fn segment_with_paths<T: Real>(
    cov: &CovarianceModel<T>,
    config: &SolverConfig<T>,
    threshold: T,
) -> Result<(Segmentation<T>, Vec<SolutionPath<T>>)> {
    check_threshold(threshold)?;
    config.validate()?;
    let paths: Vec<SolutionPath<T>> = SEGMENTATION_KINDS
        .par_iter()
        .map(|&kind| stagewise_solve(cov, kind, config))
        .collect::<Result<_>>()?;
    let seg = Segmentation {
        n: cov.n(),
        x_out: surviving(&paths[0], threshold),
        x_in: surviving(&paths[1], threshold),
        x_eq: surviving(&paths[2], threshold),
        threshold_used: threshold,
        objective_totals: Some(ObjectiveTotals {
            out: paths[0].final_objective(),
            incoming: paths[1].final_objective(),
            eq: paths[2].final_objective(),
        }),
    };
    Ok((seg, paths))
}

/// Causal segmentation of X relative to Y. To segment Y, pass
/// [`CovarianceModel::swapped`].
pub fn segment<T: Real>(cov: &CovarianceModel<T>, config: &SolverConfig<T>, threshold: T) -> Result<Segmentation<T>> {
    segment_with_paths(cov, config, threshold).map(|(s, _)| s)
}

/// Bipartite graph plus every solution path, in the order: per-target
/// outgoing for `i = 2..=n`, per-target incoming for `i = 2..=n`, then
/// instantaneous compressing X and compressing Y.
pub fn bipartite_with_paths<T: Real>(
    cov: &CovarianceModel<T>,
    config: &SolverConfig<T>,
    threshold: T,
    rule: CouplingRule,
) -> Result<(BipartiteCausalGraph<T>, Vec<SolutionPath<T>>)> {
    check_threshold(threshold)?;
    config.validate()?;
    let n = cov.n();
    let swapped = cov.swapped();
    let per_target = config.per_target(n);

    let mut jobs: Vec<(&CovarianceModel<T>, ObjectiveKind, &SolverConfig<T>)> = Vec::new();
    for i in 2..=n {
        jobs.push((cov, ObjectiveKind::PerTargetOutgoing(i), &per_target));
    }
    for i in 2..=n {
        jobs.push((cov, ObjectiveKind::PerTargetIncoming(i), &per_target));
    }
    jobs.push((cov, ObjectiveKind::Instantaneous, config));
    jobs.push((&swapped, ObjectiveKind::Instantaneous, config));

    let paths: Vec<SolutionPath<T>> = jobs
        .par_iter()
        .map(|&(m, kind, c)| stagewise_solve(m, kind, c))
        .collect::<Result<_>>()?;

    let targets = n.saturating_sub(1);
    let arrows = |range: std::ops::Range<usize>| -> Vec<Arrow<T>> {
        paths[range]
            .iter()
            .zip(2..=n)
            .flat_map(|(p, i)| {
                surviving(p, threshold).into_iter().map(move |s| Arrow {
                    source: s.t,
                    target: i,
                    score: s.score,
                })
            })
            .collect()
    };
    let arrows_x_to_y = arrows(0..targets);
    let arrows_y_to_x = arrows(targets..2 * targets);

    let x_eq: BTreeMap<usize, T> = surviving(&paths[2 * targets], threshold)
        .into_iter()
        .map(|s| (s.t, s.score))
        .collect();
    let y_eq: BTreeMap<usize, T> = surviving(&paths[2 * targets + 1], threshold)
        .into_iter()
        .map(|s| (s.t, s.score))
        .collect();
    let candidates: BTreeSet<usize> = match rule {
        CouplingRule::Both => x_eq.keys().filter(|t| y_eq.contains_key(t)).copied().collect(),
        CouplingRule::Either => x_eq.keys().chain(y_eq.keys()).copied().collect(),
    };
    let coupling_edges = candidates
        .into_iter()
        .map(|t| CouplingEdge {
            t,
            score_x: x_eq.get(&t).copied().unwrap_or_else(T::zero),
            score_y: y_eq.get(&t).copied().unwrap_or_else(T::zero),
        })
        .collect();

    let graph = BipartiteCausalGraph::new(n, arrows_x_to_y, arrows_y_to_x, coupling_edges, threshold)?;
    Ok((graph, paths))
}

/// Causal bipartite graph between the time points of X and Y.
pub fn bipartite<T: Real>(
    cov: &CovarianceModel<T>,
    config: &SolverConfig<T>,
    threshold: T,
) -> Result<BipartiteCausalGraph<T>> {
    bipartite_with_paths(cov, config, threshold, CouplingRule::Both).map(|(g, _)| g)
}

fn max_by_index<T: Real>(items: impl Iterator<Item = (usize, T)>) -> Vec<ScoredIndex<T>> {
    let mut best: BTreeMap<usize, T> = BTreeMap::new();
    for (t, s) in items {
        best.entry(t).and_modify(|v| *v = v.max(s)).or_insert(s);
    }
    best.into_iter().map(|(t, score)| ScoredIndex { t, score }).collect()
}

/// Segmentation implied by a graph: sources of X→Y arrows, targets of
/// Y→X arrows and coupled indices, each scored by its strongest edge.
pub fn graph_to_segmentation<T: Real>(g: &BipartiteCausalGraph<T>) -> Segmentation<T> {
    Segmentation {
        n: g.n,
        x_out: max_by_index(g.arrows_x_to_y.iter().map(|a| (a.source, a.score))),
        x_in: max_by_index(g.arrows_y_to_x.iter().map(|a| (a.target, a.score))),
        x_eq: max_by_index(g.coupling_edges.iter().map(|c| (c.t, c.score_x.max(c.score_y)))),
        threshold_used: g.threshold_used,
        objective_totals: None,
    }
}
