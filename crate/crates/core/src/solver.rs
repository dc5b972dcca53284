//! Monotone stagewise-forward maximisation of a causal-compression objective.
//!
//! The compressed series is `T = A X + ξ` with `A = diag(√d)`. Starting from
//! `d = 0`, each step adds `ε` to the weight with the largest positive
//! gradient until the L1 budget is spent or no coordinate improves the
//! objective. The whole path is recorded so that each coordinate's
//! information score (objective slope at its entry) can be read off.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::Estimator;
use crate::error::{Error, Result};
use crate::gaussian_info::{objective_value, CovarianceModel, ObjectiveKind};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::synth::LinkSpec;

/// Nonnegative diagonal of `D = AᵀA`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityWeights<T> {
    d: Vec<T>,
}

impl<T: Real> SparsityWeights<T> {
    pub fn new(d: Vec<T>) -> Result<Self> {
        if let Some((i, v)) = d.iter().enumerate().find(|(_, v)| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::Domain(format!("weight d[{i}] = {v} must be finite and nonnegative")));
        }
        Ok(Self { d })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            d: vec![T::zero(); n],
        }
    }

    pub fn values(&self) -> &[T] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// L1 mass `Σ dᵢ`.
    pub fn kappa(&self) -> T {
        self.d.iter().copied().sum()
    }

    fn with(&self, j: usize, v: T) -> Self {
        let mut d = self.d.clone();
        d[j] = v;
        Self { d }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Closed-form gradient where one exists (the outgoing delayed objective),
    /// finite differences otherwise.
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub kappa_max: T,
    pub epsilon: T,
    pub max_steps: usize,
    pub gradient_mode: GradientMode,
    /// Budget for each per-target solve; `None` means `kappa_max / (n − 1)`.
    pub per_target_kappa: Option<T>,
}

impl<T: Real> SolverConfig<T> {
    /// Defaults for series of length `n`: `ε = 0.01`, `κ = n / 2`.
    pub fn for_length(n: usize) -> Self {
        let epsilon = T::lit(0.01);
        let kappa_max = T::from_usize_lossy(n.max(1)) * T::half();
        Self {
            kappa_max,
            epsilon,
            max_steps: min_steps(kappa_max, epsilon),
            gradient_mode: GradientMode::Analytic,
            per_target_kappa: None,
        }
    }

    /// Same settings with a new budget and a step cap that fits it.
    pub fn with_kappa(&self, kappa_max: T) -> Self {
        Self {
            kappa_max,
            max_steps: self.max_steps.max(min_steps(kappa_max, self.epsilon)),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_max > T::zero()) || !self.kappa_max.is_finite() {
            return Err(Error::InvalidConfig(format!("kappa_max = {} must be positive", self.kappa_max)));
        }
        if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.max_steps < min_steps(self.kappa_max, self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "max_steps = {} is below ceil(kappa_max / epsilon) = {}",
                self.max_steps,
                min_steps(self.kappa_max, self.epsilon)
            )));
        }
        if let Some(k) = self.per_target_kappa {
            if !(k > T::zero()) {
                return Err(Error::InvalidConfig(format!("per-target kappa = {k} must be positive")));
            }
        }
        Ok(())
    }

    /// Config for one per-target solve on series of length `n`.
    pub fn per_target(&self, n: usize) -> Self {
        let k = self
            .per_target_kappa
            .unwrap_or_else(|| self.kappa_max / T::from_usize_lossy(n.saturating_sub(1).max(1)));
        self.with_kappa(k)
    }

    /// Config actually used for `kind` on series of length `n`.
    pub fn for_kind(&self, kind: ObjectiveKind, n: usize) -> Self {
        match kind {
            ObjectiveKind::PerTargetOutgoing(_) | ObjectiveKind::PerTargetIncoming(_) => self.per_target(n),
            _ => self.clone(),
        }
    }
}

fn min_steps<T: Real>(kappa_max: T, epsilon: T) -> usize {
    // shave rounding so that e.g. 1.0 / 0.1 is 10, not 11
    let ratio = (kappa_max / epsilon).as_f64();
    (ratio - 1e-9).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Budget,
    NonpositiveGradient,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathStep<T> {
    pub step_index: usize,
    pub kappa: T,
    pub coordinate: usize,
    pub objective: T,
    pub weights: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath<T> {
    pub kind: ObjectiveKind,
    pub n: usize,
    pub epsilon: T,
    /// Objective at `d = 0`.
    pub initial_objective: T,
    pub steps: Vec<PathStep<T>>,
    pub terminated_by: Termination,
}

impl<T: Real> SolutionPath<T> {
    pub fn final_weights(&self) -> SparsityWeights<T> {
        self.steps
            .last()
            .map(|s| SparsityWeights { d: s.weights.clone() })
            .unwrap_or_else(|| SparsityWeights::zeros(self.n))
    }

    pub fn final_objective(&self) -> T {
        self.steps.last().map_or(self.initial_objective, |s| s.objective)
    }

    /// Smallest objective change over all steps (positive when strictly increasing).
    pub fn min_increment(&self) -> Option<T> {
        let mut prev = self.initial_objective;
        let mut worst: Option<T> = None;
        for s in &self.steps {
            let inc = s.objective - prev;
            worst = Some(worst.map_or(inc, |w| w.min(inc)));
            prev = s.objective;
        }
        worst
    }
}

/// Gradient of the outgoing delayed objective `I(T^{n−1} → Yⁿ)` in `d`.
///
/// Coordinate `j` is `½ Σ_{i≥j} ([(MᵢDᵢ+I)⁻¹Mᵢ]_jj − [(NᵢDᵢ+I)⁻¹Nᵢ]_jj)` with
/// `Mᵢ = Σ_{Xⁱ|Yⁱ}` and `Nᵢ = Σ_{Xⁱ|Y^{i+1}}`. `(MD+I)⁻¹M` is the covariance
/// of `Xⁱ` given `Yⁱ` and `Tⁱ`, so all `2(n−1)` matrices come out of one
/// sweep that conditions on `Y₁, T₁, Y₂, T₂, …` in turn, each step a
/// Sherman–Morrison rank-one downdate of the running covariance. Total cost
/// is `O(n³)`.
pub fn analytic_gradient<T: Real>(cov: &CovarianceModel<T>, d: &SparsityWeights<T>) -> Result<Vec<T>> {
    let n = cov.n();
    if d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d.len(),
        });
    }
    let mut grad = vec![T::zero(); n];
    if n < 2 {
        return Ok(grad);
    }
    let mut sweep = ConditioningSweep::new(cov.matrix(), n);
    sweep.observe_exact(n);
    for i in 1..n {
        let di = d.values()[i - 1];
        if di > T::zero() {
            sweep.observe_noisy(i - 1, di);
        }
        for (j, g) in grad.iter_mut().enumerate().take(i) {
            *g = *g + sweep.var(j);
        }
        sweep.observe_exact(n + i);
        for (j, g) in grad.iter_mut().enumerate().take(i) {
            *g = *g - sweep.var(j);
        }
    }
    for g in &mut grad {
        *g = T::half() * *g;
    }
    Ok(grad)
}

/// Running conditional covariance of the still-relevant variables.
struct ConditioningSweep<T> {
    s: Matrix<T>,
    /// Indices still updated: every X plus the Y's not yet observed.
    active: Vec<usize>,
    column: Vec<T>,
}

impl<T: Real> ConditioningSweep<T> {
    fn new(m: &Matrix<T>, n: usize) -> Self {
        Self {
            s: m.clone(),
            active: (0..2 * n).collect(),
            column: vec![T::zero(); 2 * n],
        }
    }

    #[inline]
    fn var(&self, k: usize) -> T {
        self.s[(k, k)]
    }

    /// `S ← S − w · s_k s_kᵀ` restricted to the active set.
    fn downdate(&mut self, k: usize, w: T) {
        for &a in &self.active {
            self.column[a] = self.s[(a, k)];
        }
        for &a in &self.active {
            let ca = w * self.column[a];
            if ca == T::zero() {
                continue;
            }
            for &b in &self.active {
                self.s[(a, b)] = self.s[(a, b)] - ca * self.column[b];
            }
        }
    }

    /// Condition on an exactly observed variable and retire it.
    fn observe_exact(&mut self, k: usize) {
        let v = self.s[(k, k)];
        if v > T::epsilon() {
            self.downdate(k, T::one() / v);
        }
        self.active.retain(|&a| a != k);
    }

    /// Condition on `√d · X_k + ξ` with unit noise.
    fn observe_noisy(&mut self, k: usize, d: T) {
        let w = d / (d * self.s[(k, k)] + T::one());
        self.downdate(k, w);
    }
}

/// Step used by [`finite_difference_gradient`].
pub fn fd_step<T: Real>() -> T {
    T::lit(1e-5).max(T::epsilon().cbrt())
}

/// Numerical gradient of any objective.
///
/// Central differences with step `h`, switching to the second-order
/// one-sided formula when `d_j < h` so the weights never go negative.
/// Coordinates the objective cannot depend on get zero, and so do
/// differences below the rounding noise of the objective (about
/// `16 ε · 2n` relative), which would otherwise let flat objectives
/// creep past the solver's break tolerance.
pub fn finite_difference_gradient<T: Real>(
    cov: &CovarianceModel<T>,
    d: &SparsityWeights<T>,
    kind: ObjectiveKind,
) -> Result<Vec<T>> {
    let n = cov.n();
    kind.validate(n)?;
    if d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d.len(),
        });
    }
    let h = fd_step::<T>();
    let two = T::lit(2.0);
    let f = |w: &SparsityWeights<T>| objective_value(cov, w, kind);
    let noise = T::epsilon() * T::lit(16.0) * T::from_usize_lossy(2 * n);
    let denoise = |diff: T, values: &[T]| {
        let scale = values.iter().fold(T::one(), |m, v| m.max(v.abs()));
        if diff.abs() <= noise * scale {
            T::zero()
        } else {
            diff
        }
    };
    let mut grad = vec![T::zero(); n];
    let mut base: Option<T> = None;
    for (j, g) in grad.iter_mut().enumerate().take(kind.free_coordinates(n)) {
        let dj = d.values()[j];
        *g = if dj >= h {
            let (up, down) = (f(&d.with(j, dj + h))?, f(&d.with(j, dj - h))?);
            denoise(up - down, &[up, down]) / (two * h)
        } else {
            let f0 = match base {
                Some(v) => v,
                None => {
                    let v = f(d)?;
                    base = Some(v);
                    v
                }
            };
            let f1 = f(&d.with(j, dj + h))?;
            let f2 = f(&d.with(j, dj + two * h))?;
            denoise(T::lit(-3.0) * f0 + T::lit(4.0) * f1 - f2, &[f0, f1, f2]) / (two * h)
        };
    }
    Ok(grad)
}

/// Gradient as the solver sees it for `kind` under `mode`.
pub fn objective_gradient<T: Real>(
    cov: &CovarianceModel<T>,
    d: &SparsityWeights<T>,
    kind: ObjectiveKind,
    mode: GradientMode,
) -> Result<Vec<T>> {
    match (kind, mode) {
        (ObjectiveKind::OutgoingDelayed, GradientMode::Analytic) => analytic_gradient(cov, d),
        _ => finite_difference_gradient(cov, d, kind),
    }
}

/// Break threshold on the largest gradient entry.
const FLAT_GRADIENT: f64 = 1e-12;

/// Runs monotone stagewise forward on `kind` and records the full path.
///
/// Ties in the arg-max go to the lowest coordinate. A max-steps cap below
/// the budget truncates the path and reports [`Termination::MaxSteps`].
pub fn stagewise_solve<T: Real>(
    cov: &CovarianceModel<T>,
    kind: ObjectiveKind,
    config: &SolverConfig<T>,
) -> Result<SolutionPath<T>> {
    let n = cov.n();
    kind.validate(n)?;
    if !(config.kappa_max > T::zero()) || !(config.epsilon > T::zero()) {
        return Err(Error::InvalidConfig("kappa_max and epsilon must be positive".into()));
    }
    let eps = config.epsilon;
    let free = kind.free_coordinates(n);
    let mut d = SparsityWeights::zeros(n);
    let initial_objective = objective_value(cov, &d, kind)?;
    let mut steps: Vec<PathStep<T>> = Vec::new();
    let budget_slack = eps * T::lit(1e-9);

    let terminated_by = loop {
        let spent = T::from_usize_lossy(steps.len()) * eps;
        if spent >= config.kappa_max - budget_slack {
            break Termination::Budget;
        }
        if steps.len() >= config.max_steps {
            break Termination::MaxSteps;
        }
        let grad = objective_gradient(cov, &d, kind, config.gradient_mode)?;
        let (best, gmax) = grad[..free]
            .iter()
            .enumerate()
            .fold((0usize, T::neg_infinity()), |(bj, bg), (j, &g)| {
                if g > bg {
                    (j, g)
                } else {
                    (bj, bg)
                }
            });
        if free == 0 || gmax <= T::lit(FLAT_GRADIENT) {
            break Termination::NonpositiveGradient;
        }
        d.d[best] = d.d[best] + eps;
        let objective = objective_value(cov, &d, kind)?;
        steps.push(PathStep {
            step_index: steps.len(),
            kappa: T::from_usize_lossy(steps.len() + 1) * eps,
            coordinate: best,
            objective,
            weights: d.d.clone(),
        });
    };

    Ok(SolutionPath {
        kind,
        n,
        epsilon: eps,
        initial_objective,
        steps,
        terminated_by,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry<T> {
    pub entry_kappa: T,
    pub step_index: usize,
    pub score: T,
}

/// Per-coordinate information score: the objective slope `dI/dκ` over the
/// step at which the coordinate first became nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationScores<T> {
    entries: Vec<Option<ScoreEntry<T>>>,
}

impl<T: Real> InformationScores<T> {
    pub fn get(&self, coordinate: usize) -> Option<&ScoreEntry<T>> {
        self.entries.get(coordinate).and_then(Option::as_ref)
    }

    /// Selected coordinates with their entries, in coordinate order.
    pub fn selected(&self) -> impl Iterator<Item = (usize, &ScoreEntry<T>)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(j, e)| e.as_ref().map(|e| (j, e)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected().next().is_none()
    }
}

pub fn information_scores<T: Real>(path: &SolutionPath<T>) -> InformationScores<T> {
    let mut entries: Vec<Option<ScoreEntry<T>>> = vec![None; path.n];
    let mut prev = path.initial_objective;
    for s in &path.steps {
        if entries[s.coordinate].is_none() {
            // rounding can leave a flat step a hair below zero
            let score = ((s.objective - prev) / path.epsilon).max(T::zero());
            entries[s.coordinate] = Some(ScoreEntry {
                entry_kappa: s.kappa,
                step_index: s.step_index,
                score,
            });
        }
        prev = s.objective;
    }
    InformationScores { entries }
}

/// Order statistic at `quantile ∈ (0, 1]` by the nearest-rank rule, so
/// `1.0` returns the maximum. `None` for an empty sample.
pub fn quantile<T: Real>(sample: &[T], quantile: f64) -> Option<T> {
    if sample.is_empty() {
        return None;
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    let rank = (quantile * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Settings of a null-model calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSettings {
    pub n: usize,
    pub d_samples: usize,
    pub reps: usize,
    pub quantile: f64,
    pub seed: u64,
    pub estimator: Estimator,
}

impl NullSettings {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 20 {
            return Err(Error::InvalidConfig(format!("reps = {} must be at least 20", self.reps)));
        }
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return Err(Error::InvalidConfig(format!("quantile = {} outside (0, 1]", self.quantile)));
        }
        if self.d_samples < 3 {
            return Err(Error::InvalidConfig("null panels need at least 3 samples".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig("null panels need at least 2 time points".into()));
        }
        Ok(())
    }
}

/// Seed of replicate `rep` derived from a master seed.
pub fn replicate_seed(seed: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64 + 1);
    rng.next_u64()
}

/// Pooled information scores of every selected coordinate across `reps`
/// panels drawn with X and Y independent.
///
/// Each replicate runs the full pipeline: sample, estimate, solve every
/// kind in `kinds`, score. Output order is replicate-major and independent
/// of thread scheduling.
pub fn null_scores<T: Real>(
    settings: &NullSettings,
    kinds: &[ObjectiveKind],
    config: &SolverConfig<T>,
) -> Result<Vec<T>> {
    settings.validate()?;
    config.validate()?;
    for k in kinds {
        k.validate(settings.n)?;
    }
    let per_rep: Vec<Result<Vec<T>>> = (0..settings.reps)
        .into_par_iter()
        .map(|rep| {
            let spec = LinkSpec::null_model(settings.n, replicate_seed(settings.seed, rep));
            let panel = spec.sample::<T>(settings.d_samples)?;
            let cov = settings.estimator.estimate(&panel)?;
            let mut scores = Vec::new();
            for &kind in kinds {
                let path = stagewise_solve(&cov, kind, &config.for_kind(kind, settings.n))?;
                scores.extend(information_scores(&path).selected().map(|(_, e)| e.score));
            }
            Ok(scores)
        })
        .collect();
    let mut pooled = Vec::new();
    for r in per_rep {
        pooled.extend(r?);
    }
    Ok(pooled)
}

/// Score threshold: the `quantile` of [`null_scores`]. Zero when the null
/// runs select nothing.
pub fn null_threshold<T: Real>(
    settings: &NullSettings,
    kinds: &[ObjectiveKind],
    config: &SolverConfig<T>,
) -> Result<T> {
    let scores = null_scores(settings, kinds, config)?;
    Ok(quantile(&scores, settings.quantile).unwrap_or_else(T::zero))
}
