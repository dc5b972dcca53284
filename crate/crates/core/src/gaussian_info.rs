//! Information functionals for a pair of jointly Gaussian time series.
//!
//! The joint covariance of `(X₁..Xₙ, Y₁..Yₙ)` is stored in block layout:
//! indices `0..n` are the X time points and `n..2n` the Y time points.
//! Every functional below is an exact closed form in nats, built from
//! Schur complements and log-determinants of principal blocks.
//!
//! Delayed prefixes follow the wildcard convention: a prefix that would
//! reach before the first time point is the empty set, and conditioning on
//! the empty set is no conditioning at all.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{prefix_log_dets, Cholesky, Matrix};
use crate::scalar::Real;
use crate::solver::SparsityWeights;

/// Joint covariance (or correlation) matrix of two length-`n` series.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel<T> {
    n: usize,
    matrix: Matrix<T>,
    jittered: bool,
}

impl<T: Real> CovarianceModel<T> {
    /// Validates a `2n × 2n` matrix and enforces positive definiteness.
    ///
    /// When the smallest eigenvalue falls below `1e-10` times the largest,
    /// a ridge of `1e-8 · trace / 2n` is added to the diagonal and
    /// [`was_jittered`](Self::was_jittered) reports it.
    pub fn new(n: usize, matrix: Matrix<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("series length must be positive".into()));
        }
        if matrix.rows() != 2 * n || matrix.cols() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: if matrix.rows() != 2 * n {
                    matrix.rows()
                } else {
                    matrix.cols()
                },
            });
        }
        if !matrix.is_finite() {
            return Err(Error::Domain("covariance contains non-finite entries".into()));
        }
        let asym = matrix.max_asymmetry();
        if asym > symmetry_tolerance::<T>(&matrix) {
            return Err(Error::NotSymmetric {
                max_asymmetry: asym.as_f64(),
            });
        }

        let dim = 2 * n;
        let largest = matrix.spectral_radius_estimate(100);
        let floor = T::lit(1e-10) * largest;
        let mut shifted = matrix.clone();
        for i in 0..dim {
            shifted[(i, i)] = shifted[(i, i)] - floor;
        }
        if Cholesky::new(&shifted).is_ok() {
            return Ok(Self {
                n,
                matrix,
                jittered: false,
            });
        }

        let ridge = T::lit(1e-8) * matrix.trace() / T::from_usize_lossy(dim);
        let mut repaired = matrix;
        for i in 0..dim {
            repaired[(i, i)] = repaired[(i, i)] + ridge;
        }
        Cholesky::new(&repaired)?;
        Ok(Self {
            n,
            matrix: repaired,
            jittered: true,
        })
    }

    /// Builds the model from its four blocks `Σ_X`, `Σ_XY`, `Σ_Y`.
    pub fn from_blocks(sigma_x: &Matrix<T>, sigma_xy: &Matrix<T>, sigma_y: &Matrix<T>) -> Result<Self> {
        let n = sigma_x.rows();
        let m = Matrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => sigma_x[(i, j)],
            (true, false) => sigma_xy[(i, j - n)],
            (false, true) => sigma_xy[(j, i - n)],
            (false, false) => sigma_y[(i - n, j - n)],
        });
        Self::new(n, m)
    }

    /// Internal constructor for matrices that are PD by construction.
    pub(crate) fn trusted(n: usize, matrix: Matrix<T>) -> Self {
        debug_assert_eq!(matrix.rows(), 2 * n);
        Self {
            n,
            matrix,
            jittered: false,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn was_jittered(&self) -> bool {
        self.jittered
    }

    /// Layout index of `X_t` for a 1-based time index.
    #[inline]
    pub fn x(&self, t: usize) -> usize {
        debug_assert!((1..=self.n).contains(&t));
        t - 1
    }

    /// Layout index of `Y_t` for a 1-based time index.
    #[inline]
    pub fn y(&self, t: usize) -> usize {
        debug_assert!((1..=self.n).contains(&t));
        self.n + t - 1
    }

    /// Exchanges the roles of the two series.
    pub fn swapped(&self) -> Self {
        let n = self.n;
        let order: Vec<usize> = (n..2 * n).chain(0..n).collect();
        Self {
            n,
            matrix: self.matrix.permute(&order),
            jittered: self.jittered,
        }
    }

    /// Rescales to unit diagonal.
    pub fn to_correlation(&self) -> Self {
        let s: Vec<T> = self.matrix.diagonal().into_iter().map(|v| v.sqrt()).collect();
        let m = Matrix::from_fn(2 * self.n, 2 * self.n, |i, j| {
            if i == j {
                T::one()
            } else {
                self.matrix[(i, j)] / (s[i] * s[j])
            }
        });
        Self {
            n: self.n,
            matrix: m,
            jittered: self.jittered,
        }
    }

    pub fn sigma_x(&self) -> Matrix<T> {
        let xs: Vec<usize> = (0..self.n).collect();
        self.matrix.select(&xs, &xs)
    }

    pub fn sigma_y(&self) -> Matrix<T> {
        let ys: Vec<usize> = (self.n..2 * self.n).collect();
        self.matrix.select(&ys, &ys)
    }

    pub fn sigma_xy(&self) -> Matrix<T> {
        let xs: Vec<usize> = (0..self.n).collect();
        let ys: Vec<usize> = (self.n..2 * self.n).collect();
        self.matrix.select(&xs, &ys)
    }
}

fn symmetry_tolerance<T: Real>(m: &Matrix<T>) -> T {
    let scale = m
        .as_slice()
        .iter()
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    T::lit(1e-12).max(T::lit(16.0) * T::epsilon() * scale)
}

/// Strictly increasing list of layout indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Accepts only strictly increasing input.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!(
                "index set not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self(indices))
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn single(i: usize) -> Self {
        Self(vec![i])
    }

    /// Layout indices of `X₁..X_len` (empty when `len == 0`).
    pub fn x_prefix(len: usize) -> Self {
        Self((0..len).collect())
    }

    /// Layout indices of `Y₁..Y_len` in a model with `n` time points.
    pub fn y_prefix(n: usize, len: usize) -> Self {
        Self((n..n + len).collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_unsorted(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check_range(&self, dim: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i >= dim) {
            Some(&index) => Err(Error::IndexOutOfRange { index, dim }),
            None => Ok(()),
        }
    }

    fn check_disjoint(&self, other: &Self) -> Result<()> {
        match self.0.iter().find(|i| other.0.binary_search(i).is_ok()) {
            Some(&i) => Err(Error::OverlappingIndexSets(i)),
            None => Ok(()),
        }
    }
}

/// Direction of a delayed information flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    XToY,
    YToX,
}

/// Which causal-compression objective to maximise.
///
/// The compressed series is always X, except for `PerTargetIncoming`, which
/// compresses Y and targets `X_i` (the X/Y exchange used for Y→X arrows).
/// Per-target indices are 1-based time points in `2..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveKind {
    OutgoingDelayed,
    IncomingDelayed,
    Instantaneous,
    PerTargetOutgoing(usize),
    PerTargetIncoming(usize),
}

impl ObjectiveKind {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            ObjectiveKind::PerTargetOutgoing(i) | ObjectiveKind::PerTargetIncoming(i)
                if !(2..=n).contains(&i) =>
            {
                Err(Error::Domain(format!(
                    "per-target index {i} outside 2..={n}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Number of leading weight coordinates the objective can depend on.
    pub fn free_coordinates(&self, n: usize) -> usize {
        match *self {
            ObjectiveKind::PerTargetOutgoing(i) | ObjectiveKind::PerTargetIncoming(i) => i - 1,
            _ => n,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ObjectiveKind::OutgoingDelayed => "out".into(),
            ObjectiveKind::IncomingDelayed => "in".into(),
            ObjectiveKind::Instantaneous => "eq".into(),
            ObjectiveKind::PerTargetOutgoing(i) => format!("out_to_y{i}"),
            ObjectiveKind::PerTargetIncoming(i) => format!("out_to_x{i}"),
        }
    }
}

fn validate_sets<T: Real>(cov: &CovarianceModel<T>, sets: &[&IndexSet]) -> Result<()> {
    let dim = 2 * cov.n;
    for s in sets {
        s.check_range(dim)?;
    }
    for (k, a) in sets.iter().enumerate() {
        for b in &sets[k + 1..] {
            a.check_disjoint(b)?;
        }
    }
    Ok(())
}

fn schur<T: Real>(m: &Matrix<T>, a: &IndexSet, b: &IndexSet) -> Result<Matrix<T>> {
    let aa = m.select(a.as_slice(), a.as_slice());
    if b.is_empty() {
        return Ok(aa);
    }
    let bb = m.select(b.as_slice(), b.as_slice());
    let chol = Cholesky::new(&bb).map_err(|_| Error::Singular {
        set: b.as_slice().to_vec(),
    })?;
    let ba = m.select(b.as_slice(), a.as_slice());
    let solved = chol.solve(&ba);
    let correction = ba.transpose().matmul(&solved);
    let out = aa.sub(&correction);
    // restore exact symmetry lost to rounding
    Ok(Matrix::from_fn(out.rows(), out.cols(), |i, j| {
        T::half() * (out[(i, j)] + out[(j, i)])
    }))
}

/// `Σ_A − Σ_AB Σ_B⁻¹ Σ_BA`, the covariance of A given B.
pub fn conditional_covariance<T: Real>(
    cov: &CovarianceModel<T>,
    a: &IndexSet,
    b: &IndexSet,
) -> Result<Matrix<T>> {
    if a.is_empty() {
        return Err(Error::Domain("conditioned set must be nonempty".into()));
    }
    validate_sets(cov, &[a, b])?;
    schur(&cov.matrix, a, b)
}

fn log_det_conditional<T: Real>(m: &Matrix<T>, a: &IndexSet, b: &IndexSet) -> Result<T> {
    let c = schur(m, a, b)?;
    let mut set = a.as_slice().to_vec();
    set.extend_from_slice(b.as_slice());
    Ok(Cholesky::new(&c)
        .map_err(|_| Error::Singular { set })?
        .log_det())
}

/// `I(A; B | C) = ½ [log det Σ_{A|C} − log det Σ_{A|B∪C}]`.
pub fn gaussian_mutual_information<T: Real>(
    cov: &CovarianceModel<T>,
    a: &IndexSet,
    b: &IndexSet,
    c: &IndexSet,
) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain(
            "mutual information needs two nonempty sets".into(),
        ));
    }
    validate_sets(cov, &[a, b, c])?;
    let m = &cov.matrix;
    let given_c = log_det_conditional(m, a, c)?;
    let given_bc = log_det_conditional(m, a, &b.union(c))?;
    Ok(T::half() * (given_c - given_bc))
}

/// Cumulative log-determinants for the four orderings the decomposition uses.
struct Prefixes<T> {
    /// X₁, Y₁, X₂, Y₂, …
    xy: Vec<T>,
    /// Y₁, X₁, Y₂, X₂, …
    yx: Vec<T>,
    x: Vec<T>,
    y: Vec<T>,
}

fn interleaved(n: usize, x_first: bool) -> Vec<usize> {
    (0..n)
        .flat_map(|t| {
            if x_first {
                [t, n + t]
            } else {
                [n + t, t]
            }
        })
        .collect()
}

fn prefixes_of<T: Real>(m: &Matrix<T>, order: &[usize]) -> Result<Vec<T>> {
    prefix_log_dets(m, order).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot, .. } => Error::Singular {
            set: order[..=pivot].to_vec(),
        },
        other => other,
    })
}

impl<T: Real> Prefixes<T> {
    fn compute(cov: &CovarianceModel<T>, which: (bool, bool, bool, bool)) -> Result<Self> {
        let n = cov.n;
        let m = &cov.matrix;
        let run = |flag: bool, order: Vec<usize>| -> Result<Vec<T>> {
            if flag {
                prefixes_of(m, &order)
            } else {
                Ok(Vec::new())
            }
        };
        Ok(Self {
            xy: run(which.0, interleaved(n, true))?,
            yx: run(which.1, interleaved(n, false))?,
            x: run(which.2, (0..n).collect())?,
            y: run(which.3, (n..2 * n).collect())?,
        })
    }
}

/// ½ Σ_{i=1}^{n−1} (log|Σ_{P^i|Q^i}| − log|Σ_{P^i|Q^{i+1}}|) with `joint`
/// the prefixes of (Q₁, P₁, Q₂, P₂, …) and `target` those of Q alone.
fn delayed_from_prefixes<T: Real>(n: usize, joint: &[T], target: &[T]) -> T {
    let mut acc = T::zero();
    for i in 1..n {
        let given_q_i = joint[2 * i] - target[i];
        let given_q_next = joint[2 * i + 1] - target[i + 1];
        acc = acc + (given_q_i - given_q_next);
    }
    T::half() * acc
}

fn instantaneous_from_prefixes<T: Real>(n: usize, xy: &[T], yx: &[T]) -> T {
    let mut acc = T::zero();
    for i in 1..=n {
        let x_given_past = xy[2 * i - 1] - xy[2 * i - 2];
        let y_given_past = yx[2 * i - 1] - yx[2 * i - 2];
        let both_given_past = xy[2 * i] - xy[2 * i - 2];
        acc = acc + (x_given_past + y_given_past - both_given_past);
    }
    T::half() * acc
}

/// Delayed directed information `I(X^{n−1} → Yⁿ)` (or the reverse), in the
/// log-determinant form over conditional covariances of growing prefixes.
pub fn delayed_directed_information<T: Real>(
    cov: &CovarianceModel<T>,
    direction: Direction,
) -> Result<T> {
    let n = cov.n;
    if n < 2 {
        return Err(Error::Domain(
            "delayed directed information needs at least two time points".into(),
        ));
    }
    Ok(match direction {
        Direction::XToY => {
            let p = Prefixes::compute(cov, (false, true, false, true))?;
            delayed_from_prefixes(n, &p.yx, &p.y)
        }
        Direction::YToX => {
            let p = Prefixes::compute(cov, (true, false, true, false))?;
            delayed_from_prefixes(n, &p.xy, &p.x)
        }
    })
}

/// The per-target terms `I(X^{i−1}; Y_i | Y^{i−1})` for `i = 2..=n`
/// (roles exchanged for [`Direction::YToX`]), each evaluated as a
/// conditional mutual information.
pub fn directed_information_terms<T: Real>(
    cov: &CovarianceModel<T>,
    direction: Direction,
) -> Result<Vec<T>> {
    let n = cov.n;
    (2..=n)
        .map(|i| {
            let (source, target, history) = match direction {
                Direction::XToY => (
                    IndexSet::x_prefix(i - 1),
                    IndexSet::single(cov.y(i)),
                    IndexSet::y_prefix(n, i - 1),
                ),
                Direction::YToX => (
                    IndexSet::y_prefix(n, i - 1),
                    IndexSet::single(cov.x(i)),
                    IndexSet::x_prefix(i - 1),
                ),
            };
            gaussian_mutual_information(cov, &source, &target, &history)
        })
        .collect()
}

/// `Σ_{i=1}^{n} I(X_i; Y_i | X^{i−1}, Y^{i−1})`.
pub fn instantaneous_coupling<T: Real>(cov: &CovarianceModel<T>) -> Result<T> {
    let p = Prefixes::compute(cov, (true, true, false, false))?;
    Ok(instantaneous_from_prefixes(cov.n, &p.xy, &p.yx))
}

/// The four parts of `I(Xⁿ; Yⁿ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiDecomposition<T> {
    pub total: T,
    pub x_to_y: T,
    pub y_to_x: T,
    pub instantaneous: T,
}

impl<T: Real> MiDecomposition<T> {
    pub fn residual(&self) -> T {
        self.total - (self.x_to_y + self.y_to_x + self.instantaneous)
    }
}

/// Total mutual information and its split into the two delayed directed
/// informations plus instantaneous coupling.
pub fn mi_decomposition<T: Real>(cov: &CovarianceModel<T>) -> Result<MiDecomposition<T>> {
    let n = cov.n;
    let p = Prefixes::compute(cov, (true, true, true, true))?;
    let total = T::half() * (p.x[n] + p.y[n] - p.xy[2 * n]);
    let (x_to_y, y_to_x) = if n < 2 {
        (T::zero(), T::zero())
    } else {
        (
            delayed_from_prefixes(n, &p.yx, &p.y),
            delayed_from_prefixes(n, &p.xy, &p.x),
        )
    };
    Ok(MiDecomposition {
        total,
        x_to_y,
        y_to_x,
        instantaneous: instantaneous_from_prefixes(n, &p.xy, &p.yx),
    })
}

/// Joint covariance of `(Tⁿ, Yⁿ)` for `T = A X + ξ`, `A = diag(√d)`, `ξ ~ N(0, I)`.
pub fn compressed_covariance<T: Real>(
    cov: &CovarianceModel<T>,
    d: &SparsityWeights<T>,
) -> Result<CovarianceModel<T>> {
    let n = cov.n;
    if d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d.len(),
        });
    }
    let a: Vec<T> = d.values().iter().map(|&v| v.sqrt()).collect();
    let scale = |i: usize| if i < n { a[i] } else { T::one() };
    let m = &cov.matrix;
    let out = Matrix::from_fn(2 * n, 2 * n, |i, j| {
        let v = scale(i) * scale(j) * m[(i, j)];
        if i == j && i < n {
            v + T::one()
        } else {
            v
        }
    });
    Ok(CovarianceModel::trusted(n, out))
}

/// Value of a causal-compression objective at weights `d`.
///
/// Weights index the time points of the compressed series; for per-target
/// kinds only the first `i − 1` of them matter.
pub fn objective_value<T: Real>(
    cov: &CovarianceModel<T>,
    d: &SparsityWeights<T>,
    kind: ObjectiveKind,
) -> Result<T> {
    let n = cov.n;
    kind.validate(n)?;
    match kind {
        ObjectiveKind::OutgoingDelayed | ObjectiveKind::IncomingDelayed if n < 2 => Ok(T::zero()),
        ObjectiveKind::OutgoingDelayed => {
            delayed_directed_information(&compressed_covariance(cov, d)?, Direction::XToY)
        }
        ObjectiveKind::IncomingDelayed => {
            delayed_directed_information(&compressed_covariance(cov, d)?, Direction::YToX)
        }
        ObjectiveKind::Instantaneous => instantaneous_coupling(&compressed_covariance(cov, d)?),
        ObjectiveKind::PerTargetOutgoing(i) => {
            let t = compressed_covariance(cov, d)?;
            per_target(&t, i)
        }
        ObjectiveKind::PerTargetIncoming(i) => {
            let t = compressed_covariance(&cov.swapped(), d)?;
            per_target(&t, i)
        }
    }
}

/// `I(T^{i−1}; Y_i | Y^{i−1})` on an already compressed model.
fn per_target<T: Real>(t: &CovarianceModel<T>, i: usize) -> Result<T> {
    let n = t.n;
    gaussian_mutual_information(
        t,
        &IndexSet::x_prefix(i - 1),
        &IndexSet::single(t.y(i)),
        &IndexSet::y_prefix(n, i - 1),
    )
}
