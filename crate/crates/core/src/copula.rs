//! Gaussian-copula correlation estimation from raw samples.
//!
//! Directed information between continuous series depends only on their
//! copula, so the marginals can be discarded: every column is replaced by
//! its normal scores `Φ⁻¹(r / (d + 1))` and the correlation of those scores
//! stands in for the covariance matrix. Strictly increasing per-column
//! transforms leave the ranks, and therefore everything downstream,
//! bit-identical.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::gaussian_info::CovarianceModel;
use crate::linalg::Matrix;
use crate::scalar::Real;

/// `d_samples × 2n` observations, columns `x₁..xₙ, y₁..yₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePanel<T> {
    n: usize,
    values: Matrix<T>,
}

impl<T: Real> SamplePanel<T> {
    pub fn new(n: usize, values: Matrix<T>) -> Result<Self> {
        if values.cols() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: values.cols(),
            });
        }
        for row in 0..values.rows() {
            if let Some(column) = values.row(row).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row, column });
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_samples(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn column(&self, k: usize) -> Vec<T> {
        (0..self.values.rows()).map(|i| self.values[(i, k)]).collect()
    }

    /// Applies `f` to every entry of column `k`.
    pub fn map_column(&self, k: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let mut values = self.values.clone();
        for i in 0..values.rows() {
            values[(i, k)] = f(values[(i, k)]);
        }
        Self::new(self.n, values)
    }

    /// Reorders rows; `order[i]` is the source row of output row `i`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        let cols: Vec<usize> = (0..self.values.cols()).collect();
        Self {
            n: self.n,
            values: self.values.select(order, &cols),
        }
    }

    fn check_estimable(&self) -> Result<()> {
        if self.d_samples() < 3 {
            return Err(Error::Domain(format!(
                "need at least 3 samples, got {}",
                self.d_samples()
            )));
        }
        Ok(())
    }
}

/// Ranks `1..=d` of column `k`, ties sharing their average rank.
pub fn column_ranks<T: Real>(panel: &SamplePanel<T>, k: usize) -> Result<Vec<f64>> {
    let dim = 2 * panel.n;
    if k >= dim {
        return Err(Error::IndexOutOfRange { index: k, dim });
    }
    let col = panel.column(k);
    let mut order: Vec<usize> = (0..col.len()).collect();
    order.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).expect("finite panel"));
    if col.len() > 1 && col[order[0]] == col[order[col.len() - 1]] {
        return Err(Error::DegenerateColumn { column: k });
    }
    let mut ranks = vec![0.0; col.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && col[order[end]] == col[order[start]] {
            end += 1;
        }
        // positions start..end share ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    Ok(ranks)
}

/// Standard normal quantile `Φ⁻¹(p)`.
///
/// Acklam's rational approximation (relative error about `1e-9`) followed by
/// one Halley step against `Φ(x) = ½ erfc(−x/√2)`, which brings the result
/// to near machine precision.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    // Halley refinement; the error term is computed on the smaller tail
    let e = if x <= 0.0 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2) - p
    } else {
        (1.0 - p) - 0.5 * erfc(x / std::f64::consts::SQRT_2)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

/// Sum in a canonical order so the result does not depend on sample order.
fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

fn correlation_from_scores<T: Real>(n: usize, scores: &[Vec<f64>], denom: &[f64]) -> Result<CovarianceModel<T>> {
    let dim = scores.len();
    let upper: Vec<(usize, usize, f64)> = (0..dim)
        .into_par_iter()
        .flat_map_iter(|k| {
            ((k + 1)..dim).map(move |j| {
                let products = scores[k].iter().zip(&scores[j]).map(|(a, b)| a * b).collect();
                (k, j, canonical_sum(products) / (denom[k] * denom[j]).sqrt())
            })
        })
        .collect();
    let mut m = Matrix::identity(dim);
    for (k, j, v) in upper {
        m[(k, j)] = T::lit(v);
        m[(j, k)] = T::lit(v);
    }
    // a repaired estimate is rescaled so the diagonal stays exactly one
    let cov = CovarianceModel::new(n, m)?;
    Ok(if cov.was_jittered() { cov.to_correlation() } else { cov })
}

/// Normal-scores rank correlation matrix of the panel.
///
/// Entry `(k, j)` is `Σᵢ Φ⁻¹(r_ik/(d+1)) Φ⁻¹(r_ij/(d+1)) / Σᵢ Φ⁻¹(i/(d+1))²`;
/// the diagonal is exactly one. Ties (average ranks) shrink a column's own
/// score energy slightly below the denominator, which the PD repair in
/// [`CovarianceModel::new`] absorbs.
pub fn normal_scores_correlation<T: Real>(panel: &SamplePanel<T>) -> Result<CovarianceModel<T>> {
    panel.check_estimable()?;
    let d = panel.d_samples();
    let dim = 2 * panel.n;
    let scores: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|k| {
            column_ranks(panel, k)?
                .into_iter()
                .map(|r| inverse_normal_cdf(r / (d as f64 + 1.0)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let norm = canonical_sum(
        (1..=d)
            .map(|i| inverse_normal_cdf(i as f64 / (d as f64 + 1.0)).map(|z| z * z))
            .collect::<Result<_>>()?,
    );
    correlation_from_scores(panel.n, &scores, &vec![norm; dim])
}

/// Pearson correlation matrix (sample covariance of standardized columns).
pub fn pearson_correlation<T: Real>(panel: &SamplePanel<T>) -> Result<CovarianceModel<T>> {
    panel.check_estimable()?;
    let d = panel.d_samples() as f64;
    let dim = 2 * panel.n;
    let centered: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let col: Vec<f64> = panel.column(k).into_iter().map(Real::as_f64).collect();
            let mean = canonical_sum(col.clone()) / d;
            col.into_iter().map(|v| v - mean).collect::<Vec<f64>>()
        })
        .collect();
    let energy: Vec<f64> = centered
        .iter()
        .map(|c| canonical_sum(c.iter().map(|v| v * v).collect()))
        .collect();
    if let Some(column) = energy.iter().position(|&e| !(e > 0.0)) {
        return Err(Error::DegenerateColumn { column });
    }
    correlation_from_scores(panel.n, &centered, &energy)
}

/// How a panel becomes a [`CovarianceModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Normal-scores rank correlation (semi-parametric Gaussian copula).
    #[default]
    Copula,
    /// Pearson correlation, for data already Gaussian.
    Gaussian,
}

impl Estimator {
    pub fn estimate<T: Real>(&self, panel: &SamplePanel<T>) -> Result<CovarianceModel<T>> {
        match self {
            Estimator::Copula => normal_scores_correlation(panel),
            Estimator::Gaussian => pearson_correlation(panel),
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copula" => Ok(Estimator::Copula),
            "gaussian" => Ok(Estimator::Gaussian),
            other => Err(Error::InvalidConfig(format!(
                "unknown estimator {other:?} (expected copula or gaussian)"
            ))),
        }
    }
}
