//! Synthetic pairs of series from a linear structural model `Z = BZ + ξ`.
//!
//! Each series is an autoregressive chain of configurable order; cross
//! links `X_j → Y_i` / `Y_j → X_i` (with `j < i`) and same-index couplings
//! are added on top. In the time-major order `X₁, Y₁, X₂, Y₂, …` every
//! variable depends only on earlier ones, so `B` is strictly lower
//! triangular there and `I − B` is always invertible.
//!
//! Sampling is reproducible: a ChaCha8 stream seeded with `seed` supplies
//! 53-bit uniforms, turned into normals by the Box–Muller transform (both
//! outputs used, cosine branch first). Noise is drawn row by row in
//! time-major order.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::copula::SamplePanel;
use crate::error::{Error, Result};
use crate::gaussian_info::CovarianceModel;
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const DEFAULT_MARKOV_ORDER: usize = 6;
pub const DEFAULT_CROSS_COEFFICIENT: f64 = 0.8;

/// `0.5, 0.25, …` for the given order.
pub fn default_auto_coefficients(order: usize) -> Vec<f64> {
    (1..=order).map(|l| 0.5f64.powi(l as i32)).collect()
}

fn default_markov_order() -> usize {
    DEFAULT_MARKOV_ORDER
}

fn default_sigma() -> f64 {
    1.0
}

/// Structural model of a pair of series. Time indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub n: usize,
    #[serde(default = "default_markov_order")]
    pub markov_order: usize,
    /// `(source j, target i, coefficient)` for `X_j → Y_i`.
    #[serde(default)]
    pub links_x_to_y: Vec<(usize, usize, f64)>,
    /// `(source j, target i, coefficient)` for `Y_j → X_i`.
    #[serde(default)]
    pub links_y_to_x: Vec<(usize, usize, f64)>,
    /// `(i, coefficient)`: instantaneous coupling of `X_i` and `Y_i`.
    #[serde(default)]
    pub couplings: Vec<(usize, f64)>,
    /// Lag-`l` coefficient at position `l − 1`; defaults to `0.5^l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_coefficients: Option<Vec<f64>>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl LinkSpec {
    /// Two independent chains of the default order.
    pub fn null_model(n: usize, seed: u64) -> Self {
        Self {
            n,
            markov_order: DEFAULT_MARKOV_ORDER,
            links_x_to_y: Vec::new(),
            links_y_to_x: Vec::new(),
            couplings: Vec::new(),
            auto_coefficients: None,
            sigma: 1.0,
            seed,
        }
    }

    /// The reference fixture: `n = 12`, order 6, three X→Y links, four
    /// Y→X links and two couplings, all with coefficient 0.8.
    ///
    /// Link positions were drawn once and frozen here.
    pub fn default_fixture() -> Self {
        let c = DEFAULT_CROSS_COEFFICIENT;
        Self {
            n: 12,
            markov_order: DEFAULT_MARKOV_ORDER,
            links_x_to_y: vec![(2, 4, c), (5, 6, c), (9, 11, c)],
            links_y_to_x: vec![(1, 3, c), (4, 7, c), (7, 8, c), (10, 12, c)],
            couplings: vec![(6, c), (10, c)],
            auto_coefficients: None,
            sigma: 1.0,
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// The same chains with every cross link and coupling removed.
    pub fn without_cross_links(&self) -> Self {
        Self {
            links_x_to_y: Vec::new(),
            links_y_to_x: Vec::new(),
            couplings: Vec::new(),
            ..self.clone()
        }
    }

    pub fn auto_coefficients(&self) -> Vec<f64> {
        self.auto_coefficients
            .clone()
            .unwrap_or_else(|| default_auto_coefficients(self.markov_order))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidSpec(format!("sigma = {} must be positive", self.sigma)));
        }
        let auto = self.auto_coefficients();
        if auto.len() < self.markov_order {
            return Err(Error::InvalidSpec(format!(
                "{} auto coefficients for markov order {}",
                auto.len(),
                self.markov_order
            )));
        }
        if auto.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("non-finite auto coefficient".into()));
        }
        for (name, links) in [("x->y", &self.links_x_to_y), ("y->x", &self.links_y_to_x)] {
            let mut seen = std::collections::HashSet::new();
            for &(j, i, c) in links.iter() {
                if j == 0 || i > n {
                    return Err(Error::InvalidSpec(format!(
                        "{name} link ({j}, {i}) outside 1..={n}"
                    )));
                }
                if j >= i {
                    return Err(Error::InvalidSpec(format!(
                        "{name} link ({j}, {i}) must point forward in time (j < i)"
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidSpec(format!("{name} link ({j}, {i}) has non-finite coefficient")));
                }
                if !seen.insert((j, i)) {
                    return Err(Error::InvalidSpec(format!("duplicate {name} link ({j}, {i})")));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &(i, c) in &self.couplings {
            if i == 0 || i > n {
                return Err(Error::InvalidSpec(format!("coupling index {i} outside 1..={n}")));
            }
            if !c.is_finite() {
                return Err(Error::InvalidSpec(format!("coupling {i} has non-finite coefficient")));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidSpec(format!("duplicate coupling at {i}")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(s).map_err(|e| Error::InvalidSpec(format!("bad JSON: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("LinkSpec serializes")
    }

    /// `B` in block layout (`X₁..Xₙ, Y₁..Yₙ`); row = effect, column = cause.
    ///
    /// A coupling at `i` is the single entry `X_i → Y_i`.
    pub fn build_structural_matrix(&self) -> Result<Matrix<f64>> {
        self.validate()?;
        let n = self.n;
        let auto = self.auto_coefficients();
        let mut b = Matrix::zeros(2 * n, 2 * n);
        for t in 1..=n {
            for lag in 1..=self.markov_order.min(t - 1) {
                let a = auto[lag - 1];
                b[(t - 1, t - 1 - lag)] = a;
                b[(n + t - 1, n + t - 1 - lag)] = a;
            }
        }
        for &(j, i, c) in &self.links_x_to_y {
            b[(n + i - 1, j - 1)] = c;
        }
        for &(j, i, c) in &self.links_y_to_x {
            b[(i - 1, n + j - 1)] = c;
        }
        for &(i, c) in &self.couplings {
            b[(n + i - 1, i - 1)] = c;
        }
        Ok(b)
    }

    /// `(I − B)⁻¹` in block layout.
    fn propagator<T: Real>(&self) -> Result<Matrix<T>> {
        let b = self.build_structural_matrix()?;
        let n = self.n;
        let order = time_major(n);
        let bp = b.permute(&order);
        let dim = 2 * n;
        // rows of (I − B_p)⁻¹ by forward substitution: L_k = e_k + Σ_{m<k} B_km L_m
        let mut l = Matrix::<T>::identity(dim);
        for k in 0..dim {
            for m in 0..k {
                let c = bp[(k, m)];
                if c != 0.0 {
                    let c = T::lit(c);
                    for col in 0..=m {
                        l[(k, col)] = l[(k, col)] + c * l[(m, col)];
                    }
                }
            }
        }
        let mut inverse = vec![0usize; dim];
        for (pos, &src) in order.iter().enumerate() {
            inverse[src] = pos;
        }
        Ok(l.permute(&inverse))
    }

    /// Exact `Σ = σ² (I − B)⁻¹ (I − B)⁻ᵀ`.
    pub fn population_covariance<T: Real>(&self) -> Result<CovarianceModel<T>> {
        let l = self.propagator::<T>()?;
        let s2 = T::lit(self.sigma * self.sigma);
        let sigma = l.matmul(&l.transpose()).scale(s2);
        let sym = Matrix::from_fn(sigma.rows(), sigma.cols(), |i, j| {
            T::half() * (sigma[(i, j)] + sigma[(j, i)])
        });
        CovarianceModel::new(self.n, sym)
    }

    /// `d_samples` i.i.d. draws of `Z = (I − B)⁻¹ ξ`, `ξ ~ N(0, σ² I)`.
    pub fn sample<T: Real>(&self, d_samples: usize) -> Result<SamplePanel<T>> {
        let b = self.build_structural_matrix()?;
        let n = self.n;
        let dim = 2 * n;
        let order = time_major(n);
        let bp = b.permute(&order);
        let parents: Vec<Vec<(usize, f64)>> = (0..dim)
            .map(|k| {
                (0..k)
                    .filter(|&m| bp[(k, m)] != 0.0)
                    .map(|m| (m, bp[(k, m)]))
                    .collect()
            })
            .collect();
        let mut normals = BoxMuller::new(self.seed);
        let mut values = Matrix::zeros(d_samples, dim);
        let mut z = vec![0.0f64; dim];
        for row in 0..d_samples {
            for k in 0..dim {
                let mut v = self.sigma * normals.next();
                for &(m, c) in &parents[k] {
                    v += c * z[m];
                }
                z[k] = v;
            }
            for (pos, &src) in order.iter().enumerate() {
                values[(row, src)] = T::lit(z[pos]);
            }
        }
        SamplePanel::new(n, values)
    }

    /// Planted ground truth in the shape of the recovered structures.
    pub fn ground_truth(&self) -> GroundTruth {
        let mut x_out: Vec<usize> = self.links_x_to_y.iter().map(|l| l.0).collect();
        let mut x_in: Vec<usize> = self.links_y_to_x.iter().map(|l| l.1).collect();
        let mut x_eq: Vec<usize> = self.couplings.iter().map(|c| c.0).collect();
        for v in [&mut x_out, &mut x_in, &mut x_eq] {
            v.sort_unstable();
            v.dedup();
        }
        let mut arrows_x_to_y: Vec<(usize, usize)> = self.links_x_to_y.iter().map(|l| (l.0, l.1)).collect();
        let mut arrows_y_to_x: Vec<(usize, usize)> = self.links_y_to_x.iter().map(|l| (l.0, l.1)).collect();
        arrows_x_to_y.sort_unstable();
        arrows_y_to_x.sort_unstable();
        GroundTruth {
            x_out,
            x_in,
            x_eq,
            arrows_x_to_y,
            arrows_y_to_x,
        }
    }
}

/// Planted structure of a [`LinkSpec`], 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub x_out: Vec<usize>,
    pub x_in: Vec<usize>,
    pub x_eq: Vec<usize>,
    pub arrows_x_to_y: Vec<(usize, usize)>,
    pub arrows_y_to_x: Vec<(usize, usize)>,
}

/// Block-layout indices in time-major order `X₁, Y₁, X₂, Y₂, …`.
fn time_major(n: usize) -> Vec<usize> {
    (0..n).flat_map(|t| [t, n + t]).collect()
}

/// Standard normals from ChaCha8 by the Box–Muller transform.
pub struct BoxMuller {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl BoxMuller {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `(0, 1]` with 53 random bits.
    fn uniform(&mut self) -> f64 {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        1.0 - u
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let theta = 2.0 * PI * self.uniform();
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}
