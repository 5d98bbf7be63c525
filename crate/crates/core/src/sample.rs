//! Observation samples, factor groups, weight functions and the weighted
//! statistics shared by every estimator.
//!
//! Weighted quantities follow the weighted-probability convention: a weight
//! vector `w` turns an empirical average `(1/n) Σ f(z_i)` into
//! `Σ w_i f(z_i) / Σ w_i`. Passing `None` is the same computation with unit
//! weights, so the weighted and unweighted paths agree bitwise when `w ≡ 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    #[default]
    Continuous,
    Categorical,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    #[default]
    First,
    Total,
}

/// Global analysis, or one of the views of a critical domain given by a weight.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Global,
    Target,
    Conditional,
    Hybrid,
}

impl Order {
    pub fn as_str(&self) -> &'static str {
        match self {
            Order::First => "first",
            Order::Total => "total",
        }
    }
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Global => "global",
            Mode::Target => "target",
            Mode::Conditional => "conditional",
            Mode::Hybrid => "hybrid",
        }
    }
}

/// `n` observations of `d` factors and a `p`-dimensional response.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    factors: Matrix,
    response: Matrix,
    factor_kind: Vec<FactorKind>,
    factor_names: Vec<String>,
    response_names: Vec<String>,
}

impl Sample {
    pub fn new(factors: Matrix, response: Matrix, factor_kind: Vec<FactorKind>) -> Result<Self> {
        let d = factors.ncols();
        let p = response.ncols();
        let factor_names = (1..=d).map(|i| format!("X{i}")).collect();
        let response_names = if p == 1 {
            vec!["Y".to_string()]
        } else {
            (1..=p).map(|j| format!("Y{j}")).collect()
        };
        Self::with_names(factors, response, factor_kind, factor_names, response_names)
    }

    /// Continuous factors, scalar response.
    pub fn continuous(factors: Matrix, response: Vec<f64>) -> Result<Self> {
        let d = factors.ncols();
        let n = response.len();
        Self::new(
            factors,
            Matrix::from_vec(n, 1, response),
            vec![FactorKind::Continuous; d],
        )
    }

    pub fn with_names(
        factors: Matrix,
        response: Matrix,
        factor_kind: Vec<FactorKind>,
        factor_names: Vec<String>,
        response_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = factors.shape();
        if n == 0 {
            return Err(Error::Empty("sample rows"));
        }
        if d == 0 {
            return Err(Error::Empty("factor columns"));
        }
        if response.ncols() == 0 {
            return Err(Error::Empty("response columns"));
        }
        if response.nrows() != n {
            return Err(Error::DimensionMismatch {
                what: "response rows",
                expected: n,
                got: response.nrows(),
            });
        }
        if factor_kind.len() != d {
            return Err(Error::DimensionMismatch {
                what: "factor kinds",
                expected: d,
                got: factor_kind.len(),
            });
        }
        if factor_names.len() != d || response_names.len() != response.ncols() {
            return Err(Error::InvalidParameter(
                "name count does not match columns".into(),
            ));
        }
        if factors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("factors"));
        }
        if response.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response"));
        }
        Ok(Self {
            factors,
            response,
            factor_kind,
            factor_names,
            response_names,
        })
    }

    pub fn n(&self) -> usize {
        self.factors.nrows()
    }

    pub fn d(&self) -> usize {
        self.factors.ncols()
    }

    pub fn p(&self) -> usize {
        self.response.ncols()
    }

    pub fn factors(&self) -> &Matrix {
        &self.factors
    }

    pub fn response(&self) -> &Matrix {
        &self.response
    }

    pub fn factor_kind(&self) -> &[FactorKind] {
        &self.factor_kind
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn response_names(&self) -> &[String] {
        &self.response_names
    }

    /// The response as a scalar column; fails for multidimensional responses.
    pub fn scalar_response(&self) -> Result<Vec<f64>> {
        if self.p() != 1 {
            return Err(Error::DimensionMismatch {
                what: "scalar response",
                expected: 1,
                got: self.p(),
            });
        }
        Ok(self.response.column(0).iter().copied().collect())
    }

    /// Columns of the factors in `group`, as an `n × |I|` matrix.
    pub fn factor_columns(&self, group: &FactorGroup) -> Result<Matrix> {
        group.check(self.d())?;
        Ok(self.factors.select_columns(group.indices()))
    }

    pub fn group_kinds(&self, group: &FactorGroup) -> Vec<FactorKind> {
        group
            .indices()
            .iter()
            .map(|&i| self.factor_kind[i])
            .collect()
    }

    /// A copy with the response replaced (used by target and hybrid transforms).
    pub fn with_response(&self, response: Vec<f64>) -> Result<Self> {
        let n = response.len();
        Self::with_names(
            self.factors.clone(),
            Matrix::from_vec(n, 1, response),
            self.factor_kind.clone(),
            self.factor_names.clone(),
            vec![self
                .response_names
                .first()
                .cloned()
                .unwrap_or_else(|| "Y".into())],
        )
    }
}

/// A nonempty set of factor indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactorGroup {
    indices: Vec<usize>,
}

impl FactorGroup {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidGroup("empty group".into()));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGroup("duplicate indices".into()));
        }
        Ok(Self { indices })
    }

    pub fn single(i: usize) -> Self {
        Self { indices: vec![i] }
    }

    pub fn all(d: usize) -> Self {
        Self {
            indices: (0..d).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn check(&self, d: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last < d => Ok(()),
            Some(&last) => Err(Error::InvalidGroup(format!(
                "index {last} out of range for d = {d}"
            ))),
            None => Err(Error::InvalidGroup("empty group".into())),
        }
    }

    /// `{0..d} \ I`; errors when the group covers every factor.
    pub fn complement(&self, d: usize) -> Result<Self> {
        self.check(d)?;
        let rest: Vec<usize> = (0..d).filter(|i| !self.contains(*i)).collect();
        if rest.is_empty() {
            return Err(Error::InvalidGroup(
                "complement of the full set is empty".into(),
            ));
        }
        Ok(Self { indices: rest })
    }

    /// One-based label such as `X1` or `X1,X3`.
    pub fn label(&self) -> String {
        self.indices
            .iter()
            .map(|i| format!("X{}", i + 1))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Weight function `w: response → [0, 1]` describing the critical domain
/// `C = {y ≥ c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant,
    IndicatorExceedance {
        c: f64,
    },
    /// `exp(−max(c − y, 0) / (s·σ_Y))`.
    SmoothExceedance {
        c: f64,
        s: f64,
        sigma_y: f64,
    },
}

impl WeightSpec {
    pub fn smooth(c: f64, s: f64, sigma_y: f64) -> Result<Self> {
        let spec = WeightSpec::SmoothExceedance { c, s, sigma_y };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightSpec::Constant => Ok(()),
            WeightSpec::IndicatorExceedance { c } if c.is_finite() => Ok(()),
            WeightSpec::SmoothExceedance { c, s, sigma_y }
                if c.is_finite()
                    && s > 0.0
                    && sigma_y > 0.0
                    && s.is_finite()
                    && sigma_y.is_finite() =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidParameter(format!(
                "invalid weight spec {self:?}"
            ))),
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(
            self,
            WeightSpec::Constant | WeightSpec::IndicatorExceedance { .. }
        )
    }

    pub fn eval(&self, y: f64) -> f64 {
        weight_eval(self, y)
    }

    pub fn apply(&self, response: &[f64]) -> Vec<f64> {
        response.iter().map(|&y| weight_eval(self, y)).collect()
    }
}

pub fn weight_eval(spec: &WeightSpec, y: f64) -> f64 {
    match *spec {
        WeightSpec::Constant => 1.0,
        WeightSpec::IndicatorExceedance { c } => {
            if y >= c {
                1.0
            } else {
                0.0
            }
        }
        WeightSpec::SmoothExceedance { c, s, sigma_y } => (-(c - y).max(0.0) / (s * sigma_y)).exp(),
    }
}

/// Lower empirical order statistic at index `⌈level·n⌉` (1-based).
pub fn critical_threshold(response: &[f64], level: f64) -> Result<f64> {
    if response.is_empty() {
        return Err(Error::Empty("response"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quantile level {level} not in (0,1)"
        )));
    }
    let mut sorted = response.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((level * n as f64).ceil() as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Unit weights for `None`, validated weights otherwise.
pub(crate) fn resolve_weights(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0; n]),
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "weights",
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("weights"));
            }
            if let Some(i) = w.iter().position(|&v| v < 0.0) {
                return Err(Error::NegativeWeight(i));
            }
            Ok(w.to_vec())
        }
    }
}

/// Weights rescaled to sum to one.
pub(crate) fn normalized_weights(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    let w = resolve_weights(n, weights)?;
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Kish effective sample size `(Σw)² / Σw²`; equals `n` for unit weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

/// Weighted empirical distribution function evaluated at each observation:
/// `F(v_i) = Σ_j w_j 1{v_j ≤ v_i} / Σ_j w_j`. Ties share the upper value.
pub fn empirical_cdf_transform(values: &[f64], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Empty("values"));
    }
    let w = resolve_weights(n, weights)?;
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut out = vec![0.0; n];
    let mut cum = 0.0;
    let mut start = 0;
    while start < n {
        let v = values[order[start]];
        let mut end = start;
        while end < n && values[order[end]] == v {
            cum += w[order[end]];
            end += 1;
        }
        let f = cum / total;
        for &idx in &order[start..end] {
            out[idx] = f;
        }
        start = end;
    }
    // Summation order differs from `total`; pin the maximum to exactly 1.
    let top = values[order[n - 1]];
    for (i, v) in values.iter().enumerate() {
        if *v == top {
            out[i] = 1.0;
        }
    }
    Ok(out)
}

/// Column-wise (weighted) empirical copula transform of the selected factor columns.
pub fn copula_transform(
    sample: &Sample,
    columns: &[usize],
    weights: Option<&[f64]>,
) -> Result<Vec<Vec<f64>>> {
    columns
        .iter()
        .map(|&c| {
            if c >= sample.d() {
                return Err(Error::InvalidGroup(format!("column {c} out of range")));
            }
            if sample.factor_kind()[c] == FactorKind::Categorical {
                return Err(Error::CategoricalColumn(c));
            }
            let col: Vec<f64> = sample.factors().column(c).iter().copied().collect();
            empirical_cdf_transform(&col, weights)
        })
        .collect()
}

/// Copula transform applied to every column of a matrix.
pub fn copula_transform_matrix(data: &Matrix, weights: Option<&[f64]>) -> Result<Matrix> {
    let (n, q) = data.shape();
    let mut out = Matrix::zeros(n, q);
    for j in 0..q {
        let col: Vec<f64> = data.column(j).iter().copied().collect();
        let t = empirical_cdf_transform(&col, weights)?;
        out.set_column(j, &DVector::from_vec(t));
    }
    Ok(out)
}

/// `Y_w = w·Y + (1 − w)·y₀` with `y₀ = Σ wᵢyᵢ / Σ wᵢ`.
pub fn hybrid_transform(response: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    let w = resolve_weights(response.len(), Some(weights))?;
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let y0 = response.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / total;
    Ok(response
        .iter()
        .zip(&w)
        .map(|(&y, &wi)| {
            if wi == 1.0 {
                y
            } else {
                wi * y + (1.0 - wi) * y0
            }
        })
        .collect())
}

/// Weighted mean and population covariance of the rows of `values`.
pub fn weighted_moments(
    values: &Matrix,
    weights: Option<&[f64]>,
) -> Result<(DVector<f64>, Matrix)> {
    let (n, p) = values.shape();
    if n == 0 {
        return Err(Error::Empty("values"));
    }
    let w = normalized_weights(n, weights)?;
    let mut mean = DVector::zeros(p);
    for j in 0..p {
        mean[j] = (0..n).map(|i| w[i] * values[(i, j)]).sum();
    }
    let mut cov = Matrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let c: f64 = (0..n)
                .map(|i| w[i] * (values[(i, a)] - mean[a]) * (values[(i, b)] - mean[b]))
                .sum();
            cov[(a, b)] = c;
            cov[(b, a)] = c;
        }
    }
    Ok((mean, cov))
}

/// Tukey box-plot statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

pub fn five_number_summary(values: &[f64]) -> Result<BoxSummary> {
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("values"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let inside = s
        .iter()
        .copied()
        .filter(|v| *v >= lo_fence && *v <= hi_fence);
    let whisker_low = inside.clone().fold(f64::INFINITY, f64::min);
    let whisker_high = inside.fold(f64::NEG_INFINITY, f64::max);
    Ok(BoxSummary {
        min: s[0],
        q1,
        median: quantile_sorted(&s, 0.5),
        q3,
        max: s[s.len() - 1],
        whisker_low,
        whisker_high,
        outliers: s
            .iter()
            .copied()
            .filter(|v| *v < lo_fence || *v > hi_fence)
            .collect(),
    })
}
