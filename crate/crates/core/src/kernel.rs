//! Kernel quadratic dependence measures (HSIC) and their target, conditional
//! and hybrid variants.
//!
//! The estimator is `Σᵢⱼ ŵᵢŵⱼ (Kxᵢⱼ − Σₗ Kxᵢₗŵₗ)(Kyᵢⱼ − Σₗ Kyₗⱼŵₗ)`, evaluated
//! in the expanded form `S − 2 Σ ŵ a b + (Σ ŵ a)(Σ ŵ b)` where `a`, `b` are the
//! weighted row means of the two Gram matrices. The expanded form is
//! symmetric in its arguments and can be streamed without storing `n × n`
//! matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{
    copula_transform_matrix, normalized_weights, resolve_weights, FactorGroup, FactorKind, Matrix,
    Sample, WeightSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    #[default]
    MedianHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Gaussian { bandwidth: Bandwidth },
    Categorical,
    DistanceCovariance,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Gaussian {
            bandwidth: Bandwidth::MedianHeuristic,
        }
    }
}

/// A kernel with every data-dependent parameter fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ResolvedKernel {
    /// `exp(−‖x − x'‖² / 2σ²)`.
    Gaussian {
        sigma: f64,
    },
    Categorical,
    /// `½(‖x‖ + ‖x'‖) − ‖x − x'‖`.
    DistanceCovariance,
}

impl ResolvedKernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            ResolvedKernel::Gaussian { sigma } => (-sq_dist(a, b) / (2.0 * sigma * sigma)).exp(),
            ResolvedKernel::Categorical => {
                if a == b {
                    1.0
                } else {
                    0.0
                }
            }
            ResolvedKernel::DistanceCovariance => 0.5 * (norm(a) + norm(b)) - sq_dist(a, b).sqrt(),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Row-major copy of a matrix, one slice of length `q` per observation.
pub(crate) fn row_major(data: &Matrix) -> Vec<f64> {
    let (n, q) = data.shape();
    let mut out = Vec::with_capacity(n * q);
    for i in 0..n {
        for j in 0..q {
            out.push(data[(i, j)]);
        }
    }
    out
}

/// Median of pairwise Euclidean distances over distinct index pairs. Under
/// non-uniform weights each pair counts with weight `ŵᵢŵⱼ`.
pub fn resolve_bandwidth(data: &Matrix, weights: Option<&[f64]>) -> Result<f64> {
    let (n, q) = data.shape();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "median heuristic needs n ≥ 2, got {n}"
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel data"));
    }
    let w = resolve_weights(n, weights)?;
    let rows = row_major(data);
    let row = |i: usize| &rows[i * q..(i + 1) * q];
    let uniform = w.iter().all(|&v| v == w[0]);
    if uniform && w[0] <= 0.0 {
        return Err(Error::ZeroWeight);
    }

    let sigma = if uniform {
        let mut d = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                d.push(sq_dist(row(i), row(j)).sqrt());
            }
        }
        let m = d.len();
        let (_, &mut hi, _) = d.select_nth_unstable_by(m / 2, f64::total_cmp);
        if m % 2 == 1 {
            hi
        } else {
            let lo = d[..m / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            0.5 * (lo + hi)
        }
    } else {
        let mut d = Vec::new();
        for i in 0..n {
            if w[i] == 0.0 {
                continue;
            }
            for j in i + 1..n {
                if w[j] > 0.0 {
                    d.push((sq_dist(row(i), row(j)).sqrt(), w[i] * w[j]));
                }
            }
        }
        if d.is_empty() {
            return Err(Error::InvalidParameter(
                "weighted median heuristic needs two points with positive weight".into(),
            ));
        }
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = d.iter().map(|p| p.1).sum();
        let mut cum = 0.0;
        let mut out = d[d.len() - 1].0;
        for (k, &(v, wt)) in d.iter().enumerate() {
            cum += wt;
            if cum == 0.5 * total && k + 1 < d.len() {
                out = 0.5 * (v + d[k + 1].0);
                break;
            }
            if cum > 0.5 * total {
                out = v;
                break;
            }
        }
        out
    };
    if sigma <= 0.0 {
        return Err(Error::Constant("median pairwise distance is zero"));
    }
    Ok(sigma)
}

/// Fixes the data-dependent parameters of `spec` for `data`.
pub fn resolve_kernel(
    spec: &KernelSpec,
    data: &Matrix,
    kinds: &[FactorKind],
    weights: Option<&[f64]>,
) -> Result<ResolvedKernel> {
    if kinds.len() != data.ncols() {
        return Err(Error::DimensionMismatch {
            what: "column kinds",
            expected: data.ncols(),
            got: kinds.len(),
        });
    }
    match *spec {
        KernelSpec::Gaussian { bandwidth } => {
            let sigma = match bandwidth {
                Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => s,
                Bandwidth::Fixed(s) => {
                    return Err(Error::InvalidParameter(format!(
                        "bandwidth {s} must be positive"
                    )))
                }
                Bandwidth::MedianHeuristic => resolve_bandwidth(data, weights)?,
            };
            Ok(ResolvedKernel::Gaussian { sigma })
        }
        KernelSpec::Categorical => {
            if kinds.iter().any(|k| *k != FactorKind::Categorical) {
                return Err(Error::KindMismatch(
                    "categorical kernel on continuous data".into(),
                ));
            }
            Ok(ResolvedKernel::Categorical)
        }
        KernelSpec::DistanceCovariance => Ok(ResolvedKernel::DistanceCovariance),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub matrix: Matrix,
    pub kernel: ResolvedKernel,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn gram(
    spec: &KernelSpec,
    data: &Matrix,
    kinds: &[FactorKind],
    weights: Option<&[f64]>,
) -> Result<GramMatrix> {
    let kernel = resolve_kernel(spec, data, kinds, weights)?;
    Ok(gram_with(kernel, data))
}

pub fn gram_with(kernel: ResolvedKernel, data: &Matrix) -> GramMatrix {
    let (n, q) = data.shape();
    let rows = row_major(data);
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&rows[i * q..(i + 1) * q], &rows[j * q..(j + 1) * q]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    GramMatrix { matrix: m, kernel }
}

/// Weighted QDM estimate from two Gram matrices.
pub fn qdm(gram_x: &GramMatrix, gram_y: &GramMatrix, weights: Option<&[f64]>) -> Result<f64> {
    qdm_matrices(&gram_x.matrix, &gram_y.matrix, weights)
}

fn qdm_matrices(kx: &Matrix, ky: &Matrix, weights: Option<&[f64]>) -> Result<f64> {
    let n = kx.nrows();
    if kx.ncols() != n || ky.nrows() != n || ky.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "gram matrices",
            expected: n,
            got: ky.nrows(),
        });
    }
    if n == 0 {
        return Err(Error::Empty("gram matrix"));
    }
    let p = normalized_weights(n, weights)?;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut s = 0.0;
    for j in 0..n {
        if p[j] == 0.0 {
            continue;
        }
        let (cx, cy) = (kx.column(j), ky.column(j));
        let mut sj = 0.0;
        for i in 0..n {
            if p[i] == 0.0 {
                continue;
            }
            a[j] += p[i] * cx[i];
            b[j] += p[i] * cy[i];
            sj += p[i] * (cx[i] * cy[i]);
        }
        s += p[j] * sj;
    }
    Ok(combine(s, &p, &a, &b))
}

fn combine(s: f64, p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut cross = 0.0;
    let (mut ma, mut mb) = (0.0, 0.0);
    for i in 0..p.len() {
        cross += p[i] * (a[i] * b[i]);
        ma += p[i] * a[i];
        mb += p[i] * b[i];
    }
    s - 2.0 * cross + ma * mb
}

fn normalize(xy: f64, xx: f64, yy: f64, sxx: f64, syy: f64) -> Result<f64> {
    // Self-measures at rounding level of their raw second moment are zero.
    if xx <= 1e-12 * sxx.abs() || xx <= 0.0 {
        return Err(Error::Constant("zero self-measure for X"));
    }
    if yy <= 1e-12 * syy.abs() || yy <= 0.0 {
        return Err(Error::Constant("zero self-measure for Y"));
    }
    Ok(xy / (xx * yy).sqrt())
}

/// `qdm(X,Y) / √(qdm(X,X) qdm(Y,Y))`.
pub fn qdm_normalized(
    gram_x: &GramMatrix,
    gram_y: &GramMatrix,
    weights: Option<&[f64]>,
) -> Result<f64> {
    let xy = qdm(gram_x, gram_y, weights)?;
    let xx = qdm(gram_x, gram_x, weights)?;
    let yy = qdm(gram_y, gram_y, weights)?;
    let sxx = mean_square(&gram_x.matrix, weights)?;
    let syy = mean_square(&gram_y.matrix, weights)?;
    normalize(xy, xx, yy, sxx, syy)
}

fn mean_square(k: &Matrix, weights: Option<&[f64]>) -> Result<f64> {
    let n = k.nrows();
    let p = normalized_weights(n, weights)?;
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            s += p[i] * p[j] * k[(i, j)] * k[(i, j)];
        }
    }
    Ok(s)
}

/// Plain QDM with the response kernel replaced by `k_Y(y, y') w w'`.
pub fn qdm_hybrid(gram_x: &GramMatrix, gram_y: &GramMatrix, w: &[f64]) -> Result<f64> {
    let ky = hybrid_gram(&gram_y.matrix, w)?;
    qdm_matrices(&gram_x.matrix, &ky, None)
}

fn hybrid_gram(ky: &Matrix, w: &[f64]) -> Result<Matrix> {
    let n = ky.nrows();
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            what: "hybrid weights",
            expected: n,
            got: w.len(),
        });
    }
    if w.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter(
            "hybrid weights must lie in [0, 1]".into(),
        ));
    }
    let mut out = ky.clone();
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = ky[(i, j)] * w[i] * w[j];
        }
    }
    Ok(out)
}

/// The three measures `qdm(X,Y)`, `qdm(X,X)`, `qdm(Y,Y)` in one streamed
/// pass over index pairs, with optional estimation weights and optional
/// response-kernel multipliers `k_Y(y, y') m m'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdmTriple {
    pub xy: f64,
    pub xx: f64,
    pub yy: f64,
    sxx: f64,
    syy: f64,
}

impl QdmTriple {
    pub fn normalized(&self) -> Result<f64> {
        normalize(self.xy, self.xx, self.yy, self.sxx, self.syy)
    }
}

pub fn qdm_streaming(
    kx: &ResolvedKernel,
    x: &Matrix,
    ky: &ResolvedKernel,
    y: &Matrix,
    weights: Option<&[f64]>,
    y_multipliers: Option<&[f64]>,
) -> Result<QdmTriple> {
    let n = x.nrows();
    if y.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "kernel data rows",
            expected: n,
            got: y.nrows(),
        });
    }
    if n == 0 {
        return Err(Error::Empty("kernel data"));
    }
    let p = normalized_weights(n, weights)?;
    let mult = match y_multipliers {
        Some(m) => Some(resolve_weights(n, Some(m))?),
        None => None,
    };
    let (qx, qy) = (x.ncols(), y.ncols());
    let xr = row_major(x);
    let yr = row_major(y);
    let active: Vec<usize> = (0..n).filter(|&i| p[i] > 0.0).collect();

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (ii, &i) in active.iter().enumerate() {
        let xi = &xr[i * qx..(i + 1) * qx];
        let yi = &yr[i * qy..(i + 1) * qy];
        let (mut rxy, mut rxx, mut ryy) = (0.0, 0.0, 0.0);
        for &j in &active[ii..] {
            let vx = kx.eval(xi, &xr[j * qx..(j + 1) * qx]);
            let mut vy = ky.eval(yi, &yr[j * qy..(j + 1) * qy]);
            if let Some(m) = &mult {
                vy = vy * m[i] * m[j];
            }
            let f = if i == j { 1.0 } else { 2.0 };
            a[i] += p[j] * vx;
            b[i] += p[j] * vy;
            if i != j {
                a[j] += p[i] * vx;
                b[j] += p[i] * vy;
            }
            rxy += f * p[j] * (vx * vy);
            rxx += f * p[j] * vx * vx;
            ryy += f * p[j] * vy * vy;
        }
        sxy += p[i] * rxy;
        sxx += p[i] * rxx;
        syy += p[i] * ryy;
    }
    Ok(QdmTriple {
        xy: combine(sxy, &p, &a, &b),
        xx: combine(sxx, &p, &a, &a),
        yy: combine(syy, &p, &b, &b),
        sxx,
        syy,
    })
}

/// Kernels and preprocessing for the measure-level QDM functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdmConfig {
    pub kernel_x: KernelSpec,
    pub kernel_y: KernelSpec,
    /// Map every continuous marginal through its (weighted) empirical CDF first.
    pub copula: bool,
}

impl Default for QdmConfig {
    fn default() -> Self {
        Self {
            kernel_x: KernelSpec::default(),
            kernel_y: KernelSpec::default(),
            copula: false,
        }
    }
}

pub(crate) fn prepare(
    data: Matrix,
    kinds: &[FactorKind],
    copula: bool,
    weights: Option<&[f64]>,
) -> Result<Matrix> {
    if !copula {
        return Ok(data);
    }
    let mut out = data.clone();
    for (j, kind) in kinds.iter().enumerate() {
        if *kind == FactorKind::Continuous {
            let col = Matrix::from_column_slice(data.nrows(), 1, data.column(j).as_slice());
            out.set_column(j, &copula_transform_matrix(&col, weights)?.column(0));
        }
    }
    Ok(out)
}

fn response_matrix(sample: &Sample) -> (Matrix, Vec<FactorKind>) {
    (
        sample.response().clone(),
        vec![FactorKind::Continuous; sample.p()],
    )
}

fn measure(
    x: Matrix,
    kinds_x: &[FactorKind],
    y: Matrix,
    kinds_y: &[FactorKind],
    cfg: &QdmConfig,
    weights: Option<&[f64]>,
    y_multipliers: Option<&[f64]>,
) -> Result<f64> {
    let x = prepare(x, kinds_x, cfg.copula, weights)?;
    let y = prepare(y, kinds_y, cfg.copula, weights)?;
    let kx = resolve_kernel(&cfg.kernel_x, &x, kinds_x, weights)?;
    let ky = resolve_kernel(&cfg.kernel_y, &y, kinds_y, weights)?;
    qdm_streaming(&kx, &x, &ky, &y, weights, y_multipliers)?.normalized()
}

/// Normalized QDM between `X_I` and `Y`.
pub fn qdm_global(sample: &Sample, group: &FactorGroup, cfg: &QdmConfig) -> Result<f64> {
    let x = sample.factor_columns(group)?;
    let (y, ky) = response_matrix(sample);
    measure(x, &sample.group_kinds(group), y, &ky, cfg, None, None)
}

/// Normalized QDM between `X_I` and `w(Y)`. Indicator weights use the
/// categorical kernel on the response side, smooth weights the configured one.
pub fn qdm_target(
    sample: &Sample,
    group: &FactorGroup,
    weight: &WeightSpec,
    cfg: &QdmConfig,
) -> Result<f64> {
    weight.validate()?;
    let wy = weight.apply(&sample.scalar_response()?);
    if wy.iter().all(|v| *v == wy[0]) {
        return Err(Error::Constant("transformed response w(Y)"));
    }
    let x = sample.factor_columns(group)?;
    let n = wy.len();
    let y = Matrix::from_vec(n, 1, wy);
    let (ky_spec, kind) = if weight.is_binary() {
        (KernelSpec::Categorical, FactorKind::Categorical)
    } else {
        (cfg.kernel_y, FactorKind::Continuous)
    };
    let cfg = QdmConfig {
        kernel_y: ky_spec,
        ..*cfg
    };
    measure(x, &sample.group_kinds(group), y, &[kind], &cfg, None, None)
}

/// Normalized QDM under the weighted probability `P^{w(Y)}`.
pub fn qdm_conditional(
    sample: &Sample,
    group: &FactorGroup,
    weight: &WeightSpec,
    cfg: &QdmConfig,
) -> Result<f64> {
    weight.validate()?;
    let w = weight.apply(&sample.scalar_response()?);
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let x = sample.factor_columns(group)?;
    let (y, ky) = response_matrix(sample);
    measure(x, &sample.group_kinds(group), y, &ky, cfg, Some(&w), None)
}

/// QDM with response kernel `k_Y^w(y, y') = k_Y(y, y') w(y) w(y')`, normalized
/// by the self-measures of `k_X` and `k_Y^w`.
pub fn qdm_hybrid_measure(
    sample: &Sample,
    group: &FactorGroup,
    weight: &WeightSpec,
    cfg: &QdmConfig,
) -> Result<f64> {
    weight.validate()?;
    let w = weight.apply(&sample.scalar_response()?);
    let x = sample.factor_columns(group)?;
    let (y, ky) = response_matrix(sample);
    measure(x, &sample.group_kinds(group), y, &ky, cfg, None, Some(&w))
}
