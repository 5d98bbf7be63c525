//! Randomized maximum correlation: the first canonical correlation between
//! random nonlinear features of `X_I` and of `Y`, optionally debiased.

use nalgebra::linalg::SVD;
use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::correlation_ratio::multidim_eta_squared;
use crate::error::{Error, Result};
use crate::kernel::prepare;
use crate::sample::{
    effective_sample_size, resolve_weights, weighted_moments, FactorGroup, FactorKind, Matrix,
    Sample,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// `x ↦ sin(⟨θ, x⟩ + b)`.
    #[default]
    Sine,
    /// `x ↦ (1 + exp(−⟨θ, x⟩ + b))⁻¹`.
    Logistic,
    /// The coordinates themselves.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureFamily {
    pub kind: FeatureKind,
    /// Number of features; `⌈√n⌉` when absent, `n` being the effective size.
    pub count: Option<usize>,
    /// `θ` entries are drawn from `N(0, γ²/p)`. The default `2π` gives about
    /// one period across the unit interval of copula-scale inputs.
    pub gamma: f64,
    pub seed: u64,
}

impl Default for FeatureFamily {
    fn default() -> Self {
        Self {
            kind: FeatureKind::Sine,
            count: None,
            gamma: std::f64::consts::TAU,
            seed: 0,
        }
    }
}

impl FeatureFamily {
    pub fn sine(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn logistic(seed: u64) -> Self {
        Self {
            kind: FeatureKind::Logistic,
            seed,
            ..Self::default()
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: FeatureKind::Identity,
            ..Self::default()
        }
    }

    pub fn with_count(self, count: usize) -> Self {
        Self {
            count: Some(count),
            ..self
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "feature scale γ = {} must be positive",
                self.gamma
            )));
        }
        if self.count == Some(0) {
            return Err(Error::InvalidParameter(
                "feature count must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Feature count for data of dimension `p` and effective size `n_eff`.
    pub fn resolved_count(&self, p: usize, n_eff: f64) -> usize {
        match (self.kind, self.count) {
            (FeatureKind::Identity, _) => p,
            (_, Some(k)) => k,
            (_, None) => (n_eff.sqrt().ceil() as usize).max(1),
        }
    }
}

/// Drawn parameters; `theta` is `p × count`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureParams {
    Identity {
        p: usize,
    },
    Random {
        kind: FeatureKind,
        theta: Matrix,
        b: Vec<f64>,
    },
}

impl FeatureParams {
    pub fn count(&self) -> usize {
        match self {
            FeatureParams::Identity { p } => *p,
            FeatureParams::Random { b, .. } => b.len(),
        }
    }
}

/// Draws `θ ~ N(0, γ²/p)` entrywise and `b ~ N(0, 1)` from the family seed.
pub fn draw_features(family: &FeatureFamily, p: usize, count: usize) -> Result<FeatureParams> {
    family.validate()?;
    if p == 0 {
        return Err(Error::InvalidParameter(
            "feature input dimension must be positive".into(),
        ));
    }
    if family.kind == FeatureKind::Identity {
        return Ok(FeatureParams::Identity { p });
    }
    if count == 0 {
        return Err(Error::InvalidParameter(
            "feature count must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(family.seed);
    let scale = Normal::new(0.0, family.gamma / (p as f64).sqrt()).expect("positive scale");
    let std = Normal::new(0.0, 1.0).expect("unit scale");
    let theta = Matrix::from_fn(p, count, |_, _| scale.sample(&mut rng));
    let b = (0..count).map(|_| std.sample(&mut rng)).collect();
    Ok(FeatureParams::Random {
        kind: family.kind,
        theta,
        b,
    })
}

/// Applies the feature map to every row of `data`.
pub fn project(data: &Matrix, params: &FeatureParams) -> Result<Matrix> {
    match params {
        FeatureParams::Identity { p } => {
            if data.ncols() != *p {
                return Err(Error::DimensionMismatch {
                    what: "feature input dimension",
                    expected: *p,
                    got: data.ncols(),
                });
            }
            Ok(data.clone())
        }
        FeatureParams::Random { kind, theta, b } => {
            if data.ncols() != theta.nrows() {
                return Err(Error::DimensionMismatch {
                    what: "feature input dimension",
                    expected: theta.nrows(),
                    got: data.ncols(),
                });
            }
            let mut z = data * theta;
            for (j, mut col) in z.column_iter_mut().enumerate() {
                for v in col.iter_mut() {
                    *v = match kind {
                        FeatureKind::Sine => (*v + b[j]).sin(),
                        FeatureKind::Logistic => 1.0 / (1.0 + (-*v + b[j]).exp()),
                        FeatureKind::Identity => unreachable!(),
                    };
                }
            }
            Ok(z)
        }
    }
}

/// First canonical correlation between the column spans of `a` and `b` under
/// the weighted covariance, each diagonal block regularized by
/// `ridge · trace / size`.
pub fn weighted_cca_first(
    a: &Matrix,
    b: &Matrix,
    weights: Option<&[f64]>,
    ridge: f64,
) -> Result<f64> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "canonical correlation rows",
            expected: n,
            got: b.nrows(),
        });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ridge {ridge} must be nonnegative"
        )));
    }
    let (k, l) = (a.ncols(), b.ncols());
    if k == 0 || l == 0 {
        return Err(Error::Empty("feature block"));
    }
    let joint = Matrix::from_fn(
        n,
        k + l,
        |i, j| if j < k { a[(i, j)] } else { b[(i, j - k)] },
    );
    let (_, cov) = weighted_moments(&joint, weights)?;
    let block = |r: usize, rs: usize, c: usize, cs: usize| cov.view((r, c), (rs, cs)).into_owned();
    let regularize = |mut s: Matrix, what: &'static str| -> Result<Cholesky<f64, nalgebra::Dyn>> {
        let size = s.nrows() as f64;
        let tr = s.trace();
        if !(tr > 0.0) {
            return Err(Error::Constant(what));
        }
        let eps = ridge * tr / size;
        for d in 0..s.nrows() {
            s[(d, d)] += eps;
        }
        Cholesky::new(s).ok_or(Error::SingularCovariance(what))
    };
    let la = regularize(block(0, k, 0, k), "first feature block")?;
    let lb = regularize(block(k, l, k, l), "second feature block")?;
    let sab = block(0, k, k, l);
    // M = L_a⁻¹ Σ_ab L_b⁻ᵀ; its largest singular value is the first canonical correlation.
    let left = la
        .l()
        .solve_lower_triangular(&sab)
        .ok_or(Error::SingularCovariance("first feature block"))?;
    let m = lb
        .l()
        .solve_lower_triangular(&left.transpose())
        .ok_or(Error::SingularCovariance("second feature block"))?;
    let sv = SVD::new(m, false, false).singular_values;
    let r = sv.iter().copied().fold(0.0, f64::max);
    if !r.is_finite() {
        return Err(Error::NonFinite("canonical correlation"));
    }
    Ok(r.clamp(0.0, 1.0))
}

/// `1 − (1 − r²)(n − 1)/(n − m)`, evaluated as `r² − (1 − r²)(m − 1)/(n − m)`, clamped to `[0, 1]`; the flag reports clamping.
pub fn wherry_debias(r2: f64, n: f64, m: usize) -> Result<(f64, bool)> {
    let m = m as f64;
    if !(n > m) {
        return Err(Error::InvalidParameter(format!(
            "debiasing needs n > m, got n = {n}, m = {m}"
        )));
    }
    let v = r2 - (1.0 - r2) * (m - 1.0) / (n - m);
    let c = v.clamp(0.0, 1.0);
    Ok((c, c != v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmcConfig {
    pub features_x: FeatureFamily,
    pub features_y: FeatureFamily,
    /// Copula-transform continuous marginals before projecting (factor side
    /// only in correlation-ratio mode).
    pub copula_transform: bool,
    /// Relative ridge: `ε = ridge · trace / size` per covariance block.
    pub ridge: f64,
    pub debias: bool,
}

impl Default for RmcConfig {
    fn default() -> Self {
        Self {
            features_x: FeatureFamily::sine(0x5eed_0001),
            features_y: FeatureFamily::sine(0x5eed_0002),
            copula_transform: true,
            ridge: 1e-6,
            debias: true,
        }
    }
}

impl RmcConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self {
            features_x: FeatureFamily {
                seed: crate::design::derive_seed(seed, 0x726d63, 0),
                ..self.features_x
            },
            features_y: FeatureFamily {
                seed: crate::design::derive_seed(seed, 0x726d63, 1),
                ..self.features_y
            },
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmcEstimate {
    /// Squared correlation after optional debiasing.
    pub value: f64,
    /// Squared canonical correlation before debiasing.
    pub raw: f64,
    pub clamped: bool,
    pub features_x: usize,
    pub features_y: usize,
}

/// Squared (debiased) first canonical correlation between features of `x`
/// and of `y`, both given as matrices.
pub fn rmc_matrices(
    x: &Matrix,
    kinds_x: &[FactorKind],
    y: &Matrix,
    kinds_y: &[FactorKind],
    cfg: &RmcConfig,
    weights: Option<&[f64]>,
) -> Result<RmcEstimate> {
    let n = x.nrows();
    if y.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "response rows",
            expected: n,
            got: y.nrows(),
        });
    }
    let raw_w = resolve_weights(n, weights)?;
    let n_eff = effective_sample_size(&raw_w);
    let x = prepare(x.clone(), kinds_x, cfg.copula_transform, weights)?;
    let y = prepare(y.clone(), kinds_y, cfg.copula_transform, weights)?;
    cca_features(&x, &y, cfg, weights, n_eff)
}

fn cca_features(
    x: &Matrix,
    y: &Matrix,
    cfg: &RmcConfig,
    weights: Option<&[f64]>,
    n_eff: f64,
) -> Result<RmcEstimate> {
    let k = cfg.features_x.resolved_count(x.ncols(), n_eff);
    let l = cfg.features_y.resolved_count(y.ncols(), n_eff);
    if (k + l) as f64 >= n_eff {
        return Err(Error::InvalidParameter(format!(
            "feature counts {k} + {l} must stay below the effective sample size {n_eff}"
        )));
    }
    let a = project(x, &draw_features(&cfg.features_x, x.ncols(), k)?)?;
    let b = project(y, &draw_features(&cfg.features_y, y.ncols(), l)?)?;
    let r = weighted_cca_first(&a, &b, weights, cfg.ridge)?;
    let raw = r * r;
    let (value, clamped) = if cfg.debias {
        wherry_debias(raw, n_eff, k + l - 1)?
    } else {
        (raw, false)
    };
    Ok(RmcEstimate {
        value,
        raw,
        clamped,
        features_x: k,
        features_y: l,
    })
}

/// Randomized maximum correlation between `X_I` and `Y`.
pub fn rmc(
    sample: &Sample,
    group: &FactorGroup,
    cfg: &RmcConfig,
    weights: Option<&[f64]>,
) -> Result<RmcEstimate> {
    let x = sample.factor_columns(group)?;
    let kinds_y = vec![FactorKind::Continuous; sample.p()];
    rmc_matrices(
        &x,
        &sample.group_kinds(group),
        sample.response(),
        &kinds_y,
        cfg,
        weights,
    )
}

/// Correlation-ratio mode: identity features on the raw response, so the
/// value estimates `η²(X_I, Y)`. Vector responses combine per-coordinate
/// estimates weighted by their variances.
pub fn rmc_eta_mode(
    sample: &Sample,
    group: &FactorGroup,
    cfg: &RmcConfig,
    weights: Option<&[f64]>,
) -> Result<RmcEstimate> {
    let x = sample.factor_columns(group)?;
    rmc_eta_matrices(
        &x,
        &sample.group_kinds(group),
        sample.response(),
        cfg,
        weights,
    )
}

/// Correlation-ratio mode on matrices.
pub fn rmc_eta_matrices(
    x: &Matrix,
    kinds_x: &[FactorKind],
    y: &Matrix,
    cfg: &RmcConfig,
    weights: Option<&[f64]>,
) -> Result<RmcEstimate> {
    let n = x.nrows();
    let raw_w = resolve_weights(n, weights)?;
    let n_eff = effective_sample_size(&raw_w);
    let x = prepare(x.clone(), kinds_x, cfg.copula_transform, weights)?;
    let cfg = RmcConfig {
        features_y: FeatureFamily::identity(),
        ..*cfg
    };
    let p = y.ncols();
    if p == 1 {
        let (_, var) = weighted_moments(y, weights)?;
        if !(var[(0, 0)] > 0.0) {
            return Err(Error::Constant("response"));
        }
        return cca_features(&x, y, &cfg, weights, n_eff);
    }
    let (_, cov) = weighted_moments(y, weights)?;
    let mut values = Vec::with_capacity(p);
    let mut raws = Vec::with_capacity(p);
    let mut variances = Vec::with_capacity(p);
    let mut clamped = false;
    let mut k = 0;
    for j in 0..p {
        let v = cov[(j, j)];
        variances.push(v);
        if v > 0.0 {
            let yj = Matrix::from_column_slice(n, 1, y.column(j).as_slice());
            let est = cca_features(&x, &yj, &cfg, weights, n_eff)?;
            values.push(est.value);
            raws.push(est.raw);
            clamped |= est.clamped;
            k = est.features_x;
        } else {
            values.push(0.0);
            raws.push(0.0);
        }
    }
    Ok(RmcEstimate {
        value: multidim_eta_squared(&variances, &values)?,
        raw: multidim_eta_squared(&variances, &raws)?,
        clamped,
        features_x: k,
        features_y: 1,
    })
}
