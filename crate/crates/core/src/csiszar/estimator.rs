//! Plug-in estimators of Csiszár dependence measures between `X_I` and `Y`.
//!
//! `cdm_full` follows the double-sum form `Σ_{i,j} ŵ_i ŵ_j φ(f_XY / (f_X f_Y))`
//! over all pairs `(x_i, y_j)`; `scdm` follows the single-sum support form
//! `Σ_i ŵ_i φ(f_X f_Y / f_XY)` over the observed pairs. The two place the joint
//! density on opposite sides of the ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{prepare, row_major};
use crate::sample::{
    normalized_weights, FactorGroup, FactorKind, Matrix, Mode, Sample, WeightSpec,
};

use super::density::{mixed_knn_density, silverman_bandwidths, DensityEstimator, ProductKernel};
use super::phi::PhiDivergence;

pub const RATIO_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CdmForm {
    /// Single sum over observed pairs, `O(n²)`.
    #[default]
    Support,
    /// Double sum over all pairs, `O(n³)`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdmConfig {
    pub phi: PhiDivergence,
    pub density: DensityEstimator,
    pub form: CdmForm,
    /// Map continuous columns through their (weighted) empirical CDF first.
    pub copula: bool,
    /// Largest `n` accepted by the full form.
    pub size_limit: usize,
    /// Self-measures above this are treated as infinite.
    pub self_cap: f64,
}

impl Default for CdmConfig {
    fn default() -> Self {
        Self {
            phi: PhiDivergence::ReverseKullbackLeibler,
            density: DensityEstimator::GaussianKde,
            form: CdmForm::Support,
            copula: false,
            size_limit: 2000,
            self_cap: 1e6,
        }
    }
}

impl CdmConfig {
    /// Mutual information with Gaussian KDE.
    pub fn mi_gaussian() -> Self {
        Self::default()
    }

    /// Mutual information with truncated nearest-neighbor copula densities.
    pub fn mi_knn_copula() -> Self {
        Self {
            density: DensityEstimator::TruncatedKnnCopula { k: None },
            copula: true,
            ..Self::default()
        }
    }

    /// Full-form CDM with Gaussian KDE.
    pub fn full_gaussian(phi: PhiDivergence) -> Self {
        Self {
            phi,
            form: CdmForm::Full,
            ..Self::default()
        }
    }
}

/// How weights enter the densities and the outer sums.
#[derive(Debug, Clone, Copy)]
pub enum CdmWeighting<'a> {
    Unweighted,
    /// Every density and sum under `P^w`.
    Conditional(&'a [f64]),
    /// Joint and response marginal under `P^w`, factor marginal under `P`.
    Hybrid(&'a [f64]),
}

impl CdmWeighting<'_> {
    fn x_weights(&self) -> Option<&[f64]> {
        match self {
            CdmWeighting::Conditional(w) => Some(w),
            _ => None,
        }
    }

    fn y_weights(&self) -> Option<&[f64]> {
        match self {
            CdmWeighting::Unweighted => None,
            CdmWeighting::Conditional(w) | CdmWeighting::Hybrid(w) => Some(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdmEstimate {
    pub value: f64,
    /// Terms whose density ratio was raised to the floor.
    pub floored: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCdm {
    pub value: f64,
    pub raw: f64,
    pub self_measure: f64,
    pub floored: usize,
}

struct Prepared {
    x: Matrix,
    y: Matrix,
    kinds_x: Vec<FactorKind>,
    kinds_y: Vec<FactorKind>,
    ux: Vec<f64>,
    uy: Vec<f64>,
    uj: Vec<f64>,
}

fn prepare_pair(
    x: &Matrix,
    kinds_x: &[FactorKind],
    y: &Matrix,
    kinds_y: &[FactorKind],
    cfg: &CdmConfig,
    weighting: CdmWeighting,
) -> Result<Prepared> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "dependence measure needs n ≥ 2, got {n}"
        )));
    }
    if y.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "response rows",
            expected: n,
            got: y.nrows(),
        });
    }
    for (m, k) in [(x, kinds_x), (y, kinds_y)] {
        if m.ncols() != k.len() {
            return Err(Error::DimensionMismatch {
                what: "column kinds",
                expected: m.ncols(),
                got: k.len(),
            });
        }
    }
    let ux = normalized_weights(n, weighting.x_weights())?;
    let uy = normalized_weights(n, weighting.y_weights())?;
    let uj = uy.clone();
    let xp = prepare(x.clone(), kinds_x, cfg.copula, weighting.x_weights())?;
    let yp = prepare(y.clone(), kinds_y, cfg.copula, weighting.y_weights())?;
    Ok(Prepared {
        x: xp,
        y: yp,
        kinds_x: kinds_x.to_vec(),
        kinds_y: kinds_y.to_vec(),
        ux,
        uy,
        uj,
    })
}

fn hstack(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, p) = a.shape();
    Matrix::from_fn(n, p + b.ncols(), |i, j| {
        if j < p {
            a[(i, j)]
        } else {
            b[(i, j - p)]
        }
    })
}

/// Kernels for `X` and `Y` sharing the joint Silverman bandwidths.
fn split_kernels(
    p: &Prepared,
    joint_weights: Option<&[f64]>,
) -> Result<(ProductKernel, ProductKernel)> {
    let z = hstack(&p.x, &p.y);
    let kinds: Vec<FactorKind> = p.kinds_x.iter().chain(&p.kinds_y).copied().collect();
    let cont: Vec<usize> = (0..kinds.len())
        .filter(|&c| kinds[c] == FactorKind::Continuous)
        .collect();
    let h = silverman_bandwidths(&z, &cont, joint_weights)?;
    let qx = p
        .kinds_x
        .iter()
        .filter(|k| **k == FactorKind::Continuous)
        .count();
    Ok((
        ProductKernel::new(&p.kinds_x, &h[..qx])?,
        ProductKernel::new(&p.kinds_y, &h[qx..])?,
    ))
}

fn floored_phi(phi: PhiDivergence, ratio: f64) -> (f64, bool) {
    if ratio < RATIO_FLOOR || ratio.is_nan() {
        (phi.eval(RATIO_FLOOR), true)
    } else {
        (phi.eval(ratio), false)
    }
}

/// Marginal and joint densities at the observed pairs, up to constants that
/// cancel in `f_X f_Y / f_XY`.
fn pair_densities(
    p: &Prepared,
    cfg: &CdmConfig,
    weighting: CdmWeighting,
) -> Result<Vec<(f64, f64, f64)>> {
    let n = p.x.nrows();
    match cfg.density {
        DensityEstimator::GaussianKde => {
            let (kx, ky) = split_kernels(p, weighting.y_weights())?;
            let (qx, qy) = (p.x.ncols(), p.y.ncols());
            let xr = row_major(&p.x);
            let yr = row_major(&p.y);
            Ok((0..n)
                .into_par_iter()
                .map(|i| {
                    if p.uj[i] == 0.0 {
                        return (0.0, 0.0, 0.0);
                    }
                    let xi = &xr[i * qx..(i + 1) * qx];
                    let yi = &yr[i * qy..(i + 1) * qy];
                    let (mut fx, mut fy, mut fxy) = (0.0, 0.0, 0.0);
                    for j in 0..n {
                        if p.ux[j] == 0.0 && p.uy[j] == 0.0 {
                            continue;
                        }
                        let a = kx.eval(xi, &xr[j * qx..(j + 1) * qx]);
                        let b = ky.eval(yi, &yr[j * qy..(j + 1) * qy]);
                        fx += p.ux[j] * a;
                        fy += p.uy[j] * b;
                        fxy += p.uj[j] * (a * b);
                    }
                    (fx, fy, fxy)
                })
                .collect())
        }
        DensityEstimator::TruncatedKnnCopula { k } => {
            let z = hstack(&p.x, &p.y);
            let kinds: Vec<FactorKind> = p.kinds_x.iter().chain(&p.kinds_y).copied().collect();
            let fx = mixed_knn_density(&p.x, &p.kinds_x, &p.x, k, Some(&p.ux))?;
            let fy = mixed_knn_density(&p.y, &p.kinds_y, &p.y, k, Some(&p.uy))?;
            let fxy = mixed_knn_density(&z, &kinds, &z, k, Some(&p.uj))?;
            Ok((0..n).map(|i| (fx[i], fy[i], fxy[i])).collect())
        }
    }
}

/// Support-form estimate `Σ_i ŵ_i φ(f_X(x_i) f_Y(y_i) / f_XY(x_i, y_i))`.
pub fn scdm(
    x: &Matrix,
    kinds_x: &[FactorKind],
    y: &Matrix,
    kinds_y: &[FactorKind],
    cfg: &CdmConfig,
    weighting: CdmWeighting,
) -> Result<CdmEstimate> {
    if !cfg.phi.nonneg_on_unit() {
        return Err(Error::InvalidParameter(format!(
            "support divergence requires φ ≥ 0 on [0,1]; {} is not",
            cfg.phi.name()
        )));
    }
    let p = prepare_pair(x, kinds_x, y, kinds_y, cfg, weighting)?;
    let dens = pair_densities(&p, cfg, weighting)?;
    let mut value = 0.0;
    let mut floored = 0;
    for (i, (fx, fy, fxy)) in dens.into_iter().enumerate() {
        if p.uj[i] == 0.0 {
            continue;
        }
        let (v, f) = floored_phi(cfg.phi, fx * fy / fxy);
        value += p.uj[i] * v;
        floored += f as usize;
    }
    Ok(CdmEstimate { value, floored })
}

/// Full-form estimate `Σ_{i,j} ŵ_i ŵ_j φ(f_XY(x_i, y_j) / (f_X(x_i) f_Y(y_j)))`.
pub fn cdm_full(
    x: &Matrix,
    kinds_x: &[FactorKind],
    y: &Matrix,
    kinds_y: &[FactorKind],
    cfg: &CdmConfig,
    weighting: CdmWeighting,
) -> Result<CdmEstimate> {
    let n = x.nrows();
    if n > cfg.size_limit {
        return Err(Error::SizeLimit {
            n,
            limit: cfg.size_limit,
        });
    }
    let p = prepare_pair(x, kinds_x, y, kinds_y, cfg, weighting)?;
    let (fx, fy, joint) = match cfg.density {
        DensityEstimator::GaussianKde => {
            let (kx, ky) = split_kernels(&p, weighting.y_weights())?;
            let gx = gram(&kx, &p.x);
            let gy = gram(&ky, &p.y);
            let fx = &gx * nalgebra::DVector::from_column_slice(&p.ux);
            let fy = &gy * nalgebra::DVector::from_column_slice(&p.uy);
            let mut scaled = gy.clone();
            for (l, mut col) in scaled.column_iter_mut().enumerate() {
                col *= p.uj[l];
            }
            // joint[(i, j)] = Σ_l u_l Kx(i, l) Ky(j, l), using symmetry of Ky.
            let joint = &gx * &scaled;
            (fx.as_slice().to_vec(), fy.as_slice().to_vec(), joint)
        }
        DensityEstimator::TruncatedKnnCopula { k } => {
            let fx = mixed_knn_density(&p.x, &p.kinds_x, &p.x, k, Some(&p.ux))?;
            let fy = mixed_knn_density(&p.y, &p.kinds_y, &p.y, k, Some(&p.uy))?;
            let (qx, qy) = (p.x.ncols(), p.y.ncols());
            let z = hstack(&p.x, &p.y);
            let kinds: Vec<FactorKind> = p.kinds_x.iter().chain(&p.kinds_y).copied().collect();
            let grid = Matrix::from_fn(n * n, qx + qy, |r, c| {
                let (i, j) = (r / n, r % n);
                if c < qx {
                    p.x[(i, c)]
                } else {
                    p.y[(j, c - qx)]
                }
            });
            let f = mixed_knn_density(&z, &kinds, &grid, k, Some(&p.uj))?;
            (fx, fy, Matrix::from_row_slice(n, n, &f))
        }
    };
    let rows: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            if p.ux[i] == 0.0 {
                return (0.0, 0);
            }
            let mut s = 0.0;
            let mut floored = 0;
            for j in 0..n {
                if p.uy[j] == 0.0 {
                    continue;
                }
                let (v, f) = floored_phi(cfg.phi, joint[(i, j)] / (fx[i] * fy[j]));
                s += p.uy[j] * v;
                floored += f as usize;
            }
            (p.ux[i] * s, floored)
        })
        .collect();
    Ok(CdmEstimate {
        value: rows.iter().map(|r| r.0).sum(),
        floored: rows.iter().map(|r| r.1).sum(),
    })
}

fn gram(k: &ProductKernel, data: &Matrix) -> Matrix {
    let (n, q) = data.shape();
    let r = row_major(data);
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = k.eval(&r[i * q..(i + 1) * q], &r[j * q..(j + 1) * q]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `raw / self_measure`, refusing vanishing, non-finite or capped self-measures.
pub fn cdm_normalized(raw: f64, self_measure: f64, cap: f64) -> Result<f64> {
    if !self_measure.is_finite() || self_measure > cap {
        return Err(Error::Unavailable(format!(
            "self-measure {self_measure} treated as infinite"
        )));
    }
    if self_measure <= 0.0 {
        return Err(Error::Unavailable(format!(
            "self-measure {self_measure} is not positive"
        )));
    }
    Ok(raw / self_measure)
}

/// Raw estimate between `X` and `Y` in the configured form, normalized by
/// the same estimator applied to `(X, X)`.
pub fn cdm_pair(
    x: &Matrix,
    kinds_x: &[FactorKind],
    y: &Matrix,
    kinds_y: &[FactorKind],
    cfg: &CdmConfig,
    weighting: CdmWeighting,
) -> Result<NormalizedCdm> {
    let est = match cfg.form {
        CdmForm::Support => scdm,
        CdmForm::Full => cdm_full,
    };
    let raw = est(x, kinds_x, y, kinds_y, cfg, weighting)?;
    let own = est(x, kinds_x, x, kinds_x, cfg, weighting)?;
    Ok(NormalizedCdm {
        value: cdm_normalized(raw.value, own.value, cfg.self_cap)?,
        raw: raw.value,
        self_measure: own.value,
        floored: raw.floored + own.floored,
    })
}

/// Normalized dependence between `X_I` and `Y` (global), `w(Y)` (target),
/// `Y` under `P^w` (conditional), or with only the response side weighted
/// (hybrid).
pub fn cdm_measure(
    sample: &Sample,
    group: &FactorGroup,
    mode: Mode,
    weight: Option<&WeightSpec>,
    cfg: &CdmConfig,
) -> Result<NormalizedCdm> {
    let x = sample.factor_columns(group)?;
    let kinds_x = sample.group_kinds(group);
    let weight = match (mode, weight) {
        (Mode::Global, _) => None,
        (_, Some(w)) => {
            w.validate()?;
            Some(w)
        }
        (m, None) => {
            return Err(Error::InvalidParameter(format!(
                "{} mode needs a weight function",
                m.as_str()
            )));
        }
    };
    let y = sample.response().clone();
    let kinds_y = vec![FactorKind::Continuous; sample.p()];
    match (mode, weight) {
        (Mode::Global, _) => cdm_pair(&x, &kinds_x, &y, &kinds_y, cfg, CdmWeighting::Unweighted),
        (Mode::Target, Some(w)) => {
            let wy = w.apply(&sample.scalar_response()?);
            if wy.iter().all(|v| *v == wy[0]) {
                return Err(Error::Constant("transformed response w(Y)"));
            }
            let kind = if w.is_binary() {
                FactorKind::Categorical
            } else {
                FactorKind::Continuous
            };
            let y = Matrix::from_vec(wy.len(), 1, wy);
            cdm_pair(&x, &kinds_x, &y, &[kind], cfg, CdmWeighting::Unweighted)
        }
        (Mode::Conditional, Some(w)) => {
            let wv = w.apply(&sample.scalar_response()?);
            cdm_pair(
                &x,
                &kinds_x,
                &y,
                &kinds_y,
                cfg,
                CdmWeighting::Conditional(&wv),
            )
        }
        (Mode::Hybrid, Some(w)) => {
            let wv = w.apply(&sample.scalar_response()?);
            cdm_pair(&x, &kinds_x, &y, &kinds_y, cfg, CdmWeighting::Hybrid(&wv))
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csiszar::discrete::{discrete_support_divergence, DiscreteMeasure};
    use crate::design::{generate_design, DesignSpec, Marginal, Scheme};
    use crate::models::{sample_model, ModelSpec};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const CAT: [FactorKind; 1] = [FactorKind::Categorical];
    const CONT: [FactorKind; 1] = [FactorKind::Continuous];

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_column_slice(v.len(), 1, v)
    }

    fn uniforms(n: usize, q: usize, seed: u64) -> Matrix {
        generate_design(&DesignSpec::new(
            n,
            Scheme::PseudoRandom,
            seed,
            vec![Marginal::Uniform { a: 0.0, b: 1.0 }; q],
        ))
        .unwrap()
    }

    #[test]
    fn balanced_bit_is_entropy() {
        let bits: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let x = col(&bits);
        let cfg = CdmConfig::default();
        let v = scdm(&x, &CAT, &x, &CAT, &cfg, CdmWeighting::Unweighted).unwrap();
        let joint = DiscreteMeasure::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let (px, py) = joint.marginals(2, 2).unwrap();
        let oracle = discrete_support_divergence(&px.product(&py), &joint, cfg.phi).unwrap();
        assert!((v.value - oracle).abs() < 1e-15);
        let n = cdm_pair(&x, &CAT, &x, &CAT, &cfg, CdmWeighting::Unweighted).unwrap();
        assert_eq!(n.value, 1.0);
        let knn = CdmConfig::mi_knn_copula();
        let v = scdm(&x, &CAT, &x, &CAT, &knn, CdmWeighting::Unweighted).unwrap();
        assert!((v.value - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn independent_product_frequencies_vanish() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..3 {
            for j in 0..4 {
                a.push(i as f64);
                b.push(j as f64);
            }
        }
        let v = scdm(
            &col(&a),
            &CAT,
            &col(&b),
            &CAT,
            &CdmConfig::default(),
            CdmWeighting::Unweighted,
        )
        .unwrap();
        assert!(v.value.abs() < 1e-15);
    }

    #[test]
    fn unit_weights_match_unweighted() {
        let x = uniforms(150, 2, 4);
        let y = col(&x
            .column(0)
            .iter()
            .map(|v| v.sin() + 0.1 * v)
            .collect::<Vec<_>>());
        let kinds = [FactorKind::Continuous; 2];
        let ones = vec![1.0; 150];
        for cfg in [
            CdmConfig::mi_gaussian(),
            CdmConfig::mi_knn_copula(),
            CdmConfig::full_gaussian(PhiDivergence::PearsonChiSquared),
        ] {
            let g = cdm_pair(&x, &kinds, &y, &CONT, &cfg, CdmWeighting::Unweighted).unwrap();
            let c = cdm_pair(
                &x,
                &kinds,
                &y,
                &CONT,
                &cfg,
                CdmWeighting::Conditional(&ones),
            )
            .unwrap();
            let h = cdm_pair(&x, &kinds, &y, &CONT, &cfg, CdmWeighting::Hybrid(&ones)).unwrap();
            assert_eq!(g.value.to_bits(), c.value.to_bits());
            assert_eq!(g.value.to_bits(), h.value.to_bits());
        }
    }

    #[test]
    fn copy_is_one_and_pearson_full_is_large() {
        let x = uniforms(60, 1, 5);
        let cfg = CdmConfig::full_gaussian(PhiDivergence::PearsonChiSquared);
        let v = cdm_full(&x, &CONT, &x, &CONT, &cfg, CdmWeighting::Unweighted).unwrap();
        let y = uniforms(60, 1, 50);
        let ind = cdm_full(&x, &CONT, &y, &CONT, &cfg, CdmWeighting::Unweighted).unwrap();
        assert!(
            v.value > 0.5 && v.value > 4.0 * ind.value,
            "{} {}",
            v.value,
            ind.value
        );
        let n = cdm_pair(
            &x,
            &CONT,
            &x,
            &CONT,
            &CdmConfig::default(),
            CdmWeighting::Unweighted,
        )
        .unwrap();
        assert_eq!(n.value, 1.0);
    }

    #[test]
    fn size_guard_and_normalization_errors() {
        let x = uniforms(30, 1, 6);
        let cfg = CdmConfig {
            size_limit: 10,
            ..CdmConfig::full_gaussian(PhiDivergence::KullbackLeibler)
        };
        assert!(matches!(
            cdm_full(&x, &CONT, &x, &CONT, &cfg, CdmWeighting::Unweighted),
            Err(Error::SizeLimit { n: 30, limit: 10 })
        ));
        assert!(cdm_normalized(1.0, 0.0, 1e6).is_err());
        assert!(cdm_normalized(1.0, f64::INFINITY, 1e6).is_err());
        assert!(cdm_normalized(1.0, 2e6, 1e6).is_err());
        assert_eq!(cdm_normalized(1.0, 2.0, 1e6).unwrap(), 0.5);
        let kl = CdmConfig {
            phi: PhiDivergence::KullbackLeibler,
            ..CdmConfig::default()
        };
        assert!(scdm(&x, &CONT, &x, &CONT, &kl, CdmWeighting::Unweighted).is_err());
    }

    #[test]
    fn full_form_below_permutation_null_when_independent() {
        let n = 200;
        let cfg = CdmConfig::full_gaussian(PhiDivergence::ReverseKullbackLeibler);
        let mut below = 0;
        let runs = 10;
        for r in 0..runs {
            let d = uniforms(n, 2, 100 + r);
            let x = col(d.column(0).as_slice());
            let y: Vec<f64> = d.column(1).iter().copied().collect();
            let v = cdm_full(&x, &CONT, &col(&y), &CONT, &cfg, CdmWeighting::Unweighted)
                .unwrap()
                .value;
            let mut rng = ChaCha8Rng::seed_from_u64(r);
            let mut null: Vec<f64> = (0..40)
                .map(|_| {
                    let mut s = y.clone();
                    s.shuffle(&mut rng);
                    cdm_full(&x, &CONT, &col(&s), &CONT, &cfg, CdmWeighting::Unweighted)
                        .unwrap()
                        .value
                })
                .collect();
            null.sort_by(f64::total_cmp);
            if v <= null[(0.95 * 40.0) as usize - 1] {
                below += 1;
            }
        }
        assert!(below >= 8, "{below}");
    }

    #[test]
    fn ishigami_third_factor_detected() {
        let model = ModelSpec::ishigami_default();
        let s = sample_model(&model, &model.design(1000, Scheme::PseudoRandom, 7)).unwrap();
        let cfg = CdmConfig::mi_knn_copula();
        let g = FactorGroup::single(2);
        let v = cdm_measure(&s, &g, Mode::Global, None, &cfg).unwrap().raw;
        let y = s.scalar_response().unwrap();
        let x = s.factor_columns(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut null: Vec<f64> = (0..19)
            .map(|_| {
                let mut p = y.clone();
                p.shuffle(&mut rng);
                scdm(&x, &CONT, &col(&p), &CONT, &cfg, CdmWeighting::Unweighted)
                    .unwrap()
                    .value
            })
            .collect();
        null.sort_by(f64::total_cmp);
        assert!(v > null[18], "{v} vs {:?}", null[18]);
    }
}
