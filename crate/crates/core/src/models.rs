//! Closed-form test models with known sensitivity indices.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::design::{generate_design, DesignSpec, Marginal, Scheme};
use crate::error::{Error, Result};
use crate::sample::{FactorKind, Matrix, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// `∏ (|4xᵢ − 2| + aᵢ) / (1 + aᵢ)` on `[0,1]^d`.
    SobolG { a: Vec<f64> },
    /// `sin x₁ + a sin² x₂ + b x₃⁴ sin x₁` on `[−π,π]³`.
    Ishigami { a: f64, b: f64 },
    /// `min(N, U)` with `N ~ N(0,1)`, `U ~ U(0,1)`.
    MinNormalUniform,
}

impl ModelSpec {
    pub fn sobol_g_default() -> Self {
        ModelSpec::SobolG {
            a: vec![0.0, 1.0, 9.0, 99.0],
        }
    }

    pub fn ishigami_default() -> Self {
        ModelSpec::Ishigami { a: 5.0, b: 0.1 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::SobolG { .. } => "sobol-g",
            ModelSpec::Ishigami { .. } => "ishigami",
            ModelSpec::MinNormalUniform => "min-normal-uniform",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::SobolG { a } if a.is_empty() => Err(Error::Empty("Sobol' g coefficients")),
            ModelSpec::SobolG { a } if a.iter().any(|v| !(v.is_finite() && *v >= 0.0)) => {
                Err(Error::InvalidParameter(
                    "Sobol' g coefficients must be finite and nonnegative".into(),
                ))
            }
            ModelSpec::Ishigami { a, b } if !(a.is_finite() && b.is_finite()) => Err(
                Error::InvalidParameter("Ishigami parameters must be finite".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            ModelSpec::SobolG { a } => a.len(),
            ModelSpec::Ishigami { .. } => 3,
            ModelSpec::MinNormalUniform => 2,
        }
    }

    pub fn marginals(&self) -> Vec<Marginal> {
        match self {
            ModelSpec::SobolG { a } => vec![Marginal::Uniform { a: 0.0, b: 1.0 }; a.len()],
            ModelSpec::Ishigami { .. } => vec![Marginal::Uniform { a: -PI, b: PI }; 3],
            ModelSpec::MinNormalUniform => {
                vec![
                    Marginal::StandardNormal,
                    Marginal::Uniform { a: 0.0, b: 1.0 },
                ]
            }
        }
    }

    pub fn factor_names(&self) -> Vec<String> {
        match self {
            ModelSpec::MinNormalUniform => vec!["N".into(), "U".into()],
            _ => (1..=self.d()).map(|i| format!("X{i}")).collect(),
        }
    }

    pub fn design(&self, n: usize, scheme: Scheme, seed: u64) -> DesignSpec {
        DesignSpec::new(n, scheme, seed, self.marginals())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        eval_model(self, x)
    }

    /// Evaluates the model on every row of `x`.
    pub fn eval_rows(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.d() {
            return Err(Error::DimensionMismatch {
                what: "model input",
                expected: self.d(),
                got: x.ncols(),
            });
        }
        let mut row = vec![0.0; x.ncols()];
        (0..x.nrows())
            .map(|i| {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = x[(i, j)];
                }
                eval_model(self, &row)
            })
            .collect()
    }
}

pub fn eval_model(spec: &ModelSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.d() {
        return Err(Error::DimensionMismatch {
            what: "model input",
            expected: spec.d(),
            got: x.len(),
        });
    }
    Ok(match spec {
        ModelSpec::SobolG { a } => x
            .iter()
            .zip(a)
            .map(|(&xi, &ai)| ((4.0 * xi - 2.0).abs() + ai) / (1.0 + ai))
            .product(),
        ModelSpec::Ishigami { a, b } => {
            let s1 = x[0].sin();
            let s2 = x[1].sin();
            s1 + a * s2 * s2 + b * x[2].powi(4) * s1
        }
        ModelSpec::MinNormalUniform => x[0].min(x[1]),
    })
}

/// First-order and total-order indices with the response variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticIndices {
    pub first_order: Vec<f64>,
    pub total_order: Vec<f64>,
    pub variance: f64,
    pub mean: f64,
}

pub fn analytic_indices(spec: &ModelSpec) -> Result<AnalyticIndices> {
    spec.validate()?;
    match spec {
        ModelSpec::SobolG { a } => {
            let partial: Vec<f64> = a
                .iter()
                .map(|ai| 1.0 / (3.0 * (1.0 + ai).powi(2)))
                .collect();
            let full: f64 = partial.iter().map(|v| 1.0 + v).product();
            let variance = full - 1.0;
            let first_order = partial.iter().map(|v| v / variance).collect();
            let total_order = (0..a.len())
                .map(|i| {
                    let others: f64 = partial
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, v)| 1.0 + v)
                        .product();
                    1.0 - (others - 1.0) / variance
                })
                .collect();
            Ok(AnalyticIndices {
                first_order,
                total_order,
                variance,
                mean: 1.0,
            })
        }
        ModelSpec::Ishigami { a, b } => {
            let (ta, tb, tc) = ishigami_terms(*a, *b);
            let v = ta + tb + tc;
            Ok(AnalyticIndices {
                first_order: vec![tb / v, ta / v, 0.0],
                total_order: vec![(tb + tc) / v, ta / v, tc / v],
                variance: v,
                mean: a / 2.0,
            })
        }
        ModelSpec::MinNormalUniform => Err(Error::Unavailable(
            "no closed-form indices for min-normal-uniform; use min_normal_uniform_reference"
                .into(),
        )),
    }
}

/// The `(A, B, C)` variance components of the Ishigami model.
pub fn ishigami_terms(a: f64, b: f64) -> (f64, f64, f64) {
    let ta = a * a / 8.0;
    let tb = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
    let tc = b * b * 8.0 * PI.powi(8) / 225.0;
    (ta, tb, tc)
}

/// Draws a model sample. Factors come from `design` with the model's own
/// marginals substituted; only `n`, `scheme` and `seed` are taken from it.
pub fn sample_model(spec: &ModelSpec, design: &DesignSpec) -> Result<Sample> {
    spec.validate()?;
    if design.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            what: "design dimension",
            expected: spec.d(),
            got: design.d(),
        });
    }
    let design = DesignSpec {
        marginals: spec.marginals(),
        ..design.clone()
    };
    let x = generate_design(&design)?;
    let y = spec.eval_rows(&x)?;
    let n = y.len();
    Sample::with_names(
        x,
        Matrix::from_vec(n, 1, y),
        vec![FactorKind::Continuous; spec.d()],
        spec.factor_names(),
        vec!["Y".into()],
    )
}

/// Monte Carlo reference indices for min-normal-uniform, labeled as such.
///
/// Uses the closed-form conditional expectations
/// `E[Y|N=x] = x (x<0), x − x²/2 (0≤x≤1), 1/2 (x>1)` and
/// `E[Y|U=u] = u(1 − Φ(u)) − φ(u)`, averaged over `n` draws each.
pub fn min_normal_uniform_reference(n: usize, seed: u64) -> Result<AnalyticIndices> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "reference sample size must be ≥ 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif = Uniform::new(0.0, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let normal = Normal::standard();

    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64,
            m,
        )
    };

    let mut y = Vec::with_capacity(n);
    let mut ce_n = Vec::with_capacity(n);
    let mut ce_u = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = StandardNormal.sample(&mut rng);
        let u: f64 = unif.sample(&mut rng);
        y.push(x.min(u));
        ce_n.push(if x < 0.0 {
            x
        } else if x <= 1.0 {
            x - x * x / 2.0
        } else {
            0.5
        });
        ce_u.push(u * (1.0 - normal.cdf(u)) - normal.pdf(u));
    }
    let (vy, my) = var(&y);
    let eta_n = var(&ce_n).0 / vy;
    let eta_u = var(&ce_u).0 / vy;
    Ok(AnalyticIndices {
        first_order: vec![eta_n, eta_u],
        total_order: vec![1.0 - eta_u, 1.0 - eta_n],
        variance: vy,
        mean: my,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let g = ModelSpec::sobol_g_default();
        assert_eq!(g.eval(&[0.5, 0.1, 0.7, 0.3]).unwrap(), 0.0);
        let ish = ModelSpec::ishigami_default();
        let v = ish.eval(&[PI / 2.0, PI / 2.0, 0.0]).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
        assert_eq!(ModelSpec::MinNormalUniform.eval(&[0.3, 0.5]).unwrap(), 0.3);
        assert!(ish.eval(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn ishigami_indices() {
        let idx = analytic_indices(&ModelSpec::ishigami_default()).unwrap();
        let r2 = |v: f64| (v * 100.0).round() / 100.0;
        assert_eq!(
            idx.first_order.iter().map(|&v| r2(v)).collect::<Vec<_>>(),
            vec![0.40, 0.29, 0.0]
        );
        assert_eq!(
            idx.total_order.iter().map(|&v| r2(v)).collect::<Vec<_>>(),
            vec![0.71, 0.29, 0.31]
        );
        assert_eq!(idx.first_order[2], 0.0);
        let (a, b, c) = ishigami_terms(5.0, 0.1);
        assert_eq!((a + b + c) / idx.variance, 1.0);
        assert!((idx.variance - 10.84).abs() < 0.01);
    }

    #[test]
    fn sobol_g_indices() {
        let idx = analytic_indices(&ModelSpec::sobol_g_default()).unwrap();
        let v = (4.0 / 3.0) * (13.0 / 12.0) * (301.0 / 300.0) * (30001.0 / 30000.0) - 1.0;
        assert!((idx.variance - v).abs() < 1e-14);
        assert!((idx.variance - 0.44931).abs() < 1e-5);
        assert!((idx.first_order[0] - (1.0 / 3.0) / v).abs() < 1e-14);
        assert!((idx.first_order[0] - 0.742).abs() < 1e-3);
        assert_eq!(idx.mean, 1.0);
        assert!(analytic_indices(&ModelSpec::MinNormalUniform).is_err());
    }

    #[test]
    fn sampled_moments() {
        let g = ModelSpec::sobol_g_default();
        let s = sample_model(&g, &g.design(10_000, Scheme::LatinHypercube, 1)).unwrap();
        let y = s.scalar_response().unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");

        let ish = ModelSpec::ishigami_default();
        let s = sample_model(&ish, &ish.design(10_000, Scheme::LatinHypercube, 2)).unwrap();
        let y = s.scalar_response().unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
        assert!((mean - 2.5).abs() < 0.1, "mean {mean}");
        assert!((var / 10.8446 - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn sobol_g_unit_means_per_factor() {
        let a = [0.0, 1.0, 9.0, 99.0];
        let spec = DesignSpec::new(
            100_000,
            Scheme::PseudoRandom,
            3,
            vec![Marginal::Uniform { a: 0.0, b: 1.0 }],
        );
        let u = generate_design(&spec).unwrap();
        for ai in a {
            let m = u
                .column(0)
                .iter()
                .map(|x| ((4.0 * x - 2.0).abs() + ai) / (1.0 + ai))
                .sum::<f64>()
                / 100_000.0;
            assert!((m - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn min_normal_uniform_reference_ranks_n_first() {
        let r = min_normal_uniform_reference(200_000, 4).unwrap();
        assert!(r.first_order[0] > r.first_order[1]);
        assert!(r.first_order.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
