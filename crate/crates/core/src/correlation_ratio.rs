//! Correlation ratios `η²(X_I, Y) = V(E[Y|X_I]) / V(Y)` estimated from
//! pick-and-freeze pairs.
//!
//! A pick-and-freeze experiment of size `n` splits a base design of `n`
//! rows into `n/2` pairs; the model is evaluated on the first half once and
//! on one frozen copy per factor group.

use serde::{Deserialize, Serialize};

use crate::design::pick_freeze_pairs;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::sample::{hybrid_transform, FactorGroup, Matrix, Mode, Order, WeightSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaEstimate {
    pub group: FactorGroup,
    pub order: Order,
    pub value: f64,
    /// Base design size (twice the number of pairs).
    pub n: usize,
    pub mode: Mode,
    /// Set when the unclamped value lies outside `[0, 1]`.
    pub out_of_range: bool,
}

/// `η̂² = ((1/n) Σ Y_j Y'_j − μ̂²) / V̂` with `μ̂`, `V̂` pooled over all `2n`
/// responses.
pub fn pf_eta_squared(y: &[f64], y_prime: &[f64]) -> Result<f64> {
    let n = y.len();
    if y_prime.len() != n {
        return Err(Error::DimensionMismatch {
            what: "pick-and-freeze pairs",
            expected: n,
            got: y_prime.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 pairs, got {n}"
        )));
    }
    if y.iter().chain(y_prime).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("responses"));
    }
    let m = 2.0 * n as f64;
    let mu = y.iter().chain(y_prime).sum::<f64>() / m;
    let var = y
        .iter()
        .chain(y_prime)
        .map(|v| (v - mu) * (v - mu))
        .sum::<f64>()
        / m;
    if var <= 0.0 {
        return Err(Error::Constant("pick-and-freeze response"));
    }
    // Centered product: algebraically (1/n)ΣYY' − μ̂² because μ̂ is the pooled mean.
    let cross = y
        .iter()
        .zip(y_prime)
        .map(|(a, b)| (a - mu) * (b - mu))
        .sum::<f64>()
        / n as f64;
    Ok(cross / var)
}

/// `1 − η̂²(X_cI, Y)` from pairs frozen on the complement of `group`.
pub fn pf_total_order(
    group: &FactorGroup,
    d: usize,
    y: &[f64],
    y_prime_complement: &[f64],
) -> Result<f64> {
    group.complement(d)?;
    Ok(1.0 - pf_eta_squared(y, y_prime_complement)?)
}

/// Variance-weighted average of per-coordinate correlation ratios.
pub fn multidim_eta_squared(variances: &[f64], etas: &[f64]) -> Result<f64> {
    if variances.len() != etas.len() {
        return Err(Error::DimensionMismatch {
            what: "per-coordinate correlation ratios",
            expected: variances.len(),
            got: etas.len(),
        });
    }
    if variances.is_empty() {
        return Err(Error::Empty("response coordinates"));
    }
    if variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParameter(
            "variances must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = variances.iter().sum();
    if total <= 0.0 {
        return Err(Error::Constant("every response coordinate"));
    }
    Ok(variances.iter().zip(etas).map(|(v, e)| v * e).sum::<f64>() / total)
}

/// Map applied to the pooled pick-and-freeze responses before estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseTransform {
    Identity,
    /// `w(Y)`.
    Target(WeightSpec),
    /// `w(Y)Y + (1 − w(Y))y₀`.
    Hybrid(WeightSpec),
}

impl ResponseTransform {
    pub fn mode(&self) -> Mode {
        match self {
            ResponseTransform::Identity => Mode::Global,
            ResponseTransform::Target(_) => Mode::Target,
            ResponseTransform::Hybrid(_) => Mode::Hybrid,
        }
    }

    fn apply_pairs(&self, y: &[f64], y_prime: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let pooled: Vec<f64> = y.iter().chain(y_prime).copied().collect();
        let out = match self {
            ResponseTransform::Identity => pooled,
            ResponseTransform::Target(w) => {
                w.validate()?;
                w.apply(&pooled)
            }
            ResponseTransform::Hybrid(w) => {
                w.validate()?;
                hybrid_transform(&pooled, &w.apply(&pooled))?
            }
        };
        let (a, b) = out.split_at(y.len());
        Ok((a.to_vec(), b.to_vec()))
    }
}

/// Model evaluations on a pick-and-freeze base design, reused across groups.
#[derive(Debug, Clone)]
pub struct PickFreeze<'a> {
    model: &'a ModelSpec,
    base: &'a Matrix,
    first: Vec<f64>,
}

impl<'a> PickFreeze<'a> {
    pub fn new(model: &'a ModelSpec, base: &'a Matrix) -> Result<Self> {
        if base.ncols() != model.d() {
            return Err(Error::DimensionMismatch {
                what: "base design",
                expected: model.d(),
                got: base.ncols(),
            });
        }
        if base.nrows() < 4 || base.nrows() % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "pick-and-freeze needs an even base size ≥ 4, got {}",
                base.nrows()
            )));
        }
        let first = model.eval_rows(&base.rows(0, base.nrows() / 2).into_owned())?;
        Ok(Self { model, base, first })
    }

    /// Responses of the frozen copy for `group`.
    pub fn frozen_responses(&self, group: &FactorGroup) -> Result<Vec<f64>> {
        let pf = pick_freeze_pairs(self.base, group)?;
        self.model.eval_rows(&pf.second)
    }

    pub fn first_responses(&self) -> &[f64] {
        &self.first
    }

    pub fn estimate(
        &self,
        group: &FactorGroup,
        order: Order,
        transform: ResponseTransform,
    ) -> Result<EtaEstimate> {
        let d = self.model.d();
        group.check(d)?;
        let frozen = match order {
            Order::First => group.clone(),
            Order::Total => group.complement(d)?,
        };
        let second = self.frozen_responses(&frozen)?;
        let (y, yp) = transform.apply_pairs(&self.first, &second)?;
        let eta = pf_eta_squared(&y, &yp)?;
        let value = match order {
            Order::First => eta,
            Order::Total => 1.0 - eta,
        };
        Ok(EtaEstimate {
            group: group.clone(),
            order,
            value,
            n: self.base.nrows(),
            mode: transform.mode(),
            out_of_range: !(0.0..=1.0).contains(&value),
        })
    }
}

/// First-order correlation ratio of `X_I` and `w(Y)`.
pub fn target_eta(
    model: &ModelSpec,
    base: &Matrix,
    group: &FactorGroup,
    weight: &WeightSpec,
) -> Result<f64> {
    Ok(PickFreeze::new(model, base)?
        .estimate(group, Order::First, ResponseTransform::Target(*weight))?
        .value)
}

/// First-order correlation ratio of `X_I` and the hybrid response `Y_w`.
pub fn hybrid_eta(
    model: &ModelSpec,
    base: &Matrix,
    group: &FactorGroup,
    weight: &WeightSpec,
) -> Result<f64> {
    Ok(PickFreeze::new(model, base)?
        .estimate(group, Order::First, ResponseTransform::Hybrid(*weight))?
        .value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{generate_design, DesignSpec, Marginal, Scheme};
    use crate::sample::median;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn base(model: &ModelSpec, n: usize, seed: u64) -> Matrix {
        generate_design(&model.design(n, Scheme::LatinHypercube, seed)).unwrap()
    }

    #[test]
    fn identical_pairs_give_one() {
        let y = [1.0, 2.0, 5.0, 3.0];
        assert!((pf_eta_squared(&y, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!(pf_eta_squared(&[1.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(pf_eta_squared(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn ishigami_first_and_total() {
        let m = ModelSpec::ishigami_default();
        let mut first = vec![vec![]; 3];
        let mut total = vec![vec![]; 3];
        for r in 0..30 {
            let b = base(&m, 4000, r);
            let pf = PickFreeze::new(&m, &b).unwrap();
            for i in 0..3 {
                let g = FactorGroup::single(i);
                first[i].push(
                    pf.estimate(&g, Order::First, ResponseTransform::Identity)
                        .unwrap()
                        .value,
                );
                total[i].push(
                    pf.estimate(&g, Order::Total, ResponseTransform::Identity)
                        .unwrap()
                        .value,
                );
            }
        }
        let want_first = [0.40, 0.29, 0.0];
        let want_total = [0.71, 0.29, 0.31];
        for i in 0..3 {
            assert!(
                (median(&first[i]) - want_first[i]).abs() < 0.05,
                "first {i}"
            );
            assert!(
                (median(&total[i]) - want_total[i]).abs() < 0.05,
                "total {i}"
            );
        }
    }

    #[test]
    fn total_requires_nonempty_complement() {
        let m = ModelSpec::ishigami_default();
        let b = base(&m, 20, 1);
        let pf = PickFreeze::new(&m, &b).unwrap();
        assert!(pf
            .estimate(
                &FactorGroup::all(3),
                Order::Total,
                ResponseTransform::Identity
            )
            .is_err());
        assert!(pf_total_order(&FactorGroup::all(3), 3, &[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn additive_model_total_equals_first() {
        // Y = X1 + X2² on [0,1]²; independent factors, no interactions.
        let marg = vec![Marginal::Uniform { a: 0.0, b: 1.0 }; 2];
        let f = |x: &Matrix| -> Vec<f64> {
            (0..x.nrows())
                .map(|i| x[(i, 0)] + x[(i, 1)].powi(2))
                .collect()
        };
        for i in 0..2 {
            let mut first = vec![];
            let mut total = vec![];
            for r in 0..20 {
                let b = generate_design(&DesignSpec::new(
                    4000,
                    Scheme::PseudoRandom,
                    r,
                    marg.clone(),
                ))
                .unwrap();
                let y = f(&b.rows(0, 2000).into_owned());
                let own = pick_freeze_pairs(&b, &FactorGroup::single(i)).unwrap();
                let comp = pick_freeze_pairs(&b, &FactorGroup::single(1 - i)).unwrap();
                first.push(pf_eta_squared(&y, &f(&own.second)).unwrap());
                total.push(
                    pf_total_order(&FactorGroup::single(i), 2, &y, &f(&comp.second)).unwrap(),
                );
            }
            assert!((median(&first) - median(&total)).abs() < 0.05);
        }
    }

    #[test]
    fn independent_pairs_center_on_zero() {
        let m = ModelSpec::ishigami_default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut vals = vec![];
        for r in 0..200 {
            let b = base(&m, 2000, 1000 + r);
            let pf = PickFreeze::new(&m, &b).unwrap();
            let mut yp = pf.frozen_responses(&FactorGroup::single(0)).unwrap();
            yp.shuffle(&mut rng);
            vals.push(pf_eta_squared(pf.first_responses(), &yp).unwrap());
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 0.03, "{mean}");
    }

    #[test]
    fn multidim_examples() {
        assert_eq!(multidim_eta_squared(&[2.0], &[0.3]).unwrap(), 0.3);
        assert!((multidim_eta_squared(&[1.0, 1.0], &[0.2, 0.6]).unwrap() - 0.4).abs() < 1e-15);
        assert!((multidim_eta_squared(&[1.0, 3.0], &[0.2, 0.6]).unwrap() - 0.5).abs() < 1e-15);
        assert!(multidim_eta_squared(&[0.0, 0.0], &[0.2, 0.6]).is_err());
    }

    #[test]
    fn target_and_hybrid_degenerate_weights() {
        let m = ModelSpec::ishigami_default();
        let b = base(&m, 200, 3);
        let g = FactorGroup::single(0);
        assert!(target_eta(&m, &b, &g, &WeightSpec::Constant).is_err());
        let pf = PickFreeze::new(&m, &b).unwrap();
        let global = pf
            .estimate(&g, Order::First, ResponseTransform::Identity)
            .unwrap()
            .value;
        let hybrid = hybrid_eta(&m, &b, &g, &WeightSpec::Constant).unwrap();
        assert_eq!(global.to_bits(), hybrid.to_bits());
    }

    #[test]
    fn target_on_binary_response_is_global() {
        // Indicator at c = 1 is the identity on {0, 1}.
        let y = [0.0, 1.0, 1.0, 0.0, 1.0];
        let yp = [0.0, 1.0, 0.0, 0.0, 1.0];
        let w = WeightSpec::IndicatorExceedance { c: 1.0 };
        let (a, b) = ResponseTransform::Target(w).apply_pairs(&y, &yp).unwrap();
        assert_eq!(
            pf_eta_squared(&a, &b).unwrap(),
            pf_eta_squared(&y, &yp).unwrap()
        );
    }

    #[test]
    fn min_normal_uniform_target_ranks_n_first() {
        let m = ModelSpec::MinNormalUniform;
        let mut n_vals = vec![];
        let mut u_vals = vec![];
        for r in 0..40 {
            let b = base(&m, 1000, 50 + r);
            let y = m.eval_rows(&b).unwrap();
            let c = crate::sample::critical_threshold(&y, 0.9).unwrap();
            let w = WeightSpec::IndicatorExceedance { c };
            n_vals.push(target_eta(&m, &b, &FactorGroup::single(0), &w).unwrap());
            u_vals.push(target_eta(&m, &b, &FactorGroup::single(1), &w).unwrap());
        }
        assert!(median(&n_vals) > median(&u_vals));
    }

    proptest! {
        #[test]
        fn affine_invariance(
            y in proptest::collection::vec(-10.0f64..10.0, 6..40),
            alpha in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0],
            beta in -100.0f64..100.0,
        ) {
            let half = y.len() / 2;
            let (a, b) = y.split_at(half);
            let b = &b[..half];
            prop_assume!(pf_eta_squared(a, b).is_ok());
            let e = pf_eta_squared(a, b).unwrap();
            let ta: Vec<f64> = a.iter().map(|v| alpha * v + beta).collect();
            let tb: Vec<f64> = b.iter().map(|v| alpha * v + beta).collect();
            prop_assert!((pf_eta_squared(&ta, &tb).unwrap() - e).abs() < 1e-9);
        }

        #[test]
        fn multidim_between_extremes(
            pairs in proptest::collection::vec((0.01f64..10.0, -0.5f64..1.5), 1..8),
        ) {
            let (v, e): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = multidim_eta_squared(&v, &e).unwrap();
            let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
        }
    }
}
