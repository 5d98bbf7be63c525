//! Exact Csiszár divergences between probability measures on a finite set
//! of labels `0..k`.

use crate::error::{Error, Result};

use super::phi::PhiDivergence;

const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    probs: Vec<f64>,
}

impl DiscreteMeasure {
    /// Probabilities must be finite, nonnegative and sum to one within `1e−12`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("discrete measure"));
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("discrete measure"));
        }
        if let Some(i) = probs.iter().position(|&p| p < 0.0) {
            return Err(Error::NegativeWeight(i));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative masses to a probability measure.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        if let Some(i) = masses.iter().position(|&p| p < 0.0) {
            return Err(Error::NegativeWeight(i));
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ZeroWeight);
        }
        Ok(Self {
            probs: masses.iter().map(|m| m / total).collect(),
        })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::from_masses(&vec![1.0; k])
    }

    pub fn dirac(k: usize, at: usize) -> Result<Self> {
        if at >= k {
            return Err(Error::InvalidParameter(format!(
                "label {at} out of range 0..{k}"
            )));
        }
        let mut p = vec![0.0; k];
        p[at] = 1.0;
        Self::new(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `∫ w dP`.
    pub fn integrate(&self, w: &[f64]) -> Result<f64> {
        self.check_len(w.len(), "label weights")?;
        Ok(self.probs.iter().zip(w).map(|(p, w)| p * w).sum())
    }

    /// The weighted probability `P^w(A) = ∫_A w dP / ∫ w dP`.
    pub fn reweight(&self, w: &[f64]) -> Result<Self> {
        self.check_len(w.len(), "label weights")?;
        let masses: Vec<f64> = self.probs.iter().zip(w).map(|(p, w)| p * w).collect();
        Self::from_masses(&masses)
    }

    /// Image measure under the label map `map: 0..k → 0..m`.
    pub fn pushforward(&self, map: &[usize], m: usize) -> Result<Self> {
        self.check_len(map.len(), "label map")?;
        let mut out = vec![0.0; m];
        for (&p, &z) in self.probs.iter().zip(map) {
            if z >= m {
                return Err(Error::InvalidParameter(format!(
                    "image label {z} out of range 0..{m}"
                )));
            }
            out[z] += p;
        }
        Ok(Self { probs: out })
    }

    /// Product measure on `0..k × 0..m`, label `(a, b) ↦ a·m + b`.
    pub fn product(&self, other: &Self) -> Self {
        let probs = self
            .probs
            .iter()
            .flat_map(|a| other.probs.iter().map(move |b| a * b))
            .collect();
        Self { probs }
    }

    /// Marginals of a measure on `0..k × 0..m` with labels `a·m + b`.
    pub fn marginals(&self, k: usize, m: usize) -> Result<(Self, Self)> {
        self.check_len(k * m, "product space")?;
        let mut pa = vec![0.0; k];
        let mut pb = vec![0.0; m];
        for a in 0..k {
            for b in 0..m {
                pa[a] += self.probs[a * m + b];
                pb[b] += self.probs[a * m + b];
            }
        }
        Ok((Self { probs: pa }, Self { probs: pb }))
    }

    pub fn is_singular_to(&self, other: &Self) -> bool {
        self.probs
            .iter()
            .zip(&other.probs)
            .all(|(p, q)| *p == 0.0 || *q == 0.0)
    }

    fn check_len(&self, got: usize, what: &'static str) -> Result<()> {
        if got != self.probs.len() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.probs.len(),
                got,
            });
        }
        Ok(())
    }
}

/// `a·b` with the convention `0·∞ = 0`.
pub(crate) fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

fn check_pair(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "label universes",
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(())
}

fn absolutely_continuous_part(p: &DiscreteMeasure, q: &DiscreteMeasure, phi: PhiDivergence) -> f64 {
    p.probs
        .iter()
        .zip(&q.probs)
        .filter(|(_, &qz)| qz > 0.0)
        .map(|(&pz, &qz)| mul0(qz, phi.eval(pz / qz)))
        .sum()
}

/// `div_φ(P, Q) = Σ_{q>0} q φ(p/q) + φ*(0) Σ_{q=0} p`, possibly `+∞`.
pub fn discrete_divergence(
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    phi: PhiDivergence,
) -> Result<f64> {
    check_pair(p, q)?;
    let singular: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .filter(|(_, &qz)| qz == 0.0)
        .map(|(pz, _)| pz)
        .sum();
    Ok(absolutely_continuous_part(p, q, phi) + mul0(phi.star_at_zero(), singular))
}

/// Support divergence: singular mass of `P` outside `supp(Q)` is dropped,
/// which on a finite space leaves `Σ_{q>0} q φ(p/q)`.
pub fn discrete_support_divergence(
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    phi: PhiDivergence,
) -> Result<f64> {
    check_pair(p, q)?;
    if !phi.nonneg_on_unit() {
        return Err(Error::InvalidParameter(format!(
            "support divergence requires φ ≥ 0 on [0,1]; {} is not",
            phi.name()
        )));
    }
    Ok(absolutely_continuous_part(p, q, phi))
}

/// `div_φ(P^w, Q^w)` for label weights `w`.
pub fn discrete_weighted_divergence(
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    w: &[f64],
    phi: PhiDivergence,
) -> Result<f64> {
    check_pair(p, q)?;
    discrete_divergence(&p.reweight(w)?, &q.reweight(w)?, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(p: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(p.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        let p = m(&[0.2, 0.3, 0.5]);
        for phi in PhiDivergence::ALL {
            assert_eq!(discrete_divergence(&p, &p, phi).unwrap(), 0.0);
        }
        let a = DiscreteMeasure::dirac(2, 0).unwrap();
        let b = DiscreteMeasure::dirac(2, 1).unwrap();
        assert_eq!(
            discrete_divergence(&a, &b, PhiDivergence::TotalVariation).unwrap(),
            2.0
        );
        let kl = discrete_divergence(
            &m(&[0.5, 0.5]),
            &m(&[0.25, 0.75]),
            PhiDivergence::KullbackLeibler,
        )
        .unwrap();
        assert!((kl - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((kl - 0.14384).abs() < 1e-5);
    }

    #[test]
    fn support_examples() {
        // Perfectly correlated balanced bit on {0,1}²: P_X ⊗ P_Y vs P_XY.
        let joint = m(&[0.5, 0.0, 0.0, 0.5]);
        let (px, py) = joint.marginals(2, 2).unwrap();
        let prod = px.product(&py);
        let v = discrete_support_divergence(&prod, &joint, PhiDivergence::ReverseKullbackLeibler)
            .unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);

        let a = DiscreteMeasure::dirac(3, 0).unwrap();
        let b = m(&[0.0, 0.5, 0.5]);
        for phi in PhiDivergence::ALL
            .into_iter()
            .filter(|p| p.nonneg_on_unit())
        {
            assert_eq!(
                discrete_support_divergence(&a, &b, phi).unwrap(),
                phi.at_zero()
            );
            assert_eq!(discrete_support_divergence(&b, &b, phi).unwrap(), 0.0);
        }
        assert!(discrete_support_divergence(&a, &b, PhiDivergence::KullbackLeibler).is_err());
    }

    #[test]
    fn weighted_examples() {
        let p = m(&[0.1, 0.4, 0.5]);
        let q = m(&[0.3, 0.3, 0.4]);
        for phi in PhiDivergence::ALL {
            let plain = discrete_divergence(&p, &q, phi).unwrap();
            let w = discrete_weighted_divergence(&p, &q, &[1.0; 3], phi).unwrap();
            assert!((plain - w).abs() < 1e-15);
        }
        // Indicator of A = {0, 1} with P(A) = Q(A) = 0.5.
        let p = m(&[0.2, 0.3, 0.5]);
        let q = m(&[0.4, 0.1, 0.5]);
        let w = [1.0, 1.0, 0.0];
        let phi = PhiDivergence::SquaredHellinger;
        let mass = p.integrate(&w).unwrap();
        let closed = (0.4 * phi.eval(0.2 / 0.4) + 0.1 * phi.eval(0.3 / 0.1)) / mass;
        let v = discrete_weighted_divergence(&p, &q, &w, phi).unwrap();
        assert!((v - closed).abs() < 1e-15);
        assert!(discrete_weighted_divergence(&p, &q, &[0.0; 3], phi).is_err());
    }

    #[test]
    fn validation() {
        assert!(DiscreteMeasure::new(vec![0.5, 0.4]).is_err());
        assert!(DiscreteMeasure::new(vec![1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![]).is_err());
        let p = m(&[0.5, 0.5]);
        assert!(discrete_divergence(&p, &m(&[1.0]), PhiDivergence::TotalVariation).is_err());
    }

    fn measure(k: usize) -> impl Strategy<Value = DiscreteMeasure> {
        proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], k)
            .prop_filter("positive mass", |v| v.iter().sum::<f64>() > 0.0)
            .prop_map(|v| DiscreteMeasure::from_masses(&v).unwrap())
    }

    fn pair() -> impl Strategy<Value = (DiscreteMeasure, DiscreteMeasure)> {
        (2usize..8).prop_flat_map(|k| (measure(k), measure(k)))
    }

    proptest! {
        #[test]
        fn bounds_hold((p, q) in pair()) {
            for phi in PhiDivergence::ALL {
                let v = discrete_divergence(&p, &q, phi).unwrap();
                prop_assert!(v >= -1e-12);
                prop_assert!(v <= phi.at_zero() + phi.star_at_zero() + 1e-12);
            }
        }
    }
}
