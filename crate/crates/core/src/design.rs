//! Experiment designs: iid and Latin hypercube factor sampling, and the
//! paired rows of pick-and-freeze estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::sample::{FactorGroup, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { a: f64, b: f64 },
    StandardNormal,
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Uniform { a, b } if a.is_finite() && b.is_finite() && a < b => Ok(()),
            Marginal::Uniform { a, b } => Err(Error::InvalidParameter(format!(
                "unsupported marginal uniform({a}, {b})"
            ))),
            Marginal::StandardNormal => Ok(()),
        }
    }

    /// Inverse CDF on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Marginal::Uniform { a, b } => a + (b - a) * u,
            Marginal::StandardNormal => standard_normal().inverse_cdf(u),
        }
    }
}

fn standard_normal() -> Normal {
    Normal::standard()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    PseudoRandom,
    #[default]
    LatinHypercube,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub marginals: Vec<Marginal>,
}

impl DesignSpec {
    pub fn new(n: usize, scheme: Scheme, seed: u64, marginals: Vec<Marginal>) -> Self {
        Self {
            n,
            scheme,
            seed,
            marginals,
        }
    }

    pub fn d(&self) -> usize {
        self.marginals.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "design size {} < 2",
                self.n
            )));
        }
        if self.marginals.is_empty() {
            return Err(Error::Empty("marginals"));
        }
        self.marginals.iter().try_for_each(Marginal::validate)
    }
}

/// Draws the `n × d` factor matrix described by `spec`.
pub fn generate_design(spec: &DesignSpec) -> Result<Matrix> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Matrix::zeros(n, d);
    for (j, marginal) in spec.marginals.iter().enumerate() {
        let mut u: Vec<f64> = match spec.scheme {
            Scheme::PseudoRandom => (0..n).map(|_| open_unit(&mut rng)).collect(),
            Scheme::LatinHypercube => {
                // One jittered point per stratum [k/n, (k+1)/n), then a random shuffle.
                let mut strata: Vec<f64> = (0..n)
                    .map(|k| (k as f64 + open_unit(&mut rng)) / n as f64)
                    .collect();
                shuffle(&mut strata, &mut rng);
                strata
            }
        };
        for (i, v) in u.drain(..).enumerate() {
            out[(i, j)] = marginal.quantile(v);
        }
    }
    Ok(out)
}

/// Uniform draw in the open interval `(0, 1)`, safe for inverse CDFs.
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn shuffle<R: Rng, T>(v: &mut [T], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

/// Paired factor rows for pick-and-freeze estimation of `η²(X_I, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeDesign {
    pub group: FactorGroup,
    /// Rows `X^(j)`, `j < n/2`.
    pub first: Matrix,
    /// Rows sharing columns `I` with `first` and taking the complement from the
    /// second half of the base design.
    pub second: Matrix,
}

/// Splits a base design of `2n` rows into `n` pick-and-freeze pairs for `group`.
pub fn pick_freeze_pairs(base: &Matrix, group: &FactorGroup) -> Result<PickFreezeDesign> {
    let (rows, d) = base.shape();
    group.check(d)?;
    if rows % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "pick-and-freeze base design needs an even row count, got {rows}"
        )));
    }
    if rows == 0 {
        return Err(Error::Empty("base design"));
    }
    let half = rows / 2;
    let first = base.rows(0, half).into_owned();
    let mut second = base.rows(half, half).into_owned();
    for &c in group.indices() {
        second.set_column(c, &first.column(c));
    }
    Ok(PickFreezeDesign {
        group: group.clone(),
        first,
        second,
    })
}

/// Deterministic stream seed for a purpose tag and index under a master seed
/// (SplitMix64 finalizer over the combined words).
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ tag) ^ index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(d: usize) -> Vec<Marginal> {
        vec![Marginal::Uniform { a: 0.0, b: 1.0 }; d]
    }

    #[test]
    fn lhs_one_point_per_stratum() {
        let x = generate_design(&DesignSpec::new(4, Scheme::LatinHypercube, 3, unit(3))).unwrap();
        for j in 0..3 {
            let mut bins: Vec<usize> = x
                .column(j)
                .iter()
                .map(|v| (v * 4.0).floor() as usize)
                .collect();
            bins.sort_unstable();
            assert_eq!(bins, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        for scheme in [Scheme::PseudoRandom, Scheme::LatinHypercube] {
            let spec = DesignSpec::new(50, scheme, 99, unit(2));
            assert_eq!(
                generate_design(&spec).unwrap(),
                generate_design(&spec).unwrap()
            );
            let other = DesignSpec {
                seed: 100,
                ..spec.clone()
            };
            assert_ne!(
                generate_design(&spec).unwrap(),
                generate_design(&other).unwrap()
            );
        }
    }

    #[test]
    fn normal_margin_mean() {
        let spec = DesignSpec::new(
            10_000,
            Scheme::PseudoRandom,
            5,
            vec![Marginal::StandardNormal],
        );
        let x = generate_design(&spec).unwrap();
        assert!(x.column(0).mean().abs() < 0.05);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_design(&DesignSpec::new(1, Scheme::PseudoRandom, 0, unit(1))).is_err());
        let bad = vec![Marginal::Uniform { a: 1.0, b: 0.0 }];
        assert!(generate_design(&DesignSpec::new(4, Scheme::PseudoRandom, 0, bad)).is_err());
    }

    #[test]
    fn pick_freeze_examples() {
        let (a, b, c, e) = (1.0, 2.0, 3.0, 4.0);
        let base = Matrix::from_row_slice(2, 2, &[a, b, c, e]);
        let pf = pick_freeze_pairs(&base, &FactorGroup::single(0)).unwrap();
        assert_eq!(
            pf.first.row(0).iter().copied().collect::<Vec<_>>(),
            vec![a, b]
        );
        assert_eq!(
            pf.second.row(0).iter().copied().collect::<Vec<_>>(),
            vec![a, e]
        );

        let pf = pick_freeze_pairs(&base, &FactorGroup::all(2)).unwrap();
        assert_eq!(pf.first, pf.second);

        assert!(FactorGroup::new(vec![]).is_err());
        let odd = Matrix::zeros(3, 2);
        assert!(pick_freeze_pairs(&odd, &FactorGroup::single(0)).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|r| derive_seed(7, 1, r)).collect();
        let mut u = s.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), 100);
        assert_eq!(derive_seed(7, 1, 3), s[3]);
        assert_ne!(derive_seed(7, 2, 3), s[3]);
    }

    proptest! {
        #[test]
        fn lhs_histogram_is_flat(n in 2usize..200, seed in any::<u64>()) {
            let x = generate_design(&DesignSpec::new(n, Scheme::LatinHypercube, seed, unit(2))).unwrap();
            for j in 0..2 {
                let mut counts = vec![0usize; n];
                for v in x.column(j).iter() {
                    counts[((v * n as f64).floor() as usize).min(n - 1)] += 1;
                }
                prop_assert!(counts.iter().all(|&c| c == 1));
            }
        }

        #[test]
        fn frozen_columns_bitwise_equal(half in 1usize..30, seed in any::<u64>(), mask in 1u8..15) {
            let base = generate_design(&DesignSpec::new(2 * half.max(1), Scheme::PseudoRandom, seed, unit(4))).unwrap();
            let idx: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
            let g = FactorGroup::new(idx.clone()).unwrap();
            let pf = pick_freeze_pairs(&base, &g).unwrap();
            for j in 0..half {
                for &c in &idx {
                    prop_assert_eq!(pf.first[(j, c)].to_bits(), pf.second[(j, c)].to_bits());
                }
                for c in (0..4).filter(|c| !idx.contains(c)) {
                    prop_assert_eq!(pf.second[(j, c)], base[(half + j, c)]);
                }
            }
        }
    }
}
