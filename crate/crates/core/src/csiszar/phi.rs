use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convex generators `φ` with `φ(1) = 0` available for divergence measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiDivergence {
    /// `t log t`.
    KullbackLeibler,
    /// `−log t`; mutual information when applied as `sdiv(P_X ⊗ P_Y, P_XY)`.
    ReverseKullbackLeibler,
    /// `|t − 1|`.
    TotalVariation,
    /// `(√t − 1)²`.
    SquaredHellinger,
    /// `(t − 1)²`.
    PearsonChiSquared,
    /// `(t − 1)² / t`.
    NeymanChiSquared,
}

impl PhiDivergence {
    pub const ALL: [PhiDivergence; 6] = [
        PhiDivergence::KullbackLeibler,
        PhiDivergence::ReverseKullbackLeibler,
        PhiDivergence::TotalVariation,
        PhiDivergence::SquaredHellinger,
        PhiDivergence::PearsonChiSquared,
        PhiDivergence::NeymanChiSquared,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PhiDivergence::KullbackLeibler => "kl",
            PhiDivergence::ReverseKullbackLeibler => "reverse-kl",
            PhiDivergence::TotalVariation => "total-variation",
            PhiDivergence::SquaredHellinger => "hellinger",
            PhiDivergence::PearsonChiSquared => "pearson",
            PhiDivergence::NeymanChiSquared => "neyman",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown divergence {name:?}")))
    }

    /// `φ(t)` for `t ≥ 0`, with `φ(0)` its right limit (possibly `+∞`).
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PhiDivergence::KullbackLeibler => {
                if t == 0.0 {
                    0.0
                } else {
                    t * t.ln()
                }
            }
            PhiDivergence::ReverseKullbackLeibler => -t.ln(),
            PhiDivergence::TotalVariation => (t - 1.0).abs(),
            PhiDivergence::SquaredHellinger => (t.sqrt() - 1.0).powi(2),
            PhiDivergence::PearsonChiSquared => (t - 1.0).powi(2),
            PhiDivergence::NeymanChiSquared => (t - 1.0).powi(2) / t,
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// `φ*(0) = lim_{t→0} t φ(1/t)`.
    pub fn star_at_zero(&self) -> f64 {
        match self {
            PhiDivergence::KullbackLeibler | PhiDivergence::PearsonChiSquared => f64::INFINITY,
            PhiDivergence::ReverseKullbackLeibler => 0.0,
            PhiDivergence::TotalVariation
            | PhiDivergence::SquaredHellinger
            | PhiDivergence::NeymanChiSquared => 1.0,
        }
    }

    /// The generator `φ*(t) = t φ(1/t)` of the reversed divergence.
    pub fn dual(&self) -> Self {
        match self {
            PhiDivergence::KullbackLeibler => PhiDivergence::ReverseKullbackLeibler,
            PhiDivergence::ReverseKullbackLeibler => PhiDivergence::KullbackLeibler,
            PhiDivergence::PearsonChiSquared => PhiDivergence::NeymanChiSquared,
            PhiDivergence::NeymanChiSquared => PhiDivergence::PearsonChiSquared,
            other => *other,
        }
    }

    /// `φ ≥ 0` on `[0, 1]`, required for support divergences to be nonnegative.
    pub fn nonneg_on_unit(&self) -> bool {
        !matches!(self, PhiDivergence::KullbackLeibler)
    }

    /// Not affine on any neighborhood of 1.
    pub fn strictly_convex_at_one(&self) -> bool {
        true
    }
}
