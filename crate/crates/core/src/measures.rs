//! Named sensitivity measures and their dispatch over modes and orders.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation_ratio::{PickFreeze, ResponseTransform};
use crate::csiszar::{cdm_measure, CdmConfig, PhiDivergence};
use crate::error::{Error, Result};
use crate::kernel::{qdm_conditional, qdm_global, qdm_hybrid_measure, qdm_target, QdmConfig};
use crate::rmc::{rmc, rmc_eta_matrices, RmcConfig};
use crate::sample::{hybrid_transform, FactorGroup, Matrix, Mode, Order, Sample, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasureId {
    /// Correlation ratio from pick-and-freeze pairs.
    #[serde(rename = "pf")]
    PickFreeze,
    /// Correlation ratio as randomized maximum correlation with identity
    /// response features.
    #[serde(rename = "rmc-eta")]
    RmcEta,
    /// Normalized QDM, Gaussian kernels with median-heuristic bandwidths.
    #[serde(rename = "qdm-g")]
    QdmGaussian,
    /// Normalized QDM on copula-transformed marginals.
    #[serde(rename = "qdm-cg")]
    QdmCopulaGaussian,
    /// Normalized mutual information, Gaussian KDE.
    #[serde(rename = "mi-g")]
    MiGaussian,
    /// Normalized mutual information, truncated nearest-neighbor copula densities.
    #[serde(rename = "mi-cnn")]
    MiCopulaKnn,
    /// Squared randomized maximum correlation with sine features on copulas.
    #[serde(rename = "rmc-cgs")]
    RmcCopulaSine,
    /// Normalized full-form CDM with Gaussian KDE.
    #[serde(rename = "cdm-g")]
    CdmGaussian,
}

impl MeasureId {
    pub const ALL: [MeasureId; 8] = [
        MeasureId::PickFreeze,
        MeasureId::RmcEta,
        MeasureId::QdmGaussian,
        MeasureId::QdmCopulaGaussian,
        MeasureId::MiGaussian,
        MeasureId::MiCopulaKnn,
        MeasureId::RmcCopulaSine,
        MeasureId::CdmGaussian,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureId::PickFreeze => "pf",
            MeasureId::RmcEta => "rmc-eta",
            MeasureId::QdmGaussian => "qdm-g",
            MeasureId::QdmCopulaGaussian => "qdm-cg",
            MeasureId::MiGaussian => "mi-g",
            MeasureId::MiCopulaKnn => "mi-cnn",
            MeasureId::RmcCopulaSine => "rmc-cgs",
            MeasureId::CdmGaussian => "cdm-g",
        }
    }

    /// Needs a model to evaluate on paired designs.
    pub fn needs_model(&self) -> bool {
        *self == MeasureId::PickFreeze
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeasureId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown measure {s:?}")))
    }
}

/// Per-measure estimator overrides.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureOptions {
    pub qdm: Option<QdmConfig>,
    pub cdm: Option<CdmConfig>,
    pub rmc: Option<RmcConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub id: MeasureId,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub order: Order,
    #[serde(default)]
    pub options: MeasureOptions,
}

impl MeasureSpec {
    pub fn new(id: MeasureId, mode: Mode, order: Order) -> Self {
        Self {
            id,
            mode,
            order,
            options: MeasureOptions::default(),
        }
    }

    /// Rejects combinations without an estimator.
    pub fn check(&self) -> Result<()> {
        match (self.id, self.mode) {
            (MeasureId::PickFreeze, Mode::Conditional) => Err(Error::Incompatible(
                "pick-and-freeze has no conditional version: weighting breaks factor independence; use hybrid".into(),
            )),
            (MeasureId::RmcCopulaSine, Mode::Hybrid) => Err(Error::Incompatible(
                "rmc-cgs has no hybrid version; use rmc-eta".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.id, self.mode.as_str(), self.order.as_str())
    }

    pub fn qdm_config(&self) -> QdmConfig {
        self.options.qdm.unwrap_or(QdmConfig {
            copula: self.id == MeasureId::QdmCopulaGaussian,
            ..QdmConfig::default()
        })
    }

    pub fn cdm_config(&self) -> CdmConfig {
        self.options.cdm.unwrap_or(match self.id {
            MeasureId::MiCopulaKnn => CdmConfig::mi_knn_copula(),
            MeasureId::CdmGaussian => {
                CdmConfig::full_gaussian(PhiDivergence::ReverseKullbackLeibler)
            }
            _ => CdmConfig::mi_gaussian(),
        })
    }

    /// RMC configuration with feature seeds derived from `seed`.
    pub fn rmc_config(&self, seed: u64) -> RmcConfig {
        self.options.rmc.unwrap_or_default().with_seed(seed)
    }
}

/// One computed value with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub value: f64,
    /// A debiased value was clamped into `[0, 1]`.
    pub clamped: bool,
    /// An unclamped estimate lies outside `[0, 1]`.
    pub out_of_range: bool,
}

impl MeasureValue {
    fn plain(value: f64) -> Self {
        Self {
            value,
            clamped: false,
            out_of_range: false,
        }
    }

    fn total(self) -> Self {
        Self {
            value: 1.0 - self.value,
            ..self
        }
    }
}

fn require_weight(mode: Mode, weight: Option<&WeightSpec>) -> Result<Option<&WeightSpec>> {
    match (mode, weight) {
        (Mode::Global, _) => Ok(None),
        (_, Some(w)) => {
            w.validate()?;
            Ok(Some(w))
        }
        (m, None) => Err(Error::InvalidParameter(format!(
            "{} mode needs a weight function",
            m.as_str()
        ))),
    }
}

/// A dependence measure (anything but pick-and-freeze) on one sample. Total
/// order is one minus the measure of the complementary group. `seed` drives
/// random features.
pub fn compute_dependence(
    sample: &Sample,
    group: &FactorGroup,
    spec: &MeasureSpec,
    weight: Option<&WeightSpec>,
    seed: u64,
) -> Result<MeasureValue> {
    spec.check()?;
    if spec.id.needs_model() {
        return Err(Error::Incompatible(
            "pick-and-freeze needs a model to evaluate on paired designs, not a fixed sample"
                .into(),
        ));
    }
    group.check(sample.d())?;
    let weight = require_weight(spec.mode, weight)?;
    match spec.order {
        Order::First => dependence_first(sample, group, spec, weight, seed),
        Order::Total => {
            Ok(
                dependence_first(sample, &group.complement(sample.d())?, spec, weight, seed)?
                    .total(),
            )
        }
    }
}

fn dependence_first(
    sample: &Sample,
    group: &FactorGroup,
    spec: &MeasureSpec,
    weight: Option<&WeightSpec>,
    seed: u64,
) -> Result<MeasureValue> {
    let weights = |w: &WeightSpec| -> Result<Vec<f64>> {
        let v = w.apply(&sample.scalar_response()?);
        if v.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        Ok(v)
    };
    match spec.id {
        MeasureId::QdmGaussian | MeasureId::QdmCopulaGaussian => {
            let cfg = spec.qdm_config();
            let v = match (spec.mode, weight) {
                (Mode::Global, _) => qdm_global(sample, group, &cfg)?,
                (Mode::Target, Some(w)) => qdm_target(sample, group, w, &cfg)?,
                (Mode::Conditional, Some(w)) => qdm_conditional(sample, group, w, &cfg)?,
                (Mode::Hybrid, Some(w)) => qdm_hybrid_measure(sample, group, w, &cfg)?,
                _ => unreachable!(),
            };
            Ok(MeasureValue::plain(v))
        }
        MeasureId::MiGaussian | MeasureId::MiCopulaKnn | MeasureId::CdmGaussian => {
            let v = cdm_measure(sample, group, spec.mode, weight, &spec.cdm_config())?;
            Ok(MeasureValue::plain(v.value))
        }
        MeasureId::RmcCopulaSine => {
            let cfg = spec.rmc_config(seed);
            let est = match (spec.mode, weight) {
                (Mode::Global, _) => rmc(sample, group, &cfg, None)?,
                (Mode::Target, Some(w)) => {
                    let x = sample.factor_columns(group)?;
                    let wy = w.apply(&sample.scalar_response()?);
                    let y = Matrix::from_vec(wy.len(), 1, wy);
                    rmc_eta_matrices(&x, &sample.group_kinds(group), &y, &cfg, None)?
                }
                (Mode::Conditional, Some(w)) => rmc(sample, group, &cfg, Some(&weights(w)?))?,
                _ => unreachable!(),
            };
            Ok(MeasureValue {
                value: est.value,
                clamped: est.clamped,
                out_of_range: false,
            })
        }
        MeasureId::RmcEta => {
            let cfg = spec.rmc_config(seed);
            let x = sample.factor_columns(group)?;
            let kinds = sample.group_kinds(group);
            let est = match (spec.mode, weight) {
                (Mode::Global, _) => rmc_eta_matrices(&x, &kinds, sample.response(), &cfg, None)?,
                (Mode::Target, Some(w)) => {
                    let wy = w.apply(&sample.scalar_response()?);
                    rmc_eta_matrices(&x, &kinds, &Matrix::from_vec(wy.len(), 1, wy), &cfg, None)?
                }
                (Mode::Conditional, Some(w)) => {
                    rmc_eta_matrices(&x, &kinds, sample.response(), &cfg, Some(&weights(w)?))?
                }
                (Mode::Hybrid, Some(w)) => {
                    let y = sample.scalar_response()?;
                    let yw = hybrid_transform(&y, &weights(w)?)?;
                    rmc_eta_matrices(&x, &kinds, &Matrix::from_vec(yw.len(), 1, yw), &cfg, None)?
                }
                _ => unreachable!(),
            };
            Ok(MeasureValue {
                value: est.value,
                clamped: est.clamped,
                out_of_range: false,
            })
        }
        MeasureId::PickFreeze => unreachable!(),
    }
}

/// Pick-and-freeze correlation ratio on precomputed model evaluations.
pub fn compute_pick_freeze(
    pf: &PickFreeze,
    group: &FactorGroup,
    spec: &MeasureSpec,
    weight: Option<&WeightSpec>,
) -> Result<MeasureValue> {
    spec.check()?;
    if spec.id != MeasureId::PickFreeze {
        return Err(Error::Incompatible(format!(
            "{} is not a pick-and-freeze measure",
            spec.id
        )));
    }
    let transform = match (spec.mode, require_weight(spec.mode, weight)?) {
        (Mode::Global, _) => ResponseTransform::Identity,
        (Mode::Target, Some(w)) => ResponseTransform::Target(*w),
        (Mode::Hybrid, Some(w)) => ResponseTransform::Hybrid(*w),
        _ => unreachable!(),
    };
    let est = pf.estimate(group, spec.order, transform)?;
    Ok(MeasureValue {
        value: est.value,
        clamped: false,
        out_of_range: est.out_of_range,
    })
}
