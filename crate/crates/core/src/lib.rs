//! Global, target, conditional and hybrid sensitivity analysis with
//! correlation ratios, kernel dependence measures, Csiszár divergences and
//! randomized maximum correlation.

pub mod correlation_ratio;
pub mod csiszar;
pub mod design;
pub mod error;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod measures;
pub mod models;
pub mod rmc;
pub mod sample;

pub use correlation_ratio::{EtaEstimate, PickFreeze, ResponseTransform};
pub use csiszar::{
    CdmConfig, CdmForm, CdmWeighting, DensityEstimator, NormalizedCdm, PhiDivergence,
};
pub use design::{
    derive_seed, generate_design, pick_freeze_pairs, DesignSpec, Marginal, PickFreezeDesign, Scheme,
};
pub use error::{Error, Result};
pub use harness::{
    run_experiment, run_on_sample, summarize, ExperimentConfig, OrderingRow, SensitivityResult,
    SummaryRow, WeightChoice,
};
pub use io::{read_sample, SampleSchema};
pub use kernel::{KernelSpec, QdmConfig};
pub use measures::{compute_dependence, MeasureId, MeasureSpec, MeasureValue};
pub use models::{analytic_indices, eval_model, sample_model, AnalyticIndices, ModelSpec};
pub use rmc::{FeatureFamily, FeatureKind, RmcConfig, RmcEstimate};
pub use sample::{
    copula_transform, critical_threshold, empirical_cdf_transform, five_number_summary,
    hybrid_transform, BoxSummary, FactorGroup, FactorKind, Matrix, Mode, Order, Sample, WeightSpec,
};
