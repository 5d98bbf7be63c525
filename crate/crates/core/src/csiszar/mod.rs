//! Csiszár φ-divergences: the generator catalog, exact finite-space
//! divergences, density estimators and dependence-measure estimators.

pub mod density;
pub mod discrete;
pub mod estimator;
pub mod phi;

pub use density::{
    default_knn_k, frequency, kde_density, knn_copula_density, mixed_knn_density,
    product_kernel_density, silverman_bandwidths, DensityEstimator,
};
pub use discrete::{
    discrete_divergence, discrete_support_divergence, discrete_weighted_divergence, DiscreteMeasure,
};
pub use estimator::{
    cdm_full, cdm_measure, cdm_normalized, cdm_pair, scdm, CdmConfig, CdmEstimate, CdmForm,
    CdmWeighting, NormalizedCdm, RATIO_FLOOR,
};
pub use phi::PhiDivergence;
