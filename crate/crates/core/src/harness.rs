//! Repeated experiments on benchmark models: designs, per-repetition
//! thresholds, measure sweeps, ordering proportions, reference values and
//! box-plot summaries.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation_ratio::PickFreeze;
use crate::design::{derive_seed, generate_design, Scheme};
use crate::error::{Error, Result};
use crate::measures::{
    compute_dependence, compute_pick_freeze, MeasureId, MeasureSpec, MeasureValue,
};
use crate::models::ModelSpec;
use crate::sample::{
    critical_threshold, five_number_summary, median, std_dev, BoxSummary, FactorGroup, FactorKind,
    Matrix, Mode, Order, Sample, WeightSpec,
};

/// Version of the record layout written to result files.
pub const SCHEMA_VERSION: u32 = 1;

/// Weight function family; the threshold is the configured empirical quantile
/// of each repetition's response sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightChoice {
    Indicator,
    /// `exp(−max(c − y, 0)/(s σ_Y))` with `σ_Y` the sample standard deviation.
    Smooth {
        s: f64,
    },
}

impl Default for WeightChoice {
    fn default() -> Self {
        WeightChoice::Indicator
    }
}

impl WeightChoice {
    pub fn smooth_default() -> Self {
        WeightChoice::Smooth { s: 0.2 }
    }

    pub fn build(&self, response: &[f64], quantile: f64) -> Result<WeightSpec> {
        let c = critical_threshold(response, quantile)?;
        match *self {
            WeightChoice::Indicator => Ok(WeightSpec::IndicatorExceedance { c }),
            WeightChoice::Smooth { s } => WeightSpec::smooth(c, s, std_dev(response)),
        }
    }
}

fn default_repetitions() -> usize {
    100
}

fn default_quantile() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub measures: Vec<MeasureSpec>,
    pub sizes: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub weight: WeightChoice,
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Factor groups to analyze; every single factor when absent.
    #[serde(default)]
    pub groups: Option<Vec<FactorGroup>>,
    /// Expected ranking of group labels, most influential first.
    #[serde(default)]
    pub reference_ranking: Option<Vec<String>>,
}

impl ExperimentConfig {
    pub fn new(
        model: ModelSpec,
        measures: Vec<MeasureSpec>,
        sizes: Vec<usize>,
        repetitions: usize,
        seed: u64,
    ) -> Self {
        Self {
            model,
            measures,
            sizes,
            repetitions,
            weight: WeightChoice::default(),
            quantile: default_quantile(),
            seed,
            scheme: Scheme::default(),
            groups: None,
            reference_ranking: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.measures.is_empty() {
            return Err(Error::Empty("measures"));
        }
        if self.sizes.is_empty() {
            return Err(Error::Empty("sample sizes"));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter(
                "repetitions must be at least 1".into(),
            ));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile {} not in (0,1)",
                self.quantile
            )));
        }
        for g in self.groups() {
            g.check(self.model.d())?;
        }
        Ok(())
    }

    pub fn groups(&self) -> Vec<FactorGroup> {
        self.groups
            .clone()
            .unwrap_or_else(|| (0..self.model.d()).map(FactorGroup::single).collect())
    }

    fn needs_weight(&self) -> bool {
        self.measures.iter().any(|m| m.mode != Mode::Global)
    }
}

/// One measure value for one group, repetition and sample size. Failures are
/// records with `value = None` and a reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub schema: u32,
    pub measure: MeasureId,
    pub mode: Mode,
    pub order: Order,
    pub group: String,
    pub value: Option<f64>,
    pub n: usize,
    pub repetition: usize,
    pub seed: u64,
    #[serde(default)]
    pub clamped: bool,
    #[serde(default)]
    pub out_of_range: bool,
    #[serde(default)]
    pub unavailable: bool,
    #[serde(default)]
    pub error: Option<String>,
    /// Part of an asymptotic reference run.
    #[serde(default)]
    pub reference: bool,
}

impl SensitivityResult {
    fn key(&self) -> (MeasureId, Mode, Order, usize) {
        (self.measure, self.mode, self.order, self.n)
    }
}

/// Comma-joined factor names of a group.
pub fn group_label(group: &FactorGroup, names: &[String]) -> String {
    group
        .indices()
        .iter()
        .map(|&i| {
            names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("X{}", i + 1))
        })
        .collect::<Vec<_>>()
        .join(",")
}

pub fn repetition_seed(master: u64, n: usize, repetition: usize) -> u64 {
    derive_seed(master, n as u64, repetition as u64)
}

struct Context<'a> {
    n: usize,
    repetition: usize,
    seed: u64,
    names: &'a [String],
}

fn record(
    ctx: &Context,
    spec: &MeasureSpec,
    group: &FactorGroup,
    outcome: Result<MeasureValue>,
) -> SensitivityResult {
    let mut r = SensitivityResult {
        schema: SCHEMA_VERSION,
        measure: spec.id,
        mode: spec.mode,
        order: spec.order,
        group: group_label(group, ctx.names),
        value: None,
        n: ctx.n,
        repetition: ctx.repetition,
        seed: ctx.seed,
        clamped: false,
        out_of_range: false,
        unavailable: false,
        error: None,
        reference: false,
    };
    match outcome {
        Ok(v) => {
            r.value = Some(v.value);
            r.clamped = v.clamped;
            r.out_of_range = v.out_of_range;
        }
        Err(e) => {
            r.unavailable = matches!(e, Error::Unavailable(_));
            r.error = Some(e.to_string());
        }
    }
    r
}

/// Every configured measure on every group for one `(n, repetition)`.
pub fn run_repetition(
    cfg: &ExperimentConfig,
    n: usize,
    repetition: usize,
) -> Result<Vec<SensitivityResult>> {
    let seed = repetition_seed(cfg.seed, n, repetition);
    let design = generate_design(&cfg.model.design(n, cfg.scheme, seed))?;
    let response = cfg.model.eval_rows(&design)?;
    let names = cfg.model.factor_names();
    let sample = Sample::with_names(
        design.clone(),
        Matrix::from_vec(n, 1, response.clone()),
        vec![FactorKind::Continuous; cfg.model.d()],
        names.clone(),
        vec!["Y".into()],
    )?;
    let weight = if cfg.needs_weight() {
        Some(cfg.weight.build(&response, cfg.quantile))
    } else {
        None
    };
    let pf = if cfg.measures.iter().any(|m| m.id.needs_model()) {
        Some(PickFreeze::new(&cfg.model, &design))
    } else {
        None
    };
    let ctx = Context {
        n,
        repetition,
        seed,
        names: &names,
    };
    let groups = cfg.groups();
    let mut out = Vec::with_capacity(cfg.measures.len() * groups.len());
    for spec in &cfg.measures {
        for group in &groups {
            let w = match (&weight, spec.mode) {
                (_, Mode::Global) => Ok(None),
                (Some(Ok(w)), _) => Ok(Some(w)),
                (Some(Err(e)), _) => Err(e.clone()),
                (None, _) => unreachable!(),
            };
            let outcome = w.and_then(|w| {
                if spec.id.needs_model() {
                    match &pf {
                        Some(Ok(pf)) => compute_pick_freeze(pf, group, spec, w),
                        Some(Err(e)) => Err(e.clone()),
                        None => unreachable!(),
                    }
                } else {
                    compute_dependence(&sample, group, spec, w, seed)
                }
            });
            out.push(record(&ctx, spec, group, outcome));
        }
    }
    Ok(out)
}

/// All sizes and repetitions; deterministic given the master seed and
/// ordered by size, repetition, measure and group.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SensitivityResult>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| (0..cfg.repetitions).map(move |r| (n, r)))
        .collect();
    let parts: Vec<Result<Vec<SensitivityResult>>> = jobs
        .par_iter()
        .map(|&(n, r)| run_repetition(cfg, n, r))
        .collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Measures on a single user-provided sample. Pick-and-freeze cannot run on
/// fixed data and yields failure records.
pub fn run_on_sample(
    sample: &Sample,
    measures: &[MeasureSpec],
    groups: &[FactorGroup],
    weight: WeightChoice,
    quantile: f64,
    seed: u64,
) -> Result<Vec<SensitivityResult>> {
    if measures.is_empty() {
        return Err(Error::Empty("measures"));
    }
    let names = sample.factor_names().to_vec();
    let ctx = Context {
        n: sample.n(),
        repetition: 0,
        seed,
        names: &names,
    };
    let needs_weight = measures.iter().any(|m| m.mode != Mode::Global);
    let weight = if needs_weight {
        Some(weight.build(&sample.scalar_response()?, quantile))
    } else {
        None
    };
    let mut out = Vec::new();
    for spec in measures {
        for group in groups {
            let outcome = match (&weight, spec.mode) {
                (_, Mode::Global) => compute_dependence(sample, group, spec, None, seed),
                (Some(Ok(w)), _) => compute_dependence(sample, group, spec, Some(w), seed),
                (Some(Err(e)), _) => Err(e.clone()),
                (None, _) => unreachable!(),
            };
            out.push(record(&ctx, spec, group, outcome));
        }
    }
    Ok(out)
}

/// Fraction of repetitions whose values, sorted in decreasing order, list the
/// groups exactly as `reference`. Ties and failed values count as incorrect.
/// `results` must hold a single measure, mode, order and size.
pub fn ordering_proportion(results: &[SensitivityResult], reference: &[String]) -> Result<f64> {
    if reference.len() < 2 {
        return Err(Error::InvalidParameter(
            "reference ranking needs at least two groups".into(),
        ));
    }
    let mut keys: Vec<_> = results.iter().map(SensitivityResult::key).collect();
    keys.sort();
    keys.dedup();
    if keys.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "ordering needs results of one measure, mode, order and size; got {}",
            keys.len()
        )));
    }
    let mut reps: BTreeMap<usize, BTreeMap<&str, Option<f64>>> = BTreeMap::new();
    for r in results {
        reps.entry(r.repetition)
            .or_default()
            .insert(r.group.as_str(), r.value);
    }
    let mut correct = 0;
    for (rep, values) in &reps {
        let mut vals = Vec::with_capacity(reference.len());
        for g in reference {
            match values.get(g.as_str()) {
                Some(v) => vals.push(*v),
                None => {
                    return Err(Error::InvalidGroup(format!(
                        "group {g} missing in repetition {rep}"
                    )));
                }
            }
        }
        let ok = vals
            .windows(2)
            .all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if a > b));
        correct += ok as usize;
    }
    Ok(correct as f64 / reps.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingRow {
    pub measure: MeasureId,
    pub mode: Mode,
    pub order: Order,
    pub n: usize,
    pub proportion: f64,
}

/// `ordering_proportion` for every measure, mode, order and size present.
pub fn ordering_table(
    results: &[SensitivityResult],
    reference: &[String],
) -> Result<Vec<OrderingRow>> {
    let mut by_key: BTreeMap<(MeasureId, Mode, Order, usize), Vec<SensitivityResult>> =
        BTreeMap::new();
    for r in results.iter().filter(|r| !r.reference) {
        by_key.entry(r.key()).or_default().push(r.clone());
    }
    by_key
        .into_iter()
        .map(|((measure, mode, order, n), rs)| {
            Ok(OrderingRow {
                measure,
                mode,
                order,
                n,
                proportion: ordering_proportion(&rs, reference)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub measure: MeasureId,
    pub mode: Mode,
    pub order: Order,
    pub group: String,
    pub n: usize,
    /// Median over successful repetitions; absent when all failed.
    pub median: Option<f64>,
    pub failures: usize,
}

/// Medians over `repetitions` runs at size `n_ref`, seeded apart from the
/// main experiment.
pub fn asymptotic_reference(
    cfg: &ExperimentConfig,
    n_ref: usize,
    repetitions: usize,
) -> Result<Vec<ReferenceValue>> {
    let ref_cfg = ExperimentConfig {
        sizes: vec![n_ref],
        repetitions,
        seed: derive_seed(cfg.seed, 0x7265_6665_7265_6e63, 0),
        ..cfg.clone()
    };
    let mut results = run_experiment(&ref_cfg)?;
    for r in &mut results {
        r.reference = true;
    }
    Ok(reference_medians(&results))
}

type CellKey = (MeasureId, Mode, Order, usize, String);

/// Successful values and failure counts per cell, in first-appearance order.
fn cells(results: &[SensitivityResult]) -> Vec<(CellKey, Vec<f64>, usize)> {
    let mut index: BTreeMap<CellKey, usize> = BTreeMap::new();
    let mut out: Vec<(CellKey, Vec<f64>, usize)> = Vec::new();
    for r in results {
        let key = (r.measure, r.mode, r.order, r.n, r.group.clone());
        let i = *index.entry(key.clone()).or_insert_with(|| {
            out.push((key, Vec::new(), 0));
            out.len() - 1
        });
        match r.value {
            Some(v) => out[i].1.push(v),
            None => out[i].2 += 1,
        }
    }
    out
}

pub fn reference_medians(results: &[SensitivityResult]) -> Vec<ReferenceValue> {
    cells(results)
        .into_iter()
        .map(
            |((measure, mode, order, n, group), values, failures)| ReferenceValue {
                measure,
                mode,
                order,
                group,
                n,
                median: (!values.is_empty()).then(|| median(&values)),
                failures,
            },
        )
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub measure: MeasureId,
    pub mode: Mode,
    pub order: Order,
    pub group: String,
    pub n: usize,
    pub count: usize,
    pub failures: usize,
    pub summary: Option<BoxSummary>,
}

/// Box-plot statistics per measure, mode, order, group and size, in first
/// appearance order.
pub fn summarize(results: &[SensitivityResult]) -> Vec<SummaryRow> {
    cells(results)
        .into_iter()
        .map(
            |((measure, mode, order, n, group), values, failures)| SummaryRow {
                measure,
                mode,
                order,
                group,
                n,
                count: values.len(),
                failures,
                summary: five_number_summary(&values).ok(),
            },
        )
        .collect()
}

/// Named measure suites.
pub fn suite(name: &str) -> Result<Vec<MeasureSpec>> {
    use MeasureId::*;
    let both = |ids: &[MeasureId]| -> Vec<MeasureSpec> {
        [Order::First, Order::Total]
            .into_iter()
            .flat_map(|o| {
                ids.iter()
                    .map(move |&id| MeasureSpec::new(id, Mode::Global, o))
            })
            .collect()
    };
    match name {
        "table1" => Ok(both(&[PickFreeze, QdmGaussian, MiGaussian, RmcCopulaSine])),
        "table2" => Ok(both(&[
            PickFreeze,
            QdmGaussian,
            QdmCopulaGaussian,
            MiGaussian,
            MiCopulaKnn,
            RmcCopulaSine,
        ])),
        "rmc" => Ok(both(&[PickFreeze, RmcEta])),
        "table3" => Ok(vec![
            MeasureSpec::new(PickFreeze, Mode::Global, Order::First),
            MeasureSpec::new(QdmGaussian, Mode::Global, Order::First),
            MeasureSpec::new(MiCopulaKnn, Mode::Global, Order::First),
            MeasureSpec::new(PickFreeze, Mode::Target, Order::First),
            MeasureSpec::new(QdmGaussian, Mode::Target, Order::First),
            MeasureSpec::new(MiCopulaKnn, Mode::Target, Order::First),
            MeasureSpec::new(PickFreeze, Mode::Hybrid, Order::First),
            MeasureSpec::new(QdmGaussian, Mode::Conditional, Order::First),
            MeasureSpec::new(MiCopulaKnn, Mode::Conditional, Order::First),
        ]),
        other => Err(Error::InvalidParameter(format!(
            "unknown suite {other:?}; expected table1, table2, rmc or table3"
        ))),
    }
}

/// Ranking used for ordering proportions when the model defines one.
pub fn default_reference_ranking(model: &ModelSpec) -> Option<Vec<String>> {
    match model {
        ModelSpec::SobolG { a } => {
            let mut idx: Vec<usize> = (0..a.len()).collect();
            idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
            let strict = idx.windows(2).all(|w| a[w[0]] < a[w[1]]);
            strict.then(|| idx.iter().map(|i| format!("X{}", i + 1)).collect())
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(rep: usize, group: &str, value: Option<f64>) -> SensitivityResult {
        SensitivityResult {
            schema: SCHEMA_VERSION,
            measure: MeasureId::QdmGaussian,
            mode: Mode::Global,
            order: Order::First,
            group: group.into(),
            value,
            n: 10,
            repetition: rep,
            seed: 0,
            clamped: false,
            out_of_range: false,
            unavailable: false,
            error: None,
            reference: false,
        }
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ordering_examples() {
        let reference = names(&["A", "B", "C"]);
        let all_right: Vec<_> = (0..3)
            .flat_map(|r| {
                vec![
                    res(r, "A", Some(3.0)),
                    res(r, "B", Some(2.0)),
                    res(r, "C", Some(1.0)),
                ]
            })
            .collect();
        assert_eq!(ordering_proportion(&all_right, &reference).unwrap(), 1.0);
        let ties: Vec<_> = (0..3)
            .flat_map(|r| {
                vec![
                    res(r, "A", Some(1.0)),
                    res(r, "B", Some(1.0)),
                    res(r, "C", Some(1.0)),
                ]
            })
            .collect();
        assert_eq!(ordering_proportion(&ties, &reference).unwrap(), 0.0);
        let mixed = vec![
            res(0, "A", Some(3.0)),
            res(0, "B", Some(2.0)),
            res(0, "C", Some(1.0)),
            res(1, "A", Some(1.0)),
            res(1, "B", Some(2.0)),
            res(1, "C", Some(0.0)),
            res(2, "A", Some(3.0)),
            res(2, "B", None),
            res(2, "C", Some(0.0)),
            res(3, "A", Some(3.0)),
            res(3, "B", Some(2.0)),
            res(3, "C", Some(1.0)),
        ];
        assert_eq!(ordering_proportion(&mixed, &reference).unwrap(), 0.5);
        let missing = vec![res(0, "A", Some(1.0)), res(0, "B", Some(0.0))];
        assert!(ordering_proportion(&missing, &reference).is_err());
    }

    #[test]
    fn ordering_ignores_monotone_transforms() {
        let reference = names(&["A", "B"]);
        let base = vec![
            res(0, "A", Some(0.3)),
            res(0, "B", Some(0.1)),
            res(1, "A", Some(0.2)),
            res(1, "B", Some(0.4)),
        ];
        let shifted: Vec<_> = base
            .iter()
            .map(|r| SensitivityResult {
                value: r.value.map(|v| (5.0 * v).exp() - 2.0),
                ..r.clone()
            })
            .collect();
        assert_eq!(
            ordering_proportion(&base, &reference).unwrap(),
            ordering_proportion(&shifted, &reference).unwrap()
        );
    }

    #[test]
    fn cardinality_and_determinism() {
        let mut cfg = ExperimentConfig::new(
            ModelSpec::sobol_g_default(),
            suite("table1").unwrap(),
            vec![50, 60],
            2,
            11,
        );
        cfg.measures.retain(|m| m.id != MeasureId::MiGaussian);
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(a.len(), cfg.measures.len() * 4 * 2 * 2);
        assert_eq!(a, run_experiment(&cfg).unwrap());
        assert!(a.iter().all(|r| r.value.is_some() || r.error.is_some()));
    }

    #[test]
    fn summaries_and_references() {
        let one = vec![res(0, "A", Some(0.25))];
        let rows = summarize(&one);
        let s = rows[0].summary.as_ref().unwrap();
        assert!(s.min == 0.25 && s.q1 == 0.25 && s.median == 0.25 && s.q3 == 0.25 && s.max == 0.25);

        let cfg = ExperimentConfig::new(
            ModelSpec::ishigami_default(),
            vec![MeasureSpec::new(
                MeasureId::PickFreeze,
                Mode::Global,
                Order::First,
            )],
            vec![100],
            1,
            3,
        );
        let r1 = asymptotic_reference(&cfg, 10_000, 10).unwrap();
        let r2 = asymptotic_reference(&cfg, 10_000, 10).unwrap();
        assert_eq!(r1, r2);
        for (r, exact) in r1.iter().zip([0.40, 0.29, 0.0]) {
            assert!(
                (r.median.unwrap() - exact).abs() < 0.02,
                "{}: {:?}",
                r.group,
                r.median
            );
        }
    }

    #[test]
    fn failed_cells_have_no_reference() {
        let failed = vec![res(0, "A", None), res(1, "A", None), res(0, "B", Some(0.5))];
        let refs = reference_medians(&failed);
        assert_eq!(refs[0].median, None);
        assert_eq!(refs[0].failures, 2);
        assert_eq!(refs[1].median, Some(0.5));
        let rows = summarize(&failed);
        assert!(rows[0].summary.is_none() && rows[0].count == 0);
    }

    #[test]
    fn incompatible_and_suites() {
        let cfg = ExperimentConfig::new(
            ModelSpec::ishigami_default(),
            vec![MeasureSpec::new(
                MeasureId::PickFreeze,
                Mode::Conditional,
                Order::First,
            )],
            vec![40],
            1,
            0,
        );
        let r = run_experiment(&cfg).unwrap();
        assert!(r
            .iter()
            .all(|r| r.value.is_none() && r.error.as_deref().unwrap().contains("incompatible")));
        for s in ["table1", "table2", "rmc", "table3"] {
            assert!(!suite(s).unwrap().is_empty());
        }
        assert!(suite("nope").is_err());
        assert_eq!(
            default_reference_ranking(&ModelSpec::sobol_g_default()).unwrap(),
            names(&["X1", "X2", "X3", "X4"])
        );
    }
}
