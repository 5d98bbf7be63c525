//! Sample files, designs and result files.
//!
//! A sample is a CSV file with a header row plus a TOML schema naming the
//! factor and response columns; categorical factors may hold arbitrary labels.
//! Results are JSON lines, one record per value.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{OrderingRow, ReferenceValue, SensitivityResult, SummaryRow};
use crate::sample::{FactorKind, Matrix, Sample};

/// Column roles of a sample file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSchema {
    pub factors: Vec<String>,
    /// Factors treated as categorical labels.
    #[serde(default)]
    pub categorical: Vec<String>,
    pub response: Vec<String>,
}

impl SampleSchema {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self =
            toml::from_str(text).map_err(|e| Error::Parse(format!("sample schema: {e}")))?;
        if s.factors.is_empty() {
            return Err(Error::Empty("schema factors"));
        }
        if s.response.is_empty() {
            return Err(Error::Empty("schema response"));
        }
        if let Some(c) = s.categorical.iter().find(|c| !s.factors.contains(c)) {
            return Err(Error::Parse(format!(
                "categorical column {c:?} is not a factor"
            )));
        }
        Ok(s)
    }
}

/// Reads a sample from CSV text according to `schema`.
pub fn read_sample_from<R: Read>(reader: R, schema: &SampleSchema) -> Result<Sample> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("column {name:?} not found in header")))
    };
    let fcols = schema
        .factors
        .iter()
        .map(|f| position(f))
        .collect::<Result<Vec<_>>>()?;
    let rcols = schema
        .response
        .iter()
        .map(|f| position(f))
        .collect::<Result<Vec<_>>>()?;
    let kinds: Vec<FactorKind> = schema
        .factors
        .iter()
        .map(|f| {
            if schema.categorical.contains(f) {
                FactorKind::Categorical
            } else {
                FactorKind::Continuous
            }
        })
        .collect();
    let mut codes: Vec<HashMap<String, f64>> = vec![HashMap::new(); fcols.len()];
    let mut fvals = Vec::new();
    let mut rvals = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (j, &c) in fcols.iter().enumerate() {
            let cell = rec.get(c).unwrap_or("");
            let v = match kinds[j] {
                FactorKind::Categorical => {
                    let next = codes[j].len() as f64;
                    *codes[j].entry(cell.to_string()).or_insert(next)
                }
                FactorKind::Continuous => parse_number(cell, line + 2, &schema.factors[j])?,
            };
            fvals.push(v);
        }
        for (j, &c) in rcols.iter().enumerate() {
            rvals.push(parse_number(
                rec.get(c).unwrap_or(""),
                line + 2,
                &schema.response[j],
            )?);
        }
    }
    let n = fvals.len() / fcols.len().max(1);
    if n == 0 {
        return Err(Error::Empty("sample rows"));
    }
    Sample::with_names(
        Matrix::from_row_slice(n, fcols.len(), &fvals),
        Matrix::from_row_slice(n, rcols.len(), &rvals),
        kinds,
        schema.factors.clone(),
        schema.response.clone(),
    )
}

fn parse_number(cell: &str, line: usize, column: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| {
        Error::Parse(format!(
            "line {line}, column {column:?}: {cell:?} is not a number"
        ))
    })
}

/// Reads `csv_path` with the schema in `schema_path`.
pub fn read_sample(csv_path: &Path, schema_path: &Path) -> Result<Sample> {
    let schema = SampleSchema::from_toml(&std::fs::read_to_string(schema_path)?)?;
    read_sample_from(std::fs::File::open(csv_path)?, &schema)
}

/// Design matrix as CSV with the given column names.
pub fn write_design_csv<W: Write>(writer: W, design: &Matrix, names: &[String]) -> Result<()> {
    if names.len() != design.ncols() {
        return Err(Error::DimensionMismatch {
            what: "design column names",
            expected: design.ncols(),
            got: names.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(names)?;
    for row in design.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_jsonl<W: Write>(mut writer: W, results: &[SensitivityResult]) -> Result<()> {
    for r in results {
        let line = serde_json::to_string(r)?;
        writeln!(writer, "{line}")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_results_jsonl<R: BufRead>(reader: R) -> Result<Vec<SensitivityResult>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long format, one row per value, for external plotting.
pub fn write_long_csv<W: Write>(writer: W, results: &[SensitivityResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "measure",
        "mode",
        "order",
        "group",
        "n",
        "repetition",
        "value",
        "reference",
    ])?;
    for r in results {
        w.write_record([
            r.measure.as_str().to_string(),
            r.mode.as_str().to_string(),
            r.order.as_str().to_string(),
            r.group.clone(),
            r.n.to_string(),
            r.repetition.to_string(),
            opt(r.value),
            r.reference.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "measure",
        "mode",
        "order",
        "group",
        "n",
        "count",
        "failures",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "whisker_low",
        "whisker_high",
        "outliers",
    ])?;
    for r in rows {
        let s = r.summary.as_ref();
        let f = |g: fn(&crate::sample::BoxSummary) -> f64| opt(s.map(g));
        w.write_record([
            r.measure.as_str().to_string(),
            r.mode.as_str().to_string(),
            r.order.as_str().to_string(),
            r.group.clone(),
            r.n.to_string(),
            r.count.to_string(),
            r.failures.to_string(),
            f(|b| b.min),
            f(|b| b.q1),
            f(|b| b.median),
            f(|b| b.q3),
            f(|b| b.max),
            f(|b| b.whisker_low),
            f(|b| b.whisker_high),
            s.map(|b| b.outliers.len().to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reference_csv<W: Write>(writer: W, rows: &[ReferenceValue]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "measure", "mode", "order", "group", "n", "median", "failures",
    ])?;
    for r in rows {
        w.write_record([
            r.measure.as_str().to_string(),
            r.mode.as_str().to_string(),
            r.order.as_str().to_string(),
            r.group.clone(),
            r.n.to_string(),
            opt(r.median),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width text table of box-plot summaries and ordering proportions.
pub fn format_summary_table(rows: &[SummaryRow], orderings: &[OrderingRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:<11} {:<5} {:<10} {:>6} {:>5} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "measure", "mode", "order", "group", "n", "fail", "min", "q1", "median", "q3", "max"
    );
    for r in rows {
        let cells = match &r.summary {
            Some(s) => format!(
                "{:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                s.min, s.q1, s.median, s.q3, s.max
            ),
            None => format!("{:>9} {:>9} {:>9} {:>9} {:>9}", "-", "-", "-", "-", "-"),
        };
        let _ = writeln!(
            out,
            "{:<8} {:<11} {:<5} {:<10} {:>6} {:>5} {}",
            r.measure.as_str(),
            r.mode.as_str(),
            r.order.as_str(),
            r.group,
            r.n,
            r.failures,
            cells
        );
    }
    if !orderings.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<8} {:<11} {:<5} {:>6} {:>10}",
            "measure", "mode", "order", "n", "ordering"
        );
        for o in orderings {
            let _ = writeln!(
                out,
                "{:<8} {:<11} {:<5} {:>6} {:>10.2}",
                o.measure.as_str(),
                o.mode.as_str(),
                o.order.as_str(),
                o.n,
                o.proportion
            );
        }
    }
    out
}
