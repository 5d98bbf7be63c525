//! Density and probability estimates at arbitrary points: Gaussian kernel
//! density estimation, truncated nearest-neighbor densities on the unit
//! cube, empirical frequencies, and their categorical mixtures.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::row_major;
use crate::sample::{
    effective_sample_size, normalized_weights, resolve_weights, FactorKind, Matrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum DensityEstimator {
    /// Diagonal Silverman bandwidths, product with indicator kernels on
    /// categorical columns.
    GaussianKde,
    /// `L∞` nearest-neighbor balls clipped to `[0,1]^q`; `k` defaults to
    /// `⌈m^{4/5}⌉` for `m` points of positive weight.
    TruncatedKnnCopula { k: Option<usize> },
}

impl Default for DensityEstimator {
    fn default() -> Self {
        DensityEstimator::GaussianKde
    }
}

pub fn default_knn_k(n: usize) -> usize {
    ((n as f64).powf(0.8).ceil() as usize).max(1)
}

/// Silverman's rule `h_j = σ_j (4 / ((q + 2) n))^{1/(q+4)}` for the listed
/// columns, with weighted standard deviations and Kish effective size under
/// weights. `q` is the number of listed columns.
pub fn silverman_bandwidths(
    points: &Matrix,
    columns: &[usize],
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "density estimation needs n ≥ 2, got {n}"
        )));
    }
    let raw = resolve_weights(n, weights)?;
    let w = normalized_weights(n, weights)?;
    let n_eff = effective_sample_size(&raw);
    let q = columns.len() as f64;
    let factor = (4.0 / ((q + 2.0) * n_eff)).powf(1.0 / (q + 4.0));
    columns
        .iter()
        .map(|&c| {
            let col = points.column(c);
            let mean: f64 = (0..n).map(|i| w[i] * col[i]).sum();
            let var: f64 = (0..n)
                .map(|i| w[i] * (col[i] - mean) * (col[i] - mean))
                .sum();
            let sd = var.sqrt();
            if !(sd > 0.0) {
                return Err(Error::DegenerateDimension(c));
            }
            Ok(sd * factor)
        })
        .collect()
}

fn check_eval(points: &Matrix, eval_at: &Matrix) -> Result<()> {
    if points.ncols() != eval_at.ncols() {
        return Err(Error::DimensionMismatch {
            what: "evaluation point dimension",
            expected: points.ncols(),
            got: eval_at.ncols(),
        });
    }
    if points.iter().chain(eval_at.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("density data"));
    }
    Ok(())
}

/// Gaussian KDE with diagonal Silverman bandwidths over all columns.
pub fn kde_density(points: &Matrix, eval_at: &Matrix, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    check_eval(points, eval_at)?;
    let q = points.ncols();
    let cols: Vec<usize> = (0..q).collect();
    let h = silverman_bandwidths(points, &cols, weights)?;
    let kinds = vec![FactorKind::Continuous; q];
    product_kernel_density(points, &kinds, &h, eval_at, weights)
}

/// `Σ_j ŵ_j Π_d k_d(z_d − x_jd)` with normalized Gaussian factors on
/// continuous columns (bandwidths in column order) and indicators on
/// categorical ones.
pub fn product_kernel_density(
    points: &Matrix,
    kinds: &[FactorKind],
    bandwidths: &[f64],
    eval_at: &Matrix,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_eval(points, eval_at)?;
    let (n, q) = points.shape();
    let w = normalized_weights(n, weights)?;
    let kernel = ProductKernel::new(kinds, bandwidths)?;
    let xr = row_major(points);
    let zr = row_major(eval_at);
    let norm = kernel.normalization();
    Ok((0..eval_at.nrows())
        .map(|e| {
            let z = &zr[e * q..(e + 1) * q];
            let s: f64 = (0..n)
                .filter(|&j| w[j] > 0.0)
                .map(|j| w[j] * kernel.eval(z, &xr[j * q..(j + 1) * q]))
                .sum();
            s * norm
        })
        .collect())
}

/// Unnormalized product kernel: `exp(−Σ (Δ_d/h_d)²/2)` times indicators.
#[derive(Debug, Clone)]
pub(crate) struct ProductKernel {
    /// `1/h` for continuous columns, `None` for categorical ones.
    inv_h: Vec<Option<f64>>,
}

impl ProductKernel {
    pub(crate) fn new(kinds: &[FactorKind], bandwidths: &[f64]) -> Result<Self> {
        let mut it = bandwidths.iter();
        let inv_h = kinds
            .iter()
            .map(|k| match k {
                FactorKind::Categorical => Ok(None),
                FactorKind::Continuous => match it.next() {
                    Some(&h) if h > 0.0 && h.is_finite() => Ok(Some(1.0 / h)),
                    Some(&h) => Err(Error::InvalidParameter(format!(
                        "bandwidth {h} must be positive"
                    ))),
                    None => Err(Error::DimensionMismatch {
                        what: "bandwidths",
                        expected: kinds
                            .iter()
                            .filter(|k| **k == FactorKind::Continuous)
                            .count(),
                        got: bandwidths.len(),
                    }),
                },
            })
            .collect::<Result<Vec<_>>>()?;
        if it.next().is_some() {
            return Err(Error::DimensionMismatch {
                what: "bandwidths",
                expected: inv_h.iter().filter(|h| h.is_some()).count(),
                got: bandwidths.len(),
            });
        }
        Ok(Self { inv_h })
    }

    pub(crate) fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((x, y), ih) in a.iter().zip(b).zip(&self.inv_h) {
            match ih {
                Some(ih) => {
                    let u = (x - y) * ih;
                    s += u * u;
                }
                None => {
                    if x != y {
                        return 0.0;
                    }
                }
            }
        }
        (-0.5 * s).exp()
    }

    /// Constant turning `eval` into a normalized density kernel.
    pub(crate) fn normalization(&self) -> f64 {
        self.inv_h
            .iter()
            .flatten()
            .map(|ih| ih / (2.0 * PI).sqrt())
            .product()
    }
}

/// Weighted empirical probability of each evaluation row.
pub fn frequency(points: &Matrix, eval_at: &Matrix, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    check_eval(points, eval_at)?;
    let (n, q) = points.shape();
    let w = normalized_weights(n, weights)?;
    let mut table: HashMap<Vec<u64>, f64> = HashMap::new();
    let xr = row_major(points);
    for j in 0..n {
        *table.entry(key(&xr[j * q..(j + 1) * q])).or_insert(0.0) += w[j];
    }
    let zr = row_major(eval_at);
    Ok((0..eval_at.nrows())
        .map(|e| {
            table
                .get(&key(&zr[e * q..(e + 1) * q]))
                .copied()
                .unwrap_or(0.0)
        })
        .collect())
}

fn key(v: &[f64]) -> Vec<u64> {
    // +0.0 and −0.0 are the same label.
    v.iter().map(|x| (x + 0.0).to_bits()).collect()
}

/// Nearest-neighbor density on `[0,1]^q`: the weight fraction inside the
/// `L∞` ball reaching the `k`-th neighbor, over the ball's volume clipped to
/// the cube. Sample points count as their own neighbors.
pub fn knn_copula_density(
    points: &Matrix,
    eval_at: &Matrix,
    k: Option<usize>,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_eval(points, eval_at)?;
    check_unit_cube(points)?;
    check_unit_cube(eval_at)?;
    let n = points.nrows();
    let w = normalized_weights(n, weights)?;
    let active: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    let knn = KnnSet::new(points, &active, &w, k)?;
    let zr = row_major(eval_at);
    let q = eval_at.ncols();
    (0..eval_at.nrows())
        .map(|e| knn.density(&zr[e * q..(e + 1) * q]))
        .collect()
}

fn check_unit_cube(m: &Matrix) -> Result<()> {
    if m.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter(
            "nearest-neighbor copula density needs points in [0,1]^q".into(),
        ));
    }
    Ok(())
}

/// Points of positive weight with their renormalized weights.
struct KnnSet {
    rows: Vec<f64>,
    q: usize,
    weights: Vec<f64>,
    uniform: bool,
    k: usize,
    fraction: f64,
}

impl KnnSet {
    fn new(points: &Matrix, active: &[usize], w: &[f64], k: Option<usize>) -> Result<Self> {
        let q = points.ncols();
        let m = active.len();
        let k = match k {
            Some(k) => k,
            None => default_knn_k(m).min(m.saturating_sub(1)).max(1),
        };
        if k == 0 || (k >= m && m > 1) || m == 0 {
            return Err(Error::InvalidParameter(format!(
                "nearest-neighbor count {k} out of range for {m} points"
            )));
        }
        let total: f64 = active.iter().map(|&i| w[i]).sum();
        let weights: Vec<f64> = active.iter().map(|&i| w[i] / total).collect();
        let uniform = active.iter().all(|&i| w[i] == w[active[0]]);
        let mut rows = Vec::with_capacity(m * q);
        for &i in active {
            rows.extend(points.row(i).iter());
        }
        Ok(Self {
            rows,
            q,
            weights,
            uniform,
            k,
            fraction: k as f64 / m as f64,
        })
    }

    fn density(&self, z: &[f64]) -> Result<f64> {
        let q = self.q;
        let m = self.weights.len();
        let dist: Vec<f64> = (0..m)
            .map(|j| {
                self.rows[j * q..(j + 1) * q]
                    .iter()
                    .zip(z)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let mut r = if self.uniform {
            let mut d = dist.clone();
            let (_, &mut r, _) = d.select_nth_unstable_by(self.k - 1, f64::total_cmp);
            r
        } else {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
            let target = self.fraction * (1.0 - 1e-12);
            let mut cum = 0.0;
            let mut r = dist[order[m - 1]];
            for &j in &order {
                cum += self.weights[j];
                if cum >= target {
                    r = dist[j];
                    break;
                }
            }
            r
        };
        if r == 0.0 {
            // Ties at the evaluation point: widen to the nearest distinct neighbor.
            r = dist
                .iter()
                .copied()
                .filter(|d| *d > 0.0)
                .fold(f64::INFINITY, f64::min);
            if !r.is_finite() {
                return Err(Error::Unavailable(
                    "all neighbors coincide with the evaluation point".into(),
                ));
            }
        }
        let mass: f64 = if self.uniform {
            dist.iter().filter(|d| **d <= r).count() as f64 / m as f64
        } else {
            dist.iter()
                .zip(&self.weights)
                .filter(|(d, _)| **d <= r)
                .map(|(_, w)| w)
                .sum()
        };
        let volume: f64 = z
            .iter()
            .map(|&c| (c + r).min(1.0) - (c - r).max(0.0))
            .product();
        Ok(mass / volume)
    }
}

/// Nearest-neighbor density with categorical columns handled by conditioning:
/// `P̂(c) f̂(x | c)`, the continuous part estimated within category `c`.
pub fn mixed_knn_density(
    points: &Matrix,
    kinds: &[FactorKind],
    eval_at: &Matrix,
    k: Option<usize>,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_eval(points, eval_at)?;
    if kinds.len() != points.ncols() {
        return Err(Error::DimensionMismatch {
            what: "column kinds",
            expected: points.ncols(),
            got: kinds.len(),
        });
    }
    let cat: Vec<usize> = (0..kinds.len())
        .filter(|&c| kinds[c] == FactorKind::Categorical)
        .collect();
    let cont: Vec<usize> = (0..kinds.len())
        .filter(|&c| kinds[c] == FactorKind::Continuous)
        .collect();
    if cat.is_empty() {
        return knn_copula_density(points, eval_at, k, weights);
    }
    let pick =
        |m: &Matrix, cols: &[usize]| Matrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])]);
    let pc = pick(points, &cat);
    let ec = pick(eval_at, &cat);
    let prob = frequency(&pc, &ec, weights)?;
    if cont.is_empty() {
        return Ok(prob);
    }
    let px = pick(points, &cont);
    let ex = pick(eval_at, &cont);
    check_unit_cube(&px)?;
    check_unit_cube(&ex)?;

    let n = points.nrows();
    let w = normalized_weights(n, weights)?;
    let mut cells: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for i in 0..n {
        if w[i] > 0.0 {
            let r: Vec<f64> = pc.row(i).iter().copied().collect();
            cells.entry(key(&r)).or_default().push(i);
        }
    }
    let m_total: usize = cells.values().map(Vec::len).sum();
    let mut sets: HashMap<Vec<u64>, KnnSet> = HashMap::new();
    let mut out = Vec::with_capacity(eval_at.nrows());
    for e in 0..eval_at.nrows() {
        if prob[e] == 0.0 {
            out.push(0.0);
            continue;
        }
        let r: Vec<f64> = ec.row(e).iter().copied().collect();
        let kk = key(&r);
        if !sets.contains_key(&kk) {
            let members = &cells[&kk];
            let kc = k.map(|k| {
                ((k as f64 * members.len() as f64 / m_total as f64).round() as usize).max(1)
            });
            sets.insert(kk.clone(), KnnSet::new(&px, members, &w, kc)?);
        }
        let z: Vec<f64> = ex.row(e).iter().copied().collect();
        out.push(prob[e] * sets[&kk].density(&z)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{generate_design, DesignSpec, Marginal, Scheme};

    fn unif(n: usize, q: usize, seed: u64) -> Matrix {
        generate_design(&DesignSpec::new(
            n,
            Scheme::PseudoRandom,
            seed,
            vec![Marginal::Uniform { a: 0.0, b: 1.0 }; q],
        ))
        .unwrap()
    }

    #[test]
    fn silverman_rule() {
        let x = Matrix::from_column_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let h = silverman_bandwidths(&x, &[0], None).unwrap();
        let sd = 1.25f64.sqrt();
        assert!((h[0] - sd * (4.0f64 / (3.0 * 4.0)).powf(0.2)).abs() < 1e-15);
        let c = Matrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]);
        assert!(silverman_bandwidths(&c, &[0], None).is_err());
    }

    #[test]
    fn tight_cluster_peak() {
        let x = Matrix::from_column_slice(3, 1, &[0.0, 1e-3, -1e-3]);
        let h = silverman_bandwidths(&x, &[0], None).unwrap()[0];
        let f = kde_density(&x, &Matrix::from_column_slice(1, 1, &[0.0]), None).unwrap()[0];
        let peak = 1.0 / (h * (2.0 * PI).sqrt());
        assert!(f > 0.5 * peak && f <= peak);
    }

    #[test]
    fn normal_density_at_zero() {
        let x = generate_design(&DesignSpec::new(
            10_000,
            Scheme::PseudoRandom,
            1,
            vec![Marginal::StandardNormal],
        ))
        .unwrap();
        let f = kde_density(&x, &Matrix::from_column_slice(1, 1, &[0.0]), None).unwrap()[0];
        let exact = 1.0 / (2.0 * PI).sqrt();
        assert!((f / exact - 1.0).abs() < 0.1, "{f}");
        let ones = vec![1.0; 10_000];
        let fw = kde_density(&x, &Matrix::from_column_slice(1, 1, &[0.0]), Some(&ones)).unwrap()[0];
        assert_eq!(f.to_bits(), fw.to_bits());
    }

    #[test]
    fn knn_uniform_interior_and_corner() {
        let x = unif(10_000, 2, 2);
        let z = Matrix::from_row_slice(3, 2, &[0.5, 0.5, 0.0, 0.0, 1.0, 1.0]);
        let f = knn_copula_density(&x, &z, None, None).unwrap();
        for v in f {
            assert!((v - 1.0).abs() < 0.25, "{v}");
        }
        let all = knn_copula_density(&x, &z, Some(9_999), None).unwrap();
        for v in all {
            assert!((v - 1.0).abs() < 0.05, "{v}");
        }
        assert!(knn_copula_density(&x, &z, Some(10_000), None).is_err());
        assert!(knn_copula_density(&x, &z, Some(0), None).is_err());
    }

    #[test]
    fn knn_unit_weights_bitwise() {
        let x = unif(300, 2, 3);
        let a = knn_copula_density(&x, &x, None, None).unwrap();
        let b = knn_copula_density(&x, &x, None, Some(&vec![1.0; 300])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn knn_weighted_radius() {
        // Four points on a line; zero weight on the nearest one removes it.
        let x = Matrix::from_column_slice(4, 1, &[0.5, 0.55, 0.7, 0.9]);
        let z = Matrix::from_column_slice(1, 1, &[0.5]);
        let w = [1.0, 0.0, 1.0, 1.0];
        let f = knn_copula_density(&x, &z, Some(2), Some(&w)).unwrap()[0];
        // Active {0.5, 0.7, 0.9}: 2nd neighbor at 0.2, mass 2/3, volume 0.4.
        assert!((f - (2.0 / 3.0) / 0.4).abs() < 1e-12);
        let w = [1.0, 2.0, 1.0, 1.0];
        let f = knn_copula_density(&x, &z, Some(2), Some(&w)).unwrap()[0];
        // Fraction 2/4 of normalized mass {0.2, 0.4, 0.2, 0.2} reached at 0.55.
        assert!((f - 0.6 / 0.1).abs() < 1e-12);
    }

    #[test]
    fn frequencies_and_mixtures() {
        let x = Matrix::from_column_slice(4, 1, &[0.0, 1.0, 1.0, 1.0]);
        let p = frequency(&x, &Matrix::from_column_slice(2, 1, &[1.0, 2.0]), None).unwrap();
        assert_eq!(p, vec![0.75, 0.0]);

        let pts = Matrix::from_row_slice(
            6,
            2,
            &[0.0, 0.25, 0.0, 0.5, 0.0, 0.75, 1.0, 0.6, 1.0, 0.8, 1.0, 1.0],
        );
        let kinds = [FactorKind::Categorical, FactorKind::Continuous];
        let z = Matrix::from_row_slice(1, 2, &[0.0, 0.5]);
        let f = mixed_knn_density(&pts, &kinds, &z, None, None).unwrap()[0];
        // Cell {0.25, 0.5, 0.75}: k = 2, radius 0.25 with a tie, mass 1, volume 0.5.
        assert!((f - 0.5 * 1.0 / 0.5).abs() < 1e-12);
    }
}
