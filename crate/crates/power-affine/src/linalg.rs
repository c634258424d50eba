//! Validated dense nonnegative linear algebra.
//!
//! Everything downstream runs on small dense matrices, so the types here trade
//! speed for explicit validation: a [`NonnegMatrix`] has been checked entrywise
//! at construction and the solver modules rely on that guarantee instead of
//! re-checking inside loops. The central routine is [`perron`], which computes
//! the spectral radius of an irreducible nonnegative matrix together with its
//! right and left eigenvectors and a two-sided error certificate.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Errors from validation and eigen computations in this module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix has no entries")]
    EmptyMatrix,
    #[error("matrix is not square: {rows} rows but row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("vector has no entries")]
    EmptyVector,
    #[error("component {index} is {value}, expected > 0")]
    NonPositiveComponent { index: usize, value: f64 },
    #[error("component {index} is {value}, expected >= 0")]
    NegativeComponent { index: usize, value: f64 },
    #[error("non-finite component at index {index}")]
    NonFiniteComponent { index: usize },
    #[error("matrix is not irreducible")]
    NotIrreducible,
    #[error("dimension mismatch: matrix is {n}x{n}, vector has length {len}")]
    DimensionMismatch { n: usize, len: usize },
    #[error(
        "power iteration did not converge within {max_iters} iterations (certificate gap {gap:e})"
    )]
    NoConvergence { max_iters: usize, gap: f64 },
}

/// Dense square matrix with finite nonnegative entries.
///
/// Stored row-major. Construction validates every entry, so arithmetic on an
/// existing value cannot observe a negative or NaN entry.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl NonnegMatrix {
    /// Validates a square array of rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LinalgError::NotSquare {
                    rows: n,
                    row: i,
                    len: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(LinalgError::NonFiniteEntry { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(LinalgError::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                entries.push(v);
            }
        }
        Ok(Self { n, entries })
    }

    /// Builds an `n` by `n` matrix from an entry function.
    ///
    /// Intended for model builders whose entries are positive by construction;
    /// the same validation as [`NonnegMatrix::from_rows`] still applies.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, LinalgError> {
        let rows = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Rows as owned vectors, the inverse of [`NonnegMatrix::from_rows`].
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Matrix-vector product `M v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if v.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                n: self.n,
                len: v.len(),
            });
        }
        Ok((0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect())
    }

    /// Transposed product `Mᵀ v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if v.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                n: self.n,
                len: v.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            for (j, &a) in self.row(i).iter().enumerate() {
                out[j] += a * vi;
            }
        }
        Ok(out)
    }

    /// Matrix product `self * other`. Both factors must have the same order.
    pub fn matmul(&self, other: &NonnegMatrix) -> Result<NonnegMatrix, LinalgError> {
        if other.n != self.n {
            return Err(LinalgError::DimensionMismatch {
                n: self.n,
                len: other.n,
            });
        }
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Ok(NonnegMatrix { n, entries })
    }

    /// Scales every entry by a nonnegative finite factor.
    pub fn scale(&self, c: f64) -> NonnegMatrix {
        assert!(
            c.is_finite() && c >= 0.0,
            "scale factor must be finite and >= 0"
        );
        NonnegMatrix {
            n: self.n,
            entries: self.entries.iter().map(|&v| v * c).collect(),
        }
    }

    /// Scales row `i` by `d[i]`, i.e. the product `diag(d) * M`.
    pub fn scale_rows(&self, d: &[f64]) -> Result<NonnegMatrix, LinalgError> {
        if d.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                n: self.n,
                len: d.len(),
            });
        }
        for (i, &di) in d.iter().enumerate() {
            if !di.is_finite() {
                return Err(LinalgError::NonFiniteComponent { index: i });
            }
            if di < 0.0 {
                return Err(LinalgError::NegativeComponent {
                    index: i,
                    value: di,
                });
            }
        }
        let mut entries = self.entries.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                entries[i * self.n + j] *= d[i];
            }
        }
        Ok(NonnegMatrix { n: self.n, entries })
    }

    pub fn transpose(&self) -> NonnegMatrix {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.get(i, j);
            }
        }
        NonnegMatrix { n, entries }
    }

    /// Operator sup-norm: the maximum row sum.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Whether the directed graph with an edge i -> j for every positive
    /// entry (i, j) is strongly connected. For a 1x1 matrix this means the
    /// single entry is positive.
    ///
    /// Strong connectivity is checked with two reachability passes from node
    /// 0, one along edges and one against them; both must reach every node.
    pub fn is_irreducible(&self) -> bool {
        if self.n == 1 {
            return self.get(0, 0) > 0.0;
        }
        self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, reversed: bool) -> bool {
        let n = self.n;
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for (j, seen_j) in seen.iter_mut().enumerate() {
                let edge = if reversed {
                    self.get(j, i)
                } else {
                    self.get(i, j)
                };
                if edge > 0.0 && !*seen_j {
                    *seen_j = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == n
    }
}

impl Serialize for NonnegMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.n))?;
        for i in 0..self.n {
            seq.serialize_element(self.row(i))?;
        }
        seq.end()
    }
}

/// Vector with every component finite and strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PositiveVector {
    values: Vec<f64>,
}

impl PositiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self, LinalgError> {
        if values.is_empty() {
            return Err(LinalgError::EmptyVector);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(LinalgError::NonFiniteComponent { index: i });
            }
            if v <= 0.0 {
                return Err(LinalgError::NonPositiveComponent { index: i, value: v });
            }
        }
        Ok(Self { values })
    }

    /// The all-ones vector.
    pub fn ones(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        Self {
            values: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Sup-norm distance to another vector of the same length.
    pub fn sup_distance(&self, other: &PositiveVector) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    /// Componentwise scaling by a strictly positive factor.
    pub fn scale(&self, c: f64) -> PositiveVector {
        assert!(
            c.is_finite() && c > 0.0,
            "scale factor must be finite and > 0"
        );
        PositiveVector {
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// Vector with every component finite and nonnegative; may touch the
/// boundary of the cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NonnegVector {
    values: Vec<f64>,
}

impl NonnegVector {
    pub fn new(values: Vec<f64>) -> Result<Self, LinalgError> {
        if values.is_empty() {
            return Err(LinalgError::EmptyVector);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(LinalgError::NonFiniteComponent { index: i });
            }
            if v < 0.0 {
                return Err(LinalgError::NegativeComponent { index: i, value: v });
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn into_positive(self) -> Result<PositiveVector, LinalgError> {
        PositiveVector::new(self.values)
    }
}

impl From<PositiveVector> for NonnegVector {
    fn from(v: PositiveVector) -> Self {
        NonnegVector { values: v.values }
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0, |m, (&x, &y)| m.max((x - y).abs()))
}

pub(crate) fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, &v| m.max(v.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Spectral radius and eigenvector data for an irreducible nonnegative matrix.
///
/// `e` is the right eigenvector normalized to sup-norm 1; `e_star` is the left
/// eigenvector scaled so that `<e_star, e> = 1`. `residual` is the achieved
/// bound: both `‖A e − r e‖∞` and `‖Aᵀ e* − r e*‖∞` are at most `residual`.
#[derive(Debug, Clone, Serialize)]
pub struct PerronData {
    pub r: f64,
    pub e: PositiveVector,
    pub e_star: PositiveVector,
    pub residual: f64,
}

/// Default certificate gap for [`perron`].
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;

/// Default iteration budget for [`perron`], generous because the shifted
/// iteration converges geometrically once the matrix is irreducible.
pub fn default_eigen_iters(n: usize) -> usize {
    100 * n + 10_000
}

/// [`perron`] with the default tolerance and iteration budget.
pub fn perron_default(m: &NonnegMatrix) -> Result<PerronData, LinalgError> {
    perron(m, DEFAULT_EIGEN_TOL, default_eigen_iters(m.n()))
}

/// Computes the Perron root r(M) of an irreducible nonnegative matrix along
/// with right and left eigenvectors.
///
/// Power iteration runs on the shifted matrix M + I. The shift makes the
/// iteration converge even for periodic sparsity patterns (such as
/// permutation-like matrices) and changes nothing else: M + I has spectral
/// radius r(M) + 1 with the same eigenvectors. Convergence is certified with
/// the Collatz-Wielandt bounds: for any x ≫ 0,
///
/// ```text
///     min_i (Mx)_i / x_i  <=  r(M)  <=  max_i (Mx)_i / x_i
/// ```
///
/// and iteration stops once the two sides agree to within `tol`. The interval
/// midpoint is the reported root, so the achieved eigen-residual is at most
/// half the final gap for a sup-normalized iterate.
pub fn perron(m: &NonnegMatrix, tol: f64, max_iters: usize) -> Result<PerronData, LinalgError> {
    assert!(
        tol > 0.0 && tol.is_finite(),
        "tolerance must be finite and > 0"
    );
    assert!(max_iters > 0, "iteration budget must be positive");
    if !m.is_irreducible() {
        return Err(LinalgError::NotIrreducible);
    }

    let mut target = 0.5 * tol;
    // The left vector's rescaling to <e*, e> = 1 inflates its residual by the
    // scale factor, which is unknown until both vectors exist. Usually one
    // pass suffices; re-run with a tighter gap when it does not.
    for _ in 0..4 {
        let (r, e) = power_iterate(m, false, target, max_iters)?;
        let (_, mut u) = power_iterate(m, true, target, max_iters)?;
        let inner = dot(&u, &e);
        debug_assert!(inner > 0.0, "positive vectors have positive inner product");
        for v in &mut u {
            *v /= inner;
        }
        let res_right = eigen_residual(m, false, &e, r);
        let res_left = eigen_residual(m, true, &u, r);
        let residual = res_right.max(res_left);
        if residual <= tol {
            let e = PositiveVector::new(e).expect("iterates stay strictly positive");
            let e_star = PositiveVector::new(u).expect("iterates stay strictly positive");
            return Ok(PerronData {
                r,
                e,
                e_star,
                residual,
            });
        }
        target *= 0.25 * (tol / residual).min(1.0);
    }
    Err(LinalgError::NoConvergence {
        max_iters,
        gap: tol,
    })
}

/// One-sided power iteration on M + I with Collatz-Wielandt stopping.
/// Returns the root of M (shift removed) and the sup-normalized iterate.
fn power_iterate(
    m: &NonnegMatrix,
    transposed: bool,
    gap_target: f64,
    max_iters: usize,
) -> Result<(f64, Vec<f64>), LinalgError> {
    let n = m.n();
    let mut x = vec![1.0; n];
    let mut gap = f64::INFINITY;
    for _ in 0..max_iters {
        let mut sx = if transposed {
            m.apply_transpose(&x).expect("dimensions fixed by caller")
        } else {
            m.apply(&x).expect("dimensions fixed by caller")
        };
        for i in 0..n {
            sx[i] += x[i];
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for i in 0..n {
            let ratio = sx[i] / x[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        gap = hi - lo;
        if gap <= gap_target {
            let norm = sup_norm(&x);
            for v in &mut x {
                *v /= norm;
            }
            return Ok((0.5 * (lo + hi) - 1.0, x));
        }
        let norm = sup_norm(&sx);
        for v in &mut sx {
            *v /= norm;
        }
        x = sx;
    }
    Err(LinalgError::NoConvergence { max_iters, gap })
}

fn eigen_residual(m: &NonnegMatrix, transposed: bool, v: &[f64], r: f64) -> f64 {
    let mv = if transposed {
        m.apply_transpose(v).expect("dimensions fixed by caller")
    } else {
        m.apply(v).expect("dimensions fixed by caller")
    };
    mv.iter()
        .zip(v)
        .fold(0.0, |acc, (&a, &b)| acc.max((a - r * b).abs()))
}

/// Gelfand-style upper estimate `‖Mᵏ‖^{1/k}` in the max-row-sum norm.
///
/// For every k >= 1 this dominates the spectral radius and converges to it as
/// k grows, which makes it a cheap cross-check on [`perron`] that shares no
/// code with the power iteration. Powers are accumulated with row-sum
/// rescaling so large k cannot overflow.
pub fn gelfand_estimate(m: &NonnegMatrix, k: u32) -> f64 {
    assert!(k >= 1, "power must be at least 1");
    let mut ln_total = 0.0;
    let mut p = m.clone();
    for step in 0..k {
        if step > 0 {
            p = p.matmul(m).expect("same order by construction");
        }
        let c = p.max_row_sum();
        if c == 0.0 {
            return 0.0;
        }
        p = p.scale(1.0 / c);
        ln_total += c.ln();
    }
    (ln_total / f64::from(k)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Spectral radius of a nonnegative 2x2 matrix by the characteristic
    /// polynomial; the test-side oracle for `perron`.
    fn radius_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
        0.5 * ((a + d) + ((a - d).powi(2) + 4.0 * b * c).sqrt())
    }

    fn mat(rows: &[&[f64]]) -> NonnegMatrix {
        NonnegMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn from_rows_rejects_bad_input() {
        assert_eq!(
            NonnegMatrix::from_rows(vec![]),
            Err(LinalgError::EmptyMatrix)
        );
        assert_eq!(
            NonnegMatrix::from_rows(vec![vec![1.0], vec![1.0, 2.0]]),
            Err(LinalgError::NotSquare {
                rows: 2,
                row: 0,
                len: 1
            })
        );
        assert!(matches!(
            NonnegMatrix::from_rows(vec![vec![1.0, -0.5], vec![0.0, 1.0]]),
            Err(LinalgError::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            NonnegMatrix::from_rows(vec![vec![f64::NAN]]),
            Err(LinalgError::NonFiniteEntry { row: 0, col: 0 })
        ));
    }

    #[test]
    fn vector_validation() {
        assert!(PositiveVector::new(vec![1.0, 2.0]).is_ok());
        assert!(matches!(
            PositiveVector::new(vec![1.0, 0.0]),
            Err(LinalgError::NonPositiveComponent { index: 1, value }) if value == 0.0
        ));
        assert!(matches!(
            PositiveVector::new(vec![f64::INFINITY]),
            Err(LinalgError::NonFiniteComponent { index: 0 })
        ));
        assert_eq!(PositiveVector::new(vec![]), Err(LinalgError::EmptyVector));

        let z = NonnegVector::new(vec![0.0, 1.0]).unwrap();
        assert!(!z.is_strictly_positive());
        assert!(z.into_positive().is_err());
        assert!(matches!(
            NonnegVector::new(vec![-1.0]),
            Err(LinalgError::NegativeComponent { index: 0, .. })
        ));
    }

    #[test]
    fn apply_checks_dimensions() {
        let m = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(m.apply(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert_eq!(m.apply_transpose(&[1.0, 1.0]).unwrap(), vec![4.0, 6.0]);
        assert_eq!(
            m.apply(&[1.0]),
            Err(LinalgError::DimensionMismatch { n: 2, len: 1 })
        );
    }

    #[test]
    fn irreducibility_cases() {
        // Two-cycle: strongly connected.
        assert!(mat(&[&[0.0, 1.0], &[1.0, 0.0]]).is_irreducible());
        // Upper triangular: node 1 never reaches node 0.
        assert!(!mat(&[&[1.0, 1.0], &[0.0, 1.0]]).is_irreducible());
        // Row of zeros: node 1 has no outgoing edge at all.
        assert!(!mat(&[&[0.0, 1.0], &[0.0, 0.0]]).is_irreducible());
        // 1x1: positive scalar required.
        assert!(mat(&[&[2.0]]).is_irreducible());
        assert!(!mat(&[&[0.0]]).is_irreducible());
        // 3-cycle.
        assert!(mat(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]).is_irreducible());
    }

    #[test]
    fn perron_on_a_two_cycle() {
        // Characteristic polynomial of [[0,2],[2,0]] gives r = 2 exactly; the
        // sparsity pattern is periodic, which is what the +I shift handles.
        let m = mat(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let pd = perron(&m, 1e-12, 10_000).unwrap();
        assert!((pd.r - 2.0).abs() <= 1e-11, "r = {}", pd.r);
        assert!((pd.e.get(0) - 1.0).abs() <= 1e-9);
        assert!((pd.e.get(1) - 1.0).abs() <= 1e-9);
        // <e*, e> = 1 with e = (1,1) forces e* = (1/2, 1/2).
        assert!((pd.e_star.get(0) - 0.5).abs() <= 1e-9);
        assert!(pd.residual <= 1e-12);
    }

    #[test]
    fn perron_matches_closed_form_on_fixed_2x2() {
        let (a, b, c, d) = (0.3, 1.2, 0.7, 0.1);
        let m = mat(&[&[a, b], &[c, d]]);
        let pd = perron(&m, 1e-13, 10_000).unwrap();
        let expected = radius_2x2(a, b, c, d);
        assert!(
            (pd.r - expected).abs() <= 1e-11,
            "r = {}, closed form = {expected}",
            pd.r
        );
    }

    #[test]
    fn perron_scalar_is_exact() {
        let pd = perron(&mat(&[&[3.0]]), 1e-12, 10).unwrap();
        assert_eq!(pd.r, 3.0);
        assert_eq!(pd.e.as_slice(), &[1.0]);
        assert_eq!(pd.e_star.as_slice(), &[1.0]);
    }

    #[test]
    fn perron_of_stochastic_matrix_is_one() {
        let m = mat(&[&[0.2, 0.5, 0.3], &[0.4, 0.1, 0.5], &[0.25, 0.25, 0.5]]);
        let pd = perron(&m, 1e-13, 100_000).unwrap();
        assert!((pd.r - 1.0).abs() <= 1e-12, "r = {}", pd.r);
        // Right eigenvector of a stochastic matrix is constant.
        for i in 0..3 {
            assert!((pd.e.get(i) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn perron_eigen_residuals_match_reported_bound() {
        let m = mat(&[&[0.1, 0.9, 0.2], &[0.3, 0.0, 0.7], &[0.5, 0.4, 0.1]]);
        let pd = perron(&m, 1e-12, 100_000).unwrap();
        let re = m.apply(pd.e.as_slice()).unwrap();
        let worst = re
            .iter()
            .zip(pd.e.as_slice())
            .fold(0.0_f64, |acc, (&a, &b)| acc.max((a - pd.r * b).abs()));
        assert!(worst <= pd.residual);
        let le = m.apply_transpose(pd.e_star.as_slice()).unwrap();
        let worst_left = le
            .iter()
            .zip(pd.e_star.as_slice())
            .fold(0.0_f64, |acc, (&a, &b)| acc.max((a - pd.r * b).abs()));
        assert!(worst_left <= pd.residual);
        let inner = dot(pd.e_star.as_slice(), pd.e.as_slice());
        assert!((inner - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn perron_rejects_reducible_and_tiny_budget() {
        assert!(matches!(
            perron(&mat(&[&[1.0, 1.0], &[0.0, 1.0]]), 1e-12, 100),
            Err(LinalgError::NotIrreducible)
        ));
        let m = mat(&[&[0.1, 0.9, 0.2], &[0.3, 0.0, 0.7], &[0.5, 0.4, 0.1]]);
        assert!(matches!(
            perron(&m, 1e-13, 3),
            Err(LinalgError::NoConvergence { .. })
        ));
    }

    #[test]
    fn gelfand_on_the_two_cycle_is_exact() {
        // Mᵏ alternates between 2ᵏ⁻¹[[0,2],[2,0]] and 2ᵏI, so ‖Mᵏ‖ = 2ᵏ and
        // the estimate is 2 for every k.
        let m = mat(&[&[0.0, 2.0], &[2.0, 0.0]]);
        for k in 1..=6 {
            let est = gelfand_estimate(&m, k);
            assert!((est - 2.0).abs() <= 1e-12, "k = {k}: {est}");
        }
    }

    #[test]
    fn gelfand_handles_nilpotent_and_large_powers() {
        let m = mat(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(gelfand_estimate(&m, 2), 0.0);
        // Entries of order 1e3 would overflow a naive 64-power product.
        let big = mat(&[&[1e3, 2e3], &[3e3, 4e3]]);
        let est = gelfand_estimate(&big, 64);
        assert!(est.is_finite());
        let r = perron(&big, 1e-10, 100_000).unwrap().r;
        assert!(est >= r - 1e-6 * r);
    }

    #[test]
    fn matrix_serializes_as_rows() {
        let m = mat(&[&[0.0, 1.5], &[2.0, 0.0]]);
        let t = m.transpose();
        assert_eq!(t.get(0, 1), 2.0);
        assert_eq!(t.get(1, 0), 1.5);
        assert_eq!(m.to_rows(), vec![vec![0.0, 1.5], vec![2.0, 0.0]]);
    }

    fn arb_irreducible_3x3() -> impl Strategy<Value = NonnegMatrix> {
        proptest::collection::vec(0.05f64..1.0, 9).prop_map(|v| {
            NonnegMatrix::from_rows(vec![v[0..3].to_vec(), v[3..6].to_vec(), v[6..9].to_vec()])
                .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn perron_matches_closed_form_on_random_2x2(
            a in 0.05f64..2.0,
            b in 0.05f64..2.0,
            c in 0.05f64..2.0,
            d in 0.05f64..2.0,
        ) {
            let m = mat(&[&[a, b], &[c, d]]);
            let pd = perron(&m, 1e-13, 100_000).unwrap();
            let expected = radius_2x2(a, b, c, d);
            prop_assert!((pd.r - expected).abs() <= 1e-10 * (1.0 + expected));
        }

        #[test]
        fn perron_is_homogeneous(m in arb_irreducible_3x3(), c in 0.1f64..10.0) {
            let pd = perron(&m, 1e-12, 100_000).unwrap();
            let pd_scaled = perron(&m.scale(c), 1e-12, 100_000).unwrap();
            prop_assert!((pd_scaled.r - c * pd.r).abs() <= 1e-9 * (1.0 + c * pd.r));
        }

        #[test]
        fn collatz_wielandt_ratios_bound_the_root(
            m in arb_irreducible_3x3(),
            x in proptest::collection::vec(0.1f64..10.0, 3),
        ) {
            let pd = perron(&m, 1e-12, 100_000).unwrap();
            let mx = m.apply(&x).unwrap();
            let ratios: Vec<f64> = mx.iter().zip(&x).map(|(&a, &b)| a / b).collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0_f64, f64::max);
            prop_assert!(lo <= pd.r + 1e-9 && pd.r <= hi + 1e-9);
        }

        #[test]
        fn gelfand_dominates_the_root(m in arb_irreducible_3x3(), k in 1u32..40) {
            let pd = perron(&m, 1e-12, 100_000).unwrap();
            prop_assert!(gelfand_estimate(&m, k) >= pd.r - 1e-9 * (1.0 + pd.r));
        }

        #[test]
        fn irreducibility_is_permutation_invariant(
            m in arb_irreducible_3x3(),
            swap in 0usize..3,
        ) {
            // Relabeling states must not change the verdict; also exercise a
            // reducible pattern under the same permutation.
            let perm: Vec<usize> = match swap {
                0 => vec![1, 0, 2],
                1 => vec![2, 1, 0],
                _ => vec![0, 2, 1],
            };
            let permuted = NonnegMatrix::from_fn(3, |i, j| m.get(perm[i], perm[j])).unwrap();
            prop_assert_eq!(m.is_irreducible(), permuted.is_irreducible());

            let reducible = NonnegMatrix::from_fn(3, |i, j| {
                if i <= j { m.get(i, j) } else { 0.0 }
            })
            .unwrap();
            let reducible_permuted =
                NonnegMatrix::from_fn(3, |i, j| reducible.get(perm[i], perm[j])).unwrap();
            prop_assert!(!reducible.is_irreducible());
            prop_assert!(!reducible_permuted.is_irreducible());
        }
    }
}
