//! Symmetric and symmetric positive-definite matrices, the principal matrix
//! logarithm, and three distances on the SPD cone:
//!
//! * Euclidean: `||P - Q||_F`
//! * Log-Euclidean: `||log P - log Q||_F`
//! * affine-invariant: `sqrt(sum_i log^2 lambda_i)` where `lambda_i` are the
//!   eigenvalues of `P^{-1/2} Q P^{-1/2}` (the same as those of `P^{-1} Q`).
//!
//! Eigendecompositions use a cyclic Jacobi iteration, which is accurate to
//! working precision for the small matrices (p <= 16) met here.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrises `m` as `(m + m^T) / 2` after checking it is square, finite
    /// and symmetric to within `1e-10` relative.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let t = m.transpose();
        let asym = (&m - &t).norm();
        let scale = m.norm();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(asym / scale));
        }
        Ok(Self::symmetrised(m))
    }

    /// Symmetrises without checking; callers guarantee near-symmetry.
    pub(crate) fn symmetrised(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self { m: (m + t) * 0.5 }
    }

    pub fn from_fn(p: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(p, p, f))
    }

    pub fn identity(p: usize) -> Self {
        Self {
            m: DMatrix::identity(p, p),
        }
    }

    pub fn zeros(p: usize) -> Self {
        Self { m: DMatrix::zeros(p, p) }
    }

    pub fn diag(values: &[f64]) -> Self {
        let p = values.len();
        Self {
            m: DMatrix::from_fn(p, p, |i, j| if i == j { values[i] } else { 0.0 }),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.m.norm()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { m: &self.m * a }
    }

    /// `A M A^T`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "congruence by {}x{} on a {}x{} matrix",
                a.nrows(),
                a.ncols(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(Self::symmetrised(a * &self.m * a.transpose()))
    }

    fn from_eigen(vectors: &DMatrix<f64>, values: impl Iterator<Item = f64>) -> Self {
        let mut scaled = vectors.clone();
        for (mut col, v) in scaled.column_iter_mut().zip(values) {
            col *= v;
        }
        Self::symmetrised(scaled * vectors.transpose())
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
/// Each eigenvector's largest-magnitude component is positive.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPair {
    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_eigen(&self.vectors, self.values.iter().copied())
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }
}

pub fn sym_eigen(m: &SymMatrix) -> Result<EigenPair> {
    let n = m.dim();
    let mut a: Vec<f64> = m.m.iter().copied().collect(); // column-major, symmetric
    let mut v = vec![0.0; n * n];
    for k in 0..n {
        v[k * n + k] = 1.0;
    }
    let idx = |r: usize, c: usize| c * n + r;

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[idx(p, q)].abs())
            .sum();
        if off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[idx(p, q)];
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let g = 100.0 * apq.abs();
                // after a few sweeps, drop off-diagonals below the diagonal's precision
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[idx(p, q)] = 0.0;
                    a[idx(q, p)] = 0.0;
                    continue;
                }
                if apq == 0.0 {
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[idx(r, p)];
                    let arq = a[idx(r, q)];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[idx(r, p)] = new_rp;
                    a[idx(p, r)] = new_rp;
                    a[idx(r, q)] = new_rq;
                    a[idx(q, r)] = new_rq;
                }
                a[idx(p, p)] = app - t * apq;
                a[idx(q, q)] = aqq + t * apq;
                a[idx(p, q)] = 0.0;
                a[idx(q, p)] = 0.0;
                for r in 0..n {
                    let vrp = v[idx(r, p)];
                    let vrq = v[idx(r, q)];
                    v[idx(r, p)] = c * vrp - s * vrq;
                    v[idx(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[idx(y, y)].total_cmp(&a[idx(x, x)]));
    let values = order.iter().map(|&k| a[idx(k, k)]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = &v[src * n..src * n + n];
        let mut pivot = 0;
        for r in 1..n {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[(r, dst)] = sign * col[r];
        }
    }
    Ok(EigenPair { values, vectors })
}

/// A symmetric matrix with strictly positive spectrum, stored with its
/// eigendecomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    sym: SymMatrix,
    eigen: EigenPair,
}

impl SpdMatrix {
    pub fn new(sym: SymMatrix) -> Result<Self> {
        let eigen = sym_eigen(&sym)?;
        if !(eigen.min() > 0.0) {
            return Err(Error::NotPositiveDefinite(eigen.min()));
        }
        Ok(Self { sym, eigen })
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::new(SymMatrix::new(m)?)
    }

    pub fn identity(p: usize) -> Self {
        Self {
            sym: SymMatrix::identity(p),
            eigen: EigenPair {
                values: vec![1.0; p],
                vectors: DMatrix::identity(p, p),
            },
        }
    }

    pub fn eigen(&self) -> &EigenPair {
        &self.eigen
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn into_sym(self) -> SymMatrix {
        self.sym
    }
}

impl std::ops::Deref for SpdMatrix {
    type Target = SymMatrix;

    fn deref(&self) -> &SymMatrix {
        &self.sym
    }
}

fn check_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Principal logarithm `U diag(log lambda) U^T`.
pub fn spd_log(p: &SpdMatrix) -> Result<SymMatrix> {
    let e = p.eigen();
    if !(e.min() > 0.0) {
        return Err(Error::NotPositiveDefinite(e.min()));
    }
    Ok(SymMatrix::from_eigen(&e.vectors, e.values.iter().map(|v| v.ln())))
}

/// Matrix exponential of a symmetric matrix.
pub fn spd_exp(s: &SymMatrix) -> Result<SpdMatrix> {
    let e = sym_eigen(s)?;
    SpdMatrix::new(SymMatrix::from_eigen(&e.vectors, e.values.iter().map(|v| v.exp())))
}

/// `P^{-1/2}`.
pub fn spd_inv_sqrt(p: &SpdMatrix) -> Result<SymMatrix> {
    let e = p.eigen();
    if !(e.min() > 0.0) {
        return Err(Error::NotPositiveDefinite(e.min()));
    }
    Ok(SymMatrix::from_eigen(&e.vectors, e.values.iter().map(|v| 1.0 / v.sqrt())))
}

/// Frobenius norm of `P - Q`; defined on any pair of symmetric matrices.
pub fn dist_euclidean(p: &SymMatrix, q: &SymMatrix) -> Result<f64> {
    check_dims(p, q)?;
    Ok((&p.m - &q.m).norm())
}

pub fn dist_logeuclidean(p: &SpdMatrix, q: &SpdMatrix) -> Result<f64> {
    check_dims(p, q)?;
    dist_euclidean(&spd_log(p)?, &spd_log(q)?)
}

/// Arguments are put in a canonical order first so that the result is
/// bitwise symmetric.
pub fn dist_affineinvariant(p: &SpdMatrix, q: &SpdMatrix) -> Result<f64> {
    check_dims(p, q)?;
    let swap = p
        .m
        .iter()
        .zip(q.m.iter())
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .is_some_and(|o| o.is_gt());
    let (p, q) = if swap { (q, p) } else { (p, q) };
    affine_invariant_from_inv_sqrt(&spd_inv_sqrt(p)?, q)
}

/// Affine-invariant distance given a precomputed `P^{-1/2}`.
pub fn affine_invariant_from_inv_sqrt(p_inv_sqrt: &SymMatrix, q: &SymMatrix) -> Result<f64> {
    check_dims(p_inv_sqrt, q)?;
    let w = &p_inv_sqrt.m;
    let similar = SymMatrix::symmetrised(w * &q.m * w);
    let e = sym_eigen(&similar)?;
    if !(e.min() > 0.0) {
        return Err(Error::NotPositiveDefinite(e.min()));
    }
    Ok(e.values.iter().map(|v| v.ln().powi(2)).sum::<f64>().sqrt())
}

/// Shifts a nearly positive-semidefinite matrix into the SPD cone:
/// `M + eps I` with `eps = max(1e-6 trace(M) / p, 1e-10)`.
///
/// Eigenvalues below `-1e-8 trace(M) / p` are rejected as `NotNearlyPsd`.
pub fn regularize(m: &SymMatrix) -> Result<SpdMatrix> {
    let p = m.dim() as f64;
    let mean_diag = m.trace() / p;
    let eigen = sym_eigen(m)?;
    let tolerance = 1e-8 * mean_diag.max(0.0);
    if eigen.min() < -tolerance {
        return Err(Error::NotNearlyPsd {
            min_eigenvalue: eigen.min(),
            tolerance,
        });
    }
    let eps = (1e-6 * mean_diag).max(1e-10);
    let mut shifted = m.m.clone();
    for k in 0..m.dim() {
        shifted[(k, k)] += eps;
    }
    let values: Vec<f64> = eigen.values.iter().map(|v| v + eps).collect();
    if !(*values.last().unwrap() > 0.0) {
        return Err(Error::NotPositiveDefinite(*values.last().unwrap()));
    }
    Ok(SpdMatrix {
        sym: SymMatrix { m: shifted },
        eigen: EigenPair {
            values,
            vectors: eigen.vectors,
        },
    })
}
