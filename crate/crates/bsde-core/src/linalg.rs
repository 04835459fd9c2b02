//! Small dense symmetric-matrix utilities.
//!
//! Everything here exists to support the factorization `⟨M⟩ = ∫ m m* dt` of
//! the driving martingale's quadratic variation and the ellipticity checks on
//! volatility matrices: the matrices are tiny (asset count d ≤ ~20, regression
//! bases ≤ ~60), dense and symmetric, so a cyclic Jacobi eigendecomposition is
//! simple, dependency-free and entirely adequate. This is deliberately not a
//! general linear-algebra layer.
//!
//! Conventions:
//! * eigenvalues are returned in descending order;
//! * each eigenvector is sign-normalized so its first nonzero component is
//!   positive, making outputs reproducible bit-for-bit;
//! * "positive semi-definite" tolerates eigenvalues down to
//!   `-1e-12 · max(1, λ_max)` (floating-point PSD drift), which are clamped
//!   to zero.

use crate::error::{ensure_finite, Error, Result};

/// A symmetric `dim × dim` matrix with exactly mirrored storage
/// (`entries[i][j] == entries[j][i]` as stored, not merely up to rounding).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    /// Row-major `dim * dim` entries.
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of the given dimension (`dim ≥ 1`).
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be at least 1");
        SymMatrix {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = 1.0;
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zero(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.entries[i * m.dim + i] = v;
        }
        m
    }

    /// Builds a symmetric matrix from `f(i, j)` evaluated on the upper
    /// triangle (`j ≥ i`) and mirrored, so storage is exactly symmetric even
    /// if `f` itself is only symmetric up to rounding.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.entries[i * dim + j] = v;
                m.entries[j * dim + i] = v;
            }
        }
        m
    }

    /// Builds from nested rows, requiring exact symmetry and finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::invalid_input("SymMatrix needs dimension >= 1"));
        }
        let mut m = Self::zero(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "row {i} has length {} in a {dim}x{dim} matrix",
                    row.len()
                )));
            }
            ensure_finite(row, "matrix row")?;
            for (j, &v) in row.iter().enumerate() {
                m.entries[i * dim + j] = v;
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if m.entries[i * dim + j] != m.entries[j * dim + i] {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Sets both `(i,j)` and `(j,i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
        self.entries[j * self.dim + i] = v;
    }

    /// Matrix–vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.entries[i * n + j] * x[j];
            }
            y[i] = s;
        }
        y
    }

    /// Flat row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    fn ensure_finite(&self) -> Result<()> {
        ensure_finite(&self.entries, "matrix entry")
    }
}

/// Eigendecomposition `A = V Λ Vᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    dim: usize,
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column-contiguous eigenvectors: `vectors[j*dim..][..dim]` is the unit
    /// eigenvector for `values[j]`, sign-normalized so its first nonzero
    /// component is positive.
    vectors: Vec<f64>,
}

impl SymEig {
    /// The eigenvector paired with `values[j]`.
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reassembles `V f(Λ) Vᵀ` for a spectral function `f`, with exactly
    /// symmetric storage.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim;
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(n, |i, j| {
            let mut s = 0.0;
            for k in 0..n {
                s += mapped[k] * self.vectors[k * n + i] * self.vectors[k * n + j];
            }
            s
        })
    }
}

/// Maximum Jacobi sweeps before reporting non-convergence. Symmetric Jacobi
/// typically converges in 6–15 sweeps even at dim ~60.
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order with the deterministic eigenvector
/// sign convention described in the module docs. The reconstruction
/// `V Λ Vᵀ` matches the input to ~1e-14 relative accuracy; the eigenvector
/// matrix is orthogonal to the same accuracy.
///
/// Errors on non-finite entries; non-convergence (which the cyclic scheme
/// does not exhibit on real symmetric input) would surface as a numerical
/// failure rather than silently wrong output.
pub fn sym_eig(a: &SymMatrix) -> Result<SymEig> {
    a.ensure_finite()?;
    let n = a.dim;
    let mut m = a.entries.clone(); // upper triangle is the working copy
    let mut v = vec![0.0; n * n]; // accumulated rotations, row-major
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut d: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    // Scale for the convergence threshold: once the off-diagonal mass is
    // negligible relative to the matrix itself, we are done.
    let scale: f64 = m.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q].abs();
            }
        }
        if off <= 1e-15 * scale * (n * n) as f64 {
            converged = true;
            break;
        }
        // First sweeps rotate only "large" elements (classic threshold
        // strategy); later sweeps rotate everything.
        let tresh = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let g = 100.0 * apq.abs();
                // After a few sweeps, annihilate elements that are already
                // negligible relative to both diagonal entries.
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    m[p * n + q] = 0.0;
                } else if apq.abs() > tresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            t = -t;
                        }
                        t
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    m[p * n + q] = 0.0;
                    let rot = |m: &mut Vec<f64>, i1: usize, j1: usize, i2: usize, j2: usize| {
                        let g = m[i1 * n + j1];
                        let h = m[i2 * n + j2];
                        m[i1 * n + j1] = g - s * (h + g * tau);
                        m[i2 * n + j2] = h + s * (g - h * tau);
                    };
                    for j in 0..p {
                        rot(&mut m, j, p, j, q);
                    }
                    for j in (p + 1)..q {
                        rot(&mut m, p, j, j, q);
                    }
                    for j in (q + 1)..n {
                        rot(&mut m, p, j, q, j);
                    }
                    for j in 0..n {
                        // Rotate the eigenvector matrix (columns p and q).
                        let gv = v[j * n + p];
                        let hv = v[j * n + q];
                        v[j * n + p] = gv - s * (hv + gv * tau);
                        v[j * n + q] = hv + s * (gv - hv * tau);
                    }
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    if !converged {
        // One more off-diagonal check: the loop may have exited by sweep cap
        // right after reaching convergence.
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q].abs();
            }
        }
        if off > 1e-12 * scale * (n * n) as f64 {
            return Err(Error::Numerical(format!(
                "Jacobi eigendecomposition did not converge in {MAX_SWEEPS} sweeps \
                 (off-diagonal mass {off:.3e})"
            )));
        }
    }

    // Sort descending by eigenvalue; ties keep original order so the output
    // is deterministic.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("finite eigenvalues"));

    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for (slot, &src) in order.iter().enumerate() {
        values.push(d[src]);
        // Column `src` of v, sign-normalized.
        let mut col: Vec<f64> = (0..n).map(|i| v[i * n + src]).collect();
        if let Some(first) = col.iter().find(|x| **x != 0.0) {
            if *first < 0.0 {
                for x in col.iter_mut() {
                    *x = -*x;
                }
            }
        }
        vectors[slot * n..(slot + 1) * n].copy_from_slice(&col);
    }
    Ok(SymEig {
        dim: n,
        values,
        vectors,
    })
}

/// Relative tolerance below which a negative eigenvalue counts as
/// floating-point drift rather than genuine indefiniteness.
fn psd_drift_tol(max_abs_eigenvalue: f64) -> f64 {
    1e-12 * max_abs_eigenvalue.abs().max(1.0)
}

/// The unique symmetric positive semi-definite square root.
///
/// Eigenvalues in `[-tol, 0)` (floating-point drift) are clamped to zero;
/// anything more negative is an error. The result `r` satisfies `r·r = a`
/// to ~1e-13 relative accuracy and is exactly symmetric as stored.
pub fn mat_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    let tol = psd_drift_tol(eig.values[0]);
    let min = *eig.values.last().expect("dim >= 1");
    if min < -tol {
        return Err(Error::NotPositiveSemiDefinite {
            min_eigenvalue: min,
        });
    }
    Ok(eig.reassemble(|l| if l <= 0.0 { 0.0 } else { l.sqrt() }))
}

/// The inverse of the symmetric square root of a positive definite matrix.
///
/// Requires the smallest eigenvalue to clear `1e-12 · max(1, λ_max)`;
/// otherwise the matrix is reported singular.
pub fn mat_inv_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    let tol = psd_drift_tol(eig.values[0]);
    let min = *eig.values.last().expect("dim >= 1");
    if min <= tol {
        return Err(Error::SingularMatrix(format!(
            "inverse square root needs a positive definite matrix \
             (min eigenvalue {min:.6e}, tolerance {tol:.1e})"
        )));
    }
    Ok(eig.reassemble(|l| 1.0 / l.sqrt()))
}

/// The largest constant `Λ` such that `xᵀ(γγ*)x ≥ Λ‖x‖²` for this matrix,
/// i.e. the smallest eigenvalue of `γγ*`, clamped at zero (the product is
/// positive semi-definite in exact arithmetic, so tiny negative values are
/// rounding noise).
///
/// A strictly positive return value is exactly the uniform ellipticity
/// property of `γ`; zero means degenerate.
pub fn ellipticity_constant(gamma: &[Vec<f64>]) -> Result<f64> {
    let d = gamma.len();
    if d == 0 || gamma.iter().any(|row| row.len() != d) {
        return Err(Error::invalid_input(
            "ellipticity_constant expects a square matrix",
        ));
    }
    for row in gamma {
        ensure_finite(row, "gamma row")?;
    }
    // γγ* built symmetrically.
    let gg = SymMatrix::from_fn(d, |i, j| {
        let mut s = 0.0;
        for k in 0..d {
            s += gamma[i][k] * gamma[j][k];
        }
        s
    });
    let eig = sym_eig(&gg)?;
    Ok(eig.values.last().copied().expect("dim >= 1").max(0.0))
}

/// Solves the dense linear system `a x = rhs` by LU with partial pivoting.
///
/// This is utility plumbing for tiny systems (market price of risk and the
/// like); it reports singularity when a pivot falls below a relative
/// threshold.
pub fn solve_linear(a: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) || rhs.len() != n {
        return Err(Error::invalid_input(
            "solve_linear expects a square matrix and a matching right-hand side",
        ));
    }
    for row in a {
        ensure_finite(row, "matrix row")?;
    }
    ensure_finite(rhs, "rhs")?;

    let mut m: Vec<f64> = a.iter().flatten().copied().collect();
    let mut x: Vec<f64> = rhs.to_vec();
    let scale: f64 = m.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);

    for col in 0..n {
        // Partial pivoting.
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() <= 1e-13 * scale {
            return Err(Error::SingularMatrix(format!(
                "pivot {:.3e} at column {col} is below tolerance",
                m[piv * n + col]
            )));
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        let inv = 1.0 / m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] * inv;
            if f != 0.0 {
                for j in col..n {
                    m[r * n + j] -= f * m[col * n + j];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in (col + 1)..n {
            s -= m[col * n + j] * x[j];
        }
        x[col] = s / m[col * n + col];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// A·A for symmetric A, built symmetrically.
    fn sym_square(a: &SymMatrix) -> SymMatrix {
        let n = a.dim();
        SymMatrix::from_fn(n, |i, j| {
            let mut s = 0.0;
            for k in 0..n {
                s += a.get(i, k) * a.get(k, j);
            }
            s
        })
    }

    fn random_psd(rng: &mut StdRng, dim: usize) -> SymMatrix {
        // g·g* is PSD by construction.
        let g: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        SymMatrix::from_fn(dim, |i, j| {
            let mut s = 0.0;
            for k in 0..dim {
                s += g[i][k] * g[j][k];
            }
            s
        })
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let eig = sym_eig(&SymMatrix::identity(2)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0]);

        let eig = sym_eig(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_abs_diff_eq!(eig.values[0], 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.values[1], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_two_by_two_off_diagonal() {
        // Characteristic polynomial of [[2,1],[1,2]]: (2-λ)² = 1 → λ ∈ {3, 1}.
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eig = sym_eig(&a).unwrap();
        assert_abs_diff_eq!(eig.values[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-12);
        // Reconstruction and orthogonality.
        let recon = eig.reassemble(|l| l);
        assert!(max_abs_diff(&a, &recon) < 1e-10);
        let n = eig.dim();
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| eig.vector(i)[k] * eig.vector(j)[k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eig_rejects_non_finite() {
        let mut a = SymMatrix::identity(2);
        a.set(0, 1, f64::NAN);
        assert!(matches!(sym_eig(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eig_sign_convention_is_deterministic() {
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e1 = sym_eig(&a).unwrap();
        let e2 = sym_eig(&a).unwrap();
        assert_eq!(e1.vectors, e2.vectors);
        for j in 0..2 {
            let first = e1.vector(j).iter().find(|x| **x != 0.0).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn sqrt_trivial_cases() {
        let r = mat_sqrt(&SymMatrix::identity(3)).unwrap();
        assert!(max_abs_diff(&r, &SymMatrix::identity(3)) < 1e-12);

        let r = mat_sqrt(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs_diff(&r, &SymMatrix::from_diag(&[2.0, 3.0])) < 1e-12);
    }

    #[test]
    fn sqrt_two_by_two_squares_back() {
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let r = mat_sqrt(&a).unwrap();
        assert!(max_abs_diff(&sym_square(&r), &a) < 1e-10);
        // Entries follow the ((√3+1)/2, (√3−1)/2) pattern.
        let s3 = 3.0f64.sqrt();
        assert_abs_diff_eq!(r.get(0, 0), (s3 + 1.0) / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.get(0, 1), (s3 - 1.0) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let a = SymMatrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(
            mat_sqrt(&a),
            Err(Error::NotPositiveSemiDefinite { .. })
        ));
    }

    #[test]
    fn sqrt_clamps_tiny_negative_drift() {
        let a = SymMatrix::from_diag(&[1.0, -1e-14]);
        let r = mat_sqrt(&a).unwrap();
        assert_eq!(r.get(1, 1), 0.0);
    }

    #[test]
    fn inv_sqrt_trivial_and_two_by_two() {
        let r = mat_inv_sqrt(&SymMatrix::identity(2)).unwrap();
        assert!(max_abs_diff(&r, &SymMatrix::identity(2)) < 1e-12);

        let r = mat_inv_sqrt(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs_diff(&r, &SymMatrix::from_diag(&[0.5, 1.0 / 3.0])) < 1e-12);

        // r · mat_sqrt(a) = identity.
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let s = mat_sqrt(&a).unwrap();
        let r = mat_inv_sqrt(&a).unwrap();
        let prod = SymMatrix::from_fn(2, |i, j| {
            let mut acc = 0.0;
            for k in 0..2 {
                acc += r.get(i, k) * s.get(k, j);
            }
            acc
        });
        assert!(max_abs_diff(&prod, &SymMatrix::identity(2)) < 1e-8);
    }

    #[test]
    fn inv_sqrt_rejects_singular() {
        let a = SymMatrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(mat_inv_sqrt(&a), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn ellipticity_examples() {
        assert_abs_diff_eq!(
            ellipticity_constant(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            ellipticity_constant(&[vec![0.2, 0.0], vec![0.0, 0.4]]).unwrap(),
            0.04,
            epsilon = 1e-12
        );
        // Non-symmetric γ: compare against a brute-force eigenvalue of γγ*.
        let g = vec![vec![0.2, 0.1], vec![0.0, 0.3]];
        // γγ* = [[0.05, 0.03], [0.03, 0.09]]; λ_min = (0.14 − √(0.04²+4·0.03²))/2.
        let lam_min = (0.14 - (0.0016f64 + 0.0036).sqrt()) / 2.0;
        assert_abs_diff_eq!(ellipticity_constant(&g).unwrap(), lam_min, epsilon = 1e-12);
        // Singular matrix → exactly zero, matching the PD ⇔ positive rule.
        let s = vec![vec![0.2, 0.2], vec![0.2, 0.2]];
        assert_eq!(ellipticity_constant(&s).unwrap(), 0.0);
    }

    #[test]
    fn solve_linear_round_trip() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let x_true = [0.3, -1.2, 2.5];
        let rhs: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i][j] * x_true[j]).sum())
            .collect();
        let x = solve_linear(&a, &rhs).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(x[i], x_true[i], epsilon = 1e-12);
        }
        let singular = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(
            solve_linear(&singular, &[1.0, 2.0]),
            Err(Error::SingularMatrix(_))
        ));
    }

    #[test]
    fn random_psd_invariants_small_sample() {
        // The full 1000-matrix sweep is in the acceptance suite; this keeps a
        // fast regression guard in the unit tests.
        let mut rng = StdRng::seed_from_u64(7);
        for case in 0..120 {
            let dim = 1 + case % 6;
            let a = random_psd(&mut rng, dim);
            let r = mat_sqrt(&a).unwrap();
            assert!(
                max_abs_diff(&sym_square(&r), &a) < 1e-9,
                "sqrt failed to square back at dim {dim}"
            );
        }
    }

    #[test]
    fn symmetric_factor_recovers_from_product() {
        // If m is symmetric PSD then the square root of m·m* is m itself.
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let dim = rng.gen_range(1..=4);
            // Build a symmetric PSD m (as a PSD random matrix).
            let m = random_psd(&mut rng, dim);
            let mm = sym_square(&m); // m m* = m² for symmetric m
            let r = mat_sqrt(&mm).unwrap();
            assert!(
                max_abs_diff(&r, &m) < 1e-9,
                "sqrt(m·m*) deviated from symmetric m"
            );
        }
    }

    proptest! {
        #[test]
        fn prop_inv_sqrt_whitens(dim in 1usize..5, seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let mut a = random_psd(&mut rng, dim);
            // Shift to safely positive definite.
            for i in 0..dim {
                let v = a.get(i, i);
                a.set(i, i, v + 0.5);
            }
            let w = mat_inv_sqrt(&a).unwrap();
            // w · a · w = identity within 1e-8.
            let aw = SymMatrix::from_fn(dim, |i, j| {
                let mut s = 0.0;
                for k in 0..dim {
                    s += a.get(i, k) * w.get(k, j);
                }
                s
            });
            let waw = SymMatrix::from_fn(dim, |i, j| {
                let mut s = 0.0;
                for k in 0..dim {
                    s += w.get(i, k) * aw.get(k, j);
                }
                s
            });
            prop_assert!(max_abs_diff(&waw, &SymMatrix::identity(dim)) < 1e-8);
        }

        #[test]
        fn prop_eig_reconstructs(dim in 1usize..6, seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_mul(2654435761).wrapping_add(1));
            let a = SymMatrix::from_fn(dim, |_, _| rng.gen_range(-3.0..3.0));
            let eig = sym_eig(&a).unwrap();
            let recon = eig.reassemble(|l| l);
            prop_assert!(max_abs_diff(&a, &recon) < 1e-10);
            // Descending order.
            for w in eig.values.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }
    }
}
