use std::ops::{Index, IndexMut};

use crate::error::{invalid, Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    /// Solve `L X = B` for lower-triangular `self`, overwriting `B` (n x k).
    pub fn solve_lower_in_place(&self, b: &mut DenseMatrix) {
        let n = self.rows;
        assert_eq!(b.rows, n);
        let k = b.cols;
        for i in 0..n {
            for j in 0..i {
                let l = self[(i, j)];
                if l == 0.0 {
                    continue;
                }
                let (head, tail) = b.data.split_at_mut(i * k);
                let src = &head[j * k..(j + 1) * k];
                for (d, s) in tail[..k].iter_mut().zip(src) {
                    *d -= l * s;
                }
            }
            let d = self[(i, i)];
            b.data[i * k..(i + 1) * k].iter_mut().for_each(|v| *v /= d);
        }
    }
}

/// Cholesky factor `L` (lower triangular) with `L Lᵀ = S`.
pub fn cholesky_factor(s: &DenseMatrix) -> Result<DenseMatrix> {
    if s.rows != s.cols {
        return invalid("Cholesky factorization needs a square matrix");
    }
    if !s.is_symmetric(1e-12) {
        return invalid("Cholesky factorization needs a symmetric matrix");
    }
    let n = s.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { row: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut acc = s[(i, j)];
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                acc -= l.data[ri + k] * l.data[rj + k];
            }
            l[(i, j)] = acc / d;
        }
    }
    Ok(l)
}

/// Dense LU with partial pivoting; tiny pivots are clamped so that
/// inverse iteration still works on (numerically) singular matrices.
struct DenseLu {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    fn factor(m: &DenseMatrix) -> Self {
        let n = m.rows;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let floor = f64::EPSILON * m.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&a, &b| lu[(a, k)].abs().total_cmp(&lu[(b, k)].abs()))
                .unwrap();
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            if lu[(k, k)].abs() < floor {
                lu[(k, k)] = if lu[(k, k)] < 0.0 { -floor } else { floor };
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l == 0.0 {
                    continue;
                }
                let (head, tail) = lu.data.split_at_mut(i * n);
                let src = &head[k * n + k + 1..(k + 1) * n];
                for (d, s) in tail[k + 1..n].iter_mut().zip(src) {
                    *d -= l * s;
                }
            }
        }
        Self { n, lu, perm }
    }

    /// Solve `M x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(a, b)| a * b)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// Smallest singular value of a square matrix, as `1/√λ_max(M⁻ᵀM⁻¹)`.
///
/// `M⁻¹` is formed through one LU factorization, the Gram matrix is reduced
/// to tridiagonal form by Householder reflections and its largest eigenvalue
/// is isolated by Sturm-sequence bisection. A largest eigenvalue is
/// determined to full relative accuracy, so small singular values stay
/// accurate, and clustering near the bottom of the spectrum (which stalls
/// inverse iteration) costs nothing. Numerically singular input gives 0.
pub fn smallest_singular_value(m: &DenseMatrix) -> Result<f64> {
    if m.rows != m.cols {
        return invalid(format!(
            "smallest singular value needs a square matrix, got {}x{}",
            m.rows, m.cols
        ));
    }
    let n = m.rows;
    if n == 0 {
        return invalid("empty matrix has no singular values");
    }
    let lu = DenseLu::factor(m);
    // rows of `inv_t` are the columns of M⁻¹
    let mut inv_t = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        if col.iter().any(|v| !v.is_finite()) {
            return Ok(0.0);
        }
        inv_t.data[j * n..(j + 1) * n].copy_from_slice(&col);
    }
    // G = M⁻ᵀM⁻¹, G_ij = <col_i, col_j>
    let mut g = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let ci = &inv_t.data[i * n..(i + 1) * n];
        for j in 0..=i {
            let cj = &inv_t.data[j * n..(j + 1) * n];
            let v: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            g.data[i * n + j] = v;
            g.data[j * n + i] = v;
        }
    }
    let lambda = largest_symmetric_eigenvalue(g);
    if !(lambda.is_finite()) {
        return Ok(0.0);
    }
    if !(lambda > 0.0) {
        return Err(Error::Numeric(format!(
            "inverse Gram matrix has non-positive largest eigenvalue {lambda:e}"
        )));
    }
    Ok(1.0 / lambda.sqrt())
}

/// Largest eigenvalue of a symmetric matrix.
fn largest_symmetric_eigenvalue(mut a: DenseMatrix) -> f64 {
    let (diag, off) = tridiagonalize(&mut a);
    let n = diag.len();
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius =
            if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return f64::INFINITY;
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    // invariant: fewer than n eigenvalues below lo, all n below hi
    lo -= f64::EPSILON * scale;
    hi += f64::EPSILON * scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * scale {
            break;
        }
        if count_below(&diag, &off, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`
/// (Sturm sequence via the `LDLᵀ` pivots).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i > 0 {
            off[i - 1] * off[i - 1] / q
        } else {
            0.0
        };
        q = diag[i] - x - coupling;
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Householder reduction of a symmetric matrix to tridiagonal form;
/// returns the diagonal and the off-diagonal. `a` is overwritten.
fn tridiagonalize(a: &mut DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows;
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<f64> = (k + 1..n).map(|i| a.data[i * n + k]).collect();
        let norm_x = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm_x } else { norm_x };
        v[..len].copy_from_slice(&x);
        v[0] -= alpha;
        let nv = v[..len].iter().map(|t| t * t).sum::<f64>().sqrt();
        if nv == 0.0 {
            off[k] = x[0];
            continue;
        }
        v[..len].iter_mut().for_each(|t| *t /= nv);
        off[k] = alpha;
        // p = A_sub v, K = vᵀp, q = p − K v
        for i in 0..len {
            let row = &a.data[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            p[i] = row.iter().zip(&v[..len]).map(|(r, t)| r * t).sum();
        }
        let kk: f64 = p[..len].iter().zip(&v[..len]).map(|(a, b)| a * b).sum();
        for i in 0..len {
            p[i] -= kk * v[i];
        }
        // A_sub -= 2 v qᵀ + 2 q vᵀ
        for i in 0..len {
            let (vi, qi) = (v[i], p[i]);
            let row = &mut a.data[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            for (j, r) in row.iter_mut().enumerate() {
                *r -= 2.0 * (vi * p[j] + qi * v[j]);
            }
        }
    }
    if n >= 2 {
        off[n - 2] = a.data[(n - 1) * n + n - 2];
    }
    let diag = (0..n).map(|i| a.data[i * n + i]).collect();
    (diag, off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_row_major(
            n,
            n,
            (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn sigma_of_simple_matrices() {
        assert!((smallest_singular_value(&DenseMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-12);
        let d = DenseMatrix::from_diag(&[3.0, 0.5]);
        assert!((smallest_singular_value(&d).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sigma_of_rank_deficient_is_zero() {
        let mut m = random(6, 3);
        for j in 0..6 {
            m[(5, j)] = 2.0 * m[(1, j)] - m[(0, j)];
        }
        assert!(smallest_singular_value(&m).unwrap() < 1e-8);
        assert!(smallest_singular_value(&DenseMatrix::zeros(3, 3)).unwrap() < 1e-8);
    }

    #[test]
    fn sigma_agrees_with_svd_oracle() {
        for seed in 0..5 {
            let m = random(40, seed);
            let oracle = nalgebra::DMatrix::from_row_slice(40, 40, m.as_slice())
                .singular_values()
                .min();
            let got = smallest_singular_value(&m).unwrap();
            assert!((got - oracle).abs() <= 1e-6 * oracle, "{got} vs {oracle}");
        }
    }

    #[test]
    fn sigma_is_upper_bounded_by_probe_ratios() {
        let m = random(30, 9);
        let s = smallest_singular_value(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mx = m.mul_vec(&x);
            let ratio = (mx.iter().map(|v| v * v).sum::<f64>()
                / x.iter().map(|v| v * v).sum::<f64>())
            .sqrt();
            assert!(s <= ratio * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(
            cholesky_factor(&DenseMatrix::identity(4)).unwrap(),
            DenseMatrix::identity(4)
        );
        let l = cholesky_factor(&DenseMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(l, DenseMatrix::from_diag(&[2.0, 3.0]));
        let b = random(25, 4);
        let mut s = b.transpose().matmul(&b);
        for i in 0..25 {
            s[(i, i)] += 1.0;
        }
        let l = cholesky_factor(&s).unwrap();
        let rec = l.matmul(&l.transpose());
        let err = DenseMatrix::from_row_major(
            25,
            25,
            rec.as_slice()
                .iter()
                .zip(s.as_slice())
                .map(|(a, b)| a - b)
                .collect(),
        )
        .unwrap();
        assert!(err.frobenius() <= 1e-10 * s.frobenius());
    }

    #[test]
    fn cholesky_rejects_indefinite_and_asymmetric() {
        let m = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            cholesky_factor(&m),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let m = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(
            cholesky_factor(&m),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn lower_solve() {
        let l = DenseMatrix::from_row_major(2, 2, vec![2.0, 0.0, 1.0, 4.0]).unwrap();
        let mut b = DenseMatrix::from_row_major(2, 1, vec![2.0, 9.0]).unwrap();
        l.solve_lower_in_place(&mut b);
        assert_eq!(b.as_slice(), &[1.0, 2.0]);
    }
}
