//! Banded LU factorization with partial pivoting.
//!
//! Row `i` is stored as a dense window over columns `i - kl ..= i + kl + ku`,
//! wide enough for the fill produced by row interchanges. Multipliers are
//! kept separately and applied interleaved with the interchanges during the
//! forward sweep, as in LAPACK's `gbtrf`/`gbtrs`.

use crate::error::{invalid, Error, Result};

use super::SparseMatrixCsr;

/// Relative pivot threshold below which the system is declared singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    rows: Vec<f64>,
    multipliers: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &SparseMatrixCsr) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return invalid(format!(
                "banded LU needs a square matrix, got {}x{}",
                a.n_rows(),
                a.n_cols()
            ));
        }
        let n = a.n_rows();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut rows = vec![0.0; n * width];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                rows[i * width + c + kl - i] = v;
            }
        }
        let tol = SINGULAR_PIVOT_RTOL * a.max_abs();
        let mut multipliers = vec![0.0; n * kl];
        let mut pivots = vec![0; n];

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);

            let mut p = k;
            let mut best = rows[k * width + kl].abs();
            for i in k + 1..=last_row {
                let v = rows[i * width + k + kl - i].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tol) {
                return Err(Error::Singular {
                    row: k,
                    pivot: rows[p * width + k + kl - p],
                });
            }
            pivots[k] = p;
            if p != k {
                for c in k..=last_col {
                    rows.swap(k * width + c + kl - k, p * width + c + kl - p);
                }
            }

            let (head, tail) = rows.split_at_mut((k + 1) * width);
            let pivot_row = &head[k * width..];
            let pivot = pivot_row[kl];
            let urow = &pivot_row[kl + 1..=last_col + kl - k];
            for i in k + 1..=last_row {
                let row = &mut tail[(i - k - 1) * width..(i - k) * width];
                let l = row[k + kl - i] / pivot;
                multipliers[k * kl + (i - k - 1)] = l;
                if l == 0.0 {
                    continue;
                }
                let start = k + 1 + kl - i;
                for (dst, &src) in row[start..start + urow.len()].iter_mut().zip(urow) {
                    *dst -= l * src;
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            width,
            rows,
            multipliers,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return invalid(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.n
            ));
        }
        let (n, kl, w) = (self.n, self.kl, self.width);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            if xk != 0.0 {
                let last_row = (k + kl).min(n - 1);
                for i in k + 1..=last_row {
                    x[i] -= self.multipliers[k * kl + (i - k - 1)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + kl + self.ku).min(n - 1);
            let row = &self.rows[k * w..(k + 1) * w];
            let mut acc = x[k];
            for c in k + 1..=last_col {
                acc -= row[c + kl - k] * x[c];
            }
            x[k] = acc / row[kl];
        }
        Ok(x)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual `‖Ax − b‖₂ / ‖b‖₂` (absolute when `b = 0`).
pub fn relative_residual(a: &SparseMatrixCsr, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

/// Required relative residual of [`solve_direct`].
pub const SOLVE_RTOL: f64 = 1e-10;

/// Direct solve of `A x = b` by banded LU followed by one step of iterative
/// refinement, and up to two more while the residual misses [`SOLVE_RTOL`].
pub fn solve_direct(a: &SparseMatrixCsr, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n_rows() {
        return invalid(format!(
            "right-hand side has length {}, expected {}",
            b.len(),
            a.n_rows()
        ));
    }
    if a.n_rows() == 0 {
        if a.n_cols() != 0 {
            return invalid("banded LU needs a square matrix");
        }
        return Ok(Vec::new());
    }
    let lu = BandedLu::factor(a)?;
    let mut x = lu.solve(b)?;
    for step in 0..3 {
        if step > 0 && relative_residual(a, &x, b) <= SOLVE_RTOL {
            return Ok(x);
        }
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = lu.solve(&r)?;
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    }
    let res = relative_residual(a, &x, b);
    if res <= SOLVE_RTOL {
        Ok(x)
    } else {
        Err(Error::Numeric(format!(
            "direct solve residual {res:e} exceeds {SOLVE_RTOL:e}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(
        n: usize,
        kl: usize,
        ku: usize,
        rng: &mut ChaCha8Rng,
        dominant: bool,
    ) -> SparseMatrixCsr {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                if rng.random_bool(0.7) || i == j {
                    let mut v: f64 = rng.random_range(-1.0..1.0);
                    if dominant && i == j {
                        v += (kl + ku + 2) as f64;
                    }
                    t.push((i, j, v));
                }
            }
        }
        SparseMatrixCsr::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_solve() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(solve_direct(&SparseMatrixCsr::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn one_by_one() {
        let a = SparseMatrixCsr::from_triplets(1, 1, &[(0, 0, 3.0)]).unwrap();
        let x = solve_direct(&a, &[0.6]).unwrap();
        assert!((x[0] - 0.2).abs() < 1e-16);
    }

    #[test]
    fn diagonally_dominant_50() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_banded(50, 49, 49, &mut rng, true);
        let b: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = solve_direct(&a, &b).unwrap();
        assert!(relative_residual(&a, &x, &b) <= 1e-12);
    }

    fn condition_number(a: &SparseMatrixCsr) -> f64 {
        let d = a.to_dense();
        let m = nalgebra::DMatrix::from_row_slice(d.rows(), d.cols(), d.as_slice());
        let sv = m.singular_values();
        sv.max() / sv.min()
    }

    /// Random sparse banded systems without diagonal dominance, so pivoting
    /// is exercised; draws with condition number above 1e6 are redrawn since
    /// no backward-stable solver meets the residual bound on those.
    #[test]
    fn random_banded_systems_need_pivoting() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut accepted = 0;
        let mut pivoted = 0;
        while accepted < 100 {
            let n = rng.random_range(1..80);
            let kl = rng.random_range(0..6);
            let ku = rng.random_range(0..6);
            let a = random_banded(n, kl, ku, &mut rng, false);
            if !(condition_number(&a) <= 1e6) {
                continue;
            }
            accepted += 1;
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lu = BandedLu::factor(&a).unwrap();
            if lu.pivots.iter().enumerate().any(|(k, &p)| p != k) {
                pivoted += 1;
            }
            let x = solve_direct(&a, &b).unwrap();
            let ax = a.mul_vec(&x);
            let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let r: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(inf(&r) <= 1e-10 * inf(&b), "system {accepted}");
        }
        assert!(
            pivoted > 50,
            "only {pivoted} systems needed row interchanges"
        );
    }

    #[test]
    fn zero_leading_entry_is_pivoted() {
        let a = SparseMatrixCsr::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(solve_direct(&a, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_detected() {
        let a = SparseMatrixCsr::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)],
        )
        .unwrap();
        assert!(matches!(
            solve_direct(&a, &[1.0, 1.0]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn length_mismatch() {
        assert!(solve_direct(&SparseMatrixCsr::identity(3), &[1.0]).is_err());
    }
}
