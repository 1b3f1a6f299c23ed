//! Petrov–Galerkin system assembly.
//!
//! Row `(sx, sy)` of the matrix is the discrete conservation law on the
//! interior control volume with those strip indices: the entry for trial
//! DOF `k` is `-∮ α ∂φ_k/∂n ds` around the volume. Edge integrals are
//! accumulated per Gauss-line segment: a segment of Gauss line `s` adds `+F`
//! to the row on its upper side (strip `s`) and `-F` to the row on its lower
//! side (strip `s-1`), which is the jump form of the bilinear form.

use crate::error::{invalid, Error, Result};
use crate::expr::Expr;
use crate::field::ScalarField;
use crate::linalg::SparseMatrixCsr;
use crate::mesh::{DualMesh, PrimalMesh};
use crate::polyquad::gauss_rule;
use crate::space::{TestFunction, TrialFunction, TrialSpace};

pub type SystemMatrix = SparseMatrixCsr;

/// Per-element values of a piecewise-constant coefficient, `values[i][j]`
/// for element `i` along x and `j` along y.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementValues {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl ElementValues {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let m = values.len();
        let n = values.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || values.iter().any(|row| row.len() != n) {
            return invalid("coefficient grid must be a non-empty rectangular m x n array");
        }
        Ok(Self {
            m,
            n,
            data: values.into_iter().flatten().collect(),
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    PiecewiseConstant(ElementValues),
    Field(Expr),
}

/// Sample grid size used to bound a field coefficient from below.
pub const ALPHA_SAMPLES: usize = 50;

impl Coefficient {
    /// Value on element `(ex, ey)` at `(x, y)`.
    pub fn value(&self, ex: usize, ey: usize, x: f64, y: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::PiecewiseConstant(v) => v.get(ex, ey),
            Coefficient::Field(e) => e.eval(x, y),
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        !matches!(self, Coefficient::Field(e) if !e.is_constant())
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Coefficient::Constant(c) => Coefficient::Constant(c * s),
            Coefficient::PiecewiseConstant(v) => Coefficient::PiecewiseConstant(ElementValues {
                data: v.data.iter().map(|x| x * s).collect(),
                ..v.clone()
            }),
            Coefficient::Field(e) => {
                Coefficient::Field(Expr::Mul(Box::new(Expr::Num(s)), Box::new(e.clone())))
            }
        }
    }

    /// Check shape against the mesh and positivity; for a field the check is
    /// on an `ALPHA_SAMPLES²` grid.
    pub fn validate(&self, mesh: &PrimalMesh) -> Result<()> {
        if let Coefficient::PiecewiseConstant(v) = self {
            if v.dims() != (mesh.m(), mesh.n()) {
                return Err(Error::InvalidCoefficient(format!(
                    "coefficient grid is {}x{} but the mesh has {}x{} elements",
                    v.m,
                    v.n,
                    mesh.m(),
                    mesh.n()
                )));
            }
        }
        let a0 = self.alpha_0(mesh);
        if !(a0 > 0.0) {
            return Err(Error::InvalidCoefficient(format!(
                "coefficient must be strictly positive (minimum {a0})"
            )));
        }
        Ok(())
    }

    /// Lower bound `α_0`: exact for piecewise constants, sampled otherwise.
    pub fn alpha_0(&self, mesh: &PrimalMesh) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::PiecewiseConstant(v) => {
                v.data.iter().copied().fold(f64::INFINITY, f64::min)
            }
            Coefficient::Field(e) => {
                let [a, b, c, d] = mesh.bounds();
                let k = ALPHA_SAMPLES;
                let mut lo = f64::INFINITY;
                for j in 0..k {
                    for i in 0..k {
                        let x = a + (b - a) * i as f64 / (k - 1) as f64;
                        let y = c + (d - c) * j as f64 / (k - 1) as f64;
                        let v = e.eval(x, y);
                        lo = if v.is_nan() { f64::NAN } else { lo.min(v) };
                        if lo.is_nan() {
                            return lo;
                        }
                    }
                }
                lo
            }
        }
    }
}

fn positive(alpha: f64, x: f64, y: f64) -> Result<f64> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(alpha)
    } else {
        Err(Error::InvalidCoefficient(format!(
            "coefficient is {alpha} at ({x}, {y})"
        )))
    }
}

/// Default quadrature orders for the matrix, right-hand side and error norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureOrders {
    pub matrix: usize,
    pub rhs: usize,
    pub error: usize,
}

impl QuadratureOrders {
    pub fn defaults(r: usize) -> Self {
        Self {
            matrix: r + 2,
            rhs: r + 3,
            error: r + 3,
        }
    }
}

/// Assemble the finite volume matrix with a `q`-point Gauss rule on each
/// Gauss-line segment.
pub fn assemble_matrix(
    space: &TrialSpace,
    dual: &DualMesh,
    alpha: &Coefficient,
    q: usize,
) -> Result<SystemMatrix> {
    let r = space.order();
    if dual.order() != r {
        return invalid("trial space and dual mesh orders differ");
    }
    if q < r {
        return invalid(format!("matrix quadrature order {q} is below r = {r}"));
    }
    alpha.validate(space.primal())?;
    let rule = gauss_rule(q)?;
    let n = space.dof_count();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let nloc = r + 1;
    let mut line_integral = vec![0.0; nloc];
    // flux carried by boundary (non-DOF) nodes, per row
    let mut boundary = vec![0.0; n];

    // vertical Gauss lines: flux ∫ α ∂φ/∂x dy
    for s in 1..=dual.x.lines() {
        let ex = dual.x.line_element(s);
        let xg = dual.x.line(s);
        let px = space.axis_eval_x(ex, xg);
        let right = s;
        let left = s - 1;
        for t in 1..=dual.y.interior_count() {
            let rows = [
                (dual.volume_index(right, t), 1.0),
                (dual.volume_index(left, t), -1.0),
            ];
            for piece in dual.y.strip_pieces(t) {
                let ey = piece.element;
                line_integral.fill(0.0);
                for (y, w) in rule.mapped(piece.lo, piece.hi) {
                    let a = positive(alpha.value(ex, ey, xg, y), xg, y)?;
                    let py = space.axis_eval_y(ey, y);
                    for (acc, l) in line_integral.iter_mut().zip(&py.v) {
                        *acc += w * a * l;
                    }
                }
                for b in 0..nloc {
                    for a in 0..nloc {
                        let flux = px.d1[a] * line_integral[b];
                        let dof = space.local_dof(ex, ey, a, b);
                        for &(row, sign) in &rows {
                            match (row, dof) {
                                (Some(row), Some(dof)) => triplets.push((row, dof, sign * flux)),
                                (Some(row), None) => boundary[row] += sign * flux,
                                _ => {}
                            }
                        }
                    }
                }
            }
        }
    }

    // horizontal Gauss lines: flux ∫ α ∂φ/∂y dx
    for t in 1..=dual.y.lines() {
        let ey = dual.y.line_element(t);
        let yg = dual.y.line(t);
        let py = space.axis_eval_y(ey, yg);
        for s in 1..=dual.x.interior_count() {
            let rows = [
                (dual.volume_index(s, t), 1.0),
                (dual.volume_index(s, t - 1), -1.0),
            ];
            for piece in dual.x.strip_pieces(s) {
                let ex = piece.element;
                line_integral.fill(0.0);
                for (x, w) in rule.mapped(piece.lo, piece.hi) {
                    let a = positive(alpha.value(ex, ey, x, yg), x, yg)?;
                    let px = space.axis_eval_x(ex, x);
                    for (acc, l) in line_integral.iter_mut().zip(&px.v) {
                        *acc += w * a * l;
                    }
                }
                for b in 0..nloc {
                    for a in 0..nloc {
                        let flux = line_integral[a] * py.d1[b];
                        let dof = space.local_dof(ex, ey, a, b);
                        for &(row, sign) in &rows {
                            match (row, dof) {
                                (Some(row), Some(dof)) => triplets.push((row, dof, sign * flux)),
                                (Some(row), None) => boundary[row] += sign * flux,
                                _ => {}
                            }
                        }
                    }
                }
            }
        }
    }

    let mut matrix = SparseMatrixCsr::from_triplets(n, n, &triplets)?;
    // Every row annihilates constants exactly (boundary nodes included).
    // Restoring that after rounding matters: on uniform meshes the rounding
    // pattern repeats in every element and acts like a spurious reaction term.
    let defect: Vec<f64> = (0..n)
        .map(|i| -compensated_sum(matrix.row(i).1.iter().copied().chain([boundary[i]])))
        .collect();
    matrix.add_to_diagonal(&defect)?;
    Ok(matrix)
}

/// Sum with a running error term (Neumaier).
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        c += if s.abs() >= v.abs() {
            (s - t) + v
        } else {
            (v - t) + s
        };
        s = t;
    }
    s + c
}

/// `∫ f` over every interior control volume, with a `q×q` tensor Gauss rule
/// on each element-aligned piece.
pub fn assemble_rhs(dual: &DualMesh, f: &dyn ScalarField, q: usize) -> Result<Vec<f64>> {
    let r = dual.order();
    if q < r + 1 {
        return invalid(format!(
            "rhs quadrature order {q} is below r + 1 = {}",
            r + 1
        ));
    }
    let rule = gauss_rule(q)?;
    let mut out = vec![0.0; dual.interior_count()];
    for (idx, slot) in out.iter_mut().enumerate() {
        let (sx, sy) = dual.volume_strips(idx);
        *slot = integrate_over_volume(dual, sx, sy, f, &rule)?;
    }
    Ok(out)
}

pub(crate) fn integrate_over_volume(
    dual: &DualMesh,
    sx: usize,
    sy: usize,
    f: &dyn ScalarField,
    rule: &crate::polyquad::QuadratureRule,
) -> Result<f64> {
    let mut acc = 0.0;
    for p in dual.control_volume_pieces(sx, sy) {
        for (y, wy) in rule.mapped(p.y0, p.y1) {
            for (x, wx) in rule.mapped(p.x0, p.x1) {
                let v = f.value(x, y);
                if !v.is_finite() {
                    return invalid(format!("source evaluates to {v} at ({x}, {y})"));
                }
                acc += wx * wy * v;
            }
        }
    }
    Ok(acc)
}

/// `wᵀ A v`, the discrete bilinear form.
pub fn apply_bilinear(a: &SystemMatrix, v: &TrialFunction, w: &TestFunction) -> Result<f64> {
    if v.0.len() != a.n_cols() || w.0.len() != a.n_rows() {
        return invalid(format!(
            "bilinear form is {}x{}, got trial length {} and test length {}",
            a.n_rows(),
            a.n_cols(),
            v.0.len(),
            w.0.len()
        ));
    }
    Ok(a.mul_vec(&v.0).iter().zip(&w.0).map(|(p, q)| p * q).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::mesh::PrimalMesh;

    fn setup(m: usize, n: usize, r: usize) -> (TrialSpace, DualMesh) {
        let p = PrimalMesh::uniform(0.0, 1.0, 0.0, 1.0, m, n).unwrap();
        let s = TrialSpace::new(&p, r).unwrap();
        let d = s.dual().unwrap();
        (s, d)
    }

    #[test]
    fn trivial_space_gives_empty_matrix() {
        let (s, d) = setup(1, 1, 1);
        let a = assemble_matrix(&s, &d, &Coefficient::Constant(1.0), 3).unwrap();
        assert_eq!((a.n_rows(), a.n_cols(), a.nnz()), (0, 0, 0));
    }

    /// Oracle: the single r=1 hat function on the 2x2 mesh,
    /// φ = (1-|2x-1|)(1-|2y-1|), integrated edge by edge around
    /// [1/4, 3/4]² with the composite trapezoid rule (exact for the
    /// piecewise-linear edge traces, which kink only at 1/2).
    fn hat_flux_oracle() -> f64 {
        let hat = |t: f64| 1.0 - (2.0 * t - 1.0).abs();
        let dhat = |t: f64| if t < 0.5 { 2.0 } else { -2.0 };
        let trap = |f: &dyn Fn(f64) -> f64| {
            let pts = [0.25, 0.5, 0.75];
            0.5 * 0.25 * (f(pts[0]) + f(pts[1])) + 0.5 * 0.25 * (f(pts[1]) + f(pts[2]))
        };
        // outward normal derivative on the four edges
        let right = trap(&|y| dhat(0.75) * hat(y));
        let left = trap(&|y| -dhat(0.25) * hat(y));
        let top = trap(&|x| hat(x) * dhat(0.75));
        let bottom = trap(&|x| -hat(x) * dhat(0.25));
        -(right + left + top + bottom)
    }

    #[test]
    fn single_dof_entry_matches_hand_integration() {
        let oracle = hat_flux_oracle();
        assert!((oracle - 3.0).abs() < 1e-15);
        let (s, d) = setup(2, 2, 1);
        let a = assemble_matrix(&s, &d, &Coefficient::Constant(1.0), 3).unwrap();
        assert_eq!(a.n_rows(), 1);
        assert!((a.get(0, 0) - oracle).abs() < 1e-14, "{}", a.get(0, 0));
    }

    #[test]
    fn linear_in_coefficient() {
        let (s, d) = setup(3, 2, 2);
        let one = assemble_matrix(&s, &d, &Coefficient::Constant(1.0), 4).unwrap();
        let five = ElementValues::new(vec![vec![5.0; 2]; 3]).unwrap();
        let a5 = assemble_matrix(&s, &d, &Coefficient::PiecewiseConstant(five), 4).unwrap();
        assert!(a5.max_abs_diff(&one.scaled(5.0)) <= 1e-13 * a5.max_abs());
    }

    #[test]
    fn quadrature_order_does_not_matter_for_piecewise_constant() {
        let p = PrimalMesh::new(vec![0.0, 0.3, 0.45, 1.0], vec![0.0, 0.6, 1.0]).unwrap();
        for r in 1..=4 {
            let s = TrialSpace::new(&p, r).unwrap();
            let d = s.dual().unwrap();
            let alpha = Coefficient::PiecewiseConstant(
                ElementValues::new(vec![vec![1.0, 3.0], vec![0.5, 2.0], vec![4.0, 1.5]]).unwrap(),
            );
            let lo = assemble_matrix(&s, &d, &alpha, r).unwrap();
            let hi = assemble_matrix(&s, &d, &alpha, r + 3).unwrap();
            assert!(
                lo.max_abs_diff(&hi) <= 1e-13 * hi.max_abs().max(1.0),
                "r={r}"
            );
        }
    }

    #[test]
    fn nonzeros_per_row_bounded_and_matrix_nonsymmetric() {
        let (s, d) = setup(4, 3, 3);
        let a = assemble_matrix(&s, &d, &Coefficient::Constant(1.0), 5).unwrap();
        let r = 3;
        let bound = (2 * r + 2) * (r + 1) * (r + 1);
        for i in 0..a.n_rows() {
            assert!(a.row(i).0.len() <= bound);
        }
        let dense = a.to_dense();
        assert!(!dense.is_symmetric(1e-8));
    }

    #[test]
    fn row_locality() {
        let (s, d) = setup(3, 3, 2);
        let a = assemble_matrix(&s, &d, &Coefficient::Constant(1.0), 4).unwrap();
        for row in 0..a.n_rows() {
            let (sx, sy) = d.volume_strips(row);
            let (x0, x1) = (d.x.strip_edges()[sx], d.x.strip_edges()[sx + 1]);
            let (y0, y1) = (d.y.strip_edges()[sy], d.y.strip_edges()[sy + 1]);
            for col in 0..a.n_cols() {
                let (gx, gy) = s.dof_node(col);
                let (x_lo, x_hi) = node_support(s.primal().x_breaks(), 2, gx);
                let (y_lo, y_hi) = node_support(s.primal().y_breaks(), 2, gy);
                let touches = x_lo <= x1 && x_hi >= x0 && y_lo <= y1 && y_hi >= y0;
                if !touches {
                    assert_eq!(a.get(row, col), 0.0, "row {row} col {col}");
                }
            }
        }
    }

    /// Extent of the elements containing global node `g` along one axis.
    fn node_support(breaks: &[f64], r: usize, g: usize) -> (f64, f64) {
        if g % r == 0 {
            (breaks[g / r - 1], breaks[g / r + 1])
        } else {
            (breaks[g / r], breaks[g / r + 1])
        }
    }

    #[test]
    fn rhs_of_constants() {
        let (_, d) = setup(4, 4, 2);
        assert!(assemble_rhs(&d, &|_: f64, _: f64| 0.0, 5)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let b = assemble_rhs(&d, &|_: f64, _: f64| 1.0, 5).unwrap();
        for (idx, &v) in b.iter().enumerate() {
            let (sx, sy) = d.volume_strips(idx);
            assert!((v - d.volume_area(sx, sy)).abs() < 1e-15);
        }
        let boundary_area = {
            let wx0 = d.x.strip_width(0) + d.x.strip_width(d.x.lines());
            let wy0 = d.y.strip_width(0) + d.y.strip_width(d.y.lines());
            1.0 - (1.0 - wx0) * (1.0 - wy0)
        };
        let interior: f64 = b.iter().sum();
        assert!((interior - (1.0 - boundary_area)).abs() < 1e-13);
    }

    #[test]
    fn rhs_is_dihedrally_symmetric() {
        let (_, d) = setup(4, 4, 2);
        let f = parse("2*pi^2*sin(pi*x)*sin(pi*y)").unwrap();
        let b = assemble_rhs(&d, &f, 5).unwrap();
        let k = d.x.interior_count();
        let at = |sx: usize, sy: usize| b[d.volume_index(sx, sy).unwrap()];
        for sy in 1..=k {
            for sx in 1..=k {
                let v = at(sx, sy);
                for w in [
                    at(sy, sx),
                    at(k + 1 - sx, sy),
                    at(sx, k + 1 - sy),
                    at(k + 1 - sy, k + 1 - sx),
                ] {
                    assert!((v - w).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bilinear_form_checks() {
        let (s, d) = setup(2, 3, 2);
        let a = assemble_matrix(&s, &d, &Coefficient::Constant(1.0), 4).unwrap();
        let n = s.dof_count();
        let v1 = TrialFunction((0..n).map(|i| (i as f64 * 0.37).sin()).collect());
        let v2 = TrialFunction((0..n).map(|i| (i as f64 * 1.1).cos()).collect());
        let w = TestFunction((0..n).map(|i| 1.0 + (i as f64 * 0.5).sin()).collect());
        assert_eq!(apply_bilinear(&a, &s.zero(), &w).unwrap(), 0.0);
        assert_eq!(
            apply_bilinear(&a, &v1, &TestFunction(vec![0.0; n])).unwrap(),
            0.0
        );
        let sum = TrialFunction(v1.0.iter().zip(&v2.0).map(|(a, b)| a + b).collect());
        let lhs = apply_bilinear(&a, &sum, &w).unwrap();
        let rhs = apply_bilinear(&a, &v1, &w).unwrap() + apply_bilinear(&a, &v2, &w).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        assert!(apply_bilinear(&a, &TrialFunction(vec![0.0; n + 1]), &w).is_err());
    }

    #[test]
    fn nonpositive_coefficients_rejected() {
        let (s, d) = setup(2, 2, 2);
        for alpha in [
            Coefficient::Constant(0.0),
            Coefficient::Field(parse("x - 0.5").unwrap()),
            Coefficient::PiecewiseConstant(
                ElementValues::new(vec![vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap(),
            ),
        ] {
            assert!(matches!(
                assemble_matrix(&s, &d, &alpha, 4),
                Err(Error::InvalidCoefficient(_))
            ));
        }
        let wrong_shape =
            Coefficient::PiecewiseConstant(ElementValues::new(vec![vec![1.0; 3]; 2]).unwrap());
        assert!(assemble_matrix(&s, &d, &wrong_shape, 4).is_err());
        assert!(assemble_matrix(&s, &d, &Coefficient::Constant(1.0), 1).is_err());
    }
}
