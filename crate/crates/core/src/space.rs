//! Trial space (continuous piecewise `Q_r` with nodal Lobatto basis, zero on
//! the boundary) and test space (piecewise constants on interior control
//! volumes).

use crate::error::{invalid, Result};
use crate::mesh::{DualMesh, PrimalMesh};
use crate::polyquad::{lobatto_points, LagrangeBasis};

/// Coefficients of a trial function over interior Lobatto nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFunction(pub Vec<f64>);

/// Coefficients of a test function over interior control volumes, indexed
/// by [`DualMesh::volume_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction(pub Vec<f64>);

impl TrialFunction {
    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }
}

impl TestFunction {
    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    /// Value on strip pair `(sx, sy)`; zero on boundary volumes.
    pub fn at(&self, dual: &DualMesh, sx: usize, sy: usize) -> f64 {
        dual.volume_index(sx, sy).map_or(0.0, |i| self.0[i])
    }
}

/// Local basis values and derivatives with respect to the physical
/// coordinate at one point of an element.
pub(crate) struct AxisEval {
    pub v: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrialSpace {
    primal: PrimalMesh,
    r: usize,
    basis: LagrangeBasis,
    lobatto_x: Vec<f64>,
    lobatto_y: Vec<f64>,
}

impl TrialSpace {
    pub fn new(primal: &PrimalMesh, r: usize) -> Result<Self> {
        let nodes = lobatto_points(r)?;
        let basis = LagrangeBasis::new(&nodes.nodes)?;
        let axis = |breaks: &[f64]| -> Vec<f64> {
            let mut out = Vec::with_capacity((breaks.len() - 1) * r + 1);
            out.push(breaks[0]);
            for w in breaks.windows(2) {
                let h = w[1] - w[0];
                for &l in &nodes.nodes[1..r] {
                    out.push(0.5 * (w[0] + w[1] + h * l));
                }
                out.push(w[1]);
            }
            out
        };
        Ok(Self {
            lobatto_x: axis(primal.x_breaks()),
            lobatto_y: axis(primal.y_breaks()),
            primal: primal.clone(),
            r,
            basis,
        })
    }

    pub fn primal(&self) -> &PrimalMesh {
        &self.primal
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn lobatto_x(&self) -> &[f64] {
        &self.lobatto_x
    }

    pub fn lobatto_y(&self) -> &[f64] {
        &self.lobatto_y
    }

    fn nx_interior(&self) -> usize {
        self.lobatto_x.len() - 2
    }

    fn ny_interior(&self) -> usize {
        self.lobatto_y.len() - 2
    }

    /// `(mr-1)(nr-1)`.
    pub fn dof_count(&self) -> usize {
        self.nx_interior() * self.ny_interior()
    }

    /// DOF of global node `(gx, gy)`, or `None` on the boundary.
    pub fn dof(&self, gx: usize, gy: usize) -> Option<usize> {
        let (nx, ny) = (self.nx_interior(), self.ny_interior());
        if (1..=nx).contains(&gx) && (1..=ny).contains(&gy) {
            Some((gy - 1) * nx + (gx - 1))
        } else {
            None
        }
    }

    /// Global node indices of DOF `k`.
    pub fn dof_node(&self, k: usize) -> (usize, usize) {
        let nx = self.nx_interior();
        (k % nx + 1, k / nx + 1)
    }

    pub fn dof_coords(&self, k: usize) -> (f64, f64) {
        let (gx, gy) = self.dof_node(k);
        (self.lobatto_x[gx], self.lobatto_y[gy])
    }

    /// DOF (or `None`) of local node `(a, b)` of element `(ex, ey)`.
    pub fn local_dof(&self, ex: usize, ey: usize, a: usize, b: usize) -> Option<usize> {
        self.dof(ex * self.r + a, ey * self.r + b)
    }

    pub fn zero(&self) -> TrialFunction {
        TrialFunction(vec![0.0; self.dof_count()])
    }

    pub fn dual(&self) -> Result<DualMesh> {
        DualMesh::new(&self.primal, self.r)
    }

    pub(crate) fn axis_eval_x(&self, ex: usize, x: f64) -> AxisEval {
        let b = self.primal.x_breaks();
        self.axis_eval(x, b[ex], b[ex + 1])
    }

    pub(crate) fn axis_eval_y(&self, ey: usize, y: f64) -> AxisEval {
        let b = self.primal.y_breaks();
        self.axis_eval(y, b[ey], b[ey + 1])
    }

    fn axis_eval(&self, t: f64, lo: f64, hi: f64) -> AxisEval {
        let n = self.r + 1;
        let h = hi - lo;
        let xi = ((2.0 * t - lo - hi) / h).clamp(-1.0, 1.0);
        let mut e = AxisEval {
            v: vec![0.0; n],
            d1: vec![0.0; n],
            d2: vec![0.0; n],
        };
        self.basis.eval_all(xi, &mut e.v, &mut e.d1, &mut e.d2);
        let s = 2.0 / h;
        e.d1.iter_mut().for_each(|d| *d *= s);
        e.d2.iter_mut().for_each(|d| *d *= s * s);
        e
    }

    fn check_point(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        if !self.primal.contains(x, y, 1e-12) || !x.is_finite() || !y.is_finite() {
            return invalid(format!("point ({x}, {y}) lies outside the domain"));
        }
        Ok(self.primal.locate(x, y))
    }

    /// `Σ c[a][b] fx[a] gy[b]` over the local nodes of an element.
    pub(crate) fn contract(
        &self,
        v: &TrialFunction,
        ex: usize,
        ey: usize,
        fx: &[f64],
        gy: &[f64],
    ) -> f64 {
        let mut acc = 0.0;
        for (b, &wy) in gy.iter().enumerate() {
            if wy == 0.0 {
                continue;
            }
            for (a, &wx) in fx.iter().enumerate() {
                if let Some(k) = self.local_dof(ex, ey, a, b) {
                    acc += v.0[k] * wx * wy;
                }
            }
        }
        acc
    }

    pub fn eval(&self, v: &TrialFunction, x: f64, y: f64) -> Result<f64> {
        let (ex, ey) = self.check_point(x, y)?;
        let (px, py) = (self.axis_eval_x(ex, x), self.axis_eval_y(ey, y));
        Ok(self.contract(v, ex, ey, &px.v, &py.v))
    }

    pub fn eval_grad(&self, v: &TrialFunction, x: f64, y: f64) -> Result<(f64, f64)> {
        let (ex, ey) = self.check_point(x, y)?;
        let (px, py) = (self.axis_eval_x(ex, x), self.axis_eval_y(ey, y));
        Ok((
            self.contract(v, ex, ey, &px.d1, &py.v),
            self.contract(v, ex, ey, &px.v, &py.d1),
        ))
    }

    /// `(∂xx, ∂xy, ∂yy)` from the element owning the point.
    pub fn eval_hessian(&self, v: &TrialFunction, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let (ex, ey) = self.check_point(x, y)?;
        let (px, py) = (self.axis_eval_x(ex, x), self.axis_eval_y(ey, y));
        Ok((
            self.contract(v, ex, ey, &px.d2, &py.v),
            self.contract(v, ex, ey, &px.d1, &py.d1),
            self.contract(v, ex, ey, &px.v, &py.d2),
        ))
    }

    /// Lobatto interpolant; boundary nodes are pinned to zero.
    pub fn interpolate(&self, g: impl Fn(f64, f64) -> f64) -> TrialFunction {
        TrialFunction(
            (0..self.dof_count())
                .map(|k| {
                    let (x, y) = self.dof_coords(k);
                    g(x, y)
                })
                .collect(),
        )
    }

    /// Fallible variant of [`interpolate`](Self::interpolate).
    pub fn try_interpolate<E>(
        &self,
        g: impl Fn(f64, f64) -> std::result::Result<f64, E>,
    ) -> std::result::Result<TrialFunction, E> {
        (0..self.dof_count())
            .map(|k| {
                let (x, y) = self.dof_coords(k);
                g(x, y)
            })
            .collect::<std::result::Result<Vec<_>, E>>()
            .map(TrialFunction)
    }

    /// Nodal basis function of DOF `k`.
    pub fn basis_function(&self, k: usize) -> TrialFunction {
        let mut v = self.zero();
        v.0[k] = 1.0;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(m: usize, n: usize, r: usize) -> TrialSpace {
        TrialSpace::new(&PrimalMesh::uniform(0.0, 1.0, 0.0, 1.0, m, n).unwrap(), r).unwrap()
    }

    #[test]
    fn dimensions_match_dual() {
        for (m, n, r) in [(1, 1, 1), (2, 3, 1), (3, 2, 2), (4, 4, 5), (1, 1, 3)] {
            let s = space(m, n, r);
            assert_eq!(s.dof_count(), (m * r - 1) * (n * r - 1));
            assert_eq!(s.dof_count(), s.dual().unwrap().interior_count());
            assert_eq!(s.lobatto_x().len(), m * r + 1);
        }
    }

    #[test]
    fn trivial_space() {
        let s = space(1, 1, 1);
        assert_eq!(s.dof_count(), 0);
        assert_eq!(s.eval(&s.zero(), 0.3, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn zero_function_evaluates_to_zero() {
        let s = space(3, 2, 3);
        let z = s.zero();
        for &(x, y) in &[(0.1, 0.2), (0.5, 0.5), (1.0, 1.0), (2.0 / 3.0, 0.7)] {
            assert_eq!(s.eval(&z, x, y).unwrap(), 0.0);
        }
    }

    #[test]
    fn nodal_basis_property() {
        let s = space(2, 2, 3);
        let k = s.dof(4, 2).unwrap();
        let phi = s.basis_function(k);
        for gy in 0..s.lobatto_y().len() {
            for gx in 0..s.lobatto_x().len() {
                let val = s.eval(&phi, s.lobatto_x()[gx], s.lobatto_y()[gy]).unwrap();
                let want = if (gx, gy) == (4, 2) { 1.0 } else { 0.0 };
                assert!((val - want).abs() < 1e-14, "node ({gx},{gy}) = {val}");
            }
        }
    }

    #[test]
    fn interpolate_sine_center_node() {
        let s = space(2, 2, 2);
        let pi = std::f64::consts::PI;
        let v = s.interpolate(|x, y| (pi * x).sin() * (pi * y).sin());
        let k = s.dof(2, 2).unwrap();
        assert_eq!(s.dof_coords(k), (0.5, 0.5));
        assert!((v.0[k] - 1.0).abs() < 1e-15);
        assert!(s.interpolate(|_, _| 0.0).0.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn points_outside_rejected() {
        let s = space(2, 2, 2);
        assert!(s.eval(&s.zero(), 1.1, 0.5).is_err());
        assert!(s.eval(&s.zero(), 0.5, -1e-9).is_err());
        assert!(s.eval(&s.zero(), 1.0 + 1e-13, 0.5).is_ok());
    }

    // A Q_r bi-polynomial vanishing on the unit square boundary.
    fn bubble<'a>(r: usize, cx: &'a [f64], cy: &'a [f64]) -> impl Fn(f64, f64) -> f64 + 'a {
        move |x, y| {
            let px: f64 = cx
                .iter()
                .take(r - 1)
                .enumerate()
                .map(|(i, c)| c * x.powi(i as i32))
                .sum::<f64>()
                + 1.0;
            let py: f64 = cy
                .iter()
                .take(r - 1)
                .enumerate()
                .map(|(i, c)| c * y.powi(i as i32))
                .sum::<f64>()
                + 1.0;
            x * (1.0 - x) * y * (1.0 - y) * px * py
        }
    }

    #[test]
    fn reproduction_of_bubble_polynomials() {
        let cx = [0.3, -1.2, 0.8, 0.5];
        let cy = [-0.7, 0.4, 1.1, -0.2];
        for r in 2..=5 {
            let s = TrialSpace::new(
                &PrimalMesh::new(vec![0.0, 0.15, 0.6, 1.0], vec![0.0, 0.45, 1.0]).unwrap(),
                r,
            )
            .unwrap();
            let g = bubble(r, &cx, &cy);
            let v = s.interpolate(&g);
            let mut rng = ChaCha8Rng::seed_from_u64(12345);
            for _ in 0..100 {
                let (x, y): (f64, f64) = (rng.random(), rng.random());
                let err = (s.eval(&v, x, y).unwrap() - g(x, y)).abs();
                assert!(err < 1e-12, "r={r} ({x},{y}) err={err}");
            }
        }
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            seed in proptest::collection::vec(-1.0f64..1.0, 40),
            x in 0.05f64..0.95,
            y in 0.05f64..0.95,
        ) {
            let s = space(3, 3, 2);
            let v = TrialFunction((0..s.dof_count()).map(|k| seed[k % seed.len()]).collect());
            // stay away from element interfaces
            let near = |t: f64| (t * 3.0 - (t * 3.0).round()).abs() < 1e-3;
            prop_assume!(!near(x) && !near(y));
            let h = 1e-6;
            let (gx, gy) = s.eval_grad(&v, x, y).unwrap();
            let fx = (s.eval(&v, x + h, y).unwrap() - s.eval(&v, x - h, y).unwrap()) / (2.0 * h);
            let fy = (s.eval(&v, x, y + h).unwrap() - s.eval(&v, x, y - h).unwrap()) / (2.0 * h);
            let scale = gx.abs().max(gy.abs()).max(1.0);
            prop_assert!((gx - fx).abs() < 1e-5 * scale);
            prop_assert!((gy - fy).abs() < 1e-5 * scale);
        }
    }
}
