use serde::Serialize;

use crate::error::{invalid, Result};
use crate::field::SmoothField;
use crate::mesh::{DualMesh, PrimalMesh};
use crate::polyquad::gauss_rule;
use crate::space::{TestFunction, TrialFunction, TrialSpace};

/// Errors of one discrete solution against the exact one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub h: f64,
    pub n: usize,
    pub dof_count: usize,
    /// `|u − u_P|_1`
    pub err_h1: f64,
    /// `‖u − u_P‖_0`
    pub err_l2: f64,
    /// `|u_I − u_P|_1` with `u_I` the Lobatto interpolant.
    pub err_supercloseness: f64,
    /// `|u − u_P|_P`, when the exact Hessian is known.
    pub err_broken_h2: Option<f64>,
}

/// `|w|_{P′}`: square root of the sum of squared jumps across every dual
/// edge segment, boundary strips counting as zero.
pub fn seminorm_dual(dual: &DualMesh, w: &TestFunction) -> f64 {
    assert_eq!(w.0.len(), dual.interior_count(), "test function length");
    let (nx, ny) = (dual.x.lines(), dual.y.lines());
    let mut acc = 0.0;
    // across vertical Gauss lines s, one segment per interior y strip
    for t in 1..ny {
        for s in 1..=nx {
            let j = w.at(dual, s, t) - w.at(dual, s - 1, t);
            acc += j * j;
        }
    }
    for s in 1..nx {
        for t in 1..=ny {
            let j = w.at(dual, s, t) - w.at(dual, s, t - 1);
            acc += j * j;
        }
    }
    acc.sqrt()
}

/// Sum over elements of tensor-Gauss integrals of `f(ex, ey, x, y)`,
/// component by component.
pub(crate) fn integrate_elements<const K: usize>(
    mesh: &PrimalMesh,
    q: usize,
    mut f: impl FnMut(usize, usize, f64, f64) -> Result<[f64; K]>,
) -> Result<[f64; K]> {
    let rule = gauss_rule(q)?;
    let (xs, ys) = (mesh.x_breaks(), mesh.y_breaks());
    let mut total = [0.0; K];
    for ey in 0..mesh.n() {
        for ex in 0..mesh.m() {
            for (y, wy) in rule.mapped(ys[ey], ys[ey + 1]) {
                for (x, wx) in rule.mapped(xs[ex], xs[ex + 1]) {
                    for (t, v) in total.iter_mut().zip(f(ex, ey, x, y)?) {
                        *t += wx * wy * v;
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Value, gradient and `[∂xx, ∂xy, ∂yy]` of a trial function at a point of
/// element `(ex, ey)`.
pub(crate) fn trial_jet(
    space: &TrialSpace,
    v: &TrialFunction,
    ex: usize,
    ey: usize,
    x: f64,
    y: f64,
) -> (f64, [f64; 2], [f64; 3]) {
    let px = space.axis_eval_x(ex, x);
    let py = space.axis_eval_y(ey, y);
    let c = |fx: &[f64], gy: &[f64]| space.contract(v, ex, ey, fx, gy);
    (
        c(&px.v, &py.v),
        [c(&px.d1, &py.v), c(&px.v, &py.d1)],
        [c(&px.d2, &py.v), c(&px.d1, &py.d1), c(&px.v, &py.d2)],
    )
}

fn check_len(space: &TrialSpace, v: &TrialFunction) -> Result<()> {
    if v.0.len() != space.dof_count() {
        return invalid(format!(
            "trial function has {} coefficients, space has {}",
            v.0.len(),
            space.dof_count()
        ));
    }
    Ok(())
}

/// `|v|_1` of a trial function, exact (order `r+1` Gauss).
pub fn h1_seminorm(space: &TrialSpace, v: &TrialFunction) -> Result<f64> {
    check_len(space, v)?;
    let [s] = integrate_elements(space.primal(), space.order() + 1, |ex, ey, x, y| {
        let (_, g, _) = trial_jet(space, v, ex, ey, x, y);
        Ok([g[0] * g[0] + g[1] * g[1]])
    })?;
    Ok(s.sqrt())
}

fn h2_density(g: [f64; 2], hess: [f64; 3], h: f64) -> f64 {
    let [xx, xy, yy] = hess;
    g[0] * g[0] + g[1] * g[1] + h * h * (xx * xx + 2.0 * xy * xy + yy * yy)
}

/// Element size entering the broken `H²` seminorm: the longer side.
fn element_size(mesh: &PrimalMesh, ex: usize, ey: usize) -> f64 {
    mesh.hx(ex).max(mesh.hy(ey))
}

/// `|v|_P = (Σ_τ |v|²_{1,τ} + h_τ²|v|²_{2,τ})^{1/2}` of a smooth field.
pub fn seminorm_broken_h2(mesh: &PrimalMesh, v: &dyn SmoothField, q: usize) -> Result<f64> {
    let [s] = integrate_elements(mesh, q, |ex, ey, x, y| {
        let Some(hess) = v.hessian(x, y) else {
            return invalid("broken H2 seminorm needs second derivatives");
        };
        Ok([h2_density(
            v.gradient(x, y),
            hess,
            element_size(mesh, ex, ey),
        )])
    })?;
    Ok(s.sqrt())
}

/// `|v|_P` of a trial function, exact (order `r+1` Gauss).
pub fn trial_broken_h2(space: &TrialSpace, v: &TrialFunction) -> Result<f64> {
    check_len(space, v)?;
    let mesh = space.primal();
    let [s] = integrate_elements(mesh, space.order() + 1, |ex, ey, x, y| {
        let (_, g, hess) = trial_jet(space, v, ex, ey, x, y);
        Ok([h2_density(g, hess, element_size(mesh, ex, ey))])
    })?;
    Ok(s.sqrt())
}

fn check_finite(v: f64, x: f64, y: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        invalid(format!("exact solution evaluates to {v} at ({x}, {y})"))
    }
}

/// `(|u − u_P|_1, ‖u − u_P‖_0)` by `q×q` Gauss quadrature per element.
pub fn error_norms(
    space: &TrialSpace,
    exact: &dyn SmoothField,
    u_p: &TrialFunction,
    q: usize,
) -> Result<(f64, f64)> {
    check_len(space, u_p)?;
    let r = space.order();
    if q < r + 3 {
        return invalid(format!(
            "error quadrature order {q} is below r + 3 = {}",
            r + 3
        ));
    }
    let [h1, l2] = integrate_elements(space.primal(), q, |ex, ey, x, y| {
        let (v, g, _) = trial_jet(space, u_p, ex, ey, x, y);
        let e = check_finite(exact.value(x, y), x, y)? - v;
        let ge = exact.gradient(x, y);
        let gx = check_finite(ge[0], x, y)? - g[0];
        let gy = check_finite(ge[1], x, y)? - g[1];
        Ok([gx * gx + gy * gy, e * e])
    })?;
    Ok((h1.sqrt(), l2.sqrt()))
}

/// `|u − u_P|_P`, or `None` if the field has no Hessian.
pub fn error_broken_h2(
    space: &TrialSpace,
    exact: &dyn SmoothField,
    u_p: &TrialFunction,
    q: usize,
) -> Result<Option<f64>> {
    check_len(space, u_p)?;
    let mesh = space.primal();
    let [a, _, c, _] = mesh.bounds();
    if exact.hessian(a, c).is_none() {
        return Ok(None);
    }
    let [s] = integrate_elements(mesh, q, |ex, ey, x, y| {
        let (_, g, hess) = trial_jet(space, u_p, ex, ey, x, y);
        let ge = exact.gradient(x, y);
        let he = exact.hessian(x, y).unwrap_or([f64::NAN; 3]);
        let d = h2_density(
            [ge[0] - g[0], ge[1] - g[1]],
            [he[0] - hess[0], he[1] - hess[1], he[2] - hess[2]],
            element_size(mesh, ex, ey),
        );
        Ok([check_finite(d, x, y)?])
    })?;
    Ok(Some(s.sqrt()))
}

/// Full error report: norms against `exact` plus supercloseness against the
/// Lobatto interpolant of `exact`.
pub fn error_report(
    space: &TrialSpace,
    exact: &dyn SmoothField,
    u_p: &TrialFunction,
    q: usize,
) -> Result<ErrorReport> {
    let (err_h1, err_l2) = error_norms(space, exact, u_p, q)?;
    let u_i = space.interpolate(|x, y| exact.value(x, y));
    let diff = TrialFunction(u_i.0.iter().zip(&u_p.0).map(|(a, b)| a - b).collect());
    let mesh = space.primal();
    Ok(ErrorReport {
        h: mesh.h(),
        n: mesh.m().max(mesh.n()),
        dof_count: space.dof_count(),
        err_h1,
        err_l2,
        err_supercloseness: h1_seminorm(space, &diff)?,
        err_broken_h2: error_broken_h2(space, exact, u_p, q)?,
    })
}
