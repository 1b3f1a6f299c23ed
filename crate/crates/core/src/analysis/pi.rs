use crate::error::{invalid, Result};
use crate::mesh::DualMesh;
use crate::space::{TestFunction, TrialFunction, TrialSpace};

/// `A^x_s A^y_t ∂²v/∂x∂y(g_s, g_t)` for every pair of Gauss lines, indexed
/// `[t - 1][s - 1]`. The derivative comes from the element owning the point.
pub fn weighted_mixed_derivatives(
    space: &TrialSpace,
    dual: &DualMesh,
    v: &TrialFunction,
) -> Result<Vec<Vec<f64>>> {
    if v.0.len() != space.dof_count() || dual.order() != space.order() {
        return invalid("trial function, space and dual mesh do not match");
    }
    let px: Vec<_> = (1..=dual.x.lines())
        .map(|s| space.axis_eval_x(dual.x.line_element(s), dual.x.line(s)))
        .collect();
    let py: Vec<_> = (1..=dual.y.lines())
        .map(|t| space.axis_eval_y(dual.y.line_element(t), dual.y.line(t)))
        .collect();
    Ok((1..=dual.y.lines())
        .map(|t| {
            let ey = dual.y.line_element(t);
            (1..=dual.x.lines())
                .map(|s| {
                    let ex = dual.x.line_element(s);
                    let vxy = space.contract(v, ex, ey, &px[s - 1].d1, &py[t - 1].d1);
                    dual.x.line_weight(s) * dual.y.line_weight(t) * vxy
                })
                .collect()
        })
        .collect())
}

/// The test function `Πv`: boundary strips are zero and each interior
/// value is the 2D prefix sum of the weighted mixed derivatives, built by
/// the recurrence `Π[s][t] = ⌊·⌋ + Π[s−1][t] + Π[s][t−1] − Π[s−1][t−1]`.
pub fn build_pi(space: &TrialSpace, dual: &DualMesh, v: &TrialFunction) -> Result<TestFunction> {
    let terms = weighted_mixed_derivatives(space, dual, v)?;
    let (nx, ny) = (dual.x.interior_count(), dual.y.interior_count());
    let mut w = TestFunction(vec![0.0; dual.interior_count()]);
    for t in 1..=ny {
        for s in 1..=nx {
            let val = terms[t - 1][s - 1] + w.at(dual, s - 1, t) + w.at(dual, s, t - 1)
                - w.at(dual, s - 1, t - 1);
            w.0[(t - 1) * nx + (s - 1)] = val;
        }
    }
    Ok(w)
}

/// `⌊w⌋` at Gauss-line pair `(s, t)`: the mixed second difference of `w`
/// over the four strips meeting at that Gauss point.
pub fn mixed_difference(dual: &DualMesh, w: &TestFunction, s: usize, t: usize) -> f64 {
    w.at(dual, s, t) - w.at(dual, s - 1, t) - w.at(dual, s, t - 1) + w.at(dual, s - 1, t - 1)
}

/// How well `Πv` meets its defining constraints at every Gauss point,
/// including those on the last line in either direction, which the
/// recurrence never imposes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    /// Largest `|⌊Πv⌋ − A A ∂²v/∂x∂y|` over all Gauss points.
    pub max_residual: f64,
    /// Largest residual over the points on the last lines only.
    pub max_extension_residual: f64,
    /// Largest `|A A ∂²v/∂x∂y|`, for scale.
    pub max_term: f64,
}

pub fn check_pi_constraints(
    space: &TrialSpace,
    dual: &DualMesh,
    v: &TrialFunction,
    pi: &TestFunction,
) -> Result<ConstraintCheck> {
    let terms = weighted_mixed_derivatives(space, dual, v)?;
    let (lx, ly) = (dual.x.lines(), dual.y.lines());
    let mut out = ConstraintCheck {
        max_residual: 0.0,
        max_extension_residual: 0.0,
        max_term: 0.0,
    };
    for t in 1..=ly {
        for s in 1..=lx {
            let term = terms[t - 1][s - 1];
            let res = (mixed_difference(dual, pi, s, t) - term).abs();
            out.max_residual = out.max_residual.max(res);
            out.max_term = out.max_term.max(term.abs());
            if s == lx || t == ly {
                out.max_extension_residual = out.max_extension_residual.max(res);
            }
        }
    }
    Ok(out)
}
