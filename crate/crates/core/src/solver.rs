//! Assemble and solve one discrete problem.

use crate::assembly::{assemble_matrix, assemble_rhs, Coefficient, QuadratureOrders, SystemMatrix};
use crate::error::Result;
use crate::field::ScalarField;
use crate::linalg::{relative_residual, solve_direct};
use crate::mesh::{DualMesh, PrimalMesh};
use crate::space::{TrialFunction, TrialSpace};

#[derive(Debug, Clone)]
pub struct Discretization {
    pub space: TrialSpace,
    pub dual: DualMesh,
    pub matrix: SystemMatrix,
    pub rhs: Vec<f64>,
    pub solution: TrialFunction,
    /// `‖A u − b‖₂ / ‖b‖₂` of the returned solution.
    pub residual: f64,
}

/// Find `u_P` with `a_P(u_P, w) = (f, w)` for every test function `w`.
pub fn solve(
    mesh: &PrimalMesh,
    r: usize,
    alpha: &Coefficient,
    f: &dyn ScalarField,
    quadrature: QuadratureOrders,
) -> Result<Discretization> {
    let space = TrialSpace::new(mesh, r)?;
    let dual = space.dual()?;
    let matrix = assemble_matrix(&space, &dual, alpha, quadrature.matrix)?;
    let rhs = assemble_rhs(&dual, f, quadrature.rhs)?;
    let u = solve_direct(&matrix, &rhs)?;
    let residual = if rhs.is_empty() {
        0.0
    } else {
        relative_residual(&matrix, &u, &rhs)
    };
    Ok(Discretization {
        space,
        dual,
        matrix,
        rhs,
        solution: TrialFunction(u),
        residual,
    })
}
