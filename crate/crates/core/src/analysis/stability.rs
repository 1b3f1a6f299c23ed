use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::norms::trial_broken_h2;
use super::pi::build_pi;
use super::seminorm_dual;
use crate::assembly::{assemble_matrix, Coefficient};
use crate::error::{invalid, Result};
use crate::linalg::{cholesky_factor, smallest_singular_value, DenseMatrix, SparseMatrixCsr};
use crate::mesh::DualMesh;
use crate::space::{TestFunction, TrialFunction, TrialSpace};

/// Largest system for which the dense inf-sup computation is attempted.
pub const INFSUP_MAX_DOFS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    pub probes: usize,
    pub seed: u64,
    pub matrix_order: usize,
    pub infsup_max_dofs: usize,
}

impl StabilityOptions {
    pub fn new(r: usize, probes: usize, seed: u64) -> Self {
        Self {
            probes,
            seed,
            matrix_order: r + 2,
            infsup_max_dofs: INFSUP_MAX_DOFS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub h: f64,
    pub dof_count: usize,
    pub probes: usize,
    pub seed: u64,
    pub alpha_0: f64,
    /// `min a_P(v, Πv) / |v|²_1` over probes; `None` when `α` is not
    /// piecewise constant.
    pub coercivity_ratio: Option<f64>,
    /// `max |Πv|_{P′} / |v|_1` over probes.
    pub boundedness_ratio: f64,
    /// `max |a_P(v, w)| / (|v|_P |w|_{P′})` over independent probe pairs.
    pub continuity_ratio: f64,
    /// `σ_min(L_D⁻¹ A L_H⁻ᵀ)`; `None` when skipped for size.
    pub infsup_sigma: Option<f64>,
    pub notes: Vec<String>,
}

/// Probe `index` of a seeded family: independent standard normal
/// coefficients from its own ChaCha stream, so probes do not depend on
/// evaluation order.
pub fn probe_vector(seed: u64, index: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Gram matrix of `|·|_1` on the trial space, by exact Gauss quadrature.
pub fn h1_gram(space: &TrialSpace) -> Result<SparseMatrixCsr> {
    let mesh = space.primal();
    let r = space.order();
    let nloc = r + 1;
    let rule = crate::polyquad::gauss_rule(r + 1)?;
    let (xs, ys) = (mesh.x_breaks(), mesh.y_breaks());
    let mut triplets = Vec::new();
    let mut local = vec![0.0; nloc * nloc * nloc * nloc];
    for ey in 0..mesh.n() {
        for ex in 0..mesh.m() {
            local.fill(0.0);
            for (y, wy) in rule.mapped(ys[ey], ys[ey + 1]) {
                let py = space.axis_eval_y(ey, y);
                for (x, wx) in rule.mapped(xs[ex], xs[ex + 1]) {
                    let px = space.axis_eval_x(ex, x);
                    let w = wx * wy;
                    for i in 0..nloc * nloc {
                        let (ai, bi) = (i % nloc, i / nloc);
                        let gi = [px.d1[ai] * py.v[bi], px.v[ai] * py.d1[bi]];
                        for j in 0..nloc * nloc {
                            let (aj, bj) = (j % nloc, j / nloc);
                            let gj = [px.d1[aj] * py.v[bj], px.v[aj] * py.d1[bj]];
                            local[i * nloc * nloc + j] += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                        }
                    }
                }
            }
            for i in 0..nloc * nloc {
                let Some(di) = space.local_dof(ex, ey, i % nloc, i / nloc) else {
                    continue;
                };
                for j in 0..nloc * nloc {
                    if let Some(dj) = space.local_dof(ex, ey, j % nloc, j / nloc) {
                        triplets.push((di, dj, local[i * nloc * nloc + j]));
                    }
                }
            }
        }
    }
    let n = space.dof_count();
    SparseMatrixCsr::from_triplets(n, n, &triplets)
}

/// Gram matrix of `|·|²_{P′}`: a graph Laplacian of the strip grid with the
/// boundary strips eliminated as zeros.
pub fn dual_gram(dual: &DualMesh) -> Result<SparseMatrixCsr> {
    let mut triplets = Vec::new();
    let mut edge = |a: Option<usize>, b: Option<usize>| {
        if let Some(i) = a {
            triplets.push((i, i, 1.0));
        }
        if let Some(j) = b {
            triplets.push((j, j, 1.0));
        }
        if let (Some(i), Some(j)) = (a, b) {
            triplets.push((i, j, -1.0));
            triplets.push((j, i, -1.0));
        }
    };
    let (nx, ny) = (dual.x.lines(), dual.y.lines());
    for t in 1..ny {
        for s in 1..=nx {
            edge(dual.volume_index(s, t), dual.volume_index(s - 1, t));
        }
    }
    for s in 1..nx {
        for t in 1..=ny {
            edge(dual.volume_index(s, t), dual.volume_index(s, t - 1));
        }
    }
    let n = dual.interior_count();
    SparseMatrixCsr::from_triplets(n, n, &triplets)
}

/// `σ_min(L_D⁻¹ A L_H⁻ᵀ)` with `H = L_H L_Hᵀ`, `D = L_D L_Dᵀ`: the inf-sup
/// constant of `wᵀ A v` between the `H`- and `D`-norms.
pub fn whitened_sigma(a: &DenseMatrix, h: &DenseMatrix, d: &DenseMatrix) -> Result<f64> {
    let lh = cholesky_factor(h)?;
    let ld = cholesky_factor(d)?;
    let mut x = a.clone();
    ld.solve_lower_in_place(&mut x);
    let mut y = x.transpose();
    lh.solve_lower_in_place(&mut y);
    smallest_singular_value(&y.transpose())
}

fn quad_form(m: &SparseMatrixCsr, v: &[f64]) -> f64 {
    m.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Measure coercivity, boundedness and continuity on seeded random probes,
/// and the discrete inf-sup constant when the system is small enough.
pub fn verify_stability(
    space: &TrialSpace,
    dual: &DualMesh,
    alpha: &Coefficient,
    options: &StabilityOptions,
) -> Result<StabilityReport> {
    if options.probes == 0 {
        return invalid("at least one probe is required");
    }
    let n = space.dof_count();
    if n == 0 {
        return invalid("trial space has no degrees of freedom");
    }
    let a = assemble_matrix(space, dual, alpha, options.matrix_order)?;
    let h = h1_gram(space)?;
    let mut notes = Vec::new();
    let coercivity_supported = alpha.is_piecewise_constant();
    if !coercivity_supported {
        notes.push(
            "unsupported-coefficient: coercivity is only checked for piecewise-constant coefficients"
                .to_string(),
        );
    }

    let mut coercivity = f64::INFINITY;
    let mut boundedness = 0.0f64;
    let mut continuity = 0.0f64;
    for k in 0..options.probes as u64 {
        let v = TrialFunction(probe_vector(options.seed, k, n));
        let v_h1 = quad_form(&h, &v.0).sqrt();
        let pv = build_pi(space, dual, &v)?;
        let av = a.mul_vec(&v.0);
        if coercivity_supported {
            let apv: f64 = av.iter().zip(&pv.0).map(|(p, q)| p * q).sum();
            coercivity = coercivity.min(apv / (v_h1 * v_h1));
        }
        boundedness = boundedness.max(seminorm_dual(dual, &pv) / v_h1);

        let w = TestFunction(probe_vector(options.seed, (1 << 32) + k, n));
        let avw: f64 = av.iter().zip(&w.0).map(|(p, q)| p * q).sum();
        let denom = trial_broken_h2(space, &v)? * seminorm_dual(dual, &w);
        continuity = continuity.max(avw.abs() / denom);
    }

    let infsup_sigma = if n <= options.infsup_max_dofs {
        let d = dual_gram(dual)?;
        Some(whitened_sigma(&a.to_dense(), &h.to_dense(), &d.to_dense())?)
    } else {
        notes.push(format!(
            "inf-sup skipped: {n} unknowns exceed {}",
            options.infsup_max_dofs
        ));
        None
    };

    Ok(StabilityReport {
        h: space.primal().h(),
        dof_count: n,
        probes: options.probes,
        seed: options.seed,
        alpha_0: alpha.alpha_0(space.primal()),
        coercivity_ratio: coercivity_supported.then_some(coercivity),
        boundedness_ratio: boundedness,
        continuity_ratio: continuity,
        infsup_sigma,
        notes,
    })
}
