//! Experiment drivers behind the command line: single solve, convergence
//! study and stability study, with their JSON and CSV encodings.
//!
//! Every output is a pure function of the config and its seed. The only
//! field that is not is `metadata.timestamp`, which the caller supplies.

use serde::Serialize;

use crate::analysis::{
    convergence_rates, error_report, verify_stability, ConvergenceRates, ErrorReport,
    StabilityOptions,
};
use crate::config::Problem;
use crate::error::{Error, Result};
use crate::solver::solve;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub tool_version: String,
    pub timestamp: String,
}

impl Metadata {
    pub fn new(problem: &Problem, timestamp: impl Into<String>) -> Self {
        Self {
            config_hash: problem.config.hash(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp.into(),
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("study output serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub schema_version: &'static str,
    pub order: usize,
    /// Elements along x and y.
    pub elements: [usize; 2],
    pub dofs: usize,
    /// Lobatto node of each DOF, in DOF order.
    pub nodes: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub residual: f64,
    pub error_report: Option<ErrorReport>,
    pub metadata: Metadata,
}

impl SolveOutput {
    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Solve on the configured mesh; report errors when `u_exact` is given.
pub fn run_solve(problem: &Problem, metadata: Metadata) -> Result<SolveOutput> {
    let mesh = problem.mesh()?;
    let alpha = problem.coefficient(&mesh)?;
    let q = problem.quadrature();
    let d = solve(&mesh, problem.order(), &alpha, &problem.f, q)?;
    let error_report = match &problem.u_exact {
        Some(u) => Some(error_report(&d.space, u, &d.solution, q.error)?),
        None => None,
    };
    let n = d.space.dof_count();
    Ok(SolveOutput {
        schema_version: SCHEMA_VERSION,
        order: problem.order(),
        elements: [mesh.m(), mesh.n()],
        dofs: n,
        nodes: (0..n)
            .map(|k| {
                let (x, y) = d.space.dof_coords(k);
                [x, y]
            })
            .collect(),
        values: d.solution.0,
        residual: d.residual,
        error_report,
        metadata,
    })
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() || n_list[0] == 0 {
        return Err(Error::InvalidArgument(
            "n-list must hold positive sizes".into(),
        ));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "n-list must be strictly increasing".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub schema_version: &'static str,
    pub order: usize,
    /// One row per level, by decreasing `h`.
    pub rows: Vec<ErrorReport>,
    /// Observed orders between consecutive levels; `None` for a single level.
    pub orders: Option<ConvergenceRates>,
    pub metadata: Metadata,
}

pub const CONVERGENCE_COLUMNS: [&str; 9] = [
    "n",
    "h",
    "dofs",
    "err_h1",
    "err_l2",
    "err_supercloseness",
    "order_h1",
    "order_l2",
    "order_sc",
];

impl ConvergenceStudy {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// RFC 4180 CSV with LF line endings; order columns are empty on the
    /// first row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Numeric(format!("csv encoding failed: {e}"));
        w.write_record(CONVERGENCE_COLUMNS).map_err(csv_err)?;
        for (i, row) in self.rows.iter().enumerate() {
            let order = |pick: fn(&ConvergenceRates) -> &Vec<f64>| match (&self.orders, i) {
                (Some(o), i) if i > 0 => format!("{}", pick(o)[i - 1]),
                _ => String::new(),
            };
            w.write_record([
                row.n.to_string(),
                format!("{:e}", row.h),
                row.dof_count.to_string(),
                format!("{:e}", row.err_h1),
                format!("{:e}", row.err_l2),
                format!("{:e}", row.err_supercloseness),
                order(|o| &o.h1),
                order(|o| &o.l2),
                order(|o| &o.supercloseness),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Numeric(format!("csv encoding failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Fixed-width table for the terminal.
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:>5} {:>10} {:>7} {:>11} {:>11} {:>11} {:>7} {:>7} {:>7}\n",
            "n", "h", "dofs", "err_h1", "err_l2", "err_sc", "ord_h1", "ord_l2", "ord_sc"
        );
        for (i, row) in self.rows.iter().enumerate() {
            let ord = |pick: fn(&ConvergenceRates) -> &Vec<f64>| match (&self.orders, i) {
                (Some(o), i) if i > 0 => format!("{:.3}", pick(o)[i - 1]),
                _ => "-".to_string(),
            };
            out.push_str(&format!(
                "{:>5} {:>10.4e} {:>7} {:>11.4e} {:>11.4e} {:>11.4e} {:>7} {:>7} {:>7}\n",
                row.n,
                row.h,
                row.dof_count,
                row.err_h1,
                row.err_l2,
                row.err_supercloseness,
                ord(|o| &o.h1),
                ord(|o| &o.l2),
                ord(|o| &o.supercloseness),
            ));
        }
        out
    }
}

/// Solve on uniform `n×n` meshes for each `n` and measure the errors and
/// their observed orders. Needs `u_exact`.
pub fn run_convergence(
    problem: &Problem,
    n_list: &[usize],
    metadata: Metadata,
) -> Result<ConvergenceStudy> {
    check_n_list(n_list)?;
    let Some(u) = &problem.u_exact else {
        return Err(Error::Config("a convergence study needs u_exact".into()));
    };
    let r = problem.order();
    let q = problem.quadrature();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mesh = problem.uniform_mesh(n)?;
        let alpha = problem.coefficient(&mesh)?;
        let d = solve(&mesh, r, &alpha, &problem.f, q)?;
        rows.push(error_report(&d.space, u, &d.solution, q.error)?);
    }
    let orders = if rows.len() > 1 {
        Some(convergence_rates(&rows)?)
    } else {
        None
    };
    Ok(ConvergenceStudy {
        schema_version: SCHEMA_VERSION,
        order: r,
        rows,
        orders,
        metadata,
    })
}

/// Either a measured inf-sup constant or the marker `"skipped"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum InfSup {
    Value(f64),
    Skipped(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub probes: usize,
    pub seed: u64,
    pub alpha_0: f64,
    pub coercivity_ratio: Option<f64>,
    pub boundedness_ratio: f64,
    pub continuity_ratio: f64,
    pub infsup_sigma: InfSup,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityStudy {
    pub schema_version: &'static str,
    pub order: usize,
    pub rows: Vec<StabilityRow>,
    pub metadata: Metadata,
}

impl StabilityStudy {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:>5} {:>7} {:>12} {:>12} {:>12} {:>10}\n",
            "n", "dofs", "coercivity", "boundedness", "continuity", "inf-sup"
        );
        for row in &self.rows {
            let coer = row
                .coercivity_ratio
                .map_or("-".to_string(), |c| format!("{c:.6}"));
            let sigma = match row.infsup_sigma {
                InfSup::Value(s) => format!("{s:.6}"),
                InfSup::Skipped(s) => s.to_string(),
            };
            out.push_str(&format!(
                "{:>5} {:>7} {:>12} {:>12.6} {:>12.6} {:>10}\n",
                row.n, row.dofs, coer, row.boundedness_ratio, row.continuity_ratio, sigma
            ));
        }
        out
    }
}

/// Stability measurements on uniform `n×n` meshes with `probes` seeded
/// random trial functions per level.
pub fn run_stability(
    problem: &Problem,
    n_list: &[usize],
    probes: usize,
    metadata: Metadata,
) -> Result<StabilityStudy> {
    check_n_list(n_list)?;
    if probes == 0 {
        return Err(Error::InvalidArgument("probes must be at least 1".into()));
    }
    let r = problem.order();
    let mut options = StabilityOptions::new(r, probes, problem.config.seed);
    options.matrix_order = problem.quadrature().matrix;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mesh = problem.uniform_mesh(n)?;
        let alpha = problem.coefficient(&mesh)?;
        let space = crate::space::TrialSpace::new(&mesh, r)?;
        let dual = space.dual()?;
        let rep = verify_stability(&space, &dual, &alpha, &options)?;
        rows.push(StabilityRow {
            n,
            h: rep.h,
            dofs: rep.dof_count,
            probes: rep.probes,
            seed: rep.seed,
            alpha_0: rep.alpha_0,
            coercivity_ratio: rep.coercivity_ratio,
            boundedness_ratio: rep.boundedness_ratio,
            continuity_ratio: rep.continuity_ratio,
            infsup_sigma: rep
                .infsup_sigma
                .map_or(InfSup::Skipped("skipped"), InfSup::Value),
            notes: rep.notes,
        });
    }
    Ok(StabilityStudy {
        schema_version: SCHEMA_VERSION,
        order: r,
        rows,
        metadata,
    })
}
