//! WebAssembly bindings for the browser demo. Each export takes the JSON
//! config text from the page and returns JSON text.

use hofv::analysis::ErrorReport;
use hofv::config::{Problem, ProblemConfig};
use hofv::solver::solve;
use hofv::study::{run_convergence, run_stability, Metadata};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest heatmap side accepted from the page.
pub const MAX_RESOLUTION: usize = 400;

#[derive(Debug, Serialize)]
pub struct Heatmap {
    pub resolution: usize,
    /// `[a, b, c, d]`
    pub bounds: [f64; 4],
    /// Row-major samples, first row at `y = c`.
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub dofs: usize,
    pub error_report: Option<ErrorReport>,
}

fn problem(config: &str) -> hofv::Result<Problem> {
    Problem::new(ProblemConfig::from_json(config)?)
}

fn parse_n_list(text: &str) -> hofv::Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| hofv::Error::InvalidArgument(format!("bad mesh size '{s}'")))
        })
        .collect()
}

/// Solve on the configured mesh and sample `u_P` at the centres of a
/// `resolution²` pixel grid.
pub fn heatmap(config: &str, resolution: usize) -> hofv::Result<Heatmap> {
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(hofv::Error::InvalidArgument(format!(
            "resolution must be in 1..={MAX_RESOLUTION}"
        )));
    }
    let p = problem(config)?;
    let mesh = p.mesh()?;
    let alpha = p.coefficient(&mesh)?;
    let q = p.quadrature();
    let d = solve(&mesh, p.order(), &alpha, &p.f, q)?;
    let [a, b, c, dd] = mesh.bounds();
    let mut values = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        let y = c + (dd - c) * (j as f64 + 0.5) / resolution as f64;
        for i in 0..resolution {
            let x = a + (b - a) * (i as f64 + 0.5) / resolution as f64;
            values.push(d.space.eval(&d.solution, x, y)?);
        }
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let error_report = match &p.u_exact {
        Some(u) => Some(hofv::analysis::error_report(
            &d.space,
            u,
            &d.solution,
            q.error,
        )?),
        None => None,
    };
    Ok(Heatmap {
        resolution,
        bounds: [a, b, c, dd],
        values,
        min,
        max,
        dofs: d.space.dof_count(),
        error_report,
    })
}

pub fn convergence_json(config: &str, n_list: &str, timestamp: &str) -> hofv::Result<String> {
    let p = problem(config)?;
    let study = run_convergence(&p, &parse_n_list(n_list)?, Metadata::new(&p, timestamp))?;
    Ok(study.to_json())
}

pub fn stability_json(
    config: &str,
    n_list: &str,
    probes: usize,
    timestamp: &str,
) -> hofv::Result<String> {
    let p = problem(config)?;
    let study = run_stability(
        &p,
        &parse_n_list(n_list)?,
        probes,
        Metadata::new(&p, timestamp),
    )?;
    Ok(study.to_json())
}

fn js_err(e: hofv::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = solveHeatmap)]
pub fn solve_heatmap(config: &str, resolution: usize) -> Result<String, JsError> {
    let h = heatmap(config, resolution).map_err(js_err)?;
    serde_json::to_string(&h).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = convergenceStudy)]
pub fn convergence_study(config: &str, n_list: &str, timestamp: &str) -> Result<String, JsError> {
    convergence_json(config, n_list, timestamp).map_err(js_err)
}

#[wasm_bindgen(js_name = stabilityStudy)]
pub fn stability_study(
    config: &str,
    n_list: &str,
    probes: usize,
    timestamp: &str,
) -> Result<String, JsError> {
    stability_json(config, n_list, probes, timestamp).map_err(js_err)
}
