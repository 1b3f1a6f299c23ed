use serde::Serialize;

use super::ErrorReport;
use crate::error::{invalid, Result};

/// Observed order between consecutive levels,
/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`. An exact level (zero error)
/// gives `+∞`.
pub fn observed_orders(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() {
        return invalid("errors and meshsizes differ in length");
    }
    if errors.len() < 2 {
        return invalid("at least two levels are needed for an order");
    }
    if errors.iter().any(|e| !(*e >= 0.0)) {
        return invalid("errors must be non-negative");
    }
    if hs.windows(2).any(|w| !(w[1] < w[0]) || !(w[1] > 0.0)) {
        return invalid("meshsizes must be positive and strictly decreasing");
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| {
            if e[1] == 0.0 {
                f64::INFINITY
            } else {
                (e[0] / e[1]).ln() / (h[0] / h[1]).ln()
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRates {
    pub h1: Vec<f64>,
    pub l2: Vec<f64>,
    pub supercloseness: Vec<f64>,
}

pub fn convergence_rates(reports: &[ErrorReport]) -> Result<ConvergenceRates> {
    let hs: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let pick = |f: fn(&ErrorReport) -> f64| -> Result<Vec<f64>> {
        observed_orders(&reports.iter().map(f).collect::<Vec<_>>(), &hs)
    };
    Ok(ConvergenceRates {
        h1: pick(|r| r.err_h1)?,
        l2: pick(|r| r.err_l2)?,
        supercloseness: pick(|r| r.err_supercloseness)?,
    })
}

/// Mean of the finite orders, `None` if there are none.
pub fn mean_finite(orders: &[f64]) -> Option<f64> {
    let finite: Vec<f64> = orders.iter().copied().filter(|o| o.is_finite()).collect();
    (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64)
}
