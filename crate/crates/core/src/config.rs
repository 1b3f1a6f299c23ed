//! Problem configuration: a single JSON document describing domain, order,
//! coefficient, source, optional exact solution, mesh and quadrature.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::{Coefficient, ElementValues, QuadratureOrders};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::field::SymbolicField;
use crate::mesh::PrimalMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSpec {
    Constant(f64),
    /// `grid[i][j]`: value on cell `i` along x and `j` along y of a uniform
    /// partition of the domain.
    Grid(Vec<Vec<f64>>),
    Expr(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshSpec {
    Uniform { m: usize, n: usize },
    Breakpoints { xs: Vec<f64>, ys: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: Domain,
    pub order: usize,
    pub alpha: AlphaSpec,
    pub f: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_exact: Option<String>,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub quadrature: QuadratureOverrides,
    #[serde(default)]
    pub seed: u64,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return config_err(format!("config not found: {}", path.display()))
            }
            Err(e) => return Err(e.into()),
        };
        Self::from_json(&text)
    }

    /// Canonical JSON of the config (fixed field order, no whitespace).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Lowercase hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// A validated configuration with its expressions parsed.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub f: Expr,
    pub u_exact: Option<SymbolicField>,
    alpha_expr: Option<Expr>,
}

impl Problem {
    pub fn new(config: ProblemConfig) -> Result<Self> {
        let Domain { a, b, c, d } = config.domain;
        if ![a, b, c, d].iter().all(|v| v.is_finite()) || !(a < b && c < d) {
            return config_err(format!(
                "domain must satisfy a < b and c < d, got [{a}, {b}] x [{c}, {d}]"
            ));
        }
        let r = config.order;
        if r == 0 {
            return config_err("order must be at least 1");
        }
        let f = parse(&config.f).map_err(|e| Error::Config(format!("f: {e}")))?;
        f.validate().map_err(|e| Error::Config(format!("f: {e}")))?;
        let u_exact = match &config.u_exact {
            Some(src) => Some(
                SymbolicField::parse(src).map_err(|e| Error::Config(format!("u_exact: {e}")))?,
            ),
            None => None,
        };
        let alpha_expr = match &config.alpha {
            AlphaSpec::Expr(src) => {
                let e = parse(src).map_err(|e| Error::Config(format!("alpha: {e}")))?;
                e.validate()
                    .map_err(|e| Error::Config(format!("alpha: {e}")))?;
                Some(e)
            }
            _ => None,
        };
        let problem = Self {
            config,
            f,
            u_exact,
            alpha_expr,
        };
        problem.check_alpha()?;
        problem.check_quadrature()?;
        problem.mesh()?;
        Ok(problem)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(ProblemConfig::load(path)?)
    }

    pub fn order(&self) -> usize {
        self.config.order
    }

    fn check_alpha(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidCoefficient(what));
        match &self.config.alpha {
            AlphaSpec::Constant(v) => {
                if !(v.is_finite() && *v > 0.0) {
                    return bad(format!("constant coefficient must be positive, got {v}"));
                }
            }
            AlphaSpec::Grid(rows) => {
                ElementValues::new(rows.clone())?;
                if let Some(v) = rows
                    .iter()
                    .flatten()
                    .find(|v| !(v.is_finite() && **v > 0.0))
                {
                    return bad(format!("grid coefficient must be positive, got {v}"));
                }
            }
            AlphaSpec::Expr(_) => {
                let Domain { a, b, c, d } = self.config.domain;
                let box_mesh = PrimalMesh::uniform(a, b, c, d, 1, 1)?;
                let e = self.alpha_expr.clone().expect("parsed at load");
                let a0 = Coefficient::Field(e).alpha_0(&box_mesh);
                if !(a0 > 0.0) {
                    return bad(format!(
                        "coefficient expression must be positive on the domain (sampled minimum {a0})"
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_quadrature(&self) -> Result<()> {
        let r = self.order();
        let q = self.quadrature();
        if q.matrix < r {
            return config_err(format!("matrix_order {} is below r = {r}", q.matrix));
        }
        if q.rhs < r + 1 {
            return config_err(format!("rhs_order {} is below r + 1 = {}", q.rhs, r + 1));
        }
        if q.error < r + 3 {
            return config_err(format!(
                "error_order {} is below r + 3 = {}",
                q.error,
                r + 3
            ));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureOrders {
        let d = QuadratureOrders::defaults(self.order());
        let o = self.config.quadrature;
        QuadratureOrders {
            matrix: o.matrix_order.unwrap_or(d.matrix),
            rhs: o.rhs_order.unwrap_or(d.rhs),
            error: o.error_order.unwrap_or(d.error),
        }
    }

    /// The mesh named in the config.
    pub fn mesh(&self) -> Result<PrimalMesh> {
        let Domain { a, b, c, d } = self.config.domain;
        match &self.config.mesh {
            MeshSpec::Uniform { m, n } => self.uniform_mesh_mn(*m, *n),
            MeshSpec::Breakpoints { xs, ys } => {
                let ends =
                    |v: &[f64], lo: f64, hi: f64| v.first() == Some(&lo) && v.last() == Some(&hi);
                if !ends(xs, a, b) || !ends(ys, c, d) {
                    return config_err("mesh breakpoints must start and end at the domain edges");
                }
                PrimalMesh::new(xs.clone(), ys.clone())
                    .map_err(|e| Error::Config(format!("mesh: {e}")))
            }
        }
    }

    /// Uniform `n×n` mesh of the domain, used by the refinement studies.
    pub fn uniform_mesh(&self, n: usize) -> Result<PrimalMesh> {
        self.uniform_mesh_mn(n, n)
    }

    fn uniform_mesh_mn(&self, m: usize, n: usize) -> Result<PrimalMesh> {
        if m == 0 || n == 0 {
            return config_err("mesh needs at least one element in each direction");
        }
        let Domain { a, b, c, d } = self.config.domain;
        PrimalMesh::uniform(a, b, c, d, m, n)
    }

    /// The coefficient on `mesh`. A grid is mapped onto the elements; an
    /// element crossing a grid line is an error.
    pub fn coefficient(&self, mesh: &PrimalMesh) -> Result<Coefficient> {
        let alpha = match &self.config.alpha {
            AlphaSpec::Constant(v) => Coefficient::Constant(*v),
            AlphaSpec::Expr(_) => Coefficient::Field(self.alpha_expr.clone().expect("parsed")),
            AlphaSpec::Grid(rows) => {
                let Domain { a, b, c, d } = self.config.domain;
                let p = rows.len();
                let q = rows[0].len();
                let cx = grid_cells(mesh.x_breaks(), a, b, p)?;
                let cy = grid_cells(mesh.y_breaks(), c, d, q)?;
                let values = cx
                    .iter()
                    .map(|&i| cy.iter().map(|&j| rows[i][j]).collect())
                    .collect();
                Coefficient::PiecewiseConstant(ElementValues::new(values)?)
            }
        };
        alpha.validate(mesh)?;
        Ok(alpha)
    }
}

/// Grid cell of each element along one axis.
fn grid_cells(breaks: &[f64], lo: f64, hi: f64, cells: usize) -> Result<Vec<usize>> {
    let width = (hi - lo) / cells as f64;
    let tol = 1e-10 * (hi - lo);
    breaks
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let i = (((mid - lo) / width).floor() as usize).min(cells - 1);
            let (cl, ch) = (lo + i as f64 * width, lo + (i + 1) as f64 * width);
            if w[0] < cl - tol || w[1] > ch + tol {
                Err(Error::InvalidCoefficient(format!(
                    "element [{}, {}] straddles a line of the {cells}-cell coefficient grid",
                    w[0], w[1]
                )))
            } else {
                Ok(i)
            }
        })
        .collect()
}
