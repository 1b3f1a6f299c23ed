//! Scalar fields on the plane: closures or parsed expressions, with
//! optional derivatives.

use crate::expr::{differentiate, parse, Expr, Var};
use crate::Result;

pub trait ScalarField {
    fn value(&self, x: f64, y: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64> ScalarField for F {
    fn value(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

impl ScalarField for Expr {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y)
    }
}

/// A field whose gradient (and possibly Hessian) is available.
pub trait SmoothField: ScalarField {
    fn gradient(&self, x: f64, y: f64) -> [f64; 2];

    /// `[∂xx, ∂xy, ∂yy]`, when known.
    fn hessian(&self, _x: f64, _y: f64) -> Option<[f64; 3]> {
        None
    }
}

/// An expression together with its symbolic first and second derivatives.
#[derive(Debug, Clone)]
pub struct SymbolicField {
    pub u: Expr,
    pub ux: Expr,
    pub uy: Expr,
    pub uxx: Expr,
    pub uxy: Expr,
    pub uyy: Expr,
}

impl SymbolicField {
    pub fn new(u: Expr) -> Result<Self> {
        u.validate()?;
        let ux = differentiate(&u, Var::X)?;
        let uy = differentiate(&u, Var::Y)?;
        Ok(Self {
            uxx: differentiate(&ux, Var::X)?,
            uxy: differentiate(&ux, Var::Y)?,
            uyy: differentiate(&uy, Var::Y)?,
            u,
            ux,
            uy,
        })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(parse(src)?)
    }

    /// `-Δu`, the source for unit coefficient.
    pub fn negative_laplacian(&self) -> Expr {
        Expr::Neg(Box::new(Expr::Add(
            Box::new(self.uxx.clone()),
            Box::new(self.uyy.clone()),
        )))
    }
}

impl ScalarField for SymbolicField {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.u.eval(x, y)
    }
}

impl SmoothField for SymbolicField {
    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        [self.ux.eval(x, y), self.uy.eval(x, y)]
    }

    fn hessian(&self, x: f64, y: f64) -> Option<[f64; 3]> {
        Some([
            self.uxx.eval(x, y),
            self.uxy.eval(x, y),
            self.uyy.eval(x, y),
        ])
    }
}

/// A field built from closures.
pub struct FnField<U, G, H = fn(f64, f64) -> [f64; 3]> {
    pub value: U,
    pub gradient: G,
    pub hessian: Option<H>,
}

impl<U, G> FnField<U, G>
where
    U: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> [f64; 2],
{
    pub fn new(value: U, gradient: G) -> Self {
        Self {
            value,
            gradient,
            hessian: None,
        }
    }
}

impl<U, G, H> FnField<U, G, H>
where
    U: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> [f64; 2],
    H: Fn(f64, f64) -> [f64; 3],
{
    pub fn with_hessian(value: U, gradient: G, hessian: H) -> Self {
        Self {
            value,
            gradient,
            hessian: Some(hessian),
        }
    }
}

impl<U, G, H> ScalarField for FnField<U, G, H>
where
    U: Fn(f64, f64) -> f64,
{
    fn value(&self, x: f64, y: f64) -> f64 {
        (self.value)(x, y)
    }
}

impl<U, G, H> SmoothField for FnField<U, G, H>
where
    U: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> [f64; 2],
    H: Fn(f64, f64) -> [f64; 3],
{
    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        (self.gradient)(x, y)
    }

    fn hessian(&self, x: f64, y: f64) -> Option<[f64; 3]> {
        self.hessian.as_ref().map(|h| h(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_laplacian_of_manufactured_solution() {
        let u = SymbolicField::parse("sin(pi*x)*sin(pi*y)").unwrap();
        let f = u.negative_laplacian();
        let pi = std::f64::consts::PI;
        for &(x, y) in &[(0.1, 0.2), (0.5, 0.5), (0.77, 0.31)] {
            let want = 2.0 * pi * pi * (pi * x).sin() * (pi * y).sin();
            assert!((f.eval(x, y) - want).abs() < 1e-12);
        }
        let u = SymbolicField::parse("x*(1-x)*y*(1-y)").unwrap();
        let f = u.negative_laplacian();
        let want = |x: f64, y: f64| 2.0 * (y * (1.0 - y) + x * (1.0 - x));
        assert!((f.eval(0.3, 0.6) - want(0.3, 0.6)).abs() < 1e-14);
    }
}
