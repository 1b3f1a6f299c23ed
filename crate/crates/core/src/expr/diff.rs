use super::{Expr, ExprError, Func, Var};

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

/// Constant folding plus the 0/1 identities.
pub(crate) fn simplify(e: Expr) -> Expr {
    use Expr::*;
    match e {
        Neg(a) => match simplify(*a) {
            Num(v) => Num(-v),
            Neg(inner) => *inner,
            a => Neg(b(a)),
        },
        Add(l, r) => match (simplify(*l), simplify(*r)) {
            (Num(p), Num(q)) => Num(p + q),
            (Num(z), a) | (a, Num(z)) if z == 0.0 => a,
            (a, Neg(c)) => Sub(b(a), c),
            (a, c) => Add(b(a), b(c)),
        },
        Sub(l, r) => match (simplify(*l), simplify(*r)) {
            (Num(p), Num(q)) => Num(p - q),
            (a, Num(z)) if z == 0.0 => a,
            (Num(z), a) if z == 0.0 => simplify(Neg(b(a))),
            (a, Neg(c)) => Add(b(a), c),
            (a, c) => Sub(b(a), b(c)),
        },
        Mul(l, r) => match (simplify(*l), simplify(*r)) {
            (Num(p), Num(q)) => Num(p * q),
            (Num(z), _) | (_, Num(z)) if z == 0.0 => Num(0.0),
            (Num(o), a) | (a, Num(o)) if o == 1.0 => a,
            (Num(o), a) | (a, Num(o)) if o == -1.0 => simplify(Neg(b(a))),
            // keep numeric factors in front
            (a, Num(q)) => Mul(b(Num(q)), b(a)),
            (a, c) => Mul(b(a), b(c)),
        },
        Div(l, r) => match (simplify(*l), simplify(*r)) {
            (Num(p), Num(q)) if q != 0.0 => Num(p / q),
            (a, Num(o)) if o == 1.0 => a,
            (Num(z), c) if z == 0.0 && !(c.is_constant() && c.eval(0.0, 0.0) == 0.0) => Num(0.0),
            (a, c) => Div(b(a), b(c)),
        },
        Pow(l, r) => match (simplify(*l), simplify(*r)) {
            (_, Num(z)) if z == 0.0 => Num(1.0),
            (a, Num(o)) if o == 1.0 => a,
            (Num(p), Num(q)) => Num(Pow(b(Num(p)), b(Num(q))).eval(0.0, 0.0)),
            (a, c) => Pow(b(a), b(c)),
        },
        Call(f, a) => Call(f, b(simplify(*a))),
        leaf => leaf,
    }
}

fn raw_derivative(e: &Expr, var: Var) -> Result<Expr, ExprError> {
    use Expr::*;
    Ok(match e {
        Num(_) | Pi => num(0.0),
        Var(v) => num(if *v == var { 1.0 } else { 0.0 }),
        Neg(a) => Neg(b(raw_derivative(a, var)?)),
        Add(l, r) => Add(b(raw_derivative(l, var)?), b(raw_derivative(r, var)?)),
        Sub(l, r) => Sub(b(raw_derivative(l, var)?), b(raw_derivative(r, var)?)),
        Mul(l, r) => Add(
            b(Mul(b(raw_derivative(l, var)?), r.clone())),
            b(Mul(l.clone(), b(raw_derivative(r, var)?))),
        ),
        Div(l, r) => Div(
            b(Sub(
                b(Mul(b(raw_derivative(l, var)?), r.clone())),
                b(Mul(l.clone(), b(raw_derivative(r, var)?))),
            )),
            b(Pow(r.clone(), b(num(2.0)))),
        ),
        Pow(base, exponent) => {
            let folded = simplify((**exponent).clone());
            match folded.integer_value() {
                Some(n) => Mul(
                    b(Mul(
                        b(num(n as f64)),
                        b(Pow(base.clone(), b(num((n - 1) as f64)))),
                    )),
                    b(raw_derivative(base, var)?),
                ),
                None if e.is_constant() => num(0.0),
                None => {
                    return Err(ExprError::UnsupportedDerivative(format!(
                        "exponent '{exponent}' in '{e}' is not an integer literal"
                    )))
                }
            }
        }
        Call(f, a) => {
            let outer = match f {
                Func::Sin => Call(Func::Cos, a.clone()),
                Func::Cos => Neg(b(Call(Func::Sin, a.clone()))),
                Func::Exp => Call(Func::Exp, a.clone()),
                Func::Sqrt => Div(b(num(0.5)), b(Call(Func::Sqrt, a.clone()))),
            };
            Mul(b(raw_derivative(a, var)?), b(outer))
        }
    })
}

/// Symbolic partial derivative with respect to `var`, simplified.
pub fn differentiate(e: &Expr, var: Var) -> Result<Expr, ExprError> {
    Ok(simplify(raw_derivative(e, var)?))
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd(e: &Expr, var: Var, x: f64, y: f64) -> f64 {
        let h = 1e-6;
        match var {
            Var::X => (e.eval(x + h, y) - e.eval(x - h, y)) / (2.0 * h),
            Var::Y => (e.eval(x, y + h) - e.eval(x, y - h)) / (2.0 * h),
        }
    }

    fn check_against_fd(src: &str) {
        let e = parse(src).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for var in [Var::X, Var::Y] {
            let d = differentiate(&e, var).unwrap();
            for _ in 0..20 {
                let (x, y) = (rng.random_range(0.1..0.9), rng.random_range(0.1..0.9));
                let (got, want) = (d.eval(x, y), fd(&e, var, x, y));
                assert!(
                    (got - want).abs() <= 1e-6 * want.abs().max(1.0),
                    "d/d{var:?} {src} at ({x},{y}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn sine_derivative_is_simplified() {
        let d = differentiate(&parse("sin(pi*x)").unwrap(), Var::X).unwrap();
        assert_eq!(d.to_string(), "pi*cos(pi*x)");
        check_against_fd("sin(pi*x)");
    }

    #[test]
    fn trivial_derivatives() {
        assert_eq!(
            differentiate(&parse("y").unwrap(), Var::X).unwrap(),
            Expr::Num(0.0)
        );
        let dx = differentiate(&parse("x*y").unwrap(), Var::X).unwrap();
        assert_eq!(differentiate(&dx, Var::Y).unwrap(), Expr::Num(1.0));
        assert_eq!(
            differentiate(&parse("2^pi").unwrap(), Var::X).unwrap(),
            Expr::Num(0.0)
        );
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for src in [
            "2*pi^2*sin(pi*x)*sin(pi*y)",
            "x*(1-x)*y*(1-y)",
            "exp(x*y)/(1+x^2)",
            "sqrt(1+x+y^2)",
            "cos(3*x)^3 - x^-2*y",
            "-(x-y)^4/7",
        ] {
            check_against_fd(src);
        }
    }

    #[test]
    fn non_integer_exponent_rejected() {
        let e = parse("x^0.5").unwrap();
        assert!(matches!(
            differentiate(&e, Var::X),
            Err(ExprError::UnsupportedDerivative(_))
        ));
        let e = parse("2^x").unwrap();
        assert!(matches!(
            differentiate(&e, Var::X),
            Err(ExprError::UnsupportedDerivative(_))
        ));
    }

    #[test]
    fn differentiation_is_linear() {
        let e1 = parse("sin(x*y) + x^3").unwrap();
        let e2 = parse("exp(y)*x").unwrap();
        let a = 2.5;
        let combo = Expr::Add(
            Box::new(Expr::Mul(Box::new(Expr::Num(a)), Box::new(e1.clone()))),
            Box::new(e2.clone()),
        );
        let d = differentiate(&combo, Var::X).unwrap();
        let d1 = differentiate(&e1, Var::X).unwrap();
        let d2 = differentiate(&e2, Var::X).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (x, y) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let lhs = d.eval(x, y);
            let rhs = a * d1.eval(x, y) + d2.eval(x, y);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn simplification_identities() {
        let s = |src: &str| simplify(parse(src).unwrap()).to_string();
        assert_eq!(s("0 + x*1"), "x");
        assert_eq!(s("x^1 - 0"), "x");
        assert_eq!(s("0*sin(x) + y^0"), "1.0");
        assert_eq!(s("--x"), "x");
        assert_eq!(s("0 - y"), "-y");
        assert_eq!(s("x*3"), "3.0*x");
    }
}
