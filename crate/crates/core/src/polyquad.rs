//! Legendre polynomials, Gauss and Lobatto point sets, and 1D Lagrange bases.
//!
//! Everything here lives on the reference interval [-1, 1].

use crate::error::{invalid, Error, Result};

/// Largest polynomial order for which rules are generated.
pub const MAX_ORDER: usize = 64;

const NEWTON_MAX_ITERS: usize = 100;

/// Value and first derivative of the Legendre polynomial `L_r` at `x`.
pub fn legendre_eval(r: i64, x: f64) -> Result<(f64, f64)> {
    if r < 0 {
        return invalid(format!("Legendre degree must be non-negative, got {r}"));
    }
    if x.abs() > 1.0 + 1e-12 {
        return invalid(format!("Legendre argument {x} outside [-1, 1]"));
    }
    let (p, dp, _) = legendre_with_second(r as usize, x);
    Ok((p, dp))
}

/// `(L_r, L'_r, L''_r)` via the three-term recurrence and its derivatives.
///
/// The derivative recurrences `L'_{k+1} = L'_{k-1} + (2k+1) L_k` avoid the
/// `1/(1-x^2)` singularity at the endpoints.
pub(crate) fn legendre_with_second(r: usize, x: f64) -> (f64, f64, f64) {
    if r == 0 {
        return (1.0, 0.0, 0.0);
    }
    // (value, d1, d2) for degrees k-1 and k
    let (mut p0, mut d0, mut s0) = (1.0, 0.0, 0.0);
    let (mut p1, mut d1, mut s1) = (x, 1.0, 0.0);
    for k in 1..r {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        let s2 = s0 + (2.0 * kf + 1.0) * d1;
        (p0, d0, s0) = (p1, d1, s1);
        (p1, d1, s1) = (p2, d2, s2);
    }
    (p1, d1, s1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over `[lo, hi]` with the rule mapped affinely.
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (&g, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * g);
        }
        acc * half
    }

    /// Nodes and weights mapped to `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&g, &w)| (mid + half * g, w * half))
    }
}

fn check_order(r: usize) -> Result<()> {
    if r == 0 || r > MAX_ORDER {
        return invalid(format!("order must lie in 1..={MAX_ORDER}, got {r}"));
    }
    Ok(())
}

/// Newton iteration for a root of `f` given `f/f'`.
fn newton(mut x: f64, step: impl Fn(f64) -> f64) -> Result<f64> {
    for _ in 0..NEWTON_MAX_ITERS {
        let dx = step(x);
        x -= dx;
        if dx.abs() <= 1e-15 * x.abs().max(1.0) {
            // one polishing step
            return Ok(x - step(x));
        }
    }
    Err(Error::Numeric(format!(
        "Newton iteration did not converge from start near {x}"
    )))
}

/// Make a sorted node set exactly antisymmetric about 0.
fn symmetrize(nodes: &mut [f64]) {
    let n = nodes.len();
    for j in 0..n / 2 {
        let avg = 0.5 * (nodes[n - 1 - j] - nodes[j]);
        nodes[j] = -avg;
        nodes[n - 1 - j] = avg;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

/// The `r`-point Gauss–Legendre rule: nodes are the roots of `L_r`.
pub fn gauss_rule(r: usize) -> Result<QuadratureRule> {
    check_order(r)?;
    let rf = r as f64;
    let mut nodes = Vec::with_capacity(r);
    for j in 1..=r {
        let guess = -(std::f64::consts::PI * (j as f64 - 0.25) / (rf + 0.5)).cos();
        let root = newton(guess, |x| {
            let (p, dp, _) = legendre_with_second(r, x);
            p / dp
        })?;
        nodes.push(root);
    }
    nodes.sort_by(f64::total_cmp);
    symmetrize(&mut nodes);
    let weights = nodes
        .iter()
        .map(|&g| {
            let (_, dp, _) = legendre_with_second(r, g);
            2.0 / ((1.0 - g * g) * dp * dp)
        })
        .collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        order: r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Gauss,
    Lobatto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet1D {
    pub nodes: Vec<f64>,
    pub kind: NodeKind,
}

/// Lobatto points of degree `r`: `{-1} ∪ roots(L'_r) ∪ {1}`.
pub fn lobatto_points(r: usize) -> Result<NodeSet1D> {
    check_order(r)?;
    let mut nodes = Vec::with_capacity(r + 1);
    nodes.push(-1.0);
    for j in 1..r {
        let guess = -(std::f64::consts::PI * j as f64 / r as f64).cos();
        let root = newton(guess, |x| {
            let (_, dp, ddp) = legendre_with_second(r, x);
            dp / ddp
        })?;
        nodes.push(root);
    }
    nodes.push(1.0);
    nodes.sort_by(f64::total_cmp);
    symmetrize(&mut nodes);
    Ok(NodeSet1D {
        nodes,
        kind: NodeKind::Lobatto,
    })
}

/// Lagrange basis on a fixed node set, in barycentric form.
///
/// Derivatives are evaluated by interpolating the nodal differentiation
/// matrix, which is exact for the degree-`n-1` polynomials `ℓ'_j` and stays
/// accurate arbitrarily close to the nodes.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    bary: Vec<f64>,
    // diff[i * n + j] = ℓ'_j(x_i)
    diff: Vec<f64>,
    // diff2[i * n + j] = ℓ''_j(x_i)
    diff2: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: &[f64]) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return invalid("Lagrange basis needs at least one node");
        }
        let mut bary = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    let d = nodes[j] - nodes[k];
                    if d == 0.0 {
                        return invalid(format!("duplicate interpolation node {}", nodes[j]));
                    }
                    bary[j] /= d;
                }
            }
        }
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let d = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                    diff[i * n + j] = d;
                    diag -= d;
                }
            }
            diff[i * n + i] = diag;
        }
        let mut diff2 = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                diff2[i * n + j] = (0..n).map(|k| diff[i * n + k] * diff[k * n + j]).sum();
            }
        }
        Ok(Self {
            nodes: nodes.to_vec(),
            bary,
            diff,
            diff2,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Basis values at `x`, written into `out`.
    pub fn values_into(&self, x: f64, out: &mut [f64]) {
        let n = self.nodes.len();
        if let Some(hit) = self.nodes.iter().position(|&xj| xj == x) {
            out[..n].fill(0.0);
            out[hit] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for j in 0..n {
            let t = self.bary[j] / (x - self.nodes[j]);
            out[j] = t;
            denom += t;
        }
        for v in &mut out[..n] {
            *v /= denom;
        }
    }

    /// Values, first and second derivatives at `x`.
    pub fn eval_all(&self, x: f64, values: &mut [f64], d1: &mut [f64], d2: &mut [f64]) {
        let n = self.nodes.len();
        self.values_into(x, values);
        for j in 0..n {
            let mut a = 0.0;
            let mut b = 0.0;
            for i in 0..n {
                a += self.diff[i * n + j] * values[i];
                b += self.diff2[i * n + j] * values[i];
            }
            d1[j] = a;
            d2[j] = b;
        }
    }

    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.values_into(x, &mut out);
        out
    }

    /// `(values, first derivatives)` at `x`.
    pub fn eval(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let (mut v, mut d, mut s) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        self.eval_all(x, &mut v, &mut d, &mut s);
        (v, d)
    }
}

/// Values and derivatives of the Lagrange basis on `nodes` at `x`.
pub fn lagrange_eval_1d(nodes: &NodeSet1D, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(LagrangeBasis::new(&nodes.nodes)?.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_eval(0, 0.3).unwrap(), (1.0, 0.0));
        let (p, dp) = legendre_eval(2, 0.5).unwrap();
        assert!((p + 0.125).abs() < 1e-15 && (dp - 1.5).abs() < 1e-15);
        let (p, dp) = legendre_eval(5, 1.0).unwrap();
        assert!((p - 1.0).abs() < 1e-15 && (dp - 15.0).abs() < 1e-13);
        assert!(legendre_eval(-1, 0.0).is_err());
        assert!(legendre_eval(3, 1.5).is_err());
    }

    #[test]
    fn legendre_second_derivative_matches_closed_form() {
        // L_3 = (5x^3 - 3x)/2, L_3'' = 15x
        let (_, _, s) = legendre_with_second(3, 0.4);
        assert!((s - 6.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_small_rules() {
        let g1 = gauss_rule(1).unwrap();
        assert_eq!(g1.nodes, vec![0.0]);
        assert!((g1.weights[0] - 2.0).abs() < 1e-15);

        let g2 = gauss_rule(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((g2.nodes[0] + s).abs() < 1e-15 && (g2.nodes[1] - s).abs() < 1e-15);
        assert!(g2.weights.iter().all(|w| (w - 1.0).abs() < 1e-14));

        let g3 = gauss_rule(3).unwrap();
        let s = (0.6f64).sqrt();
        for (got, want) in g3.nodes.iter().zip([-s, 0.0, s]) {
            assert!((got - want).abs() < 1e-15);
        }
        for (got, want) in g3.weights.iter().zip([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_exactness_up_to_degree_2r_minus_1() {
        for r in 1..=10 {
            let rule = gauss_rule(r).unwrap();
            for k in 0..2 * r {
                let q: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(g, w)| w * g.powi(k as i32))
                    .sum();
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 / (k as f64 + 1.0)
                };
                assert!((q - exact).abs() < 1e-13, "r={r} k={k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn gauss_rules_up_to_cap_are_valid() {
        for r in [11, 20, 33, 50, 64] {
            let rule = gauss_rule(r).unwrap();
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-14, "r={r} sum={sum}");
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(rule.nodes.iter().all(|g| g.abs() < 1.0));
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for &g in &rule.nodes {
                assert!(legendre_with_second(r, g).0.abs() < 1e-13);
            }
        }
        assert!(gauss_rule(0).is_err());
        assert!(gauss_rule(65).is_err());
    }

    #[test]
    fn symmetric_nodes_and_weights() {
        for r in 1..=12 {
            let rule = gauss_rule(r).unwrap();
            let n = rule.len();
            for j in 0..n {
                assert!((rule.nodes[j] + rule.nodes[n - 1 - j]).abs() < 1e-14);
                assert!((rule.weights[j] - rule.weights[n - 1 - j]).abs() < 1e-14);
            }
            let lob = lobatto_points(r).unwrap();
            let n = lob.nodes.len();
            for j in 0..n {
                assert!((lob.nodes[j] + lob.nodes[n - 1 - j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lobatto_small_sets() {
        assert_eq!(lobatto_points(1).unwrap().nodes, vec![-1.0, 1.0]);
        assert_eq!(lobatto_points(2).unwrap().nodes, vec![-1.0, 0.0, 1.0]);
        let l3 = lobatto_points(3).unwrap().nodes;
        let s = 1.0 / 5f64.sqrt();
        for (got, want) in l3.iter().zip([-1.0, -s, s, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn lobatto_and_gauss_interlace() {
        for r in 1..=20 {
            let lob = lobatto_points(r).unwrap();
            assert_eq!(lob.nodes.len(), r + 1);
            assert_eq!(lob.nodes[0], -1.0);
            assert_eq!(lob.nodes[r], 1.0);
            assert!(lob.nodes.windows(2).all(|w| w[0] < w[1]));
            let gauss = gauss_rule(r).unwrap();
            for w in lob.nodes.windows(2) {
                let inside = gauss
                    .nodes
                    .iter()
                    .filter(|&&g| w[0] < g && g < w[1])
                    .count();
                assert_eq!(inside, 1, "r={r} interval {w:?}");
            }
            for &l in &lob.nodes[1..r] {
                assert!(legendre_with_second(r, l).1.abs() < 1e-11 * (r * r) as f64);
            }
        }
    }

    #[test]
    fn lagrange_interpolation_property() {
        let nodes = lobatto_points(5).unwrap();
        for (j, &x) in nodes.nodes.iter().enumerate() {
            let (v, _) = lagrange_eval_1d(&nodes, x).unwrap();
            for (k, val) in v.iter().enumerate() {
                assert_eq!(*val, if k == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn lagrange_duplicate_nodes_rejected() {
        let nodes = NodeSet1D {
            nodes: vec![-1.0, 0.0, 0.0, 1.0],
            kind: NodeKind::Lobatto,
        };
        assert!(lagrange_eval_1d(&nodes, 0.3).is_err());
    }

    #[test]
    fn lagrange_derivative_matches_monomial() {
        // interpolating x^4 on 5 Lobatto nodes is exact
        let basis = LagrangeBasis::new(&lobatto_points(4).unwrap().nodes).unwrap();
        let coeffs: Vec<f64> = basis.nodes().iter().map(|x| x.powi(4)).collect();
        let n = basis.len();
        let (mut v, mut d, mut s) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for &x in &[-0.93, -0.2, 0.0, 0.31, 0.999_999_999] {
            basis.eval_all(x, &mut v, &mut d, &mut s);
            let val: f64 = coeffs.iter().zip(&v).map(|(c, b)| c * b).sum();
            let der: f64 = coeffs.iter().zip(&d).map(|(c, b)| c * b).sum();
            let sec: f64 = coeffs.iter().zip(&s).map(|(c, b)| c * b).sum();
            assert!((val - x.powi(4)).abs() < 1e-14);
            assert!((der - 4.0 * x.powi(3)).abs() < 1e-13);
            assert!((sec - 12.0 * x * x).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn lagrange_partition_of_unity(r in 1usize..=12, x in -1.0f64..=1.0) {
            let nodes = lobatto_points(r).unwrap();
            let (v, d) = lagrange_eval_1d(&nodes, x).unwrap();
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            prop_assert!(d.iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
