//! Primal tensor-product partition and the Gauss-point dual partition.
//!
//! Per axis with `m` elements and order `r` there are `m*r` Gauss lines,
//! numbered `1..=m*r`, and `m*r + 1` strips numbered `0..=m*r`. Strip `s`
//! spans `[g_s, g_{s+1}]` with `g_0 = a` and `g_{mr+1} = b`, so Gauss line `s`
//! separates strips `s - 1` and `s`. Strips `0` and `m*r` are boundary strips.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::polyquad::{gauss_rule, QuadratureRule};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalMesh {
    x_breaks: Vec<f64>,
    y_breaks: Vec<f64>,
    h: f64,
}

/// Shape statistics of a primal mesh. Reported only, never enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeReport {
    pub max_aspect: f64,
    pub min_aspect: f64,
    pub max_neighbor_ratio: f64,
}

fn check_breaks(name: &str, breaks: &[f64]) -> Result<()> {
    if breaks.len() < 2 {
        return invalid(format!("{name} needs at least two breakpoints"));
    }
    if breaks.iter().any(|v| !v.is_finite()) {
        return invalid(format!("{name} contains a non-finite breakpoint"));
    }
    if let Some(w) = breaks.windows(2).find(|w| w[0] >= w[1]) {
        return invalid(format!(
            "{name} must be strictly increasing ({} >= {})",
            w[0], w[1]
        ));
    }
    Ok(())
}

fn max_width(breaks: &[f64]) -> f64 {
    breaks.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// Index of the element of `breaks` containing `t`; ties go to the lower
/// element except at the last breakpoint.
pub(crate) fn locate(breaks: &[f64], t: f64) -> usize {
    let m = breaks.len() - 1;
    let idx = breaks.partition_point(|&b| b < t);
    idx.saturating_sub(1).min(m - 1)
}

impl PrimalMesh {
    pub fn new(x_breaks: Vec<f64>, y_breaks: Vec<f64>) -> Result<Self> {
        check_breaks("x breakpoints", &x_breaks)?;
        check_breaks("y breakpoints", &y_breaks)?;
        let h = max_width(&x_breaks).max(max_width(&y_breaks));
        Ok(Self {
            x_breaks,
            y_breaks,
            h,
        })
    }

    pub fn uniform(a: f64, b: f64, c: f64, d: f64, m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return invalid("uniform mesh needs at least one element per axis");
        }
        let axis = |lo: f64, hi: f64, k: usize| -> Vec<f64> {
            (0..=k)
                .map(|i| {
                    if i == k {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / k as f64
                    }
                })
                .collect()
        };
        Self::new(axis(a, b, m), axis(c, d, n))
    }

    pub fn x_breaks(&self) -> &[f64] {
        &self.x_breaks
    }

    pub fn y_breaks(&self) -> &[f64] {
        &self.y_breaks
    }

    pub fn m(&self) -> usize {
        self.x_breaks.len() - 1
    }

    pub fn n(&self) -> usize {
        self.y_breaks.len() - 1
    }

    /// Meshsize: the largest element width in either direction.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn hx(&self, i: usize) -> f64 {
        self.x_breaks[i + 1] - self.x_breaks[i]
    }

    pub fn hy(&self, j: usize) -> f64 {
        self.y_breaks[j + 1] - self.y_breaks[j]
    }

    /// `[a, b, c, d]`.
    pub fn bounds(&self) -> [f64; 4] {
        [
            self.x_breaks[0],
            *self.x_breaks.last().unwrap(),
            self.y_breaks[0],
            *self.y_breaks.last().unwrap(),
        ]
    }

    pub fn area(&self) -> f64 {
        let [a, b, c, d] = self.bounds();
        (b - a) * (d - c)
    }

    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        let [a, b, c, d] = self.bounds();
        x >= a - tol && x <= b + tol && y >= c - tol && y <= d + tol
    }

    /// Element `(i, j)` (0-based) containing the point.
    pub fn locate(&self, x: f64, y: f64) -> (usize, usize) {
        (locate(&self.x_breaks, x), locate(&self.y_breaks, y))
    }

    pub fn shape_report(&self) -> ShapeReport {
        let mut max_aspect: f64 = 0.0;
        let mut min_aspect = f64::INFINITY;
        for i in 0..self.m() {
            for j in 0..self.n() {
                let ratio = self.hx(i) / self.hy(j);
                let aspect = ratio.max(1.0 / ratio);
                max_aspect = max_aspect.max(aspect);
                min_aspect = min_aspect.min(aspect);
            }
        }
        let neighbor = |breaks: &[f64]| -> f64 {
            breaks
                .windows(3)
                .map(|w| {
                    let q = (w[2] - w[1]) / (w[1] - w[0]);
                    q.max(1.0 / q)
                })
                .fold(1.0, f64::max)
        };
        ShapeReport {
            max_aspect,
            min_aspect,
            max_neighbor_ratio: neighbor(&self.x_breaks).max(neighbor(&self.y_breaks)),
        }
    }
}

/// Where a strip sits relative to the primal elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripLocation {
    /// Strip 0, from the lower domain boundary to the first Gauss line.
    LowerBoundary,
    /// Strip starting at Gauss point `k` (1-based) of element `i` (1-based).
    /// For `(m, r)` this is the upper boundary strip.
    Element { i: usize, k: usize },
}

/// One piece of a strip lying inside a single primal element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPiece {
    pub lo: f64,
    pub hi: f64,
    /// 0-based element index.
    pub element: usize,
}

/// Dual structure along one axis.
#[derive(Debug, Clone)]
pub struct AxisDual {
    r: usize,
    breaks: Vec<f64>,
    gauss_coords: Vec<f64>,
    gauss_weights: Vec<f64>,
    strip_edges: Vec<f64>,
    // primal break index strictly inside each strip
    straddle: Vec<Option<usize>>,
}

impl AxisDual {
    pub fn new(breaks: &[f64], rule: &QuadratureRule) -> Self {
        let r = rule.len();
        let m = breaks.len() - 1;
        let mut gauss_coords = Vec::with_capacity(m * r);
        let mut gauss_weights = Vec::with_capacity(m * r);
        for i in 0..m {
            let (lo, hi) = (breaks[i], breaks[i + 1]);
            let h = hi - lo;
            for (g, w) in rule.nodes.iter().zip(&rule.weights) {
                gauss_coords.push(0.5 * (lo + hi + h * g));
                gauss_weights.push(0.5 * h * w);
            }
        }
        let mut strip_edges = Vec::with_capacity(m * r + 2);
        strip_edges.push(breaks[0]);
        strip_edges.extend_from_slice(&gauss_coords);
        strip_edges.push(breaks[m]);
        let straddle = (0..=m * r)
            .map(|s| {
                // only the strip after the last Gauss point of an interior
                // element crosses a breakpoint
                if s > 0 && s < m * r && s % r == 0 {
                    Some(s / r)
                } else {
                    None
                }
            })
            .collect();
        Self {
            r,
            breaks: breaks.to_vec(),
            gauss_coords,
            gauss_weights,
            strip_edges,
            straddle,
        }
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn elements(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Number of Gauss lines, `m*r`.
    pub fn lines(&self) -> usize {
        self.gauss_coords.len()
    }

    pub fn strip_count(&self) -> usize {
        self.lines() + 1
    }

    /// Interior strips are `1..=interior_count()`.
    pub fn interior_count(&self) -> usize {
        self.lines() - 1
    }

    pub fn is_boundary_strip(&self, s: usize) -> bool {
        s == 0 || s == self.lines()
    }

    pub fn gauss_coords(&self) -> &[f64] {
        &self.gauss_coords
    }

    pub fn strip_edges(&self) -> &[f64] {
        &self.strip_edges
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Coordinate of Gauss line `s` (1-based).
    pub fn line(&self, s: usize) -> f64 {
        self.gauss_coords[s - 1]
    }

    /// Scaled Gauss weight attached to line `s` (1-based).
    pub fn line_weight(&self, s: usize) -> f64 {
        self.gauss_weights[s - 1]
    }

    /// 0-based element containing Gauss line `s`.
    pub fn line_element(&self, s: usize) -> usize {
        (s - 1) / self.r
    }

    /// 0-based local Gauss index of line `s` inside its element.
    pub fn line_local(&self, s: usize) -> usize {
        (s - 1) % self.r
    }

    /// Global strip index of Gauss point `k` of element `i`, both 1-based.
    pub fn strip_of(&self, i: usize, k: usize) -> Result<usize> {
        if i == 0 || i > self.elements() || k == 0 || k > self.r {
            return invalid(format!(
                "(element {i}, gauss {k}) outside 1..={} x 1..={}",
                self.elements(),
                self.r
            ));
        }
        Ok((i - 1) * self.r + k)
    }

    pub fn strip_location(&self, s: usize) -> Result<StripLocation> {
        if s > self.lines() {
            return invalid(format!("strip {s} outside 0..={}", self.lines()));
        }
        if s == 0 {
            return Ok(StripLocation::LowerBoundary);
        }
        Ok(StripLocation::Element {
            i: (s - 1) / self.r + 1,
            k: (s - 1) % self.r + 1,
        })
    }

    /// Primal breakpoints strictly inside strip `s`.
    pub fn breaks_inside(&self, s: usize) -> Vec<f64> {
        self.straddle[s]
            .map(|b| self.breaks[b])
            .into_iter()
            .collect()
    }

    /// Strip `s` split at primal breakpoints (one or two pieces).
    pub fn strip_pieces(&self, s: usize) -> Vec<StripPiece> {
        let lo = self.strip_edges[s];
        let hi = self.strip_edges[s + 1];
        match self.straddle[s] {
            Some(b) => {
                let mid = self.breaks[b];
                vec![
                    StripPiece {
                        lo,
                        hi: mid,
                        element: b - 1,
                    },
                    StripPiece {
                        lo: mid,
                        hi,
                        element: b,
                    },
                ]
            }
            None => {
                let element = if s == 0 {
                    0
                } else {
                    self.line_element(s.min(self.lines()))
                };
                vec![StripPiece { lo, hi, element }]
            }
        }
    }

    pub fn strip_width(&self, s: usize) -> f64 {
        self.strip_edges[s + 1] - self.strip_edges[s]
    }
}

/// Axis-aligned rectangle inside a single primal element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub ex: usize,
    pub ey: usize,
}

impl Piece {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Debug, Clone)]
pub struct DualMesh {
    pub x: AxisDual,
    pub y: AxisDual,
    r: usize,
}

impl DualMesh {
    pub fn new(primal: &PrimalMesh, r: usize) -> Result<Self> {
        let rule = gauss_rule(r)?;
        Ok(Self {
            x: AxisDual::new(primal.x_breaks(), &rule),
            y: AxisDual::new(primal.y_breaks(), &rule),
            r,
        })
    }

    pub fn order(&self) -> usize {
        self.r
    }

    /// Number of interior control volumes, `(mr-1)(nr-1)`.
    pub fn interior_count(&self) -> usize {
        self.x.interior_count() * self.y.interior_count()
    }

    /// Flat index of the interior control volume `(sx, sy)`, y-major.
    pub fn volume_index(&self, sx: usize, sy: usize) -> Option<usize> {
        let nx = self.x.interior_count();
        let ny = self.y.interior_count();
        if (1..=nx).contains(&sx) && (1..=ny).contains(&sy) {
            Some((sy - 1) * nx + (sx - 1))
        } else {
            None
        }
    }

    /// Inverse of [`volume_index`](Self::volume_index).
    pub fn volume_strips(&self, idx: usize) -> (usize, usize) {
        let nx = self.x.interior_count();
        (idx % nx + 1, idx / nx + 1)
    }

    /// The control volume `(sx, sy)` split into rectangles that each lie in
    /// one primal element.
    pub fn control_volume_pieces(&self, sx: usize, sy: usize) -> Vec<Piece> {
        let mut out = Vec::with_capacity(4);
        for py in self.y.strip_pieces(sy) {
            for px in self.x.strip_pieces(sx) {
                out.push(Piece {
                    x0: px.lo,
                    x1: px.hi,
                    y0: py.lo,
                    y1: py.hi,
                    ex: px.element,
                    ey: py.element,
                });
            }
        }
        out
    }

    pub fn volume_area(&self, sx: usize, sy: usize) -> f64 {
        self.x.strip_width(sx) * self.y.strip_width(sy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(m: usize, n: usize) -> PrimalMesh {
        PrimalMesh::uniform(0.0, 1.0, 0.0, 1.0, m, n).unwrap()
    }

    #[test]
    fn primal_meshsize() {
        let p = PrimalMesh::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!((p.m(), p.n(), p.h()), (1, 1, 1.0));
        assert_eq!(unit(4, 4).h(), 0.25);
        let p = PrimalMesh::new(vec![0.0, 0.1, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(p.h(), 1.0);
        let p = PrimalMesh::new(vec![0.0, 0.1, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(p.h(), 0.9);
    }

    #[test]
    fn non_monotone_breaks_rejected() {
        assert!(PrimalMesh::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 1.0]).is_err());
        assert!(PrimalMesh::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(PrimalMesh::new(vec![0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn dual_strip_edges_single_element() {
        let d = DualMesh::new(&unit(1, 1), 2).unwrap();
        let s = 0.5 / 3f64.sqrt();
        let want = [0.0, 0.5 - s, 0.5 + s, 1.0];
        for (got, w) in d.x.strip_edges().iter().zip(want) {
            assert!((got - w).abs() < 1e-15);
        }
    }

    #[test]
    fn dual_r1_two_elements_straddles_midpoint() {
        let d = DualMesh::new(&unit(2, 2), 1).unwrap();
        assert_eq!(d.x.strip_edges(), &[0.0, 0.25, 0.75, 1.0]);
        assert_eq!(d.x.breaks_inside(1), vec![0.5]);
        assert!(d.x.breaks_inside(0).is_empty());
        assert!(d.x.breaks_inside(2).is_empty());
    }

    #[test]
    fn interior_volume_count() {
        let d = DualMesh::new(&unit(4, 4), 2).unwrap();
        assert_eq!(d.interior_count(), 49);
        let d = DualMesh::new(&unit(3, 5), 3).unwrap();
        assert_eq!(d.interior_count(), 8 * 14);
        assert_eq!(d.x.strip_count(), 10);
    }

    #[test]
    fn strip_indexing() {
        let d = DualMesh::new(&unit(3, 3), 2).unwrap();
        assert_eq!(d.x.strip_of(1, 1).unwrap(), 1);
        assert_eq!(d.x.strip_of(2, 1).unwrap(), 3);
        assert!(d.x.strip_of(0, 1).is_err());
        assert!(d.x.strip_of(4, 1).is_err());
        assert!(d.x.strip_of(1, 3).is_err());
        assert_eq!(d.x.strip_location(0).unwrap(), StripLocation::LowerBoundary);
        assert_eq!(
            d.x.strip_location(3).unwrap(),
            StripLocation::Element { i: 2, k: 1 }
        );
        assert!(d.x.strip_location(7).is_err());
        for i in 1..=3 {
            for k in 1..=2 {
                let s = d.x.strip_of(i, k).unwrap();
                assert_eq!(
                    d.x.strip_location(s).unwrap(),
                    StripLocation::Element { i, k }
                );
            }
        }
    }

    #[test]
    fn gauss_line_separates_neighbor_strips() {
        let p = PrimalMesh::new(vec![0.0, 0.2, 0.7, 1.0], vec![0.0, 1.0]).unwrap();
        let d = DualMesh::new(&p, 3).unwrap();
        for s in 1..=d.x.lines() {
            let g = d.x.line(s);
            assert_eq!(d.x.strip_edges()[s], g);
            assert!(d.x.strip_edges()[s - 1] < g && g < d.x.strip_edges()[s + 1]);
        }
    }

    #[test]
    fn piece_counts() {
        let d = DualMesh::new(&unit(3, 3), 2).unwrap();
        assert_eq!(d.control_volume_pieces(1, 1).len(), 1);
        assert_eq!(d.control_volume_pieces(2, 1).len(), 2);
        let four = d.control_volume_pieces(2, 4);
        assert_eq!(four.len(), 4);
        for p in &four {
            let [x0, x1] = [d.x.breaks()[p.ex], d.x.breaks()[p.ex + 1]];
            let [y0, y1] = [d.y.breaks()[p.ey], d.y.breaks()[p.ey + 1]];
            assert!(p.x0 >= x0 && p.x1 <= x1 && p.y0 >= y0 && p.y1 <= y1);
        }
        let sum: f64 = four.iter().map(Piece::area).sum();
        assert!((sum - d.volume_area(2, 4)).abs() < 1e-15);
    }

    #[test]
    fn control_volumes_tile_domain() {
        let p = PrimalMesh::new(vec![-1.0, -0.3, 0.1, 2.0], vec![0.5, 0.6, 1.9]).unwrap();
        for r in 1..=5 {
            let d = DualMesh::new(&p, r).unwrap();
            let mut total = 0.0;
            for sy in 0..d.y.strip_count() {
                for sx in 0..d.x.strip_count() {
                    total += d
                        .control_volume_pieces(sx, sy)
                        .iter()
                        .map(Piece::area)
                        .sum::<f64>();
                }
            }
            assert!((total - p.area()).abs() < 1e-12 * p.area());
            assert_eq!(d.x.strip_count(), 3 * r + 1);
            assert_eq!(d.y.interior_count(), 2 * r - 1);
        }
    }

    #[test]
    fn locate_ties_go_to_lower_element() {
        let p = unit(4, 2);
        assert_eq!(p.locate(0.25, 0.5), (0, 0));
        assert_eq!(p.locate(0.26, 0.51), (1, 1));
        assert_eq!(p.locate(1.0, 1.0), (3, 1));
        assert_eq!(p.locate(0.0, 0.0), (0, 0));
    }

    #[test]
    fn shape_report_of_graded_mesh() {
        let p = PrimalMesh::new(vec![0.0, 0.1, 0.4, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        let s = p.shape_report();
        assert!((s.max_neighbor_ratio - 3.0).abs() < 1e-12);
        assert!((s.max_aspect - 5.0).abs() < 1e-12);
    }
}
