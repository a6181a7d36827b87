//! Vertex-centred discretization of the unit square and its perimeter.
//!
//! Nodes sit at `(i h, j h)` for `0 <= i, j <= N` and are stored row-major
//! (`index = j (N + 1) + i`, so a "row" is a line of constant `y`). The
//! `4N` perimeter nodes form a closed chain, walked counterclockwise from
//! the origin. Perimeter nodes carry the surface field directly, which makes
//! the trace identification exact.
//!
//! Quadrature is trapezoidal: node weights `h^2` inside, `h^2/2` on edges
//! and `h^2/4` at corners; each chain node carries length `h`.

use crate::error::{Error, Result};
use crate::par;

/// Ownership of a node: interior nodes belong to the bulk equation, perimeter
/// nodes to the surface equation. The payload is the position in the
/// interior list or the chain respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Interior(usize),
    Boundary(usize),
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    n: usize,
    h: f64,
    chain: Vec<usize>,
    interior: Vec<usize>,
    roles: Vec<NodeRole>,
    weights: Vec<f64>,
    potential_weights: Vec<f64>,
}

/// Nodal field over all `(N+1)^2` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

/// Field over the `4N` chain nodes, in chain order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn constant(g: &GridSpec, c: f64) -> Self {
        Field { values: vec![c; g.node_count()] }
    }

    pub fn from_fn(g: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..g.node_count())
            .map(|k| {
                let (x, y) = g.coords(k);
                f(x, y)
            })
            .collect();
        Field { values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl BoundaryField {
    pub fn new(values: Vec<f64>) -> Self {
        BoundaryField { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn perimeter_share(n: usize) -> f64 {
    let h = 1.0 / n as f64;
    (2 * n - 1) as f64 * h * h / (4 * n) as f64
}

impl GridSpec {
    /// Builds the grid with `n` cells per side; `n` must be at least 4.
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidGrid(format!("N must be at least 4, got {n}")));
        }
        let h = 1.0 / n as f64;
        let side = n + 1;
        let idx = |i: usize, j: usize| j * side + i;

        let mut chain = Vec::with_capacity(4 * n);
        chain.extend((0..n).map(|i| idx(i, 0)));
        chain.extend((0..n).map(|j| idx(n, j)));
        chain.extend((1..=n).rev().map(|i| idx(i, n)));
        chain.extend((1..=n).rev().map(|j| idx(0, j)));

        let mut roles = vec![NodeRole::Interior(usize::MAX); side * side];
        let mut interior = Vec::with_capacity((n - 1) * (n - 1));
        for j in 1..n {
            for i in 1..n {
                roles[idx(i, j)] = NodeRole::Interior(interior.len());
                interior.push(idx(i, j));
            }
        }
        for (k, &node) in chain.iter().enumerate() {
            roles[node] = NodeRole::Boundary(k);
        }

        let h2 = h * h;
        let weights = (0..side * side)
            .map(|k| {
                let (i, j) = (k % side, k / side);
                let on_x = i == 0 || i == n;
                let on_y = j == 0 || j == n;
                match (on_x, on_y) {
                    (true, true) => 0.25 * h2,
                    (true, false) | (false, true) => 0.5 * h2,
                    (false, false) => h2,
                }
            })
            .collect();
        let rim = perimeter_share(n);
        let potential_weights = roles
            .iter()
            .map(|r| match r {
                NodeRole::Interior(_) => h2,
                NodeRole::Boundary(_) => rim,
            })
            .collect();

        Ok(GridSpec { n, h, chain, interior, roles, weights, potential_weights })
    }

    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn node_count(&self) -> usize {
        self.side() * self.side()
    }

    pub fn chain_len(&self) -> usize {
        4 * self.n
    }

    pub fn interior_len(&self) -> usize {
        self.interior.len()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.side() + i
    }

    /// Grid indices `(i, j)` of a node.
    #[inline]
    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % self.side(), node / self.side())
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.ij(node);
        (i as f64 * self.h, j as f64 * self.h)
    }

    /// Node indices of the perimeter chain, counterclockwise from `(0, 0)`.
    pub fn chain(&self) -> &[usize] {
        &self.chain
    }

    /// Node indices of the interior, row-major.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn role(&self, node: usize) -> NodeRole {
        self.roles[node]
    }

    /// Trapezoidal quadrature weights, one per node.
    pub fn node_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights for integrating the bulk potential: `h^2` inside, and the
    /// perimeter's share of the unit area, `(2N-1) h^2 / 4N`, on every chain
    /// node alike. Equal chain weights keep constant fields critical points
    /// of the mass-constrained energy; the trapezoidal corner quarter would
    /// not.
    pub fn potential_weights(&self) -> &[f64] {
        &self.potential_weights
    }

    /// The common chain entry of [`GridSpec::potential_weights`].
    pub fn perimeter_potential_weight(&self) -> f64 {
        perimeter_share(self.n)
    }

    /// Quadrature weight of the edge between two adjacent nodes: `h^2/2`
    /// when both ends lie on the same side of the square, `h^2` otherwise.
    pub fn edge_weight(&self, a: usize, b: usize) -> f64 {
        let (ia, ja) = self.ij(a);
        let (ib, jb) = self.ij(b);
        let n = self.n;
        let on_gamma = if ja == jb {
            ja == 0 || ja == n
        } else {
            debug_assert_eq!(ia, ib);
            ia == 0 || ia == n
        };
        if on_gamma {
            0.5 * self.h * self.h
        } else {
            self.h * self.h
        }
    }

    pub fn check_field(&self, u: &Field) -> Result<()> {
        Error::check_len(self.node_count(), u.values.len())
    }

    pub fn check_boundary(&self, v: &BoundaryField) -> Result<()> {
        Error::check_len(self.chain_len(), v.values.len())
    }

    pub fn check_interior(&self, u: &[f64]) -> Result<()> {
        Error::check_len(self.interior_len(), u.len())
    }

    /// Five-point Laplacian at every interior node, in interior order.
    pub fn laplacian_bulk(&self, u: &Field) -> Result<Vec<f64>> {
        self.check_field(u)?;
        let side = self.side();
        let inv_h2 = 1.0 / (self.h * self.h);
        let v = &u.values;
        Ok(self
            .interior
            .iter()
            .map(|&k| (v[k + 1] + v[k - 1] + v[k + side] + v[k - side] - 4.0 * v[k]) * inv_h2)
            .collect())
    }

    /// Cyclic second difference along the chain.
    pub fn laplacian_boundary(&self, v: &BoundaryField) -> Result<BoundaryField> {
        self.check_boundary(v)?;
        let m = v.len();
        let inv_h2 = 1.0 / (self.h * self.h);
        let values = (0..m)
            .map(|k| {
                let prev = v.values[(k + m - 1) % m];
                let next = v.values[(k + 1) % m];
                (prev + next - 2.0 * v.values[k]) * inv_h2
            })
            .collect();
        Ok(BoundaryField { values })
    }

    /// Outward normal derivative by a second-order one-sided difference.
    /// Corners take the mean of their two edge normals.
    pub fn normal_derivative(&self, u: &Field) -> Result<BoundaryField> {
        self.check_field(u)?;
        let n = self.n;
        let v = &u.values;
        let inv_2h = 0.5 / self.h;
        // (3 u0 - 4 u1 + u2) / 2h, walking inward from node `start` by `step`
        let one_sided = |start: usize, step: isize| {
            let a = start as isize;
            let u0 = v[start];
            let u1 = v[(a + step) as usize];
            let u2 = v[(a + 2 * step) as usize];
            (3.0 * u0 - 4.0 * u1 + u2) * inv_2h
        };
        let side = self.side() as isize;
        let values = self
            .chain
            .iter()
            .map(|&node| {
                let (i, j) = self.ij(node);
                let mut acc = 0.0;
                let mut count = 0.0;
                if i == 0 {
                    acc += one_sided(node, 1);
                    count += 1.0;
                }
                if i == n {
                    acc += one_sided(node, -1);
                    count += 1.0;
                }
                if j == 0 {
                    acc += one_sided(node, side);
                    count += 1.0;
                }
                if j == n {
                    acc += one_sided(node, -side);
                    count += 1.0;
                }
                acc / count
            })
            .collect();
        Ok(BoundaryField { values })
    }

    pub fn trace(&self, u: &Field) -> Result<BoundaryField> {
        self.check_field(u)?;
        Ok(BoundaryField { values: self.chain.iter().map(|&k| u.values[k]).collect() })
    }

    /// Overwrites the perimeter values of `u` with `v`.
    pub fn inject(&self, u: &Field, v: &BoundaryField) -> Result<Field> {
        self.check_field(u)?;
        self.check_boundary(v)?;
        let mut out = u.clone();
        for (&k, &val) in self.chain.iter().zip(&v.values) {
            out.values[k] = val;
        }
        Ok(out)
    }

    /// Interior values in interior order.
    pub fn restrict_interior(&self, u: &Field) -> Result<Vec<f64>> {
        self.check_field(u)?;
        Ok(self.interior.iter().map(|&k| u.values[k]).collect())
    }

    /// Weighted mean over interior nodes (`u` in interior order). Interior
    /// trapezoidal weights are uniform, so this is the arithmetic mean.
    pub fn bulk_mean(&self, u: &[f64]) -> Result<f64> {
        self.check_interior(u)?;
        Ok(par::sum(u) / u.len() as f64)
    }

    /// Length-weighted mean over the chain.
    pub fn boundary_mean(&self, v: &BoundaryField) -> Result<f64> {
        self.check_boundary(v)?;
        Ok(self.h * par::sum(&v.values) / 4.0)
    }

    /// Interior mean of a node-ordered vector.
    pub fn nodes_bulk_mean(&self, x: &[f64]) -> f64 {
        par::sum_indexed(x, &self.interior) / self.interior.len() as f64
    }

    /// Chain mean of a node-ordered vector.
    pub fn nodes_boundary_mean(&self, x: &[f64]) -> f64 {
        self.h * par::sum_indexed(x, &self.chain) / 4.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn rejects_small_grids() {
        assert!(matches!(GridSpec::new(3), Err(Error::InvalidGrid(_))));
        assert!(GridSpec::new(4).is_ok());
    }

    #[test]
    fn counts_and_spacing() {
        let g = grid(4);
        assert_eq!(g.node_count(), 25);
        assert_eq!(g.chain().len(), 16);
        assert_eq!(g.h(), 0.25);
        let g = grid(200);
        assert_eq!(g.h(), 0.005);
        assert_eq!(g.chain().len(), 800);
    }

    // compensated sum, so the check sees the weights rather than the rounding of a long sum
    fn neumaier(x: &[f64]) -> f64 {
        let (mut s, mut c) = (0.0_f64, 0.0_f64);
        for &v in x {
            let t = s + v;
            c += if s.abs() >= v.abs() { (s - t) + v } else { (v - t) + s };
            s = t;
        }
        s + c
    }

    #[test]
    fn weights_integrate_area_and_perimeter() {
        for n in [4, 7, 16, 200] {
            let g = grid(n);
            let area = neumaier(g.node_weights());
            assert!((area - 1.0).abs() <= 1e-14, "N={n}: {area}");
            let perim = g.h() * g.chain_len() as f64;
            assert!((perim - 4.0).abs() <= 1e-14);
        }
        let g = grid(4);
        assert_eq!(g.node_weights().iter().sum::<f64>(), 1.0);
        for n in [4, 7, 16, 200] {
            let g = grid(n);
            let total = neumaier(g.potential_weights());
            assert!((total - 1.0).abs() <= 1e-14, "N={n}: {total}");
            let rim: Vec<f64> = g.chain().iter().map(|&k| g.potential_weights()[k]).collect();
            assert!(rim.iter().all(|&w| w == g.perimeter_potential_weight()));
        }
        assert_eq!(grid(4).perimeter_potential_weight(), 7.0 / 256.0);
    }

    #[test]
    fn chain_is_closed_and_covers_perimeter_once() {
        let g = grid(9);
        let mut seen = vec![false; g.node_count()];
        for w in 0..g.chain_len() {
            let a = g.chain()[w];
            let b = g.chain()[(w + 1) % g.chain_len()];
            let (ia, ja) = g.ij(a);
            let (ib, jb) = g.ij(b);
            assert_eq!(ia.abs_diff(ib) + ja.abs_diff(jb), 1, "chain step {w} not unit");
            assert!(!seen[a]);
            seen[a] = true;
        }
        for k in 0..g.node_count() {
            match g.role(k) {
                NodeRole::Interior(p) => {
                    assert!(!seen[k]);
                    assert_eq!(g.interior()[p], k);
                }
                NodeRole::Boundary(p) => {
                    assert!(seen[k]);
                    assert_eq!(g.chain()[p], k);
                }
            }
        }
        assert_eq!(g.interior_len() + g.chain_len(), g.node_count());
    }

    #[test]
    fn trace_follows_counterclockwise_chain() {
        let g = grid(4);
        let u = Field::new((0..25).map(|k| k as f64).collect());
        let t = g.trace(&u).unwrap();
        let expected = [0., 1., 2., 3., 4., 9., 14., 19., 24., 23., 22., 21., 20., 15., 10., 5.];
        assert_eq!(t.values, expected);

        let c = g.trace(&Field::constant(&g, 3.0)).unwrap();
        assert_eq!(c.values, vec![3.0; 16]);
    }

    #[test]
    fn inject_then_trace_roundtrips() {
        let g = grid(6);
        let u = Field::from_fn(&g, |x, y| x * y);
        let v = BoundaryField::new((0..24).map(|k| (k as f64).sin()).collect());
        let w = g.inject(&u, &v).unwrap();
        assert_eq!(g.trace(&w).unwrap(), v);
        assert_eq!(g.restrict_interior(&w).unwrap(), g.restrict_interior(&u).unwrap());
        assert!(matches!(
            g.inject(&u, &BoundaryField::new(vec![0.0; 3])),
            Err(Error::Dimension { expected: 24, got: 3 })
        ));
    }

    #[test]
    fn bulk_laplacian_exact_cases() {
        let g = grid(8);
        let c = g.laplacian_bulk(&Field::constant(&g, 2.5)).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
        let q = g.laplacian_bulk(&Field::from_fn(&g, |x, y| x * x + y * y)).unwrap();
        assert!(q.iter().all(|&v| (v - 4.0).abs() < 1e-11), "{q:?}");
    }

    fn bulk_error(n: usize) -> f64 {
        let g = grid(n);
        let u = Field::from_fn(&g, |x, y| (PI * x).sin() * (PI * y).sin());
        let lap = g.laplacian_bulk(&u).unwrap();
        g.interior()
            .iter()
            .zip(&lap)
            .map(|(&k, &l)| (l + 2.0 * PI * PI * u.values[k]).abs())
            .fold(0.0, f64::max)
    }

    fn boundary_error(n: usize) -> f64 {
        let g = grid(n);
        let h = g.h();
        let v = BoundaryField::new(
            (0..g.chain_len()).map(|k| (2.0 * PI * k as f64 * h / 4.0).cos()).collect(),
        );
        let lap = g.laplacian_boundary(&v).unwrap();
        let w2 = (PI / 2.0).powi(2);
        lap.values
            .iter()
            .zip(&v.values)
            .map(|(l, s)| (l + w2 * s).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn laplacians_converge_at_second_order() {
        for err in [bulk_error as fn(usize) -> f64, boundary_error] {
            let e: Vec<f64> = [16, 32, 64].iter().map(|&n| err(n)).collect();
            for w in e.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!((order - 2.0).abs() <= 0.1, "order {order} from {e:?}");
            }
        }
    }

    #[test]
    fn boundary_laplacian_spike_and_sum() {
        let g = grid(4);
        let h2 = g.h() * g.h();
        let mut v = vec![0.0; 16];
        v[0] = 1.0;
        let l = g.laplacian_boundary(&BoundaryField::new(v)).unwrap();
        assert_eq!(l.values[0], -2.0 / h2);
        assert_eq!(l.values[1], 1.0 / h2);
        assert_eq!(l.values[15], 1.0 / h2);
        assert!(l.values[2..15].iter().all(|&x| x == 0.0));

        let v = BoundaryField::new((0..16).map(|k| ((k * 7) % 5) as f64 - 1.3).collect());
        let s: f64 = g.laplacian_boundary(&v).unwrap().values.iter().sum();
        assert!(s.abs() <= 1e-12);
        assert!(g.laplacian_boundary(&BoundaryField::new(vec![1.0; 5])).is_err());
    }

    #[test]
    fn normal_derivative_cases() {
        let g = grid(16);
        let c = g.normal_derivative(&Field::constant(&g, 1.7)).unwrap();
        assert!(c.values.iter().all(|&v| v.abs() < 1e-12));

        let lin = g.normal_derivative(&Field::from_fn(&g, |x, _| x)).unwrap();
        let quad = g.normal_derivative(&Field::from_fn(&g, |x, _| x * x)).unwrap();
        for (k, &node) in g.chain().iter().enumerate() {
            let (i, j) = g.ij(node);
            let corner = (i == 0 || i == 16) && (j == 0 || j == 16);
            if corner {
                continue;
            }
            if i == 16 {
                assert!((lin.values[k] - 1.0).abs() < 1e-12);
                assert!((quad.values[k] - 2.0).abs() < 1e-12);
            } else if i == 0 {
                assert!((lin.values[k] + 1.0).abs() < 1e-12);
            } else {
                assert!(lin.values[k].abs() < 1e-12);
            }
        }
        // corner (N, 0): x-normal gives 1, y-normal gives 0
        let k = g.chain().iter().position(|&n| n == g.idx(16, 0)).unwrap();
        assert!((lin.values[k] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn means() {
        let g = grid(4);
        let interior: Vec<f64> = (1..=9).map(f64::from).collect();
        assert!((g.bulk_mean(&interior).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(g.bulk_mean(&[2.0; 9]).unwrap(), 2.0);
        let alt = BoundaryField::new((0..16).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect());
        assert_eq!(g.boundary_mean(&alt).unwrap(), 0.0);
        assert_eq!(g.boundary_mean(&BoundaryField::new(vec![-0.5; 16])).unwrap(), -0.5);
    }

    #[test]
    fn laplacians_are_linear() {
        let g = grid(12);
        let a = Field::from_fn(&g, |x, y| (3.0 * x).sin() + y * y * y);
        let b = Field::from_fn(&g, |x, y| (x * y).exp());
        let (alpha, beta) = (0.7, -1.9);
        let mix = Field::new(a.values.iter().zip(&b.values).map(|(p, q)| alpha * p + beta * q).collect());
        let la = g.laplacian_bulk(&a).unwrap();
        let lb = g.laplacian_bulk(&b).unwrap();
        let lm = g.laplacian_bulk(&mix).unwrap();
        let scale = lm.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..lm.len() {
            assert!((lm[k] - alpha * la[k] - beta * lb[k]).abs() <= 1e-11 * scale);
        }
        let (ta, tb, tm) = (g.trace(&a).unwrap(), g.trace(&b).unwrap(), g.trace(&mix).unwrap());
        let (la, lb, lm) = (
            g.laplacian_boundary(&ta).unwrap(),
            g.laplacian_boundary(&tb).unwrap(),
            g.laplacian_boundary(&tm).unwrap(),
        );
        let scale = lm.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..lm.len() {
            assert!((lm.values[k] - alpha * la.values[k] - beta * lb.values[k]).abs() <= 1e-11 * scale);
        }
    }
}
