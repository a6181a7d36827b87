//! Orthogonal projections onto zero-mean subspaces of the interior values
//! and of the chain values. Means use the grid quadrature weights, so the
//! projections are self-adjoint in the weighted inner product.

use crate::error::Result;
use crate::grid::{BoundaryField, GridSpec};

pub fn project_bulk(g: &GridSpec, u: &[f64]) -> Result<Vec<f64>> {
    let m = g.bulk_mean(u)?;
    Ok(u.iter().map(|v| v - m).collect())
}

pub fn project_boundary(g: &GridSpec, v: &BoundaryField) -> Result<BoundaryField> {
    let m = g.boundary_mean(v)?;
    Ok(BoundaryField::new(v.values.iter().map(|x| x - m).collect()))
}

/// Applies both projections in place to a node-ordered vector: interior
/// nodes lose their interior mean, chain nodes their chain mean.
pub(crate) fn project_nodes(g: &GridSpec, x: &mut [f64]) {
    let (mb, ms) = node_means(g, x);
    for &k in g.interior() {
        x[k] -= mb;
    }
    for &k in g.chain() {
        x[k] -= ms;
    }
}

/// Block means `(interior, chain)` of a node-ordered vector.
pub(crate) fn node_means(g: &GridSpec, x: &[f64]) -> (f64, f64) {
    (g.nodes_bulk_mean(x), g.nodes_boundary_mean(x))
}
