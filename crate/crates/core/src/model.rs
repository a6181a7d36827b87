//! Potentials, the discrete free energy and its exact weighted gradient.
//!
//! The discrete energy is
//!
//! ```text
//! E_bulk = sum_edges  w_e kappa^2/2 ((u_b - u_a)/h)^2 + sum_nodes w_n F(u_n)
//! E_surf = sum_chain  h   kappa^2/2 ((v_{k+1} - v_k)/h)^2 + sum_chain h G(v_k)
//! ```
//!
//! with `w_e = h^2` for edges that touch the interior and `h^2/2` for edges
//! lying along the perimeter, and `w_n` from
//! [`GridSpec::potential_weights`]. Chemical potentials are the gradient of this
//! sum scaled by the owning quadrature weight (`h^2` inside, `h` on the
//! chain). The `kappa^2 d_n phi` coupling of the surface potential therefore
//! comes out of the bulk edge terms touching the boundary, and corners need
//! no special treatment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryField, Field, GridSpec, NodeRole};
use crate::par;

/// Surface energy density `G` on the perimeter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", try_from = "SurfaceDoc")]
pub enum SurfacePotential {
    /// `G(psi) = (psi^2 - 1)^2 / 4`
    DoubleWell,
    /// `G(psi) = -(gamma_tilde / 2) cos(theta_s) sin(pi psi / 2)`. The static
    /// angle is measured inside the `+1` phase.
    MovingContactLine {
        /// Static contact angle in degrees.
        theta_s: f64,
        gamma_tilde: f64,
    },
}

/// Flat form read from configs, so that type errors point at the field.
/// `gamma_tilde` may be left out and filled in from `kappa` later.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SurfaceDoc {
    variant: SurfaceVariant,
    theta_s: Option<f64>,
    gamma_tilde: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
enum SurfaceVariant {
    DoubleWell,
    MovingContactLine,
}

impl SurfaceDoc {
    /// Resolves the document, taking `default_gamma_tilde` when the
    /// surface tension scale is not given.
    pub(crate) fn resolve(self, default_gamma_tilde: Option<f64>) -> std::result::Result<SurfacePotential, String> {
        match self.variant {
            SurfaceVariant::DoubleWell => match (self.theta_s, self.gamma_tilde) {
                (None, None) => Ok(SurfacePotential::DoubleWell),
                _ => Err("DoubleWell takes no theta_s or gamma_tilde".into()),
            },
            SurfaceVariant::MovingContactLine => Ok(SurfacePotential::MovingContactLine {
                theta_s: self.theta_s.ok_or("MovingContactLine requires theta_s")?,
                gamma_tilde: self
                    .gamma_tilde
                    .or(default_gamma_tilde)
                    .ok_or("MovingContactLine requires gamma_tilde")?,
            }),
        }
    }
}

impl TryFrom<SurfaceDoc> for SurfacePotential {
    type Error = String;

    fn try_from(d: SurfaceDoc) -> std::result::Result<Self, String> {
        d.resolve(None)
    }
}

/// Tension of a flat interface for this energy, `2 sqrt(2) kappa / 3`.
/// With `gamma_tilde` equal to it the wall potential reproduces Young's law
/// at the static angle.
pub fn interface_tension(kappa: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * kappa / 3.0
}

impl SurfacePotential {
    pub fn moving_contact_line(theta_s: f64, gamma_tilde: f64) -> Result<Self> {
        let s = SurfacePotential::MovingContactLine { theta_s, gamma_tilde };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if let SurfacePotential::MovingContactLine { theta_s, gamma_tilde } = *self {
            if !(theta_s > 0.0 && theta_s < 180.0) {
                return Err(Error::param("surface.theta_s", format!("must lie in (0, 180), got {theta_s}")));
            }
            if !(gamma_tilde > 0.0 && gamma_tilde.is_finite()) {
                return Err(Error::param("surface.gamma_tilde", format!("must be positive, got {gamma_tilde}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            SurfacePotential::DoubleWell => "DoubleWell",
            SurfacePotential::MovingContactLine { .. } => "MovingContactLine",
        }
    }

    /// Upper bound on `|G''|`, or `None` when unbounded.
    pub fn max_curvature(&self) -> Option<f64> {
        match *self {
            SurfacePotential::DoubleWell => None,
            SurfacePotential::MovingContactLine { theta_s, gamma_tilde } => {
                let pi = std::f64::consts::PI;
                Some(gamma_tilde * pi * pi * theta_s.to_radians().cos().abs() / 8.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kappa: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub s1: f64,
    pub s2: f64,
}

/// Smallest stabilization keeping the splitting convex on `|u| <= bound`.
pub fn min_stabilization(bound: f64) -> f64 {
    (3.0 * bound * bound - 1.0) / 2.0
}

impl ModelParams {
    /// Checks positivity and that `s1`, `s2` cover the potentials' curvature
    /// on `|u| <= field_bound`.
    pub fn validate(&self, surface: &SurfacePotential, field_bound: f64) -> Result<()> {
        for (key, v) in [
            ("kappa", self.kappa),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("S1", self.s1),
            ("S2", self.s2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(key, format!("must be positive and finite, got {v}")));
            }
        }
        let need = min_stabilization(field_bound);
        if self.s1 < need {
            return Err(Error::param(
                "S1",
                format!("{} is below (3M^2-1)/2 = {need} for field bound M = {field_bound}", self.s1),
            ));
        }
        let need2 = need.max(surface.max_curvature().unwrap_or(0.0) / 2.0);
        if self.s2 < need2 {
            return Err(Error::param(
                "S2",
                format!("{} is below {need2} required for field bound M = {field_bound}", self.s2),
            ));
        }
        Ok(())
    }
}

/// `(F, f)` with `F = (phi^2 - 1)^2 / 4` and `f = F'`.
#[inline]
pub fn bulk_potential(phi: f64) -> (f64, f64) {
    let q = phi * phi - 1.0;
    (0.25 * q * q, phi * q)
}

/// `(G, g)` with `g = G'`.
#[inline]
pub fn surface_potential(surface: &SurfacePotential, psi: f64) -> (f64, f64) {
    match *surface {
        SurfacePotential::DoubleWell => bulk_potential(psi),
        SurfacePotential::MovingContactLine { theta_s, gamma_tilde } => {
            let half_pi = std::f64::consts::FRAC_PI_2;
            let c = gamma_tilde * theta_s.to_radians().cos();
            let (s, co) = (half_pi * psi).sin_cos();
            (-0.5 * c * s, -0.25 * std::f64::consts::PI * c * co)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub bulk: f64,
    pub surf: f64,
    pub total: f64,
}

pub fn discrete_energy(g: &GridSpec, p: &ModelParams, s: &SurfacePotential, u: &Field) -> Result<Energy> {
    g.check_field(u)?;
    let v = &u.values;
    let (n, side) = (g.n(), g.side());
    let k2 = p.kappa * p.kappa;

    // sum_e (w_e / h^2) (du)^2, edges on the perimeter at half weight
    let mut grad = 0.0;
    for j in 0..=n {
        let c = if j == 0 || j == n { 0.5 } else { 1.0 };
        let row = &v[j * side..(j + 1) * side];
        grad += c * row.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    }
    for j in 0..n {
        let (lo, hi) = (&v[j * side..(j + 1) * side], &v[(j + 1) * side..(j + 2) * side]);
        let mut row = 0.0;
        for i in 0..=n {
            let c = if i == 0 || i == n { 0.5 } else { 1.0 };
            row += c * (hi[i] - lo[i]).powi(2);
        }
        grad += row;
    }
    let potential: f64 = v.iter().zip(g.potential_weights()).map(|(&x, &w)| w * bulk_potential(x).0).sum();
    let bulk = 0.5 * k2 * grad + potential;

    let h = g.h();
    let chain = g.chain();
    let m = chain.len();
    let mut tangential = 0.0;
    let mut surface = 0.0;
    for k in 0..m {
        let a = v[chain[k]];
        let b = v[chain[(k + 1) % m]];
        tangential += (b - a).powi(2);
        surface += surface_potential(s, a).0;
    }
    let surf = 0.5 * k2 * tangential / h + h * surface;
    Ok(Energy { bulk, surf, total: bulk + surf })
}

/// Gradient of the quadratic (gradient-squared) part of the discrete
/// energy, bulk and surface together: `out = K u`.
pub(crate) fn stiffness_apply(g: &GridSpec, kappa: f64, u: &[f64], out: &mut [f64]) {
    let (n, side) = (g.n(), g.side());
    let k2 = kappa * kappa;
    let interior_row = |j: usize, row: &mut [f64]| {
        let base = j * side;
        for i in 1..n {
            let k = base + i;
            row[i] = k2 * (4.0 * u[k] - u[k - 1] - u[k + 1] - u[k - side] - u[k + side]);
        }
    };
    if u.len() >= par::PAR_THRESHOLD {
        out.par_chunks_mut(side)
            .enumerate()
            .filter(|(j, _)| *j > 0 && *j < n)
            .for_each(|(j, row)| interior_row(j, row));
    } else {
        for (j, row) in out.chunks_mut(side).enumerate().take(n).skip(1) {
            interior_row(j, row);
        }
    }

    let inv_h = 1.0 / g.h();
    let chain = g.chain();
    let m = chain.len();
    for c in 0..m {
        let node = chain[c];
        let (i, j) = g.ij(node);
        let x = u[node];
        let mut acc = 0.0;
        // horizontal neighbours; edge lies on the perimeter iff the row does
        let ch = if j == 0 || j == n { 0.5 } else { 1.0 };
        if i > 0 {
            acc += ch * (x - u[node - 1]);
        }
        if i < n {
            acc += ch * (x - u[node + 1]);
        }
        let cv = if i == 0 || i == n { 0.5 } else { 1.0 };
        if j > 0 {
            acc += cv * (x - u[node - side]);
        }
        if j < n {
            acc += cv * (x - u[node + side]);
        }
        let prev = u[chain[(c + m - 1) % m]];
        let next = u[chain[(c + 1) % m]];
        acc += inv_h * (2.0 * x - prev - next);
        out[node] = k2 * acc;
    }
}

/// Quadrature weight owning each node in the gradient flow: `h^2` for
/// interior nodes, `h` for chain nodes.
pub fn owner_weights(g: &GridSpec) -> Vec<f64> {
    let (h, h2) = (g.h(), g.h() * g.h());
    (0..g.node_count())
        .map(|k| match g.role(k) {
            NodeRole::Interior(_) => h2,
            NodeRole::Boundary(_) => h,
        })
        .collect()
}

/// Chemical potentials on every node: `mu` on interior nodes, `mu_Gamma` on
/// chain nodes, both as `(1 / owner weight) dE_total / du_n`.
pub fn chemical_potential_nodes(g: &GridSpec, p: &ModelParams, s: &SurfacePotential, u: &Field) -> Result<Vec<f64>> {
    g.check_field(u)?;
    let v = &u.values;
    let mut out = vec![0.0; v.len()];
    stiffness_apply(g, p.kappa, v, &mut out);
    let rim = g.perimeter_potential_weight();
    let (h, inv_h, inv_h2) = (g.h(), 1.0 / g.h(), 1.0 / (g.h() * g.h()));
    for &k in g.interior() {
        out[k] = out[k] * inv_h2 + bulk_potential(v[k]).1;
    }
    for &k in g.chain() {
        let x = v[k];
        out[k] = (out[k] + rim * bulk_potential(x).1 + h * surface_potential(s, x).1) * inv_h;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChemicalPotentials {
    /// Bulk potential at interior nodes, interior order.
    pub bulk: Vec<f64>,
    /// Surface potential along the chain.
    pub surface: BoundaryField,
}

pub fn chemical_potentials(g: &GridSpec, p: &ModelParams, s: &SurfacePotential, u: &Field) -> Result<ChemicalPotentials> {
    let nodes = chemical_potential_nodes(g, p, s, u)?;
    Ok(ChemicalPotentials {
        bulk: g.interior().iter().map(|&k| nodes[k]).collect(),
        surface: BoundaryField::new(g.chain().iter().map(|&k| nodes[k]).collect()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Bulk,
    Surface,
}

/// Implicit operator of the convex splitting, `A_c x = W^-1 K x + S x`, on
/// the combined node vector. Self-adjoint and positive in the owner-weight
/// inner product.
pub fn implicit_apply(g: &GridSpec, p: &ModelParams, x: &Field) -> Result<Field> {
    g.check_field(x)?;
    let mut out = vec![0.0; x.values.len()];
    stiffness_apply(g, p.kappa, &x.values, &mut out);
    let inv_h2 = 1.0 / (g.h() * g.h());
    let inv_h = 1.0 / g.h();
    for &k in g.interior() {
        out[k] = out[k] * inv_h2 + p.s1 * x.values[k];
    }
    for &k in g.chain() {
        out[k] = out[k] * inv_h + p.s2 * x.values[k];
    }
    Ok(Field::new(out))
}

/// Per-node explicit part of the convex splitting: `S1 x - f(x)` inside;
/// `S2 x - g(x) - (w / h) f(x)` on the chain, the last term being the
/// share of the bulk potential carried by perimeter nodes.
pub fn explicit_part(g: &GridSpec, p: &ModelParams, s: &SurfacePotential, x: &Field) -> Result<Field> {
    g.check_field(x)?;
    let mut out = vec![0.0; x.values.len()];
    explicit_part_into(g, p, s, &x.values, &mut out);
    Ok(Field::new(out))
}

pub(crate) fn explicit_part_into(g: &GridSpec, p: &ModelParams, s: &SurfacePotential, x: &[f64], out: &mut [f64]) {
    let share = g.perimeter_potential_weight() / g.h();
    for &k in g.interior() {
        out[k] = p.s1 * x[k] - bulk_potential(x[k]).1;
    }
    for &k in g.chain() {
        let v = x[k];
        out[k] = p.s2 * v - surface_potential(s, v).1 - share * bulk_potential(v).1;
    }
}

/// Restriction of a combined vector to one region.
pub fn region_values(g: &GridSpec, region: Region, x: &Field) -> Vec<f64> {
    let idx = match region {
        Region::Bulk => g.interior(),
        Region::Surface => g.chain(),
    };
    idx.iter().map(|&k| x.values[k]).collect()
}

/// `(A_c x)` restricted to `region`.
pub fn convex_split_apply(g: &GridSpec, p: &ModelParams, region: Region, x: &Field) -> Result<Vec<f64>> {
    Ok(region_values(g, region, &implicit_apply(g, p, x)?))
}

/// Convex parts `(E_c, E_e)` with `E_c - E_e = E_total`.
pub fn split_energies(g: &GridSpec, p: &ModelParams, s: &SurfacePotential, u: &Field) -> Result<(f64, f64)> {
    g.check_field(u)?;
    let v = &u.values;
    let mut ku = vec![0.0; v.len()];
    stiffness_apply(g, p.kappa, v, &mut ku);
    // K is the Hessian of the quadratic gradient energy, so that energy is u.Ku/2
    let gradient = 0.5 * v.iter().zip(&ku).map(|(a, b)| a * b).sum::<f64>();
    let w = g.potential_weights();
    let h = g.h();
    let surface_const = match s {
        SurfacePotential::DoubleWell => 0.25,
        SurfacePotential::MovingContactLine { .. } => 0.0,
    };
    let mut ec = gradient;
    let mut ee = 0.0;
    for &k in g.interior() {
        let x = v[k];
        ec += w[k] * (0.5 * p.s1 * x * x + 0.25);
        ee += w[k] * (0.5 * (p.s1 + 1.0) * x * x - 0.25 * x.powi(4));
    }
    for &k in g.chain() {
        let x = v[k];
        ec += h * (0.5 * p.s2 * x * x + surface_const) + w[k] * 0.25;
        ee += h * (0.5 * p.s2 * x * x + surface_const - surface_potential(s, x).0) + w[k] * (0.25 - bulk_potential(x).0);
    }
    Ok((ec, ee))
}
