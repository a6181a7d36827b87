//! Mass and energy bookkeeping plus interface metrics for steady states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::model::{self, ModelParams, SurfacePotential};
use crate::projection;
use crate::stepper::{steady_residual, RunState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub step: u64,
    pub time: f64,
    pub mass_bulk: f64,
    pub mass_surf: f64,
    pub energy_bulk: f64,
    pub energy_surf: f64,
    pub energy_total: f64,
    pub steady_residual: f64,
    pub solver_iterations: usize,
}

/// Diagnostics of a state. Masses are the weighted block means that the
/// implicit step conserves.
pub fn record(
    state: &RunState,
    g: &GridSpec,
    p: &ModelParams,
    s: &SurfacePotential,
    solver_iterations: usize,
) -> Result<DiagRecord> {
    let e = model::discrete_energy(g, p, s, &state.u)?;
    let (mass_bulk, mass_surf) = projection::node_means(g, &state.u.values);
    Ok(DiagRecord {
        step: state.n,
        time: state.t,
        mass_bulk,
        mass_surf,
        energy_bulk: e.bulk,
        energy_surf: e.surf,
        energy_total: e.total,
        steady_residual: steady_residual(state, g, p, s)?,
        solver_iterations,
    })
}

/// Relative slack allowed before an energy increase counts as a violation.
pub const ENERGY_SLACK: f64 = 1e-10;

/// Indices `k` where `E[k] > E[k-1] + slack (1 + |E[k-1]|)`.
pub fn audit_energy_decay(energies: &[f64]) -> Vec<usize> {
    energies
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + ENERGY_SLACK * (1.0 + w[0].abs()))
        .map(|(k, _)| k + 1)
        .collect()
}

/// Steps of a diagnostic series at which the total energy rose.
pub fn audit_series(series: &[DiagRecord]) -> Vec<u64> {
    let e: Vec<f64> = series.iter().map(|r| r.energy_total).collect();
    audit_energy_decay(&e).into_iter().map(|k| series[k].step).collect()
}

/// Largest drift of either mass from its initial value.
pub fn mass_drift(series: &[DiagRecord]) -> (f64, f64) {
    let Some(first) = series.first() else { return (0.0, 0.0) };
    series.iter().fold((0.0_f64, 0.0_f64), |(b, s), r| {
        (b.max((r.mass_bulk - first.mass_bulk).abs()), s.max((r.mass_surf - first.mass_surf).abs()))
    })
}

/// Standard deviations of `mu` over the interior and of `mu_Gamma` over the
/// chain; both vanish at constrained critical points.
pub fn chemical_potential_spread(g: &GridSpec, p: &ModelParams, s: &SurfacePotential, u: &Field) -> Result<(f64, f64)> {
    let mu = model::chemical_potentials(g, p, s, u)?;
    let sd = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
    };
    Ok((sd(&mu.bulk), sd(&mu.surface.values)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusStats {
    pub mean_radius: f64,
    /// Largest `|r - mean|`, in units of `h`.
    pub max_deviation: f64,
    pub crossings: usize,
}

#[inline]
fn crossing(a: f64, b: f64) -> Option<f64> {
    // fraction along [a, b] where the linear interpolant vanishes
    if a == 0.0 {
        Some(0.0)
    } else if (a < 0.0) != (b < 0.0) && b != 0.0 {
        Some(a / (a - b))
    } else {
        None
    }
}

/// Circularity of the zero level set about the domain centre, from the
/// zero crossings along every grid row and column.
pub fn zero_level_radius_stats(u: &Field, g: &GridSpec) -> Result<RadiusStats> {
    g.check_field(u)?;
    let (n, h) = (g.n(), g.h());
    let v = |i: usize, j: usize| u.values[g.idx(i, j)];
    let mut pts = Vec::new();
    for j in 0..=n {
        for i in 0..n {
            if let Some(t) = crossing(v(i, j), v(i + 1, j)) {
                pts.push(((i as f64 + t) * h, j as f64 * h));
            }
        }
    }
    for i in 0..=n {
        for j in 0..n {
            if let Some(t) = crossing(v(i, j), v(i, j + 1)) {
                pts.push((i as f64 * h, (j as f64 + t) * h));
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::MetricUndefined("field has no zero crossing".into()));
    }
    let radii: Vec<f64> = pts.iter().map(|(x, y)| ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt()).collect();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    let dev = radii.iter().fold(0.0_f64, |m, r| m.max((r - mean).abs()));
    Ok(RadiusStats { mean_radius: mean, max_deviation: dev / h, crossings: radii.len() })
}

/// Wall along which contact angles are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Bottom,
    Top,
    Left,
    Right,
}

/// Rows parallel to the wall used for the line fit.
const FIT_ROWS: usize = 5;

/// Angles (degrees, measured inside the `+1` phase) where the zero contour
/// meets a wall. `right` is absent when only one contact line exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactAngles {
    pub left: f64,
    pub right: Option<f64>,
}

impl ContactAngles {
    pub fn mean(&self) -> f64 {
        match self.right {
            Some(r) => 0.5 * (self.left + r),
            None => self.left,
        }
    }
}

/// Field values in wall coordinates: `s` runs along the wall, `t` is the
/// node distance from it.
fn wall_view<'a>(u: &'a Field, g: &'a GridSpec, edge: Edge) -> impl Fn(usize, usize) -> f64 + 'a {
    let n = g.n();
    move |s, t| {
        let (i, j) = match edge {
            Edge::Bottom => (s, t),
            Edge::Top => (s, n - t),
            Edge::Left => (t, s),
            Edge::Right => (n - t, s),
        };
        u.values[g.idx(i, j)]
    }
}

/// Crossing positions along wall-parallel row `t`, in units of `h`, with the
/// sign of the `+1` side (`+1.0` if the positive phase lies at larger `s`).
fn row_crossings(view: &impl Fn(usize, usize) -> f64, n: usize, t: usize) -> Vec<(f64, f64)> {
    (0..n)
        .filter_map(|s| {
            let (a, b) = (view(s, t), view(s + 1, t));
            crossing(a, b).map(|f| (s as f64 + f, if b > a { 1.0 } else { -1.0 }))
        })
        .collect()
}

fn fit_angle(points: &[(f64, f64)], side: f64) -> f64 {
    // least squares s = a + b t
    let m = points.len() as f64;
    let (st, ss) = points.iter().fold((0.0, 0.0), |(a, b), (t, s)| (a + t, b + s));
    let (tm, sm) = (st / m, ss / m);
    let (num, den) = points.iter().fold((0.0, 0.0), |(n, d), (t, s)| (n + (t - tm) * (s - sm), d + (t - tm).powi(2)));
    let slope = num / den;
    1.0_f64.atan2(side * slope).to_degrees()
}

/// Contact angles of the zero contour at `edge`, from a line fit through its
/// crossings on the first five node rows off the wall.
pub fn contact_angle(u: &Field, g: &GridSpec, edge: Edge) -> Result<ContactAngles> {
    g.check_field(u)?;
    let n = g.n();
    if n <= FIT_ROWS {
        return Err(Error::MetricUndefined(format!("grid too coarse for a {FIT_ROWS}-row fit")));
    }
    let view = wall_view(u, g, edge);
    let rows: Vec<Vec<(f64, f64)>> = (1..=FIT_ROWS).map(|t| row_crossings(&view, n, t)).collect();
    if rows.iter().any(|r| r.is_empty()) {
        return Err(Error::MetricUndefined("zero contour does not reach the wall".into()));
    }
    let left: Vec<(f64, f64)> = rows.iter().enumerate().map(|(t, r)| ((t + 1) as f64, r[0].0)).collect();
    let left_angle = fit_angle(&left, rows[0][0].1);
    let right = if rows.iter().all(|r| r.len() >= 2) {
        let pts: Vec<(f64, f64)> = rows.iter().enumerate().map(|(t, r)| ((t + 1) as f64, r[r.len() - 1].0)).collect();
        let last = rows[0][rows[0].len() - 1];
        Some(fit_angle(&pts, last.1))
    } else {
        None
    };
    Ok(ContactAngles { left: left_angle, right })
}

/// Distance between the outermost zero crossings on the first node row
/// above the bottom wall.
pub fn droplet_base_width(u: &Field, g: &GridSpec) -> Result<f64> {
    g.check_field(u)?;
    let view = wall_view(u, g, Edge::Bottom);
    let r = row_crossings(&view, g.n(), 1);
    if r.len() < 2 {
        return Err(Error::MetricUndefined("fewer than two crossings on the row y = h".into()));
    }
    Ok((r[r.len() - 1].0 - r[0].0) * g.h())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: &GridSpec) -> ModelParams {
        ModelParams { kappa: 2.0 * g.h(), gamma1: 100.0, gamma2: 100.0, s1: 100.0, s2: 100.0 }
    }

    #[test]
    fn record_of_constants() {
        let g = GridSpec::new(4).unwrap();
        let p = params(&g);
        let s = SurfacePotential::DoubleWell;
        let r0 = record(&RunState::new(Field::constant(&g, 0.0)), &g, &p, &s, 0).unwrap();
        assert_eq!((r0.mass_bulk, r0.mass_surf), (0.0, 0.0));
        assert!((r0.energy_total - 1.25).abs() < 1e-15);
        let r1 = record(&RunState::new(Field::constant(&g, 1.0)), &g, &p, &s, 0).unwrap();
        assert_eq!((r1.mass_bulk, r1.mass_surf, r1.energy_total), (1.0, 1.0, 0.0));
        assert_eq!(r1, record(&RunState::new(Field::constant(&g, 1.0)), &g, &p, &s, 0).unwrap());
    }

    #[test]
    fn energy_audit() {
        assert!(audit_energy_decay(&[3.0, 2.0, 1.5, 1.0]).is_empty());
        assert!(audit_energy_decay(&[1.0]).is_empty());
        let mut e: Vec<f64> = (0..10).map(|k| 1.0 / (1.0 + k as f64)).collect();
        e[6] = e[5] + 1e-3;
        assert_eq!(audit_energy_decay(&e), vec![6]);
        // within slack
        assert!(audit_energy_decay(&[1.0, 1.0 + 1e-11]).is_empty());
    }

    #[test]
    fn circle_radius() {
        let g = GridSpec::new(64).unwrap();
        let u = Field::from_fn(&g, |x, y| {
            let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
            ((r - 0.3) / (2.0_f64.sqrt() * 2.0 * g.h())).tanh()
        });
        let st = zero_level_radius_stats(&u, &g).unwrap();
        assert!((st.mean_radius - 0.3).abs() <= g.h());
        assert!(st.max_deviation <= 1.0, "{st:?}");
        assert!(matches!(zero_level_radius_stats(&Field::constant(&g, 1.0), &g), Err(Error::MetricUndefined(_))));
    }

    #[test]
    fn tilted_and_vertical_interfaces() {
        let g = GridSpec::new(64).unwrap();
        let w = 2.0_f64.sqrt() * 2.0 * g.h();
        // +1 phase to the right of x = 0.5 + y, a 45 degree wedge at the wall
        let tilted = Field::from_fn(&g, |x, y| ((x - 0.5 - y) / w).tanh());
        let a = contact_angle(&tilted, &g, Edge::Bottom).unwrap();
        assert!((a.left - 45.0).abs() <= 2.0, "{a:?}");
        assert!(a.right.is_none());

        let vertical = Field::from_fn(&g, |x, _| ((x - 0.43) / w).tanh());
        let a = contact_angle(&vertical, &g, Edge::Bottom).unwrap();
        assert!((a.left - 90.0).abs() <= 1.0);

        // mirrored wedge: +1 phase to the left of x = 0.5 - y
        let mirrored = Field::from_fn(&g, |x, y| ((0.5 - y - x) / w).tanh());
        let a = contact_angle(&mirrored, &g, Edge::Bottom).unwrap();
        assert!((a.left - 45.0).abs() <= 2.0, "{a:?}");

        // obtuse: +1 phase on the left of x = 0.5 + y makes 135 degrees
        let obtuse = Field::from_fn(&g, |x, y| ((0.5 + y - x) / w).tanh());
        assert!((contact_angle(&obtuse, &g, Edge::Bottom).unwrap().left - 135.0).abs() <= 2.0);

        // same geometry against the top wall after reflecting y
        let top = Field::from_fn(&g, |x, y| ((x - 0.5 - (1.0 - y)) / w).tanh());
        assert!((contact_angle(&top, &g, Edge::Top).unwrap().left - 45.0).abs() <= 2.0);

        assert!(contact_angle(&Field::constant(&g, -1.0), &g, Edge::Bottom).is_err());
    }

    #[test]
    fn droplet_cap_width_and_angles() {
        let g = GridSpec::new(64).unwrap();
        let w = 2.0_f64.sqrt() * 2.0 * g.h();
        let u = Field::from_fn(&g, |x, y| {
            let d = ((x - 0.5).powi(2) + y * y).sqrt();
            ((0.25 - d) / w).tanh()
        });
        let width = droplet_base_width(&u, &g).unwrap();
        let expected = 2.0 * (0.25_f64.powi(2) - g.h().powi(2)).sqrt();
        assert!((width - expected).abs() < g.h(), "{width} vs {expected}");
        // the fit sees the chord of the circle over rows 1..5, not its tangent
        let pts: Vec<(f64, f64)> = (1..=5).map(|t| (t as f64, -(16.0_f64.powi(2) - (t * t) as f64).sqrt())).collect();
        let want = fit_angle(&pts, 1.0);
        let a = contact_angle(&u, &g, Edge::Bottom).unwrap();
        assert!(want < 85.0);
        assert!((a.left - want).abs() < 1.0 && (a.right.unwrap() - want).abs() < 1.0, "{a:?} vs {want}");
        assert!(droplet_base_width(&Field::constant(&g, 1.0), &g).is_err());
    }
}
