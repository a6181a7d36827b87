//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the operators under test; the
//! discrete energy is rebuilt from its definition, node by node and edge by
//! edge, and the implicit step is assembled densely.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pacdyn::{Field, GridSpec, ModelParams, SurfacePotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn big_f(x: f64) -> f64 {
    (x * x - 1.0).powi(2) / 4.0
}

pub fn small_f(x: f64) -> f64 {
    x * x * x - x
}

pub fn big_g(s: &SurfacePotential, x: f64) -> f64 {
    match *s {
        SurfacePotential::DoubleWell => big_f(x),
        SurfacePotential::MovingContactLine { theta_s, gamma_tilde } => {
            -0.5 * gamma_tilde * theta_s.to_radians().cos() * (std::f64::consts::FRAC_PI_2 * x).sin()
        }
    }
}

pub fn small_g(s: &SurfacePotential, x: f64) -> f64 {
    match *s {
        SurfacePotential::DoubleWell => small_f(x),
        SurfacePotential::MovingContactLine { theta_s, gamma_tilde } => {
            let c = std::f64::consts::FRAC_PI_2;
            -0.5 * gamma_tilde * theta_s.to_radians().cos() * c * (c * x).cos()
        }
    }
}

/// Dense model of one grid and parameter set.
pub struct Oracle {
    pub n: usize,
    pub h: f64,
    pub p: ModelParams,
    pub s: SurfacePotential,
    /// perimeter nodes, counterclockwise from the origin
    pub chain: Vec<usize>,
    pub on_chain: Vec<bool>,
}

impl Oracle {
    pub fn new(n: usize, p: ModelParams, s: SurfacePotential) -> Self {
        let side = n + 1;
        let id = |i: usize, j: usize| j * side + i;
        let mut chain = Vec::new();
        chain.extend((0..n).map(|i| id(i, 0)));
        chain.extend((0..n).map(|j| id(n, j)));
        chain.extend((1..=n).rev().map(|i| id(i, n)));
        chain.extend((1..=n).rev().map(|j| id(0, j)));
        let mut on_chain = vec![false; side * side];
        for &k in &chain {
            on_chain[k] = true;
        }
        Oracle { n, h: 1.0 / n as f64, p, s, chain, on_chain }
    }

    pub fn len(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    fn ij(&self, k: usize) -> (usize, usize) {
        (k % (self.n + 1), k / (self.n + 1))
    }

    /// Every grid edge with its weight factor: 1/2 for edges running along
    /// a side of the square, 1 otherwise.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let (n, side) = (self.n, self.n + 1);
        let mut out = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let k = j * side + i;
                if i < n {
                    out.push((k, k + 1, if j == 0 || j == n { 0.5 } else { 1.0 }));
                }
                if j < n {
                    out.push((k, k + side, if i == 0 || i == n { 0.5 } else { 1.0 }));
                }
            }
        }
        out
    }

    /// Weight of the bulk potential at node `k`.
    pub fn potential_weight(&self, k: usize) -> f64 {
        let h2 = self.h * self.h;
        if self.on_chain[k] {
            // the interior nodes cover (N-1)^2 h^2; the chain shares the rest
            (1.0 - (self.n - 1).pow(2) as f64 * h2) / (4 * self.n) as f64
        } else {
            h2
        }
    }

    pub fn owner_weight(&self, k: usize) -> f64 {
        if self.on_chain[k] {
            self.h
        } else {
            self.h * self.h
        }
    }

    pub fn gamma(&self, k: usize) -> f64 {
        if self.on_chain[k] {
            self.p.gamma2
        } else {
            self.p.gamma1
        }
    }

    pub fn stab(&self, k: usize) -> f64 {
        if self.on_chain[k] {
            self.p.s2
        } else {
            self.p.s1
        }
    }

    /// `(bulk, surface)` energy straight from the definition.
    pub fn energy(&self, u: &[f64]) -> (f64, f64) {
        let k2 = self.p.kappa * self.p.kappa;
        let mut bulk = 0.0;
        for (a, b, c) in self.edges() {
            bulk += 0.5 * k2 * c * (u[b] - u[a]).powi(2);
        }
        for (k, &x) in u.iter().enumerate() {
            bulk += self.potential_weight(k) * big_f(x);
        }
        let m = self.chain.len();
        let mut surf = 0.0;
        for c in 0..m {
            let (a, b) = (u[self.chain[c]], u[self.chain[(c + 1) % m]]);
            surf += 0.5 * k2 * (b - a).powi(2) / self.h + self.h * big_g(&self.s, a);
        }
        (bulk, surf)
    }

    pub fn total_energy(&self, u: &[f64]) -> f64 {
        let (b, s) = self.energy(u);
        b + s
    }

    /// Hessian of the quadratic gradient energy.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let k2 = self.p.kappa * self.p.kappa;
        let mut k = DMatrix::zeros(self.len(), self.len());
        let mut add = |a: usize, b: usize, w: f64| {
            k[(a, a)] += w;
            k[(b, b)] += w;
            k[(a, b)] -= w;
            k[(b, a)] -= w;
        };
        for (a, b, c) in self.edges() {
            add(a, b, k2 * c);
        }
        let m = self.chain.len();
        for c in 0..m {
            add(self.chain[c], self.chain[(c + 1) % m], k2 / self.h);
        }
        k
    }

    /// Weighted gradient `(1/w_owner) dE/du` from the dense stiffness.
    pub fn chemical_potential(&self, u: &[f64]) -> Vec<f64> {
        let ku = self.stiffness() * DVector::from_column_slice(u);
        (0..self.len())
            .map(|k| {
                let mut d = ku[k] + self.potential_weight(k) * small_f(u[k]);
                if self.on_chain[k] {
                    d += self.h * small_g(&self.s, u[k]);
                }
                d / self.owner_weight(k)
            })
            .collect()
    }

    /// Central differences of the energy, scaled like the chemical potential.
    pub fn fd_chemical_potential(&self, u: &[f64], eps: f64, energy: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let mut x = u.to_vec();
        (0..u.len())
            .map(|k| {
                x[k] = u[k] + eps;
                let ep = energy(&x);
                x[k] = u[k] - eps;
                let em = energy(&x);
                x[k] = u[k];
                (ep - em) / (2.0 * eps) / self.owner_weight(k)
            })
            .collect()
    }

    /// `P`: subtracts the interior average on interior nodes and the chain
    /// average on chain nodes.
    pub fn projection(&self) -> DMatrix<f64> {
        let len = self.len();
        let mut p = DMatrix::identity(len, len);
        let interior: Vec<usize> = (0..len).filter(|&k| !self.on_chain[k]).collect();
        for block in [&interior, &self.chain] {
            let w = 1.0 / block.len() as f64;
            for &a in block.iter() {
                for &b in block.iter() {
                    p[(a, b)] -= w;
                }
            }
        }
        p
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        (self.projection() * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    /// `A_c = W^-1 K + S`
    pub fn implicit_matrix(&self) -> DMatrix<f64> {
        let mut a = self.stiffness();
        for r in 0..self.len() {
            let w = 1.0 / self.owner_weight(r);
            a.row_mut(r).scale_mut(w);
            a[(r, r)] += self.stab(r);
        }
        a
    }

    /// `I + dt G P A_c`
    pub fn system_matrix(&self, dt: f64) -> DMatrix<f64> {
        let gamma = DMatrix::from_diagonal(&DVector::from_fn(self.len(), |k, _| dt * self.gamma(k)));
        DMatrix::identity(self.len(), self.len()) + gamma * self.projection() * self.implicit_matrix()
    }

    pub fn explicit_part(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let x = u[k];
                if self.on_chain[k] {
                    self.p.s2 * x - small_g(&self.s, x) - self.potential_weight(k) / self.h * small_f(x)
                } else {
                    self.p.s1 * x - small_f(x)
                }
            })
            .collect()
    }

    /// One implicit step by dense LU.
    pub fn step(&self, u: &[f64], dt: f64) -> Vec<f64> {
        let pe = self.project(&self.explicit_part(u));
        let rhs = DVector::from_fn(self.len(), |k, _| u[k] + dt * self.gamma(k) * pe[k]);
        self.system_matrix(dt).lu().solve(&rhs).expect("system matrix is singular").as_slice().to_vec()
    }

    /// `max |P mu|`
    pub fn steady_residual(&self, u: &[f64]) -> f64 {
        self.project(&self.chemical_potential(u)).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn oracle_for(cfg: &pacdyn::RunConfig) -> Oracle {
    Oracle::new(cfg.n, cfg.model_params(), cfg.surface)
}

/// Uniform noise in `[-amp, amp]` on every node.
pub fn random_values(g: &GridSpec, seed: u64, amp: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field::new((0..g.node_count()).map(|_| rng.gen_range(-amp..=amp)).collect())
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
