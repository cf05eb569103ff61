//! Uniform radial grid with finite-volume geometry.
//!
//! Nodes sit at `r_i = i·dr` for `i = 0..n`, with `r_{n−1} = r_max`. Node `i`
//! owns the spherical shell between its inner and outer faces; the faces sit
//! halfway between nodes, the outermost one at `r_max`. The sum of all cell
//! volumes equals the volume of the ball of radius `r_max` exactly, so
//! `Σ V_i f_i` is a second-order quadrature of `∫ f dx` that is exact on
//! constants.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    dr: f64,
    volumes: Vec<f64>,
    face_radii: Vec<f64>,
    face_areas: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self, GridError> {
        if n < 3 {
            return Err(GridError::TooFewNodes(n));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(GridError::BadRadius(r_max));
        }
        let dr = r_max / (n - 1) as f64;
        let face_radii: Vec<f64> = (0..n)
            .map(|i| if i + 1 == n { r_max } else { (i as f64 + 0.5) * dr })
            .collect();
        let ball = |r: f64| 4.0 / 3.0 * PI * r * r * r;
        let mut volumes = Vec::with_capacity(n);
        let mut inner = 0.0;
        for &outer in &face_radii {
            volumes.push(ball(outer) - ball(inner));
            inner = outer;
        }
        let face_areas = face_radii.iter().map(|&r| 4.0 * PI * r * r).collect();
        Ok(Self {
            r_max,
            dr,
            volumes,
            face_radii,
            face_areas,
        })
    }

    pub fn n(&self) -> usize {
        self.volumes.len()
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn radius(&self, i: usize) -> f64 {
        if i + 1 == self.n() {
            self.r_max
        } else {
            i as f64 * self.dr
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.radius(i)).collect()
    }

    /// Cell volumes `V_i`.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Outer face radius of cell `i`; the last one is `r_max`.
    pub fn face_radii(&self) -> &[f64] {
        &self.face_radii
    }

    /// Outer face area `4πr²` of cell `i`.
    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// Conductance `A_f/dr` of the interior face between nodes `f` and `f+1`.
    pub fn conductance(&self, f: usize) -> f64 {
        self.face_areas[f] / self.dr
    }

    /// Quadrature weight of the electric field sample stored at face `f`.
    ///
    /// Interior faces carry `A_f·dr`. The outermost sample carries the exact
    /// energy weight of a Coulomb tail continued from `r_max` to infinity,
    /// `∫_{r_max}^∞ 4πr²(r_max/r)⁴ dr = 4πr_max³`.
    pub fn field_weight(&self, f: usize) -> f64 {
        if f + 1 == self.n() {
            4.0 * PI * self.r_max.powi(3)
        } else {
            self.face_areas[f] * self.dr
        }
    }

    /// `Σ V_i f_i ≈ ∫ f dx`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n());
        self.volumes.iter().zip(f).map(|(v, x)| v * x).sum()
    }

    /// `Σ V_i f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n());
        debug_assert_eq!(g.len(), self.n());
        self.volumes
            .iter()
            .zip(f.iter().zip(g))
            .map(|(v, (a, b))| v * a * b)
            .sum()
    }

    /// Samples a function of the radius at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n()).map(|i| f(self.radius(i))).collect()
    }

    /// Samples a function of the radius at the field faces.
    pub fn sample_faces(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.face_radii.iter().map(|&r| f(r)).collect()
    }

    /// Dirichlet form `Σ_f (A_f/dr)(u_{f+1} − u_f)²`, a compact discretization
    /// of `∫|∇u|² dx` with a natural boundary at both ends.
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        (0..self.n() - 1)
            .map(|f| {
                let d = u[f + 1] - u[f];
                self.conductance(f) * d * d
            })
            .sum()
    }

    /// Stiffness action `(Ku)_i = Σ_faces g_f(u_i − u_j)`; the gradient of
    /// `½·dirichlet(u)`.
    pub fn stiffness_apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n();
        out.iter_mut().for_each(|x| *x = 0.0);
        for f in 0..n - 1 {
            let flux = self.conductance(f) * (u[f + 1] - u[f]);
            out[f] -= flux;
            out[f + 1] += flux;
        }
    }

    /// Discrete Laplacian `−V⁻¹K u` with natural boundary conditions.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.stiffness_apply(u, &mut out);
        out.iter_mut()
            .zip(&self.volumes)
            .for_each(|(x, v)| *x = -*x / v);
        out
    }

    /// Tridiagonal entries `(off, diag)` of the stiffness matrix; `off[f]`
    /// couples nodes `f` and `f+1`.
    pub fn stiffness_bands(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for f in 0..n - 1 {
            let g = self.conductance(f);
            off[f] = -g;
            diag[f] += g;
            diag[f + 1] += g;
        }
        (off, diag)
    }

    /// Weight of the Robin term closing the Poisson problem at `r_max`.
    pub fn robin_weight(&self) -> f64 {
        self.face_areas[self.n() - 1] / self.r_max
    }

    /// Finite-volume divergence of a radial face field:
    /// `(A_i E_i − A_{i−1} E_{i−1}) / V_i`.
    pub fn divergence(&self, e: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut inner_flux = 0.0;
        (0..n)
            .map(|i| {
                let outer_flux = self.face_areas[i] * e[i];
                let d = (outer_flux - inner_flux) / self.volumes[i];
                inner_flux = outer_flux;
                d
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn volumes_sum_to_ball() {
        let g = RadialGrid::new(7.5, 301).unwrap();
        let total: f64 = g.volumes().iter().sum();
        assert_relative_eq!(total, 4.0 / 3.0 * PI * 7.5f64.powi(3), max_relative = 1e-14);
    }

    #[test]
    fn integrates_gaussian_to_second_order() {
        // ∫ e^{−r²} dx = π^{3/2}
        let exact = PI.powf(1.5);
        let err = |n: usize| {
            let g = RadialGrid::new(8.0, n).unwrap();
            (g.integrate(&g.sample(|r| (-r * r).exp())) - exact).abs()
        };
        let (e1, e2) = (err(201), err(401));
        assert!(e2 < 1e-3 * exact);
        assert!(e1 / e2 > 3.5, "order ratio {}", e1 / e2);
    }

    #[test]
    fn dirichlet_of_linear_profile() {
        // u = r → |∇u|² = 1 → ∫ = ball volume, exact on the compact stencil.
        let g = RadialGrid::new(3.0, 61).unwrap();
        let u = g.sample(|r| r);
        let exact: f64 = (0..g.n() - 1).map(|f| g.face_areas()[f] * g.dr()).sum();
        assert_relative_eq!(g.dirichlet(&u), exact, max_relative = 1e-13);
        assert_relative_eq!(exact, 4.0 / 3.0 * PI * 27.0, max_relative = 1e-3);
    }

    #[test]
    fn laplacian_of_quadratic_is_six_in_interior() {
        let g = RadialGrid::new(2.0, 81).unwrap();
        let lap = g.laplacian(&g.sample(|r| r * r));
        for &l in &lap[1..g.n() - 1] {
            assert_relative_eq!(l, 6.0, max_relative = 1e-10);
        }
        // The origin cell reduces to 6(u₁ − u₀)/dr².
        assert_relative_eq!(lap[0], 6.0, max_relative = 1e-12);
    }

    #[test]
    fn divergence_of_linear_field_is_constant() {
        let g = RadialGrid::new(4.0, 101).unwrap();
        let e = g.sample_faces(|r| r / 3.0);
        for d in g.divergence(&e) {
            assert_relative_eq!(d, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn stiffness_is_symmetric_and_annihilates_constants() {
        let g = RadialGrid::new(1.0, 11).unwrap();
        let mut out = vec![0.0; g.n()];
        g.stiffness_apply(&vec![2.5; g.n()], &mut out);
        assert!(out.iter().all(|x| x.abs() < 1e-14));
        let (off, diag) = g.stiffness_bands();
        let u: Vec<f64> = (0..g.n()).map(|i| (i as f64).sin()).collect();
        g.stiffness_apply(&u, &mut out);
        for i in 0..g.n() {
            let mut k = diag[i] * u[i];
            if i > 0 {
                k += off[i - 1] * u[i - 1];
            }
            if i + 1 < g.n() {
                k += off[i] * u[i + 1];
            }
            assert_relative_eq!(k, out[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert_eq!(RadialGrid::new(1.0, 2), Err(GridError::TooFewNodes(2)));
        assert!(RadialGrid::new(-1.0, 10).is_err());
    }
}
