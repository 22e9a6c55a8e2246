//! Gauss–Legendre rules and panel quadrature for oscillatory integrands.
//!
//! Panels are sized so that every phonon wavelength holds at least
//! [`MIN_NODES_PER_WAVELENGTH`] nodes. The panel count is then doubled until
//! two successive estimates agree to the requested tolerance.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MIN_NODES_PER_WAVELENGTH: f64 = 10.0;
const PANEL_ORDER: usize = 8;

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre nodes (absolute positions and weights) over
/// `[a, b]` split into `panels` equal panels.
pub fn composite_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

/// Settings for the panel-doubling loop.
#[derive(Debug, Clone, Copy)]
pub struct OscillatoryQuadrature {
    /// Relative tolerance between successive doublings.
    pub rel_tol: f64,
    /// Absolute floor below which the estimate is accepted as converged.
    pub abs_tol: f64,
    /// Maximum panels per axis.
    pub max_panels: usize,
}

impl Default for OscillatoryQuadrature {
    fn default() -> Self {
        OscillatoryQuadrature {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_panels: 1 << 12,
        }
    }
}

impl OscillatoryQuadrature {
    fn initial_panels(&self, length: f64, wavelength: f64) -> usize {
        let nodes = MIN_NODES_PER_WAVELENGTH * length / wavelength;
        ((nodes / PANEL_ORDER as f64).ceil() as usize).max(1)
    }

    fn converged(&self, prev: Complex64, next: Complex64) -> bool {
        let diff = (next - prev).norm();
        diff <= self.rel_tol * next.norm() || diff <= self.abs_tol
    }

    fn drive(
        &self,
        start: usize,
        mut eval: impl FnMut(usize) -> Complex64,
    ) -> Result<Complex64> {
        let mut panels = start;
        let mut prev = eval(panels);
        loop {
            let next_panels = panels * 2;
            if next_panels > self.max_panels {
                let achieved = {
                    let fine = eval(panels);
                    (fine - prev).norm() / fine.norm().max(f64::MIN_POSITIVE)
                };
                return Err(Error::Accuracy {
                    achieved: achieved.max(self.rel_tol),
                    requested: self.rel_tol,
                });
            }
            let next = eval(next_panels);
            if self.converged(prev, next) {
                return Ok(next);
            }
            prev = next;
            panels = next_panels;
        }
    }

    /// ∫_a^b f(z) dz for an integrand oscillating on `wavelength`.
    pub fn integrate(
        &self,
        f: impl Fn(f64) -> Complex64,
        a: f64,
        b: f64,
        wavelength: f64,
    ) -> Result<Complex64> {
        if b <= a {
            return Ok(Complex64::default());
        }
        let start = self.initial_panels(b - a, wavelength);
        self.drive(start, |n| {
            composite_nodes(a, b, n)
                .into_iter()
                .map(|(x, w)| f(x) * w)
                .sum()
        })
    }

    /// ∫_a^b ∫_c^d f(z, z′) dz′ dz on a tensor-product panel grid.
    pub fn integrate_2d(
        &self,
        f: impl Fn(f64, f64) -> Complex64,
        (a, b): (f64, f64),
        (c, d): (f64, f64),
        wavelength: f64,
    ) -> Result<Complex64> {
        if b <= a || d <= c {
            return Ok(Complex64::default());
        }
        let start_x = self.initial_panels(b - a, wavelength);
        let start_y = self.initial_panels(d - c, wavelength);
        let ratio = start_y as f64 / start_x as f64;
        self.drive(start_x, |n| {
            let ny = ((n as f64 * ratio).round() as usize).max(1);
            let xs = composite_nodes(a, b, n);
            let ys = composite_nodes(c, d, ny);
            let mut acc = Complex64::default();
            for &(x, wx) in &xs {
                let mut row = Complex64::default();
                for &(y, wy) in &ys {
                    row += f(x, y) * wy;
                }
                acc += row * wx;
            }
            acc
        })
    }
}

/// Product rule on the unit sphere: Gauss–Legendre in cos θ, uniform in φ.
/// Returns unit vectors and weights summing to 4π. Exact for spherical
/// harmonics up to degree min(2·n_theta − 1, n_phi − 1).
pub fn sphere_rule(n_theta: usize, n_phi: usize) -> Vec<([f64; 3], f64)> {
    let (x, w) = gauss_legendre(n_theta);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (ct, wt) in x.iter().zip(&w) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            out.push(([st * phi.cos(), st * phi.sin(), *ct], wt * dphi));
        }
    }
    out
}
