//! Second-order exponential integrators for `u' = Lu + N(u)` with diagonal `L`.

use super::geometry::RadialGraph;
use super::Scheme;
use crate::error::Result;
use crate::spectral::{eigenvalue_f64, Layout, SpectralField};

/// `φ1(z) = (e^z − 1)/z`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

/// `φ2(z) = (e^z − 1 − z)/z²`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 0.1 {
        // Taylor series Σ z^m/(m+2)!
        let mut term = 0.5;
        let mut sum = 0.0;
        for m in 0..12 {
            sum += term;
            term *= z / (m as f64 + 3.0);
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Per-level coefficients of one step of size `dt`.
#[derive(Clone, Debug)]
pub struct Stepper {
    scheme: Scheme,
    dt: f64,
    decay: Vec<f64>,
    phi1_dt: Vec<f64>,
    phi2_dt: Vec<f64>,
}

impl Stepper {
    pub fn new(scheme: Scheme, layout: Layout, dt: f64) -> Self {
        let levels = 0..=layout.j_max;
        let z: Vec<f64> = levels.map(|j| -eigenvalue_f64(layout.n, j) * dt).collect();
        Self {
            scheme,
            dt,
            decay: z.iter().map(|z| z.exp()).collect(),
            phi1_dt: z.iter().map(|&z| dt * phi1(z)).collect(),
            phi2_dt: z.iter().map(|&z| dt * phi2(z)).collect(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, graph: &RadialGraph, u: &SpectralField) -> Result<SpectralField> {
        let layout = u.layout();
        let nu = graph.nonlinear(u)?;
        match self.scheme {
            Scheme::EtdRk2 => {
                // Cox–Matthews ETD2RK.
                let a = self.combine(layout, |j, i| {
                    self.decay[j] * u.coeffs()[i] + self.phi1_dt[j] * nu.coeffs()[i]
                })?;
                let na = graph.nonlinear(&a)?;
                self.combine(layout, |j, i| {
                    a.coeffs()[i] + self.phi2_dt[j] * (na.coeffs()[i] - nu.coeffs()[i])
                })
            }
            Scheme::ImexRk2 => {
                // Integrating-factor Heun: linear part exact, trapezoidal nonlinear.
                let a = self.combine(layout, |j, i| {
                    self.decay[j] * (u.coeffs()[i] + self.dt * nu.coeffs()[i])
                })?;
                let na = graph.nonlinear(&a)?;
                self.combine(layout, |j, i| {
                    self.decay[j] * (u.coeffs()[i] + 0.5 * self.dt * nu.coeffs()[i])
                        + 0.5 * self.dt * na.coeffs()[i]
                })
            }
        }
    }

    fn combine(&self, layout: Layout, f: impl Fn(usize, usize) -> f64) -> Result<SpectralField> {
        let mut coeffs = vec![0.0; layout.len()];
        for j in 0..=layout.j_max {
            for i in layout.level_range(j) {
                coeffs[i] = f(j, i);
            }
        }
        SpectralField::from_coeffs(layout, coeffs)
    }
}
