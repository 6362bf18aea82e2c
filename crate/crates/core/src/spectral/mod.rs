//! Eigenstructure of `L = Δ + 1` on `S^n(√(2n))`, spectral transforms,
//! projections and norms.

mod field;
mod norms;
mod spectrum;
mod transform;

pub use field::{sphere_area, sphere_radius, unit_sphere_area, BasisValues, Layout, Mode, SpectralField};
pub use norms::{operator_norm, path_norm, sobolev_norm, sobolev_weight, PathNormParams};
pub use spectrum::{
    arrival_exponent, codimension, eigenspace_dim, eigenvalue, eigenvalue_f64,
    higher_order_levels, laplace_eigenvalue, Rational, SpectrumRow, SpectrumTable,
};
pub use transform::{default_nodes, gauss_nodes, min_nodes, GridField, SphereTransform};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    /// `Π_k`: levels `j ≥ k` (onto `F_k`).
    Tail(usize),
    /// `π_j`: the single level `j` (onto `E_j`).
    Level(usize),
    /// `1 - Π_k`: levels `j < k`.
    Head(usize),
}

impl Projection {
    pub fn keeps(&self, j: usize) -> bool {
        match *self {
            Projection::Tail(k) => j >= k,
            Projection::Level(l) => j == l,
            Projection::Head(k) => j < k,
        }
    }
}

/// Zeroes every coefficient outside the selected band.
pub fn project(field: &SpectralField, selector: Projection) -> SpectralField {
    field.map_levels(|j| if selector.keeps(j) { 1.0 } else { 0.0 })
}

/// `Δu` on `S^n(√(2n))`, spectrally.
pub fn laplacian(field: &SpectralField) -> SpectralField {
    let n = field.layout().n;
    field.map_levels(|j| -laplace_eigenvalue(n, j))
}

/// `Lu = Δu + u`.
pub fn apply_linear(field: &SpectralField) -> SpectralField {
    let n = field.layout().n;
    field.map_levels(|j| -eigenvalue_f64(n, j))
}

/// `e^{Ls} u`, i.e. `e^{-λ_j s}` per level.
pub fn linear_propagator(field: &SpectralField, s: f64) -> SpectralField {
    let n = field.layout().n;
    field.map_levels(|j| (-eigenvalue_f64(n, j) * s).exp())
}

/// Degree-`k` homogeneous extension `(|x|/√(2n))^k · Y(√(2n) x/|x|)` of a
/// field supported on the single level `k`.
pub fn harmonic_extension(field: &SpectralField, x: &[f64]) -> Result<f64> {
    let layout = field.layout();
    if x.len() != layout.n + 1 {
        return Err(Error::InvalidArgument(format!(
            "point has {} components, expected {}",
            x.len(),
            layout.n + 1
        )));
    }
    let levels = field.support_levels();
    let k = match levels.as_slice() {
        [] => return Ok(0.0),
        [k] => *k,
        _ => return Err(Error::NotSingleLevel(levels)),
    };
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(if k == 0 { field.eval_angle(0.0) } else { 0.0 });
    }
    Ok((norm / layout.radius()).powi(k as i32) * field.eval_direction(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        let layout = Layout::new(1, 6).unwrap();
        let low = SpectralField::from_coeffs(layout, (0..13).map(|i| if i < 3 { 1.0 } else { 0.0 }).collect()).unwrap();
        assert!(project(&low, Projection::Tail(2)).is_zero());
        let three = SpectralField::unit_mode(layout, Mode { j: 3, m: 1 }, 0.7).unwrap();
        assert_eq!(project(&three, Projection::Level(3)), three);
    }

    #[test]
    fn extension_errors_and_constants() {
        let layout = Layout::new(2, 4).unwrap();
        let c = SpectralField::constant(layout, 1.5);
        assert!((harmonic_extension(&c, &[0.3, -0.2, 0.7]).unwrap() - 1.5).abs() < 1e-14);
        assert!((harmonic_extension(&c, &[0.0, 0.0, 0.0]).unwrap() - 1.5).abs() < 1e-14);
        let two = SpectralField::from_coeffs(layout, vec![0.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            harmonic_extension(&two, &[1.0, 0.0, 0.0]),
            Err(Error::NotSingleLevel(_))
        ));
        assert!(harmonic_extension(&c, &[1.0, 0.0]).is_err());
    }
}
