//! Coefficient storage for band-limited functions on `S^n(√(2n))`.
//!
//! For `n = 1` the basis is the real Fourier basis on the circle of radius
//! `√2`: level `j ≥ 1` carries `cos jθ` (`m = 0`) and `sin jθ` (`m = 1`).
//! For `n ≥ 2` only zonal functions are represented: one Gegenbauer mode per
//! level, depending on the polar angle `θ` measured from the last axis.
//! Every basis function has unit `L²` norm on the radius-`√(2n)` sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Radius `√(2n)` of the stationary sphere.
pub fn sphere_radius(n: usize) -> f64 {
    (2.0 * n as f64).sqrt()
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half(m: usize) -> f64 {
    debug_assert!(m > 0);
    let (mut x, mut acc) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = m as f64 / 2.0;
    while x < target - 0.25 {
        acc *= x;
        x += 1.0;
    }
    acc
}

/// Area of the unit sphere `S^d ⊂ ℝ^{d+1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    2.0 * PI.powf((d + 1) as f64 / 2.0) / gamma_half(d + 1)
}

/// Area of `S^n(√(2n))`.
pub fn sphere_area(n: usize) -> f64 {
    sphere_radius(n).powi(n as i32) * unit_sphere_area(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mode {
    pub j: usize,
    pub m: usize,
}

/// Band limit and dimension; determines the coefficient ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub n: usize,
    pub j_max: usize,
}

impl Layout {
    pub fn new(n: usize, j_max: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension n must be >= 1".into()));
        }
        Ok(Self { n, j_max })
    }

    pub fn is_circle(&self) -> bool {
        self.n == 1
    }

    pub fn radius(&self) -> f64 {
        sphere_radius(self.n)
    }

    /// Number of stored modes on level `j`.
    pub fn level_len(&self, j: usize) -> usize {
        if self.is_circle() && j > 0 {
            2
        } else {
            1
        }
    }

    pub fn len(&self) -> usize {
        if self.is_circle() {
            2 * self.j_max + 1
        } else {
            self.j_max + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn level_range(&self, j: usize) -> std::ops::Range<usize> {
        if self.is_circle() {
            if j == 0 {
                0..1
            } else {
                2 * j - 1..2 * j + 1
            }
        } else {
            j..j + 1
        }
    }

    pub fn index(&self, mode: Mode) -> Option<usize> {
        if mode.j > self.j_max || mode.m >= self.level_len(mode.j) {
            return None;
        }
        Some(self.level_range(mode.j).start + mode.m)
    }

    pub fn mode(&self, index: usize) -> Mode {
        if self.is_circle() {
            if index == 0 {
                Mode { j: 0, m: 0 }
            } else {
                Mode {
                    j: index.div_ceil(2),
                    m: (index + 1) % 2,
                }
            }
        } else {
            Mode { j: index, m: 0 }
        }
    }

    pub fn level_of(&self, index: usize) -> usize {
        self.mode(index).j
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.len()).map(|i| self.mode(i))
    }

    pub fn check_same(&self, other: &Layout) -> Result<()> {
        if self != other {
            return Err(Error::LayoutMismatch {
                expected_n: self.n,
                expected_j: self.j_max,
                got_n: other.n,
                got_j: other.j_max,
            });
        }
        Ok(())
    }

    /// Basis values and `θ`-derivatives at angle `theta`.
    ///
    /// For `n = 1`, `theta` is the polar angle in the plane; for `n ≥ 2` it is
    /// the angle from the last coordinate axis, in `[0, π]`.
    pub fn basis_at(&self, theta: f64) -> BasisValues {
        if self.is_circle() {
            circle_basis(self.j_max, theta)
        } else {
            zonal_basis(self.n, self.j_max, theta)
        }
    }

    /// Polar angle of a direction in `ℝ^{n+1}` (need not be normalized).
    pub fn direction_angle(&self, direction: &[f64]) -> f64 {
        if self.is_circle() {
            direction[1].atan2(direction[0])
        } else {
            let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
            (direction[self.n] / norm).clamp(-1.0, 1.0).acos()
        }
    }
}

/// Basis function values at one point, in layout order.
#[derive(Clone, Debug)]
pub struct BasisValues {
    pub value: Vec<f64>,
    /// `∂_θ Y`.
    pub d1: Vec<f64>,
    /// `∂_θ² Y`.
    pub d2: Vec<f64>,
    /// `cot θ ∂_θ Y`, finite at the poles; zero for `n = 1`.
    pub cot_d1: Vec<f64>,
}

fn circle_basis(j_max: usize, theta: f64) -> BasisValues {
    let radius = sphere_radius(1);
    let len = 2 * j_max + 1;
    let mut out = BasisValues {
        value: vec![0.0; len],
        d1: vec![0.0; len],
        d2: vec![0.0; len],
        cot_d1: vec![0.0; len],
    };
    out.value[0] = 1.0 / (2.0 * PI * radius).sqrt();
    let scale = 1.0 / (PI * radius).sqrt();
    for j in 1..=j_max {
        let jf = j as f64;
        let (s, c) = (jf * theta).sin_cos();
        let (ic, is) = (2 * j - 1, 2 * j);
        out.value[ic] = scale * c;
        out.value[is] = scale * s;
        out.d1[ic] = -scale * jf * s;
        out.d1[is] = scale * jf * c;
        out.d2[ic] = -scale * jf * jf * c;
        out.d2[is] = -scale * jf * jf * s;
    }
    out
}

/// Gegenbauer parameter `α = (n-1)/2` of the zonal basis.
pub(crate) fn gegenbauer_alpha(n: usize) -> f64 {
    (n as f64 - 1.0) / 2.0
}

/// Off-diagonal Jacobi-matrix entry `a_j` of the orthonormal polynomials for
/// the weight `(1-x²)^{α-1/2}`: `x p_j = a_{j+1} p_{j+1} + a_j p_{j-1}`.
pub(crate) fn jacobi_offdiag(alpha: f64, j: usize) -> f64 {
    let j = j as f64;
    (j * (j + 2.0 * alpha - 1.0) / (4.0 * (j + alpha) * (j + alpha - 1.0))).sqrt()
}

/// `∫_{-1}^{1} (1-x²)^{α-1/2} dx` for `α = (n-1)/2`.
pub(crate) fn zonal_weight_mass(n: usize) -> f64 {
    PI.sqrt() * gamma_half(n) / gamma_half(n + 1)
}

/// Orthonormal polynomials `p_0..=p_len-1` and their first two derivatives at `x`.
pub(crate) fn orthonormal_polys(n: usize, len: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let alpha = gegenbauer_alpha(n);
    let mut p = vec![0.0; len];
    let mut dp = vec![0.0; len];
    let mut ddp = vec![0.0; len];
    p[0] = 1.0 / zonal_weight_mass(n).sqrt();
    for j in 0..len.saturating_sub(1) {
        let a_next = jacobi_offdiag(alpha, j + 1);
        let (prev, dprev, ddprev, a_cur) = if j == 0 {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            (p[j - 1], dp[j - 1], ddp[j - 1], jacobi_offdiag(alpha, j))
        };
        p[j + 1] = (x * p[j] - a_cur * prev) / a_next;
        dp[j + 1] = (x * dp[j] + p[j] - a_cur * dprev) / a_next;
        ddp[j + 1] = (x * ddp[j] + 2.0 * dp[j] - a_cur * ddprev) / a_next;
    }
    (p, dp, ddp)
}

fn zonal_basis(n: usize, j_max: usize, theta: f64) -> BasisValues {
    let (s, x) = theta.sin_cos();
    let (p, dp, ddp) = orthonormal_polys(n, j_max + 1, x);
    let scale = 1.0 / (sphere_radius(n).powi(n as i32) * unit_sphere_area(n - 1)).sqrt();
    BasisValues {
        value: p.iter().map(|v| scale * v).collect(),
        d1: dp.iter().map(|v| -scale * s * v).collect(),
        d2: dp
            .iter()
            .zip(&ddp)
            .map(|(d, dd)| scale * (s * s * dd - x * d))
            .collect(),
        cot_d1: dp.iter().map(|v| -scale * x * v).collect(),
    }
}

/// Coefficients of a band-limited function in the unit-`L²` eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    layout: Layout,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(layout: Layout) -> Self {
        Self {
            layout,
            coeffs: vec![0.0; layout.len()],
        }
    }

    pub fn from_coeffs(layout: Layout, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != layout.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(Self { layout, coeffs })
    }

    /// `amplitude · Y_{j,m}`.
    pub fn unit_mode(layout: Layout, mode: Mode, amplitude: f64) -> Result<Self> {
        let index = layout.index(mode).ok_or_else(|| {
            Error::InvalidArgument(format!("mode ({}, {}) outside layout", mode.j, mode.m))
        })?;
        let mut field = Self::zeros(layout);
        field.coeffs[index] = amplitude;
        Ok(field)
    }

    /// The constant function with pointwise value `value`.
    pub fn constant(layout: Layout, value: f64) -> Self {
        let mut field = Self::zeros(layout);
        field.coeffs[0] = value * sphere_area(layout.n).sqrt();
        field
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, mode: Mode) -> f64 {
        self.layout.index(mode).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Levels carrying a nonzero coefficient.
    pub fn support_levels(&self) -> Vec<usize> {
        let mut levels: Vec<usize> = (0..=self.layout.j_max)
            .filter(|&j| self.layout.level_range(j).any(|i| self.coeffs[i] != 0.0))
            .collect();
        levels.dedup();
        levels
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor · other`.
    pub fn axpy(&self, factor: f64, other: &SpectralField) -> Result<Self> {
        self.layout.check_same(&other.layout)?;
        Ok(Self {
            layout: self.layout,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Coefficient-wise maximum absolute difference.
    pub fn max_abs_diff(&self, other: &SpectralField) -> Result<f64> {
        self.layout.check_same(&other.layout)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Direct summation at polar angle `theta`.
    pub fn eval_angle(&self, theta: f64) -> f64 {
        let basis = self.layout.basis_at(theta);
        basis.value.iter().zip(&self.coeffs).map(|(y, c)| y * c).sum()
    }

    /// Value at the point of `S^n(√(2n))` in the direction of `direction`.
    pub fn eval_direction(&self, direction: &[f64]) -> f64 {
        self.eval_angle(self.layout.direction_angle(direction))
    }

    /// Multiply every coefficient on level `j` by `f(j)`.
    pub fn map_levels(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for j in 0..=self.layout.j_max {
            let factor = f(j);
            for i in self.layout.level_range(j) {
                out.coeffs[i] *= factor;
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    n: usize,
    #[serde(rename = "J_max")]
    j_max: usize,
    coefficients: Vec<(usize, usize, f64)>,
}

impl Serialize for SpectralField {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let coefficients = self
            .layout
            .modes()
            .zip(&self.coeffs)
            .map(|(mode, &c)| (mode.j, mode.m, c))
            .collect();
        FieldRepr {
            n: self.layout.n,
            j_max: self.layout.j_max,
            coefficients,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpectralField {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = FieldRepr::deserialize(deserializer)?;
        let layout = Layout::new(repr.n, repr.j_max).map_err(D::Error::custom)?;
        let mut field = SpectralField::zeros(layout);
        for (j, m, value) in repr.coefficients {
            let index = layout
                .index(Mode { j, m })
                .ok_or_else(|| D::Error::custom(format!("mode ({j}, {m}) outside layout")))?;
            field.coeffs[index] = value;
        }
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn areas() {
        assert!((unit_sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(1) - 2.0 * PI * 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn index_round_trip() {
        for n in [1, 2, 3] {
            let layout = Layout::new(n, 7).unwrap();
            for (i, mode) in layout.modes().enumerate() {
                assert_eq!(layout.index(mode), Some(i));
                assert!(layout.level_range(mode.j).contains(&i));
            }
            assert_eq!(layout.index(Mode { j: 8, m: 0 }), None);
        }
    }

    #[test]
    fn constant_field_value() {
        for n in [1, 2, 3] {
            let layout = Layout::new(n, 4).unwrap();
            let field = SpectralField::constant(layout, 0.25);
            assert!((field.eval_angle(0.3) - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn json_shape() {
        let layout = Layout::new(1, 2).unwrap();
        let field = SpectralField::unit_mode(layout, Mode { j: 2, m: 1 }, 0.5).unwrap();
        let text = serde_json::to_string(&field).unwrap();
        assert!(text.starts_with("{\"n\":1,\"J_max\":2,\"coefficients\":[[0,0,0.0]"));
        let back: SpectralField = serde_json::from_str(&text).unwrap();
        assert_eq!(back, field);
        assert!(serde_json::from_str::<SpectralField>(
            "{\"n\":1,\"J_max\":2,\"coefficients\":[[3,0,1.0]]}"
        )
        .is_err());
    }
}
