//! Quadrature grids and the synthesis/analysis pair.
//!
//! `n = 1` uses `M` equispaced angles (trapezoid rule, exact for
//! trigonometric degree `< M`). `n ≥ 2` uses `M` Gauss nodes in `x = cos θ`
//! for the weight `(1-x²)^{(n-2)/2}` (Gauss–Legendre when `n = 2`), exact for
//! polynomial degree `≤ 2M-1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use super::field::{
    gegenbauer_alpha, jacobi_offdiag, orthonormal_polys, sphere_radius, unit_sphere_area, Layout,
    SpectralField,
};
use crate::error::{Error, Result};

/// Point values at the quadrature nodes of a [`SphereTransform`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            values: vec![0.0; nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Minimum node count for which `analyze ∘ synthesize` is exact.
pub fn min_nodes(layout: Layout) -> usize {
    if layout.is_circle() {
        2 * layout.j_max + 2
    } else {
        layout.j_max + 1
    }
}

/// Default node count for a layout.
pub fn default_nodes(n: usize) -> usize {
    if n == 1 {
        128
    } else {
        64
    }
}

/// Nodes and weights of the `M`-point Gauss rule for `(1-x²)^{α-1/2}` on `[-1, 1]`,
/// ordered by increasing polar angle (decreasing `x`).
pub fn gauss_nodes(n: usize, count: usize) -> (Vec<f64>, Vec<f64>) {
    let alpha = gegenbauer_alpha(n);
    let mut jacobi = DMatrix::<f64>::zeros(count, count);
    for i in 1..count {
        let a = jacobi_offdiag(alpha, i);
        jacobi[(i, i - 1)] = a;
        jacobi[(i - 1, i)] = a;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut weights = Vec::with_capacity(count);
    for x in nodes.iter_mut() {
        // Newton polish on p_M.
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_polys(n, count + 1, *x);
            let step = p[count] / dp[count];
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (p, _, _) = orthonormal_polys(n, count, *x);
        weights.push(1.0 / p.iter().map(|v| v * v).sum::<f64>());
    }
    (nodes, weights)
}

/// Precomputed basis tables on a quadrature grid.
#[derive(Clone, Debug)]
pub struct SphereTransform {
    layout: Layout,
    thetas: Vec<f64>,
    /// Surface-measure quadrature weights on `S^n(√(2n))`.
    weights: Vec<f64>,
    value: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    cot_d1: Vec<f64>,
}

impl SphereTransform {
    pub fn new(layout: Layout, nodes: usize) -> Result<Self> {
        let required = min_nodes(layout);
        if nodes < required {
            return Err(Error::TooFewNodes {
                nodes,
                required,
                j_max: layout.j_max,
            });
        }
        let (thetas, weights) = if layout.is_circle() {
            let w = 2.0 * PI * sphere_radius(1) / nodes as f64;
            (
                (0..nodes).map(|i| 2.0 * PI * i as f64 / nodes as f64).collect(),
                vec![w; nodes],
            )
        } else {
            let (xs, ws) = gauss_nodes(layout.n, nodes);
            let scale = sphere_radius(layout.n).powi(layout.n as i32) * unit_sphere_area(layout.n - 1);
            (
                xs.iter().map(|x| x.clamp(-1.0, 1.0).acos()).collect(),
                ws.iter().map(|w| w * scale).collect(),
            )
        };
        let len = layout.len();
        let mut table = Self {
            layout,
            thetas,
            weights,
            value: Vec::with_capacity(nodes * len),
            d1: Vec::with_capacity(nodes * len),
            d2: Vec::with_capacity(nodes * len),
            cot_d1: Vec::with_capacity(nodes * len),
        };
        for i in 0..nodes {
            let basis = layout.basis_at(table.thetas[i]);
            table.value.extend_from_slice(&basis.value);
            table.d1.extend_from_slice(&basis.d1);
            table.d2.extend_from_slice(&basis.d2);
            table.cot_d1.extend_from_slice(&basis.cot_d1);
        }
        Ok(table)
    }

    /// Transform with the default node count for `layout.n`, enlarged if needed.
    pub fn with_default_nodes(layout: Layout) -> Result<Self> {
        Self::new(layout, default_nodes(layout.n).max(min_nodes(layout)))
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn node_count(&self) -> usize {
        self.thetas.len()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest level the grid resolves (`M/2` on the circle, `M` for Gauss nodes).
    pub fn resolvable_level(&self) -> usize {
        if self.layout.is_circle() {
            self.node_count() / 2
        } else {
            self.node_count()
        }
    }

    /// Whether `J_max` respects the 2/3 truncation rule for this grid.
    pub fn is_dealiased(&self) -> bool {
        3 * self.layout.j_max <= 2 * self.resolvable_level()
    }

    fn apply(&self, table: &[f64], field: &SpectralField) -> Result<GridField> {
        self.layout.check_same(&field.layout())?;
        let len = self.layout.len();
        let coeffs = field.coeffs();
        let values = table
            .chunks_exact(len)
            .map(|row| row.iter().zip(coeffs).map(|(y, c)| y * c).sum())
            .collect();
        Ok(GridField { values })
    }

    /// Point values `Σ c_{j,m} Y_{j,m}` at the nodes.
    pub fn synthesize(&self, field: &SpectralField) -> Result<GridField> {
        self.apply(&self.value, field)
    }

    /// `∂_θ` of the field at the nodes.
    pub fn synthesize_d1(&self, field: &SpectralField) -> Result<GridField> {
        self.apply(&self.d1, field)
    }

    /// `∂_θ²` of the field at the nodes.
    pub fn synthesize_d2(&self, field: &SpectralField) -> Result<GridField> {
        self.apply(&self.d2, field)
    }

    /// `cot θ ∂_θ` of the field at the nodes (zero on the circle).
    pub fn synthesize_cot_d1(&self, field: &SpectralField) -> Result<GridField> {
        self.apply(&self.cot_d1, field)
    }

    /// Quadrature projection onto the basis, truncated at `J_max`.
    pub fn analyze(&self, grid: &GridField) -> Result<SpectralField> {
        if grid.len() != self.node_count() {
            return Err(Error::NodeCountMismatch {
                expected: self.node_count(),
                got: grid.len(),
            });
        }
        let len = self.layout.len();
        let mut coeffs = vec![0.0; len];
        for ((row, w), f) in self
            .value
            .chunks_exact(len)
            .zip(&self.weights)
            .zip(&grid.values)
        {
            let wf = w * f;
            for (c, y) in coeffs.iter_mut().zip(row) {
                *c += wf * y;
            }
        }
        SpectralField::from_coeffs(self.layout, coeffs)
    }

    /// Quadrature of a grid function over `S^n(√(2n))`.
    pub fn integrate(&self, grid: &GridField) -> Result<f64> {
        if grid.len() != self.node_count() {
            return Err(Error::NodeCountMismatch {
                expected: self.node_count(),
                got: grid.len(),
            });
        }
        Ok(self.weights.iter().zip(&grid.values).map(|(w, f)| w * f).sum())
    }
}
