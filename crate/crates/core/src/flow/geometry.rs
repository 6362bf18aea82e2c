//! Radial graphs `ρ(ω)ω`, `ρ = √(2n) + u`, over the unit sphere.
//!
//! For zonal (or planar) `ρ(θ)` the principal curvatures are
//! `κ_θ = (ρ² + 2ρ_θ² − ρρ_θθ) / v³` and, with multiplicity `n − 1`,
//! `κ_φ = (ρ − ρ_θ cot θ) / (vρ)`, where `v = √(ρ² + ρ_θ²)`.

use crate::error::{Error, Result};
use crate::spectral::{GridField, Layout, SpectralField, SphereTransform};

/// Pointwise geometric quantities of a radial graph at the quadrature nodes.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub rho: GridField,
    pub v_len: GridField,
    pub mean_curvature: GridField,
}

/// Evaluates the rescaled flow on a fixed quadrature grid.
#[derive(Clone, Debug)]
pub struct RadialGraph {
    transform: SphereTransform,
}

impl RadialGraph {
    pub fn new(transform: SphereTransform) -> Self {
        Self { transform }
    }

    pub fn with_default_nodes(layout: Layout) -> Result<Self> {
        Ok(Self::new(SphereTransform::with_default_nodes(layout)?))
    }

    pub fn transform(&self) -> &SphereTransform {
        &self.transform
    }

    pub fn layout(&self) -> Layout {
        self.transform.layout()
    }

    pub fn geometry(&self, u: &SpectralField) -> Result<Geometry> {
        let pts = self.pointwise(u)?;
        let mut rho = Vec::with_capacity(pts.len());
        let mut v_len = Vec::with_capacity(pts.len());
        let mut h = Vec::with_capacity(pts.len());
        for p in &pts {
            rho.push(p.rho);
            v_len.push(p.v);
            h.push(p.h);
        }
        Ok(Geometry {
            rho: GridField { values: rho },
            v_len: GridField { values: v_len },
            mean_curvature: GridField { values: h },
        })
    }

    /// `∂_s u` for the rescaled flow: `∂_s ρ = −(v/ρ) H + ρ/2`.
    pub fn rhs(&self, u: &SpectralField) -> Result<SpectralField> {
        let values = self
            .pointwise(u)?
            .iter()
            .map(|p| -(p.v / p.rho) * p.h + 0.5 * p.rho)
            .collect();
        self.transform.analyze(&GridField { values })
    }

    /// `N(u) = ∂_s u − (Δu + u)`, evaluated without cancellation against the linear part.
    pub fn nonlinear(&self, u: &SpectralField) -> Result<SpectralField> {
        if u.is_zero() {
            return Ok(SpectralField::zeros(u.layout()));
        }
        let t = &self.transform;
        let n = t.layout().n;
        let radius = t.layout().radius();
        let r2 = radius * radius;
        let val = t.synthesize(u)?;
        let d1 = t.synthesize_d1(u)?;
        let d2 = t.synthesize_d2(u)?;
        let cot = t.synthesize_cot_d1(u)?;
        let mut values = Vec::with_capacity(val.len());
        for i in 0..val.len() {
            let (w, w1, w2) = (val.values[i], d1.values[i], d2.values[i]);
            let rho = radius + w;
            if !(rho > 0.0) {
                return Err(Error::NotStarShaped { node: i, rho });
            }
            // ρ² − R² and the slope term, expanded so that every piece is quadratic.
            let excess = w * (2.0 * radius + w);
            let q = rho * rho + w1 * w1;
            let mut value = -w * w / (2.0 * rho) - w2 * (excess + w1 * w1) / (q * r2) - w1 * w1 / (rho * q);
            if n > 1 {
                value -= (n - 1) as f64 * cot.values[i] * excess / (rho * rho * r2);
            }
            values.push(value);
        }
        t.analyze(&GridField { values })
    }

    /// `sup |u|` over the quadrature nodes.
    pub fn sup_norm(&self, u: &SpectralField) -> Result<f64> {
        Ok(self.transform.synthesize(u)?.sup_norm())
    }

    fn pointwise(&self, u: &SpectralField) -> Result<Vec<Point>> {
        let t = &self.transform;
        let n = t.layout().n;
        let radius = t.layout().radius();
        let val = t.synthesize(u)?;
        let d1 = t.synthesize_d1(u)?;
        let d2 = t.synthesize_d2(u)?;
        let cot = t.synthesize_cot_d1(u)?;
        let mut out = Vec::with_capacity(val.len());
        for i in 0..val.len() {
            let rho = radius + val.values[i];
            if !(rho > 0.0) {
                return Err(Error::NotStarShaped { node: i, rho });
            }
            let (r1, r2) = (d1.values[i], d2.values[i]);
            let q = rho * rho + r1 * r1;
            let v = q.sqrt();
            let mut h = (rho * rho + 2.0 * r1 * r1 - rho * r2) / (v * q);
            if n > 1 {
                h += (n - 1) as f64 * (rho - cot.values[i]) / (v * rho);
            }
            out.push(Point { rho, v, h });
        }
        Ok(out)
    }
}

struct Point {
    rho: f64,
    v: f64,
    h: f64,
}

/// [`RadialGraph::geometry`] on the default grid for the field's layout.
pub fn geometry(u: &SpectralField) -> Result<Geometry> {
    RadialGraph::with_default_nodes(u.layout())?.geometry(u)
}

/// [`RadialGraph::rhs`] on the default grid for the field's layout.
pub fn rhs_rescaled(u: &SpectralField) -> Result<SpectralField> {
    RadialGraph::with_default_nodes(u.layout())?.rhs(u)
}

/// [`RadialGraph::nonlinear`] on the default grid for the field's layout.
pub fn nonlinear_term(u: &SpectralField) -> Result<SpectralField> {
    RadialGraph::with_default_nodes(u.layout())?.nonlinear(u)
}
