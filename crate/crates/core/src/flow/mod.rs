//! Rescaled mean curvature flow of radial graphs and its time integration.

mod geometry;
mod stepper;

pub use geometry::{geometry, nonlinear_term, rhs_rescaled, Geometry, RadialGraph};
pub use stepper::{phi1, phi2, Stepper};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{min_nodes, Layout, SpectralField, SphereTransform};
use crate::trajectory::{Trajectory, TrajectoryMeta};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "IMEX-RK2")]
    ImexRk2,
    #[serde(rename = "ETD-RK2")]
    EtdRk2,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "IMEX-RK2" | "IMEX" => Ok(Scheme::ImexRk2),
            "ETD-RK2" | "ETD" => Ok(Scheme::EtdRk2),
            _ => Err(Error::InvalidArgument(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub n: usize,
    #[serde(rename = "J_max")]
    pub j_max: usize,
    #[serde(rename = "M")]
    pub nodes: usize,
    pub dt: f64,
    pub s_end: f64,
    pub scheme: Scheme,
    /// Record every `stride`-th step.
    pub stride: usize,
}

impl FlowConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            j_max: 32,
            nodes: crate::spectral::default_nodes(n),
            dt: 1e-3,
            s_end: 5.0,
            scheme: Scheme::ImexRk2,
            stride: 1,
        }
    }

    pub fn layout(&self) -> Result<Layout> {
        Layout::new(self.n, self.j_max)
    }

    /// Number of time steps, `s_end / dt` rounded to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.s_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let layout = self.layout()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.s_end > 0.0 && self.s_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("s_end = {} must be positive", self.s_end)));
        }
        if self.steps() == 0 {
            return Err(Error::InvalidArgument("s_end shorter than one step".into()));
        }
        if ((self.steps() as f64) * self.dt - self.s_end).abs() > 1e-9 * self.s_end {
            return Err(Error::InvalidArgument(format!(
                "s_end = {} is not a multiple of dt = {}",
                self.s_end, self.dt
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be >= 1".into()));
        }
        let required = min_nodes(layout);
        if self.nodes < required {
            return Err(Error::TooFewNodes {
                nodes: self.nodes,
                required,
                j_max: self.j_max,
            });
        }
        let resolvable = if layout.is_circle() { self.nodes / 2 } else { self.nodes };
        if 3 * self.j_max > 2 * resolvable {
            return Err(Error::InvalidArgument(format!(
                "M = {} too small for 2/3 dealiasing at J_max = {}",
                self.nodes, self.j_max
            )));
        }
        if self.dt > 0.1 {
            return Err(Error::InvalidArgument(format!("dt = {} exceeds 0.1", self.dt)));
        }
        Ok(())
    }
}

/// Integrates the rescaled flow from `u0` on `[0, s_end]`.
///
/// Fails with [`Error::Escape`] once `sup |u| > √(2n)/2`, carrying the
/// samples recorded so far.
pub fn evolve(u0: &SpectralField, config: &FlowConfig) -> Result<Trajectory> {
    config.validate()?;
    let layout = config.layout()?;
    layout.check_same(&u0.layout())?;
    let graph = RadialGraph::new(SphereTransform::new(layout, config.nodes)?);
    let stepper = Stepper::new(config.scheme, layout, config.dt);
    let threshold = 0.5 * layout.radius();
    let ds = config.dt * config.stride as f64;
    let meta = TrajectoryMeta::new("evolve", Some(config.clone()));

    let escape = |s: f64, sup_norm: f64, samples: Vec<SpectralField>| -> Result<Trajectory> {
        let last_valid = Trajectory::new(layout, 0.0, ds, samples)?.with_meta(meta.clone());
        Err(Error::Escape {
            s,
            sup_norm,
            threshold,
            last_valid: Box::new(last_valid),
        })
    };

    let mut u = u0.clone();
    let mut samples = vec![u.clone()];
    let sup = graph.sup_norm(&u)?;
    if sup > threshold {
        return escape(0.0, sup, Vec::new());
    }
    for step in 1..=config.steps() {
        u = stepper.step(&graph, &u)?;
        let sup = graph.sup_norm(&u)?;
        if !(sup <= threshold) {
            return escape(step as f64 * config.dt, sup, samples);
        }
        if step % config.stride == 0 {
            samples.push(u.clone());
        }
    }
    Ok(Trajectory::new(layout, 0.0, ds, samples)?.with_meta(meta))
}

/// Radius `√(R0² − 2nτ)` of a round sphere under unrescaled MCF.
pub fn sphere_radius_oracle(n: usize, r0: f64, tau: f64) -> Result<f64> {
    let sq = r0 * r0 - 2.0 * n as f64 * tau;
    if !(sq > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau = {tau} is past the extinction time {}",
            r0 * r0 / (2.0 * n as f64)
        )));
    }
    Ok(sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(FlowConfig::new(1).validate().is_ok());
        assert!(FlowConfig::new(2).validate().is_ok());
        let mut c = FlowConfig::new(1);
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = FlowConfig::new(1);
        c.nodes = 64;
        assert!(c.validate().is_err());
        let mut c = FlowConfig::new(1);
        c.s_end = 1.0005;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let json = serde_json::to_string(&FlowConfig::new(1)).unwrap();
        assert!(json.contains("\"IMEX-RK2\""));
        let back: FlowConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, FlowConfig::new(1));
        let bad = json.replace("\"dt\"", "\"dtt\"");
        assert!(serde_json::from_str::<FlowConfig>(&bad).is_err());
    }

    #[test]
    fn radius_oracle() {
        assert!((sphere_radius_oracle(1, 2.0, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sphere_radius_oracle(3, 1.5, 0.0).unwrap(), 1.5);
        let r = sphere_radius_oracle(2, 2.0, 1.0 - 1e-12).unwrap();
        assert!(r > 0.0 && r < 1e-5);
        assert!(sphere_radius_oracle(2, 2.0, 1.0).is_err());
    }

    #[test]
    fn zero_stays_zero() {
        let mut config = FlowConfig::new(1);
        config.s_end = 0.5;
        let layout = config.layout().unwrap();
        let traj = evolve(&SpectralField::zeros(layout), &config).unwrap();
        assert_eq!(traj.len(), 501);
        assert!(traj.samples().iter().all(|u| u.is_zero()));
    }

    #[test]
    fn large_data_escapes() {
        let mut config = FlowConfig::new(1);
        config.s_end = 3.0;
        let layout = config.layout().unwrap();
        let u0 = SpectralField::constant(layout, 0.2);
        match evolve(&u0, &config) {
            Err(Error::Escape { last_valid, s, .. }) => {
                assert!(s > 1.0 && s < 3.0);
                assert!(!last_valid.is_empty());
            }
            other => panic!("expected escape, got {other:?}"),
        }
    }
}
