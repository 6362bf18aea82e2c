use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::spectrum::{eigenvalue_f64, laplace_eigenvalue};
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// `H^r` weight of level `j`: `1 + j(j+n-1)/(2n)`.
pub fn sobolev_weight(n: usize, j: usize) -> f64 {
    1.0 + laplace_eigenvalue(n, j)
}

/// `(Σ w_j^r |c_{j,m}|²)^{1/2}`.
pub fn sobolev_norm(field: &SpectralField, r: i32) -> Result<f64> {
    if r < 0 {
        return Err(Error::InvalidArgument(format!("Sobolev index {r} < 0")));
    }
    Ok(weighted_norm(field, |j| sobolev_weight(field.layout().n, j).powi(r)))
}

/// `⟨(-L)^ℓ v, v⟩^{1/2}`, defined only for fields supported where `λ_j > 0`.
pub fn operator_norm(field: &SpectralField, ell: i32) -> Result<f64> {
    let layout = field.layout();
    for j in field.support_levels() {
        if eigenvalue_f64(layout.n, j) <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "operator norm undefined: field has a component on level {j} with λ_j <= 0"
            )));
        }
    }
    Ok(weighted_norm(field, |j| {
        let lambda = eigenvalue_f64(layout.n, j);
        if lambda > 0.0 {
            lambda.powi(ell)
        } else {
            0.0
        }
    }))
}

fn weighted_norm(field: &SpectralField, weight: impl Fn(usize) -> f64) -> f64 {
    let layout = field.layout();
    let coeffs = field.coeffs();
    (0..=layout.j_max)
        .map(|j| {
            let w = weight(j);
            layout
                .level_range(j)
                .map(|i| w * coeffs[i] * coeffs[i])
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// Parameters of the path norm `‖·‖_{r,σ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathNormParams {
    pub r: i32,
    pub sigma: f64,
}

impl PathNormParams {
    /// Smallest admissible `r` and `σ = (max(λ_{k-1}, 0) + λ_k)/2`.
    pub fn default_for(n: usize, k: usize) -> Self {
        let lower = eigenvalue_f64(n, k.saturating_sub(1)).max(0.0);
        Self {
            r: (n / 2 + 2) as i32,
            sigma: 0.5 * (lower + eigenvalue_f64(n, k)),
        }
    }

    /// Checks `r > n/2 + 1` and `λ_{k-1} < σ < λ_k`.
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        if 2 * self.r <= n as i32 + 2 {
            return Err(Error::InvalidArgument(format!(
                "r = {} must exceed n/2 + 1 = {}",
                self.r,
                n as f64 / 2.0 + 1.0
            )));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        let (lo, hi) = (eigenvalue_f64(n, k - 1), eigenvalue_f64(n, k));
        if !(self.sigma > lo && self.sigma < hi) {
            return Err(Error::InvalidArgument(format!(
                "sigma = {} outside ({lo}, {hi})",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// `(∫ ‖v‖²_{H^{r+1}} ds)^{1/2} + max_i e^{σ s_i} ‖v(s_i)‖_{H^r}`, trapezoid in `s`.
pub fn path_norm(traj: &Trajectory, params: PathNormParams) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut energy = 0.0;
    let mut sup: f64 = 0.0;
    let mut prev: Option<f64> = None;
    for (i, field) in traj.samples().iter().enumerate() {
        let high = sobolev_norm(field, params.r + 1)?.powi(2);
        if let Some(p) = prev {
            energy += 0.5 * traj.ds() * (p + high);
        }
        prev = Some(high);
        sup = sup.max((params.sigma * traj.time(i)).exp() * sobolev_norm(field, params.r)?);
    }
    Ok(energy.sqrt() + sup)
}
