use serde::Serialize;

use super::rates::{fit_rate, norm_history, RateFit, Selector, Window, NOISE_FLOOR};
use crate::error::{Error, Result};
use crate::flow::RadialGraph;
use crate::manifold::{forcing, level_coefficient, LevelCoefficient};
use crate::spectral::{
    eigenvalue_f64, higher_order_levels, operator_norm, project, sobolev_norm, PathNormParams,
    Projection, SpectralField,
};
use crate::trajectory::Trajectory;

/// `u(s) ≈ Σ_j e^{−λ_j s} P_j` over the levels `k ≤ j` with `λ_j < 2λ_k`.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticFit {
    pub k: usize,
    pub levels: Vec<usize>,
    pub coefficients: Vec<LevelCoefficient>,
    /// Fit of `‖u − Σ e^{−λ_j s} P_j‖_{H^r}`; `None` when it never rises
    /// above the noise floor.
    pub remainder: Option<RateFit>,
    /// `C` in `‖remainder‖ ≈ C e^{−rate·s}`.
    pub remainder_constant: Option<f64>,
    /// Largest remainder norm over the trajectory.
    pub remainder_peak: f64,
}

fn check_decaying(traj: &Trajectory, r: i32) -> Result<()> {
    let first = sobolev_norm(traj.sample(0), r)?;
    let last = sobolev_norm(traj.last().ok_or(Error::EmptyTrajectory)?, r)?;
    if last > first {
        return Err(Error::NotOnManifold(format!(
            "norm grows from {first:e} to {last:e}"
        )));
    }
    Ok(())
}

/// Extracts `P_j` for every level in `higher_order_levels(n, k)` and fits the
/// decay of what is left.
pub fn mode_asymptotics(
    traj: &Trajectory,
    k: usize,
    graph: &RadialGraph,
    r: i32,
    window: Window,
) -> Result<AsymptoticFit> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    check_decaying(traj, r)?;
    let n = traj.layout().n;
    let levels = higher_order_levels(n, k)?;
    let f = forcing(traj, graph)?;
    let coefficients = levels
        .iter()
        .map(|&j| level_coefficient(traj, &f, j, 0))
        .collect::<Result<Vec<_>>>()?;
    let remainder = traj.map(|s, u| {
        coefficients.iter().fold(u.clone(), |acc, c| {
            acc.axpy(-(-eigenvalue_f64(n, c.level) * s).exp(), &c.value)
                .expect("same layout")
        })
    });
    let norms = norm_history(&remainder, Selector::Full, r)?;
    let remainder_peak = norms.iter().fold(0.0f64, |m, v| m.max(*v));
    let fit = if remainder_peak > NOISE_FLOOR {
        Some(fit_rate("remainder", &traj.times(), &norms, window)?)
    } else {
        None
    };
    Ok(AsymptoticFit {
        k,
        levels,
        coefficients,
        remainder_constant: fit.as_ref().map(|f| f.intercept.exp()),
        remainder: fit,
        remainder_peak,
    })
}

/// One rate check of a projection bound.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub quantity: String,
    pub expected: f64,
    pub fit: Option<RateFit>,
    pub pass: bool,
    pub note: String,
}

impl BoundCheck {
    fn new(quantity: &str, expected: f64, fit: Result<RateFit>, slack: f64) -> Self {
        match fit {
            Ok(fit) => Self {
                quantity: quantity.into(),
                expected,
                pass: fit.rate >= expected - slack,
                note: String::new(),
                fit: Some(fit),
            },
            Err(e) => Self {
                quantity: quantity.into(),
                expected,
                fit: None,
                pass: false,
                note: e.to_string(),
            },
        }
    }
}

/// Rates of `Π_{k+1}u`, `(1−Π_k)u` and `e^{λ_k s}π_k u − P`.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionBounds {
    pub k: usize,
    pub sigma: f64,
    pub leading: SpectralField,
    pub checks: Vec<BoundCheck>,
}

impl ProjectionBounds {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, quantity: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.quantity == quantity)
    }
}

/// Window used for the projection-bound fits: from the peak down eight decades.
pub const BOUND_WINDOW: Window = Window::Decay { ratio: 1e-8 };

/// Checks the three decay bounds against their exponents with slack `0.1`.
/// Quantities without enough dynamic range are reported as failed with a note.
pub fn projection_bounds(
    traj: &Trajectory,
    k: usize,
    params: PathNormParams,
    graph: &RadialGraph,
) -> Result<ProjectionBounds> {
    let n = traj.layout().n;
    let (lk, lk1) = (eigenvalue_f64(n, k), eigenvalue_f64(n, k + 1));
    let r = params.r;
    let f = forcing(traj, graph)?;
    let leading = level_coefficient(traj, &f, k, 0)?.value;
    let times = traj.times();
    let slack = 0.1;

    let fit = |label: &str, norms: Result<Vec<f64>>| -> Result<RateFit> {
        fit_rate(label, &times, &norms?, BOUND_WINDOW)
    };
    let approach = traj.map(|s, u| {
        project(u, Projection::Level(k))
            .scaled((lk * s).exp())
            .sub(&leading)
            .expect("same layout")
    });
    let checks = vec![
        BoundCheck::new(
            "Pi_{k+1} u",
            lk1.min(2.0 * params.sigma),
            fit("Pi_{k+1} u", norm_history(traj, Selector::Tail(k + 1), r)),
            slack,
        ),
        BoundCheck::new(
            "(1-Pi_k) u",
            2.0 * lk,
            fit("(1-Pi_k) u", norm_history(traj, Selector::Head(k), r)),
            slack,
        ),
        BoundCheck::new(
            "e^{lambda_k s} pi_k u - P",
            lk,
            fit("e^{lambda_k s} pi_k u - P", norm_history(&approach, Selector::Full, r)),
            slack,
        ),
    ];
    Ok(ProjectionBounds {
        k,
        sigma: params.sigma,
        leading,
        checks,
    })
}

/// Discrete form of `e^{2σs}‖w(s)‖² ≤ ‖w(0)‖² + λ_k/(2(λ_k−σ)) ∫_0^s e^{2στ}‖f‖²_{H^{r−1}}`
/// for `w = Π_k u` and `f = Π_k N(u)`, norms taken as `⟨(−L)^ℓ ·,·⟩^{1/2}`.
#[derive(Clone, Debug, Serialize)]
pub struct SupBoundCheck {
    pub constant: f64,
    /// Largest `lhs / rhs` over the samples.
    pub worst_ratio: f64,
    pub worst_s: f64,
    pub samples: usize,
}

pub fn sup_bound_check(
    traj: &Trajectory,
    k: usize,
    params: PathNormParams,
    graph: &RadialGraph,
) -> Result<SupBoundCheck> {
    let n = traj.layout().n;
    params.validate(n, k)?;
    let lk = eigenvalue_f64(n, k);
    let sigma = params.sigma;
    let constant = lk / (2.0 * (lk - sigma));
    let f = forcing(traj, graph)?;
    let (r, h) = (params.r, traj.ds());
    let w0 = operator_norm(&project(traj.sample(0), Projection::Tail(k)), r)?.powi(2);
    let mut integral = 0.0;
    let mut prev: Option<f64> = None;
    let mut worst = (0.0f64, traj.s0());
    for i in 0..traj.len() {
        let s = traj.time(i) - traj.s0();
        let fi = operator_norm(&project(f.sample(i), Projection::Tail(k)), r - 1)?.powi(2)
            * (2.0 * sigma * s).exp();
        if let Some(p) = prev {
            integral += 0.5 * h * (p + fi);
        }
        prev = Some(fi);
        let lhs = (2.0 * sigma * s).exp()
            * operator_norm(&project(traj.sample(i), Projection::Tail(k)), r)?.powi(2);
        let rhs = w0 + constant * integral;
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        if ratio > worst.0 {
            worst = (ratio, traj.time(i));
        }
    }
    Ok(SupBoundCheck {
        constant,
        worst_ratio: worst.0,
        worst_s: worst.1,
        samples: traj.len(),
    })
}
