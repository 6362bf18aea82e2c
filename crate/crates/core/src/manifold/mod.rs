//! The Duhamel operator `T`, its fixed points (solutions decaying like
//! `e^{-λ_k s}`), their leading eigenfunction, and prescription of that limit.

mod duhamel;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::RadialGraph;
use crate::spectral::{
    default_nodes, eigenvalue_f64, linear_propagator, path_norm, project, sobolev_norm, Layout,
    PathNormParams, Projection, SpectralField, SphereTransform,
};
use crate::trajectory::{Trajectory, TrajectoryMeta};

pub(crate) use duhamel::local_rate;

/// Relative size below which a forcing value at the horizon is treated as zero.
const NEGLIGIBLE: f64 = 1e-13;

/// Fixed-point problem on the `k`-stable manifold over `F_k`.
#[derive(Clone, Debug)]
pub struct ManifoldProblem {
    pub k: usize,
    pub u0: SpectralField,
    pub params: PathNormParams,
    pub s_max: f64,
    /// Number of panels on `[0, s_max]`.
    pub steps: usize,
    /// Picard tolerance in `‖·‖_{r,σ}`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative tolerance on `‖P(a) − b‖ / ‖b‖` for [`prescribe`].
    pub prescribe_tol: f64,
    graph: RadialGraph,
}

#[derive(Serialize)]
struct ProblemSettings<'a> {
    k: usize,
    u0: &'a SpectralField,
    params: PathNormParams,
    s_max: f64,
    steps: usize,
    tol: f64,
    nodes: usize,
}

impl ManifoldProblem {
    /// Defaults: `S_max = 12/λ_k`, `Δs = 0.02/λ_k`, `tol = 1e-10`, default
    /// path-norm parameters and quadrature grid.
    pub fn new(k: usize, u0: SpectralField) -> Result<Self> {
        let layout = u0.layout();
        if k < 2 {
            return Err(Error::InvalidArgument(format!("k = {k} must be >= 2")));
        }
        if k > layout.j_max {
            return Err(Error::InvalidArgument(format!("k = {k} exceeds J_max = {}", layout.j_max)));
        }
        let lambda = eigenvalue_f64(layout.n, k);
        let problem = Self {
            k,
            params: PathNormParams::default_for(layout.n, k),
            s_max: 12.0 / lambda,
            steps: 600,
            tol: 1e-10,
            max_iter: 50,
            prescribe_tol: 1e-9,
            graph: RadialGraph::new(SphereTransform::new(
                layout,
                default_nodes(layout.n).max(crate::spectral::min_nodes(layout)),
            )?),
            u0,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_nodes(mut self, nodes: usize) -> Result<Self> {
        self.graph = RadialGraph::new(SphereTransform::new(self.layout(), nodes)?);
        Ok(self)
    }

    pub fn with_horizon(mut self, s_max: f64, steps: usize) -> Result<Self> {
        self.s_max = s_max;
        self.steps = steps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_params(mut self, params: PathNormParams) -> Result<Self> {
        self.params = params;
        self.validate()?;
        Ok(self)
    }

    /// Same settings, different graph parameter.
    pub fn with_u0(&self, u0: SpectralField) -> Result<Self> {
        let mut out = self.clone();
        out.u0 = u0;
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let layout = self.layout();
        self.params.validate(layout.n, self.k)?;
        if !project(&self.u0, Projection::Head(self.k)).is_zero() {
            return Err(Error::InvalidArgument(format!(
                "u0 has components below level {}",
                self.k
            )));
        }
        if !(self.s_max > 0.0) || self.steps == 0 {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        if !(self.tol > 0.0) || !(self.prescribe_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        self.graph.layout().check_same(&layout)
    }

    pub fn layout(&self) -> Layout {
        self.u0.layout()
    }

    pub fn ds(&self) -> f64 {
        self.s_max / self.steps as f64
    }

    pub fn graph(&self) -> &RadialGraph {
        &self.graph
    }

    pub fn lambda_k(&self) -> f64 {
        eigenvalue_f64(self.layout().n, self.k)
    }

    fn meta(&self) -> TrajectoryMeta {
        TrajectoryMeta::hashed(
            "stable-manifold",
            &ProblemSettings {
                k: self.k,
                u0: &self.u0,
                params: self.params,
                s_max: self.s_max,
                steps: self.steps,
                tol: self.tol,
                nodes: self.graph.transform().node_count(),
            },
        )
    }

    /// `e^{Ls} u0` on the problem grid.
    pub fn linear_trajectory(&self) -> Result<Trajectory> {
        Trajectory::from_fn(self.layout(), 0.0, self.ds(), self.steps + 1, |s| {
            linear_propagator(&self.u0, s)
        })
        .map(|t| t.with_meta(self.meta()))
    }

    fn check_grid(&self, traj: &Trajectory) -> Result<()> {
        self.layout().check_same(&traj.layout())?;
        let ok = traj.len() == self.steps + 1
            && traj.s0().abs() < 1e-12
            && (traj.ds() - self.ds()).abs() <= 1e-12 * self.ds();
        if !ok {
            return Err(Error::InvalidArgument(
                "trajectory is not sampled on the problem grid".into(),
            ));
        }
        Ok(())
    }
}

/// `N(v(s_i))` at every sample, evaluated in parallel.
pub fn forcing(traj: &Trajectory, graph: &RadialGraph) -> Result<Trajectory> {
    let samples = traj
        .samples()
        .par_iter()
        .map(|u| graph.nonlinear(u))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(traj.layout(), traj.s0(), traj.ds(), samples)
}

/// Output of [`apply_t`].
#[derive(Clone, Debug)]
pub struct Duhamel {
    pub trajectory: Trajectory,
    /// Largest horizon correction applied to a mode below `k`.
    pub tail_bound: f64,
}

/// Decay rate of a sampled coefficient at the end of its record.
fn tail_rate(values: &[f64], h: f64) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    if let Some(rate) = local_rate(values[n - 2], values[n - 1], h) {
        return Some(rate);
    }
    // Least-squares fit of ln|F| over the last quarter of the record.
    let start = n - (n / 4).max(2);
    let pts: Vec<(f64, f64)> = (start..n)
        .filter(|&i| values[i] != 0.0)
        .map(|i| (i as f64 * h, values[i].abs().ln()))
        .collect();
    let fit = crate::analysis::linear_fit(&pts)?;
    Some(-fit.slope)
}

fn column(traj: &Trajectory, index: usize) -> Vec<f64> {
    traj.samples().iter().map(|u| u.coeffs()[index]).collect()
}

fn scale_of(traj: &Trajectory) -> f64 {
    traj.samples()
        .iter()
        .flat_map(|u| u.coeffs().iter())
        .fold(0.0, |m, c| m.max(c.abs()))
}

/// The Duhamel operator: for `j ≥ k`,
/// `T_j(s) = e^{-λ_j s} u0_j + ∫_0^s e^{-λ_j(s-τ)} F_j(τ) dτ`, and for `j < k`,
/// `T_j(s) = −∫_s^∞ e^{-λ_j(s-τ)} F_j(τ) dτ`, with `F = N(v)` unless
/// `forcing_override` is given. The integral beyond `S_max` uses the decay
/// rate of `F_j` over the last panel.
pub fn apply_t(
    v: &Trajectory,
    u0: &SpectralField,
    problem: &ManifoldProblem,
    forcing_override: Option<&Trajectory>,
) -> Result<Duhamel> {
    problem.check_grid(v)?;
    problem.layout().check_same(&u0.layout())?;
    if !project(u0, Projection::Head(problem.k)).is_zero() {
        return Err(Error::InvalidArgument("u0 must lie in F_k".into()));
    }
    let computed;
    let f = match forcing_override {
        Some(f) => {
            problem.check_grid(f)?;
            f
        }
        None => {
            computed = forcing(v, problem.graph())?;
            &computed
        }
    };
    let layout = problem.layout();
    let h = problem.ds();
    let floor = NEGLIGIBLE * scale_of(f);

    let columns = (0..layout.len())
        .into_par_iter()
        .map(|i| {
            let j = layout.level_of(i);
            let lambda = eigenvalue_f64(layout.n, j);
            let fj = column(f, i);
            if j >= problem.k {
                return Ok((forward_or_zero(lambda, h, u0.coeffs()[i], &fj), 0.0));
            }
            let last = *fj.last().unwrap_or(&0.0);
            let t_end = if last.abs() <= floor {
                0.0
            } else {
                match tail_rate(&fj, h) {
                    Some(mu) if mu > lambda => -last / (mu - lambda),
                    rate => {
                        return Err(Error::HorizonTooShort {
                            level: j,
                            rate: rate.unwrap_or(f64::NAN),
                            needed: lambda,
                        })
                    }
                }
            };
            Ok((duhamel::backward(lambda, h, t_end, &fj), t_end.abs()))
        })
        .collect::<Result<Vec<_>>>()?;

    let tail_bound = columns.iter().fold(0.0f64, |m, c| m.max(c.1));
    let samples = (0..=problem.steps)
        .map(|s| {
            let coeffs = columns.iter().map(|c| c.0[s]).collect();
            SpectralField::from_coeffs(layout, coeffs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Duhamel {
        trajectory: Trajectory::new(layout, 0.0, h, samples)?.with_meta(problem.meta()),
        tail_bound,
    })
}

fn forward_or_zero(lambda: f64, h: f64, t0: f64, forcing: &[f64]) -> Vec<f64> {
    if t0 == 0.0 && forcing.iter().all(|&x| x == 0.0) {
        vec![0.0; forcing.len()]
    } else {
        duhamel::forward(lambda, h, t0, forcing)
    }
}

/// Convergence history of the Picard iteration `v^{m+1} = T(v^m)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub iterations: usize,
    /// `‖v^{m+1} − v^m‖_{r,σ}` per iteration.
    pub differences: Vec<f64>,
    /// Successive quotients of `differences`.
    pub ratios: Vec<f64>,
    /// Largest `‖T(v)−T(w)‖ / ((‖v‖+‖w‖) ‖v−w‖)` over consecutive iterates.
    pub contraction_constant: Option<f64>,
    pub converged: bool,
    pub tol: f64,
    pub tail_bound: f64,
    pub path_norm: f64,
    pub samples: usize,
    pub s_max: f64,
    pub config_hash: String,
}

/// Picard iteration from `v⁰(s) = e^{Ls} u0`.
pub fn solve_stable(problem: &ManifoldProblem) -> Result<(Trajectory, FixedPointReport)> {
    problem.validate()?;
    let params = problem.params;
    let mut v = problem.linear_trajectory()?;
    let mut v_norm = path_norm(&v, params)?;
    let mut prev_norm: Option<f64> = None;
    let mut differences = Vec::new();
    let mut ratios = Vec::new();
    let mut constant: Option<f64> = None;
    let mut tail_bound = 0.0;
    let mut growing = 0;
    let mut converged = false;

    for _ in 0..problem.max_iter {
        let next = apply_t(&v, &problem.u0, problem, None)?;
        tail_bound = next.tail_bound;
        let diff = path_norm(&next.trajectory.sub(&v)?, params)?;
        if let (Some(&last), Some(pn)) = (differences.last(), prev_norm) {
            let last: f64 = last;
            if last > 0.0 {
                let ratio = diff / last;
                ratios.push(ratio);
                let c = diff / ((v_norm + pn) * last);
                constant = Some(constant.map_or(c, |m: f64| m.max(c)));
                growing = if ratio >= 1.0 { growing + 1 } else { 0 };
            }
        }
        differences.push(diff);
        prev_norm = Some(v_norm);
        v = next.trajectory;
        v_norm = path_norm(&v, params)?;
        if diff < problem.tol {
            converged = true;
            break;
        }
        if growing >= 3 {
            return Err(Error::NonContraction {
                ratio: *ratios.last().unwrap_or(&f64::NAN),
                differences,
            });
        }
    }
    let report = FixedPointReport {
        iterations: differences.len(),
        differences,
        ratios,
        contraction_constant: constant,
        converged,
        tol: problem.tol,
        tail_bound,
        path_norm: v_norm,
        samples: v.len(),
        s_max: problem.s_max,
        config_hash: v.meta().config_hash.clone(),
    };
    if !converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            tol: problem.tol,
            last: *report.differences.last().unwrap_or(&f64::NAN),
        });
    }
    Ok((v, report))
}

/// `‖T(v)−T(w)‖_{r,σ} / ((‖v‖_{r,σ}+‖w‖_{r,σ}) ‖v−w‖_{r,σ})` for a common `u0`.
pub fn contraction_quotient(problem: &ManifoldProblem, v: &Trajectory, w: &Trajectory) -> Result<f64> {
    let p = problem.params;
    let tv = apply_t(v, &problem.u0, problem, None)?.trajectory;
    let tw = apply_t(w, &problem.u0, problem, None)?.trajectory;
    let num = path_norm(&tv.sub(&tw)?, p)?;
    let den = (path_norm(v, p)? + path_norm(w, p)?) * path_norm(&v.sub(w)?, p)?;
    Ok(num / den)
}

/// Limit coefficient on one level, `lim e^{λ_j s} π_j u(s)`.
#[derive(Clone, Debug, Serialize)]
pub struct LevelCoefficient {
    pub level: usize,
    pub value: SpectralField,
    /// Contribution of the integral beyond the last sample.
    pub tail: f64,
}

/// `e^{λ_j s_a} π_j u(s_a) + ∫_{s_a}^{S} e^{λ_j τ} π_j F(τ) dτ + tail`, with
/// `s_a` the sample at index `start`.
pub fn level_coefficient(
    traj: &Trajectory,
    forcing: &Trajectory,
    j: usize,
    start: usize,
) -> Result<LevelCoefficient> {
    traj.check_same_grid(forcing)?;
    if start + 1 >= traj.len() {
        return Err(Error::InsufficientData(traj.len().saturating_sub(start)));
    }
    let layout = traj.layout();
    if j > layout.j_max {
        return Err(Error::InvalidArgument(format!("level {j} exceeds J_max")));
    }
    let lambda = eigenvalue_f64(layout.n, j);
    let h = traj.ds();
    let (s_a, s_end) = (traj.time(start), traj.end_time());
    let floor = NEGLIGIBLE * scale_of(forcing);
    let mut value = SpectralField::zeros(layout);
    let mut tail_total = 0.0f64;
    for i in layout.level_range(j) {
        let fj: Vec<f64> = column(forcing, i)[start..].to_vec();
        let last = *fj.last().unwrap();
        let tail = if last.abs() <= floor {
            0.0
        } else {
            match tail_rate(&fj, h) {
                Some(mu) if mu > lambda => (lambda * s_end).exp() * last / (mu - lambda),
                rate => {
                    return Err(Error::Divergent {
                        level: j,
                        rate: rate.unwrap_or(f64::NAN),
                        lambda,
                    })
                }
            }
        };
        let body = (lambda * s_a).exp()
            * (traj.sample(start).coeffs()[i] + duhamel::weighted_integral(lambda, h, &fj));
        value.coeffs_mut()[i] = body + tail;
        tail_total = tail_total.max(tail.abs());
    }
    Ok(LevelCoefficient {
        level: j,
        value,
        tail: tail_total,
    })
}

/// `P = lim e^{λ_k s} π_k u(s)` from the whole trajectory, with `N` evaluated
/// on `graph`.
pub fn leading_coefficient_on(
    traj: &Trajectory,
    k: usize,
    graph: &RadialGraph,
) -> Result<LevelCoefficient> {
    let f = forcing(traj, graph)?;
    level_coefficient(traj, &f, k, 0)
}

/// [`leading_coefficient_on`] with the default quadrature grid.
pub fn leading_coefficient(traj: &Trajectory, k: usize) -> Result<SpectralField> {
    let graph = RadialGraph::with_default_nodes(traj.layout())?;
    Ok(leading_coefficient_on(traj, k, &graph)?.value)
}

/// Outcome of [`calibrate_ball`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallCalibration {
    /// Factor applied to `u0` (a power of 1/2).
    pub scale: f64,
    pub halvings: usize,
    /// `‖scale · u0‖_{H^r}`.
    pub radius: f64,
    /// Second-to-first Picard difference quotient at the accepted amplitude.
    pub ratio: f64,
}

fn picard_ratio(problem: &ManifoldProblem) -> Result<f64> {
    let p = problem.params;
    let v0 = problem.linear_trajectory()?;
    let v1 = apply_t(&v0, &problem.u0, problem, None)?.trajectory;
    let d1 = path_norm(&v1.sub(&v0)?, p)?;
    if d1 == 0.0 {
        return Ok(0.0);
    }
    let v2 = apply_t(&v1, &problem.u0, problem, None)?.trajectory;
    Ok(path_norm(&v2.sub(&v1)?, p)? / d1)
}

/// Halves `u0` until the measured Picard contraction ratio drops below 1/2.
pub fn calibrate_ball(problem: &ManifoldProblem) -> Result<BallCalibration> {
    let mut scale = 1.0;
    for halvings in 0..40 {
        let trial = problem.with_u0(problem.u0.scaled(scale))?;
        let ratio = match picard_ratio(&trial) {
            Ok(r) => r,
            Err(Error::NotStarShaped { .. } | Error::HorizonTooShort { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if ratio < 0.5 {
            return Ok(BallCalibration {
                scale,
                halvings,
                radius: sobolev_norm(&trial.u0, problem.params.r)?,
                ratio,
            });
        }
        scale *= 0.5;
    }
    Err(Error::NonContraction {
        ratio: f64::INFINITY,
        differences: Vec::new(),
    })
}

/// Result of [`prescribe`].
#[derive(Clone, Debug)]
pub struct Prescription {
    pub a: SpectralField,
    /// Witnessing trajectory, starting at `s = shift`.
    pub trajectory: Trajectory,
    pub leading: SpectralField,
    /// Time shift `s₀` applied when `b` was outside the calibrated ball.
    pub shift: f64,
    /// `‖P(a_m) − b‖ / ‖b‖` per outer iteration.
    pub residuals: Vec<f64>,
    pub ball: Option<BallCalibration>,
    pub report: Option<FixedPointReport>,
}

fn l2(field: &SpectralField) -> f64 {
    field.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Finds `a ∈ E_k` with `P(a) = b` by iterating `a ↦ b − (P(a) − a)`.
pub fn prescribe(b: &SpectralField, template: &ManifoldProblem) -> Result<Prescription> {
    let k = template.k;
    let layout = template.layout();
    layout.check_same(&b.layout())?;
    let levels = b.support_levels();
    if levels.iter().any(|&j| j != k) {
        return Err(Error::NotSingleLevel(levels));
    }
    if b.is_zero() {
        let problem = template.with_u0(b.clone())?;
        return Ok(Prescription {
            a: b.clone(),
            trajectory: problem.linear_trajectory()?,
            leading: b.clone(),
            shift: 0.0,
            residuals: Vec::new(),
            ball: None,
            report: None,
        });
    }

    let lambda = template.lambda_k();
    let ball = calibrate_ball(&template.with_u0(b.clone())?)?;
    let shift = if ball.halvings == 0 {
        0.0
    } else {
        let raw = (sobolev_norm(b, template.params.r)? / ball.radius).ln() / lambda;
        (raw / template.ds()).ceil() * template.ds()
    };
    let target = b.scaled((-lambda * shift).exp());
    let target_norm = l2(&target);
    let limit = 2.0 * sobolev_norm(&target, template.params.r)?.max(ball.radius);

    let mut a = target.clone();
    let mut residuals = Vec::new();
    let mut sizes = Vec::new();
    for _ in 0..template.max_iter {
        let problem = template.with_u0(a.clone())?;
        let (traj, report) = solve_stable(&problem)?;
        let p = leading_coefficient_on(&traj, k, problem.graph())?.value;
        let defect = p.sub(&target)?;
        let residual = l2(&defect) / target_norm;
        residuals.push(residual);
        if residual < template.prescribe_tol {
            return Ok(Prescription {
                a,
                trajectory: traj.shifted(shift),
                leading: p.scaled((lambda * shift).exp()),
                shift,
                residuals,
                ball: Some(ball),
                report: Some(report),
            });
        }
        a = a.sub(&defect)?;
        let size = sobolev_norm(&a, template.params.r)?;
        sizes.push(size);
        if size > limit {
            return Err(Error::LeftBall {
                radius: limit,
                history: sizes,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: residuals.len(),
        tol: template.prescribe_tol,
        last: *residuals.last().unwrap_or(&f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Mode;

    fn layout() -> Layout {
        Layout::new(1, 16).unwrap()
    }

    #[test]
    fn problem_validation() {
        let l = layout();
        let low = SpectralField::unit_mode(l, Mode { j: 1, m: 0 }, 1e-3).unwrap();
        assert!(ManifoldProblem::new(3, low).is_err());
        assert!(ManifoldProblem::new(1, SpectralField::zeros(l)).is_err());
        let p = ManifoldProblem::new(3, SpectralField::zeros(l)).unwrap();
        assert!((p.ds() - 0.02 / 3.5).abs() < 1e-15);
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let p = ManifoldProblem::new(2, SpectralField::zeros(layout())).unwrap();
        let (traj, report) = solve_stable(&p).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        assert!(traj.samples().iter().all(|u| u.is_zero()));
    }

    #[test]
    fn zero_forcing_is_the_linear_propagator() {
        let l = layout();
        let u0 = SpectralField::unit_mode(l, Mode { j: 4, m: 1 }, 0.3).unwrap();
        let p = ManifoldProblem::new(3, u0.clone()).unwrap();
        let v = p.linear_trajectory().unwrap();
        let zero = v.map(|_, u| SpectralField::zeros(u.layout()));
        let out = apply_t(&v, &u0, &p, Some(&zero)).unwrap();
        for (i, u) in out.trajectory.samples().iter().enumerate() {
            let expected = linear_propagator(&u0, v.time(i));
            assert!(u.max_abs_diff(&expected).unwrap() < 1e-12);
        }
    }

    #[test]
    fn prescribing_zero() {
        let p = ManifoldProblem::new(2, SpectralField::zeros(layout())).unwrap();
        let out = prescribe(&SpectralField::zeros(layout()), &p).unwrap();
        assert!(out.a.is_zero());
        let b = SpectralField::unit_mode(layout(), Mode { j: 3, m: 0 }, 1e-3).unwrap();
        assert!(matches!(prescribe(&b, &p), Err(Error::NotSingleLevel(_))));
    }
}
