use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::rates::{linear_fit, LinearFit};
use crate::error::{Error, Result};
use crate::spectral::{eigenvalue_f64, sphere_radius, SpectralField};
use crate::trajectory::Trajectory;

/// A point `x` reached at time `t`, reconstructed from rescaled time `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSample {
    pub direction: usize,
    pub s: f64,
    pub t: f64,
    pub x: Vec<f64>,
}

impl ArrivalSample {
    pub fn radius(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSampleSet {
    pub n: usize,
    /// Extinction time `T`.
    pub t_ext: f64,
    /// Unit directions `ω`.
    pub directions: Vec<Vec<f64>>,
    /// Ordered by direction, then by `s`.
    pub samples: Vec<ArrivalSample>,
}

impl ArrivalSampleSet {
    /// `t − (T − |x|²/(2n))` for one sample.
    pub fn residual(&self, sample: &ArrivalSample) -> f64 {
        let r2: f64 = sample.x.iter().map(|v| v * v).sum();
        sample.t - self.t_ext + r2 / (2.0 * self.n as f64)
    }

    /// Largest `|t − (T − |x|²/(2n))|` over all samples.
    pub fn max_residual(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0, |m, smp| m.max(self.residual(smp).abs()))
    }

    /// Samples along direction `d`, in increasing `s`.
    pub fn ray(&self, d: usize) -> impl Iterator<Item = &ArrivalSample> {
        self.samples.iter().filter(move |smp| smp.direction == d)
    }
}

/// `count` directions: equispaced angles on the circle for `n = 1`, and for
/// zonal data polar angles `θ_i = π(i + 1/2)/count` in the `(x_0, x_n)` plane.
pub fn default_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let mut w = vec![0.0; n + 1];
            if n == 1 {
                let theta = 2.0 * PI * i as f64 / count as f64;
                w[0] = theta.cos();
                w[1] = theta.sin();
            } else {
                let theta = PI * (i as f64 + 0.5) / count as f64;
                w[0] = theta.sin();
                w[n] = theta.cos();
            }
            w
        })
        .collect()
}

/// `x = e^{−s/2}(√(2n) + u(ω, s))ω`, `t = T − e^{−s}` for every sample and direction.
pub fn arrival_samples(
    traj: &Trajectory,
    t_ext: f64,
    directions: &[Vec<f64>],
) -> Result<ArrivalSampleSet> {
    let layout = traj.layout();
    let radius = layout.radius();
    let mut units = Vec::with_capacity(directions.len());
    for d in directions {
        if d.len() != layout.n + 1 {
            return Err(Error::InvalidArgument(format!(
                "direction has {} components, expected {}",
                d.len(),
                layout.n + 1
            )));
        }
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero direction".into()));
        }
        units.push(d.iter().map(|v| v / norm).collect::<Vec<f64>>());
    }
    let angles: Vec<f64> = units.iter().map(|w| layout.direction_angle(w)).collect();
    let mut samples = Vec::with_capacity(units.len() * traj.len());
    for (d, w) in units.iter().enumerate() {
        let basis = layout.basis_at(angles[d]);
        for (i, u) in traj.samples().iter().enumerate() {
            let s = traj.time(i);
            let value: f64 = basis.value.iter().zip(u.coeffs()).map(|(y, c)| y * c).sum();
            let rho = radius + value;
            if !(rho > 0.0) {
                return Err(Error::NotStarShaped { node: d, rho });
            }
            let scale = (-0.5 * s).exp() * rho;
            samples.push(ArrivalSample {
                direction: d,
                s,
                t: t_ext - (-s).exp(),
                x: w.iter().map(|v| scale * v).collect(),
            });
        }
    }
    Ok(ArrivalSampleSet {
        n: layout.n,
        t_ext,
        directions: units,
        samples,
    })
}

/// Per-direction result of [`fit_arrival`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectionFit {
    pub direction: usize,
    pub p_value: f64,
    pub gamma: f64,
    pub c: f64,
    pub rms: f64,
    pub points: usize,
}

/// `t − (T − |x|²/(2n)) ≈ c |x|^γ p(ω)`.
///
/// `p(ω) = P(√(2n) ω)/√(2n)` is the leading term of the relative graph
/// function `u/√(2n)`. `c_extension` restates `c` against the homogeneous
/// extension of `P` instead, i.e. `c · (2n)^{(k−1)/2}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArrivalFit {
    pub k: usize,
    pub gamma: f64,
    pub c: f64,
    pub c_extension: f64,
    pub expected_gamma: f64,
    /// `(2n)^{−(1+λ_k)}`.
    pub reference_c: f64,
    pub rms: f64,
    pub points: usize,
    pub window: (f64, f64),
    pub directions: Vec<DirectionFit>,
}

/// Default fit window `|x| ∈ [0.05, 0.5]·√(2n)`.
pub fn default_arrival_window(n: usize) -> (f64, f64) {
    let r = sphere_radius(n);
    (0.05 * r, 0.5 * r)
}

/// Log-log regression of the arrival-time residual against `|x|`, pooled over
/// directions where `|p(ω)|` exceeds `10⁻³` of its maximum.
pub fn fit_arrival(
    samples: &ArrivalSampleSet,
    leading: &SpectralField,
    k: usize,
    window: (f64, f64),
) -> Result<ArrivalFit> {
    let layout = leading.layout();
    if layout.n != samples.n {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let levels = leading.support_levels();
    if levels != [k] {
        return Err(Error::NotSingleLevel(levels));
    }
    let radius = layout.radius();
    let p_values: Vec<f64> = samples
        .directions
        .iter()
        .map(|w| leading.eval_direction(w) / radius)
        .collect();
    let p_max = p_values.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let floor = 1e-14 * samples.t_ext.abs().max(1.0);

    let mut pooled = Vec::new();
    let mut directions = Vec::new();
    for (d, &p) in p_values.iter().enumerate() {
        if p.abs() < 1e-3 * p_max {
            continue;
        }
        let pts: Vec<(f64, f64)> = samples
            .ray(d)
            .filter_map(|smp| {
                let r = smp.radius();
                let q = samples.residual(smp) / p;
                (r >= window.0 && r <= window.1 && q > 0.0 && (q * p).abs() > floor)
                    .then(|| (r.ln(), q.ln()))
            })
            .collect();
        if let Some(LinearFit { slope, intercept, rms, count }) = linear_fit(&pts) {
            directions.push(DirectionFit {
                direction: d,
                p_value: p,
                gamma: slope,
                c: intercept.exp(),
                rms,
                points: count,
            });
        }
        pooled.extend(pts);
    }
    let fit = linear_fit(&pooled).ok_or(Error::InsufficientData(pooled.len()))?;
    let lambda = eigenvalue_f64(layout.n, k);
    let two_n = 2.0 * layout.n as f64;
    let c = fit.intercept.exp();
    Ok(ArrivalFit {
        k,
        gamma: fit.slope,
        c,
        c_extension: c * radius.powi(k as i32 - 1),
        expected_gamma: 2.0 + 2.0 * lambda,
        reference_c: two_n.powf(-(1.0 + lambda)),
        rms: fit.rms,
        points: fit.count,
        window,
        directions,
    })
}
