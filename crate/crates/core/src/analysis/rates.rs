use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{project, sobolev_norm, Projection, SpectralField};
use crate::trajectory::Trajectory;

/// Norms below this are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-14;

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub count: usize,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let count = points.len();
    if count < 2 {
        return None;
    }
    let nf = count as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Some(LinearFit {
        slope,
        intercept,
        rms,
        count,
    })
}

/// Which part of `u(s)` a rate fit looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selector {
    Full,
    /// `Π_k u`.
    Tail(usize),
    /// `π_j u`.
    Level(usize),
    /// `(1 − Π_k) u`.
    Head(usize),
}

impl Selector {
    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        match *self {
            Selector::Full => u.clone(),
            Selector::Tail(k) => project(u, Projection::Tail(k)),
            Selector::Level(j) => project(u, Projection::Level(j)),
            Selector::Head(k) => project(u, Projection::Head(k)),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Selector::Full => "full".into(),
            Selector::Tail(k) => format!("Pi_{k}"),
            Selector::Level(j) => format!("pi_{j}"),
            Selector::Head(k) => format!("1-Pi_{k}"),
        }
    }
}

/// Sample window for a rate fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Window {
    /// Longest run of samples whose norm lies in `[lo, hi]`.
    Band { lo: f64, hi: f64 },
    /// Samples with `start ≤ s ≤ end`.
    Span { start: f64, end: f64 },
    /// From the largest norm until it drops below `ratio` times that peak.
    Decay { ratio: f64 },
}

impl Default for Window {
    fn default() -> Self {
        Window::Band { lo: 1e-10, hi: 1e-3 }
    }
}

/// Exponential rate fitted to a sampled norm history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub label: String,
    pub s1: f64,
    pub s2: f64,
    /// Slope of `ln ‖·‖` in `s`.
    pub slope: f64,
    pub intercept: f64,
    /// `−slope`.
    pub rate: f64,
    pub rms: f64,
    pub samples: usize,
    /// Set when samples at the noise floor were dropped from the window.
    pub shrunk: bool,
}

/// Fits `ln ‖g(s_i)‖ ≈ a − rate·s_i` over `window`.
pub fn fit_rate(label: &str, times: &[f64], norms: &[f64], window: Window) -> Result<RateFit> {
    let len = norms.len().min(times.len());
    let mut shrunk = false;
    let (first, last) = match window {
        Window::Band { lo, hi } => {
            let lo = lo.max(NOISE_FLOOR);
            longest_run(len, |i| norms[i] >= lo && norms[i] <= hi)
                .ok_or(Error::InsufficientData(0))?
        }
        Window::Span { start, end } => {
            let inside: Vec<usize> = (0..len).filter(|&i| times[i] >= start && times[i] <= end).collect();
            let (&a, &b) = inside
                .first()
                .zip(inside.last())
                .ok_or(Error::InsufficientData(0))?;
            let (a2, b2) = longest_run(len, |i| i >= a && i <= b && norms[i] > NOISE_FLOOR)
                .ok_or(Error::InsufficientData(0))?;
            shrunk = (a2, b2) != (a, b);
            (a2, b2)
        }
        Window::Decay { ratio } => {
            let peak = (0..len)
                .max_by(|&a, &b| norms[a].total_cmp(&norms[b]))
                .ok_or(Error::InsufficientData(0))?;
            let cut = (norms[peak] * ratio).max(NOISE_FLOOR);
            let mut end = peak;
            while end + 1 < len && norms[end + 1] >= cut {
                end += 1;
            }
            shrunk = end + 1 < len && norms[peak] * ratio < NOISE_FLOOR;
            (peak, end)
        }
    };
    let points: Vec<(f64, f64)> = (first..=last).map(|i| (times[i], norms[i].ln())).collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(points.len()));
    }
    let fit = linear_fit(&points).ok_or(Error::InsufficientData(points.len()))?;
    Ok(RateFit {
        label: label.to_string(),
        s1: times[first],
        s2: times[last],
        slope: fit.slope,
        intercept: fit.intercept,
        rate: -fit.slope,
        rms: fit.rms,
        samples: fit.count,
        shrunk,
    })
}

fn longest_run(len: usize, keep: impl Fn(usize) -> bool) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=len {
        let inside = i < len && keep(i);
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                let b = i - 1;
                if best.is_none_or(|(x, y)| b - a > y - x) {
                    best = Some((a, b));
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// `‖selector(u(s_i))‖_{H^r}` for every sample.
pub fn norm_history(traj: &Trajectory, selector: Selector, r: i32) -> Result<Vec<f64>> {
    traj.samples()
        .iter()
        .map(|u| sobolev_norm(&selector.apply(u), r))
        .collect()
}

/// Decay rate of `‖selector(u(s))‖_{H^r}` over `window`.
pub fn decay_rate(traj: &Trajectory, selector: Selector, window: Window, r: i32) -> Result<RateFit> {
    let norms = norm_history(traj, selector, r)?;
    fit_rate(&selector.label(), &traj.times(), &norms, window)
}

/// `‖u(s)‖_{H^{r+1}} / ‖u(s)‖_{H^r}` per sample (zero where `u` vanishes).
pub fn norm_ratio_history(traj: &Trajectory, r: i32) -> Result<Vec<f64>> {
    traj.samples()
        .iter()
        .map(|u| {
            let lower = sobolev_norm(u, r)?;
            Ok(if lower > 0.0 {
                sobolev_norm(u, r + 1)? / lower
            } else {
                0.0
            })
        })
        .collect()
}
