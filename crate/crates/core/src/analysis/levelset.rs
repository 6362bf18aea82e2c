use std::f64::consts::PI;

use serde::Serialize;

use super::arrival::ArrivalSampleSet;
use crate::error::{Error, Result};

/// Default number of grid cells per side.
pub const DEFAULT_CELLS: usize = 128;

/// Inner and outer annulus radii as fractions of `√(2n)`.
const ANNULUS: (f64, f64) = (0.2, 0.8);

#[derive(Clone, Debug, Serialize)]
pub struct LevelSetReport {
    /// Median of `| |∇t| div(∇t/|∇t|) + 1 |` over covered annulus nodes.
    pub median: f64,
    pub max: f64,
    pub coverage: f64,
    pub points: usize,
    /// Grid spacing.
    pub h: f64,
}

struct Ray {
    log_r: Vec<f64>,
    s: Vec<f64>,
}

impl Ray {
    /// `s` at radius `exp(lr)` by four-point Lagrange interpolation in `ln r`.
    fn s_at(&self, lr: f64) -> Option<f64> {
        let m = self.log_r.len();
        if m < 4 {
            return None;
        }
        // log_r is decreasing along the ray.
        let (hi, lo) = (self.log_r[0], self.log_r[m - 1]);
        if !(lr <= hi && lr >= lo) {
            return None;
        }
        let i = self.log_r.partition_point(|&v| v > lr).clamp(1, m - 1) - 1;
        let start = i.saturating_sub(1).min(m - 4);
        let xs = &self.log_r[start..start + 4];
        let ys = &self.s[start..start + 4];
        let mut acc = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (lr - xs[b]) / (xs[a] - xs[b]);
                }
            }
            acc += w * ys[a];
        }
        Some(acc)
    }
}

/// Barycentric trigonometric interpolation through values at `φ_j = 2πj/N`.
fn trig_interpolate(values: &[f64], phi: f64) -> f64 {
    let count = values.len();
    let step = 2.0 * PI / count as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (j, &f) in values.iter().enumerate() {
        let half = 0.5 * (phi - j as f64 * step);
        let sin = half.sin();
        if sin.abs() < 1e-14 {
            return f;
        }
        let kernel = if count.is_multiple_of(2) { half.cos() / sin } else { 1.0 / sin };
        let w = if j % 2 == 0 { kernel } else { -kernel };
        num += w * f;
        den += w;
    }
    num / den
}

/// Evaluates the level-set operator on a `cells × cells` grid over
/// `[−0.8√2, 0.8√2]²`, keeping nodes in the annulus `0.2√2 ≤ |x| ≤ 0.8√2`.
///
/// Directions must be the equispaced planar angles from
/// [`default_directions`](super::default_directions).
pub fn levelset_residual(samples: &ArrivalSampleSet, cells: usize) -> Result<LevelSetReport> {
    if samples.n != 1 {
        return Err(Error::InvalidArgument(
            "level-set residual is only available for n = 1".into(),
        ));
    }
    if cells < 4 {
        return Err(Error::InvalidArgument(format!("{cells} grid cells")));
    }
    let count = samples.directions.len();
    if count < 3 {
        return Err(Error::InsufficientData(count));
    }
    for (j, w) in samples.directions.iter().enumerate() {
        let phi = 2.0 * PI * j as f64 / count as f64;
        if (w[0] - phi.cos()).abs() > 1e-12 || (w[1] - phi.sin()).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "directions are not equispaced angles".into(),
            ));
        }
    }
    let rays: Vec<Ray> = (0..count)
        .map(|d| {
            let (log_r, s) = samples.ray(d).map(|smp| (smp.radius().ln(), smp.s)).unzip();
            Ray { log_r, s }
        })
        .collect();

    let radius = 2f64.sqrt();
    let (inner, outer) = (ANNULUS.0 * radius, ANNULUS.1 * radius);
    let h = 2.0 * outer / cells as f64;
    let side = cells + 1;
    let coord = |i: usize| -outer + i as f64 * h;

    let t_at = |x: f64, y: f64| -> Option<f64> {
        let lr = x.hypot(y).ln();
        let per_ray: Option<Vec<f64>> = rays
            .iter()
            .map(|ray| ray.s_at(lr).map(|s| samples.t_ext - (-s).exp()))
            .collect();
        Some(trig_interpolate(&per_ray?, y.atan2(x).rem_euclid(2.0 * PI)))
    };
    // t is only needed at nodes within one diagonal step of the annulus.
    let reach = (inner - 1.5 * h, outer + 1.5 * h);
    let grid: Vec<Option<f64>> = (0..side * side)
        .map(|idx| {
            let (x, y) = (coord(idx % side), coord(idx / side));
            let r = x.hypot(y);
            (r >= reach.0 && r <= reach.1).then(|| t_at(x, y)).flatten()
        })
        .collect();
    let at = |i: usize, j: usize| grid[j * side + i];

    let mut residuals = Vec::new();
    let mut annulus_nodes = 0usize;
    for j in 1..cells {
        for i in 1..cells {
            let r = coord(i).hypot(coord(j));
            if r < inner || r > outer {
                continue;
            }
            annulus_nodes += 1;
            let mut block = [[0.0; 3]; 3];
            let mut complete = true;
            for (b, row) in block.iter_mut().enumerate() {
                for (a, v) in row.iter_mut().enumerate() {
                    match at(i + a - 1, j + b - 1) {
                        Some(t) => *v = t,
                        None => complete = false,
                    }
                }
            }
            if complete {
                residuals.push((operator(&block, h) + 1.0).abs());
            }
        }
    }
    let coverage = residuals.len() as f64 / annulus_nodes.max(1) as f64;
    if coverage < 0.95 {
        return Err(Error::CoverageGap { coverage });
    }
    let max = residuals.iter().fold(0.0f64, |m, v| m.max(*v));
    residuals.sort_by(f64::total_cmp);
    let mid = residuals.len() / 2;
    let median = if residuals.len() % 2 == 0 {
        0.5 * (residuals[mid - 1] + residuals[mid])
    } else {
        residuals[mid]
    };
    Ok(LevelSetReport {
        median,
        max,
        coverage,
        points: residuals.len(),
        h,
    })
}

/// `|∇t| div(∇t/|∇t|)` at the centre of a 3×3 block indexed `[y][x]`.
fn operator(t: &[[f64; 3]; 3], h: f64) -> f64 {
    // Unit normal at the four half-points.
    let unit = |gx: f64, gy: f64| {
        let g = gx.hypot(gy);
        (gx / g, gy / g)
    };
    let east = unit(
        (t[1][2] - t[1][1]) / h,
        (t[2][1] + t[2][2] - t[0][1] - t[0][2]) / (4.0 * h),
    );
    let west = unit(
        (t[1][1] - t[1][0]) / h,
        (t[2][0] + t[2][1] - t[0][0] - t[0][1]) / (4.0 * h),
    );
    let north = unit(
        (t[1][2] + t[2][2] - t[1][0] - t[2][0]) / (4.0 * h),
        (t[2][1] - t[1][1]) / h,
    );
    let south = unit(
        (t[0][2] + t[1][2] - t[0][0] - t[1][0]) / (4.0 * h),
        (t[1][1] - t[0][1]) / h,
    );
    let div = (east.0 - west.0 + north.1 - south.1) / h;
    let grad = ((t[1][2] - t[1][0]) / (2.0 * h)).hypot((t[2][1] - t[0][1]) / (2.0 * h));
    grad * div
}
