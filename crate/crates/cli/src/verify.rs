//! The acceptance suite: one function per criterion, each returning a
//! [`CriterionResult`] with the measured quantities.

use std::f64::consts::PI;

use serde::Serialize;

use rmcf_core::analysis::{
    arrival_samples, decay_rate, default_arrival_window, default_directions, fit_arrival,
    levelset_residual, mode_asymptotics, projection_bounds, sup_bound_check, Selector, Window,
    DEFAULT_CELLS,
};
use rmcf_core::flow::{evolve, nonlinear_term, FlowConfig, RadialGraph};
use rmcf_core::manifold::{leading_coefficient_on, prescribe, solve_stable, ManifoldProblem};
use rmcf_core::spectral::{
    codimension, eigenspace_dim, eigenvalue, eigenvalue_f64, sobolev_norm, sphere_radius,
    Layout, Mode, PathNormParams, Rational, SpectralField,
};
use rmcf_core::trajectory::Trajectory;
use rmcf_core::Result;

#[derive(Clone, Debug, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub measured: Vec<Measurement>,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u32, title: &str) -> Self {
        Self {
            id,
            title: title.to_string(),
            pass: true,
            measured: Vec::new(),
            detail: String::new(),
        }
    }

    fn measure(&mut self, name: impl Into<String>, value: f64) -> f64 {
        self.measured.push(Measurement {
            name: name.into(),
            value,
        });
        value
    }

    /// Records a failed sub-check; the first one becomes the detail.
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            if self.pass {
                self.detail = what();
            }
            self.pass = false;
        }
    }

    fn errored(id: u32, title: &str, error: rmcf_core::Error) -> Self {
        let mut out = Self::new(id, title);
        out.pass = false;
        out.detail = format!("error: {error}");
        out
    }

    /// `PASS  C04 linear rates: name=value ...`
    pub fn line(&self) -> String {
        let values: Vec<String> = self
            .measured
            .iter()
            .map(|m| format!("{}={:.6e}", m.name, m.value))
            .collect();
        let mut line = format!(
            "{}  C{:02} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            values.join(" ")
        );
        if !self.detail.is_empty() {
            line.push_str(&format!(" [{}]", self.detail));
        }
        line
    }
}

pub const TITLES: [&str; 12] = [
    "spectrum exactness",
    "stationary sphere",
    "dilation mode",
    "linear rates",
    "quadratic smallness",
    "contraction",
    "manifold rates",
    "higher-order set",
    "prescription",
    "arrival-time expansion",
    "level-set residual",
    "sup bound inequality",
];

/// Runs criterion `id` (1-based).
pub fn run(id: u32) -> CriterionResult {
    let title = TITLES[(id - 1) as usize];
    let result = match id {
        1 => spectrum_exactness(),
        2 => stationary_sphere(),
        3 => dilation_mode(),
        4 => linear_rates(),
        5 => quadratic_smallness(),
        6 => contraction(),
        7 => manifold_rates(),
        8 => higher_order_set(),
        9 => prescription(),
        10 => arrival_expansion(),
        11 => levelset(),
        12 => sup_bound(),
        _ => panic!("no criterion {id}"),
    };
    result.unwrap_or_else(|e| CriterionResult::errored(id, title, e))
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=TITLES.len() as u32).map(run).collect()
}

fn zonal(layout: Layout, j: usize, amplitude: f64) -> Result<SpectralField> {
    SpectralField::unit_mode(layout, Mode { j, m: 0 }, amplitude)
}

fn l2(u: &SpectralField) -> f64 {
    u.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Monomials of degree `d` in `vars` variables.
fn monomials(vars: u64, d: i64) -> u64 {
    if d < 0 {
        return 0;
    }
    // C(d + vars − 1, vars − 1)
    (1..vars).fold(1u64, |acc, i| acc * (d as u64 + i) / i)
}

pub fn spectrum_exactness() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(1, TITLES[0]);
    let mut checked = 0;
    for n in 1..=3usize {
        for j in 0..=20usize {
            let two_n = 2 * n as i64;
            let expected = Rational::new((j * (j + n - 1)) as i64 - two_n, two_n);
            let lambda = eigenvalue(n, j)?;
            out.require(lambda == expected, || format!("lambda({n},{j}) = {lambda}"));
            let vars = n as u64 + 1;
            let dim = monomials(vars, j as i64) - monomials(vars, j as i64 - 2);
            let got = eigenspace_dim(n, j)?;
            out.require(got == dim, || format!("dim E_{j} (n={n}) = {got}, expected {dim}"));
            checked += 2;
        }
        let d2 = codimension(n, 2)?;
        out.require(d2 == n as u64 + 2, || format!("d_2 = {d2} for n = {n}"));
        out.measure(format!("d2_n{n}"), d2 as f64);
    }
    out.measure("checked", checked as f64);
    Ok(out)
}

fn sup_over(traj: &Trajectory, graph: &RadialGraph) -> Result<f64> {
    traj.samples()
        .iter()
        .try_fold(0.0f64, |m, u| Ok(m.max(graph.sup_norm(u)?)))
}

pub fn stationary_sphere() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(2, TITLES[1]);
    for n in 1..=3 {
        let mut config = FlowConfig::new(n);
        config.s_end = 5.0;
        let layout = config.layout()?;
        let traj = evolve(&SpectralField::zeros(layout), &config)?;
        let sup = sup_over(&traj, &RadialGraph::with_default_nodes(layout)?)?;
        out.measure(format!("sup_n{n}"), sup);
        out.require(sup < 1e-12, || format!("n = {n}: sup {sup:e}"));
    }
    Ok(out)
}

pub fn dilation_mode() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(3, TITLES[2]);
    let c0 = 1e-3;
    for n in 1..=3 {
        let mut config = FlowConfig::new(n);
        config.s_end = 3.0;
        config.stride = 10;
        let layout = config.layout()?;
        let radius = layout.radius();
        let traj = evolve(&SpectralField::constant(layout, c0), &config)?;
        let c = (radius + c0).powi(2) - 2.0 * n as f64;
        let worst = traj
            .samples()
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let rho = radius + u.eval_angle(0.5);
                let expected = 2.0 * n as f64 + c * traj.time(i).exp();
                ((rho * rho - expected) / expected).abs()
            })
            .fold(0.0, f64::max);
        out.measure(format!("rel_err_n{n}"), worst);
        out.require(worst < 1e-8, || format!("n = {n}: relative error {worst:e}"));
    }
    Ok(out)
}

pub fn linear_rates() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(4, TITLES[3]);
    for (n, j) in [(1, 2), (1, 3), (1, 4), (2, 2)] {
        let config = FlowConfig::new(n);
        let traj = evolve(&zonal(config.layout()?, j, 1e-5)?, &config)?;
        let fit = decay_rate(&traj, Selector::Level(j), Window::default(), 0)?;
        let expected = eigenvalue_f64(n, j);
        out.measure(format!("rate_n{n}_j{j}"), fit.rate);
        out.require((fit.rate - expected).abs() < 1e-3, || {
            format!("n = {n}, j = {j}: rate {} vs {expected}", fit.rate)
        });
    }
    Ok(out)
}

pub fn quadratic_smallness() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(5, TITLES[4]);
    let layout = Layout::new(1, 32)?;
    let r = PathNormParams::default_for(1, 3).r;
    let y = zonal(layout, 3, 1.0)?;
    let mut ratios = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let q = sobolev_norm(&nonlinear_term(&y.scaled(eps))?, r - 1)? / (eps * eps);
        ratios.push(out.measure(format!("ratio_{eps:e}"), q));
    }
    let (lo, hi) = min_max(&ratios);
    let spread = out.measure("spread", hi / lo - 1.0);
    out.require(spread < 0.1, || format!("spread {spread:.3}"));
    Ok(out)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)))
}

fn three_manifold() -> Result<(ManifoldProblem, Trajectory, rmcf_core::manifold::FixedPointReport)> {
    let layout = Layout::new(1, 32)?;
    let problem = ManifoldProblem::new(3, zonal(layout, 3, 1e-3)?)?;
    let (traj, report) = solve_stable(&problem)?;
    Ok((problem, traj, report))
}

pub fn contraction() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(6, TITLES[5]);
    let (_, _, report) = three_manifold()?;
    out.measure("iterations", report.iterations as f64);
    let last = *report.differences.last().unwrap_or(&f64::NAN);
    out.measure("last_difference", last);
    let worst = report.ratios.iter().skip(1).copied().fold(0.0, f64::max);
    out.measure("worst_ratio_after_2", worst);
    out.require(report.converged && last < 1e-10, || format!("not converged, last {last:e}"));
    out.require(report.iterations < 30, || format!("{} iterations", report.iterations));
    out.require(worst < 0.5, || format!("ratio {worst:.3}"));
    Ok(out)
}

pub fn manifold_rates() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(7, TITLES[6]);
    let (problem, traj, _) = three_manifold()?;
    let r = problem.params.r;
    let full = out.measure("full", decay_rate(&traj, Selector::Full, Window::default(), r)?.rate);
    out.require((full - 3.5).abs() < 1e-2, || format!("full-norm rate {full}"));
    let head = out.measure("head", decay_rate(&traj, Selector::Head(3), Window::default(), r)?.rate);
    out.require(head >= 6.5, || format!("(1-Pi_3) rate {head}"));
    let bounds = projection_bounds(&traj, 3, problem.params, problem.graph())?;
    let approach = bounds
        .check("e^{lambda_k s} pi_k u - P")
        .and_then(|c| c.fit.as_ref())
        .map_or(f64::NAN, |f| f.rate);
    out.measure("approach", approach);
    out.require(approach >= 3.3, || format!("approach rate {approach}"));
    Ok(out)
}

pub fn higher_order_set() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(8, TITLES[7]);
    let layout = Layout::new(1, 32)?;
    let sigma = 0.95 * eigenvalue_f64(1, 2);
    let params = PathNormParams {
        r: PathNormParams::default_for(1, 2).r,
        sigma,
    };
    let problem = ManifoldProblem::new(2, zonal(layout, 2, 1e-3)?)?.with_params(params)?;
    let (traj, _) = solve_stable(&problem)?;
    let fit = mode_asymptotics(&traj, 2, problem.graph(), params.r, Window::default())?;
    out.measure("levels", fit.levels.len() as f64);
    out.require(fit.levels == [2], || format!("levels {:?}", fit.levels));
    let rate = fit.remainder.as_ref().map_or(f64::NAN, |f| f.rate);
    out.measure("remainder_rate", rate);
    out.require(rate >= 2.0 * sigma, || format!("remainder rate {rate}"));
    Ok(out)
}

/// `‖cos jθ‖_{L²}` on the circle of radius `√2`.
fn cos_norm() -> f64 {
    (PI * sphere_radius(1)).sqrt()
}

pub fn prescription() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(9, TITLES[8]);
    let layout = Layout::new(1, 32)?;
    let template = ManifoldProblem::new(2, SpectralField::zeros(layout))?;
    let mut quadratic = Vec::new();
    let mut cubic = Vec::new();
    for eps in [1e-3, 5e-4, 2.5e-4] {
        let b = zonal(layout, 2, eps * cos_norm())?;
        let p = prescribe(&b, &template)?;
        let residual = l2(&p.leading.sub(&b)?) / l2(&b);
        out.measure(format!("residual_{eps:e}"), residual);
        out.require(residual < 1e-6, || format!("b = {eps:e}: residual {residual:e}"));
        let gap = l2(&p.a.sub(&b)?);
        quadratic.push(out.measure(format!("quadratic_{eps:e}"), gap / l2(&b).powi(2)));
        cubic.push(gap / l2(&b).powi(3));
    }
    let (lo, hi) = min_max(&quadratic);
    let spread = out.measure("quadratic_spread", hi / lo - 1.0);
    let (clo, chi) = min_max(&cubic);
    out.measure("cubic_spread", chi / clo - 1.0);
    out.require(spread <= 0.2, || {
        format!("||a-b||/||b||^2 varies by {:.0}%", 100.0 * spread)
    });
    Ok(out)
}

pub fn arrival_expansion() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(10, TITLES[9]);
    for (n, count) in [(1usize, 64usize), (2, 16)] {
        let layout = Layout::new(n, 32)?;
        let problem = ManifoldProblem::new(2, zonal(layout, 2, 1e-3)?)?;
        let (traj, _) = solve_stable(&problem)?;
        let p = leading_coefficient_on(&traj, 2, problem.graph())?.value;
        let set = arrival_samples(&traj, 1.0, &default_directions(n, count))?;
        let fit = fit_arrival(&set, &p, 2, default_arrival_window(n))?;
        let gamma = out.measure(format!("gamma_n{n}"), fit.gamma);
        let c = out.measure(format!("c_n{n}"), fit.c);
        let expected = if n == 1 { 4.0 } else { 3.0 };
        out.require((gamma / expected - 1.0).abs() < 0.02, || {
            format!("n = {n}: gamma {gamma:.4}")
        });
        if n == 1 {
            out.require((c / 0.25 - 1.0).abs() < 0.05, || format!("n = 1: c {c:.4} vs 0.25"));
        }
    }
    Ok(out)
}

pub fn levelset() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(11, TITLES[10]);
    let mut config = FlowConfig::new(1);
    config.s_end = 6.0;
    config.stride = 20;
    let layout = config.layout()?;
    let ball = evolve(&SpectralField::zeros(layout), &config)?;
    let set = arrival_samples(&ball, 1.0, &default_directions(1, 32))?;
    let mut medians = Vec::new();
    for cells in [32, 64, 128, 256] {
        medians.push(out.measure(format!("ball_{cells}"), levelset_residual(&set, cells)?.median));
    }
    let orders: Vec<f64> = medians.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let (lo, hi) = min_max(&orders);
    out.measure("order_min", lo);
    out.measure("order_max", hi);
    out.require((lo - 2.0).abs() < 0.25 && (hi - 2.0).abs() < 0.25, || {
        format!("observed orders {orders:.3?}")
    });

    let problem = ManifoldProblem::new(2, zonal(layout, 2, 1e-3)?)?;
    let (traj, _) = solve_stable(&problem)?;
    let set = arrival_samples(&traj, 1.0, &default_directions(1, 64))?;
    let median = out.measure("nonlinear", levelset_residual(&set, DEFAULT_CELLS)?.median);
    out.require(median < 5e-3, || format!("nonlinear median {median:e}"));
    Ok(out)
}

pub fn sup_bound() -> Result<CriterionResult> {
    let mut out = CriterionResult::new(12, TITLES[11]);
    let layout = Layout::new(1, 32)?;
    for k in [2, 3] {
        let problem = ManifoldProblem::new(k, zonal(layout, k, 1e-2)?)?;
        let (traj, _) = solve_stable(&problem)?;
        let check = sup_bound_check(&traj, k, problem.params, problem.graph())?;
        let worst = out.measure(format!("worst_ratio_k{k}"), check.worst_ratio);
        out.require(worst <= 1.05, || format!("k = {k}: ratio {worst:.4} at s = {}", check.worst_s));
    }
    Ok(out)
}
