use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmcf_core::analysis::{decay_rate, Selector, Window};
use rmcf_core::manifold::{
    apply_t, contraction_quotient, leading_coefficient_on, level_coefficient, prescribe,
    solve_stable, ManifoldProblem,
};
use rmcf_core::spectral::{
    eigenvalue_f64, linear_propagator, project, sobolev_norm, Layout, Mode, Projection,
    SpectralField,
};
use rmcf_core::trajectory::Trajectory;
use rmcf_core::Error;

fn circle() -> Layout {
    Layout::new(1, 32).unwrap()
}

/// `‖cos jθ‖_{L²}` on the circle of radius `√2`.
fn cos_norm() -> f64 {
    (PI * 2f64.sqrt()).sqrt()
}

fn mode(j: usize, amplitude: f64) -> SpectralField {
    SpectralField::unit_mode(circle(), Mode { j, m: 0 }, amplitude).unwrap()
}

fn l2(u: &SpectralField) -> f64 {
    sobolev_norm(u, 0).unwrap()
}

#[test]
fn synthetic_forcing_on_a_stable_direction() {
    // Mode below k with exponentially decaying forcing: closed-form improper integral.
    let problem = ManifoldProblem::new(3, SpectralField::zeros(circle())).unwrap();
    let v = problem.linear_trajectory().unwrap();
    let (g, beta) = (0.7, 5.0);
    for target in [Mode { j: 0, m: 0 }, Mode { j: 1, m: 1 }, Mode { j: 2, m: 0 }] {
        let lambda = eigenvalue_f64(1, target.j);
        let forcing = v.map(|s, _| {
            SpectralField::unit_mode(circle(), target, g * (-beta * s).exp()).unwrap()
        });
        let out = apply_t(&v, &problem.u0, &problem, Some(&forcing)).unwrap();
        for (i, u) in out.trajectory.samples().iter().enumerate() {
            let s = v.time(i);
            let expected = -g * (-beta * s).exp() / (beta - lambda);
            assert!((u.get(target) - expected).abs() < 1e-8, "{target:?} s={s}");
        }
    }
}

#[test]
fn synthetic_constant_forcing_on_a_decaying_mode() {
    let problem = ManifoldProblem::new(2, SpectralField::zeros(circle())).unwrap();
    let v = problem.linear_trajectory().unwrap();
    let g = 0.3;
    for j in [2, 5] {
        let target = Mode { j, m: 1 };
        let lambda = eigenvalue_f64(1, j);
        let forcing = v.map(|_, _| SpectralField::unit_mode(circle(), target, g).unwrap());
        let out = apply_t(&v, &problem.u0, &problem, Some(&forcing)).unwrap();
        for (i, u) in out.trajectory.samples().iter().enumerate() {
            let expected = g * (1.0 - (-lambda * v.time(i)).exp()) / lambda;
            assert!((u.get(target) - expected).abs() < 1e-8);
        }
    }
}

#[test]
fn growing_forcing_reports_a_short_horizon() {
    let problem = ManifoldProblem::new(3, SpectralField::zeros(circle())).unwrap();
    let v = problem.linear_trajectory().unwrap();
    let forcing = v.map(|s, _| mode(1, (2.0 * s).exp()));
    let err = apply_t(&v, &problem.u0, &problem, Some(&forcing)).unwrap_err();
    assert!(matches!(err, Error::HorizonTooShort { level: 1, .. }), "{err:?}");
}

#[test]
fn contraction_on_the_three_manifold() {
    let u0 = mode(3, 1e-3);
    let problem = ManifoldProblem::new(3, u0.clone()).unwrap();
    let (traj, report) = solve_stable(&problem).unwrap();
    assert!(report.converged && report.iterations < 30);
    assert!(report.differences.last().unwrap() < &1e-10);
    assert!(report.ratios.iter().all(|&r| r < 0.5), "{:?}", report.ratios);

    // Graph property: the F_3 part of u(0) is u0.
    let diff = project(traj.sample(0), Projection::Tail(3)).sub(&u0).unwrap();
    assert!(l2(&diff) < 1e-10);
    assert!(!project(traj.sample(0), Projection::Head(3)).is_zero());

    let rate = decay_rate(&traj, Selector::Full, Window::default(), problem.params.r).unwrap();
    assert!((rate.rate - 3.5).abs() < 1e-2, "{rate:?}");
    let head = decay_rate(&traj, Selector::Head(3), Window::default(), problem.params.r).unwrap();
    assert!(head.rate >= 7.0 - 0.1, "{head:?}");
}

#[test]
fn measured_contraction_constant_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let layout = Layout::new(1, 16).unwrap();
    let u0 = SpectralField::unit_mode(layout, Mode { j: 2, m: 1 }, 1e-3).unwrap();
    let problem = ManifoldProblem::new(2, u0).unwrap();
    let base = problem.linear_trajectory().unwrap();
    let random_path = |rng: &mut ChaCha8Rng| {
        let coeffs: Vec<f64> = (0..layout.len()).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
        let bump = SpectralField::from_coeffs(layout, coeffs).unwrap();
        base.map(|s, u| u.axpy((-0.8 * s).exp(), &bump).unwrap())
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = random_path(&mut rng);
        let w = random_path(&mut rng);
        let q = contraction_quotient(&problem, &v, &w).unwrap();
        assert!(q.is_finite() && q > 0.0);
        worst = worst.max(q);
    }
    assert!(worst < 1e3, "{worst}");
}

#[test]
fn leading_coefficient_of_linear_decay() {
    let y = mode(3, 1.0);
    let traj = Trajectory::from_fn(circle(), 0.0, 0.01, 301, |s| linear_propagator(&y, s)).unwrap();
    let zero = traj.map(|_, u| SpectralField::zeros(u.layout()));
    let p = level_coefficient(&traj, &zero, 3, 0).unwrap();
    assert!(p.value.max_abs_diff(&y).unwrap() < 1e-14);
    assert_eq!(p.tail, 0.0);
    let later = level_coefficient(&traj, &zero, 3, 200).unwrap();
    assert!(later.value.max_abs_diff(&y).unwrap() < 1e-13);
}

#[test]
fn leading_coefficient_is_linear_for_tiny_data() {
    let one = ManifoldProblem::new(2, mode(2, 1e-6)).unwrap();
    let two = one.with_u0(mode(2, 2e-6)).unwrap();
    let p1 = leading_coefficient_on(&solve_stable(&one).unwrap().0, 2, one.graph()).unwrap();
    let p2 = leading_coefficient_on(&solve_stable(&two).unwrap().0, 2, two.graph()).unwrap();
    let ratio = l2(&p2.value) / l2(&p1.value);
    assert!((ratio - 2.0).abs() < 2e-4, "{ratio}");
    assert_eq!(p1.value.support_levels(), vec![2]);
}

#[test]
fn prescribed_limit_is_recovered() {
    let b = mode(2, 1e-3 * cos_norm());
    let template = ManifoldProblem::new(2, SpectralField::zeros(circle())).unwrap();
    let out = prescribe(&b, &template).unwrap();
    let defect = l2(&out.leading.sub(&b).unwrap()) / l2(&b);
    assert!(defect < 1e-6, "{defect}");
    assert_eq!(out.a.support_levels(), vec![2]);
    // P(a) − a is quadratically small.
    assert!(l2(&out.a.sub(&b).unwrap()) < 10.0 * l2(&b).powi(2));

    // The witnessing trajectory approaches e^{-λ_k s} b.
    let last = out.trajectory.last().unwrap();
    let s = out.trajectory.end_time();
    let approach = project(last, Projection::Level(2)).scaled(s.exp()).sub(&b).unwrap();
    assert!(l2(&approach) < 1e-3 * l2(&b));
}

#[test]
fn prescription_commutes_with_time_shift() {
    let b = mode(2, 1e-3 * cos_norm());
    let lambda = eigenvalue_f64(1, 2);
    let template = ManifoldProblem::new(2, SpectralField::zeros(circle())).unwrap();
    let big = prescribe(&b, &template).unwrap();
    let small = prescribe(&b.scaled((-lambda).exp()), &template).unwrap();
    assert_eq!((big.shift, small.shift), (0.0, 0.0));
    let offset = big.trajectory.index_of(1.0).unwrap();
    let gap = |i: usize| {
        l2(&small.trajectory.sample(i).sub(big.trajectory.sample(i + offset)).unwrap())
    };
    let worst = (0..big.trajectory.len() - offset).map(gap).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    // Only the faster levels, absent from a ∈ E_k, differ; that transient dies out.
    assert!(gap(big.trajectory.index_of(2.0).unwrap()) < 1e-3 * gap(0));
}

#[test]
fn large_targets_are_time_shifted() {
    let layout = Layout::new(1, 16).unwrap();
    let b = SpectralField::unit_mode(layout, Mode { j: 2, m: 0 }, 2.0).unwrap();
    let template = ManifoldProblem::new(2, SpectralField::zeros(layout)).unwrap();
    let out = prescribe(&b, &template).unwrap();
    assert!(out.shift > 0.0);
    assert!(out.ball.as_ref().unwrap().halvings > 0);
    assert!((out.trajectory.s0() - out.shift).abs() < 1e-12);
    assert!(l2(&out.leading.sub(&b).unwrap()) / l2(&b) < 1e-6);
}
