use proptest::prelude::*;
use rmcf_core::analysis::{arrival_samples, default_directions};
use rmcf_core::spectral::{
    arrival_exponent, eigenvalue, linear_propagator, project, sobolev_norm, Layout, Projection,
    Rational, SpectralField, SphereTransform,
};
use rmcf_core::trajectory::Trajectory;

fn field(n: usize, j_max: usize) -> impl Strategy<Value = SpectralField> {
    let layout = Layout::new(n, j_max).unwrap();
    prop::collection::vec(-1.0f64..1.0, layout.len())
        .prop_map(move |c| SpectralField::from_coeffs(layout, c).unwrap())
}

fn any_field() -> impl Strategy<Value = SpectralField> {
    (1usize..=3, 2usize..=12).prop_flat_map(|(n, j)| field(n, j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projections_split_and_are_idempotent(u in any_field(), k in 0usize..14) {
        let tail = project(&u, Projection::Tail(k));
        let head = project(&u, Projection::Head(k));
        prop_assert_eq!(tail.add(&head).unwrap(), u.clone());
        prop_assert_eq!(project(&tail, Projection::Tail(k)), tail.clone());
        prop_assert!(project(&tail, Projection::Head(k)).is_zero());
        for j in 0..=u.layout().j_max {
            let level = project(&u, Projection::Level(j));
            let expected = if j >= k { level.clone() } else { SpectralField::zeros(u.layout()) };
            prop_assert_eq!(project(&tail, Projection::Level(j)), expected);
        }
    }

    #[test]
    fn sobolev_norms_increase_with_order(u in any_field(), r in 0i32..5) {
        let lower = sobolev_norm(&u, r).unwrap();
        let upper = sobolev_norm(&u, r + 1).unwrap();
        prop_assert!(lower <= upper * (1.0 + 1e-15));
        prop_assert!(sobolev_norm(&project(&u, Projection::Tail(3)), r).unwrap() <= lower * (1.0 + 1e-15));
    }

    #[test]
    fn transform_round_trip(u in any_field()) {
        let t = SphereTransform::with_default_nodes(u.layout()).unwrap();
        let back = t.analyze(&t.synthesize(&u).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&u).unwrap() < 1e-12);
    }

    #[test]
    fn linear_propagator_is_a_semigroup(u in any_field(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let once = linear_propagator(&u, a + b);
        let twice = linear_propagator(&linear_propagator(&u, a), b);
        let scale = once.coeffs().iter().fold(1.0f64, |m, c| m.max(c.abs()));
        prop_assert!(once.max_abs_diff(&twice).unwrap() <= 1e-13 * scale);
    }

    #[test]
    fn exponent_identity(n in 1usize..=3, j in 0usize..=10) {
        let two = Rational::from_integer(2);
        prop_assert_eq!(arrival_exponent(n, j).unwrap(), two + two * eigenvalue(n, j).unwrap());
    }

    #[test]
    fn extinction_time_is_a_gauge(u in field(1, 6), shift in -5.0f64..5.0) {
        let small = u.scaled(1e-3);
        let traj = Trajectory::from_fn(small.layout(), 0.0, 0.1, 20, |s| linear_propagator(&small, s)).unwrap();
        let dirs = default_directions(1, 5);
        let a = arrival_samples(&traj, 1.0, &dirs).unwrap();
        let b = arrival_samples(&traj, 1.0 + shift, &dirs).unwrap();
        for (p, q) in a.samples.iter().zip(&b.samples) {
            prop_assert!((q.t - p.t - shift).abs() < 1e-12);
            prop_assert_eq!(&p.x, &q.x);
            prop_assert!((a.residual(p) - b.residual(q)).abs() < 1e-12);
        }
    }

    #[test]
    fn trajectory_jsonl_round_trip(u in any_field(), s0 in -2.0f64..2.0, ds in 1e-3f64..0.5) {
        let traj = Trajectory::from_fn(u.layout(), s0, ds, 4, |s| linear_propagator(&u, s - s0)).unwrap();
        let mut buf = Vec::new();
        traj.write_jsonl(&mut buf).unwrap();
        let back = Trajectory::read_jsonl(buf.as_slice()).unwrap();
        prop_assert_eq!(back.samples(), traj.samples());
        prop_assert_eq!(back.s0(), s0);
        prop_assert_eq!(back.ds(), ds);
    }
}
