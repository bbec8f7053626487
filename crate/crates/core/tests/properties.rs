use proptest::prelude::*;
use skewform::{build_sbp_operator, Axis, Discretisation, Grid, Order, StateField};

fn order() -> impl Strategy<Value = Order> {
    prop_oneof![Just(Order::Second), Just(Order::Fourth)]
}

proptest! {
    #[test]
    fn sbp_summation_by_parts(
        order in order(),
        n in 9usize..40,
        seed in prop::collection::vec(-1.0f64..1.0, 80),
    ) {
        let h = 1.0 / (n - 1) as f64;
        let op = build_sbp_operator(order, n, h).unwrap();
        let u = &seed[..n];
        let v = &seed[40..40 + n];
        let (du, dv) = (op.apply(u), op.apply(v));
        let w = op.weights();
        let lhs: f64 = (0..n).map(|i| w[i] * (u[i] * dv[i] + du[i] * v[i])).sum();
        let rhs = u[n - 1] * v[n - 1] - u[0] * v[0];
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn derivative_is_linear(
        order in order(),
        a in -3.0f64..3.0,
        seed in prop::collection::vec(-1.0f64..1.0, 50),
    ) {
        let op = build_sbp_operator(order, 25, 0.1).unwrap();
        let (u, v) = (&seed[..25], &seed[25..]);
        let mix: Vec<f64> = u.iter().zip(v).map(|(x, y)| a * x + y).collect();
        let (du, dv, dm) = (op.apply(u), op.apply(v), op.apply(&mix));
        for i in 0..25 {
            prop_assert!((dm[i] - (a * du[i] + dv[i])).abs() <= 1e-12 * (1.0 + dm[i].abs()));
        }
    }

    #[test]
    fn derivatives_along_axes_commute(
        order in order(),
        periodic in any::<bool>(),
        seed in prop::collection::vec(-1.0f64..1.0, 13 * 11),
    ) {
        let ax = |n, a, b| if periodic { Axis::periodic(n, a, b) } else { Axis::bounded(n, a, b) };
        let grid = Grid::new(vec![ax(13, 0.0, 1.0), ax(11, -1.0, 2.0)]).unwrap();
        let disc = Discretisation::new(grid, order).unwrap();
        let u = StateField::from_vec(1, 13 * 11, seed).unwrap();
        let xy = disc.apply_derivative(&disc.apply_derivative(&u, 1).unwrap(), 0).unwrap();
        let yx = disc.apply_derivative(&disc.apply_derivative(&u, 0).unwrap(), 1).unwrap();
        let scale = 1.0 + xy.max_abs();
        prop_assert!(xy.sub(&yx).max_abs() <= 1e-12 * scale);
    }
}
