use std::sync::Arc;

use moving_barrier::{
    barrier, c_from_levels, BarrierContract, BarrierStyle, CurveSet, MovingBarrier, OptionSide,
    TermStructure,
};
use proptest::prelude::*;

fn curve_strategy() -> impl Strategy<Value = CurveSet> {
    (1usize..4).prop_flat_map(|n| {
        (
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(-0.02f64..0.1, n),
            prop::collection::vec(0.0f64..0.05, n),
            prop::collection::vec(0.1f64..0.6, n),
        )
            .prop_map(|(widths, r, q, s)| {
                let mut edges = vec![0.0];
                for w in &widths {
                    edges.push(edges.last().unwrap() + w);
                }
                CurveSet::new(
                    TermStructure::new(edges.clone(), r).unwrap(),
                    TermStructure::new(edges.clone(), q).unwrap(),
                    TermStructure::volatility(edges, s).unwrap(),
                )
                .unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn integrals_are_additive(curves in curve_strategy(), a in 0.0f64..3.0, b in 0.0f64..3.0, c in 0.0f64..3.0) {
        let mut p = [a, b, c];
        p.sort_by(f64::total_cmp);
        let [t0, t1, t2] = p;
        for ts in [&curves.r, &curves.q, &curves.sigma] {
            let whole = ts.integral(t0, t2).unwrap();
            let parts = ts.integral(t0, t1).unwrap() + ts.integral(t1, t2).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-13 * (1.0 + whole.abs()));
        }
        let whole = curves.integral_sigma2(t0, t2).unwrap();
        let parts = curves.integral_sigma2(t0, t1).unwrap() + curves.integral_sigma2(t1, t2).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-13 * (1.0 + whole));
    }

    #[test]
    fn step_grid_is_increasing_and_covers_breakpoints(curves in curve_strategy(), t in 0.0f64..1.0, life in 0.1f64..2.0, n in 1usize..50) {
        let grid = curves.step_grid(t, t + life, n).unwrap();
        prop_assert_eq!(grid[0], t);
        prop_assert_eq!(*grid.last().unwrap(), t + life);
        prop_assert!(grid.windows(2).all(|w| w[0] < w[1]));
        for b in curves.breakpoints_within(t, t + life) {
            prop_assert!(grid.contains(&b));
        }
    }

    #[test]
    fn c_round_trips_through_levels(curves in curve_strategy(), c in -5.0f64..5.0, t0 in 0.0f64..0.9, h_t in 10.0f64..200.0) {
        let curves = Arc::new(curves);
        let b = MovingBarrier::from_terminal(h_t, c, curves.clone(), 1.0).unwrap();
        let level = b.level(t0).unwrap();
        let back = c_from_levels(level, t0, h_t, &curves, 1.0).unwrap();
        prop_assert!((back - c).abs() <= 1e-9 * (1.0 + c.abs()));
    }

    #[test]
    fn knockout_prices_are_bounded_by_vanillas(curves in curve_strategy(), c in -3.0f64..3.0, ratio in 1.0f64..1.5, moneyness in 1.0f64..1.4) {
        let curves = Arc::new(curves);
        let b = MovingBarrier::from_terminal(80.0, c, curves, 1.0).unwrap();
        let spot = b.level(0.0).unwrap() * ratio;
        for side in [OptionSide::Call, OptionSide::Put] {
            let contract = BarrierContract::new(80.0 * moneyness, side, BarrierStyle::DownAndOut, b.clone()).unwrap();
            let out = barrier::price(spot, 0.0, &contract).unwrap();
            prop_assert!(out.price >= -1e-12);
            prop_assert!(out.price <= out.vanilla_term + 1e-12);
            let inn = barrier::price(spot, 0.0, &contract.with_kind(side, BarrierStyle::DownAndIn)).unwrap();
            prop_assert!(inn.price >= -1e-12);
        }
    }

    #[test]
    fn call_out_is_increasing_in_spot(c in -3.0f64..3.0, r1 in 1.0f64..1.5, dr in 0.001f64..0.5) {
        let curves = Arc::new(CurveSet::constant(0.03, 0.01, 0.3, 1.0).unwrap());
        let b = MovingBarrier::from_terminal(90.0, c, curves, 1.0).unwrap();
        let level = b.level(0.0).unwrap();
        let contract = BarrierContract::new(100.0, OptionSide::Call, BarrierStyle::DownAndOut, b).unwrap();
        let lo = barrier::price(level * r1, 0.0, &contract).unwrap().price;
        let hi = barrier::price(level * (r1 + dr), 0.0, &contract).unwrap().price;
        prop_assert!(hi >= lo - 1e-12);
    }
}
