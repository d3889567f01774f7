use contest_core::efficient::{q_efficient, q_efficient_scaled, EfficientProfile};
use contest_core::expost::{synth_kernel, PooledTarget};
use contest_core::ic::{accounting, canonical_utility, check_ic, objective};
use contest_core::{InterimRule, MechParams, TypeDist, TypeGrid, UtilityProfile};
use proptest::prelude::*;

fn any_dist() -> impl Strategy<Value = TypeDist> {
    prop_oneof![
        (0.0..0.5f64, 0.6..2.0f64).prop_map(|(lo, hi)| TypeDist::new(contest_core::Family::Uniform { lo, hi }).unwrap()),
        (0.3..4.0f64).prop_map(|a| TypeDist::power(a).unwrap()),
        (0.1..0.9f64, 0.05..0.95f64).prop_map(|(x, y)| TypeDist::piecewise_linear(vec![(0.0, 0.0), (x, y), (1.0, 1.0)]).unwrap()),
    ]
}

/// Random nondecreasing allocation in [0, 1].
fn monotone(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_inverts_cdf(d in any_dist()) {
        for j in 0..=1000 {
            let u = j as f64 / 1000.0;
            let t = d.quantile(u).unwrap();
            prop_assert!((d.cdf(t).unwrap() - u).abs() <= 1e-10);
        }
    }

    #[test]
    fn grid_mass_telescopes(d in any_dist(), g in 2usize..3000) {
        let grid = TypeGrid::new(&d, g).unwrap();
        let s: f64 = grid.cell_mass.iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
        prop_assert!(grid.points.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn efficient_rule_is_monotone_with_budget(d in any_dist(), n in 2usize..40, kf in 0.0..1.0f64) {
        let k = 1 + ((n - 1) as f64 * kf) as usize % (n - 1);
        let grid = TypeGrid::new(&d, 2001).unwrap();
        let prof = EfficientProfile::new(&d, &grid, n, k).unwrap();
        prop_assert!(prof.point.windows(2).all(|w| w[1] >= w[0]));
        // cell averages are tail differences over small masses: rounding of order ε / m
        prop_assert!(prof.cell.windows(2).all(|w| w[1] >= w[0] - 1e-10));
        let budget: f64 = prof.cell.iter().zip(&grid.cell_mass).map(|(q, m)| q * m).sum();
        prop_assert!((budget - k as f64 / n as f64).abs() <= 1e-6);
        prop_assert!((prof.point.last().unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn scaled_rule_is_the_replicated_rule(n in 2usize..6, z in 1usize..60, theta in 0.0..1.0f64) {
        let d = TypeDist::uniform();
        let a = q_efficient_scaled(&d, n, 1, z, theta).unwrap();
        let b = q_efficient(&d, z * n, z, theta).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn canonical_utility_is_maximal_and_idempotent(
        q in monotone(60),
        eta in 0.1..5.0f64,
        slopes in prop::collection::vec(0.0..1.0f64, 59),
        drop in 0.0..1.0f64,
    ) {
        let d = TypeDist::uniform();
        let grid = TypeGrid::new(&d, 60).unwrap();
        let q = InterimRule::new(q);
        let u_low = q.values[0] * (1.0 - drop);
        let u = canonical_utility(&q, &grid, eta, u_low).unwrap();
        let v = check_ic(&q, &u, &grid, eta, 1e-9).unwrap();
        prop_assert!(v.is_empty(), "{:?}", v);
        let again = canonical_utility(&q, &grid, eta, u.values[0]).unwrap();
        prop_assert_eq!(&again, &u);

        // any other IC-relaxed utility with U' ≤ u_low at the bottom lies below
        let mut other = vec![u_low * drop];
        for (i, s) in slopes.iter().enumerate() {
            let step = s * eta * (grid.points[i + 1] - grid.points[i]);
            let next = (other[i] + step).min(q.values[i + 1]);
            other.push(next.max(other[i]));
        }
        for (a, b) in other.iter().zip(&u.values) {
            prop_assert!(a <= &(b + 1e-12));
        }
    }

    #[test]
    fn no_effort_when_eta_dominates_slopes(q in monotone(40)) {
        let d = TypeDist::uniform();
        let grid = TypeGrid::new(&d, 40).unwrap();
        let max_slope = q.windows(2).zip(grid.points.windows(2)).map(|(a, t)| (a[1] - a[0]) / (t[1] - t[0])).fold(0.0, f64::max);
        let q = InterimRule::new(q);
        let u = canonical_utility(&q, &grid, max_slope * 1.01 + 1e-9, q.values[0]).unwrap();
        prop_assert_eq!(&u.values, &q.values);
    }

    #[test]
    fn objective_accounts_for_effort(q in monotone(50), eta in 0.2..3.0f64, alpha in 0.0..1.0f64) {
        let d = TypeDist::power(2.0).unwrap();
        let grid = TypeGrid::new(&d, 50).unwrap();
        let p = MechParams::new(3, 1, eta, alpha).unwrap();
        let q = InterimRule::new(q);
        let u = canonical_utility(&q, &grid, eta, q.values[0]).unwrap();
        let acc = accounting(&q, &u, &grid, &p);
        let direct = objective(&q, &u, &grid, &p).unwrap();
        let split = alpha * acc.matching_efficiency + (1.0 - alpha) * (acc.allocation - acc.effort_cost);
        prop_assert!((direct - split).abs() <= 1e-10);
    }

    #[test]
    fn kernels_meet_their_invariants(raw in prop::collection::vec(0.05..1.0f64, 2..9), slope in 0.0..1.0f64) {
        let total: f64 = raw.iter().sum();
        let mu: Vec<f64> = raw.iter().map(|m| m / total).collect();
        let nodes: Vec<f64> = (0..mu.len()).map(|i| i as f64).collect();
        // a tilted lottery with mean one half
        let centre: f64 = mu.iter().zip(&nodes).map(|(m, x)| m * x).sum();
        let spread = nodes.last().unwrap().max(1.0);
        let p: Vec<f64> = nodes.iter().map(|x| 0.5 + 0.5 * slope * (x - centre) / spread).collect();
        let t = PooledTarget { lo: 0.0, hi: 1.0, nodes, mu, p, raw_mean: 0.5 };
        let k = synth_kernel(&t).unwrap();
        prop_assert!(k.marginal_residual <= 1e-8);
        prop_assert!(k.antisymmetry_residual <= 1e-9);
        prop_assert!(k.w.iter().flatten().all(|&w| (-1e-12..=1.0 + 1e-12).contains(&w)));
    }
}

#[test]
fn utility_profile_round_trips_through_json() {
    let u = UtilityProfile::new(vec![0.0, 0.1, 0.30000000000000004]);
    let s = serde_json::to_string(&u).unwrap();
    assert_eq!(s, "[0.0,0.1,0.30000000000000004]");
    assert_eq!(serde_json::from_str::<UtilityProfile>(&s).unwrap(), u);
}
