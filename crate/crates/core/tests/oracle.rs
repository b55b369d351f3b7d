mod common;

use modae::model::{validate_and_score, ObjectiveMode, ObjectiveVector};
use modae::zeno::{build_task, default_config, exact_front, exact_front_with_plans, realize_plan, Variant};

fn pairs(points: &[ObjectiveVector]) -> Vec<(i64, i64)> {
    points.iter().map(|p| (p.makespan, p.secondary)).collect()
}

#[test]
fn brute_force_agrees_on_small_lin_instances() {
    for n in 1..=3 {
        for (mode, risk) in [(ObjectiveMode::CostSum, false), (ObjectiveMode::RiskMax, true)] {
            let front = exact_front(&default_config(Variant::Lin, n, mode), 1000).unwrap();
            let brute = common::brute_front(n, risk, 30);
            assert_eq!(pairs(&front.points), brute, "{n} passengers, {mode}");
        }
    }
}

#[test]
fn multizeno3_fronts() {
    let cost = exact_front(&default_config(Variant::Lin, 3, ObjectiveMode::CostSum), 1000).unwrap();
    assert_eq!(cost.points[0].makespan, 8);
    let risk = exact_front(&default_config(Variant::Lin, 3, ObjectiveMode::RiskMax), 1000).unwrap();
    assert_eq!(pairs(&risk.points), vec![(8, 30), (16, 20), (24, 10)]);
}

#[test]
fn witnesses_validate_to_their_points() {
    for mode in [ObjectiveMode::CostSum, ObjectiveMode::RiskMax] {
        for variant in [Variant::Lin, Variant::Cvx, Variant::Ccve] {
            let cfg = default_config(variant, 3, mode);
            let task = build_task(&cfg).unwrap();
            for (point, legs) in exact_front_with_plans(&cfg, 1000).unwrap() {
                let steps = realize_plan(&task, &legs).expect("witness realizes");
                assert_eq!(validate_and_score(&task, &steps).unwrap(), point);
            }
        }
    }
}

#[test]
fn fronts_are_sorted_non_dominated_and_repeatable() {
    for variant in [Variant::Lin, Variant::Cvx, Variant::Ccve] {
        for mode in [ObjectiveMode::CostSum, ObjectiveMode::RiskMax] {
            let cfg = default_config(variant, 4, mode);
            let a = exact_front(&cfg, 1000).unwrap();
            assert_eq!(a, exact_front(&cfg, 1000).unwrap());
            for w in a.points.windows(2) {
                assert!(w[0].makespan < w[1].makespan && w[0].secondary > w[1].secondary);
            }
            if mode == ObjectiveMode::RiskMax {
                assert!(a.len() <= cfg.central_risks.values().collect::<std::collections::BTreeSet<_>>().len());
            }
        }
    }
}
