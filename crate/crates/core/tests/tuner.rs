use std::collections::HashSet;

use modae::dae::EvoParams;
use modae::tuner::{tune_with, Param, ParamConfig, ParamSpace};
use proptest::prelude::*;

fn space(grids: Vec<(Param, Vec<f64>)>) -> ParamSpace {
    ParamSpace {
        base: EvoParams::default(),
        grids,
    }
}

fn three_grids() -> ParamSpace {
    space(vec![
        (Param::PopSize, vec![10.0, 30.0, 50.0, 100.0]),
        (Param::ProbaCross, vec![0.0, 0.2, 0.5, 0.8, 1.0]),
        (Param::Radius, vec![1.0, 2.0, 3.0]),
    ])
}

#[test]
fn single_parameter_grid_optimum_is_found() {
    // minimum sits at index 4 of a 7-point grid
    let s = space(vec![(Param::ProbaDelatom, vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0])]);
    let score = |c: &ParamConfig| Ok(((c.0[0] as f64) - 4.0).powi(2) + 1.0);
    for seed in 0..5 {
        let r = tune_with(&s, 7, seed, score).unwrap();
        assert_eq!(r.best, ParamConfig(vec![4]));
        assert_eq!(r.best_score, 1.0);
        assert_eq!(r.params.proba_delatom, 0.3);
    }
}

#[test]
fn exhaustible_space_stops_early() {
    let s = space(vec![(Param::Radius, vec![1.0, 2.0, 3.0])]);
    let r = tune_with(&s, 50, 1, |c| Ok(-(c.0[0] as f64))).unwrap();
    assert_eq!(r.history.len(), 3);
    assert_eq!(r.params.radius, 3);
}

#[test]
fn invalid_spaces_are_rejected() {
    assert!(tune_with(&space(vec![(Param::Radius, vec![])]), 5, 0, |_| Ok(0.0)).is_err());
    assert!(tune_with(&space(vec![(Param::Radius, vec![1.0]), (Param::Radius, vec![2.0])]), 5, 0, |_| Ok(0.0)).is_err());
    assert!(tune_with(&space(vec![(Param::ProbaCross, vec![1.5])]), 5, 0, |_| Ok(0.0)).is_err());
    assert!(tune_with(&three_grids(), 0, 0, |_| Ok(0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbourhood_is_symmetric(a in 0usize..4, b in 0usize..5, c in 0usize..3) {
        let s = three_grids();
        let x = ParamConfig(vec![a, b, c]);
        for n in s.neighbors(&x) {
            prop_assert_eq!(n.0.iter().zip(&x.0).filter(|(p, q)| p != q).count(), 1);
            prop_assert!(s.neighbors(&n).contains(&x));
        }
        prop_assert_eq!(s.neighbors(&x).len(), 3 + 4 + 2);
    }

    #[test]
    fn search_stays_on_the_grids_and_reports_its_best(
        seed in any::<u64>(),
        budget in 1usize..40,
        weights in proptest::collection::vec(-3.0f64..3.0, 12),
    ) {
        let s = three_grids();
        let mut seen = Vec::new();
        let r = tune_with(&s, budget, seed, |c| {
            seen.push(c.clone());
            Ok(c.0.iter().enumerate().map(|(k, &i)| weights[k * 4 + i]).sum())
        })
        .unwrap();
        // each configuration is scored once and the budget is a hard cap
        prop_assert!(seen.len() <= budget);
        prop_assert_eq!(seen.iter().collect::<HashSet<_>>().len(), seen.len());
        prop_assert_eq!(seen.len(), r.history.len());
        for (c, _) in &r.history {
            for ((_, grid), &i) in s.grids.iter().zip(&c.0) {
                prop_assert!(i < grid.len());
            }
            let p = s.params(c);
            prop_assert!(p.validate().is_ok());
        }
        prop_assert!(r.history.iter().all(|(_, score)| r.best_score <= *score));
        prop_assert_eq!(s.params(&r.best), r.params);
    }
}
