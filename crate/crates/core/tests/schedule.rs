mod common;

use modae::model::{compress, execute_sequential, validate_and_score, ObjectiveMode, ObjectiveVector};
use modae::zeno::{build_task, default_config, random_plan, Variant};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn exchange_plan_scores_in_both_modes() {
    // four landings in city1 at 30 each; the riskiest landing is city1
    let (task, steps) = common::exchange_plan(ObjectiveMode::CostSum);
    assert_eq!(validate_and_score(&task, &steps).unwrap(), ObjectiveVector::new(8, 120));
    let (task, steps) = common::exchange_plan(ObjectiveMode::RiskMax);
    assert_eq!(validate_and_score(&task, &steps).unwrap(), ObjectiveVector::new(8, 30));
}

#[test]
fn exchange_plan_compresses_back_to_makespan_eight() {
    let (task, steps) = common::exchange_plan(ObjectiveMode::CostSum);
    let seq: Vec<_> = steps.iter().map(|s| s.action).collect();
    let plan = compress(&task, &seq).unwrap();
    assert_eq!(plan.objectives, ObjectiveVector::new(8, 120));
}

#[test]
fn shifting_a_dependent_step_earlier_is_rejected() {
    let (task, mut steps) = common::exchange_plan(ObjectiveMode::CostSum);
    // third passenger cannot leave city1 before arriving there
    steps[6].start = 5;
    assert!(validate_and_score(&task, &steps).is_err());
}

fn sequential_makespan(task: &modae::model::GroundedTask, seq: &[usize]) -> i64 {
    seq.iter().map(|&a| task.action(a).duration).sum()
}

#[test]
fn random_plans_compress_within_sequential_makespan() {
    for (n, mode) in [(3, ObjectiveMode::CostSum), (3, ObjectiveMode::RiskMax), (6, ObjectiveMode::CostSum), (9, ObjectiveMode::RiskMax)] {
        let cfg = default_config(Variant::Lin, n, mode);
        let task = build_task(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for _ in 0..1000 {
            let seq = random_plan(&cfg, &task, &mut rng);
            let plan = compress(&task, &seq).unwrap();
            assert_eq!(validate_and_score(&task, &plan.steps).unwrap(), plan.objectives);
            assert!(plan.objectives.makespan <= sequential_makespan(&task, &seq));
            let again = compress(&task, &plan.action_sequence()).unwrap();
            assert!(again.objectives.makespan <= plan.objectives.makespan);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_chains_replay_and_keep_length(seed in any::<u64>(), n in 1usize..5) {
        let cfg = default_config(Variant::Lin, n, ObjectiveMode::CostSum);
        let task = build_task(&cfg).unwrap();
        let seq = random_plan(&cfg, &task, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut state = task.init().clone();
        for &a in &seq {
            prop_assert!(modae::model::applicable(&task, &state, a).unwrap());
            state = modae::model::apply(&task, &state, a).unwrap();
            prop_assert_eq!(state.len(), task.num_atoms());
        }
        prop_assert_eq!(&state, &execute_sequential(&task, &seq).unwrap());
        prop_assert!(task.is_goal(&state));
    }

    #[test]
    fn same_start_order_does_not_matter(seed in any::<u64>(), rot in 0usize..8) {
        let cfg = default_config(Variant::Lin, 4, ObjectiveMode::RiskMax);
        let task = build_task(&cfg).unwrap();
        let seq = random_plan(&cfg, &task, &mut ChaCha8Rng::seed_from_u64(seed));
        let plan = compress(&task, &seq).unwrap();
        let mut steps = plan.steps.clone();
        steps.reverse();
        let k = rot % steps.len().max(1);
        steps.rotate_left(k);
        prop_assert_eq!(validate_and_score(&task, &steps).unwrap(), plan.objectives);
    }
}
