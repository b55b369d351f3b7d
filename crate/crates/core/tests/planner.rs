use std::collections::{HashSet, VecDeque};

use modae::model::{compress, execute_sequential, GroundedAction, GroundedTask, ObjectiveMode, State};
use modae::planner::{relaxed_plan, solve, Failure, Planner, SearchBudget, Strategy};
use modae::zeno::{build_task, default_config, random_plan, Variant};
use proptest::prelude::*;
use proptest::strategy::Strategy as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mz3(mode: ObjectiveMode) -> GroundedTask {
    build_task(&default_config(Variant::Lin, 3, mode)).unwrap()
}

#[test]
fn relaxed_support_of_a_delivery_ends_with_a_carry_into_the_goal_city() {
    let task = mz3(ObjectiveMode::CostSum);
    let goal = task.atom_id("at(person1,city4)").unwrap();
    let rp = relaxed_plan(&task, task.init(), &[goal]).unwrap();
    assert!(rp
        .iter()
        .any(|&a| task.action(a).name.starts_with("fly-carry(") && task.action(a).name.contains("person1") && task.action(a).name.ends_with(",city4)")));
}

#[test]
fn makespan_strategy_plan_compresses_within_the_worst_front_makespan() {
    let task = mz3(ObjectiveMode::CostSum);
    let out = solve(&task, Strategy::Makespan, SearchBudget::nodes(100_000), 0);
    let plan = compress(&task, &out.plan.unwrap()).unwrap();
    assert!(plan.objectives.makespan <= 24, "{}", plan.objectives);
}

#[test]
fn goal_already_true_needs_no_actions() {
    let task = mz3(ObjectiveMode::RiskMax);
    let at0 = task.atom_id("at(person1,city0)").unwrap();
    let out = Planner::new(&task).solve(task.init(), &[at0], Strategy::Cost, SearchBudget::nodes(1), 0);
    assert_eq!(out.plan, Ok(vec![]));
}

#[test]
fn atom_without_achiever_is_unreachable() {
    let task = GroundedTask::new(
        "stuck",
        vec!["a".into(), "b".into(), "c".into()],
        vec![act(&[0], &[1], &[0])],
        [0],
        [2],
        ObjectiveMode::CostSum,
    )
    .unwrap();
    assert_eq!(solve(&task, Strategy::Makespan, SearchBudget::nodes(100), 0).plan, Err(Failure::Unreachable));
}

fn act(pre: &[usize], add: &[usize], del: &[usize]) -> GroundedAction {
    GroundedAction {
        id: 0,
        name: String::new(),
        pre: pre.to_vec(),
        add: add.to_vec(),
        del: del.to_vec(),
        duration: 1,
        cost: 1,
        risk: 1,
    }
}

/// Exhaustive breadth-first reachability over real (delete-aware) states.
fn reachable(task: &GroundedTask) -> bool {
    let mut seen: HashSet<State> = HashSet::new();
    let mut queue = VecDeque::from([task.init().clone()]);
    seen.insert(task.init().clone());
    while let Some(s) = queue.pop_front() {
        if task.is_goal(&s) {
            return true;
        }
        for a in 0..task.actions().len() {
            if modae::model::applicable(task, &s, a).unwrap() {
                let t = modae::model::apply(task, &s, a).unwrap();
                if seen.insert(t.clone()) {
                    queue.push_back(t);
                }
            }
        }
    }
    false
}

fn atom_set(n: usize) -> impl proptest::strategy::Strategy<Value = Vec<usize>> {
    proptest::collection::btree_set(0..n, 0..3).prop_map(|s| s.into_iter().collect())
}

fn random_task() -> impl proptest::strategy::Strategy<Value = GroundedTask> {
    const N: usize = 6;
    let action = (atom_set(N), atom_set(N), atom_set(N), 1i64..4).prop_map(|(pre, add, del, d)| {
        let del: Vec<usize> = del.into_iter().filter(|x| !add.contains(x)).collect();
        GroundedAction {
            duration: d,
            cost: d,
            risk: 4 - d,
            ..act(&pre, &add, &del)
        }
    });
    (proptest::collection::vec(action, 1..8), atom_set(N), atom_set(N)).prop_map(|(mut actions, init, goal)| {
        for (i, a) in actions.iter_mut().enumerate() {
            a.name = format!("a{i}");
        }
        GroundedTask::new("random", (0..N).map(|i| format!("p{i}")).collect(), actions, init, goal, ObjectiveMode::CostSum).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn verdicts_agree_with_exhaustive_search(task in random_task(), seed in any::<u64>(), makespan in any::<bool>()) {
        let strategy = if makespan { Strategy::Makespan } else { Strategy::Cost };
        let out = solve(&task, strategy, SearchBudget::nodes(100_000), seed);
        match &out.plan {
            Ok(seq) => {
                let end = execute_sequential(&task, seq).unwrap();
                prop_assert!(task.is_goal(&end));
            }
            Err(Failure::Unreachable) | Err(Failure::SearchSpaceExhausted) => prop_assert!(!reachable(&task)),
            Err(Failure::BudgetExhausted) => prop_assert!(false, "tiny task exhausted budget"),
        }
        if reachable(&task) {
            prop_assert!(out.plan.is_ok());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solving_is_deterministic_and_monotone_in_budget(
        seed in any::<u64>(),
        prefix in 0usize..12,
        budget in 1u64..400,
        risk in any::<bool>(),
        makespan in any::<bool>(),
    ) {
        let mode = if risk { ObjectiveMode::RiskMax } else { ObjectiveMode::CostSum };
        let cfg = default_config(Variant::Lin, 3, mode);
        let task = build_task(&cfg).unwrap();
        // a reachable intermediate state becomes the subproblem goal
        let walk = random_plan(&cfg, &task, &mut ChaCha8Rng::seed_from_u64(seed));
        let mid = execute_sequential(&task, &walk[..prefix.min(walk.len())]).unwrap();
        let goal: Vec<usize> = mid.iter().filter(|a| task.atoms()[*a].name.starts_with("at(person")).collect();
        let strategy = if makespan { Strategy::Makespan } else { Strategy::Cost };

        let mut shared = Planner::new(&task);
        let small = shared.solve(task.init(), &goal, strategy, SearchBudget::nodes(budget), seed);
        let again = Planner::new(&task).solve(task.init(), &goal, strategy, SearchBudget::nodes(budget), seed);
        prop_assert_eq!(&small, &again);
        prop_assert!(small.stats.evaluated <= budget.max(1));
        let large = shared.solve(task.init(), &goal, strategy, SearchBudget::nodes(budget * 3 + 50), seed);
        if let Ok(seq) = &small.plan {
            prop_assert_eq!(&large.plan, &small.plan);
            let end = execute_sequential(&task, seq).unwrap();
            prop_assert!(goal.iter().all(|&g| end.contains(g)));
        }
    }
}
