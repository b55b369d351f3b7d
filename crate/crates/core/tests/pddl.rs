use modae::model::ObjectiveMode;
use modae::pddl::ast::{GroundAtom, Number, NumericInit};
use modae::pddl::{dump_ground, load, parse_domain, parse_problem, PddlError, Pos, ProblemAst};
use modae::zeno::{default_config, generate, Variant};
use proptest::prelude::*;

fn texts(n: usize, mode: ObjectiveMode) -> (String, String) {
    generate(&default_config(Variant::Lin, n, mode)).unwrap()
}

#[test]
fn zeno_instances_ground_to_the_expected_sizes() {
    let (d, p) = texts(3, ObjectiveMode::CostSum);
    let task = load(&d, &p).unwrap();
    // 18 directed routes: 2 planes fly empty, or with one of 3 passengers
    assert_eq!(task.actions().len(), 2 * 18 + 2 * 3 * 18);
    assert_eq!(task.actions().len(), 144);
    let prob = parse_problem(&p, &parse_domain(&d).unwrap()).unwrap();
    let count = |ty: &str| prob.objects.iter().filter(|(_, t)| t == ty).count();
    assert_eq!((count("person"), count("plane"), count("city")), (3, 2, 5));

    let (d, p) = texts(9, ObjectiveMode::RiskMax);
    let task = load(&d, &p).unwrap();
    // at(person, city), at(plane, city) and in(person, plane); routes are
    // static and checked during grounding
    assert_eq!(task.num_atoms(), 9 * 5 + 2 * 5 + 9 * 2);
    assert!(task.atom_id("route(city0,city1)").is_none());
    assert_eq!(task.num_atoms(), 73);
    assert_eq!(task.mode(), ObjectiveMode::RiskMax);
}

#[test]
fn grounding_is_deterministic() {
    let (d, p) = texts(4, ObjectiveMode::CostSum);
    let a = dump_ground(&load(&d, &p).unwrap());
    let b = dump_ground(&load(&d, &p).unwrap());
    assert_eq!(a, b);
    assert!(a.contains("fly-carry(plane1,person4,city3,city4)"));
}

#[test]
fn goal_already_holding_in_init_is_accepted() {
    let (d, p) = texts(2, ObjectiveMode::CostSum);
    let p = p.replace("(:goal (and (at person1 city4) (at person2 city4)))", "(:goal (and (at person1 city0)))");
    let task = load(&d, &p).unwrap();
    assert!(task.is_goal(task.init()));
}

fn position(e: &PddlError) -> Option<Pos> {
    match e {
        PddlError::Syntax { pos, .. }
        | PddlError::UndeclaredPredicate { pos, .. }
        | PddlError::UnknownObject { pos, .. } => Some(*pos),
        _ => None,
    }
}

#[test]
fn errors_carry_positions() {
    let e = parse_domain("").unwrap_err();
    assert!(matches!(e, PddlError::Syntax { .. }));
    assert_eq!(position(&e), Some(Pos { line: 1, col: 1 }));

    let (d, p) = texts(1, ObjectiveMode::CostSum);
    let bad = d.replacen("(at start (route ?from ?to))", "(at start (link ?from ?to))", 1);
    let e = parse_domain(&bad).unwrap_err();
    assert!(matches!(&e, PddlError::UndeclaredPredicate { name, .. } if name == "link"), "{e}");
    let line = bad.lines().position(|l| l.contains("(link ?from")).unwrap() + 1;
    assert_eq!(position(&e).unwrap().line, line);

    let dom = parse_domain(&d).unwrap();
    let bad = p.replacen("(at plane1 city0)", "(at plane7 city0)", 1);
    let e = parse_problem(&bad, &dom).unwrap_err();
    assert!(matches!(&e, PddlError::UnknownObject { name, .. } if name == "plane7"), "{e}");
    assert!(e.to_string().starts_with(&format!("{}:", position(&e).unwrap())));
}

#[test]
fn generated_domains_round_trip_through_the_printer() {
    for variant in [Variant::Lin, Variant::Cvx, Variant::Ccve] {
        let (d, _) = generate(&default_config(variant, 2, ObjectiveMode::CostSum)).unwrap();
        let ast = parse_domain(&d).unwrap();
        assert_eq!(parse_domain(&ast.to_string()).unwrap(), ast);
    }
}

fn number() -> impl Strategy<Value = Number> {
    (0i64..100_000, 0u32..4).prop_map(|(m, s)| Number::new(m, s))
}

/// Problems over the Zeno domain with arbitrary objects, facts and fluents.
fn problem() -> impl Strategy<Value = ProblemAst> {
    (1usize..4, 1usize..3, 2usize..5).prop_flat_map(|(persons, planes, cities)| {
        let mut objects: Vec<(String, String)> = Vec::new();
        objects.extend((0..persons).map(|i| (format!("p{i}"), "person".to_string())));
        objects.extend((0..planes).map(|i| (format!("a{i}"), "plane".to_string())));
        objects.extend((0..cities).map(|i| (format!("c{i}"), "city".to_string())));
        let locatables = persons + planes;
        let at = (0..locatables, 0..cities).prop_map(move |(x, c)| {
            let who = if x < persons { format!("p{x}") } else { format!("a{}", x - persons) };
            GroundAtom {
                predicate: "at".into(),
                args: vec![who, format!("c{c}")],
            }
        });
        let route = (0..cities, 0..cities).prop_map(|(u, v)| GroundAtom {
            predicate: "route".into(),
            args: vec![format!("c{u}"), format!("c{v}")],
        });
        let fact = prop_oneof![at.clone(), route];
        let fluent = (0..cities, 0..cities, number(), 0u8..3).prop_map(|(u, v, value, kind)| match kind {
            0 => NumericInit {
                function: "flight-time".into(),
                args: vec![format!("c{u}"), format!("c{v}")],
                value,
            },
            1 => NumericInit {
                function: "landing-cost".into(),
                args: vec![format!("c{u}")],
                value,
            },
            _ => NumericInit {
                function: "landing-risk".into(),
                args: vec![format!("c{v}")],
                value,
            },
        });
        (
            "[a-z][a-z0-9-]{0,8}",
            proptest::collection::vec(fact, 0..10),
            proptest::collection::vec(fluent, 0..8),
            proptest::collection::vec(at, 1..4),
            any::<bool>(),
        )
            .prop_map(move |(name, init, numeric, goal, risk)| ProblemAst {
                name,
                domain: "multizeno".into(),
                objects: objects.clone(),
                init,
                numeric,
                goal,
                metric: if risk { ObjectiveMode::RiskMax } else { ObjectiveMode::CostSum },
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_problems_parse_back_identically(ast in problem()) {
        let (d, _) = texts(1, ObjectiveMode::CostSum);
        let dom = parse_domain(&d).unwrap();
        let printed = ast.to_string();
        let back = parse_problem(&printed, &dom);
        prop_assert_eq!(back.as_ref(), Ok(&ast), "{}", printed);
    }
}
