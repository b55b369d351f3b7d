//! Prints the exact front of a MultiZeno instance with one witness schedule
//! per point.
//!
//! `cargo run --release --example fronts -- 3 cost lin`

use modae::model::ObjectiveMode;
use modae::zeno::{default_config, exact_front_with_plans, Variant};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 4 {
        eprintln!("usage: fronts PASSENGERS cost|risk lin|cvx|ccve [BOUND]");
        std::process::exit(2);
    }
    let n: usize = args[1].parse().expect("passenger count");
    let mode = if args[2] == "cost" { ObjectiveMode::CostSum } else { ObjectiveMode::RiskMax };
    let variant: Variant = args[3].parse().expect("variant");
    let bound: i64 = args.get(4).map_or(1000, |b| b.parse().expect("bound"));
    let start = std::time::Instant::now();
    let front = exact_front_with_plans(&default_config(variant, n, mode), bound).expect("oracle");
    for (point, legs) in &front {
        println!("{point}");
        for leg in legs {
            let who = leg.passenger.map_or("empty".to_string(), |p| format!("person{p}"));
            println!("  t={:<3} plane{} {who:<8} city{} -> city{}", leg.start, leg.plane, leg.from, leg.to);
        }
    }
    eprintln!("{} points in {:?}", front.len(), start.elapsed());
}
