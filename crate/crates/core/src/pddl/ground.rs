use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::PddlError;
use crate::model::{GroundedAction, GroundedTask, State};

/// A predicate is static when no action changes it and no goal mentions it;
/// static atoms are checked at grounding time and never become task atoms.
fn static_predicates(dom: &DomainAst, prob: &ProblemAst) -> HashSet<String> {
    let mut changed: HashSet<&str> = HashSet::new();
    for a in &dom.actions {
        for t in a.add.iter().chain(a.del.iter()) {
            changed.insert(&t.predicate);
        }
    }
    for g in &prob.goal {
        changed.insert(&g.predicate);
    }
    let mut used: HashSet<&str> = HashSet::new();
    for a in &dom.actions {
        for t in &a.condition {
            used.insert(&t.predicate);
        }
    }
    dom.predicates
        .iter()
        .map(|p| p.name.as_str())
        .filter(|p| used.contains(p) && !changed.contains(p))
        .map(str::to_string)
        .collect()
}

fn objects_of<'a>(dom: &DomainAst, prob: &'a ProblemAst, ty: &str) -> Vec<&'a str> {
    prob.objects
        .iter()
        .filter(|(_, t)| dom.is_subtype(t, ty))
        .map(|(o, _)| o.as_str())
        .collect()
}

fn bind(t: &AtomTemplate, params: &[TypedVar], binding: &[&str]) -> Option<GroundAtom> {
    let mut args = Vec::with_capacity(t.args.len());
    for a in &t.args {
        match a {
            Term::Object(o) => args.push(o.clone()),
            Term::Var(v) => {
                let i = params.iter().position(|p| p.name == *v)?;
                args.push(binding.get(i)?.to_string());
            }
        }
    }
    Some(GroundAtom {
        predicate: t.predicate.clone(),
        args,
    })
}

struct Raw {
    name: String,
    pre: Vec<GroundAtom>,
    add: Vec<GroundAtom>,
    del: Vec<GroundAtom>,
    duration: Number,
    cost: Number,
    risk: Number,
}

/// Instantiates every type-consistent binding whose static preconditions hold
/// in the initial state, prunes actions unreachable under the delete
/// relaxation and assigns ids in lexicographic name order.
pub fn ground(dom: &DomainAst, prob: &ProblemAst) -> Result<GroundedTask, PddlError> {
    let statics = static_predicates(dom, prob);
    let init_set: HashSet<&GroundAtom> = prob.init.iter().collect();
    let numeric: HashMap<(&str, &[String]), Number> = prob
        .numeric
        .iter()
        .map(|n| ((n.function.as_str(), n.args.as_slice()), n.value))
        .collect();

    let mut raws = Vec::new();
    for schema in &dom.actions {
        let domains: Vec<Vec<&str>> = schema.params.iter().map(|p| objects_of(dom, prob, &p.ty)).collect();
        let static_conds: Vec<&AtomTemplate> = schema
            .condition
            .iter()
            .filter(|c| statics.contains(&c.predicate))
            .collect();
        // earliest parameter index after which each static condition is ground
        let ready_at: Vec<usize> = static_conds
            .iter()
            .map(|c| {
                c.args
                    .iter()
                    .filter_map(|a| match a {
                        Term::Var(v) => schema.params.iter().position(|p| p.name == *v),
                        Term::Object(_) => None,
                    })
                    .max()
                    .map_or(0, |m| m + 1)
            })
            .collect();
        let mut binding: Vec<&str> = Vec::with_capacity(schema.params.len());
        let holds = |binding: &[&str], depth: usize| {
            static_conds.iter().zip(&ready_at).all(|(c, &r)| {
                r != depth || bind(c, &schema.params, binding).is_some_and(|g| init_set.contains(&g))
            })
        };
        if !holds(&binding, 0) {
            continue;
        }
        enumerate(&domains, &mut binding, &mut |b: &[&str]| holds(b, b.len()), &mut |b| {
            raws.push(instantiate(schema, b, &statics, &numeric));
        });
    }
    let raws: Vec<Raw> = raws.into_iter().collect::<Result<_, _>>()?;

    // atoms: every type-consistent instance of a fluent predicate
    let mut atom_names: BTreeSet<String> = BTreeSet::new();
    for p in &dom.predicates {
        if statics.contains(&p.name) {
            continue;
        }
        let domains: Vec<Vec<&str>> = p.params.iter().map(|v| objects_of(dom, prob, &v.ty)).collect();
        let mut binding = Vec::new();
        enumerate(&domains, &mut binding, &mut |_: &[&str]| true, &mut |b| {
            atom_names.insert(
                GroundAtom {
                    predicate: p.name.clone(),
                    args: b.iter().map(|s| s.to_string()).collect(),
                }
                .name(),
            );
        });
    }
    let atom_names: Vec<String> = atom_names.into_iter().collect();
    let atom_id: BTreeMap<&str, usize> = atom_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let id = |g: &GroundAtom| atom_id[g.name().as_str()];

    let init: Vec<usize> = prob
        .init
        .iter()
        .filter(|g| !statics.contains(&g.predicate))
        .map(id)
        .collect();
    let goal: Vec<usize> = prob.goal.iter().map(id).collect();

    // relaxed reachability from the initial state
    let mut reached = State::from_atoms(atom_names.len(), init.iter().copied())?;
    let mut pres: Vec<Vec<usize>> = raws.iter().map(|r| r.pre.iter().map(id).collect()).collect();
    let mut alive = vec![false; raws.len()];
    loop {
        let mut changed = false;
        for (i, r) in raws.iter().enumerate() {
            if !alive[i] && reached.contains_all(&pres[i]) {
                alive[i] = true;
                changed = true;
                for a in &r.add {
                    reached.insert(id(a));
                }
            }
        }
        if !changed {
            break;
        }
    }

    let time_scale = raws.iter().map(|r| r.duration.scale).max().unwrap_or(0);
    let cost_scale = raws
        .iter()
        .flat_map(|r| [r.cost.scale, r.risk.scale])
        .max()
        .unwrap_or(0);
    let mut actions: Vec<GroundedAction> = raws
        .iter()
        .zip(pres.iter_mut())
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|((r, pre), _)| GroundedAction {
            id: 0,
            name: r.name.clone(),
            pre: std::mem::take(pre),
            add: r.add.iter().map(id).collect(),
            del: r.del.iter().map(id).collect(),
            duration: r.duration.scaled(time_scale),
            cost: r.cost.scaled(cost_scale),
            risk: r.risk.scaled(cost_scale),
        })
        .collect();
    actions.sort_by(|a, b| a.name.cmp(&b.name));
    let mut task = GroundedTask::new(prob.name.clone(), atom_names, actions, init, goal, prob.metric)?;
    task.time_quantum = 10i64.pow(time_scale);
    task.cost_quantum = 10i64.pow(cost_scale);
    Ok(task)
}

/// Depth-first enumeration of the cartesian product of `domains`; `accept`
/// prunes partial bindings.
fn enumerate<'a>(
    domains: &[Vec<&'a str>],
    binding: &mut Vec<&'a str>,
    accept: &mut dyn FnMut(&[&'a str]) -> bool,
    emit: &mut dyn FnMut(&[&'a str]),
) {
    if binding.len() == domains.len() {
        emit(binding);
        return;
    }
    for &o in &domains[binding.len()] {
        binding.push(o);
        if accept(binding) {
            enumerate(domains, binding, accept, emit);
        }
        binding.pop();
    }
}

fn instantiate(
    schema: &ActionSchema,
    binding: &[&str],
    statics: &HashSet<String>,
    numeric: &HashMap<(&str, &[String]), Number>,
) -> Result<Raw, PddlError> {
    let name = format!("{}({})", schema.name, binding.join(","));
    let ground_list = |ts: &[AtomTemplate]| -> Vec<GroundAtom> {
        ts.iter()
            .filter(|t| !statics.contains(&t.predicate))
            .map(|t| bind(t, &schema.params, binding).expect("variables checked at parse time"))
            .collect()
    };
    let eval = |e: &Option<&NumExpr>| -> Result<Number, PddlError> {
        match e {
            None => Ok(Number::integer(0)),
            Some(NumExpr::Const(n)) => Ok(*n),
            Some(NumExpr::Fluent { name: f, args }) => {
                let t = AtomTemplate {
                    predicate: f.clone(),
                    args: args.clone(),
                };
                let g = bind(&t, &schema.params, binding).expect("variables checked at parse time");
                numeric
                    .get(&(g.predicate.as_str(), g.args.as_slice()))
                    .copied()
                    .ok_or_else(|| PddlError::UndefinedFluent {
                        name: g.name(),
                        action: name.clone(),
                    })
            }
        }
    };
    Ok(Raw {
        pre: ground_list(&schema.condition),
        add: ground_list(&schema.add),
        del: ground_list(&schema.del),
        duration: eval(&Some(&schema.duration))?,
        cost: eval(&schema.cost.as_ref())?,
        risk: eval(&schema.risk.as_ref())?,
        name,
    })
}
