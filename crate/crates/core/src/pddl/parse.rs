use std::collections::HashSet;

use super::ast::*;
use super::sexpr::{self, Pos, Sexpr};
use super::PddlError;
use crate::model::ObjectiveMode;

fn syntax(pos: Pos, msg: impl Into<String>) -> PddlError {
    PddlError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn unsupported(pos: Pos, what: impl Into<String>) -> PddlError {
    PddlError::Unsupported {
        pos,
        what: what.into(),
    }
}

fn list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], PddlError> {
    e.as_list().ok_or_else(|| syntax(e.pos(), format!("expected list for {what}")))
}

fn symbol<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_atom().ok_or_else(|| syntax(e.pos(), format!("expected symbol for {what}")))
}

/// `a b - t c` style lists; untyped trailing names get `object`.
fn typed_list(items: &[Sexpr], vars: bool) -> Result<Vec<(String, String, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = symbol(&items[i], "typed list entry")?;
        if s == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].pos(), "missing type after '-'"))?;
            let ty = symbol(ty, "type name")?;
            if pending.is_empty() {
                return Err(syntax(items[i].pos(), "type without names"));
            }
            for (n, p) in pending.drain(..) {
                out.push((n, ty.to_string(), p));
            }
            i += 2;
            continue;
        }
        let name = if vars {
            s.strip_prefix('?')
                .ok_or_else(|| syntax(items[i].pos(), format!("expected variable, found '{s}'")))?
                .to_string()
        } else {
            s.to_string()
        };
        pending.push((name, items[i].pos()));
        i += 1;
    }
    for (n, p) in pending {
        out.push((n, "object".to_string(), p));
    }
    Ok(out)
}

fn expect_define<'a>(text_expr: &'a Sexpr, kind: &str) -> Result<(&'a [Sexpr], String), PddlError> {
    let items = list(text_expr, "define")?;
    if items.first().and_then(Sexpr::as_atom) != Some("define") {
        return Err(syntax(text_expr.pos(), "expected (define ...)"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| syntax(text_expr.pos(), format!("missing ({kind} name)")))?;
    let h = list(header, kind)?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(syntax(header.pos(), format!("expected ({kind} name)")));
    }
    Ok((&items[2..], symbol(&h[1], "name")?.to_string()))
}

pub fn parse_domain(text: &str) -> Result<DomainAst, PddlError> {
    let root = sexpr::parse(text)?;
    let (sections, name) = expect_define(&root, "domain")?;
    let mut dom = DomainAst {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        functions: Vec::new(),
        actions: Vec::new(),
    };
    let mut action_sections = Vec::new();
    for sec in sections {
        let items = list(sec, "domain section")?;
        let head = items
            .first()
            .and_then(Sexpr::as_atom)
            .ok_or_else(|| syntax(sec.pos(), "expected section keyword"))?;
        match head {
            ":requirements" => {
                for r in &items[1..] {
                    let kw = symbol(r, "requirement")?;
                    let req = Requirement::from_keyword(kw).ok_or_else(|| PddlError::UnknownRequirement {
                        pos: r.pos(),
                        name: kw.to_string(),
                    })?;
                    if !dom.requirements.contains(&req) {
                        dom.requirements.push(req);
                    }
                }
            }
            ":types" => {
                for (n, parent, pos) in typed_list(&items[1..], false)? {
                    if n == "object" || dom.types.iter().any(|t| t.name == n) {
                        return Err(syntax(pos, format!("type '{n}' declared twice")));
                    }
                    dom.types.push(TypeDecl { name: n, parent });
                }
                // parents named only after '-' are implicitly declared
                let declared: HashSet<String> = dom.types.iter().map(|t| t.name.clone()).collect();
                let mut implicit: Vec<String> = dom
                    .types
                    .iter()
                    .map(|t| t.parent.clone())
                    .filter(|p| p != "object" && !declared.contains(p))
                    .collect();
                implicit.dedup();
                let mut seen = HashSet::new();
                for p in implicit {
                    if seen.insert(p.clone()) {
                        dom.types.push(TypeDecl {
                            name: p,
                            parent: "object".into(),
                        });
                    }
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    dom.predicates.push(parse_signature(p)?);
                }
            }
            ":functions" => {
                let mut i = 1;
                while i < items.len() {
                    if items[i].as_atom() == Some("-") {
                        let ty = items.get(i + 1).and_then(Sexpr::as_atom);
                        if ty != Some("number") {
                            return Err(unsupported(items[i].pos(), "non-numeric function type"));
                        }
                        i += 2;
                        continue;
                    }
                    dom.functions.push(parse_signature(&items[i])?);
                    i += 1;
                }
            }
            ":durative-action" => action_sections.push(sec),
            ":action" => {
                return Err(unsupported(sec.pos(), "instantaneous :action (use :durative-action)"))
            }
            other => return Err(unsupported(sec.pos(), format!("domain section {other}"))),
        }
    }
    for t in &dom.types {
        if !dom.has_type(&t.parent) {
            return Err(PddlError::UnknownType {
                pos: root.pos(),
                name: t.parent.clone(),
            });
        }
    }
    for sig in dom.predicates.iter().chain(dom.functions.iter()) {
        for p in &sig.params {
            if !dom.has_type(&p.ty) {
                return Err(PddlError::UnknownType {
                    pos: root.pos(),
                    name: p.ty.clone(),
                });
            }
        }
    }
    for sec in action_sections {
        let action = parse_action(&dom, sec)?;
        dom.actions.push(action);
    }
    Ok(dom)
}

fn parse_signature(e: &Sexpr) -> Result<Signature, PddlError> {
    let items = list(e, "signature")?;
    let name = symbol(
        items.first().ok_or_else(|| syntax(e.pos(), "empty signature"))?,
        "signature name",
    )?;
    let params = typed_list(&items[1..], true)?
        .into_iter()
        .map(|(name, ty, _)| TypedVar { name, ty })
        .collect();
    Ok(Signature {
        name: name.to_string(),
        params,
    })
}

struct ActionScope<'a> {
    dom: &'a DomainAst,
    params: &'a [TypedVar],
}

impl ActionScope<'_> {
    fn term(&self, e: &Sexpr) -> Result<Term, PddlError> {
        let s = symbol(e, "term")?;
        match s.strip_prefix('?') {
            Some(v) => {
                if !self.params.iter().any(|p| p.name == v) {
                    return Err(PddlError::UndeclaredVariable {
                        pos: e.pos(),
                        name: s.to_string(),
                    });
                }
                Ok(Term::Var(v.to_string()))
            }
            None => Err(unsupported(e.pos(), format!("domain constant '{s}'"))),
        }
    }

    fn atom(&self, e: &Sexpr) -> Result<AtomTemplate, PddlError> {
        let items = list(e, "atom")?;
        let name = symbol(items.first().ok_or_else(|| syntax(e.pos(), "empty atom"))?, "predicate")?;
        if matches!(name, "not" | "and" | "or" | "imply" | "forall" | "exists" | "when" | "=") {
            return Err(unsupported(e.pos(), format!("'{name}' here")));
        }
        let sig = self.dom.predicate(name).ok_or_else(|| PddlError::UndeclaredPredicate {
            pos: e.pos(),
            name: name.to_string(),
        })?;
        let args = items[1..].iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
        if args.len() != sig.params.len() {
            return Err(PddlError::ArityMismatch {
                pos: e.pos(),
                name: name.to_string(),
                expected: sig.params.len(),
                found: args.len(),
            });
        }
        Ok(AtomTemplate {
            predicate: name.to_string(),
            args,
        })
    }

    fn num(&self, e: &Sexpr) -> Result<NumExpr, PddlError> {
        match e {
            Sexpr::Atom(s, pos) => Number::parse(s)
                .map(NumExpr::Const)
                .ok_or_else(|| syntax(*pos, format!("expected number, found '{s}'"))),
            Sexpr::List(items, pos) => {
                let name = symbol(items.first().ok_or_else(|| syntax(*pos, "empty expression"))?, "function")?;
                let sig = self.dom.function(name).ok_or_else(|| PddlError::UndeclaredFunction {
                    pos: *pos,
                    name: name.to_string(),
                })?;
                let args = items[1..].iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
                if args.len() != sig.params.len() {
                    return Err(PddlError::ArityMismatch {
                        pos: *pos,
                        name: name.to_string(),
                        expected: sig.params.len(),
                        found: args.len(),
                    });
                }
                Ok(NumExpr::Fluent {
                    name: name.to_string(),
                    args,
                })
            }
        }
    }
}

/// Flattens `(and a b ...)`, a single item or `()`.
fn conjuncts(e: &Sexpr) -> Result<Vec<&Sexpr>, PddlError> {
    let items = list(e, "conjunction")?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    if items[0].as_atom() == Some("and") {
        let mut out = Vec::new();
        for it in &items[1..] {
            out.extend(conjuncts(it)?);
        }
        return Ok(out);
    }
    Ok(vec![e])
}

fn timed<'a>(e: &'a Sexpr, when: &str) -> Result<&'a Sexpr, PddlError> {
    let items = list(e, "timed literal")?;
    match (items.first().and_then(Sexpr::as_atom), items.get(1).and_then(Sexpr::as_atom)) {
        (Some("at"), Some(w)) if w == when && items.len() == 3 => Ok(&items[2]),
        (Some("at"), Some(w)) if (w == "start" || w == "end") && items.len() == 3 => {
            Err(unsupported(e.pos(), format!("'at {w}' here (only 'at {when}' is supported)")))
        }
        (Some("over"), _) => Err(unsupported(e.pos(), "'over all' conditions")),
        _ => Err(unsupported(e.pos(), format!("untimed literal (expected 'at {when}')"))),
    }
}

fn parse_action(dom: &DomainAst, sec: &Sexpr) -> Result<ActionSchema, PddlError> {
    let items = list(sec, "action")?;
    let name = symbol(items.get(1).ok_or_else(|| syntax(sec.pos(), "missing action name"))?, "action name")?;
    let mut params = Vec::new();
    let mut duration = None;
    let mut condition = None;
    let mut effect = None;
    let mut i = 2;
    while i < items.len() {
        let key = symbol(&items[i], "action keyword")?;
        let val = items
            .get(i + 1)
            .ok_or_else(|| syntax(items[i].pos(), format!("missing value for {key}")))?;
        match key {
            ":parameters" => {
                params = typed_list(list(val, "parameters")?, true)?
                    .into_iter()
                    .map(|(name, ty, pos)| {
                        if dom.has_type(&ty) {
                            Ok(TypedVar { name, ty })
                        } else {
                            Err(PddlError::UnknownType { pos, name: ty })
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
            }
            ":duration" => duration = Some(val),
            ":condition" => condition = Some(val),
            ":effect" => effect = Some(val),
            other => return Err(unsupported(items[i].pos(), format!("action keyword {other}"))),
        }
        i += 2;
    }
    let scope = ActionScope { dom, params: &params };

    let dur = duration.ok_or_else(|| syntax(sec.pos(), format!("action {name} has no :duration")))?;
    let d = list(dur, "duration")?;
    if d.len() != 3 || d[0].as_atom() != Some("=") || d[1].as_atom() != Some("?duration") {
        return Err(unsupported(dur.pos(), "duration constraint other than (= ?duration e)"));
    }
    let duration = scope.num(&d[2])?;

    let mut cond = Vec::new();
    if let Some(c) = condition {
        for lit in conjuncts(c)? {
            cond.push(scope.atom(timed(lit, "start")?)?);
        }
    }

    let (mut add, mut del, mut cost, mut risk) = (Vec::new(), Vec::new(), None, None);
    if let Some(e) = effect {
        for lit in conjuncts(e)? {
            let inner = timed(lit, "end")?;
            match inner.head() {
                Some("not") => {
                    let l = list(inner, "negation")?;
                    if l.len() != 2 {
                        return Err(syntax(inner.pos(), "malformed (not ...)"));
                    }
                    del.push(scope.atom(&l[1])?);
                }
                Some("increase") => {
                    let l = list(inner, "increase")?;
                    if l.len() != 3 {
                        return Err(syntax(inner.pos(), "malformed (increase ...)"));
                    }
                    let target = list(&l[1], "metric fluent")?;
                    let slot = match target.first().and_then(Sexpr::as_atom) {
                        Some("total-cost") if target.len() == 1 => &mut cost,
                        Some("total-risk") if target.len() == 1 => &mut risk,
                        _ => return Err(unsupported(l[1].pos(), "increase of a fluent other than total-cost/total-risk")),
                    };
                    if slot.is_some() {
                        return Err(syntax(inner.pos(), "metric fluent increased twice"));
                    }
                    *slot = Some(scope.num(&l[2])?);
                }
                Some("assign" | "decrease" | "scale-up" | "scale-down" | "when" | "forall") => {
                    return Err(unsupported(inner.pos(), format!("effect '{}'", inner.head().unwrap_or(""))))
                }
                _ => add.push(scope.atom(inner)?),
            }
        }
    }
    Ok(ActionSchema {
        name: name.to_string(),
        params,
        duration,
        condition: cond,
        add,
        del,
        cost,
        risk,
    })
}

fn ground_atom(dom: &DomainAst, objects: &[(String, String)], e: &Sexpr, context: &str) -> Result<GroundAtom, PddlError> {
    let items = list(e, context)?;
    let name = symbol(items.first().ok_or_else(|| syntax(e.pos(), "empty atom"))?, "predicate")?;
    if name == "not" {
        return Err(unsupported(e.pos(), format!("negative literal in {context}")));
    }
    let sig = dom.predicate(name).ok_or_else(|| PddlError::UndeclaredPredicate {
        pos: e.pos(),
        name: name.to_string(),
    })?;
    let args = ground_args(dom, objects, &items[1..], &sig.params, name, e.pos())?;
    Ok(GroundAtom {
        predicate: name.to_string(),
        args,
    })
}

fn ground_args(
    dom: &DomainAst,
    objects: &[(String, String)],
    items: &[Sexpr],
    params: &[TypedVar],
    name: &str,
    pos: Pos,
) -> Result<Vec<String>, PddlError> {
    if items.len() != params.len() {
        return Err(PddlError::ArityMismatch {
            pos,
            name: name.to_string(),
            expected: params.len(),
            found: items.len(),
        });
    }
    let mut args = Vec::with_capacity(items.len());
    for (a, p) in items.iter().zip(params) {
        let s = symbol(a, "argument")?;
        if s.starts_with('?') {
            return Err(PddlError::NonGround {
                pos: a.pos(),
                name: s.to_string(),
            });
        }
        let ty = objects
            .iter()
            .find(|(o, _)| o == s)
            .map(|(_, t)| t)
            .ok_or_else(|| PddlError::UnknownObject {
                pos: a.pos(),
                name: s.to_string(),
            })?;
        if !dom.is_subtype(ty, &p.ty) {
            return Err(PddlError::TypeMismatch {
                pos: a.pos(),
                object: s.to_string(),
                expected: p.ty.clone(),
            });
        }
        args.push(s.to_string());
    }
    Ok(args)
}

pub fn parse_problem(text: &str, dom: &DomainAst) -> Result<ProblemAst, PddlError> {
    let root = sexpr::parse(text)?;
    let (sections, name) = expect_define(&root, "problem")?;
    let mut prob = ProblemAst {
        name,
        domain: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        numeric: Vec::new(),
        goal: Vec::new(),
        metric: ObjectiveMode::CostSum,
    };
    let mut init_sec = None;
    let mut goal_sec = None;
    for sec in sections {
        let items = list(sec, "problem section")?;
        let head = items
            .first()
            .and_then(Sexpr::as_atom)
            .ok_or_else(|| syntax(sec.pos(), "expected section keyword"))?;
        match head {
            ":domain" => {
                let d = symbol(items.get(1).ok_or_else(|| syntax(sec.pos(), "missing domain name"))?, "domain")?;
                if d != dom.name {
                    return Err(PddlError::DomainMismatch {
                        expected: dom.name.clone(),
                        found: d.to_string(),
                    });
                }
                prob.domain = d.to_string();
            }
            ":objects" => {
                for (o, ty, pos) in typed_list(&items[1..], false)? {
                    if !dom.has_type(&ty) {
                        return Err(PddlError::UnknownType { pos, name: ty });
                    }
                    if prob.objects.iter().any(|(x, _)| *x == o) {
                        return Err(syntax(pos, format!("object '{o}' declared twice")));
                    }
                    prob.objects.push((o, ty));
                }
            }
            ":init" => init_sec = Some(&items[1..]),
            ":goal" => goal_sec = Some(items.get(1).ok_or_else(|| syntax(sec.pos(), "empty goal"))?),
            ":metric" => {
                let dir = items.get(1).and_then(Sexpr::as_atom);
                let target = items.get(2).and_then(Sexpr::head);
                prob.metric = match (dir, target) {
                    (Some("minimize"), Some("total-cost")) => ObjectiveMode::CostSum,
                    (Some("minimize"), Some("total-risk")) => ObjectiveMode::RiskMax,
                    _ => return Err(unsupported(sec.pos(), "metric other than minimize total-cost/total-risk")),
                };
            }
            other => return Err(unsupported(sec.pos(), format!("problem section {other}"))),
        }
    }
    if prob.domain.is_empty() {
        return Err(syntax(root.pos(), "missing (:domain ...)"));
    }
    for e in init_sec.unwrap_or(&[]) {
        if e.head() == Some("=") {
            let l = list(e, "numeric init")?;
            if l.len() != 3 {
                return Err(syntax(e.pos(), "malformed numeric assignment"));
            }
            let f = list(&l[1], "function term")?;
            let fname = symbol(f.first().ok_or_else(|| syntax(l[1].pos(), "empty function"))?, "function")?;
            let sig = dom.function(fname).ok_or_else(|| PddlError::UndeclaredFunction {
                pos: l[1].pos(),
                name: fname.to_string(),
            })?;
            let args = ground_args(dom, &prob.objects, &f[1..], &sig.params, fname, l[1].pos())?;
            let v = symbol(&l[2], "number")?;
            let value = Number::parse(v).ok_or_else(|| syntax(l[2].pos(), format!("expected number, found '{v}'")))?;
            prob.numeric.push(NumericInit {
                function: fname.to_string(),
                args,
                value,
            });
        } else {
            prob.init.push(ground_atom(dom, &prob.objects, e, "init")?);
        }
    }
    if let Some(g) = goal_sec {
        for lit in conjuncts(g)? {
            prob.goal.push(ground_atom(dom, &prob.objects, lit, "goal")?);
        }
    }
    Ok(prob)
}
