//! Syntax trees for the supported PDDL subset and their canonical printer.
//!
//! Printing then re-parsing yields an equal tree.

use std::fmt::{self, Display, Formatter, Write as _};

use crate::model::ObjectiveMode;

/// Exact decimal `mantissa / 10^scale`, normalised so equal values compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Number {
    pub mantissa: i64,
    pub scale: u32,
}

impl Number {
    pub fn new(mantissa: i64, scale: u32) -> Self {
        let (mut m, mut s) = (mantissa, scale);
        while s > 0 && m % 10 == 0 {
            m /= 10;
            s -= 1;
        }
        Number { mantissa: m, scale: s }
    }

    pub fn integer(v: i64) -> Self {
        Number { mantissa: v, scale: 0 }
    }

    pub fn parse(text: &str) -> Option<Self> {
        let (neg, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int}{frac}");
        let m: i64 = digits.parse().ok()?;
        Some(Number::new(if neg { -m } else { m }, frac.len() as u32))
    }

    /// Value in units of `10^-scale`; `scale` must be at least `self.scale`.
    pub fn scaled(&self, scale: u32) -> i64 {
        self.mantissa * 10i64.pow(scale - self.scale)
    }
}

impl Display for Number {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::model::format_scaled(self.mantissa, 10i64.pow(self.scale)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Requirement {
    Strips,
    Typing,
    DurativeActions,
    ActionCosts,
}

impl Requirement {
    pub fn from_keyword(kw: &str) -> Option<Self> {
        Some(match kw {
            ":strips" => Requirement::Strips,
            ":typing" => Requirement::Typing,
            ":durative-actions" => Requirement::DurativeActions,
            ":action-costs" => Requirement::ActionCosts,
            _ => return None,
        })
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Requirement::Strips => ":strips",
            Requirement::Typing => ":typing",
            Requirement::DurativeActions => ":durative-actions",
            Requirement::ActionCosts => ":action-costs",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedVar {
    /// Variable name without the leading `?`.
    pub name: String,
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub name: String,
    pub params: Vec<TypedVar>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Object(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NumExpr {
    Const(Number),
    Fluent { name: String, args: Vec<Term> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedVar>,
    pub duration: NumExpr,
    /// `at start` conditions.
    pub condition: Vec<AtomTemplate>,
    /// `at end` positive effects.
    pub add: Vec<AtomTemplate>,
    /// `at end` negative effects.
    pub del: Vec<AtomTemplate>,
    /// `(increase (total-cost) e)`.
    pub cost: Option<NumExpr>,
    /// `(increase (total-risk) e)`; aggregated by maximum under a risk metric.
    pub risk: Option<NumExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainAst {
    pub name: String,
    pub requirements: Vec<Requirement>,
    pub types: Vec<TypeDecl>,
    pub predicates: Vec<Signature>,
    pub functions: Vec<Signature>,
    pub actions: Vec<ActionSchema>,
}

impl DomainAst {
    pub fn predicate(&self, name: &str) -> Option<&Signature> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&Signature> {
        self.functions.iter().find(|p| p.name == name)
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == "object" || self.types.iter().any(|t| t.name == ty)
    }

    /// True if `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = ty;
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.types.iter().find(|t| t.name == cur) {
                Some(t) => cur = &t.parent,
                None => return false,
            }
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    /// `pred(a,b)` form used for grounded atom names.
    pub fn name(&self) -> String {
        format!("{}({})", self.predicate, self.args.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumericInit {
    pub function: String,
    pub args: Vec<String>,
    pub value: Number,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemAst {
    pub name: String,
    pub domain: String,
    /// (object, type) in declaration order.
    pub objects: Vec<(String, String)>,
    pub init: Vec<GroundAtom>,
    pub numeric: Vec<NumericInit>,
    pub goal: Vec<GroundAtom>,
    pub metric: ObjectiveMode,
}

fn write_typed(out: &mut String, vars: &[TypedVar], prefix: &str) {
    let mut i = 0;
    while i < vars.len() {
        let ty = &vars[i].ty;
        let mut j = i;
        while j < vars.len() && vars[j].ty == *ty {
            if j > i || !out.ends_with('(') {
                out.push(' ');
            }
            let _ = write!(out, "{prefix}{}", vars[j].name);
            j += 1;
        }
        let _ = write!(out, " - {ty}");
        i = j;
    }
}

fn term(t: &Term) -> String {
    match t {
        Term::Var(v) => format!("?{v}"),
        Term::Object(o) => o.clone(),
    }
}

fn atom_template(a: &AtomTemplate) -> String {
    let mut s = format!("({}", a.predicate);
    for t in &a.args {
        s.push(' ');
        s.push_str(&term(t));
    }
    s.push(')');
    s
}

fn num_expr(e: &NumExpr) -> String {
    match e {
        NumExpr::Const(n) => n.to_string(),
        NumExpr::Fluent { name, args } => atom_template(&AtomTemplate {
            predicate: name.clone(),
            args: args.clone(),
        }),
    }
}

fn signature(s: &Signature) -> String {
    let mut out = format!("({}", s.name);
    write_typed(&mut out, &s.params, "?");
    out.push(')');
    out
}

impl Display for DomainAst {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        let reqs: Vec<&str> = self.requirements.iter().map(|r| r.keyword()).collect();
        writeln!(f, "  (:requirements {})", reqs.join(" "))?;
        if !self.types.is_empty() {
            let mut out = String::from("  (:types");
            let mut i = 0;
            while i < self.types.len() {
                let parent = &self.types[i].parent;
                while i < self.types.len() && self.types[i].parent == *parent {
                    out.push(' ');
                    out.push_str(&self.types[i].name);
                    i += 1;
                }
                let _ = write!(out, " - {parent}");
            }
            writeln!(f, "{out})")?;
        }
        let preds: Vec<String> = self.predicates.iter().map(signature).collect();
        writeln!(f, "  (:predicates {})", preds.join(" "))?;
        if !self.functions.is_empty() {
            let funcs: Vec<String> = self.functions.iter().map(signature).collect();
            writeln!(f, "  (:functions {})", funcs.join(" "))?;
        }
        for a in &self.actions {
            writeln!(f, "  (:durative-action {}", a.name)?;
            let mut params = String::from("(");
            write_typed(&mut params, &a.params, "?");
            writeln!(f, "    :parameters {params})")?;
            writeln!(f, "    :duration (= ?duration {})", num_expr(&a.duration))?;
            let conds: Vec<String> = a
                .condition
                .iter()
                .map(|c| format!("(at start {})", atom_template(c)))
                .collect();
            writeln!(f, "    :condition (and {})", conds.join(" "))?;
            let mut effs: Vec<String> = a
                .del
                .iter()
                .map(|d| format!("(at end (not {}))", atom_template(d)))
                .collect();
            effs.extend(a.add.iter().map(|d| format!("(at end {})", atom_template(d))));
            if let Some(c) = &a.cost {
                effs.push(format!("(at end (increase (total-cost) {}))", num_expr(c)));
            }
            if let Some(r) = &a.risk {
                effs.push(format!("(at end (increase (total-risk) {}))", num_expr(r)));
            }
            writeln!(f, "    :effect (and {}))", effs.join(" "))?;
        }
        write!(f, ")")
    }
}

impl Display for ProblemAst {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        let mut objs = String::from("  (:objects");
        let mut i = 0;
        while i < self.objects.len() {
            let ty = &self.objects[i].1;
            while i < self.objects.len() && self.objects[i].1 == *ty {
                objs.push(' ');
                objs.push_str(&self.objects[i].0);
                i += 1;
            }
            let _ = write!(objs, " - {ty}");
        }
        writeln!(f, "{objs})")?;
        writeln!(f, "  (:init")?;
        for a in &self.init {
            writeln!(f, "    ({} {})", a.predicate, a.args.join(" "))?;
        }
        for n in &self.numeric {
            writeln!(f, "    (= ({} {}) {})", n.function, n.args.join(" "), n.value)?;
        }
        writeln!(f, "  )")?;
        let goals: Vec<String> = self
            .goal
            .iter()
            .map(|a| format!("({} {})", a.predicate, a.args.join(" ")))
            .collect();
        writeln!(f, "  (:goal (and {}))", goals.join(" "))?;
        let metric = match self.metric {
            ObjectiveMode::CostSum => "total-cost",
            ObjectiveMode::RiskMax => "total-risk",
        };
        write!(f, "  (:metric minimize ({metric})))")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_normalise() {
        assert_eq!(Number::parse("2.50"), Some(Number::new(25, 1)));
        assert_eq!(Number::parse("3"), Some(Number::integer(3)));
        assert_eq!(Number::parse("-0.5"), Some(Number::new(-5, 1)));
        assert_eq!(Number::parse("x1"), None);
        assert_eq!(Number::parse("."), None);
        assert_eq!(Number::new(25, 1).scaled(2), 250);
        assert_eq!(Number::new(25, 1).to_string(), "2.5");
    }
}
