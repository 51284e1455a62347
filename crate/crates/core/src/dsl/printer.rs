//! Canonical text form of domain and problem trees. Parsing the output
//! yields a tree equal to the input.

use std::fmt::Write;

use super::ast::*;

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn new() -> Self {
        Printer {
            out: String::new(),
            indent: 0,
        }
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn open(&mut self, s: &str) {
        self.line(s);
        self.indent += 1;
    }

    fn close(&mut self, s: &str) {
        self.indent -= 1;
        self.line(s);
    }

    fn conditions(&mut self, head: &str, conds: &[Condition], tail: &str) {
        if conds.is_empty() {
            self.line(&format!("{head}{{}}{tail}"));
            return;
        }
        self.open(&format!("{head}{{"));
        for c in conds {
            self.condition(c);
        }
        self.close(&format!("}}{tail}"));
    }

    fn condition(&mut self, c: &Condition) {
        match c {
            Condition::Compare { lhs, op, rhs } => {
                let op = match op {
                    CmpOp::Eq => "==",
                    CmpOp::Ne => "!=",
                };
                self.line(&format!("{} {op} {};", expr(lhs), expr(rhs)));
            }
            Condition::Member { elem, set, negated } => {
                let op = if *negated { "!>>" } else { ">>" };
                self.line(&format!("{} {op} {};", expr(elem), expr(set)));
            }
            Condition::Call(call) => self.line(&format!("{};", self::call(call))),
            Condition::Exist(q) => self.quantified("EXIST", q, |p, b| p.condition(b)),
            Condition::Forall(q) => self.quantified("FORALL", q, |p, b| p.condition(b)),
        }
    }

    fn quantified<B>(&mut self, kw: &str, q: &Quantified<B>, mut body: impl FnMut(&mut Self, &B)) {
        self.conditions(&format!("{kw}({} {}, ", q.ty, q.var), &q.filter, ", {");
        self.indent += 1;
        for b in &q.body {
            body(self, b);
        }
        self.close("});");
    }

    fn effects(&mut self, effects: &[Effect]) {
        for e in effects {
            self.effect(e);
        }
    }

    fn effect(&mut self, e: &Effect) {
        match e {
            Effect::Assign { target, value } => {
                self.line(&format!("{} = {};", expr(target), expr(value)))
            }
            Effect::Set { target, op, value } => {
                let op = match op {
                    SetOp::Add => "<<=",
                    SetOp::Remove => "=>>",
                };
                self.line(&format!("{} {op} {};", expr(target), expr(value)));
            }
            Effect::If { guard, then, .. } => {
                self.conditions("IF", guard, "{");
                self.indent += 1;
                self.effects(then);
                self.close("};");
            }
            Effect::Forall(q) => self.quantified("FORALL", q, |p, b| p.effect(b)),
        }
    }

    fn selector(&mut self, s: &SelectorDecl) {
        let kind = match s.kind {
            SelectKind::Select => "SELECT",
            SelectKind::SelectOrdered => "SELECTORDERED",
            SelectKind::SelectOnce => "SELECTONCE",
        };
        let mut tail = String::new();
        if let (Some(o), Some(d)) = (&s.ordering, &s.direction) {
            let d = match d {
                Direction::Descending => "<",
                Direction::Ascending => ">",
            };
            write!(tail, ", {}, {d}", call(o)).unwrap();
        }
        tail.push_str(");");
        self.conditions(
            &format!("{} = {kind}({}, ", s.var, s.entity_type),
            &s.filter,
            &tail,
        );
    }

    fn method(&mut self, m: &MethodDecl) {
        self.open(&format!("method {}({}) {{", m.name, params(&m.params)));
        if let Some(e) = &m.empty {
            self.conditions("empty ", e, ";");
        }
        for case in &m.cases {
            self.open("{");
            self.conditions("preconditions ", &case.preconditions, ";");
            self.open("subtasks {");
            for s in &case.body.selectors {
                self.selector(s);
            }
            for st in &case.body.subtasks {
                let mut l = format!("{}: {}", st.label, invocation(&st.task));
                if !st.predecessors.is_empty() {
                    let p: Vec<String> = st.predecessors.iter().map(|p| p.to_string()).collect();
                    write!(l, " > {}", p.join(", ")).unwrap();
                }
                l.push(';');
                self.line(&l);
            }
            self.close("};");
            self.close("};");
        }
        self.close("};");
    }

    fn operator(&mut self, op: &OperatorDecl) {
        self.open(&format!("action {}({}) {{", op.name, params(&op.params)));
        self.conditions("preconditions ", &op.preconditions, ";");
        self.open("effects {");
        self.effects(&op.effects);
        self.close("};");
        if let Some(c) = &op.cost {
            self.line(&format!("cost{{{}}};", call(c)));
        }
        if let Some(c) = &op.duration {
            self.line(&format!("duration{{{}}};", call(c)));
        }
        self.close("};");
    }
}

fn expr(e: &Expr) -> String {
    match e {
        Expr::Name(id) => id.name.clone(),
        Expr::Attr { base, attr } => format!("{base}.{attr}"),
        Expr::Str(s, _) => format!("\"{s}\""),
        Expr::Int(n, _) => n.to_string(),
        Expr::Bool(b, _) => b.to_string(),
        Expr::Null(_) => "NULL".into(),
    }
}

fn exprs(es: &[Expr]) -> String {
    es.iter().map(expr).collect::<Vec<_>>().join(", ")
}

fn call(c: &Call) -> String {
    format!("{}({})", c.name, exprs(&c.args))
}

fn invocation(t: &TaskInvocation) -> String {
    format!("{}({})", t.name, exprs(&t.args))
}

fn params(ps: &[Param]) -> String {
    ps.iter()
        .map(|p| format!("{} {}", p.ty, p.name))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn print_domain(ast: &DomainAst) -> String {
    let mut p = Printer::new();
    for item in &ast.items {
        match item {
            DomainItem::EntityTypes(names) => {
                let n: Vec<&str> = names.iter().map(|n| n.name.as_str()).collect();
                p.line(&format!("define entityType {};", n.join(", ")));
            }
            DomainItem::Attributes { entity, attributes } => {
                p.open(&format!("define entityAttributes {entity} {{"));
                for a in attributes {
                    let m = match a.mutability {
                        Mutability::Static => "static",
                        Mutability::Dynamic => "dynamic",
                    };
                    let ar = match a.arity {
                        Arity::Atom => "atom",
                        Arity::Set => "set",
                    };
                    p.line(&format!("{m} {ar} {} {};", a.value_type, a.name));
                }
                p.close("};");
            }
            DomainItem::Method(m) => p.method(m),
            DomainItem::Operator(op) => p.operator(op),
        }
    }
    p.out
}

pub fn print_problem(ast: &ProblemAst) -> String {
    let mut p = Printer::new();
    for item in &ast.items {
        match item {
            ProblemItem::New { names, ty } => {
                let n: Vec<&str> = names.iter().map(|n| n.name.as_str()).collect();
                p.line(&format!("{} = new {ty};", n.join(", ")));
            }
            ProblemItem::Assign {
                entity,
                attr,
                op,
                value,
            } => {
                let op = match op {
                    AssignOp::Set => "=",
                    AssignOp::Add => "<<=",
                    AssignOp::Remove => "=>>",
                };
                p.line(&format!("{entity}.{attr} {op} {};", expr(value)));
            }
            ProblemItem::Table(t) => {
                let tys: Vec<&str> = t.key_types.iter().map(|n| n.name.as_str()).collect();
                p.open(&format!("table {}({}) {{", t.name, tys.join(", ")));
                for e in &t.entries {
                    p.line(&format!("({}) = {};", exprs(&e.key), e.value));
                }
                if let Some(d) = &t.default {
                    p.line(&format!("default = {d};"));
                }
                p.close("};");
            }
            ProblemItem::Goal(g) => {
                p.open("goal {");
                for t in g {
                    p.line(&format!("{};", invocation(t)));
                }
                p.close("};");
            }
        }
    }
    p.out
}
