use std::collections::HashMap;
use std::sync::Arc;

use super::*;
use crate::dsl::ast::{self, Arity, CmpOp, Expr, Span, AGENT};
use crate::dsl::Diagnostic;
use crate::planner::linearizations;
use crate::registry::FunctionKind;
use crate::world::{Schema, Universe, Value, ValueType};

/// Static type of a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Null,
    Val(ValueType),
}

impl Ty {
    fn compatible(self, other: Ty) -> bool {
        match (self, other) {
            (Ty::Null, _) | (_, Ty::Null) => true,
            (Ty::Val(a), Ty::Val(b)) => a == b,
        }
    }
}

struct Scope {
    vars: Vec<(String, VarId, TypeId)>,
    names: Vec<String>,
}

impl Scope {
    fn new() -> Self {
        Scope {
            vars: Vec::new(),
            names: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, ty: TypeId) -> VarId {
        let id = VarId(self.names.len() as u16);
        self.names.push(name.to_string());
        self.vars.push((name.to_string(), id, ty));
        id
    }

    fn lookup(&self, name: &str) -> Option<(VarId, TypeId)> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _, _)| n == name)
            .map(|(_, v, t)| (*v, *t))
    }
}

struct Compiler<'a> {
    schema: &'a Schema,
    universe: &'a Universe,
    tasks: HashMap<String, TaskRef>,
    params: HashMap<TaskRef, Vec<ParamDef>>,
    diags: Vec<Diagnostic>,
}

/// Resolves a parsed domain against a problem's entities. All problems
/// found are reported together.
pub fn compile(
    ast: &ast::DomainAst,
    universe: Arc<Universe>,
) -> Result<DomainModel, Vec<Diagnostic>> {
    let schema = universe.schema().clone();
    let mut c = Compiler {
        schema: &schema,
        universe: &universe,
        tasks: HashMap::new(),
        params: HashMap::new(),
        diags: Vec::new(),
    };

    let mut compounds: Vec<CompoundTask> = Vec::new();
    for (i, op) in ast.operators().enumerate() {
        let params = c.param_defs(&op.params);
        c.tasks.insert(op.name.name.clone(), TaskRef::Primitive(i));
        c.params.insert(TaskRef::Primitive(i), params);
    }
    for (method_index, m) in ast.methods().enumerate() {
        let t = match c.tasks.get(&m.name.name) {
            Some(t) => *t,
            None => {
                let t = TaskRef::Compound(compounds.len());
                let params = c.param_defs(&m.params);
                compounds.push(CompoundTask {
                    name: m.name.name.clone(),
                    params: params.clone(),
                    methods: Vec::new(),
                });
                c.tasks.insert(m.name.name.clone(), t);
                c.params.insert(t, params);
                t
            }
        };
        if let TaskRef::Compound(ci) = t {
            compounds[ci].methods.push(method_index);
        }
    }

    let operators: Vec<Operator> = ast.operators().map(|op| c.operator(op)).collect();
    let methods: Vec<Method> = ast.methods().map(|m| c.method(m)).collect();

    if c.diags.is_empty() {
        Ok(DomainModel {
            universe: universe.clone(),
            operators,
            methods,
            compounds,
            tasks: c.tasks,
        })
    } else {
        Err(c.diags)
    }
}

/// Grounds a goal task list against a compiled domain.
pub fn compile_goal(
    model: &DomainModel,
    goal: &[ast::TaskInvocation],
) -> Result<TaskNetwork, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut out = Vec::new();
    for inv in goal {
        let Some(&task) = model.tasks.get(&inv.name.name) else {
            diags.push(Diagnostic::error(
                inv.name.span,
                format!("undefined task `{}`", inv.name.name),
            ));
            continue;
        };
        let params = model.task_params(task);
        if params.len() != inv.args.len() {
            diags.push(Diagnostic::error(
                inv.name.span,
                format!(
                    "task `{}` takes {} arguments, {} given",
                    inv.name.name,
                    params.len(),
                    inv.args.len()
                ),
            ));
            continue;
        }
        let mut args = Vec::new();
        for (a, p) in inv.args.iter().zip(params) {
            match crate::world::state::literal_value(&model.universe, a) {
                Ok(v) if model.universe.value_matches(&v, ValueType::Entity(p.ty)) => args.push(v),
                Ok(v) => diags.push(Diagnostic::error(
                    a.span(),
                    format!(
                        "argument `{}` of `{}` must be a {}",
                        v,
                        inv.name.name,
                        model.universe.schema().get(p.ty).name
                    ),
                )),
                Err(e) => diags.push(Diagnostic::error(a.span(), e.to_string())),
            }
        }
        out.push(GroundTask { task, args });
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(diags)
    }
}

/// An external function named somewhere in the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalRef {
    pub kind: FunctionKind,
    pub name: String,
    pub span: Span,
}

pub fn external_references(ast: &ast::DomainAst) -> Vec<ExternalRef> {
    fn calls(conds: &[ast::Condition], out: &mut Vec<ExternalRef>) {
        for c in conds {
            match c {
                ast::Condition::Call(call) => out.push(ExternalRef {
                    kind: FunctionKind::Evaluable,
                    name: call.name.name.clone(),
                    span: call.name.span,
                }),
                ast::Condition::Exist(q) | ast::Condition::Forall(q) => {
                    calls(&q.filter, out);
                    calls(&q.body, out);
                }
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    for op in ast.operators() {
        calls(&op.preconditions, &mut out);
        if let Some(c) = &op.cost {
            out.push(ExternalRef {
                kind: FunctionKind::Cost,
                name: c.name.name.clone(),
                span: c.name.span,
            });
        }
        if let Some(c) = &op.duration {
            out.push(ExternalRef {
                kind: FunctionKind::Duration,
                name: c.name.name.clone(),
                span: c.name.span,
            });
        }
    }
    for m in ast.methods() {
        for case in &m.cases {
            calls(&case.preconditions, &mut out);
            for s in &case.body.selectors {
                if let Some(o) = &s.ordering {
                    out.push(ExternalRef {
                        kind: FunctionKind::Ordering,
                        name: o.name.name.clone(),
                        span: o.name.span,
                    });
                }
            }
        }
    }
    out
}

impl Compiler<'_> {
    fn err(&mut self, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(span, msg));
    }

    fn type_id(&mut self, id: &ast::Ident) -> TypeId {
        match self.schema.type_id(&id.name) {
            Some(t) => t,
            None => {
                self.err(id.span, format!("unknown type `{}`", id.name));
                TypeId::AGENT
            }
        }
    }

    fn param_defs(&mut self, params: &[ast::Param]) -> Vec<ParamDef> {
        params
            .iter()
            .map(|p| ParamDef {
                name: p.name.name.clone(),
                ty: self.type_id(&p.ty),
            })
            .collect()
    }

    fn operator(&mut self, op: &ast::OperatorDecl) -> Operator {
        let mut scope = Scope::new();
        let params = self.param_defs(&op.params);
        for p in &params {
            scope.push(&p.name, p.ty);
        }
        if let Some(first) = op.params.first() {
            if first.ty.name != AGENT {
                self.err(
                    first.ty.span,
                    format!(
                        "first parameter of action `{}` must be an Agent (found {})",
                        op.name.name, first.ty.name
                    ),
                );
            }
        }
        let (pre, predicates) = self.top_conditions(&op.preconditions, &mut scope);
        if predicates.len() > 1 {
            self.err(
                op.name.span,
                format!(
                    "action `{}` uses more than one evaluable predicate",
                    op.name.name
                ),
            );
        }
        let effects = self.effects(&op.effects, &mut scope);
        let cost = op.cost.as_ref().map(|c| self.fn_call(c, &mut scope));
        let duration = op.duration.as_ref().map(|c| self.fn_call(c, &mut scope));
        Operator {
            name: op.name.name.clone(),
            params,
            var_names: scope.names,
            pre,
            predicates,
            effects,
            cost,
            duration,
        }
    }

    fn method(&mut self, m: &ast::MethodDecl) -> Method {
        let mut scope = Scope::new();
        let params = self.param_defs(&m.params);
        for p in &params {
            scope.push(&p.name, p.ty);
        }
        let base_vars = scope.vars.len();
        let empty = m.empty.as_ref().map(|conds| {
            let (c, preds) = self.top_conditions(conds, &mut scope);
            if !preds.is_empty() {
                self.err(
                    m.name.span,
                    "evaluable predicates are not allowed in `empty` conditions",
                );
            }
            c
        });
        let mut cases = Vec::new();
        for case in &m.cases {
            scope.vars.truncate(base_vars);
            let (pre, predicates) = self.top_conditions(&case.preconditions, &mut scope);
            let mut selectors = Vec::new();
            for s in &case.body.selectors {
                let ty = self.type_id(&s.entity_type);
                if scope.lookup(&s.var.name).is_some() {
                    self.err(
                        s.var.span,
                        format!("variable `{}` is already bound", s.var.name),
                    );
                }
                let var = scope.push(&s.var.name, ty);
                let filter = self.conditions(&s.filter, &mut scope);
                let ordering = s.ordering.as_ref().map(|o| self.fn_call(o, &mut scope));
                if (s.kind == ast::SelectKind::SelectOrdered)
                    != (ordering.is_some() && s.direction.is_some())
                {
                    self.err(
                        s.var.span,
                        "ordering function and direction are required exactly for SELECTORDERED",
                    );
                }
                selectors.push(Selector {
                    var,
                    ty,
                    kind: s.kind,
                    filter,
                    ordering,
                    direction: s.direction,
                });
            }
            let mut subtasks = Vec::new();
            for st in &case.body.subtasks {
                if let Some(sub) = self.invocation(&st.task, &mut scope) {
                    subtasks.push(Subtask {
                        label: st.label,
                        task: sub.0,
                        args: sub.1,
                        predecessors: st.predecessors.clone(),
                    });
                }
            }
            let orders = match linearizations(
                &subtasks
                    .iter()
                    .map(|s| (s.label, s.predecessors.clone()))
                    .collect::<Vec<_>>(),
            ) {
                Ok(o) => o,
                Err(e) => {
                    self.err(case.span, e.to_string());
                    Vec::new()
                }
            };
            cases.push(Case {
                pre,
                predicates,
                selectors,
                subtasks,
                orders,
            });
        }
        Method {
            name: m.name.name.clone(),
            params,
            var_names: scope.names,
            empty,
            cases,
        }
    }

    fn invocation(
        &mut self,
        inv: &ast::TaskInvocation,
        scope: &mut Scope,
    ) -> Option<(TaskRef, Vec<Term>)> {
        let Some(&task) = self.tasks.get(&inv.name.name) else {
            self.err(inv.name.span, format!("undefined task `{}`", inv.name.name));
            return None;
        };
        let params = self.params[&task].clone();
        if params.len() != inv.args.len() {
            self.err(
                inv.name.span,
                format!(
                    "task `{}` takes {} arguments, {} given",
                    inv.name.name,
                    params.len(),
                    inv.args.len()
                ),
            );
            return None;
        }
        let mut args = Vec::new();
        for (a, p) in inv.args.iter().zip(&params) {
            let (t, ty) = self.term(a, scope)?;
            if !ty.compatible(Ty::Val(ValueType::Entity(p.ty))) {
                self.err(
                    a.span(),
                    format!(
                        "argument for parameter `{}` of `{}` must be a {}",
                        p.name,
                        inv.name.name,
                        self.schema.get(p.ty).name
                    ),
                );
            }
            args.push(t);
        }
        Some((task, args))
    }

    fn fn_call(&mut self, call: &ast::Call, scope: &mut Scope) -> FnCall {
        let args = call
            .args
            .iter()
            .filter_map(|a| self.term(a, scope).map(|(t, _)| t))
            .collect();
        FnCall {
            name: call.name.name.clone(),
            args,
        }
    }

    /// Top-level precondition list: evaluable predicate calls are split out.
    fn top_conditions(
        &mut self,
        conds: &[ast::Condition],
        scope: &mut Scope,
    ) -> (Vec<Cond>, Vec<FnCall>) {
        let mut preds = Vec::new();
        let mut rest = Vec::new();
        for c in conds {
            if let ast::Condition::Call(call) = c {
                preds.push(self.fn_call(call, scope));
            } else if let Some(c) = self.condition(c, scope) {
                rest.push(c);
            }
        }
        (rest, preds)
    }

    fn conditions(&mut self, conds: &[ast::Condition], scope: &mut Scope) -> Vec<Cond> {
        conds
            .iter()
            .filter_map(|c| self.condition(c, scope))
            .collect()
    }

    fn condition(&mut self, c: &ast::Condition, scope: &mut Scope) -> Option<Cond> {
        match c {
            ast::Condition::Compare { lhs, op, rhs } => {
                let (l, lt) = self.term(lhs, scope)?;
                let (r, rt) = self.term(rhs, scope)?;
                if !lt.compatible(rt) {
                    self.err(
                        lhs.span(),
                        format!(
                            "type mismatch: cannot compare {} with {}",
                            self.ty_name(lt),
                            self.ty_name(rt)
                        ),
                    );
                }
                Some(Cond::Cmp {
                    lhs: l,
                    rhs: r,
                    negated: *op == CmpOp::Ne,
                })
            }
            ast::Condition::Member { elem, set, negated } => {
                let (e, et) = self.term(elem, scope)?;
                let (base, attr, vt) = self.set_target(set, scope)?;
                if !matches!(et, Ty::Val(t) if t == vt) {
                    self.err(
                        elem.span(),
                        format!(
                            "type mismatch: set holds {}, element is {}",
                            self.schema.type_name(vt),
                            self.ty_name(et)
                        ),
                    );
                }
                Some(Cond::Member {
                    elem: e,
                    base,
                    attr,
                    negated: *negated,
                })
            }
            ast::Condition::Exist(q) => Some(Cond::Exist(
                self.quant(q, scope, |c, b, s| c.conditions(b, s)),
            )),
            ast::Condition::Forall(q) => Some(Cond::Forall(
                self.quant(q, scope, |c, b, s| c.conditions(b, s)),
            )),
            ast::Condition::Call(call) => {
                self.err(
                    call.name.span,
                    "evaluable predicates may only appear at the top level of preconditions",
                );
                None
            }
        }
    }

    fn quant<A, B>(
        &mut self,
        q: &ast::Quantified<A>,
        scope: &mut Scope,
        body: impl Fn(&mut Self, &[A], &mut Scope) -> Vec<B>,
    ) -> Quant<B> {
        let ty = self.type_id(&q.ty);
        let depth = scope.vars.len();
        let var = scope.push(&q.var.name, ty);
        let filter = self.conditions(&q.filter, scope);
        let b = body(self, &q.body, scope);
        scope.vars.truncate(depth);
        Quant {
            var,
            ty,
            filter,
            body: b,
        }
    }

    fn effects(&mut self, effects: &[ast::Effect], scope: &mut Scope) -> Vec<Effect> {
        let mut out = Vec::new();
        for e in effects {
            match e {
                ast::Effect::Assign { target, value } => {
                    let Some((base, attr, vt)) = self.atom_target(target, scope) else {
                        continue;
                    };
                    let Some((v, t)) = self.term(value, scope) else {
                        continue;
                    };
                    if !t.compatible(Ty::Val(vt)) {
                        self.err(
                            value.span(),
                            format!(
                                "type mismatch: expected {}, found {}",
                                self.schema.type_name(vt),
                                self.ty_name(t)
                            ),
                        );
                    }
                    out.push(Effect::Assign {
                        base,
                        attr,
                        value: v,
                    });
                }
                ast::Effect::Set { target, op, value } => {
                    let Some((base, attr, vt)) = self.set_target(target, scope) else {
                        continue;
                    };
                    let Some((v, t)) = self.term(value, scope) else {
                        continue;
                    };
                    if t != Ty::Val(vt) {
                        self.err(
                            value.span(),
                            format!(
                                "type mismatch: set holds {}, element is {}",
                                self.schema.type_name(vt),
                                self.ty_name(t)
                            ),
                        );
                    }
                    out.push(match op {
                        ast::SetOp::Add => Effect::SetAdd {
                            base,
                            attr,
                            value: v,
                        },
                        ast::SetOp::Remove => Effect::SetRemove {
                            base,
                            attr,
                            value: v,
                        },
                    });
                }
                ast::Effect::If { guard, then, .. } => {
                    let guard = self.conditions(guard, scope);
                    let then = self.effects(then, scope);
                    out.push(Effect::If { guard, then });
                }
                ast::Effect::Forall(q) => {
                    out.push(Effect::Forall(
                        self.quant(q, scope, |c, b, s| c.effects(b, s)),
                    ));
                }
            }
        }
        out
    }

    fn attr_access(
        &mut self,
        e: &Expr,
        scope: &mut Scope,
    ) -> Option<(Term, AttrId, Arity, ValueType)> {
        let Expr::Attr { base, attr } = e else {
            self.err(e.span(), "expected an attribute access");
            return None;
        };
        let (b, bt) = self.name(base, scope)?;
        let Ty::Val(ValueType::Entity(ty)) = bt else {
            self.err(base.span, format!("`{}` is not an entity", base.name));
            return None;
        };
        let def = self.schema.get(ty);
        let Some((id, a)) = def.attr(&attr.name) else {
            self.err(
                attr.span,
                format!("type `{}` has no attribute `{}`", def.name, attr.name),
            );
            return None;
        };
        Some((b, id, a.arity, a.value_type))
    }

    fn atom_target(&mut self, e: &Expr, scope: &mut Scope) -> Option<(Term, AttrId, ValueType)> {
        let (b, id, arity, vt) = self.attr_access(e, scope)?;
        if arity != Arity::Atom {
            self.err(e.span(), "set attribute used where an atom is expected");
            return None;
        }
        Some((b, id, vt))
    }

    fn set_target(&mut self, e: &Expr, scope: &mut Scope) -> Option<(Term, AttrId, ValueType)> {
        let (b, id, arity, vt) = self.attr_access(e, scope)?;
        if arity != Arity::Set {
            self.err(e.span(), "atom attribute used where a set is expected");
            return None;
        }
        Some((b, id, vt))
    }

    fn name(&mut self, id: &ast::Ident, scope: &Scope) -> Option<(Term, Ty)> {
        if let Some((v, t)) = scope.lookup(&id.name) {
            return Some((Term::Var(v), Ty::Val(ValueType::Entity(t))));
        }
        if let Some(e) = self.universe.entity(&id.name) {
            let ty = self.universe.type_of(e);
            return Some((
                Term::Const(Value::Entity(e.clone())),
                Ty::Val(ValueType::Entity(ty)),
            ));
        }
        self.err(id.span, format!("unknown variable or entity `{}`", id.name));
        None
    }

    fn term(&mut self, e: &Expr, scope: &mut Scope) -> Option<(Term, Ty)> {
        Some(match e {
            Expr::Name(id) => return self.name(id, scope),
            Expr::Attr { .. } => {
                let (b, id, vt) = self.atom_target(e, scope)?;
                (
                    Term::Attr {
                        base: Box::new(b),
                        attr: id,
                    },
                    Ty::Val(vt),
                )
            }
            Expr::Str(s, _) => (Term::Const(Value::text(s)), Ty::Val(ValueType::Text)),
            Expr::Int(n, _) => (Term::Const(Value::Int(*n)), Ty::Val(ValueType::Int)),
            Expr::Bool(b, _) => (Term::Const(Value::Bool(*b)), Ty::Val(ValueType::Bool)),
            Expr::Null(_) => (Term::Const(Value::Null), Ty::Null),
        })
    }

    fn ty_name(&self, t: Ty) -> String {
        match t {
            Ty::Null => "NULL".into(),
            Ty::Val(v) => self.schema.type_name(v),
        }
    }
}
