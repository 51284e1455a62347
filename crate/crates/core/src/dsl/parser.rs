//! Recursive-descent parser for domain and problem files.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::diag::{ParseError, Source};
use super::lexer::{tokenize, Tok, Token};
use crate::scalar::{parse_rational, Rational};

const PRIMITIVE_TYPES: [&str; 3] = ["bool", "int", "string"];

pub fn parse_domain(text: &str) -> Result<DomainAst, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut ast = DomainAst::default();
    while !p.at_eof() {
        ast.items.push(p.domain_item()?);
    }
    check_domain(&ast)?;
    Ok(ast)
}

/// Parses a problem file and checks it against the domain schema.
pub fn parse_problem(text: &str, schema: &DomainAst) -> Result<ProblemAst, ParseError> {
    problem(text, schema).map_err(|e| e.in_source(Source::Problem))
}

fn problem(text: &str, schema: &DomainAst) -> Result<ProblemAst, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut ast = ProblemAst::default();
    while !p.at_eof() {
        ast.items.push(p.problem_item()?);
    }
    check_problem(&ast, schema)?;
    Ok(ast)
}

/// Parses a `;`-separated task list such as `Transport(C1,P21); Transport(C2,P22)`.
pub fn parse_goal(text: &str) -> Result<Vec<TaskInvocation>, ParseError> {
    goal(text).map_err(|e| e.in_source(Source::Goal))
}

fn goal(text: &str) -> Result<Vec<TaskInvocation>, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.invocation()?);
        if !p.eat(&Tok::Semi) {
            break;
        }
    }
    p.expect(&Tok::Eof)?;
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        Err(ParseError::single(
            self.span(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        ))
    }

    fn expect(&mut self, tok: &Tok) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(Ident { name, span })
            }
            _ => self.unexpected("identifier"),
        }
    }

    fn semi_opt(&mut self) {
        self.eat(&Tok::Semi);
    }

    // ---- domain -------------------------------------------------------

    fn domain_item(&mut self) -> PResult<DomainItem> {
        if self.eat_kw("define") {
            if self.eat_kw("entityType") {
                let mut names = vec![self.ident()?];
                while self.eat(&Tok::Comma) {
                    names.push(self.ident()?);
                }
                self.expect(&Tok::Semi)?;
                return Ok(DomainItem::EntityTypes(names));
            }
            if self.eat_kw("entityAttributes") {
                let entity = self.ident()?;
                self.expect(&Tok::LBrace)?;
                let mut attributes = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    attributes.push(self.attribute()?);
                }
                self.semi_opt();
                return Ok(DomainItem::Attributes { entity, attributes });
            }
            return self.unexpected("`entityType` or `entityAttributes`");
        }
        if self.eat_kw("method") {
            return Ok(DomainItem::Method(self.method()?));
        }
        if self.eat_kw("action") {
            return Ok(DomainItem::Operator(self.operator()?));
        }
        self.unexpected("`define`, `method` or `action`")
    }

    fn attribute(&mut self) -> PResult<AttributeDecl> {
        let mutability = if self.eat_kw("static") {
            Mutability::Static
        } else if self.eat_kw("dynamic") {
            Mutability::Dynamic
        } else {
            return self.unexpected("`static` or `dynamic`");
        };
        let arity = if self.eat_kw("atom") {
            Arity::Atom
        } else if self.eat_kw("set") {
            Arity::Set
        } else {
            return self.unexpected("`atom` or `set`");
        };
        let value_type = self.ident()?;
        let name = self.ident()?;
        self.expect(&Tok::Semi)?;
        Ok(AttributeDecl {
            name,
            mutability,
            arity,
            value_type,
        })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(&Tok::LParen)?;
        let mut out = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let ty = self.ident()?;
                let name = self.ident()?;
                out.push(Param { ty, name });
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(out)
    }

    fn method(&mut self) -> PResult<MethodDecl> {
        let name = self.ident()?;
        let params = self.params()?;
        self.expect(&Tok::LBrace)?;
        let mut empty = None;
        let mut cases = Vec::new();
        loop {
            let span = self.span();
            if self.eat(&Tok::RBrace) {
                break;
            }
            if self.eat_kw("empty") {
                if empty.is_some() {
                    return Err(ParseError::single(span, "duplicate `empty` condition"));
                }
                self.expect(&Tok::LBrace)?;
                empty = Some(self.conditions()?);
                self.semi_opt();
            } else if self.eat(&Tok::LBrace) {
                let mut preconditions = Vec::new();
                let mut body = None;
                loop {
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    if self.eat_kw("preconditions") {
                        self.expect(&Tok::LBrace)?;
                        preconditions = self.conditions()?;
                        self.semi_opt();
                    } else if self.eat_kw("subtasks") {
                        self.expect(&Tok::LBrace)?;
                        body = Some(self.body()?);
                        self.semi_opt();
                    } else {
                        return self.unexpected("`preconditions`, `subtasks` or `}`");
                    }
                }
                self.semi_opt();
                cases.push(MethodCase {
                    preconditions,
                    body: body.unwrap_or_default(),
                    span,
                });
            } else {
                return self.unexpected("`empty`, `{` or `}`");
            }
        }
        self.semi_opt();
        Ok(MethodDecl {
            name,
            params,
            empty,
            cases,
        })
    }

    fn operator(&mut self) -> PResult<OperatorDecl> {
        let name = self.ident()?;
        let params_span = self.span();
        let params = self.params()?;
        if params.is_empty() {
            return Err(ParseError::single(
                params_span,
                format!(
                    "action `{}` needs at least one parameter (the executing agent)",
                    name.name
                ),
            ));
        }
        self.expect(&Tok::LBrace)?;
        let mut op = OperatorDecl {
            name,
            params,
            preconditions: Vec::new(),
            effects: Vec::new(),
            cost: None,
            duration: None,
        };
        loop {
            if self.eat(&Tok::RBrace) {
                break;
            }
            if self.eat_kw("preconditions") {
                self.expect(&Tok::LBrace)?;
                op.preconditions = self.conditions()?;
            } else if self.eat_kw("effects") {
                self.expect(&Tok::LBrace)?;
                op.effects = self.effects()?;
            } else if self.eat_kw("cost") {
                self.expect(&Tok::LBrace)?;
                op.cost = Some(self.call()?);
                self.expect(&Tok::RBrace)?;
            } else if self.eat_kw("duration") {
                self.expect(&Tok::LBrace)?;
                op.duration = Some(self.call()?);
                self.expect(&Tok::RBrace)?;
            } else {
                return self.unexpected("`preconditions`, `effects`, `cost`, `duration` or `}`");
            }
            self.semi_opt();
        }
        self.semi_opt();
        Ok(op)
    }

    fn call(&mut self) -> PResult<Call> {
        let name = self.ident()?;
        let args = self.args()?;
        Ok(Call { name, args })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(&Tok::LParen)?;
        let mut out = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                out.push(self.expr()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(out)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s, span))
            }
            Tok::Int(n) => {
                self.advance();
                Ok(Expr::Int(n, span))
            }
            Tok::Minus => {
                self.advance();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.advance();
                        Ok(Expr::Int(-n, span))
                    }
                    _ => self.unexpected("integer"),
                }
            }
            Tok::Ident(name) => {
                self.advance();
                match name.as_str() {
                    "NULL" => return Ok(Expr::Null(span)),
                    "true" => return Ok(Expr::Bool(true, span)),
                    "false" => return Ok(Expr::Bool(false, span)),
                    _ => {}
                }
                let base = Ident { name, span };
                if self.eat(&Tok::Dot) {
                    let attr = self.ident()?;
                    Ok(Expr::Attr { base, attr })
                } else {
                    Ok(Expr::Name(base))
                }
            }
            _ => self.unexpected("expression"),
        }
    }

    /// Statements up to and including the closing `}`.
    fn conditions(&mut self) -> PResult<Vec<Condition>> {
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            out.push(self.condition()?);
        }
        Ok(out)
    }

    fn quantifier_head(&mut self) -> PResult<(Ident, Ident, Vec<Condition>)> {
        self.expect(&Tok::LParen)?;
        let ty = self.ident()?;
        let var = self.ident()?;
        self.expect(&Tok::Comma)?;
        self.expect(&Tok::LBrace)?;
        let filter = self.conditions()?;
        self.expect(&Tok::Comma)?;
        self.expect(&Tok::LBrace)?;
        Ok((ty, var, filter))
    }

    fn condition(&mut self) -> PResult<Condition> {
        let span = self.span();
        if self.is_kw("EXIST") || self.is_kw("FORALL") {
            let exist = self.is_kw("EXIST");
            self.advance();
            let (ty, var, filter) = self.quantifier_head()?;
            let body = self.conditions()?;
            self.expect(&Tok::RParen)?;
            self.semi_opt();
            let q = Quantified {
                ty,
                var,
                filter,
                body,
                span,
            };
            return Ok(if exist {
                Condition::Exist(q)
            } else {
                Condition::Forall(q)
            });
        }
        if self.is_kw("IF") {
            return Err(ParseError::single(span, "IF is only allowed in effects"));
        }
        if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::LParen) {
            let call = self.call()?;
            self.expect(&Tok::Semi)?;
            return Ok(Condition::Call(call));
        }
        let lhs = self.expr()?;
        let cond = match self.peek() {
            Tok::EqEq | Tok::NotEq => {
                let op = if self.eat(&Tok::EqEq) {
                    CmpOp::Eq
                } else {
                    self.advance();
                    CmpOp::Ne
                };
                let rhs = self.expr()?;
                Condition::Compare { lhs, op, rhs }
            }
            Tok::In | Tok::NotIn => {
                let negated = matches!(self.advance().tok, Tok::NotIn);
                let set = self.expr()?;
                if !matches!(set, Expr::Attr { .. }) {
                    return Err(ParseError::single(
                        set.span(),
                        "right-hand side of a membership test must be an attribute access",
                    ));
                }
                Condition::Member {
                    elem: lhs,
                    set,
                    negated,
                }
            }
            Tok::Assign | Tok::AddTo | Tok::RemoveFrom => {
                return Err(ParseError::single(
                    self.span(),
                    "assignment is only allowed in effects",
                ));
            }
            _ => return self.unexpected("`==`, `!=`, `>>` or `!>>`"),
        };
        self.expect(&Tok::Semi)?;
        Ok(cond)
    }

    fn effects(&mut self) -> PResult<Vec<Effect>> {
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            out.push(self.effect()?);
        }
        Ok(out)
    }

    fn effect(&mut self) -> PResult<Effect> {
        let span = self.span();
        if self.is_kw("EXIST") {
            return Err(ParseError::single(
                span,
                "EXIST is only allowed in preconditions",
            ));
        }
        if self.eat_kw("IF") {
            self.expect(&Tok::LBrace)?;
            let guard = self.conditions()?;
            self.expect(&Tok::LBrace)?;
            let then = self.effects()?;
            self.semi_opt();
            return Ok(Effect::If { guard, then, span });
        }
        if self.eat_kw("FORALL") {
            let (ty, var, filter) = self.quantifier_head()?;
            let body = self.effects()?;
            self.expect(&Tok::RParen)?;
            self.semi_opt();
            return Ok(Effect::Forall(Quantified {
                ty,
                var,
                filter,
                body,
                span,
            }));
        }
        let target = self.expr()?;
        if !matches!(target, Expr::Attr { .. }) {
            return Err(ParseError::single(
                target.span(),
                "effect target must be an attribute access",
            ));
        }
        let eff = match self.advance().tok {
            Tok::Assign => Effect::Assign {
                target,
                value: self.expr()?,
            },
            Tok::AddTo => Effect::Set {
                target,
                op: SetOp::Add,
                value: self.expr()?,
            },
            Tok::RemoveFrom => Effect::Set {
                target,
                op: SetOp::Remove,
                value: self.expr()?,
            },
            _ => {
                self.pos -= 1;
                return self.unexpected("`=`, `<<=` or `=>>`");
            }
        };
        self.expect(&Tok::Semi)?;
        Ok(eff)
    }

    fn body(&mut self) -> PResult<MethodBody> {
        let mut body = MethodBody::default();
        while !self.eat(&Tok::RBrace) {
            let span = self.span();
            match self.peek().clone() {
                Tok::Int(label) => {
                    self.advance();
                    if label <= 0 || label > u32::MAX as i64 {
                        return Err(ParseError::single(
                            span,
                            "subtask labels must be positive integers",
                        ));
                    }
                    self.expect(&Tok::Colon)?;
                    let task = self.invocation()?;
                    let mut predecessors = Vec::new();
                    while self.eat(&Tok::Gt) {
                        loop {
                            let s = self.span();
                            match self.advance().tok {
                                Tok::Int(n) if n > 0 && n <= u32::MAX as i64 => {
                                    predecessors.push(n as u32)
                                }
                                _ => {
                                    return Err(ParseError::single(
                                        s,
                                        "expected a subtask label after `>`",
                                    ))
                                }
                            }
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(&Tok::Semi)?;
                    body.subtasks.push(SubtaskDecl {
                        label: label as u32,
                        task,
                        predecessors,
                        span,
                    });
                }
                Tok::Ident(_) => body.selectors.push(self.selector()?),
                _ => return self.unexpected("selector, labelled subtask or `}`"),
            }
        }
        Ok(body)
    }

    fn selector(&mut self) -> PResult<SelectorDecl> {
        let var = self.ident()?;
        self.expect(&Tok::Assign)?;
        let kind = if self.eat_kw("SELECT") {
            SelectKind::Select
        } else if self.eat_kw("SELECTORDERED") {
            SelectKind::SelectOrdered
        } else if self.eat_kw("SELECTONCE") {
            SelectKind::SelectOnce
        } else {
            return self.unexpected("`SELECT`, `SELECTORDERED` or `SELECTONCE`");
        };
        self.expect(&Tok::LParen)?;
        let entity_type = self.ident()?;
        self.expect(&Tok::Comma)?;
        self.expect(&Tok::LBrace)?;
        let filter = self.conditions()?;
        let (mut ordering, mut direction) = (None, None);
        if kind == SelectKind::SelectOrdered {
            self.expect(&Tok::Comma)?;
            ordering = Some(self.call()?);
            self.expect(&Tok::Comma)?;
            direction = Some(match self.advance().tok {
                Tok::Lt => Direction::Descending,
                Tok::Gt => Direction::Ascending,
                _ => {
                    self.pos -= 1;
                    return self.unexpected("`<` (descending) or `>` (ascending)");
                }
            });
        }
        self.expect(&Tok::RParen)?;
        self.expect(&Tok::Semi)?;
        Ok(SelectorDecl {
            var,
            kind,
            entity_type,
            filter,
            ordering,
            direction,
        })
    }

    fn invocation(&mut self) -> PResult<TaskInvocation> {
        let name = self.ident()?;
        let args = self.args()?;
        Ok(TaskInvocation { name, args })
    }

    // ---- problem ------------------------------------------------------

    fn problem_item(&mut self) -> PResult<ProblemItem> {
        if self.is_kw("table") && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.advance();
            return Ok(ProblemItem::Table(self.table()?));
        }
        if self.is_kw("goal") && matches!(self.peek_at(1), Tok::LBrace) {
            self.advance();
            self.advance();
            let mut goal = Vec::new();
            while !self.eat(&Tok::RBrace) {
                goal.push(self.invocation()?);
                self.expect(&Tok::Semi)?;
            }
            self.semi_opt();
            return Ok(ProblemItem::Goal(goal));
        }
        let first = self.ident()?;
        if self.eat(&Tok::Dot) {
            let attr = self.ident()?;
            let op = match self.advance().tok {
                Tok::Assign => AssignOp::Set,
                Tok::AddTo => AssignOp::Add,
                Tok::RemoveFrom => AssignOp::Remove,
                _ => {
                    self.pos -= 1;
                    return self.unexpected("`=`, `<<=` or `=>>`");
                }
            };
            let value = self.expr()?;
            self.expect(&Tok::Semi)?;
            return Ok(ProblemItem::Assign {
                entity: first,
                attr,
                op,
                value,
            });
        }
        let mut names = vec![first];
        while self.eat(&Tok::Comma) {
            names.push(self.ident()?);
        }
        self.expect(&Tok::Assign)?;
        self.expect_kw("new")?;
        let ty = self.ident()?;
        self.expect(&Tok::Semi)?;
        Ok(ProblemItem::New { names, ty })
    }

    fn table(&mut self) -> PResult<TableDecl> {
        let name = self.ident()?;
        self.expect(&Tok::LParen)?;
        let mut key_types = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                key_types.push(self.ident()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        self.expect(&Tok::LBrace)?;
        let mut entries = Vec::new();
        let mut default = None;
        while !self.eat(&Tok::RBrace) {
            if self.eat_kw("default") {
                self.expect(&Tok::Assign)?;
                default = Some(self.number()?);
            } else {
                let span = self.span();
                let key = self.args()?;
                if key.len() != key_types.len() {
                    return Err(ParseError::single(
                        span,
                        format!(
                            "table `{}` expects {} key values, found {}",
                            name.name,
                            key_types.len(),
                            key.len()
                        ),
                    ));
                }
                self.expect(&Tok::Assign)?;
                entries.push(TableEntry {
                    key,
                    value: self.number()?,
                });
            }
            self.expect(&Tok::Semi)?;
        }
        self.semi_opt();
        Ok(TableDecl {
            name,
            key_types,
            entries,
            default,
        })
    }

    fn number(&mut self) -> PResult<Rational> {
        let span = self.span();
        let negative = self.eat(&Tok::Minus);
        let text = match self.advance().tok {
            Tok::Int(n) => {
                if self.eat(&Tok::Slash) {
                    match self.advance().tok {
                        Tok::Int(d) => format!("{n}/{d}"),
                        _ => return Err(ParseError::single(span, "expected denominator")),
                    }
                } else {
                    n.to_string()
                }
            }
            Tok::Decimal(s) => s,
            _ => return Err(ParseError::single(span, "expected a number")),
        };
        let r = parse_rational(&text).map_err(|e| ParseError::single(span, e.to_string()))?;
        Ok(if negative { -r } else { r })
    }
}

// ---- structural checks --------------------------------------------------

fn check_domain(ast: &DomainAst) -> PResult<()> {
    let mut types: HashSet<String> = HashSet::from([AGENT.to_string()]);
    for item in &ast.items {
        if let DomainItem::EntityTypes(names) = item {
            for n in names {
                if !types.insert(n.name.clone()) {
                    return Err(ParseError::single(
                        n.span,
                        format!("duplicate entity type `{}`", n.name),
                    ));
                }
            }
        }
    }
    let known_type = |id: &Ident| -> PResult<()> {
        if types.contains(&id.name) {
            Ok(())
        } else {
            Err(ParseError::single(
                id.span,
                format!("unknown type `{}`", id.name),
            ))
        }
    };
    let mut attrs: HashMap<String, HashSet<String>> = HashMap::new();
    for item in &ast.items {
        if let DomainItem::Attributes { entity, attributes } = item {
            known_type(entity)?;
            let seen = attrs.entry(entity.name.clone()).or_default();
            for a in attributes {
                if !PRIMITIVE_TYPES.contains(&a.value_type.name.as_str()) {
                    known_type(&a.value_type)?;
                }
                if !seen.insert(a.name.name.clone()) {
                    return Err(ParseError::single(
                        a.name.span,
                        format!("duplicate attribute `{}` on `{}`", a.name.name, entity.name),
                    ));
                }
            }
        }
    }
    let mut operators = HashSet::new();
    for op in ast.operators() {
        if !operators.insert(op.name.name.clone()) {
            return Err(ParseError::single(
                op.name.span,
                format!("duplicate action `{}`", op.name.name),
            ));
        }
    }
    let mut signatures: HashMap<&str, usize> = HashMap::new();
    for m in ast.methods() {
        if operators.contains(&m.name.name) {
            return Err(ParseError::single(
                m.name.span,
                format!("method `{}` has the same name as an action", m.name.name),
            ));
        }
        let arity = signatures.entry(&m.name.name).or_insert(m.params.len());
        if *arity != m.params.len() {
            return Err(ParseError::single(
                m.name.span,
                format!(
                    "method `{}` redeclared with a different number of parameters",
                    m.name.name
                ),
            ));
        }
    }

    let check_params = |params: &[Param]| -> PResult<()> {
        let mut seen = HashSet::new();
        for p in params {
            known_type(&p.ty)?;
            if !seen.insert(&p.name.name) {
                return Err(ParseError::single(
                    p.name.span,
                    format!("duplicate parameter `{}`", p.name.name),
                ));
            }
        }
        Ok(())
    };
    for op in ast.operators() {
        check_params(&op.params)?;
        walk_conditions(&op.preconditions, &known_type)?;
        walk_effects(&op.effects, &known_type)?;
    }
    for m in ast.methods() {
        check_params(&m.params)?;
        if let Some(e) = &m.empty {
            walk_conditions(e, &known_type)?;
        }
        for case in &m.cases {
            walk_conditions(&case.preconditions, &known_type)?;
            for s in &case.body.selectors {
                known_type(&s.entity_type)?;
                walk_conditions(&s.filter, &known_type)?;
            }
            check_labels(&case.body)?;
        }
    }
    Ok(())
}

fn walk_conditions(conds: &[Condition], known_type: &dyn Fn(&Ident) -> PResult<()>) -> PResult<()> {
    for c in conds {
        if let Condition::Exist(q) | Condition::Forall(q) = c {
            known_type(&q.ty)?;
            walk_conditions(&q.filter, known_type)?;
            walk_conditions(&q.body, known_type)?;
        }
    }
    Ok(())
}

fn walk_effects(effects: &[Effect], known_type: &dyn Fn(&Ident) -> PResult<()>) -> PResult<()> {
    for e in effects {
        match e {
            Effect::If { guard, then, .. } => {
                walk_conditions(guard, known_type)?;
                walk_effects(then, known_type)?;
            }
            Effect::Forall(q) => {
                known_type(&q.ty)?;
                walk_conditions(&q.filter, known_type)?;
                walk_effects(&q.body, known_type)?;
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_labels(body: &MethodBody) -> PResult<()> {
    let mut labels = BTreeSet::new();
    for s in &body.subtasks {
        if !labels.insert(s.label) {
            return Err(ParseError::single(
                s.span,
                format!("duplicate subtask label {}", s.label),
            ));
        }
    }
    for s in &body.subtasks {
        for p in &s.predecessors {
            if !labels.contains(p) {
                return Err(ParseError::single(
                    s.span,
                    format!("ordering constraint references unknown label {p}"),
                ));
            }
        }
    }
    // Kahn's algorithm over the predecessor relation.
    let mut indeg: BTreeMap<u32, usize> = body
        .subtasks
        .iter()
        .map(|s| (s.label, s.predecessors.len()))
        .collect();
    let mut ready: Vec<u32> = indeg
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(l, _)| *l)
        .collect();
    let mut seen = 0;
    while let Some(l) = ready.pop() {
        seen += 1;
        for s in &body.subtasks {
            if s.predecessors.contains(&l) {
                let d = indeg.get_mut(&s.label).expect("label");
                *d -= 1;
                if *d == 0 {
                    ready.push(s.label);
                }
            }
        }
    }
    if seen != body.subtasks.len() {
        let span = body.subtasks.first().map(|s| s.span).unwrap_or_default();
        return Err(ParseError::single(
            span,
            "ordering constraints form a cycle",
        ));
    }
    Ok(())
}

fn check_problem(ast: &ProblemAst, schema: &DomainAst) -> PResult<()> {
    let types = schema.entity_types();
    let mut entity_types: HashMap<&str, &EntityTypeDecl> = HashMap::new();
    for (name, ty) in ast.entities() {
        let Some(decl) = types.iter().find(|t| t.name == ty.name) else {
            return Err(ParseError::single(
                ty.span,
                format!("`new` of unknown type `{}`", ty.name),
            ));
        };
        if entity_types.insert(&name.name, decl).is_some() {
            return Err(ParseError::single(
                name.span,
                format!("entity `{}` declared twice", name.name),
            ));
        }
    }
    let value_type_of = |e: &Expr| -> Option<String> {
        match e {
            Expr::Name(id) => entity_types.get(id.name.as_str()).map(|t| t.name.clone()),
            Expr::Str(..) => Some("string".into()),
            Expr::Int(..) => Some("int".into()),
            Expr::Bool(..) => Some("bool".into()),
            Expr::Null(_) | Expr::Attr { .. } => None,
        }
    };
    for item in &ast.items {
        let ProblemItem::Assign {
            entity,
            attr,
            op,
            value,
        } = item
        else {
            continue;
        };
        let Some(decl) = entity_types.get(entity.name.as_str()) else {
            return Err(ParseError::single(
                entity.span,
                format!("unknown entity `{}`", entity.name),
            ));
        };
        let Some(a) = decl.attributes.iter().find(|a| a.name.name == attr.name) else {
            return Err(ParseError::single(
                attr.span,
                format!("type `{}` has no attribute `{}`", decl.name, attr.name),
            ));
        };
        match (a.arity, op) {
            (Arity::Atom, AssignOp::Set) | (Arity::Set, AssignOp::Add | AssignOp::Remove) => {}
            (Arity::Atom, _) => {
                return Err(ParseError::single(
                    attr.span,
                    format!("`{}` is an atom attribute; use `=`", attr.name),
                ));
            }
            (Arity::Set, AssignOp::Set) => {
                return Err(ParseError::single(
                    attr.span,
                    format!("`{}` is a set attribute; use `<<=` or `=>>`", attr.name),
                ));
            }
        }
        if let Expr::Attr { base, .. } = value {
            return Err(ParseError::single(
                base.span,
                "initial values must be literals or entity names",
            ));
        }
        if let Expr::Name(id) = value {
            if !entity_types.contains_key(id.name.as_str()) {
                return Err(ParseError::single(
                    id.span,
                    format!("unknown entity `{}`", id.name),
                ));
            }
        }
        if matches!(value, Expr::Null(_)) {
            if a.arity == Arity::Set {
                return Err(ParseError::single(
                    value.span(),
                    "NULL cannot be a set element",
                ));
            }
            continue;
        }
        let found = value_type_of(value).unwrap_or_default();
        if found != a.value_type.name {
            return Err(ParseError::single(
                value.span(),
                format!(
                    "type mismatch: `{}.{}` expects {}, found {}",
                    entity.name, attr.name, a.value_type.name, found
                ),
            ));
        }
    }
    for t in ast.tables() {
        for k in &t.key_types {
            if !PRIMITIVE_TYPES.contains(&k.name.as_str())
                && !types.iter().any(|d| d.name == k.name)
            {
                return Err(ParseError::single(
                    k.span,
                    format!("unknown type `{}`", k.name),
                ));
            }
        }
        for e in &t.entries {
            for (v, k) in e.key.iter().zip(&t.key_types) {
                let found = value_type_of(v);
                if found.as_deref() != Some(k.name.as_str()) {
                    return Err(ParseError::single(
                        v.span(),
                        format!("table `{}` key expects {}", t.name.name, k.name),
                    ));
                }
            }
        }
    }
    for g in ast.goal() {
        for a in &g.args {
            if let Expr::Name(id) = a {
                if !entity_types.contains_key(id.name.as_str()) {
                    return Err(ParseError::single(
                        id.span,
                        format!("unknown entity `{}`", id.name),
                    ));
                }
            } else if matches!(a, Expr::Attr { .. }) {
                return Err(ParseError::single(
                    a.span(),
                    "goal arguments must be ground",
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENTITIES: &str = include_str!("../../tests/data/entities.hatp");
    const STATE: &str = include_str!("../../tests/data/state.hatpp");
    const TRANSPORT: &str = include_str!("../../tests/data/transport.hatp");

    #[test]
    fn entity_types_and_attributes() {
        let ast = parse_domain(ENTITIES).unwrap();
        let types = ast.entity_types();
        assert_eq!(types.len(), 5);
        let agent = &types[0];
        assert_eq!(agent.name, "Agent");
        let names: Vec<_> = agent
            .attributes
            .iter()
            .map(|a| a.name.name.as_str())
            .collect();
        assert_eq!(names, ["type", "attached", "at", "carry", "loading"]);
    }

    #[test]
    fn empty_domain_has_agent_only() {
        let ast = parse_domain("").unwrap();
        let types = ast.entity_types();
        assert_eq!(types.len(), 1);
        assert_eq!(types[0].name, "Agent");
        assert!(types[0].attributes.is_empty());
    }

    #[test]
    fn transport_method_shape() {
        let ast = parse_domain(TRANSPORT).unwrap();
        let m = ast.methods_for("Transport").next().unwrap();
        assert!(m.empty.is_some());
        assert_eq!(m.cases.len(), 1);
        let case = &m.cases[0];
        assert_eq!(case.preconditions.len(), 1);
        assert!(matches!(case.preconditions[0], Condition::Exist(_)));
        assert_eq!(case.body.selectors.len(), 4);
        assert_eq!(case.body.selectors[1].kind, SelectKind::SelectOrdered);
        assert_eq!(
            case.body.selectors[1].direction,
            Some(Direction::Descending)
        );
        let chain: Vec<_> = case
            .body
            .subtasks
            .iter()
            .map(|s| (s.label, s.predecessors.clone()))
            .collect();
        assert_eq!(
            chain,
            vec![
                (1, vec![]),
                (2, vec![1]),
                (3, vec![2]),
                (4, vec![3]),
                (5, vec![4])
            ]
        );
    }

    #[test]
    fn initial_state_problem() {
        let schema = parse_domain(ENTITIES).unwrap();
        let p = parse_problem(STATE, &schema).unwrap();
        assert_eq!(p.entities().len(), 11);
        assert!(p.items.iter().any(|i| matches!(i,
            ProblemItem::Assign { entity, attr, op: AssignOp::Set, value: Expr::Name(v) }
                if entity.name == "K1" && attr.name == "attached" && v.name == "L1")));
        assert!(p.items.iter().any(|i| matches!(i,
            ProblemItem::Assign { entity, attr, op: AssignOp::Add, value: Expr::Name(v) }
                if entity.name == "L1" && attr.name == "adjacent" && v.name == "L2")));
    }

    #[test]
    fn type_mismatch_in_problem() {
        let schema = parse_domain(ENTITIES).unwrap();
        let err =
            parse_problem("R1 = new Agent; P11 = new Pile; R1.at = P11;", &schema).unwrap_err();
        assert!(err.to_string().contains("type mismatch"), "{err}");
        assert_eq!(err.diagnostics()[0].span.col, 41);
    }

    #[test]
    fn problem_errors() {
        let schema = parse_domain(ENTITIES).unwrap();
        assert!(parse_problem("X = new Robot;", &schema)
            .unwrap_err()
            .to_string()
            .contains("unknown type"));
        assert!(parse_problem("R1 = new Agent; R1.speed = 3;", &schema)
            .unwrap_err()
            .to_string()
            .contains("no attribute"));
        assert!(parse_problem("R1 = new Agent; R1 = new Agent;", &schema)
            .unwrap_err()
            .to_string()
            .contains("declared twice"));
    }

    #[test]
    fn goal_clause() {
        let goal = parse_goal("Transport(C1,P21); Transport(C2,P22)").unwrap();
        assert_eq!(goal.len(), 2);
        assert_eq!(goal[1].name.name, "Transport");
        assert!(parse_goal("").unwrap().is_empty());
    }

    #[test]
    fn domain_errors() {
        let bad_label = "action A(Agent X) {} method M(Agent X) { { subtasks { 1: A(X)>7; }; }; }";
        assert!(parse_domain(bad_label)
            .unwrap_err()
            .to_string()
            .contains("unknown label 7"));

        let cycle =
            "action A(Agent X) {} method M(Agent X) { { subtasks { 1: A(X)>2; 2: A(X)>1; }; }; }";
        assert!(parse_domain(cycle)
            .unwrap_err()
            .to_string()
            .contains("cycle"));

        let exist_in_effects =
            "action A(Agent X) { effects { EXIST(Agent Y, {Y == X;}, {Y == X;}) }; }";
        assert!(parse_domain(exist_in_effects)
            .unwrap_err()
            .to_string()
            .contains("EXIST"));

        let unknown_type = "action A(Robot X) {}";
        assert!(parse_domain(unknown_type)
            .unwrap_err()
            .to_string()
            .contains("unknown type `Robot`"));

        assert!(parse_domain("action A() {}")
            .unwrap_err()
            .to_string()
            .contains("at least one parameter"));
        assert!(parse_domain("action A(Agent X) {} action A(Agent Y) {}")
            .unwrap_err()
            .to_string()
            .contains("duplicate action"));
        assert!(parse_domain(
            "define entityAttributes Agent { static atom int a; dynamic atom int a; }"
        )
        .unwrap_err()
        .to_string()
        .contains("duplicate attribute"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_domain("define entityType A;\n  define oops").unwrap_err();
        let d = &err.diagnostics()[0];
        assert_eq!((d.span.line, d.span.col), (2, 10));
        assert!(d.message.contains("`oops`"));
    }
}
