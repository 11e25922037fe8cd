//! Recursive-descent parser for the read-only Cypher subset.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::CypherError;

/// Clauses and operators outside the subset. Any of these appearing in
/// keyword position rejects the query as unsupported rather than malformed.
const UNSUPPORTED: &[&str] = &[
    "CREATE", "MERGE", "DELETE", "DETACH", "SET", "REMOVE", "OPTIONAL", "WITH", "UNWIND", "CALL",
    "UNION", "FOREACH", "LOAD", "DROP", "SKIP", "STARTS", "ENDS", "IN", "XOR", "EXISTS", "CASE",
    "YIELD",
];

const KEYWORDS: &[&str] = &[
    "MATCH",
    "WHERE",
    "RETURN",
    "DISTINCT",
    "AS",
    "ORDER",
    "BY",
    "ASC",
    "ASCENDING",
    "DESC",
    "DESCENDING",
    "LIMIT",
    "AND",
    "OR",
    "NOT",
    "CONTAINS",
    "IS",
    "NULL",
    "COUNT",
    "TRUE",
    "FALSE",
];

pub fn is_reserved(word: &str) -> bool {
    let upper = word.to_ascii_uppercase();
    KEYWORDS.contains(&upper.as_str()) || UNSUPPORTED.contains(&upper.as_str())
}

pub fn parse(text: &str) -> Result<CypherAst, CypherError> {
    let toks = tokenize(text)?;
    reject_unsupported(&toks)?;
    let mut p = Parser {
        toks,
        i: 0,
        end: text.len(),
        var_pos: HashMap::new(),
    };
    let ast = p.query()?;
    p.validate(&ast)?;
    Ok(ast)
}

fn reject_unsupported(toks: &[Token]) -> Result<(), CypherError> {
    for (k, t) in toks.iter().enumerate() {
        let Tok::Ident(word) = &t.tok else { continue };
        let prev = k.checked_sub(1).map(|j| &toks[j].tok);
        let in_name_position = matches!(prev, Some(Tok::Dot | Tok::Colon))
            || matches!(prev, Some(Tok::Ident(w)) if w.eq_ignore_ascii_case("AS"));
        if !in_name_position && UNSUPPORTED.contains(&word.to_ascii_uppercase().as_str()) {
            return Err(CypherError::UnsupportedFeature(word.to_ascii_uppercase()));
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Ctx {
    allow_count: bool,
    allow_alias: bool,
    allow_var: bool,
}

const WHERE_CTX: Ctx = Ctx {
    allow_count: false,
    allow_alias: false,
    allow_var: false,
};

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Node,
    Rel,
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    end: usize,
    var_pos: HashMap<String, (VarKind, usize)>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.i + n).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map_or(self.end, |t| t.pos)
    }

    fn err<T>(&self, expected: impl Into<String>) -> Result<T, CypherError> {
        Err(CypherError::Syntax {
            position: self.pos(),
            expected: expected.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|t| t.tok.clone());
        self.i += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), CypherError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(what)
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), CypherError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(kw)
        }
    }

    /// Variable name: a non-keyword identifier or a quoted one.
    fn var_name(&mut self) -> Option<String> {
        match self.peek()? {
            Tok::Ident(w) if !is_reserved(w) => {
                let w = w.clone();
                self.i += 1;
                Some(w)
            }
            Tok::Quoted(w) => {
                let w = w.clone();
                self.i += 1;
                Some(w)
            }
            _ => None,
        }
    }

    /// Label, type, property key or alias: any identifier.
    fn any_name(&mut self, what: &str) -> Result<String, CypherError> {
        match self.peek() {
            Some(Tok::Ident(w) | Tok::Quoted(w)) => {
                let w = w.clone();
                self.i += 1;
                Ok(w)
            }
            _ => self.err(what),
        }
    }

    fn query(&mut self) -> Result<CypherAst, CypherError> {
        self.expect_kw("MATCH")?;
        let mut patterns = vec![self.pattern()?];
        while self.eat(&Tok::Comma) {
            patterns.push(self.pattern()?);
        }
        let where_clause = if self.eat_kw("WHERE") {
            Some(self.expr(WHERE_CTX)?)
        } else {
            None
        };
        self.expect_kw("RETURN")?;
        let distinct = self.eat_kw("DISTINCT");
        let mut returns = vec![self.return_item()?];
        while self.eat(&Tok::Comma) {
            returns.push(self.return_item()?);
        }
        let mut order_by = Vec::new();
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            loop {
                let expr = self.expr(Ctx {
                    allow_count: true,
                    allow_alias: true,
                    allow_var: false,
                })?;
                let ascending = if self.eat_kw("DESC") || self.eat_kw("DESCENDING") {
                    false
                } else {
                    self.eat_kw("ASC") || self.eat_kw("ASCENDING") || true
                };
                order_by.push(SortItem { expr, ascending });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let limit = if self.eat_kw("LIMIT") {
            match self.bump() {
                Some(Tok::Int(n)) if n >= 0 => Some(n as u64),
                _ => {
                    self.i -= 1;
                    return self.err("non-negative integer after LIMIT");
                }
            }
        } else {
            None
        };
        self.eat(&Tok::Semi);
        if self.peek().is_some() {
            return self.err("end of query");
        }
        Ok(CypherAst {
            patterns,
            where_clause,
            distinct,
            returns,
            order_by,
            limit,
        })
    }

    fn bind(&mut self, name: &str, kind: VarKind, pos: usize) -> Result<(), CypherError> {
        match self.var_pos.get(name) {
            Some((k, _)) if *k != kind => Err(CypherError::Syntax {
                position: pos,
                expected: format!(
                    "{name} is already bound as a {}",
                    if *k == VarKind::Node {
                        "node"
                    } else {
                        "relationship"
                    }
                ),
            }),
            Some(_) => Ok(()),
            None => {
                self.var_pos.insert(name.to_string(), (kind, pos));
                Ok(())
            }
        }
    }

    fn pattern(&mut self) -> Result<Pattern, CypherError> {
        let start = self.node()?;
        let mut hops = Vec::new();
        while matches!(self.peek(), Some(Tok::Dash))
            || (matches!(self.peek(), Some(Tok::Lt)) && matches!(self.peek_at(1), Some(Tok::Dash)))
        {
            let rel = self.rel()?;
            let node = self.node()?;
            hops.push((rel, node));
        }
        Ok(Pattern { start, hops })
    }

    fn node(&mut self) -> Result<NodePattern, CypherError> {
        self.expect(&Tok::LParen, "(")?;
        let pos = self.pos();
        let var = self.var_name();
        if let Some(v) = &var {
            self.bind(v, VarKind::Node, pos)?;
        }
        let label = if self.eat(&Tok::Colon) {
            Some(self.any_name("label")?)
        } else {
            None
        };
        if matches!(self.peek(), Some(Tok::Colon)) {
            return Err(CypherError::UnsupportedFeature("multiple labels".into()));
        }
        let props = self.prop_map()?;
        self.expect(&Tok::RParen, ")")?;
        Ok(NodePattern { var, label, props })
    }

    fn rel(&mut self) -> Result<RelPattern, CypherError> {
        let incoming = self.eat(&Tok::Lt);
        self.expect(&Tok::Dash, "-")?;
        let (mut var, mut rel_type, mut props) = (None, None, Vec::new());
        if self.eat(&Tok::LBracket) {
            let pos = self.pos();
            var = self.var_name();
            if let Some(v) = &var {
                self.bind(v, VarKind::Rel, pos)?;
            }
            if self.eat(&Tok::Colon) {
                rel_type = Some(self.any_name("relationship type")?);
            }
            match self.peek() {
                Some(Tok::Star) => {
                    return Err(CypherError::UnsupportedFeature(
                        "variable-length path".into(),
                    ))
                }
                Some(Tok::Pipe) => {
                    return Err(CypherError::UnsupportedFeature(
                        "relationship type alternation".into(),
                    ))
                }
                _ => {}
            }
            props = self.prop_map()?;
            self.expect(&Tok::RBracket, "]")?;
        }
        self.expect(&Tok::Dash, "-")?;
        let outgoing = self.eat(&Tok::Gt);
        let direction = match (incoming, outgoing) {
            (false, true) => Direction::Out,
            (true, false) => Direction::In,
            _ => Direction::Both,
        };
        Ok(RelPattern {
            var,
            rel_type,
            props,
            direction,
        })
    }

    fn prop_map(&mut self) -> Result<Vec<(String, Literal)>, CypherError> {
        let mut props = Vec::new();
        if !self.eat(&Tok::LBrace) {
            return Ok(props);
        }
        if self.eat(&Tok::RBrace) {
            return Ok(props);
        }
        loop {
            let key = self.any_name("property key")?;
            self.expect(&Tok::Colon, ":")?;
            let value = self.literal()?.ok_or_else(|| CypherError::Syntax {
                position: self.pos(),
                expected: "text, number or boolean literal".into(),
            })?;
            props.push((key, value));
            if self.eat(&Tok::RBrace) {
                return Ok(props);
            }
            self.expect(&Tok::Comma, ", or }")?;
        }
    }

    fn literal(&mut self) -> Result<Option<Literal>, CypherError> {
        let lit = match self.peek() {
            Some(Tok::Str(s)) => Literal::Text(s.clone()),
            Some(Tok::Int(i)) => Literal::Int(*i),
            Some(Tok::Real(x)) => Literal::Real(*x),
            Some(Tok::Ident(w)) if w.eq_ignore_ascii_case("true") => Literal::Bool(true),
            Some(Tok::Ident(w)) if w.eq_ignore_ascii_case("false") => Literal::Bool(false),
            Some(Tok::Ident(w)) if w.eq_ignore_ascii_case("null") => {
                return Err(CypherError::UnsupportedFeature("NULL literal".into()))
            }
            Some(Tok::Dash) => {
                let neg = match self.peek_at(1) {
                    Some(Tok::Int(i)) => Literal::Int(-i),
                    Some(Tok::Real(x)) => Literal::Real(-x),
                    _ => return Ok(None),
                };
                self.i += 2;
                return Ok(Some(neg));
            }
            _ => return Ok(None),
        };
        self.i += 1;
        Ok(Some(lit))
    }

    fn return_item(&mut self) -> Result<ReturnItem, CypherError> {
        let pos = self.pos();
        let expr = self.expr(Ctx {
            allow_count: true,
            allow_alias: false,
            allow_var: false,
        })?;
        let ok = match &expr {
            Expr::Property { .. } => true,
            Expr::Literal(l) => !matches!(l, Literal::Bool(_)),
            Expr::Count(None) => true,
            Expr::Count(Some(inner)) => matches!(**inner, Expr::Property { .. } | Expr::Var(_)),
            _ => false,
        };
        if !ok {
            return Err(CypherError::UnsupportedFeature(format!(
                "RETURN expression at {pos}: {expr}"
            )));
        }
        let alias = if self.eat_kw("AS") {
            Some(self.any_name("alias")?)
        } else {
            None
        };
        Ok(ReturnItem { expr, alias })
    }

    fn expr(&mut self, ctx: Ctx) -> Result<Expr, CypherError> {
        let mut lhs = self.and_expr(ctx)?;
        while self.eat_kw("OR") {
            let rhs = self.and_expr(ctx)?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self, ctx: Ctx) -> Result<Expr, CypherError> {
        let mut lhs = self.not_expr(ctx)?;
        while self.eat_kw("AND") {
            let rhs = self.not_expr(ctx)?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self, ctx: Ctx) -> Result<Expr, CypherError> {
        if self.eat_kw("NOT") {
            Ok(Expr::Not(Box::new(self.not_expr(ctx)?)))
        } else {
            self.comparison(ctx)
        }
    }

    fn comparison(&mut self, ctx: Ctx) -> Result<Expr, CypherError> {
        let lhs = self.primary(ctx)?;
        let op = match self.peek() {
            Some(Tok::Eq) => Some(CmpOp::Eq),
            Some(Tok::Ne) => Some(CmpOp::Ne),
            Some(Tok::Lt) => Some(CmpOp::Lt),
            Some(Tok::Le) => Some(CmpOp::Le),
            Some(Tok::Gt) => Some(CmpOp::Gt),
            Some(Tok::Ge) => Some(CmpOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.i += 1;
            let rhs = self.primary(ctx)?;
            return Ok(Expr::Compare {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            });
        }
        if self.eat_kw("CONTAINS") {
            let rhs = self.primary(ctx)?;
            return Ok(Expr::Contains {
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            });
        }
        if self.eat_kw("IS") {
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            return Ok(Expr::IsNull {
                expr: Box::new(lhs),
                negated,
            });
        }
        Ok(lhs)
    }

    fn primary(&mut self, ctx: Ctx) -> Result<Expr, CypherError> {
        if let Some(lit) = self.literal()? {
            return Ok(Expr::Literal(lit));
        }
        if self.eat(&Tok::LParen) {
            let e = self.expr(ctx)?;
            self.expect(&Tok::RParen, ")")?;
            return Ok(e);
        }
        if self.at_kw("COUNT") && matches!(self.peek_at(1), Some(Tok::LParen)) {
            if !ctx.allow_count {
                return self.err("expression (COUNT is only allowed in RETURN and ORDER BY)");
            }
            self.i += 2;
            let arg = if self.eat(&Tok::Star) {
                None
            } else {
                Some(Box::new(self.expr(Ctx {
                    allow_var: true,
                    ..WHERE_CTX
                })?))
            };
            self.expect(&Tok::RParen, ")")?;
            return Ok(Expr::Count(arg));
        }
        let name = match self.peek() {
            Some(Tok::Ident(w) | Tok::Quoted(w)) => w.clone(),
            _ => return self.err("expression"),
        };
        self.i += 1;
        if self.eat(&Tok::Dot) {
            let key = self.any_name("property key")?;
            return Ok(Expr::Property { var: name, key });
        }
        if ctx.allow_var {
            return Ok(Expr::Var(name));
        }
        if ctx.allow_alias {
            return Ok(Expr::Alias(name));
        }
        self.err(".")
    }

    fn validate(&self, ast: &CypherAst) -> Result<(), CypherError> {
        let check_vars = |e: &Expr| -> Result<(), CypherError> {
            let mut vars = Vec::new();
            e.variables(&mut vars);
            match vars.into_iter().find(|v| !self.var_pos.contains_key(*v)) {
                Some(v) => Err(CypherError::UnboundVariable(v.to_string())),
                None => Ok(()),
            }
        };
        if let Some(w) = &ast.where_clause {
            check_vars(w)?;
        }
        for r in &ast.returns {
            check_vars(&r.expr)?;
        }
        let aliases: Vec<&str> = ast
            .returns
            .iter()
            .filter_map(|r| r.alias.as_deref())
            .collect();
        let projected_only = ast.distinct || ast.is_aggregating();
        for s in &ast.order_by {
            if let Expr::Alias(name) = &s.expr {
                if aliases.contains(&name.as_str()) {
                    continue;
                }
                if self.var_pos.contains_key(name) {
                    return Err(CypherError::Syntax {
                        position: 0,
                        expected: format!("property access on {name} in ORDER BY"),
                    });
                }
                return Err(CypherError::UnboundVariable(name.clone()));
            }
            check_vars(&s.expr)?;
            let is_column = ast.returns.iter().any(|r| r.expr == s.expr);
            if !is_column && (projected_only || s.expr.contains_count()) {
                return Err(CypherError::Syntax {
                    position: 0,
                    expected: format!(
                        "ORDER BY key {} to be a returned column when DISTINCT or COUNT is used",
                        s.expr
                    ),
                });
            }
            if !is_column && !matches!(s.expr, Expr::Property { .. } | Expr::Literal(_)) {
                return Err(CypherError::UnsupportedFeature(format!(
                    "ORDER BY expression {}",
                    s.expr
                )));
            }
        }
        Ok(())
    }
}
