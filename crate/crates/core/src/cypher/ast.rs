use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Text(String),
    Int(i64),
    Real(f64),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `-[]->`
    Out,
    /// `<-[]-`
    In,
    /// `-[]-`
    Both,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodePattern {
    pub var: Option<String>,
    pub label: Option<String>,
    pub props: Vec<(String, Literal)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelPattern {
    pub var: Option<String>,
    pub rel_type: Option<String>,
    pub props: Vec<(String, Literal)>,
    pub direction: Direction,
}

/// A linear chain `(a)-[r]->(b)<-[s]-(c)...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub start: NodePattern,
    pub hops: Vec<(RelPattern, NodePattern)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Property {
        var: String,
        key: String,
    },
    Literal(Literal),
    Compare {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Contains {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    /// `COUNT(*)` when the argument is `None`.
    Count(Option<Box<Expr>>),
    /// Reference to a RETURN alias; only valid in ORDER BY.
    Alias(String),
    /// Bare variable; only valid as the argument of COUNT.
    Var(String),
}

impl Expr {
    pub fn contains_count(&self) -> bool {
        match self {
            Expr::Count(_) => true,
            Expr::Compare { lhs, rhs, .. } | Expr::Contains { lhs, rhs } => {
                lhs.contains_count() || rhs.contains_count()
            }
            Expr::And(a, b) | Expr::Or(a, b) => a.contains_count() || b.contains_count(),
            Expr::IsNull { expr, .. } | Expr::Not(expr) => expr.contains_count(),
            Expr::Property { .. } | Expr::Literal(_) | Expr::Alias(_) | Expr::Var(_) => false,
        }
    }

    /// Variables referenced by property accesses.
    pub fn variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Property { var, .. } | Expr::Var(var) => out.push(var),
            Expr::Compare { lhs, rhs, .. } | Expr::Contains { lhs, rhs } => {
                lhs.variables(out);
                rhs.variables(out);
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.variables(out);
                b.variables(out);
            }
            Expr::IsNull { expr, .. } | Expr::Not(expr) => expr.variables(out),
            Expr::Count(Some(e)) => e.variables(out),
            Expr::Count(None) | Expr::Literal(_) | Expr::Alias(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

impl ReturnItem {
    /// Column header: the alias, or the expression as written canonically.
    pub fn column_name(&self) -> String {
        self.alias.clone().unwrap_or_else(|| self.expr.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortItem {
    pub expr: Expr,
    pub ascending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CypherAst {
    pub patterns: Vec<Pattern>,
    pub where_clause: Option<Expr>,
    pub distinct: bool,
    pub returns: Vec<ReturnItem>,
    pub order_by: Vec<SortItem>,
    pub limit: Option<u64>,
}

impl CypherAst {
    pub fn columns(&self) -> Vec<String> {
        self.returns.iter().map(ReturnItem::column_name).collect()
    }

    pub fn is_aggregating(&self) -> bool {
        self.returns.iter().any(|r| r.expr.contains_count())
    }
}

// Rendering produces text the parser accepts and maps back to an equal AST.

fn write_ident(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !super::parser::is_reserved(name);
    if plain {
        f.write_str(name)
    } else {
        write!(f, "`{}`", name.replace('`', "``"))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Text(s) => {
                f.write_str("'")?;
                for c in s.chars() {
                    match c {
                        '\'' => f.write_str("\\'")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("'")
            }
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Real(x) => {
                if x.fract() == 0.0 && x.abs() < 1e15 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x:?}")
                }
            }
            Literal::Bool(b) => f.write_str(if *b { "true" } else { "false" }),
        }
    }
}

fn write_props(f: &mut fmt::Formatter<'_>, props: &[(String, Literal)]) -> fmt::Result {
    if props.is_empty() {
        return Ok(());
    }
    f.write_str(" {")?;
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_ident(f, k)?;
        write!(f, ": {v}")?;
    }
    f.write_str("}")
}

impl fmt::Display for NodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        if let Some(v) = &self.var {
            write_ident(f, v)?;
        }
        if let Some(l) = &self.label {
            f.write_str(":")?;
            write_ident(f, l)?;
        }
        write_props(f, &self.props)?;
        f.write_str(")")
    }
}

impl fmt::Display for RelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.direction == Direction::In {
            "<-["
        } else {
            "-["
        })?;
        if let Some(v) = &self.var {
            write_ident(f, v)?;
        }
        if let Some(t) = &self.rel_type {
            f.write_str(":")?;
            write_ident(f, t)?;
        }
        write_props(f, &self.props)?;
        f.write_str(if self.direction == Direction::Out {
            "]->"
        } else {
            "]-"
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (rel, node) in &self.hops {
            write!(f, "{rel}{node}")?;
        }
        Ok(())
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Property { .. }
        | Expr::Literal(_)
        | Expr::Count(_)
        | Expr::Alias(_)
        | Expr::Var(_) => {
            write!(f, "{e}")
        }
        _ => write!(f, "({e})"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Property { var, key } => {
                write_ident(f, var)?;
                f.write_str(".")?;
                write_ident(f, key)
            }
            Expr::Literal(l) => write!(f, "{l}"),
            Expr::Compare { op, lhs, rhs } => {
                write_operand(f, lhs)?;
                write!(f, " {} ", op.as_str())?;
                write_operand(f, rhs)
            }
            Expr::Contains { lhs, rhs } => {
                write_operand(f, lhs)?;
                f.write_str(" CONTAINS ")?;
                write_operand(f, rhs)
            }
            Expr::IsNull { expr, negated } => {
                write_operand(f, expr)?;
                f.write_str(if *negated { " IS NOT NULL" } else { " IS NULL" })
            }
            // Fully parenthesized so precedence never matters on re-parse.
            Expr::And(a, b) => write!(f, "({a}) AND ({b})"),
            Expr::Or(a, b) => write!(f, "({a}) OR ({b})"),
            Expr::Not(e) => write!(f, "NOT ({e})"),
            Expr::Count(None) => f.write_str("COUNT(*)"),
            Expr::Count(Some(e)) => write!(f, "COUNT({e})"),
            Expr::Alias(a) | Expr::Var(a) => write_ident(f, a),
        }
    }
}

impl fmt::Display for CypherAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MATCH ")?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        if let Some(w) = &self.where_clause {
            write!(f, " WHERE {w}")?;
        }
        f.write_str(" RETURN ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        for (i, r) in self.returns.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", r.expr)?;
            if let Some(a) = &r.alias {
                f.write_str(" AS ")?;
                write_ident(f, a)?;
            }
        }
        if !self.order_by.is_empty() {
            f.write_str(" ORDER BY ")?;
            for (i, s) in self.order_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}{}", s.expr, if s.ascending { "" } else { " DESC" })?;
            }
        }
        if let Some(l) = self.limit {
            write!(f, " LIMIT {l}")?;
        }
        Ok(())
    }
}
