//! Read-only Cypher subset: parser, executor and result rendering.
//!
//! ```text
//! MATCH pattern (, pattern)*
//! [WHERE expr]
//! RETURN [DISTINCT] item [AS alias] (, item [AS alias])*
//! [ORDER BY expr [ASC|DESC] (, ...)*]
//! [LIMIT n]
//! ```
//!
//! Comparisons against a missing property are false. A number compared with
//! text first tries to read the text as a number; if that fails, `=` is false
//! and `<>` is true, so `n.gap <> ""` selects nodes that carry a gap.

mod ast;
mod exec;
mod format;
mod lexer;
mod parser;

use serde::{Deserialize, Serialize};

pub use ast::{
    CmpOp, CypherAst, Direction, Expr, Literal, NodePattern, Pattern, RelPattern, ReturnItem,
    SortItem,
};
pub use exec::execute;
pub use format::format_results;
pub use parser::{is_reserved, parse};

use crate::graph::{AttrValue, PropertyGraph};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CypherError {
    #[error("syntax error at offset {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("variable `{0}` is not bound by any pattern")]
    UnboundVariable(String),
    #[error("unsupported Cypher feature: {0}")]
    UnsupportedFeature(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<AttrValue>>,
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows as column-name keyed JSON objects.
    pub fn to_json_rows(&self) -> Vec<serde_json::Map<String, serde_json::Value>> {
        self.rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| {
                        let json = match v {
                            AttrValue::Absent => serde_json::Value::Null,
                            other => serde_json::to_value(other).unwrap_or(serde_json::Value::Null),
                        };
                        (c.clone(), json)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Parse and run in one step.
pub fn query(g: &PropertyGraph, text: &str) -> Result<ResultTable, CypherError> {
    execute(g, &parse(text)?)
}
