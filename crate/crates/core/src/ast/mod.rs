//! Java method syntax trees with srcML-style labels, and their flattening
//! into bracketed traversal sequences.

mod lexer;
mod parser;
mod sbt;
mod xml;

use std::fmt;

pub use parser::parse_method;
pub use sbt::{
    sbt_ao_flatten, sbt_flatten, sbt_flatten_with, sbt_unflatten, ApiWhitelist, LeafMode, OTHER,
};
pub use xml::{from_xml, to_xml};

/// Every label the parser can emit, and the only ones [`from_xml`] accepts.
pub const LABELS: &[&str] = &[
    "annotation",
    "argument",
    "argument_list",
    "block",
    "break",
    "call",
    "catch",
    "condition",
    "constructor",
    "continue",
    "decl",
    "decl_stmt",
    "do",
    "else",
    "empty_stmt",
    "expr",
    "expr_stmt",
    "extends",
    "finally",
    "for",
    "function",
    "function_decl",
    "if",
    "if_stmt",
    "incr",
    "index",
    "init",
    "literal",
    "modifier",
    "name",
    "operator",
    "parameter",
    "parameter_list",
    "range",
    "return",
    "specifier",
    "super",
    "then",
    "throw",
    "throws",
    "try",
    "type",
    "unit",
    "while",
];

/// Labels whose leaves carry a surface word.
pub const WORD_LABELS: &[&str] = &["literal", "modifier", "name", "operator", "specifier"];

/// Placeholder word for string literals, whose text may hold spaces.
pub const STRING_LITERAL: &str = "<STR>";
/// Placeholder word for character literals.
pub const CHAR_LITERAL: &str = "<CHAR>";

pub fn is_known_label(label: &str) -> bool {
    LABELS.binary_search(&label).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AstError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("unknown element <{0}>")]
    UnknownElement(String),
    #[error("cannot rebuild tree: {0}")]
    Unflatten(String),
}

/// Ordered, labeled tree. A node with a word never has children.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AstNode {
    label: String,
    word: Option<String>,
    children: Vec<AstNode>,
}

impl AstNode {
    /// A leaf. An empty word is treated as no word.
    pub fn leaf(label: impl Into<String>, word: Option<&str>) -> Self {
        AstNode {
            label: label.into(),
            word: word.filter(|w| !w.is_empty()).map(str::to_string),
            children: Vec::new(),
        }
    }

    pub fn word_leaf(label: impl Into<String>, word: &str) -> Self {
        Self::leaf(label, Some(word))
    }

    pub fn node(label: impl Into<String>, children: Vec<AstNode>) -> Self {
        AstNode {
            label: label.into(),
            word: None,
            children,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn word(&self) -> Option<&str> {
        self.word.as_deref()
    }

    pub fn children(&self) -> &[AstNode] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(AstNode::node_count).sum::<usize>()
    }

    /// Pre-order walk.
    pub fn walk(&self, f: &mut impl FnMut(&AstNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }
}

/// S-expression rendering, e.g. `(unit (function (name "f")))`.
impl fmt::Debug for AstNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.label)?;
        if let Some(w) = &self.word {
            write!(f, " {w:?}")?;
        }
        for c in &self.children {
            write!(f, " {c:?}")?;
        }
        write!(f, ")")
    }
}
