//! Syntax tree for APEX service specifications.

use std::fmt;

/// A boolean condition taken verbatim from a service text.
///
/// Conditions are opaque: two conditions are the same atom exactly when their
/// normalized text is equal. Negation is kept as a wrapper, and
/// [`CondExpr::negated`] never produces a double negation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CondExpr {
    Atom(String),
    Not(Box<CondExpr>),
}

impl CondExpr {
    pub fn atom(text: impl Into<String>) -> Self {
        CondExpr::Atom(text.into())
    }

    pub fn negated(&self) -> Self {
        match self {
            CondExpr::Not(inner) => (**inner).clone(),
            atom => CondExpr::Not(Box::new(atom.clone())),
        }
    }

    /// The underlying atom text and its polarity after collapsing negations.
    pub fn literal(&self) -> (&str, bool) {
        match self {
            CondExpr::Atom(text) => (text, true),
            CondExpr::Not(inner) => {
                let (text, positive) = inner.literal();
                (text, !positive)
            }
        }
    }
}

impl fmt::Display for CondExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondExpr::Atom(text) => write!(f, "({text})"),
            CondExpr::Not(inner) => write!(f, "not {inner}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ApexStmt {
    Act(String),
    Seq(Box<ApexStmt>, Box<ApexStmt>),
    If {
        cond: CondExpr,
        then: Box<ApexStmt>,
    },
    IfElse {
        cond: CondExpr,
        then: Box<ApexStmt>,
        els: Box<ApexStmt>,
    },
}

impl ApexStmt {
    pub fn act(text: impl Into<String>) -> Self {
        ApexStmt::Act(text.into())
    }

    pub fn seq(first: ApexStmt, second: ApexStmt) -> Self {
        ApexStmt::Seq(Box::new(first), Box::new(second))
    }

    pub fn if_then(cond: CondExpr, then: ApexStmt) -> Self {
        ApexStmt::If {
            cond,
            then: Box::new(then),
        }
    }

    pub fn if_else(cond: CondExpr, then: ApexStmt, els: ApexStmt) -> Self {
        ApexStmt::IfElse {
            cond,
            then: Box::new(then),
            els: Box::new(els),
        }
    }

    /// Right-nested sequence of the given statements. Panics on an empty list.
    pub fn sequence(mut stmts: Vec<ApexStmt>) -> Self {
        let mut acc = stmts.pop().expect("sequence of zero statements");
        while let Some(prev) = stmts.pop() {
            acc = ApexStmt::seq(prev, acc);
        }
        acc
    }

    /// Flattens nested `Seq` nodes into their statement list.
    pub fn flatten(&self) -> Vec<&ApexStmt> {
        let mut out = Vec::new();
        fn walk<'a>(s: &'a ApexStmt, out: &mut Vec<&'a ApexStmt>) {
            match s {
                ApexStmt::Seq(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Same statement with every sequence right-nested, the shape the parser
    /// produces. Sequencing is associative, so this preserves meaning.
    pub fn normalized(&self) -> ApexStmt {
        let parts = self
            .flatten()
            .into_iter()
            .map(|s| match s {
                ApexStmt::If { cond, then } => ApexStmt::if_then(cond.clone(), then.normalized()),
                ApexStmt::IfElse { cond, then, els } => {
                    ApexStmt::if_else(cond.clone(), then.normalized(), els.normalized())
                }
                other => other.clone(),
            })
            .collect();
        ApexStmt::sequence(parts)
    }

    pub fn count_ifs(&self) -> usize {
        match self {
            ApexStmt::Act(_) => 0,
            ApexStmt::Seq(a, b) => a.count_ifs() + b.count_ifs(),
            ApexStmt::If { then, .. } => 1 + then.count_ifs(),
            ApexStmt::IfElse { then, els, .. } => 1 + then.count_ifs() + els.count_ifs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamMode {
    In,
    Out,
    InOut,
}

impl fmt::Display for ParamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamMode::In => "in",
            ParamMode::Out => "out",
            ParamMode::InOut => "in out",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub type_name: String,
    pub mode: ParamMode,
}

/// One `when (cond) => RETURN_CODE := X;` clause of the error part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorClause {
    pub cond: CondExpr,
    pub return_code: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApexServiceSpec {
    pub name: String,
    pub params: Vec<Param>,
    pub error_part: Vec<ErrorClause>,
    pub normal_part: ApexStmt,
}
