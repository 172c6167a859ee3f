//! APEX service specification language.
//!
//! Parses the structured-English service listings of ARINC 653 Part 1
//! (`procedure ... error ... normal ... end`) and translates a parsed service
//! into a set of guard-action events whose guards are pairwise disjoint.

pub mod ast;
pub mod parser;
pub mod translate;

pub use ast::{ApexServiceSpec, ApexStmt, CondExpr, ErrorClause, Param, ParamMode};
pub use parser::{parse_service, parse_statements, print_service, ParseError};
pub use translate::{
    check_branch_coverage, check_disjointness, translate, translate_detailed, ProtoEvent,
    Translation,
};
