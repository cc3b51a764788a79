//! Workbench for the higher-order π-calculus with recursive types.

pub mod bisim;
pub mod gen;
pub mod lts;
pub mod merge;
pub mod reduction;
pub mod syntax;
pub mod translate;
pub mod typing;

pub use syntax::{Name, Term, Trigger, Type, Var};
pub use typing::Env;
