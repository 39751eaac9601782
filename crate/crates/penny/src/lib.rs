//! The measurement scripting language used by agents.
//!
//! A small statement-per-line language with braces for blocks, numeric
//! variables held as exact 64-bit rationals, comparisons, while/if/for,
//! timed blocks anchored to one of three time bases (local, GMT,
//! relative), IP arithmetic, and an extensible command registry so probe
//! modules can add commands at runtime. The normative grammar lives in
//! `GRAMMAR.md` next to this crate.
//!
//! Execution is fully deterministic: time only moves on an explicit
//! [`VirtualClock`], commands advance it by their declared cost, and all
//! randomness comes from a seeded generator. Tests therefore never sleep.

mod ast;
mod clock;
mod error;
mod interp;
mod lexer;
mod parser;
mod registry;

pub use ast::{AssignOp, BinOp, Expr, Script, Stmt, TimeBase, TimeSpec, UnaryOp};
pub use clock::{days_from_epoch, VirtualClock};
pub use error::PennyError;
pub use interp::{execute, ExecOptions, ExecOutcome, Value};
pub use parser::parse;
pub use registry::{CommandCtx, CommandRegistry, Handler};
