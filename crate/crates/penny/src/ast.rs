use std::fmt;

use tracemap_core::{Ip, Prefix};

/// The three time bases a timed operation can anchor to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeBase {
    Local,
    Gmt,
    Relative,
}

/// A time literal. Absolute specs carry an optional MM/DD/YY date; with
/// no date they mean "that time of day on the current day in the given
/// base". Relative specs are offsets from script start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeSpec {
    pub base: TimeBase,
    /// (month, day, two-digit year); None for date-less and relative specs.
    pub date: Option<(u32, u32, u32)>,
    pub hh: u32,
    pub mm: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(i64),
    IpLit(Ip),
    PrefixLit(Prefix),
    Str(String),
    Time(TimeSpec),
    CurrTime,
    Var(String),
    Call { name: String, args: Vec<Expr> },
    Unary { op: UnaryOp, expr: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign {
        name: String,
        op: AssignOp,
        expr: Expr,
    },
    /// `x++` / `x--`
    Incr { name: String, delta: i64 },
    Expr(Expr),
    While { cond: Expr, body: Vec<Stmt> },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
    ForIn {
        var: String,
        iterable: Expr,
        body: Vec<Stmt>,
    },
    /// A timed section: suspend until `start` (or schedule for later when
    /// `nowait` is set), then run the body.
    OnTime {
        start: TimeSpec,
        nowait: bool,
        body: Box<Stmt>,
    },
    Block(Vec<Stmt>),
    Return(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub statements: Vec<Stmt>,
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.base {
            TimeBase::Local => write!(f, "local ")?,
            TimeBase::Gmt => write!(f, "gmt ")?,
            TimeBase::Relative => write!(f, "relative ")?,
        }
        if let Some((m, d, y)) = self.date {
            write!(f, "{m:02}/{d:02}/{y:02} ")?;
        }
        write!(f, "{:02}:{:02}", self.hh, self.mm)
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        })
    }
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul | BinOp::Div => 3,
        }
    }
}

fn fmt_expr(e: &Expr, parent_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Number(n) => write!(f, "{n}"),
        Expr::IpLit(ip) => write!(f, "{ip}"),
        Expr::PrefixLit(p) => write!(f, "{p}"),
        Expr::Str(s) => write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
        Expr::Time(t) => write!(f, "{t}"),
        Expr::CurrTime => f.write_str("currTime"),
        Expr::Var(name) => f.write_str(name),
        Expr::Call { name, args } => {
            write!(f, "{name}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                fmt_expr(a, 0, f)?;
            }
            f.write_str(")")
        }
        Expr::Unary { op: UnaryOp::Neg, expr } => {
            f.write_str("-")?;
            // a bare `--` would lex as the decrement token
            let starts_negative =
                matches!(&**expr, Expr::Unary { .. }) || matches!(&**expr, Expr::Number(n) if *n < 0);
            if starts_negative {
                f.write_str("(")?;
                fmt_expr(expr, 0, f)?;
                f.write_str(")")
            } else {
                fmt_expr(expr, 4, f)
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let need_parens = prec < parent_prec;
            if need_parens {
                f.write_str("(")?;
            }
            // comparisons do not chain, so a comparison operand needs parens
            let lhs_prec = if prec == 1 { prec + 1 } else { prec };
            fmt_expr(lhs, lhs_prec, f)?;
            write!(f, " {op} ")?;
            // right operand of -, / must parenthesize equal precedence
            fmt_expr(rhs, prec + 1, f)?;
            if need_parens {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, 0, f)
    }
}

fn indent(f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
    for _ in 0..depth {
        f.write_str("    ")?;
    }
    Ok(())
}

fn fmt_body(body: &[Stmt], depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_str("{\n")?;
    for s in body {
        fmt_stmt(s, depth + 1, f)?;
    }
    indent(f, depth)?;
    f.write_str("}")
}

fn fmt_stmt(s: &Stmt, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    indent(f, depth)?;
    match s {
        Stmt::Assign { name, op, expr } => {
            let sym = match op {
                AssignOp::Set => "=",
                AssignOp::Add => "+=",
                AssignOp::Sub => "-=",
                AssignOp::Mul => "*=",
                AssignOp::Div => "/=",
            };
            writeln!(f, "{name} {sym} {expr}")
        }
        Stmt::Incr { name, delta } => {
            writeln!(f, "{name}{}", if *delta > 0 { "++" } else { "--" })
        }
        Stmt::Expr(e) => writeln!(f, "{e}"),
        Stmt::While { cond, body } => {
            write!(f, "while({cond}) ")?;
            fmt_body(body, depth, f)?;
            f.write_str("\n")
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            write!(f, "if({cond}) ")?;
            fmt_body(then_branch, depth, f)?;
            if let Some(els) = else_branch {
                f.write_str(" else ")?;
                fmt_body(els, depth, f)?;
            }
            f.write_str("\n")
        }
        Stmt::ForIn { var, iterable, body } => {
            write!(f, "for {var} in {iterable} ")?;
            fmt_body(body, depth, f)?;
            f.write_str("\n")
        }
        Stmt::OnTime { start, nowait, body } => {
            if *nowait {
                writeln!(f, "onTime nowait")?;
            } else {
                writeln!(f, "onTime")?;
            }
            indent(f, depth)?;
            writeln!(f, "startTime {start}")?;
            fmt_stmt(body, depth, f)
        }
        Stmt::Block(body) => {
            fmt_body(body, depth, f)?;
            f.write_str("\n")
        }
        Stmt::Return(e) => writeln!(f, "return {e}"),
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            fmt_stmt(s, 0, f)?;
        }
        Ok(())
    }
}
