use std::collections::BTreeSet;

use crate::ast::*;
use crate::lexer::{lex, Spanned, Tok};
use crate::PennyError;

/// Parse a script and statically verify that every variable is assigned
/// before its first use.
pub fn parse(text: &str) -> Result<Script, PennyError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let statements = p.stmts_until(false)?;
    let script = Script { statements };
    let mut assigned = BTreeSet::new();
    check_stmts(&script.statements, &mut assigned)?;
    Ok(script)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1))
    }

    fn err(&self, msg: impl Into<String>) -> PennyError {
        let (line, col) = self.here();
        PennyError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), PennyError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek() == Some(&Tok::Newline) {
            self.pos += 1;
        }
    }

    /// Parse statements until EOF (`inside_block` false) or a closing
    /// brace (true, not consumed).
    fn stmts_until(&mut self, inside_block: bool) -> Result<Vec<Stmt>, PennyError> {
        let mut out = Vec::new();
        loop {
            self.skip_newlines();
            match self.peek() {
                None => {
                    if inside_block {
                        return Err(self.err("unterminated block; expected `}`"));
                    }
                    return Ok(out);
                }
                Some(Tok::RBrace) if inside_block => return Ok(out),
                Some(Tok::RBrace) => return Err(self.err("unmatched `}`")),
                Some(_) => {
                    out.push(self.stmt()?);
                    // one statement per line: a statement ends at a
                    // newline, a closing brace, or the end of input
                    match self.peek() {
                        None | Some(Tok::Newline) | Some(Tok::RBrace) => {}
                        Some(_) => return Err(self.err("expected end of line")),
                    }
                }
            }
        }
    }

    fn block(&mut self) -> Result<Vec<Stmt>, PennyError> {
        self.expect(Tok::LBrace, "`{`")?;
        let body = self.stmts_until(true)?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(body)
    }

    fn stmt(&mut self) -> Result<Stmt, PennyError> {
        match self.peek() {
            Some(Tok::While) => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(` after while")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                self.skip_newlines();
                let body = self.block()?;
                Ok(Stmt::While { cond, body })
            }
            Some(Tok::If) => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(` after if")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                self.skip_newlines();
                let then_branch = self.block()?;
                let else_branch = if self.peek() == Some(&Tok::Else) {
                    self.pos += 1;
                    self.skip_newlines();
                    Some(self.block()?)
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                })
            }
            Some(Tok::For) => {
                self.pos += 1;
                let var = match self.bump() {
                    Some(Tok::Ident(name)) => name,
                    _ => return Err(self.err("expected loop variable after for")),
                };
                self.expect(Tok::In, "`in`")?;
                let iterable = self.expr()?;
                self.skip_newlines();
                let body = self.block()?;
                Ok(Stmt::ForIn {
                    var,
                    iterable,
                    body,
                })
            }
            Some(Tok::OnTime) => {
                self.pos += 1;
                let nowait = if self.peek() == Some(&Tok::Nowait) {
                    self.pos += 1;
                    true
                } else {
                    false
                };
                self.skip_newlines();
                self.expect(Tok::StartTime, "`startTime` after onTime")?;
                let start = self.timespec()?;
                self.skip_newlines();
                let body = Box::new(self.stmt()?);
                Ok(Stmt::OnTime {
                    start,
                    nowait,
                    body,
                })
            }
            Some(Tok::LBrace) => Ok(Stmt::Block(self.block()?)),
            Some(Tok::Return) => {
                self.pos += 1;
                Ok(Stmt::Return(self.expr()?))
            }
            Some(Tok::Ident(_)) => {
                let name = match self.bump() {
                    Some(Tok::Ident(name)) => name,
                    _ => unreachable!(),
                };
                let op = match self.peek() {
                    Some(Tok::Assign) => Some(AssignOp::Set),
                    Some(Tok::PlusAssign) => Some(AssignOp::Add),
                    Some(Tok::MinusAssign) => Some(AssignOp::Sub),
                    Some(Tok::StarAssign) => Some(AssignOp::Mul),
                    Some(Tok::SlashAssign) => Some(AssignOp::Div),
                    _ => None,
                };
                if let Some(op) = op {
                    self.pos += 1;
                    let expr = self.expr()?;
                    return Ok(Stmt::Assign { name, op, expr });
                }
                match self.peek() {
                    Some(Tok::PlusPlus) => {
                        self.pos += 1;
                        Ok(Stmt::Incr { name, delta: 1 })
                    }
                    Some(Tok::MinusMinus) => {
                        self.pos += 1;
                        Ok(Stmt::Incr { name, delta: -1 })
                    }
                    _ => {
                        // an expression statement (typically a command call)
                        let lead = self.continue_expr_from_ident(name)?;
                        Ok(Stmt::Expr(lead))
                    }
                }
            }
            Some(_) => Ok(Stmt::Expr(self.expr()?)),
            None => Err(self.err("expected statement")),
        }
    }

    /// Resume expression parsing when the leading identifier was already
    /// consumed by statement dispatch.
    fn continue_expr_from_ident(&mut self, name: String) -> Result<Expr, PennyError> {
        let primary = if self.peek() == Some(&Tok::LParen) {
            self.call_args(name)?
        } else {
            Expr::Var(name)
        };
        self.binary_from(primary, 0)
    }

    fn timespec(&mut self) -> Result<TimeSpec, PennyError> {
        let base = match self.bump() {
            Some(Tok::Local) => TimeBase::Local,
            Some(Tok::Gmt) => TimeBase::Gmt,
            Some(Tok::Relative) => TimeBase::Relative,
            _ => return Err(self.err("expected time base (local, gmt, relative)")),
        };
        let first = match self.bump() {
            Some(Tok::Number(n)) if n >= 0 => n as u32,
            _ => return Err(self.err("expected number in time literal")),
        };
        let (date, hh) = if base != TimeBase::Relative && self.peek() == Some(&Tok::Slash) {
            self.pos += 1;
            let dd = self.time_number("day")?;
            self.expect(Tok::Slash, "`/` in date")?;
            let yy = self.time_number("year")?;
            let hh = self.time_number("hour")?;
            (Some((first, dd, yy)), hh)
        } else {
            (None, first)
        };
        self.expect(Tok::Colon, "`:` in time")?;
        let mm = self.time_number("minute")?;
        if mm > 59 {
            return Err(self.err("minute out of range"));
        }
        if base != TimeBase::Relative && hh > 23 {
            return Err(self.err("hour out of range"));
        }
        if let Some((m, d, _)) = date {
            if m == 0 || m > 12 || d == 0 || d > 31 {
                return Err(self.err("calendar date out of range"));
            }
        }
        Ok(TimeSpec { base, date, hh, mm })
    }

    fn time_number(&mut self, what: &str) -> Result<u32, PennyError> {
        match self.bump() {
            Some(Tok::Number(n)) if (0..=9999).contains(&n) => Ok(n as u32),
            _ => Err(self.err(format!("expected {what} in time literal"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, PennyError> {
        let lead = self.unary()?;
        self.binary_from(lead, 0)
    }

    /// Precedence climbing; comparisons (lowest precedence) do not chain.
    fn binary_from(&mut self, mut lhs: Expr, min_prec: u8) -> Result<Expr, PennyError> {
        loop {
            let (op, prec) = match self.peek() {
                Some(Tok::Lt) => (BinOp::Lt, 1),
                Some(Tok::Le) => (BinOp::Le, 1),
                Some(Tok::Gt) => (BinOp::Gt, 1),
                Some(Tok::Ge) => (BinOp::Ge, 1),
                Some(Tok::EqEq) => (BinOp::Eq, 1),
                Some(Tok::Ne) => (BinOp::Ne, 1),
                Some(Tok::Plus) => (BinOp::Add, 2),
                Some(Tok::Minus) => (BinOp::Sub, 2),
                Some(Tok::Star) => (BinOp::Mul, 3),
                Some(Tok::Slash) => (BinOp::Div, 3),
                _ => break,
            };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let mut rhs = self.unary()?;
            loop {
                let next_prec = match self.peek() {
                    Some(Tok::Star) | Some(Tok::Slash) => 3,
                    Some(Tok::Plus) | Some(Tok::Minus) => 2,
                    _ => 0,
                };
                if next_prec > prec {
                    rhs = self.binary_from(rhs, next_prec)?;
                } else {
                    break;
                }
            }
            if prec == 1 {
                // single comparison only
                lhs = Expr::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                };
                if matches!(
                    self.peek(),
                    Some(Tok::Lt)
                        | Some(Tok::Le)
                        | Some(Tok::Gt)
                        | Some(Tok::Ge)
                        | Some(Tok::EqEq)
                        | Some(Tok::Ne)
                ) {
                    return Err(self.err("comparisons do not chain"));
                }
                continue;
            }
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, PennyError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            let expr = self.unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Neg,
                expr: Box::new(expr),
            });
        }
        self.primary()
    }

    fn call_args(&mut self, name: String) -> Result<Expr, PennyError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)` after arguments")?;
        Ok(Expr::Call { name, args })
    }

    fn primary(&mut self) -> Result<Expr, PennyError> {
        match self.peek().cloned() {
            Some(Tok::Number(n)) => {
                self.pos += 1;
                Ok(Expr::Number(n))
            }
            Some(Tok::IpLit(ip)) => {
                self.pos += 1;
                Ok(Expr::IpLit(ip))
            }
            Some(Tok::PrefixLit(p)) => {
                self.pos += 1;
                Ok(Expr::PrefixLit(p))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Expr::Str(s))
            }
            Some(Tok::CurrTime) => {
                self.pos += 1;
                Ok(Expr::CurrTime)
            }
            Some(Tok::Local) | Some(Tok::Gmt) | Some(Tok::Relative) => {
                Ok(Expr::Time(self.timespec()?))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.call_args(name)
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.err("expected expression")),
        }
    }
}

fn check_expr(e: &Expr, assigned: &BTreeSet<String>) -> Result<(), PennyError> {
    match e {
        Expr::Var(name) => {
            if !assigned.contains(name) {
                return Err(PennyError::UseBeforeAssign(name.clone()));
            }
            Ok(())
        }
        Expr::Call { args, .. } => args.iter().try_for_each(|a| check_expr(a, assigned)),
        Expr::Unary { expr, .. } => check_expr(expr, assigned),
        Expr::Binary { lhs, rhs, .. } => {
            check_expr(lhs, assigned)?;
            check_expr(rhs, assigned)
        }
        _ => Ok(()),
    }
}

/// Textual-order definite-assignment scan: an assignment makes the name
/// available from that point on, including inside later blocks.
fn check_stmts(stmts: &[Stmt], assigned: &mut BTreeSet<String>) -> Result<(), PennyError> {
    for s in stmts {
        match s {
            Stmt::Assign { name, op, expr } => {
                check_expr(expr, assigned)?;
                if *op != AssignOp::Set && !assigned.contains(name) {
                    return Err(PennyError::UseBeforeAssign(name.clone()));
                }
                assigned.insert(name.clone());
            }
            Stmt::Incr { name, .. } => {
                if !assigned.contains(name) {
                    return Err(PennyError::UseBeforeAssign(name.clone()));
                }
            }
            Stmt::Expr(e) => check_expr(e, assigned)?,
            Stmt::While { cond, body } => {
                check_expr(cond, assigned)?;
                check_stmts(body, assigned)?;
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                check_expr(cond, assigned)?;
                check_stmts(then_branch, assigned)?;
                if let Some(els) = else_branch {
                    check_stmts(els, assigned)?;
                }
            }
            Stmt::ForIn {
                var,
                iterable,
                body,
            } => {
                check_expr(iterable, assigned)?;
                assigned.insert(var.clone());
                check_stmts(body, assigned)?;
            }
            Stmt::OnTime { body, .. } => check_stmts(std::slice::from_ref(body), assigned)?,
            Stmt::Block(body) => check_stmts(body, assigned)?,
            Stmt::Return(e) => check_expr(e, assigned)?,
        }
    }
    Ok(())
}

/// The two-window day/night latency-difference script used throughout
/// the tests, verbatim including the `n++` in the second loop where
/// `m++` was plainly intended.
#[cfg(test)]
pub(crate) const DAY_NIGHT_SCRIPT: &str = "\
n = 0
nightResults = 0
onTime
startTime local 06/05/04 01:00
while(currTime < local 01:30) {
    nightResults += Ping(198.81.129.100)
    n++ }
m = 0
dayResults = 0
onTime
startTime local 06/05/04 13:00
while(currTime < local 13:30) {
    dayResults += Ping(198.81.129.100)
    n++ }
return dayResults/m - nightResults/n
";
