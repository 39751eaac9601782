use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Rational64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use tracemap_core::{Capability, Ip, Prefix};

use crate::ast::{AssignOp, BinOp, Expr, Script, Stmt, UnaryOp};
use crate::clock::{resolve_timespec, VirtualClock};
use crate::registry::{CommandCtx, CommandRegistry};
use crate::PennyError;

/// Runtime value. Numbers are exact 64-bit rationals so division never
/// loses precision; times are GMT timestamps.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(Rational64),
    Time(u64),
    Ip(Ip),
    Prefix(Prefix),
    Str(String),
    Unit,
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Num(Rational64::from_integer(n))
    }

    fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Time(_) => "time",
            Value::Ip(_) => "ip",
            Value::Prefix(_) => "prefix",
            Value::Str(_) => "string",
            Value::Unit => "unit",
        }
    }

    pub fn as_num(&self) -> Result<Rational64, PennyError> {
        match self {
            Value::Num(n) => Ok(*n),
            other => Err(PennyError::Type(format!(
                "expected number, got {}",
                other.type_name()
            ))),
        }
    }

    pub fn as_ip(&self) -> Result<Ip, PennyError> {
        match self {
            Value::Ip(ip) => Ok(*ip),
            other => Err(PennyError::Type(format!(
                "expected ip, got {}",
                other.type_name()
            ))),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) if n.is_integer() => write!(f, "{}", n.numer()),
            Value::Num(n) => write!(f, "{}/{}", n.numer(), n.denom()),
            Value::Time(t) => write!(f, "t{t}"),
            Value::Ip(ip) => write!(f, "{ip}"),
            Value::Prefix(p) => write!(f, "{p}"),
            Value::Str(s) => f.write_str(s),
            Value::Unit => f.write_str("()"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub capabilities: BTreeSet<Capability>,
    pub seed: u64,
    pub step_limit: u64,
    pub trace: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            capabilities: BTreeSet::new(),
            seed: 0,
            step_limit: 10_000_000,
            trace: false,
        }
    }
}

#[derive(Debug)]
pub struct ExecOutcome {
    pub return_value: Option<Value>,
    pub log: Vec<String>,
    pub end_time: u64,
}

enum Flow {
    Normal,
    Returned(Value),
}

/// Run a script against a command registry on the given virtual clock.
/// Blocking timed sections advance the clock; non-blocking ones are
/// deferred and drained in start order once the main body finishes.
pub fn execute(
    script: &Script,
    registry: &mut CommandRegistry,
    clock: &mut VirtualClock,
    opts: &ExecOptions,
) -> Result<ExecOutcome, PennyError> {
    let mut interp = Interp {
        registry,
        clock,
        opts,
        script_start: 0,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        vars: BTreeMap::new(),
        log: Vec::new(),
        deferred: Vec::new(),
        deferred_seq: 0,
        steps: 0,
    };
    interp.script_start = interp.clock.now();
    let mut ret = match interp.run(&script.statements)? {
        Flow::Returned(v) => Some(v),
        Flow::Normal => None,
    };
    // drain deferred timed sections in (start, registration) order
    while !interp.deferred.is_empty() {
        let min = interp
            .deferred
            .iter()
            .enumerate()
            .min_by_key(|(_, (ts, seq, _))| (*ts, *seq))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (ts, _, body) = interp.deferred.remove(min);
        interp.clock.advance_to(ts);
        if let Flow::Returned(v) = interp.exec_stmt(&body)? {
            if ret.is_none() {
                ret = Some(v);
            }
        }
    }
    Ok(ExecOutcome {
        return_value: ret,
        log: interp.log,
        end_time: interp.clock.now(),
    })
}

struct Interp<'a> {
    registry: &'a mut CommandRegistry,
    clock: &'a mut VirtualClock,
    opts: &'a ExecOptions,
    script_start: u64,
    rng: ChaCha8Rng,
    vars: BTreeMap<String, Value>,
    log: Vec<String>,
    deferred: Vec<(u64, usize, Stmt)>,
    deferred_seq: usize,
    steps: u64,
}

impl Interp<'_> {
    fn tick(&mut self) -> Result<(), PennyError> {
        self.steps += 1;
        if self.steps > self.opts.step_limit {
            return Err(PennyError::StepLimit);
        }
        Ok(())
    }

    fn run(&mut self, stmts: &[Stmt]) -> Result<Flow, PennyError> {
        for s in stmts {
            if let Flow::Returned(v) = self.exec_stmt(s)? {
                return Ok(Flow::Returned(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, s: &Stmt) -> Result<Flow, PennyError> {
        self.tick()?;
        match s {
            Stmt::Assign { name, op, expr } => {
                let rhs = self.eval(expr)?;
                let value = match op {
                    AssignOp::Set => rhs,
                    _ => {
                        let cur = self.read_var(name)?.as_num()?;
                        let rhs = rhs.as_num()?;
                        let next = match op {
                            AssignOp::Add => cur + rhs,
                            AssignOp::Sub => cur - rhs,
                            AssignOp::Mul => cur * rhs,
                            AssignOp::Div => {
                                if rhs.is_zero() {
                                    return Err(PennyError::DivideByZero);
                                }
                                cur / rhs
                            }
                            AssignOp::Set => unreachable!(),
                        };
                        Value::Num(next)
                    }
                };
                if self.opts.trace {
                    self.log
                        .push(format!("t={} {name} = {value}", self.clock.now()));
                }
                self.vars.insert(name.clone(), value);
                Ok(Flow::Normal)
            }
            Stmt::Incr { name, delta } => {
                let cur = self.read_var(name)?.as_num()?;
                self.vars.insert(
                    name.clone(),
                    Value::Num(cur + Rational64::from_integer(*delta)),
                );
                Ok(Flow::Normal)
            }
            Stmt::Expr(e) => {
                self.eval(e)?;
                Ok(Flow::Normal)
            }
            Stmt::While { cond, body } => {
                loop {
                    self.tick()?;
                    if !self.truthy(cond)? {
                        break;
                    }
                    if let Flow::Returned(v) = self.run(body)? {
                        return Ok(Flow::Returned(v));
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.truthy(cond)? {
                    self.run(then_branch)
                } else if let Some(els) = else_branch {
                    self.run(els)
                } else {
                    Ok(Flow::Normal)
                }
            }
            Stmt::ForIn {
                var,
                iterable,
                body,
            } => {
                let value = self.eval(iterable)?;
                match value {
                    Value::Prefix(p) => {
                        for ip in p.iter() {
                            self.tick()?;
                            self.vars.insert(var.clone(), Value::Ip(ip));
                            if let Flow::Returned(v) = self.run(body)? {
                                return Ok(Flow::Returned(v));
                            }
                        }
                        Ok(Flow::Normal)
                    }
                    other => Err(PennyError::Type(format!(
                        "cannot iterate over {}",
                        other.type_name()
                    ))),
                }
            }
            Stmt::OnTime {
                start,
                nowait,
                body,
            } => {
                let ts = resolve_timespec(start, self.clock, self.script_start)?;
                if *nowait {
                    self.deferred.push((ts, self.deferred_seq, (**body).clone()));
                    self.deferred_seq += 1;
                    self.log
                        .push(format!("t={} deferred until t={ts}", self.clock.now()));
                    Ok(Flow::Normal)
                } else {
                    if ts > self.clock.now() {
                        self.log
                            .push(format!("t={} waiting until t={ts}", self.clock.now()));
                        self.clock.advance_to(ts);
                    }
                    self.exec_stmt(body)
                }
            }
            Stmt::Block(body) => self.run(body),
            Stmt::Return(e) => {
                let v = self.eval(e)?;
                Ok(Flow::Returned(v))
            }
        }
    }

    fn read_var(&self, name: &str) -> Result<Value, PennyError> {
        self.vars
            .get(name)
            .cloned()
            .ok_or_else(|| PennyError::Type(format!("variable `{name}` has no value yet")))
    }

    fn truthy(&mut self, cond: &Expr) -> Result<bool, PennyError> {
        match self.eval(cond)? {
            Value::Num(n) => Ok(!n.is_zero()),
            other => Err(PennyError::Type(format!(
                "condition must be numeric, got {}",
                other.type_name()
            ))),
        }
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, PennyError> {
        self.tick()?;
        match e {
            Expr::Number(n) => Ok(Value::int(*n)),
            Expr::IpLit(ip) => Ok(Value::Ip(*ip)),
            Expr::PrefixLit(p) => Ok(Value::Prefix(*p)),
            Expr::Str(s) => Ok(Value::Str(s.clone())),
            Expr::Time(spec) => Ok(Value::Time(resolve_timespec(
                spec,
                self.clock,
                self.script_start,
            )?)),
            Expr::CurrTime => Ok(Value::Time(self.clock.now())),
            Expr::Var(name) => self.read_var(name),
            Expr::Call { name, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a)?);
                }
                self.call(name, values)
            }
            Expr::Unary { op: UnaryOp::Neg, expr } => {
                let v = self.eval(expr)?.as_num()?;
                Ok(Value::Num(-v))
            }
            Expr::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs)?;
                let r = self.eval(rhs)?;
                self.binary(*op, l, r)
            }
        }
    }

    fn binary(&self, op: BinOp, l: Value, r: Value) -> Result<Value, PennyError> {
        use BinOp::*;
        let bool_num = |b: bool| Value::int(b as i64);
        match op {
            Add | Sub | Mul | Div => {
                let (a, b) = (l.as_num()?, r.as_num()?);
                let v = match op {
                    Add => a + b,
                    Sub => a - b,
                    Mul => a * b,
                    Div => {
                        if b.is_zero() {
                            return Err(PennyError::DivideByZero);
                        }
                        a / b
                    }
                    _ => unreachable!(),
                };
                Ok(Value::Num(v))
            }
            Lt | Le | Gt | Ge | Eq | Ne => {
                let ord = match (&l, &r) {
                    (Value::Num(a), Value::Num(b)) => a.partial_cmp(b),
                    (Value::Time(a), Value::Time(b)) => a.partial_cmp(b),
                    (Value::Ip(a), Value::Ip(b)) => a.partial_cmp(b),
                    (Value::Str(a), Value::Str(b)) => a.partial_cmp(b),
                    (a, b) if op == Eq || op == Ne => {
                        return Ok(bool_num((a == b) == (op == Eq)));
                    }
                    (a, b) => {
                        return Err(PennyError::Type(format!(
                            "cannot compare {} with {}",
                            a.type_name(),
                            b.type_name()
                        )))
                    }
                }
                .ok_or_else(|| PennyError::Type("incomparable values".into()))?;
                let res = match op {
                    Lt => ord.is_lt(),
                    Le => ord.is_le(),
                    Gt => ord.is_gt(),
                    Ge => ord.is_ge(),
                    Eq => ord.is_eq(),
                    Ne => ord.is_ne(),
                    _ => unreachable!(),
                };
                Ok(bool_num(res))
            }
        }
    }

    fn call(&mut self, name: &str, args: Vec<Value>) -> Result<Value, PennyError> {
        if let Some(v) = self.builtin(name, &args)? {
            return Ok(v);
        }
        let caps = &self.opts.capabilities;
        let spec = self
            .registry
            .get_mut(name)
            .ok_or_else(|| PennyError::UnknownCommand(name.to_string()))?;
        if spec.arity != args.len() {
            return Err(PennyError::Arity {
                name: name.to_string(),
                expected: spec.arity,
                got: args.len(),
            });
        }
        if let Some(cap) = spec.capability {
            if !caps.contains(&cap) {
                return Err(PennyError::CapabilityDenied {
                    name: name.to_string(),
                    capability: cap.to_string(),
                });
            }
        }
        let invoked_at = self.clock.now();
        let mut ctx = CommandCtx {
            clock: &mut *self.clock,
            rng: &mut self.rng,
            log: &mut self.log,
        };
        let result = (spec.handler)(&mut ctx, &args)?;
        let cost = spec.cost_secs;
        self.clock.advance(cost);
        self.log.push(format!(
            "t={invoked_at} call {name}({}) -> {result}",
            args.iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        Ok(result)
    }

    fn builtin(&mut self, name: &str, args: &[Value]) -> Result<Option<Value>, PennyError> {
        let arity = |n: usize| -> Result<(), PennyError> {
            if args.len() != n {
                return Err(PennyError::Arity {
                    name: name.to_string(),
                    expected: n,
                    got: args.len(),
                });
            }
            Ok(())
        };
        let int_arg = |v: &Value| -> Result<u32, PennyError> {
            let n = v.as_num()?;
            if !n.is_integer() || *n.numer() < 0 {
                return Err(PennyError::Type(
                    "expected a non-negative integer".into(),
                ));
            }
            u32::try_from(*n.numer()).map_err(|_| PennyError::IpOverflow)
        };
        let as_prefix = |v: &Value| -> Result<Prefix, PennyError> {
            match v {
                Value::Prefix(p) => Ok(*p),
                other => Err(PennyError::Type(format!(
                    "expected prefix, got {}",
                    other.type_name()
                ))),
            }
        };
        let as_text = |v: &Value| -> String {
            match v {
                Value::Str(s) => s.clone(),
                other => other.to_string(),
            }
        };
        match name {
            "increment" => {
                arity(2)?;
                let ip = args[0].as_ip()?;
                let k = int_arg(&args[1])?;
                let out = ip.checked_add(k).ok_or(PennyError::IpOverflow)?;
                Ok(Some(Value::Ip(out)))
            }
            "prefixBase" => {
                arity(1)?;
                Ok(Some(Value::Ip(as_prefix(&args[0])?.base())))
            }
            "prefixBroadcast" => {
                arity(1)?;
                Ok(Some(Value::Ip(as_prefix(&args[0])?.broadcast())))
            }
            "randomInPrefix" => {
                arity(1)?;
                let p = as_prefix(&args[0])?;
                let offset = self.rng.gen_range(0..p.size());
                Ok(Some(Value::Ip(Ip(p.base().0 + offset as u32))))
            }
            "match" => {
                arity(2)?;
                let hay = as_text(&args[0]);
                let re = Regex::new(&as_text(&args[1]))
                    .map_err(|e| PennyError::BadRegex(e.to_string()))?;
                Ok(Some(Value::int(re.is_match(&hay) as i64)))
            }
            "capture" => {
                arity(2)?;
                let hay = as_text(&args[0]);
                let re = Regex::new(&as_text(&args[1]))
                    .map_err(|e| PennyError::BadRegex(e.to_string()))?;
                let out = re
                    .captures(&hay)
                    .map(|c| {
                        c.get(1)
                            .or_else(|| c.get(0))
                            .map(|m| m.as_str().to_string())
                            .unwrap_or_default()
                    })
                    .unwrap_or_default();
                Ok(Some(Value::Str(out)))
            }
            _ => Ok(None),
        }
    }
}
