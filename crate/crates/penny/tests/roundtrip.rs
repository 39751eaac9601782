//! Print/parse stability over generated scripts: parsing, printing, and
//! reparsing must land on the same tree as the first parse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracemap_core::{Ip, Prefix};
use tracemap_penny::{parse, AssignOp, BinOp, Expr, Script, Stmt, TimeBase, TimeSpec, UnaryOp};

struct Gen {
    rng: ChaCha8Rng,
    vars: Vec<String>,
    counter: usize,
}

impl Gen {
    fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            vars: Vec::new(),
            counter: 0,
        }
    }

    fn fresh_var(&mut self) -> String {
        self.counter += 1;
        format!("v{}", self.counter)
    }

    fn known_var(&mut self) -> Option<String> {
        if self.vars.is_empty() {
            None
        } else {
            let i = self.rng.gen_range(0..self.vars.len());
            Some(self.vars[i].clone())
        }
    }

    fn time_spec(&mut self) -> TimeSpec {
        let base = match self.rng.gen_range(0..3) {
            0 => TimeBase::Local,
            1 => TimeBase::Gmt,
            _ => TimeBase::Relative,
        };
        let date = if base != TimeBase::Relative && self.rng.gen_bool(0.5) {
            Some((
                self.rng.gen_range(1..=12),
                self.rng.gen_range(1..=28),
                self.rng.gen_range(4..=9),
            ))
        } else {
            None
        };
        let hh = if base == TimeBase::Relative {
            self.rng.gen_range(0..48)
        } else {
            self.rng.gen_range(0..24)
        };
        TimeSpec {
            base,
            date,
            hh,
            mm: self.rng.gen_range(0..60),
        }
    }

    fn expr(&mut self, depth: usize) -> Expr {
        let leaf = depth == 0 || self.rng.gen_bool(0.4);
        if leaf {
            match self.rng.gen_range(0..8) {
                0 => Expr::Number(self.rng.gen_range(-999..1000)),
                1 => Expr::IpLit(Ip(self.rng.gen())),
                2 => {
                    let len = self.rng.gen_range(8..=30);
                    Expr::PrefixLit(Prefix::containing(Ip(self.rng.gen()), len))
                }
                3 => Expr::Str(
                    (0..self.rng.gen_range(0..8))
                        .map(|_| {
                            let c: u8 = self.rng.gen_range(b' '..b'~');
                            c as char
                        })
                        .collect(),
                ),
                4 => Expr::CurrTime,
                5 => Expr::Time(self.time_spec()),
                6 => match self.known_var() {
                    Some(v) => Expr::Var(v),
                    None => Expr::Number(1),
                },
                _ => Expr::Call {
                    name: ["Ping", "Probe", "Traceroute"][self.rng.gen_range(0..3)].to_string(),
                    args: (0..self.rng.gen_range(0..3))
                        .map(|_| self.expr(depth.saturating_sub(1)))
                        .collect(),
                },
            }
        } else {
            match self.rng.gen_range(0..3) {
                0 => Expr::Unary {
                    op: UnaryOp::Neg,
                    expr: Box::new(self.expr(depth - 1)),
                },
                1 => {
                    let op = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne]
                        [self.rng.gen_range(0..6)];
                    Expr::Binary {
                        op,
                        lhs: Box::new(self.arith_expr(depth - 1)),
                        rhs: Box::new(self.arith_expr(depth - 1)),
                    }
                }
                _ => {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]
                        [self.rng.gen_range(0..4)];
                    Expr::Binary {
                        op,
                        lhs: Box::new(self.arith_expr(depth - 1)),
                        rhs: Box::new(self.arith_expr(depth - 1)),
                    }
                }
            }
        }
    }

    /// Expression that is never itself a comparison (comparisons do not
    /// nest without parentheses, and the printer only parenthesizes them
    /// when a grammar rule requires it).
    fn arith_expr(&mut self, depth: usize) -> Expr {
        loop {
            let e = self.expr(depth);
            let is_cmp = matches!(
                &e,
                Expr::Binary { op, .. } if matches!(op, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
            );
            if !is_cmp {
                return e;
            }
        }
    }

    fn stmt(&mut self, depth: usize) -> Stmt {
        let simple = depth == 0 || self.rng.gen_bool(0.55);
        if simple {
            match self.rng.gen_range(0..5) {
                0 => {
                    let name = self.fresh_var();
                    let expr = self.expr(2);
                    self.vars.push(name.clone());
                    Stmt::Assign {
                        name,
                        op: AssignOp::Set,
                        expr,
                    }
                }
                1 => match self.known_var() {
                    Some(name) => Stmt::Assign {
                        name,
                        op: [AssignOp::Add, AssignOp::Sub, AssignOp::Mul, AssignOp::Div]
                            [self.rng.gen_range(0..4)],
                        expr: self.expr(1),
                    },
                    None => self.stmt(0),
                },
                2 => match self.known_var() {
                    Some(name) => Stmt::Incr {
                        name,
                        delta: if self.rng.gen_bool(0.5) { 1 } else { -1 },
                    },
                    None => self.stmt(0),
                },
                3 => Stmt::Expr(Expr::Call {
                    name: "Ping".into(),
                    args: vec![self.expr(1)],
                }),
                _ => Stmt::Return(self.expr(2)),
            }
        } else {
            match self.rng.gen_range(0..5) {
                0 => Stmt::While {
                    cond: self.expr(2),
                    body: self.body(depth - 1),
                },
                1 => Stmt::If {
                    cond: self.expr(2),
                    then_branch: self.body(depth - 1),
                    else_branch: if self.rng.gen_bool(0.5) {
                        Some(self.body(depth - 1))
                    } else {
                        None
                    },
                },
                2 => {
                    let var = self.fresh_var();
                    self.vars.push(var.clone());
                    Stmt::ForIn {
                        var,
                        iterable: Expr::PrefixLit(Prefix::containing(
                            Ip(self.rng.gen()),
                            self.rng.gen_range(24..=30),
                        )),
                        body: self.body(depth - 1),
                    }
                }
                3 => Stmt::OnTime {
                    start: self.time_spec(),
                    nowait: self.rng.gen_bool(0.3),
                    body: Box::new(self.stmt(depth - 1)),
                },
                _ => Stmt::Block(self.body(depth - 1)),
            }
        }
    }

    fn body(&mut self, depth: usize) -> Vec<Stmt> {
        (0..self.rng.gen_range(1..4))
            .map(|_| self.stmt(depth))
            .collect()
    }

    fn script(&mut self) -> Script {
        Script {
            statements: (0..self.rng.gen_range(1..8)).map(|_| self.stmt(2)).collect(),
        }
    }
}

#[test]
fn print_parse_fixed_point_on_generated_scripts() {
    for seed in 0..200u64 {
        let mut generator = Gen::new(seed);
        let text = generator.script().to_string();
        let first = match parse(&text) {
            Ok(s) => s,
            Err(e) => panic!("seed {seed}: generated script failed to parse: {e}\n{text}"),
        };
        let printed = first.to_string();
        let second = parse(&printed)
            .unwrap_or_else(|e| panic!("seed {seed}: reparse failed: {e}\n{printed}"));
        assert_eq!(first, second, "seed {seed} not a fixed point:\n{text}\n--\n{printed}");
    }
}

#[test]
fn printer_is_idempotent_on_the_fixture_scripts() {
    let text = "x = 0\nonTime nowait\nstartTime relative 01:30\nwhile(x < 3) {\n    Ping(10.0.0.1)\n    x++ }\nreturn x\n";
    let first = parse(text).unwrap();
    let printed = first.to_string();
    assert_eq!(parse(&printed).unwrap(), first);
    assert_eq!(parse(&printed).unwrap().to_string(), printed);
}
