//! A small arithmetic expression language for user-supplied profiles such as
//! `t*x*(pi - x)*u^2` or `sin(x)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Names are the variables `t`, `x`, `u` (each context allows a subset), the
//! constants `pi` and `e`, and the functions `sin cos exp sqrt abs`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown variable `{name}` at position {pos} (allowed: {allowed})")]
    UnknownVariable { name: String, pos: usize, allowed: String },
    #[error("unknown function `{name}` at position {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    SqrtOfNegative(f64),
    #[error("`{0}` produced a non-finite value")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X,
    U,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::U => "u",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    E,
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Variable bindings for evaluation. Unused variables may be left at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(src: &str, allowed: &[Var]) -> Result<Self, ExprError> {
        let tokens = lex(src)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            allowed,
            end: src.chars().count(),
        };
        if parser.tokens.is_empty() {
            return Err(ExprError::Syntax {
                pos: 0,
                message: "empty expression".into(),
            });
        }
        let root = parser.expr()?;
        if let Some(tok) = parser.tokens.get(parser.pos) {
            return Err(ExprError::Syntax {
                pos: tok.pos,
                message: format!("unexpected `{}`", tok.kind),
            });
        }
        Ok(Expression { root })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// True if the expression mentions `var`.
    pub fn uses(&self, var: Var) -> bool {
        fn walk(node: &Node, var: Var) -> bool {
            match node {
                Node::Var(v) => *v == var,
                Node::Num(_) | Node::Pi | Node::E => false,
                Node::Neg(a) | Node::Call(_, a) => walk(a, var),
                Node::Bin(_, a, b) => walk(a, var) || walk(b, var),
            }
        }
        walk(&self.root, var)
    }

    pub fn eval(&self, b: Bindings) -> Result<f64, ExprError> {
        eval(&self.root, &b)
    }
}

fn finite(value: f64, op: &'static str) -> Result<f64, ExprError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ExprError::NonFinite(op))
    }
}

fn eval(node: &Node, b: &Bindings) -> Result<f64, ExprError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Pi => std::f64::consts::PI,
        Node::E => std::f64::consts::E,
        Node::Var(Var::T) => b.t,
        Node::Var(Var::X) => b.x,
        Node::Var(Var::U) => b.u,
        Node::Neg(a) => -eval(a, b)?,
        Node::Bin(op, lhs, rhs) => {
            let (l, r) = (eval(lhs, b)?, eval(rhs, b)?);
            match op {
                BinOp::Add => finite(l + r, "+")?,
                BinOp::Sub => finite(l - r, "-")?,
                BinOp::Mul => finite(l * r, "*")?,
                BinOp::Div => {
                    if r == 0.0 {
                        return Err(ExprError::DivisionByZero);
                    }
                    finite(l / r, "/")?
                }
                BinOp::Pow => {
                    if l == 0.0 && r < 0.0 {
                        return Err(ExprError::DivisionByZero);
                    }
                    finite(l.powf(r), "^")?
                }
            }
        }
        Node::Call(func, arg) => {
            let a = eval(arg, b)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => finite(a.exp(), "exp")?,
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(ExprError::SqrtOfNegative(a));
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
            }
        }
    })
}

// Printing fully parenthesizes compound subterms, so reparsing the output
// yields the same tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Pi => f.write_str("pi"),
            Node::E => f.write_str("e"),
            Node::Var(v) => f.write_str(v.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                    BinOp::Pow => '^',
                };
                write!(f, "({a} {sym} {b})")
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Name(String),
    Sym(char),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(v) => write!(f, "{v}"),
            TokenKind::Name(s) => f.write_str(s),
            TokenKind::Sym(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, only if followed by digits
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                pos: start,
                message: format!("malformed number `{text}`"),
            })?;
            if !value.is_finite() {
                return Err(ExprError::Syntax {
                    pos: start,
                    message: format!("number `{text}` is out of range"),
                });
            }
            tokens.push(Token {
                kind: TokenKind::Number(value),
                pos: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Name(chars[start..i].iter().collect()),
                pos: start,
            });
        } else if "+-*/^()".contains(c) {
            tokens.push(Token {
                kind: TokenKind::Sym(c),
                pos: i,
            });
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                pos: i,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    allowed: &'a [Var],
    end: usize,
}

impl Parser<'_> {
    fn peek_sym(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token {
                kind: TokenKind::Sym(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.pos)
    }

    fn expect(&mut self, sym: char) -> Result<(), ExprError> {
        if self.peek_sym() == Some(sym) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ExprError::Syntax {
                pos: self.here(),
                message: format!("expected `{sym}`"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_sym() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_sym() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.peek_sym() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.peek_sym() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let Some(tok) = self.tokens.get(self.pos).cloned() else {
            return Err(ExprError::Syntax {
                pos: self.end,
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Number(v) => Ok(Node::Num(v)),
            TokenKind::Sym('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            TokenKind::Name(name) => {
                if self.peek_sym() == Some('(') {
                    let func = Func::from_name(&name).ok_or(ExprError::UnknownFunction {
                        name: name.clone(),
                        pos: tok.pos,
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Pi),
                    "e" => Ok(Node::E),
                    _ => {
                        let var = match name.as_str() {
                            "t" => Some(Var::T),
                            "x" => Some(Var::X),
                            "u" => Some(Var::U),
                            _ => None,
                        };
                        match var {
                            Some(v) if self.allowed.contains(&v) => Ok(Node::Var(v)),
                            _ => Err(ExprError::UnknownVariable {
                                name,
                                pos: tok.pos,
                                allowed: self.allowed.iter().map(|v| v.name()).collect::<Vec<_>>().join(", "),
                            }),
                        }
                    }
                }
            }
            TokenKind::Sym(c) => Err(ExprError::Syntax {
                pos: tok.pos,
                message: format!("unexpected `{c}`"),
            }),
        }
    }
}
