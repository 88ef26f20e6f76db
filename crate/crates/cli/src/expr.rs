//! Arithmetic expressions in the node coordinate `x`, the mode index `k` and
//! the domain length `L`.
//!
//! Grammar: `+ - * / ^`, parentheses, unary minus, numeric literals, the
//! constants `pi` and `e`, and the functions `sin cos tan exp log sqrt abs
//! tanh sinh cosh`. All arithmetic is in `f64`.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    K,
    L,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::K => "k",
            Var::L => "L",
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(fn(f64) -> f64, Box<Node>),
}

/// A parsed expression.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

#[derive(Debug, Clone)]
pub struct ExprError {
    pub pos: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.message, self.pos + 1)
    }
}

impl std::error::Error for ExprError {}

/// Values of the variables at one evaluation point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env {
    pub x: f64,
    pub k: f64,
    pub l: f64,
}

impl Expr {
    /// Parses `src`, accepting only the variables in `allowed`.
    pub fn parse(src: &str, allowed: &[Var]) -> Result<Self, ExprError> {
        let mut p = Parser { s: src.as_bytes(), i: 0, allowed };
        let root = p.expr()?;
        p.ws();
        if p.i < p.s.len() {
            return Err(p.err(format!("unexpected '{}'", p.s[p.i] as char)));
        }
        Ok(Self { source: src.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, env: Env) -> f64 {
        eval(&self.root, env)
    }
}

fn eval(n: &Node, env: Env) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(Var::X) => env.x,
        Node::Var(Var::K) => env.k,
        Node::Var(Var::L) => env.l,
        Node::Neg(a) => -eval(a, env),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, env), eval(b, env));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
        Node::Call(f, a) => f(eval(a, env)),
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    allowed: &'a [Var],
}

impl Parser<'_> {
    fn err(&self, message: String) -> ExprError {
        ExprError { pos: self.i, message }
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.i += 1;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            return Ok(Node::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression".into())),
            Some(b'(') => {
                self.i += 1;
                let e = self.expr()?;
                self.close()?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(format!("unexpected '{}'", c as char))),
        }
    }

    fn close(&mut self) -> Result<(), ExprError> {
        if self.peek() == Some(b')') {
            self.i += 1;
            Ok(())
        } else {
            Err(self.err("expected ')'".into()))
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
            self.i += 1;
        }
        if self.i < self.s.len() && matches!(self.s[self.i], b'e' | b'E') {
            let save = self.i;
            self.i += 1;
            if self.i < self.s.len() && matches!(self.s[self.i], b'+' | b'-') {
                self.i += 1;
            }
            if self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                    self.i += 1;
                }
            } else {
                self.i = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.i]).unwrap_or("");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| ExprError { pos: start, message: format!("invalid number '{text}'") })
    }

    fn ident(&mut self) -> Result<Node, ExprError> {
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_') {
            self.i += 1;
        }
        let name = std::str::from_utf8(&self.s[start..self.i]).unwrap_or("");
        let func: Option<fn(f64) -> f64> = match name {
            "sin" => Some(f64::sin),
            "cos" => Some(f64::cos),
            "tan" => Some(f64::tan),
            "exp" => Some(f64::exp),
            "log" => Some(f64::ln),
            "sqrt" => Some(f64::sqrt),
            "abs" => Some(f64::abs),
            "tanh" => Some(f64::tanh),
            "sinh" => Some(f64::sinh),
            "cosh" => Some(f64::cosh),
            _ => None,
        };
        if let Some(f) = func {
            if self.peek() != Some(b'(') {
                return Err(self.err(format!("expected '(' after {name}")));
            }
            self.i += 1;
            let arg = self.expr()?;
            self.close()?;
            return Ok(Node::Call(f, Box::new(arg)));
        }
        let var = match name {
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            "x" => Var::X,
            "k" => Var::K,
            "L" => Var::L,
            _ => return Err(ExprError { pos: start, message: format!("unknown identifier '{name}'") }),
        };
        if !self.allowed.contains(&var) {
            return Err(ExprError { pos: start, message: format!("variable '{}' is not available here", var.name()) });
        }
        Ok(Node::Var(var))
    }
}
