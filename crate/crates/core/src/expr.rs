//! A small arithmetic expression language for defining component functions
//! in config files: variables u1..uk, numeric literals, + - * / ^ with the
//! usual precedence, unary minus, parentheses, and a fixed set of calls
//! (sin, cos, exp, sqrt, abs, tanh, min, max).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Num(f64),
    Var(usize),
    Func(Func),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Tanh,
    Min,
    Max,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn apply(self, args: &[f64]) -> f64 {
        match self {
            Func::Sin => args[0].sin(),
            Func::Cos => args[0].cos(),
            Func::Exp => args[0].exp(),
            Func::Sqrt => args[0].sqrt(),
            Func::Abs => args[0].abs(),
            Func::Tanh => args[0].tanh(),
            Func::Min => args[0].min(args[1]),
            Func::Max => args[0].max(args[1]),
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => vars[*i],
            Node::Neg(a) => -a.eval(vars),
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Pow(a, b) => a.eval(vars).powf(b.eval(vars)),
            Node::Call(f, args) => {
                let vals: Vec<f64> = args.iter().map(|a| a.eval(vars)).collect();
                f.apply(&vals)
            }
        }
    }
}

fn tokenize(src: &str, arity: usize) -> Result<Vec<Token>> {
    let bad = |msg: String| Error::Expression(format!("{msg} in '{src}'"));
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == b'.'
                        || bytes[i] == b'e'
                        || bytes[i] == b'E'
                        || ((bytes[i] == b'+' || bytes[i] == b'-')
                            && i > start
                            && (bytes[i - 1] == b'e' || bytes[i - 1] == b'E')))
                {
                    i += 1;
                }
                let v: f64 = src[start..i]
                    .parse()
                    .map_err(|_| bad(format!("bad number '{}'", &src[start..i])))?;
                out.push(Token::Num(v));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &src[start..i];
                if let Some(idx) = word.strip_prefix('u').and_then(|n| n.parse::<usize>().ok()) {
                    if idx == 0 || idx > arity {
                        return Err(bad(format!(
                            "variable {word} out of range u1..u{arity}"
                        )));
                    }
                    out.push(Token::Var(idx - 1));
                } else {
                    let f = match word {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        "tanh" => Func::Tanh,
                        "min" => Func::Min,
                        "max" => Func::Max,
                        other => return Err(bad(format!("unknown name '{other}'"))),
                    };
                    out.push(Token::Func(f));
                }
            }
            other => return Err(bad(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn fail(&self, msg: &str) -> Error {
        Error::Expression(format!("{msg} in '{}'", self.src))
    }

    fn expect(&mut self, t: Token, what: &str) -> Result<()> {
        if self.bump() == Some(t) {
            Ok(())
        } else {
            Err(self.fail(what))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        // Unary minus binds looser than '^': -u1^2 is -(u1^2).
        if self.peek() == Some(Token::Minus) {
            self.bump();
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek() == Some(Token::Caret) {
            self.bump();
            // Right associative; the recursion also admits 2^-3.
            let exp = self.factor()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Node::Num(v)),
            Some(Token::Var(i)) => Ok(Node::Var(i)),
            Some(Token::Func(f)) => {
                self.expect(Token::LParen, "expected '(' after function name")?;
                let mut args = vec![self.expr()?];
                while self.peek() == Some(Token::Comma) {
                    self.bump();
                    args.push(self.expr()?);
                }
                self.expect(Token::RParen, "expected ')' closing the call")?;
                if args.len() != f.arity() {
                    return Err(self.fail(&format!(
                        "{f:?} takes {} argument(s), got {}",
                        f.arity(),
                        args.len()
                    )));
                }
                Ok(Node::Call(f, args))
            }
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen, "expected ')'")?;
                Ok(e)
            }
            _ => Err(self.fail("expected a value")),
        }
    }
}

/// A parsed expression over `arity` variables u1..u{arity}.
#[derive(Clone)]
pub struct CompiledExpr {
    node: Arc<Node>,
    source: String,
    arity: usize,
}

impl fmt::Debug for CompiledExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CompiledExpr({:?}, arity {})", self.source, self.arity)
    }
}

impl CompiledExpr {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        debug_assert_eq!(vars.len(), self.arity);
        self.node.eval(vars)
    }
}

/// Parses an expression; every variable must be one of u1..u{arity}.
pub fn parse_expression(src: &str, arity: usize) -> Result<CompiledExpr> {
    if arity == 0 {
        return Err(Error::InvalidArgument("expressions need arity >= 1".into()));
    }
    let tokens = tokenize(src, arity)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        src,
    };
    let node = p.expr()?;
    if p.pos != tokens.len() {
        return Err(p.fail("trailing input"));
    }
    Ok(CompiledExpr {
        node: Arc::new(node),
        source: src.to_string(),
        arity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, vars: &[f64]) -> f64 {
        parse_expression(src, vars.len()).unwrap().eval(vars)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", &[0.0]), 7.0);
        assert_eq!(eval("(1 + 2) * 3", &[0.0]), 9.0);
        assert_eq!(eval("2 ^ 3 ^ 2", &[0.0]), 512.0); // right assoc
        assert_eq!(eval("-u1 ^ 2 + 1", &[2.0]), -3.0); // unary binds below ^
        assert_eq!(eval("8 / 4 / 2", &[0.0]), 1.0);
        assert_eq!(eval("1 - 2 - 3", &[0.0]), -4.0);
    }

    #[test]
    fn variables_and_calls() {
        assert!((eval("0.5 + 0.5 * sin(u1 * u2)", &[0.3, 0.7]) - (0.5 + 0.5 * (0.21f64).sin())).abs() < 1e-15);
        assert_eq!(eval("min(u1, u2) + max(u1, u2)", &[0.2, 0.9]), 1.1);
        assert_eq!(eval("abs(-u1)", &[0.4]), 0.4);
        assert!((eval("1.5e-1 * 2", &[0.0]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_expression("u3 + 1", 2).is_err());
        assert!(parse_expression("u0", 2).is_err());
        assert!(parse_expression("foo(u1)", 1).is_err());
        assert!(parse_expression("1 +", 1).is_err());
        assert!(parse_expression("min(u1)", 1).is_err());
        assert!(parse_expression("(u1", 1).is_err());
        assert!(parse_expression("u1 u2", 2).is_err());
        assert!(parse_expression("2 $ 2", 1).is_err());
    }
}
