//! Recursive-descent parser.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = ("-" | "+") unary | power ;
//! power   = primary [ "^" unary ] ;          (* exponent must be constant *)
//! primary = number | "y" | "t"
//!         | func "(" expr ")"                (* func: exp log sin cos *)
//!         | ("min" | "max") "(" expr "," expr ")"   (* root only *)
//!         | "(" expr ")" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```

use super::ast::{Func, Node, Var};
use super::ExprError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Returns the next token and the byte offset where it starts.
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        self.skip_ws();
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let Some(&c) = bytes.get(start) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            if !value.is_finite() {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("number `{text}` is out of range"),
                });
            }
            self.pos = end;
            return Ok((Tok::Num(value), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        match c {
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b',' => {
                self.pos += 1;
                Ok((Tok::Sym(c as char), start))
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                })
            }
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ExprError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok, at) = lexer.next()?;
        Ok(Parser { lexer, tok, at })
    }

    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self) -> ExprError {
        let message = match &self.tok {
            Tok::End => "unexpected end of input".to_string(),
            Tok::Num(v) => format!("unexpected number {v}"),
            Tok::Ident(s) => format!("unexpected identifier `{s}`"),
            Tok::Sym(c) => format!("unexpected `{c}`"),
        };
        ExprError::Syntax {
            offset: self.at,
            message,
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self, root: bool) -> Result<Node, ExprError> {
        let mut lhs = self.term(root)?;
        loop {
            match self.tok {
                Tok::Sym('+') => {
                    self.bump()?;
                    let rhs = self.term(false)?;
                    lhs = Node::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Sym('-') => {
                    self.bump()?;
                    let rhs = self.term(false)?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self, root: bool) -> Result<Node, ExprError> {
        let mut lhs = self.unary(root)?;
        loop {
            match self.tok {
                Tok::Sym('*') => {
                    self.bump()?;
                    let rhs = self.unary(false)?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Sym('/') => {
                    self.bump()?;
                    let rhs = self.unary(false)?;
                    lhs = Node::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self, root: bool) -> Result<Node, ExprError> {
        match self.tok {
            Tok::Sym('-') => {
                self.bump()?;
                Ok(match self.unary(false)? {
                    Node::Const(c) => Node::Const(-c),
                    other => Node::Neg(Box::new(other)),
                })
            }
            Tok::Sym('+') => {
                self.bump()?;
                self.unary(false)
            }
            _ => self.power(root),
        }
    }

    fn power(&mut self, root: bool) -> Result<Node, ExprError> {
        let base = self.primary(root)?;
        if self.tok != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump()?;
        let at = self.at;
        let exponent = self.unary(false)?;
        if exponent.mentions(Var::Y) || exponent.mentions(Var::T) {
            return Err(ExprError::Syntax {
                offset: at,
                message: "exponent must be constant".to_string(),
            });
        }
        let e = exponent.eval(0.0, 0.0);
        if !e.is_finite() {
            return Err(ExprError::Syntax {
                offset: at,
                message: "exponent is not finite".to_string(),
            });
        }
        Ok(Node::Pow(Box::new(base), e))
    }

    fn primary(&mut self, root: bool) -> Result<Node, ExprError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Node::Const(v))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let inner = self.expr(false)?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                match name.as_str() {
                    "y" => return Ok(Node::Var(Var::Y)),
                    "t" => return Ok(Node::Var(Var::T)),
                    _ => {}
                }
                if let Some(func) = Func::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr(false)?;
                    self.expect(')')?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if name == "min" || name == "max" {
                    if !root {
                        return Err(ExprError::Syntax {
                            offset: at,
                            message: format!("`{name}` is only allowed at the top level"),
                        });
                    }
                    self.expect('(')?;
                    let a = self.expr(false)?;
                    self.expect(',')?;
                    let b = self.expr(false)?;
                    self.expect(')')?;
                    let (a, b) = (Box::new(a), Box::new(b));
                    return Ok(if name == "min" {
                        Node::Min(a, b)
                    } else {
                        Node::Max(a, b)
                    });
                }
                Err(ExprError::UnknownIdentifier { offset: at, name })
            }
            _ => Err(self.unexpected()),
        }
    }
}

pub(crate) fn parse(src: &str) -> Result<Node, ExprError> {
    if src.trim().is_empty() {
        return Err(ExprError::Syntax {
            offset: src.len(),
            message: "empty expression".to_string(),
        });
    }
    let mut p = Parser::new(src)?;
    let node = p.expr(true)?;
    if p.tok != Tok::End {
        return Err(p.unexpected());
    }
    // `min(...) + 1` parses the call at the root position of its term but
    // leaves it nested; reject that here.
    let nested_kink = match &node {
        Node::Min(a, b) | Node::Max(a, b) => a.has_kink() || b.has_kink(),
        other => other.has_kink(),
    };
    if nested_kink {
        return Err(ExprError::Syntax {
            offset: 0,
            message: "`min`/`max` are only allowed at the top level".to_string(),
        });
    }
    Ok(node)
}
