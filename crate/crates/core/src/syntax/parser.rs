//! Parser for `.core` program files.
//!
//! The grammar is line-start sensitive only in one place: a definition header
//! `f x1 ... xn = e` must begin in column 1, which is also what terminates
//! the previous definition body. Comments run from `--` to end of line.

use super::{CmpOp, Def, Expr, Program};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    At { line: usize, col: usize, msg: String },
    #[error("duplicate definition of `{0}`")]
    DuplicateDef(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    KwMatch,
    KwWith,
    KwIf,
    KwThen,
    KwElse,
    KwLet,
    KwIn,
    KwLeaf,
    KwTrue,
    KwFalse,
    LParen,
    RParen,
    Comma,
    Pipe,
    Arrow,
    Lt,
    Gt,
    Eq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(x) => return write!(f, "`{x}`"),
            Tok::KwMatch => "match",
            Tok::KwWith => "with",
            Tok::KwIf => "if",
            Tok::KwThen => "then",
            Tok::KwElse => "else",
            Tok::KwLet => "let",
            Tok::KwIn => "in",
            Tok::KwLeaf => "leaf",
            Tok::KwTrue => "true",
            Tok::KwFalse => "false",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Pipe => "|",
            Tok::Arrow => "->",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Eq => "=",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone)]
struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, ParseError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = match raw.find("--") {
            Some(i) => &raw[..i],
            None => raw,
        };
        let bytes = content.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let push = |out: &mut Vec<Lexed>, tok: Tok| out.push(Lexed { tok, line, col });
            match c {
                '(' => {
                    push(&mut out, Tok::LParen);
                    i += 1;
                }
                ')' => {
                    push(&mut out, Tok::RParen);
                    i += 1;
                }
                ',' => {
                    push(&mut out, Tok::Comma);
                    i += 1;
                }
                '|' => {
                    push(&mut out, Tok::Pipe);
                    i += 1;
                }
                '<' => {
                    push(&mut out, Tok::Lt);
                    i += 1;
                }
                '>' => {
                    push(&mut out, Tok::Gt);
                    i += 1;
                }
                '=' => {
                    push(&mut out, Tok::Eq);
                    i += 1;
                }
                '-' => {
                    if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                        push(&mut out, Tok::Arrow);
                        i += 2;
                    } else {
                        return Err(ParseError::At {
                            line,
                            col,
                            msg: "stray `-` (did you mean `->` or a `--` comment?)".into(),
                        });
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len() {
                        let d = bytes[i] as char;
                        if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                    let word = &content[start..i];
                    let tok = match word {
                        "match" => Tok::KwMatch,
                        "with" => Tok::KwWith,
                        "if" => Tok::KwIf,
                        "then" => Tok::KwThen,
                        "else" => Tok::KwElse,
                        "let" => Tok::KwLet,
                        "in" => Tok::KwIn,
                        "leaf" => Tok::KwLeaf,
                        "true" => Tok::KwTrue,
                        "false" => Tok::KwFalse,
                        _ => Tok::Ident(word.to_string()),
                    };
                    push(&mut out, tok);
                }
                _ => {
                    return Err(ParseError::At {
                        line,
                        col,
                        msg: format!("unexpected character `{c}`"),
                    });
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Lexed> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&Lexed> {
        self.toks.get(self.pos + off)
    }

    fn next(&mut self) -> Option<Lexed> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> ParseError {
        match self.peek() {
            Some(l) => ParseError::At {
                line: l.line,
                col: l.col,
                msg: msg.into(),
            },
            None => ParseError::At {
                line: usize::MAX,
                col: 0,
                msg: format!("{} (at end of input)", msg.into()),
            },
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(l) if l.tok == tok => {
                self.pos += 1;
                Ok(())
            }
            Some(l) => Err(ParseError::At {
                line: l.line,
                col: l.col,
                msg: format!("expected {tok}, found {}", l.tok),
            }),
            None => Err(self.err_here(format!("expected {tok}"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(Lexed {
                tok: Tok::Ident(x), ..
            }) => {
                self.pos += 1;
                Ok(x)
            }
            _ => Err(self.err_here(format!("expected {what}"))),
        }
    }

    /// True when the upcoming tokens form a definition header starting in
    /// column 1: `ident ident* =`.
    fn at_def_header(&self) -> bool {
        let Some(first) = self.peek() else {
            return false;
        };
        if first.col != 1 || !matches!(first.tok, Tok::Ident(_)) {
            return false;
        }
        let mut k = 1;
        loop {
            match self.peek_at(k) {
                Some(l) if matches!(l.tok, Tok::Ident(_)) => k += 1,
                Some(l) if l.tok == Tok::Eq => return true,
                _ => return false,
            }
        }
    }

    fn parse_program(&mut self) -> Result<Program, ParseError> {
        let mut defs: Vec<Def> = Vec::new();
        while self.peek().is_some() {
            if !self.at_def_header() {
                return Err(self.err_here(
                    "expected a definition header `f x1 ... xn =` starting in column 1",
                ));
            }
            let name = self.expect_ident("function name")?;
            let mut params = Vec::new();
            while let Some(Lexed {
                tok: Tok::Ident(_), ..
            }) = self.peek()
            {
                params.push(self.expect_ident("parameter")?);
            }
            self.expect(Tok::Eq)?;
            let body = self.parse_expr()?;
            if defs.iter().any(|d| d.name == name) {
                return Err(ParseError::DuplicateDef(name));
            }
            defs.push(Def { name, params, body });
        }
        Ok(Program { defs })
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek().map(|l| l.tok.clone()) {
            Some(Tok::KwIf) => {
                self.next();
                let cond = self.parse_expr()?;
                self.expect(Tok::KwThen)?;
                let then_e = self.parse_expr()?;
                self.expect(Tok::KwElse)?;
                let else_e = self.parse_expr()?;
                Ok(Expr::If(Box::new(cond), Box::new(then_e), Box::new(else_e)))
            }
            Some(Tok::KwLet) => {
                self.next();
                let x = self.expect_ident("let-bound variable")?;
                self.expect(Tok::Eq)?;
                let e1 = self.parse_expr()?;
                self.expect(Tok::KwIn)?;
                let e2 = self.parse_expr()?;
                Ok(Expr::Let(x, Box::new(e1), Box::new(e2)))
            }
            Some(Tok::KwMatch) => self.parse_match(),
            _ => self.parse_cmp(),
        }
    }

    fn parse_match(&mut self) -> Result<Expr, ParseError> {
        self.expect(Tok::KwMatch)?;
        let scrutinee = self.parse_cmp()?;
        self.expect(Tok::KwWith)?;
        let mut leaf_arm: Option<Expr> = None;
        let mut node_arm: Option<(String, String, String, Expr)> = None;
        while matches!(self.peek().map(|l| &l.tok), Some(Tok::Pipe)) {
            self.next();
            match self.peek().map(|l| l.tok.clone()) {
                Some(Tok::KwLeaf) => {
                    self.next();
                    self.expect(Tok::Arrow)?;
                    let body = self.parse_expr()?;
                    if leaf_arm.is_some() {
                        return Err(self.err_here("duplicate leaf arm"));
                    }
                    leaf_arm = Some(body);
                }
                Some(Tok::LParen) => {
                    self.next();
                    let x1 = self.expect_ident("pattern variable")?;
                    self.expect(Tok::Comma)?;
                    let x2 = self.expect_ident("pattern variable")?;
                    self.expect(Tok::Comma)?;
                    let x3 = self.expect_ident("pattern variable")?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Arrow)?;
                    let body = self.parse_expr()?;
                    if node_arm.is_some() {
                        return Err(self.err_here("duplicate node arm"));
                    }
                    node_arm = Some((x1, x2, x3, body));
                }
                _ => return Err(self.err_here("expected `leaf` or `(x1, x2, x3)` pattern")),
            }
        }
        let Some((x1, x2, x3, body)) = node_arm else {
            return Err(self.err_here("match requires a `(x1, x2, x3)` arm"));
        };
        // A missing leaf arm (as in `match splay a bl with | (al, a', ar) -> ..`)
        // is completed with `leaf -> leaf`.
        let leaf_arm = leaf_arm.unwrap_or(Expr::Leaf);
        Ok(Expr::Match {
            scrutinee: Box::new(scrutinee),
            leaf_arm: Box::new(leaf_arm),
            node_arm: (x1, x2, x3, Box::new(body)),
        })
    }

    /// Comparison layer: `app (< | > | =) app`, not associative.
    fn parse_cmp(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_app()?;
        let op = match self.peek().map(|l| &l.tok) {
            Some(Tok::Lt) => Some(CmpOp::Lt),
            Some(Tok::Gt) => Some(CmpOp::Gt),
            // `=` in expression position is a comparison unless it opens the
            // next definition (that case is cut off by at_def_header below).
            Some(Tok::Eq) => Some(CmpOp::Eq),
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            let rhs = self.parse_app()?;
            return Ok(Expr::Cmp(Box::new(lhs), op, Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_app(&mut self) -> Result<Expr, ParseError> {
        if self.at_def_header() {
            return Err(self.err_here("expression expected, found next definition header"));
        }
        let head = self.parse_atom()?;
        if let Expr::Var(f) = &head {
            let mut args = Vec::new();
            while self.at_atom() && !self.at_def_header() {
                args.push(self.parse_atom()?);
            }
            if !args.is_empty() {
                return Ok(Expr::App(f.clone(), args));
            }
        }
        Ok(head)
    }

    fn at_atom(&self) -> bool {
        matches!(
            self.peek().map(|l| &l.tok),
            Some(Tok::Ident(_))
                | Some(Tok::KwLeaf)
                | Some(Tok::KwTrue)
                | Some(Tok::KwFalse)
                | Some(Tok::LParen)
        )
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().map(|l| l.tok.clone()) {
            Some(Tok::KwLeaf) => {
                self.next();
                Ok(Expr::Leaf)
            }
            Some(Tok::KwTrue) => {
                self.next();
                Ok(Expr::True)
            }
            Some(Tok::KwFalse) => {
                self.next();
                Ok(Expr::False)
            }
            Some(Tok::Ident(x)) => {
                self.next();
                Ok(Expr::Var(x))
            }
            Some(Tok::LParen) => {
                self.next();
                let first = self.parse_expr()?;
                match self.peek().map(|l| &l.tok) {
                    Some(Tok::Comma) => {
                        self.next();
                        let second = self.parse_expr()?;
                        self.expect(Tok::Comma)?;
                        let third = self.parse_expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Node(
                            Box::new(first),
                            Box::new(second),
                            Box::new(third),
                        ))
                    }
                    _ => {
                        self.expect(Tok::RParen)?;
                        Ok(first)
                    }
                }
            }
            _ => Err(self.err_here("expected an expression")),
        }
    }
}

/// Parses a `.core` source file into a (possibly sugared) program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    p.parse_program()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_atomic_leaf_body() {
        let p = parse_program("f t = leaf").unwrap();
        assert_eq!(p.defs.len(), 1);
        assert_eq!(p.defs[0].body, Expr::Leaf);
    }

    #[test]
    fn parses_sugared_node() {
        let p = parse_program("f bl a br c cr = (bl, a, (br, c, cr))").unwrap();
        match &p.defs[0].body {
            Expr::Node(_, _, third) => assert!(matches!(**third, Expr::Node(..))),
            other => panic!("expected node, got {other:?}"),
        }
    }

    #[test]
    fn match_without_leaf_arm_completes_to_leaf() {
        let src = "f a t = match splay a t with | (l, m, r) -> l\nsplay a t = t";
        let p = parse_program(src).unwrap();
        match &p.defs[0].body {
            Expr::Match { leaf_arm, .. } => assert_eq!(**leaf_arm, Expr::Leaf),
            other => panic!("expected match, got {other:?}"),
        }
    }

    #[test]
    fn reports_position_on_error() {
        let err = parse_program("f x = (a,\nb)").unwrap_err();
        match err {
            ParseError::At { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_definitions() {
        let err = parse_program("f x = x\nf y = y").unwrap_err();
        assert_eq!(err, ParseError::DuplicateDef("f".into()));
    }

    #[test]
    fn cmp_binds_looser_than_application() {
        let p = parse_program("f a t = splay a t = leaf").unwrap();
        match &p.defs[0].body {
            Expr::Cmp(lhs, CmpOp::Eq, rhs) => {
                assert!(matches!(**lhs, Expr::App(..)));
                assert_eq!(**rhs, Expr::Leaf);
            }
            other => panic!("expected cmp, got {other:?}"),
        }
    }
}
