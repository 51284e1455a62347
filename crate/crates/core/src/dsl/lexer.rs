//! Tokenizer shared by the domain and problem parsers.

use super::ast::Span;
use super::diag::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Decimal literal kept as written, only legal in table values.
    Decimal(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Colon,
    Assign,
    EqEq,
    NotEq,
    /// `>>`
    In,
    /// `!>>`
    NotIn,
    /// `<<=`
    AddTo,
    /// `=>>`
    RemoveFrom,
    Lt,
    Gt,
    Star,
    Slash,
    Minus,
    Ellipsis,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Decimal(s) => format!("number `{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::In => ">>",
            Tok::NotIn => "!>>",
            Tok::AddTo => "<<=",
            Tok::RemoveFrom => "=>>",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Minus => "-",
            Tok::Ellipsis => "...",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    }
    .run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let span = Span {
                line: self.line,
                col: self.col,
            };
            let Some(c) = self.peek(0) else {
                out.push(Token {
                    tok: Tok::Eof,
                    span,
                });
                return Ok(out);
            };
            let tok = if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(c) = self.peek(0) {
                    if c.is_alphanumeric() || c == '_' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            } else if c.is_ascii_digit() {
                self.number(span)?
            } else if c == '"' || c == '\u{201c}' || self.starts_with("``") {
                self.string(span)?
            } else {
                self.punct(span)?
            };
            out.push(Token { tok, span });
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek(0) {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek(1) == Some('/') => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn number(&mut self, span: Span) -> Result<Tok, ParseError> {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_digit() {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            s.push('.');
            self.bump();
            while let Some(c) = self.peek(0) {
                if c.is_ascii_digit() {
                    s.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            return Ok(Tok::Decimal(s));
        }
        s.parse::<i64>()
            .map(Tok::Int)
            .map_err(|_| ParseError::single(span, format!("integer literal `{s}` out of range")))
    }

    /// ASCII `"..."`, typographic `“...”` and TeX-style ``` ``...'' ```
    /// strings are all accepted and normalized to the same token.
    fn string(&mut self, span: Span) -> Result<Tok, ParseError> {
        let close: &str = if self.starts_with("``") {
            self.bump();
            self.bump();
            "''"
        } else if self.peek(0) == Some('"') {
            self.bump();
            "\""
        } else {
            self.bump();
            "\u{201d}"
        };
        let mut s = String::new();
        loop {
            if self.starts_with(close) {
                for _ in close.chars() {
                    self.bump();
                }
                return Ok(Tok::Str(s));
            }
            match self.bump() {
                Some('\n') | None => {
                    return Err(ParseError::single(span, "unterminated string literal"));
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn punct(&mut self, span: Span) -> Result<Tok, ParseError> {
        const MULTI: [(&str, Tok); 8] = [
            ("...", Tok::Ellipsis),
            ("!>>", Tok::NotIn),
            ("<<=", Tok::AddTo),
            ("=>>", Tok::RemoveFrom),
            ("==", Tok::EqEq),
            ("!=", Tok::NotEq),
            (">>", Tok::In),
            ("\u{2026}", Tok::Ellipsis),
        ];
        for (text, tok) in MULTI {
            if self.starts_with(text) {
                for _ in text.chars() {
                    self.bump();
                }
                return Ok(tok);
            }
        }
        let c = self.bump().expect("peeked");
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '.' => Tok::Dot,
            ':' => Tok::Colon,
            '=' => Tok::Assign,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '-' => Tok::Minus,
            other => {
                return Err(ParseError::single(
                    span,
                    format!("unexpected character `{other}`"),
                ));
            }
        };
        Ok(tok)
    }
}
