use crate::model::addr::scan_local_a1;
use crate::model::CellRef;

use super::{Diagnostic, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Model files: identifiers, element references, comments, layout syntax.
    Model,
    /// Sheet formulas with A1 references.
    A1,
    /// Sheet formulas with R1C1 references.
    R1C1,
}

/// One R1C1 coordinate: `R3` is absolute, `R[-1]` and bare `R` are relative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RcCoord {
    Abs(u32),
    Rel(i64),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64, String),
    /// Double-quoted string.
    Str(String),
    /// Single-quoted string: layout text or a quoted sheet name.
    SQuote(String),
    A1(CellRef),
    Rc {
        row: RcCoord,
        col: RcCoord,
    },
    OpenObj,
    CloseObj,
    Bar,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Colon,
    Bang,
    At,
    Plus,
    Minus,
    Star,
    Slash,
    Amp,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Union,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_, raw) => format!("number {raw}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::SQuote(s) => format!("quoted '{s}'"),
            Tok::A1(r) => format!("reference {r}"),
            Tok::Rc { .. } => "R1C1 reference".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub(crate) fn symbol(&self) -> &'static str {
        match self {
            Tok::OpenObj => "{#",
            Tok::CloseObj => "#}",
            Tok::Bar => "|",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Bang => "!",
            Tok::At => "@",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Amp => "&",
            Tok::Eq => "=",
            Tok::Ne => "<>",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::Union => "union",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub(crate) fn tokenize(src: &str, mode: Mode) -> Result<Vec<Token>, Diagnostic> {
    Lexer { src, bytes: src.as_bytes(), i: 0, line: 1, line_start: 0, mode, out: Vec::new() }.run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    i: usize,
    line: usize,
    line_start: usize,
    mode: Mode,
    out: Vec<Token>,
}

impl Lexer<'_> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.src[self.line_start..self.i].chars().count() + 1 }
    }

    fn err(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(self.pos(), msg)
    }

    fn peek(&self, k: usize) -> Option<u8> {
        self.bytes.get(self.i + k).copied()
    }

    /// Whether the next token should be read as a cell reference: after `!`,
    /// or after `:` that closes a preceding reference.
    fn cell_context(&self) -> bool {
        match self.out.as_slice() {
            [.., last] if last.tok == Tok::Bang => true,
            [.., prev, last] if last.tok == Tok::Colon => matches!(prev.tok, Tok::A1(_) | Tok::Rc { .. }),
            _ => false,
        }
    }

    fn run(mut self) -> Result<Vec<Token>, Diagnostic> {
        loop {
            self.skip_trivia();
            let pos = self.pos();
            let Some(c) = self.peek(0) else {
                self.out.push(Token { tok: Tok::Eof, pos });
                return Ok(self.out);
            };
            let tok = self.next_token(c)?;
            self.out.push(Token { tok, pos });
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == b'\n' {
                self.i += 1;
                self.line += 1;
                self.line_start = self.i;
            } else if c.is_ascii_whitespace() {
                self.i += 1;
            } else if self.mode == Mode::Model && c == b'-' && self.peek(1) == Some(b'-') {
                while self.peek(0).is_some_and(|c| c != b'\n') {
                    self.i += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self, c: u8) -> Result<Tok, Diagnostic> {
        if self.cell_context() {
            if let Some(tok) = self.try_reference() {
                return Ok(tok);
            }
        }
        if self.mode != Mode::Model && (c.is_ascii_alphabetic() || c == b'$') {
            if let Some(tok) = self.try_reference() {
                return Ok(tok);
            }
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.i;
            while self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                self.i += 1;
            }
            let word = &self.src[start..self.i];
            if self.mode == Mode::Model && word == "union" {
                return Ok(Tok::Union);
            }
            return Ok(Tok::Ident(word.to_string()));
        }
        if c.is_ascii_digit() || (c == b'.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            return self.number();
        }
        if c == b'"' || c == b'\'' {
            return self.quoted(c);
        }
        let two = |a: u8, b: u8| c == a && self.peek(1) == Some(b);
        let (tok, len) = if two(b'{', b'#') {
            (Tok::OpenObj, 2)
        } else if two(b'#', b'}') {
            (Tok::CloseObj, 2)
        } else if two(b'\\', b'/') {
            (Tok::Union, 2)
        } else if two(b'<', b'>') {
            (Tok::Ne, 2)
        } else if two(b'<', b'=') {
            (Tok::Le, 2)
        } else if two(b'>', b'=') {
            (Tok::Ge, 2)
        } else {
            let single = match c {
                b'|' => Tok::Bar,
                b'[' => Tok::LBracket,
                b']' => Tok::RBracket,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                b':' => Tok::Colon,
                b'!' => Tok::Bang,
                b'@' => Tok::At,
                b'+' => Tok::Plus,
                b'-' => Tok::Minus,
                b'*' => Tok::Star,
                b'/' => Tok::Slash,
                b'&' => Tok::Amp,
                b'=' => Tok::Eq,
                b'<' => Tok::Lt,
                b'>' => Tok::Gt,
                _ => return self.unicode_symbol(),
            };
            (single, 1)
        };
        self.i += len;
        Ok(tok)
    }

    fn unicode_symbol(&mut self) -> Result<Tok, Diagnostic> {
        let ch = self.src[self.i..].chars().next().expect("non-empty");
        let tok = match ch {
            '∪' => Tok::Union,
            '≥' => Tok::Ge,
            '≤' => Tok::Le,
            '≠' => Tok::Ne,
            '−' => Tok::Minus,
            _ => return Err(self.err(format!("unexpected character {ch:?}"))),
        };
        self.i += ch.len_utf8();
        Ok(tok)
    }

    fn number(&mut self) -> Result<Tok, Diagnostic> {
        let start = self.i;
        while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
        }
        if self.peek(0) == Some(b'.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
            while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                self.i += 1;
            }
        }
        if matches!(self.peek(0), Some(b'e' | b'E')) {
            let sign = usize::from(matches!(self.peek(1), Some(b'+' | b'-')));
            if self.peek(1 + sign).is_some_and(|c| c.is_ascii_digit()) {
                self.i += 1 + sign;
                while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.i += 1;
                }
            }
        }
        let raw = &self.src[start..self.i];
        let v: f64 = raw.parse().map_err(|_| self.err(format!("bad number {raw}")))?;
        Ok(Tok::Number(v, raw.to_string()))
    }

    fn quoted(&mut self, q: u8) -> Result<Tok, Diagnostic> {
        let open = self.pos();
        self.i += 1;
        let mut s = String::new();
        loop {
            let Some(ch) = self.src[self.i..].chars().next() else {
                return Err(Diagnostic::new(open, "unterminated string"));
            };
            self.i += ch.len_utf8();
            if ch as u32 == q as u32 {
                if self.peek(0) == Some(q) {
                    self.i += 1;
                    s.push(ch);
                    continue;
                }
                break;
            }
            if ch == '\n' {
                self.line += 1;
                self.line_start = self.i;
            }
            s.push(ch);
        }
        Ok(if q == b'"' { Tok::Str(s) } else { Tok::SQuote(s) })
    }

    /// A cell reference in the current mode, if one starts here and is not
    /// the prefix of a longer identifier or a function name.
    fn try_reference(&mut self) -> Option<Tok> {
        let rest = &self.bytes[self.i..];
        let (tok, used) = match self.mode {
            Mode::R1C1 => scan_r1c1(rest)?,
            Mode::A1 | Mode::Model => {
                let (r, used) = scan_local_a1(rest)?;
                (Tok::A1(r), used)
            }
        };
        if rest.get(used).is_some_and(|&c| c.is_ascii_alphanumeric() || c == b'_' || c == b'(' || c == b'!') {
            return None;
        }
        self.i += used;
        Some(tok)
    }
}

fn scan_r1c1(b: &[u8]) -> Option<(Tok, usize)> {
    fn coord(b: &[u8], mut i: usize) -> Option<(RcCoord, usize)> {
        if b.get(i) == Some(&b'[') {
            i += 1;
            let start = i;
            if b.get(i) == Some(&b'-') {
                i += 1;
            }
            while b.get(i).is_some_and(u8::is_ascii_digit) {
                i += 1;
            }
            let n: i64 = std::str::from_utf8(&b[start..i]).ok()?.parse().ok()?;
            (b.get(i) == Some(&b']')).then_some((RcCoord::Rel(n), i + 1))
        } else {
            let start = i;
            while b.get(i).is_some_and(u8::is_ascii_digit) {
                i += 1;
            }
            if i == start {
                return Some((RcCoord::Rel(0), i));
            }
            let n: u32 = std::str::from_utf8(&b[start..i]).ok()?.parse().ok()?;
            (n >= 1).then_some((RcCoord::Abs(n), i))
        }
    }
    if !b.first()?.eq_ignore_ascii_case(&b'R') {
        return None;
    }
    let (row, i) = coord(b, 1)?;
    if !b.get(i)?.eq_ignore_ascii_case(&b'C') {
        return None;
    }
    let (col, j) = coord(b, i + 1)?;
    Some((Tok::Rc { row, col }, j))
}
