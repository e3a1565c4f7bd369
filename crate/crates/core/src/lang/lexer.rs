//! Indentation-aware tokenizer for the mini-language.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    /// Physical (0-based index) line the token starts on.
    pub line: usize,
    /// 1-based column.
    pub column: usize,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Float(f) => format!("float {f}"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Op(op) => format!("'{op}'"),
            Tok::Newline => "end of line".to_string(),
            Tok::Indent => "indent".to_string(),
            Tok::Dedent => "dedent".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

// Longest operators first so that maximal munch works with a linear scan.
const OPERATORS: &[&str] = &[
    "**=", "//=", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "->", "+",
    "-", "*", "/", "%", "<", ">", "=", "(", ")", "[", "]", "{", "}", ",", ":", ".", "@", ";",
];

pub struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    line_start: usize,
    indents: Vec<usize>,
    depth: usize,
    tokens: Vec<Token>,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 0,
            line_start: 0,
            indents: vec![0],
            depth: 0,
            tokens: Vec::new(),
            _src: src,
        }
    }

    fn err(&self, column: usize, expected: &str, found: &str) -> ParseError {
        ParseError {
            line: self.line,
            column,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    fn col(&self) -> usize {
        self.pos - self.line_start + 1
    }

    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn push(&mut self, tok: Tok, line: usize, column: usize) {
        self.tokens.push(Token { tok, line, column });
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut at_line_start = true;
        while self.pos < self.chars.len() {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.handle_indentation()? {
                    continue;
                }
            }
            let c = self.chars[self.pos];
            match c {
                '\n' => {
                    self.newline(&mut at_line_start);
                }
                ' ' | '\t' | '\r' => self.pos += 1,
                '#' => {
                    while self.pos < self.chars.len() && self.chars[self.pos] != '\n' {
                        self.pos += 1;
                    }
                }
                '\\' if self.peek(1) == Some('\n') => {
                    self.pos += 2;
                    self.line += 1;
                    self.line_start = self.pos;
                }
                '\'' | '"' => self.string(None)?,
                c if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) => {
                    self.number()?
                }
                c if c.is_alphabetic() || c == '_' => {
                    let (line, col) = (self.line, self.col());
                    let start = self.pos;
                    while self.pos < self.chars.len()
                        && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_')
                    {
                        self.pos += 1;
                    }
                    let word: String = self.chars[start..self.pos].iter().collect();
                    // string prefixes
                    if matches!(self.peek(0), Some('\'') | Some('"')) {
                        match word.as_str() {
                            "r" | "R" => {
                                self.string(Some('r'))?;
                                continue;
                            }
                            "f" | "F" | "rf" | "fr" | "Rf" | "fR" => {
                                return Err(self.err(col, "expression", "f-string (string formatting is not supported)"));
                            }
                            "b" | "B" | "rb" | "br" => {
                                return Err(self.err(col, "expression", "bytes literal (not supported)"));
                            }
                            _ => {}
                        }
                    }
                    self.push(Tok::Name(word), line, col);
                }
                _ => self.operator()?,
            }
        }
        if !matches!(self.tokens.last().map(|t| &t.tok), None | Some(Tok::Newline)) {
            let (l, c) = (self.line, self.col());
            self.push(Tok::Newline, l, c);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            let (l, c) = (self.line, self.col());
            self.push(Tok::Dedent, l, c);
        }
        let (l, c) = (self.line, self.col());
        self.push(Tok::Eof, l, c);
        Ok(self.tokens)
    }

    fn newline(&mut self, at_line_start: &mut bool) {
        if self.depth == 0 && !matches!(self.tokens.last().map(|t| &t.tok), None | Some(Tok::Newline)) {
            let (l, c) = (self.line, self.col());
            self.push(Tok::Newline, l, c);
        }
        self.pos += 1;
        self.line += 1;
        self.line_start = self.pos;
        if self.depth == 0 {
            *at_line_start = true;
        }
    }

    /// Skips blank and comment-only lines, then emits INDENT/DEDENT for the next
    /// logical line. Returns true when only blank lines remained.
    fn handle_indentation(&mut self) -> Result<bool, ParseError> {
        let width = loop {
            let mut width = 0usize;
            while let Some(c) = self.peek(0) {
                match c {
                    ' ' => width += 1,
                    '\t' => width = (width / 8 + 1) * 8,
                    '\r' => {}
                    _ => break,
                }
                self.pos += 1;
            }
            match self.peek(0) {
                None => return Ok(true),
                Some('#') => {
                    while self.pos < self.chars.len() && self.chars[self.pos] != '\n' {
                        self.pos += 1;
                    }
                    if self.pos >= self.chars.len() {
                        return Ok(true);
                    }
                }
                Some('\n') => {}
                _ => break width,
            }
            // blank or comment-only line
            self.pos += 1;
            self.line += 1;
            self.line_start = self.pos;
        };
        let current = *self.indents.last().expect("indent stack never empty");
        let col = self.col();
        if width > current {
            self.indents.push(width);
            self.push(Tok::Indent, self.line, col);
        } else {
            while width < *self.indents.last().expect("indent stack never empty") {
                self.indents.pop();
                self.push(Tok::Dedent, self.line, col);
            }
            if width != *self.indents.last().expect("indent stack never empty") {
                return Err(self.err(col, "consistent indentation", "unindent that does not match any outer level"));
            }
        }
        Ok(false)
    }

    fn number(&mut self) -> Result<(), ParseError> {
        let (line, col) = (self.line, self.col());
        let start = self.pos;
        let mut is_float = false;
        while let Some(c) = self.peek(0) {
            if c.is_ascii_digit() || c == '_' {
                self.pos += 1;
            } else if c == '.' && !is_float {
                is_float = true;
                self.pos += 1;
            } else if (c == 'e' || c == 'E')
                && (self.peek(1).is_some_and(|d| d.is_ascii_digit())
                    || (matches!(self.peek(1), Some('+') | Some('-'))
                        && self.peek(2).is_some_and(|d| d.is_ascii_digit())))
            {
                is_float = true;
                self.pos += 2;
            } else {
                break;
            }
        }
        if self.peek(0).is_some_and(|c| c.is_alphabetic()) {
            let found: String = self.chars[start..=self.pos].iter().collect();
            return Err(self.err(col, "number", &found));
        }
        let text: String = self.chars[start..self.pos].iter().filter(|c| **c != '_').collect();
        if is_float {
            let v: f64 = text
                .parse()
                .map_err(|_| self.err(col, "float literal", &text))?;
            self.push(Tok::Float(v), line, col);
        } else {
            let v: i64 = text
                .parse()
                .map_err(|_| self.err(col, "integer literal within 64-bit range", &text))?;
            self.push(Tok::Int(v), line, col);
        }
        Ok(())
    }

    fn string(&mut self, prefix: Option<char>) -> Result<(), ParseError> {
        let raw = prefix == Some('r');
        let (line, col) = (self.line, self.col());
        let quote = self.chars[self.pos];
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        let mut out = String::new();
        loop {
            let Some(c) = self.peek(0) else {
                return Err(self.err(col, "closing quote", "end of input"));
            };
            if c == quote {
                if !triple {
                    self.pos += 1;
                    break;
                }
                if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                    self.pos += 3;
                    break;
                }
            }
            if c == '\n' {
                if !triple {
                    return Err(self.err(self.col(), "closing quote", "end of line"));
                }
                out.push('\n');
                self.pos += 1;
                self.line += 1;
                self.line_start = self.pos;
                continue;
            }
            if c == '\\' && !raw {
                let Some(e) = self.peek(1) else {
                    return Err(self.err(self.col(), "escape sequence", "end of input"));
                };
                self.pos += 2;
                match e {
                    'n' => out.push('\n'),
                    't' => out.push('\t'),
                    'r' => out.push('\r'),
                    '0' => out.push('\0'),
                    '\\' => out.push('\\'),
                    '\'' => out.push('\''),
                    '"' => out.push('"'),
                    '\n' => {
                        self.line += 1;
                        self.line_start = self.pos;
                    }
                    'x' | 'u' => {
                        let n = if e == 'x' { 2 } else { 4 };
                        let hex: String = self.chars[self.pos..(self.pos + n).min(self.chars.len())].iter().collect();
                        let cp = u32::from_str_radix(&hex, 16)
                            .ok()
                            .filter(|_| hex.len() == n)
                            .and_then(char::from_u32)
                            .ok_or_else(|| self.err(self.col(), "hex escape", &hex))?;
                        out.push(cp);
                        self.pos += n;
                    }
                    other => {
                        out.push('\\');
                        out.push(other);
                    }
                }
                continue;
            }
            if c == '\\' && raw && self.peek(1).is_some() {
                out.push(c);
                out.push(self.chars[self.pos + 1]);
                self.pos += 2;
                continue;
            }
            out.push(c);
            self.pos += 1;
        }
        self.push(Tok::Str(out), line, col);
        Ok(())
    }

    fn operator(&mut self) -> Result<(), ParseError> {
        let (line, col) = (self.line, self.col());
        for op in OPERATORS {
            let len = op.chars().count();
            if self.pos + len <= self.chars.len() && self.chars[self.pos..self.pos + len].iter().copied().eq(op.chars()) {
                self.pos += len;
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
                    _ => {}
                }
                self.push(Tok::Op(op), line, col);
                return Ok(());
            }
        }
        let found = self.chars[self.pos].to_string();
        Err(self.err(col, "token", &found))
    }
}
