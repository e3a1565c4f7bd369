//! Front end for the traced mini-language: a Python-flavoured subset covering
//! recursion, scalar and collection literals, arithmetic, comparison chains,
//! indexing/slicing and structured control flow.

pub mod ast;
mod lexer;
mod parser;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{LineNo, Module};
pub use validate::{validate, ValidationReport, Violation};

/// Name of the function invoked with an instance's input binding.
pub const ENTRY_NAME: &str = "main_solution";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: expected {}, found {}",
            self.line, self.column, self.expected, self.found
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Identifier carried into reports; defaults to "program".
    pub program_id: Option<String>,
    /// Added to every physical line number, so that source line 1 is
    /// rendered as `line_offset + 1`.
    #[serde(default)]
    pub line_offset: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceLine {
    pub number: LineNo,
    pub text: String,
}

/// A parsed program together with its line table.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceProgram {
    pub program_id: String,
    pub source_text: String,
    pub lines: Vec<SourceLine>,
    pub ast: Module,
    pub entry_name: String,
    pub line_offset: u32,
}

impl SourceProgram {
    /// Source text of a program line, trailing whitespace removed.
    pub fn line_text(&self, number: LineNo) -> &str {
        number
            .checked_sub(self.line_offset + 1)
            .and_then(|i| self.lines.get(i as usize))
            .map_or("", |l| l.text.trim_end())
    }

    pub fn function(&self, name: &str) -> Option<&ast::Function> {
        self.ast.functions().find(|f| f.name == name)
    }

    pub fn entry(&self) -> &ast::Function {
        self.function(&self.entry_name).expect("parse guarantees an entry function")
    }

    pub fn ast_json(&self) -> serde_json::Value {
        self.ast.to_json()
    }

    /// Line table joined back into text; equals the normalized source.
    pub fn joined_lines(&self) -> String {
        self.lines.iter().map(|l| l.text.as_str()).collect::<Vec<_>>().join("\n")
    }
}

/// Line endings become `\n` and a single trailing newline is dropped.
pub fn normalize_source(source: &str) -> String {
    let s = source.replace("\r\n", "\n");
    match s.strip_suffix('\n') {
        Some(stripped) => stripped.to_string(),
        None => s,
    }
}

pub fn parse(source: &str) -> Result<SourceProgram, ParseError> {
    parse_with(source, &ParseOptions::default())
}

pub fn parse_with(source: &str, opts: &ParseOptions) -> Result<SourceProgram, ParseError> {
    let offset = opts.line_offset;
    let to_program_line = |mut e: ParseError| {
        e.line = e.line + 1 + offset as usize;
        e
    };
    let normalized = normalize_source(source);
    if normalized.trim().is_empty() {
        return Err(ParseError {
            line: offset as usize + 1,
            column: 1,
            expected: "a function definition".into(),
            found: "empty source".into(),
        });
    }
    let tokens = lexer::Lexer::new(&normalized).tokenize().map_err(to_program_line)?;
    let module = parser::Parser::new(tokens, offset).parse_module().map_err(to_program_line)?;

    let mut seen = std::collections::HashSet::new();
    for f in module.functions() {
        if !seen.insert(f.name.as_str()) {
            return Err(ParseError {
                line: f.line as usize,
                column: 1,
                expected: "unique function names".into(),
                found: format!("second definition of '{}'", f.name),
            });
        }
    }
    if !seen.contains(ENTRY_NAME) {
        let last = normalized.lines().count() + offset as usize;
        return Err(ParseError {
            line: last,
            column: 1,
            expected: format!("a top-level function named '{ENTRY_NAME}'"),
            found: "none".into(),
        });
    }

    let lines = normalized
        .split('\n')
        .enumerate()
        .map(|(i, text)| SourceLine { number: offset + i as u32 + 1, text: text.to_string() })
        .collect();
    Ok(SourceProgram {
        program_id: opts.program_id.clone().unwrap_or_else(|| "program".to_string()),
        source_text: normalized,
        lines,
        ast: module,
        entry_name: ENTRY_NAME.to_string(),
        line_offset: offset,
    })
}

/// Parses a standalone expression such as an input binding repr.
pub fn parse_expression(text: &str) -> Result<ast::Expr, ParseError> {
    let normalized = normalize_source(text);
    let tokens = lexer::Lexer::new(normalized.trim()).tokenize().map_err(|mut e| {
        e.line += 1;
        e
    })?;
    parser::Parser::new(tokens, 0).parse_standalone_expr().map_err(|mut e| {
        e.line += 1;
        e
    })
}
