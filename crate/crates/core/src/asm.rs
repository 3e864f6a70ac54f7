//! Text format for machine programs.
//!
//! ```text
//! # comment
//! .dirs n s e w          optional, before the first instruction
//!  1 new center-T0       leading line numbers are optional
//!  2 set we              set <x><d> [to] [y]
//!  3 ctr www             center <x>  (alias: ctr)
//!  4 if sen se +2        if <x> <y> [then] <target>
//!  5 stop done           stop [message]
//! ```
//!
//! A path is a run of direction symbols, or `.` for the empty path. In `set`
//! the first operand is a non-empty path whose last symbol is the direction
//! being redirected and whose prefix addresses the node that owns it.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::graph::{Alphabet, Direction, GraphError, Path};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpTarget {
    Absolute(usize),
    Forward(usize),
    Backward(usize),
}

impl JumpTarget {
    /// The 1-based line this target names when executed from `pc`. May be
    /// zero or negative for backward jumps that leave the program.
    pub fn resolve(self, pc: usize) -> i64 {
        match self {
            JumpTarget::Absolute(n) => n as i64,
            JumpTarget::Forward(k) => pc as i64 + k as i64,
            JumpTarget::Backward(k) => pc as i64 - k as i64,
        }
    }

    pub fn is_relative(self) -> bool {
        !matches!(self, JumpTarget::Absolute(_))
    }
}

impl fmt::Display for JumpTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpTarget::Absolute(n) => write!(f, "{n}"),
            JumpTarget::Forward(k) => write!(f, "+{k}"),
            JumpTarget::Backward(k) => write!(f, "-{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instruction {
    New { label: Option<String> },
    Set { x: Path, d: Direction, y: Path },
    Center { x: Path },
    If { x: Path, y: Path, target: JumpTarget },
    Stop { message: String },
}

impl Instruction {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instruction::New { .. } => "new",
            Instruction::Set { .. } => "set",
            Instruction::Center { .. } => "ctr",
            Instruction::If { .. } => "if",
            Instruction::Stop { .. } => "stop",
        }
    }

    pub(crate) fn directions(&self) -> Vec<Direction> {
        match self {
            Instruction::New { .. } | Instruction::Stop { .. } => Vec::new(),
            Instruction::Set { x, d, y } => {
                let mut v = x.directions().to_vec();
                v.push(*d);
                v.extend_from_slice(y.directions());
                v
            }
            Instruction::Center { x } => x.directions().to_vec(),
            Instruction::If { x, y, .. } => {
                x.directions().iter().chain(y.directions()).copied().collect()
            }
        }
    }

    /// True when every direction mentioned belongs to `alphabet`.
    pub fn fits(&self, alphabet: &Alphabet) -> bool {
        self.directions().into_iter().all(|d| alphabet.contains(d))
    }
}

impl fmt::Display for Instruction {
    /// Canonical single-line form, without a line number.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::New { label: None } => f.write_str("new"),
            Instruction::New { label: Some(l) } => write!(f, "new {l}"),
            Instruction::Set { x, d, y } => {
                f.write_str("set ")?;
                x.directions().iter().try_for_each(|d| write!(f, "{d}"))?;
                write!(f, "{d}")?;
                if !y.is_empty() {
                    write!(f, " {y}")?;
                }
                Ok(())
            }
            Instruction::Center { x } => write!(f, "ctr {x}"),
            Instruction::If { x, y, target } => write!(f, "if {x} {y} {target}"),
            Instruction::Stop { message } if message.is_empty() => f.write_str("stop"),
            Instruction::Stop { message } => write!(f, "stop {message}"),
        }
    }
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A parsed program. Instruction `i` (1-based) is `instructions[i - 1]`.
///
/// Spans are diagnostic metadata and do not take part in equality.
#[derive(Debug, Clone)]
pub struct Program {
    alphabet: Alphabet,
    instructions: Vec<Instruction>,
    spans: Vec<Span>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.instructions == other.instructions
    }
}

impl Eq for Program {}

impl Program {
    /// Builds a program from instructions, checking their directions against `alphabet`.
    pub fn new(alphabet: Alphabet, instructions: Vec<Instruction>) -> Result<Self, GraphError> {
        for ins in &instructions {
            if let Some(d) = ins.directions().into_iter().find(|&d| !alphabet.contains(d)) {
                return Err(GraphError::UnknownDirection(d));
            }
        }
        let spans = (1..=instructions.len())
            .map(|line| Span { line, column: 1 })
            .collect();
        Ok(Self {
            alphabet,
            instructions,
            spans,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Instruction at 1-based index `pc`.
    pub fn get(&self, pc: usize) -> Option<&Instruction> {
        pc.checked_sub(1).and_then(|i| self.instructions.get(i))
    }

    pub fn span(&self, pc: usize) -> Option<Span> {
        pc.checked_sub(1).and_then(|i| self.spans.get(i)).copied()
    }

    pub fn into_instructions(self) -> Vec<Instruction> {
        self.instructions
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("direction `{0}` is not in the alphabet")]
    UnknownDirection(char),
    #[error("malformed jump target `{0}`")]
    BadTarget(String),
    #[error("line number {found} out of sequence, expected {expected}")]
    LineNumber { expected: usize, found: String },
    #[error("set needs a non-empty direction operand")]
    EmptyDirection,
    #[error("center needs a non-empty path")]
    EmptyCenter,
    #[error("missing operand for `{0}`")]
    MissingOperand(&'static str),
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("bad .dirs directive: {0}")]
    Directive(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: Span,
    pub kind: ParseErrorKind,
}

struct Token<'a> {
    text: &'a str,
    offset: usize,
    column: usize,
}

impl<'a> Token<'a> {
    fn new(line: &'a str, start: usize, end: usize) -> Self {
        Token {
            text: &line[start..end],
            offset: start,
            column: line[..start].chars().count() + 1,
        }
    }
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token::new(line, s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token::new(line, s, line.len()));
    }
    tokens
}

/// Remainder of `line` after `tok`, trimmed.
fn rest_after<'a>(line: &'a str, tok: &Token<'_>) -> &'a str {
    line[tok.offset + tok.text.len()..].trim()
}

struct LineParser<'a> {
    alphabet: &'a Alphabet,
    line_no: usize,
}

impl LineParser<'_> {
    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            span: Span { line: self.line_no, column },
            kind,
        }
    }

    fn path(&self, tok: &Token<'_>) -> Result<Path, ParseError> {
        if tok.text == "." {
            return Ok(Path::empty());
        }
        let mut dirs = Vec::with_capacity(tok.text.len());
        for (i, c) in tok.text.chars().enumerate() {
            match self.alphabet.direction(c) {
                Some(d) => dirs.push(d),
                None => return Err(self.err(tok.column + i, ParseErrorKind::UnknownDirection(c))),
            }
        }
        Ok(Path::new(dirs))
    }

    fn target(&self, tok: &Token<'_>) -> Result<JumpTarget, ParseError> {
        let bad = || self.err(tok.column, ParseErrorKind::BadTarget(tok.text.to_owned()));
        let (ctor, digits): (fn(usize) -> JumpTarget, &str) =
            if let Some(d) = tok.text.strip_prefix('+') {
                (JumpTarget::Forward, d)
            } else if let Some(d) = tok.text.strip_prefix('-') {
                (JumpTarget::Backward, d)
            } else {
                (JumpTarget::Absolute, tok.text)
            };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        match digits.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(ctor(n)),
            _ => Err(bad()),
        }
    }

    fn instruction(&self, line: &str, toks: &[Token<'_>]) -> Result<Instruction, ParseError> {
        let (head, ops) = toks.split_first().expect("caller passes a non-empty line");
        let end_col = |toks: &[Token<'_>]| {
            toks.last()
                .map(|t| t.column + t.text.chars().count())
                .unwrap_or(head.column)
        };
        let extra = |ops: &[Token<'_>], n: usize| -> Result<(), ParseError> {
            match ops.get(n) {
                Some(t) => Err(self.err(t.column, ParseErrorKind::UnexpectedToken(t.text.to_owned()))),
                None => Ok(()),
            }
        };
        match head.text {
            "new" => {
                let label = (!ops.is_empty()).then(|| rest_after(line, head).to_owned());
                Ok(Instruction::New { label })
            }
            "set" => {
                let first = ops
                    .first()
                    .ok_or_else(|| self.err(end_col(toks), ParseErrorKind::MissingOperand("set")))?;
                if first.text == "." {
                    return Err(self.err(first.column, ParseErrorKind::EmptyDirection));
                }
                let pathdir = self.path(first)?;
                let (&d, x) = pathdir
                    .directions()
                    .split_last()
                    .expect("non-empty path token");
                let mut rest = &ops[1..];
                if rest.first().is_some_and(|t| t.text == "to") {
                    if rest.len() == 1 {
                        return Err(self.err(end_col(toks), ParseErrorKind::MissingOperand("set")));
                    }
                    rest = &rest[1..];
                }
                let y = match rest.first() {
                    Some(t) => self.path(t)?,
                    None => Path::empty(),
                };
                extra(rest, 1)?;
                Ok(Instruction::Set {
                    x: Path::new(x.to_vec()),
                    d,
                    y,
                })
            }
            "center" | "ctr" => {
                let tok = ops
                    .first()
                    .ok_or_else(|| self.err(end_col(toks), ParseErrorKind::MissingOperand("center")))?;
                let x = self.path(tok)?;
                if x.is_empty() {
                    return Err(self.err(tok.column, ParseErrorKind::EmptyCenter));
                }
                extra(ops, 1)?;
                Ok(Instruction::Center { x })
            }
            "if" => {
                let missing = || self.err(end_col(toks), ParseErrorKind::MissingOperand("if"));
                let x = self.path(ops.first().ok_or_else(missing)?)?;
                let y = self.path(ops.get(1).ok_or_else(missing)?)?;
                let mut rest = &ops[2..];
                if rest.first().is_some_and(|t| t.text == "then") {
                    rest = &rest[1..];
                }
                let target = self.target(rest.first().ok_or_else(missing)?)?;
                extra(rest, 1)?;
                Ok(Instruction::If { x, y, target })
            }
            "stop" => Ok(Instruction::Stop {
                message: rest_after(line, head).to_owned(),
            }),
            other => Err(self.err(head.column, ParseErrorKind::UnknownMnemonic(other.to_owned()))),
        }
    }
}

/// Parses program text. See the module docs for the accepted syntax.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let mut alphabet = Alphabet::default();
    let mut instructions = Vec::new();
    let mut spans = Vec::new();
    let mut saw_dirs = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let toks = tokenize(line);
        let Some(first) = toks.first() else { continue };

        if first.text == ".dirs" {
            let err = |column, msg: String| ParseError {
                span: Span { line: line_no, column },
                kind: ParseErrorKind::Directive(msg),
            };
            if !instructions.is_empty() {
                return Err(err(first.column, "must precede the first instruction".into()));
            }
            if saw_dirs {
                return Err(err(first.column, "declared twice".into()));
            }
            let mut dirs = Vec::new();
            for t in &toks[1..] {
                let mut chars = t.text.chars();
                let (Some(c), None) = (chars.next(), chars.next()) else {
                    return Err(err(t.column, format!("`{}` is not a single symbol", t.text)));
                };
                dirs.push(Direction::new(c).map_err(|e| err(t.column, e.to_string()))?);
            }
            alphabet = Alphabet::new(dirs).map_err(|e| err(first.column, e.to_string()))?;
            saw_dirs = true;
            continue;
        }

        let mut body = &toks[..];
        if first.text.bytes().all(|b| b.is_ascii_digit()) {
            let expected = instructions.len() + 1;
            if first.text.parse::<usize>().ok() != Some(expected) {
                return Err(ParseError {
                    span: Span { line: line_no, column: first.column },
                    kind: ParseErrorKind::LineNumber {
                        expected,
                        found: first.text.to_owned(),
                    },
                });
            }
            body = &toks[1..];
            if body.is_empty() {
                return Err(ParseError {
                    span: Span { line: line_no, column: first.column },
                    kind: ParseErrorKind::MissingOperand("line"),
                });
            }
        }

        let parser = LineParser {
            alphabet: &alphabet,
            line_no,
        };
        let ins = parser.instruction(line, body)?;
        instructions.push(ins);
        spans.push(Span {
            line: line_no,
            column: body[0].column,
        });
    }

    Ok(Program {
        alphabet,
        instructions,
        spans,
    })
}

/// Canonical text: numbered lines, single spaces, `ctr` for center, and a
/// `.dirs` header only when the alphabet differs from the default.
pub fn render(program: &Program) -> String {
    let mut out = String::new();
    if program.alphabet != Alphabet::default() {
        let _ = writeln!(out, ".dirs {}", program.alphabet);
    }
    for (i, ins) in program.instructions.iter().enumerate() {
        let _ = writeln!(out, "{} {ins}", i + 1);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Note,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// Jump to exactly one past the last line: a deliberate exit.
    ExitJump { target: i64 },
    /// Jump further than one past the end. Still halts at runtime.
    JumpBeyondEnd { target: i64 },
    /// Jump to a line below 1. Faults at runtime.
    JumpBeforeStart { target: i64 },
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based instruction index.
    pub at: usize,
    pub span: Span,
    pub severity: Severity,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Note => "note",
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}: {sev}: instruction {}: ", self.span, self.at)?;
        match self.kind {
            DiagnosticKind::ExitJump { target } => {
                write!(f, "jump to line {target} exits the program")
            }
            DiagnosticKind::JumpBeyondEnd { target } => {
                write!(f, "jump to line {target} is beyond the end; it halts")
            }
            DiagnosticKind::JumpBeforeStart { target } => {
                write!(f, "target line {target} invalid")
            }
            DiagnosticKind::Unreachable => f.write_str("unreachable instruction"),
        }
    }
}

/// Static checks on jump targets plus a naive reachability scan that takes
/// both arms of every `if`.
pub fn validate(program: &Program) -> Vec<Diagnostic> {
    let len = program.len();
    let mut diags = Vec::new();
    let span = |pc: usize| program.span(pc).unwrap_or_default();

    for (i, ins) in program.instructions.iter().enumerate() {
        let pc = i + 1;
        if let Instruction::If { target, .. } = ins {
            let t = target.resolve(pc);
            let kind = if t < 1 {
                Some((Severity::Error, DiagnosticKind::JumpBeforeStart { target: t }))
            } else if t == len as i64 + 1 {
                Some((Severity::Note, DiagnosticKind::ExitJump { target: t }))
            } else if t > len as i64 + 1 {
                Some((Severity::Warning, DiagnosticKind::JumpBeyondEnd { target: t }))
            } else {
                None
            };
            if let Some((severity, kind)) = kind {
                diags.push(Diagnostic { at: pc, span: span(pc), severity, kind });
            }
        }
    }

    let mut reached = vec![false; len + 1];
    let mut stack = vec![1usize];
    while let Some(pc) = stack.pop() {
        if pc < 1 || pc > len || reached[pc] {
            continue;
        }
        reached[pc] = true;
        match &program.instructions[pc - 1] {
            Instruction::Stop { .. } => {}
            Instruction::If { target, .. } => {
                stack.push(pc + 1);
                if let Ok(t) = usize::try_from(target.resolve(pc)) {
                    stack.push(t);
                }
            }
            _ => stack.push(pc + 1),
        }
    }
    for pc in 1..=len {
        if !reached[pc] {
            diags.push(Diagnostic {
                at: pc,
                span: span(pc),
                severity: Severity::Warning,
                kind: DiagnosticKind::Unreachable,
            });
        }
    }
    diags
}
