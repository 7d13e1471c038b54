//! OpenQASM 2.0 subset parser.
//!
//! Accepted: the `OPENQASM 2.0;` header, `include "qelib1.inc";`, a single
//! `qreg`, any number of `creg`s, the builtin gate set of [`Gate`], `measure`
//! (single qubit or whole register), `barrier` (ignored) and `//` comments.
//! Gate parameters are constant expressions over literals and `pi`.
//!
//! Anything else (gate definitions, `if`, `reset`, `opaque`) is rejected with
//! a line/column diagnostic.

use std::fmt;

use thiserror::Error;

use super::{Circuit, CircuitError, Gate};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct QasmError {
    pub line: usize,
    pub col: usize,
    pub kind: QasmErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unsupported gate `{0}`")]
    UnsupportedGate(String),
    #[error("unsupported statement `{0}`")]
    UnsupportedStatement(String),
    #[error("unsupported OpenQASM version {0}")]
    Version(String),
    #[error("only qelib1.inc may be included, found \"{0}\"")]
    Include(String),
    #[error("only one qreg is supported")]
    MultipleQregs,
    #[error("no qreg declared before use")]
    NoQreg,
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("qubit index {index} out of range for register of size {size}")]
    QubitOutOfRange { index: usize, size: usize },
    #[error("gate on qubit {0} after it was measured")]
    GateAfterMeasure(usize),
    #[error("unitary2 index {0} has no matrix in the sidecar")]
    MissingUnitary(usize),
    #[error("{0}")]
    Circuit(#[from] CircuitError),
}

/// Extra inputs for the parser.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Matrices referenced by `unitary2(k) q[a],q[b];` statements.
    pub unitaries: Vec<DenseTensor>,
}

pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    parse_qasm_with(text, &ParseOptions::default())
}

pub fn parse_qasm_with(text: &str, options: &ParseOptions) -> Result<Circuit, QasmError> {
    let tokens = lex(text)?;
    let end = text
        .lines()
        .enumerate()
        .last()
        .map(|(i, l)| (i + 1, l.chars().count() + 1))
        .unwrap_or((1, 1));
    Parser {
        tokens,
        pos: 0,
        end,
        qreg: None,
        cregs: Vec::new(),
        circuit: None,
        options,
    }
    .program()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Int(usize),
    Str(String),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(x) => write!(f, "`{x}`"),
            Tok::Int(x) => write!(f, "`{x}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, kind: QasmErrorKind) -> QasmError {
    QasmError { line, col, kind }
}

fn lex(text: &str) -> Result<Vec<Token>, QasmError> {
    const SYMBOLS: [&str; 14] = ["->", "==", ";", ",", "(", ")", "[", "]", "{", "}", "+", "-", "*", "/"];
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let ch = chars[i];
            let (ln, col) = (li + 1, i + 1);
            if ch.is_whitespace() {
                i += 1;
            } else if ch == '/' && chars.get(i + 1) == Some(&'/') {
                break;
            } else if ch.is_ascii_alphabetic() || ch == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: ln,
                    col,
                });
            } else if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
                let start = i;
                let mut real = false;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    real = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        real = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let tok = if real {
                    Tok::Num(s.parse().map_err(|_| {
                        err(ln, col, QasmErrorKind::Syntax(format!("bad number `{s}`")))
                    })?)
                } else {
                    Tok::Int(s.parse().map_err(|_| {
                        err(ln, col, QasmErrorKind::Syntax(format!("bad integer `{s}`")))
                    })?)
                };
                out.push(Token { tok, line: ln, col });
            } else if ch == '"' {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                if i == chars.len() {
                    return Err(err(ln, col, QasmErrorKind::Syntax("unterminated string".into())));
                }
                out.push(Token {
                    tok: Tok::Str(chars[start..i].iter().collect()),
                    line: ln,
                    col,
                });
                i += 1;
            } else if ch == '^' {
                out.push(Token { tok: Tok::Sym("^"), line: ln, col });
                i += 1;
            } else {
                let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
                match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                    Some(s) => {
                        out.push(Token { tok: Tok::Sym(s), line: ln, col });
                        i += s.len();
                    }
                    None => {
                        return Err(err(
                            ln,
                            col,
                            QasmErrorKind::Syntax(format!("unexpected character `{ch}`")),
                        ))
                    }
                }
            }
        }
    }
    Ok(out)
}

/// A qubit argument: single index or whole register.
#[derive(Debug, Clone, Copy)]
enum Arg {
    Qubit(usize),
    Register,
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
    qreg: Option<(String, usize)>,
    cregs: Vec<(String, usize)>,
    circuit: Option<Circuit>,
    options: &'a ParseOptions,
}

impl Parser<'_> {
    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.end)
    }

    fn error(&self, kind: QasmErrorKind) -> QasmError {
        let (l, c) = self.here();
        err(l, c, kind)
    }

    fn syntax(&self, msg: impl Into<String>) -> QasmError {
        self.error(QasmErrorKind::Syntax(msg.into()))
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn describe_next(&self) -> String {
        self.peek()
            .map(|t| t.to_string())
            .unwrap_or_else(|| "end of input".into())
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), QasmError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{sym}`, found {}", self.describe_next())))
        }
    }

    fn ident(&mut self) -> Result<String, QasmError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.syntax(format!("expected identifier, found {}", self.describe_next()))),
        }
    }

    fn int(&mut self) -> Result<usize, QasmError> {
        match self.peek() {
            Some(&Tok::Int(v)) => {
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.syntax(format!("expected integer, found {}", self.describe_next()))),
        }
    }

    fn program(mut self) -> Result<Circuit, QasmError> {
        if self.peek() == Some(&Tok::Ident("OPENQASM".into())) {
            self.pos += 1;
            let (l, c) = self.here();
            match self.next() {
                Some(Tok::Num(2.0)) => {}
                Some(Tok::Int(2)) => {}
                Some(t) => return Err(err(l, c, QasmErrorKind::Version(t.to_string()))),
                None => return Err(self.syntax("expected version number")),
            }
            self.expect(";")?;
        }
        while self.peek().is_some() {
            self.statement()?;
        }
        let end = self.error_at_end(QasmErrorKind::NoQreg);
        self.circuit.ok_or(end)
    }

    fn error_at_end(&self, kind: QasmErrorKind) -> QasmError {
        err(self.end.0, self.end.1, kind)
    }

    fn statement(&mut self) -> Result<(), QasmError> {
        let start = self.here();
        let word = self.ident()?;
        match word.as_str() {
            "include" => {
                let (l, c) = self.here();
                match self.next() {
                    Some(Tok::Str(s)) if s == "qelib1.inc" => {}
                    Some(Tok::Str(s)) => return Err(err(l, c, QasmErrorKind::Include(s))),
                    _ => return Err(err(l, c, QasmErrorKind::Syntax("expected file name".into()))),
                }
                self.expect(";")
            }
            "qreg" => {
                let name = self.ident()?;
                self.expect("[")?;
                let size = self.int()?;
                self.expect("]")?;
                self.expect(";")?;
                if self.qreg.is_some() {
                    return Err(err(start.0, start.1, QasmErrorKind::MultipleQregs));
                }
                let circuit = Circuit::new(size).map_err(|e| err(start.0, start.1, e.into()))?;
                self.qreg = Some((name, size));
                self.circuit = Some(circuit);
                Ok(())
            }
            "creg" => {
                let name = self.ident()?;
                self.expect("[")?;
                let size = self.int()?;
                self.expect("]")?;
                self.expect(";")?;
                self.cregs.push((name, size));
                Ok(())
            }
            "measure" => self.measure(),
            "barrier" => {
                self.qubit_args()?;
                self.expect(";")
            }
            "gate" | "opaque" | "if" | "reset" => Err(err(
                start.0,
                start.1,
                QasmErrorKind::UnsupportedStatement(word),
            )),
            _ => self.gate_call(word, start),
        }
    }

    fn qubit_arg(&mut self) -> Result<Arg, QasmError> {
        let (l, c) = self.here();
        let name = self.ident()?;
        let (qname, size) = self
            .qreg
            .clone()
            .ok_or_else(|| err(l, c, QasmErrorKind::NoQreg))?;
        if name != qname {
            return Err(err(l, c, QasmErrorKind::UnknownRegister(name)));
        }
        if self.eat("[") {
            let (il, ic) = self.here();
            let index = self.int()?;
            self.expect("]")?;
            if index >= size {
                return Err(err(il, ic, QasmErrorKind::QubitOutOfRange { index, size }));
            }
            Ok(Arg::Qubit(index))
        } else {
            Ok(Arg::Register)
        }
    }

    fn qubit_args(&mut self) -> Result<Vec<Arg>, QasmError> {
        let mut args = vec![self.qubit_arg()?];
        while self.eat(",") {
            args.push(self.qubit_arg()?);
        }
        Ok(args)
    }

    fn clbit_arg(&mut self) -> Result<(), QasmError> {
        let (l, c) = self.here();
        let name = self.ident()?;
        let size = self
            .cregs
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| *s)
            .ok_or_else(|| err(l, c, QasmErrorKind::UnknownRegister(name)))?;
        if self.eat("[") {
            let (il, ic) = self.here();
            let index = self.int()?;
            self.expect("]")?;
            if index >= size {
                return Err(err(il, ic, QasmErrorKind::QubitOutOfRange { index, size }));
            }
        }
        Ok(())
    }

    fn measure(&mut self) -> Result<(), QasmError> {
        let arg = self.qubit_arg()?;
        self.expect("->")?;
        self.clbit_arg()?;
        self.expect(";")?;
        let circuit = self.circuit.as_mut().expect("qreg checked by qubit_arg");
        match arg {
            Arg::Qubit(q) => circuit.measure(q).expect("index checked"),
            Arg::Register => circuit.measure_all(),
        }
        Ok(())
    }

    fn gate_call(&mut self, name: String, start: (usize, usize)) -> Result<(), QasmError> {
        let mut params = Vec::new();
        if self.eat("(")
            && !self.eat(")") {
                params.push(self.expr()?);
                while self.eat(",") {
                    params.push(self.expr()?);
                }
                self.expect(")")?;
            }
        let args = self.qubit_args()?;
        self.expect(";")?;

        let at = |kind| err(start.0, start.1, kind);
        let gate = if name == "unitary2" {
            if params.len() != 1 || params[0] < 0.0 || params[0].fract() != 0.0 {
                return Err(at(QasmErrorKind::Syntax(
                    "unitary2 takes one non-negative integer index".into(),
                )));
            }
            let k = params[0] as usize;
            params.clear();
            let m = self
                .options
                .unitaries
                .get(k)
                .ok_or_else(|| at(QasmErrorKind::MissingUnitary(k)))?;
            Gate::Unitary2(Box::new(m.clone()))
        } else {
            Gate::from_name(&name).ok_or_else(|| at(QasmErrorKind::UnsupportedGate(name.clone())))?
        };

        let circuit = self.circuit.as_mut().expect("qreg checked by qubit_arg");
        let n = circuit.n_qubits();
        // register arguments broadcast over every qubit
        let width = if args.iter().any(|a| matches!(a, Arg::Register)) { n } else { 1 };
        if width > 1 && args.len() > 1 {
            return Err(at(QasmErrorKind::UnsupportedStatement(format!(
                "register broadcast of two-qubit gate `{name}`"
            ))));
        }
        for i in 0..width {
            let qubits: Vec<usize> = args
                .iter()
                .map(|a| match a {
                    Arg::Qubit(q) => *q,
                    Arg::Register => i,
                })
                .collect();
            if let Some(&q) = qubits.iter().find(|&&q| circuit.is_measured(q)) {
                return Err(at(QasmErrorKind::GateAfterMeasure(q)));
            }
            circuit
                .push(gate.clone(), &qubits, &params)
                .map_err(|e| at(e.into()))?;
        }
        Ok(())
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<f64, QasmError> {
        let mut v = self.term()?;
        loop {
            if self.eat("+") {
                v += self.term()?;
            } else if self.eat("-") {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, QasmError> {
        let mut v = self.unary()?;
        loop {
            if self.eat("*") {
                v *= self.unary()?;
            } else if self.eat("/") {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, QasmError> {
        if self.eat("-") {
            return Ok(-self.unary()?);
        }
        if self.eat("+") {
            return self.unary();
        }
        let base = self.primary()?;
        if self.eat("^") {
            return Ok(base.powf(self.unary()?));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<f64, QasmError> {
        let (l, c) = self.here();
        match self.next() {
            Some(Tok::Num(v)) => Ok(v),
            Some(Tok::Int(v)) => Ok(v as f64),
            Some(Tok::Sym("(")) => {
                let v = self.expr()?;
                self.expect(")")?;
                Ok(v)
            }
            Some(Tok::Ident(name)) if name == "pi" => Ok(std::f64::consts::PI),
            Some(Tok::Ident(name)) => {
                let f: fn(f64) -> f64 = match name.as_str() {
                    "sin" => f64::sin,
                    "cos" => f64::cos,
                    "tan" => f64::tan,
                    "exp" => f64::exp,
                    "ln" => f64::ln,
                    "sqrt" => f64::sqrt,
                    _ => {
                        return Err(err(
                            l,
                            c,
                            QasmErrorKind::Syntax(format!("unknown identifier `{name}` in expression")),
                        ))
                    }
                };
                self.expect("(")?;
                let v = self.expr()?;
                self.expect(")")?;
                Ok(f(v))
            }
            Some(t) => Err(err(l, c, QasmErrorKind::Syntax(format!("unexpected {t} in expression")))),
            None => Err(self.syntax("unexpected end of input in expression")),
        }
    }
}
