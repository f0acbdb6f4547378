//! OpenQASM 2.0 subset: `qreg`/`creg`, the gate basis of [`Gate`],
//! `measure` and `barrier`. User gate definitions, classical control and
//! `reset` are rejected.
//!
//! Compiled circuits carry their layout in two comment pragmas so the
//! ordinary QASM stays loadable by other tools:
//!
//! ```text
//! // qvul:logical 4
//! // qvul:layout 3,5,8,...
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{CompiledCircuit, Gate, LogicalCircuit};
use crate::error::{Error, Result, Span};
use crate::topology::DeviceTopology;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Real(f64),
    Str(String),
    Sym(char),
    Arrow,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

#[derive(Debug, Default)]
struct Pragmas {
    logical: Option<(usize, Span)>,
    layout: Option<(Vec<usize>, Span)>,
}

fn lex(text: &str) -> Result<(Vec<Token>, Pragmas)> {
    let mut tokens = Vec::new();
    let mut pragmas = Pragmas::default();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let bump = |i: &mut usize, line: &mut usize, col: &mut usize| {
        let c = chars[*i];
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            bump(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            let start = i + 2;
            while i < chars.len() && chars[i] != '\n' {
                bump(&mut i, &mut line, &mut col);
            }
            let comment: String = chars[start..i].iter().collect();
            parse_pragma(comment.trim(), span, &mut pragmas)?;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump(&mut i, &mut line, &mut col);
            }
            tokens.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                span,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut is_real = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump(&mut i, &mut line, &mut col);
            }
            if i < chars.len() && chars[i] == '.' {
                is_real = true;
                bump(&mut i, &mut line, &mut col);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump(&mut i, &mut line, &mut col);
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = (i, line, col);
                bump(&mut i, &mut line, &mut col);
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    bump(&mut i, &mut line, &mut col);
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    is_real = true;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump(&mut i, &mut line, &mut col);
                    }
                } else {
                    (i, line, col) = save;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let tok = if is_real {
                Tok::Real(s.parse().map_err(|_| Error::Syntax {
                    span,
                    msg: format!("bad number `{s}`"),
                })?)
            } else {
                Tok::Int(s.parse().map_err(|_| Error::Syntax {
                    span,
                    msg: format!("bad integer `{s}`"),
                })?)
            };
            tokens.push(Token { tok, span });
            continue;
        }
        if c == '"' {
            bump(&mut i, &mut line, &mut col);
            let start = i;
            while i < chars.len() && chars[i] != '"' {
                bump(&mut i, &mut line, &mut col);
            }
            if i == chars.len() {
                return Err(Error::Syntax {
                    span,
                    msg: "unterminated string".into(),
                });
            }
            let s = chars[start..i].iter().collect();
            bump(&mut i, &mut line, &mut col);
            tokens.push(Token { tok: Tok::Str(s), span });
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            bump(&mut i, &mut line, &mut col);
            bump(&mut i, &mut line, &mut col);
            tokens.push(Token { tok: Tok::Arrow, span });
            continue;
        }
        if ";,[]()+-*/^{}".contains(c) {
            bump(&mut i, &mut line, &mut col);
            tokens.push(Token { tok: Tok::Sym(c), span });
            continue;
        }
        return Err(Error::Syntax {
            span,
            msg: format!("unexpected character `{c}`"),
        });
    }
    Ok((tokens, pragmas))
}

fn parse_pragma(comment: &str, span: Span, pragmas: &mut Pragmas) -> Result<()> {
    let bad = |msg: &str| Error::Syntax {
        span,
        msg: msg.to_string(),
    };
    if let Some(rest) = comment.strip_prefix("qvul:logical") {
        let k = rest
            .trim()
            .parse()
            .map_err(|_| bad("qvul:logical expects an integer"))?;
        pragmas.logical = Some((k, span));
    } else if let Some(rest) = comment.strip_prefix("qvul:layout") {
        let layout = rest
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("qvul:layout expects comma separated integers"))?;
        pragmas.layout = Some((layout, span));
    }
    Ok(())
}

struct Register {
    name: String,
    offset: usize,
    size: usize,
}

/// An operand: a single index or a whole register (broadcast).
enum Arg {
    One(usize),
    All(Vec<usize>),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    qregs: Vec<Register>,
    cregs: Vec<Register>,
    ops: Vec<Gate>,
    eof: Span,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or(self.eof)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            span: self.span(),
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Result<Token> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(Token { tok: Tok::Sym(s), .. }) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{c}`")),
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, Span)> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.span)),
            _ => Err(Error::Syntax {
                span: t.span,
                msg: "expected identifier".into(),
            }),
        }
    }

    fn int(&mut self) -> Result<usize> {
        let t = self.next()?;
        match t.tok {
            Tok::Int(v) => Ok(v as usize),
            _ => Err(Error::Syntax {
                span: t.span,
                msg: "expected integer".into(),
            }),
        }
    }

    fn program(&mut self) -> Result<()> {
        if matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if s == "OPENQASM") {
            self.pos += 1;
            let t = self.next()?;
            match t.tok {
                Tok::Real(v) if (v - 2.0).abs() < 1e-9 => {}
                Tok::Int(2) => {}
                _ => {
                    return Err(Error::Syntax {
                        span: t.span,
                        msg: "only OPENQASM 2.0 is supported".into(),
                    })
                }
            }
            self.expect_sym(';')?;
        }
        while self.peek().is_some() {
            self.statement()?;
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<()> {
        let (word, span) = self.ident()?;
        match word.as_str() {
            "include" => {
                match self.next()?.tok {
                    Tok::Str(_) => {}
                    _ => return self.err("expected file name after include"),
                }
                self.expect_sym(';')
            }
            "qreg" | "creg" => {
                let (name, _) = self.ident()?;
                self.expect_sym('[')?;
                let size = self.int()?;
                self.expect_sym(']')?;
                self.expect_sym(';')?;
                let regs = if word == "qreg" {
                    &mut self.qregs
                } else {
                    &mut self.cregs
                };
                if regs.iter().any(|r| r.name == name) {
                    return Err(Error::Syntax {
                        span,
                        msg: format!("register `{name}` declared twice"),
                    });
                }
                let offset = regs.iter().map(|r| r.size).sum();
                regs.push(Register { name, offset, size });
                Ok(())
            }
            "measure" => {
                let q = self.arg(true)?;
                match self.next()?.tok {
                    Tok::Arrow => {}
                    _ => return self.err("expected `->` in measure"),
                }
                let c = self.arg(false)?;
                self.expect_sym(';')?;
                match (q, c) {
                    (Arg::One(qubit), Arg::One(clbit)) => self.ops.push(Gate::Measure { qubit, clbit }),
                    (Arg::All(qs), Arg::All(cs)) if qs.len() == cs.len() => {
                        for (qubit, clbit) in qs.into_iter().zip(cs) {
                            self.ops.push(Gate::Measure { qubit, clbit });
                        }
                    }
                    _ => {
                        return Err(Error::Syntax {
                            span,
                            msg: "measure operands must both be bits or equal-size registers".into(),
                        })
                    }
                }
                Ok(())
            }
            "barrier" => {
                let mut qubits = Vec::new();
                loop {
                    match self.arg(true)? {
                        Arg::One(q) => qubits.push(q),
                        Arg::All(qs) => qubits.extend(qs),
                    }
                    if !self.eat_sym(',') {
                        break;
                    }
                }
                self.expect_sym(';')?;
                self.ops.push(Gate::Barrier(qubits));
                Ok(())
            }
            "id" | "x" | "sx" | "h" | "z" | "rz" | "cx" | "swap" => self.gate(&word, span),
            "gate" | "opaque" => Err(Error::UnsupportedGate {
                name: format!("{word} definition"),
                span,
            }),
            _ => Err(Error::UnsupportedGate { name: word, span }),
        }
    }

    fn gate(&mut self, name: &str, span: Span) -> Result<()> {
        let angle = if name == "rz" {
            self.expect_sym('(')?;
            let v = self.expr()?;
            self.expect_sym(')')?;
            Some(v)
        } else {
            None
        };
        let mut args = vec![self.arg(true)?];
        while self.eat_sym(',') {
            args.push(self.arg(true)?);
        }
        self.expect_sym(';')?;

        let arity = if name == "cx" || name == "swap" { 2 } else { 1 };
        if args.len() != arity {
            return Err(Error::Syntax {
                span,
                msg: format!("`{name}` takes {arity} operand(s), got {}", args.len()),
            });
        }
        let width = args
            .iter()
            .filter_map(|a| match a {
                Arg::All(v) => Some(v.len()),
                Arg::One(_) => None,
            })
            .max();
        let reps = width.unwrap_or(1);
        for a in &args {
            if let Arg::All(v) = a {
                if v.len() != reps {
                    return Err(Error::Syntax {
                        span,
                        msg: "register operands have different sizes".into(),
                    });
                }
            }
        }
        let pick = |a: &Arg, i: usize| match a {
            Arg::One(q) => *q,
            Arg::All(v) => v[i],
        };
        for i in 0..reps {
            let q = pick(&args[0], i);
            let gate = match name {
                "id" => Gate::Id(q),
                "x" => Gate::X(q),
                "sx" => Gate::Sx(q),
                "h" => Gate::H(q),
                "z" => Gate::Z(q),
                "rz" => Gate::Rz(q, angle.unwrap()),
                "cx" => Gate::Cx(q, pick(&args[1], i)),
                "swap" => Gate::Swap(q, pick(&args[1], i)),
                _ => unreachable!(),
            };
            if let Gate::Cx(a, b) | Gate::Swap(a, b) = gate {
                if a == b {
                    return Err(Error::InvalidGate(format!(
                        "{name} at {span} has duplicate operands {a},{b}"
                    )));
                }
            }
            self.ops.push(gate);
        }
        Ok(())
    }

    fn arg(&mut self, quantum: bool) -> Result<Arg> {
        let (name, span) = self.ident()?;
        let regs = if quantum { &self.qregs } else { &self.cregs };
        let Some(reg) = regs.iter().find(|r| r.name == name) else {
            return Err(Error::Syntax {
                span,
                msg: format!(
                    "undeclared {} register `{name}`",
                    if quantum { "quantum" } else { "classical" }
                ),
            });
        };
        let (offset, size) = (reg.offset, reg.size);
        if self.eat_sym('[') {
            let idx = self.int()?;
            self.expect_sym(']')?;
            if idx >= size {
                return Err(Error::OperandOutOfRange(format!(
                    "{name}[{idx}] at {span} (register size {size})"
                )));
            }
            Ok(Arg::One(offset + idx))
        } else {
            Ok(Arg::All((offset..offset + size).collect()))
        }
    }

    fn expr(&mut self) -> Result<f64> {
        let mut v = self.term()?;
        loop {
            if self.eat_sym('+') {
                v += self.term()?;
            } else if self.eat_sym('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64> {
        let mut v = self.factor()?;
        loop {
            if self.eat_sym('*') {
                v *= self.factor()?;
            } else if self.eat_sym('/') {
                v /= self.factor()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn factor(&mut self) -> Result<f64> {
        if self.eat_sym('-') {
            return Ok(-self.factor()?);
        }
        if self.eat_sym('+') {
            return self.factor();
        }
        if self.eat_sym('(') {
            let v = self.expr()?;
            self.expect_sym(')')?;
            return Ok(v);
        }
        let t = self.next()?;
        match t.tok {
            Tok::Int(v) => Ok(v as f64),
            Tok::Real(v) => Ok(v),
            Tok::Ident(s) if s == "pi" => Ok(PI),
            _ => Err(Error::Syntax {
                span: t.span,
                msg: "expected number, `pi` or `(`".into(),
            }),
        }
    }
}

struct Parsed {
    num_qubits: usize,
    num_clbits: usize,
    ops: Vec<Gate>,
    pragmas: Pragmas,
}

fn parse_raw(text: &str) -> Result<Parsed> {
    let (tokens, pragmas) = lex(text)?;
    let lines = text.lines().count().max(1);
    let mut p = Parser {
        tokens,
        pos: 0,
        qregs: Vec::new(),
        cregs: Vec::new(),
        ops: Vec::new(),
        eof: Span {
            line: lines,
            col: text.lines().last().map(|l| l.len() + 1).unwrap_or(1),
        },
    };
    p.program()?;
    Ok(Parsed {
        num_qubits: p.qregs.iter().map(|r| r.size).sum(),
        num_clbits: p.cregs.iter().map(|r| r.size).sum(),
        ops: p.ops,
        pragmas,
    })
}

/// Parse OpenQASM 2.0 text into a logical circuit. Registers are flattened in
/// declaration order.
pub fn parse_qasm(text: &str) -> Result<LogicalCircuit> {
    let parsed = parse_raw(text)?;
    LogicalCircuit::new(parsed.num_qubits, parsed.num_clbits, parsed.ops)
}

/// Parse a compiled circuit for `device`, honoring `qvul:layout` and
/// `qvul:logical` pragmas when present (trivial layout, all qubits logical
/// otherwise). A quantum register smaller than the device is padded with idle
/// qubits.
pub fn parse_compiled(text: &str, device: &DeviceTopology) -> Result<CompiledCircuit> {
    let parsed = parse_raw(text)?;
    let n = device.num_qubits();
    if parsed.num_qubits > n {
        return Err(Error::InvalidCircuit(format!(
            "circuit declares {} qubits, device {} has {n}",
            parsed.num_qubits,
            device.name()
        )));
    }
    let layout = match parsed.pragmas.layout {
        Some((layout, span)) => {
            if layout.len() != n {
                return Err(Error::Syntax {
                    span,
                    msg: format!("layout has {} entries, device has {n}", layout.len()),
                });
            }
            layout
        }
        None => (0..n).collect(),
    };
    let logical = parsed.pragmas.logical.map(|(k, _)| k).unwrap_or(parsed.num_qubits);
    CompiledCircuit::new(device.clone(), parsed.ops, layout, logical, parsed.num_clbits)
}

fn write_ops(out: &mut String, ops: &[Gate]) {
    for op in ops {
        match op {
            Gate::Id(q) => writeln!(out, "id q[{q}];"),
            Gate::X(q) => writeln!(out, "x q[{q}];"),
            Gate::Sx(q) => writeln!(out, "sx q[{q}];"),
            Gate::Rz(q, a) => writeln!(out, "rz({a}) q[{q}];"),
            Gate::H(q) => writeln!(out, "h q[{q}];"),
            Gate::Z(q) => writeln!(out, "z q[{q}];"),
            Gate::Cx(a, b) => writeln!(out, "cx q[{a}],q[{b}];"),
            Gate::Swap(a, b) => writeln!(out, "swap q[{a}],q[{b}];"),
            Gate::Measure { qubit, clbit } => writeln!(out, "measure q[{qubit}] -> c[{clbit}];"),
            Gate::Barrier(qs) => {
                let args: Vec<String> = qs.iter().map(|q| format!("q[{q}]")).collect();
                writeln!(out, "barrier {};", args.join(","))
            }
        }
        .expect("writing to a String cannot fail");
    }
}

fn header(out: &mut String, qubits: usize, clbits: usize) {
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    writeln!(out, "qreg q[{qubits}];").unwrap();
    if clbits > 0 {
        writeln!(out, "creg c[{clbits}];").unwrap();
    }
}

/// Canonical one-op-per-line form. Angles use the shortest decimal that
/// round-trips exactly.
pub fn serialize_qasm(circuit: &LogicalCircuit) -> String {
    let mut out = String::new();
    header(&mut out, circuit.num_qubits(), circuit.num_clbits());
    write_ops(&mut out, circuit.ops());
    out
}

pub fn serialize_compiled(circuit: &CompiledCircuit) -> String {
    let mut out = String::new();
    writeln!(out, "// qvul:logical {}", circuit.num_logical()).unwrap();
    let layout: Vec<String> = circuit.initial_layout().iter().map(|p| p.to_string()).collect();
    writeln!(out, "// qvul:layout {}", layout.join(",")).unwrap();
    writeln!(out, "// device: {}", circuit.device().name()).unwrap();
    header(&mut out, circuit.num_physical(), circuit.num_output_bits());
    write_ops(&mut out, circuit.ops());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program_without_header() {
        let c = parse_qasm("qreg q[1]; creg c[1]; h q[0]; measure q[0]->c[0];").unwrap();
        assert_eq!(c.num_qubits(), 1);
        assert_eq!(c.num_clbits(), 1);
        assert_eq!(c.ops(), &[Gate::H(0), Gate::Measure { qubit: 0, clbit: 0 }]);
    }

    #[test]
    fn duplicate_cx_operands_rejected() {
        let err = parse_qasm("qreg q[2]; cx q[0],q[0];").unwrap_err();
        assert!(matches!(err, Error::InvalidGate(_)), "{err}");
    }

    #[test]
    fn unsupported_gate_reports_position() {
        let err = parse_qasm("OPENQASM 2.0;\nqreg q[2];\nccx q[0],q[1],q[0];").unwrap_err();
        match err {
            Error::UnsupportedGate { name, span } => {
                assert_eq!(name, "ccx");
                assert_eq!(span, Span { line: 3, col: 1 });
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn gate_definitions_rejected() {
        let err = parse_qasm("qreg q[1]; gate foo a { x a; }").unwrap_err();
        assert!(matches!(err, Error::UnsupportedGate { .. }));
    }

    #[test]
    fn out_of_range_operand() {
        let err = parse_qasm("qreg q[2]; x q[2];").unwrap_err();
        assert!(matches!(err, Error::OperandOutOfRange(_)));
    }

    #[test]
    fn syntax_error_has_line_and_column() {
        let err = parse_qasm("qreg q[2];\nx q[0]").unwrap_err();
        match err {
            Error::Syntax { span, .. } => assert_eq!(span.line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn angle_expressions() {
        let c = parse_qasm("qreg q[1]; rz(-pi/4) q[0]; rz(2*(pi+1)) q[0]; rz(1.5e-3) q[0];").unwrap();
        let angles: Vec<f64> = c
            .ops()
            .iter()
            .map(|g| match g {
                Gate::Rz(_, a) => *a,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(angles, vec![-PI / 4.0, 2.0 * (PI + 1.0), 1.5e-3]);
    }

    #[test]
    fn register_broadcast_and_multiple_registers() {
        let c = parse_qasm("qreg a[2]; qreg b[2]; creg c[2]; h a; cx a,b; measure b -> c; barrier a,b[0];").unwrap();
        assert_eq!(c.num_qubits(), 4);
        assert_eq!(
            c.ops(),
            &[
                Gate::H(0),
                Gate::H(1),
                Gate::Cx(0, 2),
                Gate::Cx(1, 3),
                Gate::Measure { qubit: 2, clbit: 0 },
                Gate::Measure { qubit: 3, clbit: 1 },
                Gate::Barrier(vec![0, 1, 2]),
            ]
        );
    }

    #[test]
    fn compiled_pragmas_round_trip() {
        let device = DeviceTopology::line(3);
        let c = CompiledCircuit::new(
            device.clone(),
            vec![Gate::Swap(0, 1), Gate::Cx(1, 2), Gate::Measure { qubit: 2, clbit: 0 }],
            vec![2, 0, 1],
            2,
            1,
        )
        .unwrap();
        let back = parse_compiled(&serialize_compiled(&c), &device).unwrap();
        assert_eq!(back, c);
    }
}
