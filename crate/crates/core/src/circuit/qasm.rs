//! OpenQASM 2.0 subset: qreg/creg, h, x, z, rz, cx, measure, barrier.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::circuit::ir::{Gate, Program, ProgramBuilder};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Real(f64),
    Str,
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::QasmSyntax {
        line,
        column: col,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
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
            if real {
                Tok::Real(s.parse().map_err(|_| syntax(l0, c0, format!("bad number `{s}`")))?)
            } else {
                Tok::Int(s.parse().map_err(|_| syntax(l0, c0, format!("bad integer `{s}`")))?)
            }
        } else if c == '"' {
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\n' {
                    return Err(syntax(l0, c0, "unterminated string"));
                }
                i += 1;
            }
            if i == chars.len() {
                return Err(syntax(l0, c0, "unterminated string"));
            }
            i += 1;
            Tok::Str
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            i += 2;
            Tok::Sym("->")
        } else {
            let sym = match c {
                ';' => ";",
                ',' => ",",
                '[' => "[",
                ']' => "]",
                '(' => "(",
                ')' => ")",
                '+' => "+",
                '-' => "-",
                '*' => "*",
                '/' => "/",
                '{' => "{",
                '}' => "}",
                _ => return Err(syntax(l0, c0, format!("unexpected character `{c}`"))),
            };
            i += 1;
            Tok::Sym(sym)
        };
        col += i - start;
        out.push(Spanned { tok, line: l0, col: c0 });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
struct Reg {
    name: String,
    offset: usize,
    size: usize,
}

#[derive(Clone, Debug)]
enum Arg {
    Whole(usize), // register index
    Bit(usize),   // flattened bit index
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    eof: (usize, usize),
    qregs: Vec<Reg>,
    cregs: Vec<Reg>,
    ops: Vec<(Gate, usize, usize)>,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|s| (s.line, s.col)).unwrap_or(self.eof)
    }

    fn next(&mut self) -> Result<Spanned> {
        let (l, c) = self.here();
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| syntax(l, c, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect_sym(&mut self, sym: &str) -> Result<()> {
        let t = self.next()?;
        match t.tok {
            Tok::Sym(s) if s == sym => Ok(()),
            other => Err(syntax(t.line, t.col, format!("expected `{sym}`, found {other:?}"))),
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Spanned { tok: Tok::Sym(s), .. }) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize)> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.line, t.col)),
            other => Err(syntax(t.line, t.col, format!("expected identifier, found {other:?}"))),
        }
    }

    fn int(&mut self) -> Result<usize> {
        let t = self.next()?;
        match t.tok {
            Tok::Int(n) => Ok(n),
            other => Err(syntax(t.line, t.col, format!("expected integer, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<f64> {
        let mut v = self.term()?;
        loop {
            if self.eat_sym("+") {
                v += self.term()?;
            } else if self.eat_sym("-") {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64> {
        let mut v = self.factor()?;
        loop {
            if self.eat_sym("*") {
                v *= self.factor()?;
            } else if self.eat_sym("/") {
                v /= self.factor()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn factor(&mut self) -> Result<f64> {
        if self.eat_sym("-") {
            return Ok(-self.factor()?);
        }
        if self.eat_sym("+") {
            return self.factor();
        }
        if self.eat_sym("(") {
            let v = self.expr()?;
            self.expect_sym(")")?;
            return Ok(v);
        }
        let t = self.next()?;
        match t.tok {
            Tok::Int(n) => Ok(n as f64),
            Tok::Real(x) => Ok(x),
            Tok::Ident(ref s) if s == "pi" => Ok(PI),
            other => Err(syntax(t.line, t.col, format!("expected expression, found {other:?}"))),
        }
    }

    fn arg(&mut self, quantum: bool) -> Result<Arg> {
        let (name, line, col) = self.ident()?;
        let regs = if quantum { &self.qregs } else { &self.cregs };
        let ri = regs
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| syntax(line, col, format!("undeclared register `{name}`")))?;
        if self.eat_sym("[") {
            let idx = self.int()?;
            self.expect_sym("]")?;
            let reg = if quantum { &self.qregs[ri] } else { &self.cregs[ri] };
            if idx >= reg.size {
                return Err(syntax(line, col, format!("index {idx} out of range for `{name}`")));
            }
            Ok(Arg::Bit(reg.offset + idx))
        } else {
            Ok(Arg::Whole(ri))
        }
    }

    fn expand(&self, arg: &Arg, quantum: bool) -> Vec<usize> {
        match arg {
            Arg::Bit(i) => vec![*i],
            Arg::Whole(ri) => {
                let r = if quantum { &self.qregs[*ri] } else { &self.cregs[*ri] };
                (r.offset..r.offset + r.size).collect()
            }
        }
    }

    fn args(&mut self, quantum: bool) -> Result<Vec<Arg>> {
        let mut v = vec![self.arg(quantum)?];
        while self.eat_sym(",") {
            v.push(self.arg(quantum)?);
        }
        Ok(v)
    }

    /// Broadcasts register arguments: all whole-register operands must have
    /// the same size.
    fn broadcast(&self, args: &[Arg], line: usize, col: usize) -> Result<Vec<Vec<usize>>> {
        let expanded: Vec<Vec<usize>> = args.iter().map(|a| self.expand(a, true)).collect();
        let width = expanded
            .iter()
            .zip(args)
            .filter(|(_, a)| matches!(a, Arg::Whole(..)))
            .map(|(e, _)| e.len())
            .max();
        let Some(width) = width else {
            return Ok(vec![expanded.into_iter().map(|e| e[0]).collect()]);
        };
        let mut rows = Vec::with_capacity(width);
        for k in 0..width {
            let mut row = Vec::with_capacity(args.len());
            for (e, a) in expanded.iter().zip(args) {
                match a {
                    Arg::Bit(..) => row.push(e[0]),
                    Arg::Whole(..) if e.len() == width => row.push(e[k]),
                    Arg::Whole(..) => {
                        return Err(syntax(line, col, "register size mismatch in broadcast"));
                    }
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }

    fn statement(&mut self) -> Result<()> {
        let (name, line, col) = self.ident()?;
        match name.as_str() {
            "OPENQASM" => {
                let t = self.next()?;
                match t.tok {
                    Tok::Real(v) if (v - 2.0).abs() < 1e-9 => {}
                    Tok::Int(2) => {}
                    _ => return Err(syntax(t.line, t.col, "only OPENQASM 2.0 is supported")),
                }
                self.expect_sym(";")
            }
            "include" => {
                let t = self.next()?;
                if t.tok != Tok::Str {
                    return Err(syntax(t.line, t.col, "expected file name"));
                }
                self.expect_sym(";")
            }
            "qreg" | "creg" => {
                let (rname, l, c) = self.ident()?;
                self.expect_sym("[")?;
                let size = self.int()?;
                self.expect_sym("]")?;
                self.expect_sym(";")?;
                let regs = if name == "qreg" { &mut self.qregs } else { &mut self.cregs };
                if regs.iter().any(|r| r.name == rname) {
                    return Err(syntax(l, c, format!("register `{rname}` redeclared")));
                }
                let offset = regs.iter().map(|r| r.size).sum();
                regs.push(Reg {
                    name: rname,
                    offset,
                    size,
                });
                Ok(())
            }
            "measure" => {
                let q = self.arg(true)?;
                self.expect_sym("->")?;
                let c = self.arg(false)?;
                self.expect_sym(";")?;
                let qs = self.expand(&q, true);
                let cs = self.expand(&c, false);
                if qs.len() != cs.len() {
                    return Err(syntax(line, col, "measure operand sizes differ"));
                }
                for (qubit, clbit) in qs.into_iter().zip(cs) {
                    self.ops.push((Gate::Measure { qubit, clbit }, line, col));
                }
                Ok(())
            }
            "barrier" => {
                let args = self.args(true)?;
                self.expect_sym(";")?;
                let qs: Vec<usize> = args.iter().flat_map(|a| self.expand(a, true)).collect();
                self.ops.push((Gate::Barrier(qs), line, col));
                Ok(())
            }
            "h" | "x" | "z" | "rz" | "cx" | "CX" => {
                let theta = if name == "rz" {
                    self.expect_sym("(")?;
                    let v = self.expr()?;
                    self.expect_sym(")")?;
                    Some(v)
                } else {
                    None
                };
                let args = self.args(true)?;
                self.expect_sym(";")?;
                let arity = if name.eq_ignore_ascii_case("cx") { 2 } else { 1 };
                if args.len() != arity {
                    return Err(syntax(
                        line,
                        col,
                        format!("`{name}` takes {arity} operand(s), got {}", args.len()),
                    ));
                }
                for row in self.broadcast(&args, line, col)? {
                    let g = match name.as_str() {
                        "h" => Gate::H(row[0]),
                        "x" => Gate::X(row[0]),
                        "z" => Gate::Z(row[0]),
                        "rz" => Gate::Rz(row[0], theta.unwrap_or_default()),
                        _ => Gate::Cx(row[0], row[1]),
                    };
                    self.ops.push((g, line, col));
                }
                Ok(())
            }
            other => Err(Error::UnsupportedGate {
                name: other.to_string(),
                line,
            }),
        }
    }
}

pub fn parse_qasm(text: &str) -> Result<Program> {
    parse_qasm_named(text, "qasm")
}

pub fn parse_qasm_named(text: &str, id: &str) -> Result<Program> {
    let toks = lex(text)?;
    let lines = text.lines().count().max(1);
    let mut p = Parser {
        toks,
        pos: 0,
        eof: (lines, text.lines().last().map_or(1, |l| l.len() + 1)),
        qregs: Vec::new(),
        cregs: Vec::new(),
        ops: Vec::new(),
    };
    while p.peek().is_some() {
        p.statement()?;
    }
    let n_qubits = p.qregs.iter().map(|r| r.size).sum();
    let n_clbits = p.cregs.iter().map(|r| r.size).sum();
    let mut b = ProgramBuilder::new(n_qubits, n_clbits);
    for (g, line, col) in p.ops {
        b.push(g).map_err(|e| syntax(line, col, e.to_string()))?;
    }
    b.build(id).map_err(|e| syntax(1, 1, e.to_string()))
}

/// Emits the program layer by layer on a single `q`/`c` register pair.
pub fn emit_qasm(p: &Program) -> String {
    let mut s = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    if p.n_qubits > 0 {
        let _ = writeln!(s, "qreg q[{}];", p.n_qubits);
    }
    if p.n_clbits > 0 {
        let _ = writeln!(s, "creg c[{}];", p.n_clbits);
    }
    for g in p.gates() {
        let _ = match g {
            Gate::H(q) => writeln!(s, "h q[{q}];"),
            Gate::X(q) => writeln!(s, "x q[{q}];"),
            Gate::Z(q) => writeln!(s, "z q[{q}];"),
            Gate::Rz(q, t) => writeln!(s, "rz({t:?}) q[{q}];"),
            Gate::Cx(c, t) => writeln!(s, "cx q[{c}],q[{t}];"),
            Gate::Measure { qubit, clbit } => writeln!(s, "measure q[{qubit}] -> c[{clbit}];"),
            Gate::Barrier(qs) => {
                let list: Vec<String> = qs.iter().map(|q| format!("q[{q}]")).collect();
                writeln!(s, "barrier {};", list.join(","))
            }
        };
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_h_and_measure() {
        let p = parse_qasm("OPENQASM 2.0;\nqreg q[1];\ncreg c[1];\nh q[0];\nmeasure q[0] -> c[0];\n")
            .unwrap();
        assert_eq!(p.n_qubits, 1);
        assert_eq!(p.layers[0], vec![Gate::H(0)]);
        assert_eq!(p.layers.iter().filter(|l| l.iter().any(|g| g.is_single_qubit_unitary())).count(), 1);
    }

    #[test]
    fn disjoint_cx_share_a_layer() {
        let p = parse_qasm("qreg q[4]; cx q[0],q[1]; cx q[2],q[3];").unwrap();
        assert_eq!(p.layers.len(), 1);
        assert_eq!(p.layers[0], vec![Gate::Cx(0, 1), Gate::Cx(2, 3)]);
    }

    #[test]
    fn barrier_terminates_layers() {
        let p = parse_qasm("qreg q[3]; h q[0]; barrier q; h q[1]; h q[2];").unwrap();
        assert_eq!(p.layers.len(), 3);
        assert!(matches!(p.layers[1][0], Gate::Barrier(_)));
        assert_eq!(p.layers[2], vec![Gate::H(1), Gate::H(2)]);
    }

    #[test]
    fn angle_expressions() {
        let p = parse_qasm("qreg q[1]; rz(-pi/2) q[0]; rz(2*(0.25+0.25)) q[0]; rz(1e-3) q[0];").unwrap();
        let angles: Vec<f64> = p
            .gates()
            .map(|g| match g {
                Gate::Rz(_, t) => *t,
                _ => unreachable!(),
            })
            .collect();
        assert!((angles[0] + PI / 2.0).abs() < 1e-15);
        assert!((angles[1] - 1.0).abs() < 1e-15);
        assert!((angles[2] - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn register_broadcast_and_multiple_registers() {
        let p = parse_qasm("qreg a[2]; qreg b[2]; creg c[4]; h a; cx a,b; measure a -> c[0];")
            .unwrap_err();
        // measure of a 2-qubit register into one clbit is rejected
        assert!(matches!(p, Error::QasmSyntax { .. }));
        let p = parse_qasm("qreg a[2]; qreg b[2]; creg c[2]; h a; cx a,b; measure b -> c;").unwrap();
        assert_eq!(p.n_qubits, 4);
        assert_eq!(p.cx_count(), 2);
        assert!(p.gates().any(|g| *g == Gate::Cx(1, 3)));
        assert_eq!(p.measurements(), vec![(2, 0), (3, 1)]);
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_qasm("qreg q[2];\nh q[0]\ncx q[0],q[1];") {
            Err(Error::QasmSyntax { line, column, .. }) => assert_eq!((line, column), (3, 1)),
            other => panic!("{other:?}"),
        }
        match parse_qasm("qreg q[2];\n  h q[5];") {
            Err(Error::QasmSyntax { line, column, .. }) => assert_eq!((line, column), (2, 5)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_qasm("qreg q[1]; h q[0]; $"), Err(Error::QasmSyntax { .. })));
        assert!(matches!(parse_qasm("qreg q[2]; cx q[0],q[0];"), Err(Error::QasmSyntax { .. })));
        assert!(matches!(parse_qasm("qreg q[1]; rz(0.1 q[0];"), Err(Error::QasmSyntax { .. })));
    }

    #[test]
    fn unsupported_gates() {
        match parse_qasm("qreg q[3];\nccx q[0],q[1],q[2];") {
            Err(Error::UnsupportedGate { name, line }) => {
                assert_eq!(name, "ccx");
                assert_eq!(line, 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_qasm("qreg q[1]; u3(0,0,0) q[0];"),
            Err(Error::UnsupportedGate { .. })
        ));
    }

    #[test]
    fn empty_program_is_header_only() {
        let p = Program::empty("e");
        let text = emit_qasm(&p);
        assert_eq!(text, "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        assert!(parse_qasm(&text).unwrap().structurally_eq(&p));
    }

    #[test]
    fn awkward_angles_round_trip() {
        let mut b = ProgramBuilder::new(1, 0);
        for t in [0.1 + 0.2, -1e-12, 1e15 / 3.0, PI] {
            b.rz(0, t).unwrap();
        }
        let p = b.build("a").unwrap();
        assert!(parse_qasm(&emit_qasm(&p)).unwrap().structurally_eq(&p));
    }
}
