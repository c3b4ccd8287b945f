//! Plain-text MIQP dump in a coordinate (matrix-market-like) layout.
//!
//! ```text
//! %%miqp 1
//! matrix H 2 2 1
//! 1 1 2
//! vector g 2
//! 0
//! 0
//! ...
//! indicator 0 1
//! matrix A 1 2 1
//! ...
//! cover 0 1
//! end
//! ```
//! Indices in matrix entries are 1-based; floats use shortest round-trip form.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::miqp::{BinaryId, Indicator, MiqpProblem};
use super::qp::QpProblem;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {msg}")]
pub struct DumpError {
    pub line: usize,
    pub column: usize,
    pub msg: String,
}

/// Column of the token quoted in `msg`, else of the line's first character.
fn column_of(text: &str, line: usize, msg: &str) -> usize {
    let Some(raw) = text.lines().nth(line.wrapping_sub(1)) else { return 1 };
    let quoted = msg.split('`').nth(1).filter(|q| !q.is_empty());
    let pos = quoted.and_then(|q| raw.find(q)).or_else(|| raw.find(|c: char| !c.is_whitespace()));
    pos.map_or(1, |p| raw[..p].chars().count() + 1)
}

const MAGIC: &str = "%%miqp 1";

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let nnz = m.iter().filter(|v| **v != 0.0).count();
    let _ = writeln!(out, "matrix {name} {} {} {nnz}", m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != 0.0 {
                let _ = writeln!(out, "{} {} {:?}", i + 1, j + 1, m[(i, j)]);
            }
        }
    }
}

fn write_vector(out: &mut String, name: &str, v: &DVector<f64>) {
    let _ = writeln!(out, "vector {name} {}", v.len());
    for x in v.iter() {
        let _ = writeln!(out, "{x:?}");
    }
}

pub fn dump_miqp(p: &MiqpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    write_matrix(&mut out, "H", &p.base.h);
    write_vector(&mut out, "g", &p.base.g);
    write_matrix(&mut out, "Aeq", &p.base.aeq);
    write_vector(&mut out, "beq", &p.base.beq);
    write_matrix(&mut out, "Ain", &p.base.ain);
    write_vector(&mut out, "bin", &p.base.bin);
    for ind in &p.indicators {
        let _ = writeln!(out, "indicator {} {}", ind.id.interval, ind.id.poly);
        write_matrix(&mut out, "A", &ind.a);
        write_vector(&mut out, "c", &ind.c);
        write_vector(&mut out, "M", &ind.big_m);
    }
    for cover in &p.covers {
        let ids: Vec<String> = cover.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "cover {}", ids.join(" "));
    }
    let _ = writeln!(out, "end");
    out
}

struct Lines<'a> {
    it: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.it.by_ref() {
            self.last = i + 1;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn err<T>(&self, line: usize, msg: impl Into<String>) -> Result<T, DumpError> {
        Err(DumpError { line, column: 0, msg: msg.into() })
    }

    fn expect(&mut self) -> Result<(usize, &'a str), DumpError> {
        let last = self.last;
        self.next().ok_or(DumpError { line: last + 1, column: 0, msg: "unexpected end of file".into() })
    }

    fn header(&mut self, kind: &str, name: &str, nums: usize) -> Result<(usize, Vec<usize>), DumpError> {
        let (ln, t) = self.expect()?;
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 2 + nums || f[0] != kind || f[1] != name {
            return self.err(ln, format!("expected `{kind} {name}` with {nums} sizes, found `{t}`"));
        }
        let v = f[2..]
            .iter()
            .map(|s| s.parse::<usize>().map_err(|_| DumpError { line: ln, column: 0, msg: format!("bad size `{s}`") }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((ln, v))
    }

    fn float(&self, ln: usize, s: &str) -> Result<f64, DumpError> {
        s.parse::<f64>().map_err(|_| DumpError { line: ln, column: 0, msg: format!("bad number `{s}`") })
    }

    fn matrix(&mut self, name: &str) -> Result<DMatrix<f64>, DumpError> {
        let (_, h) = self.header("matrix", name, 3)?;
        let mut m = DMatrix::zeros(h[0], h[1]);
        for _ in 0..h[2] {
            let (ln, t) = self.expect()?;
            let f: Vec<&str> = t.split_whitespace().collect();
            if f.len() != 3 {
                return self.err(ln, "expected `row col value`");
            }
            let i: usize = f[0].parse().map_err(|_| DumpError { line: ln, column: 0, msg: "bad row".into() })?;
            let j: usize = f[1].parse().map_err(|_| DumpError { line: ln, column: 0, msg: "bad column".into() })?;
            if i == 0 || j == 0 || i > h[0] || j > h[1] {
                return self.err(ln, format!("entry ({i}, {j}) out of range"));
            }
            m[(i - 1, j - 1)] = self.float(ln, f[2])?;
        }
        Ok(m)
    }

    fn vector(&mut self, name: &str) -> Result<DVector<f64>, DumpError> {
        let (_, h) = self.header("vector", name, 1)?;
        let mut v = DVector::zeros(h[0]);
        for k in 0..h[0] {
            let (ln, t) = self.expect()?;
            v[k] = self.float(ln, t)?;
        }
        Ok(v)
    }
}

pub fn parse_miqp(text: &str) -> Result<MiqpProblem, DumpError> {
    parse_lines(text).map_err(|mut e| {
        e.column = column_of(text, e.line, &e.msg);
        e
    })
}

fn parse_lines(text: &str) -> Result<MiqpProblem, DumpError> {
    let mut l = Lines { it: text.lines().enumerate().peekable(), last: 0 };
    match l.next() {
        Some((_, t)) if t == MAGIC => {}
        Some((ln, t)) => return l.err(ln, format!("expected `{MAGIC}`, found `{t}`")),
        None => return l.err(1, "empty file"),
    }
    let base = QpProblem {
        h: l.matrix("H")?,
        g: l.vector("g")?,
        aeq: l.matrix("Aeq")?,
        beq: l.vector("beq")?,
        ain: l.matrix("Ain")?,
        bin: l.vector("bin")?,
    };
    let mut indicators = Vec::new();
    let mut covers = Vec::new();
    loop {
        let (ln, t) = l.expect()?;
        let f: Vec<&str> = t.split_whitespace().collect();
        match f.first().copied() {
            Some("indicator") if f.len() == 3 => {
                let id = BinaryId {
                    interval: f[1].parse().map_err(|_| DumpError { line: ln, column: 0, msg: "bad interval".into() })?,
                    poly: f[2].parse().map_err(|_| DumpError { line: ln, column: 0, msg: "bad polyhedron".into() })?,
                };
                let a = l.matrix("A")?;
                let c = l.vector("c")?;
                let big_m = l.vector("M")?;
                indicators.push(Indicator { id, a, c, big_m });
            }
            Some("cover") => {
                let ids = f[1..]
                    .iter()
                    .map(|s| s.parse::<usize>().map_err(|_| DumpError { line: ln, column: 0, msg: format!("bad id `{s}`") }))
                    .collect::<Result<Vec<_>, _>>()?;
                covers.push(ids);
            }
            Some("end") => break,
            _ => return l.err(ln, format!("unexpected `{t}`")),
        }
    }
    let p = MiqpProblem { base, indicators, covers };
    p.validate().map_err(|e| DumpError { line: l.last, column: 0, msg: e.to_string() })?;
    Ok(p)
}
