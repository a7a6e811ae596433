//! SDPA sparse format.
//!
//! A file describes `min cᵀx` subject to `F(x) = Σ x_k F_k − F_0 ⪰ 0`. In
//! memory the constraint is stored as `Σ x_k A_k − A_0 ⪯ 0`, so every matrix
//! is negated on the way in and on the way out: `A_k = −F_k`, `A_0 = −F_0`.
//!
//! Layout after optional comment lines (starting with `*` or `"`):
//!
//! ```text
//! m            number of variables; the rest of the line is ignored
//! nblocks      number of blocks; the rest of the line is ignored
//! s_1 … s_nb   block sizes, negative for a diagonal block
//! c_1 … c_m    cost vector
//! k b i j v    one line per entry of F_k, block b, 1-based i <= j
//! ```
//!
//! Spaces, tabs, commas, parentheses and braces all separate tokens.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use matineq_core::linalg::SparseSym;
use matineq_core::model::{LinearBlock, LinearSdpData};

use crate::error::ParseError;

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn is_sep(c: char) -> bool {
    c.is_whitespace() || matches!(c, ',' | '(' | ')' | '{' | '}')
}

fn tokenize(line: &str, line_no: usize) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (pos, c) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        match (start, is_sep(c)) {
            (None, false) => start = Some(pos),
            (Some(s), true) => {
                out.push(Token { text: &line[s..pos], line: line_no, col: line[..s].chars().count() + 1 });
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, column: col, message: msg.into() }
}

fn int(tok: &Token, what: &str) -> Result<i64, ParseError> {
    tok.text.parse().map_err(|_| err(tok.line, tok.col, format!("expected an integer {what}, found `{}`", tok.text)))
}

fn real(tok: &Token, what: &str) -> Result<f64, ParseError> {
    // Fortran-style exponents show up in older files
    let v: f64 = tok
        .text
        .replace(['d', 'D'], "e")
        .parse()
        .map_err(|_| err(tok.line, tok.col, format!("expected a number {what}, found `{}`", tok.text)))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err(tok.line, tok.col, format!("{what} must be finite")))
    }
}

/// Lines of the file with comment lines and blank lines removed.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| {
        let t = l.trim_start();
        !(t.is_empty() || t.starts_with('*') || t.starts_with('"'))
    })
}

/// Parses an SDPA sparse file into the `⪯ 0` convention.
pub fn parse_sdpa(text: &str) -> Result<LinearSdpData, ParseError> {
    let mut lines = content_lines(text).peekable();
    let eof = |what: &str| err(text.lines().count().max(1), 1, format!("unexpected end of file, expected {what}"));

    let first_token = |(no, line): (usize, &str), what: &str| -> Result<i64, ParseError> {
        let toks = tokenize(line, no);
        let tok = toks.first().ok_or_else(|| err(no, 1, format!("expected {what}")))?;
        int(tok, what)
    };
    let m_line = lines.next().ok_or_else(|| eof("the number of variables"))?;
    let m = first_token(m_line, "variable count")?;
    if m < 0 {
        return Err(err(m_line.0, 1, "variable count must be nonnegative"));
    }
    let m = m as usize;
    let nb_line = lines.next().ok_or_else(|| eof("the number of blocks"))?;
    let nb = first_token(nb_line, "block count")?;
    if nb < 1 {
        return Err(err(nb_line.0, 1, "block count must be positive"));
    }
    let nb = nb as usize;

    // block sizes and costs may wrap over several lines
    let mut take = |count: usize, what: &str| -> Result<Vec<Token>, ParseError> {
        let mut toks = Vec::with_capacity(count);
        while toks.len() < count {
            let (no, line) = lines.next().ok_or_else(|| eof(what))?;
            let mut row = tokenize(line, no);
            let need = count - toks.len();
            if row.len() > need {
                // anything after the last expected value is a trailing remark
                row.truncate(need);
            }
            toks.extend(row);
        }
        Ok(toks)
    };
    let size_toks = take(nb, "block sizes")?;
    let mut sizes = Vec::with_capacity(nb);
    for t in &size_toks {
        let s = int(t, "block size")?;
        if s == 0 {
            return Err(err(t.line, t.col, "block size must be nonzero"));
        }
        sizes.push(s);
    }
    let cost_toks = take(m, "cost vector")?;
    let cost = cost_toks.iter().map(|t| real(t, "cost entry")).collect::<Result<Vec<_>, _>>()?;

    // (block, matrix) -> entries; BTreeMap keeps variables in order
    let mut mats: Vec<BTreeMap<usize, Vec<(usize, usize, f64)>>> = vec![BTreeMap::new(); nb];
    let mut seen = std::collections::HashSet::new();
    for (no, line) in lines {
        let toks = tokenize(line, no);
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 5 {
            let t = toks.last().expect("nonempty");
            return Err(err(no, t.col + t.text.len(), format!("entry needs 5 fields, found {}", toks.len())));
        }
        let k = int(&toks[0], "matrix index")?;
        if k < 0 || k as usize > m {
            return Err(err(no, toks[0].col, format!("matrix index {k} outside 0..={m}")));
        }
        let b = int(&toks[1], "block index")?;
        if b < 1 || b as usize > nb {
            return Err(err(no, toks[1].col, format!("block index {b} outside 1..={nb}")));
        }
        let size = sizes[b as usize - 1];
        let dim = size.unsigned_abs() as i64;
        let mut ij = [0i64; 2];
        for (slot, t) in ij.iter_mut().zip(&toks[2..4]) {
            *slot = int(t, "row/column index")?;
            if *slot < 1 || *slot > dim {
                return Err(err(no, t.col, format!("index {} outside 1..={dim}", *slot)));
            }
        }
        let (i, j) = (ij[0].min(ij[1]) as usize - 1, ij[0].max(ij[1]) as usize - 1);
        if size < 0 && i != j {
            return Err(err(no, toks[2].col, "off-diagonal entry in a diagonal block"));
        }
        let v = real(&toks[4], "entry value")?;
        if !seen.insert((k, b, i, j)) {
            return Err(err(no, toks[0].col, format!("duplicate entry ({}, {}) of matrix {k} in block {b}", i + 1, j + 1)));
        }
        mats[b as usize - 1].entry(k as usize).or_default().push((i, j, -v));
    }

    let blocks = sizes
        .iter()
        .zip(mats)
        .map(|(&size, mut entries)| {
            let dim = size.unsigned_abs() as usize;
            let mut block = LinearBlock::new(dim);
            block.diagonal = size < 0;
            if let Some(e) = entries.remove(&0) {
                block.a0 = SparseSym::from_entries(dim, e);
            }
            for (k, e) in entries {
                let a = SparseSym::from_entries(dim, e);
                if !a.is_empty() {
                    block.coeffs.push((k - 1, a));
                }
            }
            block
        })
        .collect();
    Ok(LinearSdpData { n: m, cost, blocks })
}

/// Writes `p` in canonical order (matrix, block, row, column). Numbers use
/// the shortest representation that reads back to the same double.
pub fn write_sdpa(p: &LinearSdpData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", p.n);
    let _ = writeln!(out, "{}", p.blocks.len());
    let sizes: Vec<String> = p.blocks.iter().map(|b| if b.diagonal { format!("-{}", b.dim) } else { b.dim.to_string() }).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let cost: Vec<String> = p.cost.iter().map(|c| fmt_real(*c)).collect();
    let _ = writeln!(out, "{}", cost.join(" "));
    let mut write_matrix = |k: usize, b: usize, a: &SparseSym| {
        let mut e = a.entries().to_vec();
        e.sort_by_key(|x| (x.0, x.1));
        for (i, j, v) in e {
            if v != 0.0 {
                let _ = writeln!(out, "{k} {} {} {} {}", b + 1, i + 1, j + 1, fmt_real(-v));
            }
        }
    };
    for (b, block) in p.blocks.iter().enumerate() {
        write_matrix(0, b, &block.a0);
    }
    for k in 0..p.n {
        for (b, block) in p.blocks.iter().enumerate() {
            if let Some(a) = block.coeff(k) {
                write_matrix(k + 1, b, a);
            }
        }
    }
    out
}

fn fmt_real(v: f64) -> String {
    // `{}` never uses an exponent; `{:e}` is shortest and round-trips
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if plain.len() <= exp.len() {
        plain
    } else {
        exp
    }
}
