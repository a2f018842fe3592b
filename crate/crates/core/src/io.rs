//! Text formats used at the command-line boundary. All ids in files are 1-based.

use crate::elementwise::SparsifiedMatrix;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};

struct Tokens<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    /// Non-empty lines that are not `%` or `#` comments.
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('%') && !l.starts_with('#'))
            .collect();
        Self { lines, pos: 0 }
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.lines.last().map_or(1, |l| l.0);
        let out = self.lines.get(self.pos).copied().ok_or(Error::Parse { line: last, msg: format!("missing {what}") })?;
        self.pos += 1;
        Ok(out)
    }

    fn finish(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            Some((line, _)) => Err(Error::Parse { line: *line, msg: "unexpected trailing data".into() }),
            None => Ok(()),
        }
    }
}

fn parse_fields<T: std::str::FromStr>(line: usize, s: &str, want: usize) -> Result<Vec<T>> {
    let out: Vec<T> = s
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse { line, msg: format!("cannot parse {t:?}") }))
        .collect::<Result<_>>()?;
    if out.len() != want {
        return Err(Error::Parse { line, msg: format!("expected {want} fields, found {}", out.len()) });
    }
    Ok(out)
}

fn parse_rows(tok: &mut Tokens, rows: usize, cols: usize) -> Result<Vec<f64>> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (line, s) = tok.next_line("matrix row")?;
        data.extend(parse_fields::<f64>(line, s, cols)?);
    }
    Ok(data)
}

/// `m n` followed by `m` rows of `n` numbers.
pub fn parse_dense(text: &str) -> Result<Matrix> {
    let mut tok = Tokens::new(text);
    let (line, head) = tok.next_line("dimension header")?;
    let dims = parse_fields::<usize>(line, head, 2)?;
    let data = parse_rows(&mut tok, dims[0], dims[1])?;
    tok.finish()?;
    Matrix::new(dims[0], dims[1], data)
}

pub fn format_dense(m: &Matrix) -> String {
    let mut s = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// Matrix Market `coordinate` or `array` file with `real` or `integer` field
/// and `general` or `symmetric` symmetry.
pub fn parse_matrix_market(text: &str) -> Result<Matrix> {
    let header = text.lines().next().unwrap_or("").to_ascii_lowercase();
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(Error::Parse { line: 1, msg: "missing %%MatrixMarket matrix header".into() });
    }
    let (layout, field, symmetry) = (words[2], words[3], words[4]);
    if field != "real" && field != "integer" {
        return Err(Error::Parse { line: 1, msg: format!("unsupported field {field:?}") });
    }
    let symmetric = match symmetry {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse { line: 1, msg: format!("unsupported symmetry {other:?}") }),
    };
    let mut tok = Tokens::new(text);
    match layout {
        "coordinate" => {
            let (line, s) = tok.next_line("size line")?;
            let d = parse_fields::<usize>(line, s, 3)?;
            let (rows, cols, count) = (d[0], d[1], d[2]);
            let mut m = Matrix::zeros(rows, cols);
            for _ in 0..count {
                let (line, s) = tok.next_line("entry")?;
                let f: Vec<&str> = s.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(Error::Parse { line, msg: "expected `i j value`".into() });
                }
                let i: usize = f[0].parse().map_err(|_| Error::Parse { line, msg: "bad row index".into() })?;
                let j: usize = f[1].parse().map_err(|_| Error::Parse { line, msg: "bad column index".into() })?;
                let v: f64 = f[2].parse().map_err(|_| Error::Parse { line, msg: "bad value".into() })?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(Error::Parse { line, msg: format!("index ({i}, {j}) out of range") });
                }
                m.set(i - 1, j - 1, m.get(i - 1, j - 1) + v);
                if symmetric && i != j {
                    m.set(j - 1, i - 1, m.get(j - 1, i - 1) + v);
                }
            }
            tok.finish()?;
            Ok(m)
        }
        "array" => {
            let (line, s) = tok.next_line("size line")?;
            let d = parse_fields::<usize>(line, s, 2)?;
            let (rows, cols) = (d[0], d[1]);
            let mut values = Vec::new();
            while let Ok((line, s)) = tok.next_line("value") {
                for t in s.split_whitespace() {
                    values.push(t.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad value {t:?}") })?);
                }
            }
            let mut m = Matrix::zeros(rows, cols);
            let mut it = values.into_iter();
            // column-major; symmetric files list the lower triangle only
            for j in 0..cols {
                for i in (if symmetric { j } else { 0 })..rows {
                    let v = it.next().ok_or(Error::Parse { line: 0, msg: "too few array values".into() })?;
                    m.set(i, j, v);
                    if symmetric {
                        m.set(j, i, v);
                    }
                }
            }
            if it.next().is_some() {
                return Err(Error::Parse { line: 0, msg: "too many array values".into() });
            }
            Ok(m)
        }
        other => Err(Error::Parse { line: 1, msg: format!("unsupported layout {other:?}") }),
    }
}

/// Symmetric matrix from either dense or Matrix Market text.
pub fn parse_symmetric(text: &str) -> Result<SymMatrix> {
    let m = if text.trim_start().starts_with("%%") { parse_matrix_market(text)? } else { parse_dense(text)? };
    if m.rows() != m.cols() {
        return Err(Error::InvalidInput(format!("matrix is {} x {}, expected square", m.rows(), m.cols())));
    }
    SymMatrix::new(m.rows(), m.as_slice().to_vec())
}

/// Matrix Market coordinate file, lower triangle, symmetric.
pub fn format_matrix_market(m: &SparsifiedMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    s.push_str(&format!("{} {} {}\n", m.n, m.n, m.entries.len()));
    for &(i, j, v) in &m.entries {
        s.push_str(&format!("{} {} {:.16e}\n", j + 1, i + 1, v));
    }
    s
}

/// `k n` followed by `k` blocks of `n` rows each.
pub fn parse_matrix_list(text: &str) -> Result<Vec<SymMatrix>> {
    let mut tok = Tokens::new(text);
    let (line, head) = tok.next_line("header `k n`")?;
    let d = parse_fields::<usize>(line, head, 2)?;
    let (k, n) = (d[0], d[1]);
    let mut out = Vec::with_capacity(k);
    for idx in 0..k {
        let first = tok.lines.get(tok.pos).map_or(0, |l| l.0);
        let data = parse_rows(&mut tok, n, n)?;
        out.push(SymMatrix::new(n, data).map_err(|e| Error::Parse { line: first, msg: format!("matrix {}: {e}", idx + 1) })?);
    }
    tok.finish()?;
    Ok(out)
}

pub fn format_matrix_list(mats: &[SymMatrix]) -> String {
    let n = mats.first().map_or(0, SymMatrix::n);
    let mut s = format!("{} {}\n", mats.len(), n);
    for m in mats {
        for i in 0..n {
            let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
    }
    s
}

/// `n m` followed by `m` lines `i j w`; returns 0-based edges with `i < j`.
pub fn parse_edge_list(text: &str) -> Result<(usize, Vec<(usize, usize, f64)>)> {
    let mut tok = Tokens::new(text);
    let (line, head) = tok.next_line("header `n m`")?;
    let d = parse_fields::<usize>(line, head, 2)?;
    let (n, m) = (d[0], d[1]);
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, s) = tok.next_line("edge")?;
        let f: Vec<&str> = s.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse { line, msg: "expected `i j w`".into() });
        }
        let i: usize = f[0].parse().map_err(|_| Error::Parse { line, msg: "bad vertex".into() })?;
        let j: usize = f[1].parse().map_err(|_| Error::Parse { line, msg: "bad vertex".into() })?;
        let w: f64 = f[2].parse().map_err(|_| Error::Parse { line, msg: "bad weight".into() })?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::Parse { line, msg: format!("vertex outside 1..={n}") });
        }
        if i == j {
            return Err(Error::Parse { line, msg: format!("self-loop at vertex {i}") });
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Parse { line, msg: format!("weight must be positive, got {w}") });
        }
        edges.push((i.min(j) - 1, i.max(j) - 1, w));
    }
    tok.finish()?;
    Ok((n, edges))
}

pub fn format_edge_list(n: usize, edges: &[(usize, usize, f64)]) -> String {
    let mut s = format!("{} {}\n", n, edges.len());
    for &(i, j, w) in edges {
        s.push_str(&format!("{} {} {:.16e}\n", i + 1, j + 1, w));
    }
    s
}
