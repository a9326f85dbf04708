//! Plain-text operator exchange format.
//!
//! ```text
//! tpss-operator 1
//! dim <d>
//! degree <p>
//! n1 <n1>
//! family <lgl|csbp>
//! n_p <n_p>
//! nodes <n_p>
//! <m> <xi_1> ... <xi_d>
//! h <n_p>
//! <m> <value>
//! q <i> <nnz>
//! <row> <col> <value>
//! e <i> <n_p>
//! <m> <value>
//! facet <g> <count>
//! normal <n_1> ... <n_d>
//! <m> <b>
//! end
//! ```
//!
//! Indices are zero-based. Reals use `{:.17e}`, so writing the same operator
//! twice gives identical bytes and reading restores every value exactly.
//! `q` blocks list entries in row-major order with increasing columns.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::assembly::{SimplexFacet, TpssOperator};
use crate::error::{Error, Result};
use crate::oned::Family;
use crate::sparse::CsrMatrix;
use crate::tensor::PointSet;

fn real(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn write_operator<W: Write>(op: &TpssOperator, mut w: W) -> Result<()> {
    let mut s = String::new();
    let n = op.n_p();
    let _ = writeln!(s, "tpss-operator 1");
    let _ = writeln!(s, "dim {}", op.dim);
    let _ = writeln!(s, "degree {}", op.degree);
    let _ = writeln!(s, "n1 {}", op.n1);
    let _ = writeln!(s, "family {}", op.family);
    let _ = writeln!(s, "n_p {n}");
    let _ = writeln!(s, "nodes {n}");
    for m in 0..n {
        let coords: Vec<String> = op.nodes.point(m).iter().map(|&x| real(x)).collect();
        let _ = writeln!(s, "{m} {}", coords.join(" "));
    }
    let _ = writeln!(s, "h {n}");
    for (m, &x) in op.h.iter().enumerate() {
        let _ = writeln!(s, "{m} {}", real(x));
    }
    for (i, q) in op.q.iter().enumerate() {
        let _ = writeln!(s, "q {i} {}", q.nnz());
        for (r, c, v) in q.triplets() {
            let _ = writeln!(s, "{r} {c} {}", real(v));
        }
    }
    for (i, e) in op.e.iter().enumerate() {
        let _ = writeln!(s, "e {i} {n}");
        for (m, &x) in e.iter().enumerate() {
            let _ = writeln!(s, "{m} {}", real(x));
        }
    }
    for (g, f) in op.facets.iter().enumerate() {
        let _ = writeln!(s, "facet {g} {}", f.nodes.len());
        let normal: Vec<String> = f.normal.iter().map(|&x| real(x)).collect();
        let _ = writeln!(s, "normal {}", normal.join(" "));
        for (&m, &b) in f.nodes.iter().zip(&f.b) {
            let _ = writeln!(s, "{m} {}", real(b));
        }
    }
    let _ = writeln!(s, "end");
    w.write_all(s.as_bytes())?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_fields(&mut self) -> Result<Vec<String>> {
        loop {
            let l = self.inner.next().ok_or_else(|| Error::Parse {
                line: self.line + 1,
                msg: "unexpected end of file".into(),
            })??;
            self.line += 1;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok(t.split_whitespace().map(String::from).collect());
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn keyed(&mut self, key: &str, nvals: usize) -> Result<Vec<String>> {
        let f = self.next_fields()?;
        if f.first().map(String::as_str) != Some(key) || f.len() != nvals + 1 {
            return Err(self.err(format!("expected `{key}` with {nvals} value(s)")));
        }
        Ok(f[1..].to_vec())
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key, 1)?;
        self.parse(&v[0])
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }

    fn index(&self, s: &str, bound: usize) -> Result<usize> {
        let v: usize = self.parse(s)?;
        if v >= bound {
            return Err(self.err(format!("index {v} out of range (< {bound})")));
        }
        Ok(v)
    }
}

pub fn read_operator<R: BufRead>(r: R) -> Result<TpssOperator> {
    let mut lines = Lines {
        inner: r.lines(),
        line: 0,
    };
    let head = lines.keyed("tpss-operator", 1)?;
    if head[0] != "1" {
        return Err(lines.err(format!("unsupported format version {}", head[0])));
    }
    let dim: usize = lines.scalar("dim")?;
    if !(2..=3).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    let degree: usize = lines.scalar("degree")?;
    let n1: usize = lines.scalar("n1")?;
    let fam = lines.keyed("family", 1)?;
    let family = Family::parse(&fam[0]).ok_or_else(|| lines.err(format!("unknown family {}", fam[0])))?;
    let n: usize = lines.scalar("n_p")?;

    lines.keyed("nodes", 1)?;
    let mut nodes = PointSet::with_capacity(dim, n);
    for m in 0..n {
        let f = lines.next_fields()?;
        if f.len() != dim + 1 || lines.index(&f[0], n)? != m {
            return Err(lines.err("malformed node line"));
        }
        let x: Vec<f64> = f[1..].iter().map(|s| lines.parse(s)).collect::<Result<_>>()?;
        nodes.push(&x);
    }
    let read_diag = |lines: &mut Lines<R>| -> Result<Vec<f64>> {
        let mut v = vec![0.0; n];
        for m in 0..n {
            let f = lines.next_fields()?;
            if f.len() != 2 || lines.index(&f[0], n)? != m {
                return Err(lines.err("malformed diagonal entry"));
            }
            v[m] = lines.parse(&f[1])?;
        }
        Ok(v)
    };
    lines.keyed("h", 1)?;
    let h = read_diag(&mut lines)?;
    let mut q = Vec::with_capacity(dim);
    for i in 0..dim {
        let f = lines.keyed("q", 2)?;
        if lines.parse::<usize>(&f[0])? != i {
            return Err(lines.err("q blocks out of order"));
        }
        let nnz: usize = lines.parse(&f[1])?;
        let mut t = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let f = lines.next_fields()?;
            if f.len() != 3 {
                return Err(lines.err("malformed matrix entry"));
            }
            t.push((lines.index(&f[0], n)?, lines.index(&f[1], n)?, lines.parse(&f[2])?));
        }
        q.push(CsrMatrix::from_triplets(n, n, &t));
    }
    let mut e = Vec::with_capacity(dim);
    for i in 0..dim {
        let f = lines.keyed("e", 2)?;
        if lines.parse::<usize>(&f[0])? != i {
            return Err(lines.err("e blocks out of order"));
        }
        e.push(read_diag(&mut lines)?);
    }
    let mut facets = Vec::with_capacity(dim + 1);
    for g in 0..=dim {
        let f = lines.keyed("facet", 2)?;
        if lines.parse::<usize>(&f[0])? != g {
            return Err(lines.err("facets out of order"));
        }
        let count: usize = lines.parse(&f[1])?;
        let normal = lines.keyed("normal", dim)?;
        let normal: Vec<f64> = normal.iter().map(|s| lines.parse(s)).collect::<Result<_>>()?;
        let mut fnodes = Vec::with_capacity(count);
        let mut b = Vec::with_capacity(count);
        for _ in 0..count {
            let f = lines.next_fields()?;
            if f.len() != 2 {
                return Err(lines.err("malformed facet entry"));
            }
            fnodes.push(lines.index(&f[0], n)?);
            b.push(lines.parse(&f[1])?);
        }
        facets.push(SimplexFacet {
            nodes: fnodes,
            b,
            normal,
        });
    }
    lines.keyed("end", 0)?;
    Ok(TpssOperator::from_parts(dim, degree, n1, family, nodes, h, q, e, facets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_tpss;

    #[test]
    fn round_trip_is_exact_and_byte_stable() {
        let op = build_tpss(Family::Lgl, 2, 2, None).unwrap();
        let mut a = Vec::new();
        write_operator(&op, &mut a).unwrap();
        let back = read_operator(&a[..]).unwrap();
        assert_eq!(back.h, op.h);
        assert_eq!(back.q, op.q);
        assert_eq!(back.e, op.e);
        assert_eq!(back.nodes, op.nodes);
        let mut b = Vec::new();
        write_operator(&back, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reports_line_of_bad_input() {
        let text = "tpss-operator 1\ndim 2\ndegree x\n";
        match read_operator(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
