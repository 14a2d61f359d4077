//! File formats: single-block SDPA sparse problems, edge-list graphs, dense
//! solution dumps, iteration-history CSV and run summaries.
//!
//! SDPA files describe `max <F0, Y> s.t. <F_k, Y> = c_k, Y psd`. This crate
//! reads them as the minimization `min <C, X> s.t. <A_k, X> = b_k` with
//! `C = -F0`, `A_k = F_k` and `b = c`, and writes the same mapping back.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;

use crate::engine::{SolveReport, SolveStatus};
use crate::error::{Result, SdpError};
use crate::instances::Graph;
use crate::problem::{ConstraintMatrix, ConstraintOperator, SdpProblem};
use crate::symmat::SymMatrix;

fn parse_err(line: usize, message: impl Into<String>) -> SdpError {
    SdpError::Parse {
        line,
        message: message.into(),
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let trimmed = raw.trim_start();
            if trimmed.starts_with('"') || trimmed.starts_with('*') {
                continue;
            }
            items.extend(
                raw.split(|c: char| c.is_whitespace() || ",{}()".contains(c))
                    .filter(|t| !t.is_empty())
                    .map(|t| (line, t)),
            );
        }
        Self {
            items,
            pos: 0,
            last_line,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let tok = self.items.get(self.pos).copied().ok_or_else(|| {
            parse_err(
                self.last_line,
                format!("unexpected end of file, expected {what}"),
            )
        })?;
        self.pos += 1;
        Ok(tok)
    }

    fn int(&mut self, what: &str) -> Result<(usize, i64)> {
        let (line, t) = self.next(what)?;
        // some writers emit integers as floats ("1.0")
        let v = t
            .parse::<i64>()
            .ok()
            .or_else(|| {
                t.parse::<f64>()
                    .ok()
                    .filter(|f| f.fract() == 0.0)
                    .map(|f| f as i64)
            })
            .ok_or_else(|| parse_err(line, format!("expected integer {what}, found '{t}'")))?;
        Ok((line, v))
    }

    fn float(&mut self, what: &str) -> Result<(usize, f64)> {
        let (line, t) = self.next(what)?;
        let v: f64 = t
            .parse()
            .map_err(|_| parse_err(line, format!("expected number {what}, found '{t}'")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite {what}")));
        }
        Ok((line, v))
    }

    fn done(&self) -> bool {
        self.pos >= self.items.len()
    }
}

/// Parses a single-block SDPA sparse problem.
pub fn parse_sdpa(text: &str) -> Result<SdpProblem> {
    let mut tok = Tokens::new(text);
    let (line, m) = tok.int("constraint count")?;
    if m < 1 {
        return Err(parse_err(
            line,
            format!("constraint count must be positive, got {m}"),
        ));
    }
    let m = m as usize;
    let (line, nblocks) = tok.int("block count")?;
    if nblocks != 1 {
        return Err(parse_err(
            line,
            format!("only single-block problems are supported, got {nblocks} blocks"),
        ));
    }
    let (line, size) = tok.int("block size")?;
    if size < 0 {
        return Err(parse_err(
            line,
            format!("diagonal (negative-size) block {size} is not supported"),
        ));
    }
    if size == 0 {
        return Err(parse_err(line, "block size must be positive"));
    }
    let n = size as usize;
    let mut b = DVector::zeros(m);
    for k in 0..m {
        b[k] = tok.float("right-hand side entry")?.1;
    }

    let mut entries: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); m + 1];
    let mut seen: HashMap<(usize, usize, usize), usize> = HashMap::new();
    while !tok.done() {
        let (line, matno) = tok.int("matrix number")?;
        let (_, blkno) = tok.int("block number")?;
        let (_, i) = tok.int("row index")?;
        let (_, j) = tok.int("column index")?;
        let (_, value) = tok.float("entry value")?;
        if matno < 0 || matno as usize > m {
            return Err(parse_err(
                line,
                format!("matrix number {matno} outside 0..={m}"),
            ));
        }
        if blkno != 1 {
            return Err(parse_err(
                line,
                format!("block number {blkno} but only block 1 exists"),
            ));
        }
        if i < 1 || j < 1 || i as usize > n || j as usize > n {
            return Err(parse_err(line, format!("index ({i}, {j}) outside 1..={n}")));
        }
        let (r, c) = ((i.min(j) - 1) as usize, (i.max(j) - 1) as usize);
        if let Some(prev) = seen.insert((matno as usize, r, c), line) {
            return Err(parse_err(
                line,
                format!("duplicate entry ({i}, {j}) of matrix {matno} (first at line {prev})"),
            ));
        }
        entries[matno as usize].push((r, c, value));
    }

    let mut cost = SymMatrix::zeros(n);
    for &(r, c, v) in &entries[0] {
        cost.set(r, c, -v);
    }
    let constraints = entries
        .into_iter()
        .skip(1)
        .map(|e| ConstraintMatrix::new(n, e))
        .collect::<Result<Vec<_>>>()?;
    let op = ConstraintOperator::new(n, constraints)?;
    SdpProblem::new(cost, op, b)
}

pub fn read_sdpa(path: impl AsRef<Path>) -> Result<SdpProblem> {
    parse_sdpa(&std::fs::read_to_string(path)?)
}

/// Shortest decimal form that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// SDPA text; entries are ordered by matrix number, then row, then column.
pub fn format_sdpa(p: &SdpProblem) -> String {
    let n = p.n();
    let mut out = String::new();
    out.push_str("\"min <C,X> s.t. <A_k,X> = b_k, X psd; stored as F0 = -C, F_k = A_k, c = b\n");
    let _ = writeln!(out, "{}", p.m());
    out.push_str("1\n");
    let _ = writeln!(out, "{n}");
    let rhs: Vec<String> = p.b.iter().map(|&v| num(v)).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));
    for i in 0..n {
        for j in i..n {
            let v = p.c.get(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "0 1 {} {} {}", i + 1, j + 1, num(-v));
            }
        }
    }
    for (k, a) in p.op.constraints().iter().enumerate() {
        for &(r, c, v) in a.entries() {
            let _ = writeln!(out, "{} 1 {} {} {}", k + 1, r + 1, c + 1, num(v));
        }
    }
    out
}

pub fn write_sdpa(p: &SdpProblem, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_sdpa(p))?;
    Ok(())
}

/// Edge list with one 1-indexed `i j` pair per line and `#` comments. The
/// vertex count is the largest index seen, or `min_vertices` if larger.
pub fn parse_edge_list(text: &str, min_vertices: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_index = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parts: Vec<&str> = content.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected 'i j', found '{content}'"),
            ));
        }
        let mut ends = [0usize; 2];
        for (slot, t) in ends.iter_mut().zip(&parts) {
            *slot = t.parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(|| {
                parse_err(line, format!("vertex '{t}' is not a positive integer"))
            })?;
        }
        if ends[0] == ends[1] {
            return Err(parse_err(line, format!("self loop at vertex {}", ends[0])));
        }
        max_index = max_index.max(ends[0]).max(ends[1]);
        edges.push((line, ends[0] - 1, ends[1] - 1));
    }
    let n = max_index.max(min_vertices.unwrap_or(0));
    let mut seen = HashMap::new();
    for &(line, a, b) in &edges {
        if let Some(prev) = seen.insert((a.min(b), a.max(b)), line) {
            return Err(parse_err(
                line,
                format!("duplicate edge {} {} (first at line {prev})", a + 1, b + 1),
            ));
        }
    }
    Graph::new(n, edges.iter().map(|&(_, a, b)| (a, b)))
}

pub fn read_edge_list(path: impl AsRef<Path>, min_vertices: Option<usize>) -> Result<Graph> {
    parse_edge_list(&std::fs::read_to_string(path)?, min_vertices)
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!(
        "# {} vertices, {} edges\n",
        g.num_vertices(),
        g.edges().len()
    );
    for &(i, j) in g.edges() {
        let _ = writeln!(out, "{} {}", i + 1, j + 1);
    }
    out
}

pub const HISTORY_HEADER: &str = "k,r_P,r_D,delta,sigma,rank,primal_obj,dual_obj,wall_ms";

/// Iteration history as CSV, one row per record including iteration 0.
pub fn write_history<W: Write>(report: &SolveReport, mut w: W) -> Result<()> {
    writeln!(w, "{HISTORY_HEADER}")?;
    for r in &report.history {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            num(r.r_p),
            num(r.r_d),
            num(r.delta),
            num(r.sigma),
            r.rank,
            num(r.primal_obj),
            num(r.dual_obj),
            num(r.wall_ms)
        )?;
    }
    Ok(())
}

/// Dense text dump of `(X, y, Z)`:
///
/// ```text
/// # dadal solution
/// n <n>
/// m <m>
/// X
/// <n lines of n values>
/// y
/// <m lines of one value>
/// Z
/// <n lines of n values>
/// ```
pub fn write_solution<W: Write>(
    x: &SymMatrix,
    y: &DVector<f64>,
    z: &SymMatrix,
    mut w: W,
) -> Result<()> {
    let n = x.order();
    writeln!(w, "# dadal solution")?;
    writeln!(w, "n {n}")?;
    writeln!(w, "m {}", y.len())?;
    let dump = |w: &mut W, s: &SymMatrix| -> std::io::Result<()> {
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| num(s.get(i, j))).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    };
    writeln!(w, "X")?;
    dump(&mut w, x)?;
    writeln!(w, "y")?;
    for v in y.iter() {
        writeln!(w, "{}", num(*v))?;
    }
    writeln!(w, "Z")?;
    dump(&mut w, z)?;
    Ok(())
}

/// One-line summary of a solve, in the objective sense reported by the problem family.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub r_p: f64,
    pub r_d: f64,
    pub delta: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub status: SolveStatus,
}

impl RunRecord {
    pub const HEADER: &'static str =
        "instance,method,n,m,iterations,wall_seconds,r_P,r_D,delta,primal_obj,dual_obj,status";

    pub fn from_report(instance: &str, p: &SdpProblem, report: &SolveReport) -> Self {
        let map = p.objective_map;
        Self {
            instance: instance.to_string(),
            method: report.method.name().to_string(),
            n: p.n(),
            m: p.m(),
            iterations: report.iterations,
            wall_seconds: report.wall_seconds,
            r_p: report.final_report.r_p,
            r_d: report.final_report.r_d,
            delta: report.final_report.delta,
            primal_obj: map.apply(report.final_report.primal_obj),
            dual_obj: map.apply(report.final_report.dual_obj),
            status: report.status,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance,
            self.method,
            self.n,
            self.m,
            self.iterations,
            num(self.wall_seconds),
            num(self.r_p),
            num(self.r_d),
            num(self.delta),
            num(self.primal_obj),
            num(self.dual_obj),
            self.status.name()
        )
    }
}
