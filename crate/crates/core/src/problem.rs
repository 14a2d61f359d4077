//! The standard-form primal/dual pair
//!
//! ```text
//! min <C, X>  s.t.  A(X) = b, X psd        max b^T y  s.t.  C - A^T(y) = Z, Z psd
//! ```
//!
//! together with the constraint operator `A`, its adjoint, the prepared solver
//! for the Gram system `A A^T u = r` and the infeasibility measures used for
//! termination.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result, SdpError};
use crate::symmat::{SpectralDecomposition, SymMatrix};

/// Pivot threshold, relative to the largest Gram diagonal, below which the
/// constraint operator is declared rank deficient.
pub const GRAM_PIVOT_TOL: f64 = 1e-12;

/// One sparse symmetric constraint matrix, stored as upper-triangle triples
/// `(row, col, value)` with zero-based `row <= col`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    entries: Vec<(usize, usize, f64)>,
}

impl ConstraintMatrix {
    /// Builds a constraint from triples; `(i, j)` and `(j, i)` name the same entry.
    pub fn new(n: usize, triples: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triples {
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            if c >= n {
                return Err(SdpError::InvalidInput(format!(
                    "constraint entry ({i}, {j}) outside a {n}x{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(SdpError::InvalidInput(format!(
                    "non-finite constraint value at ({i}, {j})"
                )));
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(SdpError::InvalidInput(format!(
                "duplicate constraint entry ({}, {})",
                w[0].0, w[0].1
            )));
        }
        entries.retain(|e| e.2 != 0.0);
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `<A_i, X>`.
    pub fn dot(&self, x: &SymMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| {
                let w = if r == c { 1.0 } else { 2.0 };
                w * v * x.get(r, c)
            })
            .sum()
    }

    pub fn to_dense(&self, n: usize) -> SymMatrix {
        let mut s = SymMatrix::zeros(n);
        for &(r, c, v) in &self.entries {
            s.set(r, c, v);
        }
        s
    }
}

/// Prepared solver for `A A^T u = r`.
#[derive(Debug, Clone)]
pub enum GramSolver {
    /// `A A^T` is diagonal; the solve is elementwise division.
    Diagonal(DVector<f64>),
    /// Lower Cholesky factor `L` with `A A^T = L L^T`.
    Factorized(DMatrix<f64>),
}

/// The linear map `X -> (<A_i, X>)_i` together with its Gram solver.
#[derive(Debug, Clone)]
pub struct ConstraintOperator {
    n: usize,
    constraints: Vec<ConstraintMatrix>,
    gram: GramSolver,
}

impl ConstraintOperator {
    pub fn new(n: usize, constraints: Vec<ConstraintMatrix>) -> Result<Self> {
        if n == 0 {
            return Err(SdpError::InvalidInput(
                "matrix order must be positive".into(),
            ));
        }
        if constraints.is_empty() {
            return Err(SdpError::InvalidInput(
                "at least one constraint is required".into(),
            ));
        }
        if let Some((k, (r, c, _))) = constraints
            .iter()
            .enumerate()
            .find_map(|(k, a)| a.entries.iter().find(|e| e.1 >= n).map(|e| (k, *e)))
        {
            return Err(SdpError::InvalidInput(format!(
                "constraint {} has entry ({r}, {c}) outside order {n}",
                k + 1
            )));
        }
        let gram = build_gram_solver(&constraints)?;
        Ok(Self {
            n,
            constraints,
            gram,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[ConstraintMatrix] {
        &self.constraints
    }

    pub fn gram_solver(&self) -> &GramSolver {
        &self.gram
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.gram, GramSolver::Diagonal(_))
    }

    /// `A(X)`.
    pub fn apply(&self, x: &SymMatrix) -> Result<DVector<f64>> {
        check_dim("apply", self.n, x.order())?;
        Ok(DVector::from_iterator(
            self.m(),
            self.constraints.iter().map(|a| a.dot(x)),
        ))
    }

    /// `A^T(y) = sum_i y_i A_i`.
    pub fn apply_adjoint(&self, y: &DVector<f64>) -> Result<SymMatrix> {
        check_dim("apply_adjoint", self.m(), y.len())?;
        let mut s = SymMatrix::zeros(self.n);
        self.accumulate_adjoint(1.0, y, &mut s);
        Ok(s)
    }

    /// `out += alpha * A^T(y)`; `y` must have length `m`.
    pub(crate) fn accumulate_adjoint(&self, alpha: f64, y: &DVector<f64>, out: &mut SymMatrix) {
        for (a, &yi) in self.constraints.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for &(r, c, v) in &a.entries {
                let updated = out.get(r, c) + alpha * yi * v;
                out.set(r, c, updated);
            }
        }
    }

    /// Solves `A A^T u = rhs`.
    pub fn solve_gram(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("solve_gram", self.m(), rhs.len())?;
        Ok(match &self.gram {
            GramSolver::Diagonal(d) => rhs.component_div(d),
            GramSolver::Factorized(l) => {
                let mut u = rhs.clone();
                forward_substitute(l, &mut u);
                back_substitute_transposed(l, &mut u);
                u
            }
        })
    }

    /// Explicit Gram matrix `(<A_i, A_j>)_{ij}`, dense.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        gram_entries(&self.constraints).0
    }
}

fn gram_entries(constraints: &[ConstraintMatrix]) -> (DMatrix<f64>, bool) {
    let m = constraints.len();
    let mut by_position: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for (k, a) in constraints.iter().enumerate() {
        for &(r, c, v) in &a.entries {
            by_position.entry((r, c)).or_default().push((k, v));
        }
    }
    let mut g = DMatrix::zeros(m, m);
    let mut off_diagonal = false;
    for (&(r, c), hits) in &by_position {
        let w = if r == c { 1.0 } else { 2.0 };
        for &(i, vi) in hits {
            for &(j, vj) in hits {
                g[(i, j)] += w * vi * vj;
            }
        }
        off_diagonal |= hits.len() > 1;
    }
    let off_diagonal = off_diagonal && (0..m).any(|i| (0..m).any(|j| i != j && g[(i, j)] != 0.0));
    (g, off_diagonal)
}

fn build_gram_solver(constraints: &[ConstraintMatrix]) -> Result<GramSolver> {
    let (g, off_diagonal) = gram_entries(constraints);
    let max_pivot = g.diagonal().max();
    if !off_diagonal {
        let d = g.diagonal();
        if let Some((row, &pivot)) = d
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p > GRAM_PIVOT_TOL * max_pivot) || p <= 0.0)
        {
            return Err(SdpError::RankDeficient {
                row,
                pivot,
                max_pivot,
            });
        }
        return Ok(GramSolver::Diagonal(d));
    }
    cholesky(&g, max_pivot).map(GramSolver::Factorized)
}

/// Dense lower Cholesky factor; a pivot below `GRAM_PIVOT_TOL * max_pivot`
/// is reported as rank deficiency rather than regularized.
fn cholesky(g: &DMatrix<f64>, max_pivot: f64) -> Result<DMatrix<f64>> {
    let m = g.nrows();
    let mut l = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut d = g[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > GRAM_PIVOT_TOL * max_pivot) {
            return Err(SdpError::RankDeficient {
                row: j,
                pivot: d,
                max_pivot,
            });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..m {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

fn forward_substitute(l: &DMatrix<f64>, u: &mut DVector<f64>) {
    let m = l.nrows();
    for i in 0..m {
        let mut s = u[i];
        for k in 0..i {
            s -= l[(i, k)] * u[k];
        }
        u[i] = s / l[(i, i)];
    }
}

fn back_substitute_transposed(l: &DMatrix<f64>, u: &mut DVector<f64>) {
    let m = l.nrows();
    for i in (0..m).rev() {
        let mut s = u[i];
        for k in (i + 1)..m {
            s -= l[(k, i)] * u[k];
        }
        u[i] = s / l[(i, i)];
    }
}

/// Affine map from the internal (minimization) objective to the value a
/// problem family reports, e.g. a negated theta value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveMap {
    pub scale: f64,
    pub offset: f64,
}

impl ObjectiveMap {
    pub const IDENTITY: ObjectiveMap = ObjectiveMap {
        scale: 1.0,
        offset: 0.0,
    };

    pub fn apply(&self, value: f64) -> f64 {
        self.scale * value + self.offset
    }
}

impl Default for ObjectiveMap {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub c: SymMatrix,
    pub op: ConstraintOperator,
    pub b: DVector<f64>,
    pub known_optimal_value: Option<f64>,
    pub objective_map: ObjectiveMap,
    /// An upper bound on `trace X` over the feasible set, when the family
    /// provides one. Enables [`SdpProblem::dual_bound`].
    pub trace_bound: Option<f64>,
}

impl SdpProblem {
    pub fn new(c: SymMatrix, op: ConstraintOperator, b: DVector<f64>) -> Result<Self> {
        check_dim("SdpProblem (cost order)", op.order(), c.order())?;
        check_dim("SdpProblem (rhs length)", op.m(), b.len())?;
        if !c.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(SdpError::InvalidInput("non-finite problem data".into()));
        }
        Ok(Self {
            c,
            op,
            b,
            known_optimal_value: None,
            objective_map: ObjectiveMap::IDENTITY,
            trace_bound: None,
        })
    }

    pub fn n(&self) -> usize {
        self.c.order()
    }

    pub fn m(&self) -> usize {
        self.op.m()
    }

    /// Lower bound on the optimal value valid for any `y`:
    /// `b^T y + t * min(0, lambda_min(C - A^T y))` with `t` the trace bound.
    /// Unlike `b^T y` it does not require `C - A^T y` to be exactly psd.
    pub fn dual_bound(&self, y: &DVector<f64>) -> Result<Option<f64>> {
        let Some(t) = self.trace_bound else {
            return Ok(None);
        };
        let slack = &self.c - &self.op.apply_adjoint(y)?;
        let lmin = SpectralDecomposition::of(&slack)?.min_eigenvalue();
        Ok(Some(self.b.dot(y) + t * lmin.min(0.0)))
    }

    /// Residual and objective measures of a candidate triple.
    pub fn residuals(
        &self,
        x: &SymMatrix,
        y: &DVector<f64>,
        z: &SymMatrix,
    ) -> Result<ResidualReport> {
        residuals(self, x, y, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub r_p: f64,
    pub r_d: f64,
    pub delta: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `||Z X||_F`.
    pub compl: f64,
}

impl ResidualReport {
    /// `|primal - dual| / (1 + |primal|)`.
    pub fn relative_gap(&self) -> f64 {
        (self.primal_obj - self.dual_obj).abs() / (1.0 + self.primal_obj.abs())
    }
}

/// `r_P = ||A(X) - b|| / (1 + ||b||)`, `r_D = ||C - Z - A^T(y)|| / (1 + ||C||)`.
pub fn residuals(
    p: &SdpProblem,
    x: &SymMatrix,
    y: &DVector<f64>,
    z: &SymMatrix,
) -> Result<ResidualReport> {
    check_dim("residuals (Z order)", p.n(), z.order())?;
    let primal_res = p.op.apply(x)? - &p.b;
    let mut dual_res = &p.c - z;
    check_dim("residuals (y length)", p.m(), y.len())?;
    p.op.accumulate_adjoint(-1.0, y, &mut dual_res);
    let r_p = primal_res.norm() / (1.0 + p.b.norm());
    let r_d = dual_res.norm() / (1.0 + p.c.norm());
    Ok(ResidualReport {
        r_p,
        r_d,
        // f64::max would drop a NaN side
        delta: if r_p.is_nan() || r_d.is_nan() {
            f64::NAN
        } else {
            r_p.max(r_d)
        },
        primal_obj: p.c.inner(x)?,
        dual_obj: p.b.dot(y),
        compl: z.product_norm(x),
    })
}
