//! Problem generators: Lovasz theta SDPs of graphs, the matrix-lifting
//! relaxation of the linear ordering problem, and random standard-form
//! instances with a known strictly feasible primal-dual pair.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SdpError};
use crate::problem::{ConstraintMatrix, ConstraintOperator, ObjectiveMap, SdpProblem};
use crate::symmat::SymMatrix;

/// Simple undirected graph on vertices `0..num_vertices`; edges are stored as `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if num_vertices == 0 {
            return Err(SdpError::InvalidInput(
                "graph needs at least one vertex".into(),
            ));
        }
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(SdpError::InvalidInput(format!("self loop at vertex {a}")));
            }
            let (i, j) = (a.min(b), a.max(b));
            if j >= num_vertices {
                return Err(SdpError::InvalidInput(format!(
                    "edge ({a}, {b}) outside {num_vertices} vertices"
                )));
            }
            out.push((i, j));
        }
        out.sort_unstable();
        if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
            return Err(SdpError::InvalidInput(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self {
            num_vertices,
            edges: out,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least three vertices");
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
    }

    pub fn complete(n: usize) -> Self {
        Self::new(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))).expect("valid")
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, []).expect("valid")
    }

    pub fn petersen() -> Self {
        let outer = (0..5).map(|i| (i, (i + 1) % 5));
        let inner = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5));
        let spokes = (0..5).map(|i| (i, i + 5));
        Self::new(10, outer.chain(inner).chain(spokes)).expect("valid")
    }

    /// Erdos-Renyi `G(n, p)`.
    pub fn gnp(n: usize, p: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Self::new(n, edges).expect("valid")
    }
}

/// Theta SDP `max <J, X> s.t. X_ij = 0 (ij in E), trace X = 1, X psd`, posed as
/// minimization of `<-J, X>`; the objective map reports the theta value.
pub fn theta_sdp(g: &Graph) -> SdpProblem {
    let n = g.num_vertices();
    let mut constraints: Vec<ConstraintMatrix> = g
        .edges()
        .iter()
        .map(|&(i, j)| ConstraintMatrix::new(n, [(i, j, 1.0)]).expect("valid edge"))
        .collect();
    constraints.push(ConstraintMatrix::new(n, (0..n).map(|i| (i, i, 1.0))).expect("valid trace"));
    let m = constraints.len();
    let op = ConstraintOperator::new(n, constraints).expect("theta constraints are independent");
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    let c = SymMatrix::from_fn(n, |_, _| -1.0);
    let mut p = SdpProblem::new(c, op, b).expect("consistent dimensions");
    p.objective_map = ObjectiveMap {
        scale: -1.0,
        offset: 0.0,
    };
    p.trace_bound = Some(1.0);
    p
}

/// `theta(C_n) = n cos(pi/n) / (1 + cos(pi/n))` for odd `n`.
pub fn odd_cycle_theta(n: usize) -> f64 {
    let c = (std::f64::consts::PI / n as f64).cos();
    n as f64 * c / (1.0 + c)
}

/// Linear ordering instance: `weights[(u, v)]` is the profit collected when `u`
/// is placed before `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LopSpec {
    pub weights: DMatrix<f64>,
}

impl LopSpec {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if !weights.is_square() {
            return Err(SdpError::InvalidInput(
                "LOP weight matrix must be square".into(),
            ));
        }
        if weights.nrows() < 3 {
            return Err(SdpError::InvalidInput(format!(
                "LOP needs at least 3 objects, got {}",
                weights.nrows()
            )));
        }
        Ok(Self { weights })
    }

    /// Integer weights drawn uniformly from `0..100`.
    pub fn random(num_objects: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DMatrix::from_fn(num_objects, num_objects, |i, j| {
            if i == j {
                0.0
            } else {
                rng.random_range(0..100) as f64
            }
        });
        Self::new(w)
    }

    pub fn num_objects(&self) -> usize {
        self.weights.nrows()
    }

    /// Profit of a permutation given as the sequence of objects in order.
    pub fn profit(&self, order: &[usize]) -> f64 {
        let mut total = 0.0;
        for (a, &u) in order.iter().enumerate() {
            for &v in &order[a + 1..] {
                total += self.weights[(u, v)];
            }
        }
        total
    }

    /// Matrix row of the ordered pair `(i, j)`, `i < j`; row 0 is the constant.
    pub fn pair_row(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.num_objects());
        let n = self.num_objects();
        // rows of pairs with first index < i, then offset within row i
        1 + i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    /// `sum_{i<j} (w_ij + w_ji) / 2`, the part of every ordering's profit not
    /// carried by the SDP objective.
    pub fn objective_constant(&self) -> f64 {
        let n = self.num_objects();
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 0.5 * (self.weights[(i, j)] + self.weights[(j, i)]);
            }
        }
        s
    }
}

/// Matrix-lifting relaxation of the LOP over `Z = [1 y^T; y Y]` with
/// `y_ij = +1` when `i` precedes `j`: `diag(Z) = e` and, for every triple
/// `i < j < k`, `Y_{ij,jk} - Y_{ij,ik} - Y_{ik,jk} = -1`. The objective map
/// reports the profit bound.
pub fn lop_sdp(spec: &LopSpec) -> Result<SdpProblem> {
    let big_n = spec.num_objects();
    if big_n < 3 {
        return Err(SdpError::InvalidInput(
            "LOP needs at least 3 objects".into(),
        ));
    }
    let n = big_n * (big_n - 1) / 2 + 1;
    let mut constraints = Vec::new();
    let mut b = Vec::new();
    for p in 0..n {
        constraints.push(ConstraintMatrix::new(n, [(p, p, 1.0)])?);
        b.push(1.0);
    }
    for i in 0..big_n {
        for j in (i + 1)..big_n {
            for k in (j + 1)..big_n {
                let (ij, ik, jk) = (
                    spec.pair_row(i, j),
                    spec.pair_row(i, k),
                    spec.pair_row(j, k),
                );
                constraints.push(ConstraintMatrix::new(
                    n,
                    [(ij, jk, 0.5), (ij, ik, -0.5), (ik, jk, -0.5)],
                )?);
                b.push(-1.0);
            }
        }
    }
    let op = ConstraintOperator::new(n, constraints)?;
    let mut c = SymMatrix::zeros(n);
    for i in 0..big_n {
        for j in (i + 1)..big_n {
            let coef = (spec.weights[(i, j)] - spec.weights[(j, i)]) / 4.0;
            c.set(0, spec.pair_row(i, j), -coef);
        }
    }
    let mut p = SdpProblem::new(c, op, DVector::from_vec(b))?;
    p.objective_map = ObjectiveMap {
        scale: -1.0,
        offset: spec.objective_constant(),
    };
    // unit diagonal
    p.trace_bound = Some(n as f64);
    Ok(p)
}

/// A random instance together with the strictly feasible triple it was built from.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub problem: SdpProblem,
    pub x0: SymMatrix,
    pub y0: DVector<f64>,
    pub z0: SymMatrix,
}

const RANDOM_SDP_ATTEMPTS: usize = 10;

pub fn random_sdp(n: usize, m: usize, density: f64, seed: u64) -> Result<SdpProblem> {
    random_sdp_with_certificate(n, m, density, seed).map(|r| r.problem)
}

/// Sparse Gaussian constraints with `b = A(X0)` and `C = Z0 + A^T(y0)` for
/// positive definite `X0`, `Z0`, so both sides are strictly feasible.
pub fn random_sdp_with_certificate(
    n: usize,
    m: usize,
    density: f64,
    seed: u64,
) -> Result<RandomInstance> {
    if n == 0 || m == 0 || m > n * (n + 1) / 2 {
        return Err(SdpError::InvalidInput(format!(
            "random instance needs 1 <= m <= n(n+1)/2, got n = {n}, m = {m}"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(SdpError::InvalidInput(format!(
            "density {density} not in (0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_err = None;
    let mut op = None;
    for _ in 0..RANDOM_SDP_ATTEMPTS {
        let constraints = (0..m)
            .map(|_| random_constraint(n, density, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        match ConstraintOperator::new(n, constraints) {
            Ok(o) => {
                op = Some(o);
                break;
            }
            Err(e @ SdpError::RankDeficient { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let op = match op {
        Some(op) => op,
        None => return Err(last_err.expect("at least one attempt")),
    };
    let x0 = random_pd(n, &mut rng);
    let z0 = random_pd(n, &mut rng);
    let y0 = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let b = op.apply(&x0)?;
    let mut c = z0.clone();
    c.add_scaled(1.0, &op.apply_adjoint(&y0)?);
    let problem = SdpProblem::new(c, op, b)?;
    Ok(RandomInstance {
        problem,
        x0,
        y0,
        z0,
    })
}

fn random_constraint<R: Rng>(n: usize, density: f64, rng: &mut R) -> Result<ConstraintMatrix> {
    let mut triples = Vec::new();
    for i in 0..n {
        for j in i..n {
            if rng.random::<f64>() < density {
                triples.push((i, j, rng.sample::<f64, _>(StandardNormal)));
            }
        }
    }
    if triples.is_empty() {
        let i = rng.random_range(0..n);
        let j = rng.random_range(i..n);
        triples.push((i, j, rng.sample::<f64, _>(StandardNormal)));
    }
    ConstraintMatrix::new(n, triples)
}

/// `G G^T / n + I` with Gaussian `G`.
fn random_pd<R: Rng>(n: usize, rng: &mut R) -> SymMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut s = SymMatrix::from_dense(&g * g.transpose() / n as f64).expect("square");
    s.add_scaled(1.0, &SymMatrix::identity(n));
    s
}
