//! Outer solvers: the plain alternating-direction scheme (ADAL) and the variant
//! with a factored-dual ascent step before each projection (DADAL), plus the
//! penalty-parameter manager and termination logic.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SdpError};
use crate::problem::{residuals, ResidualReport, SdpProblem};
use crate::subsolver::{AugLagState, StepStrategy};
use crate::symmat::{Factor, SpectralDecomposition, SymMatrix, DEFAULT_RANK_TOL};

/// Slack allowed per step by [`nonexpansiveness_monitor`].
pub const NONEXPANSIVE_SLACK: f64 = 1e-9;

/// Norms below this count as exactly feasible when choosing the starting penalty.
const SIGMA_INIT_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Adal,
    Dadal,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Adal => "adal",
            Method::Dadal => "dadal",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = SdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adal" => Ok(Method::Adal),
            "dadal" => Ok(Method::Dadal),
            other => Err(SdpError::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

/// How the starting penalty is derived from the starting residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sigma0Rule {
    /// `(r_P / r_D) * ||A X0 - b|| / ||C - Z0 - A^T y0||`.
    #[default]
    ResidualProduct,
    /// `r_P / r_D`.
    ResidualRatio,
}

pub const DEFAULT_EPS_INNER_REL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: Method,
    pub eps: f64,
    pub max_outer_iters: usize,
    pub time_limit_s: f64,
    pub inner_iters: usize,
    /// Defaults to `DEFAULT_EPS_INNER_REL * (1 + ||C||)`. A loose value lets the
    /// inner loop stop on its first gradient test late in a run.
    pub eps_inner: Option<f64>,
    /// Computed from the starting point when absent.
    pub sigma0: Option<f64>,
    pub sigma0_rule: Sigma0Rule,
    /// Keep sigma at its starting value.
    pub sigma_fixed: bool,
    pub sigma_bounds: (f64, f64),
    pub sigma_factor: f64,
    pub sigma_patience: usize,
    pub step_strategy: StepStrategy,
    pub rank_tol: f64,
    pub seed: u64,
    /// Starting primal matrix is `x0_scale * I`.
    pub x0_scale: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Dadal,
            eps: 1e-5,
            max_outer_iters: 20_000,
            time_limit_s: 3600.0,
            inner_iters: 2,
            eps_inner: None,
            sigma0: None,
            sigma0_rule: Sigma0Rule::default(),
            sigma_fixed: false,
            sigma_bounds: (1e-4, 1e4),
            sigma_factor: 1.3,
            sigma_patience: 10,
            step_strategy: StepStrategy::Analytic,
            rank_tol: DEFAULT_RANK_TOL,
            seed: 0,
            x0_scale: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SdpError::InvalidInput(msg.to_string()));
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(self.sigma_factor > 1.0) {
            return bad("sigma factor must exceed 1");
        }
        let (lo, hi) = self.sigma_bounds;
        if !(lo > 0.0 && lo <= hi) {
            return bad("sigma bounds must satisfy 0 < lo <= hi");
        }
        if let Some(s) = self.sigma0 {
            if !(s > 0.0 && s.is_finite()) {
                return bad("sigma0 must be positive");
            }
        }
        if !(self.x0_scale > 0.0) {
            return bad("starting scale must be positive");
        }
        if self.sigma_patience == 0 {
            return bad("sigma patience must be at least 1");
        }
        Ok(())
    }

    fn eps_inner_for(&self, p: &SdpProblem) -> f64 {
        self.eps_inner
            .unwrap_or(DEFAULT_EPS_INNER_REL * (1.0 + p.c.norm()))
    }
}

/// Starting penalty from the residuals of `(X0, y0, Z0)`, clamped to `bounds`.
pub fn sigma_init(
    p: &SdpProblem,
    x0: &SymMatrix,
    y0: &DVector<f64>,
    z0: &SymMatrix,
    rule: Sigma0Rule,
    bounds: (f64, f64),
) -> Result<f64> {
    let report = residuals(p, x0, y0, z0)?;
    let primal_norm = report.r_p * (1.0 + p.b.norm());
    let dual_norm = report.r_d * (1.0 + p.c.norm());
    let raw = if primal_norm < SIGMA_INIT_GUARD || dual_norm < SIGMA_INIT_GUARD {
        1.0
    } else {
        match rule {
            Sigma0Rule::ResidualProduct => (report.r_p / report.r_d) * (primal_norm / dual_norm),
            Sigma0Rule::ResidualRatio => report.r_p / report.r_d,
        }
    };
    Ok(raw.clamp(bounds.0, bounds.1))
}

/// Adjusts sigma when one residual dominates the other for `patience`
/// consecutive iterations.
#[derive(Debug, Clone)]
pub struct PenaltyManager {
    sigma: f64,
    bounds: (f64, f64),
    factor: f64,
    patience: usize,
    fixed: bool,
    decrease_hits: usize,
    increase_hits: usize,
}

impl PenaltyManager {
    pub fn new(sigma0: f64, cfg: &SolverConfig) -> Self {
        Self {
            sigma: sigma0.clamp(cfg.sigma_bounds.0, cfg.sigma_bounds.1),
            bounds: cfg.sigma_bounds,
            factor: cfg.sigma_factor,
            patience: cfg.sigma_patience,
            fixed: cfg.sigma_fixed,
            decrease_hits: 0,
            increase_hits: 0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `100 r_D < r_P` means sigma is too large; `2 r_D > r_P` means it is too small.
    pub fn update(&mut self, r_p: f64, r_d: f64) -> f64 {
        if self.fixed {
            return self.sigma;
        }
        if 100.0 * r_d < r_p {
            self.increase_hits = 0;
            self.decrease_hits += 1;
            if self.decrease_hits >= self.patience {
                self.sigma /= self.factor;
                self.decrease_hits = 0;
            }
        } else if 2.0 * r_d > r_p {
            self.decrease_hits = 0;
            self.increase_hits += 1;
            if self.increase_hits >= self.patience {
                self.sigma *= self.factor;
                self.increase_hits = 0;
            }
        } else {
            self.decrease_hits = 0;
            self.increase_hits = 0;
        }
        self.sigma = self.sigma.clamp(self.bounds.0, self.bounds.1);
        self.sigma
    }
}

/// Solver state between outer iterations.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub x: SymMatrix,
    pub y: DVector<f64>,
    pub z: SymMatrix,
    /// `V` with `V V^T = Z`; maintained by DADAL only.
    pub v: Option<Factor>,
    pub sigma: f64,
    pub k: usize,
    pub rank: usize,
}

impl Iterate {
    /// `X = scale * I`, `y = 0`, `Z = 0`.
    pub fn initial(p: &SdpProblem, scale: f64, sigma: f64) -> Self {
        Self {
            x: SymMatrix::identity(p.n()).scaled(scale),
            y: DVector::zeros(p.m()),
            z: SymMatrix::zeros(p.n()),
            v: None,
            sigma,
            k: 0,
            rank: 0,
        }
    }
}

/// `(A A^T)^{-1} (b / sigma - A(X / sigma - C + Z))`.
fn y_update(p: &SdpProblem, x: &SymMatrix, z: &SymMatrix, sigma: f64) -> Result<DVector<f64>> {
    let mut w = x.scaled(1.0 / sigma);
    w.add_scaled(-1.0, &p.c);
    w.add_scaled(1.0, z);
    let rhs = &p.b / sigma - p.op.apply(&w)?;
    p.op.solve_gram(&rhs)
}

/// Projects `W = X / sigma - C + A^T y`: returns `(sigma (W)_+, -(W)_-)` and the decomposition.
fn project(
    p: &SdpProblem,
    x: &SymMatrix,
    y: &DVector<f64>,
    sigma: f64,
) -> Result<(SymMatrix, SymMatrix, SpectralDecomposition)> {
    let mut w = x.scaled(1.0 / sigma);
    w.add_scaled(-1.0, &p.c);
    w.add_scaled(1.0, &p.op.apply_adjoint(y)?);
    let eig = SpectralDecomposition::of(&w)?;
    let (plus, minus) = eig.split();
    Ok((plus.scaled(sigma), minus.scaled(-1.0), eig))
}

/// One ADAL iteration: exact `y` maximization, then the cone projection that
/// updates `Z` and `X` together.
pub fn adal_step(p: &SdpProblem, it: &Iterate, rank_tol: f64) -> Result<Iterate> {
    let y = y_update(p, &it.x, &it.z, it.sigma)?;
    let (x, z, eig) = project(p, &it.x, &y, it.sigma)?;
    Ok(Iterate {
        x,
        y,
        z,
        v: None,
        sigma: it.sigma,
        k: it.k + 1,
        rank: eig.negative_rank(rank_tol),
    })
}

/// One DADAL iteration: `inner_iters` ascent steps on the factored augmented
/// Lagrangian, then the ADAL projection, then a fresh factor of the new `Z`.
pub fn dadal_step<R: Rng + ?Sized>(
    p: &SdpProblem,
    it: &Iterate,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<Iterate> {
    let mut y = y_update(p, &it.x, &it.z, it.sigma)?;
    if cfg.inner_iters > 0 {
        let v = match &it.v {
            Some(v) => v.clone(),
            None => SpectralDecomposition::of(&it.z)?.positive_part_factor(cfg.rank_tol, rng),
        };
        let mut state = AugLagState::new(p, it.x.clone(), it.sigma, y, v)?;
        state.inner_solve(cfg.inner_iters, cfg.eps_inner_for(p), cfg.step_strategy)?;
        y = state.y().clone();
    }
    let (x, z, eig) = project(p, &it.x, &y, it.sigma)?;
    let v = eig.negative_part_factor(cfg.rank_tol, rng);
    Ok(Iterate {
        x,
        y,
        z,
        rank: eig.negative_rank(cfg.rank_tol),
        v: Some(v),
        sigma: it.sigma,
        k: it.k + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    TimeLimit,
    NumericFailure,
}

impl SolveStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NumericFailure => "numeric_failure",
        }
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub r_p: f64,
    pub r_d: f64,
    pub delta: f64,
    pub sigma: f64,
    pub rank: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Row 0 describes the starting point.
    pub history: Vec<IterationRecord>,
    pub final_report: ResidualReport,
    pub final_x: SymMatrix,
    pub final_y: DVector<f64>,
    pub final_z: SymMatrix,
    pub final_sigma: f64,
    pub sigma0: f64,
    pub failure: Option<String>,
    pub wall_seconds: f64,
}

impl SolveReport {
    pub fn relative_gap(&self) -> f64 {
        self.final_report.relative_gap()
    }
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    #[cfg(not(target_arch = "wasm32"))]
    fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    // no monotonic clock on wasm32-unknown-unknown without JS glue
    #[cfg(target_arch = "wasm32")]
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

pub fn solve(p: &SdpProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_observed(p, cfg, |_| {})
}

/// Runs the configured method, calling `observer` on the starting iterate and
/// after every outer iteration.
pub fn solve_observed(
    p: &SdpProblem,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&Iterate),
) -> Result<SolveReport> {
    cfg.validate()?;
    let clock = Stopwatch::start();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut it = Iterate::initial(p, cfg.x0_scale, 1.0);
    let sigma0 = match cfg.sigma0 {
        Some(s) => s.clamp(cfg.sigma_bounds.0, cfg.sigma_bounds.1),
        None => sigma_init(p, &it.x, &it.y, &it.z, cfg.sigma0_rule, cfg.sigma_bounds)?,
    };
    it.sigma = sigma0;
    if cfg.method == Method::Dadal {
        let v = Factor::tiny_random(p.n(), &mut rng);
        it.rank = 0;
        it.v = Some(v);
    }
    let mut penalty = PenaltyManager::new(sigma0, cfg);

    let record = |it: &Iterate, rep: &ResidualReport, wall_ms: f64| IterationRecord {
        k: it.k,
        r_p: rep.r_p,
        r_d: rep.r_d,
        delta: rep.delta,
        sigma: it.sigma,
        rank: it.rank,
        primal_obj: rep.primal_obj,
        dual_obj: rep.dual_obj,
        wall_ms,
    };

    let mut report = residuals(p, &it.x, &it.y, &it.z)?;
    let mut history = vec![record(&it, &report, clock.elapsed_ms())];
    observer(&it);

    let mut status = SolveStatus::IterationLimit;
    let mut failure = None;
    if report.delta < cfg.eps {
        status = SolveStatus::Converged;
    } else {
        for _ in 0..cfg.max_outer_iters {
            if clock.elapsed_ms() > cfg.time_limit_s * 1e3 {
                status = SolveStatus::TimeLimit;
                break;
            }
            let step = match cfg.method {
                Method::Adal => adal_step(p, &it, cfg.rank_tol),
                Method::Dadal => dadal_step(p, &it, cfg, &mut rng),
            };
            let next = match step.and_then(|n| residuals(p, &n.x, &n.y, &n.z).map(|r| (n, r))) {
                Ok(ok) => ok,
                Err(e) => {
                    status = SolveStatus::NumericFailure;
                    failure = Some(format!("iteration {}: {e}", it.k + 1));
                    break;
                }
            };
            (it, report) = next;
            history.push(record(&it, &report, clock.elapsed_ms()));
            observer(&it);
            if !report.delta.is_finite() {
                status = SolveStatus::NumericFailure;
                failure = Some(format!("iteration {}: non-finite residuals", it.k));
                break;
            }
            if report.delta < cfg.eps {
                status = SolveStatus::Converged;
                break;
            }
            it.sigma = penalty.update(report.r_p, report.r_d);
        }
    }

    Ok(SolveReport {
        method: cfg.method,
        status,
        iterations: it.k,
        history,
        final_report: report,
        final_x: it.x,
        final_y: it.y,
        final_z: it.z,
        final_sigma: it.sigma,
        sigma0,
        failure,
        wall_seconds: clock.elapsed_ms() / 1e3,
    })
}

/// `||(Z_k, X_k / sigma) - (Z*, X* / sigma)||` for each recorded pair `(Z_k, X_k)`.
pub fn fixed_point_distances(
    history: &[(SymMatrix, SymMatrix)],
    sigma: f64,
    z_star: &SymMatrix,
    x_star: &SymMatrix,
) -> Vec<f64> {
    history
        .iter()
        .map(|(z, x)| {
            let dz = (z - z_star).norm();
            let dx = (x - x_star).norm() / sigma;
            (dz * dz + dx * dx).sqrt()
        })
        .collect()
}

/// True when the distance to `(Z*, X*)` never grows by more than
/// [`NONEXPANSIVE_SLACK`] from one recorded iterate to the next.
pub fn nonexpansiveness_monitor(
    history: &[(SymMatrix, SymMatrix)],
    sigma: f64,
    z_star: &SymMatrix,
    x_star: &SymMatrix,
) -> bool {
    fixed_point_distances(history, sigma, z_star, x_star)
        .windows(2)
        .all(|w| w[1] <= w[0] + NONEXPANSIVE_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ConstraintMatrix, ConstraintOperator};

    fn scalar_problem(c: f64, b: f64) -> SdpProblem {
        let op = ConstraintOperator::new(1, vec![ConstraintMatrix::new(1, [(0, 0, 1.0)]).unwrap()])
            .unwrap();
        SdpProblem::new(
            SymMatrix::from_diagonal(&[c]),
            op,
            DVector::from_vec(vec![b]),
        )
        .unwrap()
    }

    fn manager(patience: usize) -> PenaltyManager {
        let cfg = SolverConfig {
            sigma_patience: patience,
            ..SolverConfig::default()
        };
        PenaltyManager::new(1.0, &cfg)
    }

    #[test]
    fn penalty_alternating_conditions_never_fire() {
        let mut pm = manager(10);
        for k in 0..100 {
            if k % 2 == 0 {
                pm.update(1.0, 0.0);
            } else {
                pm.update(1.0, 1.0);
            }
        }
        assert_eq!(pm.sigma(), 1.0);
    }

    #[test]
    fn penalty_decrease_branch() {
        let mut pm = manager(10);
        for _ in 0..9 {
            assert_eq!(pm.update(1.0, 0.0), 1.0);
        }
        assert_eq!(pm.update(1.0, 0.0), 1.0 / 1.3);
    }

    #[test]
    fn penalty_increase_branch_fires_every_patience_iterations() {
        let mut pm = manager(10);
        let mut changes = Vec::new();
        for k in 1..=30 {
            let before = pm.sigma();
            if pm.update(0.5, 0.5) != before {
                changes.push(k);
            }
        }
        assert_eq!(changes, vec![10, 20, 30]);
        assert!((pm.sigma() - 1.3f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn penalty_neutral_band_and_bounds() {
        let mut pm = manager(1);
        // 2 r_D <= r_P <= 100 r_D leaves sigma alone
        assert_eq!(pm.update(10.0, 1.0), 1.0);
        for _ in 0..200 {
            pm.update(0.0, 1.0);
        }
        assert_eq!(pm.sigma(), 1e4);
    }

    #[test]
    fn sigma_init_guard_and_ratio() {
        let p = scalar_problem(2.0, 3.0);
        let bounds = (1e-4, 1e4);
        // X0 = 3 is primal feasible
        let s = sigma_init(
            &p,
            &SymMatrix::from_diagonal(&[3.0]),
            &DVector::zeros(1),
            &SymMatrix::zeros(1),
            Sigma0Rule::ResidualProduct,
            bounds,
        )
        .unwrap();
        assert_eq!(s, 1.0);
        // X0 = 1: |A X0 - b| = 2, |C| = 2, r_P = 2/4, r_D = 2/3
        let s = sigma_init(
            &p,
            &SymMatrix::identity(1),
            &DVector::zeros(1),
            &SymMatrix::zeros(1),
            Sigma0Rule::ResidualProduct,
            bounds,
        )
        .unwrap();
        assert!((s - (0.5 / (2.0 / 3.0)) * (2.0 / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn scalar_adal_step_by_hand() {
        // min c x s.t. x = b0, x >= 0
        let (c, b0, sigma) = (2.0, 3.0, 0.5);
        let p = scalar_problem(c, b0);
        let it = Iterate {
            x: SymMatrix::identity(1),
            y: DVector::zeros(1),
            z: SymMatrix::zeros(1),
            v: None,
            sigma,
            k: 0,
            rank: 0,
        };
        let next = adal_step(&p, &it, DEFAULT_RANK_TOL).unwrap();
        // y = b/sigma - (x/sigma - c + z) = 6 - (2 - 2 + 0) = 6
        assert!((next.y[0] - 6.0).abs() < 1e-14);
        // W = x/sigma - c + y = 2 - 2 + 6 = 6 > 0, so X = sigma W = 3, Z = 0
        assert!((next.x.get(0, 0) - 3.0).abs() < 1e-14);
        assert_eq!(next.z.get(0, 0), 0.0);
        assert_eq!(next.k, 1);
    }

    #[test]
    fn kkt_point_is_a_fixed_point() {
        // x = b0 = 3 optimal, y = c, z = 0
        let p = scalar_problem(2.0, 3.0);
        let it = Iterate {
            x: SymMatrix::from_diagonal(&[3.0]),
            y: DVector::from_vec(vec![2.0]),
            z: SymMatrix::zeros(1),
            v: None,
            sigma: 0.7,
            k: 5,
            rank: 0,
        };
        let next = adal_step(&p, &it, DEFAULT_RANK_TOL).unwrap();
        assert!((&next.x - &it.x).norm() < 1e-14);
        assert!((next.y[0] - 2.0).abs() < 1e-14);
        assert!(next.z.norm() < 1e-14);
    }

    #[test]
    fn trivial_feasibility_problem() {
        // C = 0, trace X = 1
        let n = 4;
        let op = ConstraintOperator::new(
            n,
            vec![ConstraintMatrix::new(n, (0..n).map(|i| (i, i, 1.0))).unwrap()],
        )
        .unwrap();
        let p = SdpProblem::new(SymMatrix::zeros(n), op, DVector::from_vec(vec![1.0])).unwrap();
        for method in [Method::Adal, Method::Dadal] {
            let rep = solve(&p, &SolverConfig::with_method(method)).unwrap();
            assert_eq!(rep.status, SolveStatus::Converged, "{method:?}");
            assert!(rep.iterations <= 50);
            assert!(rep.final_report.primal_obj.abs() < 1e-12);
        }
    }

    #[test]
    fn iteration_limit_and_history_length() {
        let p = scalar_problem(2.0, 3.0);
        let cfg = SolverConfig {
            method: Method::Adal,
            max_outer_iters: 1,
            sigma0: Some(1e-3),
            sigma_fixed: true,
            ..SolverConfig::default()
        };
        let rep = solve(&p, &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::IterationLimit);
        assert_eq!(rep.history.len(), rep.iterations + 1);
    }

    #[test]
    fn config_validation() {
        let p = scalar_problem(1.0, 1.0);
        for cfg in [
            SolverConfig {
                eps: 0.0,
                ..SolverConfig::default()
            },
            SolverConfig {
                sigma_factor: 1.0,
                ..SolverConfig::default()
            },
            SolverConfig {
                sigma_bounds: (2.0, 1.0),
                ..SolverConfig::default()
            },
        ] {
            assert!(matches!(solve(&p, &cfg), Err(SdpError::InvalidInput(_))));
        }
    }

    #[test]
    fn monitor_controls() {
        let z = SymMatrix::identity(2);
        let x = SymMatrix::zeros(2);
        let constant = vec![(z.clone(), x.clone()); 5];
        assert!(nonexpansiveness_monitor(&constant, 1.0, &z, &x));
        let mut bumped = constant.clone();
        bumped[3].0 = z.scaled(1.1);
        assert!(!nonexpansiveness_monitor(&bumped, 1.0, &z, &x));
    }
}
