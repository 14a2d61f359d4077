//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers or strings and returns a JSON document, so
//! the page needs no generated type glue beyond `wasm-bindgen` itself. The same
//! functions run natively, which is how they are tested.

use dadal_core::instances::{lop_sdp, odd_cycle_theta, random_sdp, theta_sdp, Graph, LopSpec};
use dadal_core::io::parse_edge_list;
use dadal_core::subsolver::{best_step, AugLagState, DirectionMode, StepStrategy, LINE_NODES};
use dadal_core::{solve, Factor, Method, SolverConfig, SymMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest graph the page will solve; keeps a single call under a few seconds.
pub const MAX_VERTICES: usize = 80;
pub const MAX_OBJECTS: usize = 8;

#[derive(Debug, Serialize)]
pub struct HistoryPoint {
    pub k: usize,
    pub r_p: f64,
    pub r_d: f64,
    pub sigma: f64,
    pub objective: f64,
}

#[derive(Debug, Serialize)]
pub struct MethodRun {
    pub method: &'static str,
    pub status: &'static str,
    pub iterations: usize,
    pub theta: f64,
    pub history: Vec<HistoryPoint>,
}

#[derive(Debug, Serialize)]
pub struct ThetaComparison {
    pub vertices: usize,
    pub edges: usize,
    pub constraints: usize,
    /// Closed form when the graph is a cycle, complete, empty or the Petersen graph.
    pub exact: Option<f64>,
    pub runs: Vec<MethodRun>,
}

fn build_graph(
    kind: &str,
    n: usize,
    p: f64,
    seed: u64,
    edges: &str,
) -> Result<(Graph, Option<f64>), String> {
    let check = |n: usize| {
        if (1..=MAX_VERTICES).contains(&n) {
            Ok(n)
        } else {
            Err(format!(
                "vertex count must be in 1..={MAX_VERTICES}, got {n}"
            ))
        }
    };
    Ok(match kind {
        "cycle" => {
            let n = check(n)?;
            if n < 3 {
                return Err("a cycle needs at least 3 vertices".into());
            }
            let exact = if n % 2 == 1 {
                odd_cycle_theta(n)
            } else {
                n as f64 / 2.0
            };
            (Graph::cycle(n), Some(exact))
        }
        "complete" => (Graph::complete(check(n)?), Some(1.0)),
        "empty" => (Graph::empty(check(n)?), Some(n as f64)),
        "petersen" => (Graph::petersen(), Some(4.0)),
        "gnp" => {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("edge probability must be in [0, 1], got {p}"));
            }
            (Graph::gnp(check(n)?, p, seed), None)
        }
        "edges" => {
            let g = parse_edge_list(edges, None).map_err(|e| e.to_string())?;
            check(g.num_vertices())?;
            (g, None)
        }
        other => return Err(format!("unknown graph kind {other:?}")),
    })
}

/// Solves the theta problem of a graph with both methods and returns their
/// convergence histories.
pub fn compare_theta(
    kind: &str,
    n: usize,
    p: f64,
    seed: u64,
    edges: &str,
    inner_iters: usize,
) -> Result<ThetaComparison, String> {
    let (graph, exact) = build_graph(kind, n, p, seed, edges)?;
    let problem = theta_sdp(&graph);
    let mut runs = Vec::new();
    for method in [Method::Adal, Method::Dadal] {
        let cfg = SolverConfig {
            inner_iters,
            max_outer_iters: 20_000,
            ..SolverConfig::with_method(method)
        };
        let report = solve(&problem, &cfg).map_err(|e| e.to_string())?;
        let history = report
            .history
            .iter()
            .map(|h| HistoryPoint {
                k: h.k,
                r_p: h.r_p,
                r_d: h.r_d,
                sigma: h.sigma,
                objective: problem.objective_map.apply(h.primal_obj),
            })
            .collect();
        runs.push(MethodRun {
            method: method.name(),
            status: report.status.name(),
            iterations: report.iterations,
            theta: problem.objective_map.apply(report.final_report.primal_obj),
            history,
        });
    }
    Ok(ThetaComparison {
        vertices: graph.num_vertices(),
        edges: graph.edges().len(),
        constraints: problem.m(),
        exact,
        runs,
    })
}

#[derive(Debug, Serialize)]
pub struct LineProfile {
    pub alphas: Vec<f64>,
    /// Augmented Lagrangian evaluated from its definition along the line.
    pub direct: Vec<f64>,
    /// Quartic model through the five interpolation nodes.
    pub model: Vec<f64>,
    pub nodes: Vec<[f64; 2]>,
    pub coefficients: [f64; 5],
    pub analytic_step: f64,
    pub grid_step: f64,
    pub scaled_direction: bool,
}

/// Samples one search line of the factored augmented Lagrangian on a random
/// problem, next to its interpolated quartic model.
pub fn line_profile(n: usize, m: usize, seed: u64, samples: usize) -> Result<LineProfile, String> {
    if !(2..=40).contains(&n) || m == 0 || m > n * (n + 1) / 2 || !(2..=2000).contains(&samples) {
        return Err(format!("need 2 <= n <= 40, 1 <= m <= n(n+1)/2, 2 <= samples <= 2000 (got n={n}, m={m}, samples={samples})"));
    }
    let problem = random_sdp(n, m, 0.4, seed).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let x = SymMatrix::from_dense(&g * g.transpose() / n as f64).map_err(|e| e.to_string())?;
    let y = DVector::zeros(m);
    let r = rng.random_range(1..=n.min(4));
    let v = Factor::new(DMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0)))
        .map_err(|e| e.to_string())?;
    let mut state = AugLagState::new(&problem, x, 1.0, y, v).map_err(|e| e.to_string())?;
    let y0 = state.solve_y_opt().map_err(|e| e.to_string())?;
    let v0 = state.v().clone();
    state.set_point(y0, v0);

    let scaled_direction =
        state.grad_v().norm() < dadal_core::subsolver::SCALED_DIRECTION_THRESHOLD;
    let d = state.build_direction(DirectionMode::Auto);
    let ys = state.track_y(&d).map_err(|e| e.to_string())?;
    let coeffs = state.line_coeffs(&d, &ys);
    let analytic_step = best_step(&coeffs, StepStrategy::Analytic);
    let grid_step = best_step(&coeffs, StepStrategy::default_grid());

    let hi = (1.5 * analytic_step).max(2.5);
    let lo = -2.5;
    let alphas: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect();
    Ok(LineProfile {
        direct: alphas
            .iter()
            .map(|&a| state.line_value(&d, &ys, a))
            .collect(),
        model: alphas.iter().map(|&a| coeffs.eval(a)).collect(),
        nodes: LINE_NODES
            .iter()
            .map(|&a| [a, state.line_value(&d, &ys, a)])
            .collect(),
        alphas,
        coefficients: coeffs.c,
        analytic_step,
        grid_step,
        scaled_direction,
    })
}

#[derive(Debug, Serialize)]
pub struct LopResult {
    pub objects: usize,
    pub weights: Vec<Vec<f64>>,
    pub best_order: Vec<usize>,
    pub best_profit: f64,
    pub method: &'static str,
    pub status: &'static str,
    pub iterations: usize,
    pub relaxation_value: f64,
    pub certified_bound: f64,
}

fn best_ordering(spec: &LopSpec) -> (Vec<usize>, f64) {
    fn go(v: &mut Vec<usize>, k: usize, spec: &LopSpec, best: &mut (Vec<usize>, f64)) {
        if k == v.len() {
            let profit = spec.profit(v);
            if profit > best.1 {
                *best = (v.clone(), profit);
            }
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            go(v, k + 1, spec, best);
            v.swap(k, i);
        }
    }
    let mut best = (Vec::new(), f64::MIN);
    go(&mut (0..spec.num_objects()).collect(), 0, spec, &mut best);
    best
}

/// Upper bound on a random linear ordering instance from the semidefinite
/// relaxation, next to the enumerated optimum.
pub fn lop_bound(objects: usize, seed: u64, method: &str) -> Result<LopResult, String> {
    if !(3..=MAX_OBJECTS).contains(&objects) {
        return Err(format!(
            "object count must be in 3..={MAX_OBJECTS}, got {objects}"
        ));
    }
    let method: Method = method
        .parse()
        .map_err(|e: dadal_core::SdpError| e.to_string())?;
    let spec = LopSpec::random(objects, seed).map_err(|e| e.to_string())?;
    let problem = lop_sdp(&spec).map_err(|e| e.to_string())?;
    let report = solve(&problem, &SolverConfig::with_method(method)).map_err(|e| e.to_string())?;
    let bound = problem
        .dual_bound(&report.final_y)
        .map_err(|e| e.to_string())?
        .ok_or("relaxation has no trace bound")?;
    let (best_order, best_profit) = best_ordering(&spec);
    let w = &spec.weights;
    Ok(LopResult {
        objects,
        weights: (0..objects)
            .map(|i| (0..objects).map(|j| w[(i, j)]).collect())
            .collect(),
        best_order,
        best_profit,
        method: method.name(),
        status: report.status.name(),
        iterations: report.iterations,
        relaxation_value: problem.objective_map.apply(report.final_report.dual_obj),
        certified_bound: problem.objective_map.apply(bound),
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, String> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
}

#[wasm_bindgen(js_name = compareTheta)]
pub fn compare_theta_json(
    kind: &str,
    n: usize,
    p: f64,
    seed: u64,
    edges: &str,
    inner_iters: usize,
) -> Result<String, String> {
    to_json(compare_theta(kind, n, p, seed, edges, inner_iters))
}

#[wasm_bindgen(js_name = lineProfile)]
pub fn line_profile_json(n: usize, m: usize, seed: u64, samples: usize) -> Result<String, String> {
    to_json(line_profile(n, m, seed, samples))
}

#[wasm_bindgen(js_name = lopBound)]
pub fn lop_bound_json(objects: usize, seed: u64, method: &str) -> Result<String, String> {
    to_json(lop_bound(objects, seed, method))
}
