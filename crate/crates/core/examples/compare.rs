//! Solves generated instances with both methods and prints iteration counts.
//!
//! `cargo run --release --example compare -- [theta|gnp|lop|random]`
//! `NG` sets the number of G(150, 0.1) graphs, `INNER` the inner iterations.

use dadal_core::instances::{lop_sdp, random_sdp, theta_sdp, Graph, LopSpec};
use dadal_core::{solve, Method, SdpProblem, SolverConfig};

fn env<T: std::str::FromStr>(key: &str) -> Option<T> {
    std::env::var(key).ok()?.parse().ok()
}

fn run(name: &str, p: &SdpProblem) {
    for method in [Method::Adal, Method::Dadal] {
        let mut cfg = SolverConfig::with_method(method);
        if let Some(k) = env("INNER") {
            cfg.inner_iters = k;
        }
        let r = solve(p, &cfg).expect("solve");
        let obj = p.objective_map.apply(r.final_report.primal_obj);
        let dual = p.objective_map.apply(r.final_report.dual_obj);
        let bound = match p.dual_bound(&r.final_y) {
            Ok(Some(b)) => format!(" bound {:.7}", p.objective_map.apply(b)),
            _ => String::new(),
        };
        println!(
            "{name:>12} {:>5} {:>16} iters {:>6} time {:>7.3}s obj {obj:.7} dual {dual:.7}{bound}",
            method.name(),
            r.status.name(),
            r.iterations,
            r.wall_seconds,
        );
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "theta".into());
    match which.as_str() {
        "theta" => {
            run("K5", &theta_sdp(&Graph::complete(5)));
            run("empty5", &theta_sdp(&Graph::empty(5)));
            run("C5", &theta_sdp(&Graph::cycle(5)));
            run("C7", &theta_sdp(&Graph::cycle(7)));
            run("petersen", &theta_sdp(&Graph::petersen()));
        }
        "gnp" => {
            for seed in 0..env("NG").unwrap_or(10u64) {
                run(
                    &format!("gnp150-{seed}"),
                    &theta_sdp(&Graph::gnp(150, 0.1, seed)),
                );
            }
        }
        "lop" => {
            for n in [5, 6, 7] {
                let spec = LopSpec::random(n, 42).expect("size");
                run(&format!("lop{n}"), &lop_sdp(&spec).expect("instance"));
            }
        }
        _ => {
            for seed in 0..5 {
                run(
                    &format!("rand-{seed}"),
                    &random_sdp(30, 100, 0.05, seed).expect("generator"),
                );
            }
        }
    }
}
