//! `dadal bench`: paired ADAL/DADAL runs over a manifest of instances.
//!
//! ```toml
//! methods = ["adal", "dadal"]
//!
//! [[instance]]
//! kind = "theta"
//! graph = "gnp:150:0.1"
//! seeds = [0, 1, 2]
//!
//! [[instance]]
//! kind = "sdpa"
//! path = "problems/control1.dat-s"
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use dadal_core::io::RunRecord;
use dadal_core::{solve, Method};
use rayon::prelude::*;
use serde::Deserialize;

use crate::instance::{ManifestInstance, NamedInstance};
use crate::{TuningArgs, EXIT_OK};

pub const TABLE_HEADER: &str =
    "instance,n,m,adal_iter,adal_time,dadal_iter,dadal_time,adal_obj,dadal_obj,adal_status,dadal_status,error";

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// TOML manifest listing methods and instances.
    pub manifest: PathBuf,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to DADAL_THREADS, then the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default)]
    pub instance: Vec<ManifestInstance>,
}

fn default_methods() -> Vec<String> {
    vec!["adal".into(), "dadal".into()]
}

impl Manifest {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn methods(&self) -> anyhow::Result<Vec<Method>> {
        let mut out: Vec<Method> = Vec::new();
        for name in &self.methods {
            let m: Method = name.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            bail!("manifest lists no methods");
        }
        Ok(out)
    }

    pub fn instances(&self, base: &Path) -> anyhow::Result<Vec<NamedInstance>> {
        let mut all = Vec::new();
        for entry in &self.instance {
            all.extend(entry.expand(base)?);
        }
        if all.is_empty() {
            bail!("manifest lists no instances");
        }
        Ok(all)
    }
}

/// Outcome for one instance: its size and a record per method that ran.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub name: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub adal: Option<RunRecord>,
    pub dadal: Option<RunRecord>,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let iter = |r: &Option<RunRecord>| opt(r.as_ref().map(|r| r.iterations.to_string()));
        let time = |r: &Option<RunRecord>| opt(r.as_ref().map(|r| format!("{:?}", r.wall_seconds)));
        let obj = |r: &Option<RunRecord>| opt(r.as_ref().map(|r| format!("{:?}", r.primal_obj)));
        let status = |r: &Option<RunRecord>| opt(r.as_ref().map(|r| r.status.name().to_string()));
        let error = self
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n', '\r'], " ");
        [
            self.name.clone(),
            opt(self.n.map(|v| v.to_string())),
            opt(self.m.map(|v| v.to_string())),
            iter(&self.adal),
            time(&self.adal),
            iter(&self.dadal),
            time(&self.dadal),
            obj(&self.adal),
            obj(&self.dadal),
            status(&self.adal),
            status(&self.dadal),
            error,
        ]
        .join(",")
    }
}

pub fn run_instance(inst: &NamedInstance, methods: &[Method], tuning: &TuningArgs) -> BenchRow {
    let mut row = BenchRow {
        name: inst.name.clone(),
        n: None,
        m: None,
        adal: None,
        dadal: None,
        error: None,
    };
    let problem = match inst.spec.build(inst.seed) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(format!("{e:#}"));
            return row;
        }
    };
    row.n = Some(problem.n());
    row.m = Some(problem.m());
    for &method in methods {
        match solve(&problem, &tuning.config(method)) {
            Ok(report) => {
                let rec = RunRecord::from_report(&inst.name, &problem, &report);
                match method {
                    Method::Adal => row.adal = Some(rec),
                    Method::Dadal => row.dadal = Some(rec),
                }
            }
            Err(e) => {
                let msg = format!("{}: {e}", method.name());
                row.error = Some(match row.error.take() {
                    Some(prev) => format!("{prev}; {msg}"),
                    None => msg,
                });
            }
        }
    }
    row
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let k = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[k]
    } else {
        0.5 * (values[k - 1] + values[k])
    })
}

/// Medians over instances where both methods produced a record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub paired: usize,
    pub median_adal_iter: f64,
    pub median_dadal_iter: f64,
    pub median_ratio: f64,
}

pub fn summarize(rows: &[BenchRow]) -> Option<Summary> {
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| match (&r.adal, &r.dadal) {
            (Some(a), Some(d)) => Some((a.iterations as f64, d.iterations as f64)),
            _ => None,
        })
        .collect();
    let mut a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut d: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut ratios: Vec<f64> = pairs.iter().map(|&(a, d)| d / a.max(1.0)).collect();
    Some(Summary {
        paired: pairs.len(),
        median_adal_iter: median(&mut a)?,
        median_dadal_iter: median(&mut d)?,
        median_ratio: median(&mut ratios)?,
    })
}

pub fn summary_line(summary: Option<Summary>) -> String {
    match summary {
        Some(s) => format!(
            "# median dadal/adal iteration ratio {:.4} over {} paired instances (median iterations adal {}, dadal {})",
            s.median_ratio, s.paired, s.median_adal_iter, s.median_dadal_iter
        ),
        None => "# median dadal/adal iteration ratio: n/a (no paired runs)".into(),
    }
}

fn thread_count(requested: Option<usize>) -> usize {
    requested
        .or_else(|| std::env::var("DADAL_THREADS").ok()?.parse().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs all instances, in parallel across instances, keeping manifest order.
pub fn run_all(
    instances: &[NamedInstance],
    methods: &[Method],
    tuning: &TuningArgs,
    threads: Option<usize>,
) -> anyhow::Result<Vec<BenchRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(threads))
        .build()?;
    Ok(pool.install(|| {
        instances
            .par_iter()
            .map(|inst| run_instance(inst, methods, tuning))
            .collect()
    }))
}

pub fn run_bench(args: &BenchArgs) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(&args.manifest)
        .with_context(|| format!("reading manifest {}", args.manifest.display()))?;
    let manifest = Manifest::parse(&text)
        .with_context(|| format!("parsing manifest {}", args.manifest.display()))?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let methods = manifest.methods()?;
    let instances = manifest.instances(base)?;
    let rows = run_all(&instances, &methods, &args.tuning, args.threads)?;

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => {
            Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)
        }
        None => Box::new(std::io::stdout()),
    };
    let mut w = BufWriter::new(sink);
    writeln!(w, "{TABLE_HEADER}")?;
    for row in &rows {
        writeln!(w, "{}", row.csv_row())?;
    }
    w.flush()?;
    println!("{}", summary_line(summarize(&rows)));
    Ok(EXIT_OK)
}
