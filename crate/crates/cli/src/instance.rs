//! Instance descriptions shared by the `solve`, `export` and `bench` commands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dadal_core::instances::{lop_sdp, random_sdp, theta_sdp, Graph, LopSpec};
use dadal_core::io::{read_edge_list, read_sdpa};
use dadal_core::SdpProblem;
use serde::Deserialize;

/// Where a graph for a theta instance comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Cycle(usize),
    Complete(usize),
    Empty(usize),
    Petersen,
    Gnp { n: usize, p: f64 },
}

impl GraphSource {
    /// `cycle:N`, `complete:N`, `empty:N`, `petersen` or `gnp:N:P`.
    pub fn parse_family(spec: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let count = |s: &str| -> anyhow::Result<usize> {
            s.parse()
                .with_context(|| format!("bad vertex count '{s}' in graph family '{spec}'"))
        };
        Ok(match parts.as_slice() {
            ["cycle", n] => GraphSource::Cycle(count(n)?),
            ["complete", n] => GraphSource::Complete(count(n)?),
            ["empty", n] => GraphSource::Empty(count(n)?),
            ["petersen"] => GraphSource::Petersen,
            ["gnp", n, p] => GraphSource::Gnp {
                n: count(n)?,
                p: p.parse()
                    .with_context(|| format!("bad edge probability '{p}' in '{spec}'"))?,
            },
            _ => bail!(
                "unknown graph family '{spec}' (expected cycle:N, complete:N, empty:N, petersen or gnp:N:P)"
            ),
        })
    }

    pub fn build(&self, seed: u64) -> anyhow::Result<Graph> {
        Ok(match self {
            GraphSource::File(path) => read_edge_list(path, None)
                .with_context(|| format!("reading edge list {}", path.display()))?,
            GraphSource::Cycle(n) => Graph::cycle(*n),
            GraphSource::Complete(n) => Graph::complete(*n),
            GraphSource::Empty(n) => Graph::empty(*n),
            GraphSource::Petersen => Graph::petersen(),
            GraphSource::Gnp { n, p } => {
                if !(0.0..=1.0).contains(p) {
                    bail!("edge probability {p} outside [0, 1]");
                }
                Graph::gnp(*n, *p, seed)
            }
        })
    }
}

/// A problem to solve: a file or one of the generated families.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Sdpa(PathBuf),
    Theta(GraphSource),
    Lop { objects: usize },
    Random { n: usize, m: usize, density: f64 },
}

impl InstanceSpec {
    /// Builds the problem; `seed` drives the random generators.
    pub fn build(&self, seed: u64) -> anyhow::Result<SdpProblem> {
        Ok(match self {
            InstanceSpec::Sdpa(path) => {
                read_sdpa(path).with_context(|| format!("reading {}", path.display()))?
            }
            InstanceSpec::Theta(g) => {
                let graph = g.build(seed)?;
                if graph.num_vertices() == 0 {
                    bail!("graph has no vertices");
                }
                theta_sdp(&graph)
            }
            InstanceSpec::Lop { objects } => lop_sdp(&LopSpec::random(*objects, seed)?)?,
            InstanceSpec::Random { n, m, density } => random_sdp(*n, *m, *density, seed)?,
        })
    }

    /// Short label used in run records.
    pub fn label(&self, seed: u64) -> String {
        match self {
            InstanceSpec::Sdpa(path) | InstanceSpec::Theta(GraphSource::File(path)) => {
                file_stem(path)
            }
            InstanceSpec::Theta(GraphSource::Cycle(n)) => format!("theta-cycle{n}"),
            InstanceSpec::Theta(GraphSource::Complete(n)) => format!("theta-complete{n}"),
            InstanceSpec::Theta(GraphSource::Empty(n)) => format!("theta-empty{n}"),
            InstanceSpec::Theta(GraphSource::Petersen) => "theta-petersen".into(),
            InstanceSpec::Theta(GraphSource::Gnp { n, p }) => format!("theta-gnp{n}-{p}-s{seed}"),
            InstanceSpec::Lop { objects } => format!("lop{objects}-s{seed}"),
            InstanceSpec::Random { n, m, density } => format!("random{n}x{m}-{density}-s{seed}"),
        }
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// One `[[instance]]` table of a bench manifest.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ManifestInstance {
    Sdpa {
        path: PathBuf,
        name: Option<String>,
    },
    Theta {
        /// Edge-list file, relative to the manifest.
        path: Option<PathBuf>,
        /// Graph family, as accepted by `--family`.
        graph: Option<String>,
        name: Option<String>,
        #[serde(default)]
        seeds: Vec<u64>,
    },
    Lop {
        objects: usize,
        name: Option<String>,
        #[serde(default)]
        seeds: Vec<u64>,
    },
    Random {
        n: usize,
        m: usize,
        density: f64,
        name: Option<String>,
        #[serde(default)]
        seeds: Vec<u64>,
    },
}

/// A fully resolved bench entry.
#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub name: String,
    pub spec: InstanceSpec,
    pub seed: u64,
}

impl ManifestInstance {
    /// Expands `seeds` into one entry per seed; paths are resolved against `base`.
    pub fn expand(&self, base: &Path) -> anyhow::Result<Vec<NamedInstance>> {
        let (spec, name, seeds) = match self {
            ManifestInstance::Sdpa { path, name } => {
                (InstanceSpec::Sdpa(base.join(path)), name, &[][..])
            }
            ManifestInstance::Theta {
                path,
                graph,
                name,
                seeds,
            } => {
                let source = match (path, graph) {
                    (Some(p), None) => GraphSource::File(base.join(p)),
                    (None, Some(g)) => GraphSource::parse_family(g)?,
                    _ => bail!("theta instance needs exactly one of `path` or `graph`"),
                };
                (InstanceSpec::Theta(source), name, seeds.as_slice())
            }
            ManifestInstance::Lop {
                objects,
                name,
                seeds,
            } => (
                InstanceSpec::Lop { objects: *objects },
                name,
                seeds.as_slice(),
            ),
            ManifestInstance::Random {
                n,
                m,
                density,
                name,
                seeds,
            } => (
                InstanceSpec::Random {
                    n: *n,
                    m: *m,
                    density: *density,
                },
                name,
                seeds.as_slice(),
            ),
        };
        let seeds = if seeds.is_empty() { &[0][..] } else { seeds };
        Ok(seeds
            .iter()
            .map(|&seed| {
                let name = match name {
                    Some(n) if seeds.len() > 1 => format!("{n}-s{seed}"),
                    Some(n) => n.clone(),
                    None => spec.label(seed),
                };
                NamedInstance {
                    name,
                    spec: spec.clone(),
                    seed,
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_specs() {
        assert_eq!(
            GraphSource::parse_family("cycle:5").unwrap(),
            GraphSource::Cycle(5)
        );
        assert_eq!(
            GraphSource::parse_family("petersen").unwrap(),
            GraphSource::Petersen
        );
        assert_eq!(
            GraphSource::parse_family("gnp:150:0.1").unwrap(),
            GraphSource::Gnp { n: 150, p: 0.1 }
        );
        for bad in ["cycle", "cycle:x", "star:5", "gnp:10"] {
            assert!(GraphSource::parse_family(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn seeds_expand_into_named_entries() {
        let entry: ManifestInstance = toml::from_str(
            "kind = \"theta\"\ngraph = \"gnp:20:0.3\"\nname = \"g\"\nseeds = [1, 2, 3]\n",
        )
        .unwrap();
        let list = entry.expand(Path::new(".")).unwrap();
        assert_eq!(list.len(), 3);
        assert_eq!(list[2].name, "g-s3");
        assert_eq!(list[2].seed, 3);

        let entry: ManifestInstance = toml::from_str("kind = \"lop\"\nobjects = 5\n").unwrap();
        let list = entry.expand(Path::new(".")).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].name, "lop5-s0");
    }

    #[test]
    fn theta_needs_one_graph_source() {
        let entry: ManifestInstance = toml::from_str("kind = \"theta\"\n").unwrap();
        assert!(entry.expand(Path::new(".")).is_err());
    }
}
