//! Command-line surface. Every subcommand reads its inputs, calls one
//! function in [`crate::api`] and prints the canonical JSON payload.

use std::path::{Path, PathBuf};

use causal_audit::adjustment::{EffectKind, QuerySpec};
use causal_audit::estimator::ArmsFile;
use causal_audit::scm::{sample, sample_do, InterventionSpec, ScmSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::api::{self, ApiError, ErrorClass};

#[derive(Debug, Parser)]
#[command(name = "causal-audit", version, about = "Causal graph queries, discovery, simulation and bias audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Graph inspection and d-separation queries.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Adjustment-set enumeration.
    #[command(subcommand)]
    Adjust(AdjustCmd),
    /// Audit a regression feature set for structural bias.
    Audit {
        graph: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        /// Covariates included in the model besides the exposures.
        #[arg(long, value_delimiter = ',', default_value = "")]
        features: Vec<String>,
    },
    /// Learn a CPDAG from a CSV file with GES.
    Discover {
        data: PathBuf,
        #[arg(long)]
        penalty: Option<f64>,
        /// JSON file mapping column names to ordered category levels.
        #[arg(long)]
        encoding: Option<PathBuf>,
        /// Also write the result in the text graph format.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Sample a dataset from a linear-Gaussian SCM.
    Simulate {
        scm: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        /// Intervention `VAR=VALUE`; repeatable.
        #[arg(long = "do", value_parser = parse_assignment)]
        interventions: Vec<(String, f64)>,
    },
    /// Compare estimated and true exposure effects across feature-set arms.
    Fallout {
        scm: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        arms: PathBuf,
        #[arg(long, default_value_t = 50_000)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Print a plain-text table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Run the HTTP JSON service.
    Serve {
        #[arg(long, env = "CAUSAL_AUDIT_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        graph_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GraphCmd {
    /// Parse a graph and report its structure.
    Check { graph: PathBuf },
    /// Test whether X and Y are d-separated given a conditioning set.
    Dsep {
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "")]
        given: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AdjustCmd {
    /// List sufficient adjustment sets.
    Sets {
        graph: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        /// Only inclusion-minimal sets.
        #[arg(long)]
        minimal: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Total,
    Direct,
}

impl From<KindArg> for EffectKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Total => EffectKind::Total,
            KindArg::Direct => EffectKind::Direct,
        }
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Exposure nodes; defaults to nodes tagged @exposure.
    #[arg(long, value_delimiter = ',')]
    exposure: Vec<String>,
    /// Outcome node; defaults to the node tagged @outcome.
    #[arg(long)]
    outcome: Option<String>,
    /// Observed candidate covariates; defaults to all nodes not tagged @unobserved.
    #[arg(long, value_delimiter = ',')]
    observed: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "total")]
    effect_kind: KindArg,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected VAR=VALUE, got {s:?}"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

fn non_empty(v: &[String]) -> Vec<String> {
    v.iter().filter(|s| !s.is_empty()).cloned().collect()
}

fn read(path: &Path) -> Result<String, ApiError> {
    std::fs::read_to_string(path)
        .map_err(|e| ApiError::new(ErrorClass::Domain, "Io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), ApiError> {
    std::fs::write(path, contents)
        .map_err(|e| ApiError::new(ErrorClass::Domain, "Io", format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ApiError> {
    api::parse_json(&read(path)?).map_err(|e| ApiError { detail: format!("{}: {}", path.display(), e.detail), ..e })
}

/// Runs a non-server subcommand and returns the text for standard output.
pub fn execute(cmd: &Command) -> Result<String, ApiError> {
    match cmd {
        Command::Graph(GraphCmd::Check { graph }) => {
            let doc = api::parse_graph(&read(graph)?)?;
            Ok(api::render(&api::graph_check(&doc)))
        }
        Command::Graph(GraphCmd::Dsep { graph, x, y, given }) => {
            let doc = api::parse_graph(&read(graph)?)?;
            let req = api::DsepRequest { x: non_empty(x), y: non_empty(y), given: non_empty(given) };
            Ok(api::render(&api::dsep(&doc, &req)?))
        }
        Command::Adjust(AdjustCmd::Sets { graph, query, minimal }) => {
            let doc = api::parse_graph(&read(graph)?)?;
            let req = api::AdjustmentRequest {
                exposures: non_empty(&query.exposure),
                outcome: query.outcome.clone(),
                observed: query.observed.as_deref().map(non_empty),
                effect_kind: query.effect_kind.into(),
                minimal: *minimal,
            };
            Ok(api::render(&api::adjustment_sets(&doc, &req)?))
        }
        Command::Audit { graph, query, features } => {
            let doc = api::parse_graph(&read(graph)?)?;
            let req = api::AuditRequest {
                exposures: non_empty(&query.exposure),
                outcome: query.outcome.clone(),
                observed: query.observed.as_deref().map(non_empty),
                effect_kind: query.effect_kind.into(),
                features: non_empty(features),
            };
            Ok(api::render(&api::audit(&doc, &req)?))
        }
        Command::Discover { data, penalty, encoding, output } => {
            let opts = api::DiscoverOptions {
                penalty: *penalty,
                encoding: encoding.as_deref().map(read_json).transpose()?,
            };
            let doc = api::discover(&read(data)?, &opts)?;
            if let Some(out) = output {
                write(out, &doc.to_text())?;
            }
            Ok(api::render(&doc.to_json_value()))
        }
        Command::Simulate { scm, n, seed, output, interventions } => {
            let spec: ScmSpec = read_json(scm)?;
            spec.validate()?;
            let data = if interventions.is_empty() {
                sample(&spec, *n, *seed)
            } else {
                let iv: InterventionSpec = interventions.iter().cloned().collect();
                sample_do(&spec, &iv, *n, *seed)?
            };
            match output {
                Some(out) => {
                    write(out, &data.to_csv_string())?;
                    Ok(api::render(&json!({
                        "format_version": causal_audit::FORMAT_VERSION,
                        "rows": data.row_count(),
                        "columns": data.names(),
                        "output": out.display().to_string(),
                    })))
                }
                None => Ok(data.to_csv_string().trim_end().to_string()),
            }
        }
        Command::Fallout { scm, query, arms, n, seed, table } => {
            let req = api::FalloutRequest {
                scm: read_json(scm)?,
                query: read_json::<QuerySpec>(query)?,
                arms: read_json::<ArmsFile>(arms)?.arms,
                n: *n,
                seed: *seed,
            };
            let report = api::fallout(&req)?;
            Ok(if *table { report.render_table().trim_end().to_string() } else { api::render(&report) })
        }
        Command::Serve { .. } => unreachable!("serve is handled by the binary"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments_parse() {
        assert_eq!(parse_assignment("X=2.5").unwrap(), ("X".to_string(), 2.5));
        assert!(parse_assignment("X").is_err());
        assert!(parse_assignment("X=abc").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "causal-audit", "adjust", "sets", "g.graph", "--exposure", "A,B", "--outcome", "Y", "--minimal",
        ])
        .unwrap();
        match cli.command {
            Command::Adjust(AdjustCmd::Sets { query, minimal, .. }) => {
                assert!(minimal);
                assert_eq!(query.exposure, ["A", "B"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["causal-audit", "graph", "dsep", "g.graph", "--x", "A"]).is_err());
    }
}
