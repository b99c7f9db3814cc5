use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{AggregateResult, ExperimentSpec};
use crate::error::{Error, Result};
use crate::game::GameTrace;
use crate::rng::RNG_NAME;

pub const CSV_FILE: &str = "ee_curves.csv";
pub const METADATA_FILE: &str = "metadata.toml";
pub const TRACES_FILE: &str = "traces.jsonl";

/// Crate version plus `git describe` of the build, when available.
pub fn version_string() -> String {
    let describe = env!("D2D_GIT_DESCRIBE");
    if describe.is_empty() {
        format!("d2d-core {}", env!("CARGO_PKG_VERSION"))
    } else {
        format!("d2d-core {} ({describe})", env!("CARGO_PKG_VERSION"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub traces: Option<PathBuf>,
}

/// Creates `dir` and proves it writable.
pub(super) fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    File::create(&probe).map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    algorithm: &'a str,
    round: usize,
    mean_d2d_ee: f64,
    mean_cell_ee: f64,
    norm_d2d_ee: f64,
    norm_cell_ee: f64,
}

#[derive(Serialize)]
struct Normalization<'a> {
    divisor: f64,
    reference: &'a str,
}

#[derive(Serialize)]
struct AlgorithmMeta<'a> {
    name: &'a str,
    rule: &'a str,
    converged_runs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    median_convergence_round: Option<f64>,
    /// Final-round outage counts summed over runs.
    d2d_outages: usize,
    cellular_outages: usize,
    /// Per run; -1 when the game hit `max_rounds` without settling.
    convergence_rounds: Vec<i64>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: String,
    rng: &'a str,
    child_seed_rule: &'a str,
    num_runs: usize,
    normalization: Normalization<'a>,
    spec: &'a ExperimentSpec,
    algorithms: Vec<AlgorithmMeta<'a>>,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    run: usize,
    seed: u64,
    algorithm: &'a str,
    trace: &'a GameTrace,
}

fn metadata_text(result: &AggregateResult, spec: &ExperimentSpec) -> Result<String> {
    let meta = Metadata {
        version: version_string(),
        rng: RNG_NAME,
        child_seed_rule: "splitmix64(master_seed ^ splitmix64(run_index))",
        num_runs: result.seeds.len(),
        normalization: Normalization {
            divisor: result.normalization_divisor,
            reference: &result.normalization_reference,
        },
        spec,
        algorithms: result
            .algorithms
            .iter()
            .map(|a| AlgorithmMeta {
                name: a.algorithm.name(),
                rule: a.algorithm.description(),
                converged_runs: a.runs.iter().filter(|r| r.converged_round.is_some()).count(),
                median_convergence_round: a.median_convergence_round(),
                d2d_outages: a.d2d_outages(),
                cellular_outages: a.cellular_outages(),
                convergence_rounds: a
                    .convergence_rounds()
                    .into_iter()
                    .map(|r| r.map_or(-1, |r| r as i64))
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&meta).map_err(|e| Error::Parse {
        what: "metadata",
        message: e.to_string(),
    })
}

/// Writes the curve table, the metadata document and, when the result kept
/// them, the per-run traces into `spec.experiment.out_dir`.
pub fn emit_outputs(result: &AggregateResult, spec: &ExperimentSpec) -> Result<OutputPaths> {
    let dir = &spec.experiment.out_dir;
    prepare_out_dir(dir)?;

    let csv_path = dir.join(CSV_FILE);
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(&csv_path, io),
        other => Error::Parse {
            what: "csv output",
            message: format!("{other:?}"),
        },
    };
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    for alg in &result.algorithms {
        for p in &alg.curve {
            w.serialize(CsvRow {
                algorithm: alg.algorithm.name(),
                round: p.round,
                mean_d2d_ee: p.mean_d2d_ee,
                mean_cell_ee: p.mean_cell_ee,
                norm_d2d_ee: p.norm_d2d_ee,
                norm_cell_ee: p.norm_cell_ee,
            })
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let metadata_path = dir.join(METADATA_FILE);
    fs::write(&metadata_path, metadata_text(result, spec)?).map_err(|e| Error::io(&metadata_path, e))?;

    let traces = match &result.traces {
        None => None,
        Some(outputs) => {
            let path = dir.join(TRACES_FILE);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            for out in outputs {
                for (alg, trace) in spec.experiment.algorithms.iter().zip(&out.traces) {
                    let line = TraceLine {
                        run: out.run_index,
                        seed: out.seed,
                        algorithm: alg.name(),
                        trace,
                    };
                    serde_json::to_writer(&mut w, &line).map_err(|e| Error::Parse {
                        what: "trace output",
                        message: e.to_string(),
                    })?;
                    w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            Some(path)
        }
    };

    Ok(OutputPaths {
        csv: csv_path,
        metadata: metadata_path,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{simulate, Algorithm};
    use super::*;

    fn spec_in(dir: &Path, verbose: bool) -> ExperimentSpec {
        let mut spec = ExperimentSpec::default();
        spec.experiment.num_runs = 3;
        spec.experiment.master_seed = 9;
        spec.experiment.out_dir = dir.to_path_buf();
        spec.experiment.verbose = verbose;
        spec
    }

    #[test]
    fn table_shape_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let spec = spec_in(dir.path(), false);
        let result = simulate(&spec).unwrap();
        let paths = emit_outputs(&result, &spec).unwrap();
        assert!(paths.traces.is_none());
        let text = fs::read_to_string(&paths.csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "algorithm,round,mean_d2d_ee,mean_cell_ee,norm_d2d_ee,norm_cell_ee"
        );
        assert_eq!(lines.count(), 3 * (spec.game.max_rounds + 1));

        let meta: toml::Table = fs::read_to_string(&paths.metadata).unwrap().parse().unwrap();
        assert!(meta["version"].as_str().unwrap().starts_with("d2d-core "));
        assert_eq!(
            meta["normalization"]["divisor"].as_float().unwrap(),
            result.normalization_divisor
        );
        let algs = meta["algorithms"].as_array().unwrap();
        assert_eq!(algs.len(), 3);
        assert_eq!(algs[0]["convergence_rounds"].as_array().unwrap().len(), 3);
        let echoed: ExperimentSpec = meta["spec"].clone().try_into().unwrap();
        assert_eq!(echoed, spec);
    }

    #[test]
    fn verbose_writes_one_line_per_game() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = spec_in(dir.path(), true);
        spec.experiment.algorithms = vec![Algorithm::Random, Algorithm::EnergyEfficient];
        let result = simulate(&spec).unwrap();
        let paths = emit_outputs(&result, &spec).unwrap();
        let text = fs::read_to_string(paths.traces.unwrap()).unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0]["algorithm"], "random");
        assert_eq!(lines[1]["trace"]["rule"], "energy_efficient");
    }

    #[test]
    fn outputs_are_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for dir in [a.path(), b.path()] {
            let spec = spec_in(dir, true);
            emit_outputs(&simulate(&spec).unwrap(), &spec).unwrap();
        }
        for f in [CSV_FILE, TRACES_FILE] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
        // Metadata echoes out_dir, which differs here.
        let strip = |p: &Path| {
            fs::read_to_string(p.join(METADATA_FILE))
                .unwrap()
                .lines()
                .filter(|l| !l.starts_with("out_dir"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(a.path()), strip(b.path()));
    }
}
