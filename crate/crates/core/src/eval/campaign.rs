//! Attack campaigns over benchmarks, schemes and key sizes.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{desynthesis_attack, AttackConfig};
use crate::circuit::{parse_bench, Netlist};
use crate::key::Key;
use crate::locking::{lock, Scheme};
use crate::rng::{derive_seed, substream};
use crate::synth::synthesize;

use super::{binomial_pvalue, output_corruptibility, overhead, recovered_bits, Sampling};

pub const REPORT_SCHEMA: &str = "logiclock.experiment/1";

const NULL_MODEL: &str = "one-sided exact binomial test: total recovered bits over all runs ~ Binomial(runs * r, 1/2)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub benchmarks: Vec<PathBuf>,
    pub schemes: Vec<Scheme>,
    pub key_sizes: Vec<usize>,
    pub runs: usize,
    /// Its `seed` is ignored: every run derives its own.
    pub attack: AttackConfig,
    pub sampling: Sampling,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
    /// Leave timings out so reports are byte-reproducible.
    pub record_timings: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            benchmarks: Vec::new(),
            schemes: vec![Scheme::Epic, Scheme::Meerkat],
            key_sizes: vec![32],
            runs: 30,
            attack: AttackConfig::default(),
            sampling: Sampling::default(),
            master_seed: 0,
            jobs: 0,
            record_timings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub benchmark: String,
    pub scheme: Scheme,
    pub r: usize,
    pub run: usize,
    pub key: String,
    pub guess: String,
    pub recovered: usize,
    pub score: u64,
    pub attack_seconds: f64,
    pub area_ratio: f64,
    pub depth_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub benchmark: String,
    pub scheme: Scheme,
    pub r: usize,
    pub runs: usize,
    pub error: Option<String>,
    pub min_recovered: usize,
    pub max_recovered: usize,
    pub mean_recovered: f64,
    /// Entry `i` counts runs recovering exactly `i` bits.
    pub histogram: Vec<usize>,
    pub p_value: f64,
    pub mean_attack_seconds: f64,
    pub area_ratio: f64,
    pub depth_ratio: f64,
    pub corruptibility: f64,
    pub corruptibility_std_error: f64,
    pub corruptibility_bit_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub null_model: String,
    pub master_seed: u64,
    pub cells: Vec<CellReport>,
    pub runs: Vec<RunRecord>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per cell.
    pub fn cells_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "benchmark",
            "scheme",
            "r",
            "runs",
            "error",
            "min_recovered",
            "max_recovered",
            "mean_recovered",
            "p_value",
            "mean_attack_seconds",
            "area_ratio",
            "depth_ratio",
            "corruptibility",
            "corruptibility_std_error",
            "corruptibility_bit_fraction",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.benchmark.clone(),
                c.scheme.to_string(),
                c.r.to_string(),
                c.runs.to_string(),
                c.error.clone().unwrap_or_default(),
                c.min_recovered.to_string(),
                c.max_recovered.to_string(),
                c.mean_recovered.to_string(),
                c.p_value.to_string(),
                c.mean_attack_seconds.to_string(),
                c.area_ratio.to_string(),
                c.depth_ratio.to_string(),
                c.corruptibility.to_string(),
                c.corruptibility_std_error.to_string(),
                c.corruptibility_bit_fraction.to_string(),
            ])?;
        }
        into_string(w)
    }

    /// One row per run.
    pub fn runs_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.runs {
            w.serialize(r)?;
        }
        into_string(w)
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String, csv::Error> {
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn label(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

struct Bench {
    name: String,
    netlist: Netlist,
    baseline: Netlist,
}

fn load(path: &PathBuf, cfg: &CampaignConfig) -> Result<Bench, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let netlist = parse_bench(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let baseline = synthesize(&netlist, &cfg.attack.synth).map_err(|e| e.to_string())?;
    let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Bench { name, netlist, baseline })
}

struct RunOutcome {
    record: RunRecord,
    corruptibility: (f64, f64, f64),
}

fn run_one(bench: &Bench, scheme: Scheme, r: usize, run: usize, cell_seed: u64, cfg: &CampaignConfig) -> Result<RunOutcome, String> {
    let run_seed = derive_seed(cell_seed, &[run as u64]);
    let key = Key::random(r, &mut substream(run_seed, 0)).map_err(|e| e.to_string())?;
    let lock_seed = derive_seed(run_seed, &[1]);
    // EPIC locks the designer's synthesized netlist; Meerkat starts from the function.
    let source = match scheme {
        Scheme::Epic => &bench.baseline,
        Scheme::Meerkat => &bench.netlist,
    };
    let locked = lock(scheme.id(), source, &key, lock_seed, &cfg.attack.synth).map_err(|e| e.to_string())?;
    let attack_cfg = AttackConfig {
        seed: derive_seed(run_seed, &[2]),
        jobs: 0,
        ..cfg.attack.clone()
    };
    let start = Instant::now();
    let result = desynthesis_attack(&locked, &attack_cfg).map_err(|e| e.to_string())?;
    let seconds = if cfg.record_timings { start.elapsed().as_secs_f64() } else { 0.0 };
    let recovered = recovered_bits(&result.best_guess, &key).map_err(|e| e.to_string())?;
    let ov = overhead(locked.netlist(), &bench.baseline).map_err(|e| e.to_string())?;
    let c = output_corruptibility(&locked, &key, &cfg.sampling, derive_seed(run_seed, &[3])).map_err(|e| e.to_string())?;
    Ok(RunOutcome {
        record: RunRecord {
            benchmark: bench.name.clone(),
            scheme,
            r,
            run,
            key: key.to_hex(),
            guess: result.best_guess.to_hex(),
            recovered,
            score: result.best_score,
            attack_seconds: seconds,
            area_ratio: ov.area,
            depth_ratio: ov.depth,
        },
        corruptibility: (c.estimate, c.std_error, c.bit_fraction),
    })
}

fn failed_cell(benchmark: String, scheme: Scheme, r: usize, runs: usize, error: String) -> CellReport {
    CellReport {
        benchmark,
        scheme,
        r,
        runs,
        error: Some(error),
        min_recovered: 0,
        max_recovered: 0,
        mean_recovered: 0.0,
        histogram: Vec::new(),
        p_value: 1.0,
        mean_attack_seconds: 0.0,
        area_ratio: 0.0,
        depth_ratio: 0.0,
        corruptibility: 0.0,
        corruptibility_std_error: 0.0,
        corruptibility_bit_fraction: 0.0,
    }
}

fn run_cell(bench: &Bench, scheme: Scheme, r: usize, cfg: &CampaignConfig) -> (CellReport, Vec<RunRecord>) {
    let cell_seed = derive_seed(cfg.master_seed, &[label(&bench.name), label(scheme.id()), r as u64]);
    let outcomes: Result<Vec<RunOutcome>, String> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| run_one(bench, scheme, r, run, cell_seed, cfg))
        .collect();
    let outcomes = match outcomes {
        Ok(o) => o,
        Err(e) => return (failed_cell(bench.name.clone(), scheme, r, cfg.runs, e), Vec::new()),
    };
    let n = outcomes.len() as f64;
    let counts: Vec<usize> = outcomes.iter().map(|o| o.record.recovered).collect();
    let mut histogram = vec![0; r + 1];
    for &c in &counts {
        histogram[c] += 1;
    }
    let mean = |f: &dyn Fn(&RunOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
    let se = outcomes.iter().map(|o| o.corruptibility.1.powi(2)).sum::<f64>().sqrt() / n;
    let cell = CellReport {
        benchmark: bench.name.clone(),
        scheme,
        r,
        runs: outcomes.len(),
        error: None,
        min_recovered: *counts.iter().min().expect("runs >= 1"),
        max_recovered: *counts.iter().max().expect("runs >= 1"),
        mean_recovered: mean(&|o| o.record.recovered as f64),
        histogram,
        p_value: binomial_pvalue(&counts, r).expect("counts within 0..=r"),
        mean_attack_seconds: mean(&|o| o.record.attack_seconds),
        area_ratio: mean(&|o| o.record.area_ratio),
        depth_ratio: mean(&|o| o.record.depth_ratio),
        corruptibility: mean(&|o| o.corruptibility.0),
        corruptibility_std_error: se,
        corruptibility_bit_fraction: mean(&|o| o.corruptibility.2),
    };
    (cell, outcomes.into_iter().map(|o| o.record).collect())
}

/// Runs every (benchmark, scheme, key size) cell. Each cell draws its
/// seeds from a path below the master seed, so cells are independent of
/// one another and of the worker count. A failing cell is reported with
/// its error and the campaign carries on.
pub fn run_campaign(cfg: &CampaignConfig) -> ExperimentReport {
    let body = || {
        let mut cells = Vec::new();
        let mut runs = Vec::new();
        for path in &cfg.benchmarks {
            let bench = load(path, cfg);
            for &scheme in &cfg.schemes {
                for &r in &cfg.key_sizes {
                    let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                    let (cell, rec) = match &bench {
                        Err(e) => (failed_cell(name, scheme, r, cfg.runs, e.clone()), Vec::new()),
                        Ok(_) if r == 0 || cfg.runs == 0 => {
                            (failed_cell(name, scheme, r, cfg.runs, "key size and runs must be at least 1".into()), Vec::new())
                        }
                        Ok(b) => run_cell(b, scheme, r, cfg),
                    };
                    cells.push(cell);
                    runs.extend(rec);
                }
            }
        }
        ExperimentReport {
            schema: REPORT_SCHEMA.to_string(),
            null_model: NULL_MODEL.to_string(),
            master_seed: cfg.master_seed,
            cells,
            runs,
        }
    };
    if cfg.jobs == 0 {
        return body();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
        Ok(pool) => pool.install(body),
        Err(_) => body(),
    }
}
