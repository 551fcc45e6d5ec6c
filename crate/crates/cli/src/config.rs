//! Run configuration: JSON file merged with command-line flags
//! (file < flags).

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use whitham_soliton::solver::SolverConfig;
use whitham_soliton::symbols::SymbolConfig;

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_symbol() -> SymbolConfig {
    SymbolConfig::Whitham
}
fn default_q_list() -> Vec<f64> {
    // nine-point geometric ladder 1e-2 .. 1e-4
    (0..9).map(|i| 10f64.powf(-2.0 - 0.25 * i as f64)).collect()
}

/// Parameters of the admissibility checker.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmissibilityParams {
    pub eps: f64,
    pub n_kernel: usize,
    pub l_kernel: f64,
}

impl Default for AdmissibilityParams {
    fn default() -> Self {
        AdmissibilityParams {
            eps: 0.1,
            n_kernel: 1 << 20,
            l_kernel: 4096.0,
        }
    }
}

/// Everything one batch run needs. All fields have defaults, so `{}` is a
/// valid configuration file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub symbol: SymbolConfig,
    pub solver: SolverConfig,
    pub q_list: Vec<f64>,
    pub output_dir: PathBuf,
    pub emit_profiles: bool,
    /// worker count for sweeps; None means available parallelism
    pub jobs: Option<usize>,
    /// seed for the multi-start perturbation check
    pub seed: u64,
    pub multi_start_check: bool,
    pub admissibility: AdmissibilityParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            symbol: default_symbol(),
            solver: SolverConfig::default(),
            q_list: default_q_list(),
            output_dir: default_output_dir(),
            emit_profiles: false,
            jobs: None,
            seed: 0,
            multi_start_check: false,
            admissibility: AdmissibilityParams::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Effective worker count: env var WHITHAM_SOLITON_JOBS overrides the
    /// configured value, which overrides available parallelism.
    pub fn effective_jobs(&self) -> usize {
        if let Ok(v) = std::env::var("WHITHAM_SOLITON_JOBS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    return n;
                }
            }
            log::warn!("ignoring unparsable WHITHAM_SOLITON_JOBS={v:?}");
        }
        self.jobs.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }
}

/// `whitham`, `boussinesq:<b>`, or `constant:<value>`.
pub fn parse_symbol_flag(s: &str) -> Result<SymbolConfig> {
    let lower = s.trim().to_ascii_lowercase();
    if lower == "whitham" {
        return Ok(SymbolConfig::Whitham);
    }
    if let Some(rest) = lower.strip_prefix("boussinesq:") {
        let b: f64 = rest
            .parse()
            .with_context(|| format!("boussinesq coefficient {rest:?}"))?;
        return Ok(SymbolConfig::Boussinesq { b });
    }
    if let Some(rest) = lower.strip_prefix("constant:") {
        let v: f64 = rest
            .parse()
            .with_context(|| format!("constant value {rest:?}"))?;
        return Ok(SymbolConfig::Custom {
            form: "constant".into(),
            value: v,
        });
    }
    bail!("unknown symbol {s:?}; expected whitham, boussinesq:<b>, or constant:<v>")
}

pub fn parse_q_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("q list entry {t:?}"))
        })
        .collect()
}
