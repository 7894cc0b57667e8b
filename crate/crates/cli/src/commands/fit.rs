use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use wapmc_core::diagnostics::{
    dic, mse_with_log_correction, ppp_chi_square, summarize_block, DicResult, FitSummary,
    MseResult, PppResult,
};
use wapmc_core::rng::substream;
use wapmc_core::sampler::run_chain;
use wapmc_core::{Block, ChainOutput, Design};

use super::{DRAWS_CSV, LOGLIK_CSV, MANIFEST_JSON, STREAM_CHAIN, STREAM_FIT_DIAGNOSTICS, SUMMARY_JSON};
use crate::config::FitSettings;
use crate::draws::{column_names, state_row};
use crate::error::{CliError, Result};
use crate::input::read_dataset;
use crate::output::{csv_bytes, write_atomic, write_json};

/// Everything needed to replay a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Absolute path of the input CSV.
    pub data: PathBuf,
    pub settings: FitSettings,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_slice(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Model-checking results; a diagnostic that cannot be computed is `None`
/// with its error message in `warnings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub dic: Option<DicResult>,
    pub mse: Option<MseResult>,
    pub ppp: Option<PppResult>,
    pub warnings: Vec<String>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub retained_draws: usize,
    pub blocks: BTreeMap<String, FitSummary>,
    pub diagnostics: Diagnostics,
    /// Post-burn-in MH acceptance rate of each shape coefficient.
    pub acceptance: Vec<f64>,
    pub mh_steps: Vec<f64>,
}

fn keep<T>(warnings: &mut Vec<String>, name: &str, r: wapmc_core::Result<T>) -> Option<T> {
    r.map_err(|e| warnings.push(format!("{name}: {e}"))).ok()
}

/// DIC, predictive MSE and posterior predictive p-values of a chain.
pub fn compute_diagnostics<R: Rng + ?Sized>(chain: &ChainOutput, b: usize, rng: &mut R) -> Diagnostics {
    let mut warnings = Vec::new();
    let dic = keep(&mut warnings, "dic", dic(chain));
    let mse = keep(&mut warnings, "mse", mse_with_log_correction(chain, b, rng));
    let ppp = keep(&mut warnings, "ppp", ppp_chi_square(chain, b, rng));
    Diagnostics {
        dic,
        mse,
        ppp,
        warnings,
    }
}

pub(crate) fn block_summaries(chain: &ChainOutput) -> Result<BTreeMap<String, FitSummary>> {
    Block::active(chain.kind())
        .map(|b| Ok((b.name().to_string(), summarize_block(chain, b)?)))
        .collect()
}

pub(crate) fn draws_csv(design: &Design, chain: &ChainOutput) -> Result<Vec<u8>> {
    let mut header = vec!["draw".to_string()];
    header.extend(column_names(design));
    let rows = chain.draws.iter().enumerate().map(|(k, s)| {
        std::iter::once(k.to_string())
            .chain(state_row(design, s).into_iter().map(|v| v.to_string()))
            .collect::<Vec<_>>()
    });
    csv_bytes(&header, rows)
}

fn loglik_csv(chain: &ChainOutput) -> Result<Vec<u8>> {
    let header = ["iteration", "loglik", "retained"].map(String::from);
    let rows = chain.loglik.iter().enumerate().map(|(i, v)| {
        let kept = chain.config.keeps(i);
        vec![i.to_string(), v.to_string(), u8::from(kept).to_string()]
    });
    csv_bytes(&header, rows)
}

/// Fits the model to `data` and writes the run artifacts into `out`.
pub fn cmd_fit(data: &Path, settings: &FitSettings, out: &Path) -> Result<PathBuf> {
    settings.validate()?;
    if !data.is_file() {
        return Err(CliError::Argument(format!("data file {} does not exist", data.display())));
    }
    let data_abs = std::fs::canonicalize(data).map_err(|e| CliError::io(data, e))?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    let dataset = read_dataset(&data_abs)?;
    let design = Arc::new(Design::build(settings.model, &settings.spec, &dataset)?);
    let seed = settings.chain.seed;
    log::info!(
        "fitting {} model: {} Weibull, {} count responses, r = {}",
        settings.model,
        dataset.n_c(),
        dataset.n_d(),
        settings.spec.r
    );
    let chain = run_chain(Arc::clone(&design), &settings.chain, &mut substream(seed, &[STREAM_CHAIN]))?;
    let diagnostics =
        compute_diagnostics(&chain, settings.ppp_b, &mut substream(seed, &[STREAM_FIT_DIAGNOSTICS]));
    for w in &diagnostics.warnings {
        log::warn!("{w}");
    }
    let report = FitReport {
        model: settings.model.to_string(),
        retained_draws: chain.len(),
        blocks: block_summaries(&chain)?,
        diagnostics,
        acceptance: chain.acceptance.clone(),
        mh_steps: chain.mh_steps.clone(),
    };
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        data: data_abs,
        settings: settings.clone(),
    };

    write_atomic(&out.join(DRAWS_CSV), &draws_csv(&design, &chain)?)?;
    write_atomic(&out.join(LOGLIK_CSV), &loglik_csv(&chain)?)?;
    write_json(&out.join(SUMMARY_JSON), &report)?;
    write_json(&out.join(MANIFEST_JSON), &manifest)?;
    Ok(out.to_path_buf())
}
