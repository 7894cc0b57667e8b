use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use wapmc_core::diagnostics::{hazard, summarize_block, ParamSummary};
use wapmc_core::rng::substream;
use wapmc_core::sampler::joint_loglik;
use wapmc_core::{Block, ChainOutput, Design};

use super::fit::{compute_diagnostics, Diagnostics, FitReport, RunManifest};
use super::{
    DRAWS_CSV, ETA_INTERVALS_CSV, HAZARD_CSV, LOGLIK_CSV, MANIFEST_JSON, STREAM_DIAGNOSE,
    SUMMARY_JSON,
};
use crate::draws::{column_names, state_from_row};
use crate::error::{CliError, Result};
use crate::input::read_dataset;
use crate::output::{csv_bytes, format_sig17, write_atomic};

/// A fit reconstructed from its run directory.
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub summary: FitReport,
    pub chain: ChainOutput,
}

fn read_csv_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.parse::<f64>().map_err(|_| CliError::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: c + 1,
                    message: format!("expected a number, found '{s}'"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Reads the artifacts of a `fit` run and rebuilds its chain.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    if !dir.is_dir() {
        return Err(CliError::Argument(format!("run directory {} does not exist", dir.display())));
    }
    for name in [DRAWS_CSV, LOGLIK_CSV, SUMMARY_JSON, MANIFEST_JSON] {
        let p = dir.join(name);
        if !p.is_file() {
            return Err(CliError::MissingArtifact(p));
        }
    }
    let manifest = RunManifest::read(&dir.join(MANIFEST_JSON))?;
    let summary_path = dir.join(SUMMARY_JSON);
    let summary: FitReport = serde_json::from_slice(
        &std::fs::read(&summary_path).map_err(|e| CliError::io(&summary_path, e))?,
    )
    .map_err(|source| CliError::Json {
        path: summary_path.clone(),
        source,
    })?;
    let s = &manifest.settings;
    let data = read_dataset(&manifest.data)?;
    let design = Arc::new(Design::build(s.model, &s.spec, &data)?);

    let draws_path = dir.join(DRAWS_CSV);
    let (header, rows) = read_csv_rows(&draws_path)?;
    let expected = column_names(&design);
    if header.len() != expected.len() + 1 || header[1..] != expected[..] {
        return Err(CliError::Validation {
            path: draws_path,
            message: "columns do not match the model in the run manifest".into(),
        });
    }
    let draws = rows
        .iter()
        .map(|row| state_from_row(&design, &row[1..]))
        .collect::<Result<Vec<_>>>()?;
    let retained_loglik = draws
        .iter()
        .map(|st| joint_loglik(&design, st))
        .collect::<wapmc_core::Result<Vec<_>>>()?;
    let (_, ll_rows) = read_csv_rows(&dir.join(LOGLIK_CSV))?;
    let loglik = ll_rows.iter().map(|r| r.get(1).copied().unwrap_or(f64::NAN)).collect();

    let chain = ChainOutput {
        design,
        config: s.chain.clone(),
        draws,
        loglik,
        retained_loglik,
        acceptance: summary.acceptance.clone(),
        mh_steps: summary.mh_steps.clone(),
    };
    Ok(LoadedRun {
        manifest,
        summary,
        chain,
    })
}

/// Output of `diagnose`.
#[derive(Debug, Clone)]
pub struct DiagnoseReport {
    pub diagnostics: Diagnostics,
    /// Spatial-effect intervals per active η-type block.
    pub intervals: Vec<(String, Vec<ParamSummary>, usize, usize)>,
    /// Rows written to `hazard.csv`, when the data carry populations.
    pub hazard_rows: Option<usize>,
    pub text: String,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

/// Recomputes the diagnostics of a run and writes `eta_intervals.csv` and,
/// when populations are present, `hazard.csv` into the run directory.
pub fn cmd_diagnose(dir: &Path, ppp_b: Option<usize>) -> Result<DiagnoseReport> {
    let run = load_run(dir)?;
    let b = ppp_b.unwrap_or(run.manifest.settings.ppp_b);
    if b < wapmc_core::diagnostics::PPP_MIN_REPLICATES {
        return Err(CliError::Argument(format!(
            "--ppp-B must be at least {}",
            wapmc_core::diagnostics::PPP_MIN_REPLICATES
        )));
    }
    let chain = &run.chain;
    let seed = run.manifest.settings.chain.seed;
    let diagnostics = compute_diagnostics(chain, b, &mut substream(seed, &[STREAM_DIAGNOSE]));

    let mut intervals = Vec::new();
    for block in Block::active(chain.kind()).filter(|b| b.has_mixing()) {
        let s = summarize_block(chain, block)?;
        intervals.push((block.name().to_string(), s.params, s.above_zero, s.below_zero));
    }
    let header = ["block", "name", "mean", "sd", "q025", "q975", "excludes_zero"].map(String::from);
    let rows = intervals.iter().flat_map(|(block, params, _, _)| {
        params.iter().map(move |p| {
            vec![
                block.clone(),
                p.name.clone(),
                format_sig17(p.mean),
                format_sig17(p.sd),
                format_sig17(p.q025),
                format_sig17(p.q975),
                u8::from(p.above_zero() || p.below_zero()).to_string(),
            ]
        })
    });
    write_atomic(&dir.join(ETA_INTERVALS_CSV), &csv_bytes(&header, rows)?)?;

    let data = &chain.design.data;
    let hazard_rows = match &data.population {
        Some(pop) => {
            let h = hazard(&data.z, pop)?;
            let header = ["region_id", "mortality", "population", "hazard"].map(String::from);
            let rows = (0..h.len()).map(|i| {
                vec![
                    data.region_ids_d.get(i).cloned().unwrap_or_else(|| i.to_string()),
                    data.z[i].to_string(),
                    pop[i].to_string(),
                    format_sig17(h[i]),
                ]
            });
            write_atomic(&dir.join(HAZARD_CSV), &csv_bytes(&header, rows)?)?;
            Some(h.len())
        }
        None => None,
    };

    let mut t = String::new();
    let _ = writeln!(t, "== DIC ==");
    match &diagnostics.dic {
        Some(d) => {
            let _ = writeln!(t, "DIC {:.4}  D_bar {:.4}  D_hat {:.4}  p_D {:.4}", d.dic, d.d_bar, d.d_hat, d.p_d);
        }
        None => {
            let _ = writeln!(t, "unavailable");
        }
    }
    let _ = writeln!(t, "\n== Posterior predictive p-values (B = {b}) ==");
    let ppp = diagnostics.ppp.as_ref();
    let _ = writeln!(t, "weibull {}", fmt_opt(ppp.and_then(|p| p.weibull)));
    let _ = writeln!(t, "poisson {}", fmt_opt(ppp.and_then(|p| p.poisson)));
    let _ = writeln!(t, "\n== Predictive MSE ==");
    let mse = diagnostics.mse.as_ref();
    let _ = writeln!(t, "weibull {}", fmt_opt(mse.and_then(|m| m.weibull)));
    let _ = writeln!(t, "poisson (log scale) {}", fmt_opt(mse.and_then(|m| m.poisson_log)));
    let _ = writeln!(t, "\n== Spatial effects: 95% intervals excluding zero ==");
    for (block, params, above, below) in &intervals {
        let _ = writeln!(t, "{block}: {above} above, {below} below, of {}", params.len());
    }
    if let Some(n) = hazard_rows {
        let _ = writeln!(t, "\nhazard.csv: {n} regions");
    }
    for w in &diagnostics.warnings {
        let _ = writeln!(t, "warning: {w}");
    }
    Ok(DiagnoseReport {
        diagnostics,
        intervals,
        hazard_rows,
        text: t,
    })
}
