use std::path::{Path, PathBuf};

use wapmc_core::sim::{run_experiment, ExperimentConfig, ExperimentGrid, ExperimentResult};
use wapmc_core::{BasisKind, ChainConfig};

use crate::config::KeyValues;
use crate::error::{CliError, Result};
use crate::output::{csv_bytes, format_sig17, write_atomic, write_json};

/// Factor grid and chain settings read from a `simulate --grid` file.
///
/// Keys: `r = 5,10,15`, `snr = 1:1,5:5` (`snr_c:snr_d` pairs),
/// `b2 = 6,8`, and optionally `n`, `iters`, `burnin`, `thin`, `basis`,
/// `zeta`, `sigma_c`, `sigma_d` (fixed noise scales).
#[derive(Debug, Clone)]
pub struct GridFile {
    pub grid: ExperimentGrid,
    pub config: ExperimentConfig,
}

pub const GRID_KEYS: &[&str] = &[
    "r", "snr", "b2", "n", "iters", "burnin", "thin", "basis", "zeta", "sigma_c", "sigma_d",
];

fn list<T: std::str::FromStr>(kv: &KeyValues, key: &str, default: Vec<T>) -> Result<Vec<T>> {
    let Some((line, v)) = kv.entries.get(key) else {
        return Ok(default);
    };
    v.split(',')
        .map(|s| {
            s.trim().parse::<T>().map_err(|_| CliError::Config {
                path: kv.path.clone(),
                line: *line,
                message: format!("bad entry '{}' in '{key}'", s.trim()),
            })
        })
        .collect()
}

impl GridFile {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.check_keys(GRID_KEYS)?;
        let snr_pairs = match kv.entries.get("snr") {
            None => vec![(1.0, 1.0)],
            Some((line, v)) => v
                .split(',')
                .map(|pair| {
                    let bad = || CliError::Config {
                        path: kv.path.clone(),
                        line: *line,
                        message: format!("bad SNR pair '{}'; expected snr_c:snr_d", pair.trim()),
                    };
                    let (c, d) = pair.trim().split_once(':').ok_or_else(bad)?;
                    Ok((c.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let grid = ExperimentGrid {
            r_values: list(kv, "r", vec![10])?,
            snr_pairs,
            b2_values: list(kv, "b2", vec![8.0])?,
        };
        let mut config = ExperimentConfig::default();
        let chain = &mut config.chain;
        if let Some(v) = kv.get("iters")? {
            chain.iterations = v;
        }
        if let Some(v) = kv.get("burnin")? {
            chain.burn_in = v;
        }
        if let Some(v) = kv.get("thin")? {
            chain.thin = v;
        }
        if let Some(v) = kv.get::<BasisKind>("basis")? {
            config.model.basis = v;
        }
        if let Some(v) = kv.get("zeta")? {
            config.model.zeta = v;
        }
        if let Some(v) = kv.get("n")? {
            config.signal.n = v;
        }
        config.signal.fixed_sigma_c = kv.get("sigma_c")?;
        config.signal.fixed_sigma_d = kv.get("sigma_d")?;
        Ok(Self { grid, config })
    }
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub grid: PathBuf,
    pub reps: usize,
    pub seed: u64,
    pub out: PathBuf,
}

fn cells_csv(res: &ExperimentResult) -> Result<Vec<u8>> {
    let header = [
        "cell", "r", "snr_c", "snr_d", "b2", "replicates", "failures", "mean_poz", "p_total",
        "p_weibull", "p_poisson",
    ]
    .map(String::from);
    let rows = res.cells.iter().map(|c| {
        let n = c.replicates.len();
        let mean_poz = if n > 0 {
            c.replicates.iter().map(|r| r.poz).sum::<f64>() / n as f64
        } else {
            f64::NAN
        };
        let p = |f: fn(&wapmc_core::sim::CellTests) -> f64| {
            c.tests.as_ref().map_or_else(String::new, |t| format_sig17(f(t)))
        };
        vec![
            c.cell.index.to_string(),
            c.cell.r.to_string(),
            c.cell.snr_c.to_string(),
            c.cell.snr_d.to_string(),
            c.cell.b2.to_string(),
            n.to_string(),
            c.failures.len().to_string(),
            format_sig17(mean_poz),
            p(|t| t.total.p_value),
            p(|t| t.weibull.p_value),
            p(|t| t.poisson.p_value),
        ]
    });
    csv_bytes(&header, rows)
}

fn replicates_csv(res: &ExperimentResult) -> Result<Vec<u8>> {
    let header = [
        "cell", "replicate", "poz", "wap_weibull", "wap_poisson", "wap_total", "uni_weibull",
        "uni_poisson", "uni_total",
    ]
    .map(String::from);
    let rows = res.cells.iter().flat_map(|c| {
        c.replicates.iter().map(move |r| {
            vec![
                c.cell.index.to_string(),
                r.replicate.to_string(),
                format_sig17(r.poz),
                format_sig17(r.wap.weibull),
                format_sig17(r.wap.poisson),
                format_sig17(r.wap.total),
                format_sig17(r.univariate.weibull),
                format_sig17(r.univariate.poisson),
                format_sig17(r.univariate.total),
            ]
        })
    });
    csv_bytes(&header, rows)
}

fn failures_csv(res: &ExperimentResult) -> Result<Vec<u8>> {
    let header = ["cell", "replicate", "message"].map(String::from);
    let rows = res.cells.iter().flat_map(|c| {
        c.failures
            .iter()
            .map(move |(r, m)| vec![c.cell.index.to_string(), r.to_string(), m.clone()])
    });
    csv_bytes(&header, rows)
}

/// Runs the comparison study and writes `cells.csv`, `replicates.csv`,
/// `failures.csv` and `experiment.json` into `out`.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<ExperimentResult> {
    let kv = KeyValues::read(&args.grid)?;
    let GridFile { grid, mut config } = GridFile::from_key_values(&kv)?;
    config.replicates = args.reps;
    config.master_seed = args.seed;
    config.chain = ChainConfig {
        seed: args.seed,
        ..config.chain
    };
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    log::info!(
        "running {} cells x {} replicates",
        grid.cells().len(),
        config.replicates
    );
    let res = run_experiment(&grid, &config)?;
    let out: &Path = &args.out;
    write_atomic(&out.join("cells.csv"), &cells_csv(&res)?)?;
    write_atomic(&out.join("replicates.csv"), &replicates_csv(&res)?)?;
    write_atomic(&out.join("failures.csv"), &failures_csv(&res)?)?;
    write_json(&out.join("experiment.json"), &res)?;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_file_parses_lists_and_pairs() {
        let kv = KeyValues::parse(
            Path::new("g.cfg"),
            "r = 5, 10\nsnr = 1:5, 5:5\nb2 = 6,6.5\niters = 50\nburnin = 10\nsigma_c = 1\n",
        )
        .unwrap();
        let g = GridFile::from_key_values(&kv).unwrap();
        assert_eq!(g.grid.r_values, vec![5, 10]);
        assert_eq!(g.grid.snr_pairs, vec![(1.0, 5.0), (5.0, 5.0)]);
        assert_eq!(g.grid.b2_values, vec![6.0, 6.5]);
        assert_eq!(g.config.chain.iterations, 50);
        assert_eq!(g.config.signal.fixed_sigma_c, Some(1.0));
        assert_eq!(g.config.signal.fixed_sigma_d, None);
    }

    #[test]
    fn bad_pairs_and_keys_are_rejected() {
        let bad = |text: &str| {
            let kv = KeyValues::parse(Path::new("g.cfg"), text).unwrap();
            GridFile::from_key_values(&kv).is_err()
        };
        assert!(bad("snr = 1-5"));
        assert!(bad("r = five"));
        assert!(bad("reps = 3"));
    }
}
