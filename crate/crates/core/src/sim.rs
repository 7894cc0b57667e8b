//! Synthetic multi-type data and the joint-versus-separate comparison study.
//!
//! Weibull and count responses live on the same sites `A_i = i`,
//! `i = 1..n/2`:
//!
//! ```text
//! Y_c = b1 + c1 sin(A_i) + e1,   e1 ~ N(0, sigma_c^2)
//! Y_d = b2 + c2 Y_c + e2,        e2 ~ N(0, sigma_d^2)
//! ```
//!
//! Each noise scale is set from a target signal-to-noise ratio.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{contiguous_groups, Coord};
use crate::diagnostics::{paired_t_one_sided, sse, TestResult};
use crate::error::{Result, WapError};
use crate::mlg::check_full_column_rank;
use crate::rng::substream;
use crate::sampler::{
    fit, predict_linear, sample_poisson_log, sample_weibull, ArealDataset, ChainConfig, ModelKind,
    WapModelSpec,
};

/// Regions sharing one Weibull shape.
pub const SHAPE_BLOCK: usize = 10;

/// Covariates per response type.
pub const N_COVARIATES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    /// Total responses; half Weibull, half counts.
    pub n: usize,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub snr_c: f64,
    pub snr_d: f64,
    /// Gamma shape and scale of the per-group Weibull shapes.
    pub rho_shape: f64,
    pub rho_scale: f64,
    /// Fixed noise scales; when set they replace the SNR-derived values.
    #[serde(default)]
    pub fixed_sigma_c: Option<f64>,
    #[serde(default)]
    pub fixed_sigma_d: Option<f64>,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self {
            n: 200,
            b1: -3.0,
            b2: 8.0,
            c1: 1.2,
            c2: 1.5,
            snr_c: 1.0,
            snr_d: 1.0,
            rho_shape: 10.0,
            rho_scale: 0.1,
            fixed_sigma_c: None,
            fixed_sigma_d: None,
        }
    }
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(WapError::domain(format!("n must be even and at least 2, got {}", self.n)));
        }
        for (v, name) in [(self.snr_c, "snr_c"), (self.snr_d, "snr_d")] {
            if !(v > 0.0) {
                return Err(WapError::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.rho_shape > 0.0 && self.rho_scale > 0.0) {
            return Err(WapError::domain("shape prior constants must be positive"));
        }
        for (v, name) in [(self.fixed_sigma_c, "fixed_sigma_c"), (self.fixed_sigma_d, "fixed_sigma_d")] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(WapError::domain(format!("{name} must be non-negative, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// Sites per response type.
    pub fn sites(&self) -> usize {
        self.n / 2
    }
}

/// `sqrt(energy / (count * snr))`, the noise scale giving the requested
/// ratio of signal energy to expected noise energy over `count` sites.
pub fn sigma_from_energy(energy: f64, count: usize, snr: f64) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(WapError::domain("signal has zero energy"));
    }
    if count == 0 || !(snr > 0.0) {
        return Err(WapError::domain("count and SNR must be positive"));
    }
    Ok((energy / (count as f64 * snr)).sqrt())
}

/// Noise scale of the Weibull-side signal. The energy sums over the `n / 2`
/// sites while the denominator uses the total response count `n`.
pub fn sigma_c(spec: &SignalSpec) -> Result<f64> {
    spec.validate()?;
    if let Some(s) = spec.fixed_sigma_c {
        return Ok(s);
    }
    let m = spec.sites();
    let energy: f64 = (1..=m).map(|i| (spec.c1 * (i as f64).sin()).powi(2)).sum();
    sigma_from_energy(energy, spec.n, spec.snr_c)
}

/// Noise scale of the count-side signal given the realized `Y_c`, with the
/// same `n` denominator as [`sigma_c`].
pub fn sigma_d(spec: &SignalSpec, y_c: &[f64]) -> Result<f64> {
    spec.validate()?;
    if let Some(s) = spec.fixed_sigma_d {
        return Ok(s);
    }
    let energy: f64 = y_c.iter().map(|y| (spec.c2 * y).powi(2)).sum();
    sigma_from_energy(energy, spec.n, spec.snr_d)
}

/// Fraction of entries strictly below `log(0.5)`.
pub fn compute_poz(q2: &[f64]) -> Result<f64> {
    if q2.is_empty() {
        return Err(WapError::domain("POZ of an empty vector"));
    }
    let cut = 0.5f64.ln();
    Ok(q2.iter().filter(|&&v| v < cut).count() as f64 / q2.len() as f64)
}

/// A generated data set together with the latent truth.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub y_c: Vec<f64>,
    pub y_d: Vec<f64>,
    pub rho: Vec<f64>,
    pub sigma_c: f64,
    pub sigma_d: f64,
    pub dataset: ArealDataset,
}

impl SimulatedData {
    pub fn poz(&self) -> f64 {
        compute_poz(&self.y_d).expect("non-empty")
    }
}

/// Bernoulli(0.5) covariates, redrawn until of full column rank.
fn bernoulli_design<R: Rng + ?Sized>(rows: usize, rng: &mut R) -> DMatrix<f64> {
    let coin = Bernoulli::new(0.5).expect("valid probability");
    loop {
        let x = DMatrix::from_fn(rows, N_COVARIATES, |_, _| {
            if coin.sample(rng) { 1.0 } else { 0.0 }
        });
        if check_full_column_rank(&x, "covariates").is_ok() {
            return x;
        }
    }
}

/// Latent signals only; no responses.
pub fn generate_latent<R: Rng + ?Sized>(
    spec: &SignalSpec,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
    let s_c = sigma_c(spec)?;
    let m = spec.sites();
    let e1 = Normal::new(0.0, s_c).map_err(|e| WapError::Numeric(e.to_string()))?;
    let y_c: Vec<f64> = (1..=m)
        .map(|i| spec.b1 + spec.c1 * (i as f64).sin() + e1.sample(rng))
        .collect();
    let s_d = sigma_d(spec, &y_c)?;
    let e2 = Normal::new(0.0, s_d).map_err(|e| WapError::Numeric(e.to_string()))?;
    let y_d: Vec<f64> = y_c
        .iter()
        .map(|y| spec.b2 + spec.c2 * y + e2.sample(rng))
        .collect();
    Ok((y_c, y_d, s_c, s_d))
}

/// Draws a full data set: latent signals, Weibull times, counts, covariates.
pub fn generate_signal<R: Rng + ?Sized>(spec: &SignalSpec, rng: &mut R) -> Result<SimulatedData> {
    let (y_c, y_d, s_c, s_d) = generate_latent(spec, rng)?;
    let m = spec.sites();
    let groups = contiguous_groups(m, SHAPE_BLOCK);
    let n_groups = m.div_ceil(SHAPE_BLOCK);
    let gamma = Gamma::new(spec.rho_shape, spec.rho_scale)
        .map_err(|e| WapError::Numeric(e.to_string()))?;
    let group_rho: Vec<f64> = (0..n_groups).map(|_| gamma.sample(rng)).collect();
    let rho: Vec<f64> = (0..m).map(|i| group_rho[i / SHAPE_BLOCK]).collect();

    let t: Vec<f64> = (0..m).map(|i| sample_weibull(rho[i], y_c[i], rng)).collect();
    let z: Vec<u64> = y_d
        .iter()
        .map(|&y| sample_poisson_log(y, rng))
        .collect::<Result<_>>()?;
    let x_c = bernoulli_design(m, rng);
    let x_d = bernoulli_design(m, rng);
    let centroids: Vec<Coord> = (1..=m).map(|i| Coord::on_line(i as f64)).collect();
    let ids: Vec<String> = (1..=m).map(|i| format!("A{i}")).collect();
    let dataset = ArealDataset {
        region_ids_c: ids.clone(),
        t,
        x_c,
        centroids_c: centroids.clone(),
        shape_groups: groups,
        region_ids_d: ids,
        z,
        x_d,
        centroids_d: centroids,
        population: None,
    };
    Ok(SimulatedData {
        y_c,
        y_d,
        rho,
        sigma_c: s_c,
        sigma_d: s_d,
        dataset,
    })
}

/// Factor levels of a comparison study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub r_values: Vec<usize>,
    /// `(snr_c, snr_d)` pairs.
    pub snr_pairs: Vec<(f64, f64)>,
    pub b2_values: Vec<f64>,
}

impl ExperimentGrid {
    /// Cells in row-major order over `(r, snr, b2)`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &r in &self.r_values {
            for &(snr_c, snr_d) in &self.snr_pairs {
                for &b2 in &self.b2_values {
                    out.push(Cell {
                        index: out.len(),
                        r,
                        snr_c,
                        snr_d,
                        b2,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub r: usize,
    pub snr_c: f64,
    pub snr_d: f64,
    pub b2: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub replicates: usize,
    pub master_seed: u64,
    pub chain: ChainConfig,
    /// Model constants shared by every fit; `r` is overridden per cell.
    pub model: WapModelSpec,
    /// Signal constants; SNRs and `b2` are overridden per cell.
    pub signal: SignalSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            replicates: 30,
            master_seed: 1,
            chain: ChainConfig::new(2000, 1000, 1, 0),
            model: WapModelSpec::default(),
            signal: SignalSpec::default(),
        }
    }
}

/// Weibull, count, and total SSE of one fit pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SseTriple {
    pub weibull: f64,
    pub poisson: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub poz: f64,
    pub wap: SseTriple,
    /// Separate Weibull-only and count-only fits.
    pub univariate: SseTriple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellTests {
    pub total: TestResult,
    pub weibull: TestResult,
    pub poisson: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub replicates: Vec<ReplicateResult>,
    /// `(replicate, message)` for every replicate whose fit failed.
    pub failures: Vec<(usize, String)>,
    /// Paired tests of WAP SSE against univariate SSE; absent with fewer
    /// than two successful replicates.
    pub tests: Option<CellTests>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
}

/// Stream purposes within one `(cell, replicate)`.
const PURPOSE_DATA: u64 = 0;
const PURPOSE_WAP: u64 = 1;
const PURPOSE_WEIBULL: u64 = 2;
const PURPOSE_POISSON: u64 = 3;

/// Generates one replicate of a cell and fits all three models.
pub fn run_replicate(
    cell: &Cell,
    replicate: usize,
    config: &ExperimentConfig,
) -> Result<ReplicateResult> {
    let key = |purpose| -> ChaCha8Rng {
        substream(config.master_seed, &[cell.index as u64, replicate as u64, purpose])
    };
    let signal = SignalSpec {
        snr_c: cell.snr_c,
        snr_d: cell.snr_d,
        b2: cell.b2,
        ..config.signal
    };
    let sim = generate_signal(&signal, &mut key(PURPOSE_DATA))?;
    let model = WapModelSpec {
        r: cell.r,
        ..config.model.clone()
    };
    let data = &sim.dataset;

    let wap = fit(ModelKind::Wap, &model, data, &config.chain, &mut key(PURPOSE_WAP))?;
    let (wc, wd) = predict_linear(&wap)?;
    let wei = fit(ModelKind::Weibull, &model, data, &config.chain, &mut key(PURPOSE_WEIBULL))?;
    let (uc, _) = predict_linear(&wei)?;
    let poi = fit(ModelKind::Poisson, &model, data, &config.chain, &mut key(PURPOSE_POISSON))?;
    let (_, ud) = predict_linear(&poi)?;

    let triple = |c: &[f64], d: &[f64]| -> Result<SseTriple> {
        let weibull = sse(c, &sim.y_c)?;
        let poisson = sse(d, &sim.y_d)?;
        Ok(SseTriple {
            weibull,
            poisson,
            total: weibull + poisson,
        })
    };
    Ok(ReplicateResult {
        replicate,
        poz: sim.poz(),
        wap: triple(wc.as_slice(), wd.as_slice())?,
        univariate: triple(uc.as_slice(), ud.as_slice())?,
    })
}

/// Paired one-sided tests of `E[SSE_wap] < E[SSE_univariate]`.
pub fn cell_tests(reps: &[ReplicateResult]) -> Result<CellTests> {
    let col = |f: fn(&SseTriple) -> f64| -> (Vec<f64>, Vec<f64>) {
        (
            reps.iter().map(|r| f(&r.wap)).collect(),
            reps.iter().map(|r| f(&r.univariate)).collect(),
        )
    };
    let (xt, yt) = col(|s| s.total);
    let (xw, yw) = col(|s| s.weibull);
    let (xp, yp) = col(|s| s.poisson);
    Ok(CellTests {
        total: paired_t_one_sided(&xt, &yt)?,
        weibull: paired_t_one_sided(&xw, &yw)?,
        poisson: paired_t_one_sided(&xp, &yp)?,
    })
}

/// Runs every `(cell, replicate)` in parallel. Failed fits are recorded in
/// their cell and excluded from its tests.
pub fn run_experiment(grid: &ExperimentGrid, config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.replicates < 2 {
        return Err(WapError::domain("an experiment needs at least two replicates"));
    }
    config.chain.validate()?;
    config.model.validate()?;
    config.signal.validate()?;
    let cells = grid.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.replicates).map(move |r| (c, r)))
        .collect();
    let outcomes: Vec<(usize, usize, Result<ReplicateResult>)> = jobs
        .par_iter()
        .map(|&(c, r)| (c, r, run_replicate(&cells[c], r, config)))
        .collect();

    let mut results: Vec<CellResult> = cells
        .iter()
        .map(|cell| CellResult {
            cell: *cell,
            replicates: Vec::new(),
            failures: Vec::new(),
            tests: None,
        })
        .collect();
    for (c, r, outcome) in outcomes {
        match outcome {
            Ok(rep) => results[c].replicates.push(rep),
            Err(e) => {
                log::warn!("cell {c} replicate {r} failed: {e}");
                results[c].failures.push((r, e.to_string()));
            }
        }
    }
    for cell in &mut results {
        if cell.replicates.len() >= 2 {
            cell.tests = Some(cell_tests(&cell.replicates)?);
        }
    }
    Ok(ExperimentResult { cells: results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_plug_in_and_homogeneity() {
        assert!((sigma_from_energy(50.0, 200, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let a = sigma_from_energy(50.0, 200, 1.0).unwrap();
        let b = sigma_from_energy(50.0, 200, 2.0).unwrap();
        assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
        let spec = SignalSpec {
            c1: 0.0,
            ..SignalSpec::default()
        };
        assert!(sigma_c(&spec).is_err());
    }

    #[test]
    fn poz_cases() {
        assert_eq!(compute_poz(&[0.4f64.ln(), 0.6f64.ln()]).unwrap(), 0.5);
        assert_eq!(compute_poz(&[0.5f64.ln(); 3]).unwrap(), 0.0);
        assert!(compute_poz(&[]).is_err());
    }

    #[test]
    fn grid_cells_are_indexed_in_order() {
        let g = ExperimentGrid {
            r_values: vec![5, 10],
            snr_pairs: vec![(1.0, 1.0)],
            b2_values: vec![6.0, 8.0],
        };
        let cells = g.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells.iter().map(|c| c.index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!((cells[1].r, cells[1].b2), (5, 8.0));
    }
}
