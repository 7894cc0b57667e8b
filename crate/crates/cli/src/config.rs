//! Run settings: flat `key = value` config files merged under command-line
//! flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use wapmc_core::{BasisKind, ChainConfig, ModelKind, WapModelSpec};

use crate::error::{CliError, Result};

/// Parsed `key = value` pairs with the line each key came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    pub path: PathBuf,
    pub entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    /// Parses `text`. Blank lines and lines starting with `#` are skipped;
    /// repeated keys are errors.
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let (k, v) = s.split_once('=').ok_or_else(|| CliError::Config {
                path: path.to_path_buf(),
                line,
                message: format!("expected key=value, found '{s}'"),
            })?;
            let k = k.trim().to_string();
            if k.is_empty() {
                return Err(CliError::Config {
                    path: path.to_path_buf(),
                    line,
                    message: "empty key".into(),
                });
            }
            if let Some((first, _)) = entries.insert(k.clone(), (line, v.trim().to_string())) {
                return Err(CliError::Config {
                    path: path.to_path_buf(),
                    line,
                    message: format!("key '{k}' repeats line {first}"),
                });
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(path, &text)
    }

    /// Fails on the first key outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, (line, _)) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(CliError::Config {
                    path: self.path.clone(),
                    line: *line,
                    message: format!("unknown key '{k}'; expected one of {}", allowed.join(", ")),
                });
            }
        }
        Ok(())
    }

    /// Parses the value of `key` when present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| CliError::Config {
                path: self.path.clone(),
                line: *line,
                message: format!("bad value '{v}' for '{key}': {e}"),
            }),
        }
    }
}

/// Fully resolved settings of a `fit` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub model: ModelKind,
    pub chain: ChainConfig,
    pub spec: WapModelSpec,
    /// Posterior predictive replicates for the MSE and p-values.
    pub ppp_b: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            model: ModelKind::Wap,
            chain: ChainConfig::default(),
            spec: WapModelSpec::default(),
            ppp_b: 200,
        }
    }
}

pub const FIT_KEYS: &[&str] = &[
    "model",
    "basis",
    "r",
    "iters",
    "burnin",
    "thin",
    "seed",
    "zeta",
    "hyper_r1",
    "hyper_r2",
    "hyper_b",
    "alpha_v",
    "kappa_v",
    "shape_prior_alpha",
    "shape_prior_scale",
    "mh_step",
    "mh_adapt",
    "bisquare_radius",
    "ppp_b",
];

/// Flag values; `None` leaves the config file or default value in place.
#[derive(Debug, Clone, Default)]
pub struct FitOverrides {
    pub model: Option<ModelKind>,
    pub basis: Option<BasisKind>,
    pub r: Option<usize>,
    pub iters: Option<usize>,
    pub burnin: Option<usize>,
    pub thin: Option<usize>,
    pub seed: Option<u64>,
}

fn parsed<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

impl FitSettings {
    /// Applies a config file on top of the defaults.
    pub fn apply_file(&mut self, kv: &KeyValues) -> Result<()> {
        kv.check_keys(FIT_KEYS)?;
        if let Some((line, v)) = kv.entries.get("model") {
            self.model = parsed(v).map_err(|message| CliError::Config {
                path: kv.path.clone(),
                line: *line,
                message,
            })?;
        }
        if let Some((line, v)) = kv.entries.get("basis") {
            self.spec.basis = parsed(v).map_err(|message| CliError::Config {
                path: kv.path.clone(),
                line: *line,
                message,
            })?;
        }
        let s = &mut self.spec;
        let c = &mut self.chain;
        macro_rules! set {
            ($key:literal, $target:expr) => {
                if let Some(v) = kv.get($key)? {
                    $target = v;
                }
            };
        }
        set!("r", s.r);
        set!("iters", c.iterations);
        set!("burnin", c.burn_in);
        set!("thin", c.thin);
        set!("seed", c.seed);
        set!("zeta", s.zeta);
        set!("hyper_r1", s.hyper_r1);
        set!("hyper_r2", s.hyper_r2);
        set!("hyper_b", s.hyper_b);
        set!("alpha_v", s.alpha_v);
        set!("kappa_v", s.kappa_v);
        set!("shape_prior_alpha", s.shape_prior_alpha);
        set!("shape_prior_scale", s.shape_prior_scale);
        set!("mh_step", s.mh_step);
        set!("mh_adapt", s.mh_adapt);
        set!("ppp_b", self.ppp_b);
        if let Some(v) = kv.get::<f64>("bisquare_radius")? {
            s.bisquare_radius = Some(v);
        }
        Ok(())
    }

    /// Applies command-line flags, which win over the config file.
    pub fn apply_overrides(&mut self, o: &FitOverrides) {
        if let Some(v) = o.model {
            self.model = v;
        }
        if let Some(v) = o.basis {
            self.spec.basis = v;
        }
        if let Some(v) = o.r {
            self.spec.r = v;
        }
        if let Some(v) = o.iters {
            self.chain.iterations = v;
        }
        if let Some(v) = o.burnin {
            self.chain.burn_in = v;
        }
        if let Some(v) = o.thin {
            self.chain.thin = v;
        }
        if let Some(v) = o.seed {
            self.chain.seed = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        self.spec.validate()?;
        if self.chain.chains != 1 {
            return Err(CliError::Argument("fit runs a single chain".into()));
        }
        if self.ppp_b < wapmc_core::diagnostics::PPP_MIN_REPLICATES {
            return Err(CliError::Argument(format!(
                "ppp_b must be at least {}",
                wapmc_core::diagnostics::PPP_MIN_REPLICATES
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(text: &str) -> Result<KeyValues> {
        KeyValues::parse(Path::new("run.cfg"), text)
    }

    #[test]
    fn parses_comments_and_whitespace() {
        let k = kv("# comment\n\n r = 5 \nzeta=0.5\n").unwrap();
        assert_eq!(k.get::<usize>("r").unwrap(), Some(5));
        assert_eq!(k.get::<f64>("zeta").unwrap(), Some(0.5));
        assert_eq!(k.get::<f64>("absent").unwrap(), None);
    }

    #[test]
    fn unknown_key_names_its_line() {
        let mut s = FitSettings::default();
        let err = s.apply_file(&kv("r = 5\nitres = 10\n").unwrap()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("itres"), "{msg}");
    }

    #[test]
    fn malformed_and_repeated_lines_fail() {
        assert!(kv("r 5").is_err());
        assert!(kv("r=5\nr=6").is_err());
        let mut s = FitSettings::default();
        assert!(s.apply_file(&kv("r = five").unwrap()).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let mut s = FitSettings::default();
        s.apply_file(&kv("r = 5\nseed = 3\nbasis = bisquare\n").unwrap()).unwrap();
        s.apply_overrides(&FitOverrides {
            r: Some(7),
            ..Default::default()
        });
        assert_eq!(s.spec.r, 7);
        assert_eq!(s.chain.seed, 3);
        assert_eq!(s.spec.basis, BasisKind::Bisquare);
    }
}
