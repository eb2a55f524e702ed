//! Flat INI-style run configuration: `[section]` headers over `key = value`
//! lines, `#`/`;` comments, no nesting.

use anyhow::{anyhow, bail, Context, Result};
use molfuse_core::bench::SeparationMode;
use molfuse_core::fusion::FusionMode;
use molfuse_core::iva::{InitMode, IvaOptions};
use molfuse_core::regress::CvConfig;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Parsed key-value view of a config file, with section-qualified keys.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
    /// `[inputs]` entries in file order.
    inputs: Vec<(String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut section = String::new();
        let mut values = BTreeMap::new();
        let mut inputs = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| anyhow!("config line {line_no}: unterminated section header"))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {line_no}: expected key = value"))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if section == "inputs" && key != "smiles" && key != "xyz" {
                if inputs.iter().any(|(name, _)| name == &key) {
                    bail!("config line {line_no}: duplicate input table '{key}'");
                }
                inputs.push((key, value));
            } else {
                let qualified = if section.is_empty() {
                    key
                } else {
                    format!("{section}.{key}")
                };
                if values.insert(qualified.clone(), value).is_some() {
                    bail!("config line {line_no}: duplicate key '{qualified}'");
                }
            }
        }
        Ok(RawConfig { values, inputs })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("config key '{key}': cannot parse '{s}': {e}")),
        }
    }

    fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse::<T>()
                        .map_err(|e| anyhow!("config key '{key}': cannot parse '{item}': {e}"))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

/// Synthetic-benchmark settings from `[bench]`.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub seeds: usize,
    pub k: usize,
    pub p: usize,
    pub n: usize,
    pub rho: f64,
    pub cond_bound: f64,
    pub modes: Vec<SeparationMode>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seeds: 50,
            k: 3,
            p: 5,
            n: 5000,
            rho: 0.5,
            cond_bound: 10.0,
            modes: vec![SeparationMode::Iva, SeparationMode::Ica],
        }
    }
}

/// The effective configuration of one command invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub config_text: String,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub inputs: Vec<(String, PathBuf)>,
    pub smiles: Option<PathBuf>,
    pub xyz: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
    pub labels_property: Option<String>,
    pub fusion_mode: FusionMode,
    pub p: usize,
    pub whiten: bool,
    pub iva_step_size: f64,
    pub iva_max_iters: usize,
    pub iva_tol: f64,
    pub iva_init: InitMode,
    pub iva_restarts: usize,
    pub cv_outer_folds: usize,
    pub cv_repeats: usize,
    pub cv_sigma_multipliers: Vec<f64>,
    pub cv_lambda_grid: Vec<f64>,
    pub sweep_k: usize,
    pub curve_sizes: Vec<usize>,
    pub bench: BenchConfig,
}

/// Command-line overrides for the five global flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
        let config_text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::from_text(&config_text, overrides)
    }

    pub fn from_text(config_text: &str, overrides: &Overrides) -> Result<RunConfig> {
        let raw = RawConfig::parse(config_text)?;

        let seed = overrides
            .seed
            .or(raw.parse_as::<u64>("run.seed")?)
            .unwrap_or(0);
        let jobs = overrides
            .jobs
            .or(raw.parse_as::<usize>("run.jobs")?)
            .unwrap_or(1);
        let out = overrides
            .out
            .clone()
            .or_else(|| raw.get("run.out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));

        let mode_text = overrides
            .mode
            .clone()
            .or_else(|| raw.get("fusion.mode").map(str::to_string))
            .unwrap_or_else(|| "regular".to_string());
        let fusion_mode = FusionMode::parse(&mode_text)
            .ok_or_else(|| anyhow!("unknown fusion mode '{mode_text}' (regular | ica | iva | single:<name>)"))?;

        let init = match raw.get("iva.init").unwrap_or("identity") {
            "identity" => InitMode::Identity,
            "perturb" | "seeded-perturbation" => InitMode::SeededPerturbation,
            other => bail!("config key 'iva.init': unknown mode '{other}'"),
        };

        let modes = match raw.get("bench.modes") {
            None => BenchConfig::default().modes,
            Some(s) => s
                .split(',')
                .map(|m| match m.trim() {
                    "iva" => Ok(SeparationMode::Iva),
                    "ica" => Ok(SeparationMode::Ica),
                    other => Err(anyhow!("config key 'bench.modes': unknown mode '{other}'")),
                })
                .collect::<Result<Vec<_>>>()?,
        };

        let defaults_cv = CvConfig::default();
        let defaults_iva = IvaOptions::default();
        let defaults_bench = BenchConfig::default();

        Ok(RunConfig {
            config_text: config_text.to_string(),
            seed,
            jobs,
            out,
            inputs: raw
                .inputs
                .iter()
                .map(|(k, v)| (k.clone(), PathBuf::from(v)))
                .collect(),
            smiles: raw.get("inputs.smiles").map(PathBuf::from),
            xyz: raw.get("inputs.xyz").map(PathBuf::from),
            labels_path: raw.get("labels.path").map(PathBuf::from),
            labels_property: raw.get("labels.property").map(str::to_string),
            fusion_mode,
            p: raw.parse_as::<usize>("fusion.p")?.unwrap_or(10),
            whiten: raw.parse_as::<bool>("fusion.whiten")?.unwrap_or(true),
            iva_step_size: raw
                .parse_as::<f64>("iva.step_size")?
                .unwrap_or(defaults_iva.step_size),
            iva_max_iters: raw
                .parse_as::<usize>("iva.max_iters")?
                .unwrap_or(defaults_iva.max_iters),
            iva_tol: raw.parse_as::<f64>("iva.tol")?.unwrap_or(defaults_iva.tol),
            iva_init: init,
            iva_restarts: raw
                .parse_as::<usize>("iva.restarts")?
                .unwrap_or(defaults_iva.restarts),
            cv_outer_folds: raw
                .parse_as::<usize>("cv.outer_folds")?
                .unwrap_or(defaults_cv.outer_folds),
            cv_repeats: raw
                .parse_as::<usize>("cv.repeats")?
                .unwrap_or(defaults_cv.repeats),
            cv_sigma_multipliers: raw
                .parse_list::<f64>("cv.sigma_multipliers")?
                .unwrap_or(defaults_cv.sigma_multipliers),
            cv_lambda_grid: raw
                .parse_list::<f64>("cv.lambda_grid")?
                .unwrap_or(defaults_cv.lambda_grid),
            sweep_k: raw.parse_as::<usize>("sweep.k")?.unwrap_or(2),
            curve_sizes: raw.parse_list::<usize>("curve.sizes")?.unwrap_or_default(),
            bench: BenchConfig {
                seeds: raw
                    .parse_as::<usize>("bench.seeds")?
                    .unwrap_or(defaults_bench.seeds),
                k: raw.parse_as::<usize>("bench.k")?.unwrap_or(defaults_bench.k),
                p: raw.parse_as::<usize>("bench.p")?.unwrap_or(defaults_bench.p),
                n: raw.parse_as::<usize>("bench.n")?.unwrap_or(defaults_bench.n),
                rho: raw
                    .parse_as::<f64>("bench.rho")?
                    .unwrap_or(defaults_bench.rho),
                cond_bound: raw
                    .parse_as::<f64>("bench.cond_bound")?
                    .unwrap_or(defaults_bench.cond_bound),
                modes,
            },
        })
    }

    pub fn iva_options(&self) -> IvaOptions {
        IvaOptions {
            step_size: self.iva_step_size,
            max_iters: self.iva_max_iters,
            tol: self.iva_tol,
            seed: self.seed,
            init: self.iva_init,
            restarts: self.iva_restarts,
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            outer_folds: self.cv_outer_folds,
            repeats: self.cv_repeats,
            sigma_multipliers: self.cv_sigma_multipliers.clone(),
            lambda_grid: self.cv_lambda_grid.clone(),
            seed: self.seed,
        }
    }

    /// Verify that every referenced input file exists.
    pub fn check_paths(&self, need_tables: bool, need_labels: bool) -> Result<()> {
        if need_tables {
            if self.inputs.is_empty() {
                bail!("config section [inputs] has no feature tables");
            }
            for (name, path) in &self.inputs {
                if !path.is_file() {
                    bail!("config [inputs] {name}: file not found: {}", path.display());
                }
            }
        }
        if need_labels {
            let path = self
                .labels_path
                .as_ref()
                .ok_or_else(|| anyhow!("config [labels] path is required"))?;
            if !path.is_file() {
                bail!("config [labels] path: file not found: {}", path.display());
            }
            if self.labels_property.is_none() {
                bail!("config [labels] property is required");
            }
        }
        Ok(())
    }
}
