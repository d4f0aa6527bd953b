use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seedstab::checklist::SuiteConfig;
use seedstab::swa::SwaConfig;
use seedstab::textmodel::TrainConfig;
use seedstab::Variant;

use crate::error::{CliError, CliResult};

/// Environment fallback for the output directory.
pub const OUT_ENV: &str = "SEEDSTAB_OUT";
pub const DEFAULT_OUT: &str = "seedstab-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    /// Worker threads for per-seed jobs.
    pub parallelism: usize,
    pub out: Option<PathBuf>,
    /// Seed for suite subsampling and perturbation choices.
    pub suite_seed: u64,
    pub data: DataConfig,
    pub names: NamesConfig,
    pub train: TrainConfig,
    pub swa: SwaConfig,
    pub suite: SuiteConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seeds: (0..10).collect(),
            variants: Variant::ALL.to_vec(),
            parallelism: 1,
            out: None,
            suite_seed: 0,
            data: DataConfig::default(),
            names: NamesConfig::default(),
            train: TrainConfig::default(),
            swa: SwaConfig::default(),
            suite: SuiteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Synthetic,
    Tsv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    pub synthetic: SyntheticConfig,
    pub tsv: Option<TsvPaths>,
    /// Directory of `<slot>.txt` lexicon files replacing the built-in lists.
    pub lexicons: Option<PathBuf>,
    pub min_freq: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Synthetic,
            synthetic: SyntheticConfig::default(),
            tsv: None,
            lexicons: None,
            min_freq: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            n_train: 2000,
            n_dev: 400,
            n_test: 400,
        }
    }
}

/// SST-2 style inputs. `train` and `dev` are `sentence<TAB>label` files;
/// `test` has a `sentence` column and is labeled through the phrase
/// dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsvPaths {
    pub train: PathBuf,
    pub dev: PathBuf,
    pub test: PathBuf,
    pub dictionary: PathBuf,
    pub sentiment_labels: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NamesConfig {
    pub min_count: usize,
    /// Names never used as polarizing replacements.
    pub exclude: Vec<String>,
}

impl Default for NamesConfig {
    fn default() -> Self {
        NamesConfig {
            min_count: 2,
            exclude: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // relative data paths are taken relative to the config file
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(t) = &mut self.data.tsv {
            fix(&mut t.train);
            fix(&mut t.dev);
            fix(&mut t.test);
            fix(&mut t.dictionary);
            fix(&mut t.sentiment_labels);
        }
        if let Some(l) = &mut self.data.lexicons {
            fix(l);
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if self.seeds.len() < 2 {
            return bad("seeds", format!("at least two seeds are needed, got {}", self.seeds.len()));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return bad("seeds", "seeds must be distinct".into());
        }
        if self.variants.is_empty() {
            return bad("variants", "no variant selected".into());
        }
        if self.parallelism == 0 {
            return bad("parallelism", "must be at least 1".into());
        }
        if self.data.min_freq == 0 {
            return bad("data.min_freq", "must be at least 1".into());
        }
        if self.names.min_count == 0 {
            return bad("names.min_count", "must be at least 1".into());
        }
        match self.data.source {
            DataSource::Synthetic => {
                let s = &self.data.synthetic;
                if s.n_train == 0 || s.n_dev == 0 || s.n_test == 0 {
                    return bad("data.synthetic", "split sizes must be positive".into());
                }
            }
            DataSource::Tsv => {
                if self.data.tsv.is_none() {
                    return bad("data.tsv", "required when data.source = \"tsv\"".into());
                }
            }
        }
        self.train.validate().map_err(|e| CliError::Config(format!("train: {e}")))?;
        if self.variants.contains(&Variant::Swa) {
            self.swa
                .validate(self.train.epochs)
                .map_err(|e| CliError::Config(format!("swa: {e}")))?;
        }
        self.suite.validate().map_err(|e| CliError::Config(format!("suite: {e}")))?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// `--out`, then the config's `out`, then `$SEEDSTAB_OUT`, then the default.
pub fn resolve_out_dir(flag: Option<&Path>, config: &RunConfig, env: Option<&str>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.out.clone())
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// `"0,1,2"`, `"0-9"` or a mix such as `"0-3,7"`.
pub fn parse_seed_list(s: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Config(format!("--seeds: cannot parse '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// `vanilla`, `swa` or `both`.
pub fn parse_variants(s: &str) -> CliResult<Vec<Variant>> {
    match s {
        "both" => Ok(Variant::ALL.to_vec()),
        other => other
            .parse::<Variant>()
            .map(|v| vec![v])
            .map_err(|_| CliError::Config(format!("--variant: expected vanilla, swa or both, got '{s}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.seeds, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let cfg: RunConfig = toml::from_str("seeds = [1, 2]\n[train]\nepochs = 4\n").unwrap();
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.train.epochs, 4);
        assert_eq!(cfg.train.batch_size, TrainConfig::default().batch_size);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(toml::from_str::<RunConfig>("seedz = [1]").is_err());
        assert!(toml::from_str::<RunConfig>("[train]\nepoch = 3").is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let cfg = RunConfig {
            seeds: vec![1],
            ..RunConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("seeds"));
        let mut cfg = RunConfig::default();
        cfg.swa.cutoff_epoch = 9;
        assert!(cfg.validate().unwrap_err().to_string().contains("swa"));
        let mut cfg = RunConfig::default();
        cfg.data.source = DataSource::Tsv;
        assert!(cfg.validate().unwrap_err().to_string().contains("data.tsv"));
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seed_list("0-3,7").unwrap(), vec![0, 1, 2, 3, 7]);
        assert_eq!(parse_seed_list("5").unwrap(), vec![5]);
        assert!(parse_seed_list("3-1").is_err());
        assert!(parse_seed_list("x").is_err());
        assert!(parse_seed_list("").is_err());
    }

    #[test]
    fn variants() {
        assert_eq!(parse_variants("both").unwrap(), Variant::ALL.to_vec());
        assert_eq!(parse_variants("swa").unwrap(), vec![Variant::Swa]);
        assert!(parse_variants("all").is_err());
    }

    #[test]
    fn out_dir_precedence() {
        let mut cfg = RunConfig::default();
        assert_eq!(resolve_out_dir(None, &cfg, None), PathBuf::from(DEFAULT_OUT));
        assert_eq!(resolve_out_dir(None, &cfg, Some("env")), PathBuf::from("env"));
        cfg.out = Some("cfg".into());
        assert_eq!(resolve_out_dir(None, &cfg, Some("env")), PathBuf::from("cfg"));
        assert_eq!(resolve_out_dir(Some(Path::new("flag")), &cfg, Some("env")), PathBuf::from("flag"));
    }
}
