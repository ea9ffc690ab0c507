//! Flag/config-file merging. Flags override values from `--config`.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::failure::{CliResult, Failure};

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file of `key = value` settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// System model JSON.
    #[arg(long, global = true)]
    pub system: Option<PathBuf>,
    /// Hourly `hour,load,wind` CSV.
    #[arg(long, global = true)]
    pub timeseries: Option<PathBuf>,
    /// Run directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for LP solves (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Largest number of investment candidates to enumerate.
    #[arg(long, global = true)]
    pub enum_limit: Option<usize>,
}

/// Keys accepted in the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub system: Option<PathBuf>,
    pub timeseries: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub enum_limit: Option<usize>,
    pub k: Option<usize>,
    pub rd_counts: Option<Vec<usize>>,
    pub n0: Option<usize>,
    pub n_loop: Option<usize>,
    pub n_step: Option<usize>,
    pub n_bad: Option<usize>,
    pub decision: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        // Relative paths in the file are relative to the file itself.
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.system, &mut cfg.timeseries, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Resolved settings shared by all commands.
#[derive(Debug, Clone)]
pub struct Settings {
    pub system: Option<PathBuf>,
    pub timeseries: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub enum_limit: usize,
    pub file: FileConfig,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        if args.jobs.or(file.jobs) == Some(0) {
            return Err(Failure::validation("--jobs must be positive"));
        }
        Ok(Self {
            system: args.system.clone().or_else(|| file.system.clone()),
            timeseries: args.timeseries.clone().or_else(|| file.timeseries.clone()),
            out: args
                .out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from("run")),
            jobs: args.jobs.or(file.jobs),
            enum_limit: args
                .enum_limit
                .or(file.enum_limit)
                .unwrap_or(rdagg::DEFAULT_ENUM_LIMIT),
            file,
        })
    }

    pub fn system_path(&self) -> CliResult<&Path> {
        self.system
            .as_deref()
            .ok_or_else(|| Failure::validation("missing --system (or `system` in the config file)"))
    }

    pub fn timeseries_path(&self) -> CliResult<&Path> {
        self.timeseries.as_deref().ok_or_else(|| {
            Failure::validation("missing --timeseries (or `timeseries` in the config file)")
        })
    }
}

/// Flag value if given, else the config-file value, else an error naming the flag.
pub fn required<T: Clone>(flag: Option<T>, file: &Option<T>, name: &str) -> CliResult<T> {
    flag.or_else(|| file.clone()).ok_or_else(|| {
        Failure::validation(format!(
            "missing --{} (or `{}` in the config file)",
            name,
            name.replace('-', "_")
        ))
    })
}
