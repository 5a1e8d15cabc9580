//! Flag / config-file / default resolution.
//!
//! The config file is flat `key = value` (parsed as TOML, so strings need
//! quotes). Keys are the long flag names with `_` for `-`.

use std::path::{Path, PathBuf};

use meanfield::branch_tracer::ScanWindow;
use meanfield::ShootingConfig;
use serde::Deserialize;

use crate::args::{Format, OutputFlags, ScanFlags, ShootingFlags};
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub lambda: Option<f64>,
    pub s_root: Option<f64>,
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub ds: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub d_lambda: Option<f64>,
    pub r_start: Option<f64>,
    pub r_max: Option<f64>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub slope_window: Option<f64>,
    pub n_theta: Option<usize>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {}", path.display(), e.message())))
    }

    pub fn format(&self) -> Result<Option<Format>, CliError> {
        use clap::ValueEnum;
        self.format
            .as_deref()
            .map(|f| Format::from_str(f, true).map_err(|_| CliError::Usage(format!("unknown format {f:?}"))))
            .transpose()
    }
}

pub fn required<T>(name: &str, flag: Option<T>, file: Option<T>) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::Usage(format!("--{} is required", name.replace('_', "-"))))
}

pub fn shooting(flags: &ShootingFlags, file: &ConfigFile, base: ShootingConfig) -> ShootingConfig {
    ShootingConfig {
        r_start: flags.r_start.or(file.r_start).unwrap_or(base.r_start),
        r_max: flags.r_max.or(file.r_max).unwrap_or(base.r_max),
        abs_tol: flags.abs_tol.or(file.abs_tol).unwrap_or(base.abs_tol),
        rel_tol: flags.rel_tol.or(file.rel_tol).unwrap_or(base.rel_tol),
        slope_window: flags.slope_window.or(file.slope_window).unwrap_or(base.slope_window),
    }
}

pub fn window(flags: &ScanFlags, file: &ConfigFile) -> ScanWindow {
    let base = ScanWindow::default();
    ScanWindow {
        s_min: flags.s_min.or(file.s_min).unwrap_or(base.s_min),
        s_max: flags.s_max.or(file.s_max).unwrap_or(base.s_max),
        ds: flags.ds.or(file.ds).unwrap_or(base.ds),
    }
}

pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
}

pub fn output(flags: &OutputFlags, file: &ConfigFile, default: Format, allowed: &[Format]) -> Result<Output, CliError> {
    let format = flags.format.or(file.format()?).unwrap_or(default);
    if !allowed.contains(&format) {
        return Err(CliError::Usage(format!("format {format:?} is not available for this command")));
    }
    Ok(Output {
        path: flags.out.clone().or_else(|| file.out.clone()),
        format,
    })
}
