//! Reproducible run and study configuration.
//!
//! Configs are flat `key = value` text (comments with `#`, blank lines
//! allowed); every key is also overridable by a command-line flag of the
//! same name. A canonical manifest string of the fully resolved config is
//! hashed (FNV-1a) into every data file header, so artifacts are traceable
//! to an exact configuration and identical configs produce byte-identical
//! outputs.

use crate::error::{Error, Result};
use crate::field::Grid1D;
use crate::initdata::{GaussSpec, Profile};
use crate::kernels::KernelBackend;
use crate::dynamics::{SolverOptions, TimeStep};
use std::path::{Path, PathBuf};

/// Snapshot serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Binary,
}

impl std::str::FromStr for SnapshotFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "bin" => Ok(Self::Binary),
            other => Err(Error::Config {
                key: "snapshot-format".into(),
                message: format!("unknown format '{other}' (expected csv|bin)"),
            }),
        }
    }
}

impl std::fmt::Display for SnapshotFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Binary => "bin",
        })
    }
}

/// Fully resolved configuration of one solver run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Domain half-length; the grid covers `[-L, L)`.
    pub domain_l: f64,
    pub grid_n: usize,
    pub t_end: f64,
    /// Fixed step; `None` selects CFL-driven stepping.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub dt_max: f64,
    pub profile_name: String,
    pub peakons_a: Vec<(f64, f64)>,
    pub peakons_c: Vec<(f64, f64)>,
    pub bumps_u: Vec<GaussSpec>,
    pub bumps_w: Vec<GaussSpec>,
    pub bump_count: usize,
    pub moll_n: u32,
    pub epsilon: f64,
    pub backend: KernelBackend,
    pub stride: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub dealias: bool,
    pub blowup_cap: f64,
    pub cfl_strict: bool,
    pub snapshot_times: Vec<f64>,
    pub snapshot_format: SnapshotFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain_l: 20.0,
            grid_n: 1024,
            t_end: 5.0,
            dt: None,
            cfl: 0.3,
            dt_max: 0.02,
            profile_name: "smoothed-peakon".into(),
            peakons_a: vec![(1.0, -6.25)],
            peakons_c: vec![(1.0, 6.25)],
            bumps_u: vec![GaussSpec {
                amplitude: 1.0,
                center: -2.0,
                sigma: 1.0,
            }],
            bumps_w: vec![GaussSpec {
                amplitude: 1.0,
                center: 2.0,
                sigma: 1.0,
            }],
            bump_count: 3,
            moll_n: 1,
            epsilon: 1.0,
            backend: KernelBackend::FourierSymbol,
            stride: 10,
            seed: 42,
            out: default_out_root().join("run"),
            dealias: false,
            blowup_cap: 1e6,
            cfl_strict: false,
            snapshot_times: Vec::new(),
            snapshot_format: SnapshotFormat::Csv,
        }
    }
}

/// Output root: `$TRICAM_OUT` if set, else `./tricam-out`.
pub fn default_out_root() -> PathBuf {
    std::env::var_os("TRICAM_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("tricam-out"))
}

fn bad_key(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| bad_key(key, format!("cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(bad_key(key, format!("cannot parse '{other}' as a flag"))),
    }
}

/// Parse `amp@pos[,amp@pos...]` pairs.
fn parse_pairs(key: &str, value: &str) -> Result<Vec<(f64, f64)>> {
    value
        .split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split('@').collect();
            if parts.len() != 2 {
                return Err(bad_key(key, format!("expected amp@pos, got '{item}'")));
            }
            Ok((parse_num(key, parts[0])?, parse_num(key, parts[1])?))
        })
        .collect()
}

/// Parse `amp@center@sigma[,...]` triples.
fn parse_bumps(key: &str, value: &str) -> Result<Vec<GaussSpec>> {
    value
        .split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split('@').collect();
            if parts.len() != 3 {
                return Err(bad_key(
                    key,
                    format!("expected amp@center@sigma, got '{item}'"),
                ));
            }
            Ok(GaussSpec {
                amplitude: parse_num(key, parts[0])?,
                center: parse_num(key, parts[1])?,
                sigma: parse_num(key, parts[2])?,
            })
        })
        .collect()
}

impl RunConfig {
    /// Apply one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "domain-l" => self.domain_l = parse_num(key, value)?,
            "grid-n" => self.grid_n = parse_num(key, value)?,
            "t-end" => self.t_end = parse_num(key, value)?,
            "dt" => self.dt = Some(parse_num(key, value)?),
            "cfl" => self.cfl = parse_num(key, value)?,
            "dt-max" => self.dt_max = parse_num(key, value)?,
            "profile" => self.profile_name = value.trim().to_string(),
            "peakons-a" => self.peakons_a = parse_pairs(key, value)?,
            "peakons-c" => self.peakons_c = parse_pairs(key, value)?,
            "bumps-u" => self.bumps_u = parse_bumps(key, value)?,
            "bumps-w" => self.bumps_w = parse_bumps(key, value)?,
            "bump-count" => self.bump_count = parse_num(key, value)?,
            "moll-n" => self.moll_n = parse_num(key, value)?,
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "backend" => self.backend = value.trim().parse()?,
            "stride" => self.stride = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "dealias" => self.dealias = parse_bool(key, value)?,
            "blowup-cap" => self.blowup_cap = parse_num(key, value)?,
            "cfl-strict" => self.cfl_strict = parse_bool(key, value)?,
            "snapshot-times" => {
                self.snapshot_times = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_num(key, s))
                    .collect::<Result<Vec<f64>>>()?;
            }
            "snapshot-format" => self.snapshot_format = value.trim().parse()?,
            other => return Err(bad_key(other, "unknown configuration key")),
        }
        Ok(())
    }

    /// Validate everything before any allocation happens.
    pub fn validate(&self) -> Result<()> {
        if !(self.domain_l > 0.0) || !self.domain_l.is_finite() {
            return Err(bad_key("domain-l", "must be positive and finite"));
        }
        if self.grid_n < crate::field::MIN_GRID_POINTS {
            return Err(bad_key(
                "grid-n",
                format!("must be at least {}", crate::field::MIN_GRID_POINTS),
            ));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(bad_key("t-end", "must be nonnegative and finite"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(bad_key("dt", "must be positive and finite"));
            }
        }
        if !(self.cfl > 0.0) || !self.cfl.is_finite() {
            return Err(bad_key("cfl", "must be positive and finite"));
        }
        if !(self.dt_max > 0.0) {
            return Err(bad_key("dt-max", "must be positive"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(bad_key("epsilon", "must be positive and finite"));
        }
        if self.stride == 0 {
            return Err(bad_key("stride", "must be at least 1"));
        }
        if !(self.blowup_cap > 0.0) {
            return Err(bad_key("blowup-cap", "must be positive"));
        }
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_end).contains(&t) {
                return Err(bad_key(
                    "snapshot-times",
                    format!("time {t} outside [0, {}]", self.t_end),
                ));
            }
        }
        self.profile()?;
        Ok(())
    }

    /// The configured grid.
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::symmetric(self.domain_l, self.grid_n)
    }

    /// The configured initial-data profile.
    pub fn profile(&self) -> Result<Profile> {
        match self.profile_name.as_str() {
            "zero" => Ok(Profile::Zero),
            "gaussian-bump" => {
                let u = *self
                    .bumps_u
                    .first()
                    .ok_or_else(|| bad_key("bumps-u", "gaussian-bump needs one bump"))?;
                let w = *self
                    .bumps_w
                    .first()
                    .ok_or_else(|| bad_key("bumps-w", "gaussian-bump needs one bump"))?;
                Ok(Profile::GaussianBump { u, w })
            }
            "two-bump" => {
                let get = |v: &[GaussSpec], key: &str| -> Result<[GaussSpec; 2]> {
                    if v.len() != 2 {
                        return Err(bad_key(key, "two-bump needs exactly two bumps"));
                    }
                    Ok([v[0], v[1]])
                };
                Ok(Profile::TwoBump {
                    u: get(&self.bumps_u, "bumps-u")?,
                    w: get(&self.bumps_w, "bumps-w")?,
                })
            }
            "smoothed-peakon" => Ok(Profile::SmoothedPeakon {
                peaks_a: self.peakons_a.clone(),
                peaks_c: self.peakons_c.clone(),
                moll: self.moll_n,
            }),
            "random-bumps" => Ok(Profile::RandomBumps {
                count: self.bump_count,
                seed: self.seed,
            }),
            other => Err(bad_key("profile", format!("unknown profile '{other}'"))),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            backend: self.backend,
            cfl: self.cfl,
            cfl_strict: self.cfl_strict,
            dt_max: self.dt_max,
            blowup_cap: self.blowup_cap,
            dealias: self.dealias,
            stride: self.stride,
        }
    }

    pub fn time_step(&self) -> TimeStep {
        match self.dt {
            Some(dt) => TimeStep::Fixed(dt),
            None => TimeStep::Cfl,
        }
    }

    /// Canonical manifest: every key in fixed order, fully resolved.
    pub fn manifest(&self) -> String {
        let pairs = |v: &[(f64, f64)]| {
            v.iter()
                .map(|(a, p)| format!("{a}@{p}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let bumps = |v: &[GaussSpec]| {
            v.iter()
                .map(|b| format!("{}@{}@{}", b.amplitude, b.center, b.sigma))
                .collect::<Vec<_>>()
                .join(",")
        };
        let times = self
            .snapshot_times
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "backend = {}\nblowup-cap = {}\nbump-count = {}\nbumps-u = {}\nbumps-w = {}\n\
             cfl = {}\ncfl-strict = {}\ndealias = {}\ndomain-l = {}\ndt = {}\ndt-max = {}\n\
             epsilon = {}\ngrid-n = {}\nmoll-n = {}\npeakons-a = {}\npeakons-c = {}\n\
             profile = {}\nseed = {}\nsnapshot-format = {}\nsnapshot-times = {}\n\
             stride = {}\nt-end = {}\n",
            self.backend,
            self.blowup_cap,
            self.bump_count,
            bumps(&self.bumps_u),
            bumps(&self.bumps_w),
            self.cfl,
            self.cfl_strict,
            self.dealias,
            self.domain_l,
            self.dt.map_or("cfl".to_string(), |d| d.to_string()),
            self.dt_max,
            self.epsilon,
            self.grid_n,
            self.moll_n,
            pairs(&self.peakons_a),
            pairs(&self.peakons_c),
            self.profile_name,
            self.seed,
            self.snapshot_format,
            times,
            self.stride,
            self.t_end,
        )
    }

    /// FNV-1a hash of the canonical manifest.
    pub fn manifest_hash(&self) -> u64 {
        fnv1a(self.manifest().as_bytes())
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Sweep axis of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    MollificationIndex,
    GridResolution,
    TimeStep,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mollification-index" | "moll" => Ok(Self::MollificationIndex),
            "grid-resolution" | "grid" => Ok(Self::GridResolution),
            "time-step" | "dt" => Ok(Self::TimeStep),
            other => Err(Error::Config {
                key: "sweep".into(),
                message: format!(
                    "unknown sweep axis '{other}' (expected mollification-index|grid-resolution|time-step)"
                ),
            }),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MollificationIndex => "mollification-index",
            Self::GridResolution => "grid-resolution",
            Self::TimeStep => "time-step",
        })
    }
}

/// A sweep over one axis of a base configuration.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub base: RunConfig,
    pub sweep: SweepAxis,
    pub values: Vec<f64>,
    pub parallel: bool,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.values.len() < 3 {
            return Err(bad_key(
                "values",
                "need at least 3 sweep values for rate estimation",
            ));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(bad_key("values", "sweep values must be strictly increasing"));
        }
        match self.sweep {
            SweepAxis::MollificationIndex => {
                for &v in &self.values {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(bad_key(
                            "values",
                            "mollification indices must be integers >= 1",
                        ));
                    }
                }
                if self.base.profile_name != "smoothed-peakon" {
                    return Err(bad_key(
                        "sweep",
                        "mollification-index sweeps need the smoothed-peakon profile",
                    ));
                }
            }
            SweepAxis::GridResolution => {
                let max = *self.values.last().unwrap();
                for &v in &self.values {
                    if v < crate::field::MIN_GRID_POINTS as f64 || v.fract() != 0.0 {
                        return Err(bad_key("values", "grid sizes must be integers >= 16"));
                    }
                    if !((2.0 * max) as usize).is_multiple_of(v as usize) {
                        return Err(bad_key(
                            "values",
                            "each grid size must divide twice the largest (for the reference comparison)",
                        ));
                    }
                }
            }
            SweepAxis::TimeStep => {
                for &v in &self.values {
                    if !(v > 0.0) {
                        return Err(bad_key("values", "time steps must be positive"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Derive the member configuration for one sweep value.
    pub fn member(&self, value: f64) -> RunConfig {
        let mut cfg = self.base.clone();
        match self.sweep {
            SweepAxis::MollificationIndex => cfg.moll_n = value as u32,
            SweepAxis::GridResolution => cfg.grid_n = value as usize,
            SweepAxis::TimeStep => cfg.dt = Some(value),
        }
        cfg.out = self.base.out.join(format!("sweep-{value}"));
        cfg
    }
}

/// Read a flat `key = value` config file; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("expected 'key = value', got '{line}'"),
            });
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Study-specific keys accepted in config files (handled by the CLI layer,
/// not by [`RunConfig::apply`]).
pub const STUDY_KEYS: [&str; 3] = ["sweep", "values", "parallel"];
