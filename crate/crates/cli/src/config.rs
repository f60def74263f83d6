//! Reconstruction config files and sweep grids.
//!
//! A config is a list of `key = value` lines; blank lines and lines starting
//! with `#` are ignored. Recognized keys:
//!
//! ```text
//! prior          = tikhonov | soft_threshold | haar | tv | external
//! alpha          = 1
//! beta           = 1
//! lambda         = 0.012            (default depends on the prior)
//! iterations     = 3
//! tv_iterations  = 50
//! tv_tolerance   = 1e-6
//! consistency    = 1                (scalar weight in [0, 1])
//! consistency_map = path/to/stem    (per-pixel weights, real part)
//! schedule       = a,b,l; a,b,l; ...  (one triple per iteration)
//! record_history = false
//! command        = ./denoise --flag (external prior)
//! timeout        = 60               (seconds, external prior)
//! ```
//!
//! Relative paths resolve against the directory of the config file. A sweep
//! grid uses the same keys with comma-separated value lists; runs are the
//! Cartesian product in file order, the last key varying fastest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use pcsmri::container::{parse_key_values, read_image};
use pcsmri::prior::{DEFAULT_EXTERNAL_TIMEOUT, DEFAULT_TV_ITERATIONS, DEFAULT_TV_TOLERANCE};
use pcsmri::{ConsistencyWeight, ExternalDenoiser, PriorSpec, RealImage, SolverConfig, StageParams};

use crate::error::{CliError, CliResult};

pub const KEYS: [&str; 13] = [
    "prior",
    "alpha",
    "beta",
    "lambda",
    "iterations",
    "tv_iterations",
    "tv_tolerance",
    "consistency",
    "consistency_map",
    "schedule",
    "record_history",
    "command",
    "timeout",
];

pub fn read_pairs(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_key_values(&text, path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorName {
    Tikhonov,
    SoftThreshold,
    Haar,
    Tv,
    External,
}

impl PriorName {
    pub fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "tikhonov" => PriorName::Tikhonov,
            "soft_threshold" | "soft_threshold_image" => PriorName::SoftThreshold,
            "haar" | "soft_threshold_haar" => PriorName::Haar,
            "tv" | "total_variation" => PriorName::Tv,
            "external" => PriorName::External,
            other => return Err(CliError::config(format!("unknown prior `{other}`"))),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PriorName::Tikhonov => "tikhonov",
            PriorName::SoftThreshold => "soft_threshold",
            PriorName::Haar => "haar",
            PriorName::Tv => "tv",
            PriorName::External => "external",
        }
    }

    pub fn default_lambda(self) -> f64 {
        match self {
            PriorName::Tv => 0.012,
            _ => 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Consistency {
    Scalar(f64),
    Map(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconConfig {
    pub prior: PriorName,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub tv_iterations: usize,
    pub tv_tolerance: f64,
    pub consistency: Consistency,
    pub schedule: Option<Vec<StageParams>>,
    pub record_history: bool,
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            prior: PriorName::Tv,
            alpha: 1.0,
            beta: 1.0,
            lambda: PriorName::Tv.default_lambda(),
            iterations: SolverConfig::DEFAULT_ITERATIONS,
            tv_iterations: DEFAULT_TV_ITERATIONS,
            tv_tolerance: DEFAULT_TV_TOLERANCE,
            consistency: Consistency::Scalar(1.0),
            schedule: None,
            record_history: false,
            command: Vec::new(),
            timeout: DEFAULT_EXTERNAL_TIMEOUT,
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::config(format!("bad value `{value}` for `{key}`")))
}

fn parse_schedule(value: &str) -> CliResult<Vec<StageParams>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|triple| {
            let parts: Vec<&str> = triple.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(CliError::config(format!(
                    "schedule entry `{triple}` is not `alpha,beta,lambda`"
                )));
            }
            let v: Vec<f64> = parts.iter().map(|p| number("schedule", p)).collect::<CliResult<_>>()?;
            Ok(StageParams::new(v[0], v[1], v[2])?)
        })
        .collect()
}

impl ReconConfig {
    /// Builds a config from ordered pairs; later pairs override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)], base_dir: &Path) -> CliResult<Self> {
        let mut cfg = Self::default();
        if let Some((_, v)) = pairs.iter().rev().find(|(k, _)| k == "prior") {
            cfg.prior = PriorName::parse(v)?;
            cfg.lambda = cfg.prior.default_lambda();
        }
        for (key, value) in pairs {
            cfg.set(key, value, base_dir)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_pairs(&read_pairs(path)?, base)
    }

    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> CliResult<()> {
        match key {
            "prior" => self.prior = PriorName::parse(value)?,
            "alpha" => self.alpha = number(key, value)?,
            "beta" => self.beta = number(key, value)?,
            "lambda" => self.lambda = number(key, value)?,
            "iterations" => self.iterations = number(key, value)?,
            "tv_iterations" => self.tv_iterations = number(key, value)?,
            "tv_tolerance" => self.tv_tolerance = number(key, value)?,
            "consistency" => self.consistency = Consistency::Scalar(number(key, value)?),
            "consistency_map" => self.consistency = Consistency::Map(base_dir.join(value)),
            "schedule" => self.schedule = Some(parse_schedule(value)?),
            "record_history" => self.record_history = number(key, value)?,
            "command" => self.command = value.split_whitespace().map(String::from).collect(),
            "timeout" => {
                let secs: f64 = number(key, value)?;
                if !(secs.is_finite() && secs > 0.0) {
                    return Err(CliError::config(format!("timeout must be positive, got {value}")));
                }
                self.timeout = Duration::from_secs_f64(secs);
            }
            other => return Err(CliError::config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn prior_spec(&self, exchange_dir: &Path) -> PriorSpec {
        match self.prior {
            PriorName::Tikhonov => PriorSpec::Tikhonov,
            PriorName::SoftThreshold => PriorSpec::SoftThresholdImage,
            PriorName::Haar => PriorSpec::SoftThresholdHaar,
            PriorName::Tv => PriorSpec::TotalVariation {
                max_iterations: self.tv_iterations,
                tolerance: self.tv_tolerance,
            },
            PriorName::External => {
                let mut ext = ExternalDenoiser::new(self.command.clone(), exchange_dir);
                ext.timeout = self.timeout;
                PriorSpec::External(ext)
            }
        }
    }

    pub fn solver_config(&self, exchange_dir: &Path) -> CliResult<SolverConfig> {
        let params = StageParams::new(self.alpha, self.beta, self.lambda)?;
        let mut cfg = SolverConfig::new(params, self.iterations, self.prior_spec(exchange_dir))?
            .with_history(self.record_history);
        let weight = match &self.consistency {
            Consistency::Scalar(v) => ConsistencyWeight::Scalar(*v),
            Consistency::Map(path) => {
                let img = read_image(path)?;
                let data = img.data().iter().map(|v| v.re).collect();
                ConsistencyWeight::Map(RealImage::from_vec(img.height(), img.width(), data)?)
            }
        };
        cfg = cfg.with_consistency(weight)?;
        if let Some(schedule) = &self.schedule {
            cfg = cfg.with_schedule(schedule.clone())?;
        }
        Ok(cfg)
    }

    /// The resolved configuration in file syntax.
    pub fn render(&self) -> String {
        let mut out = format!(
            "prior = {}\nalpha = {}\nbeta = {}\nlambda = {}\niterations = {}\n",
            self.prior.as_str(),
            self.alpha,
            self.beta,
            self.lambda,
            self.iterations
        );
        if self.prior == PriorName::Tv {
            out += &format!(
                "tv_iterations = {}\ntv_tolerance = {:e}\n",
                self.tv_iterations, self.tv_tolerance
            );
        }
        match &self.consistency {
            Consistency::Scalar(v) => out += &format!("consistency = {v}\n"),
            Consistency::Map(p) => out += &format!("consistency_map = {}\n", p.display()),
        }
        if let Some(s) = &self.schedule {
            let triples: Vec<String> = s
                .iter()
                .map(|p| format!("{},{},{}", p.alpha, p.beta, p.lambda))
                .collect();
            out += &format!("schedule = {}\n", triples.join("; "));
        }
        out += &format!("record_history = {}\n", self.record_history);
        if self.prior == PriorName::External {
            out += &format!(
                "command = {}\ntimeout = {}\n",
                self.command.join(" "),
                self.timeout.as_secs_f64()
            );
        }
        out
    }
}

/// Grid file: each key with one or more comma-separated values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axes: Vec<(String, Vec<String>)>,
}

impl Grid {
    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let mut axes: Vec<(String, Vec<String>)> = Vec::new();
        for (key, value) in parse_key_values(text, path)? {
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::config(format!("unknown grid key `{key}`")));
            }
            if axes.iter().any(|(k, _)| *k == key) {
                return Err(CliError::config(format!("grid key `{key}` listed twice")));
            }
            // Schedules contain commas themselves, so they form a single value.
            let values: Vec<String> = if key == "schedule" || key == "command" {
                vec![value]
            } else {
                value.split(',').map(|v| v.trim().to_string()).collect()
            };
            if values.iter().any(|v| v.is_empty()) {
                return Err(CliError::config(format!("empty value in grid key `{key}`")));
            }
            axes.push((key, values));
        }
        Ok(Self { axes })
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All combinations, last axis fastest.
    pub fn points(&self) -> Vec<Vec<(String, String)>> {
        let mut out = vec![Vec::new()];
        for (key, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((key.clone(), v.clone()));
                        p
                    })
                })
                .collect();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> Vec<(String, String)> {
        parse_key_values(text, Path::new("cfg")).unwrap()
    }

    #[test]
    fn defaults_and_prior_lambda() {
        let cfg = ReconConfig::from_pairs(&[], Path::new(".")).unwrap();
        assert_eq!(cfg.prior, PriorName::Tv);
        assert_eq!((cfg.alpha, cfg.beta, cfg.lambda, cfg.iterations), (1.0, 1.0, 0.012, 3));
        let cfg = ReconConfig::from_pairs(&pairs("prior = tikhonov"), Path::new(".")).unwrap();
        assert_eq!(cfg.lambda, 0.01);
        // An explicit lambda wins regardless of order.
        let cfg = ReconConfig::from_pairs(&pairs("lambda = 0.5\nprior = haar"), Path::new(".")).unwrap();
        assert_eq!(cfg.lambda, 0.5);
    }

    #[test]
    fn full_file() {
        let text = "# comment\nprior = tv\nalpha = 2\nbeta = 0.5\nlambda = 0.03\niterations = 4\n\
                    tv_iterations = 80\ntv_tolerance = 1e-8\nconsistency = 0.7\n\
                    schedule = 1,1,0.1; 2,1,0.1; 3,1,0.1; 4,1,0.1\nrecord_history = true\n";
        let cfg = ReconConfig::from_pairs(&pairs(text), Path::new(".")).unwrap();
        assert_eq!(cfg.tv_iterations, 80);
        assert_eq!(cfg.consistency, Consistency::Scalar(0.7));
        assert_eq!(cfg.schedule.as_ref().unwrap().len(), 4);
        assert!(cfg.record_history);
        let sc = cfg.solver_config(Path::new(".")).unwrap();
        assert_eq!(sc.stage(3).alpha, 3.0);
    }

    #[test]
    fn render_round_trips() {
        let text =
            "prior = external\ncommand = sh ./d.sh\ntimeout = 2.5\nlambda = 0\nschedule = 1,2,3; 4,5,6\niterations = 2";
        let cfg = ReconConfig::from_pairs(&pairs(text), Path::new(".")).unwrap();
        let again = ReconConfig::from_pairs(&pairs(&cfg.render()), Path::new(".")).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "alpha = x",
            "bogus = 1",
            "prior = magic",
            "schedule = 1,2",
            "timeout = -1",
        ] {
            let err = ReconConfig::from_pairs(&pairs(text), Path::new(".")).unwrap_err();
            assert_eq!(err.kind.code(), 2, "{text}");
        }
    }

    #[test]
    fn grid_product() {
        let g = Grid::parse("alpha = 1, 2\nlambda = 0, 0.1, 0.2\nprior = tv", Path::new("g")).unwrap();
        assert_eq!(g.len(), 6);
        let pts = g.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0][0].1, "1");
        assert_eq!(pts[1][1].1, "0.1");
        assert_eq!(pts[3][0].1, "2");
        assert!(Grid::parse("nope = 1", Path::new("g")).is_err());
        assert!(Grid::parse("alpha = 1,,2", Path::new("g")).is_err());
    }
}
