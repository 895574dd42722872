//! Run configuration: a flat `key = value` format with `#` comments, named
//! experiment presets, and command-line overrides.
//!
//! Settings resolve in the order defaults, preset, config file, overrides;
//! later layers win.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::ConfigError;
use crate::evolution::GaConfig;
use crate::features::FeatureSpec;
use crate::fitness::Metric;
use crate::saliency::DEFAULT_SIGMA_FRAC;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    Saliency,
}

/// Constraint bound, either fixed or a quarter of the pixel count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSetting {
    Auto,
    Fixed(usize),
}

impl BoundSetting {
    pub fn resolve(self, rows: usize, cols: usize) -> usize {
        match self {
            BoundSetting::Auto => rows * cols / 4,
            BoundSetting::Fixed(b) => b,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub preset: Option<String>,
    pub features: FeatureSpec,
    /// Region half-width `l`.
    pub l: usize,
    pub metric: Metric,
    pub weighting: Weighting,
    /// Uniform weights; ignored under saliency weighting.
    pub w_s: f64,
    pub w_t: f64,
    pub sigma_frac: f64,
    pub bound: BoundSetting,
    /// `bound` inside is overwritten once the image size is known.
    pub ga: GaConfig,
    pub out_dir: PathBuf,
    pub dump_saliency: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: None,
            target: None,
            preset: None,
            features: FeatureSpec::set1(),
            l: 25,
            metric: Metric::LogEuclidean,
            weighting: Weighting::Saliency,
            w_s: 0.5,
            w_t: 0.5,
            sigma_frac: DEFAULT_SIGMA_FRAC,
            bound: BoundSetting::Auto,
            ga: GaConfig::default(),
            out_dir: PathBuf::from("out"),
            dump_saliency: false,
        }
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 11] = [
    "feat1",
    "feat2",
    "feat3",
    "weights-uniform-25",
    "weights-uniform-50",
    "weights-uniform-75",
    "weights-saliency",
    "metric-E",
    "metric-L",
    "metric-A",
    "best",
];

/// Settings a named experiment preset changes, as `key = value` pairs.
pub fn preset(name: &str) -> Result<Vec<(&'static str, &'static str)>, ConfigError> {
    let uniform = |w_s, w_t| {
        vec![
            ("features", "1"),
            ("l", "20"),
            ("metric", "logeuclidean"),
            ("weighting", "uniform"),
            ("w_s", w_s),
            ("w_t", w_t),
        ]
    };
    let salient = |metric| vec![("features", "1"), ("l", "20"), ("metric", metric), ("weighting", "saliency")];
    let feat = |n| {
        vec![
            ("features", n),
            ("l", "25"),
            ("metric", "euclidean"),
            ("weighting", "uniform"),
            ("w_s", "0.5"),
            ("w_t", "0.5"),
        ]
    };
    Ok(match name {
        "feat1" => feat("1"),
        "feat2" => feat("2"),
        "feat3" => feat("3"),
        "weights-uniform-25" => uniform("0.25", "0.75"),
        "weights-uniform-50" => uniform("0.5", "0.5"),
        "weights-uniform-75" => uniform("0.75", "0.25"),
        "weights-saliency" | "metric-L" | "best" => salient("logeuclidean"),
        "metric-E" => salient("euclidean"),
        "metric-A" => salient("affine"),
        _ => return Err(ConfigError::UnknownPreset(name.to_string())),
    })
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| bad(key, format!("`{value}`: {e}")))
}

fn finite(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = number(key, value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, format!("`{value}` is not finite")))
    }
}

fn weight(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v = finite(key, value)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(bad(key, format!("{v} outside [0, 1]")))
    }
}

impl RunConfig {
    /// Applies one setting. Returns `Ok(false)` for an unknown key.
    fn set(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "source" => self.source = Some(PathBuf::from(value)),
            "target" => self.target = Some(PathBuf::from(value)),
            "preset" => self.preset = Some(value.to_string()),
            "features" => {
                self.features = match value {
                    "1" | "2" | "3" => FeatureSpec::preset(value.as_bytes()[0] - b'0').expect("known set"),
                    list => FeatureSpec::parse_list(list).map_err(|e| bad(key, e.to_string()))?,
                }
            }
            "l" => {
                self.l = number(key, value)?;
                if self.l == 0 {
                    return Err(bad(key, "half-width must be at least 1"));
                }
            }
            "metric" => self.metric = value.parse()?,
            "weighting" => {
                self.weighting = match value {
                    "uniform" => Weighting::Uniform,
                    "saliency" => Weighting::Saliency,
                    _ => return Err(bad(key, format!("`{value}` is not uniform or saliency"))),
                }
            }
            "w_s" => self.w_s = weight(key, value)?,
            "w_t" => self.w_t = weight(key, value)?,
            "sigma_frac" => {
                self.sigma_frac = finite(key, value)?;
                if !(self.sigma_frac > 0.0 && self.sigma_frac < 0.5) {
                    return Err(bad(key, "must lie in (0, 0.5)"));
                }
            }
            "bound" => {
                self.bound = match value {
                    "auto" => BoundSetting::Auto,
                    n => BoundSetting::Fixed(number(key, n)?),
                }
            }
            "mu" => self.ga.mu = number(key, value)?,
            "generations" => self.ga.generations = number(key, value)?,
            "p_c" => self.ga.p_c = finite(key, value)?,
            "t_cr" => self.ga.t_cr = number(key, value)?,
            "t_lb" => self.ga.t_lb = finite(key, value)?,
            "t_ub" => self.ga.t_ub = finite(key, value)?,
            "t_init" => self.ga.t_init = finite(key, value)?,
            "f" => self.ga.f = finite(key, value)?,
            "k" => self.ga.k = number(key, value)?,
            "seed" => self.ga.seed = number(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "dump_saliency" => {
                self.dump_saliency = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad(key, format!("`{value}` is not a boolean"))),
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Serializes every setting in the config-file format.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some(p) = &self.source {
            line("source", p.display().to_string());
        }
        if let Some(p) = &self.target {
            line("target", p.display().to_string());
        }
        let features = [FeatureSpec::set1(), FeatureSpec::set2(), FeatureSpec::set3()]
            .iter()
            .position(|s| *s == self.features)
            .map_or_else(|| self.features.to_string(), |k| (k + 1).to_string());
        line("features", features);
        line("l", self.l.to_string());
        line("metric", self.metric.to_string());
        line(
            "weighting",
            match self.weighting {
                Weighting::Uniform => "uniform",
                Weighting::Saliency => "saliency",
            }
            .into(),
        );
        line("w_s", self.w_s.to_string());
        line("w_t", self.w_t.to_string());
        line("sigma_frac", self.sigma_frac.to_string());
        line(
            "bound",
            match self.bound {
                BoundSetting::Auto => "auto".into(),
                BoundSetting::Fixed(b) => b.to_string(),
            },
        );
        let g = &self.ga;
        line("mu", g.mu.to_string());
        line("generations", g.generations.to_string());
        line("p_c", g.p_c.to_string());
        line("t_cr", g.t_cr.to_string());
        line("t_lb", g.t_lb.to_string());
        line("t_ub", g.t_ub.to_string());
        line("t_init", g.t_init.to_string());
        line("f", g.f.to_string());
        line("k", g.k.to_string());
        line("seed", g.seed.to_string());
        line("out_dir", self.out_dir.display().to_string());
        line("dump_saliency", self.dump_saliency.to_string());
        out
    }
}

/// Splits config text into `(key, value, line)` entries.
fn entries(text: &str) -> Result<Vec<(&str, &str, usize)>, ConfigError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed(k + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Malformed(k + 1));
        }
        out.push((key, value, k + 1));
    }
    Ok(out)
}

/// Resolves config text plus `(key, value)` overrides into a checked
/// configuration. Both inputs must be named.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let file = entries(text)?;
    let preset_name = overrides
        .iter()
        .rev()
        .find(|(k, _)| k == "preset")
        .map(|(_, v)| v.as_str())
        .or_else(|| file.iter().rev().find(|(k, _, _)| *k == "preset").map(|e| e.1));

    let mut cfg = RunConfig::default();
    if let Some(name) = preset_name {
        for (k, v) in preset(name)? {
            cfg.set(k, v)?;
        }
    }
    for &(key, value, line) in &file {
        if !cfg.set(key, value)? {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line,
            });
        }
    }
    for (key, value) in overrides {
        if !cfg.set(key, value)? {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                line: 0,
            });
        }
    }
    cfg.preset = preset_name.map(str::to_string);

    if cfg.source.is_none() {
        return Err(ConfigError::MissingInput("source".into()));
    }
    if cfg.target.is_none() {
        return Err(ConfigError::MissingInput("target".into()));
    }
    cfg.ga.validate()?;
    Ok(cfg)
}
