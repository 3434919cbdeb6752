//! Scenario description: a flat `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated; `sweep_nr_bits` takes `Nr:b` pairs such as `4:4, 8:2, 16:1`.
//! Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::framing::{DEFAULT_CRC_BITS, DEFAULT_DATA_BITS};
use crate::labels::Modulation;
use crate::training::TrainingMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detector {
    Mcd,
    Supervised,
    Semi,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::Mcd => "mcd",
            Detector::Supervised => "supervised",
            Detector::Semi => "semi",
        })
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mcd" => Ok(Detector::Mcd),
            "supervised" => Ok(Detector::Supervised),
            "semi" | "semi-supervised" | "semisupervised" => Ok(Detector::Semi),
            other => Err(Error::Config(format!("unknown detector `{other}`"))),
        }
    }
}

/// Where the detector's centroids come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepresentativeSource {
    /// Estimated from the pilot slots.
    Trained,
    /// Closed-form conditional means given the true channel (1-bit only).
    Exact,
}

impl fmt::Display for RepresentativeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepresentativeSource::Trained => "trained",
            RepresentativeSource::Exact => "exact",
        })
    }
}

impl FromStr for RepresentativeSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trained" => Ok(RepresentativeSource::Trained),
            "exact" | "perfect" => Ok(RepresentativeSource::Exact),
            other => Err(Error::Config(format!("unknown representative source `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignMethod {
    Greedy,
    Exhaustive,
}

impl fmt::Display for DesignMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DesignMethod::Greedy => "greedy",
            DesignMethod::Exhaustive => "exhaustive",
        })
    }
}

impl FromStr for DesignMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "greedy" => Ok(DesignMethod::Greedy),
            "exhaustive" => Ok(DesignMethod::Exhaustive),
            other => Err(Error::Config(format!("unknown design method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub nt: usize,
    pub nr: usize,
    pub bits: u32,
    pub modulation: Modulation,
    /// `L_t`, pilot repetitions per trained label.
    pub lt: usize,
    /// `None` picks subspace training whenever the label set allows it.
    pub mode: Option<TrainingMode>,
    pub td: usize,
    /// Fixed block length; when set, `T_d = T_b - T_t`.
    pub tb: Option<usize>,
    pub detector: Detector,
    pub iter_max: usize,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub ktilde: Option<usize>,
    /// Explicit label indices to transmit (instead of a designed subset).
    pub subset: Option<Vec<usize>>,
    pub design: DesignMethod,
    pub restarts: usize,
    pub crc: bool,
    pub l_data: usize,
    pub l_crc: usize,
    pub representatives: RepresentativeSource,
    pub kmeans_fallback: bool,
    pub workers: Option<usize>,
    pub sweep_lt: Vec<usize>,
    pub sweep_ktilde: Vec<usize>,
    pub sweep_nr_bits: Vec<(usize, u32)>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario_id: "scenario".into(),
            nt: 2,
            nr: 16,
            bits: 1,
            modulation: Modulation::Bpsk,
            lt: 1,
            mode: None,
            td: 500,
            tb: None,
            detector: Detector::Semi,
            iter_max: 3,
            snr_db: vec![0.0],
            trials: 100,
            seed: 1,
            ktilde: None,
            subset: None,
            design: DesignMethod::Greedy,
            restarts: crate::design::DEFAULT_RESTARTS,
            crc: false,
            l_data: DEFAULT_DATA_BITS,
            l_crc: DEFAULT_CRC_BITS,
            representatives: RepresentativeSource::Trained,
            kmeans_fallback: false,
            workers: None,
            sweep_lt: Vec::new(),
            sweep_ktilde: Vec::new(),
            sweep_nr_bits: Vec::new(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("`{key}`: expected a boolean, got `{other}`"))),
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", no + 1, config_err(e))))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario_id" => self.scenario_id = value.to_string(),
            "nt" => self.nt = parse_num(key, value)?,
            "nr" => self.nr = parse_num(key, value)?,
            "bits" | "b" => self.bits = parse_num(key, value)?,
            "modulation" | "mod" => self.modulation = value.parse().map_err(config_err)?,
            "lt" => self.lt = parse_num(key, value)?,
            "mode" => {
                self.mode = match value.trim() {
                    "auto" => None,
                    v => Some(v.parse().map_err(config_err)?),
                }
            }
            "td" => self.td = parse_num(key, value)?,
            "tb" => self.tb = Some(parse_num(key, value)?),
            "detector" => self.detector = value.parse()?,
            "iter_max" => self.iter_max = parse_num(key, value)?,
            "snr_db" => self.snr_db = parse_list(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "ktilde" => self.ktilde = Some(parse_num(key, value)?),
            "subset" => self.subset = Some(parse_list(key, value)?),
            "design" => self.design = value.parse()?,
            "restarts" => self.restarts = parse_num(key, value)?,
            "crc" => self.crc = parse_bool(key, value)?,
            "l_data" => self.l_data = parse_num(key, value)?,
            "l_crc" => self.l_crc = parse_num(key, value)?,
            "representatives" => self.representatives = value.parse()?,
            "kmeans_fallback" => self.kmeans_fallback = parse_bool(key, value)?,
            "workers" => self.workers = Some(parse_num(key, value)?),
            "sweep_lt" => self.sweep_lt = parse_list(key, value)?,
            "sweep_ktilde" => self.sweep_ktilde = parse_list(key, value)?,
            "sweep_nr_bits" => {
                self.sweep_nr_bits = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|pair| {
                        let (nr, b) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::Config(format!("`{key}`: expected Nr:b, got `{pair}`")))?;
                        Ok((parse_num(key, nr)?, parse_num(key, b)?))
                    })
                    .collect::<Result<_>>()?
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Structural checks that do not need the label set.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.nt == 0 || self.nr == 0 {
            return bad("nt and nr must be positive".into());
        }
        if self.snr_db.is_empty() {
            return bad("snr_db needs at least one value".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db values must be finite".into());
        }
        if self.iter_max == 0 {
            return bad("iter_max must be at least 1".into());
        }
        if self.detector == Detector::Supervised && !self.crc {
            return bad("the supervised detector needs crc = true".into());
        }
        if self.representatives == RepresentativeSource::Exact {
            if self.bits != 1 || self.sweep_nr_bits.iter().any(|&(_, b)| b != 1) {
                return bad("exact representatives require 1-bit quantization".into());
            }
            if self.detector == Detector::Supervised {
                return bad("the supervised detector learns its own representatives".into());
            }
        }
        if self.ktilde.is_some() && self.subset.is_some() {
            return bad("set either ktilde or subset, not both".into());
        }
        if self.subset.is_some() && !self.sweep_ktilde.is_empty() {
            return bad("sweep_ktilde cannot be combined with an explicit subset".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }
}
