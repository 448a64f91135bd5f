//! Run configuration: a flat `key = value` grammar with one level of
//! sections.
//!
//! ```text
//! # comment
//! [model]
//! kind = rte2 | bgk2d | phonon
//! n_omega = 8            # phonon
//! omega_min = 1.0        # phonon
//! omega_max = 8.0        # phonon
//! c_over_tau = example431 | table <path.csv>
//! beta = example431 | table <path.csv>
//!
//! [discretization]
//! n = 16                 # mu basis half count (2n + 1 functions)
//! k = 15                 # transverse basis count (bgk2d)
//! alpha = 0.5            # damping coefficient
//! cutoff = 12.0          # Gaussian domain truncation (bgk2d)
//! quad_points = 0        # mu nodes per half domain; 0 = automatic
//!
//! [boundary]
//! alpha_d = 0.3
//! alpha_s = 0.4
//! incoming = zero | null_mode <k> | plus_mode <j> | minus_mode <j>
//!          | shifted_null_mode <k> | shifted_plus_mode <j>
//!          | shifted_minus_mode <j>
//!          | polynomial <c0> <c1> ... [; <c0> <c1> ... per species]
//!          | tabulated <path.csv>
//!
//! [output]
//! dir = out
//! x_points = 61
//! x_max = auto           # or a number; x_grid = v1,v2,... overrides both
//! seed = 7
//! trials = 100
//!
//! [convergence]
//! n_list = 4,8,16,32
//! ```
//!
//! Keys are validated strictly: unknown sections or keys are errors, so a
//! typo cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelKindConfig {
    Rte2,
    Bgk2d,
    Phonon,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Preset(String),
    Table(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeClass {
    Zero,
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IncomingSpec {
    Zero,
    /// 1-based mode index as written in the config.
    Mode { class: ModeClass, index: usize, shifted: bool },
    Polynomial(Vec<Vec<f64>>),
    Tabulated(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ModelKindConfig,
    pub n_omega: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub c_over_tau: ProfileSpec,
    pub beta: ProfileSpec,

    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub cutoff: f64,
    pub quad_points: Option<usize>,

    pub alpha_d: f64,
    pub alpha_s: f64,
    pub incoming: IncomingSpec,

    pub out_dir: PathBuf,
    pub x_points: usize,
    pub x_max: Option<f64>,
    pub x_grid: Option<Vec<f64>>,
    pub seed: u64,
    pub trials: usize,

    pub n_list: Option<Vec<usize>>,
}

fn parse_error(line_no: usize, msg: impl AsRef<str>) -> CliError {
    CliError::Config(format!("line {line_no}: {}", msg.as_ref()))
}

/// Parse and validate a config file.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    // (section, key) -> (line, value)
    let mut entries: BTreeMap<(String, String), (usize, String)> = BTreeMap::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_error(line_no, "unterminated section header"))?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_error(line_no, "expected 'key = value'"))?;
        if section.is_empty() {
            return Err(parse_error(line_no, "key outside of any [section]"));
        }
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if entries.insert((section.clone(), key.clone()), (line_no, value)).is_some() {
            return Err(parse_error(line_no, format!("duplicate key '{section}.{key}'")));
        }
    }

    let mut cfg = Parsed { entries };

    let kind = match cfg.take("model", "kind")? {
        Some((line, v)) => match v.as_str() {
            "rte2" => ModelKindConfig::Rte2,
            "bgk2d" => ModelKindConfig::Bgk2d,
            "phonon" => ModelKindConfig::Phonon,
            other => return Err(parse_error(line, format!("unknown model kind '{other}'"))),
        },
        None => return Err(CliError::Config("missing required key model.kind".into())),
    };

    let n_omega = cfg.take_parse("model", "n_omega", 8usize)?;
    let omega_min = cfg.take_parse("model", "omega_min", 1.0f64)?;
    let omega_max = cfg.take_parse("model", "omega_max", 8.0f64)?;
    let c_over_tau = cfg.take_profile("model", "c_over_tau")?;
    let beta = cfg.take_profile("model", "beta")?;

    let n = cfg.take_parse("discretization", "n", 8usize)?;
    let k = cfg.take_parse("discretization", "k", 8usize)?;
    let alpha = cfg.take_parse("discretization", "alpha", 0.5f64)?;
    let cutoff = cfg.take_parse("discretization", "cutoff", 8.0f64)?;
    let quad_points = match cfg.take_parse("discretization", "quad_points", 0usize)? {
        0 => None,
        v => Some(v),
    };

    let alpha_d = cfg.take_parse("boundary", "alpha_d", 0.0f64)?;
    let alpha_s = cfg.take_parse("boundary", "alpha_s", 0.0f64)?;
    let incoming = cfg.take_incoming("boundary", "incoming")?;

    let out_dir = PathBuf::from(
        cfg.take("output", "dir")?.map(|(_, v)| v).unwrap_or_else(|| "out".to_string()),
    );
    let x_points = cfg.take_parse("output", "x_points", 61usize)?;
    let x_max = match cfg.take("output", "x_max")? {
        None => None,
        Some((_, v)) if v == "auto" => None,
        Some((line, v)) => Some(
            v.parse::<f64>()
                .map_err(|_| parse_error(line, format!("bad x_max value '{v}'")))?,
        ),
    };
    let x_grid = match cfg.take("output", "x_grid")? {
        None => None,
        Some((line, v)) => {
            let vals: Result<Vec<f64>, _> =
                v.split(',').map(|s| s.trim().parse::<f64>()).collect();
            Some(vals.map_err(|_| parse_error(line, format!("bad x_grid list '{v}'")))?)
        }
    };
    let seed = cfg.take_parse("output", "seed", 7u64)?;
    let trials = cfg.take_parse("output", "trials", 100usize)?;

    let n_list = match cfg.take("convergence", "n_list")? {
        None => None,
        Some((line, v)) => {
            let vals: Result<Vec<usize>, _> =
                v.split(',').map(|s| s.trim().parse::<usize>()).collect();
            Some(vals.map_err(|_| parse_error(line, format!("bad n_list '{v}'")))?)
        }
    };

    if let Some(((section, key), (line, _))) = cfg.entries.into_iter().next() {
        return Err(parse_error(line, format!("unknown key '{section}.{key}'")));
    }

    let config = RunConfig {
        kind,
        n_omega,
        omega_min,
        omega_max,
        c_over_tau,
        beta,
        n,
        k,
        alpha,
        cutoff,
        quad_points,
        alpha_d,
        alpha_s,
        incoming,
        out_dir,
        x_points,
        x_max,
        x_grid,
        seed,
        trials,
        n_list,
    };
    validate(&config)?;
    Ok(config)
}

// The negated comparisons reject NaN inputs.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.n < 1 {
        return Err(CliError::Config("discretization.n must be at least 1".into()));
    }
    if cfg.kind == ModelKindConfig::Bgk2d && cfg.k < 1 {
        return Err(CliError::Config("discretization.k must be at least 1".into()));
    }
    if cfg.kind == ModelKindConfig::Phonon && cfg.n_omega < 2 {
        return Err(CliError::Config("model.n_omega must be at least 2".into()));
    }
    if !(cfg.alpha_d >= 0.0) || !(cfg.alpha_s >= 0.0) || !(cfg.alpha_d + cfg.alpha_s < 1.0) {
        return Err(CliError::Config(format!(
            "boundary accommodation invalid: alpha_d = {}, alpha_s = {} \
             (need both >= 0 and alpha_d + alpha_s < 1)",
            cfg.alpha_d, cfg.alpha_s
        )));
    }
    if cfg.x_points < 2 {
        return Err(CliError::Config("output.x_points must be at least 2".into()));
    }
    if let Some(list) = &cfg.n_list {
        if list.len() < 2 {
            return Err(CliError::Config("convergence.n_list needs at least 2 entries".into()));
        }
        if list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("convergence.n_list must be strictly ascending".into()));
        }
    }
    Ok(())
}

struct Parsed {
    entries: BTreeMap<(String, String), (usize, String)>,
}

impl Parsed {
    fn take(&mut self, section: &str, key: &str) -> Result<Option<(usize, String)>, CliError> {
        Ok(self.entries.remove(&(section.to_string(), key.to_string())))
    }

    fn take_parse<T: std::str::FromStr>(
        &mut self,
        section: &str,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        match self.take(section, key)? {
            None => Ok(default),
            Some((line, v)) => v
                .parse::<T>()
                .map_err(|_| parse_error(line, format!("bad value '{v}' for {section}.{key}"))),
        }
    }

    fn take_profile(&mut self, section: &str, key: &str) -> Result<ProfileSpec, CliError> {
        match self.take(section, key)? {
            None => Ok(ProfileSpec::Preset("example431".to_string())),
            Some((line, v)) => {
                let mut parts = v.split_whitespace();
                match (parts.next(), parts.next()) {
                    (Some("table"), Some(path)) => Ok(ProfileSpec::Table(PathBuf::from(path))),
                    (Some(name), None) => Ok(ProfileSpec::Preset(name.to_string())),
                    _ => Err(parse_error(line, format!("bad profile '{v}'"))),
                }
            }
        }
    }

    fn take_incoming(&mut self, section: &str, key: &str) -> Result<IncomingSpec, CliError> {
        let Some((line, v)) = self.take(section, key)? else {
            return Ok(IncomingSpec::Zero);
        };
        let mut parts = v.split_whitespace();
        let head = parts.next().unwrap_or("");
        let mode = |class, shifted, parts: &mut dyn Iterator<Item = &str>| {
            let index = parts
                .next()
                .ok_or_else(|| parse_error(line, "mode incoming data needs an index"))?
                .parse::<usize>()
                .map_err(|_| parse_error(line, "bad mode index"))?;
            if index == 0 {
                return Err(parse_error(line, "mode indices are 1-based"));
            }
            Ok(IncomingSpec::Mode { class, index, shifted })
        };
        match head {
            "zero" => Ok(IncomingSpec::Zero),
            "null_mode" => mode(ModeClass::Zero, false, &mut parts),
            "plus_mode" => mode(ModeClass::Plus, false, &mut parts),
            "minus_mode" => mode(ModeClass::Minus, false, &mut parts),
            "shifted_null_mode" => mode(ModeClass::Zero, true, &mut parts),
            "shifted_plus_mode" => mode(ModeClass::Plus, true, &mut parts),
            "shifted_minus_mode" => mode(ModeClass::Minus, true, &mut parts),
            "polynomial" => {
                let rest: String = v["polynomial".len()..].trim().to_string();
                let mut lists = Vec::new();
                for chunk in rest.split(';') {
                    let coeffs: Result<Vec<f64>, _> =
                        chunk.split_whitespace().map(|s| s.parse::<f64>()).collect();
                    let coeffs = coeffs
                        .map_err(|_| parse_error(line, "bad polynomial coefficients"))?;
                    if coeffs.is_empty() {
                        return Err(parse_error(line, "empty polynomial coefficient list"));
                    }
                    lists.push(coeffs);
                }
                if lists.is_empty() {
                    return Err(parse_error(line, "polynomial incoming data needs coefficients"));
                }
                Ok(IncomingSpec::Polynomial(lists))
            }
            "tabulated" => {
                let path = parts
                    .next()
                    .ok_or_else(|| parse_error(line, "tabulated incoming data needs a path"))?;
                Ok(IncomingSpec::Tabulated(PathBuf::from(path)))
            }
            other => Err(parse_error(line, format!("unknown incoming data '{other}'"))),
        }
    }
}
