//! Flat `key = value` experiment files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use polariton_core::params::{effective_parameters, DEFAULT_VALIDITY_THRESHOLD};
use polariton_core::{CavityGraph, PhysicalParams, RampSchedule, RampShape};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Params,
    GroundScan,
    Ramp,
    ValidateMicro,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Params => "params",
            Self::GroundScan => "ground-scan",
            Self::Ramp => "ramp",
            Self::ValidateMicro => "validate-micro",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "params" => Ok(Self::Params),
            "ground-scan" => Ok(Self::GroundScan),
            "ramp" => Ok(Self::Ramp),
            "validate-micro" => Ok(Self::ValidateMicro),
            other => Err(format!(
                "unknown experiment kind `{other}` (expected params, ground-scan, ramp or validate-micro)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Named parameter sets for the physical fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    Toroidal2005,
    Pbg,
    /// No defaults: every physical key must be given.
    None,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::Toroidal2005 => "toroidal-2005",
            Self::Pbg => "pbg",
            Self::None => "none",
        }
    }

    pub fn params(self) -> Option<PhysicalParams> {
        match self {
            Self::Toroidal2005 => Some(PhysicalParams::toroidal_2005()),
            Self::Pbg => Some(pbg_params()),
            Self::None => None,
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "toroidal-2005" => Ok(Self::Toroidal2005),
            "pbg" => Ok(Self::Pbg),
            "none" => Ok(Self::None),
            other => Err(format!("unknown preset `{other}` (expected toroidal-2005, pbg or none)")),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// κ/Γ quoted for present-day photonic band gap cavities.
pub const PBG_KAPPA_OVER_GAMMA: f64 = 5.2;

/// Photonic band gap cavity: the toroidal atomic parameters with the cavity
/// decay rate set so that κ/Γ = 5.2 at the start of the ramp.
pub fn pbg_params() -> PhysicalParams {
    let base = PhysicalParams::toroidal_2005();
    let e = effective_parameters(&base).expect("toroidal preset is valid");
    let bright_weight = e.b * e.b / (base.omega_l * base.omega_l);
    PhysicalParams {
        gamma_c: e.kappa.abs() / PBG_KAPPA_OVER_GAMMA * bright_weight,
        ..base
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub preset: Preset,
    /// `omega_l` holds the ramp start value.
    pub params: PhysicalParams,
    pub graph: CavityGraph,
    pub ramp: RampSchedule,
    /// Initial occupation per site for the ramp.
    pub initial: Vec<u32>,
    /// Cap on the total polariton number of the Fock basis.
    pub n_max: u32,
    pub rtol: f64,
    pub atol: f64,
    pub samples: usize,
    pub validity_threshold: f64,
    /// Polariton number used for the params report and microscopic validation.
    pub n_polaritons: u32,
    pub scan_min: f64,
    pub scan_max: f64,
    pub scan_points: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("empty config is valid")
    }
}

/// Every key accepted in a config file. `Delta` and `delta` are aliases of
/// `delta_cap` and `delta_small`.
pub const KEYS: &[&str] = &[
    "kind",
    "preset",
    "omega_c",
    "g13",
    "g24",
    "omega_l_start",
    "omega_l_end",
    "ramp_duration",
    "ramp_shape",
    "delta_cap",
    "delta_small",
    "epsilon",
    "n_atoms",
    "gamma_c",
    "gamma3",
    "gamma4",
    "gamma_dephase",
    "two_omega_alpha",
    "graph",
    "initial",
    "n_max",
    "rtol",
    "atol",
    "samples",
    "validity_threshold",
    "n_polaritons",
    "scan_min",
    "scan_max",
    "scan_points",
    "out",
    "format",
];

fn canonical(key: &str) -> Option<&'static str> {
    match key {
        "Delta" => Some("delta_cap"),
        "delta" => Some("delta_small"),
        _ => KEYS.iter().copied().find(|k| *k == key),
    }
}

struct Entries {
    values: BTreeMap<&'static str, (usize, String)>,
    end_line: usize,
}

impl Entries {
    fn lex(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        let mut end_line = 1;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            end_line = line + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| CliError::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let name = canonical(key).ok_or_else(|| CliError::Config {
                line,
                message: format!("unknown key `{key}`"),
            })?;
            if value.is_empty() {
                return Err(CliError::Config {
                    line,
                    message: format!("missing value for `{key}`"),
                });
            }
            if let Some((first, _)) = values.insert(name, (line, value.to_string())) {
                return Err(CliError::Config {
                    line,
                    message: format!("`{name}` already set on line {first}"),
                });
            }
        }
        Ok(Self { values, end_line })
    }

    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, value)) => value.parse().map(Some).map_err(|e| CliError::Config {
                line: *line,
                message: format!("invalid value `{value}` for `{key}`: {e}"),
            }),
        }
    }

    fn number(&self, key: &'static str) -> Result<Option<f64>, CliError> {
        match self.get::<f64>(key)? {
            Some(v) if !v.is_finite() => Err(CliError::Config {
                line: self.values[key].0,
                message: format!("`{key}` must be finite"),
            }),
            v => Ok(v),
        }
    }

    /// Non-negative integer, also accepted in float notation such as `1e3`.
    fn count(&self, key: &'static str) -> Result<Option<u64>, CliError> {
        match self.number(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(Some(v as u64)),
            Some(v) => Err(CliError::Config {
                line: self.values[key].0,
                message: format!("`{key}` must be a non-negative integer, got {v}"),
            }),
        }
    }

    fn number_or(&self, key: &'static str, fallback: Option<f64>) -> Result<f64, CliError> {
        match (self.number(key)?, fallback) {
            (Some(v), _) | (None, Some(v)) => Ok(v),
            (None, None) => Err(self.missing(key)),
        }
    }

    fn missing(&self, key: &'static str) -> CliError {
        CliError::Config {
            line: self.end_line,
            message: format!("missing required key `{key}` (no preset default)"),
        }
    }

    fn line_of(&self, key: &'static str) -> usize {
        self.values.get(key).map_or(self.end_line, |(l, _)| *l)
    }
}

/// Parses a config, taking physical defaults from the preset named in the
/// file (toroidal-2005 when absent).
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    parse_config_with(text, None)
}

/// As [`parse_config`], with `preset` taking precedence over the file.
pub fn parse_config_with(text: &str, preset: Option<Preset>) -> Result<ExperimentConfig, CliError> {
    let e = Entries::lex(text)?;
    let preset = match preset {
        Some(p) => p,
        None => e.get::<Preset>("preset")?.unwrap_or_default(),
    };
    let base = preset.params();
    let base_ramp = RampSchedule::toroidal_default();
    let field = |key, pick: fn(&PhysicalParams) -> f64| e.number_or(key, base.as_ref().map(pick));

    let omega_start = field("omega_l_start", |p| p.omega_l)?;
    let n_atoms = match (e.count("n_atoms")?, &base) {
        (Some(n), _) => n,
        (None, Some(p)) => p.n_atoms,
        (None, None) => return Err(e.missing("n_atoms")),
    };
    let params = PhysicalParams {
        omega_c: field("omega_c", |p| p.omega_c)?,
        two_omega_alpha: field("two_omega_alpha", |p| p.two_omega_alpha)?,
        g13: field("g13", |p| p.g13)?,
        g24: field("g24", |p| p.g24)?,
        omega_l: omega_start,
        delta_cap: field("delta_cap", |p| p.delta_cap)?,
        delta_small: field("delta_small", |p| p.delta_small)?,
        epsilon: field("epsilon", |p| p.epsilon)?,
        n_atoms,
        gamma_c: field("gamma_c", |p| p.gamma_c)?,
        gamma3: field("gamma3", |p| p.gamma3)?,
        gamma4: field("gamma4", |p| p.gamma4)?,
        gamma_dephase: field("gamma_dephase", |p| p.gamma_dephase)?,
    };
    params.validate().map_err(|err| CliError::Config {
        line: e.end_line,
        message: err.to_string(),
    })?;

    let ramp_shape = match e.values.get("ramp_shape") {
        None => base_ramp.shape,
        Some((line, v)) => match v.as_str() {
            "linear" => RampShape::Linear,
            "exponential" => RampShape::Exponential,
            other => {
                return Err(CliError::Config {
                    line: *line,
                    message: format!("unknown ramp_shape `{other}` (expected linear or exponential)"),
                })
            }
        },
    };
    let omega_end = e.number("omega_l_end")?.unwrap_or(base_ramp.omega_end);
    let duration = e.number("ramp_duration")?.unwrap_or(base_ramp.duration);
    let ramp = RampSchedule::new(omega_start, omega_end, duration, ramp_shape).map_err(|err| {
        CliError::Config {
            line: e.line_of("ramp_duration"),
            message: err.to_string(),
        }
    })?;

    let graph = match e.values.get("graph") {
        None => CavityGraph::cycle(3).expect("3-cycle"),
        Some((line, spec)) => parse_graph(spec).map_err(|message| CliError::Config {
            line: *line,
            message,
        })?,
    };
    let sites = graph.site_count();
    let initial = match e.values.get("initial") {
        None => vec![1; sites],
        Some((line, v)) => {
            let occ = v
                .split(',')
                .map(|s| s.trim().parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|err| CliError::Config {
                    line: *line,
                    message: format!("invalid occupation list `{v}`: {err}"),
                })?;
            if occ.len() != sites {
                return Err(CliError::Config {
                    line: *line,
                    message: format!("initial has {} entries but the graph has {sites} sites", occ.len()),
                });
            }
            occ
        }
    };
    let filled: u32 = initial.iter().sum();
    let n_max = match e.count("n_max")? {
        None => filled,
        Some(n) if n >= filled as u64 && n <= u32::MAX as u64 => n as u32,
        Some(n) => {
            return Err(CliError::Config {
                line: e.line_of("n_max"),
                message: format!("n_max = {n} cannot hold the initial {filled} polaritons"),
            })
        }
    };

    let positive = |key: &'static str, default: f64| -> Result<f64, CliError> {
        let v = e.number(key)?.unwrap_or(default);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::Config {
                line: e.line_of(key),
                message: format!("`{key}` must be positive"),
            })
        }
    };
    let rtol = positive("rtol", 1e-8)?;
    let atol = positive("atol", 1e-10)?;
    let validity_threshold = positive("validity_threshold", DEFAULT_VALIDITY_THRESHOLD)?;
    let samples = e.count("samples")?.unwrap_or(200) as usize;
    if samples < 2 {
        return Err(CliError::Config {
            line: e.line_of("samples"),
            message: "samples must be at least 2".into(),
        });
    }
    let n_polaritons = e.count("n_polaritons")?.unwrap_or(2).min(u32::MAX as u64) as u32;
    if n_polaritons == 0 {
        return Err(CliError::Config {
            line: e.line_of("n_polaritons"),
            message: "n_polaritons must be at least 1".into(),
        });
    }
    let scan_min = e.number("scan_min")?.unwrap_or(0.0);
    let scan_max = e.number("scan_max")?.unwrap_or(1.0);
    let scan_points = e.count("scan_points")?.unwrap_or(21) as usize;
    if scan_min < 0.0 || scan_max < scan_min || scan_points == 0 {
        return Err(CliError::Config {
            line: e.line_of("scan_points"),
            message: "scan grid needs 0 <= scan_min <= scan_max and scan_points >= 1".into(),
        });
    }

    Ok(ExperimentConfig {
        kind: e.get("kind")?,
        preset,
        params,
        graph,
        ramp,
        initial,
        n_max,
        rtol,
        atol,
        samples,
        validity_threshold,
        n_polaritons,
        scan_min,
        scan_max,
        scan_points,
        out: e.values.get("out").map(|(_, v)| PathBuf::from(v)),
        format: e.get("format")?.unwrap_or_default(),
    })
}

/// `cycle:M`, `chain:M`, or `M: i-j, k-l, ...`.
pub fn parse_graph(spec: &str) -> Result<CavityGraph, String> {
    let (head, tail) = spec
        .split_once(':')
        .ok_or_else(|| format!("graph `{spec}` must be `cycle:M`, `chain:M` or `M: i-j, ...`"))?;
    let count = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|e| format!("invalid site count `{}`: {e}", s.trim()))
    };
    let graph = match head.trim() {
        "cycle" => CavityGraph::cycle(count(tail)?),
        "chain" => CavityGraph::chain(count(tail)?),
        sites => {
            let sites = count(sites)?;
            let mut edges = Vec::new();
            for item in tail.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (a, b) = item
                    .split_once('-')
                    .ok_or_else(|| format!("edge `{item}` must look like `i-j`"))?;
                let end = |s: &str| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|e| format!("invalid edge endpoint `{}`: {e}", s.trim()))
                };
                edges.push((end(a)?, end(b)?));
            }
            CavityGraph::new(sites, edges)
        }
    };
    graph.map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_specs() {
        assert_eq!(parse_graph("cycle:2").unwrap().edges(), &[(0, 1)]);
        assert_eq!(parse_graph("1:").unwrap().edges(), &[]);
        assert!(parse_graph("ring:3").is_err());
        assert!(parse_graph("3").is_err());
        assert!(parse_graph("3: 0-1, 1-0").is_err());
        assert!(parse_graph("2: 0-5").is_err());
    }

    #[test]
    fn counts_accept_float_notation() {
        let c = parse_config("n_atoms = 1e3\nsamples = 50").unwrap();
        assert_eq!(c.params.n_atoms, 1000);
        assert_eq!(c.samples, 50);
        assert!(parse_config("n_atoms = 10.5").is_err());
        assert!(parse_config("n_atoms = 0").is_err());
        assert!(parse_config("samples = 1").is_err());
    }

    #[test]
    fn basis_cap_must_hold_initial_state() {
        assert!(parse_config("n_max = 2").is_err());
        assert_eq!(parse_config("n_max = 4").unwrap().n_max, 4);
        assert!(parse_config("initial = 1,1").is_err());
    }

    #[test]
    fn ramp_and_output_keys() {
        let c = parse_config("ramp_shape = linear\nomega_l_end = 5e11\nformat = json\nout = x.json\nkind = ramp")
            .unwrap();
        assert_eq!(c.ramp.shape, RampShape::Linear);
        assert_eq!(c.ramp.omega_end, 5e11);
        assert_eq!(c.format, OutputFormat::Json);
        assert_eq!(c.out, Some(PathBuf::from("x.json")));
        assert_eq!(c.kind, Some(ExperimentKind::Ramp));
        assert!(parse_config("ramp_duration = 0").is_err());
        assert!(parse_config("rtol = -1").is_err());
        assert!(parse_config("g13 = inf").is_err());
    }

    #[test]
    fn cli_preset_overrides_file() {
        let c = parse_config_with("preset = none", Some(Preset::Toroidal2005)).unwrap();
        assert_eq!(c.preset, Preset::Toroidal2005);
    }
}
