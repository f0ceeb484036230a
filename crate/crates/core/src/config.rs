//! Run configuration: a flat `key = value` file plus command-line overrides.
//!
//! Lines starting with `#` are comments. Grids are either comma-separated
//! lists (`0.1, 0.2, 0.5`) or `start:stop:count` for `count` evenly spaced
//! points including both ends.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectra::SpectrumSetting;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workflow {
    Freespace,
    Trap,
    Lattice,
    Validate,
    Threshold,
}

impl FromStr for Workflow {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "freespace" => Self::Freespace,
            "trap" => Self::Trap,
            "lattice" => Self::Lattice,
            "validate" => Self::Validate,
            "threshold" => Self::Threshold,
            other => return Err(Error::Config(format!("unknown workflow `{other}`"))),
        })
    }
}

impl fmt::Display for Workflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Freespace => "freespace",
            Self::Trap => "trap",
            Self::Lattice => "lattice",
            Self::Validate => "validate",
            Self::Threshold => "threshold",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (csv or json)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Grid,
    Continuum,
    Trap,
}

impl FromStr for SpectrumKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Self::Grid),
            "continuum" => Ok(Self::Continuum),
            "trap" => Ok(Self::Trap),
            other => Err(Error::Config(format!("unknown spectrum `{other}` (grid, continuum or trap)"))),
        }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Grid => "grid",
            Self::Continuum => "continuum",
            Self::Trap => "trap",
        })
    }
}

/// A grid as written by the user; kept in that form so it round-trips.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    List(Vec<f64>),
    Linspace { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Linspace { start, stop, count } => match count {
                1 => vec![*start],
                n => (0..*n).map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64).collect(),
            },
        }
    }

    fn check_increasing(&self, key: &str) -> Result<()> {
        let v = self.values();
        if v.is_empty() {
            return Err(Error::Config(format!("`{key}` is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("`{key}` must be finite and strictly increasing")));
        }
        Ok(())
    }
}

impl FromStr for Grid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!("range `{s}` must be start:stop:count")));
            }
            let count: usize = parse_value(parts[2], "grid count")?;
            if count == 0 {
                return Err(Error::Config(format!("range `{s}` has zero points")));
            }
            return Ok(Grid::Linspace {
                start: parse_value(parts[0], "grid start")?,
                stop: parse_value(parts[1], "grid stop")?,
                count,
            });
        }
        s.split(',').map(|x| parse_value(x.trim(), "grid value")).collect::<Result<Vec<f64>>>().map(Grid::List)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(","))
            }
            Grid::Linspace { start, stop, count } => write!(f, "{start}:{stop}:{count}"),
        }
    }
}

fn parse_value<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Config(format!("cannot parse {what} from `{s}`")))
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workflow: Workflow,
    pub spectrum: SpectrumKind,
    pub half_width: usize,
    pub energy_unit: f64,
    pub panel_order: usize,
    pub trap_spacing: f64,
    /// `None`: adaptive shell cutoff.
    pub trap_n_max: Option<usize>,
    pub t_grid: Grid,
    pub p_grid: Grid,
    pub t_bracket: (f64, f64),
    pub lattice_size: usize,
    /// In units of the hopping.
    pub lattice_temperature: f64,
    pub lattice_mu: f64,
    pub hopping: f64,
    pub fermion_cases: usize,
    pub boson_cases: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub format: Format,
}

/// Keys in the order they are written back out.
pub const KEYS: [&str; 20] = [
    "workflow",
    "spectrum",
    "half_width",
    "energy_unit",
    "panel_order",
    "trap_spacing",
    "trap_n_max",
    "t_grid",
    "p_grid",
    "t_bracket",
    "lattice_size",
    "lattice_temperature",
    "lattice_mu",
    "hopping",
    "fermion_cases",
    "boson_cases",
    "seed",
    "output",
    "format",
    "generator",
];

/// Raw `key = value` pairs in file order, later entries overriding earlier.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: Vec<(String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", lineno + 1)));
            };
            raw.set(key.trim(), value.trim())?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.entries.retain(|(k, _)| k != key);
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn value<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            Some(v) => parse_value(v, &format!("`{key}`")),
            None => Ok(default),
        }
    }

    /// Applies workflow-dependent defaults and validates the result.
    pub fn resolve(&self) -> Result<RunConfig> {
        let workflow: Workflow =
            self.get("workflow").ok_or_else(|| Error::Config("missing `workflow`".into()))?.parse()?;
        let default_spectrum = match workflow {
            Workflow::Trap => SpectrumKind::Trap,
            Workflow::Threshold => SpectrumKind::Continuum,
            _ => SpectrumKind::Grid,
        };
        let spectrum = match self.get("spectrum") {
            Some(s) => s.parse()?,
            None => default_spectrum,
        };
        let trap_n_max = match self.get("trap_n_max") {
            None | Some("auto") => None,
            Some(v) => Some(parse_value(v, "`trap_n_max`")?),
        };
        let t_bracket = match self.get("t_bracket") {
            None => match spectrum {
                SpectrumKind::Trap => (0.2, 0.6),
                _ => (0.5, 2.0),
            },
            Some(v) => {
                let Some((a, b)) = v.split_once(',') else {
                    return Err(Error::Config("`t_bracket` must be `lo, hi`".into()));
                };
                (parse_value(a.trim(), "`t_bracket`")?, parse_value(b.trim(), "`t_bracket`")?)
            }
        };
        let output =
            self.get("output").map(PathBuf::from).ok_or_else(|| Error::Config("missing `output` (or --out)".into()))?;

        let cfg = RunConfig {
            workflow,
            spectrum,
            half_width: self.value("half_width", 15)?,
            energy_unit: self.value("energy_unit", 1.0 / 30.0)?,
            panel_order: self.value("panel_order", crate::spectra::MIN_PANEL_ORDER)?,
            trap_spacing: self.value("trap_spacing", 1.0 / 30.0)?,
            trap_n_max,
            t_grid: self.value("t_grid", Grid::Linspace { start: 0.05, stop: 1.5, count: 30 })?,
            p_grid: self.value("p_grid", Grid::Linspace { start: 0.0, stop: 0.99, count: 100 })?,
            t_bracket,
            lattice_size: self.value("lattice_size", 64)?,
            lattice_temperature: self.value("lattice_temperature", crate::lattice::GROUND_STATE_TEMPERATURE)?,
            lattice_mu: self.value("lattice_mu", 0.0)?,
            hopping: self.value("hopping", 1.0)?,
            fermion_cases: self.value("fermion_cases", 100)?,
            boson_cases: self.value("boson_cases", 20)?,
            seed: self.value("seed", 7)?,
            output,
            format: self.value("format", Format::Csv)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.workflow == Workflow::Trap && self.spectrum != SpectrumKind::Trap {
            return bad("the trap workflow requires `spectrum = trap`");
        }
        if self.workflow == Workflow::Freespace && self.spectrum == SpectrumKind::Trap {
            return bad("the freespace workflow takes `spectrum = grid` or `continuum`");
        }
        self.t_grid.check_increasing("t_grid")?;
        self.p_grid.check_increasing("p_grid")?;
        if self.t_grid.values().iter().any(|t| *t <= 0.0) {
            return bad("`t_grid` values must be positive");
        }
        if self.p_grid.values().iter().any(|p| !(0.0..1.0).contains(p)) {
            return bad("`p_grid` values must lie in [0, 1)");
        }
        if !(self.t_bracket.0 > 0.0 && self.t_bracket.1 > self.t_bracket.0) {
            return bad("`t_bracket` must satisfy 0 < lo < hi");
        }
        if self.half_width == 0 || !(self.energy_unit > 0.0) {
            return bad("grid `half_width` and `energy_unit` must be positive");
        }
        if self.panel_order < crate::spectra::MIN_PANEL_ORDER {
            return bad("`panel_order` must be at least 64");
        }
        if !(self.trap_spacing > 0.0) {
            return bad("`trap_spacing` must be positive");
        }
        if self.lattice_size == 0 || self.lattice_size % 2 == 1 {
            return bad("`lattice_size` must be even and positive");
        }
        if !(self.lattice_temperature > 0.0) || !self.lattice_mu.is_finite() || !(self.hopping > 0.0) {
            return bad("lattice temperature and hopping must be positive, mu finite");
        }
        Ok(())
    }

    pub fn spectrum_setting(&self) -> SpectrumSetting {
        match self.spectrum {
            SpectrumKind::Grid => {
                SpectrumSetting::FreeSpaceGrid { half_width: self.half_width, energy_unit: self.energy_unit }
            }
            SpectrumKind::Continuum => SpectrumSetting::FreeSpaceContinuum {
                panel_order: self.panel_order,
                density_scale: crate::spectra::GRID_MATCHED_DENSITY,
            },
            SpectrumKind::Trap => SpectrumSetting::HarmonicTrap { spacing: self.trap_spacing, n_max: self.trap_n_max },
        }
    }

    /// `(key, value)` pairs that reproduce this configuration when parsed.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("workflow", self.workflow.to_string()),
            ("spectrum", self.spectrum.to_string()),
            ("half_width", self.half_width.to_string()),
            ("energy_unit", self.energy_unit.to_string()),
            ("panel_order", self.panel_order.to_string()),
            ("trap_spacing", self.trap_spacing.to_string()),
            ("trap_n_max", self.trap_n_max.map_or("auto".into(), |n| n.to_string())),
            ("t_grid", self.t_grid.to_string()),
            ("p_grid", self.p_grid.to_string()),
            ("t_bracket", format!("{},{}", self.t_bracket.0, self.t_bracket.1)),
            ("lattice_size", self.lattice_size.to_string()),
            ("lattice_temperature", self.lattice_temperature.to_string()),
            ("lattice_mu", self.lattice_mu.to_string()),
            ("hopping", self.hopping.to_string()),
            ("fermion_cases", self.fermion_cases.to_string()),
            ("boson_cases", self.boson_cases.to_string()),
            ("seed", self.seed.to_string()),
            ("output", self.output.display().to_string()),
            ("format", self.format.to_string()),
        ]
    }

    /// The configuration as a config file.
    pub fn to_config_text(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!("0.1, 0.2,0.5".parse::<Grid>().unwrap().values(), vec![0.1, 0.2, 0.5]);
        let g: Grid = "0:1:5".parse().unwrap();
        assert_eq!(g.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.to_string(), "0:1:5");
        assert!("0:1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("a,b".parse::<Grid>().is_err());
    }

    #[test]
    fn defaults_follow_workflow() {
        let cfg = RawConfig::parse("workflow = trap\noutput = x.csv\n").unwrap().resolve().unwrap();
        assert_eq!(cfg.spectrum, SpectrumKind::Trap);
        assert_eq!(cfg.p_grid.values().len(), 100);
        let cfg = RawConfig::parse("workflow = threshold\noutput = x.csv").unwrap().resolve().unwrap();
        assert_eq!(cfg.spectrum, SpectrumKind::Continuum);
        assert_eq!(cfg.t_bracket, (0.5, 2.0));
    }

    #[test]
    fn round_trip_through_text() {
        let text = "# comment\nworkflow = freespace\nspectrum = continuum\nt_grid = 0.1, 0.3\np_grid = 0:0.5:3\noutput = out/run.csv\nseed = 11\n";
        let cfg = RawConfig::parse(text).unwrap().resolve().unwrap();
        let again = RawConfig::parse(&cfg.to_config_text()).unwrap().resolve().unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_invalid_configs() {
        for text in [
            "output = x",
            "workflow = nope\noutput = x",
            "workflow = freespace",
            "workflow = freespace\noutput = x\nt_grid = 0.3, 0.2",
            "workflow = freespace\noutput = x\np_grid = 0, 1",
            "workflow = freespace\noutput = x\nt_grid = 0, 0.2",
            "workflow = trap\nspectrum = grid\noutput = x",
            "workflow = lattice\nlattice_size = 7\noutput = x",
            "workflow = lattice\nbogus = 1\noutput = x",
            "workflow = lattice\njust text",
        ] {
            let res = RawConfig::parse(text).and_then(|r| r.resolve());
            assert!(matches!(res, Err(Error::Config(_))), "{text:?} gave {res:?}");
        }
    }
}
