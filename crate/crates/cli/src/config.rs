//! Line-oriented `key = value` run configuration.
//!
//! Every key has a default; a config file and then command-line flags
//! override them in that order. [`RunConfig::echo`] writes every key back in
//! a fixed order, so an echo fed to `--config` reproduces the run.

use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key = value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("{key}: cannot parse '{value}' as {what}")]
    Value { key: String, value: String, what: &'static str },
}

pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

pub const KEYS: &[Key] = &[
    key("generator", "abc", "abc | taylor-green | swirl | zero | blobs | tube | bump | uniform"),
    key("n", "64", "grid points per axis"),
    key("box_length", "auto", "periodic box side; auto = 2*pi for abc/taylor-green, 4.4*r0 otherwise"),
    key("t", "1.0", "half-length T of the time window (0, 2T)"),
    key("n_time", "1", "time samples of generated densities (1 = steady)"),
    key("abc_a", "1.0", "ABC coefficient A"),
    key("abc_b", "1.0", "ABC coefficient B"),
    key("abc_c", "1.0", "ABC coefficient C"),
    key("amplitude", "1.0", "amplitude of taylor-green and density generators"),
    key("alpha", "0.4", "swirl exponent"),
    key("r_core", "0.0", "swirl core radius (0 = raw singular profile)"),
    key("r_cut", "0.8", "swirl cut-off radius"),
    key("blobs", "4", "number of blobs for the blobs generator"),
    key("rho", "0.1", "support radius of the tube and bump densities"),
    key("field", "", "velocity field file (CSF1)"),
    key("energy_density", "", "energy density file (CSD1), measure mode"),
    key("dissipation_density", "", "dissipation density file (CSD1), measure mode"),
    key("r0", "1.0", "integral scale R0"),
    key("r", "0.5", "cover radius for the cover command"),
    key("k1", "20", "cover count constant K1"),
    key("k2", "40", "cover overlap constant K2"),
    key("jitter", "0.0", "lattice jitter as a fraction of the spacing"),
    key("seed", "0", "base seed; scale i of analyze uses seed + i"),
    key("probes", "1000000", "Monte-Carlo probes for cover verification"),
    key("stride", "12", "sublattice stride of the lattice decomposition"),
    key("covers", "", "comma-separated cover files, one per scale (overrides scales)"),
    key("scales", "0.5,0.25,0.125", "cover radii as fractions of r0"),
    key("delta", "0.5", "energy cutoff exponent, 0 < delta < 1"),
    key("gamma", "0.5", "cascade parameter, 0 < gamma < 1"),
    key("mode", "as-derived", "as-derived | as-printed"),
    key("radii", "0.2,0.3,0.4", "tube scan radii"),
    key("points", "0.7 1.1 0.4;2.0 0.3 1.3", "Duchon-Robert points, 'x y z' separated by ';'"),
    key("eps_max", "auto", "largest mollifier scale; auto = 64h"),
    key("k_max", "3", "mollifier halvings"),
    key("slice", "0", "time slice for the Duchon-Robert scan"),
    key("scales_csv", "", "scales.csv written by analyze, input of locality"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { values: KEYS.iter().map(|k| (k.name, k.default.to_string())).collect() }
    }
}

fn lookup(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        c.merge(text)?;
        Ok(c)
    }

    pub fn merge(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.into() })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<(), ConfigError> {
        let k = lookup(name).ok_or_else(|| ConfigError::UnknownKey(name.into()))?;
        self.values.insert(k.name, value.to_string());
        Ok(())
    }

    pub fn get(&self, name: &str) -> &str {
        self.values.get(name).map(String::as_str).unwrap_or_else(|| panic!("no config key '{name}'"))
    }

    fn typed<T: std::str::FromStr>(&self, name: &str, what: &'static str) -> Result<T, ConfigError> {
        let v = self.get(name);
        v.parse().map_err(|_| ConfigError::Value { key: name.into(), value: v.into(), what })
    }

    pub fn f64(&self, name: &str) -> Result<f64, ConfigError> {
        self.typed(name, "a number")
    }

    pub fn usize(&self, name: &str) -> Result<usize, ConfigError> {
        self.typed(name, "a count")
    }

    pub fn u32(&self, name: &str) -> Result<u32, ConfigError> {
        self.typed(name, "an integer")
    }

    pub fn u64(&self, name: &str) -> Result<u64, ConfigError> {
        self.typed(name, "an integer")
    }

    /// `None` for an empty value.
    pub fn path(&self, name: &str) -> Option<&str> {
        Some(self.get(name)).filter(|s| !s.is_empty())
    }

    pub fn list(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        let v = self.get(name);
        v.split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| ConfigError::Value { key: name.into(), value: v.into(), what: "a list of numbers" }))
            .collect()
    }

    pub fn points(&self, name: &str) -> Result<Vec<[f64; 3]>, ConfigError> {
        let v = self.get(name);
        let bad = || ConfigError::Value { key: name.into(), value: v.into(), what: "points 'x y z; ...'" };
        v.split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|p| {
                let c: Vec<f64> = p.split_whitespace().map(|s| s.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
                <[f64; 3]>::try_from(c).map_err(|_| bad())
            })
            .collect()
    }

    /// Box side, resolving `auto`.
    pub fn box_length(&self) -> Result<f64, ConfigError> {
        if self.get("box_length") == "auto" {
            return Ok(match self.get("generator") {
                "abc" | "taylor-green" => 2.0 * PI,
                _ => 4.4 * self.f64("r0")?,
            });
        }
        self.f64("box_length")
    }

    /// Every key in declaration order, one `key = value` per line.
    pub fn echo(&self) -> String {
        KEYS.iter().map(|k| format!("{} = {}\n", k.name, self.get(k.name))).collect()
    }
}
