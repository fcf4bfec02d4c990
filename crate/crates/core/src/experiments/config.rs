//! Flat `key = value` scenario files.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. `ell0 = inf` selects a fully coherent probe. Unknown
//! keys are an error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::decoherence::{ThermometryConstants, AIR_MASS, AIR_NUMBER_DENSITY, MOLECULE_SIZE};
use crate::error::{Error, Result};
use crate::phase_space::{ProbeParams, DEFAULT_ELL0, DEFAULT_MASS, DEFAULT_SIGMA0};
use crate::quadrature::QuadratureSpec;

/// How the scattering constants of a run are specified.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSource {
    Lambdas(Vec<f64>),
    Temperatures(Vec<f64>),
}

/// Every knob of a sweep run. [`Default`] holds the fullerene-in-air setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mass: f64,
    pub sigma0: f64,
    pub ell0: f64,
    pub air_mass: f64,
    pub number_density: f64,
    pub molecule_size: f64,
    pub source: LambdaSource,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_points: usize,
    pub gamma_set: Vec<f64>,
    pub contour_t_points: usize,
    pub contour_gamma_points: usize,
    pub t_fixed: f64,
    pub det_lambdas: Vec<f64>,
    pub wigner_lambda: f64,
    pub wigner_times: Vec<f64>,
    pub wigner_gammas: Vec<f64>,
    pub grid_points: usize,
    pub grid_span: f64,
    pub thermo_temperatures: Vec<f64>,
    pub quad_nodes: usize,
    pub quad_tolerance: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mass: DEFAULT_MASS,
            sigma0: DEFAULT_SIGMA0,
            ell0: DEFAULT_ELL0,
            air_mass: AIR_MASS,
            number_density: AIR_NUMBER_DENSITY,
            molecule_size: MOLECULE_SIZE,
            source: LambdaSource::Lambdas(vec![3e15, 3e20, 3e22]),
            t_min: 1e-8,
            t_max: 1e-4,
            t_points: 400,
            gamma_min: -3.0,
            gamma_max: 3.0,
            gamma_points: 101,
            gamma_set: vec![-0.5, 0.0, 0.5],
            contour_t_points: 121,
            contour_gamma_points: 121,
            t_fixed: 4e-5,
            det_lambdas: vec![3e15, 3e22],
            wigner_lambda: 3e22,
            wigner_times: vec![0.0, 2.2e-6],
            wigner_gammas: vec![-0.5, 0.0, 0.5],
            grid_points: 201,
            grid_span: 6.0,
            thermo_temperatures: vec![16.9e-3, 36.5, 786.0],
            quad_nodes: 200,
            quad_tolerance: 1e-8,
        }
    }
}

/// Accepted keys, in the order they are written back out.
pub const KEYS: &[&str] = &[
    "mass",
    "sigma0",
    "ell0",
    "air_mass",
    "number_density",
    "molecule_size",
    "lambdas",
    "temperatures",
    "t_min",
    "t_max",
    "t_points",
    "gamma_min",
    "gamma_max",
    "gamma_points",
    "gamma_set",
    "contour_t_points",
    "contour_gamma_points",
    "t_fixed",
    "det_lambdas",
    "wigner_lambda",
    "wigner_times",
    "wigner_gammas",
    "grid_points",
    "grid_span",
    "thermo_temperatures",
    "quad_nodes",
    "quad_tolerance",
];

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v.trim() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        s => s
            .parse()
            .map_err(|_| config_err(format!("`{key}`: cannot parse `{s}` as a number"))),
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| config_err(format!("`{key}`: cannot parse `{v}` as a count")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_f64(key, s)).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Split `key = value` text into a map; later lines win.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected `key = value`", n + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(config_err(format!("line {}: unknown key `{k}`", n + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl ScenarioConfig {
    /// Defaults overlaid with `file` pairs, then `overrides`.
    ///
    /// Setting one of `lambdas`/`temperatures` in `overrides` drops the
    /// other from `file`.
    pub fn from_layers(
        file: &BTreeMap<String, String>,
        overrides: &BTreeMap<String, String>,
    ) -> Result<Self> {
        for k in overrides.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(config_err(format!("unknown key `{k}`")));
            }
        }
        let mut merged = file.clone();
        for pair in [("lambdas", "temperatures"), ("temperatures", "lambdas")] {
            if overrides.contains_key(pair.0) {
                merged.remove(pair.1);
            }
        }
        merged.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));

        let mut c = Self::default();
        if merged.contains_key("lambdas") && merged.contains_key("temperatures") {
            return Err(config_err(
                "set exactly one of `lambdas` and `temperatures`",
            ));
        }
        for (k, v) in &merged {
            match k.as_str() {
                "mass" => c.mass = parse_f64(k, v)?,
                "sigma0" => c.sigma0 = parse_f64(k, v)?,
                "ell0" => c.ell0 = parse_f64(k, v)?,
                "air_mass" => c.air_mass = parse_f64(k, v)?,
                "number_density" => c.number_density = parse_f64(k, v)?,
                "molecule_size" => c.molecule_size = parse_f64(k, v)?,
                "lambdas" => c.source = LambdaSource::Lambdas(parse_list(k, v)?),
                "temperatures" => c.source = LambdaSource::Temperatures(parse_list(k, v)?),
                "t_min" => c.t_min = parse_f64(k, v)?,
                "t_max" => c.t_max = parse_f64(k, v)?,
                "t_points" => c.t_points = parse_usize(k, v)?,
                "gamma_min" => c.gamma_min = parse_f64(k, v)?,
                "gamma_max" => c.gamma_max = parse_f64(k, v)?,
                "gamma_points" => c.gamma_points = parse_usize(k, v)?,
                "gamma_set" => c.gamma_set = parse_list(k, v)?,
                "contour_t_points" => c.contour_t_points = parse_usize(k, v)?,
                "contour_gamma_points" => c.contour_gamma_points = parse_usize(k, v)?,
                "t_fixed" => c.t_fixed = parse_f64(k, v)?,
                "det_lambdas" => c.det_lambdas = parse_list(k, v)?,
                "wigner_lambda" => c.wigner_lambda = parse_f64(k, v)?,
                "wigner_times" => c.wigner_times = parse_list(k, v)?,
                "wigner_gammas" => c.wigner_gammas = parse_list(k, v)?,
                "grid_points" => c.grid_points = parse_usize(k, v)?,
                "grid_span" => c.grid_span = parse_f64(k, v)?,
                "thermo_temperatures" => c.thermo_temperatures = parse_list(k, v)?,
                "quad_nodes" => c.quad_nodes = parse_usize(k, v)?,
                "quad_tolerance" => c.quad_tolerance = parse_f64(k, v)?,
                _ => unreachable!("keys are checked against KEYS"),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_layers(&parse_pairs(text)?, &BTreeMap::new())
    }

    pub fn load(path: &Path, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_layers(&parse_pairs(&text)?, overrides)
    }

    /// Reject empty or non-monotone ranges and unphysical constants.
    pub fn validate(&self) -> Result<()> {
        self.probe(0.0)?;
        self.gas()?;
        let positive_list = |name: &str, v: &[f64]| -> Result<()> {
            if v.is_empty() {
                return Err(config_err(format!("`{name}` is empty")));
            }
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(config_err(format!(
                    "`{name}` entries must be positive, got {x}"
                )));
            }
            Ok(())
        };
        match &self.source {
            LambdaSource::Lambdas(v) => positive_list("lambdas", v)?,
            LambdaSource::Temperatures(v) => positive_list("temperatures", v)?,
        }
        positive_list("det_lambdas", &self.det_lambdas)?;
        positive_list("thermo_temperatures", &self.thermo_temperatures)?;
        if !(self.t_min > 0.0 && self.t_min < self.t_max && self.t_max.is_finite()) {
            return Err(config_err(format!(
                "time range must satisfy 0 < t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if !(self.gamma_min < self.gamma_max
            && self.gamma_min.is_finite()
            && self.gamma_max.is_finite())
        {
            return Err(config_err(format!(
                "γ range must satisfy gamma_min < gamma_max, got [{}, {}]",
                self.gamma_min, self.gamma_max
            )));
        }
        for (name, n) in [
            ("t_points", self.t_points),
            ("gamma_points", self.gamma_points),
            ("contour_t_points", self.contour_t_points),
            ("contour_gamma_points", self.contour_gamma_points),
            ("grid_points", self.grid_points),
        ] {
            if n < 2 {
                return Err(config_err(format!("`{name}` must be at least 2, got {n}")));
            }
        }
        for (name, v) in [
            ("gamma_set", &self.gamma_set),
            ("wigner_gammas", &self.wigner_gammas),
        ] {
            if v.is_empty() || v.iter().any(|g| !g.is_finite()) {
                return Err(config_err(format!(
                    "`{name}` must be a nonempty list of finite values"
                )));
            }
        }
        if self.wigner_times.is_empty()
            || self
                .wigner_times
                .iter()
                .any(|t| !(t.is_finite() && *t >= 0.0))
        {
            return Err(config_err(
                "`wigner_times` must be a nonempty list of times >= 0",
            ));
        }
        if !(self.t_fixed > 0.0 && self.t_fixed.is_finite()) {
            return Err(config_err("`t_fixed` must be positive"));
        }
        if !(self.wigner_lambda >= 0.0 && self.wigner_lambda.is_finite()) {
            return Err(config_err("`wigner_lambda` must be >= 0"));
        }
        if !(self.grid_span > 0.0) {
            return Err(config_err("`grid_span` must be positive"));
        }
        self.quadrature()?;
        Ok(())
    }

    pub fn probe(&self, gamma: f64) -> Result<ProbeParams> {
        ProbeParams::new(self.mass, self.sigma0, self.ell0, gamma)
    }

    pub fn gas(&self) -> Result<ThermometryConstants> {
        ThermometryConstants::new(self.air_mass, self.number_density, self.molecule_size)
    }

    /// Scattering constants of the run, derived from temperatures if needed.
    pub fn lambdas(&self) -> Result<Vec<f64>> {
        match &self.source {
            LambdaSource::Lambdas(v) => Ok(v.clone()),
            LambdaSource::Temperatures(v) => {
                let gas = self.gas()?;
                v.iter().map(|&t| gas.lambda_of_temperature(t)).collect()
            }
        }
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        QuadratureSpec::new(self.quad_nodes, self.quad_tolerance)
    }

    /// `t_points` times log-spaced over `[t_min, t_max]`.
    pub fn times(&self) -> Vec<f64> {
        log_space(self.t_min, self.t_max, self.t_points)
    }

    pub fn contour_times(&self) -> Vec<f64> {
        log_space(self.t_min, self.t_max, self.contour_t_points)
    }

    pub fn gammas(&self) -> Vec<f64> {
        lin_space(self.gamma_min, self.gamma_max, self.gamma_points)
    }

    pub fn contour_gammas(&self) -> Vec<f64> {
        lin_space(self.gamma_min, self.gamma_max, self.contour_gamma_points)
    }

    /// Canonical `key = value` text; parsing it gives back `self`.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("mass", format!("{:e}", self.mass));
        put("sigma0", format!("{:e}", self.sigma0));
        put(
            "ell0",
            if self.ell0.is_infinite() {
                "inf".into()
            } else {
                format!("{:e}", self.ell0)
            },
        );
        put("air_mass", format!("{:e}", self.air_mass));
        put("number_density", format!("{:e}", self.number_density));
        put("molecule_size", format!("{:e}", self.molecule_size));
        match &self.source {
            LambdaSource::Lambdas(v) => put("lambdas", fmt_list(v)),
            LambdaSource::Temperatures(v) => put("temperatures", fmt_list(v)),
        }
        put("t_min", format!("{:e}", self.t_min));
        put("t_max", format!("{:e}", self.t_max));
        put("t_points", self.t_points.to_string());
        put("gamma_min", format!("{:e}", self.gamma_min));
        put("gamma_max", format!("{:e}", self.gamma_max));
        put("gamma_points", self.gamma_points.to_string());
        put("gamma_set", fmt_list(&self.gamma_set));
        put("contour_t_points", self.contour_t_points.to_string());
        put(
            "contour_gamma_points",
            self.contour_gamma_points.to_string(),
        );
        put("t_fixed", format!("{:e}", self.t_fixed));
        put("det_lambdas", fmt_list(&self.det_lambdas));
        put("wigner_lambda", format!("{:e}", self.wigner_lambda));
        put("wigner_times", fmt_list(&self.wigner_times));
        put("wigner_gammas", fmt_list(&self.wigner_gammas));
        put("grid_points", self.grid_points.to_string());
        put("grid_span", format!("{:e}", self.grid_span));
        put("thermo_temperatures", fmt_list(&self.thermo_temperatures));
        put("quad_nodes", self.quad_nodes.to_string());
        put("quad_tolerance", format!("{:e}", self.quad_tolerance));
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| match i {
            i if i == n - 1 => hi,
            i => lo + (hi - lo) * i as f64 / (n - 1) as f64,
        })
        .collect()
}
