//! Run configuration: flat `section.key = value` files, overridable per key.
//!
//! A line `[section]` prefixes the keys that follow it, so `[grid]` then
//! `points = 16` is the same as `grid.points = 16`. `#` starts a comment.

use crate::analysis::{parse_indicatrix, Indicatrix, Profile};
use crate::fock::RapidityGrid;
use crate::scattering::ScatteringFunction;
use crate::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub seed: u64,
    /// Overrides every per-check tolerance when set.
    pub tol: Option<f64>,
    pub trials: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    pub mass: f64,
    pub nmax: usize,
    /// Scattering functions for the algebra and araki suites; empty means all built-ins.
    pub s: Vec<String>,
    pub araki_mmax: usize,
    /// Smaller grid for the araki suite, whose matrix elements scale as points^(m+n).
    pub araki_grid: (f64, f64, usize),
    pub tm_m_max: usize,
    pub tm_samples: usize,
    pub logderiv_m_max: usize,
    pub logderiv_samples: usize,
    pub residue_m_max: usize,
    pub residue_points: usize,
    pub families: Vec<String>,
    pub st_ks: Vec<usize>,
    pub conditions_samples: usize,
    /// Smearing profile shared by the families, e.g. `bump:radius=1`.
    pub profile: String,
    pub node_eps: f64,
    pub indicatrix: String,
    pub alpha: Vec<f64>,
    pub summability_mmax: usize,
    pub summability_c: f64,
    pub summability_d: f64,
    pub a: f64,
    pub warped_grid: (f64, f64, usize),
    pub contour_shift: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 42,
            tol: None,
            trials: 20,
            grid_min: -3.0,
            grid_max: 3.0,
            grid_points: 16,
            mass: 1.0,
            nmax: 3,
            s: Vec::new(),
            araki_mmax: 2,
            araki_grid: (-2.0, 2.0, 5),
            tm_m_max: 11,
            tm_samples: 100_000,
            logderiv_m_max: 4,
            logderiv_samples: 100,
            residue_m_max: 7,
            residue_points: 20,
            families: vec!["bs".into(), "st".into()],
            st_ks: vec![1, 3, 5],
            conditions_samples: 40,
            profile: "bump:radius=1".into(),
            node_eps: 1e-3,
            indicatrix: "log:beta=2".into(),
            alpha: vec![0.4, 0.25],
            summability_mmax: 200,
            summability_c: 1.0,
            summability_d: 2.0,
            a: 0.7,
            warped_grid: (-1.2, 0.9, 3),
            contour_shift: true,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|x| !x.is_empty()).map(|x| num(key, x)).collect()
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected a boolean, got '{other}'"))),
    }
}

impl Config {
    /// Every recognised key.
    pub const KEYS: &'static [&'static str] = &[
        "run.seed",
        "run.tol",
        "run.trials",
        "grid.min",
        "grid.max",
        "grid.points",
        "grid.mass",
        "fock.nmax",
        "scattering.s",
        "araki.mmax",
        "araki.min",
        "araki.max",
        "araki.points",
        "conjecture.m",
        "conjecture.samples",
        "logderiv.m",
        "logderiv.samples",
        "residues.m",
        "residues.points",
        "conditions.family",
        "conditions.k",
        "conditions.samples",
        "conditions.eps",
        "conditions.profile",
        "conditions.contour_shift",
        "analysis.indicatrix",
        "summability.alpha",
        "summability.mmax",
        "summability.c",
        "summability.d",
        "warped.a",
        "warped.min",
        "warped.max",
        "warped.points",
    ];

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "run.seed" => self.seed = num(key, v)?,
            "run.tol" => self.tol = Some(num(key, v)?),
            "run.trials" => self.trials = num(key, v)?,
            "grid.min" => self.grid_min = num(key, v)?,
            "grid.max" => self.grid_max = num(key, v)?,
            "grid.points" => self.grid_points = num(key, v)?,
            "grid.mass" => self.mass = num(key, v)?,
            "fock.nmax" => self.nmax = num(key, v)?,
            "scattering.s" => {
                self.s = v.split(';').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
            }
            "araki.mmax" => self.araki_mmax = num(key, v)?,
            "araki.min" => self.araki_grid.0 = num(key, v)?,
            "araki.max" => self.araki_grid.1 = num(key, v)?,
            "araki.points" => self.araki_grid.2 = num(key, v)?,
            "conjecture.m" => self.tm_m_max = num(key, v)?,
            "conjecture.samples" => self.tm_samples = num::<f64>(key, v)? as usize,
            "logderiv.m" => self.logderiv_m_max = num(key, v)?,
            "logderiv.samples" => self.logderiv_samples = num(key, v)?,
            "residues.m" => self.residue_m_max = num(key, v)?,
            "residues.points" => self.residue_points = num(key, v)?,
            "conditions.family" => self.families = v.split(',').map(|x| x.trim().to_string()).collect(),
            "conditions.k" => self.st_ks = list(key, v)?,
            "conditions.samples" => self.conditions_samples = num(key, v)?,
            "conditions.eps" => self.node_eps = num(key, v)?,
            "conditions.profile" => self.profile = v.to_string(),
            "conditions.contour_shift" => self.contour_shift = flag(key, v)?,
            "analysis.indicatrix" => self.indicatrix = v.to_string(),
            "summability.alpha" => self.alpha = list(key, v)?,
            "summability.mmax" => self.summability_mmax = num(key, v)?,
            "summability.c" => self.summability_c = num(key, v)?,
            "summability.d" => self.summability_d = num(key, v)?,
            "warped.a" => self.a = num(key, v)?,
            "warped.min" => self.warped_grid.0 = num(key, v)?,
            "warped.max" => self.warped_grid.1 = num(key, v)?,
            "warped.points" => self.warped_grid.2 = num(key, v)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let k = k.trim();
            let key = if section.is_empty() || k.contains('.') { k.to_string() } else { format!("{section}.{k}") };
            self.set(&key, v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", no + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut c = Config::default();
        c.merge_str(&text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.araki_grid()?;
        self.warped_grid()?;
        self.scattering_functions()?;
        self.indicatrix()?;
        self.profile()?;
        if self.nmax > 6 {
            return Err(Error::Config(format!("fock.nmax = {} exceeds the cap 6", self.nmax)));
        }
        if self.araki_mmax > 3 {
            return Err(Error::Config("araki.mmax is capped at 3".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tolerance must be positive, got {t}")));
            }
        }
        if self.alpha.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::Config("summability.alpha values must lie in (0, 1)".into()));
        }
        for f in &self.families {
            if !matches!(f.as_str(), "bs" | "st") {
                return Err(Error::Config(format!("unknown family '{f}' (expected bs or st)")));
            }
        }
        if self.st_ks.iter().any(|k| k % 2 == 0 || *k > 7) {
            return Err(Error::Config("conditions.k must list odd arities <= 7".into()));
        }
        if self.tm_m_max > 15 {
            return Err(Error::Config("conjecture.m is capped at 15".into()));
        }
        if !(self.node_eps > 0.0 && self.node_eps < 0.5) {
            return Err(Error::Config("conditions.eps must lie in (0, 0.5)".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("run.trials must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<RapidityGrid> {
        RapidityGrid::new(self.grid_min, self.grid_max, self.grid_points, self.mass)
    }

    pub fn araki_grid(&self) -> Result<RapidityGrid> {
        let (a, b, n) = self.araki_grid;
        RapidityGrid::new(a, b, n, self.mass)
    }

    pub fn warped_grid(&self) -> Result<RapidityGrid> {
        let (a, b, n) = self.warped_grid;
        RapidityGrid::new(a, b, n, self.mass)
    }

    /// Parses `bump:radius=R` or `gaussian:width=W`.
    pub fn profile(&self) -> Result<Profile> {
        let bad = || Error::Config(format!("bad profile '{}'", self.profile));
        let (name, rest) = self.profile.split_once(':').unwrap_or((&self.profile, ""));
        let param = match rest.split_once('=') {
            Some((_, v)) => v.trim().parse::<f64>().map_err(|_| bad())?,
            None if rest.is_empty() => 1.0,
            None => return Err(bad()),
        };
        if !(param > 0.0) {
            return Err(bad());
        }
        match (name.trim(), rest.split_once('=').map(|x| x.0.trim())) {
            ("bump", None | Some("radius")) => Ok(Profile::bump(param)),
            ("gaussian", None | Some("width")) => Ok(Profile::gaussian(param)),
            _ => Err(bad()),
        }
    }

    pub fn scattering_functions(&self) -> Result<Vec<ScatteringFunction>> {
        if self.s.is_empty() {
            return Ok(vec![
                ScatteringFunction::free(),
                ScatteringFunction::ising(),
                ScatteringFunction::exponential(0.7)?,
            ]);
        }
        self.s.iter().map(|x| x.parse()).collect()
    }

    pub fn indicatrix(&self) -> Result<Indicatrix> {
        parse_indicatrix(&self.indicatrix)
    }

    /// `tol` if set, else the default.
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    /// Echo for the report environment.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let v = serde_json::to_value(self).expect("config serializes");
        v.as_object()
            .expect("struct")
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_sections_and_prefixes() {
        let mut c = Config::default();
        c.merge_str("# comment\nrun.seed = 7\n[grid]\npoints = 12\nmin=-2 # trailing\nfock.nmax = 2\n[summability]\nalpha = 0.4, 0.3\n")
            .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.grid_points, 12);
        assert_eq!(c.grid_min, -2.0);
        assert_eq!(c.nmax, 2);
        assert_eq!(c.alpha, vec![0.4, 0.3]);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = Config::default();
        assert!(matches!(c.merge_str("grid.nope = 1"), Err(Error::Config(_))));
        assert!(matches!(c.merge_str("just text"), Err(Error::Config(_))));
        assert!(matches!(c.set("grid.points", "many"), Err(Error::Config(_))));
        c.set("scattering.s", "exponential").unwrap();
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.set("conditions.k", "2").unwrap();
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.set("conjecture.samples", "1e5").unwrap();
        assert_eq!(c.tm_samples, 100_000);
    }

    #[test]
    fn every_key_is_settable() {
        let samples = [
            "1", "1e-9", "3", "-1", "1", "8", "1", "2", "ising", "2", "-1", "1", "4", "5", "100", "3", "10", "4", "3", "bs", "1,3", "5", "0.001",
            "gaussian:width=0.5", "false", "power:alpha=0.5", "0.4", "50", "1", "2", "0.5", "-1", "1", "3",
        ];
        assert_eq!(samples.len(), Config::KEYS.len());
        let mut c = Config::default();
        for (k, v) in Config::KEYS.iter().zip(samples) {
            c.set(k, v).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
        c.validate().unwrap();
    }
}
