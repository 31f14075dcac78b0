//! Scattering functions `S(ζ) = sign · exp(i a sinh ζ)`.
//!
//! The three built-ins are `free` (1), `ising` (−1) and `exponential` with
//! parameter `a`. The signed exponential `−exp(i a sinh ζ)` is also a valid
//! scattering function and is exposed for checks that need `S(0) = −1`
//! together with a nontrivial rapidity dependence.

use crate::report::{worse, Check};
use crate::{Error, Result, C};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Largest |Re ζ| accepted when `a != 0`.
pub const RE_GUARD: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringFunction {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    sign: f64,
    a: f64,
    /// Poles inside 0 < Im ζ < π. Empty for every function built here.
    pub poles_in_strip: Vec<C>,
}

impl ScatteringFunction {
    pub fn free() -> Self {
        Self::raw("free", 1.0, 0.0)
    }

    pub fn ising() -> Self {
        Self::raw("ising", -1.0, 0.0)
    }

    pub fn exponential(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Config(format!("exponential needs real a >= 0, got {a}")));
        }
        let mut s = Self::raw("exponential", 1.0, a);
        s.params.insert("a".into(), a);
        Ok(s)
    }

    /// `−exp(i a sinh ζ)`: Ising sign times the exponential family.
    pub fn signed_exponential(a: f64) -> Result<Self> {
        let mut s = Self::exponential(a)?;
        s.name = "ising-exponential".into();
        s.sign = -1.0;
        Ok(s)
    }

    fn raw(name: &str, sign: f64, a: f64) -> Self {
        ScatteringFunction {
            name: name.into(),
            params: BTreeMap::new(),
            sign,
            a,
            poles_in_strip: Vec::new(),
        }
    }

    /// Look up a built-in by name.
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        match name {
            "free" => Ok(Self::free()),
            "ising" => Ok(Self::ising()),
            "exponential" => {
                let a = params
                    .get("a")
                    .ok_or_else(|| Error::Config("exponential requires parameter a".into()))?;
                Self::exponential(*a)
            }
            "ising-exponential" => {
                let a = params
                    .get("a")
                    .ok_or_else(|| Error::Config("ising-exponential requires parameter a".into()))?;
                Self::signed_exponential(*a)
            }
            other => Err(Error::Config(format!("unknown scattering function '{other}'"))),
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// S(0).
    pub fn at_zero(&self) -> f64 {
        self.sign
    }

    pub fn is_constant(&self) -> bool {
        self.a == 0.0
    }

    /// Guarded evaluation.
    pub fn eval(&self, z: C) -> Result<C> {
        if self.a != 0.0 && z.re.abs() > RE_GUARD {
            return Err(Error::Eval(format!(
                "{}: |Re ζ| = {} exceeds {RE_GUARD}",
                self.name,
                z.re.abs()
            )));
        }
        Ok(self.value(z))
    }

    /// Unguarded evaluation for hot loops whose arguments are known to be small.
    #[inline]
    pub fn value(&self, z: C) -> C {
        if self.a == 0.0 {
            return C::new(self.sign, 0.0);
        }
        (C::i() * self.a * z.sinh()).exp() * self.sign
    }

    /// S at a real rapidity.
    #[inline]
    pub fn real(&self, theta: f64) -> C {
        if self.a == 0.0 {
            return C::new(self.sign, 0.0);
        }
        C::from_polar(1.0, self.a * theta.sinh()) * self.sign
    }

    /// Bounded by exp(a·|Im sinh ζ|) on the strip; returns the supremum of
    /// |S| over the given points.
    pub fn sup_modulus(&self, pts: &[C]) -> f64 {
        pts.iter().map(|z| self.value(*z).norm()).fold(0.0, f64::max)
    }
}

impl fmt::Display for ScatteringFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.a == 0.0 && self.name != "ising-exponential" {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}:a={}", self.name, self.a)
        }
    }
}

/// Parses `free | ising | exponential:a=<f>` (and `ising-exponential:a=<f>`).
impl FromStr for ScatteringFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), r),
            None => (s, ""),
        };
        let mut params = BTreeMap::new();
        for kv in rest.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad parameter '{kv}' in '{s}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad number '{v}' in '{s}'")))?;
            params.insert(k.trim().to_string(), v);
        }
        Self::builtin(name, &params)
    }
}

/// Residuals of S(θ+iπ) = S(θ)⁻¹ = S(−θ) = conj S(θ) and |S(θ)| = 1.
/// Points where evaluation fails count as failures (residual +∞) and are
/// listed in the details.
pub fn check_defining_relations(s: &ScatteringFunction, sample: &[f64], tol: f64) -> Check {
    let t0 = std::time::Instant::now();
    let mut worst = 0.0_f64;
    let mut failed = Vec::new();
    for &th in sample {
        let z = C::new(th, 0.0);
        let vals = (
            s.eval(z + C::new(0.0, PI)),
            s.eval(z),
            s.eval(-z),
        );
        match vals {
            (Ok(shift), Ok(v), Ok(neg)) => {
                let inv = v.inv();
                let r = [
                    (shift - inv).norm(),
                    (inv - neg).norm(),
                    (neg - v.conj()).norm(),
                    (v.norm() - 1.0).abs(),
                ]
                .into_iter()
                .fold(0.0, worse);
                worst = worse(worst, r);
            }
            _ => {
                failed.push(th);
                worst = f64::INFINITY;
            }
        }
    }
    let mut c = Check::residual(
        &format!("defining relations {s}"),
        "scattering-symmetry-relation",
        worst,
        tol,
    )
    .samples(sample.len() as u64)
    .timed(t0);
    if !failed.is_empty() {
        c = c.detail("failed_points", failed);
    }
    c
}

/// |S(ζ + 2πi) − S(ζ)| over the given points.
pub fn periodicity_residual(s: &ScatteringFunction, pts: &[C]) -> f64 {
    pts.iter()
        .map(|&z| (s.value(z + C::new(0.0, 2.0 * PI)) - s.value(z)).norm())
        .fold(0.0, worse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(ScatteringFunction::free().value(C::new(0.3, 0.2)), C::new(1.0, 0.0));
        assert_eq!(ScatteringFunction::ising().value(C::new(-4.0, 1.0)), C::new(-1.0, 0.0));
    }

    #[test]
    fn exponential_is_unimodular_on_reals() {
        let s = ScatteringFunction::exponential(0.7).unwrap();
        assert!((s.real(1.0).norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.at_zero(), 1.0);
    }

    #[test]
    fn parse_specs() {
        let s: ScatteringFunction = "exponential:a=0.7".parse().unwrap();
        assert_eq!(s.a(), 0.7);
        assert!("exponential".parse::<ScatteringFunction>().is_err());
        assert!("sinh-gordon".parse::<ScatteringFunction>().is_err());
        assert!("exponential:a=-1".parse::<ScatteringFunction>().is_err());
        assert_eq!("ising".parse::<ScatteringFunction>().unwrap().to_string(), "ising");
        let round: ScatteringFunction = s.to_string().parse().unwrap();
        assert_eq!(round, s);
    }

    #[test]
    fn overflow_guard() {
        let s = ScatteringFunction::exponential(0.7).unwrap();
        assert!(s.eval(C::new(51.0, 0.0)).is_err());
        let c = check_defining_relations(&s, &[0.0, 60.0], 1e-10);
        assert!(!c.passed);
        assert!(c.details.contains_key("failed_points"));
    }

    #[test]
    fn relations_hold() {
        let grid: Vec<f64> = (0..64).map(|i| -3.0 + 6.0 * i as f64 / 63.0).collect();
        for s in [
            ScatteringFunction::free(),
            ScatteringFunction::ising(),
            ScatteringFunction::exponential(0.7).unwrap(),
            ScatteringFunction::signed_exponential(0.7).unwrap(),
        ] {
            let c = check_defining_relations(&s, &grid, 1e-10);
            assert!(c.passed, "{s}: {}", c.max_residual);
        }
        let ising = check_defining_relations(&ScatteringFunction::ising(), &[-2.0, 0.0, 2.0], 1e-12);
        assert_eq!(ising.max_residual, 0.0);
    }

    #[test]
    fn periodic() {
        let s = ScatteringFunction::exponential(0.7).unwrap();
        let pts = [C::new(0.3, 0.1), C::new(-1.2, 2.0), C::new(2.0, -0.5)];
        assert!(periodicity_residual(&s, &pts) < 1e-13);
    }
}
