//! Simulated error processes and near-integrated series.
//!
//! Errors follow a time-varying MA(1) or AR(1) recursion driven by
//! heteroscedastic Gaussian innovations `e_t = omega(t/n) eps_t`:
//!
//! * `MA`: `u_t = e_t + phi(t/n) e_{t-1}`, with `e_0 = omega(0) eps_0`;
//! * `AR`: `u_t = e_t + phi(t/n) u_{t-1}`, with `u_0 = 0`.
//!
//! The observed series is `X_t = (1 + c/n) X_{t-1} + u_t` from `X_0 = 0`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::series::{ObservedSeries, TrendSpec};

/// Coefficient path `phi_i(s)`, `i = 1..=6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PhiSpec(u8);

/// Innovation scale path `omega_j(s)`, `j = 1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct OmegaSpec(u8);

fn indicator(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

impl PhiSpec {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=6).contains(&index) {
            Ok(PhiSpec(index))
        } else {
            Err(Error::InvalidConfig(format!("phi index {index} is outside 1..=6")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn eval(self, s: f64) -> f64 {
        match self.0 {
            1 => 0.8,
            2 => -0.8,
            3 => 0.2 + 0.6 * indicator(s > 0.2),
            4 => 0.2 + 0.6 * indicator(s > 0.8),
            5 => 0.8 - 1.6 * s,
            6 => 0.6 * s - 0.8,
            _ => unreachable!("validated at construction"),
        }
    }
}

impl OmegaSpec {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=5).contains(&index) {
            Ok(OmegaSpec(index))
        } else {
            Err(Error::InvalidConfig(format!("omega index {index} is outside 1..=5")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn eval(self, s: f64) -> f64 {
        match self.0 {
            1 => 0.5,
            2 => 0.1 + 0.5 * indicator(s > 0.1),
            3 => 0.1 + 0.5 * indicator(s > 0.9),
            4 => 0.1 + 0.5 * indicator(0.4 < s && s < 0.6),
            5 => 0.5 * s + 0.1,
            _ => unreachable!("validated at construction"),
        }
    }
}

impl TryFrom<u8> for PhiSpec {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        PhiSpec::new(v)
    }
}

impl From<PhiSpec> for u8 {
    fn from(p: PhiSpec) -> u8 {
        p.0
    }
}

impl TryFrom<u8> for OmegaSpec {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        OmegaSpec::new(v)
    }
}

impl From<OmegaSpec> for u8 {
    fn from(o: OmegaSpec) -> u8 {
        o.0
    }
}

pub fn phi_eval(spec: PhiSpec, s: f64) -> f64 {
    spec.eval(s)
}

pub fn omega_eval(spec: OmegaSpec, s: f64) -> f64 {
    spec.eval(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorModel {
    MA,
    AR,
}

/// A named error process `MA_i_j` / `AR_i_j`, without sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcessId {
    pub model: ErrorModel,
    pub phi: PhiSpec,
    pub omega: OmegaSpec,
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let model = match self.model {
            ErrorModel::MA => "MA",
            ErrorModel::AR => "AR",
        };
        write!(f, "{model}_{}_{}", self.phi.0, self.omega.0)
    }
}

impl FromStr for ProcessId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("malformed process id '{s}', expected e.g. MA_1_1"));
        let mut parts = s.trim().split('_');
        let model = match parts.next() {
            Some("MA") => ErrorModel::MA,
            Some("AR") => ErrorModel::AR,
            _ => return Err(bad()),
        };
        let phi = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let omega = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(ProcessId {
            model,
            phi: PhiSpec::new(phi)?,
            omega: OmegaSpec::new(omega)?,
        })
    }
}

/// One simulation design: error process, sample size and local alternative `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub process: ProcessId,
    pub n: usize,
    /// Local-to-unity parameter; the autoregressive root is `1 + c/n`.
    pub c: f64,
}

impl DgpSpec {
    pub fn new(process: ProcessId, n: usize, c: f64) -> Result<Self> {
        let spec = DgpSpec { process, n, c };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 20 {
            return Err(Error::InvalidConfig(format!("sample size {} is below 20", self.n)));
        }
        if !(self.c <= 0.0) {
            return Err(Error::InvalidConfig(format!("local alternative c = {} must be <= 0", self.c)));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        1.0 + self.c / self.n as f64
    }
}

/// Error recursion with arbitrary coefficient and scale paths.
pub fn simulate_errors_with(
    model: ErrorModel,
    phi: impl Fn(f64) -> f64,
    omega: impl Fn(f64) -> f64,
    n: usize,
    rng: &mut StreamRng,
) -> Vec<f64> {
    let nf = n as f64;
    let mut u = Vec::with_capacity(n);
    match model {
        ErrorModel::MA => {
            let eps0: f64 = rng.sample(StandardNormal);
            let mut e_prev = omega(0.0) * eps0;
            for t in 1..=n {
                let s = t as f64 / nf;
                let eps: f64 = rng.sample(StandardNormal);
                let e = omega(s) * eps;
                u.push(e + phi(s) * e_prev);
                e_prev = e;
            }
        }
        ErrorModel::AR => {
            let mut u_prev = 0.0;
            for t in 1..=n {
                let s = t as f64 / nf;
                let eps: f64 = rng.sample(StandardNormal);
                let ut = omega(s) * eps + phi(s) * u_prev;
                u.push(ut);
                u_prev = ut;
            }
        }
    }
    u
}

/// Simulate `u_1..u_n` for a design.
pub fn simulate_errors(spec: &DgpSpec, rng: &mut StreamRng) -> Vec<f64> {
    let p = spec.process;
    simulate_errors_with(p.model, |s| p.phi.eval(s), |s| p.omega.eval(s), spec.n, rng)
}

/// `X_t = rho X_{t-1} + u_t` from `X_0 = 0`.
pub fn near_integrate(u: &[f64], rho: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(u.len());
    let mut prev = 0.0;
    for &ut in u {
        prev = rho * prev + ut;
        x.push(prev);
    }
    x
}

/// Simulate the observed series `X_1..X_n` (no deterministic trend).
pub fn simulate_series(spec: &DgpSpec, rng: &mut StreamRng) -> Result<ObservedSeries> {
    spec.validate()?;
    let u = simulate_errors(spec, rng);
    ObservedSeries::new(near_integrate(&u, spec.rho()), TrendSpec::None)
}
