use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::kv::{ConfigError, KvFile};
use crate::model::StateSpace;
use crate::sdp::SdpStatus;

use super::blocks::{BlockId, BlockResiduals};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("selection violates logistic constraints: {0}")]
    Logistics(String),
    #[error("no certificate exists: block {block} has residual {residual:.3e}")]
    Infeasible { block: BlockId, residual: f64 },
    #[error("solver finished with status {status}; worst block residual {residual:.3e}")]
    Numerical { status: SdpStatus, residual: f64 },
}

/// Per-period restrictions on the selection diagonal. Indices are 0-based.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogisticConstraints {
    pub forced_on: Vec<usize>,
    pub forced_off: Vec<usize>,
    pub max_active: Option<usize>,
}

impl LogisticConstraints {
    pub fn validate(&self, n_u: usize) -> Result<(), SynthError> {
        for &i in self.forced_on.iter().chain(&self.forced_off) {
            if i >= n_u {
                return Err(SynthError::InvalidProblem(format!(
                    "actuator index {} out of range 1..={n_u}",
                    i + 1
                )));
            }
        }
        if let Some(i) = self.forced_on.iter().find(|i| self.forced_off.contains(i)) {
            return Err(SynthError::InvalidProblem(format!(
                "actuator {} is both forced on and forced off",
                i + 1
            )));
        }
        if let Some(cap) = self.max_active {
            let mut on = self.forced_on.clone();
            on.sort_unstable();
            on.dedup();
            if on.len() > cap {
                return Err(SynthError::InvalidProblem(format!(
                    "{} actuators forced on but max_active = {cap}",
                    on.len()
                )));
            }
        }
        Ok(())
    }

    /// `Some(true)` / `Some(false)` for pinned actuators.
    pub fn pinned(&self, i: usize) -> Option<bool> {
        if self.forced_on.contains(&i) {
            Some(true)
        } else if self.forced_off.contains(&i) {
            Some(false)
        } else {
            None
        }
    }

    pub fn admits(&self, gamma: &[bool]) -> Result<(), SynthError> {
        for (i, &g) in gamma.iter().enumerate() {
            if let Some(p) = self.pinned(i) {
                if p != g {
                    return Err(SynthError::Logistics(format!(
                        "actuator {} must be {}",
                        i + 1,
                        if p { "on" } else { "off" }
                    )));
                }
            }
        }
        let active = gamma.iter().filter(|g| **g).count();
        if let Some(cap) = self.max_active {
            if active > cap {
                return Err(SynthError::Logistics(format!(
                    "{active} active actuators exceed max_active = {cap}"
                )));
            }
        }
        Ok(())
    }
}

/// Data of one synthesis run.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisProblem {
    pub ss: StateSpace,
    pub rho: f64,
    pub u_max: f64,
    pub alpha_gamma: f64,
    pub x0: DVector<f64>,
    pub periods: usize,
    /// One entry per period.
    pub logistics: Vec<LogisticConstraints>,
}

impl SynthesisProblem {
    /// Single-period problem with zero initial state, ρ = √n_d and no
    /// logistic restrictions.
    pub fn new(ss: StateSpace, u_max: f64, alpha_gamma: f64) -> Self {
        let n_x = ss.n_x();
        let rho = (ss.n_d() as f64).sqrt();
        Self {
            ss,
            rho,
            u_max,
            alpha_gamma,
            x0: DVector::zeros(n_x),
            periods: 1,
            logistics: vec![LogisticConstraints::default()],
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.ss
            .validate()
            .map_err(|e| SynthError::InvalidProblem(e.to_string()))?;
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(SynthError::InvalidProblem("rho must be positive".into()));
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(SynthError::InvalidProblem("u_max must be positive".into()));
        }
        if !(self.alpha_gamma >= 0.0 && self.alpha_gamma.is_finite()) {
            return Err(SynthError::InvalidProblem(
                "alpha_gamma must be nonnegative".into(),
            ));
        }
        if self.x0.len() != self.ss.n_x() {
            return Err(SynthError::Dimension(format!(
                "x0 has length {}, expected {}",
                self.x0.len(),
                self.ss.n_x()
            )));
        }
        if self.periods == 0 || self.logistics.len() != self.periods {
            return Err(SynthError::InvalidProblem(
                "need one set of logistic constraints per period".into(),
            ));
        }
        for l in &self.logistics {
            l.validate(self.ss.n_u())?;
        }
        Ok(())
    }

    /// The single-period problem of period `j`.
    pub fn period(&self, j: usize) -> Self {
        Self {
            periods: 1,
            logistics: vec![self.logistics[j].clone()],
            ..self.clone()
        }
    }

    /// Logistic constraints of the first (for single-period problems, the
    /// only) period.
    pub fn logistics(&self) -> &LogisticConstraints {
        &self.logistics[0]
    }
}

/// Problem file contents prior to binding a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub rho: Option<f64>,
    pub u_max: f64,
    pub alpha_gamma: f64,
    /// `None` means the zero vector.
    pub x0: Option<Vec<f64>>,
    pub periods: usize,
    /// 1-based actuator indices as written in the file.
    pub forced_on: Vec<usize>,
    pub forced_off: Vec<usize>,
    pub max_active: Option<usize>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            rho: None,
            u_max: 250.0,
            alpha_gamma: 0.02,
            x0: None,
            periods: 1,
            forced_on: Vec::new(),
            forced_off: Vec::new(),
            max_active: None,
        }
    }
}

const PROBLEM_KEYS: &[&str] = &[
    "rho",
    "u_max",
    "alpha_gamma",
    "x0",
    "periods",
    "forced_on",
    "forced_off",
    "max_active",
];

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let kv = KvFile::parse(text, PROBLEM_KEYS)?;
        let d = Self::default();
        let x0 = match kv.raw("x0") {
            None => None,
            Some(v) if v.trim() == "zeros" => None,
            Some(_) => kv.get_list::<f64>("x0")?,
        };
        let max_active = match kv.raw("max_active") {
            Some(v) if v.trim().is_empty() || v.trim() == "none" => None,
            _ => kv.get("max_active")?,
        };
        let cfg = Self {
            rho: kv.get("rho")?,
            u_max: kv.get_or("u_max", d.u_max)?,
            alpha_gamma: kv.get_or("alpha_gamma", d.alpha_gamma)?,
            x0,
            periods: kv.get_or("periods", d.periods)?,
            forced_on: kv.get_list("forced_on")?.unwrap_or_default(),
            forced_off: kv.get_list("forced_off")?.unwrap_or_default(),
            max_active,
        };
        if cfg.forced_on.iter().chain(&cfg.forced_off).any(|&i| i == 0) {
            return Err(ConfigError::Invalid(
                "actuator indices are 1-based".into(),
            ));
        }
        if cfg.periods == 0 {
            return Err(ConfigError::Invalid("periods must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn to_kv_string(&self) -> String {
        let list = |v: &[usize]| {
            v.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut s = String::new();
        if let Some(r) = self.rho {
            s += &format!("rho = {r:?}\n");
        }
        s += &format!("u_max = {:?}\nalpha_gamma = {:?}\n", self.u_max, self.alpha_gamma);
        match &self.x0 {
            None => s += "x0 = zeros\n",
            Some(x) => {
                s += &format!(
                    "x0 = {}\n",
                    x.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
                )
            }
        }
        s += &format!("periods = {}\n", self.periods);
        s += &format!("forced_on = {}\n", list(&self.forced_on));
        s += &format!("forced_off = {}\n", list(&self.forced_off));
        if let Some(m) = self.max_active {
            s += &format!("max_active = {m}\n");
        }
        s
    }

    /// Binds the configuration to a model; every period shares the same
    /// logistic constraints.
    pub fn bind(&self, ss: StateSpace) -> Result<SynthesisProblem, SynthError> {
        let n_x = ss.n_x();
        let x0 = match &self.x0 {
            None => DVector::zeros(n_x),
            Some(v) => DVector::from_column_slice(v),
        };
        let logistics = LogisticConstraints {
            forced_on: self.forced_on.iter().map(|i| i - 1).collect(),
            forced_off: self.forced_off.iter().map(|i| i - 1).collect(),
            max_active: self.max_active,
        };
        let p = SynthesisProblem {
            rho: self.rho.unwrap_or((ss.n_d() as f64).sqrt()),
            ss,
            u_max: self.u_max,
            alpha_gamma: self.alpha_gamma,
            x0,
            periods: self.periods,
            logistics: vec![logistics; self.periods],
        };
        p.validate()?;
        Ok(p)
    }
}

/// Decision variables of the synthesis inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthVariables {
    pub p: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// Diagonal of Γ, entries in [0, 1].
    pub gamma: Vec<f64>,
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub alpha: f64,
}

impl SynthVariables {
    pub fn mu(&self) -> f64 {
        (self.mu0 * self.mu1 + self.mu2).max(0.0).sqrt()
    }

    /// `K = −Y P⁻¹`.
    pub fn gain(&self) -> Option<DMatrix<f64>> {
        let chol = self.p.clone().cholesky()?;
        // K P = −Y  ⇔  P Kᵀ = −Yᵀ
        Some(-chol.solve(&self.y.transpose()).transpose())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertStatus {
    Certified,
    Uncertified,
}

impl std::fmt::Display for CertStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CertStatus::Certified => "certified",
            CertStatus::Uncertified => "uncertified",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSolution {
    pub k: DMatrix<f64>,
    pub gamma: Vec<bool>,
    pub mu: f64,
    pub objective: f64,
    pub status: CertStatus,
    pub vars: SynthVariables,
    pub residuals: BlockResiduals,
    pub solver_status: SdpStatus,
}

impl ControllerSolution {
    pub fn active_count(&self) -> usize {
        self.gamma.iter().filter(|g| **g).count()
    }

    /// 1-based indices of the active actuators.
    pub fn active_set(&self) -> Vec<usize> {
        self.gamma
            .iter()
            .enumerate()
            .filter(|(_, g)| **g)
            .map(|(i, _)| i + 1)
            .collect()
    }
}
