//! Recovery of binary selections from relaxed ones and the resulting bounds.

use std::fmt;

use crate::lmi::{certify_fixed, ControllerSolution, LogisticConstraints, SynthError, SynthesisProblem};
use crate::sca::ScaIterate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceMethod {
    Threshold,
    Ranked,
}

impl fmt::Display for SliceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SliceMethod::Threshold => "threshold",
            SliceMethod::Ranked => "ranked",
        })
    }
}

fn check_unit(gamma_real: &[f64]) -> Result<(), SynthError> {
    if gamma_real.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(SynthError::InvalidProblem("relaxed selection must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Actuator order by decreasing relaxed value, lower index first on ties.
fn ranking(gamma_real: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gamma_real.len()).collect();
    order.sort_by(|&a, &b| gamma_real[b].total_cmp(&gamma_real[a]).then(a.cmp(&b)));
    order
}

/// `Γ_i = 1` iff `gamma_real_i ≥ 0.5`, then pinned entries are overridden and
/// an activation cap keeps the highest-ranked actuators.
pub fn slice_threshold(
    gamma_real: &[f64],
    logistics: &LogisticConstraints,
) -> Result<Vec<bool>, SynthError> {
    check_unit(gamma_real)?;
    logistics.validate(gamma_real.len())?;
    let mut g: Vec<bool> = gamma_real
        .iter()
        .enumerate()
        .map(|(i, v)| logistics.pinned(i).unwrap_or(*v >= 0.5))
        .collect();
    if let Some(cap) = logistics.max_active {
        let mut room = cap.saturating_sub(logistics.forced_on.len());
        for i in ranking(gamma_real) {
            if g[i] && logistics.pinned(i).is_none() {
                if room == 0 {
                    g[i] = false;
                } else {
                    room -= 1;
                }
            }
        }
    }
    logistics.admits(&g)?;
    Ok(g)
}

/// Activates growing prefixes of the ranking and returns the first one that
/// certifies at the given scalars. Pinned actuators keep their state.
pub fn slice_ranked(
    gamma_real: &[f64],
    problem: &SynthesisProblem,
    alpha: f64,
    mu0: f64,
    mu1: f64,
) -> Result<(Vec<bool>, ControllerSolution), SynthError> {
    check_unit(gamma_real)?;
    let logistics = problem.logistics();
    logistics.validate(gamma_real.len())?;
    let free: Vec<usize> = ranking(gamma_real)
        .into_iter()
        .filter(|&i| logistics.pinned(i).is_none())
        .collect();
    let room = logistics
        .max_active
        .map_or(free.len(), |c| c.saturating_sub(logistics.forced_on.len()).min(free.len()));
    let start = usize::from(logistics.forced_on.is_empty() && room > 0);
    let mut last_err = None;
    for k in start..=room {
        let mut g: Vec<bool> = (0..gamma_real.len()).map(|i| logistics.pinned(i) == Some(true)).collect();
        for &i in &free[..k] {
            g[i] = true;
        }
        match certify_fixed(problem, alpha, mu0, mu1, &g) {
            Ok(sol) => return Ok((g, sol)),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| SynthError::Logistics("no admissible selection".into())))
}

/// `L* ≤ f* ≤ U*` with the recovered selection.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub lower: f64,
    pub upper: f64,
    pub gamma_real: Vec<f64>,
    pub gamma_binary: Vec<bool>,
    pub method: SliceMethod,
    pub mu: f64,
}

impl BoundReport {
    /// Relative slack allowed by the solver tolerances.
    pub fn sandwich_holds(&self) -> bool {
        self.lower <= self.upper + 1e-4 * self.upper.abs()
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let real: Vec<String> = self.gamma_real.iter().map(|g| format!("{g:.6}")).collect();
        let bin: Vec<&str> = self.gamma_binary.iter().map(|&b| if b { "1" } else { "0" }).collect();
        writeln!(f, "{{")?;
        writeln!(f, "  \"gamma_real\": [{}],", real.join(", "))?;
        writeln!(f, "  \"gamma_binary\": [{}],", bin.join(", "))?;
        writeln!(f, "  \"method\": \"{}\",", self.method)?;
        writeln!(f, "  \"lower\": {:.10e},", self.lower)?;
        writeln!(f, "  \"upper\": {:.10e},", self.upper)?;
        writeln!(f, "  \"mu\": {:.10e}", self.mu)?;
        write!(f, "}}")
    }
}

/// Splits a product `μ0μ1` evenly. Every block is congruence-invariant under
/// `(P, Y, μ0, μ1) → (tP, tY, μ0/t, tμ1)`, so only the product matters, but
/// the fixed margin is best served by comparable magnitudes.
pub fn balanced_scalars(mu0: f64, mu1: f64) -> (f64, f64) {
    let m = (mu0 * mu1).sqrt();
    (m, m)
}

/// Slices an SCA iterate both ways and keeps the better certified
/// selection. Certification uses the iterate's α and balanced scalars;
/// `lower` is the relaxation bound reported alongside.
pub fn recover(
    problem: &SynthesisProblem,
    iterate: &ScaIterate,
    lower: f64,
) -> Result<(BoundReport, ControllerSolution), SynthError> {
    let v = &iterate.vars;
    let gamma_real: Vec<f64> = v.gamma.iter().map(|g| g.clamp(0.0, 1.0)).collect();
    let (mu0, mu1) = balanced_scalars(v.mu0, v.mu1);
    let threshold = slice_threshold(&gamma_real, problem.logistics())
        .and_then(|g| certify_fixed(problem, v.alpha, mu0, mu1, &g).map(|s| (g, s)));
    let ranked = slice_ranked(&gamma_real, problem, v.alpha, mu0, mu1);
    let (method, (g, sol)) = match (threshold, ranked) {
        (Ok(t), Ok(r)) if r.1.objective < t.1.objective => (SliceMethod::Ranked, r),
        (Ok(t), _) => (SliceMethod::Threshold, t),
        (Err(_), Ok(r)) => (SliceMethod::Ranked, r),
        (Err(_), Err(e)) => return Err(e),
    };
    Ok((
        BoundReport {
            lower,
            upper: sol.objective,
            gamma_real,
            gamma_binary: g,
            method,
            mu: sol.mu,
        },
        sol,
    ))
}
