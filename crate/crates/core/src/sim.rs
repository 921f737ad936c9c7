//! Fixed-step closed-loop simulation and the L∞ bound check.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;
use crate::model::StateSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("eigenvalue computation failed")]
    Eigen,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Disturbance {
    Zero,
    /// `d_i(t) = a_i cos(ωt)`; unit amplitudes on every channel when `None`.
    Cosine { omega: f64, amplitudes: Option<Vec<f64>> },
}

impl Default for Disturbance {
    fn default() -> Self {
        Disturbance::Cosine {
            omega: 0.1,
            amplitudes: None,
        }
    }
}

impl Disturbance {
    pub fn eval(&self, t: f64, n: usize) -> DVector<f64> {
        match self {
            Disturbance::Zero => DVector::zeros(n),
            Disturbance::Cosine { omega, amplitudes } => {
                let c = (omega * t).cos();
                match amplitudes {
                    Some(a) => DVector::from_iterator(n, a.iter().map(|a| a * c)),
                    None => DVector::from_element(n, c),
                }
            }
        }
    }

    /// `sup_t ‖d(t)‖₂`.
    pub fn sup_norm(&self, n: usize) -> f64 {
        match self {
            Disturbance::Zero => 0.0,
            Disturbance::Cosine { amplitudes: None, .. } => (n as f64).sqrt(),
            Disturbance::Cosine { amplitudes: Some(a), .. } => a.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub disturbance: Disturbance,
    /// Zero state when `None`.
    pub x_init: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 60.0,
            dt: 1e-3,
            disturbance: Disturbance::default(),
            x_init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub performance: Vec<DVector<f64>>,
    pub disturbance: Vec<DVector<f64>>,
    pub norm_x: Vec<f64>,
    pub norm_u: Vec<f64>,
    pub norm_p: Vec<f64>,
    pub norm_d: Vec<f64>,
    /// Set when the state stopped being finite; the trace ends there.
    pub diverged: bool,
}

impl SimTrace {
    pub fn max_norm_x(&self) -> f64 {
        self.norm_x.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_norm_p(&self) -> f64 {
        self.norm_p.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_norm_u(&self) -> f64 {
        self.norm_u.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_norm_d(&self) -> f64 {
        self.norm_d.iter().copied().fold(0.0, f64::max)
    }

    /// Columns `t, norm_x, norm_p, norm_u, norm_d, x1`, every `stride`-th
    /// sample, optionally followed by the full state.
    pub fn csv(&self, stride: usize, full_state: bool) -> String {
        let stride = stride.max(1);
        let nx = self.states.first().map_or(0, |x| x.len());
        let mut s = String::from("t,norm_x,norm_p,norm_u,norm_d,x1");
        if full_state {
            for i in 1..=nx {
                let _ = write!(s, ",x{i}");
            }
        }
        s.push('\n');
        for k in (0..self.times.len()).step_by(stride) {
            let x = &self.states[k];
            let _ = write!(
                s,
                "{:.6},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
                self.times[k],
                self.norm_x[k],
                self.norm_p[k],
                self.norm_u[k],
                self.norm_d[k],
                x.get(0).copied().unwrap_or(0.0)
            );
            if full_state {
                for v in x.iter() {
                    let _ = write!(s, ",{v:.9e}");
                }
            }
            s.push('\n');
        }
        s
    }
}

/// `diag(Γ) K`.
fn selected_gain(ss: &StateSpace, k: &DMatrix<f64>, gamma: &[bool]) -> Result<DMatrix<f64>, SimError> {
    if k.shape() != (ss.n_u(), ss.n_x()) || gamma.len() != ss.n_u() {
        return Err(SimError::Dimension(format!(
            "K is {}x{}, selection has {} entries, model has n_u = {}, n_x = {}",
            k.nrows(),
            k.ncols(),
            gamma.len(),
            ss.n_u(),
            ss.n_x()
        )));
    }
    let mut g = k.clone();
    for (i, on) in gamma.iter().enumerate() {
        if !on {
            g.row_mut(i).fill(0.0);
        }
    }
    Ok(g)
}

/// Integrates `ẋ = (A + BuΓK)x + Bd d(t)` with classical RK4.
pub fn simulate(ss: &StateSpace, k: &DMatrix<f64>, gamma: &[bool], cfg: &SimConfig) -> Result<SimTrace, SimError> {
    if !(cfg.dt > 0.0 && cfg.t_end >= cfg.dt && cfg.t_end.is_finite()) {
        return Err(SimError::Config("need dt > 0 and t_end >= dt".into()));
    }
    let (nx, nd) = (ss.n_x(), ss.n_d());
    if let Disturbance::Cosine { amplitudes: Some(a), .. } = &cfg.disturbance {
        if a.len() != nd {
            return Err(SimError::Dimension(format!("{} amplitudes for {nd} channels", a.len())));
        }
    }
    let gk = selected_gain(ss, k, gamma)?;
    let acl = &ss.a + &ss.bu * &gk;
    let mut x = match &cfg.x_init {
        Some(v) if v.len() == nx => DVector::from_column_slice(v),
        Some(v) => return Err(SimError::Dimension(format!("initial state has {} entries, expected {nx}", v.len()))),
        None => DVector::zeros(nx),
    };
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let h = cfg.dt;
    let dist = |t: f64| cfg.disturbance.eval(t, nd);
    let f = |t: f64, x: &DVector<f64>| &acl * x + &ss.bd * dist(t);

    let mut tr = SimTrace {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        performance: Vec::with_capacity(steps + 1),
        disturbance: Vec::with_capacity(steps + 1),
        norm_x: Vec::with_capacity(steps + 1),
        norm_u: Vec::with_capacity(steps + 1),
        norm_p: Vec::with_capacity(steps + 1),
        norm_d: Vec::with_capacity(steps + 1),
        diverged: false,
    };
    let record = |tr: &mut SimTrace, t: f64, x: &DVector<f64>| {
        let u = &gk * x;
        let p = &ss.c * x + &ss.d * &u;
        let d = dist(t);
        tr.times.push(t);
        tr.norm_x.push(x.norm());
        tr.norm_u.push(u.norm());
        tr.norm_p.push(p.norm());
        tr.norm_d.push(d.norm());
        tr.states.push(x.clone());
        tr.inputs.push(u);
        tr.performance.push(p);
        tr.disturbance.push(d);
    };
    record(&mut tr, 0.0, &x);
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = f(t, &x);
        let k2 = f(t + 0.5 * h, &(&x + &k1 * (0.5 * h)));
        let k3 = f(t + 0.5 * h, &(&x + &k2 * (0.5 * h)));
        let k4 = f(t + h, &(&x + &k3 * h));
        x += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        if x.iter().any(|v| !v.is_finite()) {
            tr.diverged = true;
            break;
        }
        record(&mut tr, (n + 1) as f64 * h, &x);
    }
    Ok(tr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfCheck {
    /// `μρ − max_t ‖p(t)‖₂`; nonnegative when the bound held.
    pub margin: f64,
    pub max_p: f64,
    pub max_u: f64,
}

impl LinfCheck {
    pub fn input_ok(&self, u_max: f64) -> bool {
        self.max_u <= u_max
    }
}

pub fn verify_linf(trace: &SimTrace, mu: f64, rho: f64) -> LinfCheck {
    let max_p = if trace.diverged { f64::INFINITY } else { trace.max_norm_p() };
    let max_u = if trace.diverged { f64::INFINITY } else { trace.max_norm_u() };
    LinfCheck {
        margin: mu * rho - max_p,
        max_p,
        max_u,
    }
}

/// Largest real part of the eigenvalues of `A + BuΓK`.
pub fn spectral_abscissa(ss: &StateSpace, k: &DMatrix<f64>, gamma: &[bool]) -> Result<f64, SimError> {
    let gk = selected_gain(ss, k, gamma)?;
    linalg::spectral_abscissa(&(&ss.a + &ss.bu * gk)).ok_or(SimError::Eigen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_chain, mechanical_network, EsaParams, NetworkTopology};

    fn first_order() -> StateSpace {
        let one = DMatrix::from_element(1, 1, 1.0);
        StateSpace {
            a: -one.clone(),
            bu: one.clone(),
            bd: one.clone(),
            c: one.clone(),
            d: DMatrix::zeros(1, 1),
        }
    }

    #[test]
    fn zero_input_gives_zero_trace() {
        let ss = build_chain(&EsaParams::default(), 2).unwrap();
        let cfg = SimConfig {
            disturbance: Disturbance::Zero,
            t_end: 1.0,
            ..SimConfig::default()
        };
        let k = DMatrix::from_element(2, 8, 0.3);
        let tr = simulate(&ss, &k, &[true, true], &cfg).unwrap();
        assert_eq!(tr.max_norm_x(), 0.0);
        assert_eq!(tr.times.len(), 1001);
        let chk = verify_linf(&tr, 0.5, 2.0);
        assert_eq!(chk.margin, 1.0);
    }

    #[test]
    fn first_order_frequency_response() {
        let ss = first_order();
        let cfg = SimConfig {
            t_end: 200.0,
            dt: 1e-2,
            ..SimConfig::default()
        };
        let tr = simulate(&ss, &DMatrix::zeros(1, 1), &[false], &cfg).unwrap();
        // steady state after the e^{-t} transient: amplitude over the last period
        let start = tr.times.iter().position(|t| *t >= 200.0 - 2.0 * std::f64::consts::PI / 0.1).unwrap();
        let amp = tr.states[start..].iter().map(|x| x[0].abs()).fold(0.0, f64::max);
        assert!((amp - 1.0 / 1.01f64.sqrt()).abs() < 1e-4, "{amp}");
    }

    #[test]
    fn destabilizing_gain_is_caught() {
        let ss = first_order();
        let k = DMatrix::from_element(1, 1, 3.0);
        assert!(spectral_abscissa(&ss, &k, &[true]).unwrap() > 0.0);
        assert_eq!(spectral_abscissa(&ss, &k, &[false]).unwrap(), -1.0);
        let tr = simulate(&ss, &k, &[true], &SimConfig { t_end: 10.0, ..SimConfig::default() }).unwrap();
        assert!(verify_linf(&tr, 1.0, 1.0).margin < 0.0);
    }

    #[test]
    fn undamped_open_loop_is_marginal() {
        let mut params = EsaParams::default();
        params.c1 = 0.0;
        params.c2 = 0.0;
        let ss = build_chain(&params, 2).unwrap();
        let a = spectral_abscissa(&ss, &DMatrix::zeros(2, 8), &[true, true]).unwrap();
        assert!(a.abs() < 1e-9, "{a}");
        let net = mechanical_network(&params, &NetworkTopology { columns: 1, actuators_per_column: 2 }).unwrap();
        assert_eq!(net.n_masses(), 4);
    }

    #[test]
    fn cosine_sup_norm() {
        assert!((Disturbance::default().sup_norm(8) - 8f64.sqrt()).abs() < 1e-12);
        let d = Disturbance::Cosine {
            omega: 1.0,
            amplitudes: Some(vec![3.0, 4.0]),
        };
        assert_eq!(d.sup_norm(2), 5.0);
        assert_eq!(d.eval(0.0, 2).as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let ss = first_order();
        let cfg = SimConfig { t_end: 0.01, ..SimConfig::default() };
        let tr = simulate(&ss, &DMatrix::zeros(1, 1), &[true], &cfg).unwrap();
        let csv = tr.csv(5, true);
        assert!(csv.starts_with("t,norm_x,norm_p,norm_u,norm_d,x1,x1\n"));
        assert_eq!(csv.lines().count(), 1 + 3);
    }

    #[test]
    fn bad_config_rejected() {
        let ss = first_order();
        let cfg = SimConfig { dt: 0.0, ..SimConfig::default() };
        assert!(simulate(&ss, &DMatrix::zeros(1, 1), &[true], &cfg).is_err());
        assert!(simulate(&ss, &DMatrix::zeros(2, 1), &[true], &SimConfig::default()).is_err());
    }
}
