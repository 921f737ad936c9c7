//! WebAssembly bindings for the static demo page in `www/`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

use esa_core::lmi::{certify_fixed, ControllerSolution, ProblemConfig, SynthError, SynthesisProblem};
use esa_core::model::{ModelConfig, NetworkTopology};
use esa_core::sim::{simulate, spectral_abscissa, verify_linf, SimConfig};

/// Largest network the page offers.
const MAX_ACTUATORS: usize = 8;

#[wasm_bindgen]
pub struct Demo {
    problem: SynthesisProblem,
    solution: Option<ControllerSolution>,
}

fn json_list<T: std::fmt::Display>(v: &[T]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(","))
}

#[wasm_bindgen]
impl Demo {
    /// Network of `columns` chains with `per_column` actuators each.
    #[wasm_bindgen(constructor)]
    pub fn new(columns: usize, per_column: usize) -> Result<Demo, JsError> {
        let topology = NetworkTopology {
            columns,
            actuators_per_column: per_column,
        };
        if topology.n_actuators() > MAX_ACTUATORS {
            return Err(JsError::new(&format!("at most {MAX_ACTUATORS} actuators")));
        }
        let model = ModelConfig {
            topology,
            ..ModelConfig::default()
        };
        let ss = model.state_space().map_err(|e| JsError::new(&e.to_string()))?;
        let problem = ProblemConfig::default().bind(ss).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(Demo {
            problem,
            solution: None,
        })
    }

    pub fn n_actuators(&self) -> usize {
        self.problem.ss.n_u()
    }

    pub fn rho(&self) -> f64 {
        self.problem.rho
    }

    /// Certifies the selection (one flag per actuator) and reports the
    /// outcome as a JSON object.
    pub fn certify(&mut self, selection: &[u8], alpha: f64, mu0: f64, mu1: f64) -> String {
        let gamma: Vec<bool> = selection.iter().map(|&b| b != 0).collect();
        self.solution = None;
        match certify_fixed(&self.problem, alpha, mu0, mu1, &gamma) {
            Ok(sol) => {
                let abscissa = spectral_abscissa(&self.problem.ss, &sol.k, &sol.gamma).unwrap_or(f64::NAN);
                let s = format!(
                    "{{\"certified\":true,\"mu\":{},\"bound\":{},\"abscissa\":{},\"active\":{},\"worst_residual\":{}}}",
                    sol.mu,
                    sol.mu * self.problem.rho,
                    abscissa,
                    json_list(&sol.active_set()),
                    sol.residuals.worst().1
                );
                self.solution = Some(sol);
                s
            }
            Err(e) => {
                let (block, residual) = match &e {
                    SynthError::Infeasible { block, residual } => (block.to_string(), *residual),
                    SynthError::Numerical { residual, .. } => (String::from("-"), *residual),
                    _ => (String::from("-"), f64::NAN),
                };
                format!(
                    "{{\"certified\":false,\"message\":{:?},\"block\":{:?},\"residual\":{}}}",
                    e.to_string(),
                    block,
                    if residual.is_finite() { residual.to_string() } else { "null".into() }
                )
            }
        }
    }

    /// `[t, ‖p‖, ‖u‖]` triples of the last certified loop, every `stride`-th step.
    pub fn simulate_closed_loop(&self, t_end: f64, stride: usize) -> Result<Vec<f64>, JsError> {
        let sol = self
            .solution
            .as_ref()
            .ok_or_else(|| JsError::new("certify a selection first"))?;
        self.run(&sol.k, &sol.gamma, t_end, stride)
    }

    /// `[t, ‖p‖, ‖u‖]` triples without feedback.
    pub fn simulate_open_loop(&self, t_end: f64, stride: usize) -> Result<Vec<f64>, JsError> {
        let n = self.n_actuators();
        self.run(&DMatrix::zeros(n, self.problem.ss.n_x()), &vec![false; n], t_end, stride)
    }

    /// Margin `μρ − max ‖p‖` of the last certified loop over `[0, t_end]`.
    pub fn margin(&self, t_end: f64) -> Result<f64, JsError> {
        let sol = self
            .solution
            .as_ref()
            .ok_or_else(|| JsError::new("certify a selection first"))?;
        let cfg = SimConfig {
            t_end,
            ..SimConfig::default()
        };
        let tr = simulate(&self.problem.ss, &sol.k, &sol.gamma, &cfg).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(verify_linf(&tr, sol.mu, self.problem.rho).margin)
    }
}

impl Demo {
    fn run(&self, k: &DMatrix<f64>, gamma: &[bool], t_end: f64, stride: usize) -> Result<Vec<f64>, JsError> {
        let cfg = SimConfig {
            t_end,
            ..SimConfig::default()
        };
        let tr = simulate(&self.problem.ss, k, gamma, &cfg).map_err(|e| JsError::new(&e.to_string()))?;
        let mut out = Vec::new();
        for i in (0..tr.times.len()).step_by(stride.max(1)) {
            out.extend([tr.times[i], tr.norm_p[i], tr.norm_u[i]]);
        }
        Ok(out)
    }

    /// Short description for logs.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "n_x = {}, n_u = {}", self.problem.ss.n_x(), self.problem.ss.n_u());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certify_then_simulate() {
        let mut d = Demo::new(1, 2).unwrap();
        assert_eq!(d.n_actuators(), 2);
        assert_eq!(d.describe(), "n_x = 8, n_u = 2");
        let r = d.certify(&[1, 1], 0.1, 1.0, 0.4);
        assert!(r.contains("\"certified\":true"), "{r}");
        let trace = d.simulate_closed_loop(2.0, 100).unwrap();
        assert_eq!(trace.len() % 3, 0);
        assert_eq!(trace[0], 0.0);
        assert!(d.margin(5.0).unwrap() >= 0.0);
    }

    #[test]
    fn unactuated_selection_is_reported() {
        let mut d = Demo::new(1, 2).unwrap();
        let r = d.certify(&[0, 0], 0.1, 1.0, 0.4);
        assert!(r.contains("\"certified\":false"), "{r}");
        assert!(d.solution.is_none());
        let open = d.simulate_open_loop(1.0, 10).unwrap();
        assert!(open.iter().all(|v| v.is_finite()));
    }
}
