//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use esa_core::lmi::SynthesisProblem;
use esa_core::misdp::{branch_and_bound, enumerate_oracle, BigMConfig};
use esa_core::model::{build_network, mechanical_network, EsaParams, NetworkTopology, StateSpace};
use esa_core::sim::{simulate, Disturbance, SimConfig};
use esa_core::sdp::{BlockTerm, SdpBlock, SdpProblem};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// State matrix of one chain of two actuators (masses 1..4, both ends
/// anchored through `k2, c2`), written out row by row.
pub fn two_actuator_chain_a(p: &EsaParams) -> DMatrix<f64> {
    let (m, k1, k2, c1, c2) = (p.m, p.k1, p.k2, p.c1, p.c2);
    let stiff = [
        [-(k1 + k2), k1, 0.0, 0.0],
        [k1, -(k1 + k2), k2, 0.0],
        [0.0, k2, -(k1 + k2), k1],
        [0.0, 0.0, k1, -(k1 + k2)],
    ];
    let damp = [
        [-(c1 + c2), c1, 0.0, 0.0],
        [c1, -(c1 + c2), c2, 0.0],
        [0.0, c2, -(c1 + c2), c1],
        [0.0, 0.0, c1, -(c1 + c2)],
    ];
    let mut a = DMatrix::zeros(8, 8);
    for i in 0..4 {
        a[(i, 4 + i)] = 1.0;
        for j in 0..4 {
            a[(4 + i, j)] = stiff[i][j] / m;
            a[(4 + i, 4 + j)] = damp[i][j] / m;
        }
    }
    a
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.min()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-scale..scale))
}

/// Chain of `n` actuators with randomized physical constants and the
/// performance weights of the default instance.
pub fn random_chain_problem(rng: &mut ChaCha8Rng, n: usize) -> SynthesisProblem {
    let params = EsaParams {
        m: rng.gen_range(2e-3..4e-3),
        k1: 10f64.powf(rng.gen_range(-0.5..1.5)),
        c1: 10f64.powf(rng.gen_range(-2.0..0.0)),
        k2: 10f64.powf(rng.gen_range(-0.5..1.5)),
        c2: 10f64.powf(rng.gen_range(-2.0..0.0)),
    };
    let topo = NetworkTopology {
        columns: 1,
        actuators_per_column: n,
    };
    let ss = build_network(&params, &topo, 0.1, 0.01).unwrap();
    SynthesisProblem::new(ss, 250.0, 0.02)
}

/// Compares branch-and-bound against exhaustive enumeration. Selections are
/// compared up to ties: the tree's choice must be one of the enumerated
/// selections whose objective is within `tol` (relative) of the best.
pub fn bnb_agrees_with_enumeration(problem: &SynthesisProblem, cfg: &BigMConfig, tol: f64) -> Result<(), String> {
    let tree = branch_and_bound(problem, cfg);
    let oracle = enumerate_oracle(problem, cfg);
    match (tree, oracle) {
        (Err(_), Err(_)) => Ok(()),
        (Ok(t), Err(e)) => Err(format!("tree found {:?} but enumeration failed: {e}", t.gamma)),
        (Err(e), Ok(o)) => Err(format!("tree failed ({e}) but enumeration found {:?}", o.best)),
        (Ok(t), Ok(o)) => {
            let scale = o.objective.abs().max(1e-12);
            if (t.solution.objective - o.objective).abs() > tol * scale {
                return Err(format!("objective {} vs {}", t.solution.objective, o.objective));
            }
            let near_best = o
                .candidates
                .iter()
                .any(|(g, obj)| *g == t.gamma && obj.is_some_and(|v| (v - o.objective).abs() <= tol * scale));
            if !near_best {
                return Err(format!("selection {:?} is not among the best ({:?})", t.gamma, o.best));
            }
            if t.m_too_small {
                return Err(format!("big-M flagged: max |Y| = {}", t.max_abs_y));
            }
            Ok(())
        }
    }
}

/// Relative change of `max_t ‖x(t)‖` when the step is halved.
pub fn step_halving_change(ss: &StateSpace, k: &DMatrix<f64>, gamma: &[bool], t_end: f64) -> f64 {
    let run = |dt: f64| {
        let cfg = SimConfig {
            t_end,
            dt,
            ..SimConfig::default()
        };
        simulate(ss, k, gamma, &cfg).unwrap().max_norm_x()
    };
    let (a, b) = (run(1e-3), run(5e-4));
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Largest relative deviation of the mechanical energy from its initial
/// value along an undamped, unforced trajectory.
pub fn undamped_energy_drift(topo: NetworkTopology, t_end: f64) -> f64 {
    let params = EsaParams {
        c1: 0.0,
        c2: 0.0,
        ..EsaParams::default()
    };
    let net = mechanical_network(&params, &topo).unwrap();
    let ss = net.state_space();
    let nx = ss.n_x();
    let x0: Vec<f64> = (0..nx).map(|i| if i < nx / 2 { 1e-3 * (i as f64 + 1.0).sin() } else { 0.0 }).collect();
    let cfg = SimConfig {
        t_end,
        dt: 1e-3,
        disturbance: Disturbance::Zero,
        x_init: Some(x0),
    };
    let k = DMatrix::zeros(ss.n_u(), nx);
    let tr = simulate(&ss, &k, &vec![false; ss.n_u()], &cfg).unwrap();
    let e0 = net.energy(tr.states[0].as_slice());
    tr.states
        .iter()
        .map(|x| (net.energy(x.as_slice()) - e0).abs() / e0)
        .fold(0.0, f64::max)
}

/// Random 3x3 block in two variables, strictly feasible at a random point of
/// the box [-1, 1]^2, with the box as bounds.
pub fn random_sdp(rng: &mut ChaCha8Rng) -> (SdpProblem, [[f64; 9]; 3]) {
    let mut mats = [[0.0; 9]; 3];
    for m in mats.iter_mut().skip(1) {
        for i in 0..3 {
            for j in i..3 {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[3 * i + j] = v;
                m[3 * j + i] = v;
            }
        }
    }
    let z0 = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
    // F0 = -(z0_1 F1 + z0_2 F2) - (0.2 I + R R^T)
    let r: Vec<f64> = (0..9).map(|_| rng.gen_range(-0.5..0.5)).collect();
    for i in 0..3 {
        for j in 0..3 {
            let rrt: f64 = (0..3).map(|k| r[3 * i + k] * r[3 * j + k]).sum();
            mats[0][3 * i + j] = -(z0[0] * mats[1][3 * i + j] + z0[1] * mats[2][3 * i + j])
                - rrt
                - if i == j { 0.2 } else { 0.0 };
        }
    }
    let upper = |m: &[f64; 9]| {
        let mut e = Vec::new();
        for i in 0..3 {
            for j in i..3 {
                e.push((i, j, m[3 * i + j]));
            }
        }
        e
    };
    let mut p = SdpProblem::new(2);
    p.objective = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let mut b = SdpBlock::new(3, 0.0);
    b.constant = upper(&mats[0]);
    b.terms = vec![
        BlockTerm {
            var: 0,
            entries: upper(&mats[1]),
        },
        BlockTerm {
            var: 1,
            entries: upper(&mats[2]),
        },
    ];
    p.blocks.push(b);
    p.lower = vec![-1.0, -1.0];
    p.upper = vec![1.0, 1.0];
    (p, mats)
}

/// `-F ⪰ 0` iff every principal minor of `-F` is nonnegative.
fn nsd_by_minors(f: &[f64; 9]) -> bool {
    let g = |i: usize, j: usize| -f[3 * i + j];
    let tol = -1e-12;
    if g(0, 0) < tol || g(1, 1) < tol || g(2, 2) < tol {
        return false;
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        if g(a, a) * g(b, b) - g(a, b) * g(b, a) < tol {
            return false;
        }
    }
    let det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
        - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
        + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
    det >= tol
}

pub fn grid_oracle(p: &SdpProblem, mats: &[[f64; 9]; 3]) -> f64 {
    let steps = 2000;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let z0 = -1.0 + 2.0 * i as f64 / steps as f64;
        for j in 0..=steps {
            let z1 = -1.0 + 2.0 * j as f64 / steps as f64;
            let val = p.objective[0] * z0 + p.objective[1] * z1;
            if val >= best {
                continue;
            }
            let mut f = [0.0; 9];
            for k in 0..9 {
                f[k] = mats[0][k] + z0 * mats[1][k] + z1 * mats[2][k];
            }
            if nsd_by_minors(&f) {
                best = val;
            }
        }
    }
    best
}

