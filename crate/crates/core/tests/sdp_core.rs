use esa_core::sdp::{self, BlockTerm, LinearIneq, SdpBlock, SdpConfig, SdpProblem, SdpStatus};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{grid_oracle, random_sdp};

fn schur_example() -> SdpProblem {
    let mut p = SdpProblem::new(1);
    p.objective[0] = 1.0;
    let mut b = SdpBlock::new(2, 0.0);
    b.constant = vec![(0, 1, 1.0), (1, 1, -1.0)];
    b.terms.push(BlockTerm {
        var: 0,
        entries: vec![(0, 0, -1.0)],
    });
    p.blocks.push(b);
    p
}

#[test]
fn schur_determinant_minimum() {
    let sol = sdp::solve(&schur_example(), &SdpConfig::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.z[0] - 1.0).abs() < 1e-5, "{}", sol.z[0]);
    assert!((sol.objective_value - 1.0).abs() < 1e-5);
    assert!(sol.max_residual <= 1e-7);
}

#[test]
fn constant_positive_block_is_infeasible() {
    let mut p = SdpProblem::new(1);
    let mut b = SdpBlock::new(1, 0.0);
    b.constant = vec![(0, 0, 1.0)];
    b.terms.push(BlockTerm {
        var: 0,
        entries: vec![(0, 0, 0.0)],
    });
    p.blocks.push(b);
    let sol = sdp::solve(&p, &SdpConfig::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Infeasible);
}

#[test]
fn contradictory_blocks_are_infeasible() {
    // z ≥ 1 and z ≤ -1 through two 1x1 blocks
    let mut p = SdpProblem::new(1);
    let mut b1 = SdpBlock::new(1, 0.0);
    b1.constant = vec![(0, 0, 1.0)];
    b1.terms.push(BlockTerm {
        var: 0,
        entries: vec![(0, 0, -1.0)],
    });
    let mut b2 = SdpBlock::new(1, 0.0);
    b2.constant = vec![(0, 0, 1.0)];
    b2.terms.push(BlockTerm {
        var: 0,
        entries: vec![(0, 0, 1.0)],
    });
    p.blocks = vec![b1, b2];
    let sol = sdp::solve(&p, &SdpConfig::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Infeasible);
}

#[test]
fn shift_tightens_constraint() {
    let mut p = schur_example();
    p.blocks[0].shift = 0.5;
    let sol = sdp::solve(&p, &SdpConfig::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    // [[-z+0.5, 1],[1, -0.5]] ⪯ 0  <=>  (z-0.5)*0.5 >= 1
    assert!((sol.z[0] - 2.5).abs() < 1e-5, "{}", sol.z[0]);
}

#[test]
fn linear_rows_and_bounds() {
    // min -z0 - z1 s.t. z0 + 2 z1 <= 2, 0 <= z <= 1.5
    let mut p = SdpProblem::new(2);
    p.objective = vec![-1.0, -1.0];
    p.linear.push(LinearIneq {
        coeffs: vec![(0, 1.0), (1, 2.0)],
        rhs: 2.0,
    });
    p.lower = vec![0.0, 0.0];
    p.upper = vec![1.5, 1.5];
    let sol = sdp::solve(&p, &SdpConfig::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.objective_value + 1.75).abs() < 1e-5);
}

#[test]
fn solver_agrees_with_checker() {
    let sol = sdp::solve(&schur_example(), &SdpConfig::default()).unwrap();
    let again = sdp::check(&schur_example(), &sol.z);
    assert!((again.max_residual() - sol.max_residual).abs() <= 1e-10);
}

#[test]
fn merit_is_monotone_and_solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let (p, _) = random_sdp(&mut rng);
        let a = sdp::solve(&p, &SdpConfig::default()).unwrap();
        let b = sdp::solve(&p, &SdpConfig::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
        for w in a.trace.windows(2) {
            assert!(w[1].merit <= w[0].merit, "{} > {}", w[1].merit, w[0].merit);
        }
    }
}

#[test]
fn objective_scaling_keeps_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let (p, _) = random_sdp(&mut rng);
        let mut q = p.clone();
        for c in &mut q.objective {
            *c *= 10.0;
        }
        let a = sdp::solve(&p, &SdpConfig::default()).unwrap();
        let b = sdp::solve(&q, &SdpConfig::default()).unwrap();
        assert_eq!(a.status, SdpStatus::Optimal);
        assert_eq!(b.status, SdpStatus::Optimal);
        for k in 0..2 {
            assert!((a.z[k] - b.z[k]).abs() < 1e-3, "{:?} vs {:?}", a.z, b.z);
        }
    }
}

#[test]
fn random_problems_match_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let (p, mats) = random_sdp(&mut rng);
        let sol = sdp::solve(&p, &SdpConfig::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "case {case}");
        let oracle = grid_oracle(&p, &mats);
        assert!(
            (sol.objective_value - oracle).abs() <= 5e-3,
            "case {case}: solver {} vs grid {}",
            sol.objective_value,
            oracle
        );
        let chk = sdp::check(&p, &sol.z);
        assert!((chk.max_residual() - sol.max_residual).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip_is_bit_exact(
        vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 12),
        shift in 0.0f64..1.0,
        rhs in -1e6f64..1e6,
    ) {
        let mut p = SdpProblem::new(3);
        p.objective = vals[0..3].to_vec();
        p.upper[2] = vals[3].abs();
        let mut b = SdpBlock::new(2, shift);
        b.constant = vec![(0, 0, vals[4]), (0, 1, vals[5])];
        b.terms = vec![
            BlockTerm { var: 0, entries: vec![(1, 1, vals[6])] },
            BlockTerm { var: 2, entries: vec![(0, 1, vals[7]), (0, 0, vals[8])] },
        ];
        p.blocks.push(b);
        p.linear.push(LinearIneq { coeffs: vec![(1, vals[9]), (2, vals[10])], rhs });
        let text = sdp::dump(&p);
        let back = sdp::load(&text).unwrap();
        prop_assert_eq!(sdp::dump(&back), text);
        for (a, b) in p.objective.iter().zip(&back.objective) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back, p);
    }
}
