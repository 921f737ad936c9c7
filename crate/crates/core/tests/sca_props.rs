use esa_core::sca::{dc_split, linearize_h};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{min_eig, random_matrix};

/// `−BuΓY − YᵀΓBuᵀ` computed directly.
fn bilinear(bu: &DMatrix<f64>, gamma: &[f64], y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut bg = bu.clone();
    for (j, g) in gamma.iter().enumerate() {
        bg.column_mut(j).scale_mut(*g);
    }
    let t = &bg * y;
    -(&t + t.transpose())
}

fn draw(seed: u64) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = rng.gen_range(1..7);
    let nu = rng.gen_range(1..5);
    let bu = random_matrix(&mut rng, nx, nu, 2.0);
    let g: Vec<f64> = (0..nu).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y = random_matrix(&mut rng, nu, nx, 3.0);
    let g0: Vec<f64> = (0..nu).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y0 = random_matrix(&mut rng, nu, nx, 3.0);
    (bu, g, y, g0, y0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn difference_of_squares_reproduces_the_bilinear_term(seed in any::<u64>()) {
        let (bu, g, y, _, _) = draw(seed);
        let (p, h) = dc_split(&bu, &g, &y).unwrap();
        let err = ((&p - &h) * 0.5 - bilinear(&bu, &g, &y)).abs().max();
        prop_assert!(err <= 1e-12, "{err:e}");
        prop_assert!(min_eig(&p) >= -1e-9 && min_eig(&h) >= -1e-9);
    }

    #[test]
    fn tangent_underestimates_the_concave_part(seed in any::<u64>()) {
        let (bu, g, y, g0, y0) = draw(seed);
        let lin = linearize_h(&bu, &g0, &y0);
        let (_, h) = dc_split(&bu, &g, &y).unwrap();
        prop_assert!(min_eig(&(&h - lin.eval(&g, &y))) >= -1e-9);
        let (_, h0) = dc_split(&bu, &g0, &y0).unwrap();
        prop_assert!((&h0 - lin.eval(&g0, &y0)).abs().max() <= 1e-12);
    }
}

#[test]
fn mismatched_shapes_are_rejected() {
    let bu = DMatrix::zeros(3, 2);
    assert!(dc_split(&bu, &[1.0], &DMatrix::zeros(2, 3)).is_err());
    assert!(dc_split(&bu, &[1.0, 1.0], &DMatrix::zeros(3, 2)).is_err());
}
