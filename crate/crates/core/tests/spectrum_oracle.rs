mod support;

use plateflow::spectrum::{find_spectrum, find_spectrum_with, GramKind, SpectrumOptions};
use plateflow::{ModeKey, Parity, PlateParams};
use support::galerkin_eigenvalues;

/// λ₁ for ℓ = π/150, σ = 0.2, frozen after agreement with the Galerkin oracle.
const LAMBDA1_GOLDEN: f64 = 0.960_009_355_1;

#[test]
fn lambda1_matches_rayleigh_ritz_and_golden() {
    let p = PlateParams::default();
    let t = find_spectrum(&p, 5, 4).unwrap();
    let oracle = galerkin_eigenvalues(1, Parity::Even, p.sigma, p.ell, 24)[0];
    assert!((t.lambda1 - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", t.lambda1);
    assert!((t.lambda1 - LAMBDA1_GOLDEN).abs() <= 1e-9, "{}", t.lambda1);
    assert_eq!(t.modes[0].key, ModeKey::new(1, Parity::Even, 1));
}

#[test]
fn first_twenty_match_oracle() {
    let p = PlateParams::default();
    let t = find_spectrum(&p, 20, 2).unwrap();
    for mode in t.modes.iter().take(20) {
        let k = mode.key;
        let o = galerkin_eigenvalues(k.m, k.parity, p.sigma, p.ell, 24)[k.branch as usize - 1];
        assert!((mode.lambda - o).abs() <= 1e-6 * o, "{k:?}: {} vs {o}", mode.lambda);
    }
}

#[test]
fn higher_branches_match_oracle() {
    let p = PlateParams::default();
    let t = find_spectrum(&p, 2, 3).unwrap();
    for mode in &t.modes {
        let k = mode.key;
        let o = galerkin_eigenvalues(k.m, k.parity, p.sigma, p.ell, 40)[k.branch as usize - 1];
        assert!((mode.lambda - o).abs() <= 1e-6 * o, "{k:?}: {} vs {o}", mode.lambda);
    }
}

#[test]
fn stable_under_refinement() {
    let p = PlateParams::default();
    let a = find_spectrum(&p, 5, 4).unwrap();
    let b = find_spectrum_with(
        &p,
        5,
        4,
        SpectrumOptions {
            resolution: 2,
            quad_nodes: 128,
        },
    )
    .unwrap();
    for (x, y) in a.modes.iter().zip(&b.modes) {
        assert_eq!(x.key, y.key);
        assert!((x.lambda - y.lambda).abs() <= 1e-9 * x.lambda);
    }
}

#[test]
fn a_orthogonality() {
    let p = PlateParams::default();
    let t = find_spectrum(&p, 4, 3).unwrap();
    let a = t.gram(GramKind::Energy);
    let l2 = t.gram(GramKind::L2);
    for i in 0..t.len() {
        let li = t.modes[i].lambda;
        assert!((a[(i, i)] - li).abs() <= 1e-8 * li, "{i}: {} vs {li}", a[(i, i)]);
        assert!((l2[(i, i)] - 1.0).abs() <= 1e-10);
        for j in 0..t.len() {
            if i != j {
                let scale = (li * t.modes[j].lambda).sqrt();
                assert!(a[(i, j)].abs() <= 1e-8 * scale, "a({i},{j}) = {}", a[(i, j)]);
                assert!(l2[(i, j)].abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn coupling_structure_and_double_resolution() {
    let p = PlateParams::default();
    let t = find_spectrum(&p, 3, 2).unwrap();
    let u = &t.upsilon;
    for i in 0..t.len() {
        for j in 0..t.len() {
            let (a, b) = (t.modes[i].key, t.modes[j].key);
            if a.m != b.m || a.parity == b.parity {
                assert_eq!(u[(i, j)], 0.0, "{a:?} {b:?}");
            }
        }
    }
    let e = t.index_of(&ModeKey::new(1, Parity::Even, 1)).unwrap();
    let o = t.index_of(&ModeKey::new(1, Parity::Odd, 1)).unwrap();
    assert!(u[(e, o)] != 0.0);
    let fine = plateflow::spectrum::coupling_upsilon(&t.modes, 128);
    assert!((fine[(e, o)] - u[(e, o)]).abs() <= 1e-10 * u[(e, o)].abs());
}

#[test]
fn m1_dominates_low_modes() {
    // min ∥v_x∥²/∥v∥² = 1 is attained in the m = 1 family
    let t = find_spectrum(&PlateParams::default(), 5, 2).unwrap();
    let dx = t.gram(GramKind::Dx);
    let ratios: Vec<f64> = (0..t.len()).map(|i| dx[(i, i)]).collect();
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((min - 1.0).abs() < 1e-12);
    assert_eq!(t.modes[0].key.m, 1);
}
