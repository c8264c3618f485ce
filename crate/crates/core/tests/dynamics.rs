use plateflow::duffing::*;
use plateflow::modal::{integrate_system, ModalState, ModalSystem, Trajectory, TruncationSpec};
use plateflow::ode::Tolerances;
use plateflow::spectrum::{find_spectrum, SpectrumTable};
use plateflow::stability::*;
use plateflow::stationary::build_unimodal;
use plateflow::{Error, ForcingSpec, ModeKey, Parity, PlateParams};
use proptest::prelude::*;

fn low_keys(table: &SpectrumTable) -> Vec<ModeKey> {
    table
        .keys()
        .into_iter()
        .filter(|k| k.branch == 1 && (k.parity == Parity::Even || k.m <= 2))
        .collect()
}

fn run(sys: &ModalSystem, p: &PlateParams, init: &ModalState, t: f64, stride: f64, nu: f64) -> Trajectory {
    run_tol(sys, p, init, t, stride, nu, Tolerances::new(1e-10, 1e-12))
}

fn run_tol(sys: &ModalSystem, p: &PlateParams, init: &ModalState, t: f64, stride: f64, nu: f64, tol: Tolerances) -> Trajectory {
    let spec = TruncationSpec::new(sys.keys.clone(), stride)
        .with_tol(tol)
        .with_nu(nu);
    integrate_system(sys, init, (0.0, t), &spec, p).unwrap()
}

#[test]
fn r2_quadrature_and_scaling() {
    let p = PlateParams::default().with_alpha(-400.0);
    let u = build_unimodal(1, -400.0, &p).unwrap();
    let a = duffing_r2_with(&u, &p, 64);
    let b = duffing_r2_with(&u, &p, 128);
    assert!(a > 0.0 && ((a - b) / b).abs() < 1e-12);
    let mut v = u.clone();
    v.amplitude *= 2.0;
    assert!((duffing_r2(&v, &p) / a - 4.0).abs() < 1e-12);
    // m⁴R² = m²(μ + P)
    assert!((a - u.mu).abs() < 1e-9 * u.mu);
}

#[test]
fn duffing_energy_dissipation_identity() {
    let q = DuffingParams::new(2, 0.3, 1.7).unwrap();
    for &(a, b) in &[(0.5, 0.0), (1.9, -1.2), (-0.2, 2.0)] {
        let t = integrate_duffing(&q, a, b, 150.0, &Tolerances::new(1e-11, 1e-13)).unwrap();
        assert!(t.energy_residual < 1e-7, "{}", t.energy_residual);
        assert!(t.max_energy_increase <= 1e-10);
        for w in t.samples.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-10);
        }
        assert!(t.limit.value().is_some());
    }
}

#[test]
fn negative_energy_keeps_sign() {
    let q = DuffingParams::new(1, 0.5, 1.96).unwrap();
    let tol = Tolerances::new(1e-9, 1e-12);
    let grid = BasinGrid { n_phi: 21, n_dphi: 21, ..Default::default() };
    let mut seen = [0usize; 3];
    for (a, b) in grid.points() {
        let l = basin_point(&q, a, b, 400.0, &tol).unwrap();
        let v = l.value().expect("decided");
        seen[(v + 1) as usize] += 1;
        if nonzero_limit_predicate(a, b, &q) {
            assert_eq!(v as f64, a.signum(), "({a},{b})");
        }
    }
    assert!(seen[0] > 0 && seen[2] > 0, "{seen:?}");
}

#[test]
fn heteroclinic_family_converges_to_plus() {
    let p = PlateParams::default().with_alpha(-400.0).with_k(0.5);
    let u = build_unimodal(1, -400.0, &p).unwrap();
    let q = DuffingParams::from_unimodal(&u, &p).unwrap();
    let n: Vec<u32> = (1..=10).collect();
    let r = heteroclinic_family(&n, &q, 400.0, &Tolerances::new(1e-10, 1e-13)).unwrap();
    assert!(r.all_plus && r.all_negative_energy);
    assert!(r.entries.windows(2).all(|w| w[1].phi0 < w[0].phi0));
}

#[test]
fn galerkin_tracks_duffing() {
    let p = PlateParams::default().with_alpha(-400.0).with_k(0.5);
    let table = find_spectrum(&p, 2, 4).unwrap();
    let u = build_unimodal(1, -400.0, &p).unwrap();
    let keys: Vec<ModeKey> = table.keys().into_iter().filter(|k| k.branch <= 2).collect();
    let opts = CrossValidationOptions::default();
    let r = cross_validate_full(&u, 0.5, 0.0, &p, &table, &keys, 50.0, &opts).unwrap();
    assert!(r.discrepancy <= 10.0 * (r.projection_error + r.tol), "{r:?}");
    assert_eq!(r.leakage, 0.0);
    assert_eq!(r.galerkin_final, r.duffing_final);
    assert_eq!(r.galerkin_final, LimitLabel::Plus);
}

#[test]
fn coarse_truncation_refused() {
    let p = PlateParams::default().with_alpha(-400.0).with_k(0.5);
    let table = find_spectrum(&p, 1, 2).unwrap();
    let u = build_unimodal(1, -400.0, &p).unwrap();
    let keys = [ModeKey::new(1, Parity::Even, 1)];
    let e = cross_validate_full(&u, 0.5, 0.0, &p, &table, &keys, 1.0, &Default::default()).unwrap_err();
    assert!(matches!(e, Error::ProjectionTooCoarse { m: 1, .. }), "{e}");
    let wrong = p.clone().with_alpha(-300.0);
    assert!(cross_validate_full(&u, 0.5, 0.0, &wrong, &table, &table.keys(), 1.0, &Default::default()).is_err());
}

#[test]
fn vnu_bound_case_a_decays() {
    let p = PlateParams::default().with_k(1.0).with_alpha(0.5);
    let table = find_spectrum(&p, 3, 1).unwrap();
    let sys = ModalSystem::new(&p, &table, &low_keys(&table)).unwrap();
    let q = ThresholdQuery::new(0.5, 0.1);
    let rep = thresholds(&p, table.lambda1, 0.0, &q).unwrap();
    assert!(p.alpha <= rep.alpha_bound_g0_case_a.unwrap());
    for init in random_battery(&sys.lambda, 4, (0.1, 10.0), 3).unwrap() {
        let tr = run(&sys, &p, &init, 80.0, 0.1, 0.5);
        let c = verify_vnu_bound(&tr, &p, &q).unwrap();
        assert!(c.compliant && c.pass, "{}", c.min_margin);
        let last = c.series.last().unwrap();
        assert!(last.v_nu < 1e-8 * c.series[0].v_nu.abs().max(1.0));
    }
}

#[test]
fn vnu_bound_fails_in_unimodal_regime() {
    let p = PlateParams::default().with_k(1.0).with_alpha(-400.0);
    let table = find_spectrum(&p, 3, 1).unwrap();
    let sys = ModalSystem::new(&p, &table, &low_keys(&table)).unwrap();
    let mut h = vec![0.0; sys.dim()];
    h[0] = 1e-3;
    let tr = run(&sys, &p, &ModalState::new(h, vec![0.0; sys.dim()]), 60.0, 0.1, 0.25);
    let c = verify_vnu_bound(&tr, &p, &ThresholdQuery::new(0.25, 0.1)).unwrap();
    assert!(!c.compliant && !c.pass);
}

#[test]
fn l2_tail_below_psi() {
    let k = 0.5;
    let key = ModeKey::new(1, Parity::Even, 1);
    let p = PlateParams::default().with_k(k).with_forcing(ForcingSpec::Modal { coeffs: vec![(key, 0.8)] });
    let table = find_spectrum(&p, 3, 1).unwrap();
    let sys = ModalSystem::new(&p, &table, &low_keys(&table)).unwrap();
    let q = ThresholdQuery::standard(k);
    let rep = thresholds(&p, table.lambda1, sys.g_norm_sq(), &q).unwrap();
    assert!((rep.vnu_limsup - 4.0 * sys.g_norm_sq() / (k * k)).abs() < 1e-12);
    let b = asymptotic_bounds(&p, table.lambda1, q.nu, rep.vnu_limsup).unwrap();
    for init in random_battery(&sys.lambda, 3, (1.0, 20.0), 5).unwrap() {
        let tr = run(&sys, &p, &init, 200.0, 0.1, q.nu);
        let tail = &tr.samples[tr.samples.len() / 2..];
        let l2 = tail.iter().map(|s| s.state.h.iter().map(|x| x * x).sum::<f64>()).fold(0.0, f64::max);
        let ux = tail.iter().map(|s| s.energy.norm_ux_sq).fold(0.0, f64::max);
        let h2 = tail.iter().map(|s| s.energy.norm_h2_sq).fold(0.0, f64::max);
        assert!(l2 <= 1.05 * b.psi && ux <= 1.05 * b.ux_bound && h2 <= 1.05 * b.h2_bound);
    }
}

#[test]
fn linear_mode_rate_oracle() {
    let p = PlateParams::default().with_k(0.2);
    let table = find_spectrum(&p, 1, 1).unwrap();
    let key = ModeKey::new(1, Parity::Even, 1);
    let sys = ModalSystem::new(&p, &table, &[key]).unwrap();
    let tol = Tolerances::new(1e-10, 1e-24);
    let tr = run_tol(&sys, &p, &ModalState::new(vec![1e-4], vec![0.0]), 200.0, 0.05, 0.05, tol);
    let fit = fit_decay(&tr, &[0.0]).unwrap();
    let want = linear_mode_rate(0.2, sys.lambda[0]);
    let eta = fit.eta.unwrap();
    assert!(((eta - want) / want).abs() < 0.05, "{eta} vs {want}");
    let shifted = fit_decay_with(&tr, &[0.0], &DecayOptions { window_fraction: 0.4, ..Default::default() }).unwrap();
    assert!((shifted.eta.unwrap() - eta).abs() < 0.05 * want);
}

#[test]
fn contractive_battery_decays() {
    let p = PlateParams::default().with_k(1.0).with_alpha(0.5);
    let table = find_spectrum(&p, 3, 1).unwrap();
    let sys = ModalSystem::new(&p, &table, &low_keys(&table)).unwrap();
    let zero = vec![0.0; sys.dim()];
    for init in random_battery(&sys.lambda, 5, (0.1, 10.0), 9).unwrap() {
        let tr = run_tol(&sys, &p, &init, 60.0, 0.1, 0.25, Tolerances::new(1e-10, 1e-24));
        let f = fit_decay(&tr, &zero).unwrap();
        assert!(f.eta.unwrap() > 0.0, "{f:?}");
    }
    let still = run(&sys, &p, &ModalState::zeros(sys.dim()), 5.0, 0.1, 0.25);
    assert_eq!(fit_decay(&still, &zero).unwrap().status, DecayStatus::Converged);
}

#[test]
fn absorbing_ball_frozen_calibration() {
    let p = PlateParams::default().with_k(1.0).with_alpha(-10.0);
    let table = find_spectrum(&p, 3, 1).unwrap();
    let sys = ModalSystem::new(&p, &table, &low_keys(&table)).unwrap();
    let nu = 0.3;
    let go = |xs: Vec<ModalState>| -> Vec<Trajectory> { xs.iter().map(|x| run(&sys, &p, x, 60.0, 0.1, nu)).collect() };
    let cal = calibrate_absorbing(&sys, &go(random_battery(&sys.lambda, 4, (0.1, 100.0), 1).unwrap()), nu).unwrap();
    let battery = go(random_battery(&sys.lambda, 8, (0.1, 100.0), 2).unwrap());
    let r = absorbing_check(&sys, &battery, &cal).unwrap();
    assert!(r.pass, "{:?}", r.witnesses);
    assert!(r.runs.iter().any(|x| x.v0 > r.level));
    let zero = go(vec![ModalState::zeros(sys.dim())]);
    let z = absorbing_check(&sys, &zero, &cal).unwrap();
    assert_eq!(z.runs[0].entry_time, Some(0.0));
    assert!(calibrate_absorbing(&sys, &zero, 0.9).is_err());
}

#[test]
fn rate_formula_matches_finite_difference() {
    let p = PlateParams::default()
        .with_k(0.7)
        .with_alpha(-40.0)
        .with_forcing(ForcingSpec::Constant { c: 0.3 });
    let p = PlateParams { p: 0.2, ..p };
    let table = find_spectrum(&p, 2, 1).unwrap();
    let sys = ModalSystem::full(&p, &table).unwrap();
    let init = &random_battery(&sys.lambda, 1, (2.0, 2.0), 4).unwrap()[0];
    let nu = 0.2;
    let spec = TruncationSpec::new(sys.keys.clone(), 2e-6).with_tol(Tolerances::new(1e-13, 1e-15)).with_nu(nu);
    let tr = integrate_system(&sys, init, (0.0, 2e-5), &spec, &p).unwrap();
    let v = |s: &ModalState| v_nu_k(&sys, &s.h, &s.hdot, nu);
    let (a, b) = (&tr.samples[4].state, &tr.samples[6].state);
    let fd = (v(b) - v(a)) / (b.t - a.t);
    let mid = &tr.samples[5].state;
    let exact = v_nu_k_rate(&sys, &mid.h, &mid.hdot, nu);
    assert!((fd - exact).abs() < 1e-5 * exact.abs().max(1.0), "{fd} vs {exact}");
    assert!(dissipation_excess(&sys, &mid.h, nu, nu) >= exact + nu * v(mid) - 1e-9);
}

#[test]
fn superlinearity_ratio_shrinks() {
    let table = find_spectrum(&PlateParams::default(), 3, 1).unwrap();
    let rows = superlinearity_sweep(&table, &[1.0, 10.0, 100.0, 1000.0], 200, 17).unwrap();
    assert!(rows.windows(2).all(|w| w[1].max_ratio < w[0].max_ratio), "{rows:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bounds_nonnegative(k in 0.05f64..1.3, fnu in 0.05f64..1.0, fd in 0.05f64..0.95, pf in 0.0f64..0.99, g in 0.0f64..10.0) {
        let l1 = 0.960_009_355_1;
        let p = PlateParams { p: pf * l1, ..PlateParams::default().with_k(k) };
        let nu = (fnu * 0.5 * k).min(0.999 * (l1 - p.p).sqrt());
        let q = ThresholdQuery::new(nu, fd * 0.5 * (k - nu));
        let r = thresholds(&p, l1, g, &q).unwrap();
        prop_assert!(r.alpha_bound_general >= 0.0 && r.vnu_limsup >= 0.0 && r.trivial_uniqueness_bound >= 0.0);
        prop_assert!(r.alpha_bound_g0_case_a.unwrap_or(0.0) >= 0.0 && r.alpha_bound_g0_case_b.unwrap_or(0.0) >= 0.0);
        let b = asymptotic_bounds(&p, l1, nu, r.vnu_limsup).unwrap();
        prop_assert!(b.psi >= 0.0 && b.ux_bound >= 0.0 && b.h2_bound >= 0.0);
    }

    #[test]
    fn bounds_vanish_as_prestress_reaches_lambda1(k in 0.1f64..1.0) {
        let l1 = 0.960_009_355_1;
        let p = PlateParams { p: l1 * (1.0 - 1e-12), ..PlateParams::default().with_k(k) };
        let nu = (0.5 * k).min(0.999 * (l1 - p.p).sqrt());
        let r = thresholds(&p, l1, 0.0, &ThresholdQuery::new(nu, 0.25 * (k - nu))).unwrap();
        prop_assert!(r.alpha_bound_general < 1e-5 && r.trivial_uniqueness_bound < 1e-9);
        prop_assert!(r.alpha_bound_g0_case_a.unwrap_or(0.0) < 1e-5 && r.alpha_bound_g0_case_b.unwrap_or(0.0) < 1e-9);
    }
}
