use proptest::prelude::*;

use es2n::analysis::{mlle, spectrum_along};
use es2n::numerics::{
    eigenvalues, gaussian_matrix, norm2, random_orthogonal, ridge_solve, singular_values, uniform_matrix,
};
use es2n::tasks::metrics::squared_correlation;
use es2n::tasks::mso::mso8_signal;
use es2n::tasks::{mc_task, McSettings};
use es2n::{Matrix, ModelKind, Reservoir, ReservoirConfig, SeededRng};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

fn drive_uniform(r: &Reservoir, steps: usize, amp: f64, seed: u64) -> es2n::Trajectory {
    let mut rng = SeededRng::new(seed);
    let u = uniform_matrix(&mut rng, 1, steps, -amp, amp);
    r.drive(&u, None, None).unwrap()
}

fn kind_strategy() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(ModelKind::ALL.to_vec())
}

fn config_for(kind: ModelKind, n_r: usize, rho: f64, omega: f64, mix: f64, seed: u64) -> ReservoirConfig {
    let mix = if kind.has_mix() { mix } else { 1.0 };
    ReservoirConfig::new(kind, n_r).with_rho(rho).with_omega(omega).with_mix(mix).with_seed(seed)
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn orthogonal_matrices_are_orthogonal(n in 1usize..120, seed in any::<u64>()) {
        let q = random_orthogonal(&mut SeededRng::new(seed), n);
        let dev = q.matmul(&q.transpose()).unwrap().sub(&Matrix::identity(n)).unwrap().max_abs();
        prop_assert!(dev < 1e-12, "deviation {dev}");
        let sv = singular_values(&q).unwrap();
        prop_assert!(sv.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ridge_normal_equation_residual(n in 1usize..12, extra in 0usize..40, o in 1usize..4, mu in 1e-6f64..10.0, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let t = n + extra;
        let x = gaussian_matrix(&mut rng, n, t, 0.0, 1.0);
        let y = gaussian_matrix(&mut rng, o, t, 0.0, 1.0);
        let w = ridge_solve(&x, &y, mu).unwrap();
        let xxt = x.matmul(&x.transpose()).unwrap().add(&Matrix::identity(n).scaled(mu)).unwrap();
        let yxt = y.matmul(&x.transpose()).unwrap();
        let resid = w.matmul(&xxt).unwrap().sub(&yxt).unwrap().frobenius_norm() / yxt.frobenius_norm();
        prop_assert!(resid < 1e-10, "relative residual {resid}");
    }

    #[test]
    fn ridge_shrinks_with_mu(n in 2usize..10, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let x = gaussian_matrix(&mut rng, n, 3 * n, 0.0, 1.0);
        let y = gaussian_matrix(&mut rng, 1, 3 * n, 0.0, 1.0);
        let norms: Vec<f64> = [0.0, 0.1, 1.0, 10.0]
            .iter()
            .map(|&mu| ridge_solve(&x, &y, mu).unwrap().frobenius_norm())
            .collect();
        prop_assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{norms:?}");
    }

    #[test]
    fn eigenvalues_close_under_conjugation(n in 1usize..40, seed in any::<u64>()) {
        let a = gaussian_matrix(&mut SeededRng::new(seed), n, n, 0.0, 1.0);
        let ev = eigenvalues(&a).unwrap();
        prop_assert_eq!(ev.len(), n);
        for l in &ev {
            let nearest = ev.iter().map(|m| m.dist(l.conj())).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-10, "no conjugate for {l:?}");
        }
        let trace: f64 = ev.iter().map(|l| l.re).sum();
        prop_assert!((trace - a.trace()).abs() < 1e-9 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn jacobian_matches_finite_differences(
        kind in kind_strategy(),
        n_r in 2usize..16,
        rho in 0.1f64..2.0,
        omega in 0.0f64..2.0,
        mix in 0.01f64..1.0,
        seed in any::<u64>(),
    ) {
        let r = Reservoir::new(config_for(kind, n_r, rho, omega, mix, seed)).unwrap();
        let mut rng = SeededRng::new(seed ^ 0x5eed);
        let x = rng.uniform_vec(n_r, -1.0, 1.0);
        let u = [rng.uniform(-1.0, 1.0)];
        let j = r.jacobian(&u, &x).unwrap();
        let h = 1e-6;
        for c in 0..n_r {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[c] += h;
            xm[c] -= h;
            let fp = r.step(&xp, &u, None).unwrap();
            let fm = r.step(&xm, &u, None).unwrap();
            for i in 0..n_r {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                prop_assert!((fd - j.row(i)[c]).abs() < 1e-5, "{kind} J[{i}][{c}] = {} vs fd {fd}", j.row(i)[c]);
            }
        }
    }

    #[test]
    fn es2n_with_mix_one_is_leaky_with_alpha_one(n_r in 1usize..30, rho in 0.0f64..3.0, omega in 0.0f64..3.0, seed in any::<u64>()) {
        let es2n = Reservoir::new(config_for(ModelKind::Es2n, n_r, rho, omega, 1.0, seed)).unwrap();
        let leaky = Reservoir::from_parts(
            config_for(ModelKind::LeakyEsn, n_r, rho, omega, 1.0, seed),
            es2n.params().clone(),
        )
        .unwrap();
        let mut rng = SeededRng::new(seed);
        let mut x = rng.uniform_vec(n_r, -1.0, 1.0);
        for _ in 0..20 {
            let u = [rng.uniform(-1.0, 1.0)];
            let a = es2n.step(&x, &u, None).unwrap();
            let b = leaky.step(&x, &u, None).unwrap();
            prop_assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
            x = a;
        }
    }

    #[test]
    fn es2n_state_norm_recursion(n_r in 1usize..50, rho in 0.0f64..5.0, omega in 0.0f64..5.0, mix in 0.001f64..1.0, seed in any::<u64>()) {
        let r = Reservoir::new(config_for(ModelKind::Es2n, n_r, rho, omega, mix, seed)).unwrap();
        let traj = drive_uniform(&r, 200, 1.0, seed);
        let cap = mix * (n_r as f64).sqrt();
        for t in 1..=traj.len() {
            let prev = norm2(&traj.state(t - 1));
            let cur = norm2(&traj.state(t));
            prop_assert!(cur <= cap + (1.0 - mix) * prev + 1e-12, "t = {t}: {cur} > {cap} + {}", (1.0 - mix) * prev);
        }
        prop_assert!(norm2(&traj.last_state()) <= (n_r as f64).sqrt() + 1e-12);
    }

    #[test]
    fn tanh_derivative_in_unit_interval(kind in kind_strategy(), n_r in 1usize..30, rho in 0.0f64..3.0, omega in 0.0f64..6.0, seed in any::<u64>()) {
        let r = Reservoir::new(config_for(kind, n_r, rho, omega, 0.5, seed)).unwrap();
        let mut rng = SeededRng::new(seed);
        let x = rng.uniform_vec(n_r, -1.0, 1.0);
        let d = r.derivative_diag(&[rng.uniform(-1.0, 1.0)], &x).unwrap();
        if kind.is_linear() {
            prop_assert!(d.iter().all(|&v| v == 1.0));
        } else {
            prop_assert!(d.iter().all(|&v| v > 0.0 && v <= 1.0), "{d:?}");
        }
    }
}

proptest! {
    #![proptest_config(cases(40))]

    #[test]
    fn jacobian_spectrum_respects_bounds(
        kind in prop::sample::select(vec![ModelKind::Es2n, ModelKind::LeakyEsn]),
        n_r in prop::sample::select(vec![10usize, 50]),
        rho in 0.1f64..3.0,
        omega in 0.0f64..6.0,
        mix in 1e-3f64..1.0,
        seed in any::<u64>(),
    ) {
        let r = Reservoir::new(config_for(kind, n_r, rho, omega, mix, seed)).unwrap();
        let traj = drive_uniform(&r, 20, 1.0, seed);
        let report = spectrum_along(&r, &traj).unwrap();
        prop_assert!(report.max_violation() <= 1e-10, "violation {}", report.max_violation());
        for l in report.eigenvalues.iter().flatten() {
            prop_assert!(report.conservative_bounds.contains(*l, 1e-10));
        }
    }

    #[test]
    fn mlle_within_bounds(n_r in 5usize..40, rho in 0.1f64..1.5, omega in 0.0f64..2.0, mix in 0.001f64..0.3, seed in any::<u64>()) {
        let r = Reservoir::new(config_for(ModelKind::Es2n, n_r, rho, omega, mix, seed)).unwrap();
        let traj = drive_uniform(&r, 100, 0.8, seed);
        let report = mlle(&r, &traj).unwrap();
        prop_assert!(report.within_bounds(1e-10), "{} not in [{}, {}]", report.mlle, report.lower, report.upper);
        prop_assert!((report.mlle - report.mean_max_log_sv).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_jacobian_has_zero_mlle(n_r in 2usize..40, omega in 0.0f64..3.0, seed in any::<u64>()) {
        let r = Reservoir::new(config_for(ModelKind::LinearScr, n_r, 1.0, omega, 1.0, seed)).unwrap();
        let traj = drive_uniform(&r, 50, 1.0, seed);
        prop_assert!(mlle(&r, &traj).unwrap().mlle.abs() < 1e-12);
    }

    #[test]
    fn perfect_delay_reproduction_scores_one(len in 3usize..300, k in 0usize..50, seed in any::<u64>()) {
        let u = SeededRng::new(seed).uniform_vec(len + k, -0.8, 0.8);
        let target = &u[..len];
        prop_assert!((squared_correlation(target, target) - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(cases(6))]

    #[test]
    fn mc_task_is_deterministic_and_bounded(kind in kind_strategy(), mix in 0.01f64..1.0, seed in any::<u64>()) {
        let settings = McSettings { length: 1200, train_end: 1000, washout: 40, k_max: 40, ..McSettings::default() };
        let config = config_for(kind, 20, 0.9, 0.1, mix, seed);
        let a = mc_task(&config, &settings);
        let b = mc_task(&config, &settings);
        prop_assert_eq!(&a, &b);
        if let Ok(r) = a {
            prop_assert!(r.mc <= 21.0);
            prop_assert!(r.mc_k.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
            prop_assert!((r.mc - r.mc_k.iter().sum::<f64>()).abs() < 1e-12);
        }
    }
}

#[test]
fn mso8_signal_is_centered_and_bounded() {
    let s = mso8_signal(20000);
    let mean: f64 = (1..=6283).map(|t| s.at(t)).sum::<f64>() / 6283.0;
    assert!(mean.abs() < 1e-9);
    assert!((1..=20000).all(|t| s.at(t).abs() < 1.0));
}
