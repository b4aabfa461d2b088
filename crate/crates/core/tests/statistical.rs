mod common;

use std::f64::consts::LN_2;

use ldplab::estimation::{coefficients, exact_l2_risk};
use ldplab::montecarlo::{
    dirichlet_sample, run_trial, Engine, ExperimentConfig, ScanConfig, SubsetSize,
};
use ldplab::sampling::sample_categorical;
use ldplab::theory::{c_u, closed_form_l2_risk};
use ldplab::{uniform_distribution, LdpError, ProbabilityVector, RngStream};
use ldplab::mechanisms::SubsetMechanism;

use common::*;

#[test]
fn categorical_sampler_passes_chi_square() {
    let mut rng = RngStream::new(7, u64::MAX).generator();
    for (idx, k) in [2usize, 5, 20].into_iter().enumerate() {
        for (j, p) in [uniform_distribution(k).unwrap(), dirichlet_sample(k, 1.0, &mut rng).unwrap()]
            .into_iter()
            .enumerate()
        {
            let batch = sample_categorical(&p, 1_000_000, &RngStream::new(11, (idx * 2 + j) as u64)).unwrap();
            let pv = chi_square_p_value(&batch.histogram(), p.as_slice());
            assert!(pv > 1e-6, "k={k} case {j}: p-value {pv}");
        }
    }
}

#[test]
fn small_batches_use_the_same_distribution() {
    // below the alias threshold the sampler walks the CDF instead
    let p = ProbabilityVector::new(vec![0.5, 0.3, 0.15, 0.05]).unwrap();
    let mut hist = [0u64; 4];
    for s in 0..20_000 {
        let batch = sample_categorical(&p, 10, &RngStream::new(3, s)).unwrap();
        for (h, c) in hist.iter_mut().zip(batch.histogram()) {
            *h += c;
        }
    }
    assert!(chi_square_p_value(&hist, p.as_slice()) > 1e-6);
}

#[test]
fn inclusion_frequency_within_three_standard_errors() {
    for (k, epsilon, d) in [(10, 1.0, 3), (5, LN_2, 2), (70, 0.5, 20), (4, 3.0, 1)] {
        let mech = SubsetMechanism::new(k, epsilon, d).unwrap();
        let mut privatizer = mech.privatizer();
        let mut rng = RngStream::new(99, k as u64).generator();
        let draws = 200_000;
        let x = (k / 2) as u32;
        let hits = (0..draws)
            .filter(|_| privatizer.privatize(x, &mut rng).unwrap().contains(x))
            .count() as f64;
        let e = epsilon.exp();
        let want = binom(k - 1, d - 1) * e / (binom(k - 1, d - 1) * e + binom(k - 1, d));
        let se = (want * (1.0 - want) / draws as f64).sqrt();
        assert!((hits / draws as f64 - want).abs() <= 3.0 * se, "k={k} d={d}");
        assert!((mech.inclusion_probability() - want).abs() < 1e-12);
    }
}

fn binom(n: usize, r: usize) -> f64 {
    (0..r).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

#[test]
fn count_frequency_matches_membership_probability() {
    let (k, epsilon, d) = (6, 1.0, 2);
    let p = ProbabilityVector::new(vec![0.4, 0.25, 0.15, 0.1, 0.1, 0.0]).unwrap();
    let (a, b) = coefficients_oracle(k, epsilon, d);
    let coeffs = coefficients(k, epsilon, d).unwrap();
    let mech = SubsetMechanism::new(k, epsilon, d).unwrap();
    let mut privatizer = mech.privatizer();
    let n = 500_000u64;
    let batch = sample_categorical(&p, n as usize, &RngStream::new(5, 0)).unwrap();
    let mut rng = RngStream::new(5, 1).generator();
    let mut t = vec![0u64; k];
    for &x in batch.symbols() {
        privatizer.privatize_into(x, &mut rng, &mut t);
    }
    for i in 0..k {
        let want = (p.as_slice()[i] + b) / a;
        assert!((coeffs.membership_probability(p.as_slice()[i]) - want).abs() < 1e-12);
        let se = (want * (1.0 - want) / n as f64).sqrt();
        let got = t[i] as f64 / n as f64;
        assert!((got - want).abs() <= 3.0 * se, "coordinate {i}: {got} vs {want}");
    }
}

#[test]
fn c_u_matches_quadrature() {
    for i in 0..=10 {
        let u = 1.0 + 0.1 * i as f64;
        let q = c_u_quadrature(u);
        assert!((c_u(u).unwrap() - q).abs() < 1e-8, "u={u}");
    }
    for u in [0.25, 0.5, 0.75] {
        assert!((c_u(u).unwrap() - c_u_quadrature(u)).abs() < 1e-8, "u={u}");
    }
    assert!((c_u(1.5).unwrap() - 0.8600).abs() < 5e-5);
    assert!((c_u(1.0).unwrap() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
}

#[test]
fn closed_form_example_value() {
    let r = closed_form_l2_risk(5, LN_2, 2, 1000).unwrap();
    assert!((r * 1000.0 - 26.133).abs() < 1e-3, "{r}");
    let report = ldplab::montecarlo::run_experiment(&{
        let mut c = ExperimentConfig::uniform(5, LN_2, vec![2.0], vec![1000], 10_000, 17);
        c.d = SubsetSize::Fixed(2);
        c
    })
    .unwrap();
    let cell = &report.cells[0];
    assert!((cell.empirical_risk - r).abs() <= 3.0 * cell.standard_error.unwrap());
    assert_eq!(cell.closed_form_risk, Some(r));
}

#[test]
fn repeated_experiments_cover_the_exact_risk() {
    let engine = Engine::new(0).unwrap();
    let (k, epsilon, n) = (5, LN_2, 100);
    let exact = closed_form_l2_risk(k, epsilon, 2, n).unwrap();
    let runs = 1000;
    let mut covered = 0;
    for seed in 0..runs {
        let mut cfg = ExperimentConfig::uniform(k, epsilon, vec![2.0], vec![n], 1000, 0xC0FE_0000 + seed);
        cfg.d = SubsetSize::Fixed(2);
        let cell = engine.run_experiment(&cfg).unwrap().cells.remove(0);
        if (cell.empirical_risk - exact).abs() <= 3.0 * cell.standard_error.unwrap() {
            covered += 1;
        }
    }
    assert!(covered * 100 >= runs * 99, "{covered}/{runs}");
}

#[test]
fn quadratic_ratio_is_one_at_every_n() {
    let cfg = ExperimentConfig::uniform(8, 1.5, vec![2.0], vec![10, 100, 1000, 5000], 4000, 31);
    let curve = ldplab::montecarlo::risk_curve(&cfg).unwrap();
    assert_eq!(curve.len(), 4);
    for point in &curve {
        let se = point.ratio_standard_error.unwrap();
        assert!(point.ratio > 0.0 && point.ratio.is_finite());
        assert!((point.ratio - 1.0).abs() <= 3.0 * se, "n={}: {} +- {se}", point.n, point.ratio);
    }
}

#[test]
fn absolute_loss_gap_shrinks_on_average() {
    let engine = Engine::new(0).unwrap();
    let (mut small, mut large) = (0.0, 0.0);
    for seed in 0..10 {
        let cfg = ExperimentConfig::uniform(10, 1.0, vec![1.0], vec![100, 100_000], 200, 0xAB + seed);
        let curve = engine.risk_curve(&cfg).unwrap();
        small += (curve[0].ratio - 1.0).abs();
        large += (curve[1].ratio - 1.0).abs();
    }
    assert!(large < small, "mean gap {large} at 1e5 vs {small} at 1e2");
}

#[test]
fn risk_curve_needs_two_sample_sizes() {
    let cfg = ExperimentConfig::uniform(4, 1.0, vec![2.0], vec![50, 50], 10, 1);
    assert!(ldplab::montecarlo::risk_curve(&cfg).is_err());
}

#[test]
fn relabeling_leaves_the_loss_distribution_unchanged() {
    let (k, epsilon, d, n) = (6, 1.0, 2, 400);
    let p = ProbabilityVector::new(vec![0.35, 0.25, 0.2, 0.1, 0.07, 0.03]).unwrap();
    let perm = [4usize, 0, 5, 2, 1, 3];
    let mut permuted = vec![0.0; k];
    for (i, &j) in perm.iter().enumerate() {
        permuted[j] = p.as_slice()[i];
    }
    let permuted = ProbabilityVector::new(permuted).unwrap();
    let us = [0.5, 1.0, 2.0];
    let trials = 4000;
    let mut base = vec![Vec::with_capacity(trials); us.len()];
    let mut moved = base.clone();
    for t in 0..trials as u64 {
        let a = run_trial(k, epsilon, d, &p, n, &us, &RngStream::new(1234, t)).unwrap();
        let b = run_trial(k, epsilon, d, &permuted, n, &us, &RngStream::new(1234, t)).unwrap();
        for j in 0..us.len() {
            base[j].push(a[j]);
            moved[j].push(b[j]);
        }
    }
    for j in 0..us.len() {
        let stat = ks_statistic(&mut base[j], &mut moved[j]);
        assert!(stat <= ks_critical(1e-4, trials, trials), "u={}: D = {stat}", us[j]);
    }
}

#[test]
fn run_trial_is_deterministic_and_finite_at_n_one() {
    let p = uniform_distribution(3).unwrap();
    let s = RngStream::new(8, 8);
    let a = run_trial(3, 1.0, 1, &p, 1, &[1.0, 2.0], &s).unwrap();
    assert_eq!(a, run_trial(3, 1.0, 1, &p, 1, &[1.0, 2.0], &s).unwrap());
    // with n = 1 the estimate depends only on which singleton came back
    let mut seen: Vec<u64> = (0..200)
        .map(|t| run_trial(3, 1.0, 1, &p, 1, &[2.0], &RngStream::new(8, t)).unwrap()[0].to_bits())
        .collect();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), 1, "uniform input: every singleton gives the same loss");
}

#[test]
fn quadratic_scan_is_exact_and_uniform_wins() {
    let cfg = ScanConfig {
        k: 7,
        epsilon: 1.0,
        d: SubsetSize::Auto,
        n: 1000,
        u: 2.0,
        trials: 0,
        num_distributions: 50,
        master_seed: 3,
    };
    let report = ldplab::montecarlo::worst_case_scan(&cfg).unwrap();
    assert!(report.exact && !report.noisy && report.uniform_within_ties);
    assert_eq!(report.maximizer, 0);
    assert_eq!(report.entries.len(), 1 + 7 + 50);
    let top = report.entries[0].risk;
    assert!(report.entries.iter().all(|e| e.risk <= top));
    let (a, b) = coefficients_oracle(7, 1.0, report.d);
    let point = report.entries.iter().find(|e| e.label == "point_mass:0").unwrap();
    let want = ((1.0 + b) * (a - 1.0 - b) + 6.0 * b * (a - b)) / 1000.0;
    assert!((point.risk - want).abs() <= 1e-12 * want);
    let pm = ProbabilityVector::point_mass(7, 0).unwrap();
    assert_eq!(point.risk, exact_l2_risk(&pm, 1.0, report.d, 1000).unwrap());
}

#[test]
fn absolute_loss_scan_has_uniform_within_ties() {
    let cfg = ScanConfig {
        k: 5,
        epsilon: 1.0,
        d: SubsetSize::Auto,
        n: 10_000,
        u: 1.0,
        trials: 400,
        num_distributions: 10,
        master_seed: 77,
    };
    let report = Engine::new(0).unwrap().worst_case_scan(&cfg).unwrap();
    assert!(!report.exact);
    assert!(report.uniform_within_ties, "maximizer {}", report.entries[report.maximizer].label);
    assert!(report.entries.iter().all(|e| e.standard_error.is_some()));
}

#[test]
fn scan_without_dirichlet_draws_covers_uniform_and_point_masses() {
    let cfg = ScanConfig {
        k: 5,
        epsilon: 1.0,
        d: SubsetSize::Auto,
        n: 10,
        u: 2.0,
        trials: 1,
        num_distributions: 0,
        master_seed: 0,
    };
    let report = ldplab::montecarlo::worst_case_scan(&cfg).unwrap();
    let labels: Vec<&str> = report.entries.iter().map(|e| e.label.as_str()).collect();
    assert_eq!(labels, ["uniform", "point_mass:0", "point_mass:1", "point_mass:2", "point_mass:3", "point_mass:4"]);
    assert_eq!(report.maximizer, 0);
}

#[test]
fn single_trial_has_no_standard_error() {
    let cfg = ExperimentConfig::uniform(4, 1.0, vec![1.0, 2.0], vec![10], 1, 5);
    let report = ldplab::montecarlo::run_experiment(&cfg).unwrap();
    assert!(report.cells.iter().all(|c| c.standard_error.is_none() && c.noisy));
}

#[test]
fn invalid_configs_are_rejected() {
    let base = ExperimentConfig::uniform(4, 1.0, vec![2.0], vec![10], 5, 0);
    let mut c = base.clone();
    c.trials = 0;
    assert!(matches!(c.validate(), Err(LdpError::InvalidConfig(_))));
    let mut c = base.clone();
    c.n_values = vec![10, 0];
    assert!(matches!(c.validate(), Err(LdpError::InvalidConfig(_))));
    let mut c = base.clone();
    c.u_values = vec![2.5];
    assert!(matches!(c.validate(), Err(LdpError::InvalidConfig(_))));
    let mut c = base;
    c.d = SubsetSize::Fixed(4);
    assert!(ldplab::montecarlo::run_experiment(&c).is_err());
}

#[test]
fn dirichlet_expected_risk_is_below_uniform() {
    let mut rng = RngStream::new(21, u64::MAX).generator();
    let uniform = closed_form_l2_risk(9, 0.7, 3, 200).unwrap();
    for _ in 0..100 {
        let p = dirichlet_sample(9, 0.5, &mut rng).unwrap();
        let (a, b) = coefficients_oracle(9, 0.7, 3);
        let oracle: f64 = p.as_slice().iter().map(|&x| (x + b) * (a - x - b)).sum::<f64>() / 200.0;
        let got = exact_l2_risk(&p, 0.7, 3, 200).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle);
        assert!(got < uniform);
    }
}

#[test]
fn exact_moment_oracle_agrees_with_estimator_variance() {
    let (k, epsilon, d, n) = (10, 1.0, 3, 250);
    let (a, b) = coefficients_oracle(k, epsilon, d);
    let coord = exact_coordinate_moment(a, b, 0.1, n, 2.0);
    let moments = ldplab::estimation::exact_estimator_moments(&uniform_distribution(k).unwrap(), epsilon, d, n).unwrap();
    assert!((moments[0].variance - coord).abs() <= 1e-10 * coord);
    assert!((moments[0].mean - 0.1).abs() < 1e-12);
}
