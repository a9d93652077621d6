//! Acceptance suite: every release criterion, each printing one PASS line
//! with its measured numbers (a failed assert marks the criterion red).
//!
//! Run with `cargo test -p projest-cli --test acceptance -- --nocapture`.

use std::time::Instant;

use num::rational::Ratio;
use num::BigInt;
use rayon::prelude::*;

use projest::analysis::{
    empirical_rate, error_bound, fit_constants, optimize, BoundConstants, BoundFlavor, ErrorPoint,
};
use projest::estimator::{
    coeffs_direct, coeffs_from_moments, estimate_moments, Algorithm, Target,
};
use projest::quad::adaptive_2d;
use projest::sampler::{
    inverse_cdf_12, inverse_cdf_32, inverse_cdf_generic, sample, RngStream,
};
use projest::stats::{ks_statistic, mean_var};
use projest::testfam::{
    deterministic_errors, exact_density_coeffs, indicator_slobodetskij_integral,
    squared_norms_exact, SlobodetskijIntegral, TestFamilyParams,
};
use projest_cli::{cmd_exact, cmd_table, run_cell, GridConfig};

fn fam(nu1: u32, nu2: u32) -> TestFamilyParams {
    TestFamilyParams::new(nu1, nu2).unwrap()
}

fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}

fn grid_config(nu1: u32, nu2: u32, m_max: u32, seed: u64) -> GridConfig {
    GridConfig {
        nu1,
        nu2,
        n_list: vec![4, 8, 16, 32, 64],
        m_list: (0..=m_max).collect(),
        seed,
        replicates: 1,
        algorithm: Algorithm::Direct,
        max_m: 18,
    }
}

#[test]
fn criterion_deterministic_table_rows() {
    let start = Instant::now();
    let rows12 = cmd_exact(1, 2, &[4, 8, 16, 32, 64]).unwrap();
    let rows32 = cmd_exact(3, 2, &[4, 8, 16, 32, 64]).unwrap();
    let elapsed = start.elapsed();

    let get = |rows: &[projest_cli::ExactRow], n: usize, target: char| {
        rows.iter().find(|r| r.n == n && r.target == target).unwrap().eps_det
    };
    // (reported value, absolute tolerance): 1e-6 for the 6-decimal cells,
    // 5e-9 for the scientific-notation cells.
    let checks: [(&[projest_cli::ExactRow], char, [(f64, f64); 5]); 4] = [
        (
            &rows12,
            'g',
            [
                (0.024614, 1e-6),
                (0.009800, 1e-6),
                (0.003838, 1e-6),
                (0.001442, 1e-6),
                (0.000527, 1e-6),
            ],
        ),
        (
            &rows12,
            'f',
            [
                (0.005772, 1e-6),
                (0.001069, 1e-6),
                (0.000198, 1e-6),
                (0.000036, 1e-6),
                (6.48e-6, 5e-9),
            ],
        ),
        (
            &rows32,
            'g',
            [
                (0.009757, 1e-6),
                (0.001782, 1e-6),
                (0.000327, 1e-6),
                (0.000059, 1e-6),
                (0.000011, 1e-6),
            ],
        ),
        (
            &rows32,
            'f',
            [
                (0.002779, 1e-6),
                (0.000139, 1e-6),
                (0.000014, 1e-6),
                (1.40e-6, 5e-9),
                (1.35e-7, 5e-9),
            ],
        ),
    ];
    let mut verified = 0;
    for (rows, target, cells) in checks {
        for (k, (want, tol)) in cells.iter().enumerate() {
            let n = 4usize << k;
            let got = get(rows, n, target);
            assert!(
                (got - want).abs() <= *tol,
                "target {target} n={n}: {got} vs {want} (tol {tol})"
            );
            verified += 1;
        }
    }
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE deterministic_table_rows: PASS ({verified} cells, {:.0} ms)",
        elapsed.as_secs_f64() * 1e3
    );
}

#[test]
fn criterion_squared_norms_exact() {
    let ratio = |n: i64, d: i64| Ratio::new(BigInt::from(n), BigInt::from(d));
    let (g, f) = squared_norms_exact(&fam(1, 2));
    assert_eq!(g, ratio(156, 245));
    assert_eq!(f, ratio(235, 343));
    let (g, f) = squared_norms_exact(&fam(3, 2));
    assert_eq!(g, ratio(5928, 10115));
    assert_eq!(f, ratio(7801, 10115));
    println!("ACCEPTANCE squared_norms_exact: PASS (156/245, 235/343, 5928/10115, 7801/10115)");
}

#[test]
fn criterion_convergence_exponents() {
    let lengths = [8usize, 16, 32, 64];
    let errors = |p: &TestFamilyParams| -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
        let pairs: Vec<(usize, (f64, f64))> = lengths
            .iter()
            .map(|&n| (n, deterministic_errors(p, n).unwrap()))
            .collect();
        (
            pairs.iter().map(|&(n, (g, _))| (n, g)).collect(),
            pairs.iter().map(|&(n, (_, f))| (n, f)).collect(),
        )
    };
    let (g12, f12) = errors(&fam(1, 2));
    let (g32, f32_) = errors(&fam(3, 2));
    let cases = [
        ("g(1,2)", empirical_rate(&g12).unwrap(), 1.5, 0.15),
        ("f(1,2)", empirical_rate(&f12).unwrap(), 2.5, 0.2),
        ("g(3,2)", empirical_rate(&g32).unwrap(), 2.5, 0.2),
        ("f(3,2)", empirical_rate(&f32_).unwrap(), 3.5, 0.25),
    ];
    for (label, rate, want, tol) in cases {
        assert!((rate - want).abs() <= tol, "{label}: rate {rate} vs {want} +- {tol}");
    }
    println!(
        "ACCEPTANCE convergence_exponents: PASS (rates {:.3}, {:.3}, {:.3}, {:.3})",
        cases[0].1, cases[1].1, cases[2].1, cases[3].1
    );
}

#[test]
fn criterion_stochastic_floor() {
    let seeds: Vec<u64> = (0..10).collect();
    let run = |n: usize, m: u32, seed: u64| -> f64 {
        let cfg = grid_config(1, 2, 18, seed);
        let p = fam(1, 2);
        let (g, _) = run_cell(&cfg, &p, n, m, 0).unwrap();
        g.eps_total
    };
    let floor: Vec<f64> = seeds.par_iter().map(|&s| run(4, 12, s)).collect();
    let stochastic: Vec<f64> = seeds.par_iter().map(|&s| run(64, 0, s)).collect();

    let floor_pass = floor.iter().filter(|e| (0.0246..=0.0250).contains(*e)).count();
    let stochastic_pass = stochastic.iter().filter(|e| (0.14..=0.28).contains(*e)).count();
    assert!(floor_pass >= 8, "floor band: {floor_pass}/10 in range, values {floor:?}");
    assert!(
        stochastic_pass >= 8,
        "stochastic band: {stochastic_pass}/10 in range, values {stochastic:?}"
    );
    println!(
        "ACCEPTANCE stochastic_floor: PASS (n=4,m=12: {floor_pass}/10 in [0.0246,0.0250]; n=64,m=0: {stochastic_pass}/10 in [0.14,0.28])"
    );
}

#[test]
fn criterion_unbiasedness_and_variance() {
    let p = fam(1, 2);
    let replicates = 200usize;
    let n = 16usize;
    let exact = exact_density_coeffs(&p, n);

    // One stream per replicate: the counter-based generator makes the
    // 2^14-sample batch a prefix of the 2^16-sample batch, so the two
    // variance estimates are positively correlated and their ratio
    // concentrates around the theoretical factor 4.
    let per_rep: Vec<(Vec<f64>, Vec<f64>)> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let rng = RngStream::new(3_000 + rep, 100);
            let small = sample(&p, &rng, 1 << 14).unwrap();
            let large = sample(&p, &rng, 1 << 16).unwrap();
            (
                coeffs_direct(&small, n).unwrap().as_slice().to_vec(),
                coeffs_direct(&large, n).unwrap().as_slice().to_vec(),
            )
        })
        .collect();
    let mut small = vec![Vec::with_capacity(replicates); n + 1];
    let mut large = vec![Vec::with_capacity(replicates); n + 1];
    for (s, l) in per_rep {
        for (i, v) in s.into_iter().enumerate() {
            small[i].push(v);
        }
        for (i, v) in l.into_iter().enumerate() {
            large[i].push(v);
        }
    }

    // i = 0 has zero variance by construction; the rest within 4 SE.
    assert!(small[0].iter().all(|v| *v == std::f64::consts::FRAC_1_SQRT_2));
    let mut worst_z = 0.0f64;
    for i in 1..=n {
        let (mean, var) = mean_var(&small[i]);
        let se = (var / replicates as f64).sqrt();
        let z = (mean - exact.as_slice()[i]).abs() / se;
        worst_z = worst_z.max(z);
        assert!(z <= 4.0, "i={i}: mean off by {z:.2} standard errors");
    }

    let mut ratios = Vec::new();
    for i in [1usize, 2, 4, 8] {
        let (_, var_small) = mean_var(&small[i]);
        let (_, var_large) = mean_var(&large[i]);
        let ratio = var_small / var_large;
        assert!(
            (3.0..=5.0).contains(&ratio),
            "i={i}: variance ratio {ratio} outside [3, 5]"
        );
        ratios.push(ratio);
    }
    println!(
        "ACCEPTANCE unbiasedness_and_variance: PASS (worst |z| {worst_z:.2} <= 4; N vs 4N variance ratios {ratios:.2?})"
    );
}

#[test]
fn criterion_sampler_correctness() {
    // Closed forms against the generic root finder, and inverse property.
    let p12 = fam(1, 2);
    let p32 = fam(3, 2);
    let mut worst_gap = 0.0f64;
    let mut worst_inverse = 0.0f64;
    for j in 0..10_000 {
        let alpha = (j as f64 + 0.5) / 10_000.0;
        let (c12, c32) = (inverse_cdf_12(alpha), inverse_cdf_32(alpha));
        let g12 = inverse_cdf_generic(&p12, alpha).unwrap();
        let g32 = inverse_cdf_generic(&p32, alpha).unwrap();
        worst_gap = worst_gap.max((c12 - g12).abs()).max((c32 - g32).abs());
        worst_inverse = worst_inverse
            .max((p12.distribution(c12) - alpha).abs())
            .max((p32.distribution(c32) - alpha).abs());
    }
    assert!(worst_gap <= 1e-10, "closed vs generic gap {worst_gap}");
    assert!(worst_inverse <= 1e-10, "inverse property residual {worst_inverse}");

    // Kolmogorov-Smirnov at the 1% level on one-million-sample batches.
    let size = 1_000_000usize;
    let critical = 1.63 / (size as f64).sqrt();
    let mut pass_counts = Vec::new();
    for p in [p12, p32] {
        let passes = (0..100u64)
            .into_par_iter()
            .filter(|&seed| {
                let mut values = sample(&p, &RngStream::new(seed, 0), size).unwrap().values().to_vec();
                values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                ks_statistic(&values, |x| p.distribution(x)) < critical
            })
            .count();
        assert!(passes >= 95, "({},{}): KS passed {passes}/100", p.nu1(), p.nu2());
        pass_counts.push(passes);
    }
    println!(
        "ACCEPTANCE sampler_correctness: PASS (max closed-generic gap {worst_gap:.2e}, max inverse residual {worst_inverse:.2e}, KS {}/100 and {}/100)",
        pass_counts[0], pass_counts[1]
    );
}

#[test]
fn criterion_optimization_calculator() {
    let gammas = [0.1, 0.05, 0.025, 0.0125];
    let cases = [(0.885, 0.276, 1.5, 4.0), (0.890, 0.545, 2.5, 6.0)];
    let mut summaries = Vec::new();
    for (c1, c2, s, want_relation) in cases {
        let c = BoundConstants::new(c1, c2, s, BoundFlavor::PowerLaw).unwrap();
        let mut relation_points = Vec::new();
        let mut scaling_points = Vec::new();
        for gamma in gammas {
            let plan = optimize(&c, gamma, Target::Density).unwrap();
            let bound = error_bound(&c, plan.n_opt, plan.sample_size_opt, Target::Density).unwrap();
            assert!(bound <= gamma * (1.0 + 1e-9), "s={s} gamma={gamma}: bound {bound}");
            assert_eq!(plan.relation_exponent, 2.0 * s + 1.0);
            relation_points.push(((plan.n_opt as f64).ln(), (plan.sample_size_opt as f64).ln()));
            scaling_points.push(((plan.sample_size_opt as f64).ln(), bound.ln()));
        }
        let relation_slope = ls_slope(&relation_points);
        assert!(
            (relation_slope - want_relation).abs() <= 0.05 * want_relation,
            "s={s}: N ~ n^k slope {relation_slope} vs {want_relation}"
        );
        let scaling_slope = ls_slope(&scaling_points);
        let want_scaling = -s / (2.0 * s + 1.0);
        assert!(
            (scaling_slope - want_scaling).abs() <= 0.05 * want_scaling.abs(),
            "s={s}: B ~ N^k slope {scaling_slope} vs {want_scaling}"
        );
        summaries.push(format!(
            "s={s}: N~n^{relation_slope:.3}, B~N^{scaling_slope:.4}"
        ));
    }
    println!("ACCEPTANCE optimization_calculator: PASS ({})", summaries.join("; "));
}

#[test]
fn criterion_constant_fitting_model_recovery() {
    let truth = BoundConstants::new(0.885, 0.276, 1.5, BoundFlavor::PowerLaw).unwrap();
    let mut points = Vec::new();
    for k in 0..5u32 {
        let n = 4usize << k;
        for m in 0..=14u32 {
            let size = 1u64 << (m + 9);
            let eps = error_bound(&truth, n, size, Target::Density).unwrap();
            points.push(ErrorPoint { n, sample_size: size, eps });
        }
    }
    let fit = fit_constants(&points, 1.5).unwrap();
    assert!((fit.c1 - 0.885).abs() <= 1e-6, "c1 {}", fit.c1);
    assert!((fit.c2 - 0.276).abs() <= 1e-6, "c2 {}", fit.c2);
    println!(
        "ACCEPTANCE constant_fitting_model_recovery: PASS (c1 {:.9}, c2 {:.9})",
        fit.c1, fit.c2
    );
}

#[test]
fn criterion_constant_fitting_reference_bands() {
    // Regenerate both example grids (m <= 14) and fit the bound constants.
    // Reference pairs: (0.885, 0.276) and (0.890, 0.545), +-30% band.
    // Regenerated grids reproduce the reference per-cell errors closely,
    // yet least squares on them lands near (0.35, 0.05) and (0.36, 0.11);
    // the reference pairs do not appear to be reproducible from the stated
    // objective on data of this shape. The band check is kept as stated.
    let mut measured = Vec::new();
    for (nu1, nu2, s, want_c1, want_c2) in
        [(1u32, 2u32, 1.5f64, 0.885, 0.276), (3, 2, 2.5, 0.890, 0.545)]
    {
        let cfg = grid_config(nu1, nu2, 14, 2026);
        let rows = cmd_table(&cfg).unwrap();
        let points: Vec<ErrorPoint> = rows
            .iter()
            .filter(|r| r.target == 'g')
            .map(|r| ErrorPoint { n: r.n, sample_size: r.sample_size as u64, eps: r.eps_total })
            .collect();
        let fit = fit_constants(&points, s).unwrap();
        measured.push((nu1, nu2, fit.c1, fit.c2, want_c1, want_c2));
    }
    for &(nu1, nu2, c1, c2, want_c1, want_c2) in &measured {
        println!(
            "ACCEPTANCE constant_fitting_reference_bands: ({nu1},{nu2}) fitted c1={c1:.4} c2={c2:.4}, reference ({want_c1}, {want_c2}) +-30%"
        );
    }
    for (nu1, nu2, c1, c2, want_c1, want_c2) in measured {
        assert!(
            (c1 - want_c1).abs() <= 0.3 * want_c1,
            "({nu1},{nu2}): c1 {c1:.4} outside 30% of {want_c1}"
        );
        assert!(
            (c2 - want_c2).abs() <= 0.3 * want_c2,
            "({nu1},{nu2}): c2 {c2:.4} outside 30% of {want_c2}"
        );
    }
    println!("ACCEPTANCE constant_fitting_reference_bands: PASS");
}

#[test]
fn criterion_route_equivalence() {
    let p = fam(1, 2);
    let n = 12usize;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let batch = sample(&p, &RngStream::new(seed, 0), 1 << 12).unwrap();
        let direct = coeffs_direct(&batch, n).unwrap();
        let moments = estimate_moments(&batch, n).unwrap();
        let via_moments = coeffs_from_moments(&moments, n).unwrap();
        let gap = direct
            .as_slice()
            .iter()
            .zip(via_moments.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(gap);
    }
    assert!(worst <= 1e-9, "worst route gap {worst}");
    println!("ACCEPTANCE route_equivalence: PASS (worst coefficient gap {worst:.2e} over 20 seeds)");
}

#[test]
fn criterion_slobodetskij_integral() {
    let sigma = 0.25;
    let analytic = match indicator_slobodetskij_integral(sigma).unwrap() {
        SlobodetskijIntegral::Finite(v) => v,
        SlobodetskijIntegral::Divergent => panic!("finite at sigma = 0.25"),
    };
    // Independent oracle: adaptive 2-D quadrature of the seminorm integrand
    // over the off-diagonal quarter squares (the two contribute equally).
    let quadrature = 2.0
        * adaptive_2d(
            |x, y| (y - x).powf(-(1.0 + 2.0 * sigma)),
            -1.0,
            0.0,
            0.0,
            1.0,
            1e-8,
        );
    assert!(
        (analytic - quadrature).abs() <= 0.01 * quadrature.abs(),
        "analytic {analytic} vs quadrature {quadrature}"
    );
    assert_eq!(
        indicator_slobodetskij_integral(0.5).unwrap(),
        SlobodetskijIntegral::Divergent
    );
    println!(
        "ACCEPTANCE slobodetskij_integral: PASS (analytic {analytic:.6} vs quadrature {quadrature:.6}; divergent at 1/2)"
    );
}

/// Optional heavyweight column: the full N = 2^27 cell at degree 64.
/// Run with `cargo test -p projest-cli --test acceptance -- --ignored`.
#[test]
#[ignore = "N = 2^27 cell takes a few extra minutes"]
fn optional_full_sample_size_column() {
    let cfg = grid_config(1, 2, 18, 0);
    let p = fam(1, 2);
    let (g, f) = run_cell(&cfg, &p, 64, 18, 0).unwrap();
    assert!(g.eps_total.is_finite() && f.eps_total.is_finite());
    // Near the deterministic floor 0.000527 (the reference cell is 0.000647).
    assert!(g.eps_total > 0.000526 && g.eps_total < 0.002, "{}", g.eps_total);
    println!(
        "ACCEPTANCE optional_full_sample_size_column: PASS (eps_total_g {:.6} at n=64, m=18)",
        g.eps_total
    );
}

/// The degree-64 run at N = 2^19 sits in the stochastic-dominated regime of
/// the reference grid (order 0.0075); checked as a band across seeds.
#[test]
fn criterion_stochastic_cell_magnitude() {
    let p = fam(1, 2);
    let totals: Vec<f64> = (0..5u64)
        .into_par_iter()
        .map(|seed| {
            let batch = sample(&p, &RngStream::new(seed, 9), 1 << 19).unwrap();
            let est =
                projest::estimator::ProjectionEstimate::from_batch(&batch, 64, Algorithm::Direct)
                    .unwrap();
            let (rg, _) = projest::estimator::estimate_error_vs_truth(&est, &p).unwrap();
            rg.eps_total
        })
        .collect();
    let mean = totals.iter().sum::<f64>() / totals.len() as f64;
    assert!(
        mean > 0.0075 / 1.5 && mean < 0.0075 * 1.5,
        "mean eps_total {mean} not within 1.5x of 0.0075"
    );
    println!("ACCEPTANCE stochastic_cell_magnitude: PASS (mean eps_total {mean:.5} ~ 0.0075)");
}
