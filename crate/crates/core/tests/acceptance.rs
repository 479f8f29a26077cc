//! Acceptance suite: every criterion pinned to its stated tolerance, one
//! pass/fail line each (visible with `cargo test --test acceptance --
//! --nocapture`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskmetrics::distortion::Distortion;
use riskmetrics::envelope::concave_envelope;
use riskmetrics::experiments::{
    family_marginals, pref_robust_table, tk_table, var_es_table, NormalParam,
    MARGINAL_RHO_GRID, PREF_ROBUST_GAMMA_FLOOR, TK_TABLE_CELLS, VAR_TABLE_CELLS,
};
use riskmetrics::moment::{
    extremal_quantile, q_center, q_norm_es, worst_case, Direction, ExtremalOutcome,
    MomentConstraint,
};
use riskmetrics::oracle::{closure_generate, concentration_identity, sup_over_set};
use riskmetrics::portfolio::{solve_diff_tk, solve_linear_penalized, SearchParams};
use riskmetrics::quantile::{QSide, QuantileModel};
use riskmetrics::rearrange::RaParams;
use riskmetrics::rho::rho;

fn pass(criterion: &str, detail: String) {
    println!("criterion {criterion}: PASS - {detail}");
}

#[test]
fn criterion_01_cantelli_identity() {
    let mut worst = 0.0f64;
    for alpha in [0.9, 0.95, 0.99] {
        for m in [-1.0, 0.0, 2.0] {
            for v in [0.5, 1.0, 3.0] {
                let mc = MomentConstraint::new(2.0, m, v).unwrap();
                let h = Distortion::var(alpha).unwrap();
                let got = worst_case(&h, &mc).unwrap().value;
                let want = m + v * (alpha / (1.0 - alpha)).sqrt();
                worst = worst.max((got - want).abs());
            }
        }
    }
    assert!(worst < 1e-9, "worst deviation {worst}");
    pass("1", format!("Cantelli grid, worst deviation {worst:.2e}"));
}

#[test]
fn criterion_02_general_p_closed_form() {
    let mut worst = 0.0f64;
    for p in [1.5, 2.0, 3.0, 5.0] {
        for alpha in [0.5, 0.9, 0.95, 0.99] {
            let closed = q_norm_es(alpha, p).unwrap();
            let env = concave_envelope(&Distortion::var(alpha).unwrap()).unwrap();
            let cn = q_center(&env.envelope, p / (p - 1.0)).unwrap();
            worst = worst.max((cn.norm - closed).abs());
        }
    }
    assert!(worst < 1e-8, "worst deviation {worst}");
    pass("2", format!("4x4 (p, alpha) grid, worst deviation {worst:.2e}"));
}

#[test]
fn criterion_03_difference_of_tk_norm_and_envelope() {
    let h = Distortion::tk(0.8).unwrap().difference(&Distortion::tk(0.7).unwrap());
    let env = concave_envelope(&h).unwrap();
    let cn = q_center(&env.envelope, 2.0).unwrap();
    assert!((cn.norm - 0.3345).abs() < 1e-3, "[h*]_2 = {}", cn.norm);
    let (a, b) = env.i_h.as_slice()[0];
    assert!((a - 0.2422).abs() < 2e-3, "reflected interval start {a}");
    assert!((b - 1.0).abs() < 2e-3, "reflected interval end {b}");
    let (da, db) = env.divergence.as_slice()[0];
    assert!(da.abs() < 2e-3 && (db - 0.7578).abs() < 2e-3, "linear segment boundary {db}");
    pass(
        "3",
        format!("[h*]_2 = {:.6}, linear on [0, {:.6}], reflected ({:.6}, 1)", cn.norm, db, a),
    );
}

#[test]
fn criterion_04_diff_tk_portfolio_rows() {
    let printed_a: [&[f64]; 4] = [
        &[0.333, 0.333, 0.333],
        &[0.300, 0.400, 0.300],
        &[0.997, 0.002, 0.001],
        &[0.438, 0.219, 0.146, 0.110, 0.088],
    ];
    let printed_d = [0.193, 0.150, 0.335, 0.221];
    let covs = riskmetrics::experiments::diff_tk_covariances();
    for ((label, sigma), (pa, pd)) in covs.iter().zip(printed_a.iter().zip(printed_d)) {
        let sol = solve_diff_tk(sigma, 0.8, 0.7).unwrap();
        assert!((sol.value - pd).abs() < 2e-3, "{label}: D = {} vs {pd}", sol.value);
        for (w, want) in sol.weights.iter().zip(pa.iter()) {
            assert!((w - want).abs() < 5e-3, "{label}: weight {w} vs {want}");
        }
    }
    pass("4", "all four covariance rows within (5e-3, 2e-3)".into());
}

#[test]
fn criterion_05_preference_robust_rows() {
    let rows = pref_robust_table(PREF_ROBUST_GAMMA_FLOOR).unwrap();
    let printed: [(&[f64], f64, f64); 5] = [
        (&[0.333, 0.333, 0.333], 0.610, 1.41),
        (&[0.000, 0.500, 0.500], 0.676, 1.29),
        (&[0.300, 0.400, 0.300], 0.690, 1.17),
        (&[0.500, 0.331, 0.168], 0.630, 1.57),
        (&[0.438, 0.219, 0.146, 0.110, 0.088], 0.678, 1.26),
    ];
    let mut failures = Vec::new();
    for (i, (row, (pa, pg, pv))) in rows.iter().zip(printed).enumerate() {
        if (row.v - pv).abs() > 0.02 {
            failures.push(format!("row {}: V = {:.4} vs {pv}", i + 1, row.v));
        }
        if (row.gamma_hat - pg).abs() > 0.01 {
            failures.push(format!("row {}: gamma = {:.4} vs {pg}", i + 1, row.gamma_hat));
        }
        for (w, want) in row.weights.iter().zip(pa.iter()) {
            if (w - want).abs() > 5e-3 {
                failures.push(format!("row {}: weight {:.4} vs {want}", i + 1, w));
                break;
            }
        }
    }
    assert!(
        failures.is_empty(),
        "criterion 5: FAIL - {} (rows 1-3 and 5 reproduce; row 4 of the published table \
         is a non-optimal point of its own objective - see the decisions ledger)",
        failures.join("; ")
    );
    pass("5", "all five rows within (5e-3, 0.01, 0.02)".into());
}

#[test]
fn criterion_06_v_es_column() {
    let printed: [[f64; 9]; 2] = [
        [3.741, 3.215, 3.159, 5.785, 4.083, 4.132, 4.405, 3.893, 4.230],
        [3.741, 3.220, 3.163, 5.785, 4.084, 4.133, 4.422, 3.916, 4.236],
    ];
    let mut worst = 0.0f64;
    for (k, narrow) in [false, true].iter().enumerate() {
        for (&(family, n, c), pv) in VAR_TABLE_CELLS.iter().zip(printed[k]) {
            let (lo, hi) = riskmetrics::experiments::table_box(*narrow, n);
            let marginals = family_marginals(family, n, NormalParam::Variance).unwrap();
            let r: Vec<f64> =
                marginals.iter().map(|f| f.mean_on(0.95, 1.0).unwrap()).collect();
            let sol = solve_linear_penalized(&r, lo, hi, c).unwrap();
            let rel = (sol.value - pv).abs() / pv;
            worst = worst.max(rel);
            assert!(rel < 5e-3, "{family:?} n={n} narrow={narrow}: {} vs {pv}", sol.value);
        }
    }
    pass("6", format!("18 printed values matched, worst relative error {worst:.2e}"));
}

#[test]
fn criterion_07_v_var_column() {
    let ra = RaParams { n_rows: 10_000, eps: 1e-6, max_sweeps: 200, seed: 1 };
    let search = SearchParams { seed: 1, ..Default::default() };
    let printed: [[f64; 9]; 2] = [
        [3.547, 3.197, 3.156, 5.766, 4.082, 4.132, 4.251, 3.892, 4.230],
        [3.546, 3.204, 3.162, 5.766, 4.084, 4.133, 4.369, 3.916, 4.236],
    ];
    let mut worst = 0.0f64;
    for (k, narrow) in [false, true].iter().enumerate() {
        let rows = var_es_table(*narrow, &ra, &search, NormalParam::Variance).unwrap();
        for (row, pv) in rows.iter().zip(printed[k]) {
            let rel = (row.v_lower - pv).abs() / pv;
            worst = worst.max(rel);
            assert!(
                rel < 0.02,
                "{:?} n={} narrow={narrow}: V_var {} vs {pv}",
                row.family,
                row.n,
                row.v_lower
            );
            assert!(
                row.v_lower <= row.v_convex + 1e-6,
                "sandwich violated: {} > {}",
                row.v_lower,
                row.v_convex
            );
        }
    }
    pass("7", format!("18 RA values within 2% (worst {worst:.2e}), sandwich holds"));
}

#[test]
fn criterion_08_tk_tables_gap_band() {
    let ra = RaParams { n_rows: 10_000, eps: 1e-6, max_sweeps: 200, seed: 1 };
    let search = SearchParams { seed: 1, ..Default::default() };
    let printed_hstar: [[f64; 9]; 2] = [
        [1.185, 1.237, 1.501, 1.493, 1.363, 1.316, 1.427, 1.484, 1.286],
        [1.185, 1.237, 1.501, 1.493, 1.363, 1.316, 1.430, 1.485, 1.289],
    ];
    let mut worst_rel = 0.0f64;
    let mut gap_range = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, narrow) in [false, true].iter().enumerate() {
        let rows =
            tk_table(*narrow, &ra, &search, NormalParam::Variance, MARGINAL_RHO_GRID).unwrap();
        assert_eq!(rows.len(), TK_TABLE_CELLS.len());
        for (row, pv) in rows.iter().zip(printed_hstar[k]) {
            let rel = (row.v_convex - pv).abs() / pv;
            worst_rel = worst_rel.max(rel);
            assert!(
                rel < 5e-3,
                "{:?} n={} narrow={narrow}: V_h* {} vs {pv}",
                row.family,
                row.n,
                row.v_convex
            );
            gap_range.0 = gap_range.0.min(row.rel_gap_pct);
            gap_range.1 = gap_range.1.max(row.rel_gap_pct);
            assert!(
                (5.0..=30.0).contains(&row.rel_gap_pct),
                "{:?} n={}: gap {}% outside [5, 30]",
                row.family,
                row.n,
                row.rel_gap_pct
            );
        }
    }
    pass(
        "8",
        format!(
            "V_h* within 0.5% (worst {worst_rel:.2e}); gaps in [{:.1}%, {:.1}%]",
            gap_range.0, gap_range.1
        ),
    );
}

fn random_pl(rng: &mut ChaCha8Rng) -> Distortion {
    let k = rng.gen_range(2..=6);
    let mut knots: Vec<f64> = vec![0.0];
    for _ in 0..k - 1 {
        knots.push(rng.gen_range(0.02..0.98));
    }
    knots.push(1.0);
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup_by(|a, b| (*a - *b).abs() < 0.01);
    if *knots.last().unwrap() != 1.0 {
        knots.push(1.0);
    }
    let mut values = vec![0.0];
    for _ in 0..knots.len() - 1 {
        values.push(rng.gen_range(-1.0..1.5));
    }
    Distortion::piecewise_linear(&knots, &values).unwrap()
}

fn random_discrete(rng: &mut ChaCha8Rng) -> QuantileModel {
    let k = rng.gen_range(1..=8);
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for _ in 0..k {
        atoms.push(rng.gen_range(-3.0..3.0));
        weights.push(rng.gen_range(0.05..1.0));
    }
    let s: f64 = weights.iter().sum();
    let pairs: Vec<(f64, f64)> =
        atoms.into_iter().zip(weights.into_iter().map(|w| w / s)).collect();
    QuantileModel::discrete(&pairs).unwrap()
}

#[test]
fn criterion_09_equivalence_identity_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let h = random_pl(&mut rng);
        let f = random_discrete(&mut rng);
        let (lhs, rhs) = concentration_identity(&h, &f).unwrap();
        worst = worst.max((lhs - rhs).abs());
        assert!((lhs - rhs).abs() < 1e-8, "case {case}: {lhs} vs {rhs}");
    }
    let mut sup_worst = 0.0f64;
    for case in 0..50 {
        let h = random_pl(&mut rng);
        let env = concave_envelope(&h).unwrap();
        let seed = random_discrete(&mut rng);
        let candidates: Vec<(f64, f64)> = env.i_h.iter().collect();
        let cl = closure_generate(&seed, &candidates, candidates.len().max(1), 10_000).unwrap();
        assert!(cl.complete, "case {case}: closure truncated");
        let (sup_h, _) = sup_over_set(&h, &cl.models).unwrap();
        let (sup_env, _) = sup_over_set(&env.envelope, &cl.models).unwrap();
        sup_worst = sup_worst.max((sup_h - sup_env).abs());
        assert!((sup_h - sup_env).abs() < 1e-8, "case {case}: {sup_h} vs {sup_env}");
    }
    // monotone-gap guard on arbitrary (non-closed) sets
    for _ in 0..50 {
        let h = random_pl(&mut rng);
        let env = concave_envelope(&h).unwrap();
        let models = vec![random_discrete(&mut rng), random_discrete(&mut rng)];
        let (sup_h, _) = sup_over_set(&h, &models).unwrap();
        let (sup_env, _) = sup_over_set(&env.envelope, &models).unwrap();
        assert!(sup_h <= sup_env + 1e-10);
    }
    pass(
        "9",
        format!(
            "200 identities (worst {worst:.2e}), 50 closed-set sups (worst {sup_worst:.2e}), \
             gap guard held"
        ),
    );
}

fn random_case_model(rng: &mut ChaCha8Rng, i: usize) -> QuantileModel {
    match i % 5 {
        0 => QuantileModel::uniform(rng.gen_range(-2.0..0.0), rng.gen_range(0.5..3.0)).unwrap(),
        1 => QuantileModel::normal(rng.gen_range(-1.0..1.0), rng.gen_range(0.3..2.0)).unwrap(),
        2 => QuantileModel::exponential(rng.gen_range(0.5..3.0)).unwrap(),
        3 => QuantileModel::lomax(rng.gen_range(2.6..5.0)).unwrap(),
        _ => random_discrete(rng),
    }
}

#[test]
fn criterion_10_concentration_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst_mean = 0.0f64;
    let mut worst_sl = f64::NEG_INFINITY;
    let mut worst_norm = f64::NEG_INFINITY;
    for i in 0..500 {
        let f = random_case_model(&mut rng, i);
        let a = rng.gen_range(0.0..0.9);
        let b = rng.gen_range(a + 0.05..1.0f64.min(a + 0.95));
        let g = f.concentrate((a, b)).unwrap();

        // mean preservation
        let gap = (g.mean().unwrap() - f.mean().unwrap()).abs();
        worst_mean = worst_mean.max(gap);
        assert!(gap < 1e-10, "case {i}: mean gap {gap}");

        // stop-loss (convex order) contraction on a quantile-spanning grid
        let qlo = f.quantile(0.02, QSide::Left).unwrap();
        let qhi = f.quantile(0.98, QSide::Left).unwrap();
        for j in 0..64 {
            let k = qlo + (qhi - qlo) * j as f64 / 63.0;
            let excess = g.stop_loss(k).unwrap() - f.stop_loss(k).unwrap();
            worst_sl = worst_sl.max(excess);
            assert!(excess <= 1e-10, "case {i}: stop-loss violated by {excess} at k={k}");
        }

        // moment-set closure: central p-norm does not increase; keep p well
        // inside the finite-moment band so the tail integral is certifiable
        let p = rng.gen_range(1.5f64..4.0).min(0.78 * f.max_moment());
        if p >= 1.5 {
            let before = f.central_norm(p).unwrap();
            let after = g.central_norm(p).unwrap();
            worst_norm = worst_norm.max(after - before);
            assert!(after <= before + 1e-10, "case {i}: p-norm rose {before} -> {after}");
        }
    }
    pass(
        "10",
        format!(
            "500 cases: mean gap <= {worst_mean:.2e}, stop-loss excess <= {worst_sl:.2e}, \
             p-norm growth <= {worst_norm:.2e}"
        ),
    );
}

#[test]
fn criterion_11_extremal_quantile_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut done = 0;
    while done < 50 {
        let h = random_pl(&mut rng);
        let p = rng.gen_range(1.3..4.0);
        let m = rng.gen_range(-2.0..2.0);
        let v = rng.gen_range(0.3..3.0);
        let mc = MomentConstraint::new(p, m, v).unwrap();
        let b = worst_case(&h, &mc).unwrap();
        let qm = match extremal_quantile(&h, &mc, Direction::Sup).unwrap() {
            ExtremalOutcome::Quantile(q) => q,
            ExtremalOutcome::Any => continue, // degenerate linear-envelope draw
        };
        let mean = qm.mean().unwrap();
        assert!((mean - m).abs() < 1e-8, "mean {mean} vs {m}");
        let norm = qm.central_norm(p).unwrap();
        assert!((norm - v).abs() < 1e-8, "norm {norm} vs {v}");
        let env = concave_envelope(&h).unwrap();
        let got = rho(&env.envelope, &qm).unwrap();
        assert!((got - b.value).abs() < 1e-8, "rho {got} vs bound {}", b.value);
        // continuous h equals its usc modification, so the original attains too
        let direct = rho(&h, &qm).unwrap();
        assert!((direct - b.value).abs() < 1e-8, "rho_h {direct} vs {}", b.value);
        done += 1;
    }
    // attainment flags of the quantile-level pair
    let mc = MomentConstraint::new(2.0, 0.0, 1.0).unwrap();
    let var = worst_case(&Distortion::var(0.95).unwrap(), &mc).unwrap();
    let varp = worst_case(&Distortion::var_plus(0.95).unwrap(), &mc).unwrap();
    assert!(!var.attained && varp.attained);
    pass("11", "50 optimizer loops closed at 1e-8; attainment flags correct".into());
}
