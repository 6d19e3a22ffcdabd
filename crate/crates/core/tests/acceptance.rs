//! Acceptance criteria 1–11. Each test prints one PASS/FAIL line on stdout
//! (written directly so it shows under the default output capture) and then
//! asserts.

use std::io::Write;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use randisc::distributions::ColumnDistribution;
use randisc::experiments::{
    run_experiment, ExperimentConfig, ExperimentReport, LltAggregate, Records, TsparseAggregate, UnitDiscAggregate,
};
use randisc::exact::rank_i64;
use randisc::lattice::{covering_radius, lattice_from_columns, tsparse_lattice, CoveringMode, Norm};
use randisc::local_limit::{char_fn_signed_sum, signed_sum_distribution};
use randisc::matrix::IntMatrix;
use randisc::mixing::{walsh_coefficient, weight_distribution};
use randisc::solvers::{disc_decision_dp, disc_exact, disc_meet_middle, parity_lower_bound, tsparse_odd_disc};
use randisc::spanningness::{beta_bound, spanningness_report, tsparse_spanning_set, verify_tsparse_spanning_set};

type Q = BigRational;

fn report(id: u32, title: &str, pass: bool, detail: &str, start: Instant) {
    let line = format!(
        "{} criterion {id:>2} ({title}): {detail} [{:.1}s]\n",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{}", line.trim_end());
}

fn run(json: &str) -> ExperimentReport {
    run_experiment(&ExperimentConfig::from_json_str(json).unwrap()).unwrap()
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |a, i| a * (n - i) / (i + 1))
}

fn within_3se(freq: f64, p: f64, trials: usize) -> (bool, f64) {
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    ((freq - p).abs() <= 3.0 * se, se)
}

#[test]
fn criterion_01_tsparse_even_law() {
    let start = Instant::now();
    let r = run(r#"{"kind": "tsparse-disc", "m": 6, "t": 2, "n": 4000, "trials": 2000, "seed": 42}"#);
    let agg: TsparseAggregate = serde_json::from_value(r.aggregate.clone()).unwrap();
    let Records::TsparseDisc(recs) = &r.records else { panic!("wrong record kind") };
    let p0 = 1.0 / 32.0;
    let (ok0, se) = within_3se(agg.freq[0], p0, agg.certified);
    let le1 = recs.iter().filter(|x| x.disc <= 1).count() as f64 / recs.len() as f64;
    let all2 = recs.iter().all(|x| x.disc <= 2);
    let secs = start.elapsed().as_secs_f64();
    let pass = agg.certified == 2000 && ok0 && le1 >= 0.995 && all2 && secs < 300.0;
    let detail = format!(
        "Pr[disc=0] = {} vs 1/32 ± {:.4} (3 SE), Pr[disc<=1] = {le1}, all <= 2: {all2}, {} of 2000 certified",
        agg.freq[0],
        3.0 * se,
        agg.certified
    );
    report(1, "t-sparse limiting law, even n", pass, &detail, start);
}

#[test]
fn criterion_02_tsparse_odd_law() {
    let start = Instant::now();
    let r = run(r#"{"kind": "tsparse-disc", "m": 6, "t": 3, "n": 4001, "trials": 2000, "seed": 4001}"#);
    let agg: TsparseAggregate = serde_json::from_value(r.aggregate.clone()).unwrap();
    let p1 = (binom(6, 3) + binom(6, 5)) as f64 / 32.0;
    let p2 = (binom(6, 1)) as f64 / 32.0;
    let (ok1, se1) = within_3se(agg.freq[1], p1, agg.certified);
    let (ok2, se2) = within_3se(agg.freq[2], p2, agg.certified);
    let pass = agg.certified == 2000 && ok1 && ok2 && agg.counts[0] == 0;
    let detail = format!(
        "Pr[disc=1] = {} vs 26/32 ± {:.4}, Pr[disc=2] = {} vs 6/32 ± {:.4}",
        agg.freq[1],
        3.0 * se1,
        agg.freq[2],
        3.0 * se2
    );
    report(2, "t-sparse odd-n law", pass, &detail, start);
}

#[test]
fn criterion_03_closed_form_vs_cvp() {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (mut checked, mut agree, mut rejected) = (0, 0, 0);
    while checked < 500 {
        let m = rng.random_range(2..=5usize);
        let t = rng.random_range(1..m);
        let n = rng.random_range(1..=30usize);
        let dist = ColumnDistribution::tsparse(m, t).unwrap();
        let mat = dist.sample_int_matrix(n, &mut rng).unwrap();
        let full = tsparse_lattice(m, t).unwrap();
        let span = lattice_from_columns(&mat.column_vecs()).unwrap();
        if span.rank() != full.rank() || !full.basis().iter().all(|b| span.contains(b)) {
            rejected += 1;
            continue;
        }
        checked += 1;
        let closed = tsparse_odd_disc(&mat.row_sums(), t, n).unwrap();
        let pb = parity_lower_bound(&mat, Norm::Sup).unwrap();
        if pb.exact && pb.distance == closed as f64 {
            agree += 1;
        }
    }
    let detail = format!("{agree}/{checked} agree ({rejected} samples with a smaller span skipped)");
    report(3, "closed form vs CVP on 2L", agree == checked, &detail, start);
}

#[test]
fn criterion_04_local_limit() {
    let start = Instant::now();
    let a = run(r#"{"kind": "llt", "distribution": {"kind": "finite", "support": [[1], [-1]], "probs": [0.5, 0.5]},
                    "n": 400, "trials": 50, "seed": 400}"#);
    let b = run(r#"{"kind": "llt", "distribution": {"kind": "tsparse", "m": 2, "t": 1}, "n": 400, "trials": 50, "seed": 401}"#);
    let ra: LltAggregate = serde_json::from_value(a.aggregate).unwrap();
    let rb: LltAggregate = serde_json::from_value(b.aggregate).unwrap();
    let pass = ra.pass_rate >= 0.8 && rb.pass_rate >= 0.8;
    let detail = format!(
        "m=1 ±1: {}/{} within G(0)·2m²L²/n; m=2 TSparse(2,1): {}/{} (desk threshold 80%)",
        ra.passes, ra.trials, rb.passes, rb.trials
    );
    report(4, "local limit at desk scale", pass, &detail, start);
}

#[test]
fn criterion_05_characteristic_function() {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut ok = 0;
    for _ in 0..100 {
        let m = rng.random_range(1..=3usize);
        let n = rng.random_range(1..=14usize);
        let cols: Vec<Vec<i64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(-4..=4)).collect()).collect();
        let mat = IntMatrix::from_columns(m, &cols).unwrap();
        let theta: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let product = char_fn_signed_sum(&mat, &theta);
        let table = signed_sum_distribution(&mat).unwrap().fourier(&theta);
        let err = (table.re - product).abs().max(table.im.abs());
        worst = worst.max(err);
        if err <= 1e-9 {
            ok += 1;
        }
    }
    report(5, "product formula vs DP Fourier sum", ok == 100, &format!("{ok}/100 within 1e-9, worst {worst:e}"), start);
}

#[test]
fn criterion_06_spanningness_sandwich() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut cases = 0;
    for m in 3..=6usize {
        for t in 1..m {
            cases += 1;
            let dist = ColumnDistribution::tsparse(m, t).unwrap();
            let beta = beta_bound(&dist).unwrap().beta;
            let set = tsparse_spanning_set(m, t).unwrap();
            let rank = if set.is_empty() { 0 } else { rank_i64(&set) };
            let expect_rank = binom(m as u64, t as u64) as usize - m;
            let in_kernel = verify_tsparse_spanning_set(m, t).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64((m * 10 + t) as u64);
            let rep = spanningness_report(&dist, 200, 20_000, &mut rng).unwrap();
            let alpha_est = rep.alpha_estimate.unwrap_or(f64::NAN);
            let sandwich = rep.lower_bound.le_with(rep.numeric_upper, 1e-9);
            let ok = beta <= 4 && rank == expect_rank && in_kernel && alpha_est >= 1.0 / (2.0 * m as f64) - 1e-6 && sandwich;
            if !ok {
                failures.push(format!(
                    "(m={m}, t={t}): β={beta}, rank {rank} vs {expect_rank}, α̂={alpha_est}, lower {:?}, upper {:?}",
                    rep.lower_bound, rep.numeric_upper
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{cases} (m, t) pairs: β ≤ 4, kernel rank C(m,t) − m, α̂ ≥ 1/(2m), lower ≤ numeric upper")
    } else {
        failures.join("; ")
    };
    report(6, "spanningness sandwich", failures.is_empty(), &detail, start);
}

/// Weight law of the 𝔽₂ sum of `n` uniform `t`-subsets, by enumerating all
/// `C(m,t)ⁿ` sequences.
fn brute_weight_law(m: usize, t: usize, n: usize) -> Vec<Q> {
    let sets: Vec<u32> = (0u32..1 << m).filter(|x| x.count_ones() as usize == t).collect();
    let mut counts = vec![0u64; m + 1];
    let total = sets.len().pow(n as u32);
    for mut idx in 0..total {
        let mut x = 0u32;
        for _ in 0..n {
            x ^= sets[idx % sets.len()];
            idx /= sets.len();
        }
        counts[x.count_ones() as usize] += 1;
    }
    counts.into_iter().map(|c| Q::new(BigInt::from(c), BigInt::from(total))).collect()
}

#[test]
fn criterion_07_mixing() {
    let start = Instant::now();
    let r = run(r#"{"kind": "mixing", "m": 8, "t": 3, "seed": 0}"#);
    let mono = r.verdict("monotone").unwrap().pass;
    let rate = r.verdict("rate").unwrap();
    let mut brute_ok = 0;
    let mut brute_total = 0;
    for m in 2..=4 {
        for t in 1..m {
            for n in 1..=3 {
                brute_total += 1;
                if weight_distribution(m, t, n).unwrap().exact.unwrap() == brute_weight_law(m, t, n) {
                    brute_ok += 1;
                }
            }
        }
    }
    let pass = mono && rate.pass && brute_ok == brute_total;
    let detail = format!(
        "n = 8..160 monotone per parity: {mono}; {}; DP = enumeration on {brute_ok}/{brute_total} (m ≤ 4, n ≤ 3)",
        rate.detail
    );
    report(7, "hypercube mixing", pass, &detail, start);
}

#[test]
fn criterion_08_walsh_bound() {
    let start = Instant::now();
    let (mut ok, mut total) = (0, 0);
    for m in 2..=12u64 {
        let limit = Q::one() - Q::new(BigInt::one(), BigInt::from(m));
        for t in 1..m {
            for s in 1..m {
                total += 1;
                let kraw: i128 = (0..=s.min(t))
                    .map(|j| {
                        let term = (binom(s, j) * if t >= j && m - s >= t - j { binom(m - s, t - j) } else { 0 }) as i128;
                        if j % 2 == 0 { term } else { -term }
                    })
                    .sum();
                let oracle = Q::new(BigInt::from(kraw), BigInt::from(binom(m, t)));
                let w = walsh_coefficient(m as usize, t as usize, s as usize);
                if w == oracle && w.abs() <= limit {
                    ok += 1;
                }
            }
        }
    }
    report(8, "Walsh coefficient bound", ok == total, &format!("{ok}/{total} triples with |f̂| ≤ 1 − 1/m, exact"), start);
}

#[test]
fn criterion_09_worst_case_gap() {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for r in 1..=5i64 {
        let mat = IntMatrix::from_rows(&[vec![2 * r + 1, r]]).unwrap();
        let d = disc_exact(&mat, Norm::Sup).unwrap().value;
        let l = lattice_from_columns(&mat.column_vecs()).unwrap();
        let rho = covering_radius(&l, Norm::Sup, CoveringMode::Certified).unwrap();
        let ok = d == (r + 1) as f64 && rho.radius == 0.5 && rho.certified;
        pass &= ok;
        notes.push(format!("r={r}: disc {d}, ρ {}", rho.radius));
    }
    report(9, "worst-case gap family", pass, &notes.join(", "), start);
}

#[test]
fn criterion_10_unit_column_decay() {
    let start = Instant::now();
    let r = run(r#"{"kind": "unit-disc", "m": 3, "n_grid": [100, 200, 400, 800, 1200], "trials": 20, "seed": 10}"#);
    let agg: UnitDiscAggregate = serde_json::from_value(r.aggregate.clone()).unwrap();
    let fit = agg.fit.clone().unwrap();
    let cert = r.verdict("smoothed_mass_certified").unwrap();
    let detail = format!(
        "medians {:?}; log-fit slope {:.3}, R² {:.3}; smoothed mass {}",
        agg.points.iter().map(|p| format!("{:.2e}", p.median)).collect::<Vec<_>>(),
        fit.slope,
        fit.r2,
        cert.detail
    );
    report(10, "unit-column decay (substituted property)", r.all_pass(), &detail, start);
}

#[test]
fn criterion_11_solver_cross_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut mitm_ok = 0;
    for _ in 0..100 {
        let m = rng.random_range(1..=4usize);
        let n = rng.random_range(8..=22usize);
        let cols: Vec<Vec<i64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(-6..=6)).collect()).collect();
        let mat = IntMatrix::from_columns(m, &cols).unwrap();
        if disc_exact(&mat, Norm::Sup).unwrap().value == disc_meet_middle(&mat, Norm::Sup).unwrap().value {
            mitm_ok += 1;
        }
    }
    let mut dp_ok = 0;
    for _ in 0..200 {
        let m = rng.random_range(1..=3usize);
        let n = rng.random_range(2..=14usize);
        let cols: Vec<Vec<i64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(-5..=5)).collect()).collect();
        let mat = IntMatrix::from_columns(m, &cols).unwrap();
        let v = disc_exact(&mat, Norm::Sup).unwrap().value as i64;
        let at = disc_decision_dp(&mat, v).unwrap();
        let below = disc_decision_dp(&mat, v - 1).unwrap();
        if at.feasible && !below.feasible {
            dp_ok += 1;
        }
    }
    let detail = format!("exact = meet-in-middle on {mitm_ok}/100; DP brackets exact on {dp_ok}/200");
    report(11, "solver cross-oracle", mitm_ok == 100 && dp_ok == 200, &detail, start);
}
