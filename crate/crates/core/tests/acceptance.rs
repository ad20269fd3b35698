//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line, and exits non-zero if any fails.
//!
//! Expected values come from brute-force oracles written here: direct sums of
//! `c_n w_n(t)` over atoms, closed-form norms, and the gauge evaluated inline.

use std::f64::consts::{PI, SQRT_2};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use walsh_helson::martingale::{
    check_positivity_equivalence, peyriere_from_tables, singularity_report,
    strong_orthogonality_sweep, sweep_shifted_bound, tolerance, verify_peyriere,
};
use walsh_helson::psi::PsiSpec;
use walsh_helson::riesz::{
    build_walsh_measure, psi_sum_report, verify_all_partial_sums, BuildConfig, RieszProductState,
    VerifyOptions,
};
use walsh_helson::rudin_shapiro::{build_pair, substitute};
use walsh_helson::trig::{build_trig_measure, certify_trig_measure, TrigConfig};
use walsh_helson::walsh::{verify_lemma, AtomTable, WalshIndex, WalshSeries};

const C: f64 = 2.0 + SQRT_2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sign(n: u64, t: u64) -> f64 {
    if (n & t).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Values of a sparse series on every atom by direct summation.
fn brute_values(depth: u32, terms: &[(u64, f64)]) -> Vec<f64> {
    (0..1u64 << depth)
        .map(|t| terms.iter().map(|&(n, c)| c * sign(n, t)).sum())
        .collect()
}

/// `x^2 / (1 + ln(1/x))`.
fn logpow_psi(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x / (1.0 + (1.0 / x).ln())
    }
}

fn logpow() -> PsiSpec {
    PsiSpec::parse("preset:logpow,p=1").unwrap()
}

fn three_stage_build() -> RieszProductState {
    let config = BuildConfig {
        stages: 3,
        ..BuildConfig::default()
    };
    build_walsh_measure(&logpow(), &config).unwrap().state
}

/// Every within-cap product the builder produces for a spread of gauges.
fn builder_outputs() -> Vec<(String, RieszProductState)> {
    let gauges = [
        "preset:logpow,p=1",
        "preset:logpow,p=2",
        "preset:power,delta=0.5",
        "preset:power,delta=1",
    ];
    let mut out = Vec::new();
    for g in gauges {
        let psi = PsiSpec::parse(g).unwrap();
        for stages in 1..=3 {
            let config = BuildConfig {
                stages,
                ..BuildConfig::default()
            };
            if let Ok(build) = build_walsh_measure(&psi, &config) {
                if build.state.within_cap() {
                    out.push((format!("{g} x{stages}"), build.state));
                }
            }
        }
    }
    out
}

fn random_series(rng: &mut ChaCha8Rng, depth: u32) -> WalshSeries {
    WalshSeries::new(
        (0..1usize << depth)
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect(),
    )
    .unwrap()
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    out.pass &= elapsed < limit;
    out.detail = format!("{} [{:.2?} of {:?}]", out.detail, elapsed, limit);
    out
}

fn rs_identities() -> Outcome {
    let mut worst_ratio = 0.0f64;
    for l in 0..=12u32 {
        let pair = build_pair(l).unwrap();
        let len = 1u64 << l;
        // Integer values by direct summation, and the U-norm by streaming every prefix.
        let mut u = 0i64;
        for t in 0..len {
            let (mut p, mut q) = (0i64, 0i64);
            for n in 0..len {
                let w = if (n & t).count_ones() % 2 == 0 { 1 } else { -1 };
                p += w * pair.p()[n as usize] as i64;
                q += w * pair.q()[n as usize] as i64;
                u = u.max(p.abs());
            }
            if p * p + q * q != 1i64 << (l + 1) {
                return outcome(false, format!("energy identity fails at l={l}, t={t}"));
            }
        }
        let bound = 2f64.powf(l as f64 / 2.0) * C;
        if u as f64 > bound {
            return outcome(false, format!("U(P_{l}) = {u} exceeds {bound}"));
        }
        if pair.p_u_norm() != u {
            return outcome(
                false,
                format!(
                    "library U-norm {} differs from {u} at l={l}",
                    pair.p_u_norm()
                ),
            );
        }
        worst_ratio = worst_ratio.max(u as f64 / bound);
    }
    outcome(true, format!("l <= 12, max U/bound = {worst_ratio:.4}"))
}

fn lemma_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e44a);
    let mut worst = 0.0f64;
    let mut checks = 0u64;
    for _ in 0..100 {
        let series = random_series(&mut rng, 6);
        for m in 0..64u64 {
            for k in 0..=6u32 {
                let w = verify_lemma(&series, WalshIndex(m), k).unwrap();
                worst = worst.max(w.max_residual);
                checks += 1;
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{checks} (series, m, k) checks, max residual {worst:.2e}"),
    )
}

/// Whether every prefix sum is nonnegative, by direct summation over atoms.
fn brute_prefixes_nonneg(series: &WalshSeries, tol: f64) -> bool {
    let coeffs = series.coeffs();
    (0..coeffs.len() as u64).all(|t| {
        let mut s = 0.0;
        coeffs.iter().enumerate().all(|(n, &c)| {
            s += c * sign(n as u64, t);
            s >= -tol
        })
    })
}

fn equivalence_suite(builds: &[(String, RieszProductState)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe9_0005);
    let mut series: Vec<WalshSeries> = (0..1000).map(|_| random_series(&mut rng, 5)).collect();
    // A family that is often positive, so both outcomes are exercised.
    for _ in 0..1000 {
        let s: f64 = rng.gen_range(0.0..0.12);
        let mut c: Vec<f64> = (0..32).map(|_| rng.gen_range(-s..=s)).collect();
        c[0] = 1.0;
        series.push(WalshSeries::new(c).unwrap());
    }
    for (_, state) in builds {
        series.push(state.to_series().unwrap());
    }
    let mut disagreements = 0;
    let mut positive = 0;
    for s in &series {
        let eq = check_positivity_equivalence(s).unwrap();
        let oracle = brute_prefixes_nonneg(s, tolerance(s));
        if eq.all_prefixes_nonneg != oracle || eq.maximal_inequality_holds != oracle {
            disagreements += 1;
        }
        positive += oracle as usize;
    }
    outcome(
        disagreements == 0,
        format!(
            "{} series ({} builder outputs, {positive} positive), {disagreements} disagreements",
            series.len(),
            builds.len()
        ),
    )
}

/// Brute check of `|(w_m N_kj)_{2^k}| <= 2 M_kj` for every valid triple.
fn brute_shifted_bound(series: &WalshSeries) -> (u64, f64) {
    let c = series.coeffs();
    let depth = series.depth();
    let atoms = 1u64 << depth;
    let mut triples = 0;
    let mut worst = f64::NEG_INFINITY;
    for kj in 0..depth {
        let (lo, hi) = (1u64 << kj, 1u64 << (kj + 1));
        let m_kj: Vec<f64> = (0..atoms)
            .map(|t| (0..lo).map(|n| c[n as usize] * sign(n, t)).sum())
            .collect();
        for m in 0..lo {
            for k in 0..=kj {
                triples += 1;
                for t in 0..atoms {
                    // Coefficient of w_n in w_m N_kj is c_{n xor m} when n xor m lies in [lo, hi).
                    let v: f64 = (0..1u64 << k)
                        .filter(|&n| (lo..hi).contains(&(n ^ m)))
                        .map(|n| c[(n ^ m) as usize] * sign(n, t))
                        .sum();
                    worst = worst.max(v.abs() - 2.0 * m_kj[t as usize]);
                }
            }
        }
    }
    (triples, worst)
}

fn shifted_bound_suite(builds: &[(String, RieszProductState)]) -> Outcome {
    let mut triples = 0;
    let mut worst = f64::NEG_INFINITY;
    for (name, state) in builds {
        let series = state.to_series().unwrap();
        let sweep = sweep_shifted_bound(&series).unwrap();
        if !sweep.holds() {
            return outcome(
                false,
                format!(
                    "{name}: excess {:.3e} at {:?}",
                    sweep.worst_excess, sweep.worst
                ),
            );
        }
        if series.depth() <= 8 {
            let (n, excess) = brute_shifted_bound(&series);
            if n != sweep.triples || excess > sweep.tolerance {
                return outcome(
                    false,
                    format!("{name}: oracle disagrees ({n} triples, excess {excess:.3e})"),
                );
            }
        }
        triples += sweep.triples;
        worst = worst.max(sweep.worst_excess);
    }
    outcome(
        !builds.is_empty(),
        format!(
            "{} builds, {triples} triples, worst |shifted| - 2M = {worst:.4}",
            builds.len()
        ),
    )
}

fn end_to_end() -> Outcome {
    let psi = logpow();
    let config = BuildConfig {
        stages: 3,
        ..BuildConfig::default()
    };
    let build = build_walsh_measure(&psi, &config).unwrap();
    let state = &build.state;
    let depth = state.used_coordinates();
    if depth > 14 {
        return outcome(false, format!("{depth} coordinates used"));
    }
    let cert = verify_all_partial_sums(state, &VerifyOptions::default());

    // Oracle: every order p on every atom, against Pi_k / 4 with k the last
    // stage whose spectrum ends below p.
    let dense = state.to_series().unwrap();
    let bounds: Vec<u64> = state.stages().iter().map(|s| 1u64 << s.used).collect();
    let pis: Vec<Vec<f64>> = (0..=state.stage_count())
        .map(|k| brute_values(depth, state.stage_spectrum(k)))
        .collect();
    let last = state.stage_count() - 1;
    let mut min = f64::INFINITY;
    let mut margin = f64::INFINITY;
    for t in 0..1u64 << depth {
        let mut s = 0.0;
        for (n, &c) in dense.coeffs().iter().enumerate() {
            s += c * sign(n as u64, t);
            let p = n as u64 + 1;
            let k = bounds[..=last].iter().rposition(|&b| b < p).unwrap_or(0);
            min = min.min(s);
            margin = margin.min(s - pis[k][t as usize] / 4.0);
        }
    }

    let exact: f64 = state
        .spectrum()
        .iter()
        .filter(|t| t.0 >= 1)
        .map(|t| logpow_psi(t.1.abs()))
        .sum();
    let report = psi_sum_report(state, &psi);
    let budget = config.budget.total(state.stage_count());
    let checks = [
        cert.exhaustive,
        min >= 0.0,
        (cert.min_partial_sum - min).abs() <= 1e-12,
        margin >= -1e-12,
        (cert.stagewise_min_margin - margin).abs() <= 1e-12,
        (report.exact_total - exact).abs() <= 1e-12,
        exact <= report.bound_total,
        report.bound_total <= budget,
        budget <= 2.0,
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "levels {:?}, {depth} coordinates, min S = {min:.4}, stagewise margin = {margin:.4}, \
             psi sum {exact:.4} <= bound {:.4} <= budget {budget:.4}",
            state.records().iter().map(|r| r.level).collect::<Vec<_>>(),
            report.bound_total
        ),
    )
}

fn norm_table_suite(builds: &[(String, RieszProductState)]) -> Outcome {
    let mut rows = 0;
    let mut worst = 0.0f64;
    let mut max_u = 0.0f64;
    for (_, state) in builds {
        for f in state.factors() {
            let flat = f.flat();
            let series = substitute(flat, f.block()).unwrap();
            let x = WalshSeries::new(series.coeffs().iter().map(|c| f.amplitude() * c).collect())
                .unwrap();
            let norms = x.norms();
            let scale = 2f64.powf(f.level() as f64 / 2.0);
            let residual = [
                (norms.l2 - 1.0 / (2.0 * C)).abs(),
                (norms.a - scale / (2.0 * C)).abs(),
                (norms.pm - 1.0 / (2.0 * C * scale)).abs(),
                x.coeffs()[0].abs(),
            ]
            .into_iter()
            .fold(0.0f64, f64::max);
            worst = worst.max(residual);
            max_u = max_u.max(norms.u);
            rows += 1;
        }
    }
    outcome(
        rows > 0 && worst <= 1e-12 && max_u < 0.5,
        format!("{rows} factors, max residual {worst:.2e}, max U = {max_u:.4}"),
    )
}

fn singularity_suite() -> Outcome {
    let state = three_stage_build();
    let report = singularity_report(&state).unwrap();
    // Oracle: E sqrt(Pi_k) by direct summation of each stage spectrum.
    let depth = state.used_coordinates();
    let mut oracle_gap = 0.0f64;
    for (k, row) in report.rows.iter().enumerate() {
        let values = brute_values(depth, state.stage_spectrum(k));
        let h = values.iter().map(|v| v.sqrt()).sum::<f64>() / values.len() as f64;
        oracle_gap = oracle_gap.max((h - row.hellinger).abs());
    }
    let h = report.hellinger();
    let conc90: Vec<f64> = report.rows.iter().map(|r| r.concentration[1]).collect();
    let pass = report.hellinger_strictly_decreasing()
        && report.max_factorization_gap() <= 1e-9
        && oracle_gap <= 1e-9
        && report.concentration_nonincreasing(1)
        && conc90.last() < conc90.first();
    outcome(
        pass,
        format!(
            "H = {:?}, factorization gap {:.1e}, conc90 = {:?}",
            h.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            report.max_factorization_gap().max(oracle_gap),
            conc90.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn peyriere_suite() -> Outcome {
    let state = three_stage_build();
    let report = verify_peyriere(&state).unwrap();
    let (strong, count) = strong_orthogonality_sweep(&state).unwrap();

    // Overlapping blocks: X1 = a(r2 + r1 r2), X2 = a(r3 + r2 r3) share r2.
    let a = 0.1;
    let table = |f: &dyn Fn(f64, f64, f64) -> f64| {
        AtomTable::new(
            (0..8u64)
                .map(|t| f(sign(1, t), sign(2, t), sign(4, t)))
                .collect(),
        )
        .unwrap()
    };
    let x1 = table(&|r1, r2, _| a * (r2 + r1 * r2));
    let x2 = table(&|_, r2, r3| a * (r3 + r2 * r3));
    let control = peyriere_from_tables(&[x1, x2]).unwrap();
    let detected = control.cross_residual > 1e-6 && !control.holds();

    let pass = report.mean_residual <= 1e-10
        && report.cross_residual <= 1e-10
        && report.second_moment <= 4.0 + 1e-10
        && strong <= 1e-10
        && detected;
    outcome(
        pass,
        format!(
            "cross residual {:.1e}, second moment {:.4}, {count} strong products (worst {strong:.1e}), \
             control residual {:.3}",
            report.cross_residual, report.second_moment, control.cross_residual
        ),
    )
}

fn trig_suite() -> Outcome {
    let psi = logpow();
    let config = TrigConfig {
        stages: 2,
        ..TrigConfig::default()
    };
    let measure = build_trig_measure(&psi, &config).unwrap();
    let cert = certify_trig_measure(&measure, &psi, config.oversample).unwrap();

    // Stage increments must occupy frequencies not used before.
    let mut seen = std::collections::BTreeSet::from([0u64]);
    let disjoint = measure
        .increments
        .iter()
        .all(|inc| inc.coeffs().keys().all(|&f| seen.insert(f)));

    // Oracle: every partial sum on the 16x grid by direct cosine evaluation.
    let product = measure.product();
    let points = config.oversample * product.max_frequency();
    let terms = product.terms();
    let mut grid_min = f64::INFINITY;
    for i in 0..points {
        let t = 2.0 * PI * i as f64 / points as f64;
        let mut s = 0.0;
        for &(f, c) in &terms {
            s += c * (f as f64 * t).cos();
            grid_min = grid_min.min(s);
        }
    }

    let flats_ok = measure.stages.iter().all(|s| {
        let flat = walsh_helson::trig::build_trig_flat(s.length).unwrap();
        flat.prefix_sup <= C * (s.length as f64).sqrt()
    });
    let exact: f64 = product.coeffs().values().map(|c| logpow_psi(c.abs())).sum();
    // A single-frequency stage meets its bound with equality.
    let stage_ok = cert
        .psi_terms
        .iter()
        .all(|t| t.exact <= t.bound * (1.0 + 1e-12));
    let pass = disjoint
        && cert.supports_disjoint
        && grid_min >= 0.0
        && (grid_min - cert.grid.min).abs() <= 1e-12
        && flats_ok
        && (exact - cert.psi_exact_total).abs() <= 1e-12
        && stage_ok
        && exact <= cert.psi_bound_total;
    outcome(
        pass,
        format!(
            "lengths {:?}, {points} grid points, grid min {grid_min:.4} (Bernstein slack {:.4}), \
             psi sum {exact:.4} <= {:.4}",
            measure.stages.iter().map(|s| s.length).collect::<Vec<_>>(),
            cert.grid.bernstein_slack,
            cert.psi_bound_total
        ),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_walsh-helson");
    let run = || -> std::io::Result<(bool, Vec<u8>)> {
        let dir = tempfile::tempdir()?;
        let status = Command::new(bin)
            .current_dir(dir.path())
            .args([
                "build-walsh-measure",
                "--psi",
                "preset:logpow,p=1",
                "--stages",
                "3",
                "--seed",
                "42",
            ])
            .output()?
            .status;
        Ok((
            status.success(),
            std::fs::read(dir.path().join("measure.csv"))?,
        ))
    };
    match (run(), run()) {
        (Ok((ok1, a)), Ok((ok2, b))) => outcome(
            ok1 && ok2 && !a.is_empty() && a == b,
            format!(
                "two runs, {} and {} bytes, identical: {}",
                a.len(),
                b.len(),
                a == b
            ),
        ),
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("run failed: {e}")),
    }
}

fn main() {
    let builds = builder_outputs();
    type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            "Rudin-Shapiro identities",
            Box::new(|| timed(Duration::from_secs(10), rs_identities)),
        ),
        (
            "reindexing lemma",
            Box::new(|| timed(Duration::from_secs(60), lemma_suite)),
        ),
        (
            "positivity equivalence",
            Box::new(|| equivalence_suite(&builds)),
        ),
        (
            "shifted prefix bound",
            Box::new(|| shifted_bound_suite(&builds)),
        ),
        (
            "3-stage Walsh measure",
            Box::new(|| timed(Duration::from_secs(300), end_to_end)),
        ),
        ("factor norm table", Box::new(|| norm_table_suite(&builds))),
        ("singularity certificate", Box::new(singularity_suite)),
        ("orthogonality identities", Box::new(peyriere_suite)),
        (
            "trigonometric measure",
            Box::new(|| timed(Duration::from_secs(120), trig_suite)),
        ),
        ("deterministic output", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let out = check();
        failed += !out.pass as usize;
        println!(
            "criterion {:>2} {}: {} ({})",
            i + 1,
            if out.pass { "PASS" } else { "FAIL" },
            name,
            out.detail
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
