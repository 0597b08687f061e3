//! Acceptance report: one PASS/FAIL line per criterion, with the measured values.
//!
//! Runs as a plain binary so every criterion is evaluated and printed even when
//! an earlier one fails. Exits 0 after printing; set `ACCEPTANCE_STRICT=1` to
//! exit 1 when any criterion fails.

use std::time::Instant;

use harvest_delay::analytic::{
    update_age_pmf_exp, update_cycle_mean_exp, update_cycle_pmf_exp, GeneralEngine, Pmf,
};
use harvest_delay::sim::{chi_square_geometric, compare, empirical_pmf, ks_one_sample};
use harvest_delay::{
    analyze, simulate, summarize, validate, AnalyticOptions, ArrivalModel, ChannelParams, ProtocolParams,
    SimOptions, ValidatedConfig,
};
use rayon::prelude::*;

/// 40-digit evaluation of the reference link outage.
const P_OUT_REFERENCE: f64 = 0.900_271_163_811_830_6;
const SEED: u64 = 20_180_601;

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, ok: bool, name: &str, detail: String, started: Instant) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {id}. {name}: {detail} ({:.1}s)", started.elapsed().as_secs_f64());
        if !ok {
            self.failed.push(id);
        }
    }
}

fn p_out() -> f64 {
    ChannelParams::reference_link().outage_probability()
}

fn models() -> [(&'static str, ArrivalModel); 3] {
    [
        ("deterministic", ArrivalModel::Deterministic { rho: 50.0 }),
        ("exponential", ArrivalModel::Exponential { rho: 50.0 }),
        ("gamma(0.05,1000)", ArrivalModel::Gamma { shape: 0.05, scale: 1000.0 }),
    ]
}

fn cfg(window: u32, e_sen: f64, a: ArrivalModel) -> ValidatedConfig {
    validate(ProtocolParams::new(window, e_sen, 200.0), a).unwrap()
}

fn max_abs_diff(a: &Pmf, b: &Pmf) -> f64 {
    let lo = a.min_support.min(b.min_support);
    let hi = a.max_support().max(b.max_support());
    (lo..=hi).map(|k| (a.prob(k) - b.prob(k)).abs()).fold(0.0, f64::max)
}

fn outage(r: &mut Report) {
    let t = Instant::now();
    let p = p_out();
    let ok = (p - P_OUT_REFERENCE).abs() < 1e-12 && (p - 0.9003).abs() < 1e-4;
    r.line(1, ok, "outage constant", format!("p_out = {p:.10} (reference {P_OUT_REFERENCE:.10})"), t);
}

fn cross_oracle(r: &mut Report) {
    let t = Instant::now();
    let p = p_out();
    let opts = SimOptions {
        n_updates: 1_000_000,
        seed: SEED,
        energy_stride: 0,
        ..Default::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, a) in models() {
        let c = cfg(50, 250.0, a);
        let an = analyze(&c, p, &AnalyticOptions::default()).unwrap();
        let sim = simulate(&c, p, &opts).unwrap();
        let age = compare(&an.age, &empirical_pmf(&sim.update_ages).unwrap());
        let cyc = compare(&an.cycle, &empirical_pmf(&sim.update_cycles).unwrap());
        ok &= age.tv_distance < 0.01 && cyc.tv_distance < 0.015;
        parts.push(format!("{name} tv_age={:.4} tv_cycle={:.4}", age.tv_distance, cyc.tv_distance));
    }
    r.line(2, ok, "analytic vs Monte Carlo pmfs (tv < 0.01 age, < 0.015 cycle)", parts.join("; "), t);
}

fn exponential_specialization(r: &mut Report) {
    let t = Instant::now();
    let p = p_out();
    let params = ProtocolParams::new(50, 250.0, 200.0);
    let grid = GeneralEngine::new(&ArrivalModel::Exponential { rho: 50.0 }, 250.0, 200.0, 50, &AnalyticOptions::default())
        .unwrap();
    let age = max_abs_diff(&grid.age_pmf(50, p).unwrap(), &update_age_pmf_exp(&params.tx(), 50.0, p).unwrap());
    let cycle = max_abs_diff(&grid.cycle_pmf(50, p).unwrap(), &update_cycle_pmf_exp(&params, 50.0, p, 1e-9).unwrap());
    let ok = age < 1e-3 && cycle < 2e-3;
    r.line(3, ok, "grid pipeline vs Poisson forms", format!("max |Δ| age={age:.2e} cycle={cycle:.2e}"), t);
}

fn limits(r: &mut Report) {
    let t = Instant::now();
    let p = p_out();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, a) in models() {
        let rows: Vec<_> = match a {
            ArrivalModel::Gamma { .. } => {
                let e = GeneralEngine::new(&a, 250.0, 200.0, 200, &AnalyticOptions::default()).unwrap();
                (1..=200).into_par_iter().map(|w| e.summary(w, p).unwrap()).collect()
            }
            _ => (1..=200)
                .into_par_iter()
                .map(|w| summarize(&cfg(w, 250.0, a.clone()), p, &AnalyticOptions::default()).unwrap())
                .collect(),
        };
        let age_up = rows.windows(2).all(|w| w[1].mean_age >= w[0].mean_age);
        let cyc_down = rows.windows(2).all(|w| w[1].mean_cycle <= w[0].mean_cycle);
        let last = rows.last().unwrap();
        let age_gap = (last.mean_age - last.limit_age).abs() / last.limit_age;
        let cyc_gap = (last.mean_cycle - last.limit_cycle).abs() / last.limit_cycle;
        // the quoted limits come from p_out rounded to 0.9003; the limit moves ~500× any error in p
        let limits_ok = (last.limit_age - 46.15).abs() < 0.05 && (last.limit_cycle - 56.2).abs() < 0.1;
        ok &= age_up && cyc_down && age_gap < 0.01 && cyc_gap < 0.01 && limits_ok;
        parts.push(format!(
            "{name} monotone={} W=200 age {:.3}/{:.3} ({:.2}%) cycle {:.3}/{:.3} ({:.2}%)",
            age_up && cyc_down,
            last.mean_age,
            last.limit_age,
            100.0 * age_gap,
            last.mean_cycle,
            last.limit_cycle,
            100.0 * cyc_gap
        ));
    }
    r.line(4, ok, "monotone in W, within 1% of the limits at W=200", parts.join("; "), t);
}

fn sensing_power(r: &mut Report) {
    let t = Instant::now();
    let p = p_out();
    let exp = ArrivalModel::Exponential { rho: 50.0 };
    let opts = AnalyticOptions::default();
    let at = |w: u32, psen: f64| {
        let c = validate(ProtocolParams::from_powers(w, psen, 40.0, 5e-3), exp.clone()).unwrap();
        summarize(&c, p, &opts).unwrap()
    };
    let flat: Vec<_> = (1..=50).map(|w| at(w, 0.0)).collect();
    let (lo, hi) = flat
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.mean_cycle), hi.max(s.mean_cycle)));
    let limit = flat[0].limit_cycle;
    let near = flat.iter().all(|s| (s.mean_cycle - limit).abs() < 2.0);
    let mut ordered = true;
    let mut same_age = true;
    for w in 1..=50 {
        let s: Vec<_> = [0.0, 50.0, 100.0].iter().map(|&ps| at(w, ps)).collect();
        ordered &= s[0].mean_cycle < s[1].mean_cycle && s[1].mean_cycle < s[2].mean_cycle;
        same_age &= s[0].mean_age == s[1].mean_age && s[1].mean_age == s[2].mean_age;
    }
    let ok = hi - lo < 2.0 && near && ordered && same_age;
    r.line(
        5,
        ok,
        "sensing power (exponential)",
        format!(
            "Psen=0 cycle range [{lo:.3}, {hi:.3}] spread {:.3}, limit {limit:.3}; increasing in Psen={ordered}; age independent of Psen={same_age}",
            hi - lo
        ),
        t,
    );
}

fn steady_state(r: &mut Report) {
    let t = Instant::now();
    let p = p_out();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, a) in models().into_iter().skip(1) {
        let c = cfg(50, 250.0, a.clone());
        // consecutive post-TB levels are correlated; keep one in 25
        let sim = simulate(
            &c,
            p,
            &SimOptions {
                n_updates: 300_000,
                seed: SEED,
                energy_stride: 25,
                ..Default::default()
            },
        )
        .unwrap();
        let e = &sim.post_tb_energies;
        assert!(e.len() >= 100_000, "only {} energy samples", e.len());
        let thin = e.len() / 100_000;
        let samples: Vec<f64> = e.iter().step_by(thin).take(100_000).copied().collect();
        let ks = ks_one_sample(&samples, |x| a.stationary_cdf(x)).unwrap();
        ok &= ks.p_value > 0.01;
        parts.push(format!("{name} D={:.4} p={:.3e}", ks.statistic, ks.p_value));
    }
    let exp = ArrivalModel::Exponential { rho: 50.0 };
    let g_is_f = (0..200).map(|i| i as f64 * 2.5).all(|x| (exp.stationary_pdf(x) - exp.pdf(x)).abs() <= 1e-15);
    ok &= g_is_f;
    parts.push(format!("exponential g = f: {g_is_f}"));
    r.line(6, ok, "post-TB battery follows g (KS at 0.01)", parts.join("; "), t);
}

fn geometric_drops(r: &mut Report) {
    let t = Instant::now();
    let p = p_out();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, a) in models() {
        let c = cfg(50, 250.0, a);
        let p_suc = summarize(&c, p, &AnalyticOptions::default()).unwrap().p_suc;
        let sim = simulate(
            &c,
            p,
            &SimOptions {
                n_updates: 100_000,
                seed: SEED,
                energy_stride: 0,
                ..Default::default()
            },
        )
        .unwrap();
        let chi = chi_square_geometric(&sim.fails_between_updates, p_suc).unwrap();
        let expected = (1.0 - p_suc) / p_suc;
        let gap = (sim.mean_fails() - expected).abs() / expected;
        ok &= chi.p_value > 0.01 && gap < 0.02;
        parts.push(format!(
            "{name} chi2={:.1} dof={} p={:.3} mean {:.4}/{:.4} ({:.2}%)",
            chi.statistic,
            chi.dof,
            chi.p_value,
            sim.mean_fails(),
            expected,
            100.0 * gap
        ));
    }
    r.line(7, ok, "drops per cycle ~ Geometric(P_suc)", parts.join("; "), t);
}

fn normalization(r: &mut Report) {
    let t = Instant::now();
    let p = p_out();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut cases: Vec<(String, ArrivalModel, AnalyticOptions)> = models()
        .into_iter()
        .map(|(n, a)| (n.to_string(), a, AnalyticOptions::default()))
        .collect();
    cases.push((
        "exponential-grid".into(),
        ArrivalModel::Exponential { rho: 50.0 },
        AnalyticOptions {
            force_general: true,
            ..Default::default()
        },
    ));
    for (name, a, opts) in cases {
        let (mut worst_norm, mut worst_mean) = (0.0f64, 0.0f64);
        let mut mean_ok = true;
        for w in [1, 10, 50] {
            let an = analyze(&cfg(w, 250.0, a.clone()), p, &opts).unwrap();
            for (pmf, closed_form) in [(&an.age, an.summary.mean_age), (&an.cycle, an.summary.mean_cycle)] {
                worst_norm = worst_norm.max(pmf.normalization_error());
                // what the cut-off tail could add to the mean, if it sat just past the support
                let tail_bound = pmf.tail_mass * (pmf.max_support() as f64 + closed_form);
                let gap = (pmf.mean - closed_form).abs();
                worst_mean = worst_mean.max(gap);
                mean_ok &= gap <= 1e-6f64.max(tail_bound);
            }
        }
        ok &= worst_norm <= 1e-9 && mean_ok;
        parts.push(format!("{name} |Σ−1|={worst_norm:.1e} mean gap={worst_mean:.1e}"));
    }
    // the exponential cycle mean has its own series; check it against its pmf at the awkward corner
    let params = ProtocolParams::new(1, 250.0, 200.0);
    let pmf = update_cycle_pmf_exp(&params, 50.0, p, 1e-9).unwrap();
    let m = update_cycle_mean_exp(&params, 50.0, p).unwrap();
    let corner = (pmf.mean - m).abs();
    ok &= pmf.normalization_error() <= 1e-9 && corner <= 1e-6f64.max(pmf.tail_mass * (pmf.max_support() as f64 + m));
    parts.push(format!("exponential W=1 cycle mean gap={corner:.1e}"));
    r.line(8, ok, "pmfs sum to 1 ± 1e-9, means match", parts.join("; "), t);
}

fn reproducibility(r: &mut Report) {
    let t = Instant::now();
    let p = p_out();
    let c = cfg(50, 250.0, ArrivalModel::Gamma { shape: 0.05, scale: 1000.0 });
    let opts = SimOptions {
        n_updates: 50_000,
        seed: SEED,
        ..Default::default()
    };
    let an = analyze(&c, p, &AnalyticOptions::default()).unwrap();
    let run = || {
        let s = simulate(&c, p, &opts).unwrap();
        let cmp = compare(&an.cycle, &empirical_pmf(&s.update_cycles).unwrap());
        (serde_json::to_vec(&s).unwrap(), serde_json::to_vec(&cmp).unwrap())
    };
    let first = run();
    let same = first == run();
    // the same points evaluated in parallel and in sequence
    let seeds: Vec<u64> = (0..8).collect();
    let one = |seed: u64| {
        serde_json::to_vec(&simulate(&c, p, &SimOptions { seed, n_updates: 5_000, ..opts }).unwrap()).unwrap()
    };
    let par: Vec<_> = seeds.par_iter().map(|&s| one(s)).collect();
    let seq: Vec<_> = seeds.iter().map(|&s| one(s)).collect();
    let ok = same && par == seq;
    r.line(
        9,
        ok,
        "same seed, identical bytes",
        format!("simulate+compare repeat={same}, parallel sweep={}", par == seq),
        t,
    );
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    outage(&mut r);
    cross_oracle(&mut r);
    exponential_specialization(&mut r);
    limits(&mut r);
    sensing_power(&mut r);
    steady_state(&mut r);
    geometric_drops(&mut r);
    normalization(&mut r);
    reproducibility(&mut r);
    println!("{} of 9 criteria pass; failing: {:?}", 9 - r.failed.len(), r.failed);
    if !r.failed.is_empty() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
