//! Block-level Monte Carlo of the harvest-then-use protocol.

mod stats;

pub use stats::{
    chi_square_geometric, compare, empirical_pmf, kolmogorov_sf, ks_one_sample, ChiSquareTest, Comparison, KsTest,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arrivals::ArrivalModel;
use crate::config::ValidatedConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Updates recorded over all replications.
    pub n_updates: usize,
    pub seed: u64,
    /// Successful updates discarded at the start of every replication.
    pub warmup: usize,
    /// Independent streams; results are concatenated in stream order.
    pub replications: usize,
    /// Keep every `energy_stride`-th post-TB battery level; 0 keeps none.
    pub energy_stride: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            n_updates: 100_000,
            seed: 0,
            warmup: 100,
            replications: 8,
            energy_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    HarvestForSensing,
    AwaitRetransmit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorState {
    /// In the simulation's energy unit: ρ for deterministic arrivals, μJ otherwise.
    pub battery: f64,
    pub phase: Phase,
    pub t: u64,
    pub t_sb: u64,
    pub t_stb_prev: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub update_ages: Vec<u64>,
    pub update_cycles: Vec<u64>,
    /// μJ, right after each (kept) TB.
    pub post_tb_energies: Vec<f64>,
    /// Dropped packets inside each recorded cycle.
    pub fails_between_updates: Vec<u64>,
    pub seed: u64,
    pub warmup_discarded: usize,
    pub replications: usize,
}

impl SimResult {
    pub fn mean_age(&self) -> f64 {
        mean(&self.update_ages)
    }

    pub fn mean_cycle(&self) -> f64 {
        mean(&self.update_cycles)
    }

    pub fn mean_fails(&self) -> f64 {
        mean(&self.fails_between_updates)
    }
}

fn mean(xs: &[u64]) -> f64 {
    xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64
}

pub fn simulate(cfg: &ValidatedConfig, p_out: f64, opts: &SimOptions) -> Result<SimResult> {
    if p_out.is_nan() || p_out >= 1.0 {
        return Err(Error::NoProgress("every transmission fails (p_out = 1)"));
    }
    if p_out < 0.0 {
        return Err(Error::InvalidProbability { field: "p_out", value: p_out });
    }
    if cfg.rho() <= 0.0 {
        return Err(Error::NoProgress("no energy arrives (rho = 0)"));
    }
    if opts.n_updates == 0 || opts.replications == 0 {
        return Err(Error::NonPositive {
            field: "n_updates",
            value: opts.n_updates.min(opts.replications) as f64,
            expected: "updates and replications >= 1",
        });
    }
    let reps = opts.replications;
    let streams: Vec<Stream> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let n = opts.n_updates / reps + usize::from(r < opts.n_updates % reps);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            run_stream(cfg, p_out, n, opts, &mut rng)
        })
        .collect();
    let mut out = SimResult {
        update_ages: Vec::with_capacity(opts.n_updates),
        update_cycles: Vec::with_capacity(opts.n_updates),
        post_tb_energies: Vec::new(),
        fails_between_updates: Vec::with_capacity(opts.n_updates),
        seed: opts.seed,
        warmup_discarded: opts.warmup * reps,
        replications: reps,
    };
    for s in streams {
        out.update_ages.extend(s.ages);
        out.update_cycles.extend(s.cycles);
        out.post_tb_energies.extend(s.energies);
        out.fails_between_updates.extend(s.fails);
    }
    Ok(out)
}

struct Stream {
    ages: Vec<u64>,
    cycles: Vec<u64>,
    energies: Vec<f64>,
    fails: Vec<u64>,
}

fn run_stream(cfg: &ValidatedConfig, p_out: f64, n_updates: usize, opts: &SimOptions, rng: &mut ChaCha8Rng) -> Stream {
    let p = cfg.params();
    let window = p.window as u64;
    let sampler = cfg.arrivals().sampler();
    // deterministic batteries count whole harvests so every comparison is exact
    let (unit, unit_draw) = match cfg.arrivals() {
        ArrivalModel::Deterministic { rho } => (*rho, true),
        _ => (1.0, false),
    };
    let e_sen = p.e_sen / unit;
    let e_tx = p.e_tx / unit;
    let (e_sen, e_tx) = if unit_draw { (e_sen.round(), e_tx.round()) } else { (e_sen, e_tx) };

    let mut st = SensorState {
        battery: 0.0,
        phase: Phase::HarvestForSensing,
        t: 0,
        t_sb: 0,
        t_stb_prev: None,
    };
    let mut out = Stream {
        ages: Vec::with_capacity(n_updates),
        cycles: Vec::with_capacity(n_updates),
        energies: Vec::new(),
        fails: Vec::with_capacity(n_updates),
    };
    let mut successes = 0usize;
    let mut drops = 0u64;
    let mut tbs = 0usize;
    let mut prev_recorded = false;
    let target = opts.warmup + n_updates;

    while successes < target {
        let transmit = match st.phase {
            Phase::HarvestForSensing if st.battery >= e_sen + e_tx => {
                // SB
                st.t_sb = st.t;
                st.battery -= e_sen;
                st.t += 1;
                true
            }
            Phase::AwaitRetransmit if st.t - st.t_sb > window => {
                drops += 1;
                st.phase = Phase::HarvestForSensing;
                continue;
            }
            Phase::AwaitRetransmit if st.battery >= e_tx => true,
            _ => false,
        };
        if !transmit {
            // EHB
            st.battery += if unit_draw { 1.0 } else { sampler.sample(rng) };
            st.t += 1;
            continue;
        }
        // TB at block t
        debug_assert!(st.phase == Phase::AwaitRetransmit || st.t == st.t_sb + 1);
        debug_assert!(st.t - st.t_sb <= window);
        st.battery -= e_tx;
        debug_assert!(st.battery >= -1e-9);
        let recording = successes >= opts.warmup;
        if recording && opts.energy_stride > 0 {
            if tbs % opts.energy_stride == 0 {
                out.energies.push(st.battery * unit);
            }
            tbs += 1;
        }
        if rng.random::<f64>() >= p_out {
            if recording {
                out.ages.push(st.t - st.t_sb);
                if prev_recorded {
                    out.cycles.push(st.t - st.t_stb_prev.unwrap());
                    out.fails.push(drops);
                }
                prev_recorded = true;
            }
            drops = 0;
            successes += 1;
            st.t_stb_prev = Some(st.t);
            st.phase = Phase::HarvestForSensing;
        } else {
            st.phase = Phase::AwaitRetransmit;
        }
        st.t += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate, ProtocolParams};

    fn det(w: u32) -> ValidatedConfig {
        validate(ProtocolParams::new(w, 250.0, 200.0), ArrivalModel::Deterministic { rho: 50.0 }).unwrap()
    }

    #[test]
    fn perfect_channel_is_periodic() {
        let r = simulate(&det(50), 0.0, &SimOptions { n_updates: 1000, ..Default::default() }).unwrap();
        assert!(r.update_ages.iter().all(|&a| a == 1));
        assert!(r.update_cycles.iter().all(|&c| c == 11));
        assert_eq!(r.update_cycles.len(), 1000 - 8);
        assert!(r.post_tb_energies.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn reproducible() {
        let cfg = validate(ProtocolParams::new(50, 250.0, 200.0), ArrivalModel::Exponential { rho: 50.0 }).unwrap();
        let o = SimOptions { n_updates: 5000, seed: 7, ..Default::default() };
        assert_eq!(simulate(&cfg, 0.9, &o).unwrap(), simulate(&cfg, 0.9, &o).unwrap());
    }

    #[test]
    fn ages_within_window() {
        let cfg = validate(ProtocolParams::new(7, 0.0, 200.0), ArrivalModel::Gamma { shape: 0.05, scale: 1000.0 }).unwrap();
        let r = simulate(&cfg, 0.8, &SimOptions { n_updates: 20_000, ..Default::default() }).unwrap();
        assert!(r.update_ages.iter().all(|&a| (1..=7).contains(&a)));
        assert!(r.update_cycles.iter().all(|&c| c >= 2));
        assert!(r.post_tb_energies.iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn single_window_drops_half() {
        let r = simulate(&det(1), 0.5, &SimOptions { n_updates: 100_000, ..Default::default() }).unwrap();
        assert!((r.mean_fails() - 1.0).abs() < 0.03);
    }

    #[test]
    fn rejects_hopeless_channel() {
        assert!(matches!(simulate(&det(5), 1.0, &SimOptions::default()), Err(Error::NoProgress(_))));
    }
}
