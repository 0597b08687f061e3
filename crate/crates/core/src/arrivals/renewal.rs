//! The family G_i(x) = P{energy after a TB plus i further EHBs < x}, and the
//! pmf of the number of EHBs needed to collect a target energy.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::{cdf_from_masses, default_step, f_masses, g_masses, GridDensity};
use super::poisson::poisson_pmf;
use super::{upper_quantile, ArrivalModel};
use crate::config::integer_multiple;
use crate::error::{non_negative, positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Node spacing in μJ; ρ/256 when `None`.
    pub step: Option<f64>,
    pub max_nodes: usize,
    /// Unbounded queries stop once G_i(x) falls to this level.
    pub tol: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            step: None,
            max_nodes: 1 << 22,
            tol: 1e-10,
        }
    }
}

/// An energy whose G_i values a [`RenewalTable`] should record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenewalQuery {
    pub energy: f64,
    /// Record levels `0..n`; `None` continues until G_i(energy) ≤ tol.
    pub levels: Option<usize>,
}

impl RenewalQuery {
    pub fn levels(energy: f64, n: usize) -> Self {
        RenewalQuery {
            energy,
            levels: Some(n),
        }
    }

    pub fn until_tail(energy: f64) -> Self {
        RenewalQuery {
            energy,
            levels: None,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    energy: f64,
    g: Vec<f64>,
    until_tail: bool,
}

/// G_i evaluated at a fixed set of energies for every level i the queries ask for.
///
/// Built once by repeated FFT convolution of the steady-state density with the
/// arrival density, then read-only; share it across threads freely.
#[derive(Debug, Clone)]
pub struct RenewalTable {
    step: f64,
    nodes: usize,
    entries: Vec<Entry>,
}

impl RenewalTable {
    pub fn build(a: &ArrivalModel, queries: &[RenewalQuery], opts: &GridOptions) -> Result<Self> {
        let step = positive("grid_step", opts.step.unwrap_or_else(|| default_step(a)))?;
        let mut entries: Vec<Entry> = Vec::new();
        for q in queries {
            non_negative("energy", q.energy)?;
            if q.energy == 0.0 {
                continue;
            }
            match entries.iter_mut().find(|e| same_energy(e.energy, q.energy)) {
                Some(e) => {
                    e.until_tail |= q.levels.is_none();
                    e.g.reserve(q.levels.unwrap_or(0));
                }
                None => entries.push(Entry {
                    energy: q.energy,
                    g: Vec::with_capacity(q.levels.unwrap_or(0)),
                    until_tail: q.levels.is_none(),
                }),
            }
        }
        let wanted = |energy: f64| {
            queries
                .iter()
                .filter(|q| same_energy(q.energy, energy))
                .filter_map(|q| q.levels)
                .max()
                .unwrap_or(0)
        };
        let mut table = RenewalTable {
            step,
            nodes: 0,
            entries,
        };
        if table.entries.is_empty() {
            return Ok(table);
        }
        if let ArrivalModel::Deterministic { rho } = *a {
            for e in &mut table.entries {
                let need = wanted(e.energy);
                let mut i = 0;
                loop {
                    // strict: i EHBs from an empty battery hold exactly iρ
                    let v = if (i as f64) * rho < e.energy * (1.0 - 1e-12) { 1.0 } else { 0.0 };
                    e.g.push(v);
                    i += 1;
                    if i >= need && (!e.until_tail || v == 0.0) {
                        break;
                    }
                }
            }
            return Ok(table);
        }

        let x_max = table.entries.iter().map(|e| e.energy).fold(0.0, f64::max);
        let mut nodes = nodes_to_cover(x_max, step);
        if nodes > opts.max_nodes {
            return Err(Error::GridOverflow {
                needed: nodes,
                cap: opts.max_nodes,
            });
        }
        table.nodes = nodes;
        let mut f = f_masses(a, step, nodes);
        let mut cur = g_masses(a, step, nodes);
        let mut conv = Convolver::new(&f);
        let needs: Vec<usize> = table.entries.iter().map(|e| wanted(e.energy)).collect();
        let max_levels = (10.0 * x_max / a.rho()) as usize + 10_000;
        for level in 0.. {
            let mut active_max: f64 = 0.0;
            for (e, &need) in table.entries.iter_mut().zip(&needs) {
                if done(e, need, opts.tol) {
                    continue;
                }
                e.g.push(cdf_from_masses(&cur, step, e.energy));
                if !done(e, need, opts.tol) {
                    active_max = active_max.max(e.energy);
                }
            }
            if active_max == 0.0 || level >= max_levels {
                break;
            }
            let shrunk = nodes_to_cover(active_max, step);
            if 2 * shrunk <= nodes {
                nodes = shrunk;
                cur.truncate(nodes);
                f.truncate(nodes);
                conv = Convolver::new(&f);
            }
            cur = conv.apply(&cur);
        }
        Ok(table)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Nodes in the widest grid used while building.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    fn entry(&self, energy: f64) -> Result<&Entry> {
        self.entries
            .iter()
            .find(|e| same_energy(e.energy, energy))
            .ok_or(Error::UnqueriedEnergy(energy))
    }

    /// Number of levels recorded for `energy`.
    pub fn levels(&self, energy: f64) -> Result<usize> {
        if energy == 0.0 {
            return Ok(usize::MAX);
        }
        Ok(self.entry(energy)?.g.len())
    }

    /// G_i(energy) for i ≥ −1. Past the recorded levels of an until-tail query
    /// the value is below the tolerance and reported as 0.
    pub fn big_g(&self, i: i64, energy: f64) -> Result<f64> {
        if i < 0 {
            return Ok(1.0);
        }
        if energy == 0.0 {
            return Ok(0.0);
        }
        let e = self.entry(energy)?;
        match e.g.get(i as usize) {
            Some(v) => Ok(*v),
            None if e.until_tail => Ok(0.0),
            None => Err(Error::UnqueriedEnergy(energy)),
        }
    }

    /// ζ(i) = G_{i−1} − G_i over the recorded levels, plus the mass beyond them.
    pub fn zeta(&self, energy: f64) -> Result<(Vec<f64>, f64)> {
        if energy == 0.0 {
            return Ok((vec![1.0], 0.0));
        }
        let e = self.entry(energy)?;
        let mut prev = 1.0;
        let z = e
            .g
            .iter()
            .map(|&g| {
                let d = (prev - g).max(0.0);
                prev = g;
                d
            })
            .collect();
        Ok((z, prev))
    }
}

fn done(e: &Entry, need: usize, tol: f64) -> bool {
    e.g.len() >= need && (!e.until_tail || e.g.last().is_some_and(|&g| g <= tol))
}

fn same_energy(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn nodes_to_cover(x: f64, step: f64) -> usize {
    (x / step).ceil() as usize + 2
}

/// Linear convolution with a fixed kernel, truncated to the input length.
struct Convolver {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kernel: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Convolver {
    fn new(kernel: &[f64]) -> Self {
        let len = (2 * kernel.len()).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let mut k: Vec<Complex<f64>> = kernel.iter().map(|&x| Complex::new(x, 0.0)).collect();
        k.resize(len, Complex::default());
        let scratch = vec![Complex::default(); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        let mut c = Convolver {
            fwd,
            inv,
            kernel: Vec::new(),
            scratch,
        };
        c.fwd.process_with_scratch(&mut k, &mut c.scratch);
        c.kernel = k;
        c
    }

    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        let len = self.kernel.len();
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(len, Complex::default());
        self.fwd.process_with_scratch(&mut buf, &mut self.scratch);
        for (b, k) in buf.iter_mut().zip(&self.kernel) {
            *b *= *k;
        }
        self.inv.process_with_scratch(&mut buf, &mut self.scratch);
        let scale = 1.0 / len as f64;
        // round-off leaves tiny negatives where the true value is ~0
        buf[..x.len()].iter().map(|c| (c.re * scale).max(0.0)).collect()
    }
}

/// Density of the battery after a TB plus `i` EHBs: g ⋆ f^{⋆i}. The grid grows
/// until less than 1e−12 of the mass falls beyond it.
pub fn g_i_density(a: &ArrivalModel, i: usize, opts: &GridOptions) -> Result<GridDensity> {
    let step = positive("grid_step", opts.step.unwrap_or_else(|| default_step(a)))?;
    if let ArrivalModel::Deterministic { rho } = *a {
        let j = (i as f64 * rho / step).round() as usize;
        if j + 1 > opts.max_nodes {
            return Err(Error::GridOverflow {
                needed: j + 1,
                cap: opts.max_nodes,
            });
        }
        let mut m = vec![0.0; j + 1];
        m[j] = 1.0;
        return Ok(GridDensity::from_masses(step, &m, 0.0));
    }
    let mut x = upper_quantile(|x| a.stationary_cdf(x), 1e-13, a.rho()) + 2.0 * i as f64 * a.rho();
    loop {
        let nodes = nodes_to_cover(x, step);
        if nodes > opts.max_nodes {
            return Err(Error::GridOverflow {
                needed: nodes,
                cap: opts.max_nodes,
            });
        }
        let f = f_masses(a, step, nodes);
        let mut cur = g_masses(a, step, nodes);
        let mut conv = Convolver::new(&f);
        for _ in 0..i {
            cur = conv.apply(&cur);
        }
        let truncated = (1.0 - cur.iter().sum::<f64>()).max(0.0);
        if truncated <= 1e-12 {
            return Ok(GridDensity::from_masses(step, &cur, truncated));
        }
        x *= 2.0;
    }
}

/// G_i(x) for a single point. Tables amortize this across many calls.
pub fn big_g(a: &ArrivalModel, i: i64, x: f64, opts: &GridOptions) -> Result<f64> {
    non_negative("x", x)?;
    if i < 0 {
        return Ok(1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let table = RenewalTable::build(a, &[RenewalQuery::levels(x, i as usize + 1)], opts)?;
    table.big_g(i, x)
}

/// P{E(target) = i}: the probability that exactly i EHBs after a TB are needed
/// before the battery reaches `target`.
pub fn eh_count_pmf(a: &ArrivalModel, target: f64, i: usize, opts: &GridOptions) -> Result<f64> {
    non_negative("target", target)?;
    match *a {
        ArrivalModel::Deterministic { rho } => {
            let k = integer_multiple("target", target, rho)?;
            Ok(if k == i as u64 { 1.0 } else { 0.0 })
        }
        ArrivalModel::Exponential { rho } => Ok(poisson_pmf(target / rho, i)),
        _ => {
            if target == 0.0 {
                return Ok(if i == 0 { 1.0 } else { 0.0 });
            }
            let table = RenewalTable::build(a, &[RenewalQuery::levels(target, i + 1)], opts)?;
            Ok(table.big_g(i as i64 - 1, target)? - table.big_g(i as i64, target)?)
        }
    }
}
