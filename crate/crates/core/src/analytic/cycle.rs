//! Update cycle: blocks between consecutive successful TBs.

use super::age::{age_mean_from, attempt_weights, iota_seq, n_hat, p_suc_det};
use super::counts::{CountSource, PoissonCounts};
use super::engine::GeneralEngine;
use super::{AnalyticOptions, Pmf};
use crate::arrivals::{poisson_seq, ArrivalModel};
use crate::config::{integer_multiple, ProtocolParams};
use crate::error::{positive, probability, Result};

/// Entries below this are dropped from the ends of running convolutions.
const NEGLIGIBLE: f64 = 1e-20;

/// A sequence whose first entry sits at index `start`.
#[derive(Debug, Clone)]
struct Seq {
    start: usize,
    v: Vec<f64>,
}

impl Seq {
    fn new(start: usize, v: Vec<f64>) -> Seq {
        let mut s = Seq { start, v };
        s.trim();
        s
    }

    fn trim(&mut self) {
        let lo = self.v.iter().position(|&x| x > NEGLIGIBLE).unwrap_or(self.v.len());
        let hi = self.v.iter().rposition(|&x| x > NEGLIGIBLE).map_or(lo, |h| h + 1);
        self.v = self.v[lo..hi].to_vec();
        self.start += lo;
    }

    fn conv(&self, other: &Seq) -> Seq {
        Seq::new(self.start + other.start, convolve(&self.v, &other.v))
    }

    fn mass(&self) -> f64 {
        self.v.iter().sum()
    }

    fn add_into(&self, dense: &mut Vec<f64>, shift: usize) {
        let end = shift + self.start + self.v.len();
        if dense.len() < end {
            dense.resize(end, 0.0);
        }
        for (j, x) in self.v.iter().enumerate() {
            dense[shift + self.start + j] += x;
        }
    }
}

/// Direct-sum linear convolution.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// ζ(𝓔): pmf of the EHB count needed to gather `energy`, with its truncated tail.
pub fn zeta_seq(src: &dyn CountSource, energy: f64) -> Result<(Vec<f64>, f64)> {
    src.zeta(energy)
}

/// ϑ(v) for v = 0, 1, …: probability that a packet is dropped and the battery
/// needs v more EHBs after the window closes to hold E_T again. Also returns the
/// mass the truncated ζ(E_T) leaves out.
pub fn vartheta_seq(src: &dyn CountSource, params: &ProtocolParams, p_out: f64) -> Result<(Vec<f64>, f64)> {
    probability("p_out", p_out)?;
    let s = attempt_weights(src, &params.tx(), p_out)?;
    let (zt, zt_tail) = src.zeta(params.e_tx)?;
    Ok(vartheta_from(&s, p_out, &zt, zt_tail, params.window as usize))
}

fn vartheta_from(s: &[f64], p_out: f64, zt: &[f64], zt_tail: f64, w: usize) -> (Vec<f64>, f64) {
    let mut theta = vec![0.0; zt.len()];
    for l in 1..=w {
        let phi = p_out * s[l];
        if phi == 0.0 {
            continue;
        }
        // ϑ(v) += φ(l)·ζ_T(W − l + v)
        let off = w - l;
        for (v, t) in theta.iter_mut().enumerate() {
            match zt.get(off + v) {
                Some(z) => *t += phi * z,
                None => break,
            }
        }
    }
    let total = theta_total(s, p_out, zt, zt_tail, w);
    let kept: f64 = theta.iter().sum();
    (theta, (total - kept).max(0.0))
}

/// Σ_v ϑ(v) in closed form: Σ_l φ(l)·G_{W−l−1}(E_T), the probability of a drop
/// as the cycle formulas account for it.
fn theta_total(s: &[f64], p_out: f64, zt: &[f64], zt_tail: f64, w: usize) -> f64 {
    // above[j] = Σ_{i>j} ζ_T(i) + tail = G_j(E_T)
    let mut above = vec![zt_tail; zt.len() + 1];
    for j in (0..zt.len()).rev() {
        above[j] = above[j + 1] + zt.get(j + 1).copied().unwrap_or(0.0);
    }
    let g = |j: isize| -> f64 {
        if j < 0 {
            1.0
        } else {
            above.get(j as usize).copied().unwrap_or(zt_tail)
        }
    };
    (1..=w)
        .map(|l| p_out * s[l] * g(w as isize - l as isize - 1))
        .sum()
}

/// Cycle pmf for general arrivals: the sum over m dropped packets of
/// ζ(E_S+E_T) ⋆ (ζ(E_S) ⋆ ϑ)^{⋆m} ⋆ ι, shifted by m(1 + W) + 1.
///
/// `tail_mass` is the closed-form total P_suc / (1 − Σϑ) minus what was
/// summed. When Σϑ and 1 − P_suc disagree, so does the total with 1.
pub fn cycle_pmf_from(src: &dyn CountSource, params: &ProtocolParams, p_out: f64, eps_tail: f64) -> Result<Pmf> {
    probability("p_out", p_out)?;
    let w = params.window as usize;
    let tx = params.tx();
    let s = attempt_weights(src, &tx, p_out)?;
    let iota: Vec<f64> = s.iter().map(|x| (1.0 - p_out) * x).collect();
    let p_suc: f64 = iota.iter().sum();
    let (zt, zt_tail) = src.zeta(params.e_tx)?;
    let (theta, _) = vartheta_from(&s, p_out, &zt, zt_tail, w);
    let total = p_suc / (1.0 - theta_total(&s, p_out, &zt, zt_tail, w));
    let (zst, _) = src.zeta(params.e_sen + params.e_tx)?;
    let (zs, _) = src.zeta(params.e_sen)?;

    let a = Seq::new(0, zst).conv(&Seq::new(0, iota));
    let b = Seq::new(0, zs).conv(&Seq::new(0, theta));
    let (a_mass, b_mass) = (a.mass(), b.mass());
    let mut dense = Vec::new();
    let mut term = a;
    let mut shift = 1;
    for m in 0.. {
        term.add_into(&mut dense, shift);
        let remaining = a_mass * b_mass.powi(m + 1) / (1.0 - b_mass);
        if b_mass == 0.0 || remaining <= 0.5 * eps_tail || term.v.is_empty() {
            break;
        }
        term = term.conv(&b);
        shift += w + 1;
    }
    let summed: f64 = dense.iter().sum();
    Ok(Pmf::from_dense(dense, (total - summed).max(0.0)))
}

/// Cycle pmf for exponential arrivals. The m sensing episodes merge into a
/// single Poisson count, ζ((m+1)E_S + E_T) ⋆ ϑ^{⋆m} ⋆ ι.
pub fn update_cycle_pmf_exp(params: &ProtocolParams, rho: f64, p_out: f64, eps_tail: f64) -> Result<Pmf> {
    probability("p_out", p_out)?;
    let src = PoissonCounts {
        rho: positive("rho", rho)?,
        tol: eps_tail / 10.0,
    };
    let w = params.window as usize;
    let s = attempt_weights(&src, &params.tx(), p_out)?;
    let iota: Vec<f64> = s.iter().map(|x| (1.0 - p_out) * x).collect();
    let p_suc: f64 = iota.iter().sum();
    let (zt, zt_tail) = src.zeta(params.e_tx)?;
    let (theta, _) = vartheta_from(&s, p_out, &zt, zt_tail, w);
    let theta_sum = theta_total(&s, p_out, &zt, zt_tail, w);
    let total = p_suc / (1.0 - theta_sum);
    let theta = Seq::new(0, theta);
    let theta_mass = theta.mass();

    let mut dense = Vec::new();
    let mut base = Seq::new(0, iota); // ϑ^{⋆m} ⋆ ι
    let mut shift = 1;
    for m in 0.. {
        let lambda = ((m + 1) as f64 * params.e_sen + params.e_tx) / rho;
        let (z, _) = poisson_seq(lambda, src.tol);
        let term = Seq::new(0, z).conv(&base);
        term.add_into(&mut dense, shift);
        let remaining = p_suc * theta_mass.powi(m + 1) / (1.0 - theta_mass);
        if theta_mass == 0.0 || remaining <= 0.5 * eps_tail || base.v.is_empty() {
            break;
        }
        base = base.conv(&theta);
        shift += w + 1;
    }
    let summed: f64 = dense.iter().sum();
    Ok(Pmf::from_dense(dense, (total - summed).max(0.0)))
}

/// Mean cycle, general and exponential arrivals:
/// ((1 − P_suc)(E_S/ρ + W + 1) + (1 − P_suc)·V̄)/P_suc + (E_S + E_T)/ρ + mean age + 1.
///
/// (1 − P_suc)·V̄ is evaluated directly as Σ_l φ(l)·E[(E(E_T) − (W − l))⁺], so
/// P_suc → 1 needs no special case.
pub fn cycle_mean_from(src: &dyn CountSource, params: &ProtocolParams, rho: f64, p_out: f64) -> Result<f64> {
    probability("p_out", p_out)?;
    let w = params.window as usize;
    let tx = params.tx();
    let s = attempt_weights(src, &tx, p_out)?;
    let p_suc = (1.0 - p_out) * s.iter().sum::<f64>();
    let (zt, _) = src.zeta(params.e_tx)?;
    let r = params.e_tx / rho;
    // E[(E − a)⁺] = E_T/ρ − Σ_{i<a} i ζ(i) − a (1 − Σ_{i<a} ζ(i))
    let excess = |a: usize| {
        let (mut m0, mut m1) = (0.0, 0.0);
        for (i, z) in zt.iter().enumerate().take(a) {
            m0 += z;
            m1 += i as f64 * z;
        }
        r - m1 - a as f64 * (1.0 - m0)
    };
    let b_v: f64 = (1..=w).map(|l| p_out * s[l] * excess(w - l)).sum();
    let mean_age = age_mean_from(src, &tx, p_out)?;
    let es = params.e_sen / rho;
    Ok(((1.0 - p_suc) * (es + w as f64 + 1.0) + b_v) / p_suc + es + r + mean_age + 1.0)
}

pub fn update_cycle_mean_exp(params: &ProtocolParams, rho: f64, p_out: f64) -> Result<f64> {
    let src = PoissonCounts {
        rho: positive("rho", rho)?,
        tol: 1e-14,
    };
    cycle_mean_from(&src, params, rho, p_out)
}

pub fn update_cycle_pmf_gen(params: &ProtocolParams, a: &ArrivalModel, p_out: f64, opts: &AnalyticOptions) -> Result<Pmf> {
    GeneralEngine::new(a, params.e_sen, params.e_tx, params.window, opts)?.cycle_pmf(params.window, p_out)
}

pub fn update_cycle_mean_gen(params: &ProtocolParams, a: &ArrivalModel, p_out: f64, opts: &AnalyticOptions) -> Result<f64> {
    GeneralEngine::new(a, params.e_sen, params.e_tx, params.window, opts)?.mean_cycle(params.window, p_out)
}

/// Deterministic arrivals: mass (1 − p)p^{n−1+m n̂} at
/// k = (E_S + nE_T)/ρ + n + 1 + m((E_S + n̂E_T)/ρ + n̂ + 1).
pub fn update_cycle_pmf_det(params: &ProtocolParams, rho: f64, p_out: f64, eps_tail: f64) -> Result<Pmf> {
    positive("rho", rho)?;
    probability("p_out", p_out)?;
    let s = integer_multiple("e_sen", params.e_sen, rho)?;
    let r = integer_multiple("e_tx", params.e_tx, rho)?;
    let nh = n_hat(params.window, r);
    let period = s + nh * r + nh + 1;
    let pn = p_out.powi(nh as i32);
    let mut dense = Vec::new();
    let mut remaining = 1.0;
    let mut m = 0u64;
    loop {
        for n in 1..=nh {
            let k = (s + n * r + n + 1 + m * period) as usize;
            if dense.len() <= k {
                dense.resize(k + 1, 0.0);
            }
            dense[k] = (1.0 - p_out) * p_out.powi((n - 1 + m * nh) as i32);
        }
        // mass of all m' > m
        remaining = if m == 0 { pn } else { remaining * pn };
        if remaining <= eps_tail {
            break;
        }
        m += 1;
    }
    Ok(Pmf::from_dense(dense, remaining))
}

/// Deterministic mean cycle in closed form.
pub fn update_cycle_mean_det(params: &ProtocolParams, rho: f64, p_out: f64) -> Result<f64> {
    let tx = params.tx();
    let p_suc = p_suc_det(&tx, rho, p_out)?;
    let s = params.e_sen / rho;
    let r = integer_multiple("e_tx", params.e_tx, rho)? as f64;
    integer_multiple("e_sen", params.e_sen, rho)?;
    let nh = n_hat(params.window, r as u64);
    let pn = p_out.powi(nh as i32);
    let sum_n: f64 = (1..=nh).map(|n| p_out.powi(n as i32 - 1) * n as f64).sum();
    Ok(pn / p_suc * (1.0 + nh as f64 + s + nh as f64 * r) + s + 1.0 + (1.0 + r) * (1.0 - p_out) / p_suc * sum_n)
}

/// Mean cycle as W → ∞: 2 + (E_S + E_T)/ρ + p/(1 − p)·(E_T/ρ + 1).
pub fn update_cycle_limit(rho: f64, e_sen: f64, e_tx: f64, p_out: f64) -> f64 {
    2.0 + (e_sen + e_tx) / rho + p_out / (1.0 - p_out) * (e_tx / rho + 1.0)
}

/// P_suc from the same ι the cycle formulas use.
pub fn p_suc_from(src: &dyn CountSource, params: &ProtocolParams, p_out: f64) -> Result<f64> {
    Ok(iota_seq(src, &params.tx(), p_out)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::counts::DeterministicCounts;

    fn params(w: u32) -> ProtocolParams {
        ProtocolParams::new(w, 250.0, 200.0)
    }

    #[test]
    fn deterministic_reference_values() {
        let pmf = update_cycle_pmf_det(&params(50), 50.0, 0.5, 1e-12).unwrap();
        assert_eq!(pmf.min_support, 11);
        assert_eq!(pmf.prob(11), 0.5);
        assert_eq!(pmf.prob(16), 0.25);
        assert!(pmf.normalization_error().abs() < 1e-14);
        let mean = update_cycle_mean_det(&params(50), 50.0, 0.5).unwrap();
        assert!((mean - pmf.mean).abs() < 1e-9, "{mean} vs {}", pmf.mean);
        let sure = update_cycle_pmf_det(&params(50), 50.0, 0.0, 1e-9).unwrap();
        assert_eq!(sure.probs, vec![1.0]);
        assert_eq!(sure.min_support, 11);
    }

    #[test]
    fn unified_form_reduces_to_deterministic() {
        let src = DeterministicCounts { rho: 50.0 };
        for w in [1, 5, 12, 50] {
            let gen = cycle_pmf_from(&src, &params(w), 0.6, 1e-12).unwrap();
            let det = update_cycle_pmf_det(&params(w), 50.0, 0.6, 1e-12).unwrap();
            for k in 0..det.max_support() {
                assert!((gen.prob(k) - det.prob(k)).abs() < 1e-13, "W={w} k={k}");
            }
            let m = cycle_mean_from(&src, &params(w), 50.0, 0.6).unwrap();
            let md = update_cycle_mean_det(&params(w), 50.0, 0.6).unwrap();
            assert!((m - md).abs() < 1e-9, "W={w}: {m} vs {md}");
        }
    }

    #[test]
    fn exponential_identities() {
        let p = params(50);
        let src = PoissonCounts { rho: 50.0, tol: 1e-12 };
        let (theta, _) = vartheta_seq(&src, &p, 0.9).unwrap();
        let p_suc = p_suc_from(&src, &p, 0.9).unwrap();
        assert!((theta.iter().sum::<f64>() - (1.0 - p_suc)).abs() < 1e-9);
        let pmf = update_cycle_pmf_exp(&p, 50.0, 0.9, 1e-9).unwrap();
        assert!(pmf.normalization_error().abs() < 1e-9);
        assert_eq!(pmf.prob(1), 0.0);
        let mean = update_cycle_mean_exp(&p, 50.0, 0.9).unwrap();
        assert!((mean - pmf.mean).abs() < 1e-6, "{mean} vs {}", pmf.mean);
    }

    #[test]
    fn limits() {
        assert_eq!(update_cycle_limit(50.0, 250.0, 200.0, 0.0), 11.0);
        assert_eq!(update_cycle_limit(50.0, 250.0, 200.0, 0.5), 16.0);
    }
}
