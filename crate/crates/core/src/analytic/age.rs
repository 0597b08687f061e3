//! Update age: blocks from a packet's SB to its successful TB, given delivery.

use super::counts::{CountSource, PoissonCounts};
use super::engine::GeneralEngine;
use super::{AnalyticOptions, Pmf};
use crate::arrivals::ArrivalModel;
use crate::config::{integer_multiple, TxParams};
use crate::error::{positive, probability, Result};

/// Number of TBs that fit in the window with deterministic arrivals.
pub fn n_hat(window: u32, tx_ratio: u64) -> u64 {
    1 + (window as u64 - 1) / (1 + tx_ratio)
}

pub fn p_suc_det(tx: &TxParams, rho: f64, p_out: f64) -> Result<f64> {
    probability("p_out", p_out)?;
    let r = integer_multiple("e_tx", tx.e_tx, rho)?;
    Ok(1.0 - p_out.powi(n_hat(tx.window, r) as i32))
}

pub fn update_age_pmf_det(tx: &TxParams, rho: f64, p_out: f64) -> Result<Pmf> {
    positive("rho", rho)?;
    let p_suc = p_suc_det(tx, rho, p_out)?;
    let r = integer_multiple("e_tx", tx.e_tx, rho)?;
    let nh = n_hat(tx.window, r);
    let mut probs = vec![0.0; (1 + (nh - 1) * (r + 1)) as usize];
    for n in 1..=nh {
        let k = 1 + (n - 1) * (r + 1);
        probs[(k - 1) as usize] = (1.0 - p_out) * p_out.powi(n as i32 - 1) / p_suc;
    }
    Ok(Pmf::new(1, probs, 0.0))
}

/// Mean age for deterministic arrivals, summed term by term over the support.
pub fn update_age_mean_det(tx: &TxParams, rho: f64, p_out: f64) -> Result<f64> {
    positive("rho", rho)?;
    let p_suc = p_suc_det(tx, rho, p_out)?;
    let r = integer_multiple("e_tx", tx.e_tx, rho)?;
    let nh = n_hat(tx.window, r);
    Ok((1..=nh)
        .map(|n| {
            let k = (1 + (n - 1) * (r + 1)) as f64;
            k * (1.0 - p_out) * p_out.powi(n as i32 - 1) / p_suc
        })
        .sum())
}

/// s(l) = Σ_{n=1}^{l} p^{n−1} ζ((n−1)E_T)(l−n) for l = 0..=W (s(0) = 0).
///
/// The packet is delivered at its l-th block after the SB with probability
/// (1 − p)·s(l); it is still pending after a failure at that block with p·s(l).
pub(crate) fn attempt_weights(src: &dyn CountSource, tx: &TxParams, p_out: f64) -> Result<Vec<f64>> {
    let w = tx.window as usize;
    let mut s = vec![0.0; w + 1];
    s[1] = 1.0;
    let mut pw = 1.0;
    for n in 2..=w {
        pw *= p_out;
        if pw == 0.0 {
            break;
        }
        let z = src.zeta_prefix((n - 1) as f64 * tx.e_tx, w - n + 1)?;
        for (j, zj) in z.iter().enumerate() {
            s[n + j] += pw * zj;
        }
    }
    Ok(s)
}

/// ι(l) = P{delivered at the l-th block after the SB}, for l = 0..=W (ι(0) = 0).
pub fn iota_seq(src: &dyn CountSource, tx: &TxParams, p_out: f64) -> Result<Vec<f64>> {
    probability("p_out", p_out)?;
    Ok(attempt_weights(src, tx, p_out)?
        .into_iter()
        .map(|s| (1.0 - p_out) * s)
        .collect())
}

/// Age pmf and P_suc from any count source.
pub fn age_pmf_from(src: &dyn CountSource, tx: &TxParams, p_out: f64) -> Result<(Pmf, f64)> {
    let iota = iota_seq(src, tx, p_out)?;
    let p_suc: f64 = iota.iter().sum();
    let probs = iota[1..].iter().map(|x| x / p_suc).collect();
    Ok((Pmf::new(1, probs, 0.0), p_suc))
}

/// Mean age written the way the closed forms state it:
/// (1 − p)/P_suc · (1 + Σ_{l≥2} l Σ_n p^{n−1} ζ).
pub fn age_mean_from(src: &dyn CountSource, tx: &TxParams, p_out: f64) -> Result<f64> {
    probability("p_out", p_out)?;
    let s = attempt_weights(src, tx, p_out)?;
    let p_suc = (1.0 - p_out) * s.iter().sum::<f64>();
    let weighted: f64 = s.iter().enumerate().skip(2).map(|(l, x)| l as f64 * x).sum();
    Ok((1.0 - p_out) / p_suc * (1.0 + weighted))
}

pub fn update_age_pmf_exp(tx: &TxParams, rho: f64, p_out: f64) -> Result<Pmf> {
    let src = PoissonCounts {
        rho: positive("rho", rho)?,
        tol: 0.0,
    };
    Ok(age_pmf_from(&src, tx, p_out)?.0)
}

pub fn update_age_mean_exp(tx: &TxParams, rho: f64, p_out: f64) -> Result<f64> {
    let src = PoissonCounts {
        rho: positive("rho", rho)?,
        tol: 0.0,
    };
    age_mean_from(&src, tx, p_out)
}

pub fn p_suc_exp(tx: &TxParams, rho: f64, p_out: f64) -> Result<f64> {
    let src = PoissonCounts {
        rho: positive("rho", rho)?,
        tol: 0.0,
    };
    Ok(iota_seq(&src, tx, p_out)?.iter().sum())
}

/// Age pmf for any continuous arrival model, through the energy grid.
pub fn update_age_pmf_gen(tx: &TxParams, a: &ArrivalModel, p_out: f64, opts: &AnalyticOptions) -> Result<Pmf> {
    GeneralEngine::for_age(a, tx.e_tx, tx.window, opts)?.age_pmf(tx.window, p_out)
}

pub fn update_age_mean_gen(tx: &TxParams, a: &ArrivalModel, p_out: f64, opts: &AnalyticOptions) -> Result<f64> {
    GeneralEngine::for_age(a, tx.e_tx, tx.window, opts)?.mean_age(tx.window, p_out)
}

/// Mean age as W → ∞: 1 + p/(1 − p)·(E_T/ρ + 1).
pub fn update_age_limit(rho: f64, e_tx: f64, p_out: f64) -> f64 {
    1.0 + p_out / (1.0 - p_out) * (e_tx / rho + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::counts::DeterministicCounts;

    fn tx(window: u32) -> TxParams {
        TxParams { window, e_tx: 200.0 }
    }

    #[test]
    fn deterministic_reference_values() {
        let pmf = update_age_pmf_det(&tx(50), 50.0, 0.5).unwrap();
        let p_suc = 1.0 - 0.5f64.powi(10);
        assert!((pmf.prob(1) - 0.5 / p_suc).abs() < 1e-15);
        assert!((pmf.prob(6) - 0.25 / p_suc).abs() < 1e-15);
        assert_eq!(pmf.max_support(), 46);
        assert_eq!(pmf.prob(2), 0.0);
        let mean = update_age_mean_det(&tx(50), 50.0, 0.5).unwrap();
        assert!((mean - pmf.mean).abs() < 1e-12);
        assert!((mean - 5.951124144672531).abs() < 1e-12);
    }

    #[test]
    fn unified_form_reduces_to_deterministic() {
        let src = DeterministicCounts { rho: 50.0 };
        for w in [1, 5, 6, 50] {
            let (pmf, p_suc) = age_pmf_from(&src, &tx(w), 0.7).unwrap();
            let det = update_age_pmf_det(&tx(w), 50.0, 0.7).unwrap();
            assert!((p_suc - p_suc_det(&tx(w), 50.0, 0.7).unwrap()).abs() < 1e-14);
            for k in 1..=w as u64 {
                assert!((pmf.prob(k) - det.prob(k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn first_entry_and_degenerate_cases() {
        let pmf = update_age_pmf_exp(&tx(50), 50.0, 0.9).unwrap();
        let p_suc = p_suc_exp(&tx(50), 50.0, 0.9).unwrap();
        assert!((pmf.prob(1) - 0.1 / p_suc).abs() < 1e-15);
        assert!(pmf.normalization_error().abs() < 1e-14);
        let one = update_age_pmf_exp(&tx(1), 50.0, 0.3).unwrap();
        assert_eq!(one.probs, vec![1.0]);
        assert_eq!(update_age_mean_exp(&tx(1), 50.0, 0.3).unwrap(), 1.0);
        let sure = update_age_pmf_exp(&tx(50), 50.0, 0.0).unwrap();
        assert_eq!(sure.probs, vec![1.0]);
    }

    #[test]
    fn limits() {
        assert_eq!(update_age_limit(50.0, 200.0, 0.0), 1.0);
        assert_eq!(update_age_limit(50.0, 200.0, 0.5), 6.0);
    }
}
