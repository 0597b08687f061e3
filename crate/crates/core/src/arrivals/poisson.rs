//! Poisson pmfs for means into the thousands.
//!
//! Sequences are built by the ratio recurrence outward from the mode and then
//! normalized; evaluating each term as exp(−λ + i ln λ − ln i!) instead loses
//! about 1e−12 relative accuracy at λ ≈ 1000 to cancellation in the exponent.

use statrs::function::gamma::ln_gamma;

pub fn poisson_pmf(lambda: f64, i: usize) -> f64 {
    if lambda == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    (-lambda + i as f64 * lambda.ln() - ln_gamma(i as f64 + 1.0)).exp()
}

/// The first `len` values of the Poisson(λ) pmf.
pub fn poisson_prefix(lambda: f64, len: usize) -> Vec<f64> {
    let (mut p, _) = poisson_seq(lambda, 1e-300);
    p.resize(len, 0.0);
    p
}

/// Poisson(λ) pmf from 0 up to the first index past the mode whose remaining
/// tail is provably at most `tol`; returns the values and that tail bound.
pub fn poisson_seq(lambda: f64, tol: f64) -> (Vec<f64>, f64) {
    if lambda == 0.0 {
        return (vec![1.0], 0.0);
    }
    let mode = lambda.floor() as usize;
    let mut w = vec![0.0; mode + 1];
    w[mode] = 1.0;
    for i in (1..=mode).rev() {
        w[i - 1] = w[i] * i as f64 / lambda;
    }
    // unnormalized weights; the bound below is relative to w(mode) = 1
    let mut i = mode;
    let tail = loop {
        let next = i as f64 + 1.0;
        let w_next = w[i] * lambda / next;
        // P{X > i} ∝ Σ_{j>i} w_j ≤ w_{i+1} / (1 − λ/(i+2))
        let bound = w_next / (1.0 - lambda / (next + 1.0));
        if next > lambda && bound <= tol * 0.5 {
            break bound;
        }
        w.push(w_next);
        i += 1;
    };
    let total: f64 = w.iter().sum::<f64>() + tail;
    w.iter_mut().for_each(|x| *x /= total);
    (w, tail / total)
}
