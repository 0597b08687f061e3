//! Per-block energy arrival models, the post-transmission steady state and the
//! renewal quantities built on top of them.

mod grid;
mod poisson;
mod quadrature;
mod renewal;
mod tabulated;

pub use grid::{arrival_pdf, steady_state_pdf, GridDensity};
pub use poisson::{poisson_pmf, poisson_prefix, poisson_seq};
pub use renewal::{big_g, eh_count_pmf, g_i_density, GridOptions, RenewalQuery, RenewalTable};
pub use tabulated::TabulatedDensity;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{positive, Result};

/// Distribution of the energy harvested in one EHB, in μJ.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalModel {
    Deterministic { rho: f64 },
    Exponential { rho: f64 },
    Gamma { shape: f64, scale: f64 },
    Tabulated(TabulatedDensity),
}

impl ArrivalModel {
    /// Mean harvest per EHB.
    pub fn rho(&self) -> f64 {
        match self {
            ArrivalModel::Deterministic { rho } | ArrivalModel::Exponential { rho } => *rho,
            ArrivalModel::Gamma { shape, scale } => shape * scale,
            ArrivalModel::Tabulated(t) => t.mean(),
        }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            ArrivalModel::Deterministic { rho } | ArrivalModel::Exponential { rho } => {
                positive("rho", rho)?;
            }
            ArrivalModel::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)?;
            }
            // checked at construction
            ArrivalModel::Tabulated(_) => {}
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, ArrivalModel::Deterministic { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ArrivalModel::Deterministic { .. } => "det",
            ArrivalModel::Exponential { .. } => "exp",
            ArrivalModel::Gamma { .. } => "gamma",
            ArrivalModel::Tabulated(_) => "tab",
        }
    }

    /// Exponential arrivals are Gamma(1, ρ); the general pipeline treats them that way.
    fn gamma_params(&self) -> Option<(f64, f64)> {
        match *self {
            ArrivalModel::Exponential { rho } => Some((1.0, rho)),
            ArrivalModel::Gamma { shape, scale } => Some((shape, scale)),
            _ => None,
        }
    }

    /// Density f(x). Zero for the deterministic model, which has none.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            ArrivalModel::Deterministic { .. } => 0.0,
            ArrivalModel::Tabulated(t) => t.pdf(x),
            _ => {
                let (k, th) = self.gamma_params().unwrap();
                if x == 0.0 {
                    return match k.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => 1.0 / th,
                        _ => 0.0,
                    };
                }
                ((k - 1.0) * x.ln() - x / th - ln_gamma(k) - k * th.ln()).exp()
            }
        }
    }

    /// F(x) = P{X ≤ x}.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ArrivalModel::Deterministic { rho } => {
                if x >= *rho {
                    1.0
                } else {
                    0.0
                }
            }
            ArrivalModel::Exponential { rho } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / rho).exp_m1()
                }
            }
            ArrivalModel::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(*shape, x / scale)
                }
            }
            ArrivalModel::Tabulated(t) => t.cdf(x),
        }
    }

    /// 1 − F(x), computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            ArrivalModel::Exponential { rho } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / rho).exp()
                }
            }
            ArrivalModel::Gamma { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_ur(*shape, x / scale)
                }
            }
            ArrivalModel::Tabulated(t) => t.sf(x),
            ArrivalModel::Deterministic { .. } => 1.0 - self.cdf(x),
        }
    }

    /// ∫₀ˣ u f(u) du.
    pub fn partial_mean(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            ArrivalModel::Deterministic { rho } => {
                if x >= *rho {
                    *rho
                } else {
                    0.0
                }
            }
            ArrivalModel::Tabulated(t) => t.partial_mean(x),
            _ => {
                let (k, th) = self.gamma_params().unwrap();
                k * th * gamma_lr(k + 1.0, x / th)
            }
        }
    }

    /// ∫₀ˣ u² f(u) du; gamma family only.
    fn partial_second_moment(&self, x: f64) -> Option<f64> {
        let (k, th) = self.gamma_params()?;
        Some(if x <= 0.0 {
            0.0
        } else {
            k * (k + 1.0) * th * th * gamma_lr(k + 2.0, x / th)
        })
    }

    /// Steady-state density of the battery right after a TB: g(x) = (1 − F(x)) / ρ.
    pub fn stationary_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.sf(x) / self.rho()
    }

    /// ∫₀ˣ g(u) du = (x (1 − F(x)) + ∫₀ˣ u f(u) du) / ρ. For the deterministic
    /// model the post-TB battery is exactly empty.
    pub fn stationary_cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            ArrivalModel::Deterministic { .. } => 1.0,
            ArrivalModel::Exponential { rho } => -(-x / rho).exp_m1(),
            _ => ((x * self.sf(x) + self.partial_mean(x)) / self.rho()).min(1.0),
        }
    }

    /// Points where the density stops being smooth.
    fn breakpoints(&self) -> &[f64] {
        match self {
            ArrivalModel::Tabulated(t) => t.knots(),
            _ => &[],
        }
    }

    pub fn sampler(&self) -> ArrivalSampler {
        match self {
            ArrivalModel::Deterministic { rho } => ArrivalSampler::Constant(*rho),
            ArrivalModel::Exponential { rho } => {
                ArrivalSampler::Exp(Exp::new(1.0 / rho).expect("validated rho"))
            }
            ArrivalModel::Gamma { shape, scale } => {
                ArrivalSampler::Gamma(Gamma::new(*shape, *scale).expect("validated gamma"))
            }
            ArrivalModel::Tabulated(t) => ArrivalSampler::Tabulated(t.clone()),
        }
    }
}

/// Draws one EHB harvest at a time.
#[derive(Debug, Clone)]
pub enum ArrivalSampler {
    Constant(f64),
    Exp(Exp<f64>),
    Gamma(Gamma<f64>),
    Tabulated(TabulatedDensity),
}

impl ArrivalSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ArrivalSampler::Constant(x) => *x,
            ArrivalSampler::Exp(d) => d.sample(rng),
            ArrivalSampler::Gamma(d) => d.sample(rng),
            ArrivalSampler::Tabulated(t) => t.inverse_cdf(rng.random::<f64>()),
        }
    }
}

/// Smallest x (to a relative 1e-6) with `1 − cdf(x) ≤ tail`.
pub(crate) fn upper_quantile(cdf: impl Fn(f64) -> f64, tail: f64, start: f64) -> f64 {
    let mut hi = start.max(f64::MIN_POSITIVE);
    while 1.0 - cdf(hi) > tail {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::MAX;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if 1.0 - cdf(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
