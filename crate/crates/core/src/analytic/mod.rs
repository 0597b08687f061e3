//! Exact pmfs, means and W → ∞ limits of the update age and update cycle.

pub mod age;
pub mod counts;
pub mod cycle;
mod engine;
mod pmf;

pub use age::{
    iota_seq, update_age_limit, update_age_mean_det, update_age_mean_exp, update_age_mean_gen,
    update_age_pmf_det, update_age_pmf_exp, update_age_pmf_gen,
};
pub use counts::{CountSource, DeterministicCounts, PoissonCounts};
pub use cycle::{
    update_cycle_limit, update_cycle_mean_det, update_cycle_mean_exp, update_cycle_mean_gen,
    update_cycle_pmf_det, update_cycle_pmf_exp, update_cycle_pmf_gen, vartheta_seq, zeta_seq,
};
pub use engine::GeneralEngine;
pub use pmf::Pmf;

use serde::Serialize;

use crate::arrivals::{ArrivalModel, GridOptions};
use crate::config::{ProtocolParams, ValidatedConfig};
use crate::error::{probability, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticOptions {
    /// Energy grid spacing in μJ; ρ/256 when `None`.
    pub grid_step: Option<f64>,
    pub max_grid_nodes: usize,
    /// Probability left out of cycle pmfs; sequences are cut at a tenth of it.
    pub eps_tail: f64,
    /// Send exponential arrivals through the grid instead of the Poisson forms.
    pub force_general: bool,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        AnalyticOptions {
            grid_step: None,
            max_grid_nodes: 1 << 22,
            eps_tail: 1e-9,
            force_general: false,
        }
    }
}

impl AnalyticOptions {
    pub fn grid(&self) -> GridOptions {
        GridOptions {
            step: self.grid_step,
            max_nodes: self.max_grid_nodes,
            tol: self.eps_tail / 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgeCycleSummary {
    pub p_suc: f64,
    pub mean_age: f64,
    pub mean_cycle: f64,
    pub limit_age: f64,
    pub limit_cycle: f64,
}

impl AgeCycleSummary {
    pub fn new(p_suc: f64, mean_age: f64, mean_cycle: f64, rho: f64, params: &ProtocolParams, p_out: f64) -> Self {
        AgeCycleSummary {
            p_suc,
            mean_age,
            mean_cycle,
            limit_age: update_age_limit(rho, params.e_tx, p_out),
            limit_cycle: update_cycle_limit(rho, params.e_sen, params.e_tx, p_out),
        }
    }
}

/// Which family of formulas produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Deterministic,
    Exponential,
    General,
}

pub fn route(cfg: &ValidatedConfig, opts: &AnalyticOptions) -> Route {
    match cfg.arrivals() {
        ArrivalModel::Deterministic { .. } => Route::Deterministic,
        ArrivalModel::Exponential { .. } if !opts.force_general => Route::Exponential,
        _ => Route::General,
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub route: Route,
    pub age: Pmf,
    pub cycle: Pmf,
    pub summary: AgeCycleSummary,
}

/// Age and cycle pmfs plus the summary, using the closed forms that fit the model.
pub fn analyze(cfg: &ValidatedConfig, p_out: f64, opts: &AnalyticOptions) -> Result<Analysis> {
    probability("p_out", p_out)?;
    let params = cfg.params();
    let tx = params.tx();
    let rho = cfg.rho();
    let route = route(cfg, opts);
    let (age, cycle, summary) = match route {
        Route::Deterministic => (
            update_age_pmf_det(&tx, rho, p_out)?,
            update_cycle_pmf_det(params, rho, p_out, opts.eps_tail)?,
            summarize(cfg, p_out, opts)?,
        ),
        Route::Exponential => (
            update_age_pmf_exp(&tx, rho, p_out)?,
            update_cycle_pmf_exp(params, rho, p_out, opts.eps_tail)?,
            summarize(cfg, p_out, opts)?,
        ),
        Route::General => {
            let engine = GeneralEngine::new(cfg.arrivals(), params.e_sen, params.e_tx, params.window, opts)?;
            (
                engine.age_pmf(params.window, p_out)?,
                engine.cycle_pmf(params.window, p_out)?,
                engine.summary(params.window, p_out)?,
            )
        }
    };
    Ok(Analysis {
        route,
        age,
        cycle,
        summary,
    })
}

/// Means, P_suc and limits without building the cycle pmf.
pub fn summarize(cfg: &ValidatedConfig, p_out: f64, opts: &AnalyticOptions) -> Result<AgeCycleSummary> {
    probability("p_out", p_out)?;
    let params = cfg.params();
    let tx = params.tx();
    let rho = cfg.rho();
    match route(cfg, opts) {
        Route::Deterministic => Ok(AgeCycleSummary::new(
            age::p_suc_det(&tx, rho, p_out)?,
            update_age_mean_det(&tx, rho, p_out)?,
            update_cycle_mean_det(params, rho, p_out)?,
            rho,
            params,
            p_out,
        )),
        Route::Exponential => Ok(AgeCycleSummary::new(
            age::p_suc_exp(&tx, rho, p_out)?,
            update_age_mean_exp(&tx, rho, p_out)?,
            update_cycle_mean_exp(params, rho, p_out)?,
            rho,
            params,
            p_out,
        )),
        Route::General => GeneralEngine::new(cfg.arrivals(), params.e_sen, params.e_tx, params.window, opts)?
            .summary(params.window, p_out),
    }
}
