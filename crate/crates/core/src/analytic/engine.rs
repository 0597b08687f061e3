use super::age::{age_mean_from, age_pmf_from};
use super::cycle::{cycle_mean_from, cycle_pmf_from, p_suc_from};
use super::{AgeCycleSummary, AnalyticOptions, Pmf};
use crate::arrivals::{ArrivalModel, RenewalQuery, RenewalTable};
use crate::config::{ProtocolParams, TxParams};
use crate::error::{Error, Result};

/// Age and cycle statistics for any arrival model through one precomputed
/// [`RenewalTable`]. A table built for `max_window` serves every W up to it and
/// every outage probability.
#[derive(Debug, Clone)]
pub struct GeneralEngine {
    rho: f64,
    e_sen: Option<f64>,
    e_tx: f64,
    max_window: u32,
    eps_tail: f64,
    table: RenewalTable,
}

impl GeneralEngine {
    pub fn new(a: &ArrivalModel, e_sen: f64, e_tx: f64, max_window: u32, opts: &AnalyticOptions) -> Result<Self> {
        Self::build(a, Some(e_sen), e_tx, max_window, opts)
    }

    /// A table with only what the update age needs.
    pub fn for_age(a: &ArrivalModel, e_tx: f64, max_window: u32, opts: &AnalyticOptions) -> Result<Self> {
        Self::build(a, None, e_tx, max_window, opts)
    }

    fn build(a: &ArrivalModel, e_sen: Option<f64>, e_tx: f64, max_window: u32, opts: &AnalyticOptions) -> Result<Self> {
        let w = max_window as usize;
        // ζ((n−1)E_T)(j) is read for j ≤ W − n, so levels 0..=W−n
        let mut queries: Vec<RenewalQuery> = (2..=w)
            .map(|n| RenewalQuery::levels((n - 1) as f64 * e_tx, w - n + 1))
            .collect();
        if let Some(es) = e_sen {
            queries.push(RenewalQuery::until_tail(e_tx));
            queries.push(RenewalQuery::until_tail(es));
            queries.push(RenewalQuery::until_tail(es + e_tx));
        }
        let table = RenewalTable::build(a, &queries, &opts.grid())?;
        Ok(GeneralEngine {
            rho: a.rho(),
            e_sen,
            e_tx,
            max_window,
            eps_tail: opts.eps_tail,
            table,
        })
    }

    pub fn table(&self) -> &RenewalTable {
        &self.table
    }

    fn tx(&self, window: u32) -> Result<TxParams> {
        if window == 0 || window > self.max_window {
            return Err(Error::NonPositive {
                field: "W",
                value: window as f64,
                expected: "between 1 and the engine's max_window",
            });
        }
        Ok(TxParams {
            window,
            e_tx: self.e_tx,
        })
    }

    fn params(&self, window: u32) -> Result<ProtocolParams> {
        let tx = self.tx(window)?;
        let e_sen = self
            .e_sen
            .ok_or_else(|| Error::Config("engine was built for the update age only".into()))?;
        Ok(ProtocolParams::new(tx.window, e_sen, tx.e_tx))
    }

    pub fn age_pmf(&self, window: u32, p_out: f64) -> Result<Pmf> {
        Ok(age_pmf_from(&self.table, &self.tx(window)?, p_out)?.0)
    }

    pub fn mean_age(&self, window: u32, p_out: f64) -> Result<f64> {
        age_mean_from(&self.table, &self.tx(window)?, p_out)
    }

    pub fn p_suc(&self, window: u32, p_out: f64) -> Result<f64> {
        Ok(age_pmf_from(&self.table, &self.tx(window)?, p_out)?.1)
    }

    pub fn cycle_pmf(&self, window: u32, p_out: f64) -> Result<Pmf> {
        cycle_pmf_from(&self.table, &self.params(window)?, p_out, self.eps_tail)
    }

    pub fn mean_cycle(&self, window: u32, p_out: f64) -> Result<f64> {
        cycle_mean_from(&self.table, &self.params(window)?, self.rho, p_out)
    }

    pub fn summary(&self, window: u32, p_out: f64) -> Result<AgeCycleSummary> {
        let params = self.params(window)?;
        Ok(AgeCycleSummary::new(
            p_suc_from(&self.table, &params, p_out)?,
            self.mean_age(window, p_out)?,
            self.mean_cycle(window, p_out)?,
            self.rho,
            &params,
            p_out,
        ))
    }
}
