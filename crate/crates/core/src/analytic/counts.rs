//! Sources of ζ(𝓔), the pmf of the number of EHBs needed after a TB to gather
//! energy 𝓔.

use crate::arrivals::{poisson_prefix, poisson_seq, RenewalTable};
use crate::config::integer_multiple;
use crate::error::Result;

pub trait CountSource {
    /// ζ(energy)(i) for i in `0..len`.
    fn zeta_prefix(&self, energy: f64, len: usize) -> Result<Vec<f64>>;

    /// ζ(energy) until the remaining mass is negligible, and that remaining mass.
    fn zeta(&self, energy: f64) -> Result<(Vec<f64>, f64)>;
}

/// Every EHB brings exactly ρ: a point mass at 𝓔/ρ.
#[derive(Debug, Clone, Copy)]
pub struct DeterministicCounts {
    pub rho: f64,
}

impl CountSource for DeterministicCounts {
    fn zeta_prefix(&self, energy: f64, len: usize) -> Result<Vec<f64>> {
        let (z, _) = self.zeta(energy)?;
        let mut out = vec![0.0; len];
        let n = z.len().min(len);
        out[..n].copy_from_slice(&z[..n]);
        Ok(out)
    }

    fn zeta(&self, energy: f64) -> Result<(Vec<f64>, f64)> {
        let k = integer_multiple("energy", energy, self.rho)? as usize;
        let mut z = vec![0.0; k + 1];
        z[k] = 1.0;
        Ok((z, 0.0))
    }
}

/// Exponential arrivals: the count is Poisson(𝓔/ρ).
#[derive(Debug, Clone, Copy)]
pub struct PoissonCounts {
    pub rho: f64,
    pub tol: f64,
}

impl CountSource for PoissonCounts {
    fn zeta_prefix(&self, energy: f64, len: usize) -> Result<Vec<f64>> {
        Ok(poisson_prefix(energy / self.rho, len))
    }

    fn zeta(&self, energy: f64) -> Result<(Vec<f64>, f64)> {
        Ok(poisson_seq(energy / self.rho, self.tol))
    }
}

impl CountSource for RenewalTable {
    fn zeta_prefix(&self, energy: f64, len: usize) -> Result<Vec<f64>> {
        let (mut z, _) = RenewalTable::zeta(self, energy)?;
        if z.len() < len && energy > 0.0 {
            // past the recorded levels only an until-tail query may be read
            self.big_g(len as i64 - 1, energy)?;
        }
        z.resize(len, 0.0);
        Ok(z)
    }

    fn zeta(&self, energy: f64) -> Result<(Vec<f64>, f64)> {
        RenewalTable::zeta(self, energy)
    }
}
