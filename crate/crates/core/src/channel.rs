//! Outage probability of a Rayleigh-faded link.

use crate::config::{db_to_linear, dbm_to_watts};
use crate::error::{positive, probability, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelParams {
    Direct {
        p_out: f64,
    },
    /// Linear units throughout: meters, Watts, and a linear SNR threshold.
    Rayleigh {
        distance: f64,
        path_loss_exp: f64,
        noise_power: f64,
        snr_threshold: f64,
        rf_tx_power: f64,
        path_loss_factor: f64,
    },
}

impl ChannelParams {
    pub fn direct(p_out: f64) -> Result<Self> {
        probability("p_out", p_out)?;
        Ok(ChannelParams::Direct { p_out })
    }

    pub fn rayleigh(
        distance: f64,
        path_loss_exp: f64,
        noise_power: f64,
        snr_threshold: f64,
        rf_tx_power: f64,
        path_loss_factor: f64,
    ) -> Result<Self> {
        Ok(ChannelParams::Rayleigh {
            distance: positive("distance", distance)?,
            path_loss_exp: positive("path_loss_exp", path_loss_exp)?,
            noise_power: positive("noise_power", noise_power)?,
            snr_threshold: positive("snr_threshold", snr_threshold)?,
            rf_tx_power: positive("rf_tx_power", rf_tx_power)?,
            path_loss_factor: positive("path_loss_factor", path_loss_factor)?,
        })
    }

    /// 90 m, path-loss exponent 3, −100 dBm noise, 40 dB threshold, −5 dBm transmit power.
    pub fn reference_link() -> Self {
        ChannelParams::Rayleigh {
            distance: 90.0,
            path_loss_exp: 3.0,
            noise_power: dbm_to_watts(-100.0),
            snr_threshold: db_to_linear(40.0),
            rf_tx_power: dbm_to_watts(-5.0),
            path_loss_factor: 1.0,
        }
    }

    pub fn outage_probability(&self) -> f64 {
        match *self {
            ChannelParams::Direct { p_out } => p_out,
            ChannelParams::Rayleigh {
                distance,
                path_loss_exp,
                noise_power,
                snr_threshold,
                rf_tx_power,
                path_loss_factor,
            } => {
                let x = path_loss_factor * distance.powf(path_loss_exp) * noise_power * snr_threshold
                    / rf_tx_power;
                -(-x).exp_m1()
            }
        }
    }
}
