//! Protocol parameters, validation and unit conversions.

use std::path::Path;

use serde::Deserialize;

use crate::arrivals::{ArrivalModel, TabulatedDensity};
use crate::channel::ChannelParams;
use crate::error::{non_negative, positive, Error, Result};

/// Block duration used by the power-style inputs when none is given: 5 ms.
pub const DEFAULT_BLOCK_DURATION: f64 = 5e-3;

/// The protocol knobs. Energies are in μJ, the window in blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Retransmission horizon: the last admissible TB is the `window`-th block after the SB.
    pub window: u32,
    pub e_sen: f64,
    pub e_tx: f64,
    /// Seconds per block. Only used for labeling and power conversions.
    pub block_duration: f64,
}

impl ProtocolParams {
    pub fn new(window: u32, e_sen: f64, e_tx: f64) -> Self {
        ProtocolParams {
            window,
            e_sen,
            e_tx,
            block_duration: DEFAULT_BLOCK_DURATION,
        }
    }

    /// Energies from powers in mW: E [μJ] = P [mW] · T [s] · 1000.
    pub fn from_powers(window: u32, p_sen_mw: f64, p_tx_mw: f64, block_duration: f64) -> Self {
        ProtocolParams {
            window,
            e_sen: mw_times_seconds_to_uj(p_sen_mw, block_duration),
            e_tx: mw_times_seconds_to_uj(p_tx_mw, block_duration),
            block_duration,
        }
    }

    pub fn tx(&self) -> TxParams {
        TxParams {
            window: self.window,
            e_tx: self.e_tx,
        }
    }
}

/// The subset of [`ProtocolParams`] that the update age depends on. Sensing
/// cost is deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxParams {
    pub window: u32,
    pub e_tx: f64,
}

/// Parameters and arrival model that passed [`validate`].
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    params: ProtocolParams,
    arrivals: ArrivalModel,
}

impl ValidatedConfig {
    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn arrivals(&self) -> &ArrivalModel {
        &self.arrivals
    }

    pub fn rho(&self) -> f64 {
        self.arrivals.rho()
    }

    pub fn with_window(&self, window: u32) -> Result<ValidatedConfig> {
        validate(
            ProtocolParams {
                window,
                ..self.params
            },
            self.arrivals.clone(),
        )
    }
}

pub fn validate(params: ProtocolParams, arrivals: ArrivalModel) -> Result<ValidatedConfig> {
    if params.window == 0 {
        return Err(Error::NonPositive {
            field: "W",
            value: 0.0,
            expected: "an integer >= 1",
        });
    }
    non_negative("e_sen", params.e_sen)?;
    positive("e_tx", params.e_tx)?;
    positive("block_duration", params.block_duration)?;
    arrivals.check()?;
    if let ArrivalModel::Deterministic { rho } = arrivals {
        integer_multiple("e_sen", params.e_sen, rho)?;
        integer_multiple("e_tx", params.e_tx, rho)?;
    }
    Ok(ValidatedConfig { params, arrivals })
}

/// `value / rho` as an exact integer, or `NonIntegerMultiple`.
pub fn integer_multiple(field: &'static str, value: f64, rho: f64) -> Result<u64> {
    let ratio = value / rho;
    let rounded = ratio.round();
    if ratio.is_finite() && rounded >= 0.0 && (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        Ok(rounded as u64)
    } else {
        Err(Error::NonIntegerMultiple { field, value, rho })
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1000.0).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// mW over `seconds` expressed in μJ.
pub fn mw_times_seconds_to_uj(mw: f64, seconds: f64) -> f64 {
    mw * seconds * 1000.0
}

/// On-disk JSON configuration. Keys mirror the field names above; `"W"` is
/// accepted for `window`, and energies may be given as powers in mW.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(alias = "W")]
    pub window: Option<u32>,
    pub e_sen: Option<f64>,
    pub e_tx: Option<f64>,
    pub p_sen_mw: Option<f64>,
    pub p_tx_mw: Option<f64>,
    pub block_duration: Option<f64>,
    pub arrivals: Option<ArrivalSpec>,
    pub channel: Option<ChannelSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArrivalSpec {
    #[serde(alias = "det")]
    Deterministic { rho: f64 },
    #[serde(alias = "exp")]
    Exponential { rho: f64 },
    Gamma { shape: f64, scale: f64 },
    #[serde(alias = "tab")]
    Tabulated { density: String },
}

impl ArrivalSpec {
    /// Relative density paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<ArrivalModel> {
        Ok(match *self {
            ArrivalSpec::Deterministic { rho } => ArrivalModel::Deterministic { rho },
            ArrivalSpec::Exponential { rho } => ArrivalModel::Exponential { rho },
            ArrivalSpec::Gamma { shape, scale } => ArrivalModel::Gamma { shape, scale },
            ArrivalSpec::Tabulated { ref density } => {
                let path = match base {
                    Some(dir) => dir.join(density),
                    None => density.into(),
                };
                ArrivalModel::Tabulated(TabulatedDensity::from_csv_path(path)?)
            }
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub p_out: Option<f64>,
    pub d: Option<f64>,
    pub path_loss_exp: Option<f64>,
    pub noise_power: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub snr_threshold: Option<f64>,
    pub snr_threshold_db: Option<f64>,
    pub rf_tx_power: Option<f64>,
    pub rf_tx_power_dbm: Option<f64>,
    pub path_loss_factor: Option<f64>,
}

impl ChannelSpec {
    pub fn has_link_fields(&self) -> bool {
        self.d.is_some()
            || self.path_loss_exp.is_some()
            || self.noise_power.is_some()
            || self.noise_power_dbm.is_some()
            || self.snr_threshold.is_some()
            || self.snr_threshold_db.is_some()
            || self.rf_tx_power.is_some()
            || self.rf_tx_power_dbm.is_some()
            || self.path_loss_factor.is_some()
    }

    /// Missing link fields fall back to the reference deployment
    /// ([`ChannelParams::reference_link`]).
    pub fn build(&self) -> Result<ChannelParams> {
        if let Some(p) = self.p_out {
            if self.has_link_fields() {
                return Err(Error::ConflictingChannel);
            }
            return ChannelParams::direct(p);
        }
        let ChannelParams::Rayleigh {
            distance,
            path_loss_exp,
            noise_power,
            snr_threshold,
            rf_tx_power,
            path_loss_factor,
        } = ChannelParams::reference_link()
        else {
            unreachable!()
        };
        let noise_power = one_of("noise_power", self.noise_power, self.noise_power_dbm.map(dbm_to_watts))?
            .unwrap_or(noise_power);
        let snr_threshold = one_of("snr_threshold", self.snr_threshold, self.snr_threshold_db.map(db_to_linear))?
            .unwrap_or(snr_threshold);
        let rf_tx_power = one_of("rf_tx_power", self.rf_tx_power, self.rf_tx_power_dbm.map(dbm_to_watts))?
            .unwrap_or(rf_tx_power);
        ChannelParams::rayleigh(
            self.d.unwrap_or(distance),
            self.path_loss_exp.unwrap_or(path_loss_exp),
            noise_power,
            snr_threshold,
            rf_tx_power,
            self.path_loss_factor.unwrap_or(path_loss_factor),
        )
    }
}

fn one_of(field: &str, linear: Option<f64>, converted: Option<f64>) -> Result<Option<f64>> {
    match (linear, converted) {
        (Some(_), Some(_)) => Err(Error::Config(format!(
            "{field} given in both linear and logarithmic units"
        ))),
        (a, b) => Ok(a.or(b)),
    }
}

impl ConfigFile {
    pub fn from_json_str(s: &str) -> Result<ConfigFile> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ConfigFile> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Protocol parameters, if the file pins every required field.
    pub fn protocol(&self) -> Result<ProtocolParams> {
        let window = self
            .window
            .ok_or_else(|| Error::Config("missing W".into()))?;
        let block_duration = self.block_duration.unwrap_or(DEFAULT_BLOCK_DURATION);
        let e_sen = energy("e_sen", self.e_sen, self.p_sen_mw, block_duration)?;
        let e_tx = energy("e_tx", self.e_tx, self.p_tx_mw, block_duration)?;
        Ok(ProtocolParams {
            window,
            e_sen: e_sen.ok_or_else(|| Error::Config("missing e_sen or p_sen_mw".into()))?,
            e_tx: e_tx.ok_or_else(|| Error::Config("missing e_tx or p_tx_mw".into()))?,
            block_duration,
        })
    }
}

fn energy(field: &str, e: Option<f64>, p_mw: Option<f64>, t: f64) -> Result<Option<f64>> {
    match (e, p_mw) {
        (Some(_), Some(_)) => Err(Error::Config(format!("{field} given both as energy and power"))),
        (Some(e), None) => Ok(Some(e)),
        (None, Some(p)) => Ok(Some(mw_times_seconds_to_uj(p, t))),
        (None, None) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_reference_points() {
        assert_eq!(dbm_to_watts(0.0), 1e-3);
        assert!((dbm_to_watts(-100.0) - 1e-13).abs() < 1e-27);
        assert!((dbm_to_watts(-5.0) - 3.1622776601683794e-4).abs() < 1e-18);
    }

    #[test]
    fn powers_to_energies() {
        let p = ProtocolParams::from_powers(50, 50.0, 40.0, 5e-3);
        assert!((p.e_sen - 250.0).abs() < 1e-9);
        assert!((p.e_tx - 200.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_requires_multiples() {
        let det = ArrivalModel::Deterministic { rho: 50.0 };
        assert!(validate(ProtocolParams::new(50, 250.0, 200.0), det.clone()).is_ok());
        let err = validate(ProtocolParams::new(50, 130.0, 200.0), det).unwrap_err();
        assert!(matches!(err, Error::NonIntegerMultiple { field: "e_sen", .. }));
        let exp = ArrivalModel::Exponential { rho: 50.0 };
        assert!(validate(ProtocolParams::new(1, 0.0, 200.0), exp.clone()).is_ok());
        assert!(validate(ProtocolParams::new(0, 0.0, 200.0), exp.clone()).is_err());
        assert!(validate(ProtocolParams::new(5, 0.0, 0.0), exp).is_err());
    }

    #[test]
    fn config_file_roundtrip() {
        let cfg = ConfigFile::from_json_str(
            r#"{"W": 50, "p_sen_mw": 50, "e_tx": 200,
                "arrivals": {"model": "gamma", "shape": 0.05, "scale": 1000},
                "channel": {"noise_power_dbm": -100, "rf_tx_power_dbm": -5}}"#,
        )
        .unwrap();
        let p = cfg.protocol().unwrap();
        assert_eq!(p.window, 50);
        assert!((p.e_sen - 250.0).abs() < 1e-9);
        let ch = cfg.channel.unwrap().build().unwrap();
        assert!((ch.outage_probability() - 0.9002).abs() < 1e-3);
    }

    #[test]
    fn conflicting_channel() {
        let spec = ChannelSpec {
            p_out: Some(0.5),
            d: Some(10.0),
            ..Default::default()
        };
        assert!(matches!(spec.build(), Err(Error::ConflictingChannel)));
    }
}
