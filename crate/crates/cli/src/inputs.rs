//! Flags and config files resolved into one set of model inputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use harvest_delay::config::{mw_times_seconds_to_uj, ArrivalSpec, ChannelSpec, ConfigFile, DEFAULT_BLOCK_DURATION};
use harvest_delay::{validate, AnalyticOptions, ChannelParams, Error, ProtocolParams, Result, ValidatedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    #[value(alias = "deterministic")]
    Det,
    #[value(alias = "exponential")]
    Exp,
    Gamma,
    #[value(alias = "tabulated")]
    Tab,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// JSON config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Energy arrival model [default: exp].
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Mean harvest per block, μJ [default: 50].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Gamma shape [default: 0.05].
    #[arg(long)]
    pub shape: Option<f64>,
    /// Gamma scale, μJ [default: rho/shape].
    #[arg(long)]
    pub scale: Option<f64>,
    /// CSV density for `--model tab`.
    #[arg(long)]
    pub density: Option<PathBuf>,
    /// Retransmission window W in blocks [default: 50].
    #[arg(long = "w", visible_alias = "window")]
    pub window: Option<u32>,
    /// Sensing energy E_S, μJ [default: 250].
    #[arg(long)]
    pub esen: Option<f64>,
    /// Transmission energy E_T, μJ [default: 200].
    #[arg(long)]
    pub etx: Option<f64>,
    /// Sensing power, mW; E_S = P·T.
    #[arg(long = "psen-mw")]
    pub psen_mw: Option<f64>,
    /// Transmit power, mW; E_T = P·T.
    #[arg(long = "ptx-mw")]
    pub ptx_mw: Option<f64>,
    /// Block duration T, seconds [default: 0.005].
    #[arg(long)]
    pub block_duration: Option<f64>,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Energy grid spacing for general arrivals, μJ [default: rho/256].
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Probability mass allowed outside emitted cycle pmfs.
    #[arg(long, default_value_t = 1e-9)]
    pub eps_tail: f64,
    /// Push exponential arrivals through the general grid pipeline.
    #[arg(long)]
    pub force_general: bool,
}

/// Either `--pout` or the Rayleigh link flags; unset link flags take the
/// reference deployment values.
#[derive(Debug, Clone, Default, Args)]
pub struct ChannelArgs {
    /// Outage probability of one transmission.
    #[arg(long)]
    pub pout: Option<f64>,
    /// Link distance, m [default: 90].
    #[arg(long)]
    pub distance: Option<f64>,
    /// Path-loss exponent [default: 3].
    #[arg(long)]
    pub path_loss_exp: Option<f64>,
    /// Noise power, dBm [default: -100].
    #[arg(long, allow_negative_numbers = true)]
    pub noise_dbm: Option<f64>,
    /// SNR threshold, dB [default: 40].
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// RF transmit power, dBm [default: -5].
    #[arg(long, allow_negative_numbers = true)]
    pub prf_dbm: Option<f64>,
    /// Path-loss factor [default: 1].
    #[arg(long)]
    pub path_loss_factor: Option<f64>,
}

impl ChannelArgs {
    fn any(&self) -> bool {
        self.pout.is_some()
            || self.distance.is_some()
            || self.path_loss_exp.is_some()
            || self.noise_dbm.is_some()
            || self.snr_db.is_some()
            || self.prf_dbm.is_some()
            || self.path_loss_factor.is_some()
    }

    fn spec(&self) -> ChannelSpec {
        ChannelSpec {
            p_out: self.pout,
            d: self.distance,
            path_loss_exp: self.path_loss_exp,
            noise_power_dbm: self.noise_dbm,
            snr_threshold_db: self.snr_db,
            rf_tx_power_dbm: self.prf_dbm,
            path_loss_factor: self.path_loss_factor,
            ..Default::default()
        }
    }
}

/// Everything a run depends on, before validation.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub window: u32,
    pub e_sen: f64,
    pub e_tx: f64,
    pub block_duration: f64,
    pub arrivals: ArrivalSpec,
    pub density_base: Option<PathBuf>,
    pub channel: ChannelSpec,
    pub opts: AnalyticOptions,
}

pub struct Built {
    pub cfg: ValidatedConfig,
    pub channel: ChannelParams,
    pub p_out: f64,
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<Inputs> {
        let (file, base) = match &self.config {
            Some(p) => (ConfigFile::load(p)?, p.parent().map(Path::to_path_buf)),
            None => (ConfigFile::default(), None),
        };
        let block_duration = self.block_duration.or(file.block_duration).unwrap_or(DEFAULT_BLOCK_DURATION);
        let e_sen = energy("sensing", self.esen, self.psen_mw, file.e_sen, file.p_sen_mw, block_duration)?.unwrap_or(250.0);
        let e_tx = energy("transmit", self.etx, self.ptx_mw, file.e_tx, file.p_tx_mw, block_duration)?.unwrap_or(200.0);
        let from_file = file.arrivals.clone();
        let kind = self.model.or(match &from_file {
            Some(ArrivalSpec::Deterministic { .. }) => Some(ModelKind::Det),
            Some(ArrivalSpec::Exponential { .. }) => Some(ModelKind::Exp),
            Some(ArrivalSpec::Gamma { .. }) => Some(ModelKind::Gamma),
            Some(ArrivalSpec::Tabulated { .. }) => Some(ModelKind::Tab),
            None => None,
        });
        let file_rho = match &from_file {
            Some(ArrivalSpec::Deterministic { rho }) | Some(ArrivalSpec::Exponential { rho }) => Some(*rho),
            Some(ArrivalSpec::Gamma { shape, scale }) => Some(shape * scale),
            _ => None,
        };
        let (arrivals, density_base) = match kind.unwrap_or(ModelKind::Exp) {
            ModelKind::Det => (ArrivalSpec::Deterministic { rho: self.rho.or(file_rho).unwrap_or(50.0) }, None),
            ModelKind::Exp => (ArrivalSpec::Exponential { rho: self.rho.or(file_rho).unwrap_or(50.0) }, None),
            ModelKind::Gamma => {
                let (fs, fc) = match from_file {
                    Some(ArrivalSpec::Gamma { shape, scale }) => (Some(shape), Some(scale)),
                    _ => (None, None),
                };
                let shape = self.shape.or(fs).unwrap_or(0.05);
                let scale = match (self.scale, self.rho) {
                    (Some(_), Some(_)) => return Err(Error::Config("give --scale or --rho for gamma, not both".into())),
                    (Some(s), None) => s,
                    (None, Some(r)) => r / shape,
                    (None, None) => fc.unwrap_or(50.0 / shape),
                };
                (ArrivalSpec::Gamma { shape, scale }, None)
            }
            ModelKind::Tab => match (&self.density, from_file) {
                (Some(p), _) => (ArrivalSpec::Tabulated { density: p.display().to_string() }, None),
                (None, Some(spec @ ArrivalSpec::Tabulated { .. })) => (spec, base.clone()),
                _ => return Err(Error::Config("--model tab needs --density".into())),
            },
        };
        let channel = if self.channel.any() { self.channel.spec() } else { file.channel.clone().unwrap_or_default() };
        Ok(Inputs {
            window: self.window.or(file.window).unwrap_or(50),
            e_sen,
            e_tx,
            block_duration,
            arrivals,
            density_base,
            channel,
            opts: AnalyticOptions {
                grid_step: self.grid_step,
                eps_tail: self.eps_tail,
                force_general: self.force_general,
                ..Default::default()
            },
        })
    }
}

fn energy(what: &str, e: Option<f64>, p: Option<f64>, fe: Option<f64>, fp: Option<f64>, t: f64) -> Result<Option<f64>> {
    match (e, p) {
        (Some(_), Some(_)) => Err(Error::Config(format!("{what} cost given both as energy and as power"))),
        (Some(e), None) => Ok(Some(e)),
        (None, Some(p)) => Ok(Some(mw_times_seconds_to_uj(p, t))),
        (None, None) => match (fe, fp) {
            (Some(_), Some(_)) => Err(Error::Config(format!("{what} cost given both as energy and as power"))),
            (Some(e), None) => Ok(Some(e)),
            (None, p) => Ok(p.map(|p| mw_times_seconds_to_uj(p, t))),
        },
    }
}

impl Inputs {
    pub fn build(&self) -> Result<Built> {
        let params = ProtocolParams {
            window: self.window,
            e_sen: self.e_sen,
            e_tx: self.e_tx,
            block_duration: self.block_duration,
        };
        let arrivals = self.arrivals.build(self.density_base.as_deref())?;
        let cfg = validate(params, arrivals)?;
        let channel = self.channel.build()?;
        let p_out = channel.outage_probability();
        Ok(Built { cfg, channel, p_out })
    }

    /// `#`-prefixed header lines, excluding the command line.
    pub fn describe(&self, b: &Built) -> String {
        let mut s = String::new();
        let model = match &self.arrivals {
            ArrivalSpec::Deterministic { rho } => format!("deterministic rho={rho}"),
            ArrivalSpec::Exponential { rho } => format!("exponential rho={rho}"),
            ArrivalSpec::Gamma { shape, scale } => format!("gamma shape={shape} scale={scale} rho={}", shape * scale),
            ArrivalSpec::Tabulated { density } => format!("tabulated density={density} rho={}", b.cfg.rho()),
        };
        let _ = writeln!(s, "# arrivals: {model}");
        let _ = writeln!(
            s,
            "# protocol: W={} e_sen={} e_tx={} block_duration={}",
            self.window, self.e_sen, self.e_tx, self.block_duration
        );
        let channel = match b.channel {
            ChannelParams::Direct { p_out } => format!("direct p_out={p_out}"),
            ChannelParams::Rayleigh {
                distance,
                path_loss_exp,
                noise_power,
                snr_threshold,
                rf_tx_power,
                path_loss_factor,
            } => format!(
                "rayleigh d={distance} path_loss_exp={path_loss_exp} noise_power={noise_power} snr_threshold={snr_threshold} rf_tx_power={rf_tx_power} path_loss_factor={path_loss_factor}"
            ),
        };
        let _ = writeln!(s, "# channel: {channel}");
        let _ = writeln!(s, "# p_out: {}", b.p_out);
        let step = match self.opts.grid_step {
            Some(d) => d.to_string(),
            None => format!("{}", b.cfg.rho() / 256.0),
        };
        let _ = writeln!(s, "# grid_step: {step} eps_tail: {} force_general: {}", self.opts.eps_tail, self.opts.force_general);
        s
    }
}
