use rayon::prelude::*;

use super::quadrature::for_each_point;
use super::{upper_quantile, ArrivalModel};

/// Default grid spacing as a fraction of ρ.
pub const DEFAULT_STEPS_PER_RHO: f64 = 256.0;

/// Tail probability left off the standalone densities.
const SUPPORT_TAIL: f64 = 1e-12;

/// A density on the nodes `0, Δ, 2Δ, …`.
///
/// Node `j` carries the integral of the continuous density against the hat
/// function centred on `jΔ` (width 2Δ). The node masses preserve both total mass
/// and mean, so sums of independent variables stay unbiased under discrete
/// convolution. `values` are masses divided by Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub step: f64,
    pub values: Vec<f64>,
    pub truncation_mass: f64,
}

impl GridDensity {
    pub fn from_masses(step: f64, masses: &[f64], truncation_mass: f64) -> Self {
        GridDensity {
            step,
            values: masses.iter().map(|m| m / step).collect(),
            truncation_mass,
        }
    }

    pub fn masses(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.step).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.step * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        let s: f64 = self.values.iter().enumerate().map(|(j, v)| j as f64 * v).sum();
        s * self.step * self.step
    }

    /// Cumulative mass below `x`, see [`cdf_from_masses`].
    pub fn cdf(&self, x: f64) -> f64 {
        cdf_from_masses(&self.masses(), self.step, x)
    }
}

/// Cumulative mass at `x`: a node's own mass counts half, since its hat is
/// split evenly around it; between nodes the cdf is interpolated linearly.
/// At `x = 0` it is exactly 0.
pub(crate) fn cdf_from_masses(masses: &[f64], step: f64, x: f64) -> f64 {
    if x <= 0.0 || masses.is_empty() {
        return 0.0;
    }
    let pos = x / step;
    let j = pos.floor() as usize;
    let frac = pos - j as f64;
    let below: f64 = masses.iter().take(j).sum();
    let at = |k: usize| masses.get(k).copied().unwrap_or(0.0);
    let c_j = if j == 0 { 0.0 } else { below + 0.5 * at(j) };
    if frac < 1e-9 {
        return c_j;
    }
    let c_next = below + at(j) + 0.5 * at(j + 1);
    c_j + frac * (c_next - c_j)
}

/// Hat-function masses of `h` on `nodes` nodes spaced by `step`. Cells are split
/// at `breaks` so piecewise-polynomial densities are integrated exactly. The first
/// cell can be supplied in closed form as `[left, right]` node shares.
pub(crate) fn hat_masses(
    nodes: usize,
    step: f64,
    h: impl Fn(f64) -> f64 + Sync,
    breaks: &[f64],
    first: Option<[f64; 2]>,
) -> Vec<f64> {
    if nodes == 0 {
        return Vec::new();
    }
    let cells: Vec<[f64; 2]> = (0..nodes - 1)
        .into_par_iter()
        .map(|c| {
            if c == 0 {
                if let Some(pair) = first {
                    return pair;
                }
            }
            let a = c as f64 * step;
            let b = a + step;
            let lo = breaks.partition_point(|&x| x <= a);
            let hi = breaks.partition_point(|&x| x < b);
            let mut edges = Vec::with_capacity(2 + hi - lo);
            edges.push(a);
            edges.extend_from_slice(&breaks[lo..hi]);
            edges.push(b);
            let (mut left, mut right) = (0.0, 0.0);
            for piece in edges.windows(2) {
                for_each_point(piece[0], piece[1], |x, w| {
                    let v = w * h(x);
                    left += v * (b - x);
                    right += v * (x - a);
                });
            }
            [left / step, right / step]
        })
        .collect();
    let mut m = vec![0.0; nodes];
    for (c, [l, r]) in cells.into_iter().enumerate() {
        m[c] += l;
        m[c + 1] += r;
    }
    m
}

pub(crate) fn default_step(a: &ArrivalModel) -> f64 {
    a.rho() / DEFAULT_STEPS_PER_RHO
}

/// Hat masses of the arrival density f.
pub(crate) fn f_masses(a: &ArrivalModel, step: f64, nodes: usize) -> Vec<f64> {
    let first = a.gamma_params().map(|_| {
        let right = a.partial_mean(step) / step;
        [a.cdf(step) - right, right]
    });
    hat_masses(nodes, step, |x| a.pdf(x), a.breakpoints(), first)
}

/// Hat masses of the steady-state density g = (1 − F)/ρ.
pub(crate) fn g_masses(a: &ArrivalModel, step: f64, nodes: usize) -> Vec<f64> {
    let rho = a.rho();
    let first = a.partial_second_moment(step).map(|pm2| {
        let s = a.sf(step);
        let mass = (step * s + a.partial_mean(step)) / rho;
        let right = (step * step * s / 2.0 + pm2 / 2.0) / rho / step;
        [mass - right, right]
    });
    hat_masses(nodes, step, |x| a.sf(x) / rho, a.breakpoints(), first)
}

fn nodes_to_cover(x: f64, step: f64) -> usize {
    (x / step).ceil() as usize + 2
}

/// The arrival density f on a grid reaching its 1 − 1e−12 quantile.
/// `step` defaults to ρ/256. The deterministic model becomes a unit mass at ρ,
/// which needs ρ to be a multiple of the step.
pub fn arrival_pdf(a: &ArrivalModel, step: Option<f64>) -> GridDensity {
    let step = step.unwrap_or_else(|| default_step(a));
    if let ArrivalModel::Deterministic { rho } = *a {
        let j = (rho / step).round() as usize;
        let mut m = vec![0.0; j + 1];
        m[j] = 1.0;
        return GridDensity::from_masses(step, &m, 0.0);
    }
    let end = match a {
        ArrivalModel::Tabulated(t) => t.support_end(),
        _ => upper_quantile(|x| a.cdf(x), SUPPORT_TAIL, a.rho()),
    };
    let nodes = nodes_to_cover(end, step);
    let m = f_masses(a, step, nodes);
    let covered = (nodes - 1) as f64 * step;
    GridDensity::from_masses(step, &m, a.sf(covered))
}

/// Steady-state density g of the battery right after a TB, on a grid reaching
/// its 1 − 1e−12 quantile. For deterministic arrivals the battery is empty after
/// every TB, so the result is a unit mass at 0.
pub fn steady_state_pdf(a: &ArrivalModel, step: Option<f64>) -> GridDensity {
    let step = step.unwrap_or_else(|| default_step(a));
    if a.is_deterministic() {
        return GridDensity::from_masses(step, &[1.0], 0.0);
    }
    let end = match a {
        ArrivalModel::Tabulated(t) => t.support_end(),
        _ => upper_quantile(|x| a.stationary_cdf(x), SUPPORT_TAIL, a.rho()),
    };
    let nodes = nodes_to_cover(end, step);
    let m = g_masses(a, step, nodes);
    let covered = (nodes - 1) as f64 * step;
    GridDensity::from_masses(step, &m, (1.0 - a.stationary_cdf(covered)).max(0.0))
}
