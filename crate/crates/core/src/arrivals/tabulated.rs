use std::path::Path;

use crate::error::{Error, Result};

/// A piecewise-linear density sampled at `0, h, 2h, …`, zero past the last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    step: f64,
    values: Vec<f64>,
    knots: Vec<f64>,
    cum_mass: Vec<f64>,
    cum_mean: Vec<f64>,
}

impl TabulatedDensity {
    /// Rejects densities whose trapezoid integral is not 1 within 1e-9.
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidDensity(format!("step must be > 0, got {step}")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidDensity("need at least two samples".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!("negative or non-finite value {v}")));
        }
        let knots: Vec<f64> = (0..values.len()).map(|j| j as f64 * step).collect();
        let mut cum_mass = vec![0.0; values.len()];
        let mut cum_mean = vec![0.0; values.len()];
        for j in 1..values.len() {
            cum_mass[j] = cum_mass[j - 1] + 0.5 * step * (values[j - 1] + values[j]);
            cum_mean[j] = cum_mean[j - 1] + cell_moment(knots[j - 1], values[j - 1], values[j], step, step);
        }
        let total = cum_mass[values.len() - 1];
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!("integrates to {total}, not 1")));
        }
        Ok(TabulatedDensity {
            step,
            values,
            knots,
            cum_mass,
            cum_mean,
        })
    }

    /// Same as [`new`](Self::new) after scaling the samples to unit area.
    pub fn normalized(step: f64, mut values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n >= 2 {
            let area = step * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]));
            if area > 0.0 {
                values.iter_mut().for_each(|v| *v /= area);
            }
        }
        Self::new(step, values)
    }

    /// Two columns `energy_uJ, density_per_uJ`; energies must start at 0 and be
    /// evenly spaced. A non-numeric first row is taken as a header; `#` lines are comments.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidDensity(e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::InvalidDensity(format!("row {}: expected 2 columns", row + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if row == 0 => continue,
                _ => return Err(Error::InvalidDensity(format!("row {}: not numeric", row + 1))),
            }
        }
        if xs.len() < 2 {
            return Err(Error::InvalidDensity("need at least two samples".into()));
        }
        let step = xs[1] - xs[0];
        for (j, x) in xs.iter().enumerate() {
            if (x - j as f64 * step).abs() > 1e-9 * step.max(1.0) * (j.max(1) as f64) {
                return Err(Error::InvalidDensity(format!(
                    "energies must be 0, h, 2h, ...; row {} has {x}",
                    j + 1
                )));
            }
        }
        Self::new(step, ys)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn support_end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        *self.cum_mean.last().unwrap()
    }

    /// Cell index and offset into it, or None past the support.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if x < 0.0 || x > self.support_end() {
            return None;
        }
        let j = ((x / self.step) as usize).min(self.values.len() - 2);
        Some((j, x - self.knots[j]))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((j, t)) => self.values[j] + (self.values[j + 1] - self.values[j]) * t / self.step,
            None => 0.0,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x > self.support_end() {
            return 1.0;
        }
        match self.locate(x) {
            Some((j, t)) => {
                let (a, b) = (self.values[j], self.values[j + 1]);
                self.cum_mass[j] + a * t + (b - a) * t * t / (2.0 * self.step)
            }
            None => 0.0,
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x > self.support_end() {
            return 0.0;
        }
        match self.locate(x) {
            // area to the right of x, summed from the end to avoid 1 − F
            Some((j, t)) => {
                let right_of_cell = self.cum_mass[self.values.len() - 1] - self.cum_mass[j + 1];
                let (a, b) = (self.values[j], self.values[j + 1]);
                let cell = 0.5 * self.step * (a + b);
                let left_part = a * t + (b - a) * t * t / (2.0 * self.step);
                (right_of_cell + cell - left_part).max(0.0)
            }
            None => 1.0,
        }
    }

    pub fn partial_mean(&self, x: f64) -> f64 {
        if x > self.support_end() {
            return self.mean();
        }
        match self.locate(x) {
            Some((j, t)) => {
                self.cum_mean[j] + cell_moment(self.knots[j], self.values[j], self.values[j + 1], self.step, t)
            }
            None => 0.0,
        }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let total = *self.cum_mass.last().unwrap();
        let u = u * total;
        // first cell whose right edge carries cumulative mass above u
        let j = self.cum_mass.partition_point(|&c| c <= u).clamp(1, self.values.len() - 1) - 1;
        let r = u - self.cum_mass[j];
        let a = self.values[j];
        let slope = (self.values[j + 1] - a) / self.step;
        let disc = (a * a + 2.0 * slope * r).max(0.0);
        let denom = a + disc.sqrt();
        let t = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        self.knots[j] + t.clamp(0.0, self.step)
    }
}

/// ∫ u (a + (b − a)(u − x0)/h) du over [x0, x0 + tau].
fn cell_moment(x0: f64, a: f64, b: f64, h: f64, tau: f64) -> f64 {
    let s = (b - a) / h;
    x0 * a * tau + (x0 * s + a) * tau * tau / 2.0 + s * tau * tau * tau / 3.0
}
