use serde::Serialize;

/// A distribution over block counts `min_support, min_support + 1, …` with the
/// probability beyond the computed horizon kept in `tail_mass`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    pub min_support: u64,
    pub probs: Vec<f64>,
    pub tail_mass: f64,
    /// Σ k·p(k) over `probs`.
    pub mean: f64,
}

impl Pmf {
    /// Leading and trailing zeros are dropped. Defective inputs are accepted;
    /// see [`normalization_error`](Self::normalization_error).
    pub fn new(min_support: u64, probs: Vec<f64>, tail_mass: f64) -> Pmf {
        let first = probs.iter().position(|&p| p != 0.0);
        let (min_support, probs) = match first {
            None => (min_support, Vec::new()),
            Some(f) => {
                let last = probs.iter().rposition(|&p| p != 0.0).unwrap();
                (min_support + f as u64, probs[f..=last].to_vec())
            }
        };
        let mean = probs
            .iter()
            .enumerate()
            .map(|(j, p)| (min_support + j as u64) as f64 * p)
            .sum();
        Pmf {
            min_support,
            probs,
            tail_mass,
            mean,
        }
    }

    /// Entries of `dense` are probabilities of k = 0, 1, 2, ….
    pub fn from_dense(dense: Vec<f64>, tail_mass: f64) -> Pmf {
        Pmf::new(0, dense, tail_mass)
    }

    pub fn prob(&self, k: u64) -> f64 {
        if k < self.min_support {
            return 0.0;
        }
        self.probs
            .get((k - self.min_support) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// Last block count with stored probability.
    pub fn max_support(&self) -> u64 {
        self.min_support + self.probs.len().saturating_sub(1) as u64
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(j, &p)| (self.min_support + j as u64, p))
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Σ probs + tail_mass − 1.
    pub fn normalization_error(&self) -> f64 {
        self.mass() + self.tail_mass - 1.0
    }

    /// P{X ≤ k} over the stored entries.
    pub fn cdf(&self, k: u64) -> f64 {
        if k < self.min_support {
            return 0.0;
        }
        let n = ((k - self.min_support) as usize + 1).min(self.probs.len());
        self.probs[..n].iter().sum()
    }

    /// Mean of the stored entries after rescaling them to unit mass.
    pub fn conditional_mean(&self) -> f64 {
        self.mean / self.mass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trims_and_means() {
        let p = Pmf::from_dense(vec![0.0, 0.0, 0.25, 0.5, 0.25, 0.0], 0.0);
        assert_eq!(p.min_support, 2);
        assert_eq!(p.probs.len(), 3);
        assert_eq!(p.mean, 3.0);
        assert_eq!(p.prob(3), 0.5);
        assert_eq!(p.prob(7), 0.0);
        assert_eq!(p.cdf(3), 0.75);
        assert_eq!(p.max_support(), 4);
        assert_eq!(p.normalization_error(), 0.0);
    }
}
