//! Uncertainty on the perfect-fidelity fraction, and fidelity histograms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_POSTERIOR_BINS: usize = 10_001;
pub const DEFAULT_HISTOGRAM_BINS: usize = 100;

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// `sqrt(p(1−p)/n)`.
pub fn binomial_sigma(p: f64, n_samples: u64) -> Result<f64> {
    check_probability(p)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    Ok((p * (1.0 - p) / n_samples as f64).sqrt())
}

/// Probability of at least one success in `n_trial` independent attempts.
pub fn success_probability(p: f64, n_trial: u64) -> Result<f64> {
    check_probability(p)?;
    Ok(1.0 - (1.0 - p).powf(n_trial as f64))
}

/// Posterior over the success probability on a uniform grid, flat prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn bayes_posterior(n_perfect: u64, n_samples: u64, bins: usize) -> Result<Posterior> {
    if n_perfect > n_samples {
        return Err(Error::InvalidArgument(format!(
            "{n_perfect} successes out of {n_samples} samples"
        )));
    }
    if bins < 2 {
        return Err(Error::InvalidArgument("posterior needs at least 2 bins".into()));
    }
    let k = n_perfect as f64;
    let fails = (n_samples - n_perfect) as f64;
    let grid: Vec<f64> = (0..bins).map(|i| i as f64 / (bins - 1) as f64).collect();
    // log-likelihood up to the binomial coefficient, which normalization removes
    let xlogy = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * y.ln() };
    let logs: Vec<f64> = grid.iter().map(|&p| xlogy(k, p) + xlogy(fails, 1.0 - p)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Posterior { grid, weights })
}

impl Posterior {
    pub fn mode(&self) -> f64 {
        self.grid[self.mode_index()]
    }

    fn mode_index(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    pub fn mean(&self) -> f64 {
        self.grid.iter().zip(&self.weights).map(|(p, w)| p * w).sum()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.grid.len() - 1) as f64
    }

    /// `p,weight` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,weight\n");
        for (p, w) in self.grid.iter().zip(&self.weights) {
            let _ = writeln!(out, "{p},{w:e}");
        }
        out
    }
}

/// Lower and upper ends of the error bar: the outermost grid points on each
/// side of the mode where the peak-normalized posterior is still at least
/// `1/√e`. A side without a crossing is clamped to 0 or 1.
pub fn error_bars(posterior: &Posterior) -> (f64, f64) {
    let mode = posterior.mode_index();
    let peak = posterior.weights[mode];
    let level = (-0.5f64).exp() * peak;
    let w = &posterior.weights;
    let mut lo = mode;
    while lo > 0 && w[lo - 1] >= level {
        lo -= 1;
    }
    let mut hi = mode;
    while hi + 1 < w.len() && w[hi + 1] >= level {
        hi += 1;
    }
    let lo = if lo == 0 { 0.0 } else { posterior.grid[lo] };
    let last = w.len() - 1;
    let hi = if hi == last { 1.0 } else { posterior.grid[hi] };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of the mass held by the `k` fullest bins.
    pub fn top_k_mass(&self, k: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let mut c = self.counts.clone();
        c.sort_unstable_by(|a, b| b.cmp(a));
        c.iter().take(k).sum::<u64>() as f64 / total as f64
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// `bin_center,count` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let center = 0.5 * (self.bin_edges[i] + self.bin_edges[i + 1]);
            let _ = writeln!(out, "{center},{c}");
        }
        out
    }
}

/// Uniform-width histogram over [0, 1]; values are clamped into range and a
/// value of exactly 1 lands in the last bin.
pub fn fidelity_histogram(fidelities: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least 1 bin".into()));
    }
    if let Some(bad) = fidelities.iter().find(|f| !(-1e-12..=1.0 + 1e-12).contains(*f)) {
        return Err(Error::InvalidArgument(format!("fidelity {bad} outside [0, 1]")));
    }
    let bin_edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let mut counts = vec![0u64; bins];
    for f in fidelities {
        let v = f.clamp(0.0, 1.0);
        let idx = ((v * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram { bin_edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::RngSeed;
    use rand::Rng;
    use rand_distr::{Binomial, Distribution};

    #[test]
    fn sigma_values() {
        assert!((binomial_sigma(0.5, 100).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(binomial_sigma(0.0, 7).unwrap(), 0.0);
        assert!(binomial_sigma(1.2, 10).is_err());
        assert!(binomial_sigma(0.5, 0).is_err());
    }

    #[test]
    fn sigma_matches_simulated_binomial() {
        let sigma = binomial_sigma(0.08, 100).unwrap();
        assert!((sigma - 0.027129).abs() < 1e-6);
        let mut rng = RngSeed::new(2024, 0).rng();
        let dist = Binomial::new(100, 0.08).unwrap();
        let draws = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let x = dist.sample(&mut rng) as f64 / 100.0;
            s += x;
            s2 += x * x;
        }
        let mean = s / draws as f64;
        let sd = (s2 / draws as f64 - mean * mean).sqrt();
        assert!((sd - sigma).abs() / sigma < 0.01, "{sd} vs {sigma}");
    }

    #[test]
    fn success_probability_values() {
        assert_eq!(success_probability(0.5, 1).unwrap(), 0.5);
        assert!((success_probability(0.94, 2).unwrap() - 0.9964).abs() < 1e-12);
        assert_eq!(success_probability(0.3, 0).unwrap(), 0.0);
    }

    #[test]
    fn success_probability_matches_simulation() {
        let (p, n) = (0.26, 5);
        let mut rng = RngSeed::new(77, 0).rng();
        let runs = 1_000_000;
        let hits = (0..runs)
            .filter(|_| (0..n).any(|_| rng.random::<f64>() < p))
            .count();
        let sim = hits as f64 / runs as f64;
        assert!((sim - success_probability(p, n).unwrap()).abs() < 0.002);
    }

    #[test]
    fn success_probability_is_monotone() {
        let ps = [0.0, 0.1, 0.26, 0.5, 0.9, 1.0];
        for w in ps.windows(2) {
            for n in 0..10 {
                assert!(success_probability(w[0], n).unwrap() <= success_probability(w[1], n).unwrap());
                assert!(success_probability(w[0], n).unwrap() <= success_probability(w[0], n + 1).unwrap());
            }
        }
        for &p in &ps {
            assert!((success_probability(p, 1).unwrap() - p).abs() < 1e-15);
        }
    }

    #[test]
    fn posterior_shape() {
        let post = bayes_posterior(0, 100, DEFAULT_POSTERIOR_BINS).unwrap();
        assert_eq!(post.mode(), 0.0);
        assert!((post.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let post = bayes_posterior(50, 100, DEFAULT_POSTERIOR_BINS).unwrap();
        assert!((post.mode() - 0.5).abs() < 1e-12);
        // Laplace's rule of succession
        assert!((post.mean() - 51.0 / 102.0).abs() < post.spacing());
        assert!(bayes_posterior(5, 4, 11).is_err());
    }

    #[test]
    fn bars_agree_with_binomial_sigma() {
        for k in [30u64, 50, 70] {
            let p = k as f64 / 100.0;
            let sigma = binomial_sigma(p, 100).unwrap();
            let (lo, hi) = error_bars(&bayes_posterior(k, 100, DEFAULT_POSTERIOR_BINS).unwrap());
            assert!(((p - lo) - sigma).abs() / sigma < 0.1, "k={k}: lo {lo}");
            assert!(((hi - p) - sigma).abs() / sigma < 0.1, "k={k}: hi {hi}");
        }
        let (lo, hi) = error_bars(&bayes_posterior(50, 100, DEFAULT_POSTERIOR_BINS).unwrap());
        assert!(((0.5 - lo) - (hi - 0.5)).abs() < 2e-4);
    }

    #[test]
    fn bars_at_endpoints() {
        let (lo, hi) = error_bars(&bayes_posterior(0, 100, DEFAULT_POSTERIOR_BINS).unwrap());
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
        let (lo, hi) = error_bars(&bayes_posterior(100, 100, DEFAULT_POSTERIOR_BINS).unwrap());
        assert_eq!(hi, 1.0);
        assert!(lo < 1.0);
    }

    #[test]
    fn bars_stable_under_refinement() {
        for (k, n) in [(0u64, 100u64), (8, 100), (50, 100), (94, 100), (3, 20)] {
            let coarse = bayes_posterior(k, n, 10_001).unwrap();
            let fine = bayes_posterior(k, n, 100_001).unwrap();
            let h = coarse.spacing();
            assert!((coarse.mode() - fine.mode()).abs() < h);
            let (a, b) = (error_bars(&coarse), error_bars(&fine));
            assert!((a.0 - b.0).abs() < h && (a.1 - b.1).abs() < h, "{a:?} {b:?}");
        }
    }

    #[test]
    fn histogram_binning() {
        let h = fidelity_histogram(&[1.0, 1.0, 1.0], 100).unwrap();
        assert_eq!(h.counts[99], 3);
        assert_eq!(h.occupied_bins(), 1);
        let h = fidelity_histogram(&[0.25, 0.75], 2).unwrap();
        assert_eq!(h.counts, vec![1, 1]);
        let h = fidelity_histogram(&[], 10).unwrap();
        assert_eq!(h.total(), 0);
        assert_eq!(h.bins(), 10);
        let h = fidelity_histogram(&[1.0 + 1e-13, 0.0], 4).unwrap();
        assert_eq!(h.counts, vec![1, 0, 0, 1]);
        assert!(fidelity_histogram(&[1.5], 4).is_err());
        assert!(h.to_csv().starts_with("bin_center,count\n0.125,1\n"));
    }
}
