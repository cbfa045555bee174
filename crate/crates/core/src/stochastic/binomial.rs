//! Binomial sampling through the inverse CDF. Mapping a shared uniform
//! through the inverse CDF is what makes paired spoilage draws comonotone:
//! with the same u, a larger bucket never spoils fewer units.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Smallest k with Binomial(n, p) CDF(k) >= u.
pub fn binomial_quantile(n: u64, p: f64, u: f64) -> u64 {
    if n == 0 || p <= 0.0 || u <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let log_start = n as f64 * (-p).ln_1p();
    if log_start < -700.0 {
        // pmf(0) underflows; fall back to the (monotone) normal
        // approximation, which is ample at such bucket sizes.
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(u.clamp(1e-15, 1.0 - 1e-15));
        return ((mean + z * sd).round().max(0.0) as u64).min(n);
    }
    let ratio = p / (1.0 - p);
    let mut term = log_start.exp();
    let mut cum = term;
    let mut k = 0u64;
    while cum < u && k < n {
        term *= (n - k) as f64 / (k + 1) as f64 * ratio;
        k += 1;
        cum += term;
    }
    k
}

/// Draw Binomial(n, p) by feeding one uniform through the inverse CDF.
pub fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    binomial_quantile(n, p, rng.gen::<f64>())
}

/// Precomputed binomial CDF rows for a fixed probability per age bucket.
/// Simulation runs draw millions of per-bucket spoilage counts against the
/// same handful of conditional probabilities; table rows replace the
/// summation scan with a short walk from the distribution mean and agree
/// with [`binomial_quantile`] bit for bit (same recurrence, same order of
/// operations).
#[derive(Debug, Clone)]
pub struct BinomialQuantileTable {
    probs: Vec<f64>,
    max_n: usize,
    /// rows[age * (max_n + 1) + n] holds CDF(0..=n); empty when the row
    /// start underflows (the scan's normal fallback handles those).
    rows: Vec<Box<[f64]>>,
}

impl BinomialQuantileTable {
    pub fn new(probs: &[f64], max_n: usize) -> Self {
        let mut rows = Vec::with_capacity(probs.len() * (max_n + 1));
        for &p in probs {
            for n in 0..=max_n as u64 {
                rows.push(build_row(n, p));
            }
        }
        Self {
            probs: probs.to_vec(),
            max_n,
            rows,
        }
    }

    /// Smallest k with Binomial(n, p_age) CDF(k) >= u.
    pub fn quantile(&self, age: usize, n: u64, u: f64) -> u64 {
        let p = self.probs.get(age).copied().unwrap_or(1.0);
        if n == 0 || p <= 0.0 || u <= 0.0 {
            return 0;
        }
        if p >= 1.0 {
            return n;
        }
        if n as usize > self.max_n || age >= self.probs.len() {
            return binomial_quantile(n, p, u);
        }
        let row = &self.rows[age * (self.max_n + 1) + n as usize];
        if row.is_empty() {
            return binomial_quantile(n, p, u);
        }
        let last = n as usize;
        let mut k = ((n as f64 * p) as usize).min(last);
        if row[k] >= u {
            while k > 0 && row[k - 1] >= u {
                k -= 1;
            }
        } else {
            while k < last && row[k] < u {
                k += 1;
            }
        }
        k as u64
    }
}

fn build_row(n: u64, p: f64) -> Box<[f64]> {
    if p <= 0.0 || p >= 1.0 || n == 0 {
        return Box::from([]);
    }
    let log_start = n as f64 * (-p).ln_1p();
    if log_start < -700.0 {
        return Box::from([]);
    }
    let ratio = p / (1.0 - p);
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut term = log_start.exp();
    let mut cum = term;
    row.push(cum);
    for k in 0..n {
        term *= (n - k) as f64 / (k + 1) as f64 * ratio;
        cum += term;
        row.push(cum);
    }
    row.into_boxed_slice()
}
