//! Negative binomial demand distribution in the textbook mean/size
//! parameterization (variance = mean + mean^2/size), with a Poisson
//! sentinel at size = infinity. Quantiles are computed by CDF summation
//! with a safety cap; sampling uses the Gamma-Poisson mixture.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Sizes at or above this behave as Poisson; keeps the sentinel finite so
/// fitted models serialize cleanly.
const POISSON_SIZE_THRESHOLD: f64 = 1e12;

/// Discrete demand distribution with mean `mean` and size `size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegBinom {
    mean: f64,
    size: f64,
}

impl NegBinom {
    pub fn new(mean: f64, size: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::invalid("demand.mean", format!("{mean} must be > 0")));
        }
        if !(size > 0.0) {
            return Err(Error::invalid("demand.size", format!("{size} must be > 0")));
        }
        Ok(Self { mean, size })
    }

    /// Parameterize from mean and variance with the dispersion relation
    /// size = mean / (variance - mean). Requires variance > mean.
    pub fn from_mean_var(mean: f64, var: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::invalid("demand.mean", format!("{mean} must be > 0")));
        }
        if var <= mean {
            return Err(Error::Overdispersion { mean, var });
        }
        Self::new(mean, mean / (var - mean))
    }

    /// Parameterize from mean and excess variance kappa so that the
    /// variance is exactly mean + kappa; kappa = 0 degenerates to Poisson.
    pub fn from_mean_excess_var(mean: f64, kappa: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::invalid("demand.mean", format!("{mean} must be > 0")));
        }
        if kappa <= 0.0 {
            return Ok(Self {
                mean,
                size: f64::INFINITY,
            });
        }
        Ok(Self {
            mean,
            size: mean * mean / kappa,
        })
    }

    /// Poisson distribution as the size -> infinity limit.
    pub fn poisson(mean: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::invalid("demand.mean", format!("{mean} must be > 0")));
        }
        Ok(Self {
            mean,
            size: f64::INFINITY,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn is_poisson(&self) -> bool {
        self.size >= POISSON_SIZE_THRESHOLD
    }

    pub fn variance(&self) -> f64 {
        if self.is_poisson() {
            self.mean
        } else {
            self.mean + self.mean * self.mean / self.size
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    fn log_pmf(&self, x: u64) -> f64 {
        let xf = x as f64;
        if self.is_poisson() {
            xf * self.mean.ln() - self.mean - ln_gamma(xf + 1.0)
        } else {
            let k = self.size;
            let m = self.mean;
            ln_gamma(xf + k) - ln_gamma(k) - ln_gamma(xf + 1.0)
                + k * (k / (k + m)).ln()
                + xf * (m / (k + m)).ln()
        }
    }

    /// Ratio pmf(x+1)/pmf(x).
    fn pmf_ratio(&self, x: u64) -> f64 {
        let xf = x as f64;
        if self.is_poisson() {
            self.mean / (xf + 1.0)
        } else {
            (xf + self.size) / (xf + 1.0) * (self.mean / (self.size + self.mean))
        }
    }

    /// Point from which the summation scan starts, together with the pmf
    /// value there. Starts at zero unless pmf(0) underflows, in which case
    /// the scan begins 25 standard deviations below the mean: the mass
    /// below that point is under 1e-130 while the pmf there (about
    /// exp(-313)) is still representable.
    fn scan_start(&self) -> (u64, f64) {
        let at_zero = self.log_pmf(0);
        if at_zero > -700.0 {
            return (0, at_zero.exp());
        }
        let start = (self.mean - 25.0 * self.std_dev()).floor().max(0.0) as u64;
        (start, self.log_pmf(start).exp())
    }

    pub fn pmf(&self, x: u64) -> f64 {
        let (start, mut term) = self.scan_start();
        if x < start {
            return self.log_pmf(x).exp();
        }
        for i in start..x {
            term *= self.pmf_ratio(i);
        }
        term
    }

    pub fn cdf(&self, x: u64) -> f64 {
        let (start, mut term) = self.scan_start();
        if x < start {
            return 0.0;
        }
        let mut cum = term;
        for i in start..x {
            term *= self.pmf_ratio(i);
            cum += term;
        }
        cum.min(1.0)
    }

    /// Smallest integer q with CDF(q) >= p. The summation is capped at
    /// mean + 50 standard deviations; exceeding the cap is an error.
    pub fn quantile(&self, p: f64) -> Result<u64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::UnboundedQuantile(p));
        }
        if p <= 0.0 {
            return Ok(0);
        }
        let cap = (self.mean + 50.0 * self.std_dev()).ceil() as u64 + 1;
        let (start, mut term) = self.scan_start();
        let mut cum = term;
        let mut x = start;
        while cum < p {
            if x > cap {
                return Err(Error::QuantileCapExceeded { p, cap });
            }
            term *= self.pmf_ratio(x);
            x += 1;
            cum += term;
        }
        Ok(x)
    }

    /// Draw one value: Gamma-Poisson mixture for finite size, plain
    /// Poisson otherwise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.is_poisson() {
            return sample_poisson(self.mean, rng);
        }
        let gamma = Gamma::new(self.size, self.mean / self.size)
            .expect("validated shape and scale are positive");
        let lambda: f64 = gamma.sample(rng);
        sample_poisson(lambda, rng)
    }
}

/// Poisson draw that tolerates a zero rate.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(lambda).expect("positive finite rate");
    poisson.sample(rng) as u64
}

/// One draw of the non-stationary generator: per-period parameters
/// mu ~ Poisson(lambda_mean) and kappa ~ Poisson(lambda_kappa), then
/// demand with mean mu and variance mu + kappa. kappa = 0 falls back to
/// Poisson demand and mu = 0 yields zero demand.
pub fn sample_nonstationary_demand<R: Rng + ?Sized>(
    lambda_mean: f64,
    lambda_kappa: f64,
    rng: &mut R,
) -> u64 {
    let (mu, kappa) = draw_demand_params(lambda_mean, lambda_kappa, rng);
    match demand_dist_from_params(mu, kappa) {
        Some(dist) => dist.sample(rng),
        None => 0,
    }
}

/// Per-period (mu_t, kappa_t) parameter draw of the non-stationary model.
pub fn draw_demand_params<R: Rng + ?Sized>(
    lambda_mean: f64,
    lambda_kappa: f64,
    rng: &mut R,
) -> (f64, f64) {
    let mu = sample_poisson(lambda_mean, rng) as f64;
    let kappa = sample_poisson(lambda_kappa, rng) as f64;
    (mu, kappa)
}

/// Distribution of demand for one period given its (mu, kappa) draw;
/// `None` means demand is identically zero.
pub fn demand_dist_from_params(mu: f64, kappa: f64) -> Option<NegBinom> {
    if mu <= 0.0 {
        return None;
    }
    Some(NegBinom::from_mean_excess_var(mu, kappa).expect("mu > 0"))
}
