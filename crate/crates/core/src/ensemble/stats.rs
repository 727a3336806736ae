use crate::{Error, Result, C64};

/// Running mean and sum of squared deviations of a complex quantity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: C64,
    pub m2: f64,
}

impl Welford {
    /// Adds the `count`-th sample. `count` is passed in because a block
    /// updates many accumulators per path.
    #[inline]
    pub fn push(&mut self, count: u64, x: C64) {
        let delta = x - self.mean;
        self.mean += delta / count as f64;
        self.m2 += (delta.conj() * (x - self.mean)).re;
        self.n = count;
    }

    /// Chan's parallel combination.
    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * (nb / n as f64);
        self.m2 += other.m2 + delta.norm_sqr() * na * nb / n as f64;
        self.n = n;
    }

    /// Sample variance, `E|x - mean|^2` with Bessel's correction.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// `sd / sqrt(n)`; zero when fewer than two samples were seen.
    pub fn standard_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Sample standard deviation over `sqrt(n)`.
pub fn standard_error(samples: &[f64]) -> Result<f64> {
    standard_error_complex(&samples.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
}

pub fn standard_error_complex(samples: &[C64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples(samples.len()));
    }
    let mut w = Welford::default();
    for (k, &x) in samples.iter().enumerate() {
        w.push(k as u64 + 1, x);
    }
    Ok(w.standard_error())
}
