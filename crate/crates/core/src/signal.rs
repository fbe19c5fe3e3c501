use crate::error::{invalid, Result};

/// Real-valued mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return invalid("sample rate must be positive");
        }
        if samples.is_empty() {
            return invalid("signal must contain at least one sample");
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return invalid(format!("non-finite sample at index {i}"));
        }
        Ok(Self { samples, sample_rate })
    }

    /// All-zero signal of `len` samples.
    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len.max(1)], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// Copy zero-extended (or truncated) to exactly `len` samples.
    pub fn resized(&self, len: usize) -> Vec<f64> {
        let mut out = self.samples.clone();
        out.resize(len, 0.0);
        out
    }
}

/// Relative l2 distance `||a - b|| / ||b||` over the common prefix.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let num: f64 = a[..n].iter().zip(&b[..n]).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b[..n].iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
