//! Analysis tapers.
//!
//! A window of length `W` is placed so that its sample `W / 2` sits on the
//! frame position; sample `j` therefore lands at offset `j - W / 2` from the
//! frame, with indices wrapped circularly over the signal.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    values: Vec<f64>,
}

impl Window {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("window must not be empty");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("window values must be finite");
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the sample that sits on the frame position.
    pub fn center(&self) -> usize {
        self.values.len() / 2
    }

    /// Offset of sample `j` relative to the frame position.
    #[inline]
    pub fn offset(&self, j: usize) -> isize {
        j as isize - self.center() as isize
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Symmetric Hann taper with zero endpoints: `0.5 - 0.5 cos(2 pi j / (W - 1))`.
pub fn make_hann(len: usize) -> Result<Window> {
    if len < 2 {
        return invalid(format!("Hann window needs at least 2 samples, got {len}"));
    }
    let denom = (len - 1) as f64;
    let values = (0..len)
        .map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / denom).cos())
        .collect();
    Ok(Window { values })
}
