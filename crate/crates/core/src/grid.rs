//! Frame-timing descriptions for the uniform and nonuniform transforms.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Regular time-frequency lattice: `N` frames every `hop` samples, `M` channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniformGrid {
    hop: usize,
    frames: usize,
    channels: usize,
    window_length: usize,
    signal_length: usize,
}

impl UniformGrid {
    pub fn new(hop: usize, channels: usize, window_length: usize, signal_length: usize) -> Result<Self> {
        if hop == 0 || channels == 0 || window_length == 0 || signal_length == 0 {
            return invalid("grid parameters must be positive");
        }
        if signal_length % hop != 0 {
            return invalid(format!("signal length {signal_length} is not a multiple of hop {hop}"));
        }
        if signal_length % channels != 0 {
            return invalid(format!(
                "signal length {signal_length} is not a multiple of channel count {channels}"
            ));
        }
        if window_length > channels {
            return Err(Error::PainlessViolated {
                window: window_length,
                channels,
            });
        }
        Ok(Self {
            hop,
            frames: signal_length / hop,
            channels,
            window_length,
            signal_length,
        })
    }

    pub fn hop(&self) -> usize {
        self.hop
    }
    pub fn frames(&self) -> usize {
        self.frames
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn window_length(&self) -> usize {
        self.window_length
    }
    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    /// Frequency decimation `b = L / M`.
    pub fn decimation(&self) -> usize {
        self.signal_length / self.channels
    }

    pub fn positions(&self) -> Vec<usize> {
        (0..self.frames).map(|n| n * self.hop).collect()
    }

    /// The same lattice expressed as a nonuniform grid.
    pub fn to_nonuniform(&self) -> NonuniformGrid {
        NonuniformGrid {
            hops: vec![self.hop; self.frames],
            positions: self.positions(),
            window_lengths: vec![self.window_length; self.frames],
            channels: self.channels,
            signal_length: self.signal_length,
        }
    }
}

/// Lattice with per-frame hops and window lengths over a circular signal.
///
/// `hops[n]` is the distance from frame `n` to frame `n + 1`; the last hop
/// closes the circle so that `sum(hops) == signal_length`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonuniformGrid {
    hops: Vec<usize>,
    positions: Vec<usize>,
    window_lengths: Vec<usize>,
    channels: usize,
    signal_length: usize,
}

impl NonuniformGrid {
    pub fn new(hops: Vec<usize>, window_lengths: Vec<usize>, channels: usize) -> Result<Self> {
        if hops.is_empty() {
            return invalid("grid needs at least one frame");
        }
        if hops.len() != window_lengths.len() {
            return invalid(format!(
                "{} hops but {} window lengths",
                hops.len(),
                window_lengths.len()
            ));
        }
        if channels == 0 {
            return invalid("channel count must be positive");
        }
        if hops.iter().any(|&h| h == 0) {
            return invalid("hops must be positive");
        }
        if let Some(&w) = window_lengths.iter().find(|&&w| w == 0 || w > channels) {
            if w == 0 {
                return invalid("window lengths must be positive");
            }
            return Err(Error::PainlessViolated { window: w, channels });
        }
        let mut positions = Vec::with_capacity(hops.len());
        let mut acc = 0usize;
        for &h in &hops {
            positions.push(acc);
            acc += h;
        }
        Ok(Self {
            hops,
            positions,
            window_lengths,
            channels,
            signal_length: acc,
        })
    }

    pub fn hops(&self) -> &[usize] {
        &self.hops
    }
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }
    pub fn window_lengths(&self) -> &[usize] {
        &self.window_lengths
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn signal_length(&self) -> usize {
        self.signal_length
    }
    pub fn frames(&self) -> usize {
        self.hops.len()
    }

    /// Hop arriving at frame `n` (from frame `n - 1`); frame 0 takes the closing hop.
    pub fn incoming_hop(&self, n: usize) -> usize {
        if n == 0 {
            self.hops[self.hops.len() - 1]
        } else {
            self.hops[n - 1]
        }
    }

    /// Grid with hops replaced by `ceil(alpha * hop)` and the same window lengths.
    pub fn stretched(&self, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("stretch factor must be positive, got {alpha}"));
        }
        let hops = self.hops.iter().map(|&h| stretched_hop(h, alpha)).collect();
        Self::new(hops, self.window_lengths.clone(), self.channels)
    }

    /// True when every frame shares one hop and one window length.
    pub fn as_uniform(&self) -> Option<(usize, usize)> {
        let h = self.hops[0];
        let w = self.window_lengths[0];
        (self.hops.iter().all(|&x| x == h) && self.window_lengths.iter().all(|&x| x == w)).then_some((h, w))
    }
}

/// `ceil(alpha * hop)`, guarded against representation error for integral products.
pub fn stretched_hop(hop: usize, alpha: f64) -> usize {
    let exact = alpha * hop as f64;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}
