//! Percussive event detection on a uniform pre-analysis spectrogram.
//!
//! Bins are classified with the mixed time-frequency derivative of the phase
//! (near 0 for steady sinusoids, near 1 for impulses), gated by magnitude.
//! The per-frame share of percussive magnitude, median filtered, gives the
//! compression curve whose prominent peaks become events.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectrogram::{conjugate_multiplicity, ComplexSpectrogram, Grid, RealMatrix};

/// Column sums below this fraction of the largest column sum count as silence.
pub const SILENCE_FLOOR: f64 = 1e-8;

/// How the phase-derivative band of the percussive mask is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BandRule {
    /// `theta_low < mpd - 1 < theta_high`, taken verbatim.
    Literal,
    /// `-theta_low < mpd - 1 < theta_high`: a window around the impulse value 1.
    #[default]
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    pub theta_mag: f64,
    pub theta_p_low: f64,
    pub theta_p_high: f64,
    pub band: BandRule,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            theta_mag: 0.01,
            theta_p_low: 0.5,
            theta_p_high: 0.75,
            band: BandRule::Centered,
        }
    }
}

impl MaskParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_mag > 0.0) {
            return invalid(format!("theta_mag must be positive, got {}", self.theta_mag));
        }
        if !(self.theta_p_low < self.theta_p_high) {
            return invalid(format!(
                "theta_p_low ({}) must be below theta_p_high ({})",
                self.theta_p_low, self.theta_p_high
            ));
        }
        Ok(())
    }

    fn accepts(&self, mpd: f64) -> bool {
        let d = mpd - 1.0;
        match self.band {
            BandRule::Literal => self.theta_p_low < d && d < self.theta_p_high,
            BandRule::Centered => -self.theta_p_low < d && d < self.theta_p_high,
        }
    }
}

/// Mixed partial derivative of the phase, scaled so an impulse maps to 1.
///
/// The frequency-direction derivative is the principal-value difference of
/// the phase between adjacent channels; its frame-to-frame difference divided
/// by the hop and multiplied by `M / 2 pi` is the estimate. With the
/// frequency-invariant phase convention an impulse at `p` has channel
/// derivative `-2 pi (p - a n) / M`, which makes the scaling exact.
/// Values at bins with negligible magnitude are meaningless and must be
/// masked by the caller.
pub fn mpd(coefficients: &ComplexSpectrogram) -> Result<RealMatrix> {
    let hop = match coefficients.grid() {
        Grid::Uniform(g) => g.hop(),
        Grid::Nonuniform(_) => return invalid("phase derivative analysis needs a uniform grid"),
    };
    let bins = coefficients.bins();
    let frames = coefficients.frames();
    let mut freq_deriv = RealMatrix::zeros(bins, frames);
    for n in 0..frames {
        let col = coefficients.column(n);
        let out = freq_deriv.column_mut(n);
        for m in 0..bins.saturating_sub(1) {
            let z = col[m + 1] * col[m].conj();
            out[m] = z.im.atan2(z.re);
        }
        if bins >= 2 {
            out[bins - 1] = out[bins - 2];
        }
    }
    let scale = coefficients.channels() as f64 / (2.0 * PI * hop as f64);
    let mut out = RealMatrix::zeros(bins, frames);
    if frames < 2 {
        return Ok(out);
    }
    for n in 1..frames {
        for m in 0..bins {
            let d = principal(freq_deriv.get(m, n) - freq_deriv.get(m, n - 1));
            out.set(m, n, d * scale);
        }
    }
    let first = out.column(1).to_vec();
    out.column_mut(0).copy_from_slice(&first);
    Ok(out)
}

/// Wrap an angle into `[-pi, pi)`.
#[inline]
pub fn principal(x: f64) -> f64 {
    x - 2.0 * PI * (x / (2.0 * PI)).round()
}

/// Binary percussive mask: magnitude gate times phase-derivative band.
///
/// Magnitudes are compared as `|X| / reference > theta_mag`; the pipeline
/// uses the largest coefficient an impulse at the signal peak could produce
/// (signal peak times window peak) as the reference.
pub fn percussive_mask(
    coefficients: &ComplexSpectrogram,
    mpd: &RealMatrix,
    params: &MaskParams,
    reference: f64,
) -> Result<RealMatrix> {
    params.validate()?;
    if mpd.rows != coefficients.bins() || mpd.cols != coefficients.frames() {
        return invalid("phase derivative and spectrogram dimensions differ");
    }
    let mut mask = RealMatrix::zeros(mpd.rows, mpd.cols);
    if !(reference > 0.0) {
        return Ok(mask);
    }
    let floor = params.theta_mag * reference;
    for (i, (c, &d)) in coefficients.data().iter().zip(&mpd.data).enumerate() {
        if c.norm() > floor && params.accepts(d) {
            mask.data[i] = 1.0;
        }
    }
    Ok(mask)
}

/// Per-frame percussive share `sum |X| mask / sum |X|`, clamped to `[0, 1]`
/// and median filtered over frames.
pub fn compression_curve(
    coefficients: &ComplexSpectrogram,
    mask: &RealMatrix,
    median_kernel: usize,
) -> Result<Vec<f64>> {
    if mask.rows != coefficients.bins() || mask.cols != coefficients.frames() {
        return invalid("mask and spectrogram dimensions differ");
    }
    let channels = coefficients.channels();
    let frames = coefficients.frames();
    let mut totals = Vec::with_capacity(frames);
    let mut percussive = Vec::with_capacity(frames);
    for n in 0..frames {
        let (mut t, mut p) = (0.0, 0.0);
        for (m, c) in coefficients.column(n).iter().enumerate() {
            let v = c.norm() * conjugate_multiplicity(m, channels);
            t += v;
            p += v * mask.get(m, n);
        }
        totals.push(t);
        percussive.push(p);
    }
    let max_total = totals.iter().fold(0.0f64, |m, &v| m.max(v));
    let floor = SILENCE_FLOOR * max_total;
    let raw: Vec<f64> = totals
        .iter()
        .zip(&percussive)
        .map(|(&t, &p)| {
            if t <= floor || t == 0.0 {
                0.0
            } else {
                (p / t).clamp(0.0, 1.0)
            }
        })
        .collect();
    median_filter(&raw, median_kernel)
}

/// Running median with an odd kernel; edges are padded by replication.
pub fn median_filter(values: &[f64], kernel: usize) -> Result<Vec<f64>> {
    if kernel == 0 || kernel % 2 == 0 {
        return invalid(format!("median kernel must be odd and positive, got {kernel}"));
    }
    if values.is_empty() || kernel == 1 {
        return Ok(values.to_vec());
    }
    let half = kernel / 2;
    let last = values.len() - 1;
    let mut buf = Vec::with_capacity(kernel);
    Ok((0..values.len())
        .map(|i| {
            buf.clear();
            for k in 0..kernel {
                let j = (i + k).saturating_sub(half).min(last);
                buf.push(values[j]);
            }
            buf.sort_by(|a, b| a.total_cmp(b));
            buf[half]
        })
        .collect())
}

/// One detected percussive event on the pre-analysis grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Frame index `I_k`.
    pub frame: usize,
    /// Compression rate `r_k` in `(0, 1]`.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PercussiveEvents {
    events: Vec<Event>,
}

impl PercussiveEvents {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        for w in events.windows(2) {
            if w[1].frame <= w[0].frame {
                return invalid("event frames must be strictly increasing");
            }
        }
        if let Some(e) = events.iter().find(|e| !(e.rate > 0.0 && e.rate <= 1.0)) {
            return invalid(format!("compression rate {} outside (0, 1]", e.rate));
        }
        Ok(Self { events })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Local maxima whose topographic prominence reaches `min_prominence`.
///
/// Flat peaks are reported at the middle of the plateau (lower middle for an
/// even width). The end points of the curve are never peaks.
pub fn find_events(r: &[f64], min_prominence: f64) -> Result<PercussiveEvents> {
    if !(min_prominence >= 0.0) {
        return invalid(format!("min_prominence must be nonnegative, got {min_prominence}"));
    }
    let mut events = Vec::new();
    for (peak, height) in local_maxima(r) {
        if height <= 0.0 {
            continue;
        }
        if prominence(r, peak) >= min_prominence {
            events.push(Event {
                frame: peak,
                rate: height.min(1.0),
            });
        }
    }
    PercussiveEvents::new(events)
}

/// `(index, value)` of every interior local maximum, plateaus included.
pub fn local_maxima(r: &[f64]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    if r.len() < 3 {
        return out;
    }
    let mut i = 1;
    while i < r.len() - 1 {
        if r[i - 1] < r[i] {
            let mut ahead = i + 1;
            while ahead < r.len() - 1 && r[ahead] == r[i] {
                ahead += 1;
            }
            if r[ahead] < r[i] {
                let right = ahead - 1;
                out.push(((i + right) / 2, r[i]));
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Height of `r[peak]` above the higher of its two bounding valleys.
pub fn prominence(r: &[f64], peak: usize) -> f64 {
    let h = r[peak];
    let mut left_min = h;
    for &v in r[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &r[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}
