//! End-to-end stretchers.
//!
//! Both methods share one analysis/synthesis path over a [`NonuniformGrid`]:
//! the baseline phase vocoder uses the uniform grid, the percussion-aware
//! method the adaptive one. With no detected events the adaptive grid *is*
//! the uniform grid, so both produce the same samples.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adaptive_grid::{adaptive_grid, AdaptiveGrid, GridParams};
use crate::error::{invalid, Result};
use crate::gabor::{dgt, insdgt, nsdgt, nsdgt_dual_windows};
use crate::grid::{stretched_hop, NonuniformGrid, UniformGrid};
use crate::percussion::{compression_curve, find_events, mpd, percussive_mask, Event, MaskParams, PercussiveEvents};
use crate::phase::{identity_phase_lock, incoming_hops, phase_time_derivative, propagate_phase};
use crate::signal::Signal;
use crate::spectrogram::{ComplexSpectrogram, Grid, RealMatrix};
use crate::window::{make_hann, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Uniform-grid phase vocoder with identity phase locking.
    Pv,
    /// Adaptive windows and hops around percussive events.
    Selebi,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pv => "pv",
            Method::Selebi => "selebi",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pv" => Ok(Method::Pv),
            "selebi" => Ok(Method::Selebi),
            other => invalid(format!("unknown method `{other}` (expected pv or selebi)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchConfig {
    /// Stretch factor, output duration over input duration.
    pub alpha: f64,
    /// Long (default) window length `V`.
    pub window_length: usize,
    /// Requested synthesis hop; the analysis hop is `floor(hop / alpha)`.
    pub synthesis_hop: usize,
    /// Overlap factor for shortened windows.
    pub beta: f64,
    pub mask: MaskParams,
    pub median_kernel: usize,
    pub min_prominence: f64,
    /// Channel count override; `None` picks `ceil(V alpha)` rounded up to a
    /// multiple of the analysis hop.
    pub channels: Option<usize>,
}

impl Default for StretchConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            window_length: 2048,
            synthesis_hop: 128,
            beta: 4.0,
            mask: MaskParams::default(),
            median_kernel: 5,
            min_prominence: 0.1,
            channels: None,
        }
    }
}

impl StretchConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return invalid(format!("stretch factor must be >= 1, got {}", self.alpha));
        }
        if self.window_length < 2 {
            return invalid(format!("window length must be at least 2, got {}", self.window_length));
        }
        if self.synthesis_hop == 0 {
            return invalid("synthesis hop must be positive");
        }
        if self.analysis_hop() == 0 {
            return invalid(format!(
                "synthesis hop {} is shorter than the stretch factor {}",
                self.synthesis_hop, self.alpha
            ));
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return invalid(format!("beta must exceed 1, got {}", self.beta));
        }
        self.mask.validate()?;
        if self.median_kernel == 0 || self.median_kernel % 2 == 0 {
            return invalid(format!(
                "median kernel must be odd and positive, got {}",
                self.median_kernel
            ));
        }
        if !(self.min_prominence >= 0.0) {
            return invalid(format!("minimum prominence must be >= 0, got {}", self.min_prominence));
        }
        if self.channels() < self.window_length {
            return invalid(format!(
                "channel count {} is below the window length {}",
                self.channels(),
                self.window_length
            ));
        }
        Ok(())
    }

    /// `floor(synthesis_hop / alpha)`.
    pub fn analysis_hop(&self) -> usize {
        (self.synthesis_hop as f64 / self.alpha + 1e-9).floor() as usize
    }

    /// Synthesis hop actually used, `ceil(alpha a)`.
    pub fn effective_synthesis_hop(&self) -> usize {
        stretched_hop(self.analysis_hop(), self.alpha)
    }

    pub fn channels(&self) -> usize {
        if let Some(m) = self.channels {
            return m;
        }
        let a = self.analysis_hop().max(1);
        let m = (self.window_length as f64 * self.alpha - 1e-9).ceil() as usize;
        m.div_ceil(a) * a
    }

    /// Smallest padded length holding the input plus one long window of
    /// zeros that is a multiple of both the hop and the channel count.
    pub fn padded_length(&self, input_length: usize) -> usize {
        let a = self.analysis_hop();
        let m = self.channels();
        let block = lcm(a, m);
        (input_length + self.window_length).div_ceil(block) * block
    }

    pub fn output_length(&self, input_length: usize) -> usize {
        stretched_hop(input_length, self.alpha)
    }

    fn grid_params(&self) -> GridParams {
        GridParams {
            hop: self.analysis_hop(),
            long_window: self.window_length,
            channels: self.channels(),
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Absolute magnitude gate for a signal: the largest coefficient an impulse
/// at the signal's peak level could produce, times `theta_mag`.
fn magnitude_reference(x: &[f64], window: &Window) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs())) * window.peak()
}

/// Intermediate results of percussive event detection.
#[derive(Debug, Clone)]
pub struct PercussionAnalysis {
    pub spectrogram: ComplexSpectrogram,
    pub mpd: RealMatrix,
    pub mask: RealMatrix,
    pub curve: Vec<f64>,
    pub events: PercussiveEvents,
}

/// Run event detection on an already padded signal.
pub fn analyze_percussion(padded: &[f64], cfg: &StretchConfig) -> Result<PercussionAnalysis> {
    cfg.validate()?;
    let grid = UniformGrid::new(cfg.analysis_hop(), cfg.channels(), cfg.window_length, padded.len())?;
    let window = make_hann(cfg.window_length)?;
    let spectrogram = dgt(padded, &window, &grid)?;
    let mpd = mpd(&spectrogram)?;
    let reference = magnitude_reference(padded, &window);
    let mask = percussive_mask(&spectrogram, &mpd, &cfg.mask, reference)?;
    let curve = compression_curve(&spectrogram, &mask, cfg.median_kernel)?;
    let events = find_events(&curve, cfg.min_prominence)?;
    Ok(PercussionAnalysis {
        spectrogram,
        mpd,
        mask,
        curve,
        events,
    })
}

/// Everything needed to render audio: the analysis grid and, for the
/// adaptive method, how it was derived.
#[derive(Debug, Clone)]
pub struct Plan {
    pub method: Method,
    pub alpha: f64,
    pub input_length: usize,
    pub padded_length: usize,
    pub events: PercussiveEvents,
    pub grid: NonuniformGrid,
    pub adaptive: Option<AdaptiveGrid>,
}

/// Build the analysis grid from a detection signal (unpadded).
pub fn plan(detection: &[f64], cfg: &StretchConfig, method: Method) -> Result<Plan> {
    cfg.validate()?;
    if detection.is_empty() {
        return invalid("empty input");
    }
    let padded_length = cfg.padded_length(detection.len());
    let uniform = UniformGrid::new(cfg.analysis_hop(), cfg.channels(), cfg.window_length, padded_length)?;
    let (events, grid, adaptive) = match method {
        Method::Pv => (PercussiveEvents::empty(), uniform.to_nonuniform(), None),
        Method::Selebi => {
            let padded = pad(detection, padded_length);
            let analysis = analyze_percussion(&padded, cfg)?;
            // The cut from signal to zero padding looks percussive; events
            // centred past the last input sample are artifacts of padding.
            let hop = cfg.analysis_hop();
            let kept = analysis
                .events
                .events()
                .iter()
                .copied()
                .filter(|e| e.frame * hop < detection.len())
                .collect();
            let events = PercussiveEvents::new(kept)?;
            let adaptive = adaptive_grid(&events, uniform.frames(), &cfg.grid_params())?;
            (events, adaptive.grid.clone(), Some(adaptive))
        }
    };
    Ok(Plan {
        method,
        alpha: cfg.alpha,
        input_length: detection.len(),
        padded_length,
        events,
        grid,
        adaptive,
    })
}

fn pad(x: &[f64], len: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    out.resize(len, 0.0);
    out
}

/// Hann windows for every frame, built once per distinct length.
pub fn grid_windows(grid: &NonuniformGrid) -> Result<Vec<Window>> {
    let mut cache: HashMap<usize, Window> = HashMap::new();
    grid.window_lengths()
        .iter()
        .map(|&w| {
            if let Some(win) = cache.get(&w) {
                return Ok(win.clone());
            }
            let win = make_hann(w)?;
            cache.insert(w, win.clone());
            Ok(win)
        })
        .collect()
}

/// Stretch one channel on the plan's grid: analysis, phase generation,
/// synthesis on the stretched grid, trimming to `ceil(alpha L)`.
pub fn render(x: &[f64], plan: &Plan, cfg: &StretchConfig) -> Result<Vec<f64>> {
    if x.len() != plan.input_length {
        return invalid(format!(
            "channel has {} samples but the plan was built for {}",
            x.len(),
            plan.input_length
        ));
    }
    let grid = &plan.grid;
    let windows = grid_windows(grid)?;
    let padded = pad(x, plan.padded_length);
    let coefficients = nsdgt(&padded, &windows, grid)?;

    let magnitude = coefficients.magnitude();
    let phase = coefficients.phase();
    let incoming = incoming_hops(grid);
    let dphi = phase_time_derivative(&phase, &incoming, grid.channels())?;
    let propagated = propagate_phase(&dphi, cfg.alpha, &incoming, phase.column(0))?;
    let long = make_hann(cfg.window_length)?;
    let floor = cfg.mask.theta_mag * magnitude_reference(&padded, &long);
    let locked = identity_phase_lock(&magnitude, &phase, &propagated, floor)?;

    let stretched = grid.stretched(cfg.alpha)?;
    let duals = nsdgt_dual_windows(&windows, &stretched)?;
    let output = ComplexSpectrogram::from_polar(&magnitude, &locked, Grid::Nonuniform(stretched.clone()));
    let mut y = insdgt(&output, &duals, &stretched)?;
    y.truncate(cfg.output_length(x.len()));
    y.resize(cfg.output_length(x.len()), 0.0);
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub frames: usize,
    /// Hop length to number of frames using it.
    pub hop_histogram: BTreeMap<usize, usize>,
    pub min_window: usize,
    pub max_window: usize,
}

impl GridSummary {
    pub fn of(grid: &NonuniformGrid) -> Self {
        let mut hop_histogram = BTreeMap::new();
        for &h in grid.hops() {
            *hop_histogram.entry(h).or_insert(0) += 1;
        }
        let lengths = grid.window_lengths();
        Self {
            frames: grid.frames(),
            hop_histogram,
            min_window: lengths.iter().copied().min().unwrap_or(0),
            max_window: lengths.iter().copied().max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchReport {
    pub method: Method,
    pub alpha: f64,
    pub analysis_hop: usize,
    pub synthesis_hop: usize,
    pub channels: usize,
    pub window_length: usize,
    pub event_count: usize,
    pub events: Vec<Event>,
    pub grid: GridSummary,
    pub input_length: usize,
    pub padded_length: usize,
    pub padding: usize,
    pub output_length: usize,
    /// Output RMS over input RMS (0 for silent input).
    pub rms_ratio: f64,
    pub elapsed_ms: f64,
}

impl StretchReport {
    fn new(plan: &Plan, cfg: &StretchConfig, inputs: &[&[f64]], outputs: &[Vec<f64>], started: Instant) -> Self {
        let rms = |chs: &mut dyn Iterator<Item = &[f64]>| {
            let (mut s, mut n) = (0.0, 0usize);
            for c in chs {
                s += c.iter().map(|v| v * v).sum::<f64>();
                n += c.len();
            }
            if n == 0 {
                0.0
            } else {
                (s / n as f64).sqrt()
            }
        };
        let rin = rms(&mut inputs.iter().copied());
        let rout = rms(&mut outputs.iter().map(|v| v.as_slice()));
        Self {
            method: plan.method,
            alpha: cfg.alpha,
            analysis_hop: cfg.analysis_hop(),
            synthesis_hop: cfg.effective_synthesis_hop(),
            channels: cfg.channels(),
            window_length: cfg.window_length,
            event_count: plan.events.len(),
            events: plan.events.events().to_vec(),
            grid: GridSummary::of(&plan.grid),
            input_length: plan.input_length,
            padded_length: plan.padded_length,
            padding: plan.padded_length - plan.input_length,
            output_length: outputs.first().map_or(0, Vec::len),
            rms_ratio: if rin > 0.0 { rout / rin } else { 0.0 },
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        }
    }
}

/// Baseline phase vocoder.
pub fn stretch_pv(x: &Signal, cfg: &StretchConfig) -> Result<Signal> {
    stretch(x, cfg, Method::Pv).map(|(y, _)| y)
}

/// Percussion-aware stretching on the adaptive grid.
pub fn stretch_selebi(x: &Signal, cfg: &StretchConfig) -> Result<(Signal, StretchReport)> {
    stretch(x, cfg, Method::Selebi)
}

pub fn stretch(x: &Signal, cfg: &StretchConfig, method: Method) -> Result<(Signal, StretchReport)> {
    let (mut ys, report) = stretch_channels(&[x.samples()], cfg, method, Detection::Mixdown)?;
    let y = Signal::new(ys.pop().expect("one channel"), x.sample_rate())?;
    Ok((y, report))
}

/// Which signal drives event detection for multichannel input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Detection {
    /// Average of all channels.
    #[default]
    Mixdown,
    Channel(usize),
}

/// Stretch several equally long channels with one shared grid.
pub fn stretch_channels(
    channels: &[&[f64]],
    cfg: &StretchConfig,
    method: Method,
    detection: Detection,
) -> Result<(Vec<Vec<f64>>, StretchReport)> {
    let started = Instant::now();
    cfg.validate()?;
    let Some(first) = channels.first() else {
        return invalid("no channels");
    };
    if channels.iter().any(|c| c.len() != first.len()) {
        return invalid("channels differ in length");
    }
    let detect: Vec<f64> = match detection {
        Detection::Channel(i) => match channels.get(i) {
            Some(c) => c.to_vec(),
            None => {
                return invalid(format!(
                    "detection channel {i} out of range ({} channels)",
                    channels.len()
                ))
            }
        },
        Detection::Mixdown if channels.len() == 1 => first.to_vec(),
        Detection::Mixdown => (0..first.len())
            .map(|i| channels.iter().map(|c| c[i]).sum::<f64>() / channels.len() as f64)
            .collect(),
    };
    let plan = plan(&detect, cfg, method)?;
    let outputs = channels
        .iter()
        .map(|c| render(c, &plan, cfg))
        .collect::<Result<Vec<_>>>()?;
    let report = StretchReport::new(&plan, cfg, channels, &outputs, started);
    Ok((outputs, report))
}
