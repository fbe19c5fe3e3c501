//! Objective evaluation on synthetic signals with known ground truth.
//!
//! Every case is a percussive component (impulse or decaying 50 Hz burst)
//! plus optional steady sinusoids. The ideal stretch moves the percussive
//! component to `alpha` times its onset without changing its shape and
//! regenerates the sinusoids at the stretched length. The error is the
//! relative Frobenius distance of the magnitude spectrograms over the frames
//! where the ideal percussive component carries energy.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gabor::dgt;
use crate::grid::{stretched_hop, UniformGrid};
use crate::pipeline::{stretch, Method, StretchConfig};
use crate::signal::Signal;
use crate::spectrogram::{conjugate_multiplicity, ComplexSpectrogram};
use crate::window::make_hann;

/// Carrier of the decaying transient, Hz.
pub const TRANSIENT_FREQUENCY: f64 = 50.0;
/// Envelope time constant: 60 dB of decay over 250 ms.
pub const TRANSIENT_DECAY: f64 = 0.25 / 6.907_755_278_982_137;
/// Percussive-energy threshold (relative to the peak frame) defining the
/// evaluation interval: -60 dB.
pub const INTERVAL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseKind {
    #[serde(rename = "impulse")]
    Impulse,
    #[serde(rename = "sinusoid+impulse")]
    SinusoidImpulse,
    #[serde(rename = "harmonic+impulse")]
    HarmonicImpulse,
    #[serde(rename = "transient")]
    Transient,
    #[serde(rename = "sinusoid+transient")]
    SinusoidTransient,
}

impl CaseKind {
    pub const ALL: [CaseKind; 5] = [
        CaseKind::Impulse,
        CaseKind::SinusoidImpulse,
        CaseKind::HarmonicImpulse,
        CaseKind::Transient,
        CaseKind::SinusoidTransient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Impulse => "impulse",
            CaseKind::SinusoidImpulse => "sinusoid+impulse",
            CaseKind::HarmonicImpulse => "harmonic+impulse",
            CaseKind::Transient => "transient",
            CaseKind::SinusoidTransient => "sinusoid+transient",
        }
    }

    /// Steady partials as (frequency in Hz, amplitude).
    pub fn partials(self) -> &'static [(f64, f64)] {
        match self {
            CaseKind::Impulse | CaseKind::Transient => &[],
            CaseKind::SinusoidImpulse | CaseKind::SinusoidTransient => &[(1000.0, 0.5)],
            CaseKind::HarmonicImpulse => &[(1000.0, 0.5), (2000.0, 0.25), (3000.0, 0.125)],
        }
    }

    fn is_transient(self) -> bool {
        matches!(self, CaseKind::Transient | CaseKind::SinusoidTransient)
    }
}

impl std::str::FromStr for CaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .map_or_else(|| invalid(format!("unknown case `{s}`")), Ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCase {
    pub kind: CaseKind,
    pub sample_rate: u32,
    pub length: usize,
    /// Onset sample of the percussive component.
    pub onset: usize,
}

impl SyntheticCase {
    /// One second at 22 050 Hz with the onset near the middle, on a multiple
    /// of every analysis hop used by the benchmark.
    pub fn standard(kind: CaseKind) -> Self {
        Self {
            kind,
            sample_rate: 22_050,
            length: 22_050,
            onset: 11_008,
        }
    }

    fn validate(&self, window_length: usize) -> Result<()> {
        if self.sample_rate == 0 {
            return invalid("sample rate must be positive");
        }
        if self.length <= 4 * window_length {
            return invalid(format!(
                "case length {} must exceed four window lengths ({})",
                self.length,
                4 * window_length
            ));
        }
        if self.onset >= self.length {
            return invalid("onset lies outside the signal");
        }
        Ok(())
    }

    /// Percussive component alone, starting at `onset` in a buffer of `len`.
    fn percussive(&self, onset: usize, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        if self.kind.is_transient() {
            let fs = self.sample_rate as f64;
            for (i, v) in out.iter_mut().enumerate().skip(onset) {
                let t = (i - onset) as f64 / fs;
                *v = (TAU * TRANSIENT_FREQUENCY * t).cos() * (-t / TRANSIENT_DECAY).exp();
            }
        } else if onset < len {
            out[onset] = 1.0;
        }
        out
    }

    fn sinusoids(&self, len: usize) -> Vec<f64> {
        let fs = self.sample_rate as f64;
        (0..len)
            .map(|i| {
                self.kind
                    .partials()
                    .iter()
                    .map(|&(f, amp)| amp * (TAU * f * i as f64 / fs).sin())
                    .sum()
            })
            .collect()
    }
}

/// The test signal.
pub fn gen_case(case: &SyntheticCase) -> Result<Signal> {
    let p = case.percussive(case.onset, case.length);
    let s = case.sinusoids(case.length);
    Signal::new(p.iter().zip(&s).map(|(a, b)| a + b).collect(), case.sample_rate)
}

fn stretched_onset(case: &SyntheticCase, alpha: f64) -> usize {
    (alpha * case.onset as f64).round() as usize
}

/// Ideal stretch: percussive part moved to `round(alpha onset)` unchanged,
/// sinusoids regenerated over `ceil(alpha L)` samples.
pub fn gen_ground_truth(case: &SyntheticCase, alpha: f64) -> Result<Signal> {
    let len = stretched_hop(case.length, alpha);
    let p = case.percussive(stretched_onset(case, alpha), len);
    let s = case.sinusoids(len);
    Signal::new(p.iter().zip(&s).map(|(a, b)| a + b).collect(), case.sample_rate)
}

/// Relative magnitude error over the columns in `interval`.
pub fn spectral_error(
    reference: &ComplexSpectrogram,
    estimate: &ComplexSpectrogram,
    interval: RangeInclusive<usize>,
) -> Result<f64> {
    if reference.bins() != estimate.bins() || reference.frames() != estimate.frames() {
        return invalid("spectrograms differ in size");
    }
    if interval.is_empty() || *interval.end() >= reference.frames() {
        return invalid(format!("interval {interval:?} outside {} frames", reference.frames()));
    }
    let channels = reference.channels();
    let (mut num, mut den) = (0.0, 0.0);
    for n in interval {
        for (m, (r, e)) in reference.column(n).iter().zip(estimate.column(n)).enumerate() {
            let w = conjugate_multiplicity(m, channels);
            let d = r.norm() - e.norm();
            num += w * d * d;
            den += w * r.norm_sqr();
        }
    }
    if !(den > 0.0) {
        return Err(Error::UndefinedReference);
    }
    Ok((num / den).sqrt())
}

/// DGT used for scoring: the synthesis window and hop of `cfg`.
pub struct Evaluator {
    grid: UniformGrid,
    window: crate::window::Window,
}

impl Evaluator {
    pub fn new(cfg: &StretchConfig, length: usize) -> Result<Self> {
        cfg.validate()?;
        let hop = cfg.effective_synthesis_hop();
        let m = cfg.channels();
        let block = hop / gcd(hop, m) * m;
        let padded = (length + cfg.window_length).div_ceil(block) * block;
        Ok(Self {
            grid: UniformGrid::new(hop, m, cfg.window_length, padded)?,
            window: make_hann(cfg.window_length)?,
        })
    }

    pub fn analyze(&self, x: &[f64]) -> Result<ComplexSpectrogram> {
        if x.len() > self.grid.signal_length() {
            return invalid("signal longer than the evaluation grid");
        }
        let mut padded = x.to_vec();
        padded.resize(self.grid.signal_length(), 0.0);
        dgt(&padded, &self.window, &self.grid)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Frames where the ideal percussive component exceeds `INTERVAL_FLOOR`
/// times its strongest frame.
pub fn percussive_interval(percussive: &ComplexSpectrogram) -> Result<RangeInclusive<usize>> {
    let channels = percussive.channels();
    let energy: Vec<f64> = (0..percussive.frames())
        .map(|n| {
            percussive
                .column(n)
                .iter()
                .enumerate()
                .map(|(m, c)| c.norm_sqr() * conjugate_multiplicity(m, channels))
                .sum()
        })
        .collect();
    let peak = energy.iter().fold(0.0f64, |a, &b| a.max(b));
    if !(peak > 0.0) {
        return Err(Error::UndefinedReference);
    }
    let above = |e: &f64| *e > INTERVAL_FLOOR * peak;
    let lo = energy.iter().position(above).expect("peak frame qualifies");
    let hi = energy.iter().rposition(above).expect("peak frame qualifies");
    Ok(lo..=hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResult {
    pub method: Method,
    pub case: CaseKind,
    pub alpha: f64,
    pub error: f64,
    pub frames_lo: usize,
    pub frames_hi: usize,
}

/// Stretch `case` with `method` and score it against the ground truth.
pub fn evaluate(method: Method, case: &SyntheticCase, alpha: f64) -> Result<ErrorResult> {
    let cfg = StretchConfig::with_alpha(alpha);
    case.validate(cfg.window_length)?;
    let x = gen_case(case)?;
    let (y, _) = stretch(&x, &cfg, method)?;
    let truth = gen_ground_truth(case, alpha)?;
    let eval = Evaluator::new(&cfg, truth.len())?;
    let percussive = case.percussive(stretched_onset(case, alpha), truth.len());
    let interval = percussive_interval(&eval.analyze(&percussive)?)?;
    let error = spectral_error(
        &eval.analyze(truth.samples())?,
        &eval.analyze(y.samples())?,
        interval.clone(),
    )?;
    Ok(ErrorResult {
        method,
        case: case.kind,
        alpha,
        error,
        frames_lo: *interval.start(),
        frames_hi: *interval.end(),
    })
}

/// Full cross product in method, case, alpha order.
pub fn run_table(methods: &[Method], cases: &[CaseKind], alphas: &[f64]) -> Result<Vec<ErrorResult>> {
    let jobs: Vec<(Method, CaseKind, f64)> = methods
        .iter()
        .flat_map(|&m| cases.iter().flat_map(move |&c| alphas.iter().map(move |&a| (m, c, a))))
        .collect();
    jobs.par_iter()
        .map(|&(m, c, a)| evaluate(m, &SyntheticCase::standard(c), a))
        .collect()
}

pub const CSV_HEADER: &str = "method,case,alpha,error,frames_lo,frames_hi";

pub fn to_csv(results: &[ErrorResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method.name(),
            r.case.name(),
            sig6(r.alpha),
            sig6(r.error),
            r.frames_lo,
            r.frames_hi
        );
    }
    out
}

/// Six significant digits, trailing zeros removed (like C's `%.6g`).
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Two hand-drum-like strikes (damped low partials with a sharp attack) on
/// a quiet sustained tone. Returns the signal and the strike onsets.
pub fn bongo_fixture(sample_rate: u32, length: usize) -> Result<(Signal, Vec<usize>)> {
    let fs = sample_rate as f64;
    let onsets = vec![length / 4, (length * 3) / 5];
    let mut x: Vec<f64> = (0..length)
        .map(|i| 0.05 * (TAU * 440.0 * i as f64 / fs).sin())
        .collect();
    for (k, &p) in onsets.iter().enumerate() {
        let f0 = if k == 0 { 210.0 } else { 340.0 };
        for (i, v) in x.iter_mut().enumerate().skip(p) {
            let t = (i - p) as f64 / fs;
            let body = (TAU * f0 * t).sin() + 0.5 * (TAU * 2.7 * f0 * t).sin();
            *v += 0.6 * body * (-t / 0.035).exp();
        }
        x[p] += 0.8;
    }
    Ok((Signal::new(x, sample_rate)?, onsets))
}
