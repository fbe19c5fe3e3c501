//! Uniform and nonstationary discrete Gabor transforms.
//!
//! Analysis follows the frequency-invariant phase convention
//!
//! ```text
//! X[m, n] = sum_l x[l] g_n[l - A_n] exp(-2 pi i m (l - A_n) / M)
//! ```
//!
//! with circular indexing over the signal. Each frame is evaluated with one
//! length-`M` real FFT of the windowed segment, which equals the direct sum as
//! long as `W_n <= M` (painless case). Synthesis overlap-adds the inverse
//! transforms weighted by the dual windows; in the painless case the frame
//! operator is diagonal and the duals are `g_n[k] / S[A_n + k]` with
//! `S[l] = M sum_n g_n[l - A_n]^2`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{invalid, Error, Result};
use crate::grid::{NonuniformGrid, UniformGrid};
use crate::spectrogram::{stored_bins, ComplexSpectrogram, Grid};
use crate::window::Window;

/// Relative floor on the frame operator below which inversion is refused.
pub const FRAME_OPERATOR_TOLERANCE: f64 = 1e-12;

/// DGT of `x` on a uniform grid with a single analysis window.
pub fn dgt(x: &[f64], window: &Window, grid: &UniformGrid) -> Result<ComplexSpectrogram> {
    check_length(x.len(), grid.signal_length())?;
    check_window(window, grid.window_length(), grid.channels())?;
    let positions = grid.positions();
    let windows = vec![window; grid.frames()];
    let data = analyze(x, &positions, &windows, grid.channels());
    Ok(ComplexSpectrogram::from_parts(data, Grid::Uniform(grid.clone())))
}

/// Canonical dual of `window` for the uniform grid: `g / (M sum_n g[l - a n]^2)`.
pub fn dual_window(window: &Window, grid: &UniformGrid) -> Result<Window> {
    check_window(window, grid.window_length(), grid.channels())?;
    let nonuniform = grid.to_nonuniform();
    let s = frame_operator(&[window], &nonuniform);
    let duals = divide_by_frame_operator(&[window], &nonuniform, &s)?;
    Ok(duals.into_iter().next().expect("grid has frames"))
}

/// Inverse DGT by overlap-add of the dual-windowed frames.
pub fn idgt(coefficients: &ComplexSpectrogram, dual: &Window, grid: &UniformGrid) -> Result<Vec<f64>> {
    check_dims(coefficients, grid.channels(), grid.frames())?;
    check_window(dual, grid.window_length(), grid.channels())?;
    let positions = grid.positions();
    let duals = vec![dual; grid.frames()];
    Ok(synthesize(coefficients, &positions, &duals, grid.signal_length()))
}

/// Nonstationary DGT with one window per frame.
pub fn nsdgt(x: &[f64], windows: &[Window], grid: &NonuniformGrid) -> Result<ComplexSpectrogram> {
    check_length(x.len(), grid.signal_length())?;
    let windows = check_windows(windows, grid)?;
    let data = analyze(x, grid.positions(), &windows, grid.channels());
    Ok(ComplexSpectrogram::from_parts(data, Grid::Nonuniform(grid.clone())))
}

/// Painless-case canonical duals `g_n[k] / S[A_n + k]`.
///
/// Fails with [`Error::FrameNotInvertible`] if the frame operator is not
/// strictly positive on the whole signal.
pub fn nsdgt_dual_windows(windows: &[Window], grid: &NonuniformGrid) -> Result<Vec<Window>> {
    let windows = check_windows(windows, grid)?;
    let s = frame_operator(&windows, grid);
    let max = s.iter().fold(0.0f64, |m, &v| m.max(v));
    let tol = FRAME_OPERATOR_TOLERANCE * max;
    if let Some((index, &value)) = s.iter().enumerate().find(|(_, &v)| v <= tol) {
        return Err(Error::FrameNotInvertible { index, value });
    }
    divide_by_frame_operator(&windows, grid, &s)
}

/// Inverse NSDGT: overlap-add of per-frame inverse FFTs weighted by the duals
/// placed at the positions of `grid`.
///
/// `grid` only needs to match the coefficient dimensions, so coefficients
/// analysed on one grid can be synthesized on a stretched one.
pub fn insdgt(coefficients: &ComplexSpectrogram, duals: &[Window], grid: &NonuniformGrid) -> Result<Vec<f64>> {
    check_dims(coefficients, grid.channels(), grid.frames())?;
    let duals = check_windows(duals, grid)?;
    Ok(synthesize(coefficients, grid.positions(), &duals, grid.signal_length()))
}

/// `S[l] = M sum_n g_n[l - A_n]^2` over the circular signal.
pub fn frame_operator(windows: &[&Window], grid: &NonuniformGrid) -> Vec<f64> {
    let len = grid.signal_length();
    let m = grid.channels() as f64;
    let mut s = vec![0.0; len];
    for (n, &pos) in grid.positions().iter().enumerate() {
        let w = windows[n.min(windows.len() - 1)];
        for (j, &g) in w.values().iter().enumerate() {
            s[wrap(pos as isize + w.offset(j), len)] += m * g * g;
        }
    }
    s
}

fn divide_by_frame_operator(windows: &[&Window], grid: &NonuniformGrid, s: &[f64]) -> Result<Vec<Window>> {
    let len = grid.signal_length();
    let max = s.iter().fold(0.0f64, |m, &v| m.max(v));
    let tol = FRAME_OPERATOR_TOLERANCE * max;
    let frames = if windows.len() == 1 { 1 } else { grid.frames() };
    let mut duals = Vec::with_capacity(frames);
    for n in 0..frames {
        let w = windows[n];
        let pos = grid.positions()[n] as isize;
        let mut values = Vec::with_capacity(w.len());
        for (j, &g) in w.values().iter().enumerate() {
            if g == 0.0 {
                values.push(0.0);
                continue;
            }
            let index = wrap(pos + w.offset(j), len);
            let value = s[index];
            if value <= tol {
                return Err(Error::FrameNotInvertible { index, value });
            }
            values.push(g / value);
        }
        duals.push(Window::from_values(values)?);
    }
    Ok(duals)
}

#[inline]
pub(crate) fn wrap(i: isize, len: usize) -> usize {
    i.rem_euclid(len as isize) as usize
}

fn check_length(got: usize, want: usize) -> Result<()> {
    if got != want {
        return invalid(format!("signal has {got} samples but the grid expects {want}"));
    }
    Ok(())
}

fn check_window(w: &Window, expected_len: usize, channels: usize) -> Result<()> {
    if w.len() > channels {
        return Err(Error::PainlessViolated {
            window: w.len(),
            channels,
        });
    }
    if w.len() != expected_len {
        return invalid(format!(
            "window has {} samples but the grid declares {expected_len}",
            w.len()
        ));
    }
    Ok(())
}

fn check_windows<'a>(windows: &'a [Window], grid: &NonuniformGrid) -> Result<Vec<&'a Window>> {
    if windows.len() != grid.frames() {
        return invalid(format!("{} windows for {} frames", windows.len(), grid.frames()));
    }
    for (w, &len) in windows.iter().zip(grid.window_lengths()) {
        check_window(w, len, grid.channels())?;
    }
    Ok(windows.iter().collect())
}

fn check_dims(c: &ComplexSpectrogram, channels: usize, frames: usize) -> Result<()> {
    if c.channels() != channels || c.frames() != frames {
        return invalid(format!(
            "coefficients are {}x{} but the grid is {channels}x{frames}",
            c.channels(),
            c.frames()
        ));
    }
    Ok(())
}

fn forward_plan(m: usize) -> Arc<dyn RealToComplex<f64>> {
    RealFftPlanner::<f64>::new().plan_fft_forward(m)
}

fn inverse_plan(m: usize) -> Arc<dyn ComplexToReal<f64>> {
    RealFftPlanner::<f64>::new().plan_fft_inverse(m)
}

/// Frame-by-frame analysis; returns frame-major stored bins.
pub(crate) fn analyze(x: &[f64], positions: &[usize], windows: &[&Window], channels: usize) -> Vec<Complex64> {
    let len = x.len();
    let bins = stored_bins(channels);
    let plan = forward_plan(channels);
    let mut data = vec![Complex64::new(0.0, 0.0); bins * positions.len()];
    data.par_chunks_mut(bins).enumerate().for_each_init(
        || (plan.make_input_vec(), plan.make_scratch_vec()),
        |(buf, scratch), (n, out)| {
            buf.iter_mut().for_each(|v| *v = 0.0);
            let w = windows[n];
            let pos = positions[n] as isize;
            for (j, &g) in w.values().iter().enumerate() {
                let k = w.offset(j);
                buf[wrap(k, channels)] += x[wrap(pos + k, len)] * g;
            }
            plan.process_with_scratch(buf, out, scratch)
                .expect("buffer sizes come from the plan");
        },
    );
    data
}

/// Overlap-add synthesis of `coefficients` at `positions` into a circular
/// output of `len` samples.
pub(crate) fn synthesize(
    coefficients: &ComplexSpectrogram,
    positions: &[usize],
    duals: &[&Window],
    len: usize,
) -> Vec<f64> {
    let channels = coefficients.channels();
    let plan = inverse_plan(channels);
    let frames: Vec<Vec<f64>> = (0..positions.len())
        .into_par_iter()
        .map_init(
            || (plan.make_input_vec(), plan.make_output_vec(), plan.make_scratch_vec()),
            |(spec, time, scratch), n| {
                spec.copy_from_slice(coefficients.column(n));
                // The inverse real FFT takes the real part of the Hermitian
                // extension; DC and Nyquist must be real for that.
                spec[0].im = 0.0;
                if channels % 2 == 0 {
                    spec[channels / 2].im = 0.0;
                }
                plan.process_with_scratch(spec, time, scratch)
                    .expect("buffer sizes come from the plan");
                let w = duals[n];
                w.values()
                    .iter()
                    .enumerate()
                    .map(|(j, &d)| d * time[wrap(w.offset(j), channels)])
                    .collect()
            },
        )
        .collect();
    let mut out = vec![0.0; len];
    for (n, frame) in frames.iter().enumerate() {
        let w = duals[n];
        let pos = positions[n] as isize;
        for (j, v) in frame.iter().enumerate() {
            out[wrap(pos + w.offset(j), len)] += v;
        }
    }
    out
}
