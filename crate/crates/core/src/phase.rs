//! Synthesis phase for time stretching: instantaneous frequency from
//! heterodyned phase differences, recursive propagation over (possibly
//! variable) stretched hops, and identity phase locking.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::grid::{stretched_hop, NonuniformGrid};
use crate::percussion::principal;
use crate::spectrogram::RealMatrix;

/// Hop arriving at each column: entry `n` is `A_n - A_{n-1}`.
///
/// Entry 0 is the closing hop of the circle; it is never used by the
/// derivative, whose first column is seeded separately.
pub fn incoming_hops(grid: &NonuniformGrid) -> Vec<usize> {
    (0..grid.frames()).map(|n| grid.incoming_hop(n)).collect()
}

/// Phase time derivative in radians per sample.
///
/// `dphi[m, n] = principal(phi[m, n] - phi[m, n-1] - 2 pi m a_n / M) / a_n + 2 pi m / M`,
/// with column 0 set to the bin centre frequency `2 pi m / M`.
pub fn phase_time_derivative(phase: &RealMatrix, incoming: &[usize], channels: usize) -> Result<RealMatrix> {
    if incoming.len() != phase.cols {
        return invalid(format!("{} hops for {} columns", incoming.len(), phase.cols));
    }
    if phase.cols == 0 || channels == 0 {
        return invalid("empty phase matrix");
    }
    let bins = phase.rows;
    let omega = |m: usize| TAU * m as f64 / channels as f64;
    let mut out = RealMatrix::zeros(bins, phase.cols);
    for (m, v) in out.column_mut(0).iter_mut().enumerate() {
        *v = omega(m);
    }
    out.data[bins..]
        .par_chunks_mut(bins)
        .enumerate()
        .try_for_each(|(i, col)| {
            let n = i + 1;
            let a = incoming[n];
            if a == 0 {
                return invalid(format!("zero hop into column {n}"));
            }
            let (prev, cur) = (phase.column(n - 1), phase.column(n));
            for (m, v) in col.iter_mut().enumerate() {
                let w = omega(m);
                *v = principal(cur[m] - prev[m] - w * a as f64) / a as f64 + w;
            }
            Ok(())
        })?;
    Ok(out)
}

/// Accumulate the synthesis phase: `out[:, 0] = init`,
/// `out[m, n] = out[m, n-1] + ceil(alpha a_n) dphi[m, n]`.
pub fn propagate_phase(dphi: &RealMatrix, alpha: f64, incoming: &[usize], init: &[f64]) -> Result<RealMatrix> {
    if incoming.len() != dphi.cols || init.len() != dphi.rows {
        return invalid("phase derivative, hops and initial column disagree in size");
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return invalid(format!("stretch factor must be positive, got {alpha}"));
    }
    let mut out = RealMatrix::zeros(dphi.rows, dphi.cols);
    if dphi.cols == 0 {
        return Ok(out);
    }
    out.column_mut(0).copy_from_slice(init);
    for n in 1..dphi.cols {
        let step = stretched_hop(incoming[n], alpha) as f64;
        let (done, rest) = out.data.split_at_mut(n * dphi.rows);
        let prev = &done[(n - 1) * dphi.rows..];
        for ((o, &p), &d) in rest[..dphi.rows].iter_mut().zip(prev).zip(dphi.column(n)) {
            *o = p + step * d;
        }
    }
    Ok(out)
}

/// Relative margin by which a peak must exceed both neighbours.
const PEAK_MARGIN: f64 = 1e-6;

/// Spectral peaks of one magnitude column above `floor`.
pub fn spectral_peaks(column: &[f64], floor: f64) -> Vec<usize> {
    let n = column.len();
    (0..n)
        .filter(|&m| {
            let v = column[m];
            if !(v > floor) {
                return false;
            }
            let bar = v * (1.0 - PEAK_MARGIN);
            let left_ok = m == 0 || column[m - 1] < bar;
            let right_ok = m + 1 == n || column[m + 1] < bar;
            left_ok && right_ok
        })
        .collect()
}

/// Peak owning each bin: regions of influence split at the magnitude valley
/// between neighbouring peaks (the valley bin goes to the left peak).
/// `None` when the column has no peak.
pub fn regions_of_influence(column: &[f64], peaks: &[usize]) -> Vec<Option<usize>> {
    let mut owner = vec![None; column.len()];
    let Some(&first) = peaks.first() else {
        return owner;
    };
    let mut start = 0;
    for (i, &p) in peaks.iter().enumerate() {
        let end = match peaks.get(i + 1) {
            Some(&q) => {
                let mut valley = p;
                for m in p + 1..q {
                    if column[m] < column[valley] {
                        valley = m;
                    }
                }
                valley + 1
            }
            None => column.len(),
        };
        for slot in &mut owner[start..end] {
            *slot = Some(p);
        }
        start = end;
    }
    debug_assert_eq!(owner[0], Some(first));
    owner
}

/// Identity phase locking.
///
/// Every bin is rotated by the same offset as the peak that owns it:
/// `out[m] = phase[m] + (propagated[p] - phase[p])`. Peaks therefore keep
/// their propagated phase; columns without peaks pass through unchanged.
pub fn identity_phase_lock(
    magnitude: &RealMatrix,
    phase: &RealMatrix,
    propagated: &RealMatrix,
    floor: f64,
) -> Result<RealMatrix> {
    if magnitude.rows != phase.rows
        || magnitude.cols != phase.cols
        || propagated.rows != phase.rows
        || propagated.cols != phase.cols
    {
        return invalid("magnitude and phase matrices disagree in size");
    }
    let mut out = propagated.clone();
    let rows = phase.rows.max(1);
    out.data.par_chunks_mut(rows).enumerate().for_each(|(n, col)| {
        let mag = magnitude.column(n);
        let peaks = spectral_peaks(mag, floor);
        let owner = regions_of_influence(mag, &peaks);
        let orig = phase.column(n);
        let prop = propagated.column(n);
        for (m, v) in col.iter_mut().enumerate() {
            match owner[m] {
                Some(p) if p != m => *v = orig[m] + (prop[p] - orig[p]),
                _ => {}
            }
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_bin_sinusoid_derivative() {
        let (m0, a, channels) = (5usize, 16usize, 64usize);
        let mut phase = RealMatrix::zeros(33, 6);
        for n in 0..6 {
            let p = principal(TAU * m0 as f64 * (a * n) as f64 / channels as f64 + 0.3);
            phase.set(m0, n, p);
        }
        let d = phase_time_derivative(&phase, &[a; 6], channels).unwrap();
        for n in 0..6 {
            assert!((d.get(m0, n) - TAU * m0 as f64 / channels as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_increment_keeps_initial_phase() {
        let d = RealMatrix::zeros(4, 5);
        let init = [0.1, -0.2, 0.3, 1.0];
        let p = propagate_phase(&d, 2.0, &[8; 5], &init).unwrap();
        for n in 0..5 {
            assert_eq!(p.column(n), &init);
        }
    }

    #[test]
    fn peaks_need_a_strict_margin() {
        assert_eq!(spectral_peaks(&[0.0, 1.0, 0.5, 0.5, 2.0], 0.1), vec![1, 4]);
        assert!(spectral_peaks(&[1.0, 1.0, 1.0], 0.1).is_empty());
        assert!(spectral_peaks(&[0.0, 0.05, 0.0], 0.1).is_empty());
    }

    #[test]
    fn valley_goes_to_left_peak() {
        let col = [0.2, 1.0, 0.4, 0.1, 0.1, 0.6, 0.3];
        let owner = regions_of_influence(&col, &[1, 5]);
        assert_eq!(
            owner,
            vec![Some(1), Some(1), Some(1), Some(1), Some(5), Some(5), Some(5)]
        );
    }
}
