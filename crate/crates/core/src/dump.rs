//! Diagnostic CSV tables.

use std::fmt::Write as _;

use crate::grid::NonuniformGrid;
use crate::percussion::PercussiveEvents;
use crate::spectrogram::RealMatrix;

/// `frame,position,rate`; positions are in samples on the analysis grid.
pub fn events_csv(events: &PercussiveEvents, hop: usize) -> String {
    let mut out = String::from("frame,position,rate\n");
    for e in events.events() {
        let _ = writeln!(out, "{},{},{}", e.frame, e.frame * hop, e.rate);
    }
    out
}

/// `frame,position,hop,window_length`; the hop column sums to the grid length.
pub fn grid_csv(grid: &NonuniformGrid) -> String {
    let mut out = String::from("frame,position,hop,window_length\n");
    for (n, ((p, h), w)) in grid
        .positions()
        .iter()
        .zip(grid.hops())
        .zip(grid.window_lengths())
        .enumerate()
    {
        let _ = writeln!(out, "{n},{p},{h},{w}");
    }
    out
}

/// `frame,rate`.
pub fn curve_csv(curve: &[f64]) -> String {
    let mut out = String::from("frame,rate\n");
    for (n, r) in curve.iter().enumerate() {
        let _ = writeln!(out, "{n},{r}");
    }
    out
}

/// `frame,bin` for every set entry of a binary mask.
pub fn mask_csv(mask: &RealMatrix) -> String {
    let mut out = String::from("frame,bin\n");
    for n in 0..mask.cols {
        for (m, &v) in mask.column(n).iter().enumerate() {
            if v != 0.0 {
                let _ = writeln!(out, "{n},{m}");
            }
        }
    }
    out
}
