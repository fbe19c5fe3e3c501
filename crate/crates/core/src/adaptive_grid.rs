//! Adaptive analysis grid around percussive events.
//!
//! Each event shortens the windows in its neighbourhood down to a length set
//! by its compression rate, ramping by `2a` per frame. The resulting
//! window-length vector (on the original uniform grid) is cut into constant
//! and transition regions, and each region is re-sampled with its own hop
//! sequence. Region boundaries stay on the original grid and every region
//! keeps its original duration, so the total length is unchanged.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::NonuniformGrid;
use crate::percussion::PercussiveEvents;

/// Shortest window for an event of rate `rate`: `floor(V - r^2 (1 - 1/alpha) V)`,
/// clamped to at least 2 samples.
pub fn shortest_window(long_window: usize, rate: f64, alpha: f64) -> Result<usize> {
    if long_window < 2 {
        return invalid(format!("long window must be at least 2 samples, got {long_window}"));
    }
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return invalid(format!("stretch factor must be >= 1, got {alpha}"));
    }
    if !(0.0..=1.0).contains(&rate) {
        return invalid(format!("compression rate must lie in [0, 1], got {rate}"));
    }
    let v = long_window as f64;
    let s = (v - rate * rate * (1.0 - 1.0 / alpha) * v + 1e-9).floor();
    Ok((s as usize).clamp(2, long_window))
}

/// `ceil(V / 2a)`: frames between the edge and the centre of a long window.
pub fn half_span(long_window: usize, hop: usize) -> usize {
    long_window.div_ceil(2 * hop)
}

/// Target window length for every frame of the original uniform grid.
///
/// Neighbourhoods that would cross the signal ends are truncated rather
/// than wrapped.
pub fn window_length_vector(
    events: &PercussiveEvents,
    long_window: usize,
    hop: usize,
    frames: usize,
    alpha: f64,
) -> Result<Vec<usize>> {
    if hop == 0 {
        return invalid("hop must be positive");
    }
    let n_half = half_span(long_window, hop) as i64;
    let mut v = vec![long_window; frames];
    for e in events.events() {
        let s = shortest_window(long_window, e.rate, alpha)? as i64;
        let center = e.frame as i64;
        let lo = (center - n_half).max(0);
        let hi = (center + n_half).min(frames as i64 - 1);
        for n in lo..=hi {
            let ramp = 2 * hop as i64 * (n - center).abs() + long_window as i64 - 2 * hop as i64 * n_half;
            let cand = s.max(ramp) as usize;
            let slot = &mut v[n as usize];
            *slot = (*slot).min(cand);
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    /// (i) long windows, original hop.
    ConstantLong,
    /// (ii) a plateau of shortened windows.
    ConstantShort,
    /// (iii) windows getting shorter.
    Shrinking,
    /// (iv) windows getting longer.
    Growing,
}

/// A run of original-grid hops `[start, end)` with one behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Region {
    pub kind: RegionKind,
    pub start: usize,
    pub end: usize,
}

impl Region {
    pub fn frames(&self) -> usize {
        self.end - self.start
    }
}

/// Split the window-length vector into maximal runs.
///
/// The hop leaving frame `n` is classified by comparing `v[n]` and
/// `v[n + 1]` (the closing hop compares the last frame with itself).
/// Short plateaus at different levels are kept apart.
pub fn segment_regions(v: &[usize], long_window: usize) -> Vec<Region> {
    let n = v.len();
    let kind_at = |i: usize| {
        let here = v[i];
        let next = if i + 1 < n { v[i + 1] } else { here };
        match next.cmp(&here) {
            std::cmp::Ordering::Less => RegionKind::Shrinking,
            std::cmp::Ordering::Greater => RegionKind::Growing,
            std::cmp::Ordering::Equal if here >= long_window => RegionKind::ConstantLong,
            std::cmp::Ordering::Equal => RegionKind::ConstantShort,
        }
    };
    let mut regions: Vec<Region> = Vec::new();
    for i in 0..n {
        let kind = kind_at(i);
        if let Some(last) = regions.last_mut() {
            let same_level = kind != RegionKind::ConstantShort || v[last.start] == v[i];
            if last.kind == kind && same_level {
                last.end = i + 1;
                continue;
            }
        }
        regions.push(Region {
            kind,
            start: i,
            end: i + 1,
        });
    }
    regions
}

/// Adaptive hop for a plateau of length `S`: `round(S / (alpha beta))`, at least 1.
pub fn adaptive_hop(short_window: usize, alpha: f64, beta: f64) -> usize {
    ((short_window as f64 / (alpha * beta)).round() as usize).max(1)
}

/// Number of ramp frames for a transition of `frames` original hops:
/// `floor(2 / (a_st + a_end) * (a N_org - (a_st - a_end) / 2))`.
pub fn transition_frame_count(start_hop: usize, end_hop: usize, frames: usize, hop: usize) -> Result<usize> {
    let (st, en) = (start_hop as f64, end_hop as f64);
    let duration = (hop * frames) as f64;
    let count = (2.0 / (st + en) * (duration - (st - en) / 2.0) + 1e-9).floor();
    if count < 1.0 {
        return Err(Error::DegenerateTransition {
            start: start_hop,
            end: end_hop,
            frames,
        });
    }
    Ok(count as usize)
}

/// Linear hop ramp for a transition, ordered from the long-window end.
///
/// `a_l = floor(h_long - (l / N_new) (h_long - h_short))` for `l = 1..=N_new`,
/// followed by correction hops `floor(R / 2)` and `R - floor(R / 2)` (zeros
/// dropped) so the total is exactly `frames * hop`. If the ramp alone
/// overshoots the duration, `N_new` is reduced until it fits.
pub fn transition_hops(long_hop: usize, short_hop: usize, ramp_frames: usize, frames: usize, hop: usize) -> Vec<usize> {
    let duration = frames * hop;
    let mut count = ramp_frames.max(1);
    loop {
        let ramp = linear_ramp(long_hop, short_hop, count);
        let total: usize = ramp.iter().sum();
        if total <= duration {
            let mut hops = ramp;
            let residual = duration - total;
            let first = residual / 2;
            for c in [first, residual - first] {
                if c > 0 {
                    hops.push(c);
                }
            }
            return hops;
        }
        if count == 1 {
            return vec![duration];
        }
        count -= 1;
    }
}

fn linear_ramp(long_hop: usize, short_hop: usize, count: usize) -> Vec<usize> {
    let (hl, hs, n) = (long_hop as i64, short_hop as i64, count as i64);
    (1..=n)
        .map(|l| ((hl * n - l * (hl - hs)).div_euclid(n)).max(1) as usize)
        .collect()
}

/// Hop assignment for one region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionPlan {
    pub region: Region,
    pub start_hop: usize,
    pub end_hop: usize,
    pub hops: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveGrid {
    pub grid: NonuniformGrid,
    pub plans: Vec<RegionPlan>,
    /// Window-length target on the original uniform grid.
    pub target: Vec<usize>,
    pub hop: usize,
}

/// Parameters shared by the grid-building steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub hop: usize,
    pub long_window: usize,
    pub channels: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// Build the nonuniform analysis grid from the window-length target.
pub fn build_grid(
    v: &[usize],
    regions: &[Region],
    events: &PercussiveEvents,
    params: &GridParams,
) -> Result<AdaptiveGrid> {
    let GridParams {
        hop,
        long_window,
        channels,
        alpha,
        beta,
    } = *params;
    if v.is_empty() {
        return invalid("empty window-length vector");
    }
    if !(beta > 1.0) {
        return invalid(format!("beta must exceed 1, got {beta}"));
    }
    let n_half = half_span(long_window, hop);
    let frames = v.len();
    let level = |b: usize| v[b.min(frames - 1)];

    let boundary_hop = |idx: usize, at_start: bool| -> usize {
        // Boundary frame and the regions on either side of it.
        let (b, before, after) = if at_start {
            let r = regions[idx];
            (r.start, idx.checked_sub(1).map(|i| regions[i].kind), Some(r.kind))
        } else {
            let r = regions[idx];
            (r.end, Some(r.kind), regions.get(idx + 1).map(|x| x.kind))
        };
        let vb = level(b);
        if vb >= long_window {
            return hop;
        }
        let rises_into = matches!(before, None | Some(RegionKind::Growing));
        let falls_from = matches!(after, None | Some(RegionKind::Shrinking));
        let is_crest =
            (after == Some(RegionKind::Shrinking) && rises_into) || (before == Some(RegionKind::Growing) && falls_from);
        if is_crest {
            let bound = events
                .events()
                .windows(2)
                .find(|w| w[0].frame < b && b < w[1].frame)
                .map(|w| (hop * (w[1].frame - w[0].frame) + long_window) as i64 - (2 * hop * n_half) as i64)
                .unwrap_or(vb as i64)
                .max(1) as f64;
            ((hop as f64 * bound / long_window as f64).round() as usize).max(1)
        } else {
            adaptive_hop(vb, alpha, beta)
        }
    };

    let mut plans = Vec::with_capacity(regions.len());
    let mut expected_start = 0;
    for (idx, &region) in regions.iter().enumerate() {
        if region.start != expected_start || region.end <= region.start {
            return invalid("regions must partition the frames in order");
        }
        expected_start = region.end;
        let duration = region.frames() * hop;
        let (start_hop, end_hop, hops) = match region.kind {
            RegionKind::ConstantLong => (hop, hop, vec![hop; region.frames()]),
            RegionKind::ConstantShort => {
                let h = adaptive_hop(v[region.start], alpha, beta);
                let mut hops = vec![h; duration / h];
                let rest = duration - h * (duration / h);
                if rest > 0 {
                    hops.push(rest);
                }
                (h, h, hops)
            }
            RegionKind::Shrinking | RegionKind::Growing => {
                let a_st = boundary_hop(idx, true);
                let a_end = boundary_hop(idx, false);
                let hops = match transition_frame_count(a_st, a_end, region.frames(), hop) {
                    Ok(count) => {
                        let (long, short) = if region.kind == RegionKind::Shrinking {
                            (a_st, a_end)
                        } else {
                            (a_end, a_st)
                        };
                        let mut h = transition_hops(long, short, count, region.frames(), hop);
                        if region.kind == RegionKind::Growing {
                            h.reverse();
                        }
                        h
                    }
                    Err(Error::DegenerateTransition { .. }) => vec![duration],
                    Err(e) => return Err(e),
                };
                (a_st, a_end, hops)
            }
        };
        debug_assert_eq!(hops.iter().sum::<usize>(), duration);
        plans.push(RegionPlan {
            region,
            start_hop,
            end_hop,
            hops,
        });
    }
    if expected_start != frames {
        return invalid("regions do not cover every frame");
    }

    let hops: Vec<usize> = plans.iter().flat_map(|p| p.hops.iter().copied()).collect();
    let mut lengths = Vec::with_capacity(hops.len());
    let mut pos = 0usize;
    for &h in &hops {
        lengths.push(interpolated_length(v, pos, hop).min(channels));
        pos += h;
    }
    let grid = NonuniformGrid::new(hops, lengths, channels)?;
    Ok(AdaptiveGrid {
        grid,
        plans,
        target: v.to_vec(),
        hop,
    })
}

/// Linear interpolation of `v` at sample `pos`, rounded down to an even length >= 2.
fn interpolated_length(v: &[usize], pos: usize, hop: usize) -> usize {
    let idx = (pos / hop).min(v.len() - 1);
    let next = (idx + 1).min(v.len() - 1);
    let frac = (pos - idx * hop) as f64 / hop as f64;
    let value = v[idx] as f64 + frac * (v[next] as f64 - v[idx] as f64);
    let floor = (value + 1e-9).floor() as usize;
    (floor - floor % 2).max(2)
}

/// Window lengths, regions and grid for a set of events in one call.
pub fn adaptive_grid(events: &PercussiveEvents, frames: usize, params: &GridParams) -> Result<AdaptiveGrid> {
    let v = window_length_vector(events, params.long_window, params.hop, frames, params.alpha)?;
    let regions = segment_regions(&v, params.long_window);
    build_grid(&v, &regions, events, params)
}
