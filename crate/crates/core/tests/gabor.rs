use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gabor_stretch::adaptive_grid::{adaptive_grid, GridParams};
use gabor_stretch::eval::bongo_fixture;
use gabor_stretch::gabor::{dgt, dual_window, frame_operator, idgt, insdgt, nsdgt, nsdgt_dual_windows};
use gabor_stretch::pipeline::{analyze_percussion, grid_windows, StretchConfig};
use gabor_stretch::signal::relative_l2;
use gabor_stretch::spectrogram::{ComplexSpectrogram, Grid};
use gabor_stretch::{make_hann, Error, NonuniformGrid, UniformGrid, Window};

fn noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Direct evaluation of `sum_l x[l] g[l - A] exp(-2 pi i m (l - A) / M)` for
/// the stored bins of one frame, summing over the window support.
fn naive_column(x: &[f64], w: &Window, pos: usize, channels: usize) -> Vec<Complex64> {
    let len = x.len() as isize;
    let twiddle: Vec<Complex64> = (0..channels)
        .map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / channels as f64))
        .collect();
    (0..=channels / 2)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &g) in w.values().iter().enumerate() {
                let off = w.offset(j);
                let l = (pos as isize + off).rem_euclid(len) as usize;
                let k = (m as isize * off).rem_euclid(channels as isize) as usize;
                acc += twiddle[k] * (x[l] * g);
            }
            acc
        })
        .collect()
}

fn frobenius_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

#[test]
fn dgt_matches_direct_sum_on_noise() {
    let (len, hop, m, w) = (4096, 128, 2048, 2048);
    let x = noise(len, 1);
    let grid = UniformGrid::new(hop, m, w, len).unwrap();
    let g = make_hann(w).unwrap();
    let c = dgt(&x, &g, &grid).unwrap();
    let mut naive = Vec::new();
    for pos in grid.positions() {
        naive.extend(naive_column(&x, &g, pos, m));
    }
    assert!(frobenius_rel(c.data(), &naive) < 1e-10);
}

#[test]
fn impulse_at_frame_position_gives_flat_column() {
    let (len, hop, m, w) = (1024, 32, 256, 128);
    let grid = UniformGrid::new(hop, m, w, len).unwrap();
    let g = make_hann(w).unwrap();
    let mut x = vec![0.0; len];
    x[5 * hop] = 1.0;
    let c = dgt(&x, &g, &grid).unwrap();
    let expect = g.values()[g.center()];
    for v in c.column(5) {
        assert!((v.norm() - expect).abs() < 1e-12);
    }
}

#[test]
fn constant_signal_dc_is_window_sum_everywhere() {
    let (len, hop, m, w) = (1024, 64, 256, 200);
    let grid = UniformGrid::new(hop, m, w, len).unwrap();
    let g = make_hann(w).unwrap();
    let c = dgt(&vec![1.0; len], &g, &grid).unwrap();
    let sum: f64 = g.values().iter().sum();
    for n in 0..grid.frames() {
        assert!((c.get(0, n).re - sum).abs() < 1e-9);
        assert!(c.get(0, n).im.abs() < 1e-9);
    }
}

#[test]
fn round_trip_reference_configuration() {
    let (hop, m, w) = (64, 4096, 2048);
    let len = 6 * 4096;
    let grid = UniformGrid::new(hop, m, w, len).unwrap();
    let g = make_hann(w).unwrap();
    let dual = dual_window(&g, &grid).unwrap();
    for seed in 0..3 {
        let x = noise(len, 10 + seed);
        let y = idgt(&dgt(&x, &g, &grid).unwrap(), &dual, &grid).unwrap();
        assert!(relative_l2(&y, &x) < 1e-10);
    }
}

/// `sum_n g[l - n a]^2` computed directly on the circle.
fn squared_overlap(g: &Window, hop: usize, len: usize) -> Vec<f64> {
    let mut s = vec![0.0; len];
    for pos in (0..len).step_by(hop) {
        for (j, &v) in g.values().iter().enumerate() {
            let l = (pos as isize + g.offset(j)).rem_euclid(len as isize) as usize;
            s[l] += v * v;
        }
    }
    s
}

#[test]
fn uniform_dual_matches_direct_overlap_oracle() {
    let (w, m, len) = (64, 128, 1024);
    let g = make_hann(w).unwrap();
    // Squared Hann does not overlap-add to a constant at half a window.
    let half = squared_overlap(&g, w / 2, len);
    let (lo, hi) = half.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo > 1.5, "{lo} .. {hi}");
    for hop in [w / 2, w / 4] {
        let grid = UniformGrid::new(hop, m, w, len).unwrap();
        let s = squared_overlap(&g, hop, len);
        let dual = dual_window(&g, &grid).unwrap();
        for (j, (&d, &v)) in dual.values().iter().zip(g.values()).enumerate() {
            // Every frame sees the same S pattern; check frame 0's support.
            let l = (g.offset(j)).rem_euclid(len as isize) as usize;
            assert!(
                (d - v / (m as f64 * s[l])).abs() < 1e-12 * (1.0 + d.abs()),
                "hop {hop} j {j}"
            );
        }
    }
}

#[test]
fn single_frame_dual_is_reciprocal_on_support() {
    let g = make_hann(64).unwrap();
    let grid = UniformGrid::new(128, 128, 64, 128).unwrap();
    let dual = dual_window(&g, &grid).unwrap();
    for (d, v) in dual.values().iter().zip(g.values()) {
        if *v > 0.0 {
            assert!((d - 1.0 / (128.0 * v)).abs() < 1e-9 * d.abs());
        }
    }
}

#[test]
fn disjoint_rectangular_windows_have_reciprocal_duals() {
    let grid = NonuniformGrid::new(vec![8, 8], vec![8, 8], 16).unwrap();
    let rect = |v: f64| Window::from_values(vec![v; 8]).unwrap();
    let windows = vec![rect(1.0), rect(0.5)];
    let duals = nsdgt_dual_windows(&windows, &grid).unwrap();
    for (w, d) in windows.iter().zip(&duals) {
        for (g, gd) in w.values().iter().zip(d.values()) {
            assert!((gd - g / (16.0 * g * g)).abs() < 1e-15);
        }
    }
}

#[test]
fn zero_coefficients_give_silence() {
    let grid = UniformGrid::new(32, 128, 128, 512).unwrap();
    let g = make_hann(128).unwrap();
    let dual = dual_window(&g, &grid).unwrap();
    let zero = ComplexSpectrogram::zeros(Grid::Uniform(grid.clone()));
    assert!(idgt(&zero, &dual, &grid).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn single_coefficient_synthesis_matches_overlap_add_oracle() {
    let (len, hop, m, w) = (512, 32, 128, 96);
    let grid = UniformGrid::new(hop, m, w, len).unwrap();
    let g = make_hann(w).unwrap();
    let dual = dual_window(&g, &grid).unwrap();
    let (m0, n0) = (7, 3);
    let c = Complex64::new(0.3, -0.8);
    let mut coeffs = ComplexSpectrogram::zeros(Grid::Uniform(grid.clone()));
    coeffs.set(m0, n0, c);
    let y = idgt(&coeffs, &dual, &grid).unwrap();
    let mut oracle = vec![0.0; len];
    for (j, &d) in dual.values().iter().enumerate() {
        let off = dual.offset(j);
        let l = (n0 as isize * hop as isize + off).rem_euclid(len as isize) as usize;
        // Stored bin m0 stands for itself and its conjugate partner M - m0.
        let phase = TAU * m0 as f64 * off as f64 / m as f64;
        oracle[l] += d * 2.0 * (c * Complex64::from_polar(1.0, phase)).re;
    }
    for (a, b) in y.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn nsdgt_reduces_to_dgt() {
    let (len, hop, m, w) = (8192, 64, 4096, 2048);
    let x = noise(len, 3);
    let grid = UniformGrid::new(hop, m, w, len).unwrap();
    let g = make_hann(w).unwrap();
    let a = dgt(&x, &g, &grid).unwrap();
    let ns = grid.to_nonuniform();
    let b = nsdgt(&x, &vec![g.clone(); ns.frames()], &ns).unwrap();
    assert!(frobenius_rel(b.data(), a.data()) < 1e-12);
    let d1 = dual_window(&g, &grid).unwrap();
    let d2 = nsdgt_dual_windows(&vec![g; ns.frames()], &ns).unwrap();
    for (p, q) in d1.values().iter().zip(d2[5].values()) {
        assert!((p - q).abs() <= 1e-15 * p.abs().max(1e-300));
    }
}

#[test]
fn nsdgt_impulse_column_is_flat() {
    let grid = NonuniformGrid::new(vec![40, 24, 16, 48, 64, 64], vec![96, 64, 48, 80, 128, 128], 128).unwrap();
    let windows = grid_windows(&grid).unwrap();
    let n0 = 3;
    let mut x = vec![0.0; grid.signal_length()];
    x[grid.positions()[n0]] = 1.0;
    let c = nsdgt(&x, &windows, &grid).unwrap();
    let expect = windows[n0].values()[windows[n0].center()];
    for v in c.column(n0) {
        assert!((v.norm() - expect).abs() < 1e-12);
    }
}

fn bongo_grid() -> (Vec<f64>, NonuniformGrid) {
    let cfg = StretchConfig::with_alpha(2.0);
    let (x, _) = bongo_fixture(22_050, 22_050).unwrap();
    let mut padded = x.samples().to_vec();
    padded.resize(cfg.padded_length(x.len()), 0.0);
    let analysis = analyze_percussion(&padded, &cfg).unwrap();
    assert!(!analysis.events.is_empty());
    let params = GridParams {
        hop: cfg.analysis_hop(),
        long_window: cfg.window_length,
        channels: cfg.channels(),
        alpha: cfg.alpha,
        beta: cfg.beta,
    };
    let frames = padded.len() / cfg.analysis_hop();
    let grid = adaptive_grid(&analysis.events, frames, &params).unwrap().grid;
    assert!(grid.as_uniform().is_none());
    (padded, grid)
}

#[test]
fn nsdgt_matches_direct_sum_on_adaptive_grid() {
    let (x, grid) = bongo_grid();
    let windows = grid_windows(&grid).unwrap();
    let c = nsdgt(&x, &windows, &grid).unwrap();
    // Every shortened frame plus a sample of the long ones.
    let frames: Vec<usize> = (0..grid.frames())
        .filter(|&n| grid.window_lengths()[n] < 2048 || n % 25 == 0)
        .collect();
    let (mut got, mut want) = (Vec::new(), Vec::new());
    for &n in &frames {
        got.extend_from_slice(c.column(n));
        want.extend(naive_column(&x, &windows[n], grid.positions()[n], grid.channels()));
    }
    assert!(frobenius_rel(&got, &want) < 1e-10);
}

#[test]
fn adaptive_grid_round_trip_and_positive_frame_operator() {
    let (_, grid) = bongo_grid();
    let windows = grid_windows(&grid).unwrap();
    let refs: Vec<&Window> = windows.iter().collect();
    let s = frame_operator(&refs, &grid);
    let min = s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    assert!(min > 0.0, "frame operator minimum {min}");
    let duals = nsdgt_dual_windows(&windows, &grid).unwrap();
    let x = noise(grid.signal_length(), 4);
    let y = insdgt(&nsdgt(&x, &windows, &grid).unwrap(), &duals, &grid).unwrap();
    assert!(relative_l2(&y, &x) < 1e-10);
}

#[test]
fn stretched_grid_places_window_at_stretched_position() {
    let grid = NonuniformGrid::new(vec![32, 20, 12, 20, 44, 64], vec![128, 96, 64, 96, 128, 128], 256).unwrap();
    let alpha = 1.5;
    let stretched = grid.stretched(alpha).unwrap();
    let expected_hops: Vec<usize> = grid
        .hops()
        .iter()
        .map(|&h| (alpha * h as f64).ceil() as usize)
        .collect();
    assert_eq!(stretched.hops(), expected_hops.as_slice());
    let windows = grid_windows(&grid).unwrap();
    let duals = nsdgt_dual_windows(&windows, &stretched).unwrap();
    let (m0, n0) = (5, 3);
    let mut coeffs = ComplexSpectrogram::zeros(Grid::Nonuniform(stretched.clone()));
    coeffs.set(m0, n0, Complex64::new(1.0, 0.0));
    let y = insdgt(&coeffs, &duals, &stretched).unwrap();
    let pos: usize = expected_hops[..n0].iter().sum();
    let len = stretched.signal_length();
    let mut oracle = vec![0.0; len];
    let d = &duals[n0];
    for (j, &v) in d.values().iter().enumerate() {
        let off = d.offset(j);
        let l = (pos as isize + off).rem_euclid(len as isize) as usize;
        oracle[l] += v * 2.0 * (TAU * m0 as f64 * off as f64 / 256.0).cos();
    }
    for (a, b) in y.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn linearity_of_both_transforms() {
    let (len, hop, m, w) = (4096, 64, 1024, 512);
    let x = noise(len, 5);
    let y = noise(len, 6);
    let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let grid = UniformGrid::new(hop, m, w, len).unwrap();
    let g = make_hann(w).unwrap();
    let (cx, cy, cs) = (
        dgt(&x, &g, &grid).unwrap(),
        dgt(&y, &g, &grid).unwrap(),
        dgt(&sum, &g, &grid).unwrap(),
    );
    let added: Vec<Complex64> = cx.data().iter().zip(cy.data()).map(|(a, b)| a + b).collect();
    assert!(frobenius_rel(cs.data(), &added) < 1e-12);

    let ns = NonuniformGrid::new(
        (0..64).map(|i| if i % 3 == 0 { 96 } else { 32 }).collect::<Vec<_>>(),
        (0..64).map(|i| if i % 3 == 0 { 512 } else { 256 }).collect(),
        1024,
    )
    .unwrap();
    let len = ns.signal_length();
    let windows = grid_windows(&ns).unwrap();
    let (x, y) = (noise(len, 7), noise(len, 8));
    let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let (cx, cy, cs) = (
        nsdgt(&x, &windows, &ns).unwrap(),
        nsdgt(&y, &windows, &ns).unwrap(),
        nsdgt(&sum, &windows, &ns).unwrap(),
    );
    let added: Vec<Complex64> = cx.data().iter().zip(cy.data()).map(|(a, b)| a + b).collect();
    assert!(frobenius_rel(cs.data(), &added) < 1e-12);
}

#[test]
fn circular_shift_by_one_hop_rotates_columns() {
    let (len, hop, m, w) = (2048, 64, 512, 256);
    let x = noise(len, 9);
    let mut shifted = vec![0.0; len];
    for l in 0..len {
        shifted[(l + hop) % len] = x[l];
    }
    let grid = UniformGrid::new(hop, m, w, len).unwrap();
    let g = make_hann(w).unwrap();
    let a = dgt(&x, &g, &grid).unwrap();
    let b = dgt(&shifted, &g, &grid).unwrap();
    let frames = grid.frames();
    for n in 0..frames {
        let src = a.column(n);
        let dst = b.column((n + 1) % frames);
        for (p, q) in src.iter().zip(dst) {
            // Frequency-invariant phase: the rotated column is identical.
            assert!((p - q).norm() < 1e-9);
            assert!((p.norm() - q.norm()).abs() < 1e-9);
        }
    }
}

#[test]
fn errors_are_reported() {
    assert!(matches!(
        UniformGrid::new(64, 1024, 2048, 4096),
        Err(Error::PainlessViolated { .. })
    ));
    let grid = NonuniformGrid::new(vec![64, 64], vec![16, 16], 64).unwrap();
    let windows = grid_windows(&grid).unwrap();
    assert!(matches!(
        nsdgt_dual_windows(&windows, &grid),
        Err(Error::FrameNotInvertible { .. })
    ));
    let grid = UniformGrid::new(64, 256, 256, 1024).unwrap();
    let g = make_hann(256).unwrap();
    assert!(matches!(dgt(&[0.0; 512], &g, &grid), Err(Error::InvalidArgument(_))));
}
