use num_complex::Complex64;

use crate::grid::{NonuniformGrid, UniformGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Uniform(UniformGrid),
    Nonuniform(NonuniformGrid),
}

impl Grid {
    pub fn channels(&self) -> usize {
        match self {
            Grid::Uniform(g) => g.channels(),
            Grid::Nonuniform(g) => g.channels(),
        }
    }

    pub fn frames(&self) -> usize {
        match self {
            Grid::Uniform(g) => g.frames(),
            Grid::Nonuniform(g) => g.frames(),
        }
    }

    pub fn signal_length(&self) -> usize {
        match self {
            Grid::Uniform(g) => g.signal_length(),
            Grid::Nonuniform(g) => g.signal_length(),
        }
    }
}

/// Gabor coefficients of a real signal, bound to the grid that produced them.
///
/// Only channels `0..=M/2` are stored; the remaining ones are the complex
/// conjugates `X[M - m, n] = conj(X[m, n])`. Storage is frame-major, so each
/// column is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    data: Vec<Complex64>,
    bins: usize,
    grid: Grid,
}

/// Number of stored (nonnegative-frequency) channels for `M` channels.
pub fn stored_bins(channels: usize) -> usize {
    channels / 2 + 1
}

impl ComplexSpectrogram {
    pub fn zeros(grid: Grid) -> Self {
        let bins = stored_bins(grid.channels());
        Self {
            data: vec![Complex64::new(0.0, 0.0); bins * grid.frames()],
            bins,
            grid,
        }
    }

    pub(crate) fn from_parts(data: Vec<Complex64>, grid: Grid) -> Self {
        let bins = stored_bins(grid.channels());
        debug_assert_eq!(data.len(), bins * grid.frames());
        Self { data, bins, grid }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.grid.channels()
    }

    /// Stored channel count, `M / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.grid.frames()
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[n * self.bins + m]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: Complex64) {
        self.data[n * self.bins + m] = v;
    }

    pub fn column(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.bins..(n + 1) * self.bins]
    }

    pub fn column_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.data[n * self.bins..(n + 1) * self.bins]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn magnitude(&self) -> RealMatrix {
        RealMatrix {
            data: self.data.iter().map(|c| c.norm()).collect(),
            rows: self.bins,
            cols: self.frames(),
        }
    }

    pub fn phase(&self) -> RealMatrix {
        RealMatrix {
            data: self.data.iter().map(|c| c.im.atan2(c.re)).collect(),
            rows: self.bins,
            cols: self.frames(),
        }
    }

    /// Rebuild coefficients from magnitude and phase on the given grid.
    pub fn from_polar(magnitude: &RealMatrix, phase: &RealMatrix, grid: Grid) -> Self {
        assert_eq!(magnitude.rows, phase.rows);
        assert_eq!(magnitude.cols, phase.cols);
        let data = magnitude
            .data
            .iter()
            .zip(&phase.data)
            .map(|(&r, &p)| Complex64::from_polar(r, p))
            .collect();
        Self::from_parts(data, grid)
    }

    /// Squared Frobenius norm of the full (two-sided) coefficient matrix.
    pub fn full_energy(&self) -> f64 {
        let m = self.channels();
        let mut e = 0.0;
        for n in 0..self.frames() {
            for (k, c) in self.column(n).iter().enumerate() {
                e += c.norm_sqr() * conjugate_multiplicity(k, m);
            }
        }
        e
    }
}

/// How many channels of the full `M`-channel spectrum a stored bin stands for.
#[inline]
pub fn conjugate_multiplicity(bin: usize, channels: usize) -> f64 {
    if bin == 0 || (channels % 2 == 0 && bin == channels / 2) {
        1.0
    } else {
        2.0
    }
}

/// Dense real matrix with the same frame-major layout as [`ComplexSpectrogram`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Self {
            data: vec![v; rows * cols],
            rows,
            cols,
        }
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.data[n * self.rows + m]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: f64) {
        self.data[n * self.rows + m] = v;
    }

    pub fn column(&self, n: usize) -> &[f64] {
        &self.data[n * self.rows..(n + 1) * self.rows]
    }

    pub fn column_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.rows..(n + 1) * self.rows]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v))
    }
}
