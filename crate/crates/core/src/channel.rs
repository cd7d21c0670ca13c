//! Sparse angle-domain channel model.
//!
//! The channel between an `N_t`-antenna transmitter and an `N_r`-antenna
//! receiver (both uniform linear arrays) is represented on the uniform
//! AoA x AoD grid as a virtual channel matrix with `L` nonzero bins. Each
//! path keeps its AoA row for the whole episode while its AoD column performs
//! an independent random walk governed by a row-stochastic [`TransitionMatrix`].
//! Path gains are redrawn i.i.d. `CN(0, xi^2)` every slot.
//!
//! All indices are 0-based.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating that a transition row sums to one.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Array sizes, path count and power budget of the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_paths: usize,
    /// Per-path gain variance `xi^2`.
    pub gain_var: f64,
    /// Filter-bank noise variance `sigma_N^2` per complex element.
    pub noise_var: f64,
    /// Pilot transmit power `P_t`.
    pub tx_power: f64,
}

impl ModelParams {
    pub fn new(
        n_tx: usize,
        n_rx: usize,
        n_paths: usize,
        gain_var: f64,
        noise_var: f64,
        tx_power: f64,
    ) -> Result<Self> {
        let params = ModelParams {
            n_tx,
            n_rx,
            n_paths,
            gain_var,
            noise_var,
            tx_power,
        };
        params.validate()?;
        Ok(params)
    }

    /// Unit gain and noise variance with `P_t` chosen so that the path SNR
    /// equals `path_snr` (linear scale).
    pub fn with_path_snr(n_tx: usize, n_rx: usize, n_paths: usize, path_snr: f64) -> Result<Self> {
        if !(path_snr > 0.0) || !path_snr.is_finite() {
            return Err(Error::param(format!("path SNR must be positive, got {path_snr}")));
        }
        let tx_power = path_snr / (n_tx as f64 * n_rx as f64);
        Self::new(n_tx, n_rx, n_paths, 1.0, 1.0, tx_power)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx < 2 {
            return Err(Error::param(format!("n_tx must be at least 2, got {}", self.n_tx)));
        }
        if self.n_rx < 1 {
            return Err(Error::param("n_rx must be at least 1"));
        }
        if self.n_paths < 1 {
            return Err(Error::param("n_paths must be at least 1"));
        }
        for (name, v) in [
            ("gain_var", self.gain_var),
            ("noise_var", self.noise_var),
            ("tx_power", self.tx_power),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Post-beamforming path SNR `N_t N_r P_t xi^2 / sigma_N^2`.
    pub fn path_snr(&self) -> f64 {
        self.array_gain() * self.tx_power * self.gain_var / self.noise_var
    }

    /// `N_t * N_r`, the squared scale between path gain and bin value.
    pub fn array_gain(&self) -> f64 {
        (self.n_tx * self.n_rx) as f64
    }
}

/// Row-stochastic `N_t x N_t` column-transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<f64>,
    bandwidth: usize,
    decay: f64,
    mix: f64,
}

impl TransitionMatrix {
    /// Banded matrix with exponential decay: row `i` is proportional to
    /// `decay^|i-j|` for `|i-j| <= bandwidth`. Rows are truncated at the
    /// matrix edge and renormalized independently.
    pub fn banded(n_tx: usize, bandwidth: usize, decay: f64) -> Result<Self> {
        if n_tx == 0 {
            return Err(Error::param("transition matrix size must be positive"));
        }
        if bandwidth >= n_tx {
            return Err(Error::param(format!(
                "bandwidth {bandwidth} must be smaller than n_tx {n_tx}"
            )));
        }
        if !(0.0..1.0).contains(&decay) {
            return Err(Error::param(format!("decay must lie in [0, 1), got {decay}")));
        }
        let mut entries = vec![0.0; n_tx * n_tx];
        for i in 0..n_tx {
            let lo = i.saturating_sub(bandwidth);
            let hi = (i + bandwidth).min(n_tx - 1);
            let row = &mut entries[i * n_tx..(i + 1) * n_tx];
            for (j, slot) in row.iter_mut().enumerate().take(hi + 1).skip(lo) {
                // powi(0) == 1 even for decay == 0
                *slot = decay.powi(i.abs_diff(j) as i32);
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        Ok(TransitionMatrix {
            size: n_tx,
            entries,
            bandwidth,
            decay,
            mix: 0.0,
        })
    }

    /// Static channel, `P = I`.
    pub fn identity(n_tx: usize) -> Self {
        let mut entries = vec![0.0; n_tx * n_tx];
        for i in 0..n_tx {
            entries[i * n_tx + i] = 1.0;
        }
        TransitionMatrix {
            size: n_tx,
            entries,
            bandwidth: 0,
            decay: 0.0,
            mix: 0.0,
        }
    }

    /// Arbitrary row-stochastic matrix given row-major.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::param("transition matrix must not be empty"));
        }
        let mut entries = Vec::with_capacity(size * size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(Error::param(format!("row {i} has length {}, expected {size}", row.len())));
            }
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::param(format!("row {i} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::param(format!("row {i} sums to {total}, not 1")));
            }
            entries.extend(row);
        }
        Ok(TransitionMatrix {
            size,
            entries,
            bandwidth: size - 1,
            decay: 0.0,
            mix: 0.0,
        })
    }

    /// `(1 - lambda) P + lambda / N_t * 1`, modelling a path appearing from an
    /// arbitrary direction.
    pub fn mix_uniform(&self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::param(format!("mix must lie in [0, 1], got {lambda}")));
        }
        let floor = lambda / self.size as f64;
        let entries = self.entries.iter().map(|p| (1.0 - lambda) * p + floor).collect();
        Ok(TransitionMatrix {
            size: self.size,
            entries,
            bandwidth: self.bandwidth,
            decay: self.decay,
            mix: lambda,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn mix(&self) -> f64 {
        self.mix
    }

    #[inline]
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.size + to]
    }

    #[inline]
    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.size..(from + 1) * self.size]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Distribution after one step from distribution `dist`: `dist^T P`.
    pub fn propagate(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (n, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.row(n)) {
                *o += w * p;
            }
        }
        out
    }

    /// Draws the next column from row `from`.
    pub fn sample_next<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let row = self.row(from);
        let mut acc = 0.0;
        let mut last = from;
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = j;
                if u < acc {
                    return j;
                }
            }
        }
        last
    }

    /// Largest absolute deviation of a row sum from one.
    pub fn max_row_error(&self) -> f64 {
        (0..self.size)
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Plain dense text block, one row per line, for debugging.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.size {
            let line: Vec<String> = self.row(i).iter().map(|p| format!("{p:.6}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Hidden state of the multipath channel during one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub columns: Vec<usize>,
    pub rows: Vec<usize>,
    pub gains: Vec<Complex64>,
}

impl ChannelState {
    pub fn new(columns: Vec<usize>, rows: Vec<usize>, gains: Vec<Complex64>, params: &ModelParams) -> Result<Self> {
        let l = params.n_paths;
        if columns.len() != l || rows.len() != l || gains.len() != l {
            return Err(Error::param(format!("state must describe exactly {l} paths")));
        }
        if let Some(c) = columns.iter().find(|&&c| c >= params.n_tx) {
            return Err(Error::param(format!("column {c} out of range for n_tx {}", params.n_tx)));
        }
        if let Some(r) = rows.iter().find(|&&r| r >= params.n_rx) {
            return Err(Error::param(format!("row {r} out of range for n_rx {}", params.n_rx)));
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::param("path gains must be finite"));
        }
        Ok(ChannelState { columns, rows, gains })
    }

    /// Uniform columns and rows, fresh gains.
    pub fn random<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Self {
        let l = params.n_paths;
        let columns = (0..l).map(|_| rng.random_range(0..params.n_tx)).collect();
        let rows = (0..l).map(|_| rng.random_range(0..params.n_rx)).collect();
        let gains = (0..l).map(|_| complex_gaussian(params.gain_var, rng)).collect();
        ChannelState { columns, rows, gains }
    }

    /// One slot of path movement: every column moves independently according
    /// to `transition`, rows stay put and gains are redrawn.
    pub fn step<R: Rng + ?Sized>(&self, transition: &TransitionMatrix, params: &ModelParams, rng: &mut R) -> Self {
        let columns = self.columns.iter().map(|&c| transition.sample_next(c, rng)).collect();
        let gains = (0..self.gains.len())
            .map(|_| complex_gaussian(params.gain_var, rng))
            .collect();
        ChannelState {
            columns,
            rows: self.rows.clone(),
            gains,
        }
    }

    /// Number of distinct nonzero bins in column `col`.
    pub fn bin_count(&self, col: usize) -> usize {
        occupied_bins(&self.columns, &self.rows, col)
    }
}

/// Number of distinct `(row, col)` bins among paths located in `col`.
/// Paths sharing both row and column superpose into one bin.
pub fn occupied_bins(columns: &[usize], rows: &[usize], col: usize) -> usize {
    let mut count = 0;
    for (l, &c) in columns.iter().enumerate() {
        if c != col {
            continue;
        }
        let seen = columns[..l]
            .iter()
            .zip(&rows[..l])
            .any(|(&c2, &r2)| c2 == col && r2 == rows[l]);
        if !seen {
            count += 1;
        }
    }
    count
}

/// Circularly symmetric complex Gaussian with total variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// ULA response `(1/sqrt(n)) [1, e^{-i 2 pi theta}, ..., e^{-i (n-1) 2 pi theta}]`.
pub fn steering_vector(theta: f64, n: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| Complex64::from_polar(scale, -2.0 * PI * theta * k as f64))
        .collect()
}

/// Normalized direction `d/lambda * sin(phi)` of a physical angle.
pub fn physical_angle_to_direction(phi: f64, d_over_lambda: f64) -> f64 {
    d_over_lambda * phi.sin()
}

/// Element spacing used throughout unless overridden.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// Virtual direction of grid point `j`: `-1/2 + j/n`.
pub fn grid_direction(j: usize, n: usize) -> f64 {
    -0.5 + j as f64 / n as f64
}

/// Dense row-major complex matrix, used for the angle-domain transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Matrix whose columns are the steering vectors of the uniform virtual grid.
pub fn steering_grid(n: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for (i, v) in steering_vector(grid_direction(j, n), n).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Angle-domain channel `H~`, `N_r x N_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualChannelMatrix {
    pub matrix: ComplexMatrix,
}

impl VirtualChannelMatrix {
    /// Places `sqrt(N_t N_r) * alpha_l` at `(row_l, col_l)` for every path.
    pub fn assemble(state: &ChannelState, params: &ModelParams) -> Self {
        let scale = params.array_gain().sqrt();
        let mut matrix = ComplexMatrix::zeros(params.n_rx, params.n_tx);
        for ((&c, &r), &g) in state.columns.iter().zip(&state.rows).zip(&state.gains) {
            matrix[(r, c)] += scale * g;
        }
        VirtualChannelMatrix { matrix }
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.matrix.rows).map(|r| self.matrix[(r, col)]).collect()
    }

    pub fn nonzero_bins(&self) -> usize {
        self.matrix.data.iter().filter(|v| v.norm_sqr() > 0.0).count()
    }

    /// Physical channel `A_R H~ A_T^H`.
    pub fn to_physical(&self) -> ComplexMatrix {
        let a_r = steering_grid(self.matrix.rows);
        let a_t = steering_grid(self.matrix.cols);
        a_r.matmul(&self.matrix).matmul(&a_t.adjoint())
    }

    /// Inverse map `A_R^H H A_T`.
    pub fn from_physical(h: &ComplexMatrix) -> Self {
        let a_r = steering_grid(h.rows);
        let a_t = steering_grid(h.cols);
        VirtualChannelMatrix {
            matrix: a_r.adjoint().matmul(h).matmul(&a_t),
        }
    }
}
