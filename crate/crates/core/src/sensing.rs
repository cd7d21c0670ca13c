//! Neyman-Pearson channel sensor and observation likelihoods.
//!
//! Each pilot beam illuminates one VCM column. The receiver filter bank
//! thresholds every one of the `N_r` outputs at `tau` and reports a single
//! flag for the column: 1 if any element fires.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, ChannelState, ModelParams};
use crate::error::{Error, Result};

/// Operating point of the per-element energy detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub p_fa: f64,
    pub threshold: f64,
    pub p_md: f64,
    pub path_snr: f64,
    /// Miss probability used when at least one path sits in the sensed
    /// column. Taken equal to `p_md` (single-path case).
    pub p_md_multi: f64,
    pub noise_var: f64,
}

impl DetectorSpec {
    /// Detector of size `p_fa` for the link described by `params`.
    ///
    /// `|y|^2` is exponential with mean `sigma^2` under H0 and
    /// `(1 + snr) sigma^2` under H1, so `tau = -sigma^2 ln P_FA` and
    /// `P_MD = 1 - exp(-tau / ((1 + snr) sigma^2))`.
    pub fn new(p_fa: f64, params: &ModelParams) -> Result<Self> {
        Self::with_path_snr(p_fa, params.path_snr(), params.noise_var)
    }

    pub fn with_path_snr(p_fa: f64, path_snr: f64, noise_var: f64) -> Result<Self> {
        if !(p_fa > 0.0 && p_fa < 1.0) {
            return Err(Error::param(format!("p_fa must lie in (0, 1), got {p_fa}")));
        }
        if !(path_snr >= 0.0) {
            return Err(Error::param(format!("path SNR must be nonnegative, got {path_snr}")));
        }
        let threshold = -noise_var * p_fa.ln();
        let p_md = -(-threshold / ((1.0 + path_snr) * noise_var)).exp_m1();
        Ok(DetectorSpec {
            p_fa,
            threshold,
            p_md,
            path_snr,
            p_md_multi: p_md,
            noise_var,
        })
    }

    /// Detector given directly by its error rates; rates may be 0 or 1.
    /// Used for analytic observation models and idealized tests.
    pub fn from_rates(p_fa: f64, p_md: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_fa) || !(0.0..=1.0).contains(&p_md) {
            return Err(Error::param(format!("rates must lie in [0, 1], got ({p_fa}, {p_md})")));
        }
        let threshold = -p_fa.ln();
        let path_snr = if p_fa > 0.0 && p_fa < 1.0 && p_md > 0.0 && p_md < 1.0 {
            p_fa.ln() / (-p_md).ln_1p() - 1.0
        } else {
            f64::INFINITY
        };
        Ok(DetectorSpec {
            p_fa,
            threshold,
            p_md,
            path_snr,
            p_md_multi: p_md,
            noise_var: 1.0,
        })
    }

    /// Detector that never errs.
    pub fn perfect() -> Self {
        Self::from_rates(0.0, 0.0).expect("valid rates")
    }

    /// `Pr{o = 0}` for a column holding `n_bin` nonzero bins.
    #[inline]
    pub fn column_zero_prob(&self, n_bin: usize, n_rx: usize) -> f64 {
        let empty = n_rx.saturating_sub(n_bin);
        (1.0 - self.p_fa).powi(empty as i32) * self.p_md.powi(n_bin as i32)
    }

    /// Column-level false alarm: some element fires on an empty column.
    pub fn column_false_alarm(&self, n_rx: usize) -> f64 {
        1.0 - self.column_zero_prob(0, n_rx)
    }

    /// Column-level miss for a column holding a path:
    /// `(1 - P_FA)^(N_r - 1) * P'_MD`.
    pub fn column_miss(&self, n_rx: usize) -> f64 {
        (1.0 - self.p_fa).powi(n_rx as i32 - 1) * self.p_md_multi
    }

    pub fn column_detection(&self, n_rx: usize) -> f64 {
        1.0 - self.column_miss(n_rx)
    }
}

/// Pilot-beam selection for one slot: distinct VCM columns in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(Vec<usize>);

impl Action {
    pub fn new(mut indices: Vec<usize>, n_tx: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::param("an action must sense at least one column"));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param(format!("duplicate column in action {indices:?}")));
        }
        if let Some(&c) = indices.last().filter(|&&c| c >= n_tx) {
            return Err(Error::param(format!("column {c} out of range for n_tx {n_tx}")));
        }
        Ok(Action(indices))
    }

    /// Caller guarantees sorted, distinct, in-range indices.
    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Action(indices)
    }

    pub fn columns(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, col: usize) -> bool {
        self.0.binary_search(&col).is_ok()
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(";"))
    }
}

/// Detection flags fed back for one slot, aligned with the action's columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation(Vec<bool>);

impl Observation {
    pub fn new(flags: Vec<bool>) -> Self {
        Observation(flags)
    }

    /// Observation number `j` of the `2^m_p` observation space; bit `m` of
    /// `j` is flag `o_m`.
    pub fn from_index(j: usize, m_p: usize) -> Self {
        Observation((0..m_p).map(|m| (j >> m) & 1 == 1).collect())
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (m, &f)| acc | ((f as usize) << m))
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn detections(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }
}

impl std::fmt::Display for Observation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &flag in &self.0 {
            f.write_str(if flag { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// How observations are generated by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    /// Complex filter-bank outputs with per-element thresholding.
    #[default]
    Signal,
    /// Flags drawn directly from the analytic likelihood.
    Analytic,
}

impl std::str::FromStr for ObservationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signal" => Ok(ObservationMode::Signal),
            "analytic" => Ok(ObservationMode::Analytic),
            other => Err(Error::config(format!("unknown observation mode '{other}'"))),
        }
    }
}

/// Filter-bank output `sqrt(P_t) H~(:, col) + n` for one pilot symbol.
pub fn filter_bank_output<R: Rng + ?Sized>(
    state: &ChannelState,
    col: usize,
    params: &ModelParams,
    rng: &mut R,
) -> Vec<Complex64> {
    let scale = (params.tx_power * params.array_gain()).sqrt();
    (0..params.n_rx)
        .map(|r| {
            let signal: Complex64 = state
                .columns
                .iter()
                .zip(&state.rows)
                .zip(&state.gains)
                .filter(|((&c, &row), _)| c == col && row == r)
                .map(|(_, &g)| scale * g)
                .sum();
            signal + complex_gaussian(params.noise_var, rng)
        })
        .collect()
}

/// Flag reported for a single sensed column.
pub fn sense_column<R: Rng + ?Sized>(
    state: &ChannelState,
    col: usize,
    detector: &DetectorSpec,
    params: &ModelParams,
    mode: ObservationMode,
    rng: &mut R,
) -> bool {
    match mode {
        ObservationMode::Signal => {
            // draw every element so the noise stream does not depend on the outcome
            let y = filter_bank_output(state, col, params, rng);
            y.iter().any(|v| v.norm_sqr() >= detector.threshold)
        }
        ObservationMode::Analytic => {
            let p0 = detector.column_zero_prob(state.bin_count(col), params.n_rx);
            rng.random::<f64>() >= p0
        }
    }
}

/// Flags for every column of `action` sensed against `state`.
pub fn simulate_observation<R: Rng + ?Sized>(
    state: &ChannelState,
    action: &Action,
    detector: &DetectorSpec,
    params: &ModelParams,
    mode: ObservationMode,
    rng: &mut R,
) -> Observation {
    Observation(
        action
            .columns()
            .iter()
            .map(|&c| sense_column(state, c, detector, params, mode, rng))
            .collect(),
    )
}

/// `Pr{o | state}` given the number of nonzero bins in each sensed column.
pub fn observation_prob(bins: &[usize], obs: &Observation, detector: &DetectorSpec, n_rx: usize) -> f64 {
    bins.iter()
        .zip(obs.flags())
        .map(|(&nb, &flag)| {
            let p0 = detector.column_zero_prob(nb, n_rx);
            if flag {
                1.0 - p0
            } else {
                p0
            }
        })
        .product()
}

/// Linear MMSE estimate of the bin value `sqrt(N_t N_r) alpha` from one
/// filter-bank element, under the `CN(0, N_t N_r xi^2)` prior.
pub fn estimate_gain(y: Complex64, params: &ModelParams) -> Complex64 {
    let prior = params.array_gain() * params.gain_var;
    let w = params.tx_power.sqrt() * prior / (params.tx_power * prior + params.noise_var);
    w * y
}
