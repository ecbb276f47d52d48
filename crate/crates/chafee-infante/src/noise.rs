//! Trace-class Q-Wiener increments, the Wiener shift and the
//! Ornstein–Uhlenbeck auxiliary process.
//!
//! The covariance operator is diagonal in the sine basis with eigenvalues
//! q_k; each mode receives independent Gaussian increments of variance
//! q_k·dt. Increment values are a pure function of (seed, mode, absolute
//! step index): every (mode, sign-of-step) pair owns one ChaCha stream and
//! each step consumes a fixed four-word slice of it. Extending a path into
//! the past therefore never perturbs increments that were already sampled,
//! and the Wiener shift `(θ^t ω)_s = ω_{t+s} − ω_s` is a pure re-indexing
//! of shared data.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{DomainSpec, SpectralField};

/// Words of ChaCha output consumed per increment (two u64 draws).
const WORDS_PER_STEP: u128 = 4;

/// Eigenvalues of the covariance operator against the sine basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    domain: DomainSpec,
    q: Vec<f64>,
}

/// Outcome of the discrete trace-condition check.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TraceReport {
    /// Σ_k q_k λ_k^ε over the retained modes.
    pub weighted_sum: f64,
    /// Share of the sum carried by modes above N/2.
    pub tail_fraction: f64,
    /// The ε used.
    pub epsilon: f64,
}

impl CovarianceSpec {
    /// Spectrum q_k = λ_k^{−γ}.
    pub fn from_decay(domain: DomainSpec, gamma: f64) -> Self {
        Self::from_scaled_decay(domain, gamma, 1.0)
    }

    /// Spectrum q_k = amplitude² λ_k^{−γ}.
    pub fn from_scaled_decay(domain: DomainSpec, gamma: f64, amplitude: f64) -> Self {
        let q = domain
            .eigenvalues()
            .iter()
            .map(|lam| amplitude * amplitude * lam.powf(-gamma))
            .collect();
        Self { domain, q }
    }

    /// Explicit spectrum, one entry per retained mode.
    pub fn from_modes(domain: DomainSpec, q: Vec<f64>) -> Result<Self> {
        if q.len() != domain.modes() {
            return Err(Error::CoefficientLength {
                got: q.len(),
                expected: domain.modes(),
            });
        }
        if q.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::TraceCondition(
                "covariance eigenvalues must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { domain, q })
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Discrete trace condition at s = 1/2: Σ q_k λ_k^ε must be carried
    /// almost entirely by the lower half of the retained spectrum
    /// (tail above N/2 at most 1% of the total).
    pub fn trace_report(&self, epsilon: f64) -> TraceReport {
        let lams = self.domain.eigenvalues();
        let weighted: Vec<f64> = self
            .q
            .iter()
            .zip(&lams)
            .map(|(q, lam)| q * lam.powf(epsilon))
            .collect();
        let total: f64 = weighted.iter().sum();
        let tail: f64 = weighted[self.domain.modes() / 2..].iter().sum();
        TraceReport {
            weighted_sum: total,
            tail_fraction: if total > 0.0 { tail / total } else { 0.0 },
            epsilon,
        }
    }

    /// Errors unless the truncated spectrum passes the trace proxy.
    pub fn validate(&self, epsilon: f64) -> Result<TraceReport> {
        if self.q.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::TraceCondition(
                "covariance eigenvalues must be finite and nonnegative".into(),
            ));
        }
        let report = self.trace_report(epsilon);
        if !report.weighted_sum.is_finite() {
            return Err(Error::TraceCondition("weighted sum not finite".into()));
        }
        if report.tail_fraction > 0.01 {
            return Err(Error::TraceCondition(format!(
                "tail above N/2 carries {:.2}% of sum q_k lambda_k^eps (limit 1%); \
                 increase the decay or the truncation",
                100.0 * report.tail_fraction
            )));
        }
        Ok(report)
    }
}

/// ChaCha stream id for one (mode, sign) lane.
fn stream_id(mode: usize, negative: bool) -> u64 {
    2 * mode as u64 + negative as u64
}

/// Word offset of one absolute step inside its lane.
fn word_pos(step: i64) -> u128 {
    let ordinal = if step >= 0 {
        step as u128
    } else {
        (-1 - step) as u128
    };
    ordinal * WORDS_PER_STEP
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
    let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A sampled two-sided increment path, shared cheaply between views.
///
/// Step `i` (relative to the path origin) holds the increment of W over
/// `[i·dt, (i+1)·dt)`. Shifted views share the same backing data.
#[derive(Debug, Clone)]
pub struct NoisePath {
    cov: Arc<CovarianceSpec>,
    /// Increments in step-major layout for steps `lo..hi` (absolute).
    data: Arc<Vec<f64>>,
    dt: f64,
    /// Absolute index range of sampled steps.
    lo: i64,
    hi: i64,
    /// Absolute index of the step at path time 0.
    origin: i64,
    seed: u64,
}

/// Snap a time to the nearest step index, rejecting off-grid values.
fn snap(t: f64, dt: f64) -> Result<i64> {
    let steps = t / dt;
    let rounded = steps.round();
    if (steps - rounded).abs() > 1e-6 {
        return Err(Error::OffGrid(t));
    }
    Ok(rounded as i64)
}

/// Sample a two-sided path of Q-Wiener increments over [t_min, t_max].
///
/// Deterministic in (seed, cov, dt, window); refinements of the window
/// reproduce overlapping increments bit-exactly.
pub fn sample_path(
    cov: &CovarianceSpec,
    dt: f64,
    t_min: f64,
    t_max: f64,
    seed: u64,
) -> Result<NoisePath> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(t_min <= 0.0 && 0.0 <= t_max) {
        return Err(Error::InvalidParameter(format!(
            "two-sided path needs t_min <= 0 <= t_max, got [{t_min}, {t_max}]"
        )));
    }
    cov.validate(0.01)?;
    let lo = snap(t_min, dt)?;
    let hi = snap(t_max, dt)?;
    let n_modes = cov.domain().modes();
    let n_steps = (hi - lo).max(0) as usize;
    let mut data = vec![0.0f64; n_steps * n_modes];

    let scales: Vec<f64> = cov.q().iter().map(|q| (q * dt).sqrt()).collect();
    for (mode, &scale) in scales.iter().enumerate() {
        // nonnegative lane, ascending word order
        if hi > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(mode, false));
            let first = lo.max(0);
            rng.set_word_pos(word_pos(first));
            for step in first..hi {
                let z = standard_normal(&mut rng);
                data[(step - lo) as usize * n_modes + mode] = scale * z;
            }
        }
        // negative lane: steps −1, −2, … map to ascending word positions
        if lo < 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(mode, true));
            let last = hi.min(0);
            rng.set_word_pos(word_pos(last - 1));
            for step in (lo..last).rev() {
                let z = standard_normal(&mut rng);
                data[(step - lo) as usize * n_modes + mode] = scale * z;
            }
        }
    }

    Ok(NoisePath {
        cov: Arc::new(cov.clone()),
        data: Arc::new(data),
        dt,
        lo,
        hi,
        origin: 0,
        seed,
    })
}

impl NoisePath {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn covariance(&self) -> &CovarianceSpec {
        &self.cov
    }

    pub fn n_modes(&self) -> usize {
        self.cov.domain().modes()
    }

    /// Earliest representable path time.
    pub fn t_min(&self) -> f64 {
        (self.lo - self.origin) as f64 * self.dt
    }

    /// Latest representable path time.
    pub fn t_max(&self) -> f64 {
        (self.hi - self.origin) as f64 * self.dt
    }

    /// Whether `[t0, t1]` lies inside the sampled window.
    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        let lo_ok = snap(t0, self.dt).map(|s| self.origin + s >= self.lo);
        let hi_ok = snap(t1, self.dt).map(|s| self.origin + s <= self.hi);
        matches!((lo_ok, hi_ok), (Ok(true), Ok(true)))
    }

    fn row_index(&self, step: i64) -> Result<usize> {
        let abs = self.origin + step;
        if abs < self.lo || abs >= self.hi {
            return Err(Error::WindowExceeded {
                lo: step as f64 * self.dt,
                hi: (step + 1) as f64 * self.dt,
                have_lo: self.t_min(),
                have_hi: self.t_max(),
            });
        }
        Ok((abs - self.lo) as usize)
    }

    /// All per-mode increments over `[step·dt, (step+1)·dt)`.
    pub fn increments_at(&self, step: i64) -> Result<&[f64]> {
        let i = self.row_index(step)?;
        let n = self.n_modes();
        Ok(&self.data[i * n..(i + 1) * n])
    }

    /// Single-mode increment (mode is 1-based like the basis index).
    pub fn increment(&self, mode: usize, step: i64) -> Result<f64> {
        if mode == 0 || mode > self.n_modes() {
            return Err(Error::ModeOutOfRange {
                index: mode,
                modes: self.n_modes(),
            });
        }
        Ok(self.increments_at(step)?[mode - 1])
    }

    /// The shifted path θ^t ω; `t` must be a step multiple and the new
    /// origin must stay inside the sampled window.
    pub fn wiener_shift(&self, t: f64) -> Result<NoisePath> {
        let m = snap(t, self.dt)?;
        let origin = self.origin + m;
        if origin < self.lo || origin > self.hi {
            return Err(Error::WindowExceeded {
                lo: t,
                hi: t,
                have_lo: self.t_min(),
                have_hi: self.t_max(),
            });
        }
        Ok(NoisePath {
            cov: Arc::clone(&self.cov),
            data: Arc::clone(&self.data),
            dt: self.dt,
            lo: self.lo,
            hi: self.hi,
            origin,
            seed: self.seed,
        })
    }

    /// Re-materialize with a wider window (times relative to the current
    /// origin). Overlapping increments are reproduced bit-exactly.
    pub fn extend(&self, t_min: f64, t_max: f64) -> Result<NoisePath> {
        let new_lo = snap(t_min, self.dt)? + self.origin;
        let new_hi = snap(t_max, self.dt)? + self.origin;
        if new_lo > self.lo || new_hi < self.hi {
            return Err(Error::InvalidParameter(
                "extend may only widen the sampled window".into(),
            ));
        }
        let mut fresh = sample_path(
            &self.cov,
            self.dt,
            new_lo as f64 * self.dt,
            new_hi as f64 * self.dt,
            self.seed,
        )?;
        fresh.origin = self.origin;
        Ok(fresh)
    }

    /// Aggregate groups of `factor` consecutive increments into one coarse
    /// step, producing the same Brownian path sampled at dt·factor. Used by
    /// the dt-refinement studies, which need coupled coarse/fine drivers.
    pub fn coarsen(&self, factor: usize) -> Result<NoisePath> {
        if factor == 0 {
            return Err(Error::InvalidParameter("coarsen factor must be >= 1".into()));
        }
        let f = factor as i64;
        if (self.lo - self.origin) % f != 0 || (self.hi - self.origin) % f != 0 {
            return Err(Error::InvalidParameter(
                "window not aligned to the coarsening factor".into(),
            ));
        }
        let n = self.n_modes();
        let coarse_steps = ((self.hi - self.lo) / f) as usize;
        let mut data = vec![0.0f64; coarse_steps * n];
        for (row, chunk) in data
            .chunks_mut(n)
            .zip(self.data.chunks(n * factor))
        {
            for (fine_row, _) in chunk.chunks(n).zip(0..factor) {
                for (acc, v) in row.iter_mut().zip(fine_row) {
                    *acc += v;
                }
            }
        }
        Ok(NoisePath {
            cov: Arc::clone(&self.cov),
            data: Arc::new(data),
            dt: self.dt * factor as f64,
            lo: (self.lo - self.origin) / f,
            hi: (self.hi - self.origin) / f,
            origin: 0,
            seed: self.seed,
        })
    }

    /// The sign-flipped path −ω (for reflection-equivariance checks).
    pub fn negated(&self) -> NoisePath {
        NoisePath {
            cov: Arc::clone(&self.cov),
            data: Arc::new(self.data.iter().map(|v| -v).collect()),
            dt: self.dt,
            lo: self.lo,
            hi: self.hi,
            origin: self.origin,
            seed: self.seed,
        }
    }

    /// Cumulative sum W(t) − W(0) for one mode at the step boundary
    /// t = step·dt.
    pub fn partial_sum(&self, mode: usize, step: i64) -> Result<f64> {
        let mut acc = 0.0;
        if step >= 0 {
            for s in 0..step {
                acc += self.increment(mode, s)?;
            }
        } else {
            for s in step..0 {
                acc -= self.increment(mode, s)?;
            }
        }
        Ok(acc)
    }

    /// Dump as CSV rows `step,mode,increment` over the sampled window.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,mode,increment")?;
        for abs in self.lo..self.hi {
            let step = abs - self.origin;
            let row = self.increments_at(step).expect("in range by construction");
            for (m, v) in row.iter().enumerate() {
                writeln!(w, "{},{},{:.17e}", step, m + 1, v)?;
            }
        }
        Ok(())
    }

    /// Compact binary dump: modes, steps, first step, dt, then step-major
    /// little-endian f64 increments.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.n_modes() as u64).to_le_bytes())?;
        w.write_all(&((self.hi - self.lo) as u64).to_le_bytes())?;
        w.write_all(&(self.lo - self.origin).to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        for v in self.data.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// How the OU convolution integral is discretized over one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OuUpdate {
    /// z ← e^{a dt} z + e^{a dt} ΔW (left-point increment placement,
    /// matching the SPDE stepper's noise term).
    LeftPoint,
    /// z ← e^{a dt} z + √((e^{2a dt}−1)/(2a dt)) ΔW: the per-step variance
    /// of the stochastic convolution is reproduced exactly, so the
    /// stationary variance per mode is q_k / (2(λ_k − α)).
    VarianceExact,
}

/// State of the auxiliary OU process z solving dz = (Δ + α)z dt + dW.
#[derive(Debug, Clone)]
pub struct OuState {
    pub z: SpectralField,
}

impl OuState {
    pub fn zero(domain: DomainSpec) -> Self {
        Self {
            z: SpectralField::zero(domain),
        }
    }
}

/// Mode-wise exact-in-distribution OU stepper for fixed (α, dt).
#[derive(Debug, Clone)]
pub struct OuProcess {
    domain: DomainSpec,
    alpha: f64,
    dt: f64,
    update: OuUpdate,
    decay: Vec<f64>,
    kick: Vec<f64>,
}

impl OuProcess {
    pub fn new(domain: DomainSpec, alpha: f64, dt: f64, update: OuUpdate) -> Self {
        let lams = domain.eigenvalues();
        let decay: Vec<f64> = lams.iter().map(|lam| ((alpha - lam) * dt).exp()).collect();
        let kick = match update {
            OuUpdate::LeftPoint => decay.clone(),
            OuUpdate::VarianceExact => lams
                .iter()
                .map(|lam| {
                    let x = 2.0 * (alpha - lam) * dt;
                    let ratio = if x.abs() < 1e-12 {
                        1.0 + 0.5 * x
                    } else {
                        x.exp_m1() / x
                    };
                    ratio.sqrt()
                })
                .collect(),
        };
        Self {
            domain,
            alpha,
            dt,
            update,
            decay,
            kick,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn update(&self) -> OuUpdate {
        self.update
    }

    /// One step driven by the per-mode increments `dw`.
    pub fn step(&self, state: &mut OuState, dw: &[f64]) {
        debug_assert_eq!(dw.len(), self.domain.modes());
        let z = state.z.coeffs_mut();
        for k in 0..z.len() {
            z[k] = self.decay[k] * z[k] + self.kick[k] * dw[k];
        }
    }

    /// Draw the stationary state; requires λ_k > α for every retained mode.
    pub fn stationary_state(&self, cov: &CovarianceSpec, seed: u64) -> Result<OuState> {
        let lams = self.domain.eigenvalues();
        if lams.iter().any(|lam| *lam <= self.alpha) {
            return Err(Error::InvalidParameter(
                "stationary OU state needs lambda_k > alpha for all retained modes".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let coeffs = cov
            .q()
            .iter()
            .zip(&lams)
            .map(|(q, lam)| (q / (2.0 * (lam - self.alpha))).sqrt() * standard_normal(&mut rng))
            .collect();
        Ok(OuState {
            z: SpectralField::from_coeffs(self.domain, coeffs)?,
        })
    }
}

/// Single OU step with explicit parameters (convenience wrapper).
pub fn ou_step(state: &OuState, dw: &[f64], dt: f64, alpha: f64, update: OuUpdate) -> OuState {
    let proc = OuProcess::new(state.z.domain(), alpha, dt, update);
    let mut out = state.clone();
    proc.step(&mut out, dw);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::BasisConvention;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    fn domain(n: usize) -> DomainSpec {
        DomainSpec::new(TWO_PI, n, BasisConvention::PaperTwoPi).unwrap()
    }

    #[test]
    fn default_decay_profile_passes_trace_check() {
        let d = domain(64);
        let cov = CovarianceSpec::from_decay(d, 1.0);
        let report = cov.validate(0.01).unwrap();
        assert!(report.tail_fraction <= 0.01, "tail {}", report.tail_fraction);
    }

    #[test]
    fn flat_spectrum_fails_trace_check() {
        let d = domain(64);
        let cov = CovarianceSpec::from_modes(d, vec![1.0; 64]).unwrap();
        assert!(matches!(cov.validate(0.01), Err(Error::TraceCondition(_))));
    }

    #[test]
    fn zero_covariance_gives_zero_increments() {
        let d = domain(8);
        let cov = CovarianceSpec::from_modes(d, vec![0.0; 8]).unwrap();
        let path = sample_path(&cov, 0.01, -1.0, 1.0, 7).unwrap();
        for step in -100..100 {
            assert!(path.increments_at(step).unwrap().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn increment_moments_match_the_spectrum() {
        let d = domain(4);
        let cov = CovarianceSpec::from_modes(d, vec![1.0, 0.5, 0.01, 1e-5]).unwrap();
        let dt = 0.01;
        let n = 100_000i64;
        let path = sample_path(&cov, dt, 0.0, n as f64 * dt, 42).unwrap();

        for mode in 1..=4 {
            let q = cov.q()[mode - 1];
            let samples: Vec<f64> = (0..n).map(|s| path.increment(mode, s).unwrap()).collect();
            let mean = samples.iter().sum::<f64>() / n as f64;
            let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;

            // CLT band for the mean, chi-square concentration for the variance
            assert!(
                mean.abs() <= 4.0 * (q * dt / n as f64).sqrt(),
                "mode {mode}: mean {mean:e}"
            );
            assert_relative_eq!(var, q * dt, max_relative = 0.05);

            // lag-1 autocorrelation
            let cov1 = samples
                .windows(2)
                .map(|w| (w[0] - mean) * (w[1] - mean))
                .sum::<f64>()
                / (n - 1) as f64;
            let rho = cov1 / var;
            assert!(rho.abs() <= 4.0 / (n as f64).sqrt(), "lag-1 corr {rho}");
        }
    }

    #[test]
    fn paths_are_reproducible_and_seed_sensitive() {
        let d = domain(6);
        let cov = CovarianceSpec::from_decay(d, 3.0);
        let a = sample_path(&cov, 0.05, -2.0, 3.0, 99).unwrap();
        let b = sample_path(&cov, 0.05, -2.0, 3.0, 99).unwrap();
        for step in -40..60 {
            assert_eq!(a.increments_at(step).unwrap(), b.increments_at(step).unwrap());
        }
        let c = sample_path(&cov, 0.05, -2.0, 3.0, 100).unwrap();
        assert_ne!(a.increments_at(0).unwrap(), c.increments_at(0).unwrap());
    }

    #[test]
    fn extending_the_past_preserves_existing_increments() {
        let d = domain(6);
        let cov = CovarianceSpec::from_decay(d, 3.0);
        let short = sample_path(&cov, 0.05, -1.0, 1.0, 5).unwrap();
        let long = short.extend(-4.0, 2.0).unwrap();
        for step in -20..20 {
            assert_eq!(
                short.increments_at(step).unwrap(),
                long.increments_at(step).unwrap()
            );
        }
        assert!(long.increments_at(-60).is_ok());
        assert!(short.increments_at(-60).is_err());
    }

    #[test]
    fn shift_by_zero_is_identity() {
        let d = domain(4);
        let cov = CovarianceSpec::from_decay(d, 3.0);
        let path = sample_path(&cov, 0.1, -1.0, 1.0, 3).unwrap();
        let same = path.wiener_shift(0.0).unwrap();
        for step in -10..10 {
            assert_eq!(
                path.increments_at(step).unwrap(),
                same.increments_at(step).unwrap()
            );
        }
    }

    #[test]
    fn shifts_compose_and_invert() {
        let d = domain(4);
        let cov = CovarianceSpec::from_decay(d, 3.0);
        let path = sample_path(&cov, 0.1, -2.0, 2.0, 3).unwrap();
        let dt = 0.1;

        let back_forth = path.wiener_shift(-dt).unwrap().wiener_shift(dt).unwrap();
        for step in -20..20 {
            assert_eq!(
                path.increments_at(step).unwrap(),
                back_forth.increments_at(step).unwrap()
            );
        }

        let combo = path.wiener_shift(0.5).unwrap().wiener_shift(0.3).unwrap();
        let direct = path.wiener_shift(0.8).unwrap();
        for step in -8..12 {
            assert_eq!(
                combo.increments_at(step).unwrap(),
                direct.increments_at(step).unwrap()
            );
        }

        assert!(path.wiener_shift(5.0).is_err());
        assert!(path.wiener_shift(0.05).is_err());
    }

    #[test]
    fn shift_satisfies_the_partial_sum_identity() {
        // W_{t+s} − W_s of the original equals W_t of the shifted path
        let d = domain(4);
        let cov = CovarianceSpec::from_decay(d, 3.0);
        let path = sample_path(&cov, 0.1, -2.0, 2.0, 11).unwrap();
        for (s_steps, t_steps) in [(3i64, 7i64), (-5, 9), (8, -6)] {
            let shifted = path.wiener_shift(s_steps as f64 * 0.1).unwrap();
            for mode in 1..=4 {
                let lhs = path.partial_sum(mode, s_steps + t_steps).unwrap()
                    - path.partial_sum(mode, s_steps).unwrap();
                let rhs = shifted.partial_sum(mode, t_steps).unwrap();
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn coarsening_preserves_partial_sums() {
        let d = domain(4);
        let cov = CovarianceSpec::from_decay(d, 3.0);
        let fine = sample_path(&cov, 0.05, -1.0, 1.0, 17).unwrap();
        let coarse = fine.coarsen(4).unwrap();
        assert_abs_diff_eq!(coarse.dt(), 0.2, epsilon = 1e-15);
        for mode in 1..=4 {
            for step in [-5i64, -1, 0, 3, 4] {
                let lhs = coarse.partial_sum(mode, step).unwrap();
                let rhs = fine.partial_sum(mode, 4 * step).unwrap();
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
            }
        }
        assert!(fine.coarsen(7).is_err());
    }

    #[test]
    fn ou_deterministic_decay() {
        let d = domain(1);
        // single mode with alpha − lambda_1 = −1
        let proc = OuProcess::new(d, 0.0, 0.1, OuUpdate::LeftPoint);
        let mut state = OuState {
            z: SpectralField::unit_mode(d, 1, 1.0).unwrap(),
        };
        proc.step(&mut state, &[0.0]);
        assert_relative_eq!(state.z.coeffs()[0], (-0.1f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn ou_zero_noise_stays_zero() {
        let d = domain(4);
        let proc = OuProcess::new(d, 0.3, 0.05, OuUpdate::VarianceExact);
        let mut state = OuState::zero(d);
        for _ in 0..100 {
            proc.step(&mut state, &[0.0; 4]);
        }
        assert_eq!(state.z.h_norm(), 0.0);
    }

    #[test]
    fn ou_variance_exact_hits_stationary_variance() {
        let d = domain(2);
        let cov = CovarianceSpec::from_modes(d, vec![1.0, 0.008]).unwrap();
        let alpha = 0.0;
        let dt = 0.01;
        let n = 200_000i64;
        let path = sample_path(&cov, dt, 0.0, n as f64 * dt, 2024).unwrap();
        let proc = OuProcess::new(d, alpha, dt, OuUpdate::VarianceExact);
        let mut state = proc.stationary_state(&cov, 1).unwrap();

        let lams = d.eigenvalues();
        let mut sums = vec![0.0f64; 2];
        let mut sqs = vec![0.0f64; 2];
        for step in 0..n {
            proc.step(&mut state, path.increments_at(step).unwrap());
            for k in 0..2 {
                sums[k] += state.z.coeffs()[k];
                sqs[k] += state.z.coeffs()[k].powi(2);
            }
        }
        for k in 0..2 {
            let mean = sums[k] / n as f64;
            let var = sqs[k] / n as f64 - mean * mean;
            let expected = cov.q()[k] / (2.0 * (lams[k] - alpha));
            assert_relative_eq!(var, expected, max_relative = 0.05);
        }
    }

    #[test]
    fn ou_step_wrapper_matches_process() {
        let d = domain(3);
        let state = OuState {
            z: SpectralField::from_coeffs(d, vec![0.3, -0.2, 0.1]).unwrap(),
        };
        let dw = [0.05, -0.01, 0.02];
        let a = ou_step(&state, &dw, 0.02, 0.7, OuUpdate::LeftPoint);
        let proc = OuProcess::new(d, 0.7, 0.02, OuUpdate::LeftPoint);
        let mut b = state.clone();
        proc.step(&mut b, &dw);
        assert_eq!(a.z.coeffs(), b.z.coeffs());
    }
}
