//! The singleton random pullback attractor, synchronization diagnostics,
//! smallness-event sampling and the analytic decay-envelope check.
//!
//! The attractor a(ω) is located by the pullback procedure: an ensemble of
//! spread initial conditions is released at time −S and integrated to time
//! 0 on the same path; synchronization by noise collapses the ensemble, and
//! the depth S is doubled until the time-0 diameter falls below tolerance.
//!
//! Smallness events — paths along which ‖a(θ^s ω)‖_V stays inside (0, ε)
//! for all s in a window [0, T] — have positive probability and are
//! obtained by rejection over a deterministic trial-index → seed map, so
//! results are reproducible for any scheduling of the trials.

use rayon::prelude::*;

use crate::dynamics::{SolverConfig, Stepper, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::noise::{sample_path, CovarianceSpec, NoisePath, OuProcess, OuState, OuUpdate};
use crate::special::{h1_envelope, MlParams};
use crate::spectral::SpectralField;

/// Initial-condition layout for pullback ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PullbackEnsemble {
    /// 0 and the four corners ±c·e₁ ± c·e₂ (five trajectories).
    Corners,
    /// ±c·e₁ (two trajectories; cheaper, used for mass event screening).
    Pair,
}

/// Controls for the pullback procedure.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct PullbackSettings {
    /// Time-0 H-diameter establishing synchronization.
    pub tol: f64,
    /// First pullback depth; doubled until convergence.
    pub initial_depth: f64,
    /// Depth bound; exceeding it is a no-synchronization error.
    pub max_depth: f64,
    /// Initial-condition spread c.
    pub spread: f64,
    pub ensemble: PullbackEnsemble,
}

impl Default for PullbackSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            initial_depth: 5.0,
            max_depth: 40.0,
            spread: 5.0,
            ensemble: PullbackEnsemble::Corners,
        }
    }
}

/// Where the pullback converged and how the attractor behaves forward in
/// time.
#[derive(Debug, Clone)]
pub struct AttractorEstimate {
    /// a(ω), the ensemble mean at time 0.
    pub state: SpectralField,
    /// Depth at which the ensemble diameter fell below tolerance.
    pub pullback_depth: f64,
    /// Time-0 ensemble H-diameter.
    pub gap: f64,
    /// Time-0 ensemble V-diameter.
    pub v_gap: f64,
    /// ‖a(θ^s ω)‖_V for s on the forward grid.
    pub v_norm_series: Vec<f64>,
    /// Forward grid times.
    pub times: Vec<f64>,
}

impl AttractorEstimate {
    pub fn sup_v_norm(&self) -> f64 {
        self.v_norm_series.iter().cloned().fold(0.0, f64::max)
    }
}

fn ensemble_states(
    domain: crate::spectral::DomainSpec,
    settings: &PullbackSettings,
) -> Result<Vec<SpectralField>> {
    let c = settings.spread;
    let e1 = SpectralField::unit_mode(domain, 1, 1.0)?;
    let mut out = Vec::new();
    match settings.ensemble {
        PullbackEnsemble::Corners => {
            let e2 = SpectralField::unit_mode(domain, 2, 1.0)?;
            out.push(SpectralField::zero(domain));
            for s1 in [c, -c] {
                for s2 in [c, -c] {
                    let mut u = e1.scale(s1);
                    u.add_scaled(&e2, s2);
                    out.push(u);
                }
            }
        }
        PullbackEnsemble::Pair => {
            out.push(e1.scale(c));
            out.push(e1.scale(-c));
        }
    }
    Ok(out)
}

fn diameters(states: &[SpectralField]) -> (f64, f64) {
    let mut h = 0.0f64;
    let mut v = 0.0f64;
    for i in 0..states.len() {
        for j in (i + 1)..states.len() {
            let d = &states[i] - &states[j];
            h = h.max(d.h_norm());
            v = v.max(d.v_norm());
        }
    }
    (h, v)
}

/// Locate a(ω) by pullback with depth doubling, then flow it forward over
/// `[0, forward_horizon]` to record ‖a(θ^s ω)‖_V.
///
/// The path must cover `[-max_depth, forward_horizon]` (or at least the
/// depth at which synchronization is reached).
pub fn pullback_attractor(
    path: &NoisePath,
    cfg: SolverConfig,
    settings: &PullbackSettings,
    forward_horizon: f64,
) -> Result<AttractorEstimate> {
    let domain = path.covariance().domain();
    let mut stepper = Stepper::new(domain, cfg)?;
    let initial = ensemble_states(domain, settings)?;

    let mut depth = settings.initial_depth;
    let mut last_diameter = f64::INFINITY;
    loop {
        if depth > settings.max_depth * (1.0 + 1e-12) {
            return Err(Error::NoSynchronization {
                depth: settings.max_depth,
                diameter: last_diameter,
            });
        }
        // snap the depth onto the step grid
        let steps = (depth / cfg.dt).round();
        let s = steps * cfg.dt;
        let mut finals = Vec::with_capacity(initial.len());
        let mut failed = false;
        for u0 in &initial {
            match stepper.integrate_final(u0, path, -s, 0.0) {
                Ok(u) => finals.push(u),
                Err(Error::BlowUp { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !failed {
            let (h_gap, v_gap) = diameters(&finals);
            last_diameter = h_gap;
            if h_gap < settings.tol {
                let mut mean = SpectralField::zero(domain);
                for f in &finals {
                    mean.add_scaled(f, 1.0 / finals.len() as f64);
                }
                let (times, v_norm_series) = if forward_horizon > 0.0 {
                    let record = stepper.integrate(&mean, path, 0.0, forward_horizon)?;
                    (record.times().to_vec(), record.v_norms().to_vec())
                } else {
                    (vec![0.0], vec![mean.v_norm()])
                };
                return Ok(AttractorEstimate {
                    state: mean,
                    pullback_depth: s,
                    gap: h_gap,
                    v_gap,
                    v_norm_series,
                    times,
                });
            }
        }
        depth *= 2.0;
    }
}

/// One rejection-sampling outcome.
#[derive(Debug, Clone)]
pub struct EventSample {
    /// Seed of the accepted path (derived from the base seed and trial).
    pub seed: u64,
    pub trial_index: u64,
    pub epsilon: f64,
    pub horizon: f64,
    pub accepted: bool,
    /// Trials consumed up to and including this one.
    pub trials_used: u64,
    /// sup over the window of ‖a(θ^s ω)‖_V.
    pub sup_v_norm: f64,
    /// The attractor was numerically zero (degenerate noise-free case).
    pub degenerate_zero: bool,
    pub attractor: AttractorEstimate,
    pub path: NoisePath,
}

/// Controls for smallness-event sampling.
#[derive(Debug, Clone, Copy)]
pub struct EventSettings {
    /// V-norm smallness level ε.
    pub epsilon: f64,
    /// Window length T.
    pub horizon: f64,
    pub max_trials: u64,
    pub pullback: PullbackSettings,
}

/// Deterministic trial-index → seed map (splitmix64 over the base seed).
pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    let mut x = base_seed
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(trial.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn run_trial(
    cov: &CovarianceSpec,
    cfg: SolverConfig,
    settings: &EventSettings,
    seed: u64,
    trial: u64,
) -> Result<EventSample> {
    let path_seed = trial_seed(seed, trial);
    let path = sample_path(
        cov,
        cfg.dt,
        -settings.pullback.max_depth,
        settings.horizon,
        path_seed,
    )?;
    let attractor = pullback_attractor(&path, cfg, &settings.pullback, settings.horizon)?;
    let sup = attractor.sup_v_norm();
    let degenerate = sup < 1e-14;
    Ok(EventSample {
        seed: path_seed,
        trial_index: trial,
        epsilon: settings.epsilon,
        horizon: settings.horizon,
        accepted: !degenerate && sup < settings.epsilon,
        trials_used: trial + 1,
        sup_v_norm: sup,
        degenerate_zero: degenerate,
        attractor,
        path,
    })
}

/// Rejection-sample until the first path whose attractor stays inside
/// (0, ε) in V over the window. Degenerate zero attractors return
/// immediately with the flag instead of looping.
pub fn sample_smallness_event(
    cov: &CovarianceSpec,
    cfg: SolverConfig,
    settings: &EventSettings,
    seed: u64,
) -> Result<EventSample> {
    if !(settings.epsilon > 0.0 && settings.horizon > 0.0) {
        return Err(Error::InvalidParameter(
            "event sampling needs epsilon > 0 and horizon > 0".into(),
        ));
    }
    let mut smallest = f64::INFINITY;
    for trial in 0..settings.max_trials {
        match run_trial(cov, cfg, settings, seed, trial) {
            Ok(sample) => {
                if sample.degenerate_zero || sample.accepted {
                    return Ok(sample);
                }
                smallest = smallest.min(sample.sup_v_norm);
            }
            Err(Error::NoSynchronization { .. }) | Err(Error::BlowUp { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RejectionExhausted {
        trials: settings.max_trials,
        smallest,
    })
}

/// Aggregate outcome of a parallel event harvest.
#[derive(Debug)]
pub struct EventHarvest {
    /// Accepted samples in trial order.
    pub accepted: Vec<EventSample>,
    pub trials_scanned: u64,
    /// Pullback or blow-up failures (diagnostic, not fatal).
    pub failures: u64,
    pub smallest_sup: f64,
}

/// Scan trial indices in deterministic order, in parallel batches, until
/// `target_accepted` events are collected or the trial budget is spent.
/// Results are identical for any worker count.
pub fn harvest_smallness_events(
    cov: &CovarianceSpec,
    cfg: SolverConfig,
    settings: &EventSettings,
    seed: u64,
    target_accepted: usize,
) -> Result<EventHarvest> {
    if !(settings.epsilon > 0.0 && settings.horizon > 0.0) {
        return Err(Error::InvalidParameter(
            "event sampling needs epsilon > 0 and horizon > 0".into(),
        ));
    }
    let batch = (rayon::current_num_threads() as u64 * 4).max(8);
    let mut accepted = Vec::new();
    let mut failures = 0u64;
    let mut smallest = f64::INFINITY;
    let mut next = 0u64;
    while next < settings.max_trials && accepted.len() < target_accepted {
        let hi = (next + batch).min(settings.max_trials);
        let results: Vec<(u64, Result<EventSample>)> = (next..hi)
            .into_par_iter()
            .map(|trial| (trial, run_trial(cov, cfg, settings, seed, trial)))
            .collect();
        for (_, r) in results {
            match r {
                Ok(sample) => {
                    smallest = smallest.min(sample.sup_v_norm);
                    if sample.accepted && accepted.len() < target_accepted {
                        accepted.push(sample);
                    }
                }
                Err(Error::NoSynchronization { .. }) | Err(Error::BlowUp { .. }) => {
                    failures += 1;
                }
                Err(e) => return Err(e),
            }
        }
        next = hi;
    }
    Ok(EventHarvest {
        accepted,
        trials_scanned: next,
        failures,
        smallest_sup: smallest,
    })
}

/// The OU-subtracted run: ũ solving dũ = (Δ+α)ũ + F(ũ+z) with the
/// zero-start OU process z on the same increments. Returns the ũ record
/// and the V-norm series of z.
pub fn ou_subtracted_run(
    u0: &SpectralField,
    path: &NoisePath,
    t0: f64,
    t1: f64,
    cfg: SolverConfig,
    update: OuUpdate,
) -> Result<(TrajectoryRecord, Vec<f64>)> {
    let domain = u0.domain();
    let mut stepper = Stepper::new(domain, cfg)?;
    let ou = OuProcess::new(domain, cfg.alpha, cfg.dt, update);
    let steps = ((t1 - t0) / cfg.dt).round() as i64;
    let start = (t0 / cfg.dt).round() as i64;

    let mut z = OuState::zero(domain);
    let mut u = u0.clone();
    let mut states = vec![u.clone()];
    let mut z_vnorms = vec![z.z.v_norm()];
    for s in 0..steps {
        u = stepper.step_random_pde(&u, &z)?;
        ou.step(&mut z, path.increments_at(start + s)?);
        states.push(u.clone());
        z_vnorms.push(z.z.v_norm());
    }
    Ok((TrajectoryRecord::from_states(t0, cfg.dt, states), z_vnorms))
}

/// Comparison of a simulated OU-subtracted run against the analytic decay
/// envelope.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EnvelopeReport {
    pub times: Vec<f64>,
    pub simulated_v: Vec<f64>,
    pub envelope: Vec<f64>,
    /// max_t (simulated − envelope); nonpositive confirms the bound.
    pub max_residual: f64,
    /// False when μ = λ₁ − α ≤ 0 and the estimate is vacuous.
    pub applicable: bool,
    pub eta: f64,
    pub lipschitz_l: f64,
}

/// Evaluate the decay envelope along a recorded ũ run and report the
/// worst residual. `eta` must dominate the recorded sup of ‖z‖_V.
pub fn gronwall_envelope_check(
    record: &TrajectoryRecord,
    z_vnorms: &[f64],
    eta: f64,
    lipschitz_l: f64,
    cfg: SolverConfig,
    ml: &MlParams,
) -> Result<EnvelopeReport> {
    let domain = record.state(0).domain();
    let mu = domain.eigenvalue(1)? - cfg.alpha;
    let t0 = record.times()[0];
    let times: Vec<f64> = record.times().iter().map(|t| t - t0).collect();
    if mu <= 0.0 {
        return Ok(EnvelopeReport {
            times,
            simulated_v: record.v_norms().to_vec(),
            envelope: Vec::new(),
            max_residual: f64::NAN,
            applicable: false,
            eta,
            lipschitz_l,
        });
    }
    let z_sup = z_vnorms.iter().cloned().fold(0.0, f64::max);
    if z_sup > eta * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "recorded sup of the OU V-norm {z_sup:.3e} exceeds eta {eta:.3e}"
        )));
    }
    let envelope = h1_envelope(record.v_norms()[0], eta, lipschitz_l, mu, &times, ml)?;
    let max_residual = record
        .v_norms()
        .iter()
        .zip(&envelope)
        .map(|(s, e)| s - e)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(EnvelopeReport {
        times,
        simulated_v: record.v_norms().to_vec(),
        envelope,
        max_residual,
        applicable: true,
        eta,
        lipschitz_l,
    })
}
