//! Invariant-cone quadratic forms and numerical growth certificates.
//!
//! The form Q_δ(v) = δ‖π₁v‖² − ‖π₁⊥v‖² cuts out the closed cone
//! C_δ = {Q_δ ≥ 0} of vectors roughly parallel to the first eigenmode; its
//! grade-k analogue Q_δ^{(k)} on ∧^k H weights the distinguished blade
//! e_1∧⋯∧e_k against all others. When the variational multiplier is small,
//! ‖3u²‖_V ≤ ε, solutions launched inside the cone satisfy a differential
//! inequality
//!
//! ```text
//!     (1/2) dQ/dt ≥ rate · Q,
//! ```
//!
//! with rate = α−λ₁−2δ for k = 1 (δ = √ε coupling) and
//! rate = Λ_{i₀} − (1+δ)kε/δ in general, Λ_{i₀} = Σ_{i≤k}(α−λ_i). A
//! certificate propagates the tangent data along a recorded base
//! trajectory, tracks the Q-series, the per-step residual of the
//! inequality (centered differences), and the norm lower bound
//! ‖v_t‖² ≥ ((M−1)/(M+δ)) e^{2t(Λ_{i₀}−2kδ)} ‖v₀‖² that holds for data in
//! the tighter cone C_{δ/M}.
//!
//! The admissible δ for grade k comes from a geometric grid: δ is feasible
//! when ε(1+δ)k ≤ (λ_{k+1} − λ_k) − ε(1+δ)k/δ, the spectral gap being the
//! minimum of Λ_{i₀} − Λ_i over competing wedge indices (attained by
//! swapping the k-th mode for the (k+1)-th).

use crate::dynamics::{SolverConfig, Stepper, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::exterior::{blade, WedgeVector};
use crate::spectral::{discrete_sobolev_constant, DomainSpec, SpectralField};

/// Parameters of one cone certificate.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ConeParams {
    /// Cone opening δ > 0.
    pub delta: f64,
    /// Wedge grade.
    pub k: usize,
    /// Safety factor M > 1 of the tighter initial cone C_{δ/M}.
    pub safety_m: f64,
    /// V-norm bound on the frozen multiplier 3u².
    pub epsilon: f64,
}

impl ConeParams {
    /// Grade-1 parameters with the δ = √ε coupling.
    pub fn for_top(epsilon: f64, safety_m: f64) -> Result<Self> {
        let p = Self {
            delta: epsilon.sqrt(),
            k: 1,
            safety_m,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    /// Grade-k parameters with δ from the admissible grid.
    pub fn admissible(
        alpha: f64,
        k: usize,
        epsilon: f64,
        domain: DomainSpec,
        safety_m: f64,
    ) -> Result<Option<Self>> {
        Ok(admissible_delta(alpha, k, epsilon, domain)?.map(|delta| Self {
            delta,
            k,
            safety_m,
            epsilon,
        }))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParameter("cone delta must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("cone grade must be >= 1".into()));
        }
        if !(self.safety_m > 1.0) {
            return Err(Error::InvalidParameter("safety factor must exceed 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidParameter("epsilon must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Q_δ(v) = δ‖π₁v‖² − ‖π₁⊥v‖².
pub fn q_delta(v: &SpectralField, delta: f64) -> f64 {
    let head = v.coeffs()[0];
    let tail: f64 = v.coeffs()[1..].iter().map(|c| c * c).sum();
    delta * head * head - tail
}

/// Q_δ^{(k)} in blade coordinates: δ v_{i₀}² − Σ_{i≠i₀} v_i².
pub fn q_delta_k(v: &WedgeVector, delta: f64, k: usize) -> Result<f64> {
    if v.grade() != k {
        return Err(Error::GradeMismatch {
            expected: k,
            got: v.grade(),
        });
    }
    let i0 = v.basis().distinguished_rank();
    let head = v.coeffs()[i0];
    let total: f64 = v.coeffs().iter().map(|c| c * c).sum();
    Ok(delta * head * head - (total - head * head))
}

/// Largest δ on the grid {2^0, 2^{-1}, …, 2^{-20}} satisfying
/// ε(1+δ)k ≤ (λ_{k+1} − λ_k) − ε(1+δ)k/δ, or None when no grid point
/// qualifies. Requires α > λ_k.
pub fn admissible_delta(
    alpha: f64,
    k: usize,
    epsilon: f64,
    domain: DomainSpec,
) -> Result<Option<f64>> {
    if k == 0 || k >= domain.modes() {
        return Err(Error::InvalidParameter(format!(
            "grade {k} needs 1 <= k < N = {}",
            domain.modes()
        )));
    }
    let lam_k = domain.eigenvalue(k)?;
    if alpha <= lam_k {
        return Err(Error::InvalidParameter(format!(
            "admissible delta needs alpha > lambda_k, got alpha = {alpha}, lambda_{k} = {lam_k}"
        )));
    }
    // smallest competitor gap: swap the k-th mode for the (k+1)-th
    let gap = domain.eigenvalue(k + 1)? - lam_k;
    for j in 0..=20 {
        let delta = 0.5f64.powi(j);
        let lhs = epsilon * (1.0 + delta) * k as f64;
        if lhs <= gap - lhs / delta {
            return Ok(Some(delta));
        }
    }
    Ok(None)
}

/// Why a certificate run ended the way it did.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum CertificateOutcome {
    /// Q stayed positive and the residual never dipped below −tol.
    Valid,
    /// Propagation ran but the differential inequality failed.
    ResidualViolated,
    /// sup‖3u²‖_V along the base exceeded ε; nothing was propagated.
    PreconditionFailed { measured_sup: f64 },
    /// The initial data was outside the cone; nothing was propagated.
    InitialConeViolation { q0: f64 },
}

/// Recorded Q-series, residuals and norm-bound ratios along one run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConeCertificate {
    pub params: ConeParams,
    pub outcome: CertificateOutcome,
    /// Rate in the differential inequality.
    pub rate: f64,
    /// Rate of the norm lower bound, Λ_{i₀} − 2kδ.
    pub norm_rate: f64,
    pub times: Vec<f64>,
    pub q_values: Vec<f64>,
    /// (1/2)dQ/dt − rate·Q at interior record times.
    pub residuals: Vec<f64>,
    pub min_residual: f64,
    /// ‖v_t‖² / (prefactor · e^{2t·norm_rate} ‖v₀‖²); meaningful when the
    /// initial data lies in C_{δ/M}.
    pub norm_bound_ratio: Vec<f64>,
    pub min_norm_bound_ratio: f64,
    /// Whether the initial data satisfied Q_{δ/M} ≥ 0.
    pub initial_in_tight_cone: bool,
    /// min_t [Q_t − Q₀ e^{2t·norm_rate}] (the integrated inequality).
    pub q_exp_margin: f64,
    /// Measured sup of ‖3u²‖_V along the base.
    pub sup_multiplier_v: f64,
    /// Discrete Sobolev constant of the truncation, for the report.
    pub sobolev_constant: f64,
}

fn empty_certificate(
    params: ConeParams,
    outcome: CertificateOutcome,
    rate: f64,
    norm_rate: f64,
    sup_mult: f64,
    sobolev: f64,
) -> ConeCertificate {
    ConeCertificate {
        params,
        outcome,
        rate,
        norm_rate,
        times: Vec::new(),
        q_values: Vec::new(),
        residuals: Vec::new(),
        min_residual: f64::NAN,
        norm_bound_ratio: Vec::new(),
        min_norm_bound_ratio: f64::NAN,
        initial_in_tight_cone: false,
        q_exp_margin: f64::NAN,
        sup_multiplier_v: sup_mult,
        sobolev_constant: sobolev,
    }
}

fn certificate_rates(params: &ConeParams, alpha: f64, domain: DomainSpec) -> Result<(f64, f64)> {
    let lams = domain.eigenvalues();
    let kf = params.k as f64;
    let lambda_i0: f64 = lams[..params.k].iter().map(|l| alpha - l).sum();
    let rate = if params.k == 1 {
        alpha - lams[0] - 2.0 * params.delta
    } else {
        lambda_i0 - (1.0 + params.delta) * kf * params.epsilon / params.delta
    };
    let norm_rate = lambda_i0 - 2.0 * kf * params.delta;
    Ok((rate, norm_rate))
}

fn finish_certificate(
    params: ConeParams,
    rate: f64,
    norm_rate: f64,
    dt: f64,
    times: Vec<f64>,
    q_values: Vec<f64>,
    norms_sq: Vec<f64>,
    q0_tight: f64,
    sup_mult: f64,
    sobolev: f64,
    tol_cert: f64,
) -> ConeCertificate {
    let mut residuals = Vec::with_capacity(q_values.len().saturating_sub(2));
    for i in 1..q_values.len().saturating_sub(1) {
        let dq = (q_values[i + 1] - q_values[i - 1]) / (2.0 * dt);
        residuals.push(0.5 * dq - rate * q_values[i]);
    }
    let min_residual = residuals.iter().cloned().fold(f64::INFINITY, f64::min);

    let initial_in_tight_cone = q0_tight >= 0.0;
    let prefactor = (params.safety_m - 1.0) / (params.safety_m + params.delta);
    let n0 = norms_sq[0];
    let t0 = times[0];
    let norm_bound_ratio: Vec<f64> = times
        .iter()
        .zip(&norms_sq)
        .map(|(t, n)| n / (prefactor * (2.0 * norm_rate * (t - t0)).exp() * n0))
        .collect();
    let min_norm_bound_ratio = norm_bound_ratio
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);

    let q0 = q_values[0];
    let q_exp_margin = times
        .iter()
        .zip(&q_values)
        .map(|(t, q)| q - q0 * (2.0 * norm_rate * (t - t0)).exp())
        .fold(f64::INFINITY, f64::min);

    let all_positive = q_values.iter().all(|q| *q > 0.0);
    let outcome = if all_positive && min_residual >= -tol_cert {
        CertificateOutcome::Valid
    } else {
        CertificateOutcome::ResidualViolated
    };
    ConeCertificate {
        params,
        outcome,
        rate,
        norm_rate,
        times,
        q_values,
        residuals,
        min_residual,
        norm_bound_ratio,
        min_norm_bound_ratio,
        initial_in_tight_cone,
        q_exp_margin,
        sup_multiplier_v: sup_mult,
        sobolev_constant: sobolev,
    }
}

/// Sup over the record of the V-norm of the frozen multiplier 3u².
pub fn sup_multiplier_v_norm(base: &TrajectoryRecord, cfg: SolverConfig) -> Result<f64> {
    let domain = base.state(0).domain();
    let mut stepper = Stepper::new(domain, cfg)?;
    let mut sup = 0.0f64;
    for state in base.states() {
        sup = sup.max(stepper.multiplier(state).v_norm);
    }
    Ok(sup)
}

/// Certify cone growth of a single tangent vector (grade 1) along `base`.
pub fn certify_cone_growth(
    base: &TrajectoryRecord,
    v0: &SpectralField,
    params: &ConeParams,
    cfg: SolverConfig,
    tol_cert: f64,
) -> Result<ConeCertificate> {
    params.validate()?;
    if params.k != 1 {
        return Err(Error::GradeMismatch {
            expected: 1,
            got: params.k,
        });
    }
    let domain = base.state(0).domain();
    let (rate, norm_rate) = certificate_rates(params, cfg.alpha, domain)?;
    let sobolev = discrete_sobolev_constant(domain);

    let sup_mult = sup_multiplier_v_norm(base, cfg)?;
    if sup_mult > params.epsilon {
        return Ok(empty_certificate(
            *params,
            CertificateOutcome::PreconditionFailed {
                measured_sup: sup_mult,
            },
            rate,
            norm_rate,
            sup_mult,
            sobolev,
        ));
    }
    let q0 = q_delta(v0, params.delta);
    if q0 <= 0.0 {
        return Ok(empty_certificate(
            *params,
            CertificateOutcome::InitialConeViolation { q0 },
            rate,
            norm_rate,
            sup_mult,
            sobolev,
        ));
    }

    let mut stepper = Stepper::new(domain, cfg)?;
    let mut v = v0.clone();
    let mut q_values = vec![q0];
    let mut norms_sq = vec![v.h_norm().powi(2)];
    for i in 0..base.len() - 1 {
        let m = stepper.multiplier(base.state(i));
        v = stepper.step_variational_frozen(&v, &m)?;
        q_values.push(q_delta(&v, params.delta));
        norms_sq.push(v.h_norm().powi(2));
    }
    let q0_tight = q_delta(v0, params.delta / params.safety_m);
    Ok(finish_certificate(
        *params,
        rate,
        norm_rate,
        cfg.dt,
        base.times().to_vec(),
        q_values,
        norms_sq,
        q0_tight,
        sup_mult,
        sobolev,
        tol_cert,
    ))
}

/// Certify cone growth of a k-frame along `base`: the frame is propagated
/// vector-wise and its blade coordinates are formed at every record time
/// (no wedge ODE is stepped directly).
pub fn certify_cone_growth_k(
    base: &TrajectoryRecord,
    frame0: &[SpectralField],
    params: &ConeParams,
    cfg: SolverConfig,
    tol_cert: f64,
) -> Result<ConeCertificate> {
    params.validate()?;
    if frame0.len() != params.k {
        return Err(Error::GradeMismatch {
            expected: params.k,
            got: frame0.len(),
        });
    }
    if params.k == 1 {
        return certify_cone_growth(base, &frame0[0], params, cfg, tol_cert);
    }
    let domain = base.state(0).domain();
    let (rate, norm_rate) = certificate_rates(params, cfg.alpha, domain)?;
    let sobolev = discrete_sobolev_constant(domain);

    let sup_mult = sup_multiplier_v_norm(base, cfg)?;
    if sup_mult > params.epsilon {
        return Ok(empty_certificate(
            *params,
            CertificateOutcome::PreconditionFailed {
                measured_sup: sup_mult,
            },
            rate,
            norm_rate,
            sup_mult,
            sobolev,
        ));
    }
    let b0 = blade(frame0)?;
    let q0 = q_delta_k(&b0, params.delta, params.k)?;
    if q0 <= 0.0 {
        return Ok(empty_certificate(
            *params,
            CertificateOutcome::InitialConeViolation { q0 },
            rate,
            norm_rate,
            sup_mult,
            sobolev,
        ));
    }

    let mut stepper = Stepper::new(domain, cfg)?;
    let mut frame: Vec<SpectralField> = frame0.to_vec();
    let mut q_values = vec![q0];
    let mut norms_sq = vec![b0.norm().powi(2)];
    for i in 0..base.len() - 1 {
        let m = stepper.multiplier(base.state(i));
        for v in &mut frame {
            *v = stepper.step_variational_frozen(v, &m)?;
        }
        let bl = blade(&frame)?;
        q_values.push(q_delta_k(&bl, params.delta, params.k)?);
        norms_sq.push(bl.norm().powi(2));
    }
    let q0_tight = q_delta_k(&b0, params.delta / params.safety_m, params.k)?;
    Ok(finish_certificate(
        *params,
        rate,
        norm_rate,
        cfg.dt,
        base.times().to_vec(),
        q_values,
        norms_sq,
        q0_tight,
        sup_mult,
        sobolev,
        tol_cert,
    ))
}

impl ConeCertificate {
    /// CSV rows `t,Q,residual,norm_ratio` (residuals blank at endpoints).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,Q,residual,norm_ratio")?;
        for (j, t) in self.times.iter().enumerate() {
            let resid = if j >= 1 && j - 1 < self.residuals.len() {
                format!("{:.12e}", self.residuals[j - 1])
            } else {
                String::new()
            };
            writeln!(
                w,
                "{:.9},{:.12e},{},{:.12e}",
                t, self.q_values[j], resid, self.norm_bound_ratio[j]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate;
    use crate::noise::{sample_path, CovarianceSpec};
    use crate::spectral::BasisConvention;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    fn domain(n: usize) -> DomainSpec {
        DomainSpec::new(TWO_PI, n, BasisConvention::PaperTwoPi).unwrap()
    }

    fn zero_base(d: DomainSpec, cfg: SolverConfig, t1: f64) -> TrajectoryRecord {
        let cov = CovarianceSpec::from_modes(d, vec![0.0; d.modes()]).unwrap();
        let path = sample_path(&cov, cfg.dt, 0.0, t1, 0).unwrap();
        integrate(&SpectralField::zero(d), &path, 0.0, t1, cfg).unwrap()
    }

    #[test]
    fn q_delta_named_values() {
        let d = domain(4);
        let delta = 0.3;
        let e1 = SpectralField::unit_mode(d, 1, 1.0).unwrap();
        assert_abs_diff_eq!(q_delta(&e1, delta), delta, epsilon = 1e-15);

        let e2 = SpectralField::unit_mode(d, 2, 1.0).unwrap();
        assert_abs_diff_eq!(q_delta(&e2, delta), -1.0, epsilon = 1e-15);

        let v = SpectralField::from_coeffs(d, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(q_delta(&v, 2.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn q_delta_k_named_values() {
        let d = domain(5);
        let k = 2;
        let delta = 0.7;
        let f1 = SpectralField::unit_mode(d, 1, 1.0).unwrap();
        let f2 = SpectralField::unit_mode(d, 2, 1.0).unwrap();
        let f3 = SpectralField::unit_mode(d, 3, 1.0).unwrap();

        let distinguished = blade(&[f1.clone(), f2.clone()]).unwrap();
        assert_abs_diff_eq!(
            q_delta_k(&distinguished, delta, k).unwrap(),
            delta,
            epsilon = 1e-15
        );

        let off = blade(&[f1.clone(), f3.clone()]).unwrap();
        assert_abs_diff_eq!(q_delta_k(&off, delta, k).unwrap(), -1.0, epsilon = 1e-15);

        assert!(matches!(
            q_delta_k(&off, delta, 3),
            Err(Error::GradeMismatch { .. })
        ));
    }

    #[test]
    fn q_delta_k_matches_direct_summation() {
        let d = domain(6);
        let mut rng_state = 88172645463325252u64;
        let mut next = move || {
            // xorshift is plenty for test fixtures
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let vs: Vec<SpectralField> = (0..2)
            .map(|_| {
                SpectralField::from_coeffs(d, (0..6).map(|_| next()).collect()).unwrap()
            })
            .collect();
        let b = blade(&vs).unwrap();
        let delta = 0.42;
        let i0 = b.basis().distinguished_rank();
        let direct = delta * b.coeffs()[i0] * b.coeffs()[i0]
            - (b.norm().powi(2) - b.coeffs()[i0] * b.coeffs()[i0]);
        assert_relative_eq!(
            q_delta_k(&b, delta, 2).unwrap(),
            direct,
            max_relative = 1e-12
        );
    }

    #[test]
    fn admissible_delta_examples() {
        let d = domain(8);
        // epsilon → 0 returns the grid cap
        assert_eq!(admissible_delta(2.0, 1, 0.0, d).unwrap(), Some(1.0));

        // alpha = 2, eps = 0.01, gap = 3: delta = 1 already works
        let delta = admissible_delta(2.0, 1, 0.01, d).unwrap().unwrap();
        let lhs = 0.01 * (1.0 + delta);
        assert!(lhs <= 3.0 - lhs / delta);
        assert_eq!(delta, 1.0);

        // epsilon at the gap scale: no grid point works
        assert_eq!(admissible_delta(2.0, 1, 2.0, d).unwrap(), None);

        // precondition alpha > lambda_k
        assert!(admissible_delta(0.5, 1, 0.01, d).is_err());
        assert!(admissible_delta(4.5, 2, 0.01, d).is_ok());
        assert!(admissible_delta(4.0, 2, 0.01, d).is_err());
    }

    #[test]
    fn admissible_gap_is_the_wedge_minimum() {
        // enumerate Λ_{i0} − Λ_i over all competing wedge indices and check
        // the analytic minimum λ_{k+1} − λ_k
        use crate::exterior::WedgeBasis;
        let d = domain(8);
        let lams = d.eigenvalues();
        for k in 1..=3usize {
            let basis = WedgeBasis::new(8, k).unwrap();
            let sum0: f64 = lams[..k].iter().sum();
            let mut min_gap = f64::INFINITY;
            for ix in basis.indices().iter().skip(1) {
                let s: f64 = ix.indices().iter().map(|&i| lams[i - 1]).sum();
                min_gap = min_gap.min(s - sum0);
            }
            assert_relative_eq!(
                min_gap,
                lams[k] - lams[k - 1],
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn linear_certificate_grows_exactly() {
        let d = domain(8);
        let cfg = SolverConfig::new(1e-3, 2.0);
        let base = zero_base(d, cfg, 1.0);
        let params = ConeParams {
            delta: 0.25,
            k: 1,
            safety_m: 10.0,
            epsilon: 0.05,
        };
        let v0 = SpectralField::unit_mode(d, 1, 1.0).unwrap();
        let cert = certify_cone_growth(&base, &v0, &params, cfg, 1e-6).unwrap();
        assert_eq!(cert.outcome, CertificateOutcome::Valid);
        assert!(cert.initial_in_tight_cone);

        // Q(t) = δ e^{2(α−λ₁)t} and residual = 2δ·Q > 0
        for (t, q) in cert.times.iter().zip(&cert.q_values) {
            let expect = 0.25 * (2.0 * (2.0 - 1.0) * t).exp();
            assert_relative_eq!(*q, expect, max_relative = 1e-9);
        }
        assert!(cert.min_residual > 0.0);
        // exp lower bound at rate α−λ₁−2δ holds with margin
        assert!(cert.q_exp_margin >= -1e-9);
        // norm ratio ≥ 1: the bound has slack prefactor (M−1)/(M+δ)
        assert!(cert.min_norm_bound_ratio >= 1.0 - 1e-9);
    }

    #[test]
    fn certificate_refuses_data_outside_the_cone() {
        let d = domain(8);
        let cfg = SolverConfig::new(1e-3, 2.0);
        let base = zero_base(d, cfg, 0.2);
        let params = ConeParams {
            delta: 0.25,
            k: 1,
            safety_m: 10.0,
            epsilon: 0.05,
        };
        let e2 = SpectralField::unit_mode(d, 2, 1.0).unwrap();
        let cert = certify_cone_growth(&base, &e2, &params, cfg, 1e-6).unwrap();
        assert!(matches!(
            cert.outcome,
            CertificateOutcome::InitialConeViolation { q0 } if q0 < 0.0
        ));
        assert!(cert.times.is_empty());
    }

    #[test]
    fn certificate_reports_precondition_failure() {
        let d = domain(12);
        let cfg = SolverConfig::new(1e-3, 2.0);
        let cov = CovarianceSpec::from_scaled_decay(d, 2.0, 1.0);
        let path = sample_path(&cov, 1e-3, 0.0, 0.5, 1).unwrap();
        // a large base state violates the smallness hypothesis
        let u0 = SpectralField::unit_mode(d, 1, 2.0).unwrap();
        let base = integrate(&u0, &path, 0.0, 0.5, cfg).unwrap();
        let params = ConeParams::for_top(0.01, 10.0).unwrap();
        let v0 = SpectralField::unit_mode(d, 1, 1.0).unwrap();
        let cert = certify_cone_growth(&base, &v0, &params, cfg, 1e-6).unwrap();
        match cert.outcome {
            CertificateOutcome::PreconditionFailed { measured_sup } => {
                assert!(measured_sup > 0.01);
                assert_eq!(measured_sup, cert.sup_multiplier_v);
            }
            other => panic!("expected precondition failure, got {other:?}"),
        }
    }

    #[test]
    fn grade_two_linear_certificate() {
        let d = domain(6);
        let alpha = 4.6; // just above lambda_2 = 4
        let cfg = SolverConfig::new(1e-3, alpha);
        let base = zero_base(d, cfg, 1.0);
        let params = ConeParams::admissible(alpha, 2, 0.02, d, 8.0)
            .unwrap()
            .expect("feasible at this gap");
        let frame0 = vec![
            SpectralField::unit_mode(d, 1, 1.0).unwrap(),
            SpectralField::unit_mode(d, 2, 1.0).unwrap(),
        ];
        let cert = certify_cone_growth_k(&base, &frame0, &params, cfg, 1e-6).unwrap();
        assert_eq!(cert.outcome, CertificateOutcome::Valid);

        // Q^{(2)}(t) = δ e^{2 Λ_{i0} t} in the decoupled case
        let lam_i0 = (alpha - 1.0) + (alpha - 4.0);
        for (t, q) in cert.times.iter().zip(&cert.q_values) {
            let expect = params.delta * (2.0 * lam_i0 * t).exp();
            assert_relative_eq!(*q, expect, max_relative = 1e-8);
        }
        assert!(cert.min_residual > 0.0);
        assert!(cert.q_exp_margin >= -1e-9);
    }

    #[test]
    fn cone_invariance_on_a_small_noisy_base() {
        let d = domain(16);
        let alpha = 1.5;
        let cfg = SolverConfig::new(1e-3, alpha);
        let cov = CovarianceSpec::from_scaled_decay(d, 2.0, 0.05);
        let path = sample_path(&cov, 1e-3, 0.0, 1.0, 4).unwrap();
        let u0 = SpectralField::unit_mode(d, 1, 0.05).unwrap();
        let base = integrate(&u0, &path, 0.0, 1.0, cfg).unwrap();

        let sup = sup_multiplier_v_norm(&base, cfg).unwrap();
        let params = ConeParams::for_top(sup * 1.05, 10.0).unwrap();
        let v0 = SpectralField::unit_mode(d, 1, 1.0).unwrap();
        let cert = certify_cone_growth(&base, &v0, &params, cfg, 1e-6).unwrap();
        assert_eq!(cert.outcome, CertificateOutcome::Valid);
        assert!(cert.q_values.iter().all(|q| *q > 0.0), "cone invariance broken");
        assert!(cert.q_exp_margin >= -1e-6 * cert.q_values[0]);
        assert!(cert.min_norm_bound_ratio >= 1.0 - 1e-3);
    }

    #[test]
    fn prefactor_identity_on_tight_cone_vectors() {
        // Q_δ(v) ≥ (δ(M−1)/(M+δ))‖v‖² whenever Q_{δ/M}(v) ≥ 0
        let d = domain(10);
        let delta = 0.4;
        let m = 6.0;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        for _ in 0..200 {
            let head = 1.0 + next().abs();
            let mut coeffs = vec![0.0; 10];
            coeffs[0] = head;
            // tail small enough for the tight cone
            let budget = (delta / m) * head * head;
            let mut used = 0.0;
            for c in coeffs.iter_mut().skip(1) {
                let x = next() * (budget / 9.0).sqrt() * 0.9;
                used += x * x;
                *c = x;
            }
            assert!(used <= budget);
            let v = SpectralField::from_coeffs(d, coeffs).unwrap();
            assert!(q_delta(&v, delta / m) >= 0.0);
            let bound = delta * (m - 1.0) / (m + delta) * v.h_norm().powi(2);
            assert!(q_delta(&v, delta) >= bound - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn upper_coupling_q_at_most_delta_norm(
            coeffs in proptest::collection::vec(-10.0f64..10.0, 6),
            delta in 0.01f64..4.0,
        ) {
            let d = domain(6);
            let v = SpectralField::from_coeffs(d, coeffs).unwrap();
            prop_assert!(q_delta(&v, delta) <= delta * v.h_norm().powi(2) + 1e-12);
        }

        #[test]
        fn wedge_upper_coupling(
            c1 in proptest::collection::vec(-3.0f64..3.0, 5),
            c2 in proptest::collection::vec(-3.0f64..3.0, 5),
            delta in 0.01f64..4.0,
        ) {
            let d = domain(5);
            let v1 = SpectralField::from_coeffs(d, c1).unwrap();
            let v2 = SpectralField::from_coeffs(d, c2).unwrap();
            let b = blade(&[v1, v2]).unwrap();
            let q = q_delta_k(&b, delta, 2).unwrap();
            prop_assert!(q <= delta * b.norm().powi(2) + 1e-12);
        }
    }
}
