//! Time integration of the stochastic Chafee-Infante equation, the
//! OU-subtracted random PDE, and the first-variation equation.
//!
//! The default scheme is the exponential Euler method: with a = α − λ_k the
//! linear part is propagated exactly over each step and the nonlinearity
//! enters through φ₁(a·dt) = (e^{a·dt} − 1)/(a·dt),
//!
//! ```text
//!     u_k ← e^{a dt} u_k + dt φ₁(a dt) N_k(u) + e^{a dt} ΔW_k ,
//! ```
//!
//! so the scheme is exact for the linear equation whatever the step size. A
//! semi-implicit Euler variant is provided for cross-checks:
//! `(1 + dt (λ_k − α)) u_k' = u_k + dt N_k(u) + ΔW_k`.
//!
//! The schemes consume only path increments, never absolute path values, so
//! the discrete cocycle identity
//! `integrate(u0, ω, 0, s+t) = integrate(integrate(u0, ω, 0, s), θ^s ω, 0, t)`
//! holds bit-exactly.
//!
//! With a cutoff radius R the cubic is replaced by the globally Lipschitz
//! truncation F(u) = −θ(‖u‖_V / R) u³, where θ is a C¹ ramp equal to 1
//! below 1 and 0 above 2 (cubic Hermite in between). Taking R → 0 disables
//! the nonlinearity entirely, which is the exact-semigroup test case.
//!
//! The variational stepper freezes the base state at the left endpoint of
//! each step and applies the multiplier B = −3·Π_N(u_base²)·(·) through the
//! same dealiased collocation product; it is exactly the Fréchet derivative
//! of the discrete cutoff-free flow map, which makes finite-difference
//! consistency checks clean.

use crate::error::{Error, Result};
use crate::noise::{NoisePath, OuState};
use crate::spectral::{DomainSpec, SineTransform, SpectralField};

/// Norm threshold treated as blow-up of the discrete flow.
pub const BLOWUP_NORM: f64 = 1e6;

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    ExponentialEuler,
    SemiImplicitEuler,
}

/// Integrator configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    /// Bifurcation parameter α.
    pub alpha: f64,
    pub scheme: Scheme,
    /// V-ball radius of the truncated nonlinearity; `None` keeps the raw
    /// cubic.
    pub cutoff_radius: Option<f64>,
}

impl SolverConfig {
    pub fn new(dt: f64, alpha: f64) -> Self {
        Self {
            dt,
            alpha,
            scheme: Scheme::ExponentialEuler,
            cutoff_radius: None,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_cutoff(mut self, radius: f64) -> Self {
        self.cutoff_radius = Some(radius);
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        if let Some(r) = self.cutoff_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "cutoff radius must be positive, got {r}"
                )));
            }
        }
        Ok(())
    }
}

/// C¹ cutoff ramp: 1 on [0, 1], 0 on [2, ∞), cubic Hermite between.
pub fn cutoff_ramp(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let s = r - 1.0;
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

/// φ₁(z) = (e^z − 1)/z with the removable singularity filled by its series.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

/// One trajectory on a uniform grid.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    times: Vec<f64>,
    states: Vec<SpectralField>,
    v_norms: Vec<f64>,
}

impl TrajectoryRecord {
    /// Assemble a record from states on a uniform grid starting at `t0`.
    pub fn from_states(t0: f64, dt: f64, states: Vec<SpectralField>) -> Self {
        let times = (0..states.len()).map(|j| t0 + j as f64 * dt).collect();
        let v_norms = states.iter().map(|s| s.v_norm()).collect();
        Self {
            times,
            states,
            v_norms,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralField] {
        &self.states
    }

    pub fn v_norms(&self) -> &[f64] {
        &self.v_norms
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("record never empty")
    }

    pub fn state(&self, i: usize) -> &SpectralField {
        &self.states[i]
    }

    /// CSV dump with rows `time,mode,coefficient`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,mode,coefficient")?;
        for (t, u) in self.times.iter().zip(&self.states) {
            for (m, c) in u.coeffs().iter().enumerate() {
                writeln!(w, "{:.9},{},{:.17e}", t, m + 1, c)?;
            }
        }
        Ok(())
    }

    /// Compact binary dump: modes, snapshots, dt, t0, then state-major
    /// little-endian f64 coefficients.
    pub fn write_binary<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.coeffs().len());
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&(self.states.len() as u64).to_le_bytes())?;
        let dt = if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        };
        w.write_all(&dt.to_le_bytes())?;
        w.write_all(&self.times.first().copied().unwrap_or(0.0).to_le_bytes())?;
        for s in &self.states {
            for c in s.coeffs() {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Grid values of the frozen variational multiplier b = 3·Π_N(u_base²),
/// reusable across the tangent vectors of one step.
pub struct FrozenMultiplier {
    grid: Vec<f64>,
    /// ‖b‖_V of the truncated multiplier field.
    pub v_norm: f64,
}

/// Reusable stepper for one (domain, config) pair.
pub struct Stepper {
    domain: DomainSpec,
    cfg: SolverConfig,
    engine: SineTransform,
    /// e^{(α−λ_k) dt}
    decay: Vec<f64>,
    /// dt·φ₁((α−λ_k) dt)
    phi1dt: Vec<f64>,
    /// 1/(1 + dt(λ_k − α)) for the semi-implicit scheme
    semi: Vec<f64>,
}

impl Stepper {
    pub fn new(domain: DomainSpec, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let lams = domain.eigenvalues();
        if cfg.scheme == Scheme::SemiImplicitEuler {
            // the resolvent factor must stay positive
            if lams
                .iter()
                .any(|lam| 1.0 + cfg.dt * (lam - cfg.alpha) <= 0.0)
            {
                return Err(Error::InvalidParameter(
                    "semi-implicit factor 1 + dt(lambda_k - alpha) must be positive".into(),
                ));
            }
        }
        let decay = lams
            .iter()
            .map(|lam| ((cfg.alpha - lam) * cfg.dt).exp())
            .collect();
        let phi1dt = lams
            .iter()
            .map(|lam| cfg.dt * phi1((cfg.alpha - lam) * cfg.dt))
            .collect();
        let semi = lams
            .iter()
            .map(|lam| 1.0 / (1.0 + cfg.dt * (lam - cfg.alpha)))
            .collect();
        Ok(Self {
            domain,
            cfg,
            engine: SineTransform::new(domain),
            decay,
            phi1dt,
            semi,
        })
    }

    pub fn config(&self) -> SolverConfig {
        self.cfg
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn engine(&mut self) -> &mut SineTransform {
        &mut self.engine
    }

    /// N(u) = −u³ (or its cutoff truncation).
    pub fn nonlinearity(&mut self, u: &SpectralField) -> SpectralField {
        let cube = self.engine.cubic(u);
        let scale = match self.cfg.cutoff_radius {
            None => -1.0,
            Some(r) => -cutoff_ramp(u.v_norm() / r),
        };
        cube.scale(scale)
    }

    fn advance(&self, u: &SpectralField, n: &SpectralField, dw: Option<&[f64]>) -> SpectralField {
        let mut out = u.clone();
        let coeffs = out.coeffs_mut();
        match self.cfg.scheme {
            Scheme::ExponentialEuler => {
                for k in 0..coeffs.len() {
                    let noise = dw.map_or(0.0, |d| self.decay[k] * d[k]);
                    coeffs[k] = self.decay[k] * coeffs[k] + self.phi1dt[k] * n.coeffs()[k] + noise;
                }
            }
            Scheme::SemiImplicitEuler => {
                for k in 0..coeffs.len() {
                    let noise = dw.map_or(0.0, |d| d[k]);
                    coeffs[k] =
                        (coeffs[k] + self.cfg.dt * n.coeffs()[k] + noise) * self.semi[k];
                }
            }
        }
        out
    }

    fn check(&self, u: SpectralField, time: f64) -> Result<SpectralField> {
        let norm = u.h_norm();
        if !norm.is_finite() || norm > BLOWUP_NORM {
            return Err(Error::BlowUp { time, norm });
        }
        Ok(u)
    }

    /// One step of the full SPDE driven by the per-mode increments `dw`.
    pub fn step_spde(&mut self, u: &SpectralField, dw: &[f64]) -> Result<SpectralField> {
        let n = self.nonlinearity(u);
        let out = self.advance(u, &n, Some(dw));
        self.check(out, self.cfg.dt)
    }

    /// One deterministic step of the random PDE dũ = (Δ+α)ũ + f(ũ+z).
    pub fn step_random_pde(&mut self, u_tilde: &SpectralField, z: &OuState) -> Result<SpectralField> {
        let w = u_tilde + &z.z;
        let n = self.nonlinearity(&w);
        let out = self.advance(u_tilde, &n, None);
        self.check(out, self.cfg.dt)
    }

    /// Freeze the variational multiplier at a base state.
    pub fn multiplier(&mut self, u_base: &SpectralField) -> FrozenMultiplier {
        let b = self.engine.square(u_base).scale(3.0);
        let v_norm = b.v_norm();
        FrozenMultiplier {
            grid: self.engine.to_grid(&b),
            v_norm,
        }
    }

    /// One step of the variational equation against a frozen multiplier.
    pub fn step_variational_frozen(
        &mut self,
        v: &SpectralField,
        m: &FrozenMultiplier,
    ) -> Result<SpectralField> {
        let mut gv = self.engine.to_grid(v);
        for (g, b) in gv.iter_mut().zip(&m.grid) {
            *g *= -b;
        }
        let bv = self.engine.from_grid(&gv);
        let out = self.advance(v, &bv, None);
        self.check(out, self.cfg.dt)
    }

    /// One step of the variational equation along `u_base`.
    pub fn step_variational(
        &mut self,
        v: &SpectralField,
        u_base: &SpectralField,
    ) -> Result<SpectralField> {
        let m = self.multiplier(u_base);
        self.step_variational_frozen(v, &m)
    }

    fn grid_range(&self, path: &NoisePath, t0: f64, t1: f64) -> Result<(i64, usize)> {
        if t1 < t0 {
            return Err(Error::InvalidParameter("t1 must be >= t0".into()));
        }
        if (self.cfg.dt - path.dt()).abs() > 1e-12 * self.cfg.dt {
            return Err(Error::InvalidParameter(format!(
                "solver dt {} does not match path dt {}",
                self.cfg.dt,
                path.dt()
            )));
        }
        if !path.covers(t0, t1) {
            return Err(Error::WindowExceeded {
                lo: t0,
                hi: t1,
                have_lo: path.t_min(),
                have_hi: path.t_max(),
            });
        }
        let start = (t0 / self.cfg.dt).round() as i64;
        let steps = ((t1 - t0) / self.cfg.dt).round() as usize;
        Ok((start, steps))
    }

    /// Integrate the SPDE over [t0, t1], recording every state.
    pub fn integrate(
        &mut self,
        u0: &SpectralField,
        path: &NoisePath,
        t0: f64,
        t1: f64,
    ) -> Result<TrajectoryRecord> {
        let (start, steps) = self.grid_range(path, t0, t1)?;
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity(steps + 1);
        let mut v_norms = Vec::with_capacity(steps + 1);
        let mut u = u0.clone();
        times.push(t0);
        v_norms.push(u.v_norm());
        states.push(u.clone());
        for j in 0..steps {
            let dw = path.increments_at(start + j as i64)?;
            u = self.step_spde(&u, dw).map_err(|e| match e {
                Error::BlowUp { norm, .. } => Error::BlowUp {
                    time: t0 + (j + 1) as f64 * self.cfg.dt,
                    norm,
                },
                other => other,
            })?;
            times.push(t0 + (j + 1) as f64 * self.cfg.dt);
            v_norms.push(u.v_norm());
            states.push(u.clone());
        }
        Ok(TrajectoryRecord {
            times,
            states,
            v_norms,
        })
    }

    /// Integrate and keep only the final state.
    pub fn integrate_final(
        &mut self,
        u0: &SpectralField,
        path: &NoisePath,
        t0: f64,
        t1: f64,
    ) -> Result<SpectralField> {
        let (start, steps) = self.grid_range(path, t0, t1)?;
        let mut u = u0.clone();
        for j in 0..steps {
            let dw = path.increments_at(start + j as i64)?;
            u = self.step_spde(&u, dw).map_err(|e| match e {
                Error::BlowUp { norm, .. } => Error::BlowUp {
                    time: t0 + (j + 1) as f64 * self.cfg.dt,
                    norm,
                },
                other => other,
            })?;
        }
        Ok(u)
    }
}

/// One SPDE step with a throwaway engine (convenience wrapper).
pub fn step_spde(u: &SpectralField, dw: &[f64], cfg: SolverConfig) -> Result<SpectralField> {
    Stepper::new(u.domain(), cfg)?.step_spde(u, dw)
}

/// One random-PDE step with a throwaway engine.
pub fn step_random_pde(
    u_tilde: &SpectralField,
    z: &OuState,
    cfg: SolverConfig,
) -> Result<SpectralField> {
    Stepper::new(u_tilde.domain(), cfg)?.step_random_pde(u_tilde, z)
}

/// One variational step with a throwaway engine.
pub fn step_variational(
    v: &SpectralField,
    u_base: &SpectralField,
    cfg: SolverConfig,
) -> Result<SpectralField> {
    Stepper::new(v.domain(), cfg)?.step_variational(v, u_base)
}

/// Integrate over [t0, t1] with a throwaway engine.
pub fn integrate(
    u0: &SpectralField,
    path: &NoisePath,
    t0: f64,
    t1: f64,
    cfg: SolverConfig,
) -> Result<TrajectoryRecord> {
    Stepper::new(u0.domain(), cfg)?.integrate(u0, path, t0, t1)
}

/// Sampled estimate of the V→H Lipschitz constant of the truncated
/// nonlinearity F(u) = −θ(‖u‖_V/R) u³ over the V-ball of radius 2R:
/// the supremum of ‖F(u)−F(v)‖_H / ‖u−v‖_V over random pairs, including
/// nearby pairs probing the derivative.
pub fn estimate_cutoff_lipschitz(
    domain: DomainSpec,
    cutoff_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    if !(cutoff_radius > 0.0) {
        return Err(Error::InvalidParameter(
            "cutoff radius must be positive".into(),
        ));
    }
    let mut engine = SineTransform::new(domain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = domain.modes();
    let mut normal = |rng: &mut ChaCha8Rng| {
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut draw = |rng: &mut ChaCha8Rng, scale: f64| -> SpectralField {
        // decaying random coefficients, then scale into the 2R ball
        let coeffs: Vec<f64> = (0..n)
            .map(|i| normal(rng) / (1.0 + i as f64))
            .collect();
        let f = SpectralField::from_coeffs(domain, coeffs).expect("length matches");
        let vn = f.v_norm();
        if vn == 0.0 {
            f
        } else {
            let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
            f.scale(scale * u1 / vn)
        }
    };
    let truncated = |engine: &mut SineTransform, u: &SpectralField| -> SpectralField {
        engine
            .cubic(u)
            .scale(-cutoff_ramp(u.v_norm() / cutoff_radius))
    };
    let mut best = 0.0f64;
    for _ in 0..samples {
        let u = draw(&mut rng, 2.0 * cutoff_radius);
        let v = draw(&mut rng, 2.0 * cutoff_radius);
        let denom = (&u - &v).v_norm();
        if denom > 1e-12 {
            let num = (&truncated(&mut engine, &u) - &truncated(&mut engine, &v)).h_norm();
            best = best.max(num / denom);
        }
        // nearby pair along a random direction
        let dir = draw(&mut rng, 1.0);
        let mut w = u.clone();
        w.add_scaled(&dir, 1e-4);
        let denom = (&u - &w).v_norm();
        if denom > 1e-12 {
            let num = (&truncated(&mut engine, &u) - &truncated(&mut engine, &w)).h_norm();
            best = best.max(num / denom);
        }
    }
    Ok(best)
}
