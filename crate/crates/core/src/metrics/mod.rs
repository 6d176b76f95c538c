//! Quantitative evaluation: Fréchet gait distance, tracking deviation and
//! heading drift, safety-violation counting, footfall statistics and PCA
//! embedding for mode-coverage plots.

use crate::env::{step, stance_proxy, ActuatorLimits, EnvConfig, StepOutput};
use crate::linalg::{sym_eigen, sym_sqrt, SquareMat};
use crate::motion::{LocomotorState, VelocityCommand};
use crate::scalar::Real;
use crate::JOINT_COUNT;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("feature rows have inconsistent dimensions")]
    RaggedRows,
}

/// Gaussian fit of a feature population. The covariance is symmetrized and
/// its eigenvalues floored at 1e-10, so it is always SPD even on
/// rank-deficient batches.
#[derive(Debug, Clone)]
pub struct GaussianSummary<R> {
    pub mean: Vec<R>,
    pub cov: SquareMat<R>,
}

const EIG_FLOOR: f64 = 1e-10;

impl<R: Real> GaussianSummary<R> {
    pub fn fit(rows: &[Vec<R>]) -> Result<Self, MetricsError> {
        if rows.is_empty() {
            return Err(MetricsError::EmptyPopulation);
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(MetricsError::RaggedRows);
        }
        let n = R::of(rows.len() as f64);
        let mut mean = vec![R::zero(); dim];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += *v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut cov = SquareMat::zeros(dim);
        for row in rows {
            for i in 0..dim {
                let di = row[i] - mean[i];
                for j in i..dim {
                    let dj = row[j] - mean[j];
                    cov.data[i * dim + j] += di * dj;
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let v: R = cov.get(i, j) / n;
                cov.set(i, j, v);
                cov.set(j, i, v);
            }
        }
        // Floor the spectrum.
        let eig = sym_eigen(&cov);
        let floor = R::of(EIG_FLOOR);
        let mut floored = SquareMat::zeros(dim);
        for (k, &lam) in eig.values.iter().enumerate() {
            let l = lam.max(floor);
            for i in 0..dim {
                let vi = eig.vectors.get(i, k) * l;
                for j in 0..dim {
                    floored.data[i * dim + j] += vi * eig.vectors.get(j, k);
                }
            }
        }
        Ok(GaussianSummary { mean, cov: floored.symmetrized() })
    }
}

/// Fréchet distance between Gaussian fits of two populations:
/// `‖μ_a − μ_b‖² + Tr(Σ_a + Σ_b − 2(Σ_a Σ_b)^{1/2})`, the matrix square root
/// evaluated through the symmetrized product `√Σ_a Σ_b √Σ_a`. A negative
/// residue above −1e-8 is clamped to zero.
pub fn fgd<R: Real>(pop_a: &[Vec<R>], pop_b: &[Vec<R>]) -> Result<R, MetricsError> {
    let a = GaussianSummary::fit(pop_a)?;
    let b = GaussianSummary::fit(pop_b)?;
    Ok(frechet_distance(&a, &b))
}

pub fn frechet_distance<R: Real>(a: &GaussianSummary<R>, b: &GaussianSummary<R>) -> R {
    assert_eq!(a.mean.len(), b.mean.len());
    let mean_term: R = a
        .mean
        .iter()
        .zip(&b.mean)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    let sqrt_a = sym_sqrt(&a.cov);
    let inner = sqrt_a.matmul(&b.cov).matmul(&sqrt_a).symmetrized();
    let eig = sym_eigen(&inner);
    let cross: R = eig.values.iter().map(|&l| l.max(R::zero()).sqrt()).sum();
    let total = mean_term + a.cov.trace() + b.cov.trace() - R::of(2.0) * cross;
    if total < R::zero() && total > R::of(-1e-8) {
        R::zero()
    } else {
        total
    }
}

/// Control output of an evaluation agent.
pub enum AgentControl<R> {
    /// Target joint positions driven through the plant.
    JointTargets([R; JOINT_COUNT]),
    /// Body velocities imposed directly, bypassing the plant (test rigs and
    /// the oracle checkpoint stub).
    DirectVelocity(VelocityCommand<R>),
}

/// Anything that can be evaluated for tracking.
pub trait Agent<R> {
    fn act(&mut self, state: &LocomotorState<R>, cmd: &VelocityCommand<R>) -> AgentControl<R>;
}

/// The ideal agent: realizes the commanded velocity exactly.
pub struct OracleAgent;

impl<R: Real> Agent<R> for OracleAgent {
    fn act(&mut self, _state: &LocomotorState<R>, cmd: &VelocityCommand<R>) -> AgentControl<R> {
        AgentControl::DirectVelocity(*cmd)
    }
}

impl<R: Real> Agent<R> for crate::train::PolicyParams<R> {
    fn act(&mut self, state: &LocomotorState<R>, cmd: &VelocityCommand<R>) -> AgentControl<R> {
        let obs = Self::obs(state, cmd);
        AgentControl::JointTargets(self.actor_mean(&obs))
    }
}

/// Outcome of one command profile.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileOutcome {
    Metrics {
        /// Mean perpendicular offset from the commanded straight path (m).
        deviation: f64,
        /// |final − initial| heading (rad).
        heading_drift: f64,
        /// Time to cover the evaluation distance (s).
        elapsed_s: f64,
    },
    /// Divergence or timeout, mirroring the "Fail (OOD)" convention.
    Fail { reason: String },
}

/// Tracking evaluation of one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileReport {
    pub name: String,
    pub command: [f64; 3],
    pub distance: f64,
    pub outcome: ProfileOutcome,
}

/// Per-profile tracking results.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub profiles: Vec<ProfileReport>,
}

/// The four benchmark profiles: forward walk, high-speed run, pure lateral,
/// pure backward, with their evaluation distances.
pub fn standard_profiles<R: Real>() -> Vec<(String, VelocityCommand<R>, f64)> {
    vec![
        ("forward_walk".into(), VelocityCommand::new(R::of(1.0), R::zero(), R::zero()), 40.0),
        ("high_speed_run".into(), VelocityCommand::new(R::of(3.5), R::zero(), R::zero()), 40.0),
        ("pure_lateral".into(), VelocityCommand::new(R::zero(), R::of(1.0), R::zero()), 5.0),
        ("pure_backward".into(), VelocityCommand::new(R::of(-1.0), R::zero(), R::zero()), 5.0),
    ]
}

/// Integrates planar position from body velocities and heading while the
/// agent tracks a constant command, until the along-path progress reaches
/// `distance` or `max_steps` elapse.
pub fn tracking_eval<R: Real>(
    agent: &mut dyn Agent<R>,
    env_cfg: &EnvConfig<R>,
    profile: &VelocityCommand<R>,
    distance: f64,
    max_steps: usize,
) -> ProfileOutcome {
    let dt = env_cfg.dt.to64();
    let mut state = LocomotorState::<R>::zero();
    let mut heading = 0.0f64;
    let heading0 = 0.0f64;
    let (mut x, mut y) = (0.0f64, 0.0f64);
    // Unit vector of the commanded straight path in the world frame (the
    // initial heading frame).
    let cx = profile.vx.to64();
    let cy = profile.vy.to64();
    let norm = (cx * cx + cy * cy).sqrt();
    if norm < 1e-12 {
        return ProfileOutcome::Fail { reason: "degenerate profile".into() };
    }
    let (ux, uy) = (cx / norm, cy / norm);

    let mut perp_acc = 0.0f64;
    let mut steps = 0usize;
    loop {
        if steps >= max_steps {
            return ProfileOutcome::Fail { reason: "timeout".into() };
        }
        let control = agent.act(&state, profile);
        state = match control {
            AgentControl::JointTargets(a) => {
                let out = step(&state, &a, profile, env_cfg);
                if out.failed || !out.next.is_finite() {
                    return ProfileOutcome::Fail { reason: "non-finite state".into() };
                }
                out.next
            }
            AgentControl::DirectVelocity(v) => {
                let mut s = state;
                s.vx = v.vx;
                s.vy = v.vy;
                s.wz = v.wz;
                s
            }
        };
        heading += state.wz.to64() * dt;
        let (sin, cos) = heading.sin_cos();
        let wvx = cos * state.vx.to64() - sin * state.vy.to64();
        let wvy = sin * state.vx.to64() + cos * state.vy.to64();
        x += wvx * dt;
        y += wvy * dt;
        steps += 1;
        let progress = x * ux + y * uy;
        perp_acc += (x * uy - y * ux).abs();
        if progress >= distance {
            return ProfileOutcome::Metrics {
                deviation: perp_acc / steps as f64,
                heading_drift: (heading - heading0).abs(),
                elapsed_s: steps as f64 * dt,
            };
        }
    }
}

/// Runs all four standard profiles.
pub fn tracking_report<R: Real>(
    agent: &mut dyn Agent<R>,
    env_cfg: &EnvConfig<R>,
    max_steps_per_profile: usize,
) -> TrackingReport {
    let profiles = standard_profiles::<R>();
    let mut out = Vec::new();
    for (name, cmd, distance) in profiles {
        let outcome = tracking_eval(agent, env_cfg, &cmd, distance, max_steps_per_profile);
        out.push(ProfileReport {
            name,
            command: [cmd.vx.to64(), cmd.vy.to64(), cmd.wz.to64()],
            distance,
            outcome,
        });
    }
    TrackingReport { profiles: out }
}

/// Counts steps where any joint exceeds its limit, per constraint channel
/// `(position, velocity, torque)`. Torque counting uses pre-clip torques.
pub fn count_safety_violations<R: Real>(
    steps: &[StepOutput<R>],
    limits: &ActuatorLimits<R>,
) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for out in steps {
        let pos = (0..JOINT_COUNT).any(|j| out.next.q[j].abs() > limits.q_lim[j]);
        let vel = (0..JOINT_COUNT).any(|j| out.next.dq[j].abs() > limits.dq_lim[j]);
        let tau = (0..JOINT_COUNT).any(|j| out.torques_raw[j].abs() > limits.tau_lim[j]);
        counts[0] += pos as usize;
        counts[1] += vel as usize;
        counts[2] += tau as usize;
    }
    counts
}

/// Per-leg stance intervals plus the instantaneous support count series.
#[derive(Debug, Clone, PartialEq)]
pub struct FootfallStats {
    /// Closed step-index intervals `[start, end]` per leg (FL FR RL RR).
    pub intervals: [Vec<(usize, usize)>; 4],
    pub support: Vec<usize>,
}

pub fn footfall_stats<R: Real>(states: &[LocomotorState<R>]) -> FootfallStats {
    let mut intervals: [Vec<(usize, usize)>; 4] = Default::default();
    let mut open: [Option<usize>; 4] = [None; 4];
    let mut support = Vec::with_capacity(states.len());
    for (t, s) in states.iter().enumerate() {
        let st = stance_proxy(s);
        support.push(st.iter().filter(|&&b| b).count());
        for leg in 0..4 {
            match (st[leg], open[leg]) {
                (true, None) => open[leg] = Some(t),
                (false, Some(start)) => {
                    intervals[leg].push((start, t - 1));
                    open[leg] = None;
                }
                _ => {}
            }
        }
    }
    for leg in 0..4 {
        if let Some(start) = open[leg] {
            intervals[leg].push((start, states.len() - 1));
        }
    }
    FootfallStats { intervals, support }
}

/// PCA projection outcome.
#[derive(Debug, Clone)]
pub struct PcaResult<R> {
    pub projected: Vec<Vec<R>>,
    /// Fraction of total variance captured by each kept component.
    pub explained: Vec<R>,
    /// Set when the data rank was below the requested dimension count.
    pub degenerate: bool,
}

/// Centered PCA with a deterministic sign convention: the largest-magnitude
/// loading of every component is made positive. Rank-deficient inputs pad the
/// missing components with zeros and set the flag.
pub fn pca_embed<R: Real>(rows: &[Vec<R>], dims: usize) -> Result<PcaResult<R>, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyPopulation);
    }
    if rows.len() < dims {
        return Err(MetricsError::TooFewRows { need: dims, got: rows.len() });
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(MetricsError::RaggedRows);
    }
    let n = R::of(rows.len() as f64);
    let mut mean = vec![R::zero(); dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += *v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = SquareMat::zeros(dim);
    for row in rows {
        for i in 0..dim {
            let di = row[i] - mean[i];
            for j in i..dim {
                cov.data[i * dim + j] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v: R = cov.get(i, j) / n;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    let eig = sym_eigen(&cov);
    let total: R = eig.values.iter().map(|&l| l.max(R::zero())).sum();
    let rank_tol = R::of(1e-12) * eig.values.first().copied().unwrap_or(R::zero()).max(R::of(1e-300));
    let mut components: Vec<Vec<R>> = Vec::with_capacity(dims);
    let mut explained = Vec::with_capacity(dims);
    let mut degenerate = false;
    for k in 0..dims {
        let lam = if k < eig.values.len() { eig.values[k] } else { R::zero() };
        if lam <= rank_tol {
            degenerate = true;
            components.push(vec![R::zero(); dim]);
            explained.push(R::zero());
            continue;
        }
        let mut comp: Vec<R> = (0..dim).map(|i| eig.vectors.get(i, k)).collect();
        // Sign convention: largest-magnitude loading positive.
        let mut best = 0usize;
        for (i, c) in comp.iter().enumerate() {
            if c.abs() > comp[best].abs() {
                best = i;
            }
        }
        if comp[best] < R::zero() {
            for c in &mut comp {
                *c = -*c;
            }
        }
        components.push(comp);
        explained.push(if total > R::zero() { lam / total } else { R::zero() });
    }
    let projected: Vec<Vec<R>> = rows
        .iter()
        .map(|row| {
            components
                .iter()
                .map(|comp| {
                    row.iter()
                        .zip(&mean)
                        .zip(comp)
                        .map(|((&v, &m), &c)| (v - m) * c)
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(PcaResult { projected, explained, degenerate })
}
