//! Time-incremental minimization schemes and τ-refinement studies.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::jump::JumpSearchConfig;
use crate::problem::{in_box, Correction, Metric, RisProblem, State};
use crate::reduced::{global_min_corrected, MinimizerConfig};
use crate::trajectory::{interpolate_with, DiscreteTrajectory, JumpDetection};
use crate::verify::balance;

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    /// `δ ≡ 0`.
    Energetic,
    /// `δ = (ε/2τ)|z' − z|²`; approximates balanced-viscosity behavior for `ε/τ ≫ 1`.
    BalancedViscosity { epsilon: f64 },
    /// `δ` given by the correction.
    ViscoEnergetic { correction: Correction },
}

impl SchemeKind {
    /// Correction used by the incremental problem at step size `tau`.
    pub fn correction(&self, tau: f64) -> Correction {
        match self {
            SchemeKind::Energetic => Correction::Zero,
            SchemeKind::BalancedViscosity { epsilon } => {
                Correction::Quadratic { mu: epsilon / tau, metric: Metric::Euclidean }
            }
            SchemeKind::ViscoEnergetic { correction } => correction.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Energetic => "e",
            SchemeKind::BalancedViscosity { .. } => "bv",
            SchemeKind::ViscoEnergetic { .. } => "ve",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    /// Requested step; the grid uses `T/⌈T/τ⌉`.
    pub tau: f64,
    pub minimizer: MinimizerConfig,
    pub initial_z: Vec<f64>,
    /// Overrides the problem's horizon.
    pub horizon: Option<f64>,
}

impl SchemeConfig {
    pub fn new(scheme: SchemeKind, tau: f64, initial_z: Vec<f64>) -> Self {
        SchemeConfig { scheme, tau, minimizer: MinimizerConfig::default(), initial_z, horizon: None }
    }

    pub fn with_minimizer(mut self, m: MinimizerConfig) -> Self {
        self.minimizer = m;
        self
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        SchemeConfig { tau, ..self.clone() }
    }
}

fn validate<P: RisProblem + ?Sized>(p: &P, cfg: &SchemeConfig, horizon: f64) -> Result<()> {
    if !(cfg.tau > 0.0 && cfg.tau.is_finite()) {
        return Err(Error::InvalidConfig(format!("tau = {} must be > 0", cfg.tau)));
    }
    if !(horizon > 0.0) || cfg.tau > horizon * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!("tau = {} must not exceed T = {horizon}", cfg.tau)));
    }
    cfg.minimizer.validate()?;
    match &cfg.scheme {
        SchemeKind::BalancedViscosity { epsilon } if !(*epsilon > 0.0) => {
            return Err(Error::InvalidConfig("bv: epsilon must be > 0".into()))
        }
        SchemeKind::ViscoEnergetic { correction } => correction.validate()?,
        _ => {}
    }
    check_dim(p.n_z(), cfg.initial_z.len())?;
    if !in_box(p.z_box(), &cfg.initial_z) {
        return Err(Error::InvalidConfig("initial_z lies outside z_box".into()));
    }
    Ok(())
}

/// Number of steps and the uniform grid for `τ` on `[0, T]`.
pub fn time_grid(tau: f64, horizon: f64) -> Vec<f64> {
    let n = libm::ceil(horizon / tau - 1e-9).max(1.0) as usize;
    (0..=n).map(|k| if k == n { horizon } else { horizon * k as f64 / n as f64 }).collect()
}

/// Runs the incremental scheme `z^n ∈ Argmin I(t^n, ·) + d(z^{n−1}, ·) + δ(z^{n−1}, ·)`.
pub fn solve_incremental<P: RisProblem + ?Sized>(p: &P, cfg: &SchemeConfig) -> Result<DiscreteTrajectory> {
    let horizon = cfg.horizon.unwrap_or_else(|| p.horizon());
    validate(p, cfg, horizon)?;
    let times = time_grid(cfg.tau, horizon);
    let n = times.len() - 1;
    let tau = horizon / n as f64;
    let corr = cfg.scheme.correction(tau);
    let mut warnings = Vec::new();
    if let SchemeKind::BalancedViscosity { epsilon } = cfg.scheme {
        if epsilon / tau < 10.0 {
            let msg = format!("bv: epsilon/tau = {} < 10, far from the vanishing-viscosity regime", epsilon / tau);
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let mut u0 = vec![0.0; p.n_u()];
    let e0 = p.reduce(0.0, &cfg.initial_z, &mut u0);
    let e0 = e0.finite().ok_or_else(|| Error::InvalidConfig("initial state has infinite energy".into()))?;
    let mut states = Vec::with_capacity(n + 1);
    states.push(State::new(u0, cfg.initial_z.clone()));
    let mut step_value = vec![e0];
    let mut step_dissipation = vec![0.0];
    let mut step_correction = vec![0.0];
    let mut certified = true;

    for k in 1..=n {
        let t = times[k];
        let prev = &states[k - 1].z;
        let r = global_min_corrected(p, t, prev, &corr, &cfg.minimizer)?;
        let d = p.dissipation(prev, &r.z).to_f64();
        let c = corr.eval(p, prev, &r.z).to_f64();
        certified &= r.certified_global;
        step_value.push(r.value);
        step_dissipation.push(d);
        step_correction.push(c);
        states.push(State::new(r.u, r.z));
    }
    Ok(DiscreteTrajectory {
        times,
        states,
        step_value,
        step_dissipation,
        step_correction,
        correction: corr,
        tau,
        certified,
        warnings,
    })
}

/// Settings of a τ-refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Uniform probe times on `[0, T]`.
    pub probes: usize,
    pub jump_detection: JumpDetection,
    pub jump_search: JumpSearchConfig,
    /// Evaluate the energy-balance residual per run.
    pub with_balance: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            probes: 512,
            jump_detection: JumpDetection::default(),
            jump_search: JumpSearchConfig::default(),
            with_balance: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub taus: Vec<f64>,
    /// `sup_t |Z_{τ_k}(t) − Z_{τ_{k+1}}(t)|` over the probe grid.
    pub sup_diffs: Vec<f64>,
    /// Interpolant jump points per run.
    pub jump_times: Vec<Vec<f64>>,
    /// Normalized energy-balance residual per run (NaN when not evaluated).
    pub balance_residuals: Vec<f64>,
    pub final_states: Vec<Vec<f64>>,
    /// Sup-differences are nonincreasing.
    pub sup_cauchy: bool,
    /// Same jump count in every run and each jump time spread ≤ 2·max τ.
    pub jump_cauchy: bool,
    /// Neither criterion holds; the runs may approach different limits.
    pub non_cauchy: bool,
}

/// Sup-distance of two interpolants on `probes` uniform times.
pub fn sup_distance(a: &crate::trajectory::Trajectory, b: &crate::trajectory::Trajectory, probes: usize) -> f64 {
    let horizon = a.horizon().min(b.horizon());
    let mut worst = 0.0f64;
    for k in 0..probes.max(2) {
        let t = horizon * k as f64 / (probes.max(2) - 1) as f64;
        let (za, zb) = (a.z_at(t), b.z_at(t));
        let d = za.iter().zip(zb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
    }
    worst
}

/// Convergence report over `runs`, already solved for decreasing `taus`.
pub fn convergence_report<P: RisProblem + ?Sized>(
    p: &P,
    taus: &[f64],
    runs: &[DiscreteTrajectory],
    study: &StudyConfig,
) -> Result<ConvergenceReport> {
    let interps: Vec<_> = runs.iter().map(|r| interpolate_with(r, &study.jump_detection)).collect();
    let sup_diffs: Vec<f64> = interps.windows(2).map(|w| sup_distance(&w[0], &w[1], study.probes)).collect();
    let jump_times: Vec<Vec<f64>> = interps.iter().map(|tr| tr.jumps.iter().map(|j| j.t).collect()).collect();
    let mut balance_residuals = Vec::with_capacity(runs.len());
    for r in runs {
        if study.with_balance {
            let b = balance(p, r, &r.correction, &study.jump_search, &study.jump_detection)?;
            balance_residuals.push(b.normalized);
        } else {
            balance_residuals.push(f64::NAN);
        }
    }
    let max_tau = taus.iter().cloned().fold(0.0, f64::max);
    let sup_cauchy = sup_diffs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    let count = jump_times.first().map_or(0, |j| j.len());
    let jump_cauchy = jump_times.iter().all(|j| j.len() == count)
        && (0..count).all(|k| {
            let (lo, hi) = jump_times.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| (lo.min(j[k]), hi.max(j[k])));
            hi - lo <= 2.0 * max_tau
        });
    Ok(ConvergenceReport {
        taus: taus.to_vec(),
        sup_diffs,
        jump_times,
        balance_residuals,
        final_states: runs.iter().map(|r| r.states.last().map(|s| s.z.clone()).unwrap_or_default()).collect(),
        sup_cauchy,
        jump_cauchy,
        non_cauchy: !(sup_cauchy || jump_cauchy),
    })
}

/// Solves for each `τ` in `tau_list` (sequentially) and reports convergence.
pub fn refine_study<P: RisProblem + ?Sized>(
    p: &P,
    cfg: &SchemeConfig,
    tau_list: &[f64],
    study: &StudyConfig,
) -> Result<ConvergenceReport> {
    if tau_list.len() < 3 {
        return Err(Error::InvalidConfig("refine_study needs at least three step sizes".into()));
    }
    if tau_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig("tau_list must be decreasing".into()));
    }
    let runs = tau_list
        .iter()
        .map(|&tau| solve_incremental(p, &cfg.with_tau(tau)))
        .collect::<Result<Vec<_>>>()?;
    convergence_report(p, tau_list, &runs, study)
}
