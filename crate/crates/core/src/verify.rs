//! Certificates for discrete trajectories: minimality, stability, energy balance
//! and jump conditions; VE/E coincidence; plasticity stress admissibility;
//! the adhesive-to-brittle limit study.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jump::{incremental_cost, jump_cost, JumpSearchConfig};
use crate::models::{Delamination0d, Delamination0dSpec, Interface, Plasticity0d};
use crate::problem::{Correction, RisProblem};
use crate::reduced::{dist2, MinimizerConfig};
use crate::scheme::{solve_incremental, SchemeConfig};
use crate::stability::residual_stability;
use crate::trajectory::{
    detect_transitions, interpolate_steps, interpolate_with, node_residuals, transition_steps, DiscreteTrajectory, JumpDetection, Trajectory};

/// Verification tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct TolConfig {
    /// Relative tolerance on `E − I` at the nodes.
    pub minimality: f64,
    /// Absolute part of the stability tolerance.
    pub stability: f64,
    /// Stability tolerance grows by `stability_tau2 · τ²`: the discrete
    /// defect of a viscously corrected step is quadratic in the step size.
    pub stability_tau2: f64,
    /// Normalized balance residual.
    pub balance: f64,
    /// Absolute jump-condition tolerance.
    pub jump: f64,
    /// A jump passes when `|drop − c| ≤ max(jump, jump_gap_factor · Δ_c)`.
    pub jump_gap_factor: f64,
    /// Uniform probe times in addition to the nodes.
    pub probes: usize,
    pub jump_detection: JumpDetection,
    pub jump_search: JumpSearchConfig,
    pub minimizer: MinimizerConfig,
}

impl Default for TolConfig {
    fn default() -> Self {
        TolConfig {
            minimality: 1e-8,
            stability: 1e-6,
            stability_tau2: 250.0,
            balance: 5e-2,
            jump: 1e-3,
            jump_gap_factor: 10.0,
            probes: 512,
            jump_detection: JumpDetection::default(),
            jump_search: JumpSearchConfig::default(),
            minimizer: MinimizerConfig::default(),
        }
    }
}

impl TolConfig {
    pub fn stability_tol(&self, tau: f64) -> f64 {
        self.stability + self.stability_tau2 * tau * tau
    }
}

/// Energy-balance bookkeeping of a discrete trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    /// `E(T) + Var − E(0) − ∫ power`.
    pub residual: f64,
    /// `|residual| / max(1, max_n |E(t^n)|)`.
    pub normalized: f64,
    pub var_d: f64,
    /// Sum of `Δ_c` over detected jumps (zero for the plain balance).
    pub jump_excess: f64,
    pub power_integral: f64,
    pub e0: f64,
    pub e_t: f64,
}

/// Energy balance with midpoint power quadrature.
///
/// A zero correction gives the plain `d`-variation; otherwise `Δ_c` is added
/// at every detected jump.
pub fn balance<P: RisProblem + ?Sized>(
    p: &P,
    traj: &DiscreteTrajectory,
    corr: &Correction,
    jump_cfg: &JumpSearchConfig,
    jd: &JumpDetection,
) -> Result<BalanceReport> {
    if corr.is_zero() {
        return balance_steps(p, traj, corr, jump_cfg, &[]);
    }
    let steps = detect_transitions(p, traj, jd, corr, &jump_cfg.minimizer)?;
    balance_steps(p, traj, corr, jump_cfg, &steps)
}

fn balance_steps<P: RisProblem + ?Sized>(
    p: &P,
    traj: &DiscreteTrajectory,
    corr: &Correction,
    jump_cfg: &JumpSearchConfig,
    jump_steps: &[usize],
) -> Result<BalanceReport> {
    let n = traj.len();
    if n == 0 {
        return Err(Error::InvalidConfig("empty trajectory".into()));
    }
    let energies: Vec<f64> =
        (0..n).map(|k| p.energy(traj.times[k], &traj.states[k].u, &traj.states[k].z).to_f64()).collect();
    let mut power_integral = 0.0;
    let mut u = vec![0.0; p.n_u()];
    for k in 1..n {
        let (a, b) = (traj.times[k - 1], traj.times[k]);
        let mid = 0.5 * (a + b);
        let z = &traj.states[k].z;
        if p.reduce(mid, z, &mut u).is_infinite() {
            return Err(Error::PowerUndefined { t: mid });
        }
        power_integral += (b - a) * p.power(mid, &u, z);
    }
    let var_d: f64 = traj.step_dissipation.iter().sum();
    let mut jump_excess = 0.0;
    if !corr.is_zero() {
        for &k in jump_steps {
            jump_excess +=
                incremental_cost(p, traj.times[k], &traj.states[k - 1].z, &traj.states[k].z, corr, jump_cfg)?;
        }
    }
    let (e0, e_t) = (energies[0], energies[n - 1]);
    let residual = e_t + var_d + jump_excess - e0 - power_integral;
    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    Ok(BalanceReport { residual, normalized: residual.abs() / scale, var_d, jump_excess, power_integral, e0, e_t })
}

/// Jump-condition check at one detected jump.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpResidual {
    pub t: f64,
    pub solve_time: f64,
    /// `I(t, z₋) − I(t, z₊)`.
    pub energy_drop: f64,
    /// Jump cost upper bound (`d` for the energetic check).
    pub cost: f64,
    pub lower: f64,
    pub gap: f64,
    /// `|energy_drop − cost|`.
    pub residual: f64,
    /// A finer chain search was run after a first failure.
    pub refined: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub minimality: bool,
    pub stability: bool,
    pub balance: bool,
    pub jumps: bool,
}

impl Verdict {
    pub fn pass(&self) -> bool {
        self.minimality && self.stability && self.balance && self.jumps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// `max_n |E(t^n, u^n, z^n) − I(t^n, z^n)|`.
    pub minimality_residual: f64,
    /// `max R(t, z(t))` over non-excluded probes.
    pub stability_residual: f64,
    pub stability_worst_t: f64,
    pub stability_tol: f64,
    /// Probes skipped as interior points of a multi-step jump.
    pub excluded_probes: usize,
    pub balance: BalanceReport,
    pub jump_residuals: Vec<JumpResidual>,
    pub verdict: Verdict,
}

impl Certificate {
    pub fn pass(&self) -> bool {
        self.verdict.pass()
    }
}

/// Probe times: `probes` uniform times on `[t^0, T]` merged with the nodes.
pub fn probe_times(times: &[f64], probes: usize) -> Vec<f64> {
    let (a, b) = (times[0], times[times.len() - 1]);
    let m = probes.max(2);
    let mut out: Vec<f64> = (0..m).map(|k| if k + 1 == m { b } else { a + (b - a) * k as f64 / (m - 1) as f64 }).collect();
    out.extend_from_slice(times);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Nodes `m` lying strictly inside a multi-step jump whose incoming step is a
/// genuine minimal-set step.
fn interior_jump_nodes<P: RisProblem + ?Sized>(
    p: &P,
    traj: &DiscreteTrajectory,
    it: &Trajectory,
    corr: &Correction,
    cfg: &MinimizerConfig,
) -> Result<Vec<bool>> {
    let mut flagged = vec![false; traj.len()];
    let steps: Vec<usize> = it.jumps.iter().map(|j| j.step).collect();
    for &s in &steps {
        let m = s;
        if !steps.contains(&(m + 1)) {
            continue;
        }
        let t = traj.times[m];
        let zp = &traj.states[m - 1].z;
        let z = &traj.states[m].z;
        let rep = residual_stability(p, t, zp, corr, cfg)?;
        let mut u = vec![0.0; p.n_u()];
        let here = p.reduce(t, z, &mut u).to_f64() + p.dissipation(zp, z).to_f64() + corr.eval(p, zp, z).to_f64();
        let band = 1e-8 * (1.0 + rep.y_value.abs());
        if here <= rep.y_value + band {
            flagged[m] = true;
        }
    }
    Ok(flagged)
}

fn certify<P: RisProblem + ?Sized>(
    p: &P,
    traj: &DiscreteTrajectory,
    stab_corr: &Correction,
    energetic: bool,
    tol: &TolConfig,
) -> Result<Certificate> {
    let residuals = node_residuals(p, traj, stab_corr, &tol.minimizer)?;
    let steps = transition_steps(traj, &tol.jump_detection, &residuals);
    let it = interpolate_steps(traj, steps.clone());
    let mut u = vec![0.0; p.n_u()];

    let mut minimality_residual = 0.0f64;
    let mut minimality_ok = true;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let e = p.energy(*t, &s.u, &s.z).to_f64();
        let i = p.reduce(*t, &s.z, &mut u).to_f64();
        let r = if e.is_finite() && i.is_finite() { (e - i).abs() } else if e == i { 0.0 } else { f64::INFINITY };
        minimality_residual = minimality_residual.max(r);
        minimality_ok &= r <= tol.minimality * (1.0 + i.abs());
    }

    let interior = interior_jump_nodes(p, traj, &it, stab_corr, &tol.minimizer)?;
    let stability_tol = tol.stability_tol(traj.tau);
    let mut stability_residual = 0.0f64;
    let mut stability_worst_t = traj.times[0];
    let mut excluded = 0;
    for t in probe_times(&traj.times, tol.probes) {
        let m = it.index_at(t);
        if interior[m] {
            excluded += 1;
            continue;
        }
        let r = residual_stability(p, t, &traj.states[m].z, stab_corr, &tol.minimizer)?.residual;
        if r > stability_residual {
            stability_residual = r;
            stability_worst_t = t;
        }
    }
    let stability_ok = stability_residual <= stability_tol;

    let bal_corr = if energetic { Correction::Zero } else { traj.correction.clone() };
    let bal_steps: &[usize] = if bal_corr.is_zero() { &[] } else { &steps };
    let bal = balance_steps(p, traj, &bal_corr, &tol.jump_search, bal_steps)?;
    let balance_ok = bal.normalized <= tol.balance;

    let mut jump_residuals = Vec::with_capacity(it.jumps.len());
    for j in &it.jumps {
        let t = j.solve_time;
        let drop = p.reduce(t, &j.z_left, &mut u).to_f64() - p.reduce(t, &j.z_right, &mut u).to_f64();
        let mut jr = if energetic {
            let d = p.dissipation(&j.z_left, &j.z_right).to_f64();
            let residual = (drop - d).abs();
            let lim = tol.jump.max(tol.stability_tau2 * traj.tau * traj.tau);
            JumpResidual { t: j.t, solve_time: t, energy_drop: drop, cost: d, lower: d, gap: 0.0, residual, refined: false, pass: residual <= lim }
        } else {
            jump_check(p, t, j.t, drop, &j.z_left, &j.z_right, &traj.correction, &tol.jump_search, tol)?
        };
        if !energetic && !jr.pass && stability_ok && balance_ok {
            let finer = JumpSearchConfig {
                dp_points: 2 * tol.jump_search.dp_points - 1,
                dp_points_2d: 2 * tol.jump_search.dp_points_2d - 1,
                sliding_points: 2 * tol.jump_search.sliding_points,
                ..tol.jump_search.clone()
            };
            jr = jump_check(p, t, j.t, drop, &j.z_left, &j.z_right, &traj.correction, &finer, tol)?;
            jr.refined = true;
        }
        jump_residuals.push(jr);
    }
    let jumps_ok = jump_residuals.iter().all(|j| j.pass);

    Ok(Certificate {
        minimality_residual,
        stability_residual,
        stability_worst_t,
        stability_tol,
        excluded_probes: excluded,
        balance: bal,
        jump_residuals,
        verdict: Verdict { minimality: minimality_ok, stability: stability_ok, balance: balance_ok, jumps: jumps_ok },
    })
}

#[allow(clippy::too_many_arguments)]
fn jump_check<P: RisProblem + ?Sized>(
    p: &P,
    solve_time: f64,
    t: f64,
    drop: f64,
    zl: &[f64],
    zr: &[f64],
    corr: &Correction,
    cfg: &JumpSearchConfig,
    tol: &TolConfig,
) -> Result<JumpResidual> {
    let c = jump_cost(p, solve_time, zl, zr, corr, cfg)?;
    let residual = (drop - c.upper).abs();
    let lim = tol.jump.max(tol.jump_gap_factor * c.gap);
    Ok(JumpResidual {
        t,
        solve_time,
        energy_drop: drop,
        cost: c.upper,
        lower: c.lower,
        gap: c.gap,
        residual,
        refined: false,
        pass: residual <= lim,
    })
}

/// Certificate against the visco-energetic conditions, with the trajectory's correction.
pub fn verify_ve<P: RisProblem + ?Sized>(p: &P, traj: &DiscreteTrajectory, tol: &TolConfig) -> Result<Certificate> {
    certify(p, traj, &traj.correction.clone(), false, tol)
}

/// Certificate against the energetic conditions: global stability and plain `d`-variation.
pub fn verify_e<P: RisProblem + ?Sized>(p: &P, traj: &DiscreteTrajectory, tol: &TolConfig) -> Result<Certificate> {
    certify(p, traj, &Correction::Zero, true, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceReport {
    /// `max R₀(t, z(t))` over probes, with `δ ≡ 0`.
    pub global_stability_residual: f64,
    pub worst_t: f64,
    /// `Δ_c` per detected jump.
    pub jump_excess: Vec<f64>,
    /// `I(t, z₋) − I(t, z₊) − d(z₋, z₊)` per detected jump.
    pub energetic_jump_residuals: Vec<f64>,
    /// Tolerance actually applied: `rho + stability_tau2 · τ²`.
    pub tolerance: f64,
    pub equal: bool,
}

/// Whether a visco-energetic trajectory is also energetic, at tolerance `rho`.
pub fn ve_equals_e<P: RisProblem + ?Sized>(
    p: &P,
    traj: &DiscreteTrajectory,
    rho: f64,
    tol: &TolConfig,
) -> Result<CoincidenceReport> {
    let it = interpolate_with(traj, &tol.jump_detection);
    let mut worst = 0.0f64;
    let mut worst_t = traj.times[0];
    for t in probe_times(&traj.times, tol.probes) {
        let r = residual_stability(p, t, it.z_at(t), &Correction::Zero, &tol.minimizer)?.residual;
        if r > worst {
            worst = r;
            worst_t = t;
        }
    }
    let mut u = vec![0.0; p.n_u()];
    let mut jump_excess = Vec::new();
    let mut energetic_jump_residuals = Vec::new();
    for j in &it.jumps {
        let t = j.solve_time;
        jump_excess.push(incremental_cost(p, t, &j.z_left, &j.z_right, &traj.correction, &tol.jump_search)?);
        let drop = p.reduce(t, &j.z_left, &mut u).to_f64() - p.reduce(t, &j.z_right, &mut u).to_f64();
        energetic_jump_residuals.push(drop - p.dissipation(&j.z_left, &j.z_right).to_f64());
    }
    let tolerance = rho + tol.stability_tau2 * traj.tau * traj.tau;
    let equal = worst <= tolerance && jump_excess.iter().all(|&d| d <= tolerance);
    Ok(CoincidenceReport {
        global_stability_residual: worst,
        worst_t,
        jump_excess,
        energetic_jump_residuals,
        tolerance,
        equal,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressReport {
    pub max_abs_stress: f64,
    pub worst_t: f64,
    /// `|σ| ≤ σ_y + tol` at every probe.
    pub admissible: bool,
    /// Sampled states where admissibility and stability disagree.
    pub equivalence_mismatches: usize,
    pub equivalence_samples: usize,
    pub pass: bool,
}

/// Stress admissibility of a plasticity trajectory, plus a sampled check that
/// admissibility coincides with stability for the trajectory's correction.
pub fn plasticity_stress_check(
    p: &Plasticity0d,
    traj: &DiscreteTrajectory,
    tol: f64,
    cfg: &TolConfig,
    seed: u64,
) -> Result<StressReport> {
    let it = interpolate_with(traj, &cfg.jump_detection);
    let mut max_abs_stress = 0.0f64;
    let mut worst_t = traj.times[0];
    for t in probe_times(&traj.times, cfg.probes) {
        let s = p.stress(t, it.z_at(t)[0]).abs();
        if s > max_abs_stress {
            max_abs_stress = s;
            worst_t = t;
        }
    }
    let sy = p.spec().sigma_y;
    let admissible = max_abs_stress <= sy + tol;

    // away from the yield surface, stable iff admissible
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = 1e-3 * sy;
    let horizon = p.horizon();
    let bx = p.spec().p_box;
    let mut mismatches = 0;
    let mut samples = 0;
    while samples < 64 {
        let t = rng.random_range(0.0..=horizon);
        let z = rng.random_range(bx.lo..=bx.hi);
        let s = p.stress(t, z).abs();
        if (s - sy).abs() < band {
            continue;
        }
        samples += 1;
        let r = residual_stability(p, t, &[z], &traj.correction, &cfg.minimizer)?.residual;
        if (r <= cfg.stability) != (s <= sy) {
            mismatches += 1;
        }
    }
    Ok(StressReport {
        max_abs_stress,
        worst_t,
        admissible,
        equivalence_mismatches: mismatches,
        equivalence_samples: samples,
        pass: admissible && mismatches == 0,
    })
}

/// One adhesive stiffness compared with the brittle reference.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRow {
    pub k: f64,
    /// `sup_t |z_k(t) − z(t)|` on the probes.
    pub sup_state_distance: f64,
    /// `sup_t |E_k(t) − E(t)|` on the probes.
    pub sup_energy_diff: f64,
    /// `max_n z_k [u_k]²`.
    pub constraint_violation: f64,
    pub final_distance: f64,
    /// `max (R(t, z) − R_k(t, z))⁺` over sampled states.
    pub liminf_defect: f64,
    pub jump_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaReport {
    pub rows: Vec<GammaRow>,
    pub brittle_jump_times: Vec<f64>,
    pub brittle_final: Vec<f64>,
    /// Violations nonincreasing in `k` up to 10% slack.
    pub violation_nonincreasing: bool,
}

impl GammaReport {
    pub fn from_rows(rows: Vec<GammaRow>, brittle: &DiscreteTrajectory, jd: &JumpDetection) -> Self {
        let violation_nonincreasing =
            rows.windows(2).all(|w| w[1].constraint_violation <= 1.1 * w[0].constraint_violation + 1e-15);
        let it = interpolate_with(brittle, jd);
        GammaReport {
            rows,
            brittle_jump_times: it.jumps.iter().map(|j| j.t).collect(),
            brittle_final: brittle.states.last().map(|s| s.z.clone()).unwrap_or_default(),
            violation_nonincreasing,
        }
    }
}

/// Brittle reference model and its trajectory for the limit study.
pub fn brittle_reference(base: &Delamination0dSpec, scheme: &SchemeConfig) -> Result<(Delamination0d, DiscreteTrajectory)> {
    let z_tol = match base.interface {
        Interface::Brittle { z_tol } => z_tol,
        Interface::Adhesive { .. } => 1e-12,
    };
    let m = Delamination0d::new(Delamination0dSpec { interface: Interface::Brittle { z_tol }, ..base.clone() })?;
    let tr = solve_incremental(&m, scheme)?;
    Ok((m, tr))
}

/// Solves the adhesive model with stiffness `k` and compares with the brittle reference.
pub fn gamma_row(
    base: &Delamination0dSpec,
    k: f64,
    brittle: &Delamination0d,
    brittle_traj: &DiscreteTrajectory,
    scheme: &SchemeConfig,
    tol: &TolConfig,
) -> Result<GammaRow> {
    let m = Delamination0d::new(Delamination0dSpec { interface: Interface::Adhesive { k }, ..base.clone() })?;
    let tr = solve_incremental(&m, scheme)?;
    let a = interpolate_with(&tr, &tol.jump_detection);
    let b = interpolate_with(brittle_traj, &tol.jump_detection);
    let mut sup_state_distance = 0.0f64;
    let mut sup_energy_diff = 0.0f64;
    for t in probe_times(&tr.times, tol.probes) {
        let (sa, sb) = (a.state_at(t), b.state_at(t));
        sup_state_distance = sup_state_distance.max(libm::sqrt(dist2(&sa.z, &sb.z)));
        let ea = m.energy(t, &sa.u, &sa.z).to_f64();
        let eb = brittle.energy(t, &sb.u, &sb.z).to_f64();
        sup_energy_diff = sup_energy_diff.max((ea - eb).abs());
    }
    let constraint_violation = tr.states.iter().map(|s| m.constraint_violation(&s.u, s.z[0])).fold(0.0, f64::max);
    let final_distance = libm::sqrt(dist2(&tr.states[tr.len() - 1].z, &brittle_traj.states[brittle_traj.len() - 1].z));

    let horizon = m.horizon();
    let mut liminf_defect = 0.0f64;
    for &ft in &[0.25, 0.5, 0.75] {
        for &z in &[0.25, 0.5, 1.0] {
            let t = ft * horizon;
            let corr = &scheme.scheme.correction(scheme.tau);
            let rb = residual_stability(brittle, t, &[z], corr, &tol.minimizer)?.residual;
            let rk = residual_stability(&m, t, &[z], corr, &tol.minimizer)?.residual;
            liminf_defect = liminf_defect.max(rb - rk);
        }
    }
    Ok(GammaRow {
        k,
        sup_state_distance,
        sup_energy_diff,
        constraint_violation,
        final_distance,
        liminf_defect: liminf_defect.max(0.0),
        jump_times: a.jumps.iter().map(|j| j.t).collect(),
    })
}

/// Sequential adhesive-to-brittle study over increasing stiffnesses `ks`.
pub fn gamma_limit_study(
    base: &Delamination0dSpec,
    ks: &[f64],
    scheme: &SchemeConfig,
    tol: &TolConfig,
) -> Result<GammaReport> {
    check_k_list(ks)?;
    let (bm, btr) = brittle_reference(base, scheme)?;
    let rows = ks.iter().map(|&k| gamma_row(base, k, &bm, &btr, scheme, tol)).collect::<Result<Vec<_>>>()?;
    Ok(GammaReport::from_rows(rows, &btr, &tol.jump_detection))
}

pub fn check_k_list(ks: &[f64]) -> Result<()> {
    if ks.len() < 4 || ks.windows(2).any(|w| !(w[1] > w[0])) || ks[0] <= 0.0 {
        return Err(Error::InvalidConfig("k list must be increasing, positive, with at least four entries".into()));
    }
    Ok(())
}
