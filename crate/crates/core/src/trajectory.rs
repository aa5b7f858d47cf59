//! Discrete trajectories and their piecewise-constant interpolants.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::jump::{CostBound, JumpChain};
use crate::problem::{Correction, RisProblem, State};
use crate::reduced::MinimizerConfig;
use crate::stability::residual_stability;

/// Output of an incremental scheme on the uniform grid `t^n = nτ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Minimized incremental value at each step; `E(0, u^0, z^0)` at index 0.
    pub step_value: Vec<f64>,
    /// `d(z^{n−1}, z^n)`; zero at index 0.
    pub step_dissipation: Vec<f64>,
    /// `δ(z^{n−1}, z^n)`; zero at index 0.
    pub step_correction: Vec<f64>,
    /// Correction the steps were minimized with.
    pub correction: Correction,
    pub tau: f64,
    /// Every step came from a certified global search.
    pub certified: bool,
    pub warnings: Vec<String>,
}

impl DiscreteTrajectory {
    /// Builds a trajectory from nodes, recomputing the per-step quantities.
    pub fn from_nodes<P: RisProblem + ?Sized>(
        p: &P,
        times: Vec<f64>,
        states: Vec<State>,
        correction: Correction,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::InvalidConfig("trajectory needs matching, nonempty times and states".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("trajectory times must be strictly increasing".into()));
        }
        for s in &states {
            check_dim(p.n_z(), s.z.len())?;
            check_dim(p.n_u(), s.u.len())?;
        }
        let n = times.len();
        let mut step_value = Vec::with_capacity(n);
        let mut step_dissipation = Vec::with_capacity(n);
        let mut step_correction = Vec::with_capacity(n);
        for k in 0..n {
            let e = p.energy(times[k], &states[k].u, &states[k].z).to_f64();
            if k == 0 {
                step_value.push(e);
                step_dissipation.push(0.0);
                step_correction.push(0.0);
            } else {
                let d = p.dissipation(&states[k - 1].z, &states[k].z).to_f64();
                let c = correction.eval(p, &states[k - 1].z, &states[k].z).to_f64();
                step_value.push(e + d + c);
                step_dissipation.push(d);
                step_correction.push(c);
            }
        }
        let tau = if n > 1 { (times[n - 1] - times[0]) / (n - 1) as f64 } else { 0.0 };
        Ok(DiscreteTrajectory {
            times,
            states,
            step_value,
            step_dissipation,
            step_correction,
            correction,
            tau,
            certified: false,
            warnings: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Steps flagged as jumps by `jd`.
    pub fn detect_jumps(&self, jd: &JumpDetection) -> Vec<usize> {
        jd.detect(&self.step_dissipation, self.tau)
    }
}

/// Discrete jump proxy.
///
/// Step `n` is a jump candidate when
/// `d(z^{n−1}, z^n) > threshold · max(median step dissipation, rate_floor · τ)`.
/// [`transition_steps`] adds the steps next to nodes with
/// `R > tail_tol + tail_tol_tau2 · τ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct JumpDetection {
    pub threshold: f64,
    /// Dissipation rate regarded as continuous motion, in dissipation per unit time.
    pub rate_floor: f64,
    pub tail_tol: f64,
    pub tail_tol_tau2: f64,
}

impl Default for JumpDetection {
    fn default() -> Self {
        JumpDetection { threshold: 10.0, rate_floor: 1.0, tail_tol: 1e-6, tail_tol_tau2: 250.0 }
    }
}

impl JumpDetection {
    pub fn tail_level(&self, tau: f64) -> f64 {
        self.tail_tol + self.tail_tol_tau2 * tau * tau
    }

    pub fn detect(&self, step_dissipation: &[f64], tau: f64) -> Vec<usize> {
        if step_dissipation.len() < 2 {
            return Vec::new();
        }
        let mut steps: Vec<f64> = step_dissipation[1..].to_vec();
        steps.sort_by(f64::total_cmp);
        let m = steps.len();
        let median = if m % 2 == 1 { steps[m / 2] } else { 0.5 * (steps[m / 2 - 1] + steps[m / 2]) };
        let level = self.threshold * median.max(self.rate_floor * tau);
        (1..step_dissipation.len()).filter(|&n| step_dissipation[n] > level).collect()
    }
}

/// A jump of the interpolant at `t`, produced by step `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub step: usize,
    /// Jump point `t^{step−1}` of the interpolant.
    pub t: f64,
    /// Time `t^{step}` at which the step was minimized.
    pub solve_time: f64,
    pub z_left: Vec<f64>,
    pub z_inner: Vec<f64>,
    pub z_right: Vec<f64>,
    pub chain: Option<JumpChain>,
    pub cost: Option<CostBound>,
}

/// Left-continuous piecewise-constant interpolant:
/// `Z(0) = z^0`, `Z(t) = z^n` on `(t^{n−1}, t^n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub step_dissipation: Vec<f64>,
    pub jumps: Vec<JumpRecord>,
}

impl Trajectory {
    /// Node index `n` whose state is the interpolant's value at `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let n = self.times.partition_point(|&tn| tn < t);
        n.min(self.times.len() - 1)
    }

    pub fn state_at(&self, t: f64) -> &State {
        &self.states[self.index_at(t)]
    }

    pub fn z_at(&self, t: f64) -> &[f64] {
        &self.state_at(t).z
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Plain `d`-variation: the sum of step dissipations.
    pub fn variation_d(&self) -> f64 {
        self.step_dissipation.iter().sum()
    }
}

/// Interpolates with the default jump detection.
pub fn interpolate(discrete: &DiscreteTrajectory) -> Trajectory {
    interpolate_with(discrete, &JumpDetection::default())
}

pub fn interpolate_with(discrete: &DiscreteTrajectory, jd: &JumpDetection) -> Trajectory {
    interpolate_steps(discrete, discrete.detect_jumps(jd))
}

/// `R(t^n, z^n)` at every node.
pub fn node_residuals<P: RisProblem + ?Sized>(
    p: &P,
    discrete: &DiscreteTrajectory,
    corr: &Correction,
    cfg: &MinimizerConfig,
) -> Result<Vec<f64>> {
    discrete
        .times
        .iter()
        .zip(&discrete.states)
        .map(|(&t, s)| Ok(residual_stability(p, t, &s.z, corr, cfg)?.residual))
        .collect()
}

/// Size-detected jump steps together with every moving step that lands on
/// or leaves a node with `R > jd.tail_level(τ)`.
///
/// An unstable node is a point inside a transition, so the steps on either
/// side of it belong to the jump rather than to the load-driven motion.
pub fn transition_steps(discrete: &DiscreteTrajectory, jd: &JumpDetection, residuals: &[f64]) -> Vec<usize> {
    let level = jd.tail_level(discrete.tau);
    let n = discrete.len();
    let mut flag = vec![false; n];
    for s in discrete.detect_jumps(jd) {
        flag[s] = true;
    }
    for m in 1..n {
        if residuals[m] > level {
            flag[m] |= discrete.step_dissipation[m] > 0.0;
            if m + 1 < n {
                flag[m + 1] |= discrete.step_dissipation[m + 1] > 0.0;
            }
        }
    }
    (1..n).filter(|&k| flag[k]).collect()
}

/// [`transition_steps`] with freshly computed node residuals.
pub fn detect_transitions<P: RisProblem + ?Sized>(
    p: &P,
    discrete: &DiscreteTrajectory,
    jd: &JumpDetection,
    corr: &Correction,
    cfg: &MinimizerConfig,
) -> Result<Vec<usize>> {
    Ok(transition_steps(discrete, jd, &node_residuals(p, discrete, corr, cfg)?))
}

/// [`interpolate_with`], with jumps from [`detect_transitions`].
pub fn interpolate_transitions<P: RisProblem + ?Sized>(
    p: &P,
    discrete: &DiscreteTrajectory,
    jd: &JumpDetection,
    corr: &Correction,
    cfg: &MinimizerConfig,
) -> Result<Trajectory> {
    Ok(interpolate_steps(discrete, detect_transitions(p, discrete, jd, corr, cfg)?))
}

/// Interpolant whose jumps are the given steps.
pub fn interpolate_steps(discrete: &DiscreteTrajectory, steps: Vec<usize>) -> Trajectory {
    let jumps = steps
        .into_iter()
        .map(|n| JumpRecord {
            step: n,
            t: discrete.times[n - 1],
            solve_time: discrete.times[n],
            z_left: discrete.states[n - 1].z.clone(),
            z_inner: discrete.states[n - 1].z.clone(),
            z_right: discrete.states[n].z.clone(),
            chain: None,
            cost: None,
        })
        .collect();
    Trajectory {
        times: discrete.times.clone(),
        states: discrete.states.clone(),
        step_dissipation: discrete.step_dissipation.clone(),
        jumps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Toy1d;
    use alloc::vec;

    fn sample() -> DiscreteTrajectory {
        let p = Toy1d::convex_play(1.0, 2.0, 1.0);
        let times = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let zs = [0.0, 0.0, 0.1, 0.5, 1.0];
        let states = zs.iter().map(|&z| State::new(vec![], vec![z])).collect();
        DiscreteTrajectory::from_nodes(&p, times, states, Correction::Zero).unwrap()
    }

    #[test]
    fn left_continuous_queries() {
        let tr = interpolate(&sample());
        assert_eq!(tr.z_at(0.0), &[0.0]);
        assert_eq!(tr.z_at(0.5), &[0.1]);
        assert_eq!(tr.z_at(0.6), &[0.5]);
        assert_eq!(tr.z_at(0.26), &[0.1]);
        assert_eq!(tr.z_at(1.0), &[1.0]);
        assert!((tr.variation_d() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn detection_uses_floor_and_median() {
        let jd = JumpDetection::default();
        let mut d = vec![0.0; 101];
        d[40] = 0.5;
        assert_eq!(jd.detect(&d, 0.01), vec![40]);
        for v in d.iter_mut().skip(1) {
            *v = 0.01;
        }
        assert!(jd.detect(&d, 0.01).is_empty());
        d[70] = 0.2;
        assert_eq!(jd.detect(&d, 0.01), vec![70]);
    }

    #[test]
    fn unstable_nodes_pull_in_neighbouring_steps() {
        let p = Toy1d::convex_play(1.0, 2.0, 1.0);
        let times: Vec<f64> = (0..8).map(|k| k as f64 * 0.1).collect();
        let zs = [0.0, 0.0, 0.01, 0.02, 2.5, 2.7, 2.71, 2.71];
        let states = zs.iter().map(|&z| State::new(vec![], vec![z])).collect();
        let d = DiscreteTrajectory::from_nodes(&p, times, states, Correction::Zero).unwrap();
        let jd = JumpDetection::default();
        let mut r = vec![0.0; 8];
        assert_eq!(transition_steps(&d, &jd, &r), vec![4]);
        r[3] = 10.0;
        r[5] = 10.0;
        assert_eq!(transition_steps(&d, &jd, &r), vec![3, 4, 5, 6]);
        // a resting unstable node adds nothing on the side where nothing moves
        r[6] = 10.0;
        assert_eq!(transition_steps(&d, &jd, &r), vec![3, 4, 5, 6]);
    }

    #[test]
    fn rejects_unsorted_times() {
        let p = Toy1d::convex_play(1.0, 2.0, 1.0);
        let s = State::new(vec![], vec![0.0]);
        assert!(DiscreteTrajectory::from_nodes(&p, vec![0.0, 0.0], vec![s.clone(), s], Correction::Zero).is_err());
    }
}
