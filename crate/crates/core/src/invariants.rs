//! Seeded sampling checks of the structural assumptions on a problem.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ext::ExtReal;
use crate::problem::RisProblem;
use crate::stability::correction_ratio_check;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantConfig {
    pub seed: u64,
    /// Random pairs for the self-distance, sign and separation checks.
    pub pairs: usize,
    pub triples: usize,
    pub power_points: usize,
    /// Central finite-difference step in `t`.
    pub fd_step: f64,
    /// `|P − FD| ≤ power_rel_tol · (1 + |P|)`.
    pub power_rel_tol: f64,
    pub ratio_scales: Vec<f64>,
}

impl Default for InvariantConfig {
    fn default() -> Self {
        InvariantConfig {
            seed: 0,
            pairs: 100,
            triples: 100,
            power_points: 50,
            fd_step: 1e-6,
            power_rel_tol: 1e-5,
            ratio_scales: vec![1e-1, 1e-2, 1e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    /// `d(z, z) = 0` and `δ(z, z) = 0`.
    pub self_zero: bool,
    /// `d ≥ 0` and `δ ≥ 0`.
    pub nonnegative: bool,
    /// Largest `d(z, w) − d(z, ζ) − d(ζ, w)` seen (≤ 0 when the inequality holds).
    pub triangle_excess: f64,
    pub triangle: bool,
    pub separation: bool,
    /// Largest `|P − FD| / (1 + |P|)`.
    pub power_fd_error: f64,
    pub power_fd: bool,
    /// `None` when the model declares no power-control constants.
    pub power_control: Option<bool>,
    pub correction_ratio: bool,
    /// Smallest reduced energy seen on samples.
    pub min_energy: f64,
}

impl InvariantReport {
    pub fn pass(&self) -> bool {
        self.self_zero
            && self.nonnegative
            && self.triangle
            && self.separation
            && self.power_fd
            && self.power_control.unwrap_or(true)
            && self.correction_ratio
            && self.min_energy.is_finite()
    }
}

fn sample_z<P: RisProblem + ?Sized>(p: &P, rng: &mut ChaCha8Rng) -> Vec<f64> {
    p.z_box().iter().map(|iv| if iv.width() > 0.0 { rng.random_range(iv.lo..=iv.hi) } else { iv.lo }).collect()
}

fn nonneg(v: ExtReal) -> bool {
    match v {
        ExtReal::Finite(x) => x >= 0.0,
        ExtReal::Infinity => true,
    }
}

/// Runs the sampling suite on `p` with its configured correction.
pub fn check_invariants<P: RisProblem + ?Sized>(p: &P, cfg: &InvariantConfig) -> Result<InvariantReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let corr = p.correction();

    let mut self_zero = true;
    let mut nonnegative = true;
    let mut separation = true;
    for _ in 0..cfg.pairs {
        let z = sample_z(p, &mut rng);
        let w = sample_z(p, &mut rng);
        self_zero &= p.dissipation(&z, &z) == ExtReal::ZERO && corr.eval(p, &z, &z) == ExtReal::ZERO;
        nonnegative &= nonneg(p.dissipation(&z, &w)) && nonneg(corr.eval(p, &z, &w));
        if z != w && p.dissipation(&z, &w) == ExtReal::ZERO && p.dissipation(&w, &z) == ExtReal::ZERO {
            separation = false;
        }
    }

    let mut triangle_excess = f64::NEG_INFINITY;
    for _ in 0..cfg.triples {
        let z = sample_z(p, &mut rng);
        let m = sample_z(p, &mut rng);
        let w = sample_z(p, &mut rng);
        let via = p.dissipation(&z, &m) + p.dissipation(&m, &w);
        if let ExtReal::Finite(v) = via {
            let direct = p.dissipation(&z, &w).to_f64();
            triangle_excess = triangle_excess.max(direct - v);
        }
    }
    let triangle = !(triangle_excess > 1e-12);

    let mut power_fd_error = 0.0f64;
    let mut power_control = p.power_control().map(|_| true);
    let mut min_energy = f64::INFINITY;
    let h = cfg.fd_step;
    let horizon = p.horizon();
    let mut u = vec![0.0; p.n_u()];
    let mut done = 0;
    let mut tries = 0;
    while done < cfg.power_points && tries < 100 * cfg.power_points {
        tries += 1;
        let t = rng.random_range(h..=horizon - h);
        let z = sample_z(p, &mut rng);
        let i = p.reduce(t, &z, &mut u);
        if let ExtReal::Finite(i) = i {
            min_energy = min_energy.min(i);
        }
        // perturb the equilibrium so the check is not confined to minimizers
        let mut v = u.clone();
        for x in v.iter_mut() {
            *x += rng.random_range(-0.1..=0.1);
        }
        let pick = if p.energy(t, &v, &z).is_finite() { v } else { u.clone() };
        let (e, ep, em) = (p.energy(t, &pick, &z), p.energy(t + h, &pick, &z), p.energy(t - h, &pick, &z));
        let (ExtReal::Finite(e), ExtReal::Finite(ep), ExtReal::Finite(em)) = (e, ep, em) else {
            continue;
        };
        done += 1;
        let pw = p.power(t, &pick, &z);
        let fd = (ep - em) / (2.0 * h);
        power_fd_error = power_fd_error.max((pw - fd).abs() / (1.0 + pw.abs()));
        if let Some(pc) = p.power_control() {
            let bound = pc.lambda * (e + p.dissipation(&pc.z_ref, &z).to_f64() + pc.offset);
            if pw.abs() > bound {
                power_control = Some(false);
            }
        }
    }
    let power_fd = done > 0 && power_fd_error <= cfg.power_rel_tol;

    let correction_ratio = if corr.is_zero() {
        true
    } else {
        let z: Vec<f64> = p.z_box().iter().map(|iv| 0.5 * (iv.lo + iv.hi)).collect();
        let sign = if p.unidirectional() { -1.0 } else { 1.0 };
        let dir = vec![sign; p.n_z()];
        correction_ratio_check(p, corr, &z, &dir, &cfg.ratio_scales)?.pass
    };

    Ok(InvariantReport {
        self_zero,
        nonnegative,
        triangle_excess,
        triangle,
        separation,
        power_fd_error,
        power_fd,
        power_control,
        correction_ratio,
        min_energy,
    })
}
