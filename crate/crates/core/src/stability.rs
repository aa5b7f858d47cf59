//! Residual stability, minimal sets, Q-stability, correction and exponent probes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;
use crate::problem::{Correction, RisProblem, State};
use crate::reduced::{corrected_objective, dist2, search, select, MinimizerConfig};

/// Default clamping tolerance for tiny negative residuals.
pub const RESIDUAL_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `R(t, z) = I(t, z) − Y(t, z) ≥ 0`.
    pub residual: f64,
    /// Best competitor `z'`.
    pub witness: Vec<f64>,
    /// `Y(t, z) = inf_{z'} I(t, z') + d(z, z') + δ(z, z')`.
    pub y_value: f64,
    /// `I(t, z)`.
    pub i_value: f64,
    pub certified: bool,
    candidates: Vec<(Vec<f64>, f64)>,
}

/// Evaluates `R(t, z)` for the correction `corr`.
pub fn residual_stability<P: RisProblem + ?Sized>(
    p: &P,
    t: f64,
    z: &[f64],
    corr: &Correction,
    cfg: &MinimizerConfig,
) -> Result<StabilityReport> {
    check_dim(p.n_z(), z.len())?;
    let mut u = vec![0.0; p.n_u()];
    let i_value = p.reduce(t, z, &mut u).finite().ok_or(Error::OutsideDomain { t })?;
    let bx = p.reachable_box(z);
    let mut f = |zz: &[f64]| corrected_objective(p, t, z, corr, zz, &mut u);
    let out = search(&mut f, &bx, Some(z), cfg);
    let k = select(&out.candidates, z, cfg.near_optimal_band).ok_or(Error::OutsideDomain { t })?;
    let (witness, y_value) = out.candidates[k].clone();
    let raw = i_value - y_value;
    Ok(StabilityReport {
        residual: raw.max(0.0),
        witness,
        y_value,
        i_value,
        certified: out.certified,
        candidates: out.candidates,
    })
}

impl StabilityReport {
    /// Distinct near-optimal competitors, i.e. the minimal set.
    pub fn minimal_set(&self, z: &[f64], band: f64) -> Vec<Vec<f64>> {
        let best = self.candidates.first().map_or(self.y_value, |c| c.1);
        let width = band * (1.0 + best.abs());
        let radius2 = 1e-12;
        let mut clusters: Vec<Vec<f64>> = Vec::new();
        for (c, v) in &self.candidates {
            if *v > best + width {
                break;
            }
            if !clusters.iter().any(|k| dist2(k, c) < radius2) {
                clusters.push(c.clone());
            }
        }
        for k in clusters.iter_mut() {
            if dist2(k, z) < radius2 {
                *k = z.to_vec();
            }
        }
        if clusters.is_empty() {
            clusters.push(self.witness.clone());
        }
        clusters
    }
}

/// `M(t, z)`: minimizers of `I(t, ·) + d(z, ·) + δ(z, ·)`.
pub fn minimal_set<P: RisProblem + ?Sized>(
    p: &P,
    t: f64,
    z: &[f64],
    corr: &Correction,
    cfg: &MinimizerConfig,
) -> Result<Vec<Vec<f64>>> {
    Ok(residual_stability(p, t, z, corr, cfg)?.minimal_set(z, cfg.near_optimal_band))
}

/// `(d + δ, Q)`-stability of a full state: `u` must also be optimal.
pub fn is_q_stable<P: RisProblem + ?Sized>(
    p: &P,
    t: f64,
    s: &State,
    q: f64,
    corr: &Correction,
    cfg: &MinimizerConfig,
) -> Result<bool> {
    check_dim(p.n_u(), s.u.len())?;
    let e = match p.energy(t, &s.u, &s.z) {
        ExtReal::Finite(e) => e,
        ExtReal::Infinity => return Ok(false),
    };
    let rep = residual_stability(p, t, &s.z, corr, cfg)?;
    let u_optimal = e <= rep.i_value + RESIDUAL_CLAMP * (1.0 + rep.i_value.abs());
    Ok(u_optimal && rep.residual <= q + RESIDUAL_CLAMP)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioEntry {
    pub scale: f64,
    /// `δ/d`, or `None` when `d` is zero or infinite along the ray.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioProbe {
    pub entries: Vec<RatioEntry>,
    pub pass: bool,
}

/// Tabulates `δ(z, z + s·dir) / d(z, z + s·dir)` over `scales`.
///
/// Passes when the valid ratios strictly decrease and the last is below a
/// tenth of the first.
pub fn correction_ratio_check<P: RisProblem + ?Sized>(
    p: &P,
    corr: &Correction,
    z: &[f64],
    dir: &[f64],
    scales: &[f64],
) -> Result<RatioProbe> {
    check_dim(p.n_z(), z.len())?;
    check_dim(p.n_z(), dir.len())?;
    let mut entries = Vec::with_capacity(scales.len());
    let mut zz = vec![0.0; z.len()];
    for &s in scales {
        for k in 0..z.len() {
            zz[k] = z[k] + s * dir[k];
        }
        let ratio = match p.dissipation(z, &zz) {
            ExtReal::Finite(d) if d > 0.0 => corr.eval(p, z, &zz).finite().map(|delta| delta / d),
            _ => None,
        };
        entries.push(RatioEntry { scale: s, ratio });
    }
    let valid: Vec<f64> = entries.iter().filter_map(|e| e.ratio).collect();
    let pass = valid.len() >= 2
        && valid.windows(2).all(|w| w[1] < w[0])
        && valid[valid.len() - 1] < 0.1 * valid[0];
    Ok(RatioProbe { entries, pass })
}

/// Verdicts of the exponent compatibility conditions for the damage correction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    /// Interpolation exponent `θ` solving `1/q = θ(1/r − 1/d) + 1 − θ`.
    pub theta: f64,
    pub theta_in_unit_interval: bool,
    pub r_greater_than_d: bool,
    /// `(1 − θ) q > 1`.
    pub theta_q_condition: bool,
    /// `qd/(q + d)`.
    pub r_lower_bound: f64,
    /// `r > qd/(q + d)`.
    pub compatible_below: bool,
    /// `γ (1/q − (1 − 1/q)(d − r)/(dr + r − d))`.
    pub gamma_product: f64,
    /// Infimum of admissible `γ`, when the bracket is positive.
    pub gamma_threshold: Option<f64>,
    /// `γ (…) > 1`.
    pub compatible_exponents: bool,
    /// `r > d`, or the weakened pair of conditions with the power correction.
    pub admissible: bool,
}

pub fn exponent_check(d: u32, r: f64, q: f64, gamma: f64) -> Result<ExponentReport> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidConfig("exponent_check: dimension must be 1, 2 or 3".into()));
    }
    if !(r > 1.0 && q > 1.0 && gamma > 1.0) {
        return Err(Error::InvalidConfig("exponent_check: r, q, gamma must exceed 1".into()));
    }
    let df = d as f64;
    let theta = (1.0 - 1.0 / q) / (1.0 + 1.0 / df - 1.0 / r);
    let theta_in_unit_interval = theta > 0.0 && theta < 1.0;
    let r_lower_bound = q * df / (q + df);
    let bracket = 1.0 / q - (1.0 - 1.0 / q) * (df - r) / (df * r + r - df);
    let gamma_product = gamma * bracket;
    let r_greater_than_d = r > df;
    let compatible_below = r > r_lower_bound;
    let compatible_exponents = gamma_product > 1.0;
    Ok(ExponentReport {
        theta,
        theta_in_unit_interval,
        r_greater_than_d,
        theta_q_condition: theta_in_unit_interval && (1.0 - theta) * q > 1.0,
        r_lower_bound,
        compatible_below,
        gamma_product,
        gamma_threshold: (bracket > 0.0).then(|| 1.0 / bracket),
        compatible_exponents,
        admissible: r_greater_than_d || (compatible_below && theta_in_unit_interval && compatible_exponents),
    })
}
