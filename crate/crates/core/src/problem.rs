//! The problem abstraction: energy, dissipation, viscous correction, power.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A pair `(u, z)`: equilibrium variable and internal variable.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct State {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
}

impl State {
    pub fn new(u: Vec<f64>, z: Vec<f64>) -> Self {
        State { u, z }
    }
}

/// Weighted `ℓ¹` dissipation distances.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Dissipation {
    /// `Σ w_i |z'_i − z_i|`.
    Symmetric { weights: Vec<f64> },
    /// `Σ w_i (z_i − z'_i)` when `z' ≤ z` componentwise, `+∞` otherwise.
    Unidirectional { weights: Vec<f64> },
}

impl Dissipation {
    pub fn eval(&self, z: &[f64], z2: &[f64]) -> ExtReal {
        match self {
            Dissipation::Symmetric { weights } => {
                let s = weights
                    .iter()
                    .zip(z.iter().zip(z2))
                    .map(|(w, (a, b))| w * (b - a).abs())
                    .sum::<f64>();
                ExtReal::Finite(s)
            }
            Dissipation::Unidirectional { weights } => {
                let mut s = 0.0;
                for (w, (a, b)) in weights.iter().zip(z.iter().zip(z2)) {
                    if b > a {
                        return ExtReal::Infinity;
                    }
                    s += w * (a - b);
                }
                ExtReal::Finite(s)
            }
        }
    }

    pub fn is_unidirectional(&self) -> bool {
        matches!(self, Dissipation::Unidirectional { .. })
    }
}

/// Distance used inside a quadratic correction `(μ/2) d̃²`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Metric {
    /// The problem's own dissipation distance.
    #[default]
    Dissipation,
    Euclidean,
    WeightedL2(Vec<f64>),
}

/// Power law `h(r) = coef · r^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HCurve {
    pub coef: f64,
    pub exponent: f64,
}

impl HCurve {
    pub fn eval(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            self.coef * libm::pow(r, self.exponent)
        }
    }
}

/// Viscous correction `δ(z, z')`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Correction {
    #[default]
    Zero,
    /// `h(d(z, z'))`.
    HOfD(HCurve),
    /// `(μ/2) d̃(z, z')²`.
    Quadratic {
        mu: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        metric: Metric,
    },
    /// `(1/q) (Σ w_i |z'_i − z_i|^q)^(γ/q)`.
    PowerLq { q: f64, gamma: f64, weights: Vec<f64> },
}

impl Correction {
    pub fn eval<P: RisProblem + ?Sized>(&self, p: &P, z: &[f64], z2: &[f64]) -> ExtReal {
        match self {
            Correction::Zero => ExtReal::ZERO,
            Correction::HOfD(h) => match p.dissipation(z, z2) {
                ExtReal::Finite(d) => ExtReal::new(h.eval(d)),
                ExtReal::Infinity => ExtReal::Infinity,
            },
            Correction::Quadratic { mu, metric } => {
                if *mu == 0.0 {
                    return ExtReal::ZERO;
                }
                let dist = match metric {
                    Metric::Dissipation => p.dissipation(z, z2),
                    Metric::Euclidean => ExtReal::Finite(libm::sqrt(
                        z.iter().zip(z2).map(|(a, b)| (b - a) * (b - a)).sum(),
                    )),
                    Metric::WeightedL2(w) => ExtReal::Finite(libm::sqrt(
                        w.iter()
                            .zip(z.iter().zip(z2))
                            .map(|(w, (a, b))| w * (b - a) * (b - a))
                            .sum(),
                    )),
                };
                match dist {
                    ExtReal::Finite(r) => ExtReal::new(0.5 * mu * r * r),
                    ExtReal::Infinity => ExtReal::Infinity,
                }
            }
            Correction::PowerLq { q, gamma, weights } => {
                let s: f64 = weights
                    .iter()
                    .zip(z.iter().zip(z2))
                    .map(|(w, (a, b))| w * libm::pow((b - a).abs(), *q))
                    .sum();
                if s == 0.0 {
                    ExtReal::ZERO
                } else {
                    ExtReal::new(libm::pow(s, gamma / q) / q)
                }
            }
        }
    }

    /// Rejects corrections that are not superlinearly small at the origin.
    pub fn validate(&self) -> Result<()> {
        match self {
            Correction::Zero => Ok(()),
            Correction::HOfD(h) => {
                if !(h.coef >= 0.0 && h.exponent > 1.0) {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "h(r) = {}·r^{} must satisfy h(r)/r -> 0 (coef >= 0, exponent > 1)",
                        h.coef,
                        h.exponent
                    )));
                }
                Ok(())
            }
            Correction::Quadratic { mu, metric } => {
                if !(*mu >= 0.0 && mu.is_finite()) {
                    return Err(Error::InvalidConfig(alloc::format!("mu = {mu} must be >= 0")));
                }
                if let Metric::WeightedL2(w) = metric {
                    if w.iter().any(|w| !(*w >= 0.0)) {
                        return Err(Error::InvalidConfig("negative metric weight".into()));
                    }
                }
                Ok(())
            }
            Correction::PowerLq { q, gamma, weights } => {
                if !(*q > 1.0 && *gamma > 1.0) {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "power correction needs q > 1 and gamma > 1 (q = {q}, gamma = {gamma})"
                    )));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::InvalidConfig("negative correction weight".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Correction::Zero => true,
            Correction::Quadratic { mu, .. } => *mu == 0.0,
            Correction::HOfD(h) => h.coef == 0.0,
            Correction::PowerLq { .. } => false,
        }
    }
}

/// Constants of the power control bound
/// `|∂_t E| ≤ λ (E + d(z_ref, z) + offset)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerControl {
    pub lambda: f64,
    pub offset: f64,
    pub z_ref: Vec<f64>,
}

/// A rate-independent system with a viscous correction.
///
/// Implementations must return `+∞` energy outside `z_box` and must keep
/// `dissipation(z, z) = 0`, `correction(z, z) = 0`.
pub trait RisProblem: Sync {
    fn n_u(&self) -> usize;
    fn n_z(&self) -> usize;
    fn horizon(&self) -> f64;
    fn z_box(&self) -> &[Interval];
    fn energy(&self, t: f64, u: &[f64], z: &[f64]) -> ExtReal;
    /// Analytic `∂_t E`.
    fn power(&self, t: f64, u: &[f64], z: &[f64]) -> f64;
    fn dissipation(&self, z: &[f64], z2: &[f64]) -> ExtReal;
    /// The correction configured on the model.
    fn correction(&self) -> &Correction;

    /// `true` when `dissipation(z, z')` is infinite unless `z' ≤ z`.
    fn unidirectional(&self) -> bool {
        false
    }

    /// Box of states reachable with finite dissipation from `z_prev`.
    fn reachable_box(&self, z_prev: &[f64]) -> Vec<Interval> {
        let b = self.z_box();
        if self.unidirectional() {
            b.iter()
                .zip(z_prev)
                .map(|(iv, &zp)| Interval::new(iv.lo, zp.min(iv.hi).max(iv.lo)))
                .collect()
        } else {
            b.to_vec()
        }
    }

    /// Reduced energy `I(t, z) = min_u E(t, u, z)`; writes the minimizer to `u`.
    fn reduce(&self, t: f64, z: &[f64], u: &mut [f64]) -> ExtReal {
        crate::reduced::descend_u(self, t, z, u)
    }

    /// Search box for the generic `u` descent.
    fn u_box(&self) -> Vec<Interval> {
        vec![Interval::new(-1e3, 1e3); self.n_u()]
    }

    /// Exact incremental step for the given correction, when available.
    fn closed_form_step(&self, _t: f64, _z_prev: &[f64], _corr: &Correction) -> Option<Vec<f64>> {
        None
    }

    fn power_control(&self) -> Option<PowerControl> {
        None
    }
}

impl<P: RisProblem + ?Sized> RisProblem for &P {
    fn n_u(&self) -> usize {
        (**self).n_u()
    }
    fn n_z(&self) -> usize {
        (**self).n_z()
    }
    fn horizon(&self) -> f64 {
        (**self).horizon()
    }
    fn z_box(&self) -> &[Interval] {
        (**self).z_box()
    }
    fn energy(&self, t: f64, u: &[f64], z: &[f64]) -> ExtReal {
        (**self).energy(t, u, z)
    }
    fn power(&self, t: f64, u: &[f64], z: &[f64]) -> f64 {
        (**self).power(t, u, z)
    }
    fn dissipation(&self, z: &[f64], z2: &[f64]) -> ExtReal {
        (**self).dissipation(z, z2)
    }
    fn correction(&self) -> &Correction {
        (**self).correction()
    }
    fn unidirectional(&self) -> bool {
        (**self).unidirectional()
    }
    fn reachable_box(&self, z_prev: &[f64]) -> Vec<Interval> {
        (**self).reachable_box(z_prev)
    }
    fn reduce(&self, t: f64, z: &[f64], u: &mut [f64]) -> ExtReal {
        (**self).reduce(t, z, u)
    }
    fn u_box(&self) -> Vec<Interval> {
        (**self).u_box()
    }
    fn closed_form_step(&self, t: f64, z_prev: &[f64], corr: &Correction) -> Option<Vec<f64>> {
        (**self).closed_form_step(t, z_prev, corr)
    }
    fn power_control(&self) -> Option<PowerControl> {
        (**self).power_control()
    }
}

pub(crate) fn in_box(b: &[Interval], z: &[f64]) -> bool {
    b.iter().zip(z).all(|(iv, &x)| iv.contains(x))
}

fn check_state<P: RisProblem + ?Sized>(p: &P, s: &State) -> Result<()> {
    check_dim(p.n_u(), s.u.len())?;
    check_dim(p.n_z(), s.z.len())
}

/// `E(t, u, z)`.
pub fn eval_energy<P: RisProblem + ?Sized>(p: &P, t: f64, s: &State) -> Result<ExtReal> {
    check_state(p, s)?;
    Ok(p.energy(t, &s.u, &s.z))
}

/// `d(z_from, z_to)`.
pub fn eval_dissipation<P: RisProblem + ?Sized>(p: &P, z_from: &[f64], z_to: &[f64]) -> Result<ExtReal> {
    check_dim(p.n_z(), z_from.len())?;
    check_dim(p.n_z(), z_to.len())?;
    Ok(p.dissipation(z_from, z_to))
}

/// `∂_t E(t, u, z)`; an error when the energy is infinite.
pub fn eval_power<P: RisProblem + ?Sized>(p: &P, t: f64, s: &State) -> Result<f64> {
    check_state(p, s)?;
    if p.energy(t, &s.u, &s.z).is_infinite() {
        return Err(Error::PowerUndefined { t });
    }
    Ok(p.power(t, &s.u, &s.z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dissipation_examples() {
        let dam = Dissipation::Unidirectional { weights: vec![1.0, 1.0] };
        assert_eq!(dam.eval(&[1.0, 1.0], &[0.5, 1.0]), ExtReal::Finite(0.5));
        let dam1 = Dissipation::Unidirectional { weights: vec![1.0] };
        assert_eq!(dam1.eval(&[0.5], &[0.6]), ExtReal::Infinity);
        let sym = Dissipation::Symmetric { weights: vec![1.0] };
        assert_eq!(sym.eval(&[2.0], &[-1.0]), ExtReal::Finite(3.0));
    }

    #[test]
    fn correction_validation() {
        assert!(Correction::HOfD(HCurve { coef: 1.0, exponent: 1.0 }).validate().is_err());
        assert!(Correction::HOfD(HCurve { coef: 1.0, exponent: 2.0 }).validate().is_ok());
        assert!(Correction::Quadratic { mu: -1.0, metric: Metric::Euclidean }.validate().is_err());
        assert!(Correction::PowerLq { q: 2.0, gamma: 1.0, weights: vec![1.0] }.validate().is_err());
    }

    #[test]
    fn power_lq_value() {
        let p = crate::models::Toy1d::convex_play(1.0, 2.0, 1.0);
        let c = Correction::PowerLq { q: 2.0, gamma: 3.0, weights: vec![1.0] };
        // (1/2)·(|0.5|²)^(3/2) = 0.0625
        assert!((c.eval(&p, &[0.0], &[0.5]).to_f64() - 0.0625).abs() < 1e-15);
    }
}
