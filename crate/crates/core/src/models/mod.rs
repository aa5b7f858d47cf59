//! Desk-scale model systems.

mod damage;
mod delamination;
mod plasticity;
mod toy;

use alloc::vec::Vec;

pub use damage::{Damage1d, Damage1dSpec};
pub use delamination::{Delamination0d, Delamination0dSpec, Interface};
pub use plasticity::{Plasticity0d, Plasticity0dSpec};
pub use toy::{Toy1d, Toy1dSpec, Well};

use crate::ext::ExtReal;
use crate::problem::{Correction, Interval, PowerControl, RisProblem};

/// `c0 + c1·t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Affine {
    pub c0: f64,
    pub c1: f64,
}

impl Affine {
    pub const fn new(c0: f64, c1: f64) -> Self {
        Affine { c0, c1 }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.c0 + self.c1 * t
    }

    pub fn rate(&self) -> f64 {
        self.c1
    }

    /// `max |ℓ(t)|` over `[0, horizon]`.
    pub fn sup_abs(&self, horizon: f64) -> f64 {
        self.at(0.0).abs().max(self.at(horizon).abs())
    }
}

/// Minimizer of `(a/2)z² − b·z + κ|z − zp| + (m/2)(z − zp)²` on `iv`.
pub(crate) fn soft_threshold_step(a: f64, b: f64, kappa: f64, m: f64, zp: f64, iv: &Interval) -> f64 {
    let slope = a * zp - b;
    let z = if slope > kappa {
        (b + kappa + m * zp) / (a + m)
    } else if slope < -kappa {
        (b - kappa + m * zp) / (a + m)
    } else {
        zp
    };
    iv.clamp(z)
}

/// Curvature `m` such that the correction equals `(m/2)Δ²` for a
/// one-dimensional dissipation `κ|Δ|`, if it is of that form.
pub(crate) fn quadratic_curvature(corr: &Correction, kappa: f64) -> Option<f64> {
    use crate::problem::Metric;
    match corr {
        Correction::Zero => Some(0.0),
        Correction::Quadratic { mu, metric: Metric::Dissipation } => Some(mu * kappa * kappa),
        Correction::Quadratic { mu, metric: Metric::Euclidean } => Some(*mu),
        Correction::Quadratic { mu, metric: Metric::WeightedL2(w) } if w.len() == 1 => Some(mu * w[0]),
        Correction::HOfD(h) if h.exponent == 2.0 => Some(2.0 * h.coef * kappa * kappa),
        _ => None,
    }
}

/// Any of the shipped models.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Toy1d(Toy1d),
    Damage1d(Damage1d),
    Plasticity0d(Plasticity0d),
    Delamination0d(Delamination0d),
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Toy1d($m) => $e,
            Model::Damage1d($m) => $e,
            Model::Plasticity0d($m) => $e,
            Model::Delamination0d($m) => $e,
        }
    };
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Toy1d(_) => "toy1d",
            Model::Damage1d(_) => "damage1d",
            Model::Plasticity0d(_) => "plasticity0d",
            Model::Delamination0d(_) => "delamination0d",
        }
    }

    /// Returns the model with its configured correction replaced.
    pub fn with_correction(self, c: Correction) -> Self {
        match self {
            Model::Toy1d(m) => Model::Toy1d(m.with_correction(c)),
            Model::Damage1d(m) => Model::Damage1d(m.with_correction(c)),
            Model::Plasticity0d(m) => Model::Plasticity0d(m.with_correction(c)),
            Model::Delamination0d(m) => Model::Delamination0d(m.with_correction(c)),
        }
    }
}

impl RisProblem for Model {
    fn n_u(&self) -> usize {
        dispatch!(self, m => m.n_u())
    }
    fn n_z(&self) -> usize {
        dispatch!(self, m => m.n_z())
    }
    fn horizon(&self) -> f64 {
        dispatch!(self, m => m.horizon())
    }
    fn z_box(&self) -> &[Interval] {
        dispatch!(self, m => m.z_box())
    }
    fn energy(&self, t: f64, u: &[f64], z: &[f64]) -> ExtReal {
        dispatch!(self, m => m.energy(t, u, z))
    }
    fn power(&self, t: f64, u: &[f64], z: &[f64]) -> f64 {
        dispatch!(self, m => m.power(t, u, z))
    }
    fn dissipation(&self, z: &[f64], z2: &[f64]) -> ExtReal {
        dispatch!(self, m => m.dissipation(z, z2))
    }
    fn correction(&self) -> &Correction {
        dispatch!(self, m => m.correction())
    }
    fn unidirectional(&self) -> bool {
        dispatch!(self, m => m.unidirectional())
    }
    fn reduce(&self, t: f64, z: &[f64], u: &mut [f64]) -> ExtReal {
        dispatch!(self, m => m.reduce(t, z, u))
    }
    fn closed_form_step(&self, t: f64, z_prev: &[f64], corr: &Correction) -> Option<Vec<f64>> {
        dispatch!(self, m => m.closed_form_step(t, z_prev, corr))
    }
    fn power_control(&self) -> Option<PowerControl> {
        dispatch!(self, m => m.power_control())
    }
}
