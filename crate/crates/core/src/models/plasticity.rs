use alloc::vec;
use alloc::vec::Vec;

use super::{quadratic_curvature, soft_threshold_step, Affine};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::problem::{Correction, Interval, PowerControl, RisProblem};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Plasticity0dSpec {
    /// Elastic modulus `C`.
    pub modulus: f64,
    /// Yield stress; the elastic domain is `[−σ_y, σ_y]`.
    pub sigma_y: f64,
    /// Total strain program `ε(t)`.
    pub strain: Affine,
    /// Admissible plastic strains.
    pub p_box: Interval,
    pub horizon: f64,
    pub correction: Correction,
}

impl Default for Plasticity0dSpec {
    fn default() -> Self {
        Plasticity0dSpec {
            modulus: 1.0,
            sigma_y: 1.0,
            strain: Affine::new(0.0, 1.0),
            p_box: Interval::new(-5.0, 5.0),
            horizon: 2.0,
            correction: Correction::Zero,
        }
    }
}

/// Scalar perfect plasticity: `E = ½C(ε(t) − p)²`, `d = σ_y|p' − p|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plasticity0d {
    spec: Plasticity0dSpec,
    z_box: [Interval; 1],
}

impl Plasticity0d {
    pub fn new(spec: Plasticity0dSpec) -> Result<Self> {
        if !(spec.modulus > 0.0 && spec.sigma_y > 0.0) {
            return Err(Error::InvalidConfig("plasticity0d: modulus and sigma_y must be > 0".into()));
        }
        if !(spec.p_box.lo < spec.p_box.hi) || !(spec.horizon > 0.0) {
            return Err(Error::InvalidConfig("plasticity0d: bad p_box or horizon".into()));
        }
        spec.correction.validate()?;
        let z_box = [spec.p_box];
        Ok(Plasticity0d { spec, z_box })
    }

    pub fn spec(&self) -> &Plasticity0dSpec {
        &self.spec
    }

    pub fn with_correction(mut self, c: Correction) -> Self {
        self.spec.correction = c;
        self
    }

    /// `σ = C(ε(t) − p)`.
    pub fn stress(&self, t: f64, p: f64) -> f64 {
        self.spec.modulus * (self.spec.strain.at(t) - p)
    }
}

impl RisProblem for Plasticity0d {
    fn n_u(&self) -> usize {
        0
    }
    fn n_z(&self) -> usize {
        1
    }
    fn horizon(&self) -> f64 {
        self.spec.horizon
    }
    fn z_box(&self) -> &[Interval] {
        &self.z_box
    }
    fn energy(&self, t: f64, _u: &[f64], z: &[f64]) -> ExtReal {
        if !self.spec.p_box.contains(z[0]) {
            return ExtReal::Infinity;
        }
        let e = self.spec.strain.at(t) - z[0];
        ExtReal::new(0.5 * self.spec.modulus * e * e)
    }
    fn power(&self, t: f64, _u: &[f64], z: &[f64]) -> f64 {
        self.stress(t, z[0]) * self.spec.strain.rate()
    }
    fn dissipation(&self, z: &[f64], z2: &[f64]) -> ExtReal {
        ExtReal::Finite(self.spec.sigma_y * (z2[0] - z[0]).abs())
    }
    fn correction(&self) -> &Correction {
        &self.spec.correction
    }
    fn reduce(&self, t: f64, z: &[f64], _u: &mut [f64]) -> ExtReal {
        self.energy(t, &[], z)
    }
    fn closed_form_step(&self, t: f64, z_prev: &[f64], corr: &Correction) -> Option<Vec<f64>> {
        let m = quadratic_curvature(corr, self.spec.sigma_y)?;
        let c = self.spec.modulus;
        Some(vec![soft_threshold_step(c, c * self.spec.strain.at(t), self.spec.sigma_y, m, z_prev[0], &self.spec.p_box)])
    }
    fn power_control(&self) -> Option<PowerControl> {
        let pmax = self.spec.p_box.lo.abs().max(self.spec.p_box.hi.abs());
        let emax = self.spec.strain.sup_abs(self.spec.horizon);
        let bound = self.spec.modulus * (emax + pmax) * self.spec.strain.rate().abs();
        Some(PowerControl { lambda: 1.0, offset: 1.0 + bound, z_ref: vec![0.0] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{eval_energy, eval_power, State};

    #[test]
    fn examples() {
        let m = Plasticity0d::new(Plasticity0dSpec::default()).unwrap();
        let s = |p: f64| State::new(vec![], vec![p]);
        assert_eq!(eval_energy(&m, 2.0, &s(0.0)).unwrap(), ExtReal::Finite(2.0));
        assert_eq!(m.dissipation(&[0.0], &[1.0]), ExtReal::Finite(1.0));
        assert_eq!(m.stress(2.0, 0.5), 1.5);
        assert!((eval_power(&m, 0.5, &s(0.0)).unwrap() - 0.5).abs() < 1e-15);
    }
}
