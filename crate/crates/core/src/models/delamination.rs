use alloc::vec;
use alloc::vec::Vec;

use super::Affine;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::problem::{Correction, Interval, PowerControl, RisProblem};

/// Interface law between the two springs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum Interface {
    /// `z·[u] = 0`; bonding counts as broken below `z_tol`.
    Brittle { z_tol: f64 },
    /// Penalty `(k/2) z [u]²`.
    Adhesive { k: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Delamination0dSpec {
    /// Spring between the clamped wall and the interface.
    pub k_minus: f64,
    /// Spring between the interface and the loaded end.
    pub k_plus: f64,
    pub interface: Interface,
    /// Stored adhesive energy, enters as `−a₀ z`.
    pub a0: f64,
    pub kappa: f64,
    /// Prescribed displacement `ℓ(t)` of the loaded end.
    pub load: Affine,
    pub horizon: f64,
    pub correction: Correction,
}

impl Default for Delamination0dSpec {
    fn default() -> Self {
        Delamination0dSpec {
            k_minus: 1.0,
            k_plus: 1.0,
            interface: Interface::Brittle { z_tol: 1e-12 },
            a0: 1.0,
            kappa: 0.5,
            load: Affine::new(0.0, 5.0),
            horizon: 1.0,
            correction: Correction::Zero,
        }
    }
}

/// Two springs glued at an interface with bonding `z ∈ [0, 1]`.
///
/// `u = (u₁, u₂)` are the displacements on either side of the interface,
/// `[u] = u₂ − u₁ ≥ 0` (no interpenetration).
#[derive(Debug, Clone, PartialEq)]
pub struct Delamination0d {
    spec: Delamination0dSpec,
    z_box: [Interval; 1],
}

impl Delamination0d {
    pub fn new(spec: Delamination0dSpec) -> Result<Self> {
        if !(spec.k_minus > 0.0 && spec.k_plus > 0.0) {
            return Err(Error::InvalidConfig("delamination0d: spring stiffnesses must be > 0".into()));
        }
        match spec.interface {
            Interface::Adhesive { k } if !(k > 0.0) => {
                return Err(Error::InvalidConfig("delamination0d: adhesive k must be > 0".into()))
            }
            Interface::Brittle { z_tol } if !(z_tol >= 0.0 && z_tol < 1.0) => {
                return Err(Error::InvalidConfig("delamination0d: z_tol must lie in [0, 1)".into()))
            }
            _ => {}
        }
        if !(spec.a0 >= 0.0 && spec.kappa > 0.0 && spec.horizon > 0.0) {
            return Err(Error::InvalidConfig("delamination0d: need a0 >= 0, kappa > 0, horizon > 0".into()));
        }
        spec.correction.validate()?;
        Ok(Delamination0d { spec, z_box: [Interval::new(0.0, 1.0)] })
    }

    pub fn spec(&self) -> &Delamination0dSpec {
        &self.spec
    }

    pub fn with_correction(mut self, c: Correction) -> Self {
        self.spec.correction = c;
        self
    }

    pub fn with_interface(mut self, i: Interface) -> Result<Self> {
        self.spec.interface = i;
        Delamination0d::new(self.spec)
    }

    pub fn is_brittle(&self) -> bool {
        matches!(self.spec.interface, Interface::Brittle { .. })
    }

    /// `z [u]²`.
    pub fn constraint_violation(&self, u: &[f64], z: f64) -> f64 {
        let j = u[1] - u[0];
        z * j * j
    }

    /// Stiffness of the two springs in series.
    pub fn series_stiffness(&self) -> f64 {
        let (a, b) = (self.spec.k_minus, self.spec.k_plus);
        a * b / (a + b)
    }

    fn bonded(&self, z: f64) -> bool {
        match self.spec.interface {
            Interface::Brittle { z_tol } => z > z_tol,
            Interface::Adhesive { .. } => false,
        }
    }

    fn elastic(&self, l: f64, u1: f64, u2: f64, z: f64) -> f64 {
        let mut e = 0.5 * self.spec.k_minus * u1 * u1 + 0.5 * self.spec.k_plus * (l - u2) * (l - u2);
        if let Interface::Adhesive { k } = self.spec.interface {
            let j = u2 - u1;
            e += 0.5 * k * z * j * j;
        }
        e
    }
}

impl RisProblem for Delamination0d {
    fn n_u(&self) -> usize {
        2
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
    fn energy(&self, t: f64, u: &[f64], z: &[f64]) -> ExtReal {
        let z = z[0];
        if !(0.0..=1.0).contains(&z) {
            return ExtReal::Infinity;
        }
        let j = u[1] - u[0];
        if j < 0.0 || (self.bonded(z) && j != 0.0) {
            return ExtReal::Infinity;
        }
        ExtReal::new(self.elastic(self.spec.load.at(t), u[0], u[1], z) - self.spec.a0 * z)
    }
    fn power(&self, t: f64, u: &[f64], _z: &[f64]) -> f64 {
        self.spec.k_plus * (self.spec.load.at(t) - u[1]) * self.spec.load.rate()
    }
    fn dissipation(&self, z: &[f64], z2: &[f64]) -> ExtReal {
        if z2[0] > z[0] {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(self.spec.kappa * (z[0] - z2[0]))
        }
    }
    fn correction(&self) -> &Correction {
        &self.spec.correction
    }
    fn unidirectional(&self) -> bool {
        true
    }
    fn reduce(&self, t: f64, z: &[f64], u: &mut [f64]) -> ExtReal {
        let zz = z[0];
        if !(0.0..=1.0).contains(&zz) {
            return ExtReal::Infinity;
        }
        let (km, kp) = (self.spec.k_minus, self.spec.k_plus);
        let l = self.spec.load.at(t);
        let s = match self.spec.interface {
            Interface::Adhesive { k } => k * zz,
            Interface::Brittle { .. } => 0.0,
        };
        let (mut u1, mut u2) = (0.0, 0.0);
        let mut free = !self.bonded(zz);
        if free {
            let det = km * kp + s * (km + kp);
            u1 = s * kp * l / det;
            u2 = (km + s) * kp * l / det;
            free = u2 - u1 >= 0.0;
        }
        if !free {
            let v = kp * l / (km + kp);
            u1 = v;
            u2 = v;
        }
        u[0] = u1;
        u[1] = u2;
        ExtReal::new(self.elastic(l, u1, u2, zz) - self.spec.a0 * zz)
    }
    fn power_control(&self) -> Option<PowerControl> {
        let r = self.spec.load.rate();
        // Young: |k₊(ℓ − u₂)ℓ'| ≤ ½k₊(ℓ − u₂)² + ½k₊ℓ'², and −a₀z ≥ −a₀
        Some(PowerControl { lambda: 1.0, offset: 1.0 + self.spec.a0 + 0.5 * self.spec.k_plus * r * r, z_ref: vec![1.0] })
    }
}

impl Delamination0d {
    /// Minimizing `u` at `(t, z)`.
    pub fn equilibrium(&self, t: f64, z: f64) -> Vec<f64> {
        let mut u = vec![0.0; 2];
        self.reduce(t, &[z], &mut u);
        u
    }
}
