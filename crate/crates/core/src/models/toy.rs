use alloc::vec;
use alloc::vec::Vec;

use super::{quadratic_curvature, soft_threshold_step, Affine};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::problem::{Correction, Interval, PowerControl, RisProblem};

/// Shape of the stored energy `W(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum Well {
    /// `(a/2) z²`.
    Convex { a: f64 },
    /// `b ((z/w)² − 1)²`, wells at `±w`.
    DoubleWell { b: f64, w: f64 },
    /// `W ≡ level`; a degenerate case for testing.
    Flat { level: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Toy1dSpec {
    pub well: Well,
    /// Load `ℓ(t)` in `E = W(z) − ℓ(t) z`.
    pub load: Affine,
    /// Dissipation `κ|z' − z|`.
    pub kappa: f64,
    pub z_box: Interval,
    /// Adds `ℓ(t)²/(2a)` (convex well only) so that `E = (a/2)(z − ℓ/a)²`.
    pub complete_square: bool,
    pub horizon: f64,
    pub correction: Correction,
}

impl Default for Toy1dSpec {
    fn default() -> Self {
        Toy1dSpec {
            well: Well::Convex { a: 1.0 },
            load: Affine::new(0.0, 2.0),
            kappa: 1.0,
            z_box: Interval::new(-4.0, 4.0),
            complete_square: false,
            horizon: 1.0,
            correction: Correction::Zero,
        }
    }
}

/// One-dimensional toy `E(t, z) = W(z) − ℓ(t) z`, `d = κ|·|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Toy1d {
    spec: Toy1dSpec,
    z_box: [Interval; 1],
}

impl Toy1d {
    pub fn new(spec: Toy1dSpec) -> Result<Self> {
        if !(spec.kappa > 0.0) {
            return Err(Error::InvalidConfig("toy1d: kappa must be > 0".into()));
        }
        match spec.well {
            Well::Convex { a } if !(a > 0.0) => {
                return Err(Error::InvalidConfig("toy1d: convex curvature must be > 0".into()))
            }
            Well::DoubleWell { b, w } if !(b > 0.0 && w > 0.0) => {
                return Err(Error::InvalidConfig("toy1d: double well needs b > 0, w > 0".into()))
            }
            Well::Flat { .. } if spec.load != Affine::default() => {
                return Err(Error::InvalidConfig("toy1d: flat well must not be loaded".into()))
            }
            _ => {}
        }
        if spec.complete_square && !matches!(spec.well, Well::Convex { .. }) {
            return Err(Error::InvalidConfig("toy1d: complete_square needs a convex well".into()));
        }
        if !(spec.z_box.lo < spec.z_box.hi) || !spec.z_box.lo.is_finite() || !spec.z_box.hi.is_finite() {
            return Err(Error::InvalidConfig("toy1d: z_box must be a bounded nonempty interval".into()));
        }
        if !(spec.horizon > 0.0) {
            return Err(Error::InvalidConfig("toy1d: horizon must be > 0".into()));
        }
        spec.correction.validate()?;
        let z_box = [spec.z_box];
        Ok(Toy1d { spec, z_box })
    }

    /// Convex well `(a/2)z²`, load `ℓ(t) = slope·t`, `d = κ|·|`, box `[−4, 4]`.
    pub fn convex_play(a: f64, slope: f64, kappa: f64) -> Self {
        Toy1d::new(Toy1dSpec {
            well: Well::Convex { a },
            load: Affine::new(0.0, slope),
            kappa,
            ..Default::default()
        })
        .expect("valid toy spec")
    }

    /// Unloaded convex well on `[−half_width, half_width]`.
    pub fn autonomous_quadratic(a: f64, kappa: f64, half_width: f64) -> Self {
        Toy1d::new(Toy1dSpec {
            well: Well::Convex { a },
            load: Affine::default(),
            kappa,
            z_box: Interval::new(-half_width, half_width),
            ..Default::default()
        })
        .expect("valid toy spec")
    }

    pub fn double_well(b: f64, w: f64, kappa: f64, slope: f64) -> Self {
        Toy1d::new(Toy1dSpec {
            well: Well::DoubleWell { b, w },
            load: Affine::new(0.0, slope),
            kappa,
            ..Default::default()
        })
        .expect("valid toy spec")
    }

    pub fn constant(level: f64) -> Self {
        Toy1d::new(Toy1dSpec { well: Well::Flat { level }, load: Affine::default(), ..Default::default() })
            .expect("valid toy spec")
    }

    pub fn with_complete_square(mut self) -> Self {
        self.spec.complete_square = true;
        Toy1d::new(self.spec).expect("valid toy spec")
    }

    pub fn with_correction(mut self, c: Correction) -> Self {
        self.spec.correction = c;
        self
    }

    pub fn with_box(mut self, iv: Interval) -> Self {
        self.spec.z_box = iv;
        self.z_box = [iv];
        self
    }

    pub fn with_horizon(mut self, t: f64) -> Self {
        self.spec.horizon = t;
        self
    }

    pub fn spec(&self) -> &Toy1dSpec {
        &self.spec
    }

    pub fn well_energy(&self, z: f64) -> f64 {
        match self.spec.well {
            Well::Convex { a } => 0.5 * a * z * z,
            Well::DoubleWell { b, w } => {
                let s = (z / w) * (z / w) - 1.0;
                b * s * s
            }
            Well::Flat { level } => level,
        }
    }

    /// `W'(z)`.
    pub fn well_slope(&self, z: f64) -> f64 {
        match self.spec.well {
            Well::Convex { a } => a * z,
            Well::DoubleWell { b, w } => 4.0 * b * z * ((z / w) * (z / w) - 1.0) / (w * w),
            Well::Flat { .. } => 0.0,
        }
    }

    fn shift(&self, t: f64) -> f64 {
        match (self.spec.complete_square, self.spec.well) {
            (true, Well::Convex { a }) => {
                let l = self.spec.load.at(t);
                l * l / (2.0 * a)
            }
            _ => 0.0,
        }
    }
}

impl RisProblem for Toy1d {
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
        let z = z[0];
        if !self.spec.z_box.contains(z) {
            return ExtReal::Infinity;
        }
        ExtReal::new(self.well_energy(z) - self.spec.load.at(t) * z + self.shift(t))
    }
    fn power(&self, t: f64, _u: &[f64], z: &[f64]) -> f64 {
        let rate = self.spec.load.rate();
        let mut p = -rate * z[0];
        if let (true, Well::Convex { a }) = (self.spec.complete_square, self.spec.well) {
            p += self.spec.load.at(t) * rate / a;
        }
        p
    }
    fn dissipation(&self, z: &[f64], z2: &[f64]) -> ExtReal {
        ExtReal::Finite(self.spec.kappa * (z2[0] - z[0]).abs())
    }
    fn correction(&self) -> &Correction {
        &self.spec.correction
    }
    fn reduce(&self, t: f64, z: &[f64], _u: &mut [f64]) -> ExtReal {
        self.energy(t, &[], z)
    }
    fn closed_form_step(&self, t: f64, z_prev: &[f64], corr: &Correction) -> Option<Vec<f64>> {
        let Well::Convex { a } = self.spec.well else { return None };
        let m = quadratic_curvature(corr, self.spec.kappa)?;
        Some(vec![soft_threshold_step(a, self.spec.load.at(t), self.spec.kappa, m, z_prev[0], &self.spec.z_box)])
    }
    fn power_control(&self) -> Option<PowerControl> {
        let zmax = self.spec.z_box.lo.abs().max(self.spec.z_box.hi.abs());
        let lmax = self.spec.load.sup_abs(self.spec.horizon);
        let rate = self.spec.load.rate().abs();
        let mut pmax = rate * zmax;
        if let (true, Well::Convex { a }) = (self.spec.complete_square, self.spec.well) {
            pmax += lmax * rate / a;
        }
        let wmin = match self.spec.well {
            Well::Flat { level } => level,
            _ => 0.0,
        };
        Some(PowerControl { lambda: 1.0, offset: 1.0 + pmax + (-wmin).max(0.0) + lmax * zmax, z_ref: vec![0.0] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{eval_energy, eval_power, State};

    fn s(z: f64) -> State {
        State::new(vec![], vec![z])
    }

    #[test]
    fn energy_examples() {
        let sq = Toy1d::convex_play(1.0, 2.0, 1.0).with_complete_square();
        assert_eq!(eval_energy(&sq, 0.0, &s(0.0)).unwrap(), ExtReal::Finite(0.0));
        assert_eq!(eval_energy(&sq, 1.0, &s(0.0)).unwrap(), ExtReal::Finite(2.0));
        assert!((eval_power(&sq, 1.0, &s(0.0)).unwrap() - 4.0).abs() < 1e-15);

        let p = Toy1d::convex_play(1.0, 2.0, 1.0);
        assert_eq!(eval_energy(&p, 0.5, &s(1.0)).unwrap(), ExtReal::Finite(-0.5));
        assert_eq!(eval_power(&p, 0.3, &s(3.0)).unwrap(), -6.0);
        assert_eq!(eval_energy(&p, 0.5, &s(5.0)).unwrap(), ExtReal::Infinity);

        let dw = Toy1d::double_well(1.0, 1.0, 1.0, 2.0);
        assert_eq!(eval_energy(&dw, 0.0, &s(1.0)).unwrap(), eval_energy(&dw, 0.0, &s(-1.0)).unwrap());
    }

    #[test]
    fn autonomous_power_vanishes() {
        let p = Toy1d::autonomous_quadratic(1.0, 1.0, 4.0);
        for (t, z) in [(0.0, 1.0), (0.7, -2.0), (1.0, 3.5)] {
            assert_eq!(eval_power(&p, t, &s(z)).unwrap(), 0.0);
        }
        assert!(eval_power(&p, 0.5, &s(9.0)).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = Toy1d::convex_play(1.0, 2.0, 1.0);
        assert!(eval_energy(&p, 0.0, &State::new(vec![], vec![0.0, 1.0])).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(Toy1d::new(Toy1dSpec { kappa: 0.0, ..Default::default() }).is_err());
        assert!(Toy1d::new(Toy1dSpec { well: Well::Convex { a: -1.0 }, ..Default::default() }).is_err());
    }

    #[test]
    fn double_well_slope_matches_difference_quotient() {
        let p = Toy1d::double_well(1.3, 0.7, 1.0, 2.0);
        for z in [-1.2, -0.3, 0.1, 0.9] {
            let h = 1e-6;
            let fd = (p.well_energy(z + h) - p.well_energy(z - h)) / (2.0 * h);
            assert!((fd - p.well_slope(z)).abs() < 1e-6);
        }
    }
}
