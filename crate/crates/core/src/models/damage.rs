use alloc::vec;
use alloc::vec::Vec;

use super::Affine;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::problem::{Correction, Dissipation, Interval, PowerControl, RisProblem};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Damage1dSpec {
    /// Number of cells `N` on `[0, 1]`.
    pub cells: usize,
    /// Undamaged stiffness per cell; a single entry is broadcast.
    pub stiffness: Vec<f64>,
    /// Residual stiffness fraction `η`.
    pub eta: f64,
    /// Gradient exponent `r`.
    pub r: f64,
    pub grad_weight: f64,
    /// Dissipation density per cell; a single entry is broadcast.
    pub kappa: Vec<f64>,
    /// Displacement `w_D(t)` of the right end; the left end is clamped.
    pub boundary: Affine,
    pub horizon: f64,
    pub correction: Correction,
}

impl Default for Damage1dSpec {
    fn default() -> Self {
        Damage1dSpec {
            cells: 2,
            stiffness: vec![1.0],
            eta: 0.1,
            r: 2.0,
            grad_weight: 0.01,
            kappa: vec![0.5],
            boundary: Affine::new(0.0, 2.0),
            horizon: 1.0,
            correction: Correction::Zero,
        }
    }
}

/// Gradient damage of a bar on `N` cells.
///
/// `E = Σ h·½E₀(η + (1−η)z_i)e_i² + w_g Σ |z_{i+1} − z_i|^r/(r h^{r−1})` with
/// `z_i ∈ [0, 1]`; `z = 1` is sound material. Healing is forbidden.
#[derive(Debug, Clone, PartialEq)]
pub struct Damage1d {
    spec: Damage1dSpec,
    stiffness: Vec<f64>,
    diss: Dissipation,
    z_box: Vec<Interval>,
    h: f64,
}

fn broadcast(v: &[f64], n: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v.to_vec()),
        k => Err(Error::InvalidConfig(alloc::format!("damage1d: {what} has {k} entries, expected 1 or {n}"))),
    }
}

impl Damage1d {
    pub fn new(spec: Damage1dSpec) -> Result<Self> {
        let n = spec.cells;
        if n == 0 {
            return Err(Error::InvalidConfig("damage1d: cells must be >= 1".into()));
        }
        if !(spec.eta > 0.0 && spec.eta < 1.0) {
            return Err(Error::InvalidConfig("damage1d: eta must lie in (0, 1)".into()));
        }
        if !(spec.r > 1.0 && spec.grad_weight >= 0.0 && spec.horizon > 0.0) {
            return Err(Error::InvalidConfig("damage1d: need r > 1, grad_weight >= 0, horizon > 0".into()));
        }
        let stiffness = broadcast(&spec.stiffness, n, "stiffness")?;
        let kappa = broadcast(&spec.kappa, n, "kappa")?;
        if stiffness.iter().any(|e| !(*e > 0.0)) || kappa.iter().any(|k| !(*k > 0.0)) {
            return Err(Error::InvalidConfig("damage1d: stiffness and kappa must be > 0".into()));
        }
        spec.correction.validate()?;
        let h = 1.0 / n as f64;
        let diss = Dissipation::Unidirectional { weights: kappa.iter().map(|k| k * h).collect() };
        Ok(Damage1d { stiffness, diss, z_box: vec![Interval::new(0.0, 1.0); n], h, spec })
    }

    pub fn spec(&self) -> &Damage1dSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn with_correction(mut self, c: Correction) -> Self {
        self.spec.correction = c;
        self
    }

    /// The `L^q`-type correction `(1/q)(Σ h|Δz_i|^q)^(γ/q)` on this mesh.
    pub fn lq_correction(&self, q: f64, gamma: f64) -> Correction {
        Correction::PowerLq { q, gamma, weights: vec![self.h; self.spec.cells] }
    }

    fn cell_stiffness(&self, i: usize, z: f64) -> f64 {
        self.stiffness[i] * (self.spec.eta + (1.0 - self.spec.eta) * z)
    }

    pub fn gradient_energy(&self, z: &[f64]) -> f64 {
        let r = self.spec.r;
        let c = self.spec.grad_weight / (r * libm::pow(self.h, r - 1.0));
        z.windows(2).map(|w| c * libm::pow((w[1] - w[0]).abs(), r)).sum()
    }

    /// Strains `e_i` of the nodal displacement `[0, u…, w_D(t)]`.
    pub fn strains(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let n = self.spec.cells;
        let node = |i: usize| if i == 0 { 0.0 } else if i == n { self.spec.boundary.at(t) } else { u[i - 1] };
        (0..n).map(|i| (node(i + 1) - node(i)) / self.h).collect()
    }

    fn in_domain(z: &[f64]) -> bool {
        z.iter().all(|&x| (0.0..=1.0).contains(&x))
    }
}

impl RisProblem for Damage1d {
    fn n_u(&self) -> usize {
        self.spec.cells - 1
    }
    fn n_z(&self) -> usize {
        self.spec.cells
    }
    fn horizon(&self) -> f64 {
        self.spec.horizon
    }
    fn z_box(&self) -> &[Interval] {
        &self.z_box
    }
    fn energy(&self, t: f64, u: &[f64], z: &[f64]) -> ExtReal {
        if !Self::in_domain(z) {
            return ExtReal::Infinity;
        }
        let n = self.spec.cells;
        let w = self.spec.boundary.at(t);
        let mut prev = 0.0;
        let mut el = 0.0;
        for i in 0..n {
            let next = if i + 1 == n { w } else { u[i] };
            let e = (next - prev) / self.h;
            el += self.h * 0.5 * self.cell_stiffness(i, z[i]) * e * e;
            prev = next;
        }
        ExtReal::new(el + self.gradient_energy(z))
    }
    fn power(&self, t: f64, u: &[f64], z: &[f64]) -> f64 {
        let n = self.spec.cells;
        let left = if n == 1 { 0.0 } else { u[n - 2] };
        let e = (self.spec.boundary.at(t) - left) / self.h;
        self.cell_stiffness(n - 1, z[n - 1]) * e * self.spec.boundary.rate()
    }
    fn dissipation(&self, z: &[f64], z2: &[f64]) -> ExtReal {
        self.diss.eval(z, z2)
    }
    fn correction(&self) -> &Correction {
        &self.spec.correction
    }
    fn unidirectional(&self) -> bool {
        true
    }
    /// Springs in series: the tridiagonal equilibrium system has the explicit
    /// solution of a uniform stress `σ = w_D / Σ h/c_i`.
    fn reduce(&self, t: f64, z: &[f64], u: &mut [f64]) -> ExtReal {
        if !Self::in_domain(z) {
            return ExtReal::Infinity;
        }
        let n = self.spec.cells;
        let w = self.spec.boundary.at(t);
        let compliance: f64 = (0..n).map(|i| self.h / self.cell_stiffness(i, z[i])).sum();
        let sigma = w / compliance;
        let mut x = 0.0;
        for i in 0..n - 1 {
            x += sigma * self.h / self.cell_stiffness(i, z[i]);
            u[i] = x;
        }
        ExtReal::new(0.5 * w * sigma + self.gradient_energy(z))
    }
    fn power_control(&self) -> Option<PowerControl> {
        let cmax = self.stiffness.iter().fold(0.0f64, |a, &b| a.max(b));
        let rate = self.spec.boundary.rate();
        // Young: |c e w'| ≤ h c e²/2 + c w'²/(2h)
        Some(PowerControl {
            lambda: 1.0,
            offset: 1.0 + cmax * rate * rate / (2.0 * self.h),
            z_ref: vec![1.0; self.spec.cells],
        })
    }
}
