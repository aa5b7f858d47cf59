//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rivolve_core::jump::JumpSearchConfig;
use rivolve_core::models::{
    Damage1d, Damage1dSpec, Delamination0d, Delamination0dSpec, Model, Plasticity0d, Plasticity0dSpec, Toy1d,
    Toy1dSpec,
};
use rivolve_core::scheme::{SchemeConfig, SchemeKind};
use rivolve_core::verify::TolConfig;
use rivolve_core::{Correction, JumpDetection, MinimizerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    pub scheme: SchemeSection,
    #[serde(default)]
    pub minimizer: MinimizerConfig,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Toy1d(Toy1dSpec),
    Damage1d(Damage1dSpec),
    Plasticity0d(Plasticity0dSpec),
    Delamination0d(Delamination0dSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    E,
    Bv,
    Ve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeName,
    pub tau: f64,
    pub initial_z: Vec<f64>,
    /// Viscosity of the balanced-viscosity scheme.
    pub epsilon: Option<f64>,
    /// Correction of the visco-energetic scheme.
    pub correction: Option<Correction>,
    /// Overrides the model horizon.
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub minimality: f64,
    pub stability: f64,
    pub stability_tau2: f64,
    pub balance: f64,
    pub jump: f64,
    pub jump_gap_factor: f64,
    pub probes: usize,
    pub jump_threshold: f64,
    pub rate_floor: f64,
    pub dp_points: usize,
    pub dp_points_2d: usize,
    pub sliding_points: usize,
    pub max_chain_steps: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        let t = TolConfig::default();
        VerifySection {
            minimality: t.minimality,
            stability: t.stability,
            stability_tau2: t.stability_tau2,
            balance: t.balance,
            jump: t.jump,
            jump_gap_factor: t.jump_gap_factor,
            probes: t.probes,
            jump_threshold: t.jump_detection.threshold,
            rate_floor: t.jump_detection.rate_floor,
            dp_points: t.jump_search.dp_points,
            dp_points_2d: t.jump_search.dp_points_2d,
            sliding_points: t.jump_search.sliding_points,
            max_chain_steps: t.jump_search.max_chain_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), prefix: "run".into() }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scheme;
        if !(s.tau > 0.0 && s.tau.is_finite()) {
            bail!("scheme.tau must be a positive number, got {}", s.tau);
        }
        if let Some(h) = s.horizon {
            if !(h > 0.0) {
                bail!("scheme.horizon must be positive");
            }
        }
        match s.kind {
            SchemeName::Bv if s.epsilon.is_none() => bail!("scheme.epsilon is required for kind = \"bv\""),
            SchemeName::Bv if !(s.epsilon.unwrap_or(0.0) > 0.0) => bail!("scheme.epsilon must be positive"),
            SchemeName::E | SchemeName::Ve if s.epsilon.is_some() => {
                bail!("scheme.epsilon only applies to kind = \"bv\"")
            }
            SchemeName::E | SchemeName::Bv if s.correction.is_some() => {
                bail!("scheme.correction only applies to kind = \"ve\"")
            }
            _ => {}
        }
        if let Some(c) = &s.correction {
            c.validate().map_err(|e| anyhow::anyhow!("scheme.correction: {e}"))?;
        }
        self.minimizer.validate().map_err(|e| anyhow::anyhow!("minimizer: {e}"))?;
        let v = &self.verify;
        if v.probes < 2 || v.dp_points < 2 || v.dp_points_2d < 2 || v.sliding_points < 2 {
            bail!("verify: probes, dp_points, dp_points_2d and sliding_points must be at least 2");
        }
        let model = self.build_model()?;
        use rivolve_core::RisProblem;
        if s.initial_z.len() != model.n_z() {
            bail!("scheme.initial_z has {} entries, model has n_z = {}", s.initial_z.len(), model.n_z());
        }
        Ok(())
    }

    pub fn scheme_kind(&self) -> SchemeKind {
        match self.scheme.kind {
            SchemeName::E => SchemeKind::Energetic,
            SchemeName::Bv => SchemeKind::BalancedViscosity { epsilon: self.scheme.epsilon.unwrap_or(1.0) },
            SchemeName::Ve => {
                SchemeKind::ViscoEnergetic { correction: self.scheme.correction.clone().unwrap_or_default() }
            }
        }
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        let mut c = SchemeConfig::new(self.scheme_kind(), self.scheme.tau, self.scheme.initial_z.clone())
            .with_minimizer(MinimizerConfig { seed: self.seed, ..self.minimizer.clone() });
        c.horizon = self.scheme.horizon;
        c
    }

    /// Correction the scheme minimizes with.
    pub fn step_correction(&self) -> Correction {
        self.scheme_kind().correction(self.scheme.tau)
    }

    /// The model, carrying the scheme's correction.
    pub fn build_model(&self) -> Result<Model> {
        let corr = self.step_correction();
        let horizon = self.scheme.horizon;
        let m = match &self.model {
            ModelConfig::Toy1d(s) => {
                let mut s = s.clone();
                s.correction = corr;
                s.horizon = horizon.unwrap_or(s.horizon);
                Model::Toy1d(Toy1d::new(s)?)
            }
            ModelConfig::Damage1d(s) => {
                let mut s = s.clone();
                s.correction = corr;
                s.horizon = horizon.unwrap_or(s.horizon);
                Model::Damage1d(Damage1d::new(s)?)
            }
            ModelConfig::Plasticity0d(s) => {
                let mut s = s.clone();
                s.correction = corr;
                s.horizon = horizon.unwrap_or(s.horizon);
                Model::Plasticity0d(Plasticity0d::new(s)?)
            }
            ModelConfig::Delamination0d(s) => {
                let mut s = s.clone();
                s.correction = corr;
                s.horizon = horizon.unwrap_or(s.horizon);
                Model::Delamination0d(Delamination0d::new(s)?)
            }
        };
        Ok(m)
    }

    pub fn tol_config(&self) -> TolConfig {
        let v = &self.verify;
        let minimizer = MinimizerConfig { seed: self.seed, ..self.minimizer.clone() };
        TolConfig {
            minimality: v.minimality,
            stability: v.stability,
            stability_tau2: v.stability_tau2,
            balance: v.balance,
            jump: v.jump,
            jump_gap_factor: v.jump_gap_factor,
            probes: v.probes,
            jump_detection: JumpDetection {
                threshold: v.jump_threshold,
                rate_floor: v.rate_floor,
                tail_tol: v.stability,
                tail_tol_tau2: v.stability_tau2,
            },
            jump_search: JumpSearchConfig {
                minimizer: minimizer.clone(),
                dp_points: v.dp_points,
                dp_points_2d: v.dp_points_2d,
                sliding_points: v.sliding_points,
                max_chain_steps: v.max_chain_steps,
                ..Default::default()
            },
            minimizer,
        }
    }

    pub fn out_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        override_dir.map(Path::to_path_buf).unwrap_or_else(|| self.output.dir.clone())
    }
}
