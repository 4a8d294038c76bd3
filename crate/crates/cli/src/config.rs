//! Experiment configuration: a TOML document with a fixed key schema.
//!
//! Unknown keys are rejected. Every key has a default, so an empty document
//! is the FitzHugh–Nagumo preset.

use anyhow::{bail, Context, Result};
use log::warn;
use serde::{Deserialize, Serialize};

use smallnoise_core::analysis::OrderStudyConfig;
use smallnoise_core::levy::{step_count, MarkLaw};
use smallnoise_core::problem::{
    CustomParams, FhnParams, JumpDirection, NoiseParams, Problem, Profile, QSpec, ScalarParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fhn,
    Scalar,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub preset: Preset,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self { preset: Preset::Fhn }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_nodes: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n_nodes: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosineProfile {
    pub mean: f64,
    pub amplitude: f64,
    pub mode: u32,
}

/// A constant, a table of nodal values, or `mean + amplitude cos(mode pi x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileValue {
    Constant(f64),
    Table(Vec<f64>),
    Cosine(CosineProfile),
}

impl ProfileValue {
    fn to_profile(&self) -> Profile {
        match self {
            ProfileValue::Constant(v) => Profile::Constant(*v),
            ProfileValue::Table(v) => Profile::Nodal(v.clone()),
            ProfileValue::Cosine(c) => Profile::Cosine {
                mean: c.mean,
                amplitude: c.amplitude,
                mode: c.mode,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FhnSection {
    pub c: ProfileValue,
    pub p: ProfileValue,
    pub gamma: f64,
    pub alpha: f64,
    pub xi: f64,
    pub v0: ProfileValue,
    pub w0: ProfileValue,
}

impl Default for FhnSection {
    fn default() -> Self {
        Self {
            c: ProfileValue::Constant(1.0),
            p: ProfileValue::Constant(1.0),
            gamma: 1.0,
            alpha: 1.0,
            xi: 0.5,
            v0: ProfileValue::Cosine(CosineProfile {
                mean: 0.6,
                amplitude: 0.3,
                mode: 1,
            }),
            w0: ProfileValue::Constant(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalarSection {
    pub a: f64,
    pub xi: f64,
    /// Overrides the cubic when present.
    pub coefficients: Option<Vec<f64>>,
    pub u0: f64,
}

impl Default for ScalarSection {
    fn default() -> Self {
        Self {
            a: -1.0,
            xi: 0.5,
            coefficients: None,
            u0: 0.8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CustomSection {
    pub matrix: Vec<Vec<f64>>,
    pub component_weights: Vec<f64>,
    pub node_weights: Option<Vec<f64>>,
    pub coefficients: Vec<Vec<f64>>,
    pub u0: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkKind {
    TwoPoint,
    Uniform,
    DoubleExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionKind {
    /// Constant on every component.
    Constant,
    /// A uniformly chosen node of `spread_component`.
    NodeSpread,
    /// `direction_entries`, one value per state entry.
    Entries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub intensity: f64,
    pub mark_law: MarkKind,
    /// Half-width `a` for the bounded laws, scale `b` for the double exponential.
    pub mark_scale: f64,
    pub direction: DirectionKind,
    pub spread_component: usize,
    pub direction_entries: Option<Vec<f64>>,
    pub q_trace: f64,
    /// Overrides `q_trace` when present.
    pub q_diagonal: Option<Vec<f64>>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            intensity: 5.0,
            mark_law: MarkKind::TwoPoint,
            mark_scale: 1.0,
            direction: DirectionKind::Constant,
            spread_component: 0,
            direction_entries: None,
            q_trace: 1.0,
            q_diagonal: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Horizon; 0.5 for the FHN preset, 1 otherwise.
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub dt: f64,
    pub n: usize,
    pub p: u32,
    pub epsilons: Vec<f64>,
    /// Noise level of `simulate` and of the remainder in `expand`.
    pub epsilon: f64,
    pub paths: usize,
    pub path_index: u64,
    pub master_seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        let study = OrderStudyConfig::default();
        Self {
            horizon: None,
            dt: 1e-3,
            n: study.n,
            p: study.p,
            epsilons: study.epsilons,
            epsilon: 0.1,
            paths: study.paths,
            path_index: 0,
            master_seed: study.master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    /// Keep every `stride`-th time step; the last step is always kept.
    pub stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub fhn: FhnSection,
    pub scalar: ScalarSection,
    pub custom: CustomSection,
    pub noise: NoiseSection,
    pub run: RunSection,
    pub output: OutputSection,
}

/// Derived quantities and warnings gathered while loading.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub omega: f64,
    pub eta: f64,
    pub omega_minus_eta: f64,
    pub strictly_dissipative: bool,
    pub warnings: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).context("malformed configuration document")?;
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("{path}: {}", e.into_inner().message())
    })?;
    cfg.resolve_defaults();
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn horizon(&self) -> f64 {
        self.run.horizon.unwrap_or(match self.problem.preset {
            Preset::Fhn => 0.5,
            Preset::Scalar | Preset::Custom => 1.0,
        })
    }

    fn resolve_defaults(&mut self) {
        self.run.horizon = Some(self.horizon());
    }

    /// Checks that need no assembly.
    pub fn validate(&self) -> Result<()> {
        let horizon = self.horizon();
        if !(horizon.is_finite() && horizon > 0.0) {
            bail!("run.T: horizon must be positive, got {horizon}");
        }
        if !(self.run.dt.is_finite() && self.run.dt > 0.0) {
            bail!("run.dt: step must be positive, got {}", self.run.dt);
        }
        step_count(horizon, self.run.dt)
            .map_err(|_| anyhow::anyhow!("run.dt: {} does not divide T = {horizon}", self.run.dt))?;
        if self.run.paths == 0 {
            bail!("run.paths: must be at least 1");
        }
        if !(self.run.epsilon.is_finite() && self.run.epsilon >= 0.0) {
            bail!("run.epsilon: must be non-negative, got {}", self.run.epsilon);
        }
        if self.output.stride == 0 {
            bail!("output.stride: must be at least 1");
        }
        match self.problem.preset {
            Preset::Fhn => {
                let xi = self.fhn.xi;
                if !(xi > 0.0 && xi < 1.0) {
                    bail!("fhn.xi: must lie in the open interval (0, 1), got {xi}");
                }
                if !(self.fhn.gamma > 0.0 && self.fhn.alpha > 0.0) {
                    bail!("fhn.gamma, fhn.alpha: must be strictly positive");
                }
            }
            Preset::Scalar => {
                let xi = self.scalar.xi;
                if self.scalar.coefficients.is_none() && !(xi > 0.0 && xi < 1.0) {
                    bail!("scalar.xi: must lie in the open interval (0, 1), got {xi}");
                }
            }
            Preset::Custom => {
                if self.custom.matrix.is_empty() {
                    bail!("custom.matrix: required for the custom preset");
                }
            }
        }
        Ok(())
    }

    pub fn study_config(&self) -> OrderStudyConfig {
        OrderStudyConfig {
            epsilons: self.run.epsilons.clone(),
            n: self.run.n,
            p: self.run.p,
            paths: self.run.paths,
            master_seed: self.run.master_seed,
        }
    }

    fn noise_params(&self) -> Result<NoiseParams> {
        let s = &self.noise;
        let mark_law = match s.mark_law {
            MarkKind::TwoPoint => MarkLaw::TwoPoint { a: s.mark_scale },
            MarkKind::Uniform => MarkLaw::Uniform { a: s.mark_scale },
            MarkKind::DoubleExponential => MarkLaw::DoubleExponential { scale: s.mark_scale },
        };
        let components = match self.problem.preset {
            Preset::Fhn => 2,
            Preset::Scalar => 1,
            Preset::Custom => self.custom.component_weights.len(),
        };
        let direction = match s.direction {
            DirectionKind::Constant => match self.problem.preset {
                Preset::Scalar => JumpDirection::Entries(vec![1.0]),
                _ => JumpDirection::Profiles(vec![Profile::Constant(1.0); components]),
            },
            DirectionKind::NodeSpread => JumpDirection::NodeSpread {
                component: s.spread_component,
            },
            DirectionKind::Entries => match &s.direction_entries {
                Some(e) => JumpDirection::Entries(e.clone()),
                None => bail!("noise.direction_entries: required when noise.direction = \"entries\""),
            },
        };
        let q = match &s.q_diagonal {
            Some(d) => QSpec::Diagonal(d.clone()),
            None => QSpec::Uniform { trace: s.q_trace },
        };
        Ok(NoiseParams {
            intensity: s.intensity,
            mark_law,
            direction,
            q,
        })
    }

    fn fhn_params(&self) -> Result<FhnParams> {
        Ok(FhnParams {
            n_nodes: self.grid.n_nodes,
            c: self.fhn.c.to_profile(),
            p: self.fhn.p.to_profile(),
            gamma: self.fhn.gamma,
            alpha: self.fhn.alpha,
            xi: self.fhn.xi,
            v0: self.fhn.v0.to_profile(),
            w0: self.fhn.w0.to_profile(),
            horizon: self.horizon(),
            dt: self.run.dt,
            noise: self.noise_params()?,
        })
    }

    /// Assembles the problem and reports the dissipativity constants.
    pub fn build(&self) -> Result<(Problem, ValidationReport)> {
        let mut warnings = Vec::new();
        let problem = match self.problem.preset {
            Preset::Fhn => {
                let params = self.fhn_params()?;
                let problem = params.build().context("fhn")?;
                if !params.admissible().context("fhn.p")? {
                    warnings.push(format!(
                        "fhn: xi^2 - xi + 1 = {:.4} exceeds 3 min p; the admissibility condition fails",
                        params.xi * params.xi - params.xi + 1.0
                    ));
                }
                problem
            }
            Preset::Scalar => ScalarParams {
                a: self.scalar.a,
                coefficients: self.scalar.coefficients.clone(),
                xi: self.scalar.xi,
                u0: self.scalar.u0,
                horizon: self.horizon(),
                dt: self.run.dt,
                noise: self.noise_params()?,
            }
            .build()
            .context("scalar")?,
            Preset::Custom => CustomParams {
                matrix: self.custom.matrix.clone(),
                component_weights: self.custom.component_weights.clone(),
                node_weights: self.custom.node_weights.clone(),
                coefficients: self.custom.coefficients.clone(),
                u0: self.custom.u0.clone(),
                horizon: self.horizon(),
                dt: self.run.dt,
                noise: self.noise_params()?,
            }
            .build()
            .context("custom")?,
        };
        let omega = problem.omega();
        let eta = problem.eta();
        if omega - eta <= 0.0 {
            warnings.push(format!(
                "omega - eta = {:.4} is not positive; the drift is not dissipative",
                omega - eta
            ));
        }
        for w in &warnings {
            warn!("{w}");
        }
        let report = ValidationReport {
            omega,
            eta,
            omega_minus_eta: omega - eta,
            strictly_dissipative: problem.bundle.is_strictly_dissipative(),
            warnings,
        };
        Ok((problem, report))
    }
}
