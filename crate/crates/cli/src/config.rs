//! Experiment configuration (TOML).
//!
//! Every section is optional except `[geometry]`; unknown keys are rejected.
//! The grammar is documented in the README.

use serde::{Deserialize, Serialize};

use torusflow::eigenmodes::OrbitSpec;
use torusflow::perturbation::PerturbationSpec;
use torusflow::solver::{SolverConfig, TimeStep, DEFAULT_DEALIAS};
use torusflow::{FluxVector, TorusGeometry};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub metrics: MetricsBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub maximize: MaximizeBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub nu1: f64,
    pub nu2: f64,
    pub nx: usize,
    pub ny: usize,
    /// Allows grids that are too small or odd for the solver (toy instances).
    #[serde(default)]
    pub debug: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OrbitChoice {
    /// Whichever family spans the least eigenspace of the geometry.
    Least,
    Axis1,
    Axis2,
    SquarePair,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct InitialBlock {
    pub orbit: OrbitChoice,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub k_min: i64,
    pub k_max: i64,
    pub seed: u64,
    pub orthogonal: bool,
    /// Explicit cell values (x₁ fastest); replaces the eigenstate when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for InitialBlock {
    fn default() -> Self {
        Self {
            orbit: OrbitChoice::Least,
            a: 1.0,
            b: 0.0,
            alpha: 0.0,
            beta: 0.0,
            epsilon: 0.0,
            k_min: 2,
            k_max: 8,
            seed: 0,
            orthogonal: true,
            values: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub sample_interval: f64,
    pub dealias_fraction: f64,
    pub track_follower: bool,
    pub flux: [f64; 2],
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            cfl: None,
            dt: None,
            t_end: 1.0,
            sample_interval: 0.1,
            dealias_fraction: DEFAULT_DEALIAS,
            track_follower: false,
            flux: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsBlock {
    pub p: Vec<f64>,
    /// Sample orbit distances to the initial orbit for every `p`.
    pub orbit_distance: bool,
}

impl Default for MetricsBlock {
    fn default() -> Self {
        Self {
            p: vec![2.0, 4.0],
            orbit_distance: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    /// Write a snapshot every this many samples; 0 keeps only the first and last.
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StartChoice {
    /// The class generator itself.
    Generator,
    /// A seeded random member of the class.
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MaximizeBlock {
    pub max_iters: usize,
    pub tol: f64,
    pub start: StartChoice,
}

impl Default for MaximizeBlock {
    fn default() -> Self {
        Self {
            max_iters: torusflow::rearrange::DEFAULT_MAX_ITERS,
            tol: torusflow::rearrange::DEFAULT_TOL,
            start: StartChoice::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Adds a non-self-adjoint term to `K` so the symmetry check must fail.
    AsymmetricK,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    pub samples: usize,
    /// Length of the short conservation run behind the `Lᵖ` rows.
    pub t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inject_fault: Option<Fault>,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            samples: 100,
            t_end: 1.0,
            inject_fault: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub epsilon: Vec<f64>,
    /// `ν₂/ν₁`, with `ν₁` held fixed.
    pub aspect: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<torusflow::Error> for ConfigError {
    fn from(e: torusflow::Error) -> Self {
        ConfigError(e.to_string())
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every block against the library preconditions.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = self.geometry()?;
        if let Some(v) = &self.initial.values {
            if v.len() != g.cells() {
                return Err(ConfigError(format!(
                    "initial.values has {} entries, the grid has {}",
                    v.len(),
                    g.cells()
                )));
            }
        } else {
            let orbit = self.orbit_spec()?;
            if self.initial.epsilon > 0.0 {
                torusflow::perturbation::perturbed_eigenstate(&orbit, &self.perturbation())?;
            } else if self.initial.epsilon < 0.0 || !self.initial.epsilon.is_finite() {
                return Err(ConfigError(format!(
                    "epsilon = {} must be nonnegative",
                    self.initial.epsilon
                )));
            }
        }
        self.solver_config(g)?.validate()?;
        if self.maximize.max_iters == 0 {
            return Err(ConfigError("maximize.max_iters must be at least 1".into()));
        }
        if self.maximize.tol.is_nan() || self.maximize.tol < 0.0 {
            return Err(ConfigError("maximize.tol must be nonnegative".into()));
        }
        if self.verify.samples == 0 || self.verify.t_end.is_nan() || self.verify.t_end <= 0.0 {
            return Err(ConfigError("verify needs samples ≥ 1 and t_end > 0".into()));
        }
        if let Some(s) = &self.sweep {
            if s.aspect.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
                return Err(ConfigError("sweep.aspect values must be positive".into()));
            }
            for point in self.sweep_points() {
                point.validate()?;
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<TorusGeometry, ConfigError> {
        let g = &self.geometry;
        let r = if g.debug {
            TorusGeometry::debug_grid(g.nu1, g.nu2, g.nx, g.ny)
        } else {
            TorusGeometry::new(g.nu1, g.nu2, g.nx, g.ny)
        };
        Ok(r?)
    }

    pub fn orbit_spec(&self) -> Result<OrbitSpec, ConfigError> {
        let g = self.geometry()?;
        let i = &self.initial;
        let spec = match i.orbit {
            OrbitChoice::Least => OrbitSpec::least(g, i.a, i.b)?.with_phases(i.alpha, i.beta),
            OrbitChoice::Axis1 => OrbitSpec::axis1(g, i.a, i.alpha)?,
            OrbitChoice::Axis2 => OrbitSpec::axis2(g, i.a, i.alpha)?,
            OrbitChoice::SquarePair => OrbitSpec::square_pair(g, i.a, i.b, i.alpha, i.beta)?,
        };
        Ok(spec)
    }

    pub fn perturbation(&self) -> PerturbationSpec {
        let i = &self.initial;
        PerturbationSpec {
            epsilon: i.epsilon,
            k_min: i.k_min,
            k_max: i.k_max,
            seed: i.seed,
            orthogonal: i.orthogonal,
        }
    }

    pub fn time_step(&self) -> Result<TimeStep, ConfigError> {
        match (self.solver.cfl, self.solver.dt) {
            (Some(c), None) => Ok(TimeStep::Cfl(c)),
            (None, Some(dt)) => Ok(TimeStep::Fixed(dt)),
            (None, None) => Ok(TimeStep::Cfl(0.5)),
            (Some(_), Some(_)) => Err(ConfigError("solver: give either cfl or dt, not both".into())),
        }
    }

    /// Solver settings without the follower and orbit, which need the initial field.
    pub fn solver_config(&self, g: TorusGeometry) -> Result<SolverConfig, ConfigError> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(g, self.time_step()?, s.t_end);
        cfg.sample_interval = s.sample_interval;
        cfg.dealias_fraction = s.dealias_fraction;
        cfg.flux = FluxVector {
            f1: s.flux[0],
            f2: s.flux[1],
        };
        cfg.lp_exponents = self.metrics.p.clone();
        Ok(cfg)
    }

    /// The grid points of `[sweep]`, in `epsilon`-major, then `aspect`, then
    /// `p` order. Empty axes keep the base value.
    pub fn sweep_points(&self) -> Vec<ExperimentConfig> {
        let Some(s) = &self.sweep else {
            return Vec::new();
        };
        let eps = if s.epsilon.is_empty() {
            vec![self.initial.epsilon]
        } else {
            s.epsilon.clone()
        };
        let aspect = if s.aspect.is_empty() {
            vec![self.geometry.nu2 / self.geometry.nu1]
        } else {
            s.aspect.clone()
        };
        let ps: Vec<Option<f64>> = if s.p.is_empty() {
            vec![None]
        } else {
            s.p.iter().map(|&p| Some(p)).collect()
        };
        let mut out = Vec::new();
        for &e in &eps {
            for &r in &aspect {
                for &p in &ps {
                    let mut c = self.clone();
                    c.sweep = None;
                    c.initial.epsilon = e;
                    c.geometry.nu2 = c.geometry.nu1 * r;
                    if let Some(p) = p {
                        c.metrics.p = vec![p];
                    }
                    c.name = format!(
                        "{}_eps{e}_aspect{r}{}",
                        self.name,
                        p.map(|p| format!("_p{p}")).unwrap_or_default()
                    );
                    out.push(c);
                }
            }
        }
        out
    }
}
