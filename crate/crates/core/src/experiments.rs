//! Built-in initial conditions and run configuration.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::io;
use crate::model::{self, ModelParams, SurfaceDoc, SurfacePotential};
use crate::stepper::StepperConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    Ex1,
    Ex2,
    Ex3,
    Ex4_30,
    Ex4_150,
    Custom,
}

impl Example {
    pub const BUILTIN: [Example; 5] = [Example::Ex1, Example::Ex2, Example::Ex3, Example::Ex4_30, Example::Ex4_150];

    pub fn name(self) -> &'static str {
        match self {
            Example::Ex1 => "ex1",
            Example::Ex2 => "ex2",
            Example::Ex3 => "ex3",
            Example::Ex4_30 => "ex4_30",
            Example::Ex4_150 => "ex4_150",
            Example::Custom => "custom",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Example::BUILTIN
            .into_iter()
            .chain([Example::Custom])
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::UnknownExample(name.to_owned()))
    }

    pub fn description(self) -> &'static str {
        match self {
            Example::Ex1 => "phase 0 in the bulk, 1 on the boundary; relaxes to a centred circular -1 region",
            Example::Ex2 => "indicator of [0.25,0.75]x[0,0.5] (1 inside, -1 outside)",
            Example::Ex3 => "0.3 + 0.01 cos(6 pi x) cos(6 pi y)",
            Example::Ex4_30 => "droplet on the bottom wall, moving contact line potential, static angle 30 degrees",
            Example::Ex4_150 => "droplet on the bottom wall, moving contact line potential, static angle 150 degrees",
            Example::Custom => "initial field from a snapshot file or seeded noise",
        }
    }

    /// Surface potential of the example; wall examples take the interface
    /// tension for `kappa` as their `gamma_tilde`.
    pub fn default_surface(self, kappa: f64) -> SurfacePotential {
        let gamma_tilde = model::interface_tension(kappa);
        match self {
            Example::Ex4_30 => SurfacePotential::MovingContactLine { theta_s: 30.0, gamma_tilde },
            Example::Ex4_150 => SurfacePotential::MovingContactLine { theta_s: 150.0, gamma_tilde },
            _ => SurfacePotential::DoubleWell,
        }
    }

    pub fn default_max_steps(self) -> u64 {
        match self {
            Example::Ex1 | Example::Ex2 | Example::Ex3 => 7000,
            _ => 10000,
        }
    }
}

pub const DEFAULT_N: usize = 200;
pub const DEFAULT_RATE: f64 = 100.0;
pub const DEFAULT_SNAPSHOT_EVERY: u64 = 500;
/// Droplet radius of the wall examples.
pub const DROPLET_RADIUS: f64 = 0.25;
/// Amplitude of the seeded noise used by `"initial_field": "random"`.
pub const NOISE_AMPLITUDE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KappaMode {
    /// `kappa = factor * h`
    FactorOfH(f64),
    Absolute(f64),
}

impl Default for KappaMode {
    fn default() -> Self {
        KappaMode::FactorOfH(2.0)
    }
}

impl KappaMode {
    pub fn kappa(self, h: f64) -> f64 {
        match self {
            KappaMode::FactorOfH(f) => f * h,
            KappaMode::Absolute(k) => k,
        }
    }
}

/// Fully resolved run configuration. Serializes to a document that
/// [`parse_config`] accepts unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub example: Example,
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    pub kappa_mode: KappaMode,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(rename = "S1")]
    pub s1: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
    pub surface: SurfacePotential,
    pub steady_tol: f64,
    pub max_steps: u64,
    pub snapshot_every: u64,
    pub linear_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    /// Snapshot file path, or `"random"` for seeded noise. Custom runs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_field: Option<String>,
    pub field_bound: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    example: Example,
    #[serde(rename = "N")]
    n: Option<usize>,
    dt: Option<f64>,
    kappa_mode: Option<KappaMode>,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    #[serde(rename = "S1")]
    s1: Option<f64>,
    #[serde(rename = "S2")]
    s2: Option<f64>,
    surface: Option<SurfaceDoc>,
    steady_tol: Option<f64>,
    max_steps: Option<u64>,
    snapshot_every: Option<u64>,
    linear_tol: Option<f64>,
    linear_max_iter: Option<usize>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    initial_field: Option<String>,
    field_bound: Option<f64>,
}

impl RunConfig {
    /// Defaults for an example at resolution `n`.
    pub fn for_example(example: Example, n: usize) -> Self {
        let sc = StepperConfig::default();
        let kappa_mode = KappaMode::default();
        RunConfig {
            example,
            n,
            dt: sc.dt,
            kappa_mode,
            gamma1: DEFAULT_RATE,
            gamma2: DEFAULT_RATE,
            s1: DEFAULT_RATE,
            s2: DEFAULT_RATE,
            surface: example.default_surface(kappa_mode.kappa(1.0 / n as f64)),
            steady_tol: sc.steady_tol,
            max_steps: example.default_max_steps(),
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
            linear_tol: sc.linear_tol,
            linear_max_iter: None,
            output_dir: None,
            seed: 0,
            initial_field: None,
            field_bound: sc.field_bound,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_mode.kappa(1.0 / self.n as f64)
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams { kappa: self.kappa(), gamma1: self.gamma1, gamma2: self.gamma2, s1: self.s1, s2: self.s2 }
    }

    pub fn stepper_config(&self) -> StepperConfig {
        StepperConfig {
            dt: self.dt,
            linear_tol: self.linear_tol,
            linear_max_iter: self.linear_max_iter,
            steady_tol: self.steady_tol,
            max_steps: self.max_steps,
            field_bound: self.field_bound,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidGrid(format!("N must be at least 4, got {}", self.n)));
        }
        self.surface.validate()?;
        let kappa = match self.kappa_mode {
            KappaMode::FactorOfH(f) => ("kappa_mode.factor_of_h", f),
            KappaMode::Absolute(k) => ("kappa_mode.absolute", k),
        };
        if !(kappa.1 > 0.0 && kappa.1.is_finite()) {
            return Err(Error::param(kappa.0, format!("must be positive, got {}", kappa.1)));
        }
        if !(self.field_bound >= 1.0 && self.field_bound.is_finite()) {
            return Err(Error::param("field_bound", format!("must be at least 1, got {}", self.field_bound)));
        }
        self.model_params().validate(&self.surface, self.field_bound)?;
        self.stepper_config().validate()?;
        if self.snapshot_every == 0 {
            return Err(Error::param("snapshot_every", "must be at least 1"));
        }
        match (self.example, &self.initial_field) {
            (Example::Custom, None) => {
                Err(Error::param("initial_field", "required for the custom example (a snapshot path or \"random\")"))
            }
            (Example::Custom, Some(_)) | (_, None) => Ok(()),
            (_, Some(_)) => Err(Error::param("initial_field", "only allowed with \"example\": \"custom\"")),
        }
    }
}

/// Parses a JSON run configuration, fills defaults and validates it.
/// Errors name the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config { path, message: e.into_inner().to_string() }
    })?;
    let n = raw.n.unwrap_or(DEFAULT_N);
    let d = RunConfig::for_example(raw.example, n);
    let kappa_mode = raw.kappa_mode.unwrap_or(d.kappa_mode);
    let kappa = kappa_mode.kappa(1.0 / n.max(1) as f64);
    let surface = match raw.surface {
        Some(doc) => doc
            .resolve(Some(model::interface_tension(kappa)))
            .map_err(|message| Error::Config { path: "surface".into(), message })?,
        None => raw.example.default_surface(kappa),
    };
    let cfg = RunConfig {
        example: raw.example,
        n,
        dt: raw.dt.unwrap_or(d.dt),
        kappa_mode,
        gamma1: raw.gamma1.unwrap_or(d.gamma1),
        gamma2: raw.gamma2.unwrap_or(d.gamma2),
        s1: raw.s1.unwrap_or(d.s1),
        s2: raw.s2.unwrap_or(d.s2),
        surface,
        steady_tol: raw.steady_tol.unwrap_or(d.steady_tol),
        max_steps: raw.max_steps.unwrap_or(d.max_steps),
        snapshot_every: raw.snapshot_every.unwrap_or(d.snapshot_every),
        linear_tol: raw.linear_tol.unwrap_or(d.linear_tol),
        linear_max_iter: raw.linear_max_iter,
        output_dir: raw.output_dir,
        seed: raw.seed.unwrap_or(d.seed),
        initial_field: raw.initial_field,
        field_bound: raw.field_bound.unwrap_or(d.field_bound),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file. A relative `initial_field` path is taken
/// relative to the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(f) = &cfg.initial_field {
        if f != "random" && Path::new(f).is_relative() {
            if let Some(dir) = path.parent() {
                cfg.initial_field = Some(dir.join(f).display().to_string());
            }
        }
    }
    Ok(cfg)
}

/// Initial field of a built-in example. `kappa` sets the width of the
/// droplet profile in the wall examples.
pub fn init_example(example: Example, g: &GridSpec, kappa: f64) -> Result<Field> {
    let mut u = match example {
        Example::Ex1 => Field::constant(g, 0.0),
        Example::Ex2 => Field::from_fn(g, |x, y| {
            if (0.25..=0.75).contains(&x) && (0.0..=0.5).contains(&y) {
                1.0
            } else {
                -1.0
            }
        }),
        Example::Ex3 => {
            let k = 6.0 * std::f64::consts::PI;
            Field::from_fn(g, |x, y| 0.3 + 0.01 * (k * x).cos() * (k * y).cos())
        }
        Example::Ex4_30 | Example::Ex4_150 => {
            let w = std::f64::consts::SQRT_2 * kappa;
            Field::from_fn(g, |x, y| {
                let d = ((x - 0.5).powi(2) + y * y).sqrt();
                ((DROPLET_RADIUS - d) / w).tanh()
            })
        }
        Example::Custom => return Err(Error::UnknownExample("custom has no built-in initial field".into())),
    };
    if example == Example::Ex1 {
        for &k in g.chain() {
            u.values[k] = 1.0;
        }
    }
    Ok(u)
}

/// Seeded uniform noise of amplitude [`NOISE_AMPLITUDE`] about zero.
pub fn random_field(g: &GridSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field::new((0..g.node_count()).map(|_| rng.gen_range(-NOISE_AMPLITUDE..=NOISE_AMPLITUDE)).collect())
}

/// Initial field for a validated config.
pub fn initial_field(cfg: &RunConfig, g: &GridSpec) -> Result<Field> {
    match (cfg.example, cfg.initial_field.as_deref()) {
        (Example::Custom, Some("random")) => Ok(random_field(g, cfg.seed)),
        (Example::Custom, Some(path)) => {
            let snap = io::read_snapshot(Path::new(path))?;
            if snap.n != g.n() {
                return Err(Error::Format {
                    path: path.into(),
                    message: format!("snapshot has N={}, config has N={}", snap.n, g.n()),
                });
            }
            Ok(snap.field)
        }
        (Example::Custom, None) => Err(Error::param("initial_field", "missing")),
        (e, _) => init_example(e, g, cfg.kappa()),
    }
}
