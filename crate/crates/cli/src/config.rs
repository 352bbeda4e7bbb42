//! Run configuration: one TOML file holding the system (inline or by path),
//! tolerances, and per-command parameters. Every field except the system has a
//! default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use magflow::io::SystemFile;
use magflow::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// RNG seed; `--seed` overrides it. Randomized commands refuse to run
    /// without one.
    pub seed: Option<u64>,
    /// Inline system description.
    pub system: Option<SystemFile>,
    /// Path to a system description, relative to the config file.
    pub system_file: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub verify: VerifyParams,
    #[serde(default)]
    pub jacobi: JacobiParams,
    #[serde(default)]
    pub lyapunov: LyapunovParams,
    #[serde(default)]
    pub orbits: OrbitParams,
    #[serde(default)]
    pub index: IndexParams,
    #[serde(default)]
    pub spectrum: SpectrumParams,
    #[serde(default)]
    pub deform: DeformParams,
    #[serde(default)]
    pub variation: VariationParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub pointwise: f64,
    pub integrated: f64,
    /// Absolute bound for divergence and measure-symmetry integrals.
    pub divergence: f64,
    pub closure: f64,
    pub variational: f64,
    pub jacobi: f64,
    /// Allowed negativity of the index form on certified systems.
    pub index: f64,
    /// Agreement with closed-form oracles.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pointwise: 1e-9,
            integrated: 1e-9,
            divergence: 1e-10,
            closure: 1e-9,
            variational: 1e-6,
            jacobi: 1e-7,
            index: 1e-9,
            oracle: 1e-6,
        }
    }
}

/// Negative-control fixture: scale one chart coefficient of one frame field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corruption {
    /// `"X"`, `"H"` or `"V"`.
    pub field: String,
    pub component: usize,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    /// Additional random torus systems drawn from the seed.
    pub random_systems: usize,
    /// Test functions per system for pointwise checks.
    pub functions: usize,
    pub points_per_function: usize,
    /// Trigonometric degree of random test functions on each axis.
    pub degree: usize,
    /// Test functions per system for the integrated identities.
    pub integrated_functions: usize,
    pub quadrature_min_nodes: usize,
    /// Random 1-forms for the measure-symmetry check.
    pub forms: usize,
    pub corrupt: Option<Corruption>,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            random_systems: 4,
            functions: 10,
            points_per_function: 10,
            degree: 2,
            integrated_functions: 2,
            quadrature_min_nodes: 40,
            forms: 20,
            corrupt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JacobiParams {
    pub orbits: usize,
    pub length: f64,
    pub samples: usize,
    pub sweep_time: f64,
    pub sweep_steps: Vec<f64>,
    pub tol: f64,
    /// Required observed order of the differencing error before the floor.
    pub min_order: f64,
    pub max_floor: f64,
}

impl Default for JacobiParams {
    fn default() -> Self {
        Self {
            orbits: 4,
            length: 10.0,
            samples: 200,
            sweep_time: 5.0,
            sweep_steps: vec![1e-1, 5e-2, 2.5e-2, 1.25e-2, 1e-3, 1e-4],
            tol: 1e-12,
            min_order: 1.8,
            max_floor: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovParams {
    pub t_total: f64,
    pub starts: usize,
    pub tol: f64,
    /// Closed-form exponent to compare against, if known.
    pub expected: Option<f64>,
    pub tolerance: f64,
    /// Riccati horizon for the hyperbolicity diagnostic.
    pub riccati_time: f64,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        Self {
            t_total: 2000.0,
            starts: 1,
            tol: 1e-10,
            expected: None,
            tolerance: 1e-3,
            riccati_time: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrbitTarget {
    /// Hyperbolic backend: class of a deck word, seeded from the hypercycle.
    Word { word: String },
    /// Torus backend, translation class `(m, n)`; seeded from the given state
    /// and period of the geodesic flow when `lambda_steps > 0`.
    Torus {
        m: i64,
        n: i64,
        seed: [f64; 3],
        period: f64,
        #[serde(default)]
        lambda_steps: usize,
        #[serde(default)]
        allow_degenerate: bool,
    },
    /// Torus backend, contractible orbit.
    Contractible {
        seed: [f64; 3],
        period: f64,
        #[serde(default)]
        allow_degenerate: bool,
    },
}

impl OrbitTarget {
    pub fn label(&self) -> String {
        match self {
            OrbitTarget::Word { word } => format!("word({word})"),
            OrbitTarget::Torus { m, n, .. } => format!("torus({m},{n})"),
            OrbitTarget::Contractible { .. } => "contractible".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitParams {
    pub targets: Vec<OrbitTarget>,
    pub integration_tol: f64,
    /// Samples per orbit in `orbits.csv`.
    pub csv_samples: usize,
}

impl Default for OrbitParams {
    fn default() -> Self {
        Self {
            targets: Vec::new(),
            integration_tol: 1e-12,
            csv_samples: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexParams {
    pub samples: usize,
    pub modes: u32,
    pub nodes: usize,
    pub riccati_time: f64,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            samples: 100,
            modes: 4,
            nodes: 256,
            riccati_time: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    pub curve_nodes: usize,
    pub fill_nodes: usize,
    pub fill_tolerance: f64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            curve_nodes: 512,
            fill_nodes: 24,
            fill_tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeformParams {
    /// Centres of the derivative stencils.
    pub taus: Vec<f64>,
    /// Stencil spacing.
    pub h: f64,
    /// Bound on the drift of action values under an exact family.
    pub invariance_tolerance: f64,
}

impl Default for DeformParams {
    fn default() -> Self {
        Self {
            taus: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            h: 0.01,
            invariance_tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationParams {
    pub count: usize,
    pub modes: u32,
    pub amplitude: f64,
    /// Period stretch rates are drawn from `[-max_stretch, max_stretch]`.
    pub max_stretch: f64,
    pub delta: f64,
    /// Offset of the non-orbit control curve along its own variation.
    pub control_offset: f64,
    /// The control derivative must exceed this.
    pub control_threshold: f64,
}

impl Default for VariationParams {
    fn default() -> Self {
        Self {
            count: 20,
            modes: 3,
            amplitude: 0.05,
            max_stretch: 0.5,
            delta: 1e-3,
            control_offset: 0.5,
            control_threshold: 1e-4,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(rel) = cfg.system_file.take() {
            if cfg.system.is_some() {
                return Err(Error::Config("give either [system] or system_file, not both".into()));
            }
            let base = path.parent().unwrap_or(Path::new("."));
            let sys_path = base.join(rel);
            let text = std::fs::read_to_string(&sys_path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", sys_path.display())))?;
            cfg.system = Some(SystemFile::parse(&text).map_err(|e| Error::Config(e.to_string()))?);
        }
        if cfg.system.is_none() {
            return Err(Error::Config("config names no system".into()));
        }
        Ok(cfg)
    }

    pub fn system_file(&self) -> &SystemFile {
        self.system.as_ref().expect("checked at load")
    }
}
