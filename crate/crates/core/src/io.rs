//! Structured-text (TOML) description of a magnetic system.
//!
//! ```toml
//! [surface]
//! backend = "torus"            # or "hyperbolic"
//! max_degree = 2
//! # rows (k1, k2, re, im); the table must be conjugate-symmetric
//! u = [[0, 1, 0.05, 0.0], [0, -1, 0.05, 0.0]]
//! lambda = [[0, 0, 0.3, 0.0]]
//!
//! # hyperbolic backend instead:
//! # backend = "hyperbolic"
//! # lambda_const = 0.5
//! # generators = [[a, b, c, d], ...]   # optional, default octagon group
//!
//! [magnetic]
//! c = 3.3333333333333335              # optional, default: smallest integral choice
//!
//! [[deformation]]                      # optional; beta_tau = Σ tau^power beta_p
//! power = 1
//! w1 = [[0, 1, 0.0, -0.1], [0, -1, 0.0, 0.1]]
//! w2 = []
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fourier::{torus_scale, Fourier2, Fourier3, TrigSeries};
use crate::hyperbolic::RealMatrix;
use crate::smbundle::TrigFunction;
use crate::surface::{ConformalTorusSpec, HyperbolicConstantSpec, SurfaceModel};
use crate::system::{BetaFamily, MagneticSystem, OneForm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceFile {
    pub backend: String,
    #[serde(default)]
    pub max_degree: Option<usize>,
    #[serde(default)]
    pub u: Vec<[f64; 4]>,
    #[serde(default)]
    pub lambda: Vec<[f64; 4]>,
    #[serde(default)]
    pub lambda_const: Option<f64>,
    #[serde(default)]
    pub generators: Option<Vec<[f64; 4]>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticFile {
    #[serde(default)]
    pub c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationTerm {
    pub power: u32,
    #[serde(default)]
    pub w1: Vec<[f64; 4]>,
    #[serde(default)]
    pub w2: Vec<[f64; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub surface: SurfaceFile,
    #[serde(default)]
    pub magnetic: MagneticFile,
    #[serde(default)]
    pub deformation: Vec<DeformationTerm>,
}

fn int(x: f64, what: &str) -> Result<i32> {
    if x.fract() != 0.0 || x.abs() > 1e6 {
        return Err(Error::Parse(format!("{what}: wave index {x} is not an integer")));
    }
    Ok(x as i32)
}

/// Rows `(k1, k2, re, im)` to a real Fourier series on the unit torus.
pub fn series_from_table(rows: &[[f64; 4]]) -> Result<Fourier2> {
    let terms = rows
        .iter()
        .map(|r| Ok(([int(r[0], "k1")?, int(r[1], "k2")?], Complex64::new(r[2], r[3]))))
        .collect::<Result<Vec<_>>>()?;
    TrigSeries::from_terms(terms, torus_scale())
}

pub fn series_to_table(s: &Fourier2) -> Vec<[f64; 4]> {
    s.terms()
        .iter()
        .map(|(k, c)| [k[0] as f64, k[1] as f64, c.re, c.im])
        .collect()
}

/// Test functions on `SM` use rows `(k1, k2, k_theta, re, im)`.
pub fn trig_function_from_table(rows: &[[f64; 5]]) -> Result<TrigFunction> {
    let terms = rows
        .iter()
        .map(|r| {
            Ok((
                [int(r[0], "k1")?, int(r[1], "k2")?, int(r[2], "k_theta")?],
                Complex64::new(r[3], r[4]),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrigFunction(Fourier3::from_terms(terms, crate::fourier::bundle_scale())?))
}

pub fn trig_function_to_table(f: &TrigFunction) -> Vec<[f64; 5]> {
    f.0.terms()
        .iter()
        .map(|(k, c)| [k[0] as f64, k[1] as f64, k[2] as f64, c.re, c.im])
        .collect()
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<MagneticSystem> {
        let s = &self.surface;
        let surface = match s.backend.as_str() {
            "torus" => {
                if s.lambda_const.is_some() || s.generators.is_some() {
                    return Err(Error::Config("torus backend takes u/lambda tables only".into()));
                }
                let u = series_from_table(&s.u)?;
                let l = series_from_table(&s.lambda)?;
                let deg = s.max_degree.unwrap_or(u.max_degree().max(l.max_degree()));
                SurfaceModel::Torus(ConformalTorusSpec::new(u, l, deg)?)
            }
            "hyperbolic" => {
                if !s.u.is_empty() || !s.lambda.is_empty() {
                    return Err(Error::Config("hyperbolic backend takes lambda_const, not Fourier tables".into()));
                }
                let lam = s
                    .lambda_const
                    .ok_or_else(|| Error::Config("hyperbolic backend needs lambda_const".into()))?;
                let spec = match &s.generators {
                    None => HyperbolicConstantSpec::new(lam)?,
                    Some(g) => HyperbolicConstantSpec::with_generators(
                        lam,
                        g.iter().map(|m| RealMatrix([[m[0], m[1]], [m[2], m[3]]])).collect(),
                    )?,
                };
                SurfaceModel::Hyperbolic(spec)
            }
            other => return Err(Error::Config(format!("unknown backend {other:?}"))),
        };
        let sys = match self.magnetic.c {
            Some(c) => MagneticSystem::with_c(surface, c)?,
            None => MagneticSystem::new(surface)?,
        };
        if self.deformation.is_empty() {
            return Ok(sys);
        }
        let terms = self
            .deformation
            .iter()
            .map(|t| {
                Ok((
                    t.power,
                    OneForm {
                        w1: series_from_table(&t.w1)?,
                        w2: series_from_table(&t.w2)?,
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        sys.with_deformation(BetaFamily { terms })
    }

    /// Hex SHA-256 (first 16 digits) of the canonical JSON form of the built
    /// system: defaults filled in, Fourier tables merged and sorted.
    pub fn hash(&self) -> Result<String> {
        system_hash(&self.build()?)
    }
}

pub fn system_hash(sys: &MagneticSystem) -> Result<String> {
    let bytes = serde_json::to_vec(&describe(sys)).map_err(|e| Error::Parse(e.to_string()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

/// Description of an already-built system (used to persist generated systems).
pub fn describe(sys: &MagneticSystem) -> SystemFile {
    let surface = match &sys.surface {
        SurfaceModel::Torus(t) => SurfaceFile {
            backend: "torus".into(),
            max_degree: Some(t.max_degree),
            u: series_to_table(&t.u),
            lambda: series_to_table(&t.lambda),
            lambda_const: None,
            generators: None,
        },
        SurfaceModel::Hyperbolic(h) => SurfaceFile {
            backend: "hyperbolic".into(),
            max_degree: None,
            u: Vec::new(),
            lambda: Vec::new(),
            lambda_const: Some(h.lambda_const),
            generators: Some(
                h.deck_generators
                    .iter()
                    .map(|g| [g.0[0][0], g.0[0][1], g.0[1][0], g.0[1][1]])
                    .collect(),
            ),
        },
    };
    let deformation = sys
        .beta
        .as_ref()
        .map(|b| {
            b.terms
                .iter()
                .map(|(p, f)| DeformationTerm {
                    power: *p,
                    w1: series_to_table(&f.w1),
                    w2: series_to_table(&f.w2),
                })
                .collect()
        })
        .unwrap_or_default();
    SystemFile {
        surface,
        magnetic: MagneticFile { c: Some(sys.c) },
        deformation,
    }
}
