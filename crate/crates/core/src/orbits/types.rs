use serde::{Deserialize, Serialize};

use crate::hyperbolic::Word;
use crate::smbundle::UnitTangent;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TopologicalClass {
    /// Translation `(m, n)` in the torus cover; `winding` is the total turning of
    /// the tangent angle in units of `2π` (nonzero for contractible loops).
    Torus { m: i64, n: i64, winding: i64 },
    /// Deck element given as a reduced word, with its translation length.
    Hyperbolic { word: Word, translation_length: f64 },
}

impl TopologicalClass {
    pub fn is_contractible(&self) -> bool {
        matches!(self, TopologicalClass::Torus { m: 0, n: 0, .. })
    }

    pub fn key(&self) -> String {
        match self {
            TopologicalClass::Torus { m, n, winding } => format!("torus({m},{n};w{winding})"),
            TopologicalClass::Hyperbolic { word, .. } => format!("word({word})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    /// Singular values of the bordered Newton matrix, descending.
    pub singular_values: Vec<f64>,
    /// Trace of the transverse linearized return map in the frame basis.
    pub transverse_trace: f64,
    pub nondegenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedOrbit {
    pub z0: UnitTangent,
    pub period: f64,
    pub class: TopologicalClass,
    pub newton_residual: f64,
    pub stability: Option<Stability>,
}

impl ClosedOrbit {
    /// Unit speed: length equals period.
    pub fn length(&self) -> f64 {
        self.period
    }
}
