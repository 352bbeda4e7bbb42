use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hyperbolic::{Mobius, RealMatrix};
use crate::smbundle::UnitTangent;
use crate::surface::SurfaceModel;
use crate::system::MagneticSystem;

use super::TopologicalClass;

/// Deck transformation of the universal cover acting on `SM`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Deck {
    Translation { m: i64, n: i64 },
    Disk(Mobius),
}

impl Deck {
    pub fn for_class(sys: &MagneticSystem, class: &TopologicalClass) -> Result<Self> {
        match (&sys.surface, class) {
            (SurfaceModel::Torus(_), TopologicalClass::Torus { m, n, .. }) => Ok(Deck::Translation { m: *m, n: *n }),
            (SurfaceModel::Hyperbolic(spec), TopologicalClass::Hyperbolic { word, .. }) => {
                Ok(Deck::Disk(word.evaluate(&spec.deck_generators)?.to_disk()))
            }
            _ => Err(Error::Config(format!("class {} does not match the surface backend", class.key()))),
        }
    }

    pub fn apply(&self, z: &UnitTangent) -> UnitTangent {
        match self {
            Deck::Translation { m, n } => UnitTangent::new(z.p.x1 + *m as f64, z.p.x2 + *n as f64, z.theta),
            Deck::Disk(g) => {
                let (w, th) = g.act(Complex64::new(z.p.x1, z.p.x2), z.theta);
                UnitTangent::new(w.re, w.im, th)
            }
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            Deck::Translation { m, n } => Deck::Translation { m: -m, n: -n },
            Deck::Disk(g) => Deck::Disk(g.inverse()),
        }
    }
}

/// Hyperbolic class of a word with its translation length.
pub fn hyperbolic_class(generators: &[RealMatrix], word: &crate::hyperbolic::Word) -> Result<TopologicalClass> {
    let g = word.evaluate(generators)?;
    if !g.is_hyperbolic() {
        return Err(Error::DegenerateInput(format!("word {word} is not hyperbolic")));
    }
    Ok(TopologicalClass::Hyperbolic {
        word: word.clone(),
        translation_length: g.translation_length(),
    })
}

/// Wrap an angle difference to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let r = a.rem_euclid(t);
    if r > std::f64::consts::PI {
        r - t
    } else {
        r
    }
}
