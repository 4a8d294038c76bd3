use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::math::{Field, FieldLayout};

/// Symmetric scalar law of the jump amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkLaw {
    /// `+a` or `-a` with probability one half each.
    TwoPoint { a: f64 },
    /// Uniform on `(-a, a)`.
    Uniform { a: f64 },
    /// Laplace law with density `exp(-|s| / b) / (2b)`.
    DoubleExponential { scale: f64 },
}

impl MarkLaw {
    fn parameter(&self) -> f64 {
        match *self {
            MarkLaw::TwoPoint { a } | MarkLaw::Uniform { a } => a,
            MarkLaw::DoubleExponential { scale } => scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.parameter();
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mark law parameter must be positive, got {v}"
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkLaw::TwoPoint { a } => {
                if rng.random::<bool>() {
                    a
                } else {
                    -a
                }
            }
            MarkLaw::Uniform { a } => a * (2.0 * rng.random::<f64>() - 1.0),
            MarkLaw::DoubleExponential { scale } => {
                let magnitude: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    scale * magnitude
                } else {
                    -scale * magnitude
                }
            }
        }
    }

    /// `E|S|^m`.
    pub fn abs_moment(&self, m: u32) -> f64 {
        match *self {
            MarkLaw::TwoPoint { a } => a.powi(m as i32),
            MarkLaw::Uniform { a } => a.powi(m as i32) / (m as f64 + 1.0),
            MarkLaw::DoubleExponential { scale } => {
                scale.powi(m as i32) * (1..=m).map(f64::from).product::<f64>()
            }
        }
    }
}

/// How a scalar amplitude becomes a jump in state space. Directions are
/// normalized to unit weighted norm on construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Embedding {
    FixedProfile(Field),
    ModeSpread {
        directions: Vec<Field>,
        probabilities: Vec<f64>,
    },
}

impl Embedding {
    pub fn fixed_profile(direction: Field) -> Result<Self> {
        Ok(Embedding::FixedProfile(normalized(direction)?))
    }

    pub fn mode_spread(directions: Vec<Field>, probabilities: Vec<f64>) -> Result<Self> {
        if directions.is_empty() || directions.len() != probabilities.len() {
            return Err(Error::InvalidInput(
                "mode spread needs one probability per direction".into(),
            ));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput("mode probabilities must be non-negative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "mode probabilities must sum to 1, got {total}"
            )));
        }
        for d in &directions[1..] {
            directions[0].check_compatible(d)?;
        }
        let directions = directions
            .into_iter()
            .map(normalized)
            .collect::<Result<Vec<_>>>()?;
        Ok(Embedding::ModeSpread {
            directions,
            probabilities,
        })
    }

    pub fn layout(&self) -> &Arc<FieldLayout> {
        match self {
            Embedding::FixedProfile(d) => d.layout(),
            Embedding::ModeSpread { directions, .. } => directions[0].layout(),
        }
    }
}

fn normalized(direction: Field) -> Result<Field> {
    let norm = direction.norm();
    if norm == 0.0 {
        return Err(Error::InvalidInput("jump direction must be non-zero".into()));
    }
    Ok(direction.scaled(1.0 / norm))
}

/// Finite, symmetric jump intensity measure of a compound Poisson process.
#[derive(Debug, Clone)]
pub struct JumpMeasureSpec {
    intensity: f64,
    mark_law: MarkLaw,
    embedding: Embedding,
    mode_index: Option<WeightedIndex<f64>>,
}

impl PartialEq for JumpMeasureSpec {
    fn eq(&self, other: &Self) -> bool {
        self.intensity == other.intensity
            && self.mark_law == other.mark_law
            && self.embedding == other.embedding
    }
}

impl JumpMeasureSpec {
    pub fn new(intensity: f64, mark_law: MarkLaw, embedding: Embedding) -> Result<Self> {
        if !(intensity.is_finite() && intensity > 0.0) {
            return Err(Error::InvalidInput(format!(
                "jump intensity must be positive, got {intensity}"
            )));
        }
        mark_law.validate()?;
        let mode_index = match &embedding {
            Embedding::FixedProfile(_) => None,
            Embedding::ModeSpread { probabilities, .. } => Some(
                WeightedIndex::new(probabilities.iter().copied())
                    .map_err(|e| Error::InvalidInput(format!("mode probabilities: {e}")))?,
            ),
        };
        Ok(Self {
            intensity,
            mark_law,
            embedding,
            mode_index,
        })
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn mark_law(&self) -> MarkLaw {
        self.mark_law
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn layout(&self) -> &Arc<FieldLayout> {
        self.embedding.layout()
    }

    pub(crate) fn sample_mark<R: Rng + ?Sized>(&self, rng: &mut R) -> Field {
        let s = self.mark_law.sample(rng);
        match (&self.embedding, &self.mode_index) {
            (Embedding::FixedProfile(d), _) => d.scaled(s),
            (Embedding::ModeSpread { directions, .. }, Some(index)) => {
                directions[index.sample(rng)].scaled(s)
            }
            (Embedding::ModeSpread { .. }, None) => unreachable!("mode index built in new()"),
        }
    }
}

/// `int |y|_w^m nu(dy) = lambda E|S|^m`, every direction having unit norm.
pub fn nu_moment(spec: &JumpMeasureSpec, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidInput("moment order must be at least 1".into()));
    }
    Ok(spec.intensity * spec.mark_law.abs_moment(m))
}

/// `int y nu(dy)`, zero for every offered law.
pub fn nu_mean(spec: &JumpMeasureSpec) -> Field {
    Field::zeros(spec.layout())
}
