//! Feature declarations, context vectors and observations.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Continuous,
    /// Categorical with a finite, ordered level set. Values refer to levels by index.
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
}

impl Feature {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: FeatureKind::Continuous }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical(levels.into_iter().map(Into::into).collect()),
        }
    }

    pub fn num_levels(&self) -> Option<usize> {
        match &self.kind {
            FeatureKind::Continuous => None,
            FeatureKind::Categorical(levels) => Some(levels.len()),
        }
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        match &self.kind {
            FeatureKind::Continuous => None,
            FeatureKind::Categorical(levels) => levels.iter().position(|l| l == level),
        }
    }
}

/// Ordered feature declarations. The dimension `M` is the number of features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    features: Vec<Feature>,
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidSchema("schema has no features".into()));
        }
        for (i, f) in features.iter().enumerate() {
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidSchema(format!("duplicate feature name `{}`", f.name)));
            }
            if let FeatureKind::Categorical(levels) = &f.kind {
                if levels.is_empty() {
                    return Err(Error::InvalidSchema(format!("feature `{}` has no levels", f.name)));
                }
                for (j, l) in levels.iter().enumerate() {
                    if levels[..j].contains(l) {
                        return Err(Error::InvalidSchema(format!(
                            "feature `{}` repeats level `{l}`",
                            f.name
                        )));
                    }
                }
            }
        }
        Ok(Self { features })
    }

    pub fn dimension(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &Feature {
        &self.features[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Checks that `context` has length `M`, finite reals where continuous and declared levels
    /// where categorical.
    pub fn validate(&self, context: &ContextVector) -> Result<()> {
        if context.len() != self.dimension() {
            return Err(Error::SchemaMismatch(format!(
                "context has {} values, schema declares {}",
                context.len(),
                self.dimension()
            )));
        }
        for (i, (f, v)) in self.features.iter().zip(context.values()).enumerate() {
            match (&f.kind, v) {
                (FeatureKind::Continuous, FeatureValue::Real(x)) if x.is_finite() => {}
                (FeatureKind::Continuous, FeatureValue::Real(_)) => {
                    return Err(Error::SchemaMismatch(format!("feature {i} (`{}`) is not finite", f.name)))
                }
                (FeatureKind::Categorical(levels), FeatureValue::Level(l)) if (*l as usize) < levels.len() => {}
                (FeatureKind::Categorical(_), FeatureValue::Level(l)) => {
                    return Err(Error::SchemaMismatch(format!("feature {i} (`{}`) has no level {l}", f.name)))
                }
                _ => {
                    return Err(Error::SchemaMismatch(format!(
                        "feature {i} (`{}`) has the wrong kind of value",
                        f.name
                    )))
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Real(f64),
    Level(u32),
}

impl FeatureValue {
    pub fn as_real(self) -> Option<f64> {
        match self {
            FeatureValue::Real(x) => Some(x),
            FeatureValue::Level(_) => None,
        }
    }

    pub fn as_level(self) -> Option<u32> {
        match self {
            FeatureValue::Level(l) => Some(l),
            FeatureValue::Real(_) => None,
        }
    }

    /// Total-order key used to group identical contexts.
    pub(crate) fn key(self) -> u64 {
        match self {
            // canonicalise -0.0
            FeatureValue::Real(x) => (x + 0.0).to_bits(),
            FeatureValue::Level(l) => l as u64,
        }
    }
}

/// One user's context: `M` feature values in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector(Vec<FeatureValue>);

impl ContextVector {
    pub fn new(values: Vec<FeatureValue>) -> Self {
        Self(values)
    }

    /// Context made only of categorical levels.
    pub fn from_levels(levels: &[u32]) -> Self {
        Self(levels.iter().map(|&l| FeatureValue::Level(l)).collect())
    }

    pub fn from_reals(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| FeatureValue::Real(x)).collect())
    }

    pub fn values(&self) -> &[FeatureValue] {
        &self.0
    }

    pub fn get(&self, index: usize) -> FeatureValue {
        self.0[index]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn key(&self) -> Vec<u64> {
        self.0.iter().map(|v| v.key()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub context: ContextVector,
    pub reward: bool,
}

impl Observation {
    pub fn new(context: ContextVector, reward: bool) -> Self {
        Self { context, reward }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![Feature::categorical("f1", ["A", "B"]), Feature::continuous("x")]).unwrap()
    }

    #[test]
    fn validates_contexts() {
        let s = schema();
        let ok = ContextVector::new(vec![FeatureValue::Level(1), FeatureValue::Real(0.5)]);
        assert!(s.validate(&ok).is_ok());
        let bad_level = ContextVector::new(vec![FeatureValue::Level(2), FeatureValue::Real(0.5)]);
        assert!(matches!(s.validate(&bad_level), Err(Error::SchemaMismatch(_))));
        let nan = ContextVector::new(vec![FeatureValue::Level(0), FeatureValue::Real(f64::NAN)]);
        assert!(s.validate(&nan).is_err());
        assert!(s.validate(&ContextVector::from_levels(&[0])).is_err());
        let swapped = ContextVector::new(vec![FeatureValue::Real(0.0), FeatureValue::Level(0)]);
        assert!(s.validate(&swapped).is_err());
    }

    #[test]
    fn rejects_bad_schemas() {
        assert!(FeatureSchema::new(vec![]).is_err());
        assert!(FeatureSchema::new(vec![Feature::continuous("a"), Feature::continuous("a")]).is_err());
        let empty: [&str; 0] = [];
        assert!(FeatureSchema::new(vec![Feature::categorical("a", empty)]).is_err());
    }
}
