use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerType {
    Entity,
    Boolean,
    Number,
    Set,
}

impl AnswerType {
    pub const ALL: [AnswerType; 4] = [AnswerType::Entity, AnswerType::Boolean, AnswerType::Number, AnswerType::Set];

    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::Entity => "entity",
            AnswerType::Boolean => "boolean",
            AnswerType::Number => "number",
            AnswerType::Set => "set",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QueryPattern {
    /// Only the subject is given.
    #[serde(rename = "H__")]
    EntityCentric,
    /// Subject and relation given, object sought.
    #[serde(rename = "HR*")]
    ObjectFinding,
    /// Subject and object given, relation sought.
    #[serde(rename = "H*T")]
    RelationshipDiscovery,
    /// Everything given; the question is whether it holds.
    #[serde(rename = "HRT")]
    Verification,
    #[serde(rename = "hybrid")]
    Hybrid,
}

pub const BASE_PATTERNS: [QueryPattern; 4] = [
    QueryPattern::EntityCentric,
    QueryPattern::ObjectFinding,
    QueryPattern::RelationshipDiscovery,
    QueryPattern::Verification,
];

impl QueryPattern {
    pub const ALL: [QueryPattern; 5] = [
        QueryPattern::EntityCentric,
        QueryPattern::ObjectFinding,
        QueryPattern::RelationshipDiscovery,
        QueryPattern::Verification,
        QueryPattern::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryPattern::EntityCentric => "H__",
            QueryPattern::ObjectFinding => "HR*",
            QueryPattern::RelationshipDiscovery => "H*T",
            QueryPattern::Verification => "HRT",
            QueryPattern::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Simple,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Simple, Difficulty::Medium, Difficulty::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Simple => "simple",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

macro_rules! display_via_as_str {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    )*};
}
display_via_as_str!(AnswerType, QueryPattern, Difficulty);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub answer_type: AnswerType,
    pub query_pattern: QueryPattern,
    pub difficulty: Difficulty,
    /// The two distinct base patterns a hybrid combines, in order. Present
    /// iff `query_pattern` is hybrid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hybrid_of: Option<(QueryPattern, QueryPattern)>,
}

impl ObjectiveSpec {
    pub fn is_valid(&self) -> bool {
        match (self.query_pattern, self.hybrid_of) {
            (QueryPattern::Hybrid, Some((a, b))) => a != b && a != QueryPattern::Hybrid && b != QueryPattern::Hybrid,
            (QueryPattern::Hybrid, None) => false,
            (_, h) => h.is_none(),
        }
    }
}

/// Per-dimension sampling weights, in the order of each enum's `ALL`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub answer_type: [f64; 4],
    pub query_pattern: [f64; 5],
    pub difficulty: [f64; 3],
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            answer_type: [1.0; 4],
            query_pattern: [1.0; 5],
            difficulty: [1.0; 3],
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WeightsError {
    #[error("{dimension} weights must be finite and non-negative with a positive sum")]
    Invalid { dimension: &'static str },
}

fn index(weights: &[f64], dimension: &'static str) -> Result<WeightedIndex<f64>, WeightsError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(WeightsError::Invalid { dimension });
    }
    WeightedIndex::new(weights).map_err(|_| WeightsError::Invalid { dimension })
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<(), WeightsError> {
        index(&self.answer_type, "answer_type")?;
        index(&self.query_pattern, "query_pattern")?;
        index(&self.difficulty, "difficulty")?;
        Ok(())
    }
}

/// Draws each dimension independently. A hybrid draws its two component
/// patterns uniformly without replacement.
pub fn sample_objective<R: Rng + ?Sized>(
    rng: &mut R,
    weights: Option<&ObjectiveWeights>,
) -> Result<ObjectiveSpec, WeightsError> {
    let default = ObjectiveWeights::default();
    let w = weights.unwrap_or(&default);
    let answer_type = AnswerType::ALL[index(&w.answer_type, "answer_type")?.sample(rng)];
    let query_pattern = QueryPattern::ALL[index(&w.query_pattern, "query_pattern")?.sample(rng)];
    let difficulty = Difficulty::ALL[index(&w.difficulty, "difficulty")?.sample(rng)];
    let hybrid_of = (query_pattern == QueryPattern::Hybrid).then(|| {
        let first = rng.gen_range(0..BASE_PATTERNS.len());
        let mut second = rng.gen_range(0..BASE_PATTERNS.len() - 1);
        if second >= first {
            second += 1;
        }
        (BASE_PATTERNS[first], BASE_PATTERNS[second])
    });
    Ok(ObjectiveSpec {
        answer_type,
        query_pattern,
        difficulty,
        hybrid_of,
    })
}
