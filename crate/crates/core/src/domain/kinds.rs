use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the three structured aspects of a paper or idea.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetKind {
    Purpose,
    Mechanism,
    Evaluation,
}

impl FacetKind {
    pub const ALL: [FacetKind; 3] = [FacetKind::Purpose, FacetKind::Mechanism, FacetKind::Evaluation];

    pub fn as_str(self) -> &'static str {
        match self {
            FacetKind::Purpose => "purpose",
            FacetKind::Mechanism => "mechanism",
            FacetKind::Evaluation => "evaluation",
        }
    }

    /// Capitalized label used in the answer formats ("Purpose", "Mechanism", ...).
    pub fn label(self) -> &'static str {
        match self {
            FacetKind::Purpose => "Purpose",
            FacetKind::Mechanism => "Mechanism",
            FacetKind::Evaluation => "Evaluation",
        }
    }
}

impl fmt::Display for FacetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FacetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "purpose" => Ok(FacetKind::Purpose),
            "mechanism" => Ok(FacetKind::Mechanism),
            "evaluation" => Ok(FacetKind::Evaluation),
            other => Err(format!("unknown facet kind `{other}`")),
        }
    }
}

/// How analogically far a paper is from the input papers.
///
/// The derived ordering is the total order `input < very_near < near < far < very_far`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceClass {
    Input,
    VeryNear,
    Near,
    Far,
    VeryFar,
}

impl DistanceClass {
    pub const ANALOGOUS: [DistanceClass; 3] =
        [DistanceClass::Near, DistanceClass::Far, DistanceClass::VeryFar];

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceClass::Input => "input",
            DistanceClass::VeryNear => "very_near",
            DistanceClass::Near => "near",
            DistanceClass::Far => "far",
            DistanceClass::VeryFar => "very_far",
        }
    }

    /// Human-readable form used inside prompts ("very near", "very far").
    pub fn prompt_label(self) -> &'static str {
        match self {
            DistanceClass::Input => "input",
            DistanceClass::VeryNear => "very near",
            DistanceClass::Near => "near",
            DistanceClass::Far => "far",
            DistanceClass::VeryFar => "very far",
        }
    }

    pub fn is_analogous(self) -> bool {
        matches!(self, DistanceClass::Near | DistanceClass::Far | DistanceClass::VeryFar)
    }
}

impl fmt::Display for DistanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "input" => Ok(DistanceClass::Input),
            "very_near" => Ok(DistanceClass::VeryNear),
            "near" => Ok(DistanceClass::Near),
            "far" => Ok(DistanceClass::Far),
            "very_far" => Ok(DistanceClass::VeryFar),
            other => Err(format!("unknown distance class `{other}`")),
        }
    }
}
