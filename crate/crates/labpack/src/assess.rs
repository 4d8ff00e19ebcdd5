//! Replication assessment: experimental incidents and the three rating
//! rubrics (usability, completeness, efficacy), plus effort logging.
//!
//! Incident categories follow the seven experimental-process activities.
//! Rubric values are ordinal chains ordered worst to best; usability uses a
//! five-point scale in half-point steps. PRE/POST summaries use exact
//! integer arithmetic over half points and round half-up to one decimal
//! only for display.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssessError {
    #[error("unknown incident category `{0}`")]
    UnknownCategory(String),
    #[error("no assessment recorded for replication `{0}`")]
    UnknownReplication(String),
    #[error("PRE/POST split leaves an empty partition")]
    EmptyPartition,
    #[error("cannot compare values from different ordinal chains ({0} vs {1})")]
    MixedChains(&'static str, &'static str),
    #[error("usability score for `{0}` is incomplete: missing {1}")]
    IncompleteScore(String, String),
    #[error("invalid score {0}: scores run 1.0..=5.0 in 0.5 steps")]
    InvalidScore(f64),
    #[error("invalid effort: person-hours must be a finite non-negative number")]
    InvalidEffort,
    #[error("incident code `{0}` is not a slug")]
    InvalidIncidentCode(String),
    #[error("assessment file {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Incidents
// ---------------------------------------------------------------------------

/// The seven experimental-process activities incidents are classified by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncidentCategory {
    Communication,
    ExperimentalDesign,
    Training,
    MaterialPreparation,
    Operation,
    DataAnalysis,
    ResearchProcess,
}

impl IncidentCategory {
    pub const ALL: [IncidentCategory; 7] = [
        IncidentCategory::Communication,
        IncidentCategory::ExperimentalDesign,
        IncidentCategory::Training,
        IncidentCategory::MaterialPreparation,
        IncidentCategory::Operation,
        IncidentCategory::DataAnalysis,
        IncidentCategory::ResearchProcess,
    ];

    pub fn label(self) -> &'static str {
        match self {
            IncidentCategory::Communication => "communication",
            IncidentCategory::ExperimentalDesign => "experimental-design",
            IncidentCategory::Training => "training",
            IncidentCategory::MaterialPreparation => "material-preparation",
            IncidentCategory::Operation => "operation",
            IncidentCategory::DataAnalysis => "data-analysis",
            IncidentCategory::ResearchProcess => "research-process",
        }
    }
}

impl fmt::Display for IncidentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The category set is closed; anything else is rejected here, at the
/// parsing boundary.
impl FromStr for IncidentCategory {
    type Err = AssessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IncidentCategory::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| AssessError::UnknownCategory(s.to_string()))
    }
}

/// One observed problem or obstacle in a replication. Codes are free slugs
/// under the fixed categories; [`crate::incidents::SEED_INCIDENTS`] ships
/// the known ones but new codes are welcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub replication_id: String,
    pub category: IncidentCategory,
    pub code: String,
    #[serde(default)]
    pub description: String,
}

// ---------------------------------------------------------------------------
// Usability rubric
// ---------------------------------------------------------------------------

/// The three usability attributes grouping the nine components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UsabilityAttribute {
    EaseOfApplication,
    EaseOfUnderstanding,
    EaseOfSearch,
}

impl UsabilityAttribute {
    pub fn label(self) -> &'static str {
        match self {
            UsabilityAttribute::EaseOfApplication => "ease of application",
            UsabilityAttribute::EaseOfUnderstanding => "ease of understanding",
            UsabilityAttribute::EaseOfSearch => "ease of search",
        }
    }
}

/// The nine rated usability components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UsabilityComponent {
    TaskOrientation,
    Accuracy,
    Completeness,
    Clarity,
    Concretion,
    Style,
    Organization,
    Retrievability,
    VisualEffectiveness,
}

impl UsabilityComponent {
    pub const ALL: [UsabilityComponent; 9] = [
        UsabilityComponent::TaskOrientation,
        UsabilityComponent::Accuracy,
        UsabilityComponent::Completeness,
        UsabilityComponent::Clarity,
        UsabilityComponent::Concretion,
        UsabilityComponent::Style,
        UsabilityComponent::Organization,
        UsabilityComponent::Retrievability,
        UsabilityComponent::VisualEffectiveness,
    ];

    pub fn attribute(self) -> UsabilityAttribute {
        match self {
            UsabilityComponent::TaskOrientation
            | UsabilityComponent::Accuracy
            | UsabilityComponent::Completeness => UsabilityAttribute::EaseOfApplication,
            UsabilityComponent::Clarity | UsabilityComponent::Concretion | UsabilityComponent::Style => {
                UsabilityAttribute::EaseOfUnderstanding
            }
            UsabilityComponent::Organization
            | UsabilityComponent::Retrievability
            | UsabilityComponent::VisualEffectiveness => UsabilityAttribute::EaseOfSearch,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            UsabilityComponent::TaskOrientation => "task-orientation",
            UsabilityComponent::Accuracy => "accuracy",
            UsabilityComponent::Completeness => "completeness",
            UsabilityComponent::Clarity => "clarity",
            UsabilityComponent::Concretion => "concretion",
            UsabilityComponent::Style => "style",
            UsabilityComponent::Organization => "organization",
            UsabilityComponent::Retrievability => "retrievability",
            UsabilityComponent::VisualEffectiveness => "visual-effectiveness",
        }
    }
}

impl fmt::Display for UsabilityComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for UsabilityComponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UsabilityComponent::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| format!("unknown usability component `{s}`"))
    }
}

/// A score on the five-point scale in half-point steps, stored exactly as
/// twice its value (2..=10). Half points are legal: observed ratings
/// include 1.5 and 3.5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfScore(u8);

impl HalfScore {
    pub fn from_f64(value: f64) -> Result<HalfScore, AssessError> {
        let doubled = value * 2.0;
        if doubled.fract() == 0.0 && (2.0..=10.0).contains(&doubled) {
            Ok(HalfScore(doubled as u8))
        } else {
            Err(AssessError::InvalidScore(value))
        }
    }

    /// The score value times two (an exact integer).
    pub fn doubled(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl Serialize for HalfScore {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for HalfScore {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        HalfScore::from_f64(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for HalfScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}

/// The (complete) usability rating one experimenter gave one replication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsabilityScore {
    pub replication_id: String,
    pub values: BTreeMap<UsabilityComponent, HalfScore>,
}

impl UsabilityScore {
    pub fn new(
        replication_id: impl Into<String>,
        values: BTreeMap<UsabilityComponent, HalfScore>,
    ) -> Result<UsabilityScore, AssessError> {
        let score = UsabilityScore {
            replication_id: replication_id.into(),
            values,
        };
        score.validate()?;
        Ok(score)
    }

    pub fn validate(&self) -> Result<(), AssessError> {
        for component in UsabilityComponent::ALL {
            if !self.values.contains_key(&component) {
                return Err(AssessError::IncompleteScore(
                    self.replication_id.clone(),
                    component.label().to_string(),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Ordinal chains (completeness and efficacy rubrics)
// ---------------------------------------------------------------------------

macro_rules! ordinal_chain {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "kebab-case")]
        pub enum $name {
            $($variant,)+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.label() == s)
                    .ok_or_else(|| format!(concat!("unknown ", stringify!($name), " value `{}`"), s))
            }
        }
    };
}

ordinal_chain!(
    /// Worst to best: how instructive the package is.
    InstructionLevel {
        MaterialsOnly => "materials-only",
        Basic => "basic",
        Detailed => "detailed",
        DetailedGrounded => "detailed-grounded",
    }
);

ordinal_chain!(
    /// Worst to best: how adaptable the design is to a new context.
    Adaptability {
        Unchangeable => "unchangeable",
        PartiallyAdaptable => "partially-adaptable",
        Adaptable => "adaptable",
    }
);

ordinal_chain!(
    /// Worst to best: whether the replication was reported back.
    ReplicationReported {
        No => "no",
        Late => "late",
        Yes => "yes",
    }
);

ordinal_chain!(
    /// Worst to best: whether results were aggregated across studies.
    AggregatedResults {
        No => "no",
        Partial => "partial",
        Yes => "yes",
    }
);

ordinal_chain!(
    /// Worst to best: how experiment versions are managed.
    VersionControl {
        No => "no",
        CurrentVersionOnly => "current-version-only",
        Log => "log",
        RetrievableVersions => "retrievable-versions",
    }
);

ordinal_chain!(
    /// Worst to best: how well the package answers replicator questions.
    QuestionAnswering {
        Low => "low",
        Medium => "medium",
        High => "high",
        Complete => "complete",
    }
);

ordinal_chain!(
    /// Best to worst severity: slight incidents do not alter the course of
    /// the replication, serious ones block results integration. The chain
    /// is declared in this order; slight is the best outcome.
    ErrorSeverity {
        Slight => "slight",
        Medium => "medium",
        Serious => "serious",
    }
);

/// How well the experimental environment was reproduced. `NotApplicable`
/// sits outside the ordinal chain and compares to nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentReproduction {
    NotApplicable,
    Low,
    Medium,
    Complete,
}

impl EnvironmentReproduction {
    pub const ALL: &'static [EnvironmentReproduction] = &[
        EnvironmentReproduction::NotApplicable,
        EnvironmentReproduction::Low,
        EnvironmentReproduction::Medium,
        EnvironmentReproduction::Complete,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EnvironmentReproduction::NotApplicable => "not-applicable",
            EnvironmentReproduction::Low => "low",
            EnvironmentReproduction::Medium => "medium",
            EnvironmentReproduction::Complete => "complete",
        }
    }

    /// Position in the ordinal chain; `None` for the unordered NA.
    fn chain_position(self) -> Option<u8> {
        match self {
            EnvironmentReproduction::NotApplicable => None,
            EnvironmentReproduction::Low => Some(0),
            EnvironmentReproduction::Medium => Some(1),
            EnvironmentReproduction::Complete => Some(2),
        }
    }
}

impl fmt::Display for EnvironmentReproduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EnvironmentReproduction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|v| v.label() == s)
            .ok_or_else(|| format!("unknown environment reproduction value `{s}`"))
    }
}

/// One coverage area of the completeness Scope attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeArea {
    Training,
    Design,
    Operational,
}

/// Scope of the package: either complete or a non-empty subset of areas.
/// `Complete` includes all elements, so it never coexists with a subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Complete,
    Partial(BTreeSet<ScopeArea>),
}

impl Scope {
    pub fn partial(areas: impl IntoIterator<Item = ScopeArea>) -> Scope {
        Scope::Partial(areas.into_iter().collect())
    }
}

impl Serialize for Scope {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scope::Complete => serializer.serialize_str("complete"),
            Scope::Partial(areas) => areas.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::String(s) if s == "complete" => Ok(Scope::Complete),
            serde_json::Value::Array(_) => {
                let areas: BTreeSet<ScopeArea> =
                    serde_json::from_value(value).map_err(D::Error::custom)?;
                if areas.is_empty() {
                    return Err(D::Error::custom("scope subset must be non-empty"));
                }
                Ok(Scope::Partial(areas))
            }
            other => Err(D::Error::custom(format!(
                "scope must be \"complete\" or an array of areas, got {other}"
            ))),
        }
    }
}

/// Completeness rubric values for one replication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletenessRating {
    pub scope: Scope,
    pub instruction_level: InstructionLevel,
    pub adaptability: Adaptability,
    pub replication_reported: ReplicationReported,
    pub aggregated_results: AggregatedResults,
    pub version_control: VersionControl,
}

/// Efficacy rubric values for one replication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficacyRating {
    pub question_answering: QuestionAnswering,
    pub environment_reproduction: EnvironmentReproduction,
    pub mean_error_severity: ErrorSeverity,
}

/// The activity an effort figure belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffortActivity {
    Instantiation,
    Replication,
}

impl FromStr for EffortActivity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "instantiation" => Ok(EffortActivity::Instantiation),
            "replication" => Ok(EffortActivity::Replication),
            other => Err(format!("unknown effort activity `{other}`")),
        }
    }
}

/// Logged effort in person-hours, non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortRecord {
    pub activity: EffortActivity,
    pub person_hours: f64,
}

impl EffortRecord {
    pub fn new(activity: EffortActivity, person_hours: f64) -> Result<EffortRecord, AssessError> {
        if !person_hours.is_finite() || person_hours < 0.0 {
            return Err(AssessError::InvalidEffort);
        }
        Ok(EffortRecord {
            activity,
            person_hours,
        })
    }
}

// ---------------------------------------------------------------------------
// Generic ordinal comparison
// ---------------------------------------------------------------------------

/// Result of comparing two rubric values; `Incomparable` is the distinct
/// outcome for the not-applicable environment value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdinalOrdering {
    Less,
    Equal,
    Greater,
    Incomparable,
}

/// A rubric value tagged with its chain, for dynamic comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingValue {
    InstructionLevel(InstructionLevel),
    Adaptability(Adaptability),
    ReplicationReported(ReplicationReported),
    AggregatedResults(AggregatedResults),
    VersionControl(VersionControl),
    QuestionAnswering(QuestionAnswering),
    EnvironmentReproduction(EnvironmentReproduction),
    ErrorSeverity(ErrorSeverity),
}

impl RatingValue {
    pub fn chain_name(&self) -> &'static str {
        match self {
            RatingValue::InstructionLevel(_) => "instruction-level",
            RatingValue::Adaptability(_) => "adaptability",
            RatingValue::ReplicationReported(_) => "replication-reported",
            RatingValue::AggregatedResults(_) => "aggregated-results",
            RatingValue::VersionControl(_) => "version-control",
            RatingValue::QuestionAnswering(_) => "question-answering",
            RatingValue::EnvironmentReproduction(_) => "environment-reproduction",
            RatingValue::ErrorSeverity(_) => "error-severity",
        }
    }

    /// Position in the declared chain; `None` only for NA.
    fn position(&self) -> Option<u8> {
        match self {
            RatingValue::InstructionLevel(v) => Some(*v as u8),
            RatingValue::Adaptability(v) => Some(*v as u8),
            RatingValue::ReplicationReported(v) => Some(*v as u8),
            RatingValue::AggregatedResults(v) => Some(*v as u8),
            RatingValue::VersionControl(v) => Some(*v as u8),
            RatingValue::QuestionAnswering(v) => Some(*v as u8),
            RatingValue::EnvironmentReproduction(v) => v.chain_position(),
            RatingValue::ErrorSeverity(v) => Some(*v as u8),
        }
    }

    /// Every value of every chain, used for exhaustive order checks.
    pub fn all_chains() -> Vec<Vec<RatingValue>> {
        vec![
            InstructionLevel::ALL.iter().map(|&v| RatingValue::InstructionLevel(v)).collect(),
            Adaptability::ALL.iter().map(|&v| RatingValue::Adaptability(v)).collect(),
            ReplicationReported::ALL.iter().map(|&v| RatingValue::ReplicationReported(v)).collect(),
            AggregatedResults::ALL.iter().map(|&v| RatingValue::AggregatedResults(v)).collect(),
            VersionControl::ALL.iter().map(|&v| RatingValue::VersionControl(v)).collect(),
            QuestionAnswering::ALL.iter().map(|&v| RatingValue::QuestionAnswering(v)).collect(),
            EnvironmentReproduction::ALL.iter().map(|&v| RatingValue::EnvironmentReproduction(v)).collect(),
            ErrorSeverity::ALL.iter().map(|&v| RatingValue::ErrorSeverity(v)).collect(),
        ]
    }
}

/// Compares two rubric values from the same chain per the declared order;
/// the not-applicable environment value is incomparable with everything,
/// itself included. Values from different chains are a caller error.
pub fn compare_ordinal(a: &RatingValue, b: &RatingValue) -> Result<OrdinalOrdering, AssessError> {
    if std::mem::discriminant(a) != std::mem::discriminant(b) {
        return Err(AssessError::MixedChains(a.chain_name(), b.chain_name()));
    }
    Ok(match (a.position(), b.position()) {
        (Some(pa), Some(pb)) => match pa.cmp(&pb) {
            std::cmp::Ordering::Less => OrdinalOrdering::Less,
            std::cmp::Ordering::Equal => OrdinalOrdering::Equal,
            std::cmp::Ordering::Greater => OrdinalOrdering::Greater,
        },
        _ => OrdinalOrdering::Incomparable,
    })
}

// ---------------------------------------------------------------------------
// PRE/POST summary
// ---------------------------------------------------------------------------

/// An exact arithmetic mean of half-point scores: the raw sum and count are
/// kept so no precision is lost before display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeanScore {
    /// Sum of doubled scores.
    sum_halves: u64,
    count: u64,
}

impl MeanScore {
    fn of(scores: &[HalfScore]) -> MeanScore {
        MeanScore {
            sum_halves: scores.iter().map(|s| u64::from(s.doubled())).sum(),
            count: scores.len() as u64,
        }
    }

    /// The mean in tenths, rounded half-up: 18/5 -> 36 ("3.6").
    pub fn tenths_round_half_up(&self) -> u64 {
        // mean = sum_halves / (2 * count); tenths = round(10 * mean).
        let numerator = 10 * self.sum_halves;
        let denominator = 2 * self.count;
        (2 * numerator + denominator) / (2 * denominator)
    }

    pub fn as_f64(&self) -> f64 {
        self.sum_halves as f64 / (2.0 * self.count as f64)
    }
}

impl fmt::Display for MeanScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tenths = self.tenths_round_half_up();
        write!(f, "{}.{}", tenths / 10, tenths % 10)
    }
}

/// Per-component PRE and POST means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrePost {
    pub pre: MeanScore,
    pub post: MeanScore,
}

/// Splits the scores into PRE (not in `post_ids`) and POST (in `post_ids`)
/// and returns the arithmetic mean per component for each side. Arithmetic
/// is exact; rounding happens only at display time.
pub fn summarize_pre_post(
    scores: &[UsabilityScore],
    post_ids: &BTreeSet<String>,
) -> Result<BTreeMap<UsabilityComponent, PrePost>, AssessError> {
    for score in scores {
        score.validate()?;
    }
    let known: BTreeSet<&str> = scores.iter().map(|s| s.replication_id.as_str()).collect();
    for id in post_ids {
        if !known.contains(id.as_str()) {
            return Err(AssessError::UnknownReplication(id.clone()));
        }
    }
    let (post, pre): (Vec<&UsabilityScore>, Vec<&UsabilityScore>) = scores
        .iter()
        .partition(|s| post_ids.contains(&s.replication_id));
    if pre.is_empty() || post.is_empty() {
        return Err(AssessError::EmptyPartition);
    }

    let mut summary = BTreeMap::new();
    for component in UsabilityComponent::ALL {
        let collect = |side: &[&UsabilityScore]| -> Vec<HalfScore> {
            side.iter().map(|s| s.values[&component]).collect()
        };
        summary.insert(
            component,
            PrePost {
                pre: MeanScore::of(&collect(&pre)),
                post: MeanScore::of(&collect(&post)),
            },
        );
    }
    Ok(summary)
}

/// PRE/POST summary rendered as deterministic JSON with one-decimal values.
pub fn summary_json(summary: &BTreeMap<UsabilityComponent, PrePost>) -> String {
    let view: BTreeMap<&'static str, BTreeMap<&'static str, String>> = summary
        .iter()
        .map(|(component, cell)| {
            let mut entry = BTreeMap::new();
            entry.insert("post", cell.post.to_string());
            entry.insert("pre", cell.pre.to_string());
            (component.label(), entry)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&view).expect("summary serializes");
    s.push('\n');
    s
}

pub fn summary_text(summary: &BTreeMap<UsabilityComponent, PrePost>) -> String {
    let mut out = String::from("component             mean-pre  mean-post\n");
    for (component, cell) in summary {
        out.push_str(&format!(
            "{:<22}{:>8}{:>11}\n",
            component.label(),
            cell.pre.to_string(),
            cell.post.to_string()
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Per-replication assessment records and their store
// ---------------------------------------------------------------------------

/// Everything recorded for one replication: incidents plus the three rubric
/// blocks and effort figures.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assessment {
    #[serde(skip)]
    pub replication_id: String,
    #[serde(default)]
    pub completeness: Option<CompletenessRating>,
    #[serde(default)]
    pub efficacy: Option<EfficacyRating>,
    #[serde(default)]
    pub effort: Vec<EffortRecord>,
    #[serde(default)]
    pub incidents: Vec<IncidentRecord>,
    #[serde(default)]
    pub usability: Option<BTreeMap<UsabilityComponent, HalfScore>>,
}

impl Assessment {
    pub fn new(replication_id: impl Into<String>) -> Assessment {
        Assessment {
            replication_id: replication_id.into(),
            ..Assessment::default()
        }
    }

    pub fn usability_score(&self) -> Option<UsabilityScore> {
        self.usability.as_ref().map(|values| UsabilityScore {
            replication_id: self.replication_id.clone(),
            values: values.clone(),
        })
    }
}

/// File-backed assessment records under `assessments/` in a package root.
/// Appends rewrite the per-replication JSON file deterministically and run
/// under the package write lock; reads are lock-free.
pub struct AssessmentStore {
    root: PathBuf,
    dir: PathBuf,
}

impl AssessmentStore {
    pub fn open(package_root: &Path) -> AssessmentStore {
        AssessmentStore {
            root: package_root.to_path_buf(),
            dir: package_root.join("assessments"),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn file_for(&self, replication_id: &str) -> PathBuf {
        self.dir.join(format!("{}.json", crate::model::slugify(replication_id)))
    }

    pub fn exists(&self, replication_id: &str) -> bool {
        self.file_for(replication_id).exists()
    }

    /// Replication ids present in the store, sorted.
    pub fn replication_ids(&self) -> Result<Vec<String>, AssessError> {
        let mut ids = Vec::new();
        if !self.dir.exists() {
            return Ok(ids);
        }
        let entries = std::fs::read_dir(&self.dir).map_err(|source| AssessError::Io {
            path: self.dir.clone(),
            source,
        })?;
        for entry in entries {
            let entry = entry.map_err(|source| AssessError::Io {
                path: self.dir.clone(),
                source,
            })?;
            let path = entry.path();
            if path.extension().is_some_and(|e| e == "json") {
                ids.push(read_assessment_file(&path)?.replication_id);
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn load(&self, replication_id: &str) -> Result<Assessment, AssessError> {
        let path = self.file_for(replication_id);
        if !path.exists() {
            return Err(AssessError::UnknownReplication(replication_id.to_string()));
        }
        let assessment = read_assessment_file(&path)?;
        if assessment.replication_id != replication_id {
            return Err(AssessError::Malformed {
                path,
                message: format!(
                    "file records replication `{}`, expected `{replication_id}`",
                    assessment.replication_id
                ),
            });
        }
        Ok(assessment)
    }

    pub fn load_all(&self) -> Result<Vec<Assessment>, AssessError> {
        self.replication_ids()?
            .iter()
            .map(|id| self.load(id))
            .collect()
    }

    fn update(
        &self,
        replication_id: &str,
        apply: impl FnOnce(&mut Assessment),
    ) -> Result<(), AssessError> {
        let _lock = crate::store::PackageLock::acquire(&self.root).map_err(|e| match e {
            crate::store::StoreError::LockHeld(path) => AssessError::Io {
                path,
                source: std::io::Error::new(
                    std::io::ErrorKind::WouldBlock,
                    "package is locked by another writer",
                ),
            },
            crate::store::StoreError::Io { path, source } => AssessError::Io { path, source },
            other => AssessError::Io {
                path: self.root.clone(),
                source: std::io::Error::other(other.to_string()),
            },
        })?;
        let mut assessment = if self.exists(replication_id) {
            self.load(replication_id)?
        } else {
            Assessment::new(replication_id)
        };
        apply(&mut assessment);
        self.save(&assessment)
    }

    pub fn save(&self, assessment: &Assessment) -> Result<(), AssessError> {
        std::fs::create_dir_all(&self.dir).map_err(|source| AssessError::Io {
            path: self.dir.clone(),
            source,
        })?;
        let path = self.file_for(&assessment.replication_id);
        let bytes = assessment_file_bytes(assessment);
        std::fs::write(&path, bytes).map_err(|source| AssessError::Io { path, source })
    }

    /// Appends an incident to the replication's record file.
    pub fn record_incident(&self, record: &IncidentRecord) -> Result<(), AssessError> {
        if record.code.is_empty() || !crate::model::is_slug(&record.code) {
            return Err(AssessError::InvalidIncidentCode(record.code.clone()));
        }
        self.update(&record.replication_id, |a| {
            a.incidents.push(record.clone());
        })
    }

    pub fn record_usability(&self, score: &UsabilityScore) -> Result<(), AssessError> {
        score.validate()?;
        self.update(&score.replication_id, |a| {
            a.usability = Some(score.values.clone());
        })
    }

    pub fn record_completeness(
        &self,
        replication_id: &str,
        rating: &CompletenessRating,
    ) -> Result<(), AssessError> {
        self.update(replication_id, |a| a.completeness = Some(rating.clone()))
    }

    pub fn record_efficacy(
        &self,
        replication_id: &str,
        rating: &EfficacyRating,
    ) -> Result<(), AssessError> {
        self.update(replication_id, |a| a.efficacy = Some(rating.clone()))
    }

    pub fn record_effort(
        &self,
        replication_id: &str,
        record: &EffortRecord,
    ) -> Result<(), AssessError> {
        if !record.person_hours.is_finite() || record.person_hours < 0.0 {
            return Err(AssessError::InvalidEffort);
        }
        self.update(replication_id, |a| a.effort.push(record.clone()))
    }

    /// Incidents across the store, optionally filtered by category and/or
    /// replication, ordered by (replication, category, code).
    pub fn query_incidents(
        &self,
        category: Option<IncidentCategory>,
        replication_id: Option<&str>,
    ) -> Result<Vec<IncidentRecord>, AssessError> {
        let mut out = Vec::new();
        for assessment in self.load_all()? {
            if replication_id.is_some_and(|id| id != assessment.replication_id) {
                continue;
            }
            for incident in assessment.incidents {
                if category.is_none_or(|c| c == incident.category) {
                    out.push(incident);
                }
            }
        }
        out.sort_by(|a, b| {
            (&a.replication_id, a.category, &a.code).cmp(&(&b.replication_id, b.category, &b.code))
        });
        Ok(out)
    }
}

/// Serializes one assessment file; key order is fixed by field declaration
/// so regenerating the file is byte-stable.
pub fn assessment_file_bytes(assessment: &Assessment) -> Vec<u8> {
    #[derive(Serialize)]
    struct FileShape<'a> {
        completeness: &'a Option<CompletenessRating>,
        efficacy: &'a Option<EfficacyRating>,
        effort: &'a [EffortRecord],
        incidents: &'a [IncidentRecord],
        replication_id: &'a str,
        usability: &'a Option<BTreeMap<UsabilityComponent, HalfScore>>,
    }
    let shape = FileShape {
        completeness: &assessment.completeness,
        efficacy: &assessment.efficacy,
        effort: &assessment.effort,
        incidents: &assessment.incidents,
        replication_id: &assessment.replication_id,
        usability: &assessment.usability,
    };
    let mut bytes = serde_json::to_vec_pretty(&shape).expect("assessment serializes");
    bytes.push(b'\n');
    bytes
}

pub fn read_assessment_file(path: &Path) -> Result<Assessment, AssessError> {
    let text = std::fs::read_to_string(path).map_err(|source| AssessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_assessment_json(&text).map_err(|message| AssessError::Malformed {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_assessment_json(text: &str) -> Result<Assessment, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let replication_id = value
        .get("replication_id")
        .and_then(serde_json::Value::as_str)
        .ok_or("missing replication_id")?
        .to_string();
    let mut assessment: Assessment =
        serde_json::from_value(value).map_err(|e| e.to_string())?;
    assessment.replication_id = replication_id;
    if let Some(values) = &assessment.usability {
        for component in UsabilityComponent::ALL {
            if !values.contains_key(&component) {
                return Err(format!("usability block is missing {}", component.label()));
            }
        }
    }
    for effort in &assessment.effort {
        if !effort.person_hours.is_finite() || effort.person_hours < 0.0 {
            return Err("effort person_hours must be non-negative".to_string());
        }
    }
    Ok(assessment)
}

// ---------------------------------------------------------------------------
// Assessment report
// ---------------------------------------------------------------------------

/// Deterministic per-replication report: incidents grouped by category, the
/// three rubric blocks and the effort figures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentReport {
    pub replication_id: String,
    pub incident_count: usize,
    pub incidents_by_category: BTreeMap<IncidentCategory, Vec<IncidentRecord>>,
    pub usability: Option<BTreeMap<UsabilityComponent, HalfScore>>,
    pub completeness: Option<CompletenessRating>,
    pub efficacy: Option<EfficacyRating>,
    pub effort: Vec<EffortRecord>,
}

impl AssessmentReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("assessment: {}\n", self.replication_id));
        out.push_str(&format!("incidents: {}\n", self.incident_count));
        for (category, incidents) in &self.incidents_by_category {
            out.push_str(&format!("  {category} ({}):\n", incidents.len()));
            for incident in incidents {
                if incident.description.is_empty() {
                    out.push_str(&format!("    - {}\n", incident.code));
                } else {
                    out.push_str(&format!("    - {}: {}\n", incident.code, incident.description));
                }
            }
        }
        if let Some(usability) = &self.usability {
            out.push_str("usability:\n");
            for (component, score) in usability {
                out.push_str(&format!("  {component}: {score}\n"));
            }
        }
        if let Some(completeness) = &self.completeness {
            out.push_str("completeness:\n");
            let scope = match &completeness.scope {
                Scope::Complete => "complete".to_string(),
                Scope::Partial(areas) => areas
                    .iter()
                    .map(|a| format!("{a:?}").to_lowercase())
                    .collect::<Vec<_>>()
                    .join(", "),
            };
            out.push_str(&format!("  scope: {scope}\n"));
            out.push_str(&format!("  instruction level: {}\n", completeness.instruction_level));
            out.push_str(&format!("  adaptability: {}\n", completeness.adaptability));
            out.push_str(&format!("  replication reported: {}\n", completeness.replication_reported));
            out.push_str(&format!("  aggregated results: {}\n", completeness.aggregated_results));
            out.push_str(&format!("  version control: {}\n", completeness.version_control));
        }
        if let Some(efficacy) = &self.efficacy {
            out.push_str("efficacy:\n");
            out.push_str(&format!("  question answering: {}\n", efficacy.question_answering));
            out.push_str(&format!("  environment reproduction: {}\n", efficacy.environment_reproduction));
            out.push_str(&format!("  mean error severity: {}\n", efficacy.mean_error_severity));
        }
        for effort in &self.effort {
            out.push_str(&format!(
                "effort: {:?} {} person-hours\n",
                effort.activity, effort.person_hours
            ));
        }
        out
    }
}

/// Builds the structured report for one replication. Requires at least one
/// record for the id.
pub fn assessment_report(
    store: &AssessmentStore,
    replication_id: &str,
) -> Result<AssessmentReport, AssessError> {
    let assessment = store.load(replication_id)?;
    Ok(report_for(&assessment))
}

/// Report over an already-loaded assessment (used by the package parser
/// path as well, where no store is at hand).
pub fn report_for(assessment: &Assessment) -> AssessmentReport {
    let mut incidents_by_category: BTreeMap<IncidentCategory, Vec<IncidentRecord>> = BTreeMap::new();
    for incident in &assessment.incidents {
        incidents_by_category
            .entry(incident.category)
            .or_default()
            .push(incident.clone());
    }
    for incidents in incidents_by_category.values_mut() {
        incidents.sort_by(|a, b| a.code.cmp(&b.code));
    }
    AssessmentReport {
        replication_id: assessment.replication_id.clone(),
        incident_count: assessment.incidents.len(),
        incidents_by_category,
        usability: assessment.usability.clone(),
        completeness: assessment.completeness.clone(),
        efficacy: assessment.efficacy.clone(),
        effort: assessment.effort.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_category_is_rejected_at_parse() {
        let err = "Logistics".parse::<IncidentCategory>().unwrap_err();
        assert!(matches!(err, AssessError::UnknownCategory(s) if s == "Logistics"));
        assert_eq!("operation".parse::<IncidentCategory>().unwrap(), IncidentCategory::Operation);
    }

    #[test]
    fn half_scores_validate_steps() {
        assert!(HalfScore::from_f64(1.0).is_ok());
        assert!(HalfScore::from_f64(3.5).is_ok());
        assert!(HalfScore::from_f64(5.0).is_ok());
        assert!(HalfScore::from_f64(0.5).is_err());
        assert!(HalfScore::from_f64(5.5).is_err());
        assert!(HalfScore::from_f64(3.25).is_err());
    }

    #[test]
    fn mean_rounding_is_half_up_to_one_decimal() {
        // 18/5 = 3.6 exactly.
        let mean = MeanScore { sum_halves: 36, count: 5 };
        assert_eq!(mean.tenths_round_half_up(), 36);
        assert_eq!(mean.to_string(), "3.6");
        // 2.25 rounds half-up to 2.3.
        let mean = MeanScore { sum_halves: 9, count: 2 };
        assert_eq!(mean.tenths_round_half_up(), 23);
        // 2.0 stays 2.0.
        let mean = MeanScore { sum_halves: 20, count: 5 };
        assert_eq!(mean.to_string(), "2.0");
    }

    #[test]
    fn ordinal_comparisons_follow_declared_chains() {
        let detailed = RatingValue::InstructionLevel(InstructionLevel::Detailed);
        let basic = RatingValue::InstructionLevel(InstructionLevel::Basic);
        assert_eq!(compare_ordinal(&detailed, &basic).unwrap(), OrdinalOrdering::Greater);

        let slight = RatingValue::ErrorSeverity(ErrorSeverity::Slight);
        let serious = RatingValue::ErrorSeverity(ErrorSeverity::Serious);
        assert_eq!(compare_ordinal(&slight, &serious).unwrap(), OrdinalOrdering::Less);

        let na = RatingValue::EnvironmentReproduction(EnvironmentReproduction::NotApplicable);
        let complete = RatingValue::EnvironmentReproduction(EnvironmentReproduction::Complete);
        assert_eq!(compare_ordinal(&na, &complete).unwrap(), OrdinalOrdering::Incomparable);
        assert_eq!(compare_ordinal(&na, &na).unwrap(), OrdinalOrdering::Incomparable);

        assert!(matches!(
            compare_ordinal(&detailed, &slight),
            Err(AssessError::MixedChains(_, _))
        ));
    }

    #[test]
    fn empty_partition_is_an_error() {
        let scores: Vec<UsabilityScore> = ["a", "b"]
            .iter()
            .map(|id| UsabilityScore {
                replication_id: id.to_string(),
                values: UsabilityComponent::ALL
                    .iter()
                    .map(|&c| (c, HalfScore::from_f64(3.0).unwrap()))
                    .collect(),
            })
            .collect();
        let all: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert!(matches!(
            summarize_pre_post(&scores, &all),
            Err(AssessError::EmptyPartition)
        ));
        assert!(matches!(
            summarize_pre_post(&scores, &BTreeSet::new()),
            Err(AssessError::EmptyPartition)
        ));
    }
}
