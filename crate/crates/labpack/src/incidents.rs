//! Seed list of known experimental incidents, grouped by process activity.
//!
//! These are the incidents observed across the diagnosed replications,
//! shipped as a starting vocabulary. Codes are free slugs: new incidents
//! get new codes as they are observed.

use crate::assess::{IncidentCategory, IncidentRecord};

/// A seed incident: its category, slug code, human description, and the
/// replications it was observed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedIncident {
    pub category: IncidentCategory,
    pub code: &'static str,
    pub description: &'static str,
    pub observed_in: &'static [&'static str],
}

use IncidentCategory::*;

pub const SEED_INCIDENTS: &[SeedIncident] = &[
    // Communication
    SeedIncident { category: Communication, code: "no-communication", description: "No communication", observed_in: &["UPM 2000"] },
    SeedIncident { category: Communication, code: "communication-without-direct-contact", description: "Communication without direct contact", observed_in: &["UdS 2005"] },
    SeedIncident { category: Communication, code: "limited-or-after-the-event-communication", description: "Limited or after-the-event communication", observed_in: &["ORT 2005"] },
    SeedIncident { category: Communication, code: "no-meeting-held-to-validate-design", description: "No meeting held to validate design", observed_in: &["UdS 2005", "ORT 2005"] },
    SeedIncident { category: Communication, code: "no-in-person-observation-of-sessions", description: "No in-person observation of sessions", observed_in: &["UdS 2005", "ORT 2005"] },
    SeedIncident { category: Communication, code: "replicator-felt-cut-off", description: "Replicator felt cut off", observed_in: &["UdS 2005"] },
    SeedIncident { category: Communication, code: "there-were-a-lot-of-misgivings", description: "There were a lot of misgivings", observed_in: &["UPM 2000", "ORT 2005"] },
    // Experimental design
    SeedIncident { category: ExperimentalDesign, code: "experiment-is-hard-to-understand", description: "Experiment is hard to understand", observed_in: &["UPM 2004"] },
    SeedIncident { category: ExperimentalDesign, code: "less-time-assigned-to-one-of-the-treatments", description: "Less time assigned to one of the treatments", observed_in: &["UPV 2006"] },
    SeedIncident { category: ExperimentalDesign, code: "factor-crossing-error", description: "Factor crossing error", observed_in: &["UdS 2005", "UPV 2006"] },
    SeedIncident { category: ExperimentalDesign, code: "non-randomized-assignment-of-subgroups", description: "Non-randomized assignment of subgroups", observed_in: &["UdS 2005", "ORT 2005", "UPV 2006"] },
    SeedIncident { category: ExperimentalDesign, code: "unbalanced-experimental-groups", description: "Unbalanced experimental groups", observed_in: &["UdS 2005"] },
    // Training
    SeedIncident { category: Training, code: "misgivings-about-the-impact-of-the-design-change", description: "Misgivings about the impact of the design change", observed_in: &["UPM 2000", "ORT 2005"] },
    SeedIncident { category: Training, code: "underestimated-experiment-adaptation-workload", description: "Underestimated experiment adaptation workload", observed_in: &["UPM 2000", "ORT 2005"] },
    SeedIncident { category: Training, code: "reduced-training-time", description: "Reduced training time", observed_in: &["UdS 2005", "ORT 2005", "UPV 2006"] },
    SeedIncident { category: Training, code: "other-material-used-in-training", description: "Other material used in training", observed_in: &["UPM 2000", "ORT 2005", "UPV 2006"] },
    SeedIncident { category: Training, code: "training-received-did-not-match-the-treatment", description: "Training received did not match the treatment", observed_in: &["UdS 2005", "UPV 2006"] },
    // Material preparation
    SeedIncident { category: MaterialPreparation, code: "a-treatment-functional-technique-was-misunderstood", description: "A treatment (functional technique) was misunderstood", observed_in: &["UdS 2005"] },
    SeedIncident { category: MaterialPreparation, code: "a-treatment-structural-technique-was-misunderstood", description: "A treatment (structural technique) was misunderstood", observed_in: &["ORT 2005", "UPV 2006"] },
    SeedIncident { category: MaterialPreparation, code: "too-much-material-for-one-treatment", description: "Too much material for one treatment", observed_in: &["UPV 2006"] },
    SeedIncident { category: MaterialPreparation, code: "the-supplementary-sheet-was-removed", description: "The supplementary sheet was removed", observed_in: &["UdS 2005"] },
    SeedIncident { category: MaterialPreparation, code: "line-numbers-were-added-to-the-source-code", description: "Line numbers were added to the source code", observed_in: &["ORT 2005", "UPV 2006"] },
    SeedIncident { category: MaterialPreparation, code: "one-of-the-programs-could-not-be-compiled-on-the-platform", description: "One of the programs could not be compiled on the platform", observed_in: &["UPM 2000"] },
    SeedIncident { category: MaterialPreparation, code: "support-from-other-people-was-required-to-prepare-the-material", description: "Support from other people was required to prepare the material", observed_in: &["UPM 2004", "UPV 2006"] },
    SeedIncident { category: MaterialPreparation, code: "underestimated-material-preparation-workload", description: "Underestimated material preparation workload", observed_in: &["UdS 2005", "ORT 2005"] },
    // Operation
    SeedIncident { category: Operation, code: "fear-that-material-contingencies-would-affect-session-time", description: "Fear that material contingencies would affect session time", observed_in: &["ORT 2005", "UPV 2006"] },
    SeedIncident { category: Operation, code: "complex-time-consuming-activity", description: "Complex, time-consuming activity", observed_in: &["UPM 2000", "UdS 2005", "ORT 2005", "UPV 2006"] },
    SeedIncident { category: Operation, code: "participants-ask-a-lot-of-questions", description: "Participants ask a lot of questions", observed_in: &["UdS 2005", "ORT 2005", "UPV 2006"] },
    SeedIncident { category: Operation, code: "participants-do-not-read-all-the-material", description: "Participants do not read all the material", observed_in: &["UPV 2006"] },
    SeedIncident { category: Operation, code: "researcher-is-unfamiliar-with-objects-and-cannot-answer-questions", description: "Researcher is unfamiliar with objects and cannot answer questions", observed_in: &["UPM 2004", "UPV 2006"] },
    SeedIncident { category: Operation, code: "limited-session-time", description: "Limited session time", observed_in: &["UdS 2005", "ORT 2005"] },
    SeedIncident { category: Operation, code: "rigorous-atmosphere-of-session", description: "Rigorous atmosphere of session", observed_in: &["ORT 2005"] },
    // Data analysis
    SeedIncident { category: DataAnalysis, code: "effect-of-fatigue-on-participants", description: "Effect of fatigue on participants", observed_in: &["ORT 2005"] },
    SeedIncident { category: DataAnalysis, code: "some-participants-apply-wrong-treatment", description: "Some participants apply wrong treatment", observed_in: &["UPM 2000"] },
    SeedIncident { category: DataAnalysis, code: "no-analysis-was-conducted", description: "No analysis was conducted", observed_in: &["UdS 2005"] },
    SeedIncident { category: DataAnalysis, code: "analysis-was-postponed", description: "Analysis was postponed", observed_in: &["ORT 2005"] },
    SeedIncident { category: DataAnalysis, code: "support-from-another-person-was-required-to-complete-analysis", description: "Support from another person was required to complete analysis", observed_in: &["UPV 2006"] },
    SeedIncident { category: DataAnalysis, code: "correctness-criterion-defined-by-experimenter", description: "Correctness criterion defined by experimenter", observed_in: &["UdS 2005", "ORT 2005", "UPV 2006"] },
    SeedIncident { category: DataAnalysis, code: "test-cases-and-faults-written-by-participants-are-ambiguous", description: "Test cases and faults written by participants are ambiguous", observed_in: &["UPM 2000", "UPM 2004", "UPV 2006"] },
    SeedIncident { category: DataAnalysis, code: "correction-was-perceived-as-very-complicated", description: "Correction was perceived as very complicated", observed_in: &["UPM 2004", "UPV 2006"] },
    SeedIncident { category: DataAnalysis, code: "no-guidelines-or-examples-were-available-for-the-analysis", description: "No guidelines or examples were available for the analysis", observed_in: &["UPV 2006"] },
    SeedIncident { category: DataAnalysis, code: "no-previous-data-were-available-to-compare-results", description: "No previous data were available to compare results", observed_in: &["UPM 2000"] },
    // Research process
    SeedIncident { category: ResearchProcess, code: "fault-description-was-not-integrated-into-the-laboratory-package", description: "Fault description was not integrated into the laboratory package", observed_in: &["UPV 2006"] },
    SeedIncident { category: ResearchProcess, code: "fault-description-was-not-detailed-enough", description: "Fault description was not detailed enough", observed_in: &["UPM 2000"] },
    SeedIncident { category: ResearchProcess, code: "errors-in-the-fault-failure-description", description: "Errors in the fault/failure description", observed_in: &["UdS 2005"] },
    SeedIncident { category: ResearchProcess, code: "notes-taken-on-the-replication-were-destroyed", description: "Notes taken on the replication were destroyed", observed_in: &["UPM 2004", "ORT 2005", "UPV 2006"] },
    SeedIncident { category: ResearchProcess, code: "replication-reporting-was-postponed", description: "Replication reporting was postponed", observed_in: &["UPM 2000", "UdS 2005", "ORT 2005"] },
    SeedIncident { category: ResearchProcess, code: "research-cycle-was-incomplete", description: "Research cycle was incomplete", observed_in: &["UdS 2005", "ORT 2005", "UPV 2006"] },
    SeedIncident { category: ResearchProcess, code: "experiment-was-not-evolved", description: "Experiment was not evolved", observed_in: &["UdS 2005", "ORT 2005", "UPV 2006"] },
];

/// Incident records for one replication as observed in the seed data.
pub fn seed_incidents_for(replication_id: &str) -> Vec<IncidentRecord> {
    SEED_INCIDENTS
        .iter()
        .filter(|seed| seed.observed_in.contains(&replication_id))
        .map(|seed| IncidentRecord {
            replication_id: replication_id.to_string(),
            category: seed.category,
            code: seed.code.to_string(),
            description: seed.description.to_string(),
        })
        .collect()
}
