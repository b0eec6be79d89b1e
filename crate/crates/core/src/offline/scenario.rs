//! The scripted session used to record the committed fixtures. Replaying it
//! against those fixtures issues exactly the recorded requests.

use crate::domain::{Classification, DistanceClass, FacetKind, Provenance};
use crate::ideas::FacetSelection;
use crate::novelty::{builtin_examples, Variant};
use crate::session::{Engine, EngineError, PaperInput, SessionDir, SessionState};

pub const DEMO_TOPIC: &str = "human-AI collaboration in art";
pub const DEMO_INPUTS: [&str; 3] = ["art01", "art02", "art03"];
pub const DEMO_QUERY: &str = "knowledge graphs";
pub const DEMO_OVERRIDE_REASON: &str = "The closest paper already pairs this purpose with this mechanism.";

pub fn demo_inputs() -> Vec<PaperInput> {
    DEMO_INPUTS.into_iter().map(PaperInput::id).collect()
}

/// The first input-paper purpose and the first far-tier mechanism.
pub fn demo_selection(state: &SessionState) -> FacetSelection {
    let first = |kind: FacetKind, distance: DistanceClass| {
        state
            .facets
            .values()
            .find(|f| f.kind == kind && matches!(&f.provenance, Provenance::Paper { distance: d, .. } if *d == distance))
            .map(|f| f.id.clone())
    };
    FacetSelection {
        purpose_ids: first(FacetKind::Purpose, DistanceClass::Input).into_iter().collect(),
        mechanism_ids: first(FacetKind::Mechanism, DistanceClass::Far).into_iter().collect(),
        ..Default::default()
    }
}

/// Labeled not-novel idea texts entered as user ideas.
pub fn demo_user_ideas() -> Vec<String> {
    builtin_examples().iter().filter(|e| e.label == Classification::NotNovel).map(|e| e.idea.clone()).collect()
}

/// Initialization, an initial round, query and analogy facet rounds, a
/// paired round, user ideas, assessments of every idea, and an override of
/// the first idea followed by its suggestions when it becomes not novel.
pub async fn demo_session(engine: &Engine, dir: Option<&SessionDir>) -> Result<SessionState, EngineError> {
    let (mut s, created) = engine.create(DEMO_TOPIC, &demo_inputs()).await?;
    if let Some(d) = dir {
        d.append(&created, &s)?;
    }
    let m = engine.generate_ideas(&s, &FacetSelection::default()).await?;
    engine.commit(&mut s, m, dir)?;
    let m = engine.generate_facets(&s, Some(DEMO_QUERY)).await?;
    engine.commit(&mut s, m, dir)?;
    let m = engine.generate_facets(&s, None).await?;
    engine.commit(&mut s, m, dir)?;
    let m = engine.generate_ideas(&s, &demo_selection(&s)).await?;
    engine.commit(&mut s, m, dir)?;
    for text in demo_user_ideas() {
        let m = engine.add_idea(&s, &text).await?;
        engine.commit(&mut s, m, dir)?;
    }
    for id in s.idea_order.clone() {
        let m = engine.assess(&s, &id, Variant::Complete).await?;
        engine.commit(&mut s, m, dir)?;
    }
    let first = s.idea_order[0].clone();
    let flipped = s.assessments[&first].classification.opposite();
    let m = engine.override_novelty(&s, &first, flipped, DEMO_OVERRIDE_REASON)?;
    engine.commit(&mut s, m, dir)?;
    if flipped == Classification::NotNovel {
        if let Some(m) = engine.suggestions(&s, &first).await? {
            engine.commit(&mut s, m, dir)?;
        }
    }
    Ok(s)
}
