//! Facets to ideas: situation dispatch on the user's facet selection, paper
//! groups per prompt, two idea prompts per round and manual idea entry.

use std::collections::{BTreeMap, BTreeSet};

use futures::future::join;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::warn;

use crate::domain::{
    DistanceClass, Facet, FacetId, FacetKind, IdGen, Idea, IdeaError, IdeaParts, PaperRecord, Provenance, Situation,
};
use crate::finder::{prompt_paper, validated_triples, IdeationContext};
use crate::llm::bindings::{Bindings, FacetExtraction, FacetRef, FacetsToIdeas, FillAnalogyIdeas, InitialIdeas, PromptPaper};
use crate::llm::reask;
use crate::llm::parse::{clean_id, parse_idea_block, IdeaDraft, ParseError};
use crate::llm::{LlmError, LlmGateway, LlmRequest};

pub const MAX_CUSTOM_INSTRUCTIONS: usize = 25_000;
pub const CANDIDATE_ANALOGIES: usize = 6;
pub const IDEAS_PER_PROMPT: usize = 2;
pub const PRIOR_IDEA_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdeaGenError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Idea(#[from] IdeaError),
    #[error("no {0} papers to pair with")]
    EmptyTier(DistanceClass),
    #[error("selected facet `{0}` does not exist")]
    UnknownFacet(FacetId),
    #[error("facet `{id}` was selected as a {expected}")]
    WrongKind { id: FacetId, expected: FacetKind },
    #[error("custom instructions exceed {MAX_CUSTOM_INSTRUCTIONS} characters")]
    InstructionsTooLong,
    #[error("idea text is empty")]
    EmptyIdeaText,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetSelection {
    #[serde(default)]
    pub purpose_ids: BTreeSet<FacetId>,
    #[serde(default)]
    pub mechanism_ids: BTreeSet<FacetId>,
    #[serde(default)]
    pub evaluation_ids: BTreeSet<FacetId>,
    #[serde(default)]
    pub custom_instructions: String,
}

impl FacetSelection {
    pub fn ids(&self, kind: FacetKind) -> &BTreeSet<FacetId> {
        match kind {
            FacetKind::Purpose => &self.purpose_ids,
            FacetKind::Mechanism => &self.mechanism_ids,
            FacetKind::Evaluation => &self.evaluation_ids,
        }
    }

    pub fn validate(&self, facets: &BTreeMap<FacetId, Facet>) -> Result<(), IdeaGenError> {
        if self.custom_instructions.chars().count() > MAX_CUSTOM_INSTRUCTIONS {
            return Err(IdeaGenError::InstructionsTooLong);
        }
        for kind in FacetKind::ALL {
            for id in self.ids(kind) {
                let f = facets.get(id).ok_or_else(|| IdeaGenError::UnknownFacet(id.clone()))?;
                if f.kind != kind {
                    return Err(IdeaGenError::WrongKind { id: id.clone(), expected: kind });
                }
            }
        }
        Ok(())
    }
}

pub fn classify_situation(selection: &FacetSelection, first_round: bool) -> Situation {
    match (selection.purpose_ids.is_empty(), selection.mechanism_ids.is_empty()) {
        (true, true) if first_round => Situation::Initial,
        (true, true) => Situation::NoPNoM,
        (false, false) => Situation::PAndM,
        _ => Situation::POrM,
    }
}

/// The session state a round reads.
#[derive(Clone, Copy)]
pub struct SessionView<'a> {
    pub context: &'a IdeationContext,
    pub papers: &'a BTreeMap<String, PaperRecord>,
    pub facets: &'a BTreeMap<FacetId, Facet>,
    pub ideas: &'a [Idea],
}

impl SessionView<'_> {
    /// The paper a facet was extracted from, if any.
    pub fn source_paper(&self, id: &FacetId) -> Option<&PaperRecord> {
        let facet = self.facets.get(id)?;
        match &facet.provenance {
            Provenance::Paper { paper_id, .. } => self.papers.get(paper_id),
            Provenance::QueryGenerated { .. } => {
                self.papers.values().find(|p| p.facets.as_ref().is_some_and(|t| t.contains(id)))
            }
            Provenance::UserAdded | Provenance::IdeaExtracted { .. } => None,
        }
    }

    fn tier_papers(&self, ids: &[String]) -> Vec<&PaperRecord> {
        ids.iter().filter_map(|id| self.papers.get(id)).filter(|p| p.facets.is_some()).collect()
    }
}

/// A paper group member: a real paper or a stand-in for a paperless facet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupMember {
    Paper(String),
    Stub(FacetId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    Initial,
    FillAnalogy { relevant_purposes: bool },
    FacetsToIdeas { sample: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPlan {
    pub kind: PromptKind,
    pub group1: Vec<GroupMember>,
    pub group2: Vec<GroupMember>,
}

/// Both prompts of a round.
pub fn assemble_groups(
    situation: Situation,
    selection: &FacetSelection,
    view: &SessionView<'_>,
) -> Result<[PromptPlan; 2], IdeaGenError> {
    let ctx = view.context;
    let papers = |ps: Vec<&PaperRecord>| ps.into_iter().map(|p| GroupMember::Paper(p.corpus_id.clone())).collect::<Vec<_>>();
    let near = view.tier_papers(ctx.tier(DistanceClass::Near));
    let mut far = view.tier_papers(ctx.tier(DistanceClass::Far));
    far.extend(view.tier_papers(ctx.tier(DistanceClass::VeryFar)));
    let selected_members = |ids: &BTreeSet<FacetId>| {
        let mut out: Vec<GroupMember> = Vec::new();
        for id in ids {
            let m = match view.source_paper(id) {
                Some(p) => GroupMember::Paper(p.corpus_id.clone()),
                None => GroupMember::Stub(id.clone()),
            };
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out
    };
    match situation {
        Situation::Initial | Situation::NoPNoM => {
            let mut g1 = view.tier_papers(&ctx.input_paper_ids);
            g1.extend(view.tier_papers(&ctx.very_near_ids));
            if g1.is_empty() {
                return Err(IdeaGenError::EmptyTier(DistanceClass::Input));
            }
            non_empty(&near, DistanceClass::Near)?;
            non_empty(&far, DistanceClass::Far)?;
            let g1 = papers(g1);
            Ok([
                PromptPlan { kind: PromptKind::Initial, group1: g1.clone(), group2: papers(near) },
                PromptPlan { kind: PromptKind::Initial, group1: g1, group2: papers(far) },
            ])
        }
        Situation::POrM => {
            let relevant_purposes = !selection.purpose_ids.is_empty();
            let chosen = if relevant_purposes { &selection.purpose_ids } else { &selection.mechanism_ids };
            let g1 = selected_members(chosen);
            let others = |tier: Vec<&PaperRecord>| {
                papers(tier).into_iter().filter(|m| !g1.contains(m)).collect::<Vec<_>>()
            };
            let (near, far) = (others(near), others(far));
            if near.is_empty() {
                return Err(IdeaGenError::EmptyTier(DistanceClass::Near));
            }
            if far.is_empty() {
                return Err(IdeaGenError::EmptyTier(DistanceClass::Far));
            }
            let kind = PromptKind::FillAnalogy { relevant_purposes };
            Ok([
                PromptPlan { kind, group1: g1.clone(), group2: near },
                PromptPlan { kind, group1: g1, group2: far },
            ])
        }
        Situation::PAndM => {
            let g1 = selected_members(&selection.purpose_ids);
            let g2 = selected_members(&selection.mechanism_ids);
            Ok([0, 1].map(|sample| PromptPlan {
                kind: PromptKind::FacetsToIdeas { sample },
                group1: g1.clone(),
                group2: g2.clone(),
            }))
        }
    }
}

fn non_empty(ps: &[&PaperRecord], d: DistanceClass) -> Result<(), IdeaGenError> {
    if ps.is_empty() {
        Err(IdeaGenError::EmptyTier(d))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRound {
    pub situation: Situation,
    pub group1_paper_ids: Vec<String>,
    pub group2_paper_ids: Vec<String>,
    pub evaluation_options: Vec<FacetId>,
    pub prior_idea_digest: String,
    pub produced_idea_ids: Vec<String>,
}

/// Numbered short texts of the most recent ideas.
pub fn prior_ideas_text(ideas: &[Idea]) -> String {
    let start = ideas.len().saturating_sub(PRIOR_IDEA_CAP);
    ideas[start..]
        .iter()
        .enumerate()
        .map(|(i, idea)| format!("{}. {}", i + 1, idea.short_text.split_whitespace().collect::<Vec<_>>().join(" ")))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Which side of a prompt each offered facet sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    One,
    Two,
}

struct Offered {
    sides: BTreeMap<FacetId, (Side, Option<String>)>,
    evaluations: BTreeSet<FacetId>,
}

struct PreparedPrompt {
    request: LlmRequest,
    offered: Offered,
    distances: (BTreeSet<DistanceClass>, BTreeSet<DistanceClass>),
    situation: Situation,
    selection_rule: Option<(BTreeSet<FacetId>, BTreeSet<FacetId>)>,
    relevant_kind: Option<FacetKind>,
}

pub struct IdeaGenerator<'a> {
    llm: &'a LlmGateway,
}

impl<'a> IdeaGenerator<'a> {
    pub fn new(llm: &'a LlmGateway) -> Self {
        IdeaGenerator { llm }
    }

    /// One round: two prompts and up to four ideas. A prompt that still fails
    /// after its re-ask is dropped if the other produced ideas.
    pub async fn generate(
        &self,
        selection: &FacetSelection,
        first_round: bool,
        view: &SessionView<'_>,
        ids: &mut IdGen,
    ) -> Result<(GenerationRound, Vec<Idea>), IdeaGenError> {
        selection.validate(view.facets)?;
        let situation = classify_situation(selection, first_round);
        let plans = assemble_groups(situation, selection, view)?;
        let prior = prior_ideas_text(view.ideas);
        let set_eval = self.evaluation_options(selection, &plans, view);
        let prepared: Vec<PreparedPrompt> =
            plans.iter().map(|plan| prepare(plan, situation, selection, view, &prior, &set_eval)).collect();
        let (a, b) = join(self.run(&prepared[0]), self.run(&prepared[1])).await;
        let mut ideas = Vec::new();
        let mut first_err = None;
        for (prep, result) in prepared.iter().zip([a, b]) {
            match result {
                Ok(drafts) => {
                    for d in drafts {
                        let custom = Some(selection.custom_instructions.trim().to_string()).filter(|c| !c.is_empty());
                        let parts = IdeaParts {
                            id: ids.next_id("idea"),
                            short_text: d.new_idea.clone(),
                            expanded_text: d.expanded_idea.clone(),
                            purpose_id: FacetId::from_raw(clean_id(&d.purpose_id)),
                            mechanism_id: FacetId::from_raw(clean_id(&d.mechanism_id)),
                            evaluation_id: FacetId::from_raw(clean_id(&d.evaluation_id)),
                            analogy: d.analogy.clone(),
                            situation: Some(situation),
                            group_distances: prep.distances.clone(),
                            custom_instructions_used: custom,
                        };
                        ideas.push(Idea::build(parts, view.facets)?);
                    }
                }
                Err(e) => {
                    warn!(error = %e, "idea prompt failed");
                    first_err.get_or_insert(e);
                }
            }
        }
        if ideas.is_empty() {
            return Err(first_err.map(IdeaGenError::from).unwrap_or(IdeaGenError::EmptyTier(DistanceClass::Near)));
        }
        if ideas.len() < 2 * IDEAS_PER_PROMPT {
            warn!(ideas = ideas.len(), "partial idea round");
        }
        let member_ids = |g: &[GroupMember]| {
            g.iter().filter_map(|m| if let GroupMember::Paper(id) = m { Some(id.clone()) } else { None }).collect::<Vec<_>>()
        };
        let mut group1 = Vec::new();
        let mut group2 = Vec::new();
        for plan in &plans {
            for id in member_ids(&plan.group1) {
                if !group1.contains(&id) {
                    group1.push(id);
                }
            }
            for id in member_ids(&plan.group2) {
                if !group2.contains(&id) {
                    group2.push(id);
                }
            }
        }
        let round = GenerationRound {
            situation,
            group1_paper_ids: group1,
            group2_paper_ids: group2,
            evaluation_options: set_eval.iter().map(|f| FacetId::from_raw(f.id.clone())).collect(),
            prior_idea_digest: hex::encode(Sha256::digest(prior.as_bytes())),
            produced_idea_ids: ideas.iter().map(|i| i.id.clone()).collect(),
        };
        Ok((round, ideas))
    }

    /// Selected evaluations, or every session evaluation when no prompt
    /// paper can supply one.
    fn evaluation_options(&self, selection: &FacetSelection, plans: &[PromptPlan; 2], view: &SessionView<'_>) -> Vec<FacetRef> {
        let refs = |ids: &mut dyn Iterator<Item = &FacetId>| {
            ids.filter_map(|id| view.facets.get(id)).map(|f| FacetRef { text: f.text.clone(), id: f.id.to_string() }).collect::<Vec<_>>()
        };
        if !selection.evaluation_ids.is_empty() {
            return refs(&mut selection.evaluation_ids.iter());
        }
        let all_stubs = plans
            .iter()
            .all(|p| p.group1.iter().chain(&p.group2).all(|m| matches!(m, GroupMember::Stub(_))));
        if all_stubs {
            return refs(&mut view.facets.values().filter(|f| f.kind == FacetKind::Evaluation).map(|f| &f.id));
        }
        Vec::new()
    }

    /// Asks, resolves, and re-asks once when any draft breaks a rule. After
    /// the re-ask, drafts that still break a rule are dropped.
    async fn run(&self, prep: &PreparedPrompt) -> Result<Vec<IdeaDraft>, LlmError> {
        let raw = self.llm.complete(&prep.request).await?;
        let err = match resolve_all(&raw, prep) {
            Ok(drafts) => return Ok(drafts),
            Err(e) => e,
        };
        warn!(error = %err, "re-asking idea prompt");
        let raw = self.llm.complete(&reask(&prep.request, &err)).await?;
        let block = parse_idea_block(&raw, IDEAS_PER_PROMPT).map_err(LlmError::Parse)?;
        let mut kept = Vec::new();
        let mut last = None;
        for (i, d) in block.best.into_iter().enumerate() {
            match resolve(i + 1, &d, prep) {
                Ok(()) => kept.push(d),
                Err(e) => last = Some(e),
            }
        }
        match (kept.is_empty(), last) {
            (true, Some(e)) => Err(LlmError::Parse(e)),
            _ => Ok(kept),
        }
    }

    /// Extracts facets from a user-written idea and records it.
    pub async fn extract_idea_facets(&self, text: &str, ids: &mut IdGen) -> Result<(Idea, Vec<Facet>), IdeaGenError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(IdeaGenError::EmptyIdeaText);
        }
        let req = FacetExtraction { text: Some(text.to_string()), papers: Vec::new() }.request();
        let triple = self.llm.call(&req, |raw| validated_triples(raw, 1)).await?.remove(0);
        let idea_id = ids.next_id("idea");
        let provenance = Provenance::IdeaExtracted { idea_id: idea_id.clone() };
        let facets: Vec<Facet> = triple.into_iter().map(|v| v.into_facet(ids, provenance.clone())).collect();
        let pool: BTreeMap<FacetId, Facet> = facets.iter().map(|f| (f.id.clone(), f.clone())).collect();
        let idea = Idea::build(
            IdeaParts {
                id: idea_id,
                short_text: text.to_string(),
                expanded_text: text.to_string(),
                purpose_id: facets[0].id.clone(),
                mechanism_id: facets[1].id.clone(),
                evaluation_id: facets[2].id.clone(),
                analogy: String::new(),
                situation: None,
                group_distances: Default::default(),
                custom_instructions_used: None,
            },
            &pool,
        )?;
        Ok((idea, facets))
    }
}

fn prepare(
    plan: &PromptPlan,
    situation: Situation,
    selection: &FacetSelection,
    view: &SessionView<'_>,
    prior: &str,
    set_eval: &[FacetRef],
) -> PreparedPrompt {
    let ctx = view.context;
    let mut offered = Offered { sides: BTreeMap::new(), evaluations: set_eval.iter().map(|f| FacetId::from_raw(f.id.clone())).collect() };
    let mut distances = (BTreeSet::new(), BTreeSet::new());
    let mut render = |members: &[GroupMember], side: Side| -> Vec<PromptPaper> {
        members
            .iter()
            .map(|m| match m {
                GroupMember::Paper(id) => {
                    let p = &view.papers[id];
                    let slot = if side == Side::One { &mut distances.0 } else { &mut distances.1 };
                    slot.insert(p.distance);
                    if let Some(t) = &p.facets {
                        for fid in [&t.purpose, &t.mechanism] {
                            offered.sides.insert(fid.clone(), (side, Some(p.corpus_id.clone())));
                        }
                        if set_eval.is_empty() {
                            offered.evaluations.insert(t.evaluation.clone());
                        }
                    }
                    let mut pp = prompt_paper(p, view.facets);
                    if !p.distance.is_analogous() {
                        pp.theme = None;
                    }
                    pp
                }
                GroupMember::Stub(fid) => {
                    let f = &view.facets[fid];
                    let slot = if side == Side::One { &mut distances.0 } else { &mut distances.1 };
                    slot.insert(DistanceClass::Input);
                    offered.sides.insert(fid.clone(), (side, None));
                    stub(f)
                }
            })
            .collect()
    };
    let set1 = render(&plan.group1, Side::One);
    let set2 = render(&plan.group2, Side::Two);
    let custom = selection.custom_instructions.clone();
    let (request, rule, relevant_kind) = match plan.kind {
        PromptKind::Initial => (
            InitialIdeas {
                topic: ctx.topic.clone(),
                summary: ctx.summary.clone(),
                prior_ideas: prior.to_string(),
                custom_instructions: custom,
                number: CANDIDATE_ANALOGIES,
                idea_number: IDEAS_PER_PROMPT,
                query: None,
                designated: set1,
                analogous: set2,
                set_eval: set_eval.to_vec(),
            }
            .request(),
            None,
            None,
        ),
        PromptKind::FillAnalogy { relevant_purposes } => (
            FillAnalogyIdeas {
                topic: ctx.topic.clone(),
                summary: ctx.summary.clone(),
                prior_ideas: prior.to_string(),
                custom_instructions: custom,
                number: CANDIDATE_ANALOGIES,
                idea_number: IDEAS_PER_PROMPT,
                relevant_purposes,
                set1,
                set2,
                set_eval: set_eval.to_vec(),
            }
            .request(),
            None,
            Some(if relevant_purposes { FacetKind::Purpose } else { FacetKind::Mechanism }),
        ),
        PromptKind::FacetsToIdeas { sample } => (
            FacetsToIdeas {
                topic: ctx.topic.clone(),
                summary: ctx.summary.clone(),
                prior_ideas: prior.to_string(),
                custom_instructions: custom,
                number: CANDIDATE_ANALOGIES,
                idea_number: IDEAS_PER_PROMPT,
                set1,
                set2,
                set_eval: set_eval.to_vec(),
                sample,
            }
            .request(),
            Some((selection.purpose_ids.clone(), selection.mechanism_ids.clone())),
            None,
        ),
    };
    PreparedPrompt { request, offered, distances, situation, selection_rule: rule, relevant_kind }
}

fn stub(f: &Facet) -> PromptPaper {
    let mut p = PromptPaper {
        stub: true,
        distance: DistanceClass::Input.prompt_label().to_string(),
        title: "n/a".into(),
        abstract_text: "n/a".into(),
        ..Default::default()
    };
    match f.kind {
        FacetKind::Purpose => (p.purpose_text, p.purpose_id) = (f.text.clone(), f.id.to_string()),
        FacetKind::Mechanism => (p.mechanism_text, p.mechanism_id) = (f.text.clone(), f.id.to_string()),
        FacetKind::Evaluation => (p.evaluation_text, p.evaluation_id) = (f.text.clone(), f.id.to_string()),
    }
    p
}

fn resolve_all(raw: &str, prep: &PreparedPrompt) -> Result<Vec<IdeaDraft>, ParseError> {
    let block = parse_idea_block(raw, IDEAS_PER_PROMPT)?;
    for (i, d) in block.best.iter().enumerate() {
        resolve(i + 1, d, prep)?;
    }
    Ok(block.best)
}

/// Checks one draft's facet ids against what the prompt offered.
fn resolve(block: usize, d: &IdeaDraft, prep: &PreparedPrompt) -> Result<(), ParseError> {
    let p = FacetId::from_raw(clean_id(&d.purpose_id));
    let m = FacetId::from_raw(clean_id(&d.mechanism_id));
    let e = FacetId::from_raw(clean_id(&d.evaluation_id));
    if !prep.offered.evaluations.contains(&e) {
        return Err(ParseError::UnknownFacetId(e.to_string()));
    }
    let invalid = |reason: &str| ParseError::Invalid { block, reason: reason.to_string() };
    if let Some((purposes, mechanisms)) = &prep.selection_rule {
        if !purposes.contains(&p) {
            return Err(ParseError::UnknownFacetId(p.to_string()));
        }
        if !mechanisms.contains(&m) {
            return Err(ParseError::UnknownFacetId(m.to_string()));
        }
        return Ok(());
    }
    let (ps, pp) = prep.offered.sides.get(&p).ok_or_else(|| ParseError::UnknownFacetId(p.to_string()))?;
    let (ms, mp) = prep.offered.sides.get(&m).ok_or_else(|| ParseError::UnknownFacetId(m.to_string()))?;
    if p.kind() != Some(FacetKind::Purpose) || m.kind() != Some(FacetKind::Mechanism) {
        return Err(invalid("purpose and mechanism ids are swapped"));
    }
    if ps == ms {
        return Err(invalid("purpose and mechanism come from the same group"));
    }
    if pp.is_some() && pp == mp {
        return Err(invalid("purpose and mechanism come from the same paper"));
    }
    if let Some(kind) = prep.relevant_kind {
        let side = if kind == FacetKind::Purpose { ps } else { ms };
        if *side != Side::One {
            return Err(invalid("the selected facet kind must come from set 1"));
        }
    }
    debug_assert!(prep.situation != Situation::PAndM);
    Ok(())
}
