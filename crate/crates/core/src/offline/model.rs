use std::collections::BTreeSet;

use async_trait::async_trait;

use super::catalog::{Catalog, CatalogPaper, GoldFacets};
use super::text::{containment, content_words, token_set, words};
use crate::domain::{Classification, DistanceClass, FacetId, FacetKind};
use crate::llm::bindings::*;
use crate::llm::parse::*;
use crate::llm::{ChatMessage, LlmError, LlmProvider, LlmRequest, TemplateId};

/// Containment share above which an idea counts as already published.
pub const NOT_NOVEL_CONTAINMENT: f64 = 0.5;

/// Deterministic stand-in for a chat model. Every answer is built from the
/// request's typed bindings and rendered in the template's answer format.
pub struct ScriptedLlm {
    catalog: &'static Catalog,
}

impl ScriptedLlm {
    pub fn new(catalog: &'static Catalog) -> Self {
        ScriptedLlm { catalog }
    }

    pub fn answer(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let b = &request.bindings;
        Ok(match request.template_id {
            TemplateId::FacetExtraction => self.facet_extraction(&FacetExtraction::from_map(b)?),
            TemplateId::QueryPaperFacets => {
                let q = QueryPaperFacets::from_map(b)?;
                render_facet_extraction(&q.papers.iter().map(|p| self.paper_facets(p)).collect::<Vec<_>>())
            }
            TemplateId::AnalogyQueries => self.analogy_queries(&AnalogyQueries::from_map(b)?),
            TemplateId::ShortenQuery => {
                let q = ShortenQuery::from_map(b)?;
                let mut w: Vec<&str> = q.query.split_whitespace().collect();
                if w.len() > 1 {
                    w.pop();
                }
                render_shortened_query(&w.join(" "))
            }
            TemplateId::SummarizePapers => render_summary(&summary(&SummarizePapers::from_map(b)?.papers)),
            TemplateId::InitialIdeas => {
                let r = InitialIdeas::from_map(b)?;
                let shift = prior_count(&r.prior_ideas);
                let mut picks = Vec::new();
                for i in 0..r.number.max(r.idea_number) {
                    let d = &r.designated[(i + shift) % r.designated.len().max(1)];
                    let a = &r.analogous[(i + shift) % r.analogous.len().max(1)];
                    picks.push(if i % 2 == 0 { (d, a) } else { (a, d) });
                }
                self.ideas(&r.topic, &r.custom_instructions, r.number, r.idea_number, &picks, &r.set_eval, shift)
            }
            TemplateId::FillAnalogyIdeas => {
                let r = FillAnalogyIdeas::from_map(b)?;
                let shift = prior_count(&r.prior_ideas);
                let mut picks = Vec::new();
                for i in 0..r.number.max(r.idea_number) {
                    let s1 = &r.set1[i % r.set1.len().max(1)];
                    let s2 = &r.set2[(i + shift) % r.set2.len().max(1)];
                    picks.push(if r.relevant_purposes { (s1, s2) } else { (s2, s1) });
                }
                self.ideas(&r.topic, &r.custom_instructions, r.number, r.idea_number, &picks, &r.set_eval, shift)
            }
            TemplateId::FacetsToIdeas => {
                let r = FacetsToIdeas::from_map(b)?;
                let shift = prior_count(&r.prior_ideas) + r.sample as usize;
                let mut picks = Vec::new();
                for i in 0..r.number.max(r.idea_number) {
                    let s1 = &r.set1[(i + shift) % r.set1.len().max(1)];
                    let s2 = &r.set2[(i / r.set1.len().max(1) + shift) % r.set2.len().max(1)];
                    picks.push((s1, s2));
                }
                self.ideas(&r.topic, &r.custom_instructions, r.number, r.idea_number, &picks, &r.set_eval, shift)
            }
            TemplateId::NoveltyClassify => self.classify(&NoveltyClassify::from_map(b)?),
            TemplateId::IdeaKeywords => keywords(&IdeaKeywords::from_map(b)?.idea),
            TemplateId::IdeaFacetsForRerank => {
                let idea = IdeaFacetsForRerank::from_map(b)?.idea;
                let f = self.heuristic_facets(&idea);
                let domain: Vec<String> = content_words(&idea).into_iter().take(3).collect();
                render_idea_facets(&format!(
                    "- Application Domain: {}\n- Purpose: {}\n- Mechanism: {}\n- Evaluation: {}",
                    domain.join(" "),
                    f.purpose.text,
                    f.mechanism.text,
                    f.evaluation.text
                ))
            }
            TemplateId::Rerank => {
                let r = Rerank::from_map(b)?;
                let (query, facets) = (token_set(&r.query), token_set(&r.facets));
                rank(&r.passages, r.num, |p| {
                    let t = token_set(p);
                    2.0 * containment(&facets, &t) + containment(&query, &t)
                })
            }
            TemplateId::RerankRelevance => {
                let r = RerankRelevance::from_map(b)?;
                let query = token_set(&r.query);
                rank(&r.passages, r.num, |p| super::text::jaccard(&query, &token_set(p)))
            }
            TemplateId::MoreNovelIdeas => suggestions(&MoreNovelIdeas::from_map(b)?),
        })
    }

    fn gold(&self, title: &str) -> Option<&'static GoldFacets> {
        self.catalog.by_title(title).and_then(|p| p.facets.as_ref())
    }

    fn paper_facets(&self, p: &PaperText) -> FacetTripleDraft {
        match self.gold(&p.title) {
            Some(g) => draft(g),
            None => self.heuristic_facets(&format!("{} {}", p.title, p.abstract_text)),
        }
    }

    fn facet_extraction(&self, r: &FacetExtraction) -> String {
        let drafts = match &r.text {
            Some(text) if self.catalog.titles_in(text).iter().any(|p| p.tier == "input") => {
                vec![draft(&self.catalog.overarching)]
            }
            Some(text) => vec![self.heuristic_facets(text)],
            None => r.papers.iter().map(|p| self.paper_facets(p)).collect(),
        };
        render_facet_extraction(&drafts)
    }

    /// Catalog facets whose words all occur in `text`, else short phrases
    /// cut from the text itself.
    fn heuristic_facets(&self, text: &str) -> FacetTripleDraft {
        let cw = content_words(text);
        let phrase = |from: usize| cw.iter().skip(from).take(3).cloned().collect::<Vec<_>>().join(" ");
        let pick = |kind: FacetKind, fallback: String| match self.catalog.facet_in(kind, text) {
            Some(g) => FacetDraft { text: g.text.clone(), definition: g.definition.clone() },
            None => FacetDraft { text: fallback, definition: format!("The {kind} described in the text.") },
        };
        let p = phrase(0);
        let m = phrase(3);
        FacetTripleDraft {
            purpose: pick(FacetKind::Purpose, format!("to explore {}", if p.is_empty() { "the idea".into() } else { p })),
            mechanism: pick(FacetKind::Mechanism, if m.is_empty() { "the proposed system".into() } else { m }),
            evaluation: pick(FacetKind::Evaluation, "controlled user study".into()),
        }
    }

    fn analogy_queries(&self, r: &AnalogyQueries) -> String {
        let previous: BTreeSet<String> = r.previous_queries.iter().map(|q| q.trim().to_lowercase()).collect();
        let group = |distance: DistanceClass| -> Vec<AnalogyDraft> {
            let mut out: Vec<(String, &CatalogPaper, String)> = self
                .catalog
                .queries
                .iter()
                .filter(|q| q.distance == distance && !previous.contains(&q.query.to_lowercase()))
                .filter_map(|q| Some((q.query.clone(), self.catalog.paper(&q.paper)?, q.context.clone())))
                .collect();
            // Once the authored pool is used up, fall back to title words of the tier.
            for p in self.catalog.papers.iter().filter(|p| p.tier == distance.as_str()) {
                let q: String = content_words(&p.title).into_iter().take(3).collect::<Vec<_>>().join(" ");
                if !previous.contains(&q) && !out.iter().any(|(x, _, _)| *x == q) {
                    let context = self.catalog.queries.iter().find(|c| c.paper == p.id).map(|c| c.context.clone());
                    out.push((q, p, context.unwrap_or_default()));
                }
            }
            out.truncate(r.number);
            out.into_iter()
                .map(|(query, p, context)| {
                    let g = p.facets.as_ref().expect("tier papers carry facets");
                    AnalogyDraft {
                        context: if distance == DistanceClass::Near { String::new() } else { context },
                        analogy: format!(
                            "Just as {} relies on {}, {} can rely on {}.",
                            r.purpose.trim_start_matches("to ").trim_start_matches("To "),
                            r.mechanism,
                            g.purpose.text.trim_start_matches("to "),
                            g.mechanism.text
                        ),
                        purpose: g.purpose.text.clone(),
                        mechanism: g.mechanism.text.clone(),
                        query,
                    }
                })
                .collect()
        };
        let draft = AnalogyQueriesDraft {
            same_topic: self.catalog.same_topic.clone(),
            same_subarea: self.catalog.same_subarea.clone(),
            near: group(DistanceClass::Near),
            far: group(DistanceClass::Far),
            very_far: group(DistanceClass::VeryFar),
        };
        render_analogy_queries(&draft)
    }

    #[allow(clippy::too_many_arguments)]
    fn ideas(
        &self,
        topic: &str,
        custom: &str,
        number: usize,
        idea_number: usize,
        picks: &[(&PromptPaper, &PromptPaper)],
        set_eval: &[FacetRef],
        shift: usize,
    ) -> String {
        let mut options = Vec::new();
        let mut best = Vec::new();
        for (i, (pp, mp)) in picks.iter().enumerate() {
            let (purpose, purpose_id) = (&pp.purpose_text, &pp.purpose_id);
            let (mechanism, mechanism_id) = (&mp.mechanism_text, &mp.mechanism_id);
            let eval = if !set_eval.is_empty() {
                set_eval[(i + shift) % set_eval.len()].clone()
            } else {
                let from = [pp, mp];
                let src = from.iter().find(|p| !p.stub && !p.evaluation_id.is_empty()).unwrap_or(&from[i % 2]);
                FacetRef { text: src.evaluation_text.clone(), id: src.evaluation_id.clone() }
            };
            let analogy = format!(
                "The goal {} maps onto the approach {} in the way each source pairs a need with a method.",
                purpose, mechanism
            );
            let short = idea_text(topic, purpose, mechanism, &eval.text, pp, mp, custom);
            if i < number {
                options.push(OptionDraft { analogy: analogy.clone(), idea: short.clone() });
            }
            if best.len() < idea_number {
                best.push(IdeaDraft {
                    analogy,
                    purpose_text: purpose.clone(),
                    purpose_id: purpose_id.clone(),
                    mechanism_text: mechanism.clone(),
                    mechanism_id: mechanism_id.clone(),
                    evaluation_text: eval.text.clone(),
                    evaluation_id: eval.id.clone(),
                    twist: format!("The system adapts {mechanism} to each person over repeated sessions."),
                    relevance: format!("It gives {topic} a concrete way {purpose}."),
                    initial_idea: format!("Combine {purpose} with {mechanism}."),
                    issues: "The combination may be too broad to evaluate.".into(),
                    address: format!("Focus the design on one workflow and measure it with {}.", eval.text),
                    expanded_idea: format!(
                        "{short} In a first phase we build a prototype and run pilot sessions to refine the \
                         interaction. In a second phase we deploy the prototype with a larger group and compare \
                         it against current practice, collecting logs, questionnaires and interviews. We expect \
                         the mechanism to make the purpose easier to reach without removing control from the \
                         people involved, and we plan to release the materials so that others can repeat the \
                         study and extend the approach to neighbouring problems in {topic}."
                    ),
                    new_idea: short,
                });
            }
        }
        render_idea_block(&IdeaBlock { options, best }, topic)
    }

    fn classify(&self, r: &NoveltyClassify) -> String {
        let idea = token_set(&r.idea);
        let scores: Vec<f64> =
            r.papers.iter().map(|p| containment(&idea, &token_set(&format!("{} {}", p.title, p.abstract_text)))).collect();
        let top = (0..scores.len()).max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)));
        let second = (0..scores.len()).filter(|&i| Some(i) != top).max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)));
        let Some(top) = top else {
            return render_novelty(&NoveltyDraft {
                classification: Classification::Novel,
                review: "No related papers were provided, so nothing covers the idea's combination of facets.".into(),
            });
        };
        let cite2 = second.map(|s| format!(" Related work [{s}] covers adjacent ground.")).unwrap_or_default();
        let title = &r.papers[top].title;
        let draft = if scores[top] >= NOT_NOVEL_CONTAINMENT {
            NoveltyDraft {
                classification: Classification::NotNovel,
                review: format!(
                    "The idea closely resembles [{top}] ({title}), which already pursues the same purpose with \
                     the same mechanism and a comparable evaluation. The combination of facets in the idea is \
                     therefore covered by existing work and it does not add a new purpose, mechanism or \
                     evaluation.{cite2}"
                ),
            }
        } else {
            NoveltyDraft {
                classification: Classification::Novel,
                review: format!(
                    "The closest paper, [{top}] ({title}), shares some vocabulary with the idea but pursues a \
                     different combination of purpose and mechanism. None of the related papers pairs the \
                     proposed mechanism with this purpose and evaluation, so the idea offers a unique \
                     combination of facets.{cite2}"
                ),
            }
        };
        render_novelty(&draft)
    }
}

#[async_trait]
impl LlmProvider for ScriptedLlm {
    async fn complete(&self, request: &LlmRequest, _messages: &[ChatMessage]) -> Result<String, LlmError> {
        self.answer(request)
    }
}

fn draft(g: &GoldFacets) -> FacetTripleDraft {
    let d = |kind| {
        let f = g.get(kind);
        FacetDraft { text: f.text.clone(), definition: f.definition.clone() }
    };
    FacetTripleDraft { purpose: d(FacetKind::Purpose), mechanism: d(FacetKind::Mechanism), evaluation: d(FacetKind::Evaluation) }
}

fn prior_count(prior: &str) -> usize {
    prior.lines().filter(|l| !l.trim().is_empty()).count()
}

fn source(p: &PromptPaper) -> String {
    if p.stub || p.title.trim().is_empty() || p.title == "n/a" {
        "a facet contributed by the user".into()
    } else {
        format!("\"{}\"", p.title)
    }
}

fn idea_text(topic: &str, purpose: &str, mechanism: &str, eval: &str, pp: &PromptPaper, mp: &PromptPaper, custom: &str) -> String {
    let goal = purpose.trim_start_matches("to ").trim_start_matches("To ");
    let mut s = format!(
        "This idea for {topic} sets out {purpose} by adapting {mechanism}. The purpose is drawn from {}, while \
         the mechanism comes from {}, so the design transfers a proven technique into a new setting. People \
         would work with a prototype in which the mechanism proposes material and the person decides what to \
         keep, revise or discard, keeping authorship with the user. The project would show whether the \
         approach makes it easier to {goal} than current tools. It is evaluated with {eval}, comparing the \
         prototype against a baseline condition and reporting both outcome quality and the experience of \
         participants.",
        source(pp),
        source(mp)
    );
    if !custom.trim().is_empty() {
        s.push_str(&format!(" Following the requested direction: {}.", custom.trim().trim_end_matches('.')));
    }
    s
}

fn summary(papers: &[PromptPaper]) -> String {
    let mut s = format!("The prior work spans {} papers.", papers.len());
    for p in papers {
        s.push_str(&format!(
            " {} addresses the goal {} through {} and is assessed with {}.",
            p.title, p.purpose_text, p.mechanism_text, p.evaluation_text
        ));
    }
    s.push_str(" Together these works show generative systems acting as partners rather than replacements, and they leave open how such partnerships should be evaluated over time.");
    s
}

fn keywords(idea: &str) -> String {
    let cw: Vec<String> = content_words(idea).into_iter().filter(|w| w.len() > 2).collect();
    let pair = |i: usize| cw.get(i..i + 2).map(|p| p.join(" "));
    let mut keywords: Vec<String> = [0, 2, 4, 6].iter().filter_map(|&i| pair(i)).collect();
    let mut titles: Vec<String> = [1, 3, 5].iter().filter_map(|&i| pair(i)).collect();
    for list in [&mut keywords, &mut titles] {
        if list.len() < 3 {
            let filler = if cw.is_empty() { "research idea".to_string() } else { cw.join(" ") };
            while list.len() < 3 {
                list.push(filler.clone());
            }
        }
    }
    render_keywords_titles(&KeywordsDraft { keywords, titles })
}

fn rank(passages: &[String], num: usize, score: impl Fn(&str) -> f64) -> String {
    let n = num.min(passages.len());
    let mut order: Vec<(usize, f64)> = (0..n).map(|i| (i, score(&passages[i]))).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    render_ranking(&order.into_iter().map(|(i, _)| i).collect::<Vec<_>>())
}

fn suggestions(r: &MoreNovelIdeas) -> String {
    let kind_of = |f: &FacetRef| FacetId::from_raw(clean_id(&f.id)).kind();
    let mut drafts = Vec::new();
    for kind in FacetKind::ALL {
        let Some(removed) = r.available_remove.iter().find(|f| kind_of(f) == Some(kind)) else { continue };
        let Some(added) = r
            .available_add
            .iter()
            .filter(|f| kind_of(f) == Some(kind) && f.id != removed.id)
            .find(|f| !words(&f.text).eq(&words(&removed.text)))
        else {
            continue;
        };
        let idea_text = if r.short_text.contains(&removed.text) {
            r.short_text.replacen(&removed.text, &added.text, 1)
        } else {
            format!("{} The {kind} becomes {} instead of {}.", r.short_text, added.text, removed.text)
        };
        drafts.push(SuggestionDraft {
            kind,
            removed_text: removed.text.clone(),
            removed_id: removed.id.clone(),
            added_text: added.text.clone(),
            added_id: added.id.clone(),
            idea_text,
            why_more_novel: format!("None of the related papers uses {} together with the remaining facets.", added.text),
            why_useful: format!("Swapping in {} keeps the idea relevant to {} while changing its {kind}.", added.text, r.topic),
        });
    }
    render_suggestions(&drafts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::bindings::Bindings;

    fn llm() -> ScriptedLlm {
        ScriptedLlm::new(Catalog::builtin())
    }

    #[test]
    fn gold_facets_for_known_papers() {
        let c = Catalog::builtin();
        let p = c.paper("n02").unwrap();
        let req = FacetExtraction {
            text: None,
            papers: vec![PaperText { title: p.title.clone(), abstract_text: p.abstract_text.clone().unwrap() }],
        }
        .request();
        let got = parse_facet_extraction(&llm().answer(&req).unwrap()).unwrap();
        assert_eq!(got[0].mechanism.text, "story graph scaffolding");
    }

    #[test]
    fn analogy_queries_skip_previous() {
        let first = AnalogyQueries { purpose: "p".into(), mechanism: "m".into(), previous_queries: vec![], number: 4 };
        let a = parse_analogy_queries(&llm().answer(&first.request()).unwrap(), 4).unwrap();
        let previous: Vec<String> = a.near.iter().chain(&a.far).chain(&a.very_far).map(|d| d.query.clone()).collect();
        let again = AnalogyQueries { previous_queries: previous.clone(), ..first.clone() };
        let b = parse_analogy_queries(&llm().answer(&again.request()).unwrap(), 4).unwrap();
        for d in b.near.iter().chain(&b.far).chain(&b.very_far) {
            assert!(!previous.contains(&d.query), "{}", d.query);
        }
        let third = AnalogyQueries {
            previous_queries: previous.into_iter().chain(b.near.iter().chain(&b.far).chain(&b.very_far).map(|d| d.query.clone())).collect(),
            ..first
        };
        assert!(parse_analogy_queries(&llm().answer(&third.request()).unwrap(), 4).is_ok());
    }

    #[test]
    fn shortens_by_one_word() {
        let req = ShortenQuery { query: "poetry constrained decoding sonnets".into() }.request();
        assert_eq!(parse_shortened_query(&llm().answer(&req).unwrap()).unwrap(), "poetry constrained decoding");
    }

    #[test]
    fn classifies_by_containment() {
        let c = Catalog::builtin();
        let paper = |id: &str| {
            let p = c.paper(id).unwrap();
            PaperText { title: p.title.clone(), abstract_text: p.abstract_text.clone().unwrap() }
        };
        let copy = c.paper("f04").unwrap().abstract_text.clone().unwrap();
        let req = NoveltyClassify { idea: copy, incontext: String::new(), papers: vec![paper("vf01"), paper("f04")] };
        let d = parse_novelty(&llm().answer(&req.request()).unwrap()).unwrap();
        assert_eq!(d.classification, Classification::NotNovel);
        assert!(d.review.contains("[1]"));
        let req = NoveltyClassify { idea: "quantum annealing for timetables".into(), ..req };
        assert_eq!(parse_novelty(&llm().answer(&req.request()).unwrap()).unwrap().classification, Classification::Novel);
    }

    #[test]
    fn suggestions_cover_each_kind() {
        let f = |kind: FacetKind, text: &str, n: &str| FacetRef { text: text.into(), id: FacetId::new(kind, text, n).to_string() };
        let remove = vec![
            f(FacetKind::Purpose, "to teach", "1"),
            f(FacetKind::Mechanism, "graphs", "2"),
            f(FacetKind::Evaluation, "survey", "3"),
        ];
        let add = vec![
            f(FacetKind::Purpose, "to teach", "9"),
            f(FacetKind::Purpose, "to heal", "4"),
            f(FacetKind::Mechanism, "haptics", "5"),
            f(FacetKind::Evaluation, "interviews", "6"),
        ];
        let req = MoreNovelIdeas {
            topic: "t".into(),
            short_text: "An idea to teach with graphs, checked by a survey.".into(),
            long_text: String::new(),
            papers: vec![],
            review: String::new(),
            available_add: add,
            available_remove: remove,
        };
        let got = parse_suggestions(&llm().answer(&req.request()).unwrap()).unwrap();
        assert_eq!(got.iter().map(|s| s.kind).collect::<Vec<_>>(), FacetKind::ALL.to_vec());
        assert_eq!(got[0].added_text, "to heal");
        assert!(got[1].idea_text.contains("haptics"));
    }
}
