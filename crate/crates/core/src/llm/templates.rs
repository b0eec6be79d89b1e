use std::sync::LazyLock;

use minijinja::{Environment, UndefinedBehavior};

use super::request::{ChatMessage, LlmRequest, Role, TemplateId};
use super::LlmError;

const ASSETS: &[(&str, &str)] = &[
    ("a1_facet_extraction.txt", include_str!("templates/a1_facet_extraction.txt")),
    ("a2_query_paper_facets.txt", include_str!("templates/a2_query_paper_facets.txt")),
    ("a3_analogy_queries.txt", include_str!("templates/a3_analogy_queries.txt")),
    ("a4_shorten_query.txt", include_str!("templates/a4_shorten_query.txt")),
    ("a5_summarize_papers.txt", include_str!("templates/a5_summarize_papers.txt")),
    ("b1_initial_ideas.txt", include_str!("templates/b1_initial_ideas.txt")),
    ("b2_fill_analogy_ideas.txt", include_str!("templates/b2_fill_analogy_ideas.txt")),
    ("b3_facets_to_ideas.txt", include_str!("templates/b3_facets_to_ideas.txt")),
    ("c1_novelty_classify.txt", include_str!("templates/c1_novelty_classify.txt")),
    ("c2_idea_keywords.txt", include_str!("templates/c2_idea_keywords.txt")),
    ("c3_idea_facets.txt", include_str!("templates/c3_idea_facets.txt")),
    ("c4_rerank.txt", include_str!("templates/c4_rerank.txt")),
    ("c5_more_novel_ideas.txt", include_str!("templates/c5_more_novel_ideas.txt")),
    ("rerank_relevance.txt", include_str!("templates/rerank_relevance.txt")),
    ("definition_rules.txt", include_str!("templates/definition_rules.txt")),
    ("facet_answer_format.txt", include_str!("templates/facet_answer_format.txt")),
    ("idea_common.txt", include_str!("templates/idea_common.txt")),
    ("idea_requirements.txt", include_str!("templates/idea_requirements.txt")),
    ("passages.txt", include_str!("templates/passages.txt")),
];

static ENV: LazyLock<Environment<'static>> = LazyLock::new(|| {
    let mut env = Environment::new();
    env.set_trim_blocks(true);
    env.set_lstrip_blocks(true);
    env.set_keep_trailing_newline(true);
    env.set_undefined_behavior(UndefinedBehavior::Strict);
    env.set_auto_escape_callback(|_| minijinja::AutoEscape::None);
    for (name, source) in ASSETS {
        env.add_template(name, source).expect("bundled template compiles");
    }
    env
});

pub fn asset_name(id: TemplateId) -> &'static str {
    match id {
        TemplateId::FacetExtraction => "a1_facet_extraction.txt",
        TemplateId::QueryPaperFacets => "a2_query_paper_facets.txt",
        TemplateId::AnalogyQueries => "a3_analogy_queries.txt",
        TemplateId::ShortenQuery => "a4_shorten_query.txt",
        TemplateId::SummarizePapers => "a5_summarize_papers.txt",
        TemplateId::InitialIdeas => "b1_initial_ideas.txt",
        TemplateId::FillAnalogyIdeas => "b2_fill_analogy_ideas.txt",
        TemplateId::FacetsToIdeas => "b3_facets_to_ideas.txt",
        TemplateId::NoveltyClassify => "c1_novelty_classify.txt",
        TemplateId::IdeaKeywords => "c2_idea_keywords.txt",
        TemplateId::IdeaFacetsForRerank => "c3_idea_facets.txt",
        TemplateId::Rerank => "c4_rerank.txt",
        TemplateId::RerankRelevance => "rerank_relevance.txt",
        TemplateId::MoreNovelIdeas => "c5_more_novel_ideas.txt",
    }
}

/// Renders a request into chat messages. Templates without role markers
/// become a single user message.
pub fn render(request: &LlmRequest) -> Result<Vec<ChatMessage>, LlmError> {
    let template = ENV
        .get_template(asset_name(request.template_id))
        .map_err(|e| LlmError::Template(e.to_string()))?;
    let text = template
        .render(&request.bindings)
        .map_err(|e| LlmError::Template(format!("{}: {e:#}", request.template_id)))?;
    Ok(split_messages(&text))
}

fn split_messages(text: &str) -> Vec<ChatMessage> {
    let mut messages = Vec::new();
    let mut role = Role::User;
    let mut buf = String::new();
    let mut seen_marker = false;
    for line in text.lines() {
        let marker = line
            .strip_prefix("=== ")
            .and_then(|l| l.strip_suffix(" ==="))
            .and_then(|r| r.parse::<Role>().ok());
        match marker {
            Some(next) => {
                if seen_marker || !buf.trim().is_empty() {
                    messages.push(ChatMessage { role, content: normalize(&buf) });
                }
                role = next;
                buf.clear();
                seen_marker = true;
            }
            None => {
                buf.push_str(line);
                buf.push('\n');
            }
        }
    }
    if !buf.trim().is_empty() || seen_marker {
        messages.push(ChatMessage { role, content: normalize(&buf) });
    }
    messages
}

/// Trims line ends and collapses blank-line runs to a single blank line.
fn normalize(text: &str) -> String {
    let mut out = String::new();
    let mut blank = 0;
    for line in text.lines().map(str::trim_end) {
        if line.is_empty() {
            blank += 1;
            continue;
        }
        if !out.is_empty() && blank > 0 {
            out.push('\n');
        }
        blank = 0;
        out.push_str(line);
        out.push('\n');
    }
    out
}
