//! Runs labeled ideas through the novelty pipeline and reports accuracy,
//! the macro metric block and agreement with the complete system's ranking.

use std::fmt::Write as _;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::domain::Classification;
use crate::metrics::{classification_metrics, overlap, rank_shift, ClassificationMetrics, ConfusionMatrix};
use crate::novelty::{paper_text, sample_examples, LabeledExample, NoveltyChecker, Variant};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("the labeled set is empty")]
    EmptySet,
    #[error("labeled set item {0}: {1}")]
    BadItem(usize, String),
}

/// Where the papers an item is judged against come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaperSource {
    /// Run the variant's retrieval and classify against its top-k.
    Retrieval,
    /// Classify against the papers listed with each item.
    Labeled,
}

impl std::str::FromStr for PaperSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "retrieval" => Ok(PaperSource::Retrieval),
            "labeled" => Ok(PaperSource::Labeled),
            other => Err(format!("unknown paper source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub variant: Variant,
    pub papers: PaperSource,
    pub concurrency: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { variant: Variant::Complete, papers: PaperSource::Retrieval, concurrency: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub index: usize,
    pub label: Classification,
    /// `None` when the pipeline failed for this item.
    pub prediction: Option<Classification>,
    pub error: Option<String>,
    pub top_k: Vec<String>,
    pub complete_top_k: Vec<String>,
    pub review: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub variant: Variant,
    pub papers: PaperSource,
    pub positive_class: String,
    pub averaging: String,
    pub items: usize,
    pub abstentions: usize,
    /// Fraction of all items classified correctly; abstentions count as wrong.
    pub accuracy: f64,
    /// Fraction of not-novel items predicted not novel.
    pub not_novel_accuracy: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub metrics: ClassificationMetrics,
    /// Mean top-k overlap with the complete variant, retrieval runs only.
    pub mean_overlap: Option<f64>,
    pub mean_rank_shift: Option<f64>,
    pub results: Vec<ItemResult>,
}

pub async fn run_benchmark(
    checker: &NoveltyChecker<'_>,
    set: &[LabeledExample],
    options: BenchOptions,
) -> Result<BenchReport, BenchError> {
    if set.is_empty() {
        return Err(BenchError::EmptySet);
    }
    for (i, item) in set.iter().enumerate() {
        item.check().map_err(|e| BenchError::BadItem(i, e))?;
    }
    let results: Vec<ItemResult> = stream::iter(set.iter().enumerate())
        .map(|(index, item)| run_item(checker, set, index, item, options))
        .buffered(options.concurrency.max(1))
        .collect()
        .await;
    Ok(summarize(options, results))
}

async fn run_item(
    checker: &NoveltyChecker<'_>,
    set: &[LabeledExample],
    index: usize,
    item: &LabeledExample,
    options: BenchOptions,
) -> ItemResult {
    let mut out = ItemResult {
        index,
        label: item.label,
        prediction: None,
        error: None,
        top_k: Vec::new(),
        complete_top_k: Vec::new(),
        review: String::new(),
    };
    let cfg = checker.config();
    let examples = sample_examples(set, cfg.examples_per_class, cfg.example_seed, Some(&item.idea));
    let attempt = async {
        let papers = match options.papers {
            PaperSource::Labeled => item.papers.clone(),
            PaperSource::Retrieval => {
                let id = format!("bench-{index}");
                let candidates = checker.gather_candidates(&id, &item.idea, &[]).await?;
                let ranked = checker.run_variant(&item.idea, &candidates, options.variant).await?;
                out.top_k = ranked.top_k.clone();
                out.complete_top_k = if options.variant == Variant::Complete {
                    ranked.top_k.clone()
                } else {
                    checker.run_variant(&item.idea, &candidates, Variant::Complete).await?.top_k
                };
                ranked.top_k.iter().filter_map(|id| candidates.paper(id)).map(paper_text).collect()
            }
        };
        checker.classify(&item.idea, &papers, &examples).await
    };
    match attempt.await {
        Ok(d) => {
            out.prediction = Some(d.classification);
            out.review = d.review;
        }
        Err(e) => {
            warn!(item = index, error = %e, "benchmark item abstained");
            out.error = Some(e.to_string());
        }
    }
    out
}

fn summarize(options: BenchOptions, results: Vec<ItemResult>) -> BenchReport {
    let cm = ConfusionMatrix::from_pairs(
        results.iter().map(|r| (r.label, r.prediction.unwrap_or_else(|| r.label.opposite()))),
    );
    let metrics = classification_metrics(&cm).expect("non-empty set");
    let not_novel: Vec<&ItemResult> = results.iter().filter(|r| r.label == Classification::NotNovel).collect();
    let not_novel_accuracy = (!not_novel.is_empty()).then(|| {
        not_novel.iter().filter(|r| r.prediction == Some(Classification::NotNovel)).count() as f64 / not_novel.len() as f64
    });
    let (mean_overlap, mean_rank_shift) = if options.papers == PaperSource::Retrieval {
        let ran: Vec<&ItemResult> = results.iter().filter(|r| r.error.is_none()).collect();
        let overlaps: Vec<f64> = ran.iter().map(|r| overlap(&r.complete_top_k, &r.top_k) as f64).collect();
        let shifts: Vec<f64> = ran.iter().filter_map(|r| rank_shift(&r.complete_top_k, &r.top_k)).collect();
        (mean(&overlaps), mean(&shifts))
    } else {
        (None, None)
    };
    BenchReport {
        variant: options.variant,
        papers: options.papers,
        positive_class: "novel".into(),
        averaging: "macro".into(),
        items: results.len(),
        abstentions: results.iter().filter(|r| r.prediction.is_none()).count(),
        accuracy: metrics.accuracy,
        not_novel_accuracy,
        confusion: cm,
        metrics,
        mean_overlap,
        mean_rank_shift,
        results,
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

impl BenchReport {
    /// Aligned plain-text table.
    pub fn table(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
        let rows = [
            ("variant", self.variant.to_string()),
            ("papers", format!("{:?}", self.papers).to_lowercase()),
            ("items", self.items.to_string()),
            ("abstentions", self.abstentions.to_string()),
            ("accuracy", format!("{:.3}", self.accuracy)),
            ("not-novel accuracy", opt(self.not_novel_accuracy)),
            ("precision (macro)", format!("{:.3}", self.metrics.precision)),
            ("recall (macro)", format!("{:.3}", self.metrics.recall)),
            ("f1 (macro)", format!("{:.3}", self.metrics.f1)),
            ("cohen kappa", opt(self.metrics.kappa)),
            ("overlap vs complete", opt(self.mean_overlap)),
            ("rank shift vs complete", opt(self.mean_rank_shift)),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>4}  {:<9}  {:<9}  note", "item", "label", "predicted");
        for r in &self.results {
            let pred = r.prediction.map(|c| c.as_str().to_string()).unwrap_or_else(|| "abstain".into());
            let note = r.error.clone().unwrap_or_default();
            let _ = writeln!(out, "{:>4}  {:<9}  {:<9}  {note}", r.index, r.label.as_str(), pred);
        }
        out
    }
}
