use std::path::Path;
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{citations, Classification};
use crate::llm::bindings::PaperText;

/// A labeled idea used for in-context classification and for benchmarks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub idea: String,
    pub papers: Vec<PaperText>,
    pub label: Classification,
    pub reasoning: String,
}

impl LabeledExample {
    pub fn check(&self) -> Result<(), String> {
        if self.idea.trim().is_empty() {
            return Err("empty idea".into());
        }
        if let Some(bad) = citations(&self.reasoning).into_iter().find(|&i| i >= self.papers.len()) {
            return Err(format!("reasoning cites [{bad}] but only {} papers are listed", self.papers.len()));
        }
        Ok(())
    }
}

static BUILTIN: LazyLock<Vec<LabeledExample>> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../../fixtures/labeled_ideas.json")).expect("labeled_ideas.json parses")
});

/// The labeled set shipped with the crate.
pub fn builtin_examples() -> &'static [LabeledExample] {
    &BUILTIN
}

pub fn load_examples(path: &Path) -> Result<Vec<LabeledExample>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let out: Vec<LabeledExample> = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    for (i, ex) in out.iter().enumerate() {
        ex.check().map_err(|e| format!("{} item {i}: {e}", path.display()))?;
    }
    Ok(out)
}

/// Up to `per_class` examples of each class, drawn with a seeded shuffle and
/// interleaved in shuffled order. `exclude` drops items whose idea text matches.
pub fn sample_examples<'a>(
    pool: &'a [LabeledExample],
    per_class: usize,
    seed: u64,
    exclude: Option<&str>,
) -> Vec<&'a LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::new();
    for class in [Classification::Novel, Classification::NotNovel] {
        let mut items: Vec<&LabeledExample> =
            pool.iter().filter(|e| e.label == class && Some(e.idea.trim()) != exclude.map(str::trim)).collect();
        items.shuffle(&mut rng);
        picked.extend(items.into_iter().take(per_class));
    }
    picked.shuffle(&mut rng);
    picked
}

/// In-context block for the classifier prompt.
pub fn format_examples(examples: &[&LabeledExample]) -> String {
    let mut out = String::from("Example Reviews:");
    for (n, ex) in examples.iter().enumerate() {
        out.push_str(&format!("\n\nExample {}:\nIdea: {}\nRelated Papers:", n + 1, ex.idea.trim()));
        for (i, p) in ex.papers.iter().enumerate() {
            out.push_str(&format!("\nPaper ID [{i}]: Title: {}. Abstract: {}", p.title.trim(), p.abstract_text.trim()));
        }
        out.push_str(&format!("\n- Class: {}\n- Review: {}", ex.label.prompt_label(), ex.reasoning.trim()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_set_is_consistent() {
        let all = builtin_examples();
        assert_eq!(all.len(), 10);
        assert!(all.iter().all(|e| e.check().is_ok()));
        assert_eq!(all.iter().filter(|e| e.label == Classification::NotNovel).count(), 5);
    }

    #[test]
    fn sampling_is_seeded_and_bounded() {
        let all = builtin_examples();
        let a = sample_examples(all, 15, 100, None);
        assert_eq!(a.len(), 10);
        assert_eq!(a, sample_examples(all, 15, 100, None));
        let two = sample_examples(all, 2, 100, None);
        assert_eq!(two.iter().filter(|e| e.label == Classification::Novel).count(), 2);
        let loo = sample_examples(all, 15, 100, Some(&all[0].idea));
        assert_eq!(loo.len(), 9);
        assert!(!loo.iter().any(|e| e.idea == all[0].idea));
    }

    #[test]
    fn format_numbers_papers_from_zero() {
        let all = builtin_examples();
        let text = format_examples(&[&all[0]]);
        assert!(text.contains("Paper ID [0]: Title:"));
        assert!(text.contains("- Class: not novel"));
    }
}
