//! Token statistics shared by the offline corpus and the scripted model.

use std::collections::BTreeSet;

use crate::domain::stable_hash;

pub const EMBEDDING_DIM: usize = 64;

const STOPWORDS: &[&str] = &[
    "a", "about", "across", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "before", "being", "between", "both", "but", "by", "can", "could", "do", "does", "each", "for", "from",
    "has", "have", "how", "if", "in", "into", "is", "it", "its", "more", "most", "much", "no", "not", "of",
    "on", "only", "or", "other", "our", "over", "so", "such", "than", "that", "the", "their", "them",
    "then", "there", "these", "they", "this", "those", "through", "to", "under", "up", "us", "use",
    "used", "uses", "using", "very", "was", "we", "were", "what", "when", "where", "whether", "which",
    "while", "who", "whose", "why", "will", "with", "within", "without", "would", "you", "your",
];

/// Lowercase alphanumeric runs, stopwords included.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Words minus stopwords and single characters, in text order.
pub fn content_words(text: &str) -> Vec<String> {
    words(text).into_iter().filter(|w| w.len() > 1 && !STOPWORDS.contains(&w.as_str())).collect()
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    content_words(text).into_iter().collect()
}

/// Share of `a` found in `b`. Zero when `a` is empty.
pub fn containment(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.intersection(b).count() as f64 / a.len() as f64
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Signed feature hashing of content words, L2-normalized. Empty text gives
/// the zero vector.
pub fn embed(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; EMBEDDING_DIM];
    for w in content_words(text) {
        let h = stable_hash(&w);
        let sign = if (h >> 32) & 1 == 1 { 1.0 } else { -1.0 };
        v[(h % EMBEDDING_DIM as u64) as usize] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        cur.push(c);
        if matches!(c, '.' | '!' | '?') {
            let s = cur.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            cur.clear();
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenization() {
        assert_eq!(words("Human-AI art, 2024!"), vec!["human", "ai", "art", "2024"]);
        assert_eq!(content_words("to support the writing of a story"), vec!["support", "writing", "story"]);
    }

    #[test]
    fn overlap_measures() {
        let a = token_set("vocabulary learning speakers");
        let b = token_set("personalized vocabulary learning");
        assert!((containment(&a, &b) - 2.0 / 3.0).abs() < 1e-12);
        assert!((jaccard(&a, &b) - 0.5).abs() < 1e-12);
        assert_eq!(containment(&token_set(""), &b), 0.0);
    }

    #[test]
    fn embeddings_are_unit_or_zero() {
        let v = embed("generative models as creative partners");
        assert_eq!(v.len(), EMBEDDING_DIM);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(embed("the of").iter().all(|x| *x == 0.0));
        assert_eq!(embed("same text"), embed("Same   text"));
    }

    #[test]
    fn splits_sentences() {
        assert_eq!(sentences("One. Two? Three"), vec!["One.", "Two?", "Three"]);
    }
}
