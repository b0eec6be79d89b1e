/// Similarities are rounded to 1 / this so that parallel vectors tie exactly.
pub const SIMILARITY_SCALE: f64 = 1e12;

/// Cosine similarity. A zero vector or a length mismatch scores -1.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() || a.is_empty() {
        return -1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return -1.0;
    }
    // `+ 0.0` maps -0.0 to 0.0 for `total_cmp`.
    ((dot / (na * nb) * SIMILARITY_SCALE).round() / SIMILARITY_SCALE + 0.0).clamp(-1.0, 1.0)
}

/// The `n` papers most similar to `idea`, by descending cosine with ties
/// broken by ascending id.
pub fn rank_by_cosine(idea: &[f64], papers: &[(String, Vec<f64>)], n: usize) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = papers.iter().map(|(id, v)| (id.clone(), cosine(idea, v))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(n);
    scored
}

/// Window bounds for a back-to-front listwise pass over `len` items.
pub fn sliding_windows(len: usize, window: usize, stride: usize) -> Vec<(usize, usize)> {
    if len == 0 {
        return Vec::new();
    }
    if len <= window {
        return vec![(0, len)];
    }
    let mut out = Vec::new();
    let mut end = len;
    loop {
        let start = end.saturating_sub(window);
        out.push((start, end));
        if start == 0 {
            break;
        }
        end -= stride;
    }
    out
}

/// Applies a window-local permutation to `items[start..end]`.
pub fn apply_permutation<T: Clone>(items: &mut [T], start: usize, order: &[usize]) {
    let slice: Vec<T> = items[start..start + order.len()].to_vec();
    for (pos, &src) in order.iter().enumerate() {
        items[start + pos] = slice[src].clone();
    }
}
