//! Checks one labeled idea: candidate gathering, embedding filter, rerank
//! and classification, printing each stage.
//!
//! cargo run --example novelty_check [replay|offline] [item]

use scideator::novelty::{builtin_examples, paper_text, sample_examples, Variant};
use scideator::session::{Engine, EngineConfig, RunMode};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mode: RunMode = args.next().as_deref().unwrap_or("replay").parse()?;
    let index: usize = args.next().as_deref().unwrap_or("0").parse()?;
    let engine = Engine::from_config(&EngineConfig { mode, ..Default::default() })?;
    let checker = engine.checker();
    let set = builtin_examples();
    let item = set.get(index).ok_or("no such labeled item")?;
    println!("idea: {}\nlabel: {}\n", item.idea, item.label);

    // Benchmark item ids keep these requests on the recorded path.
    let candidates = checker.gather_candidates(&format!("bench-{index}"), &item.idea, &[]).await?;
    println!("{} candidates from {:?}", candidates.papers.len(), candidates.tags());
    let ranked = checker.run_variant(&item.idea, &candidates, Variant::Complete).await?;
    println!("top {} by embedding, top {} after rerank:", ranked.top_n.len(), ranked.top_k.len());
    for (i, id) in ranked.top_k.iter().enumerate() {
        let p = candidates.paper(id).expect("ranked ids are candidates");
        println!("  [{i}] {:.3} {}", ranked.similarity.get(id).copied().unwrap_or_default(), p.title);
    }

    let cfg = checker.config();
    let examples = sample_examples(set, cfg.examples_per_class, cfg.example_seed, Some(&item.idea));
    let papers: Vec<_> = ranked.top_k.iter().filter_map(|id| candidates.paper(id)).map(paper_text).collect();
    let verdict = checker.classify(&item.idea, &papers, &examples).await?;
    println!("\nclass: {}\nreview: {}", verdict.classification, verdict.review);
    Ok(())
}
