//! Rebuilds `fixtures/corpus` and `fixtures/llm` by running the demo session
//! and the benchmarks in record mode against the simulated catalog.
//!
//! cargo run --example record_fixtures

use std::path::PathBuf;
use std::sync::Arc;

use scideator::bench::{run_benchmark, BenchOptions, PaperSource};
use scideator::corpus::{Corpus, FixtureStore};
use scideator::llm::{LlmGateway, ReplayStore};
use scideator::novelty::{builtin_examples, load_examples, Variant};
use scideator::offline::scenario::demo_session;
use scideator::offline::{Catalog, OfflineCorpus, ScriptedLlm};
use scideator::session::{fixed_epoch, Clock, Engine};

#[tokio::main]
async fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for sub in ["corpus", "llm"] {
        let _ = std::fs::remove_dir_all(root.join(sub));
    }
    let corpus = Corpus::record(Arc::new(OfflineCorpus::new(Catalog::builtin())), FixtureStore::new(root.join("corpus")));
    let llm = LlmGateway::record(Arc::new(ScriptedLlm::new(Catalog::builtin())), ReplayStore::new(root.join("llm")));
    let engine = Engine::new(Arc::new(corpus), Arc::new(llm)).with_clock(Clock::Fixed(fixed_epoch()));

    let s = demo_session(&engine, None).await.expect("demo session");
    println!("demo session {}: {} ideas, revision {}", s.session_id, s.ideas.len(), s.revision);

    let checker = engine.checker();
    let full = builtin_examples();
    for variant in Variant::ALL {
        let r = run_benchmark(&checker, full, BenchOptions { variant, ..Default::default() }).await.expect("bench");
        println!("{variant}: accuracy {:.3}, abstentions {}", r.accuracy, r.abstentions);
    }
    let labeled = BenchOptions { papers: PaperSource::Labeled, ..Default::default() };
    run_benchmark(&checker, full, labeled).await.expect("labeled bench");
    let pair = load_examples(&root.join("labeled_pair.json")).expect("pair set");
    run_benchmark(&checker, &pair, BenchOptions::default()).await.expect("pair bench");
    println!("{} model calls recorded", engine.llm().calls());
}
