//! Creates a session on disk, runs the initial idea round and reloads it.
//!
//! cargo run --example quickstart [replay|offline]

use scideator::offline::scenario::{demo_inputs, DEMO_TOPIC};
use scideator::ideas::FacetSelection;
use scideator::session::{Engine, EngineConfig, RunMode, SessionDir};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mode: RunMode = std::env::args().nth(1).as_deref().unwrap_or("replay").parse()?;
    let engine = Engine::from_config(&EngineConfig { mode, ..Default::default() })?;
    let tmp = std::env::temp_dir().join(format!("scideator-quickstart-{}", std::process::id()));
    let (mut state, created) = engine.create(DEMO_TOPIC, &demo_inputs()).await?;
    let dir = SessionDir::new(tmp.join(&state.session_id));
    dir.append(&created, &state)?;
    println!("session {} with {} papers and {} facets", state.session_id, state.papers.len(), state.facets.len());

    let round = engine.generate_ideas(&state, &FacetSelection::default()).await?;
    engine.commit(&mut state, round, Some(&dir))?;
    for idea in state.ordered_ideas() {
        println!("\n[{}] {}", idea.id, idea.short_text);
    }

    let reloaded = dir.load()?;
    assert_eq!(reloaded, state);
    println!("\nreloaded revision {} from {}", reloaded.revision, dir.path().display());
    std::fs::remove_dir_all(&tmp)?;
    Ok(())
}
