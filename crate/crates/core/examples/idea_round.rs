//! Runs the initial round, then a round on one selected purpose and one
//! selected mechanism, and prints both.
//!
//! cargo run --example idea_round [replay|offline]

use scideator::ideas::FacetSelection;
use scideator::offline::scenario::{demo_inputs, demo_selection, DEMO_QUERY, DEMO_TOPIC};
use scideator::session::{Engine, EngineConfig, RunMode};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mode: RunMode = std::env::args().nth(1).as_deref().unwrap_or("replay").parse()?;
    let engine = Engine::from_config(&EngineConfig { mode, ..Default::default() })?;
    let (mut s, _) = engine.create(DEMO_TOPIC, &demo_inputs()).await?;
    let m = engine.generate_ideas(&s, &FacetSelection::default()).await?;
    engine.commit(&mut s, m, None)?;
    let m = engine.generate_facets(&s, Some(DEMO_QUERY)).await?;
    engine.commit(&mut s, m, None)?;
    let m = engine.generate_facets(&s, None).await?;
    engine.commit(&mut s, m, None)?;

    let selection = demo_selection(&s);
    let m = engine.generate_ideas(&s, &selection).await?;
    engine.commit(&mut s, m, None)?;
    for round in &s.rounds {
        println!("== {:?}: group 1 {:?}, group 2 {:?}", round.situation, round.group1_paper_ids, round.group2_paper_ids);
        for id in &round.produced_idea_ids {
            let idea = &s.ideas[id];
            println!("\n[{}] analogy: {}", idea.id, idea.analogy);
            for fid in idea.facet_ids() {
                let f = &s.facets[fid];
                println!("  {:<10} {}", f.kind.label(), f.text);
            }
            println!("  {}", idea.short_text);
        }
        println!();
    }
    Ok(())
}
