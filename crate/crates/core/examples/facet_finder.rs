//! Lists the facets found for the input papers and each analogous tier,
//! then adds facets for a user query.
//!
//! cargo run --example facet_finder [replay|offline]

use scideator::domain::{DistanceClass, FacetKind, PaperRecord, Provenance};
use scideator::ideas::FacetSelection;
use scideator::offline::scenario::{demo_inputs, DEMO_QUERY, DEMO_TOPIC};
use scideator::session::{Engine, EngineConfig, EventKind, RunMode, SessionState};

fn print_paper(state: &SessionState, paper: &PaperRecord) {
    println!("  {} ({})", paper.title, paper.corpus_id);
    for f in state.facets.values() {
        if matches!(&f.provenance, Provenance::Paper { paper_id, .. } if *paper_id == paper.corpus_id) {
            println!("    {:<10} {}", f.kind.label(), f.text);
        }
    }
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mode: RunMode = std::env::args().nth(1).as_deref().unwrap_or("replay").parse()?;
    let engine = Engine::from_config(&EngineConfig { mode, ..Default::default() })?;
    let (mut state, _) = engine.create(DEMO_TOPIC, &demo_inputs()).await?;
    let ctx = &state.context;
    println!("overarching purpose: {}", ctx.overarching.purpose);
    println!("overarching mechanism: {}", ctx.overarching.mechanism);
    let tiers = [
        ("input", ctx.input_paper_ids.clone()),
        ("very near", ctx.very_near_ids.clone()),
        ("near", ctx.tier(DistanceClass::Near).to_vec()),
        ("far", ctx.tier(DistanceClass::Far).to_vec()),
        ("very far", ctx.tier(DistanceClass::VeryFar).to_vec()),
    ];
    for (name, ids) in tiers {
        println!("\n{name}:");
        for id in ids {
            print_paper(&state, &state.papers[&id]);
        }
    }

    // The recorded fixtures issue the query after the initial idea round.
    let m = engine.generate_ideas(&state, &FacetSelection::default()).await?;
    engine.commit(&mut state, m, None)?;
    let m = engine.generate_facets(&state, Some(DEMO_QUERY)).await?;
    let event = engine.commit(&mut state, m, None)?;
    if let EventKind::FacetsGenerated { facets, .. } = event.kind {
        println!("\nquery \"{DEMO_QUERY}\" added {} facets:", facets.len());
        for f in facets.iter().filter(|f| f.kind != FacetKind::Evaluation) {
            println!("  {:<10} {}", f.kind.label(), f.text);
        }
    }
    Ok(())
}
