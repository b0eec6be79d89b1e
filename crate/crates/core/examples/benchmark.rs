//! Scores every novelty variant on the built-in labeled set.
//!
//! cargo run --example benchmark [replay|offline]

use scideator::bench::{run_benchmark, BenchOptions};
use scideator::novelty::{builtin_examples, Variant};
use scideator::session::{Engine, EngineConfig, RunMode};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mode: RunMode = std::env::args().nth(1).as_deref().unwrap_or("replay").parse()?;
    let engine = Engine::from_config(&EngineConfig { mode, ..Default::default() })?;
    let checker = engine.checker();
    for variant in Variant::ALL {
        let report = run_benchmark(&checker, builtin_examples(), BenchOptions { variant, ..Default::default() }).await?;
        println!("{}\n", report.table());
    }
    Ok(())
}
