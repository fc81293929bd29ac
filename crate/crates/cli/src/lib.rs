//! Configuration-driven experiments on top of `rigidity-core`: run
//! directories with hashed manifests, CSV traces, SVG charts and replay.

pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod plot;
pub mod report;

/// Caps the global rayon pool at `RIGIDITY_LAB_THREADS` when it is set.
pub fn init_threads() -> anyhow::Result<()> {
    use anyhow::Context;
    let Ok(value) = std::env::var("RIGIDITY_LAB_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .with_context(|| format!("RIGIDITY_LAB_THREADS must be a positive integer, got `{value}`"))?;
    if n == 0 {
        anyhow::bail!("RIGIDITY_LAB_THREADS must be a positive integer, got `{value}`");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    Ok(())
}
