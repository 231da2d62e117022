use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use mindcast_core::inference::{write_inference_tsv, InferenceResult};
use mindcast_core::numerics::Real;

use super::load_model;
use crate::config::RunConfig;

pub struct PredictArgs {
    pub event: Option<String>,
    pub batch: Option<PathBuf>,
    pub interactive: bool,
    pub out: Option<PathBuf>,
}

pub fn run<T: Real>(config: &RunConfig, args: &PredictArgs) -> Result<()> {
    let model = load_model::<T>(config)?;
    let infer = config.inference_config();
    if matches!(model.setup(), mindcast_core::model::DecoderSetup::Ngram)
        && infer.top_k > model.vocab.ngram_count()
    {
        eprintln!(
            "warning: k = {} exceeds the {}-entry output space; clamping",
            infer.top_k,
            model.vocab.ngram_count()
        );
    }
    config.write_snapshot("predict")?;

    if args.interactive {
        let stdin = std::io::stdin();
        let mut out = std::io::stdout();
        writeln!(out, "type an event per line (ctrl-d or \"quit\" to exit)")?;
        for line in stdin.lock().lines() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if trimmed == "quit" || trimmed == "exit" {
                break;
            }
            match model.predict(trimmed, &infer) {
                Ok(result) => write_inference_tsv(&mut out, &[result])?,
                Err(e) => eprintln!("warning: {e}"),
            }
            out.flush()?;
        }
        return Ok(());
    }

    let mut events: Vec<String> = Vec::new();
    if let Some(event) = &args.event {
        events.push(event.clone());
    }
    if let Some(batch) = &args.batch {
        let content = std::fs::read_to_string(batch)
            .with_context(|| format!("cannot read batch file {}", batch.display()))?;
        events.extend(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string),
        );
    }
    if events.is_empty() {
        bail!("nothing to predict: pass an event, --batch, or --interactive");
    }

    let mut results: Vec<InferenceResult> = Vec::new();
    let mut failures = 0usize;
    for event in &events {
        match model.predict(event, &infer) {
            Ok(result) => results.push(result),
            Err(e) => {
                failures += 1;
                eprintln!("warning: skipping {event:?}: {e}");
            }
        }
    }
    if results.is_empty() {
        bail!("all {failures} event(s) failed to parse");
    }

    let mut buf = Vec::new();
    write_inference_tsv(&mut buf, &results)?;
    match &args.out {
        Some(path) => std::fs::write(path, buf)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

pub fn run_interpolate<T: Real>(
    config: &RunConfig,
    event1: &str,
    event2: &str,
    steps: usize,
) -> Result<()> {
    let model = load_model::<T>(config)?;
    let infer = config.inference_config();
    config.write_snapshot("interpolate")?;

    let points = model.interpolate(event1, event2, steps, &infer)?;
    let mut out = std::io::stdout();
    for point in &points {
        writeln!(out, "# t = {:.4}", point.t)?;
        for task in mindcast_core::corpus::Task::ALL {
            for (rank, cand) in point.candidates.get(task).iter().enumerate() {
                writeln!(
                    out,
                    "{:.4}\t{task}\t{}\t{:.6}\t{}",
                    point.t,
                    rank + 1,
                    cand.score,
                    cand.text()
                )?;
            }
        }
    }
    Ok(())
}
