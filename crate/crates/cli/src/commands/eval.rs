use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use mindcast_core::corpus::{split_dataset, Task};
use mindcast_core::eval::{
    evaluate, export_human_eval, load_human_ratings, precision_at_10, render_kv, render_report,
    EvalConfig,
};
use mindcast_core::numerics::Real;

use super::{load_model, load_records};
use crate::config::RunConfig;

pub struct EvalArgs {
    pub split: String,
    pub subsets: bool,
    /// Sample this many events and write a blank human-rating template.
    pub export_human_eval: Option<usize>,
    /// Score a filled-in rating file (precision@10).
    pub ratings: Option<PathBuf>,
    pub rater_threshold: usize,
}

pub fn run<T: Real>(config: &RunConfig, args: &EvalArgs) -> Result<()> {
    let split = args.split.as_str();
    let model = load_model::<T>(config)?;
    let records = load_records(config)?;
    let rows = match split {
        "all" => records,
        "train" | "dev" | "test" => {
            let splits = split_dataset(records, config.split_ratios(), config.run.seed)?;
            match split {
                "train" => splits.train,
                "dev" => splits.dev,
                _ => splits.test,
            }
        }
        other => bail!("unknown split {other:?} (train | dev | test | all)"),
    };

    let eval_config = EvalConfig {
        k: config.infer.k,
        inference: config.inference_config(),
        with_subsets: args.subsets,
        max_target_len: config.train.max_target_len,
    };
    let report = evaluate(&model, &rows, split, &eval_config)?;

    let out_dir = config.out_dir();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let rendered = render_report(&report);
    let report_path = out_dir.join(format!("eval_{split}.txt"));
    std::fs::write(&report_path, &rendered)
        .with_context(|| format!("cannot write {}", report_path.display()))?;
    let kv_path = out_dir.join(format!("eval_{split}.kv"));
    std::fs::write(&kv_path, render_kv(&report))
        .with_context(|| format!("cannot write {}", kv_path.display()))?;

    if let Some(n_events) = args.export_human_eval {
        let (template, clamped) =
            export_human_eval(&model, &rows, n_events, config.run.seed, &eval_config.inference)?;
        if clamped {
            eprintln!("warning: split holds fewer than {n_events} unique events; exported all");
        }
        let path = out_dir.join(format!("human_eval_{split}.tsv"));
        std::fs::write(&path, template)
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!("human-eval template: {}", path.display());
    }
    if let Some(ratings_path) = &args.ratings {
        let ratings = load_human_ratings(ratings_path)?;
        let (per_task, overall) = precision_at_10(&ratings, args.rater_threshold)?;
        println!(
            "precision@10 (>= {} raters): Intent {:.2} / XReact {:.2} / OReact {:.2} / overall {:.2}",
            args.rater_threshold,
            per_task.get(Task::XIntent),
            per_task.get(Task::XReact),
            per_task.get(Task::OReact),
            overall
        );
    }
    config.write_snapshot("eval")?;

    print!("{rendered}");
    println!("report: {}", report_path.display());
    Ok(())
}
