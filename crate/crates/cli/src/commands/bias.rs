use anyhow::{Context, Result};

use mindcast_core::bias::{
    analyze_bias, load_character_events, render_bias_report, BiasConfig, Lexicon,
};
use mindcast_core::numerics::Real;

use super::load_model;
use crate::config::RunConfig;

pub fn run<T: Real>(config: &RunConfig, alpha: f64) -> Result<()> {
    let model = load_model::<T>(config)?;
    let lexicon_path = config.require_existing("lexicon", &config.paths.lexicon)?;
    let characters_path = config.require_existing("characters", &config.paths.characters)?;

    let lexicon = Lexicon::load(&lexicon_path)?;
    let rows = load_character_events(&characters_path)?;
    eprintln!(
        "scoring {} character-event rows against {} categories",
        rows.len(),
        lexicon.len()
    );

    let bias_config = BiasConfig {
        inference: config.inference_config(),
        alpha,
    };
    let report = analyze_bias(&model, &rows, &lexicon, &bias_config)?;
    if report.characters_excluded_no_gender > 0 {
        eprintln!(
            "excluded {} character(s) lacking a gender label",
            report.characters_excluded_no_gender
        );
    }

    let rendered = render_bias_report(&report);
    let out_dir = config.out_dir();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let path = out_dir.join("bias_report.txt");
    std::fs::write(&path, &rendered)
        .with_context(|| format!("cannot write {}", path.display()))?;
    config.write_snapshot("bias")?;

    print!("{rendered}");
    println!("report: {}", path.display());
    Ok(())
}
