use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use covcompose::config::parse_config;
use covcompose::run::run;

/// Evolve mixtures of two equal-size PNG images.
#[derive(Debug, Parser)]
#[command(name = "compose", version)]
struct Cli {
    /// Source image (8-bit RGB PNG).
    #[arg(long)]
    source: Option<PathBuf>,
    /// Target image, same size as the source.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment preset, e.g. feat1, weights-saliency, metric-A, best.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    generations: Option<usize>,
    /// Also write saliency_S.png and saliency_T.png.
    #[arg(long)]
    dump_saliency: bool,
    /// Any other config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Cli {
    fn overrides(&self) -> Result<Vec<(String, String)>, String> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(p) = &self.preset {
            push("preset", p.clone());
        }
        if let Some(p) = &self.source {
            push("source", p.display().to_string());
        }
        if let Some(p) = &self.target {
            push("target", p.display().to_string());
        }
        if let Some(s) = self.seed {
            push("seed", s.to_string());
        }
        if let Some(p) = &self.out {
            push("out_dir", p.display().to_string());
        }
        if let Some(g) = self.generations {
            push("generations", g.to_string());
        }
        if self.dump_saliency {
            push("dump_saliency", "true".into());
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            push(k.trim(), v.trim().to_string());
        }
        Ok(out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = match cli.overrides() {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => String::new(),
    };
    let cfg = match parse_config(&text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg) {
        Ok(summary) => {
            for (k, s) in summary.slots.iter().enumerate() {
                println!("slot {k}: fitness {:.6}, constraint {} (bound {})", s.fitness, s.constraint, summary.bound);
            }
            println!("wrote {}", summary.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
