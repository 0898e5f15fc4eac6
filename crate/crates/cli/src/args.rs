use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gesmap", version, about = "Gesture-to-sound mapping engine")]
pub struct Cli {
    /// JSON file whose keys mirror flag names; flags given on the command
    /// line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract windowed motion or EMG features to CSV.
    Features(FeaturesArgs),
    /// Train an MLP on a dataset CSV with `in_*` and `out_*` columns.
    Train(TrainArgs),
    /// Run a trained MLP over the `in_*` columns of a CSV, one output line per row.
    Predict(PredictArgs),
    /// Build or query an audio unit corpus.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Run the exploration agent against a simulated user.
    AimlSim(AimlSimArgs),
    /// Replay an agent history log and print the final state hash.
    Replay(ReplayArgs),
    /// Render a granular texture from four anchor presets.
    Render(RenderArgs),
    /// Serve the WebSocket/HTTP session API.
    Serve(ServeArgs),
    /// Write a synthetic single-marker trajectory.
    GenGesture(GenGestureArgs),
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Motion capture CSV or frame JSONL.
    pub input: PathBuf,
    /// Features to compute, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub feature: Vec<String>,
    /// Window length in frames.
    #[arg(long, default_value_t = 50)]
    pub window: usize,
    /// Hop between windows in frames.
    #[arg(long, default_value_t = 25)]
    pub hop: usize,
    /// Marker index for single-marker features.
    #[arg(long, default_value_t = 0)]
    pub marker: usize,
    /// Tempo for the rhythmic bands.
    #[arg(long, default_value_t = 120.0)]
    pub tempo: f64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Where to write the model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Hidden layer sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 5000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    #[arg(long)]
    pub seed: u64,
    /// Optional loss curve CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Segment and analyse WAV files into a corpus JSON.
    Build(CorpusBuildArgs),
    /// Print the k units nearest to a 19-value descriptor target.
    Query(CorpusQueryArgs),
}

#[derive(Debug, Args)]
pub struct CorpusBuildArgs {
    #[arg(required = true)]
    pub wavs: Vec<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorpusQueryArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Descriptor values, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "target_json"
    )]
    pub target: Option<Vec<f64>>,
    /// JSON file holding the descriptor array.
    #[arg(long)]
    pub target_json: Option<PathBuf>,
    #[arg(short, long, default_value_t = 1)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct AimlSimArgs {
    /// JSON array of presets (parameter arrays or granular preset objects).
    #[arg(long)]
    pub presets: PathBuf,
    /// JSON array of hidden target points, one per preset.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long)]
    pub seed: u64,
    /// History log to write (JSONL).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// JSON feature space `{"dims":[..],"bounds":[[lo,hi],..]}`; unit cube when absent.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub step_size: f64,
    /// Move each point along its own direction.
    #[arg(long)]
    pub independent: bool,
    /// Distance that always counts as an improvement.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub log: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Source WAV.
    #[arg(long)]
    pub source: PathBuf,
    /// JSON array of four granular presets.
    #[arg(long)]
    pub presets: PathBuf,
    #[arg(long)]
    pub duration: f64,
    /// Parameter timeline rate in Hz.
    #[arg(long, default_value_t = 100.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 100.0)]
    pub grain_ms: f64,
    #[arg(long, default_value_t = 4)]
    pub overlap: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long)]
    pub session_dir: PathBuf,
    /// Directory of UI assets served at `/`; a built-in page otherwise.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Shape {
    Circle,
    Sine,
    Still,
}

#[derive(Debug, Args)]
pub struct GenGestureArgs {
    #[arg(long, value_enum)]
    pub shape: Shape,
    #[arg(long, default_value_t = 100.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 2.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 1.0)]
    pub freq: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// `.csv` or `.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Names of positional arguments per subcommand, used when merging a
/// config file.
fn positionals(command: &[String]) -> &'static [&'static str] {
    match command.first().map(String::as_str) {
        Some("features") => &["input"],
        Some("corpus") if command.get(1).map(String::as_str) == Some("build") => &["wavs"],
        _ => &[],
    }
}

/// Expands `--config FILE` into ordinary arguments. Each key of the JSON
/// object becomes `--key value` (underscores read as hyphens) unless the
/// flag is already present; arrays become comma-joined values, `true`
/// becomes a bare switch and `false`/`null` are skipped. Keys naming a
/// positional argument are appended as positionals.
pub fn merge_config(argv: Vec<String>) -> anyhow::Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(
                it.next()
                    .ok_or_else(|| crate::UsageError("--config needs a file".into()))?,
            );
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| crate::UsageError(format!("config file {path}: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| crate::UsageError(format!("config file {path} must hold a JSON object")))?;
    let command: Vec<String> = rest
        .iter()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .cloned()
        .collect();
    let pos = positionals(&command);
    let scalar = |v: &serde_json::Value| match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let mut extra = Vec::new();
    let mut trailing = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        if rest
            .iter()
            .any(|a| a == &flag || a.starts_with(&format!("{flag}=")))
        {
            continue;
        }
        if pos.contains(&key.as_str()) {
            match v {
                serde_json::Value::Array(items) => trailing.extend(items.iter().map(scalar)),
                other => trailing.push(scalar(other)),
            }
            continue;
        }
        match v {
            serde_json::Value::Bool(true) => extra.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                extra.push(flag);
                extra.push(items.iter().map(scalar).collect::<Vec<_>>().join(","));
            }
            other => {
                extra.push(flag);
                extra.push(scalar(other));
            }
        }
    }
    rest.extend(extra);
    rest.extend(trailing);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn config_fills_missing_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(
            &cfg,
            r#"{"epochs": 10, "seed": 3, "hidden": [4, 4], "lr": 0.1}"#,
        )
        .unwrap();
        let args = merge_config(argv(&format!(
            "gesmap train --config {} --seed 9 --dataset d --model m",
            cfg.display()
        )))
        .unwrap();
        let cli = Cli::try_parse_from(args).unwrap();
        let Command::Train(t) = cli.command else {
            panic!()
        };
        assert_eq!(
            (t.epochs, t.seed, t.hidden.clone(), t.lr),
            (10, 9, vec![4, 4], 0.1)
        );
    }

    #[test]
    fn config_supplies_positionals() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"input": "g.csv", "feature": ["qom", "ci"]}"#).unwrap();
        let args =
            merge_config(argv(&format!("gesmap features --config {}", cfg.display()))).unwrap();
        let Command::Features(f) = Cli::try_parse_from(args).unwrap().command else {
            panic!()
        };
        assert_eq!(f.input, PathBuf::from("g.csv"));
        assert_eq!(f.feature, vec!["qom", "ci"]);
    }
}
