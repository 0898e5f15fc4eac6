//! One function per subcommand. Data goes to `out`; diagnostics go through
//! `log` to stderr.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use gesmap_core::agent::{
    agent_init, simulate, AgentConfig, AgentLog, FeatureSpace, Feedback, SimulatedOracle,
};
use gesmap_core::corpus::{
    build_corpus, retrieve_knn, AnalysisParams, SegmentParams, SourceAudio, DESCRIPTOR_LEN,
};
use gesmap_core::features::{extract_windows, FeatureConfig};
use gesmap_core::granular::{
    envelope_to_timeline, render_offline, AnchorEnvelope, GrainParams, SynthPreset,
};
use gesmap_core::ingest::{
    gen_synthetic_gesture, parse_dataset_csv, parse_frames_jsonl, parse_mocap_csv, read_wav,
    write_frames_jsonl, write_mocap_csv, write_wav, FrameStream, GestureShape, GestureSpec,
};
use gesmap_core::models::{mlp_init, mlp_loss, mlp_predict, mlp_train, MlpModel, RegressionSet};
use gesmap_core::session::parse_presets_json;
use gesmap_core::{Corpus, Error};

use crate::args::*;
use crate::UsageError;

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Motion CSV or frame JSONL, picked by extension.
fn read_stream(path: &Path) -> anyhow::Result<FrameStream> {
    let text = read_text(path)?;
    if has_ext(path, "jsonl") {
        Ok(parse_frames_jsonl(&text)?)
    } else if has_ext(path, "csv") {
        Ok(parse_mocap_csv(&text, None)?)
    } else {
        Err(Error::UnsupportedFormat(format!(
            "{}: expected a .csv or .jsonl file",
            path.display()
        ))
        .into())
    }
}

fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn run(command: Command, out: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Features(a) => features(a, out),
        Command::Train(a) => train(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Corpus(CorpusCommand::Build(a)) => corpus_build(a, out),
        Command::Corpus(CorpusCommand::Query(a)) => corpus_query(a, out),
        Command::AimlSim(a) => aiml_sim(a, out),
        Command::Replay(a) => replay(a, out),
        Command::Render(a) => render(a),
        Command::GenGesture(a) => gen_gesture(a),
        Command::Serve(a) => crate::server::run_blocking(a),
    }
}

/// Header `t,<feature columns>`, then one row per window. Columns follow the
/// order of `--feature`; multi-valued features expand in place.
pub fn features(a: FeaturesArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut cfg = FeatureConfig {
        features: a.feature.clone(),
        window: a.window,
        hop: a.hop,
        marker: a.marker,
        ..FeatureConfig::default()
    };
    cfg.bands.tempo_bpm = a.tempo;
    cfg.validate()?;
    let stream = read_stream(&a.input)?;
    let rows = extract_windows(&cfg, &stream)?;
    let mut text = String::from("t");
    for n in rows[0].1.names() {
        text.push(',');
        text.push_str(n);
    }
    text.push('\n');
    for (t, fv) in &rows {
        text.push_str(&format!("{t},{}\n", csv_row(fv.values())));
    }
    match &a.out {
        Some(p) => write_file(p, text.as_bytes())?,
        None => out.write_all(text.as_bytes())?,
    }
    log::info!(
        "{} windows of {} features",
        rows.len(),
        rows[0].1.values().len()
    );
    Ok(())
}

fn load_dataset(path: &Path) -> anyhow::Result<gesmap_core::ingest::Dataset> {
    Ok(parse_dataset_csv(&read_text(path)?)?)
}

/// Trains for exactly `--epochs` updates and prints `final_mse <loss>`,
/// the mean squared error in the model's normalized output space.
pub fn train(a: TrainArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    if a.epochs == 0 {
        return Err(UsageError("--epochs must be at least 1".into()).into());
    }
    if a.hidden.contains(&0) {
        return Err(UsageError("--hidden sizes must be at least 1".into()).into());
    }
    let data = load_dataset(&a.dataset)?;
    if data.output_names.is_empty() {
        return Err(
            Error::Schema("training dataset needs at least one `out_*` column".into()).into(),
        );
    }
    let set = RegressionSet::new(data.inputs, data.targets)?;
    let mut sizes = vec![set.input_dim()];
    sizes.extend(&a.hidden);
    sizes.push(set.output_dim());
    let model = mlp_init(&sizes, a.seed)?;
    let (model, curve) = mlp_train(model, &set, a.epochs, a.lr)?;
    let mse = mlp_loss(&model, &set)?;
    write_file(&a.model, model.to_json().as_bytes())?;
    if let Some(p) = &a.curve {
        let mut text = String::from("epoch,loss\n");
        for (i, l) in curve.iter().enumerate() {
            text.push_str(&format!("{i},{l}\n"));
        }
        write_file(p, text.as_bytes())?;
    }
    writeln!(out, "final_mse {mse}")?;
    log::info!(
        "trained {:?} on {} examples for {} epochs",
        sizes,
        set.len(),
        a.epochs
    );
    Ok(())
}

/// One comma-separated output line per dataset row.
pub fn predict(a: PredictArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let model = MlpModel::from_json(&read_text(&a.model)?)?;
    let data = load_dataset(&a.dataset)?;
    if data.input_names.len() != model.input_dim() {
        return Err(Error::Parameter(format!(
            "dataset has {} input columns, model expects {}",
            data.input_names.len(),
            model.input_dim()
        ))
        .into());
    }
    let mut text = String::new();
    for x in &data.inputs {
        text.push_str(&csv_row(&mlp_predict(&model, x)?));
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn corpus_build(a: CorpusBuildArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let sources = a
        .wavs
        .iter()
        .map(|p| SourceAudio::from_wav_file(p))
        .collect::<gesmap_core::Result<Vec<_>>>()?;
    let corpus = build_corpus(sources, SegmentParams::default(), AnalysisParams::default())?;
    corpus.save(&a.corpus)?;
    let st = corpus.stats();
    writeln!(
        out,
        "{} units, mean duration {:.6} s, {} skipped",
        st.units, st.mean_duration_s, st.skipped
    )?;
    Ok(())
}

/// CSV `index,distance,source,start,len`, nearest first.
pub fn corpus_query(a: CorpusQueryArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let target: Vec<f64> = match (&a.target, &a.target_json) {
        (Some(t), None) => t.clone(),
        (None, Some(p)) => serde_json::from_str(&read_text(p)?).map_err(|e| {
            UsageError(format!(
                "{}: expected a JSON array of numbers: {e}",
                p.display()
            ))
        })?,
        _ => return Err(UsageError("give exactly one of --target or --target-json".into()).into()),
    };
    if target.len() != DESCRIPTOR_LEN {
        return Err(Error::Parameter(format!(
            "target has {} values, expected {DESCRIPTOR_LEN} descriptor values",
            target.len()
        ))
        .into());
    }
    if a.k == 0 {
        return Err(UsageError("-k must be at least 1".into()).into());
    }
    let corpus = Corpus::load(&a.corpus)?;
    let mut text = String::from("index,distance,source,start,len\n");
    for m in retrieve_knn(&corpus, &target, a.k, None)? {
        let u = &corpus.units()[m.index];
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            m.index, m.distance, u.source_id, u.span.start, u.span.len
        ));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn parse_points(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    serde_json::from_str(&read_text(path)?).map_err(|e| {
        UsageError(format!(
            "{}: expected a JSON array of points: {e}",
            path.display()
        ))
        .into()
    })
}

/// Per-iteration CSV `iteration,distance,feedback` on stdout; the summary
/// and final state hash on stderr.
pub fn aiml_sim(a: AimlSimArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let presets = parse_presets_json(&read_text(&a.presets)?)
        .map_err(|e| UsageError(format!("{}: {e}", a.presets.display())))?;
    if presets.len() < 2 {
        return Err(UsageError(format!("need at least 2 presets, got {}", presets.len())).into());
    }
    let targets = parse_points(&a.target)?;
    if targets.len() != presets.len() {
        return Err(UsageError(format!(
            "{} targets for {} presets",
            targets.len(),
            presets.len()
        ))
        .into());
    }
    let space = match &a.space {
        Some(p) => {
            let s: FeatureSpace = serde_json::from_str(&read_text(p)?)
                .map_err(|e| UsageError(format!("{}: {e}", p.display())))?;
            s.validate()?;
            s
        }
        None => {
            let names: Vec<String> = (0..targets[0].len()).map(|i| format!("x{i}")).collect();
            FeatureSpace::unit(&names.iter().map(String::as_str).collect::<Vec<_>>())?
        }
    };
    if let Some(t) = targets.iter().find(|t| t.len() != space.len()) {
        return Err(UsageError(format!(
            "target point has {} dims, feature space has {}",
            t.len(),
            space.len()
        ))
        .into());
    }
    let config = AgentConfig {
        step_size: a.step_size,
        shared_direction: !a.independent,
        ..AgentConfig::default()
    };
    let state = agent_init(space, presets.len(), a.seed, config)?;
    let mut oracle = SimulatedOracle::new(targets, a.threshold)?;
    let (report, state) = simulate(state, &mut oracle, &presets, a.iterations)?;
    let mut text = String::from("iteration,distance,feedback\n");
    for (i, (d, f)) in report.distances.iter().zip(&report.feedback).enumerate() {
        let f = match f {
            Feedback::Guiding(s) if *s > 0 => "+1",
            Feedback::Guiding(_) => "-1",
            Feedback::Zone => "zone",
        };
        text.push_str(&format!("{i},{d},{f}\n"));
    }
    out.write_all(text.as_bytes())?;
    if let Some(p) = &a.log {
        AgentLog::from_state(&state).save(p)?;
    }
    let hash = state.state_hash();
    eprintln!(
        "initial distance {} final distance {} ratio {}",
        report.initial_distance,
        report.final_distance,
        report.ratio()
    );
    eprintln!("state {hash}");
    Ok(())
}

pub fn replay(a: ReplayArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let log = AgentLog::load(&a.log)?;
    let state = gesmap_core::agent::replay_log(&log)?;
    writeln!(out, "{}", state.state_hash())?;
    Ok(())
}

pub fn render(a: RenderArgs) -> anyhow::Result<()> {
    let presets = parse_presets_json(&read_text(&a.presets)?)
        .map_err(|e| UsageError(format!("{}: {e}", a.presets.display())))?;
    let presets: [SynthPreset; 4] = presets
        .iter()
        .map(|p| SynthPreset::from_slice(p))
        .collect::<gesmap_core::Result<Vec<_>>>()?
        .try_into()
        .map_err(|v: Vec<_>| {
            UsageError(format!("render needs exactly 4 presets, got {}", v.len()))
        })?;
    let source = read_wav(
        &std::fs::read(&a.source).with_context(|| format!("reading {}", a.source.display()))?,
    )?;
    let env = AnchorEnvelope::evenly_spaced(presets)?;
    let timeline = envelope_to_timeline(&env, a.duration, a.rate)?;
    let audio = render_offline(
        &source,
        &timeline,
        GrainParams {
            size_ms: a.grain_ms,
            overlap: a.overlap,
        },
    )?;
    write_file(&a.out, &write_wav(&audio, 16)?)?;
    log::info!(
        "rendered {:.3} s to {}",
        audio.duration_s(),
        a.out.display()
    );
    Ok(())
}

pub fn gen_gesture(a: GenGestureArgs) -> anyhow::Result<()> {
    let shape = match a.shape {
        Shape::Circle => GestureShape::Circle,
        Shape::Sine => GestureShape::Sine,
        Shape::Still => GestureShape::Still,
    };
    let stream = gen_synthetic_gesture(&GestureSpec {
        shape,
        rate_hz: a.rate,
        duration_s: a.duration,
        freq_hz: a.freq,
        radius_m: a.radius,
    })?;
    let text = if has_ext(&a.out, "jsonl") {
        write_frames_jsonl(&stream)
    } else if has_ext(&a.out, "csv") {
        write_mocap_csv(
            stream
                .as_markers()
                .expect("synthetic gestures are marker streams"),
        )
    } else {
        return Err(UsageError(format!(
            "{}: output must end in .csv or .jsonl",
            a.out.display()
        ))
        .into());
    };
    write_file(&a.out, text.as_bytes())
}
