//! Head training, offline scoring and live monitoring.

use std::io::{BufRead, BufReader, Read};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};
use spectral_core::container::FrameReader;
use spectral_core::dataset::labeled_series;
use spectral_core::features::FEATURE_COUNT;
use spectral_core::head::{
    auroc, checkpoint, gate, train, GateDecision, HeadStream, LabeledSeries, TrainedHead,
};
use spectral_core::rmt::TwTable;
use spectral_core::stream::{descriptor_series, StreamingDescriptor};

use crate::args::{MonitorArgs, ScoreArgs, TrainHeadArgs};
use crate::error::{CliError, CliResult};
use crate::io::{container_paths, emit, finish, open_in, open_out, read_container, write_bytes};

#[derive(Deserialize)]
struct SeriesLine {
    label: bool,
    steps: Vec<Vec<f64>>,
}

fn read_series_file(path: &Path) -> CliResult<Vec<LabeledSeries>> {
    let reader = BufReader::new(open_in(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| CliError::Data(format!("{}:{}: {m}", path.display(), i + 1));
        let rec: SeriesLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if rec.steps.is_empty() {
            return Err(bad("empty series".into()));
        }
        let mut steps = Vec::with_capacity(rec.steps.len());
        for s in rec.steps {
            let arr: [f64; FEATURE_COUNT] = s.try_into().map_err(|v: Vec<f64>| {
                bad(format!(
                    "step has {} values, expected {FEATURE_COUNT}",
                    v.len()
                ))
            })?;
            steps.push(arr);
        }
        out.push(LabeledSeries {
            steps,
            label: rec.label,
        });
    }
    Ok(out)
}

fn read_dataset(
    dir: &Path,
    a: &crate::args::WindowArgs,
    positive: crate::args::PositiveArg,
) -> CliResult<Vec<(PathBuf, LabeledSeries)>> {
    let window = a.config();
    window.validate()?;
    container_paths(dir)?
        .into_iter()
        .map(|p| {
            let c = read_container(&p)?;
            let s =
                labeled_series(&c, &window, positive.into()).map_err(|e| CliError::at(&p, e))?;
            if s.steps.is_empty() {
                return Err(CliError::Data(format!(
                    "{}: {} steps is shorter than the window",
                    p.display(),
                    c.steps()
                )));
            }
            Ok((p, s))
        })
        .collect()
}

pub fn train_head(a: &TrainHeadArgs) -> CliResult<()> {
    let config = a.head.config();
    config.validate()?;
    let data = match (&a.data, &a.series) {
        (Some(dir), _) => read_dataset(dir, &a.window, a.positive)?
            .into_iter()
            .map(|(_, s)| s)
            .collect(),
        (None, Some(path)) => read_series_file(path)?,
        (None, None) => return Err(CliError::config("need --data or --series")),
    };
    let outcome = train(&data, &config)?;
    if let Some(path) = &a.metrics {
        let mut w = open_out(path)?;
        for m in &outcome.history {
            emit(&mut *w, path, m)?;
        }
        finish(&mut *w, path)?;
    }
    if let Some(path) = &a.out {
        write_bytes(path, &checkpoint::encode(&outcome.head))?;
    }
    println!(
        "sequences: {} (train {}, validation {})",
        data.len(),
        outcome.train_indices.len(),
        outcome.validation_indices.len()
    );
    println!("final validation AUROC: {:.4}", outcome.final_auroc());
    Ok(())
}

fn load_head(path: &Path) -> CliResult<TrainedHead> {
    checkpoint::read(open_in(path)?).map_err(|e| CliError::at(path, e))
}

#[derive(Serialize)]
struct WindowScore {
    window_index: u64,
    probability: f64,
    alarm: bool,
}

#[derive(Serialize)]
struct FileScore {
    file: String,
    label: bool,
    score: f64,
}

#[derive(Serialize)]
struct ScoreSummary {
    sequences: usize,
    auroc: Option<f64>,
}

pub fn score(a: &ScoreArgs) -> CliResult<()> {
    if !(a.tau > 0.0 && a.tau < 1.0) {
        return Err(CliError::config("tau: must lie in (0, 1)"));
    }
    let head = load_head(&a.head)?;
    let mut out = open_out(&a.out)?;
    if let Some(input) = &a.input {
        let window = a.window.config();
        window.validate()?;
        let c = read_container(input)?;
        let series =
            descriptor_series(c.rows_f64(), &window).map_err(|e| CliError::at(input, e))?;
        let probs = head.probabilities(&series.matrix())?;
        for (v, p) in series.vectors.iter().zip(probs) {
            emit(
                &mut *out,
                &a.out,
                &WindowScore {
                    window_index: v.window_index,
                    probability: p,
                    alarm: gate(p, a.tau)? == GateDecision::Alarm,
                },
            )?;
        }
    } else if let Some(dir) = &a.data {
        let data = read_dataset(dir, &a.window, a.positive)?;
        let mut scores = Vec::with_capacity(data.len());
        let mut labels = Vec::with_capacity(data.len());
        for (p, s) in &data {
            let score = head.score(&s.steps)?;
            let file = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            emit(
                &mut *out,
                &a.out,
                &FileScore {
                    file,
                    label: s.label,
                    score,
                },
            )?;
            scores.push(score);
            labels.push(s.label);
        }
        emit(
            &mut *out,
            &a.out,
            &ScoreSummary {
                sequences: data.len(),
                auroc: auroc(&scores, &labels).ok(),
            },
        )?;
    }
    finish(&mut *out, &a.out)
}

#[derive(Serialize)]
struct Alarm {
    window_index: u64,
    probability: f64,
    tau: f64,
}

fn open_source(a: &MonitorArgs) -> CliResult<(Box<dyn Read + Send>, PathBuf)> {
    if let Some(addr) = &a.listen {
        let listener =
            TcpListener::bind(addr).map_err(|e| CliError::config(format!("listen {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| CliError::Data(format!("listen {addr}: {e}")))?;
        eprintln!("listening on {local}");
        let (stream, _) = listener
            .accept()
            .map_err(|e| CliError::Data(format!("accept on {local}: {e}")))?;
        Ok((Box::new(stream), PathBuf::from(local.to_string())))
    } else {
        let path = a.input.clone().unwrap_or_else(|| PathBuf::from("-"));
        Ok((open_in(&path)?, path))
    }
}

/// Ingestion thread parses frames; this thread extracts descriptors, runs
/// the head and writes alarms. The channel keeps frames in arrival order.
pub fn monitor(a: &MonitorArgs) -> CliResult<()> {
    if !(a.tau > 0.0 && a.tau < 1.0) {
        return Err(CliError::config("tau: must lie in (0, 1)"));
    }
    let window = a.window.config();
    window.validate()?;
    let head = load_head(&a.head)?;
    let (source, source_name) = open_source(a)?;
    let (tx, rx) = mpsc::sync_channel::<spectral_core::Result<Vec<f32>>>(256);
    let reader = thread::spawn(move || {
        for frame in FrameReader::new(source) {
            let stop = frame.is_err();
            if tx.send(frame).is_err() || stop {
                break;
            }
        }
    });

    let table = TwTable::embedded();
    let mut descriptors = StreamingDescriptor::new(window, table)?;
    let mut scorer = HeadStream::new(&head);
    let mut out = open_out(&a.out)?;
    let mut result = Ok(());
    for frame in rx {
        let step = frame
            .map_err(|e| CliError::at(&source_name, e))
            .and_then(|row| {
                let row: Vec<f64> = row.iter().map(|&v| v as f64).collect();
                descriptors
                    .push(&row)
                    .map_err(|e| CliError::at(&source_name, e))
            })
            .and_then(|fv| {
                let Some(fv) = fv else { return Ok(()) };
                let p = scorer.push(&fv.values)?;
                if gate(p, a.tau)? == GateDecision::Alarm {
                    emit(
                        &mut *out,
                        &a.out,
                        &Alarm {
                            window_index: fv.window_index,
                            probability: p,
                            tau: a.tau,
                        },
                    )?;
                    finish(&mut *out, &a.out)?;
                }
                Ok(())
            });
        if step.is_err() {
            result = step;
            break;
        }
    }
    // dropping the receiver unblocks the reader if we stopped early
    reader
        .join()
        .map_err(|_| CliError::Data("frame reader panicked".into()))?;
    result?;
    finish(&mut *out, &a.out)
}
