//! LPIPS score files produced by an external deep-feature scorer.
//!
//! Per-frame files have header `frame,metric,score` with frames `0..N-1`.
//! Consecutive-pair files have header `frame_pair,metric,score`, where
//! `frame_pair` is the later frame of the pair (`1..N-1`).

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spatial::{SpatialMetric, SpatialScoreSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreFileKind {
    PerFrame,
    ConsecutivePairs,
}

impl ScoreFileKind {
    fn index_column(self) -> &'static str {
        match self {
            ScoreFileKind::PerFrame => "frame",
            ScoreFileKind::ConsecutivePairs => "frame_pair",
        }
    }

    fn first_index(self) -> usize {
        match self {
            ScoreFileKind::PerFrame => 0,
            ScoreFileKind::ConsecutivePairs => 1,
        }
    }
}

fn parse_metric(tag: &str, path: &Path) -> Result<SpatialMetric> {
    match tag {
        "lpips_alex" => Ok(SpatialMetric::LpipsAlex),
        "lpips_vgg" => Ok(SpatialMetric::LpipsVgg),
        other => Err(Error::UnknownMetricTag {
            path: path.to_path_buf(),
            tag: other.to_string(),
        }),
    }
}

/// Parse a score file into one gap-free score list per metric, ordered by
/// metric then index.
pub fn read_scores(path: &Path, kind: ScoreFileKind) -> Result<BTreeMap<SpatialMetric, Vec<f64>>> {
    let malformed = |reason: String| Error::MalformedScores {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => malformed(format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .clone();
    let expected = [kind.index_column(), "metric", "score"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(malformed(format!(
            "header {:?}, expected {}",
            headers.iter().collect::<Vec<_>>(),
            expected.join(",")
        )));
    }

    let mut by_metric: BTreeMap<SpatialMetric, BTreeMap<usize, f64>> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let row = line + 2;
        let index: usize = record[0]
            .parse()
            .map_err(|_| malformed(format!("row {row}: bad index {:?}", &record[0])))?;
        let metric = parse_metric(&record[1], path)?;
        let score: f64 = record[2]
            .parse()
            .map_err(|_| malformed(format!("row {row}: bad score {:?}", &record[2])))?;
        if !score.is_finite() || score < 0.0 {
            return Err(malformed(format!("row {row}: score {score} not a finite non-negative value")));
        }
        if index < kind.first_index() {
            return Err(malformed(format!("row {row}: pair index 0 has no earlier frame")));
        }
        if by_metric.entry(metric).or_default().insert(index, score).is_some() {
            return Err(malformed(format!("row {row}: duplicate {metric} score for {index}")));
        }
    }
    if by_metric.is_empty() {
        return Err(malformed("no scores".into()));
    }

    let mut out = BTreeMap::new();
    for (metric, scores) in by_metric {
        let mut list = Vec::with_capacity(scores.len());
        for (expected, (&index, &score)) in (kind.first_index()..).zip(&scores) {
            if index != expected {
                return Err(Error::MissingFrame {
                    path: path.to_path_buf(),
                    frame: expected,
                });
            }
            list.push(score);
        }
        out.insert(metric, list);
    }
    Ok(out)
}

/// Per-frame LPIPS series of a single-metric file.
pub fn ingest_lpips(path: &Path) -> Result<SpatialScoreSeries> {
    let mut all = read_lpips(path)?;
    if all.len() != 1 {
        return Err(Error::MalformedScores {
            path: path.to_path_buf(),
            reason: "file mixes several metrics; use read_lpips".into(),
        });
    }
    Ok(all.pop().unwrap())
}

/// Every per-frame series in a score file.
pub fn read_lpips(path: &Path) -> Result<Vec<SpatialScoreSeries>> {
    read_scores(path, ScoreFileKind::PerFrame)?
        .into_iter()
        .map(|(metric, scores)| SpatialScoreSeries::new(scores, metric))
        .collect()
}

/// Consecutive-pair scores for one metric; element `k` is the pair ending at
/// frame `k + 1`.
pub fn read_pair_lpips(path: &Path, metric: SpatialMetric) -> Result<Vec<f64>> {
    read_scores(path, ScoreFileKind::ConsecutivePairs)?
        .remove(&metric)
        .ok_or_else(|| Error::MissingExternalScores(format!("{}: no {metric} pair scores", path.display())))
}

/// Check that a score list covers exactly `expected` entries.
pub fn check_count(path: &Path, scores: usize, expected: usize, first_index: usize) -> Result<()> {
    if scores < expected {
        return Err(Error::MissingFrame {
            path: path.to_path_buf(),
            frame: first_index + scores,
        });
    }
    if scores > expected {
        return Err(Error::MalformedScores {
            path: path.to_path_buf(),
            reason: format!("{scores} scores for {expected} entries"),
        });
    }
    Ok(())
}

/// Write a per-frame score file.
pub fn write_lpips(path: &Path, series: &[&SpatialScoreSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::MalformedScores {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let io = |e: csv::Error| Error::MalformedScores {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    w.write_record(["frame", "metric", "score"]).map_err(io)?;
    for s in series {
        for (i, v) in s.per_frame().iter().enumerate() {
            w.write_record([i.to_string(), s.metric().tag().to_string(), v.to_string()])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
