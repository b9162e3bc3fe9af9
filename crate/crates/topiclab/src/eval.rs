//! Accuracy against hand-labeled documents, the random guessing
//! baseline, and dominant-topic histograms.

use crate::lda::TopicAssignment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

/// One manually labeled document; labels are 1-indexed to match the
/// topic numbering used everywhere in display output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub doc_id: String,
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub n: usize,
    pub k: usize,
    pub top1_accuracy: f64,
    pub top2_accuracy: f64,
    /// confusion[gold][dominant], both 0-indexed.
    pub per_topic_confusion: Vec<Vec<u64>>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold set is empty; accuracy is undefined")]
    EmptyGold,
    #[error("gold documents missing from predictions: {}", .0.join(", "))]
    MissingPrediction(Vec<String>),
}

/// Top-1 counts a hit when the dominant topic matches the gold label,
/// top-2 also accepts the runner-up. The confusion matrix pairs gold
/// labels (rows) with dominant predictions (columns).
pub fn accuracy(
    assignments: &[TopicAssignment],
    gold: &[Annotation],
) -> Result<EvalReport, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let by_id: HashMap<&str, &TopicAssignment> = assignments
        .iter()
        .map(|a| (a.doc_id.as_str(), a))
        .collect();
    let missing: Vec<String> = gold
        .iter()
        .filter(|g| !by_id.contains_key(g.doc_id.as_str()))
        .map(|g| g.doc_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingPrediction(missing));
    }
    let mut k = 0;
    for g in gold {
        assert!(g.label >= 1, "labels are 1-indexed");
        let a = by_id[g.doc_id.as_str()];
        k = k.max(g.label).max(a.dominant_topic + 1);
        if let Some(s) = a.second_topic {
            k = k.max(s + 1);
        }
    }
    let mut confusion = vec![vec![0u64; k]; k];
    let mut top1_hits = 0usize;
    let mut top2_hits = 0usize;
    for g in gold {
        let a = by_id[g.doc_id.as_str()];
        let label = g.label - 1;
        confusion[label][a.dominant_topic] += 1;
        if a.dominant_topic == label {
            top1_hits += 1;
            top2_hits += 1;
        } else if a.second_topic == Some(label) {
            top2_hits += 1;
        }
    }
    let n = gold.len();
    Ok(EvalReport {
        n,
        k,
        top1_accuracy: top1_hits as f64 / n as f64,
        top2_accuracy: top2_hits as f64 / n as f64,
        per_topic_confusion: confusion,
    })
}

/// Accuracy of uniform random predictions against uniform random gold
/// labels, averaged over trials; converges to 1/k.
pub fn random_baseline(k: usize, n: usize, trials: usize, seed: u64) -> f64 {
    assert!(k >= 1 && n >= 1 && trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..trials {
        let gold: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let hits = gold
            .iter()
            .filter(|&&label| rng.gen_range(0..k) == label)
            .count();
        total += hits as f64 / n as f64;
    }
    total / trials as f64
}

/// Dominant and second-topic frequency counts keyed by 1-indexed topic,
/// zero-filled over 1..=k.
pub fn topic_histogram(
    assignments: &[TopicAssignment],
    k: usize,
) -> (BTreeMap<usize, u64>, BTreeMap<usize, u64>) {
    let mut dominant: BTreeMap<usize, u64> = (1..=k).map(|t| (t, 0)).collect();
    let mut second: BTreeMap<usize, u64> = (1..=k).map(|t| (t, 0)).collect();
    for a in assignments {
        *dominant.get_mut(&(a.dominant_topic + 1)).expect("topic within k") += 1;
        if let Some(s) = a.second_topic {
            *second.get_mut(&(s + 1)).expect("topic within k") += 1;
        }
    }
    (dominant, second)
}

/// Reports for nested prefixes of the gold list in its given order:
/// step, 2*step, ... and finally the full list.
pub fn prefix_accuracies(
    assignments: &[TopicAssignment],
    gold: &[Annotation],
    step: usize,
) -> Result<Vec<(usize, EvalReport)>, EvalError> {
    assert!(step >= 1, "step must be at least 1");
    let mut out = Vec::new();
    let mut len = step.min(gold.len());
    loop {
        out.push((len, accuracy(assignments, &gold[..len])?));
        if len == gold.len() {
            break;
        }
        len = (len + step).min(gold.len());
    }
    Ok(out)
}

/// Annotation file: optional `# model=<hash>` comment, then a
/// `doc_id,label` header and one row per document.
pub fn write_annotations(
    path: &Path,
    model_hash: Option<&str>,
    annotations: &[Annotation],
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    if let Some(hash) = model_hash {
        writeln!(out, "# model={hash}")?;
    }
    writeln!(out, "doc_id,label")?;
    for a in annotations {
        writeln!(out, "{},{}", a.doc_id, a.label)?;
    }
    out.flush()
}

pub fn read_annotations(path: &Path) -> io::Result<(Option<String>, Vec<Annotation>)> {
    let bad = |line: usize, what: &str| {
        io::Error::new(
            io::ErrorKind::InvalidData,
            format!("annotations line {line}: {what}"),
        )
    };
    let reader = BufReader::new(File::open(path)?);
    let mut model_hash = None;
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(hash) = rest.trim().strip_prefix("model=") {
                model_hash = Some(hash.trim().to_string());
            }
            continue;
        }
        if !seen_header {
            if trimmed != "doc_id,label" {
                return Err(bad(line_no, "expected header doc_id,label"));
            }
            seen_header = true;
            continue;
        }
        let Some((doc_id, label)) = trimmed.split_once(',') else {
            return Err(bad(line_no, "expected doc_id,label"));
        };
        let label: usize = label
            .trim()
            .parse()
            .map_err(|_| bad(line_no, "label must be a positive integer"))?;
        if label == 0 {
            return Err(bad(line_no, "labels are 1-indexed"));
        }
        rows.push(Annotation {
            doc_id: doc_id.to_string(),
            label,
        });
    }
    Ok((model_hash, rows))
}

/// Summary line plus a labeled confusion block, all CSV.
pub fn write_eval_report(path: &Path, report: &EvalReport) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "n,top1_accuracy,top2_accuracy")?;
    writeln!(
        out,
        "{},{},{}",
        report.n, report.top1_accuracy, report.top2_accuracy
    )?;
    let header: Vec<String> = (1..=report.k).map(|t| format!("predicted_{t}")).collect();
    writeln!(out, "confusion,{}", header.join(","))?;
    for (gold, row) in report.per_topic_confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(out, "gold_{},{}", gold + 1, cells.join(","))?;
    }
    out.flush()
}

/// Histogram file: `topic,dominant_count,second_count` rows, 1-indexed.
pub fn write_histogram_csv(
    path: &Path,
    dominant: &BTreeMap<usize, u64>,
    second: &BTreeMap<usize, u64>,
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "topic,dominant_count,second_count")?;
    for (&topic, &count) in dominant {
        writeln!(out, "{},{},{}", topic, count, second.get(&topic).copied().unwrap_or(0))?;
    }
    out.flush()
}
