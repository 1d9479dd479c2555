use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::predictions::PredictionRow;
use super::RunSpec;
use crate::corpus::InstanceFlag;
use crate::lexicon::CandidateMode;
use crate::parse::DecodePath;

/// Instance subsets reported alongside overall accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    #[default]
    All,
    Ambiguous,
    UnknownTarget,
    UnlinkedTarget,
}

impl Subset {
    pub const ALL: [Subset; 4] = [Subset::All, Subset::Ambiguous, Subset::UnknownTarget, Subset::UnlinkedTarget];

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::Ambiguous => "ambiguous",
            Subset::UnknownTarget => "unknown_target",
            Subset::UnlinkedTarget => "unlinked_target",
        }
    }

    pub fn contains(self, row: &PredictionRow) -> bool {
        match self {
            Subset::All => true,
            Subset::Ambiguous => row.is_ambiguous(),
            Subset::UnknownTarget => row.flags.contains(&InstanceFlag::UnknownTarget),
            Subset::UnlinkedTarget => row.flags.contains(&InstanceFlag::UnlinkedTarget),
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subset::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown subset `{s}` (expected all, ambiguous, unknown_target or unlinked_target)"))
    }
}

/// Accuracy over a stated denominator. `accuracy` is `None` for an empty
/// subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub correct: usize,
    pub denominator: usize,
    pub accuracy: Option<f64>,
}

impl SubsetScore {
    pub fn new(correct: usize, denominator: usize) -> Self {
        SubsetScore { correct, denominator, accuracy: (denominator > 0).then(|| correct as f64 / denominator as f64) }
    }
}

/// Accuracy over the rows in `subset`. In strict mode failed decodes count
/// as wrong; otherwise they leave the denominator.
pub fn subset_accuracy(rows: &[PredictionRow], subset: Subset, strict: bool) -> SubsetScore {
    let mut correct = 0;
    let mut denominator = 0;
    for row in rows.iter().filter(|r| subset.contains(r)) {
        if !strict && row.is_failed() {
            continue;
        }
        denominator += 1;
        correct += usize::from(row.is_correct());
    }
    SubsetScore::new(correct, denominator)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub run_id: String,
    pub accuracy: f64,
    pub correct: usize,
    /// Denominator of `accuracy`.
    pub scored: usize,
    pub total: usize,
    pub parse_failures: usize,
    pub backend_failures: usize,
    /// Instances with an empty candidate set; never sent to the backend.
    pub no_candidates: usize,
    pub decode_paths: BTreeMap<DecodePath, usize>,
    pub breakdowns: BTreeMap<Subset, SubsetScore>,
    pub exemplar_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions_file: Option<String>,
}

impl SeedResult {
    pub fn from_rows(
        seed: u64,
        run_id: String,
        rows: &[PredictionRow],
        strict: bool,
        backend_failures: usize,
        no_candidates: usize,
    ) -> Self {
        let overall = subset_accuracy(rows, Subset::All, strict);
        let mut decode_paths = BTreeMap::new();
        for row in rows {
            *decode_paths.entry(row.decode_path).or_insert(0) += 1;
        }
        let parse_failures = rows.iter().filter(|r| r.is_failed()).count() - backend_failures - no_candidates;
        SeedResult {
            seed,
            run_id,
            accuracy: overall.accuracy.unwrap_or(0.0),
            correct: overall.correct,
            scored: overall.denominator,
            total: rows.len(),
            parse_failures,
            backend_failures,
            no_candidates,
            decode_paths,
            breakdowns: Subset::ALL.into_iter().map(|s| (s, subset_accuracy(rows, s, strict))).collect(),
            exemplar_ids: Vec::new(),
            predictions_file: None,
        }
    }
}

/// Aggregate result of one [`RunSpec`]. Contains no timestamps or
/// latencies, so equal inputs give byte-equal JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub spec: RunSpec,
    pub spec_fingerprint: String,
    pub candidate_mode: CandidateMode,
    pub strict_scoring: bool,
    pub instance_count: usize,
    pub per_run: Vec<SeedResult>,
    pub per_run_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Share of instances whose answer could not be decoded, over all seeds.
    pub parse_failure_rate: f64,
    pub backend_failure_rate: f64,
    /// Pooled over seeds.
    pub breakdowns: BTreeMap<Subset, SubsetScore>,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    // Sorting first makes the sum independent of seed order.
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

impl EvalReport {
    pub fn assemble(spec: RunSpec, spec_fingerprint: String, instance_count: usize, per_run: Vec<SeedResult>) -> Self {
        let per_run_accuracy: Vec<f64> = per_run.iter().map(|r| r.accuracy).collect();
        let attempts: usize = per_run.iter().map(|r| r.total).sum();
        let rate = |n: usize| if attempts == 0 { 0.0 } else { n as f64 / attempts as f64 };
        let parse_failures = per_run.iter().map(|r| r.parse_failures).sum();
        let backend_failures = per_run.iter().map(|r| r.backend_failures).sum();
        let mut breakdowns = BTreeMap::new();
        for subset in Subset::ALL {
            let (c, d) = per_run
                .iter()
                .filter_map(|r| r.breakdowns.get(&subset))
                .fold((0, 0), |(c, d), s| (c + s.correct, d + s.denominator));
            breakdowns.insert(subset, SubsetScore::new(c, d));
        }
        EvalReport {
            candidate_mode: spec.candidate_mode,
            strict_scoring: spec.strict_scoring,
            mean_accuracy: mean(&per_run_accuracy),
            spec,
            spec_fingerprint,
            instance_count,
            per_run,
            per_run_accuracy,
            parse_failure_rate: rate(parse_failures),
            backend_failure_rate: rate(backend_failures),
            breakdowns,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let spec = &self.spec;
        let _ = writeln!(out, "run           {}", self.spec_fingerprint.get(..8).unwrap_or(&self.spec_fingerprint));
        let _ = writeln!(out, "data          {} {} ({} instances)", spec.dataset, spec.split, self.instance_count);
        let _ = writeln!(
            out,
            "prompt        {} / {} / {}-shot",
            spec.prompt.format, spec.prompt.granularity, spec.prompt.shots
        );
        let _ = writeln!(out, "backend       {} {}", spec.backend.kind, spec.backend.model_name);
        let _ = writeln!(out, "candidates    {}", self.candidate_mode);
        let _ = writeln!(out, "scoring       {}", if self.strict_scoring { "strict" } else { "lenient" });
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<8} {:>9} {:>8} {:>8} {:>8}", "seed", "accuracy", "correct", "scored", "failed");
        for r in &self.per_run {
            let _ = writeln!(
                out,
                "{:<8} {:>9} {:>8} {:>8} {:>8}",
                r.seed,
                pct(Some(r.accuracy)),
                r.correct,
                r.scored,
                r.parse_failures + r.backend_failures
            );
        }
        let _ = writeln!(out, "{:<8} {:>9}", "mean", pct(Some(self.mean_accuracy)));
        let _ = writeln!(out);
        let _ = writeln!(out, "parse failure rate    {}", pct(Some(self.parse_failure_rate)));
        let _ = writeln!(out, "backend failure rate  {}", pct(Some(self.backend_failure_rate)));
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<16} {:>9} {:>8} {:>8}", "subset", "accuracy", "correct", "of");
        for (subset, score) in &self.breakdowns {
            let _ = writeln!(
                out,
                "{:<16} {:>9} {:>8} {:>8}",
                subset.as_str(),
                pct(score.accuracy),
                score.correct,
                score.denominator
            );
        }
        out
    }
}

/// Percentage with one decimal, `n/a` when undefined.
pub fn pct(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.1}", v * 100.0),
        None => "n/a".to_string(),
    }
}
