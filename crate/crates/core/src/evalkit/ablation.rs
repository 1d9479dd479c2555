//! Prompt-type × granularity × shot-count grids.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{pct, EvalReport, Subset};
use super::{run_eval, write_report, EvalInputs, RunSpec};
use crate::backends::Backend;
use crate::promptkit::{Granularity, PromptConfig, PromptFormat};

pub const FEW_SHOT_K: usize = 5;

/// {simple, direct_qa} × four granularities × {0, k} shots: 16 cells.
pub fn default_grid(k: usize) -> Vec<PromptConfig> {
    let mut grid = Vec::with_capacity(16);
    for format in [PromptFormat::Simple, PromptFormat::DirectQa] {
        for granularity in Granularity::ALL {
            for shots in [0, k] {
                grid.push(PromptConfig::new(format, granularity, shots));
            }
        }
    }
    grid
}

/// Direct-QA only: four granularities × {0, k} shots. Meant to be run with
/// the ambiguous subset.
pub fn ambiguous_grid(k: usize) -> Vec<PromptConfig> {
    default_grid(k).into_iter().filter(|c| c.format == PromptFormat::DirectQa).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub config: PromptConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AblationCell {
    pub fn accuracy(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.mean_accuracy)
    }

    fn dir_name(&self) -> String {
        format!("{}-{}-{}shot", self.config.format, self.config.granularity, self.config.shots)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub subset: Subset,
    pub cells: Vec<AblationCell>,
}

/// Runs each grid cell with the base spec's data, backend and seeds. A cell
/// that fails is recorded and the rest still run.
pub fn run_ablation(
    grid: &[PromptConfig],
    base: &RunSpec,
    inputs: &EvalInputs<'_>,
    backend: &dyn Backend,
    out_dir: Option<&Path>,
) -> AblationTable {
    let mut cells = Vec::with_capacity(grid.len());
    for config in grid {
        let spec = RunSpec {
            prompt: PromptConfig {
                definition_char_budget: base.prompt.definition_char_budget,
                exemplar_strategy: base.prompt.exemplar_strategy,
                ..config.clone()
            },
            ..base.clone()
        };
        let mut cell = AblationCell { config: spec.prompt.clone(), report: None, error: None };
        let dir = out_dir.map(|d| d.join(cell.dir_name()));
        let result = run_eval(&spec, inputs, backend, dir.as_deref()).and_then(|r| {
            if let Some(d) = &dir {
                write_report(&r, d)?;
            }
            Ok(r)
        });
        match result {
            Ok(r) => cell.report = Some(r),
            Err(e) => {
                log::error!("ablation cell {} failed: {e}", cell.dir_name());
                cell.error = Some(e.to_string());
            }
        }
        cells.push(cell);
    }
    AblationTable { subset: base.subset, cells }
}

impl AblationTable {
    fn find(&self, format: PromptFormat, granularity: Granularity, few: bool) -> Option<&AblationCell> {
        self.cells
            .iter()
            .find(|c| c.config.format == format && c.config.granularity == granularity && (c.config.shots > 0) == few)
    }

    fn cell_text(cell: Option<&AblationCell>) -> String {
        match cell {
            None => "-".into(),
            Some(c) if c.error.is_some() => "FAILED".into(),
            Some(c) => pct(c.accuracy()),
        }
    }

    /// One row per cell: format, granularity, shots, accuracy, parse failure
    /// rate, status.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("format,granularity,shots,subset,mean_accuracy,parse_failure_rate,status\n");
        for c in &self.cells {
            let (acc, pfr) = match &c.report {
                Some(r) => (format!("{:.4}", r.mean_accuracy), format!("{:.4}", r.parse_failure_rate)),
                None => (String::new(), String::new()),
            };
            let status = if c.error.is_some() { "failed" } else { "ok" };
            let _ = writeln!(
                out,
                "{},{},{},{},{acc},{pfr},{status}",
                c.config.format, c.config.granularity, c.config.shots, self.subset
            );
        }
        out
    }

    /// Aligned text: prompt type blocks, one row per granularity, zero- and
    /// few-shot columns.
    pub fn to_text(&self) -> String {
        let formats: Vec<PromptFormat> = [PromptFormat::Simple, PromptFormat::DirectQa]
            .into_iter()
            .filter(|f| self.cells.iter().any(|c| c.config.format == *f))
            .collect();
        let label_width = Granularity::ALL.iter().map(|g| g.display_name().len()).max().unwrap_or(0) + 2;
        let header = "Prompt Type (Granularity)";
        let width = label_width.max(header.len());
        let mut out = String::new();
        let _ = writeln!(out, "{header:<width$}  {:>9}  {:>8}", "Zero-Shot", "Few-Shot");
        let _ = writeln!(out, "{}", "-".repeat(width + 21));
        for format in formats {
            let _ = writeln!(out, "{}", format.display_name());
            for g in Granularity::ALL {
                let zero = Self::cell_text(self.find(format, g, false));
                let few = Self::cell_text(self.find(format, g, true));
                let label = format!("  {}", g.display_name());
                let _ = writeln!(out, "{label:<width$}  {zero:>9}  {few:>8}");
            }
        }
        if self.subset != Subset::All {
            let _ = writeln!(out, "(subset: {})", self.subset);
        }
        out
    }
}
