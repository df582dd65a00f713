//! Result artifacts shared by the CLI and the HTTP service, so both paths
//! produce byte-identical files from the same document.

use serde::{Deserialize, Serialize};
use stacksim::design::Design;
use stacksim::dse::{ComparisonReport, DseError, SweepConfig, SweepResult};
use stacksim::pipeline::{Artifact, PipelineError, SimulationResult};
use stacksim::thermal::{Heatmap, Summary};

pub const SUMMARY_FILE: &str = "summary.tsv";
pub const COMPARISON_FILE: &str = "comparison.tsv";
pub const REPORT_FILE: &str = "report.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RunOutput {
    Simulate {
        summary: Summary,
        /// Every layer, bottom-up.
        heatmaps: Vec<Heatmap>,
        energy_relative_error: f64,
        artifacts: Vec<Artifact>,
    },
    Sweep {
        result: SweepResult,
        report: ComparisonReport,
        artifacts: Vec<Artifact>,
    },
}

impl RunOutput {
    pub fn artifacts(&self) -> &[Artifact] {
        match self {
            RunOutput::Simulate { artifacts, .. } | RunOutput::Sweep { artifacts, .. } => artifacts,
        }
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts().iter().find(|a| a.file_name == name)
    }

    pub fn heatmap(&self, layer: usize) -> Option<&Heatmap> {
        match self {
            RunOutput::Simulate { heatmaps, .. } => heatmaps.get(layer),
            RunOutput::Sweep { .. } => None,
        }
    }
}

pub fn simulate(design: &Design, config: &SweepConfig) -> Result<(RunOutput, SimulationResult), PipelineError> {
    let r = design.simulate(&config.solver)?;
    let heatmaps = (0..r.field.layers).map(|l| Heatmap::from_field(&r.field, l)).collect();
    let out = RunOutput::Simulate {
        summary: r.summary.clone(),
        heatmaps,
        energy_relative_error: r.energy.relative_error(),
        artifacts: r.artifacts(),
    };
    Ok((out, r))
}

pub fn sweep(
    design: &Design,
    config: &SweepConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<RunOutput, DseError> {
    let outcome = design.run_sweep(config, progress)?;
    let artifacts = vec![
        Artifact { file_name: COMPARISON_FILE.into(), contents: outcome.report.to_tsv() },
        Artifact { file_name: REPORT_FILE.into(), contents: outcome.report.to_text() },
    ];
    Ok(RunOutput::Sweep { result: outcome.result, report: outcome.report, artifacts })
}
