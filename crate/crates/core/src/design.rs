//! Design documents: every text resource of a design bundled under the
//! references the stack and sweep files use, plus a directory manifest
//! format for loading one from disk.
//!
//! Manifest:
//!
//! ```text
//! stack <path>
//! power <path>
//! rules <path>            # optional; traces are then raw statistics
//! trace <path>            # repeatable
//! workload <trace path>   # trace used by single runs; default activity otherwise
//! sweep <path>            # optional
//! grid <rows> <cols>      # default 64 64
//! ```
//!
//! Floorplans and patterns are loaded from the references in the stack
//! file, sweep traces from the sweep's `workload` lines. Paths are relative
//! to the manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cooling::{parse_pattern, validate_pattern, CoolingError, CoolingPattern};
use crate::dse::{
    compare_report, run_sweep_with_progress, ComparisonReport, DesignPoint, DseError, SweepConfig, SweepContext,
    SweepDefinition, SweepResult,
};
use crate::error::{content_lines, fields, parse_usize, ParseError};
use crate::floorplan::{parse_floorplan_in, Floorplan, FloorplanError};
use crate::pipeline::{default_activity, simulate, PipelineError, SimulationResult};
use crate::power::{apply_mapping, ActivityTrace, MappingRules, PowerError, PowerModelSet, TraceTable};
use crate::stack::{grid_for, validate_stack, Grid, LayerKind, Resource, Stack, StackFile, StackFileError};
use crate::thermal::SolverConfig;

pub const DEFAULT_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { rows: DEFAULT_GRID, cols: DEFAULT_GRID }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DesignDocument {
    pub stack: String,
    #[serde(default)]
    pub floorplans: BTreeMap<String, String>,
    #[serde(default)]
    pub patterns: BTreeMap<String, String>,
    pub power_models: String,
    #[serde(default)]
    pub mapping_rules: Option<String>,
    #[serde(default)]
    pub traces: BTreeMap<String, String>,
    #[serde(default)]
    pub workload: Option<String>,
    #[serde(default)]
    pub sweep: Option<String>,
    #[serde(default)]
    pub grid: GridSpec,
}

/// A validation finding anchored to a resource and, when known, a line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub resource: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{l}: {}", self.resource, self.message),
            None => write!(f, "{}: {}", self.resource, self.message),
        }
    }
}

impl Violation {
    fn new(resource: &str, line: Option<usize>, message: impl Into<String>) -> Self {
        Violation { resource: resource.to_string(), line, message: message.into() }
    }

    fn parse(resource: &str, e: &ParseError) -> Self {
        Violation::new(resource, Some(e.line), e.message.clone())
    }

    fn floorplan(resource: &str, e: &FloorplanError) -> Self {
        let line = match e {
            FloorplanError::Parse(p) => return Violation::parse(resource, p),
            FloorplanError::DuplicateName { line, .. }
            | FloorplanError::InvalidBlock { line, .. }
            | FloorplanError::Overlap { line, .. }
            | FloorplanError::OutOfOutline { line, .. } => *line,
            _ => None,
        };
        let msg = e.to_string();
        let msg = match line {
            Some(l) => msg.trim_start_matches(&format!("line {l}: ")).to_string(),
            None => msg,
        };
        Violation::new(resource, line, msg)
    }

    fn power(resource: &str, e: &PowerError) -> Self {
        match e {
            PowerError::Parse(p) => Violation::parse(resource, p),
            other => Violation::new(resource, None, other.to_string()),
        }
    }

    fn dse(resource: &str, e: &DseError) -> Self {
        match e {
            DseError::Parse(p) => Violation::parse(resource, p),
            other => Violation::new(resource, None, other.to_string()),
        }
    }
}

#[derive(Debug)]
pub enum LoadError {
    Io { path: String, message: String },
    Manifest(ParseError),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io { path, message } => write!(f, "{path}: {message}"),
            LoadError::Manifest(e) => write!(f, "manifest: {e}"),
        }
    }
}

impl std::error::Error for LoadError {}

fn read(dir: &Path, reference: &str) -> Result<String, LoadError> {
    let path = dir.join(reference);
    std::fs::read_to_string(&path)
        .map_err(|e| LoadError::Io { path: path.display().to_string(), message: e.to_string() })
}

impl DesignDocument {
    /// Reads a manifest and every file it reaches.
    pub fn load(manifest: &Path) -> Result<DesignDocument, LoadError> {
        let dir = manifest.parent().unwrap_or(Path::new("."));
        let text = std::fs::read_to_string(manifest)
            .map_err(|e| LoadError::Io { path: manifest.display().to_string(), message: e.to_string() })?;
        let mut doc = DesignDocument::default();
        let mut stack_ref = None;
        let mut power_ref = None;
        for (line, content) in content_lines(&text) {
            let f = fields(content);
            let one = |what: &str| {
                if f.len() == 2 {
                    Ok(f[1].to_string())
                } else {
                    Err(LoadError::Manifest(ParseError::new(line, format!("expected '{what} <path>'"))))
                }
            };
            match f[0] {
                "stack" => stack_ref = Some(one("stack")?),
                "power" => power_ref = Some(one("power")?),
                "rules" => doc.mapping_rules = Some(read(dir, &one("rules")?)?),
                "trace" => {
                    let r = one("trace")?;
                    doc.traces.insert(r.clone(), read(dir, &r)?);
                }
                "workload" => doc.workload = Some(one("workload")?),
                "sweep" => doc.sweep = Some(read(dir, &one("sweep")?)?),
                "grid" => {
                    if f.len() != 3 {
                        return Err(LoadError::Manifest(ParseError::new(line, "expected 'grid <rows> <cols>'")));
                    }
                    doc.grid = GridSpec {
                        rows: parse_usize(line, f[1], "rows").map_err(LoadError::Manifest)?,
                        cols: parse_usize(line, f[2], "cols").map_err(LoadError::Manifest)?,
                    };
                }
                other => {
                    return Err(LoadError::Manifest(ParseError::new(line, format!("unknown directive '{other}'"))))
                }
            }
        }
        let stack_ref = stack_ref.ok_or_else(|| LoadError::Manifest(ParseError::new(1, "missing 'stack' line")))?;
        let power_ref = power_ref.ok_or_else(|| LoadError::Manifest(ParseError::new(1, "missing 'power' line")))?;
        doc.stack = read(dir, &stack_ref)?;
        doc.power_models = read(dir, &power_ref)?;
        if let Ok(file) = StackFile::parse(&doc.stack) {
            for l in &file.layers {
                let Some(r) = &l.reference else { continue };
                let map = if l.kind == LayerKind::Microchannel { &mut doc.patterns } else { &mut doc.floorplans };
                if !map.contains_key(r) {
                    map.insert(r.clone(), read(dir, r)?);
                }
            }
        }
        let mut wanted: Vec<String> = doc.workload.iter().cloned().collect();
        if let Some(Ok(def)) = doc.sweep.as_deref().map(SweepDefinition::parse) {
            wanted.extend(def.workloads.into_iter().filter_map(|w| w.source));
        }
        for r in wanted {
            if !doc.traces.contains_key(&r) {
                let t = read(dir, &r)?;
                doc.traces.insert(r, t);
            }
        }
        Ok(doc)
    }
}

/// A validated, fully resolved design.
#[derive(Debug, Clone)]
pub struct Design {
    pub stack: Stack,
    pub models: PowerModelSet,
    pub grid: Grid,
    /// Activity per trace reference.
    pub traces: BTreeMap<String, ActivityTrace>,
    pub workload: Option<String>,
    pub sweep: Option<SweepDefinition>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub result: SweepResult,
    pub report: ComparisonReport,
}

impl Design {
    /// Resolves and validates every resource; all findings are returned at once.
    pub fn from_document(doc: &DesignDocument) -> Result<Design, Vec<Violation>> {
        let mut v = Vec::new();
        let stack_file = StackFile::parse(&doc.stack).map_err(|e| vec![Violation::parse("stack", &e)])?;
        let grid = match grid_for(stack_file.outline, doc.grid.rows, doc.grid.cols) {
            Ok(g) => Some(g),
            Err(e) => {
                v.push(Violation::new("grid", None, e.to_string()));
                None
            }
        };
        let mut resource_errors = Vec::new();
        let stack = stack_file.resolve(|kind, reference| {
            if kind == LayerKind::Microchannel {
                let Some(text) = doc.patterns.get(reference) else {
                    return Err(format!("pattern '{reference}' is not part of the design"));
                };
                match parse_pattern(text) {
                    Ok(p) => {
                        check_pattern(reference, &p, grid.as_ref(), &mut resource_errors);
                        Ok(Resource::Pattern(p))
                    }
                    Err(CoolingError::Parse(e)) => {
                        resource_errors.push(Violation::parse(reference, &e));
                        Err("unreadable pattern".into())
                    }
                    Err(e) => {
                        resource_errors.push(Violation::new(reference, None, e.to_string()));
                        Err("invalid pattern".into())
                    }
                }
            } else {
                let Some(text) = doc.floorplans.get(reference) else {
                    return Err(format!("floorplan '{reference}' is not part of the design"));
                };
                match parse_floorplan_in(text, stack_file.outline) {
                    Ok(fp) => Ok(Resource::Floorplan(fp)),
                    Err(e) => {
                        resource_errors.push(Violation::floorplan(reference, &e));
                        Err("invalid floorplan".into())
                    }
                }
            }
        });
        let stack = match stack {
            Ok(s) => {
                for sv in validate_stack(&s) {
                    let line = sv.layer().and_then(|l| stack_file.layers.get(l)).map(|l| l.line);
                    v.push(Violation::new("stack", line, sv.to_string()));
                }
                Some(s)
            }
            Err(StackFileError::Reference { line, reference, message }) => {
                if resource_errors.is_empty() {
                    v.push(Violation::new("stack", Some(line), format!("cannot load '{reference}': {message}")));
                }
                None
            }
            Err(StackFileError::Parse(e)) => {
                v.push(Violation::parse("stack", &e));
                None
            }
        };
        v.extend(resource_errors);

        let models = match PowerModelSet::parse(&doc.power_models) {
            Ok(m) => Some(m),
            Err(e) => {
                v.push(Violation::power("power_models", &e));
                None
            }
        };
        let rules = match doc.mapping_rules.as_deref().map(MappingRules::parse) {
            Some(Err(e)) => {
                v.push(Violation::parse("mapping_rules", &e));
                None
            }
            Some(Ok(r)) => Some(r),
            None => None,
        };
        let mut traces = BTreeMap::new();
        if let Some(models) = &models {
            for (reference, text) in &doc.traces {
                let trace = match &rules {
                    Some(rules) => TraceTable::parse(text)
                        .map_err(PowerError::from)
                        .and_then(|t| apply_mapping(&t, rules, models)),
                    None if doc.mapping_rules.is_some() => continue,
                    None => ActivityTrace::parse(text),
                };
                match trace {
                    Ok(t) => {
                        traces.insert(reference.clone(), t);
                    }
                    Err(e) => v.push(Violation::power(reference, &e)),
                }
            }
        }
        if let Some(w) = &doc.workload {
            if !doc.traces.contains_key(w) {
                v.push(Violation::new("workload", None, format!("trace '{w}' is not part of the design")));
            }
        }
        let sweep = match doc.sweep.as_deref().map(SweepDefinition::parse) {
            Some(Ok(def)) => {
                for w in &def.workloads {
                    if let Some(src) = &w.source {
                        if !doc.traces.contains_key(src) {
                            v.push(Violation::new(
                                "sweep",
                                None,
                                format!("workload '{}': trace '{src}' is not part of the design", w.name),
                            ));
                        }
                    }
                }
                Some(def)
            }
            Some(Err(e)) => {
                v.push(Violation::dse("sweep", &e));
                None
            }
            None => None,
        };
        match (stack, models, grid) {
            (Some(stack), Some(models), Some(grid)) if v.is_empty() => {
                Ok(Design { stack, models, grid, traces, workload: doc.workload.clone(), sweep })
            }
            _ => Err(v),
        }
    }

    /// The activity of a trace reference; `None` is the default activity.
    pub fn activity(&self, reference: Option<&str>) -> ActivityTrace {
        reference.and_then(|r| self.traces.get(r)).cloned().unwrap_or_else(default_activity)
    }

    pub fn simulate(&self, solver: &SolverConfig) -> Result<SimulationResult, PipelineError> {
        simulate(&self.stack, &self.models, &self.activity(self.workload.as_deref()), &self.grid, solver)
    }

    /// Context, points and workloads of the design's sweep definition.
    pub fn sweep_inputs(&self) -> Result<(SweepContext, Vec<DesignPoint>, Vec<(String, ActivityTrace)>), DseError> {
        let def = self.sweep.clone().unwrap_or_default();
        let ctx = SweepContext::from_definition(self.stack.clone(), self.models.clone(), self.grid, &def)?;
        let points = def.design_points(&ctx.stacking_names());
        let workloads = if def.workloads.is_empty() {
            let name = self.workload.clone().unwrap_or_else(|| "default".into());
            vec![(name, self.activity(self.workload.as_deref()))]
        } else {
            def.workloads.iter().map(|w| (w.name.clone(), self.activity(w.source.as_deref()))).collect()
        };
        Ok((ctx, points, workloads))
    }

    pub fn run_sweep(
        &self,
        config: &SweepConfig,
        progress: &(dyn Fn(usize, usize) + Sync),
    ) -> Result<SweepOutcome, DseError> {
        let (ctx, points, workloads) = self.sweep_inputs()?;
        let result = run_sweep_with_progress(&ctx, &points, &workloads, config, progress)?;
        let report = compare_report(&result, &self.baseline_point(&points))?;
        Ok(SweepOutcome { result, report })
    }

    /// The declared baseline point, or the first point.
    pub fn baseline_point(&self, points: &[DesignPoint]) -> String {
        self.sweep
            .as_ref()
            .and_then(|d| d.baseline.clone())
            .or_else(|| points.first().map(|p| p.name.clone()))
            .unwrap_or_default()
    }

    pub fn floorplans(&self) -> impl Iterator<Item = (usize, &Floorplan)> {
        self.stack.layers.iter().enumerate().filter_map(|(i, l)| l.floorplan.as_ref().map(|a| (i, &*a.value)))
    }
}

fn check_pattern(reference: &str, p: &CoolingPattern, grid: Option<&Grid>, out: &mut Vec<Violation>) {
    if let Some(g) = grid {
        if (p.rows, p.cols) != (g.rows, g.cols) {
            out.push(Violation::new(
                reference,
                None,
                format!("pattern grid {}x{} differs from the design grid {}x{}", p.rows, p.cols, g.rows, g.cols),
            ));
        }
    }
    for pv in validate_pattern(p) {
        out.push(Violation::new(reference, None, pv.to_string()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floorplan::{emit_floorplan, generate_template, Template};
    use crate::stack::DieOutline;

    fn doc() -> DesignDocument {
        let o = DieOutline::new(2e-3, 2e-3);
        let mut d = DesignDocument {
            stack: "outline 0.002 0.002\ndie 0.0001 silicon core.flp\nsink 0.001 copper\n".into(),
            power_models: "C_0 0.5 1e-9 1e9 0.1\nC_1 0.5 1e-9 1e9 0.1\n".into(),
            grid: GridSpec { rows: 8, cols: 8 },
            ..Default::default()
        };
        d.floorplans.insert("core.flp".into(), emit_floorplan(&generate_template(o, Template::CoreGrid, 2, "C")));
        d
    }

    #[test]
    fn valid_document_simulates() {
        let design = Design::from_document(&doc()).unwrap();
        let r = design.simulate(&SolverConfig::default()).unwrap();
        assert!(r.summary.stack_max > design.stack.ambient_temperature);
        assert_eq!(r.artifacts().len(), 2);
    }

    #[test]
    fn violations_are_line_anchored() {
        let mut d = doc();
        let fp = d.floorplans.get_mut("core.flp").unwrap();
        let mut lines: Vec<String> = fp.lines().map(String::from).collect();
        lines.insert(3, "bad\t1\t2".into());
        *fp = lines.join("\n");
        d.power_models.push_str("C_2 x 1 1 1\n");
        let v = Design::from_document(&d).unwrap_err();
        assert!(v.iter().any(|x| x.resource == "core.flp" && x.line == Some(4)), "{v:?}");
        assert!(v.iter().any(|x| x.resource == "power_models" && x.line == Some(3)), "{v:?}");
    }

    #[test]
    fn missing_floorplan_reported_against_stack_line() {
        let mut d = doc();
        d.floorplans.clear();
        let v = Design::from_document(&d).unwrap_err();
        assert_eq!(v[0].resource, "stack");
        assert_eq!(v[0].line, Some(2));
    }
}
