use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use super::enumerate::{apply_cooling, apply_knobs, enumerate_stackings, ChannelSpec, StackVariant, StackingPolicy};
use super::sweep_file::{StackingDecl, SweepDefinition, BASE_STACKING};
use super::{DesignPoint, DseError, Knob};
use crate::par::{map_collect, Execution};
use crate::pipeline::simulate;
use crate::power::{ActivityTrace, PowerModelSet};
use crate::stack::{Grid, Stack};
use crate::thermal::SolverConfig;

/// Immutable inputs shared by every design point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub stack: Stack,
    pub models: PowerModelSet,
    pub grid: Grid,
    pub stackings: Vec<StackVariant>,
    pub knobs: Vec<Knob>,
    pub channel: ChannelSpec,
}

impl SweepContext {
    pub fn new(stack: Stack, models: PowerModelSet, grid: Grid) -> SweepContext {
        let channel = ChannelSpec::default_for(&grid);
        SweepContext { stack, models, grid, stackings: Vec::new(), knobs: Vec::new(), channel }
    }

    pub fn from_definition(
        stack: Stack,
        models: PowerModelSet,
        grid: Grid,
        def: &SweepDefinition,
    ) -> Result<SweepContext, DseError> {
        let mut ctx = SweepContext::new(stack, models, grid);
        for decl in &def.stackings {
            let policy = match decl {
                StackingDecl::All => StackingPolicy::AllDiePermutations,
                StackingDecl::Named { name, order } => StackingPolicy::Named(vec![(name.clone(), order.clone())]),
            };
            for v in enumerate_stackings(&ctx.stack, &policy)? {
                if v.name == BASE_STACKING || ctx.stackings.iter().any(|o| o.name == v.name) {
                    return Err(DseError::InvalidStacking { name: v.name, detail: "declared twice".into() });
                }
                ctx.stackings.push(v);
            }
        }
        if let Some(c) = &def.channel {
            ctx.channel.width = c.width;
            ctx.channel.pitch = c.pitch;
            ctx.channel.thickness = c.thickness;
            if let Some(m) = def.channel_material() {
                ctx.channel.material = m;
            }
        }
        ctx.channel.coolant = def.coolant.clone();
        ctx.knobs = def.knobs.clone();
        Ok(ctx)
    }

    pub fn stacking_names(&self) -> Vec<String> {
        self.stackings.iter().map(|s| s.name.clone()).collect()
    }

    pub fn stacking(&self, name: &str) -> Option<&Stack> {
        if name == BASE_STACKING {
            return Some(&self.stack);
        }
        self.stackings.iter().find(|s| s.name == name).map(|s| &s.stack)
    }

    /// The stack and power models a point evaluates: knobs first, so the
    /// hottest-die placement sees the adjusted models.
    pub fn build_point(&self, point: &DesignPoint) -> Result<(Stack, PowerModelSet), DseError> {
        let base = self.stacking(&point.stacking).ok_or_else(|| DseError::UnknownStacking(point.stacking.clone()))?;
        let models = apply_knobs(&self.models, &self.knobs, &point.knobs)?;
        let stack = apply_cooling(base, &point.cooling, &self.channel, &self.grid, &models)?;
        Ok((stack, models))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepConfig {
    pub solver: SolverConfig,
    /// Fan-out over point × workload evaluations.
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadResult {
    pub workload: String,
    /// K
    pub stack_max: f64,
    /// K, bottom-up.
    pub layer_max: Vec<f64>,
    /// s
    pub runtime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point: DesignPoint,
    /// One entry per workload, in workload order; empty when `error` is set.
    pub workloads: Vec<WorkloadResult>,
    pub error: Option<String>,
}

impl PointResult {
    pub fn worst(&self) -> Option<f64> {
        if self.error.is_some() {
            return None;
        }
        self.workloads.iter().map(|w| w.stack_max).max_by(f64::total_cmp)
    }

    pub fn mean(&self) -> Option<f64> {
        if self.error.is_some() || self.workloads.is_empty() {
            return None;
        }
        Some(self.workloads.iter().map(|w| w.stack_max).sum::<f64>() / self.workloads.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub point: String,
    /// Worst case over workloads, K.
    pub worst: f64,
    /// Mean over workloads, K.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub workloads: Vec<String>,
    /// In declaration order.
    pub points: Vec<PointResult>,
    /// Successful points, coolest first.
    pub ranking: Vec<RankEntry>,
}

impl SweepResult {
    pub fn point(&self, name: &str) -> Option<&PointResult> {
        self.points.iter().find(|p| p.point.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &PointResult> {
        self.points.iter().filter(|p| p.error.is_some())
    }
}

/// Orders successful points by worst-case stack maximum, then by the mean
/// over workloads, then by declaration order.
pub fn rank(points: &[PointResult]) -> Vec<RankEntry> {
    let mut keyed: Vec<(usize, f64, f64)> = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| Some((i, p.worst()?, p.mean()?)))
        .collect();
    keyed.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)));
    keyed
        .into_iter()
        .enumerate()
        .map(|(r, (i, worst, mean))| RankEntry { rank: r + 1, point: points[i].point.name.clone(), worst, mean })
        .collect()
}

pub fn run_sweep(
    ctx: &SweepContext,
    points: &[DesignPoint],
    workloads: &[(String, ActivityTrace)],
    config: &SweepConfig,
) -> Result<SweepResult, DseError> {
    run_sweep_with_progress(ctx, points, workloads, config, &|_, _| {})
}

/// As [`run_sweep`], calling `progress(done, total)` after every finished
/// point × workload evaluation. Under parallel execution the calls may
/// arrive out of order.
pub fn run_sweep_with_progress(
    ctx: &SweepContext,
    points: &[DesignPoint],
    workloads: &[(String, ActivityTrace)],
    config: &SweepConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<SweepResult, DseError> {
    if points.is_empty() {
        return Err(DseError::EmptyPoints);
    }
    if workloads.is_empty() {
        return Err(DseError::EmptyWorkloads);
    }
    for (i, p) in points.iter().enumerate() {
        if points[..i].iter().any(|o| o.name == p.name) {
            return Err(DseError::DuplicatePoint(p.name.clone()));
        }
    }
    let built: Vec<Result<(Stack, PowerModelSet), String>> =
        points.iter().map(|p| ctx.build_point(p).map_err(|e| e.to_string())).collect();
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .filter(|&p| built[p].is_ok())
        .flat_map(|p| (0..workloads.len()).map(move |w| (p, w)))
        .collect();
    let total = points.len() * workloads.len();
    let done = AtomicUsize::new(total - tasks.len());
    if tasks.len() < total {
        progress(done.load(AtomicOrdering::SeqCst), total);
    }
    let outcomes = map_collect(config.execution, &tasks, |&(p, w)| {
        let (stack, models) = built[p].as_ref().expect("built point");
        let (name, activity) = &workloads[w];
        let r = simulate(stack, models, activity, &ctx.grid, &config.solver)
            .map(|sim| WorkloadResult {
                workload: name.clone(),
                stack_max: sim.summary.stack_max,
                layer_max: sim.summary.layers.iter().map(|l| l.max).collect(),
                runtime: sim.runtime,
            })
            .map_err(|e| format!("workload '{name}': {e}"));
        progress(done.fetch_add(1, AtomicOrdering::SeqCst) + 1, total);
        r
    });
    let mut per_point: Vec<Vec<Result<WorkloadResult, String>>> = (0..points.len()).map(|_| Vec::new()).collect();
    for (&(p, _), r) in tasks.iter().zip(outcomes) {
        per_point[p].push(r);
    }
    let results: Vec<PointResult> = points
        .iter()
        .zip(built)
        .zip(per_point)
        .map(|((point, b), runs)| {
            let error = match b {
                Err(e) => Some(e),
                Ok(_) => runs.iter().find_map(|r| r.as_ref().err().cloned()),
            };
            let workloads = if error.is_some() { Vec::new() } else { runs.into_iter().map(Result::unwrap).collect() };
            PointResult { point: point.clone(), workloads, error }
        })
        .collect();
    Ok(SweepResult {
        workloads: workloads.iter().map(|(n, _)| n.clone()).collect(),
        ranking: rank(&results),
        points: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooling::PatternStyle;
    use crate::dse::{CoolingPosition, CoolingVariant};
    use crate::floorplan::{generate_template, Template};
    use crate::pipeline::default_activity;
    use crate::power::BlockPowerModel;
    use crate::stack::{grid_for, Attached, DieOutline, Layer, LayerKind, Material};

    fn context() -> SweepContext {
        let o = DieOutline::new(2e-3, 2e-3);
        let core = generate_template(o, Template::CoreGrid, 4, "C");
        let mem = generate_template(o, Template::BankGrid, 4, "B");
        let stack = Stack::new(
            o,
            vec![
                Layer::die(1e-4, Material::silicon(), Attached::new("core", core)),
                Layer::die(1e-4, Material::silicon(), Attached::new("mem", mem)),
                Layer::passive(LayerKind::Sink, 1e-3, Material::copper()),
            ],
        );
        let mut models: Vec<BlockPowerModel> = (0..4)
            .map(|i| BlockPowerModel {
                block: format!("C_{i}"),
                static_power: 0.5,
                switching_energy: 1e-9,
                clock_frequency: 1e9,
                activity_factor_default: 0.2,
            })
            .collect();
        models.extend((0..4).map(|i| BlockPowerModel {
            block: format!("B_{i}"),
            static_power: 0.01,
            switching_energy: 1e-10,
            clock_frequency: 1e9,
            activity_factor_default: 0.1,
        }));
        let grid = grid_for(o, 8, 8).unwrap();
        let mut ctx = SweepContext::new(stack, PowerModelSet::new(models).unwrap(), grid);
        ctx.stackings = enumerate_stackings(&ctx.stack, &StackingPolicy::Named(vec![("flip".into(), vec![1, 0])])).unwrap();
        ctx
    }

    fn wl() -> Vec<(String, ActivityTrace)> {
        vec![("idle".into(), default_activity())]
    }

    #[test]
    fn core_next_to_sink_ranks_first() {
        let ctx = context();
        let pts = [DesignPoint::new("base", "base", CoolingVariant::None), DesignPoint::new("flip", "flip", CoolingVariant::None)];
        let r = run_sweep(&ctx, &pts, &wl(), &SweepConfig::default()).unwrap();
        assert_eq!(r.ranking[0].point, "flip");
        assert!(r.ranking[0].worst < r.ranking[1].worst);
    }

    #[test]
    fn singleton_matches_direct_run() {
        let ctx = context();
        let p = DesignPoint::new("base", "base", CoolingVariant::None);
        let r = run_sweep(&ctx, std::slice::from_ref(&p), &wl(), &SweepConfig::default()).unwrap();
        let direct = simulate(&ctx.stack, &ctx.models, &default_activity(), &ctx.grid, &SolverConfig::default()).unwrap();
        assert_eq!(r.points[0].workloads[0].stack_max, direct.summary.stack_max);
        assert_eq!(r.ranking.len(), 1);
    }

    #[test]
    fn failing_point_is_isolated() {
        let ctx = context();
        let bad = CoolingVariant::Channels { style: PatternStyle::Vertical, position: CoolingPosition::Index(7) };
        let good = DesignPoint::new("ok", "base", CoolingVariant::None);
        let alone = run_sweep(&ctx, std::slice::from_ref(&good), &wl(), &SweepConfig::default()).unwrap();
        let pts = [DesignPoint::new("bad", "base", bad), good, DesignPoint::new("ghost", "nope", CoolingVariant::None)];
        let r = run_sweep(&ctx, &pts, &wl(), &SweepConfig::default()).unwrap();
        assert_eq!(r.failed().count(), 2);
        assert!(r.point("bad").unwrap().error.as_ref().unwrap().contains("beyond"));
        let (a, b) = (&r.point("ok").unwrap().workloads[0], &alone.points[0].workloads[0]);
        assert_eq!((a.stack_max, &a.layer_max), (b.stack_max, &b.layer_max));
        assert_eq!(r.ranking.len(), 1);
    }

    #[test]
    fn empty_inputs_rejected() {
        let ctx = context();
        assert_eq!(run_sweep(&ctx, &[], &wl(), &SweepConfig::default()), Err(DseError::EmptyPoints));
        let p = [DesignPoint::new("a", "base", CoolingVariant::None)];
        assert_eq!(run_sweep(&ctx, &p, &[], &SweepConfig::default()), Err(DseError::EmptyWorkloads));
    }

    #[test]
    fn ranking_ties_use_mean_then_order() {
        let mk = |name: &str, maxes: &[f64]| PointResult {
            point: DesignPoint::new(name, "base", CoolingVariant::None),
            workloads: maxes
                .iter()
                .map(|&m| WorkloadResult { workload: "w".into(), stack_max: m, layer_max: vec![], runtime: 0.0 })
                .collect(),
            error: None,
        };
        let pts = [mk("a", &[350.0, 340.0]), mk("b", &[350.0, 330.0]), mk("c", &[350.0, 330.0]), mk("d", &[345.0, 345.0])];
        let names: Vec<String> = rank(&pts).into_iter().map(|e| e.point).collect();
        assert_eq!(names, ["d", "b", "c", "a"]);
    }
}
