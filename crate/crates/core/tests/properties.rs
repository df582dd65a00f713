mod common;

use std::time::Instant;

use common::network;
use proptest::prelude::*;
use stacksim::cooling::{generate_pattern, Coolant, PatternStyle};
use stacksim::dse::{run_sweep, CoolingVariant, DesignPoint, SweepConfig, SweepContext, StackingPolicy};
use stacksim::floorplan::{Block, Floorplan};
use stacksim::par::Execution;
use stacksim::pipeline::default_activity;
use stacksim::power::{BlockPowerModel, PowerModelSet};
use stacksim::stack::{grid_for, Attached, DieOutline, Grid, Layer, LayerKind, Material, Stack};
use stacksim::thermal::{energy_balance, solve_steady, SolverConfig, ThermalField, ThermalNetwork};

const N: usize = 4;

/// One block per cell, named `<prefix><row><col>`.
fn cell_blocks(o: DieOutline, prefix: &str) -> Attached<Floorplan> {
    let (w, h) = (o.width / N as f64, o.height / N as f64);
    let blocks = (0..N * N)
        .map(|k| {
            let (r, c) = (k / N, k % N);
            Block::new(format!("{prefix}{r}{c}"), w, h, c as f64 * w, r as f64 * h)
        })
        .collect();
    Attached::new(prefix, Floorplan::new(o, blocks).unwrap())
}

fn small_stack(cooled: bool) -> (Stack, Grid) {
    let o = DieOutline::new(2e-3, 2e-3);
    let grid = grid_for(o, N, N).unwrap();
    let middle = if cooled {
        let cell = grid.cell_width;
        let p = generate_pattern(&grid, PatternStyle::Bent90, cell, 2.0 * cell, Coolant::water(cell, 1e-4)).unwrap();
        Layer::microchannel(1e-4, Material::silicon(), Attached::new("p", p))
    } else {
        Layer::passive(LayerKind::Tim, 2e-5, Material::tim())
    };
    let stack = Stack::new(
        o,
        vec![
            Layer::die(1e-4, Material::silicon(), cell_blocks(o, "a")),
            middle,
            Layer::die(1e-4, Material::silicon(), cell_blocks(o, "b")),
        ],
    );
    (stack, grid)
}

fn block_names() -> Vec<String> {
    ["a", "b"].iter().flat_map(|p| (0..N * N).map(move |k| format!("{p}{}{}", k / N, k % N))).collect()
}

fn solve(net: &ThermalNetwork, powers: &[(String, f64)]) -> ThermalField {
    let src = net.cell_sources(powers.iter().map(|(n, p)| (n.as_str(), *p))).unwrap();
    solve_steady(net, &src, &SolverConfig::default()).unwrap().0
}

fn symmetric_powers() -> Vec<(String, f64)> {
    block_names()
        .into_iter()
        .map(|n| {
            let b: Vec<usize> = n[1..].chars().map(|c| c.to_digit(10).unwrap() as usize).collect();
            let (r, c) = (b[0].min(N - 1 - b[0]), b[1].min(N - 1 - b[1]));
            let scale = if n.starts_with('a') { 0.2 } else { 0.1 };
            (n, scale * (1.0 + r as f64 + 2.0 * c as f64))
        })
        .collect()
}

#[test]
fn monotone_in_every_block_exhaustively() {
    let start = Instant::now();
    for cooled in [false, true] {
        let (stack, grid) = small_stack(cooled);
        let net = network(&stack, &grid);
        let base_powers = symmetric_powers();
        let base = solve(&net, &base_powers);
        for (i, (name, _)) in base_powers.iter().enumerate() {
            let mut bumped = base_powers.clone();
            bumped[i].1 += 0.05;
            let field = solve(&net, &bumped);
            for (k, (t1, t0)) in field.nodes.iter().zip(&base.nodes).enumerate() {
                assert!(t1 - t0 >= -1e-9, "cooled={cooled} block {name}: node {k} fell by {}", t0 - t1);
            }
            assert!(field.max() >= base.max());
        }
    }
    assert!(start.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn mirror_symmetric_inputs_give_mirror_symmetric_fields() {
    for cooled in [false, true] {
        let (stack, grid) = small_stack(cooled);
        let net = network(&stack, &grid);
        let f = solve(&net, &symmetric_powers());
        for l in 0..3 {
            for r in 0..N {
                for c in 0..N {
                    let t = f.at(l, r, c);
                    assert!((t - f.at(l, N - 1 - r, c)).abs() <= 1e-6, "cooled={cooled} ({l},{r},{c})");
                    assert!((t - f.at(l, r, N - 1 - c)).abs() <= 1e-6, "cooled={cooled} ({l},{r},{c})");
                }
            }
        }
    }
}

#[test]
fn sourceless_field_stays_within_boundary_extremes() {
    let (mut stack, grid) = small_stack(true);
    stack.ambient_temperature = 340.0;
    let net = network(&stack, &grid);
    let f = solve(&net, &[]);
    let inlet = stack.layers[1].pattern.as_ref().unwrap().value.coolant.inlet_temperature;
    let (lo, hi) = (inlet.min(340.0), inlet.max(340.0));
    assert!(f.min() >= lo - 1e-9 && f.max() <= hi + 1e-9, "{} {}", f.min(), f.max());
    assert!(f.max() < hi && f.min() > lo);
}

fn ctx(shift: f64) -> SweepContext {
    let o = DieOutline::new(2e-3, 2e-3);
    let grid = grid_for(o, 8, 8).unwrap();
    let die = |p: &str| Layer::die(1e-4, Material::silicon(), cell_blocks(o, p));
    let mut stack = Stack::new(
        o,
        vec![die("a"), Layer::passive(LayerKind::Tim, 2e-5, Material::tim()), die("b"), common::sink(1e-3)],
    );
    stack.ambient_temperature += shift;
    let models = block_names()
        .into_iter()
        .enumerate()
        .map(|(i, n)| BlockPowerModel {
            static_power: if n.starts_with('a') { 0.3 } else { 0.02 } + 0.01 * (i % 5) as f64,
            block: n,
            switching_energy: 1e-10,
            clock_frequency: 1e9,
            activity_factor_default: 0.2,
        })
        .collect();
    let mut ctx = SweepContext::new(stack, PowerModelSet::new(models).unwrap(), grid);
    let mut ch = ctx.channel.coolant();
    ch.inlet_temperature += shift;
    ctx.channel.coolant = Some(ch);
    ctx.stackings = stacksim::dse::enumerate_stackings(&ctx.stack, &StackingPolicy::AllDiePermutations).unwrap();
    ctx
}

fn points() -> Vec<DesignPoint> {
    let mut pts = Vec::new();
    for s in ["p0-2", "p2-0"] {
        for c in ["none", "vertical@below_hottest_die", "bent90@1"] {
            pts.push(DesignPoint::new(format!("{s}/{c}"), s, CoolingVariant::parse(c).unwrap()));
        }
    }
    pts
}

#[test]
fn sweep_is_identical_sequential_and_parallel() {
    let c = ctx(0.0);
    let wl = vec![("default".to_string(), default_activity())];
    let seq = SweepConfig {
        execution: Execution::Sequential,
        solver: SolverConfig { execution: Execution::Sequential, ..Default::default() },
    };
    let a = run_sweep(&c, &points(), &wl, &seq).unwrap();
    let b = run_sweep(&c, &points(), &wl, &SweepConfig::default()).unwrap();
    assert_eq!(a.ranking, b.ranking);
    for (x, y) in a.points.iter().zip(&b.points) {
        assert_eq!(x.workloads.iter().map(|w| w.stack_max).collect::<Vec<_>>(), y.workloads.iter().map(|w| w.stack_max).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_loads_are_monotone_and_conserve_energy(
        powers in prop::collection::vec(0.0f64..0.5, 2 * N * N),
        pick in 0usize..2 * N * N,
        bump in 1e-3f64..1.0,
        cooled in any::<bool>(),
    ) {
        let (stack, grid) = small_stack(cooled);
        let net = network(&stack, &grid);
        let named: Vec<(String, f64)> = block_names().into_iter().zip(powers).collect();
        let src = net.cell_sources(named.iter().map(|(n, p)| (n.as_str(), *p))).unwrap();
        let (base, _) = solve_steady(&net, &src, &SolverConfig::default()).unwrap();
        let e = energy_balance(&net, &base, &src);
        if e.input > 0.0 {
            prop_assert!(e.relative_error() <= 1e-3);
        }
        let floor = net.min_boundary_temperature();
        prop_assert!(base.min() >= floor - 1e-9);
        let mut bumped = named.clone();
        bumped[pick].1 += bump;
        let f = solve(&net, &bumped);
        for (t1, t0) in f.nodes.iter().zip(&base.nodes) {
            prop_assert!(t1 - t0 >= -1e-9);
        }
    }

    #[test]
    fn shifting_all_boundary_temperatures_keeps_the_ranking(shift in -40.0f64..40.0) {
        let wl = vec![("default".to_string(), default_activity())];
        let a = run_sweep(&ctx(0.0), &points(), &wl, &SweepConfig::default()).unwrap();
        let b = run_sweep(&ctx(shift), &points(), &wl, &SweepConfig::default()).unwrap();
        let order = |r: &stacksim::dse::SweepResult| r.ranking.iter().map(|e| e.point.clone()).collect::<Vec<_>>();
        prop_assert_eq!(order(&a), order(&b));
        for (x, y) in a.ranking.iter().zip(&b.ranking) {
            prop_assert!((y.worst - x.worst - shift).abs() < 1e-6);
        }
    }
}
