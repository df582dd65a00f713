#![allow(dead_code)]

use std::path::PathBuf;

use stacksim::design::{Design, DesignDocument};
use stacksim::floorplan::{Block, Floorplan};
use stacksim::stack::{Attached, DieOutline, Layer, LayerKind, Material, Stack};
use stacksim::thermal::{assemble, rasterize_stack, ThermalNetwork};
use stacksim::stack::Grid;

pub fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn baseline_design() -> Design {
    let doc = DesignDocument::load(&scenarios().join("baseline.design")).expect("shipped design loads");
    Design::from_document(&doc).unwrap_or_else(|v| panic!("shipped design invalid: {v:?}"))
}

/// A die covered by one block named `name`.
pub fn single_block(outline: DieOutline, name: &str) -> Attached<Floorplan> {
    let fp = Floorplan::new(outline, vec![Block::new(name, outline.width, outline.height, 0.0, 0.0)]).unwrap();
    Attached::new(name, fp)
}

/// `n` uniform silicon dies, each one block `D<i>`, the last one convecting.
pub fn uniform_column(outline: DieOutline, n: usize, thickness: f64, k: f64) -> Stack {
    let m = Material::new("uniform", k, 1.6e6);
    let layers = (0..n).map(|i| Layer::die(thickness, m.clone(), single_block(outline, &format!("D{i}")))).collect();
    Stack::new(outline, layers)
}

pub fn network(stack: &Stack, grid: &Grid) -> ThermalNetwork {
    assemble(stack, grid, &rasterize_stack(stack, grid)).expect("network assembles")
}

pub fn sink(thickness: f64) -> Layer {
    Layer::passive(LayerKind::Sink, thickness, Material::copper())
}
