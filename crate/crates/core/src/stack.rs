//! Geometric and material data model shared by every other module: dies,
//! layers, stacks, and the simulation grid.
//!
//! Layer order is physical: index 0 is the layer farthest from the heat
//! sink, the last index is on the sink side. The thermal solver consumes
//! this order verbatim.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cooling::CoolingPattern;
use crate::error::{content_lines, fields, parse_f64, ParseError};
use crate::floorplan::Floorplan;

pub const DEFAULT_AMBIENT_K: f64 = 318.15;
/// Effective heat-transfer coefficient of the passive sink to ambient, W/(m²·K).
pub const DEFAULT_HEATSINK_HTC: f64 = 2.0e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// W/(m·K)
    pub thermal_conductivity: f64,
    /// J/(m³·K)
    pub volumetric_heat_capacity: f64,
}

impl Material {
    pub fn new(name: impl Into<String>, k: f64, cv: f64) -> Self {
        Material { name: name.into(), thermal_conductivity: k, volumetric_heat_capacity: cv }
    }

    pub fn silicon() -> Self {
        Material::new("silicon", 150.0, 1.75e6)
    }

    pub fn tim() -> Self {
        Material::new("tim", 4.0, 4.0e6)
    }

    pub fn copper() -> Self {
        Material::new("copper", 400.0, 3.55e6)
    }

    pub fn builtin(name: &str) -> Option<Material> {
        match name {
            "silicon" => Some(Material::silicon()),
            "tim" => Some(Material::tim()),
            "copper" => Some(Material::copper()),
            _ => None,
        }
    }

    fn is_valid(&self) -> bool {
        self.thermal_conductivity > 0.0
            && self.volumetric_heat_capacity > 0.0
            && self.thermal_conductivity.is_finite()
            && self.volumetric_heat_capacity.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DieOutline {
    /// m
    pub width: f64,
    /// m
    pub height: f64,
}

impl DieOutline {
    pub fn new(width: f64, height: f64) -> Self {
        DieOutline { width, height }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn is_valid(&self) -> bool {
        self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()
    }

    pub(crate) fn approx_eq(&self, other: &DieOutline) -> bool {
        rel_close(self.width, other.width, 1e-9) && rel_close(self.height, other.height, 1e-9)
    }
}

pub(crate) fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Uniform rectangular discretization of a die outline. Row `r` covers
/// `y ∈ [r·cell_height, (r+1)·cell_height)`, column `c` covers
/// `x ∈ [c·cell_width, (c+1)·cell_width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub cell_width: f64,
    pub cell_height: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid resolution {rows}x{cols}: rows and cols must both be at least 2")]
pub struct InvalidResolution {
    pub rows: usize,
    pub cols: usize,
}

impl Grid {
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_width * self.cell_height
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Cell-center coordinates.
    pub fn center(&self, row: usize, col: usize) -> (f64, f64) {
        ((col as f64 + 0.5) * self.cell_width, (row as f64 + 0.5) * self.cell_height)
    }

    pub fn outline(&self) -> DieOutline {
        DieOutline::new(self.cols as f64 * self.cell_width, self.rows as f64 * self.cell_height)
    }
}

pub fn grid_for(outline: DieOutline, rows: usize, cols: usize) -> Result<Grid, InvalidResolution> {
    if rows < 2 || cols < 2 {
        return Err(InvalidResolution { rows, cols });
    }
    Ok(Grid {
        rows,
        cols,
        cell_width: outline.width / cols as f64,
        cell_height: outline.height / rows as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Die,
    Tim,
    Microchannel,
    Spreader,
    Sink,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Die => "die",
            LayerKind::Tim => "tim",
            LayerKind::Microchannel => "microchannel",
            LayerKind::Spreader => "spreader",
            LayerKind::Sink => "sink",
        }
    }

    pub fn parse(s: &str) -> Option<LayerKind> {
        Some(match s {
            "die" => LayerKind::Die,
            "tim" => LayerKind::Tim,
            "microchannel" => LayerKind::Microchannel,
            "spreader" => LayerKind::Spreader,
            "sink" => LayerKind::Sink,
            _ => return None,
        })
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A resolved sub-resource together with the reference it was loaded from.
#[derive(Debug, Clone, PartialEq)]
pub struct Attached<T> {
    pub source: String,
    pub value: Arc<T>,
}

impl<T> Attached<T> {
    pub fn new(source: impl Into<String>, value: T) -> Self {
        Attached { source: source.into(), value: Arc::new(value) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    /// m
    pub thickness: f64,
    pub material: Material,
    pub floorplan: Option<Attached<Floorplan>>,
    pub pattern: Option<Attached<CoolingPattern>>,
}

impl Layer {
    pub fn die(thickness: f64, material: Material, floorplan: Attached<Floorplan>) -> Self {
        Layer { kind: LayerKind::Die, thickness, material, floorplan: Some(floorplan), pattern: None }
    }

    pub fn microchannel(thickness: f64, material: Material, pattern: Attached<CoolingPattern>) -> Self {
        Layer { kind: LayerKind::Microchannel, thickness, material, floorplan: None, pattern: Some(pattern) }
    }

    pub fn passive(kind: LayerKind, thickness: f64, material: Material) -> Self {
        Layer { kind, thickness, material, floorplan: None, pattern: None }
    }

    /// Equality of everything that affects the physics, ignoring how the
    /// sub-resources were referenced.
    pub fn same_content(&self, other: &Layer) -> bool {
        self.kind == other.kind
            && self.thickness == other.thickness
            && self.material == other.material
            && self.floorplan.as_ref().map(|a| &*a.value) == other.floorplan.as_ref().map(|a| &*a.value)
            && self.pattern.as_ref().map(|a| &*a.value) == other.pattern.as_ref().map(|a| &*a.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    pub outline: DieOutline,
    pub layers: Vec<Layer>,
    /// K
    pub ambient_temperature: f64,
    /// W/(m²·K) between the outermost (sink-side) layer and ambient.
    pub heatsink_htc: f64,
}

impl Stack {
    pub fn new(outline: DieOutline, layers: Vec<Layer>) -> Self {
        Stack {
            outline,
            layers,
            ambient_temperature: DEFAULT_AMBIENT_K,
            heatsink_htc: DEFAULT_HEATSINK_HTC,
        }
    }

    pub fn die_indices(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind == LayerKind::Die)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StackViolation {
    NoDieLayer,
    InvalidOutline,
    InvalidAmbient(f64),
    InvalidHeatsink(f64),
    NonPositiveThickness { layer: usize },
    InvalidMaterial { layer: usize, material: String },
    MissingFloorplan { layer: usize },
    UnexpectedFloorplan { layer: usize },
    MissingPattern { layer: usize },
    UnexpectedPattern { layer: usize },
    MultipleSinks { layers: Vec<usize> },
    SinkNotLast { layer: usize },
    AdjacentMicrochannels { lower: usize, upper: usize },
    FloorplanOutlineMismatch { layer: usize },
}

impl StackViolation {
    pub fn layer(&self) -> Option<usize> {
        use StackViolation::*;
        match self {
            NonPositiveThickness { layer }
            | InvalidMaterial { layer, .. }
            | MissingFloorplan { layer }
            | UnexpectedFloorplan { layer }
            | MissingPattern { layer }
            | UnexpectedPattern { layer }
            | SinkNotLast { layer }
            | FloorplanOutlineMismatch { layer } => Some(*layer),
            AdjacentMicrochannels { lower, .. } => Some(*lower),
            MultipleSinks { layers } => layers.first().copied(),
            NoDieLayer | InvalidOutline | InvalidAmbient(_) | InvalidHeatsink(_) => None,
        }
    }
}

impl fmt::Display for StackViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use StackViolation::*;
        match self {
            NoDieLayer => write!(f, "no die layer"),
            InvalidOutline => write!(f, "die outline must have positive width and height"),
            InvalidAmbient(t) => write!(f, "ambient temperature {t} K must be positive"),
            InvalidHeatsink(h) => write!(f, "heatsink coefficient {h} W/(m2 K) must be positive"),
            NonPositiveThickness { layer } => write!(f, "layer {layer}: thickness must be positive"),
            InvalidMaterial { layer, material } => {
                write!(f, "layer {layer}: material '{material}' needs positive conductivity and heat capacity")
            }
            MissingFloorplan { layer } => write!(f, "layer {layer}: die layer without floorplan"),
            UnexpectedFloorplan { layer } => write!(f, "layer {layer}: only die layers carry a floorplan"),
            MissingPattern { layer } => write!(f, "layer {layer}: microchannel layer without cooling pattern"),
            UnexpectedPattern { layer } => {
                write!(f, "layer {layer}: only microchannel layers carry a cooling pattern")
            }
            MultipleSinks { layers } => write!(f, "more than one sink layer: {layers:?}"),
            SinkNotLast { layer } => write!(f, "layer {layer}: sink layer must be the last layer"),
            AdjacentMicrochannels { lower, upper } => {
                write!(f, "layers {lower} and {upper}: adjacent microchannel layers")
            }
            FloorplanOutlineMismatch { layer } => {
                write!(f, "layer {layer}: floorplan outline differs from the stack outline")
            }
        }
    }
}

/// Returns every invariant violation; an empty list means the stack is valid.
pub fn validate_stack(stack: &Stack) -> Vec<StackViolation> {
    let mut out = Vec::new();
    if !stack.outline.is_valid() {
        out.push(StackViolation::InvalidOutline);
    }
    if !(stack.ambient_temperature > 0.0 && stack.ambient_temperature.is_finite()) {
        out.push(StackViolation::InvalidAmbient(stack.ambient_temperature));
    }
    if !(stack.heatsink_htc > 0.0 && stack.heatsink_htc.is_finite()) {
        out.push(StackViolation::InvalidHeatsink(stack.heatsink_htc));
    }
    if !stack.layers.iter().any(|l| l.kind == LayerKind::Die) {
        out.push(StackViolation::NoDieLayer);
    }
    for (i, layer) in stack.layers.iter().enumerate() {
        if !(layer.thickness > 0.0 && layer.thickness.is_finite()) {
            out.push(StackViolation::NonPositiveThickness { layer: i });
        }
        if !layer.material.is_valid() {
            out.push(StackViolation::InvalidMaterial { layer: i, material: layer.material.name.clone() });
        }
        match (layer.kind == LayerKind::Die, &layer.floorplan) {
            (true, None) => out.push(StackViolation::MissingFloorplan { layer: i }),
            (false, Some(_)) => out.push(StackViolation::UnexpectedFloorplan { layer: i }),
            (true, Some(fp)) => {
                if !fp.value.outline.approx_eq(&stack.outline) {
                    out.push(StackViolation::FloorplanOutlineMismatch { layer: i });
                }
            }
            _ => {}
        }
        match (layer.kind == LayerKind::Microchannel, &layer.pattern) {
            (true, None) => out.push(StackViolation::MissingPattern { layer: i }),
            (false, Some(_)) => out.push(StackViolation::UnexpectedPattern { layer: i }),
            _ => {}
        }
    }
    let sinks: Vec<usize> = stack
        .layers
        .iter()
        .enumerate()
        .filter(|(_, l)| l.kind == LayerKind::Sink)
        .map(|(i, _)| i)
        .collect();
    if sinks.len() > 1 {
        out.push(StackViolation::MultipleSinks { layers: sinks.clone() });
    }
    if let Some(&s) = sinks.first() {
        if sinks.len() == 1 && s + 1 != stack.layers.len() {
            out.push(StackViolation::SinkNotLast { layer: s });
        }
    }
    for w in 1..stack.layers.len() {
        if stack.layers[w - 1].kind == LayerKind::Microchannel && stack.layers[w].kind == LayerKind::Microchannel {
            out.push(StackViolation::AdjacentMicrochannels { lower: w - 1, upper: w });
        }
    }
    out
}

/// One layer record of a stack description file, with its sub-resource
/// reference left unresolved.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerLine {
    pub kind: LayerKind,
    pub thickness: f64,
    pub material: String,
    pub reference: Option<String>,
    pub line: usize,
}

/// Parsed stack description file.
#[derive(Debug, Clone, PartialEq)]
pub struct StackFile {
    pub outline: DieOutline,
    pub ambient_temperature: f64,
    pub heatsink_htc: f64,
    pub materials: Vec<Material>,
    pub layers: Vec<LayerLine>,
}

/// A floorplan or cooling pattern handed back by a [`StackFile::resolve`]
/// loader.
pub enum Resource {
    Floorplan(Floorplan),
    Pattern(CoolingPattern),
}

#[derive(Debug, Error)]
pub enum StackFileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: cannot load '{reference}': {message}")]
    Reference { line: usize, reference: String, message: String },
}

impl StackFile {
    pub fn parse(text: &str) -> Result<StackFile, ParseError> {
        let mut outline = None;
        let mut ambient = DEFAULT_AMBIENT_K;
        let mut heatsink = DEFAULT_HEATSINK_HTC;
        let mut materials: Vec<Material> = Vec::new();
        let mut layers = Vec::new();
        for (line, content) in content_lines(text) {
            let f = fields(content);
            match f[0] {
                "outline" => {
                    if f.len() != 3 {
                        return Err(ParseError::new(line, "expected 'outline <width_m> <height_m>'"));
                    }
                    let o = DieOutline::new(parse_f64(line, f[1], "width")?, parse_f64(line, f[2], "height")?);
                    if !o.is_valid() {
                        return Err(ParseError::new(line, "outline dimensions must be positive"));
                    }
                    outline = Some(o);
                }
                "ambient" => {
                    if f.len() != 2 {
                        return Err(ParseError::new(line, "expected 'ambient <K>'"));
                    }
                    ambient = parse_f64(line, f[1], "ambient temperature")?;
                }
                "heatsink" => {
                    if f.len() != 2 {
                        return Err(ParseError::new(line, "expected 'heatsink <W/m2K>'"));
                    }
                    heatsink = parse_f64(line, f[1], "heatsink coefficient")?;
                }
                "material" => {
                    if f.len() != 4 {
                        return Err(ParseError::new(line, "expected 'material <name> <k> <c_v>'"));
                    }
                    let m = Material::new(
                        f[1],
                        parse_f64(line, f[2], "conductivity")?,
                        parse_f64(line, f[3], "heat capacity")?,
                    );
                    if !m.is_valid() {
                        return Err(ParseError::new(line, format!("material '{}' needs positive properties", m.name)));
                    }
                    materials.retain(|x| x.name != m.name);
                    materials.push(m);
                }
                kind => {
                    let kind = LayerKind::parse(kind)
                        .ok_or_else(|| ParseError::new(line, format!("unknown layer kind or directive '{kind}'")))?;
                    if f.len() < 3 || f.len() > 4 {
                        return Err(ParseError::new(
                            line,
                            "expected '<kind> <thickness_m> <material> [floorplan|pattern]'",
                        ));
                    }
                    let thickness = parse_f64(line, f[1], "thickness")?;
                    if thickness <= 0.0 {
                        return Err(ParseError::new(line, "thickness must be positive"));
                    }
                    layers.push(LayerLine {
                        kind,
                        thickness,
                        material: f[2].to_string(),
                        reference: f.get(3).map(|s| s.to_string()),
                        line,
                    });
                }
            }
        }
        let outline = outline.ok_or_else(|| ParseError::new(1, "missing 'outline' line"))?;
        let file = StackFile { outline, ambient_temperature: ambient, heatsink_htc: heatsink, materials, layers };
        for l in &file.layers {
            if file.material(&l.material).is_none() {
                return Err(ParseError::new(l.line, format!("unknown material '{}'", l.material)));
            }
        }
        Ok(file)
    }

    pub fn material(&self, name: &str) -> Option<Material> {
        self.materials.iter().find(|m| m.name == name).cloned().or_else(|| Material::builtin(name))
    }

    pub fn emit(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("outline\t{}\t{}\n", self.outline.width, self.outline.height));
        s.push_str(&format!("ambient\t{}\n", self.ambient_temperature));
        s.push_str(&format!("heatsink\t{}\n", self.heatsink_htc));
        for m in &self.materials {
            s.push_str(&format!(
                "material\t{}\t{}\t{}\n",
                m.name, m.thermal_conductivity, m.volumetric_heat_capacity
            ));
        }
        for l in &self.layers {
            s.push_str(&format!("{}\t{}\t{}", l.kind, l.thickness, l.material));
            if let Some(r) = &l.reference {
                s.push('\t');
                s.push_str(r);
            }
            s.push('\n');
        }
        s
    }

    /// Resolves every floorplan/pattern reference through `load`. Loader
    /// errors are reported against the line that carried the reference.
    pub fn resolve<F>(&self, mut load: F) -> Result<Stack, StackFileError>
    where
        F: FnMut(LayerKind, &str) -> Result<Resource, String>,
    {
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let material = self.material(&l.material).expect("checked at parse time");
            let mut layer = Layer::passive(l.kind, l.thickness, material);
            if let Some(reference) = &l.reference {
                let err = |message: String| StackFileError::Reference {
                    line: l.line,
                    reference: reference.clone(),
                    message,
                };
                match load(l.kind, reference).map_err(err)? {
                    Resource::Floorplan(fp) => layer.floorplan = Some(Attached::new(reference.clone(), fp)),
                    Resource::Pattern(p) => layer.pattern = Some(Attached::new(reference.clone(), p)),
                }
            }
            layers.push(layer);
        }
        Ok(Stack {
            outline: self.outline,
            layers,
            ambient_temperature: self.ambient_temperature,
            heatsink_htc: self.heatsink_htc,
        })
    }
}

impl Stack {
    /// The file-level description of this stack. Materials that differ from
    /// the built-ins are declared explicitly.
    pub fn to_file(&self) -> StackFile {
        let mut materials: Vec<Material> = Vec::new();
        for l in &self.layers {
            let builtin = Material::builtin(&l.material.name);
            if builtin.as_ref() != Some(&l.material) && !materials.iter().any(|m| m.name == l.material.name) {
                materials.push(l.material.clone());
            }
        }
        StackFile {
            outline: self.outline,
            ambient_temperature: self.ambient_temperature,
            heatsink_htc: self.heatsink_htc,
            materials,
            layers: self
                .layers
                .iter()
                .enumerate()
                .map(|(i, l)| LayerLine {
                    kind: l.kind,
                    thickness: l.thickness,
                    material: l.material.name.clone(),
                    reference: l
                        .floorplan
                        .as_ref()
                        .map(|a| a.source.clone())
                        .or_else(|| l.pattern.as_ref().map(|a| a.source.clone())),
                    line: i + 1,
                })
                .collect(),
        }
    }
}
