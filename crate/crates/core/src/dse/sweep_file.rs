//! Sweep definition file:
//!
//! ```text
//! stacking all                          # every distinct die permutation
//! stacking <name> <layer>...            # die layer indices of the base stack, bottom-up
//! cooling none
//! cooling <style> <below_hottest_die|index>
//! channel <width_m> <pitch_m> <thickness_m> <material>
//! coolant <name> <c_v> <T_in_K> <flow_m3s> <h>
//! knob <name> base <b> values <v>... targets <block>... [scaling <static_exp> <energy_exp>]
//! workload <name> [<trace ref>]
//! baseline <point>
//! point <name> [stacking=<s>] [cooling=<none|style@pos>] [<knob>=<v>]...
//! ```
//!
//! Without `point` lines the points are the cross product of stackings,
//! cooling variants and knob values.

use serde::{Deserialize, Serialize};

use super::{CoolingPosition, CoolingVariant, DesignPoint, DseError, Knob};
use crate::cooling::{Coolant, PatternStyle};
use crate::error::{content_lines, fields, parse_f64, parse_usize, ParseError};
use crate::power::CapacityScaling;
use crate::stack::Material;

/// Name of the stacking that keeps the stack as declared.
pub const BASE_STACKING: &str = "base";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackingDecl {
    All,
    Named { name: String, order: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingDecl {
    pub variant: CoolingVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDecl {
    pub width: f64,
    pub pitch: f64,
    pub thickness: f64,
    pub material: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadDecl {
    pub name: String,
    /// Activity trace reference; `None` runs every block at its default activity.
    pub source: Option<String>,
}

pub type PointDecl = DesignPoint;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepDefinition {
    pub stackings: Vec<StackingDecl>,
    pub cooling: Vec<CoolingDecl>,
    pub channel: Option<ChannelDecl>,
    pub coolant: Option<Coolant>,
    pub knobs: Vec<Knob>,
    pub workloads: Vec<WorkloadDecl>,
    pub baseline: Option<String>,
    pub points: Vec<PointDecl>,
}

fn parse_knob(line: usize, f: &[&str]) -> Result<Knob, ParseError> {
    let usage = "expected 'knob <name> base <b> values <v>... targets <block>... [scaling <s> <e>]'";
    if f.len() < 2 {
        return Err(ParseError::new(line, usage));
    }
    let mut base = None;
    let mut values = Vec::new();
    let mut targets = Vec::new();
    let mut scaling = CapacityScaling::default();
    let mut section = "";
    let mut i = 2;
    while i < f.len() {
        match f[i] {
            "base" | "values" | "targets" => section = f[i],
            "scaling" => {
                if i + 2 >= f.len() {
                    return Err(ParseError::new(line, usage));
                }
                scaling = CapacityScaling {
                    static_exponent: parse_f64(line, f[i + 1], "static exponent")?,
                    energy_exponent: parse_f64(line, f[i + 2], "energy exponent")?,
                };
                i += 2;
                section = "";
            }
            tok => match section {
                "base" if base.is_none() => base = Some(parse_f64(line, tok, "knob base")?),
                "values" => values.push(parse_f64(line, tok, "knob value")?),
                "targets" => targets.push(tok.to_string()),
                _ => return Err(ParseError::new(line, format!("unexpected '{tok}'; {usage}"))),
            },
        }
        i += 1;
    }
    let base = base.ok_or_else(|| ParseError::new(line, "knob needs a base value"))?;
    if !(base > 0.0) || values.iter().any(|v| !(*v > 0.0)) {
        return Err(ParseError::new(line, "knob base and values must be positive"));
    }
    if values.is_empty() || targets.is_empty() {
        return Err(ParseError::new(line, "knob needs at least one value and one target"));
    }
    Ok(Knob { name: f[1].to_string(), base, values, targets, scaling })
}

fn parse_point(line: usize, f: &[&str]) -> Result<DesignPoint, ParseError> {
    if f.len() < 2 {
        return Err(ParseError::new(line, "expected 'point <name> [key=value]...'"));
    }
    let mut point = DesignPoint::new(f[1], BASE_STACKING, CoolingVariant::None);
    for kv in &f[2..] {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ParseError::new(line, format!("expected key=value, got '{kv}'")))?;
        match k {
            "stacking" => point.stacking = v.to_string(),
            "cooling" => {
                point.cooling = CoolingVariant::parse(v)
                    .ok_or_else(|| ParseError::new(line, format!("invalid cooling variant '{v}'")))?
            }
            knob => point.knobs.push((knob.to_string(), parse_f64(line, v, "knob value")?)),
        }
    }
    Ok(point)
}

impl SweepDefinition {
    pub fn parse(text: &str) -> Result<SweepDefinition, DseError> {
        let mut def = SweepDefinition::default();
        for (line, content) in content_lines(text) {
            let f = fields(content);
            let arity = |n: usize, usage: &str| {
                if f.len() == n {
                    Ok(())
                } else {
                    Err(ParseError::new(line, format!("expected '{usage}'")))
                }
            };
            match f[0] {
                "stacking" if f.get(1) == Some(&"all") && f.len() == 2 => def.stackings.push(StackingDecl::All),
                "stacking" => {
                    if f.len() < 3 {
                        return Err(ParseError::new(line, "expected 'stacking all' or 'stacking <name> <layer>...'").into());
                    }
                    if f[1] == BASE_STACKING {
                        return Err(ParseError::new(line, format!("'{BASE_STACKING}' is reserved")).into());
                    }
                    let order = f[2..]
                        .iter()
                        .map(|s| parse_usize(line, s, "die layer index"))
                        .collect::<Result<Vec<_>, _>>()?;
                    def.stackings.push(StackingDecl::Named { name: f[1].to_string(), order });
                }
                "cooling" if f.len() == 2 && f[1] == "none" => def.cooling.push(CoolingDecl { variant: CoolingVariant::None }),
                "cooling" => {
                    arity(3, "cooling none | cooling <style> <position>")?;
                    let style = PatternStyle::parse(f[1])
                        .ok_or_else(|| ParseError::new(line, format!("unknown pattern style '{}'", f[1])))?;
                    let position = CoolingPosition::parse(f[2])
                        .ok_or_else(|| ParseError::new(line, format!("invalid position '{}'", f[2])))?;
                    def.cooling.push(CoolingDecl { variant: CoolingVariant::Channels { style, position } });
                }
                "channel" => {
                    arity(5, "channel <width_m> <pitch_m> <thickness_m> <material>")?;
                    if Material::builtin(f[4]).is_none() {
                        return Err(ParseError::new(line, format!("unknown material '{}'", f[4])).into());
                    }
                    def.channel = Some(ChannelDecl {
                        width: parse_f64(line, f[1], "channel width")?,
                        pitch: parse_f64(line, f[2], "channel pitch")?,
                        thickness: parse_f64(line, f[3], "channel thickness")?,
                        material: f[4].to_string(),
                    });
                }
                "coolant" => {
                    arity(6, "coolant <name> <c_v> <T_in_K> <flow_m3s> <h>")?;
                    let c = Coolant {
                        name: f[1].to_string(),
                        volumetric_heat_capacity: parse_f64(line, f[2], "heat capacity")?,
                        inlet_temperature: parse_f64(line, f[3], "inlet temperature")?,
                        volumetric_flow_rate_per_channel: parse_f64(line, f[4], "flow rate")?,
                        convection_coefficient: parse_f64(line, f[5], "convection coefficient")?,
                    };
                    if !c.is_valid() {
                        return Err(ParseError::new(line, "coolant properties must be positive").into());
                    }
                    def.coolant = Some(c);
                }
                "knob" => {
                    let k = parse_knob(line, &f)?;
                    if def.knobs.iter().any(|o| o.name == k.name) {
                        return Err(ParseError::new(line, format!("duplicate knob '{}'", k.name)).into());
                    }
                    def.knobs.push(k);
                }
                "workload" => {
                    if !(2..=3).contains(&f.len()) {
                        return Err(ParseError::new(line, "expected 'workload <name> [<trace ref>]'").into());
                    }
                    def.workloads.push(WorkloadDecl { name: f[1].to_string(), source: f.get(2).map(|s| s.to_string()) });
                }
                "baseline" => {
                    arity(2, "baseline <point>")?;
                    def.baseline = Some(f[1].to_string());
                }
                "point" => {
                    let p = parse_point(line, &f)?;
                    if def.points.iter().any(|o| o.name == p.name) {
                        return Err(DseError::DuplicatePoint(p.name));
                    }
                    def.points.push(p);
                }
                other => return Err(ParseError::new(line, format!("unknown directive '{other}'")).into()),
            }
        }
        Ok(def)
    }

    pub fn emit(&self) -> String {
        let mut s = String::new();
        for st in &self.stackings {
            match st {
                StackingDecl::All => s.push_str("stacking\tall\n"),
                StackingDecl::Named { name, order } => {
                    let o: Vec<String> = order.iter().map(usize::to_string).collect();
                    s.push_str(&format!("stacking\t{name}\t{}\n", o.join("\t")));
                }
            }
        }
        for c in &self.cooling {
            match c.variant {
                CoolingVariant::None => s.push_str("cooling\tnone\n"),
                CoolingVariant::Channels { style, position } => s.push_str(&format!("cooling\t{style}\t{position}\n")),
            }
        }
        if let Some(c) = &self.channel {
            s.push_str(&format!("channel\t{}\t{}\t{}\t{}\n", c.width, c.pitch, c.thickness, c.material));
        }
        if let Some(c) = &self.coolant {
            s.push_str(&format!(
                "coolant\t{}\t{}\t{}\t{}\t{}\n",
                c.name, c.volumetric_heat_capacity, c.inlet_temperature, c.volumetric_flow_rate_per_channel, c.convection_coefficient
            ));
        }
        for k in &self.knobs {
            let values: Vec<String> = k.values.iter().map(f64::to_string).collect();
            s.push_str(&format!(
                "knob\t{}\tbase\t{}\tvalues\t{}\ttargets\t{}\tscaling\t{}\t{}\n",
                k.name,
                k.base,
                values.join("\t"),
                k.targets.join("\t"),
                k.scaling.static_exponent,
                k.scaling.energy_exponent
            ));
        }
        for w in &self.workloads {
            match &w.source {
                Some(src) => s.push_str(&format!("workload\t{}\t{src}\n", w.name)),
                None => s.push_str(&format!("workload\t{}\n", w.name)),
            }
        }
        if let Some(b) = &self.baseline {
            s.push_str(&format!("baseline\t{b}\n"));
        }
        for p in &self.points {
            s.push_str(&format!("point\t{}\tstacking={}\tcooling={}", p.name, p.stacking, p.cooling));
            for (k, v) in &p.knobs {
                s.push_str(&format!("\t{k}={v}"));
            }
            s.push('\n');
        }
        s
    }

    /// Declared points, or the cross product when none are declared.
    /// `stacking_names` expands the declared stackings (the `all` policy is
    /// only known once the base stack is).
    pub fn design_points(&self, stacking_names: &[String]) -> Vec<DesignPoint> {
        if !self.points.is_empty() {
            return self.points.clone();
        }
        let stackings: Vec<String> =
            if stacking_names.is_empty() { vec![BASE_STACKING.to_string()] } else { stacking_names.to_vec() };
        let cooling: Vec<CoolingVariant> = if self.cooling.is_empty() {
            vec![CoolingVariant::None]
        } else {
            self.cooling.iter().map(|c| c.variant).collect()
        };
        let mut knob_settings: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for k in &self.knobs {
            knob_settings = knob_settings
                .iter()
                .flat_map(|prefix| {
                    k.values.iter().map(move |v| {
                        let mut s = prefix.clone();
                        s.push((k.name.clone(), *v));
                        s
                    })
                })
                .collect();
        }
        let mut out = Vec::new();
        for st in &stackings {
            for c in &cooling {
                for ks in &knob_settings {
                    let mut name = format!("{st}/{c}");
                    for (k, v) in ks {
                        name.push_str(&format!("/{k}={v}"));
                    }
                    out.push(DesignPoint { name, stacking: st.clone(), cooling: *c, knobs: ks.clone() });
                }
            }
        }
        out
    }

    pub fn channel_material(&self) -> Option<Material> {
        self.channel.as_ref().and_then(|c| Material::builtin(&c.material))
    }
}
