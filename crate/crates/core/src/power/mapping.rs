use serde::{Deserialize, Serialize};

use super::{ActivityTrace, PowerError, PowerModelSet, TraceTable};
use crate::error::{content_lines, fields, parse_f64, ParseError};

/// `target = clamp(scale · source + offset, 0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingRule {
    pub source_stat: String,
    pub target_block: String,
    pub scale: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MappingRules {
    pub rules: Vec<MappingRule>,
}

impl MappingRules {
    /// Parses `source_stat target_block scale offset` lines.
    pub fn parse(text: &str) -> Result<MappingRules, ParseError> {
        let mut rules = Vec::new();
        for (line, content) in content_lines(text) {
            let f = fields(content);
            if f.len() != 4 {
                return Err(ParseError::new(line, "expected '<source_stat> <target_block> <scale> <offset>'"));
            }
            rules.push(MappingRule {
                source_stat: f[0].to_string(),
                target_block: f[1].to_string(),
                scale: parse_f64(line, f[2], "scale")?,
                offset: parse_f64(line, f[3], "offset")?,
            });
        }
        Ok(MappingRules { rules })
    }

    pub fn emit(&self) -> String {
        let mut s = String::from("# source_stat\ttarget_block\tscale\toffset\n");
        for r in &self.rules {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", r.source_stat, r.target_block, r.scale, r.offset));
        }
        s
    }

    pub fn validate(&self, models: &PowerModelSet) -> Result<(), PowerError> {
        for (i, r) in self.rules.iter().enumerate() {
            if models.get(&r.target_block).is_none() {
                return Err(PowerError::UnknownTarget { rule: i + 1, target: r.target_block.clone() });
            }
        }
        Ok(())
    }
}

/// Translates raw per-interval statistics into an activity trace covering
/// every modeled block. Rules that share a target add up before clamping;
/// blocks without any rule hold their default activity.
pub fn apply_mapping(raw_stats: &TraceTable, rules: &MappingRules, models: &PowerModelSet) -> Result<ActivityTrace, PowerError> {
    rules.validate(models)?;
    let n = raw_stats.len();
    let mut sums: Vec<Option<Vec<f64>>> = vec![None; models.models.len()];
    for (i, r) in rules.rules.iter().enumerate() {
        let src = raw_stats.column(&r.source_stat).ok_or_else(|| PowerError::MissingSource {
            rule: i + 1,
            source_stat: r.source_stat.clone(),
            target: r.target_block.clone(),
        })?;
        let slot = models.models.iter().position(|m| m.block == r.target_block).expect("validated");
        let acc = sums[slot].get_or_insert_with(|| vec![0.0; n]);
        for (a, s) in acc.iter_mut().zip(src) {
            *a += r.scale * s + r.offset;
        }
    }
    let names = models.models.iter().map(|m| m.block.clone()).collect();
    let columns = models
        .models
        .iter()
        .zip(sums)
        .map(|(m, s)| match s {
            Some(v) => v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect(),
            None => vec![m.activity_factor_default; n],
        })
        .collect();
    ActivityTrace::new(TraceTable::new(raw_stats.interval, names, columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::BlockPowerModel;

    fn models() -> PowerModelSet {
        let m = |b: &str| BlockPowerModel {
            block: b.into(),
            static_power: 0.5,
            switching_energy: 1e-9,
            clock_frequency: 2e9,
            activity_factor_default: 0.2,
        };
        PowerModelSet::new(vec![m("C_0"), m("C_1"), m("L2")]).unwrap()
    }

    fn identity(src: &str, dst: &str, scale: f64) -> MappingRule {
        MappingRule { source_stat: src.into(), target_block: dst.into(), scale, offset: 0.0 }
    }

    #[test]
    fn identity_rule_leaves_values_unchanged() {
        let raw = TraceTable::new(1e-3, vec!["c0".into()], vec![vec![0.1, 0.9, 0.5]]);
        let rules = MappingRules { rules: vec![identity("c0", "C_0", 1.0)] };
        let act = apply_mapping(&raw, &rules, &models()).unwrap();
        assert_eq!(act.0.column("C_0").unwrap(), &[0.1, 0.9, 0.5]);
        assert_eq!(act.0.column("L2").unwrap(), &[0.2; 3]);
        // Idempotent: mapping the output again through the same identity rule.
        let again_raw = TraceTable::new(1e-3, vec!["c0".into()], vec![act.0.column("C_0").unwrap().to_vec()]);
        let again = apply_mapping(&again_raw, &rules, &models()).unwrap();
        assert_eq!(again, act);
    }

    #[test]
    fn scale_clamps_at_one() {
        let raw = TraceTable::new(1.0, vec!["c0".into()], vec![vec![0.7]]);
        let rules = MappingRules { rules: vec![identity("c0", "C_0", 2.0)] };
        assert_eq!(apply_mapping(&raw, &rules, &models()).unwrap().0.column("C_0").unwrap(), &[1.0]);
    }

    #[test]
    fn skewed_instruction_counts_keep_ratio() {
        let raw = TraceTable::new(1.0, vec!["insts0".into(), "insts1".into()], vec![vec![5.87e7], vec![1e7]]);
        let rules = MappingRules { rules: vec![identity("insts0", "C_0", 1e-8), identity("insts1", "C_1", 1e-8)] };
        let act = apply_mapping(&raw, &rules, &models()).unwrap();
        let ratio = act.0.column("C_0").unwrap()[0] / act.0.column("C_1").unwrap()[0];
        assert!((ratio - 5.87).abs() < 1e-12, "{ratio}");
    }

    #[test]
    fn missing_source_names_the_rule() {
        let raw = TraceTable::new(1.0, vec!["c0".into()], vec![vec![0.1]]);
        let rules = MappingRules { rules: vec![identity("c0", "C_0", 1.0), identity("nope", "C_1", 1.0)] };
        let err = apply_mapping(&raw, &rules, &models()).unwrap_err();
        assert_eq!(
            err,
            PowerError::MissingSource { rule: 2, source_stat: "nope".into(), target: "C_1".into() }
        );
    }

    #[test]
    fn unknown_target_rejected() {
        let raw = TraceTable::new(1.0, vec!["c0".into()], vec![vec![0.1]]);
        let rules = MappingRules { rules: vec![identity("c0", "GPU", 1.0)] };
        assert!(matches!(apply_mapping(&raw, &rules, &models()), Err(PowerError::UnknownTarget { .. })));
    }

    #[test]
    fn rules_file_round_trip() {
        let text = "# comment\ninsts0 C_0 1e-8 0\ninsts1\tC_1\t2\t-0.5\n";
        let r = MappingRules::parse(text).unwrap();
        assert_eq!(r.rules.len(), 2);
        assert_eq!(MappingRules::parse(&r.emit()).unwrap(), r);
        assert_eq!(MappingRules::parse("a b c\n").unwrap_err().line, 1);
    }
}
