use std::fmt::{self, Write};

use super::{ConstraintKind, FeatureDiagram, FeatureId, FeatureKind, GroupKind};

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl FeatureDiagram {
    fn write_feature(&self, out: &mut String, id: FeatureId, depth: usize) -> fmt::Result {
        let f = self.feature(id);
        out.push_str(f.name());
        for (k, v) in f.annotations() {
            write!(out, " @{k} {}", quote(v))?;
        }
        if !f.has_children() {
            return Ok(());
        }
        out.push_str(" {\n");
        let pad = "  ".repeat(depth + 1);
        for g in f.groups() {
            let group = self.group(*g);
            match group.kind() {
                GroupKind::And => {
                    for m in group.members() {
                        let kw = match self.feature(*m).kind() {
                            FeatureKind::Mandatory => "mandatory",
                            _ => "optional",
                        };
                        write!(out, "{pad}{kw} ")?;
                        self.write_feature(out, *m, depth + 1)?;
                        out.push('\n');
                    }
                }
                kind => {
                    writeln!(out, "{pad}{kind} {{")?;
                    for m in group.members() {
                        write!(out, "{pad}  ")?;
                        self.write_feature(out, *m, depth + 2)?;
                        out.push('\n');
                    }
                    writeln!(out, "{pad}}}")?;
                }
            }
        }
        write!(out, "{}}}", "  ".repeat(depth))
    }
}

/// Canonical `.fm` rendering; parsing it yields an identical diagram.
impl fmt::Display for FeatureDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::from("feature ");
        self.write_feature(&mut out, self.root(), 0)?;
        out.push('\n');
        for c in self.constraints() {
            match c.kind {
                ConstraintKind::Requires => writeln!(
                    out,
                    "requires {} -> {}",
                    self.name_of(c.from),
                    self.name_of(c.to)
                )?,
                ConstraintKind::Excludes => writeln!(
                    out,
                    "excludes {} {}",
                    self.name_of(c.from),
                    self.name_of(c.to)
                )?,
            }
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use crate::model::parse_model;

    #[test]
    fn printed_model_reparses() {
        let src = "feature R @doc \"a \\\"b\\\"\" { mandatory A { or { X Y { optional Z } } } optional B alternative { C D } }\nrequires B -> X\nexcludes C Z\n";
        let d = parse_model(src).unwrap();
        let printed = d.to_string();
        assert_eq!(parse_model(&printed).unwrap(), d);
        assert!(
            printed.contains("  alternative {\n    C\n    D\n  }\n"),
            "{printed}"
        );
    }
}
