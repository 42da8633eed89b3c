//! Parser for the `.fm` block grammar.
//!
//! ```text
//! feature Dialog {
//!   mandatory CommonButtons
//!   alternative { English German }
//!   or { Ok Cancel }
//!   optional Help @doc "shows the manual"
//! }
//! requires Help -> Ok
//! excludes English Cancel
//! ```

use std::collections::{BTreeMap, HashMap};

use super::{
    ConstraintKind, ConstraintSpec, FeatureDiagram, FeatureNode, GroupKind, GroupNode, ModelError,
    Pos,
};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Annotation(String),
    Str(String),
    LBrace,
    RBrace,
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Annotation(k) => format!("annotation `@{k}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        pos,
        message: message.into(),
    }
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ModelError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        match c {
            c if c.is_whitespace() => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '{' => {
                bump!();
                out.push((Tok::LBrace, pos));
            }
            '}' => {
                bump!();
                out.push((Tok::RBrace, pos));
            }
            '-' => {
                bump!();
                if chars.peek() != Some(&'>') {
                    return Err(syntax(pos, "expected `->`"));
                }
                bump!();
                out.push((Tok::Arrow, pos));
            }
            '@' => {
                bump!();
                let mut key = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_name_char(c) {
                        break;
                    }
                    key.push(c);
                    bump!();
                }
                if key.is_empty() || !key.starts_with(is_name_start) {
                    return Err(syntax(pos, "expected annotation key after `@`"));
                }
                out.push((Tok::Annotation(key), pos));
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match bump!() {
                        None => return Err(syntax(pos, "unterminated string literal")),
                        Some('"') => break,
                        Some('\\') => match bump!() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            _ => {
                                return Err(syntax(
                                    Pos { line, column },
                                    "invalid escape in string literal",
                                ))
                            }
                        },
                        Some(c) => s.push(c),
                    }
                }
                out.push((Tok::Str(s), pos));
            }
            c if is_name_start(c) => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_name_char(c) {
                        break;
                    }
                    s.push(c);
                    bump!();
                }
                out.push((Tok::Ident(s), pos));
            }
            other => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        }
    }
    out.push((Tok::Eof, Pos { line, column }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    seen: HashMap<String, Pos>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ModelError> {
        let (t, pos) = self.next();
        if t == want {
            Ok(())
        } else {
            Err(syntax(
                pos,
                format!("expected {}, found {}", want.describe(), t.describe()),
            ))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ModelError> {
        self.expect(Tok::Ident(kw.to_string()))
    }

    fn name(&mut self) -> Result<(String, Pos), ModelError> {
        match self.next() {
            (Tok::Ident(s), pos) => Ok((s, pos)),
            (t, pos) => Err(syntax(
                pos,
                format!("expected feature name, found {}", t.describe()),
            )),
        }
    }

    /// `Name annotation* block?`
    fn feature(&mut self) -> Result<FeatureNode, ModelError> {
        let (name, pos) = self.name()?;
        if let Some(_first) = self.seen.insert(name.clone(), pos) {
            return Err(ModelError::DuplicateFeature {
                name,
                pos: Some(pos),
            });
        }
        let mut annotations = BTreeMap::new();
        while let Tok::Annotation(key) = self.peek().clone() {
            let apos = self.pos();
            self.next();
            let text = match self.next() {
                (Tok::Str(s), _) => s,
                (t, p) => {
                    return Err(syntax(
                        p,
                        format!("expected string after `@{key}`, found {}", t.describe()),
                    ))
                }
            };
            if annotations.insert(key.clone(), text).is_some() {
                return Err(syntax(
                    apos,
                    format!("duplicate annotation `@{key}` on `{name}`"),
                ));
            }
        }
        let mut node = FeatureNode {
            name,
            annotations,
            groups: Vec::new(),
        };
        if *self.peek() == Tok::LBrace {
            node.groups = self.block(&node.name)?;
        }
        Ok(node)
    }

    fn block(&mut self, owner: &str) -> Result<Vec<GroupNode>, ModelError> {
        self.expect(Tok::LBrace)?;
        let mut groups: Vec<GroupNode> = Vec::new();
        loop {
            let (tok, pos) = (self.peek().clone(), self.pos());
            match tok {
                Tok::RBrace => {
                    self.next();
                    return Ok(groups);
                }
                Tok::Ident(kw) if kw == "mandatory" || kw == "optional" => {
                    self.next();
                    let child = self.feature()?;
                    let mandatory = kw == "mandatory";
                    // consecutive mandatory/optional items share one and-group
                    match groups.last_mut() {
                        Some(GroupNode::And(members)) => members.push((mandatory, child)),
                        _ => groups.push(GroupNode::And(vec![(mandatory, child)])),
                    }
                }
                Tok::Ident(kw) if kw == "alternative" || kw == "or" => {
                    self.next();
                    let kind = if kw == "or" {
                        GroupKind::Or
                    } else {
                        GroupKind::Alternative
                    };
                    self.expect(Tok::LBrace)?;
                    let mut members = Vec::new();
                    loop {
                        match self.peek().clone() {
                            Tok::RBrace => {
                                self.next();
                                break;
                            }
                            Tok::Ident(k) if matches!(k.as_str(), "mandatory" | "optional") => {
                                return Err(syntax(
                                    self.pos(),
                                    format!("`{k}` is not allowed inside an {kind} group; group members carry no kind"),
                                ));
                            }
                            Tok::Ident(_) => members.push(self.feature()?),
                            t => {
                                return Err(syntax(
                                    self.pos(),
                                    format!(
                                        "expected group member or `}}`, found {}",
                                        t.describe()
                                    ),
                                ))
                            }
                        }
                    }
                    if members.len() < 2 {
                        return Err(ModelError::GroupArity {
                            parent: owner.to_string(),
                            kind,
                            members: members.len(),
                            pos: Some(pos),
                        });
                    }
                    groups.push(match kind {
                        GroupKind::Or => GroupNode::Or(members),
                        _ => GroupNode::Alternative(members),
                    });
                }
                t => {
                    return Err(syntax(
                        pos,
                        format!(
                        "expected `mandatory`, `optional`, `alternative`, `or` or `}}`, found {}",
                        t.describe()
                    ),
                    ))
                }
            }
        }
    }

    fn constraints(&mut self) -> Result<Vec<(ConstraintSpec, Pos)>, ModelError> {
        let mut out = Vec::new();
        loop {
            let (tok, pos) = (self.peek().clone(), self.pos());
            match tok {
                Tok::Eof => return Ok(out),
                Tok::Ident(kw) if kw == "requires" => {
                    self.next();
                    let (from, _) = self.name()?;
                    self.expect(Tok::Arrow)?;
                    let (to, _) = self.name()?;
                    out.push((
                        ConstraintSpec {
                            kind: ConstraintKind::Requires,
                            from,
                            to,
                        },
                        pos,
                    ));
                }
                Tok::Ident(kw) if kw == "excludes" => {
                    self.next();
                    let (from, _) = self.name()?;
                    let (to, _) = self.name()?;
                    out.push((
                        ConstraintSpec {
                            kind: ConstraintKind::Excludes,
                            from,
                            to,
                        },
                        pos,
                    ));
                }
                t => {
                    return Err(syntax(
                        pos,
                        format!(
                            "expected `requires`, `excludes` or end of input, found {}",
                            t.describe()
                        ),
                    ))
                }
            }
        }
    }
}

/// Parses a `.fm` model source into a validated diagram.
pub fn parse_model(text: &str) -> Result<FeatureDiagram, ModelError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        seen: HashMap::new(),
    };
    p.keyword("feature")?;
    let root = p.feature()?;
    let constraints = p.constraints()?;
    for (c, pos) in &constraints {
        for name in [&c.from, &c.to] {
            if !p.seen.contains_key(name) {
                return Err(ModelError::UnknownConstraintTarget {
                    name: name.clone(),
                    pos: Some(*pos),
                });
            }
        }
        if c.from == c.to {
            return Err(ModelError::SelfConstraint {
                name: c.from.clone(),
                pos: Some(*pos),
            });
        }
    }
    FeatureDiagram::new(root, constraints.into_iter().map(|(c, _)| c).collect())
}
