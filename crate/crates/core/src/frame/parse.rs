use super::{Frame, FrameError, FrameLibrary, Part};

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses a `.frame` source.
///
/// ```text
/// frame Menu (title, items) <<<EOF
/// menu "<<title>>" {
/// <<items>>}
/// EOF
/// ```
///
/// The body runs up to the terminator line and keeps its line breaks;
/// `<<<-EOF` drops the final one. `<<<<` is a literal `<<`.
pub fn parse_frames(text: &str) -> Result<FrameLibrary, FrameError> {
    let mut lib = FrameLibrary::new();
    let mut lines = text.split_inclusive('\n').enumerate().peekable();
    while let Some((i, raw)) = lines.next() {
        let line = raw.trim_end_matches(['\n', '\r']).trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| FrameError::Syntax {
            line: i + 1,
            message,
        };
        let (name, slots, chomp, tag) = header(line).map_err(err)?;
        let mut body = String::new();
        let mut closed = false;
        for (_, raw) in lines.by_ref() {
            if raw.trim_end_matches(['\n', '\r']) == tag {
                closed = true;
                break;
            }
            body.push_str(raw);
        }
        if !closed {
            return Err(err(format!("frame `{name}` has no closing `{tag}` line")));
        }
        if chomp && body.ends_with('\n') {
            body.pop();
        }
        let parts = body_parts(&body).map_err(|m| err(format!("frame `{name}`: {m}")))?;
        lib.add(Frame::new(name, slots, parts)?)?;
    }
    Ok(lib)
}

fn header(line: &str) -> Result<(String, Vec<String>, bool, String), String> {
    let rest = line
        .strip_prefix("frame")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| format!("expected `frame`, found `{line}`"))?
        .trim_start();
    let (head, tag) = rest
        .rsplit_once("<<<")
        .ok_or_else(|| "expected `<<<` and a terminator after the frame header".to_string())?;
    let (chomp, tag) = match tag.trim().strip_prefix('-') {
        Some(t) => (true, t),
        None => (false, tag.trim()),
    };
    if !is_ident(tag) {
        return Err(format!("invalid terminator `{tag}`"));
    }
    let head = head.trim();
    let (name, slots) = match head.split_once('(') {
        Some((name, list)) => {
            let list = list
                .trim_end()
                .strip_suffix(')')
                .ok_or_else(|| "unclosed slot list".to_string())?;
            let slots: Vec<String> = list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            (name.trim(), slots)
        }
        None => (head, Vec::new()),
    };
    if !is_ident(name) {
        return Err(format!("invalid frame name `{name}`"));
    }
    if let Some(bad) = slots.iter().find(|s| !is_ident(s)) {
        return Err(format!("invalid slot name `{bad}`"));
    }
    Ok((name.to_string(), slots, chomp, tag.to_string()))
}

/// `<<<<name>>` style lookahead: length of a `<<ident>>` placeholder at the
/// start of `s`, if there is one.
fn placeholder(s: &str) -> Option<usize> {
    let inner = s.strip_prefix("<<")?;
    let end = inner.find(">>")?;
    is_ident(&inner[..end]).then_some(end + 4)
}

fn body_parts(body: &str) -> Result<Vec<Part>, String> {
    let mut parts = Vec::new();
    let mut text = String::new();
    let mut i = 0;
    while i < body.len() {
        let rest = &body[i..];
        if !rest.starts_with('<') {
            let c = rest.chars().next().expect("non-empty");
            text.push(c);
            i += c.len_utf8();
        } else if rest.starts_with("<<<<") {
            text.push_str("<<");
            i += 4;
        } else if let Some(n) = placeholder(rest) {
            if !text.is_empty() {
                parts.push(Part::Text(std::mem::take(&mut text)));
            }
            parts.push(Part::Slot(rest[2..n - 2].to_string()));
            i += n;
        } else if placeholder(&rest[1..]).is_some() || !rest.starts_with("<<") {
            text.push('<');
            i += 1;
        } else {
            let line = body[..i].matches('\n').count() + 1;
            return Err(format!(
                "body line {line}: `<<` must open a `<<slot>>` or be written `<<<<`"
            ));
        }
    }
    if !text.is_empty() {
        parts.push(Part::Text(text));
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slotless_frame_is_verbatim() {
        let lib = parse_frames("frame Hello () <<<EOF\nhello\nEOF\n").unwrap();
        let f = lib.get("Hello").unwrap();
        assert_eq!(f.parts(), &[Part::Text("hello\n".into())]);
        assert!(f.slots().is_empty());
    }

    #[test]
    fn two_slot_menu() {
        let lib = parse_frames(
            "frame Menu (title, items) <<<EOF\nmenu \"<<title>>\" { <<items>> }\nEOF\n",
        )
        .unwrap();
        let f = lib.get("Menu").unwrap();
        assert_eq!(f.slots(), &["title".to_string(), "items".to_string()]);
        assert_eq!(
            f.parts(),
            &[
                Part::Text("menu \"".into()),
                Part::Slot("title".into()),
                Part::Text("\" { ".into()),
                Part::Slot("items".into()),
                Part::Text(" }\n".into()),
            ]
        );
        assert_eq!(parse_frames(&lib.to_string()).unwrap(), lib);
    }

    #[test]
    fn escapes_and_chomp() {
        let lib = parse_frames("frame A (x) <<<-END\na <<<< b <<<<x>> <<<x>>\nEND\n").unwrap();
        let f = lib.get("A").unwrap();
        assert_eq!(
            f.parts(),
            &[Part::Text("a << b <<x>> <".into()), Part::Slot("x".into())]
        );
        assert_eq!(parse_frames(&lib.to_string()).unwrap(), lib);
    }

    #[test]
    fn errors() {
        let undeclared = parse_frames("frame A (x) <<<EOF\n<<y>>\nEOF\n");
        assert!(matches!(undeclared, Err(FrameError::UndeclaredSlot { .. })));
        let dup = parse_frames("frame A <<<EOF\nEOF\nframe A <<<EOF\nEOF\n");
        assert!(matches!(dup, Err(FrameError::DuplicateFrame(_))));
        assert!(matches!(
            parse_frames("frame A <<<EOF\nx\n"),
            Err(FrameError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_frames("frame A <<<EOF\n<< x\nEOF\n"),
            Err(FrameError::Syntax { .. })
        ));
        assert!(matches!(
            parse_frames("framex A <<<EOF\nEOF\n"),
            Err(FrameError::Syntax { .. })
        ));
        assert!(matches!(
            parse_frames("frame A <<<EOF\n# BEGIN-FRAME /\nEOF\n"),
            Err(FrameError::ReservedWord { .. })
        ));
        assert!(matches!(
            parse_frames("frame A (x) <<<EOF\nEOF\n"),
            Err(FrameError::UnusedSlot { .. })
        ));
        assert!(matches!(
            parse_frames("frame A (x) <<<EOF\n<<x>><<x>>\nEOF\n"),
            Err(FrameError::RepeatedSlot { .. })
        ));
    }
}
