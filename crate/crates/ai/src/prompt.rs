//! Prompt assets and `${slot}` substitution.

pub const SPLIT: &str = include_str!("../prompts/split.txt");
pub const OUTLINE_FROM_CHILDREN: &str = include_str!("../prompts/outline_from_children.txt");
pub const PARAGRAPH: &str = include_str!("../prompts/paragraph.txt");
pub const OUTLINE_FROM_PARAGRAPH: &str = include_str!("../prompts/outline_from_paragraph.txt");
pub const ASSISTANT_SYSTEM: &str = include_str!("../prompts/assistant_system.txt");

/// Names of the `${...}` slots in `template`, in order of appearance.
pub fn slots(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find("${") {
        let after = &rest[start + 2..];
        match after.find('}') {
            Some(end) => {
                out.push(&after[..end]);
                rest = &after[end + 1..];
            }
            None => break,
        }
    }
    out
}

/// Fills every slot. Panics on a slot without a value: templates are
/// compiled in, so that is a programming error.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}').expect("unterminated slot");
        let name = &after[..end];
        let value = values
            .iter()
            .find(|(k, _)| *k == name)
            .unwrap_or_else(|| panic!("no value for slot {name}"))
            .1;
        out.push_str(value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    out
}
