//! `{{slot}}` substitution. Only `{{identifier}}` sequences are slots; any
//! other brace text (such as the JSON examples in the prompts) is literal.

use super::PromptError;

pub(crate) const SIMPLE: &str = include_str!("../../templates/simple.txt");
pub(crate) const SIMPLE_QUERY: &str = include_str!("../../templates/simple_query.txt");
pub(crate) const DIRECT_QA: &str = include_str!("../../templates/direct_qa.txt");
pub(crate) const DIRECT_QA_QUERY: &str = include_str!("../../templates/direct_qa_query.txt");
pub(crate) const ARTIFACTS: &str = include_str!("../../templates/artifacts.txt");
pub(crate) const QA_FINETUNE: &str = include_str!("../../templates/qa_finetune.txt");
pub(crate) const DEF_GEN: &str = include_str!("../../templates/def_gen.txt");
pub(crate) const DEF_EVAL: &str = include_str!("../../templates/def_eval.txt");
pub(crate) const DEF_EVAL_QUERY: &str = include_str!("../../templates/def_eval_query.txt");

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b == b'_')
}

pub(crate) fn fill(template: &str, slots: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) if is_slot_name(&after[..close]) => {
                let name = &after[..close];
                let value = slots
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| PromptError::Template(format!("no value for slot `{name}`")))?;
                out.push_str(value);
                rest = &after[close + 2..];
            }
            _ => {
                out.push_str("{{");
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}
