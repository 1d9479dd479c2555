use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{AnnotatedInstance, Dataset, InstanceFlag, Pos, SourcePool, Split};
use crate::lexicon::Lexicon;

/// A record as it comes out of a raw reader, before span validation.
///
/// `start`/`end` are half-open character offsets into the raw `sentence`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub instance_id: String,
    pub sentence: String,
    pub start: usize,
    pub end: usize,
    /// When present, must equal the span text after whitespace normalization.
    pub target_surface: Option<String>,
    pub lemma: String,
    pub pos: Pos,
    pub gold_frame: String,
    pub dataset: Dataset,
    pub split: Split,
    pub gloss: Option<String>,
    pub pool: SourcePool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecordError {
    #[error("empty sentence")]
    EmptySentence,
    #[error("empty target span ({start}, {end})")]
    EmptySpan { start: usize, end: usize },
    #[error("target span ({start}, {end}) out of range for sentence of {len} characters")]
    OffsetOutOfRange { start: usize, end: usize, len: usize },
    #[error("span text `{found}` does not match declared target `{declared}`")]
    SurfaceMismatch { declared: String, found: String },
    #[error("empty gold frame")]
    EmptyGoldFrame,
}

/// Collapses whitespace runs to a single space and trims both ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized text plus, for every input character, its output position
/// (`None` for collapsed or trimmed whitespace).
fn normalize_with_map(s: &str) -> (String, Vec<Option<usize>>) {
    let mut out = String::with_capacity(s.len());
    let mut out_len = 0usize;
    let mut map = Vec::with_capacity(s.len());
    let mut pending_space = false;
    for ch in s.chars() {
        if ch.is_whitespace() {
            pending_space = out_len > 0;
            map.push(None);
            continue;
        }
        if pending_space {
            out.push(' ');
            out_len += 1;
            pending_space = false;
        }
        map.push(Some(out_len));
        out.push(ch);
        out_len += 1;
    }
    (out, map)
}

fn char_slice(s: &str, start: usize, end: usize) -> String {
    s.chars().skip(start).take(end - start).collect()
}

/// Validates offsets, normalizes whitespace and computes lexicon flags.
///
/// Without a lexicon the flags are left empty.
pub fn normalize(raw: &RawRecord, lexicon: Option<&Lexicon>) -> Result<AnnotatedInstance, RecordError> {
    if raw.sentence.trim().is_empty() {
        return Err(RecordError::EmptySentence);
    }
    if raw.start >= raw.end {
        return Err(RecordError::EmptySpan { start: raw.start, end: raw.end });
    }
    let (sentence, map) = normalize_with_map(&raw.sentence);
    if raw.end > map.len() {
        return Err(RecordError::OffsetOutOfRange { start: raw.start, end: raw.end, len: map.len() });
    }
    if raw.gold_frame.trim().is_empty() {
        return Err(RecordError::EmptyGoldFrame);
    }
    let span = &map[raw.start..raw.end];
    let (Some(first), Some(last)) = (span.iter().flatten().next(), span.iter().flatten().last()) else {
        return Err(RecordError::EmptySpan { start: raw.start, end: raw.end });
    };
    let (start, end) = (*first, *last + 1);
    let found = char_slice(&sentence, start, end);
    if let Some(declared) = &raw.target_surface {
        let declared = normalize_whitespace(declared);
        if declared != found {
            return Err(RecordError::SurfaceMismatch { declared, found });
        }
    }

    let mut flags = BTreeSet::new();
    if let Some(lexicon) = lexicon {
        let candidates = lexicon.lookup_candidates(&raw.lemma, raw.pos);
        if candidates.is_empty() {
            flags.insert(InstanceFlag::UnknownTarget);
        } else if !candidates.contains(&raw.gold_frame) {
            flags.insert(InstanceFlag::UnlinkedTarget);
        }
        if !lexicon.contains_frame(&raw.gold_frame) {
            flags.insert(InstanceFlag::UnlinkedTarget);
        }
    }

    Ok(AnnotatedInstance {
        instance_id: raw.instance_id.clone(),
        sentence,
        target_surface: found,
        target_char_span: (start, end),
        target_lemma: raw.lemma.trim().to_string(),
        target_pos: raw.pos,
        gold_frame: raw.gold_frame.trim().to_string(),
        dataset: raw.dataset,
        split: raw.split,
        flags,
        gloss: raw.gloss.as_deref().map(normalize_whitespace),
        pool: raw.pool,
    })
}

/// Checks the span invariant of an already-normalized instance.
pub fn validate_instance(instance: &AnnotatedInstance) -> Result<(), RecordError> {
    let len = instance.sentence.chars().count();
    let (start, end) = instance.target_char_span;
    if instance.sentence.is_empty() {
        return Err(RecordError::EmptySentence);
    }
    if start >= end {
        return Err(RecordError::EmptySpan { start, end });
    }
    if end > len {
        return Err(RecordError::OffsetOutOfRange { start, end, len });
    }
    let found = char_slice(&instance.sentence, start, end);
    let declared = normalize_whitespace(&instance.target_surface);
    if found != declared {
        return Err(RecordError::SurfaceMismatch { declared, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FrameRecord, LexicalUnit, LexiconVersion};

    fn serve_lexicon() -> Lexicon {
        let frame = |n: &str| FrameRecord {
            name: n.into(),
            definition: format!("{n} def"),
            lexical_unit_ids: vec![],
            definition_missing: false,
        };
        let lu = |id: &str, frame: &str| LexicalUnit {
            id: id.into(),
            lemma: "serve".into(),
            pos: Pos::V,
            sense_definition: String::new(),
            frame_name: frame.into(),
        };
        Lexicon::new(
            LexiconVersion::Fn17,
            vec![frame("Assistance"), frame("Capacity"), frame("Locale_by_use")],
            vec![lu("1", "Assistance"), lu("2", "Capacity")],
        )
        .unwrap()
    }

    fn served(gold: &str) -> RawRecord {
        RawRecord {
            instance_id: "t1".into(),
            sentence: "In 1994, Pleasant Run served 346 children and 125 families.".into(),
            start: 22,
            end: 28,
            target_surface: Some("served".into()),
            lemma: "serve".into(),
            pos: Pos::V,
            gold_frame: gold.into(),
            dataset: Dataset::Fn17,
            split: Split::Test,
            gloss: None,
            pool: SourcePool::FullText,
        }
    }

    #[test]
    fn served_assistance_has_no_flags() {
        let inst = normalize(&served("Assistance"), Some(&serve_lexicon())).unwrap();
        assert!(inst.flags.is_empty());
        assert_eq!(inst.target_surface, "served");
        assert_eq!(inst.target_char_span, (22, 28));
    }

    #[test]
    fn gold_outside_candidates_is_unlinked() {
        let inst = normalize(&served("Locale_by_use"), Some(&serve_lexicon())).unwrap();
        assert_eq!(inst.flags, BTreeSet::from([InstanceFlag::UnlinkedTarget]));
    }

    #[test]
    fn gold_missing_from_lexicon_is_unlinked() {
        let inst = normalize(&served("Not_a_frame"), Some(&serve_lexicon())).unwrap();
        assert!(inst.has_flag(InstanceFlag::UnlinkedTarget));
    }

    #[test]
    fn unknown_lemma_is_flagged() {
        let mut raw = served("Assistance");
        raw.lemma = "zzxq".into();
        let inst = normalize(&raw, Some(&serve_lexicon())).unwrap();
        assert!(inst.has_flag(InstanceFlag::UnknownTarget));
        assert!(!inst.has_flag(InstanceFlag::UnlinkedTarget));
    }

    #[test]
    fn zero_span_is_rejected() {
        let mut raw = served("Assistance");
        raw.start = 0;
        raw.end = 0;
        assert_eq!(normalize(&raw, None), Err(RecordError::EmptySpan { start: 0, end: 0 }));
    }

    #[test]
    fn out_of_range_and_empty_sentence() {
        let mut raw = served("Assistance");
        raw.end = 500;
        assert!(matches!(normalize(&raw, None), Err(RecordError::OffsetOutOfRange { .. })));
        raw.sentence = "   ".into();
        assert_eq!(normalize(&raw, None), Err(RecordError::EmptySentence));
    }

    #[test]
    fn whitespace_is_collapsed_and_offsets_remapped() {
        let mut raw = served("Assistance");
        raw.sentence = "  In 1994,\n Pleasant   Run served 346".into();
        raw.start = 27;
        raw.end = 33;
        let inst = normalize(&raw, None).unwrap();
        assert_eq!(inst.sentence, "In 1994, Pleasant Run served 346");
        assert_eq!(inst.target_char_span, (22, 28));
        assert_eq!(inst.target_surface, "served");
        validate_instance(&inst).unwrap();
    }

    #[test]
    fn multiword_span_with_inner_whitespace() {
        let mut raw = served("Assistance");
        raw.sentence = "they gave   up early".into();
        raw.start = 5;
        raw.end = 14;
        raw.target_surface = Some("gave up".into());
        let inst = normalize(&raw, None).unwrap();
        assert_eq!(inst.target_surface, "gave up");
        assert_eq!(inst.target_char_span, (5, 12));
    }

    #[test]
    fn surface_mismatch_is_reported() {
        let mut raw = served("Assistance");
        raw.target_surface = Some("serves".into());
        assert!(matches!(normalize(&raw, None), Err(RecordError::SurfaceMismatch { .. })));
    }

    #[test]
    fn non_ascii_offsets_are_characters() {
        let mut raw = served("Assistance");
        raw.sentence = "café served soup".into();
        raw.start = 5;
        raw.end = 11;
        let inst = normalize(&raw, None).unwrap();
        assert_eq!(inst.target_surface, "served");
    }
}
