use framescope::corpus::{AnnotatedInstance, ArtifactEntry, Dataset, Pos, Split};
use framescope::lexicon::Lexicon;
use framescope::parse::DecodePath;
use framescope::promptkit::{
    render, render_artifacts, ExemplarBlock, Granularity, PromptConfig, PromptFormat, RenderedPrompt,
};

use super::{golden_instances, mini_lexicon};

pub fn country_prompt(format: PromptFormat) -> RenderedPrompt {
    let lexicon = mini_lexicon();
    let inst = &golden_instances()["country"];
    let set = lexicon.lookup_candidates(&inst.target_lemma, inst.target_pos);
    render(inst, &set, &PromptConfig::new(format, Granularity::NamesDefs, 0), &ExemplarBlock::empty()).unwrap()
}

pub fn abacus_prompt() -> RenderedPrompt {
    render_artifacts(&ArtifactEntry::from_instance(&golden_instances()["abacus"])).unwrap()
}

pub struct Case {
    pub name: &'static str,
    pub format: PromptFormat,
    pub raw: &'static str,
    pub frame: Option<&'static str>,
    pub path: DecodePath,
}

pub const PARSER_CASES: &[Case] = &[
    Case {
        name: "clean json",
        format: PromptFormat::Simple,
        raw: r#"{"frame_Name": "Political_locales"}"#,
        frame: Some("Political_locales"),
        path: DecodePath::CleanJson,
    },
    Case {
        name: "fenced json",
        format: PromptFormat::Simple,
        raw: "```json\n{\"frame_Name\": \"Political_locales\"}\n```",
        frame: Some("Political_locales"),
        path: DecodePath::RepairedJson,
    },
    Case {
        name: "prefixed prose",
        format: PromptFormat::Simple,
        raw: "Sure, here it is: {\"frame_Name\": \"Locale_by_use\"} Hope that helps.",
        frame: Some("Locale_by_use"),
        path: DecodePath::RepairedJson,
    },
    Case {
        name: "lowercase key",
        format: PromptFormat::Simple,
        raw: r#"{"frame_name": "Political_locales"}"#,
        frame: Some("Political_locales"),
        path: DecodePath::RepairedJson,
    },
    Case {
        name: "wrong-case frame name",
        format: PromptFormat::Simple,
        raw: r#"{"frame_Name": "political_LOCALES"}"#,
        frame: Some("Political_locales"),
        path: DecodePath::RepairedJson,
    },
    Case {
        name: "bare name in prose",
        format: PromptFormat::Simple,
        raw: "The best fit is Locale_by_use here.",
        frame: Some("Locale_by_use"),
        path: DecodePath::FuzzyName,
    },
    Case {
        name: "spaced name in prose",
        format: PromptFormat::Simple,
        raw: "I would go with political locales.",
        frame: Some("Political_locales"),
        path: DecodePath::FuzzyName,
    },
    Case {
        name: "hallucinated frame",
        format: PromptFormat::Simple,
        raw: r#"{"frame_Name": "Political_entities"}"#,
        frame: None,
        path: DecodePath::Failed,
    },
    Case {
        name: "refusal",
        format: PromptFormat::Simple,
        raw: "I'm not able to tell which frame fits this target.",
        frame: None,
        path: DecodePath::Failed,
    },
    Case { name: "empty", format: PromptFormat::Simple, raw: "", frame: None, path: DecodePath::Failed },
    Case {
        name: "clean option",
        format: PromptFormat::DirectQa,
        raw: r#"{"frame_Option": "B", "frame_Name": "Political_locales"}"#,
        frame: Some("Political_locales"),
        path: DecodePath::CleanJson,
    },
    Case {
        name: "fenced option",
        format: PromptFormat::DirectQa,
        raw: "```json\n{\"frame_Option\": \"B\"}\n```",
        frame: Some("Political_locales"),
        path: DecodePath::RepairedJson,
    },
    Case {
        name: "lowercase option key and letter",
        format: PromptFormat::DirectQa,
        raw: r#"{"frame_option": "a"}"#,
        frame: Some("Locale_by_use"),
        path: DecodePath::RepairedJson,
    },
    Case {
        name: "bad letter, good name",
        format: PromptFormat::DirectQa,
        raw: r#"{"frame_Option": "Z", "frame_Name": "Locale_by_use"}"#,
        frame: Some("Locale_by_use"),
        path: DecodePath::RepairedJson,
    },
    Case {
        name: "number in prose under option schema",
        format: PromptFormat::DirectQa,
        raw: "I think the answer is obviously 42.",
        frame: None,
        path: DecodePath::Failed,
    },
    Case { name: "empty option reply", format: PromptFormat::DirectQa, raw: "", frame: None, path: DecodePath::Failed },
    Case {
        name: "definition option",
        format: PromptFormat::DefEval,
        raw: r#"{"frame_definition_Option": "A"}"#,
        frame: Some("Locale_by_use"),
        path: DecodePath::CleanJson,
    },
    Case {
        name: "letter completion",
        format: PromptFormat::QaFinetune,
        raw: " B",
        frame: Some("Political_locales"),
        path: DecodePath::Ordinal,
    },
];

pub const FRAME_SENTINELS: [&str; 2] = ["FDEF_SENTINEL_ASSISTANCE", "FDEF_SENTINEL_CAPACITY"];
pub const LU_SENTINELS: [&str; 2] = ["LUDEF_SENTINEL_SERVE_ASSIST", "LUDEF_SENTINEL_SERVE_CAPACITY"];
pub const FOREIGN: [&str; 4] =
    ["FDEF_SENTINEL_POLITICAL", "LUDEF_SENTINEL_HELP", "LUDEF_SENTINEL_HOLD", "LUDEF_SENTINEL_COUNTRY"];

pub fn serve_instance() -> AnnotatedInstance {
    AnnotatedInstance {
        instance_id: "tiny:serve".into(),
        sentence: "The Pleasant Run served 346 meals .".into(),
        target_surface: "served".into(),
        target_char_span: (17, 23),
        target_lemma: "serve".into(),
        target_pos: Pos::V,
        gold_frame: "Assistance".into(),
        dataset: Dataset::Fn17,
        split: Split::Test,
        flags: Default::default(),
        gloss: None,
        pool: Default::default(),
    }
}

pub fn render_cell(lexicon: &Lexicon, format: PromptFormat, granularity: Granularity) -> String {
    let inst = serve_instance();
    let set = lexicon.lookup_candidates("serve", Pos::V);
    render(&inst, &set, &PromptConfig::new(format, granularity, 0), &ExemplarBlock::empty()).unwrap().text
}

/// Renders the 8 format x granularity cells for `serve.v` and lists every
/// sentinel that appears where it should not, or is absent where it should be.
pub fn sentinel_violations(lexicon: &Lexicon) -> (usize, Vec<String>) {
    let mut cells = 0;
    let mut out = Vec::new();
    for format in [PromptFormat::Simple, PromptFormat::DirectQa] {
        for g in Granularity::ALL {
            cells += 1;
            let text = render_cell(lexicon, format, g);
            for s in FRAME_SENTINELS {
                if text.contains(s) != g.frame_defs() {
                    out.push(format!("{format} {g}: {s}"));
                }
            }
            for s in LU_SENTINELS {
                if text.contains(s) != g.lu_defs() {
                    out.push(format!("{format} {g}: {s}"));
                }
            }
            for s in FOREIGN {
                if text.contains(s) {
                    out.push(format!("{format} {g}: foreign {s}"));
                }
            }
            if !(text.contains("Assistance") && text.contains("Capacity")) {
                out.push(format!("{format} {g}: candidate names missing"));
            }
        }
    }
    (cells, out)
}
