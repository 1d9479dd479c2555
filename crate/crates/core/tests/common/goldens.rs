use framescope::backends::{BackendConfig, OraclePolicy};
use framescope::corpus::{ArtifactEntry, Dataset, Split};
use framescope::defprobe::{DefinitionSource, DefinitionStore};
use framescope::evalkit::{prompt_candidates, EvalInputs, RunSpec};
use framescope::lexicon::CandidateMode;
use framescope::promptkit::{
    render, render_artifacts, render_def_gen, ExemplarBlock, Granularity, PromptConfig, PromptFormat, RenderedPrompt,
};

use super::{fixtures, golden_instances, mini_lexicon};

pub const GOLDEN_MODEL: &str = "Llama-3.1-8B-Instruct";

pub fn render_plain(key: &str, format: PromptFormat, granularity: Granularity) -> RenderedPrompt {
    let lexicon = mini_lexicon();
    let inst = &golden_instances()[key];
    let set = lexicon.lookup_candidates(&inst.target_lemma, inst.target_pos);
    render(inst, &set, &PromptConfig::new(format, granularity, 0), &ExemplarBlock::empty()).unwrap()
}

pub fn render_abacus() -> RenderedPrompt {
    render_artifacts(&ArtifactEntry::from_instance(&golden_instances()["abacus"])).unwrap()
}

pub fn render_know_def_eval() -> RenderedPrompt {
    let lexicon = mini_lexicon();
    let store = DefinitionStore::load(&fixtures().join(format!("golden/definitions/{GOLDEN_MODEL}.jsonl"))).unwrap();
    let inst = golden_instances()["know"].clone();
    let mut spec = RunSpec::new(
        Dataset::Fn17,
        Split::Test,
        PromptConfig::new(PromptFormat::DefEval, Granularity::NamesDefs, 0),
        BackendConfig::mock(OraclePolicy::always_gold()),
    );
    spec.shuffle_candidates = false;
    spec.definitions = DefinitionSource::Generated(GOLDEN_MODEL.into());
    let instances = [inst.clone()];
    let inputs = EvalInputs { lexicon: &lexicon, instances: &instances, train: &[], definitions: Some(&store) };
    let set = prompt_candidates(&spec, &inputs, &inst, 1, CandidateMode::Filtered).unwrap();
    render(&inst, &set, &spec.prompt, &ExemplarBlock::empty()).unwrap()
}

/// (golden file, rendered prompt) for every golden fixture.
pub fn golden_renders() -> Vec<(&'static str, RenderedPrompt)> {
    vec![
        ("country_simple_names_lu_defs.txt", render_plain("country", PromptFormat::Simple, Granularity::NamesLuDefs)),
        (
            "country_direct_qa_names_lu_defs.txt",
            render_plain("country", PromptFormat::DirectQa, Granularity::NamesLuDefs),
        ),
        ("abacus_artifacts.txt", render_abacus()),
        ("complex_qa_finetune.txt", render_plain("complex", PromptFormat::QaFinetune, Granularity::NamesDefsLuDefs)),
        ("awareness_def_gen.txt", render_def_gen("Awareness")),
        ("know_def_eval_generated.txt", render_know_def_eval()),
    ]
}
