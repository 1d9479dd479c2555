mod common;

use common::*;
use framescope::corpus::{Pos, Split};
use framescope::promptkit::{
    render, select_exemplars, ExemplarBlock, ExemplarStrategy, Granularity, PromptConfig, PromptFormat,
};

#[test]
fn granularity_cells_contain_exactly_their_sentinels() {
    let lexicon = tiny_lexicon();
    assert_eq!(lexicon.counts(), (3, 5));
    let (cells, violations) = sentinel_violations(&lexicon);
    assert_eq!(cells, 8);
    assert!(violations.is_empty(), "{violations:#?}");
}

#[test]
fn names_only_prompt_has_no_definition_text() {
    let lexicon = mini_lexicon();
    let inst = &golden_instances()["country"];
    let set = lexicon.lookup_candidates("country", Pos::N);
    let text =
        render(inst, &set, &PromptConfig::new(PromptFormat::Simple, Granularity::Names, 0), &ExemplarBlock::empty())
            .unwrap()
            .text;
    for c in &set.candidates {
        assert!(text.contains(&c.frame_name));
        assert!(!text.contains(&c.frame_definition));
        assert!(!text.contains(&c.lu_sense_definition));
    }
}

#[test]
fn direct_qa_options_block_round_trips_through_label_map() {
    let lexicon = mini_lexicon();
    let inst = &golden_instances()["know"];
    let set = lexicon.lookup_candidates("know", Pos::V).shuffled(99);
    let prompt =
        render(inst, &set, &PromptConfig::new(PromptFormat::DirectQa, Granularity::Names, 0), &ExemplarBlock::empty())
            .unwrap();
    let rebuilt: Vec<String> = prompt.label_map.iter().map(|(l, f)| format!("{l}. Frame: {f}")).collect();
    let block = prompt.text.split("Options:\n").nth(1).unwrap();
    assert_eq!(block, rebuilt.join("\n"));
    let labels: Vec<&str> = prompt.label_map.labels().collect();
    assert_eq!(labels, ["A", "B", "C", "D"]);
}

#[test]
fn exemplars_cover_distinct_frames_on_the_mini_train_split() {
    let train = mini_split(Split::Train);
    let picked = select_exemplars(&train, 5, 7, ExemplarStrategy::Diverse).unwrap();
    let again = select_exemplars(&train, 5, 7, ExemplarStrategy::Diverse).unwrap();
    assert_eq!(picked, again);
    let frames: std::collections::BTreeSet<&str> = picked.iter().map(|i| i.gold_frame.as_str()).collect();
    assert_eq!(frames.len(), 5);
    assert!(picked.iter().all(|i| i.split == Split::Train));
    assert!(select_exemplars(&train[..3], 5, 7, ExemplarStrategy::Diverse).is_err());
}

#[test]
fn few_shot_prompt_excludes_the_query_and_repeats_the_template() {
    let lexicon = mini_lexicon();
    let train = mini_split(Split::Train);
    let config = PromptConfig::new(PromptFormat::DirectQa, Granularity::NamesLuDefs, 5);
    let picked = select_exemplars(&train, 5, 3, ExemplarStrategy::Diverse).unwrap();
    let query = picked[0].clone();
    let block =
        ExemplarBlock::prepare(picked, &config, |i| lexicon.lookup_candidates(&i.target_lemma, i.target_pos)).unwrap();
    let set = lexicon.lookup_candidates(&query.target_lemma, query.target_pos);
    let text = render(&query, &set, &config, &block).unwrap().text;
    assert_eq!(text.matches("Answer: {\"frame_Option\"").count(), 4);
    assert!(text.contains("Now the actual question:"));
    assert!(text.trim_end().ends_with(&set.candidates.last().unwrap().frame_name.to_string()));
}
