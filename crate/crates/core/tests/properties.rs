mod common;

use std::collections::{BTreeMap, HashSet};

use common::*;
use framescope::backends::ModelResponse;
use framescope::corpus::{Pos, Split};
use framescope::lexicon::normalize_lemma;
use framescope::parse::{decode_logprobs, parse_response, DecodePath};
use framescope::promptkit::{option_label, render, ExemplarBlock, Granularity, LabelMap, PromptConfig, PromptFormat};
use framescope::seeds::derive_seed;
use proptest::prelude::*;

const LABELLED: [PromptFormat; 3] = [PromptFormat::DirectQa, PromptFormat::QaFinetune, PromptFormat::DefEval];

fn format() -> impl Strategy<Value = PromptFormat> {
    prop::sample::select(vec![
        PromptFormat::Simple,
        PromptFormat::DirectQa,
        PromptFormat::QaFinetune,
        PromptFormat::DefEval,
    ])
}

fn granularity() -> impl Strategy<Value = Granularity> {
    prop::sample::select(Granularity::ALL.to_vec())
}

/// Replies that look like answers, fragments of answers, or noise.
fn reply() -> impl Strategy<Value = String> {
    prop_oneof![
        ".{0,80}",
        "(Answer: )?[A-Z]{1,2}",
        " ?[0-9]{1,3}",
        "\\{\"frame_(Name|Option|definition_Option)\": \"[A-Za-z_ ]{0,20}\"\\}",
        "```json\n\\{\"frame_Option\": \"[A-E]\", \"frame_Name\": \"[A-Za-z_]{1,16}\"\\}\n```",
        "[A-Za-z_]{3,20}",
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn option_labels_are_consecutive_and_distinct(n in 1usize..702) {
        let labels: Vec<String> = (0..n).map(|i| option_label(i).unwrap()).collect();
        prop_assert_eq!(labels[0].as_str(), "A");
        let unique: HashSet<&String> = labels.iter().collect();
        prop_assert_eq!(unique.len(), n);
        for w in labels.windows(2) {
            prop_assert!(w[0].len() < w[1].len() || (w[0].len() == w[1].len() && w[0] < w[1]));
        }
        prop_assert!(option_label(702).is_err());
    }

    #[test]
    fn parse_is_total_and_never_invents_a_frame(
        idx in 0usize..160, fmt in format(), g in granularity(), raw in reply(), seed in 0u64..1000
    ) {
        let lexicon = mini_lexicon();
        let instances = mini_split(Split::Test);
        let inst = &instances[idx % instances.len()];
        let set = lexicon.lookup_candidates(&inst.target_lemma, inst.target_pos).shuffled(seed);
        let prompt = render(inst, &set, &PromptConfig::new(fmt, g, 0), &ExemplarBlock::empty()).unwrap();
        let p = parse_response(&ModelResponse::text(raw.clone()), &prompt);
        match &p.predicted_frame {
            Some(f) => {
                prop_assert!(prompt.candidates.contains(f), "{} not offered", f);
                prop_assert_ne!(p.decode_path, DecodePath::Failed);
            }
            None => prop_assert_eq!(p.decode_path, DecodePath::Failed),
        }
        if let Some(label) = &p.label {
            prop_assert_eq!(prompt.label_map.get(label), p.predicted_frame.as_deref());
        }
    }

    #[test]
    fn label_maps_are_injective(idx in 0usize..160, fmt in prop::sample::select(LABELLED.to_vec()), seed in 0u64..1000) {
        let lexicon = mini_lexicon();
        let instances = mini_split(Split::Test);
        let inst = &instances[idx % instances.len()];
        let set = lexicon.lookup_candidates(&inst.target_lemma, inst.target_pos).shuffled(seed);
        let prompt = render(inst, &set, &PromptConfig::new(fmt, Granularity::Names, 0), &ExemplarBlock::empty()).unwrap();
        let frames: HashSet<&str> = prompt.label_map.frames().collect();
        prop_assert_eq!(frames.len(), prompt.label_map.len());
        prop_assert_eq!(prompt.label_map.len(), set.len());
        for (i, (label, frame)) in prompt.label_map.iter().enumerate() {
            prop_assert_eq!(label, option_label(i).unwrap());
            prop_assert_eq!(prompt.label_map.label_of(frame), Some(label));
        }
    }

    #[test]
    fn logprob_argmax_ignores_a_common_shift(
        scores in prop::collection::vec(-30.0f64..0.0, 1..12), shift in -50.0f64..50.0
    ) {
        let labels = LabelMap::new((0..scores.len()).map(|i| (option_label(i).unwrap(), format!("F{i}"))).collect());
        let base: BTreeMap<String, f64> = labels.labels().zip(&scores).map(|(l, s)| (l.to_string(), *s)).collect();
        let shifted: BTreeMap<String, f64> = base.iter().map(|(l, s)| (l.clone(), s + shift)).collect();
        let a = decode_logprobs(&base, &labels).unwrap();
        prop_assert_eq!(&a, &decode_logprobs(&shifted, &labels).unwrap());
        // brute force: first label holding the maximum
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let first = scores.iter().position(|s| *s == max).unwrap();
        prop_assert_eq!(a.0, option_label(first).unwrap());
    }

    #[test]
    fn lookup_is_pure_and_matches_a_scan(lemma in prop::sample::select(vec!["know", "Know", " country ", "serve", "run", "glimmer", "city"]),
                                         pos in prop::sample::select(vec![Pos::V, Pos::N, Pos::A])) {
        let lexicon = mini_lexicon();
        let a = lexicon.lookup_candidates(lemma, pos);
        let b = lexicon.lookup_candidates(lemma, pos);
        prop_assert_eq!(&a, &b);
        let key = normalize_lemma(lemma);
        let mut expected: Vec<&str> = Vec::new();
        for lu in lexicon.units() {
            if normalize_lemma(&lu.lemma) == key && lu.pos == pos && !expected.contains(&lu.frame_name.as_str()) {
                expected.push(&lu.frame_name);
            }
        }
        prop_assert_eq!(a.frame_names(), expected);
    }

    #[test]
    fn render_is_pure(idx in 0usize..160, fmt in format(), g in granularity(), shots in 0usize..4, seed in 0u64..50) {
        let lexicon = mini_lexicon();
        let instances = mini_split(Split::Test);
        let train = mini_split(Split::Train);
        let inst = &instances[idx % instances.len()];
        let set = lexicon.lookup_candidates(&inst.target_lemma, inst.target_pos).shuffled(seed);
        let config = PromptConfig::new(fmt, g, if fmt == PromptFormat::QaFinetune { 0 } else { shots });
        let chosen = framescope::promptkit::select_exemplars(&train, config.shots, derive_seed(seed, "ex"), config.exemplar_strategy).unwrap();
        let block = ExemplarBlock::prepare(chosen, &config, |i| lexicon.lookup_candidates(&i.target_lemma, i.target_pos)).unwrap();
        let a = render(inst, &set, &config, &block).unwrap();
        let b = render(inst, &set, &config, &block).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn shuffle_is_a_seeded_permutation(idx in 0usize..29, seed in any::<u64>()) {
        let lexicon = mini_lexicon();
        let lu = &lexicon.units()[idx];
        let set = lexicon.lookup_candidates(&lu.lemma, lu.pos);
        let s1 = set.shuffled(seed);
        prop_assert_eq!(&s1, &set.shuffled(seed));
        let mut a = set.frame_names();
        let mut b = s1.frame_names();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}
