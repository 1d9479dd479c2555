//! Acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion over all of them. Run with `--nocapture` to see the table.

mod common;

use std::collections::HashMap;
use std::env;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::*;
use framescope::backends::{
    build_backend, BackendConfig, BackendIdentity, BackendKind, CachedBackend, ModelResponse, OraclePolicy,
};
use framescope::corpus::{convert, DataRoot, Dataset, LexiconVersion, Split};
use framescope::evalkit::{compare_errors, gold_map, run_eval, EvalInputs, EvalReport, RunSpec, FEW_SHOT_K};
use framescope::parse::parse_response;
use framescope::promptkit::{Granularity, PromptConfig, PromptFormat};

const ORACLE_P: f64 = 0.8;
const ORACLE_P_TOL: f64 = 0.03;
const LIVE_DIRECT_QA: (f64, f64) = (83.5, 2.0);
const LIVE_DEF_EVAL: (f64, f64) = (78.4, 2.5);

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome::Pass(detail.into())
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome::Fail(detail.into())
}

fn golden_prompts() -> Outcome {
    let mismatched: Vec<&str> = golden_renders()
        .into_iter()
        .filter(|(file, prompt)| prompt.text != golden_text(file))
        .map(|(file, _)| file)
        .collect();
    if mismatched.is_empty() {
        pass("6/6 byte-identical")
    } else {
        fail(format!("mismatch: {}", mismatched.join(", ")))
    }
}

fn granularity_exclusivity() -> Outcome {
    let (cells, violations) = sentinel_violations(&tiny_lexicon());
    match (cells, violations.first()) {
        (8, None) => pass("8/8 cells"),
        (n, None) => fail(format!("{n} cells rendered, expected 8")),
        (_, Some(v)) => fail(format!("{} violation(s), first: {v}", violations.len())),
    }
}

fn oracle_end_to_end() -> Outcome {
    let lexicon = mini_lexicon();
    let instances = synthetic_instances(&lexicon, 1000, Split::Test);
    let inputs = EvalInputs { lexicon: &lexicon, instances: &instances, train: &[], definitions: None };
    let run = |policy: OraclePolicy, seeds: Vec<u64>| {
        let mut spec = mock_spec(policy, PromptFormat::DirectQa, 0);
        spec.seeds = seeds;
        let backend = build_backend(&spec.backend, gold_map(&spec, &instances)).unwrap();
        run_eval(&spec, &inputs, backend.as_ref(), None).map(|r| r.mean_accuracy)
    };
    let gold = match run(OraclePolicy::always_gold(), vec![1]) {
        Ok(a) => a,
        Err(e) => return fail(e.to_string()),
    };
    let noisy = match run(OraclePolicy::accuracy(ORACLE_P, 1), vec![1, 2, 3]) {
        Ok(a) => a,
        Err(e) => return fail(e.to_string()),
    };
    let detail = format!("always_gold={gold:.3} accuracy_p({ORACLE_P})={noisy:.3} (tol {ORACLE_P_TOL})");
    if gold == 1.0 && (noisy - ORACLE_P).abs() <= ORACLE_P_TOL {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn parser_suite() -> Outcome {
    let mut wrong = Vec::new();
    for case in PARSER_CASES {
        let prompt = country_prompt(case.format);
        let p = parse_response(&ModelResponse::text(case.raw), &prompt);
        if p.predicted_frame.as_deref() != case.frame || p.decode_path != case.path {
            wrong.push(case.name);
        }
    }
    let decode_paths: std::collections::BTreeSet<_> = PARSER_CASES.iter().map(|c| c.path).collect();
    if PARSER_CASES.len() < 12 {
        fail(format!("only {} cases", PARSER_CASES.len()))
    } else if !wrong.is_empty() {
        fail(format!("wrong: {}", wrong.join(", ")))
    } else {
        pass(format!("{} cases, {} decode paths", PARSER_CASES.len(), decode_paths.len()))
    }
}

fn overlap_identities() -> Outcome {
    let hand_a = [
        row("1", Some("X"), "G1"),
        row("2", Some("Y"), "G2"),
        row("3", Some("Z"), "G3"),
        row("4", Some("G4"), "G4"),
        row("5", Some("G5"), "G5"),
    ];
    let hand_b = [
        row("1", Some("X"), "G1"),
        row("2", Some("W"), "G2"),
        row("3", Some("G3"), "G3"),
        row("4", Some("V"), "G4"),
        row("5", Some("G5"), "G5"),
    ];
    let r = compare_errors(&hand_a, &hand_b).unwrap();
    let hand = (r.wrong_a, r.wrong_b, r.common_wrong, r.agreeing_wrong, r.disagreeing_wrong);
    if hand != (3, 3, 2, 1, 1) {
        return fail(format!("hand fixture gave {hand:?}"));
    }
    // seeded random trials; the proptest target covers the same identities
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let frames = ["F0", "F1", "F2", "F3"];
    for trial in 0..1000 {
        let n = rng.gen_range(0..30);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..n {
            let gold = frames[rng.gen_range(0..4)];
            let pick =
                |rng: &mut rand_chacha::ChaCha8Rng| (rng.gen_range(0..5) < 4).then(|| frames[rng.gen_range(0..4)]);
            let (pa, pb) = (pick(&mut rng), pick(&mut rng));
            a.push(row(&i.to_string(), pa, gold));
            b.push(row(&i.to_string(), pb, gold));
        }
        let r = compare_errors(&a, &b).unwrap();
        if r.common_wrong != r.agreeing_wrong + r.disagreeing_wrong || r.common_wrong > r.wrong_a.min(r.wrong_b) {
            return fail(format!("identity broken on trial {trial}"));
        }
    }
    pass("hand (3,3,2,1,1); 1000 trials")
}

fn counts(root: &DataRoot, dataset: Dataset) -> Result<Vec<(Split, usize)>, String> {
    root.split_sizes(dataset).map_err(|e| e.to_string())
}

/// Accepts a converted data root or a raw release directory.
fn licensed_counts(path: &Path, dataset: Dataset) -> Result<Vec<(Split, usize)>, String> {
    let root = DataRoot::new(path);
    if root.dataset_dir(dataset).is_dir() {
        return counts(&root, dataset);
    }
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    convert(dataset, path, out.path(), None, Default::default()).map_err(|e| e.to_string())?;
    counts(&DataRoot::new(out.path()), dataset)
}

fn split_accounting() -> Outcome {
    let mut licensed = Vec::new();
    for (var, dataset) in [("FRAMESCOPE_FN15_DATA", Dataset::Fn15), ("FRAMESCOPE_FN17_DATA", Dataset::Fn17)] {
        if let Some(path) = env::var_os(var) {
            let got = match licensed_counts(Path::new(&path), dataset) {
                Ok(c) => c,
                Err(e) => return fail(format!("{dataset}: {e}")),
            };
            for (split, n) in &got {
                if dataset.expected_size(*split) != Some(*n) {
                    return fail(format!("{dataset} {split}: {n}, expected {:?}", dataset.expected_size(*split)));
                }
            }
            if got.len() != 3 {
                return fail(format!("{dataset}: only {} split(s) found", got.len()));
            }
            licensed
                .push(format!("{dataset} {}", got.iter().map(|(_, n)| n.to_string()).collect::<Vec<_>>().join("/")));
        }
    }
    let mini = match counts(&DataRoot::new(mini_root()), Dataset::Fn17) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if mini != vec![(Split::Train, 100), (Split::Dev, 20), (Split::Test, 40)] {
        return fail(format!("mini corpus counts {mini:?}"));
    }
    let out = tempfile::tempdir().unwrap();
    let raw = match convert(Dataset::Fn17, &fixtures().join("raw_fn17"), out.path(), None, Default::default()) {
        Ok(s) => s,
        Err(e) => return fail(format!("raw fixture: {e}")),
    };
    let raw_counts: Vec<usize> = raw.splits.iter().map(|(_, n)| *n).collect();
    if raw_counts != [4, 2, 3] {
        return fail(format!("raw fixture counts {raw_counts:?}"));
    }
    if licensed.is_empty() {
        pass("mini 100/20/40, raw fixture 4/2/3 (licensed data not configured)")
    } else {
        pass(format!("{}; mini and raw fixture ok", licensed.join(", ")))
    }
}

fn aggregate_json(r: &EvalReport) -> String {
    serde_json::to_string(&(&r.per_run, r.mean_accuracy, &r.breakdowns)).unwrap()
}

fn determinism() -> Outcome {
    let lexicon = mini_lexicon();
    let instances = synthetic_instances(&lexicon, 200, Split::Test);
    let train = mini_split(Split::Train);
    let inputs = EvalInputs { lexicon: &lexicon, instances: &instances, train: &train, definitions: None };
    let mut spec = mock_spec(OraclePolicy::accuracy(0.7, 3), PromptFormat::DirectQa, 2);
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let live = CachedBackend::open(&cache, build_backend(&spec.backend, gold_map(&spec, &instances)).unwrap()).unwrap();
    let first = run_eval(&spec, &inputs, &live, None).unwrap();
    drop(live);
    let replay = CachedBackend::replay(&cache, BackendIdentity::of(&spec.backend)).unwrap();
    let second = run_eval(&spec, &inputs, &replay, None).unwrap();
    if first.to_json() != second.to_json() {
        return fail("replayed report differs");
    }
    let mut aggregates = Vec::new();
    for parallelism in [1, 8] {
        spec.backend.parallelism = parallelism;
        let backend = build_backend(&spec.backend, gold_map(&spec, &instances)).unwrap();
        aggregates.push(aggregate_json(&run_eval(&spec, &inputs, backend.as_ref(), None).unwrap()));
    }
    if aggregates[0] != aggregates[1] {
        return fail("parallelism 1 and 8 disagree");
    }
    pass("replay byte-identical; parallelism 1 == 8")
}

fn live_spec(endpoint: &str, model: &str, prompt: PromptConfig) -> RunSpec {
    let mut backend = BackendConfig::http(BackendKind::ChatHttp, endpoint, model);
    backend.api_key_env = env::var("FRAMESCOPE_LIVE_API_KEY_ENV").ok();
    RunSpec::new(Dataset::Fn17, Split::Test, prompt, backend)
}

fn live_reference() -> Outcome {
    let (Ok(endpoint), Ok(data)) = (env::var("FRAMESCOPE_LIVE_ENDPOINT"), env::var("FRAMESCOPE_LIVE_DATA")) else {
        return Outcome::NotRun("set FRAMESCOPE_LIVE_ENDPOINT and FRAMESCOPE_LIVE_DATA".into());
    };
    let model = env::var("FRAMESCOPE_LIVE_MODEL").unwrap_or_else(|_| "Llama-3.1-8B-Instruct".into());
    let root = DataRoot::new(PathBuf::from(data));
    let load = || -> Result<_, String> {
        let lexicon = root.load_lexicon(LexiconVersion::Fn17).map_err(|e| e.to_string())?;
        let test = root.load_split(Dataset::Fn17, Split::Test).map_err(|e| e.to_string())?;
        let train = root.load_split(Dataset::Fn17, Split::Train).map_err(|e| e.to_string())?;
        Ok((lexicon, test, train))
    };
    let (lexicon, test, train) = match load() {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    let inputs = EvalInputs { lexicon: &lexicon, instances: &test, train: &train, definitions: None };
    let runs = [
        ("direct_qa", PromptConfig::new(PromptFormat::DirectQa, Granularity::NamesLuDefs, FEW_SHOT_K), LIVE_DIRECT_QA),
        ("def_eval", PromptConfig::new(PromptFormat::DefEval, Granularity::NamesDefs, 0), LIVE_DEF_EVAL),
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (name, prompt, (target, tol)) in runs {
        let spec = live_spec(&endpoint, &model, prompt);
        let backend = match build_backend(&spec.backend, HashMap::new()) {
            Ok(b) => b,
            Err(e) => return fail(e.to_string()),
        };
        let acc = match run_eval(&spec, &inputs, backend.as_ref(), None) {
            Ok(r) => r.mean_accuracy * 100.0,
            Err(e) => return fail(format!("{name}: {e}")),
        };
        ok &= (acc - target).abs() <= tol;
        details.push(format!("{name} {acc:.1} (target {target} ± {tol})"));
    }
    let detail = details.join("; ");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

const CRITERIA: &[Criterion] = &[
    Criterion { name: "golden prompts", budget: Some(Duration::from_secs(1)), check: golden_prompts },
    Criterion { name: "granularity exclusivity", budget: Some(Duration::from_secs(1)), check: granularity_exclusivity },
    Criterion { name: "oracle end-to-end", budget: Some(Duration::from_secs(10)), check: oracle_end_to_end },
    Criterion { name: "parser suite", budget: Some(Duration::from_secs(1)), check: parser_suite },
    Criterion { name: "overlap identities", budget: Some(Duration::from_secs(5)), check: overlap_identities },
    Criterion { name: "split accounting", budget: None, check: split_accounting },
    Criterion { name: "determinism", budget: None, check: determinism },
    Criterion { name: "live reference accuracy", budget: None, check: live_reference },
];

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for c in CRITERIA {
        let started = Instant::now();
        let outcome = (c.check)();
        let elapsed = started.elapsed();
        let over = c.budget.filter(|b| elapsed > *b);
        let (status, detail) = match (outcome, over) {
            (Outcome::Pass(d), None) => ("PASS", d),
            (Outcome::Pass(d), Some(b)) => ("FAIL", format!("{d}; took {elapsed:.2?}, budget {b:?}")),
            (Outcome::Fail(d), _) => ("FAIL", d),
            (Outcome::NotRun(d), _) => ("NOT RUN", d),
        };
        println!("{status:<7} {:<26} {:>9.3}s  {detail}", c.name, elapsed.as_secs_f64());
        if status == "FAIL" {
            failed.push(c.name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
