use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use framescope::backends::{build_backend, BackendIdentity, CachedBackend};
use framescope::corpus::{self, framenet::InstancePool, AnnotatedInstance, DataRoot, Dataset, Split};
use framescope::defprobe::{
    eval_with_definitions, generate_definitions, store_path, DefinitionSource, DefinitionStore,
};
use framescope::evalkit::{
    ambiguous_grid, compare_errors, default_grid, gold_map, read_predictions, render_for, run_ablation, run_eval,
    write_report, EvalInputs, EvalReport, RunSpec, Subset,
};
use framescope::lexicon::Lexicon;
use framescope::promptkit::{PromptConfig, PromptFormat};
use serde_json::Value;

use crate::config::AppConfig;
use crate::{
    AblateArgs, CompareArgs, ConvertArgs, DefEvalArgs, GenerateArgs, GridArg, LookupArgs, PoolArg, RenderArgs,
    ReportArgs, RunArgs,
};

/// `print!` that returns write errors instead of panicking.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        write!(std::io::stdout().lock(), $($t)*)?
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout().lock(), $($t)*)?
    }};
}

pub struct Ctx {
    pub config: AppConfig,
    /// `--profile` as given on the command line; overrides a spec's backend.
    pub profile_flag: Option<String>,
}

impl std::ops::Deref for Ctx {
    type Target = AppConfig;

    fn deref(&self) -> &AppConfig {
        &self.config
    }
}

fn data_root(ctx: &Ctx) -> DataRoot {
    DataRoot::new(&ctx.data_root)
}

fn definitions_dir(ctx: &Ctx) -> PathBuf {
    ctx.data_root.join("definitions")
}

/// Reads a spec file. A missing `backend` comes from the active profile and
/// missing `seeds` from the configured defaults.
fn load_spec(ctx: &Ctx, path: &Path) -> Result<RunSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading spec {}", path.display()))?;
    let mut value: Value = serde_json::from_str(&text).with_context(|| format!("parsing spec {}", path.display()))?;
    let obj = value.as_object_mut().with_context(|| format!("spec {} is not a JSON object", path.display()))?;
    if !obj.contains_key("backend") || ctx.profile_flag.is_some() {
        obj.insert("backend".into(), serde_json::to_value(ctx.profile(ctx.profile_flag.as_deref())?)?);
    }
    if !obj.contains_key("seeds") {
        obj.insert("seeds".into(), serde_json::to_value(&ctx.seeds)?);
    }
    let spec: RunSpec = serde_json::from_value(value).with_context(|| format!("invalid spec {}", path.display()))?;
    spec.validate()?;
    Ok(spec)
}

struct Loaded {
    lexicon: Lexicon,
    instances: Vec<AnnotatedInstance>,
    train: Vec<AnnotatedInstance>,
    definitions: Option<DefinitionStore>,
}

impl Loaded {
    fn inputs(&self) -> EvalInputs<'_> {
        EvalInputs {
            lexicon: &self.lexicon,
            instances: &self.instances,
            train: &self.train,
            definitions: self.definitions.as_ref(),
        }
    }
}

fn load_inputs(ctx: &Ctx, spec: &RunSpec, few_shot: bool) -> Result<Loaded> {
    let root = data_root(ctx);
    let lexicon = root
        .load_lexicon(spec.dataset.companion_lexicon())
        .with_context(|| format!("loading lexicon under {}", root.path().display()))?;
    let instances = root.load_split(spec.dataset, spec.split)?;
    let train = if few_shot { root.load_split(spec.dataset.exemplar_source(), Split::Train)? } else { Vec::new() };
    let definitions = match &spec.definitions {
        DefinitionSource::Gold => None,
        DefinitionSource::Generated(model) => {
            let path = store_path(&definitions_dir(ctx), model);
            Some(DefinitionStore::load(&path).with_context(|| format!("loading definitions {}", path.display()))?)
        }
    };
    log::info!("{} {} instances from {}", instances.len(), spec.split, spec.dataset);
    Ok(Loaded { lexicon, instances, train, definitions })
}

fn run_dir(ctx: &Ctx, out: Option<PathBuf>, fingerprint: &str) -> Result<PathBuf> {
    let dir = match out {
        Some(d) => d,
        None => {
            let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
            ctx.cache_dir.join(format!("{stamp}-{}", &fingerprint[..8]))
        }
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_spec(spec: &RunSpec, dir: &Path) -> Result<()> {
    let path = dir.join("spec.json");
    fs::write(&path, serde_json::to_string_pretty(spec)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cached_backend(spec: &RunSpec, instances: &[AnnotatedInstance], dir: &Path) -> Result<CachedBackend> {
    let inner = build_backend(&spec.backend, gold_map(spec, instances))?;
    Ok(CachedBackend::open(dir.join("cache.jsonl"), inner)?)
}

/// Shared tail of `eval run` and `defprobe eval`: run, write, print.
fn execute(ctx: &Ctx, mut spec: RunSpec, out: Option<PathBuf>, limit: Option<usize>) -> Result<()> {
    if limit.is_some() {
        spec.limit = limit;
    }
    let loaded = load_inputs(ctx, &spec, spec.prompt.shots > 0)?;
    let dir = run_dir(ctx, out, &spec.fingerprint())?;
    write_spec(&spec, &dir)?;
    let backend = cached_backend(&spec, &loaded.instances, &dir)?;
    let result = if spec.prompt.format == PromptFormat::DefEval && spec.definitions != DefinitionSource::Gold {
        eval_with_definitions(&spec.definitions, &spec, &loaded.inputs(), &backend, Some(&dir))
            .map_err(anyhow::Error::from)
    } else {
        run_eval(&spec, &loaded.inputs(), &backend, Some(&dir)).map_err(anyhow::Error::from)
    };
    let (hits, misses) = backend.stats();
    log::info!("cache: {hits} hit(s), {misses} miss(es)");
    let report = result.with_context(|| format!("run aborted; partial cache kept in {}", dir.display()))?;
    write_report(&report, &dir)?;
    out!("{}", report.to_text());
    outln!("run directory: {}", dir.display());
    Ok(())
}

pub fn eval_run(ctx: &Ctx, args: RunArgs) -> Result<()> {
    let spec = load_spec(ctx, &args.spec)?;
    execute(ctx, spec, args.out, args.limit)
}

pub fn eval_ablate(ctx: &Ctx, args: AblateArgs) -> Result<()> {
    let mut base = load_spec(ctx, &args.spec)?;
    if args.limit.is_some() {
        base.limit = args.limit;
    }
    let grid = match args.grid {
        GridArg::Default => default_grid(args.shots),
        GridArg::Ambiguous => {
            base.subset = Subset::Ambiguous;
            ambiguous_grid(args.shots)
        }
    };
    let few_shot = grid.iter().any(|c| c.shots > 0);
    let loaded = load_inputs(ctx, &base, few_shot)?;
    let dir = run_dir(ctx, args.out, &base.fingerprint())?;
    write_spec(&base, &dir)?;
    let backend = cached_backend(&base, &loaded.instances, &dir)?;
    let table = run_ablation(&grid, &base, &loaded.inputs(), &backend, Some(&dir));
    fs::write(dir.join("ablation.csv"), table.to_csv())?;
    fs::write(dir.join("ablation.txt"), table.to_text())?;
    out!("{}", table.to_text());
    outln!("run directory: {}", dir.display());
    let failed: Vec<String> = table.cells.iter().filter(|c| c.error.is_some()).map(|c| c.config.row_label()).collect();
    if !failed.is_empty() {
        bail!("{} of {} cells failed: {}", failed.len(), table.cells.len(), failed.join("; "));
    }
    Ok(())
}

pub fn eval_compare(args: CompareArgs) -> Result<()> {
    let a = read_predictions(&args.a).with_context(|| format!("reading {}", args.a.display()))?;
    let b = read_predictions(&args.b).with_context(|| format!("reading {}", args.b.display()))?;
    let report = compare_errors(&a, &b)?;
    if args.json {
        outln!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        out!("{}", report.to_text(&args.name_a, &args.name_b));
    }
    Ok(())
}

/// Re-runs the spec saved in a run directory against its cache alone, so
/// the rebuilt report is byte-identical to the original.
pub fn eval_report(ctx: &Ctx, args: ReportArgs) -> Result<()> {
    let spec_path = args.cache.join("spec.json");
    let text = fs::read_to_string(&spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let spec: RunSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    let loaded = load_inputs(ctx, &spec, spec.prompt.shots > 0)?;
    let backend = CachedBackend::replay(args.cache.join("cache.jsonl"), BackendIdentity::of(&spec.backend))?;
    let out = args.out.unwrap_or_else(|| args.cache.join("replay"));
    let report: EvalReport = run_eval(&spec, &loaded.inputs(), &backend, Some(&out))?;
    write_report(&report, &out)?;
    if args.json {
        out!("{}", report.to_json());
    } else {
        out!("{}", report.to_text());
    }
    Ok(())
}

pub fn corpus_convert(ctx: &Ctx, args: ConvertArgs) -> Result<()> {
    let out = args.out.unwrap_or_else(|| ctx.data_root.clone());
    let pool = match args.pool {
        PoolArg::Fulltext => InstancePool::FullText,
        PoolArg::Exemplars => InstancePool::Exemplars,
        PoolArg::Both => InstancePool::Both,
    };
    let summary = corpus::convert(args.dataset, &args.input, &out, args.manifest.as_deref(), pool)?;
    if let Some((frames, units)) = summary.lexicon {
        outln!("lexicon {}: {frames} frames, {units} lexical units", args.dataset.companion_lexicon());
    }
    for (split, n) in &summary.splits {
        let expected = args.dataset.expected_size(*split).map(|e| format!(" (published: {e})")).unwrap_or_default();
        outln!("{} {split}: {n} instances{expected}", args.dataset);
    }
    outln!("written under {}", out.display());
    Ok(())
}

pub fn lexicon_lookup(ctx: &Ctx, args: LookupArgs) -> Result<()> {
    let lexicon = data_root(ctx).load_lexicon(args.lexicon)?;
    let set = lexicon.lookup_candidates(&args.lemma, args.pos);
    if set.is_empty() {
        eprintln!("no frames for {}.{} in {}", args.lemma, args.pos, args.lexicon);
        return Ok(());
    }
    let width = set.candidates.iter().map(|c| c.frame_name.len()).max().unwrap_or(0).max(5);
    let lu_width = set.candidates.iter().map(|c| c.lu_name.as_deref().unwrap_or("-").len()).max().unwrap_or(0).max(2);
    outln!("{:<width$}  {:<lu_width$}  sense", "frame", "lu");
    for c in &set.candidates {
        outln!(
            "{:<width$}  {:<lu_width$}  {}",
            c.frame_name,
            c.lu_name.as_deref().unwrap_or("-"),
            c.lu_sense_definition
        );
    }
    Ok(())
}

fn find_instance(
    root: &DataRoot,
    dataset: Dataset,
    split: Option<Split>,
    id: &str,
) -> Result<(Split, AnnotatedInstance)> {
    let splits: Vec<Split> = match split {
        Some(s) => vec![s],
        None => dataset.splits().to_vec(),
    };
    for s in splits {
        if !corpus::split_file(&root.dataset_dir(dataset), s).is_file() {
            continue;
        }
        if let Some(found) = root.load_split(dataset, s)?.into_iter().find(|i| i.instance_id == id) {
            return Ok((s, found));
        }
    }
    bail!("instance `{id}` not found in {dataset}")
}

pub fn prompt_render(ctx: &Ctx, args: RenderArgs) -> Result<()> {
    let root = data_root(ctx);
    let (split, instance) = find_instance(&root, args.dataset, args.split, &args.instance)?;
    let prompt = PromptConfig::new(args.format, args.granularity, args.shots);
    prompt.validate()?;
    let mut spec = RunSpec::new(args.dataset, split, prompt, ctx.profile(None)?);
    spec.definitions = args.definitions;
    spec.shuffle_candidates = !args.no_shuffle;
    spec.validate()?;
    let loaded = load_inputs(ctx, &spec, args.shots > 0)?;
    let seed = args.seed.unwrap_or(ctx.seeds[0]);
    let rendered = render_for(&spec, &loaded.inputs(), &instance, seed)?;
    if args.json {
        outln!("{}", serde_json::to_string_pretty(&rendered)?);
    } else {
        outln!("{}", rendered.text);
    }
    Ok(())
}

pub fn defprobe_generate(ctx: &Ctx, args: GenerateArgs) -> Result<()> {
    let lexicon = data_root(ctx).load_lexicon(args.lexicon)?;
    let mut backend_config = ctx.profile(ctx.profile_flag.as_deref())?;
    backend_config.model_name = args.model.clone();
    backend_config.temperature = 0.0;
    let fingerprint = framescope::seeds::fingerprint(&[&args.model, args.lexicon.as_str()]);
    let dir = run_dir(ctx, None, &fingerprint)?;
    let inner = build_backend(&backend_config, Default::default())?;
    let backend = CachedBackend::open(dir.join("cache.jsonl"), inner)?;
    let report = generate_definitions(lexicon.frames(), &backend, backend_config.parallelism)
        .with_context(|| format!("partial cache kept in {}", dir.display()))?;
    let out = args.out.unwrap_or_else(|| store_path(&definitions_dir(ctx), &args.model));
    if let Some(parent) = out.parent() {
        fs::create_dir_all(parent)?;
    }
    report.store.save(&out)?;
    outln!(
        "{} definitions from {} ({} requests, {} missing) written to {}",
        report.store.len(),
        args.model,
        report.requests,
        report.missing.len(),
        out.display()
    );
    for frame in &report.missing {
        outln!("missing: {frame}");
    }
    Ok(())
}

pub fn defprobe_eval(ctx: &Ctx, args: DefEvalArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => load_spec(ctx, path)?,
        None => {
            let prompt = PromptConfig::new(PromptFormat::DefEval, Default::default(), args.shots);
            let mut spec = RunSpec::new(args.dataset, args.split, prompt, ctx.profile(ctx.profile_flag.as_deref())?);
            spec.seeds = ctx.seeds.clone();
            spec
        }
    };
    spec.prompt.format = PromptFormat::DefEval;
    spec.definitions = args.source;
    spec.validate()?;
    execute(ctx, spec, args.out, args.limit)
}
