mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use framescope::corpus::{Dataset, LexiconVersion, Pos, Split};
use framescope::defprobe::DefinitionSource;
use framescope::promptkit::{Granularity, PromptFormat};

use crate::config::{parse_seeds, AppConfig, ConfigLayer};

/// Frame identification with instruction-tuned language models.
#[derive(Debug, Parser)]
#[command(name = "framescope", version, propagate_version = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON config file (also FRAMESCOPE_CONFIG)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory holding lexicons/ and datasets/
    #[arg(long, global = true, value_name = "DIR")]
    data_root: Option<PathBuf>,
    /// Where run directories are created
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Backend profile from the config
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Comma-separated seeds, used when a spec names none
    #[arg(long, global = true, value_parser = parse_seed_list)]
    seeds: Option<Vec<u64>>,
    /// error, warn, info, debug or trace
    #[arg(long, global = true)]
    log_level: Option<String>,
}

fn parse_seed_list(s: &str) -> Result<Vec<u64>, String> {
    parse_seeds(s).map_err(|e| format!("{e:#}"))
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert raw corpora into the interchange layout
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Query the frame lexicon
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Inspect prompts
    #[command(subcommand)]
    Prompt(PromptCmd),
    /// Run, compare and report evaluations
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Generate frame definitions and evaluate them
    #[command(subcommand)]
    Defprobe(DefprobeCmd),
}

#[derive(Debug, Subcommand)]
enum CorpusCmd {
    /// Convert a FrameNet release, YAGS TSVs or the Artifacts list
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PoolArg {
    Fulltext,
    Exemplars,
    Both,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    dataset: Dataset,
    /// Raw input directory
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    /// Output data root (default: the configured data root)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Split manifest for FrameNet releases (default: <in>/splits.json)
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,
    /// FrameNet annotation pool to draw instances from
    #[arg(long, value_enum, default_value = "fulltext")]
    pool: PoolArg,
}

#[derive(Debug, Subcommand)]
enum LexiconCmd {
    /// Print the candidate frames for a lemma and part of speech
    Lookup(LookupArgs),
}

#[derive(Debug, Args)]
struct LookupArgs {
    lemma: String,
    /// v, n, a, adv, prep, ...
    pos: Pos,
    /// Lexicon release
    #[arg(long, default_value = "fn17")]
    lexicon: LexiconVersion,
}

#[derive(Debug, Subcommand)]
enum PromptCmd {
    /// Render the prompt an evaluation would send for one instance
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    format: PromptFormat,
    #[arg(long, default_value = "names_defs_lu_defs")]
    granularity: Granularity,
    #[arg(long, value_name = "ID")]
    instance: String,
    #[arg(long, default_value = "fn17")]
    dataset: Dataset,
    /// Split to search (default: all splits)
    #[arg(long)]
    split: Option<Split>,
    #[arg(long, default_value_t = 0)]
    shots: usize,
    /// Seed for option order and exemplars (default: first configured seed)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "gold")]
    definitions: DefinitionSource,
    /// Keep lexicon order instead of shuffling options
    #[arg(long)]
    no_shuffle: bool,
    /// Print the rendered prompt with its label map as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum EvalCmd {
    /// Evaluate one run spec
    Run(RunArgs),
    /// Evaluate a grid of prompt configurations over a base spec
    Ablate(AblateArgs),
    /// Compare the errors of two prediction files
    Compare(CompareArgs),
    /// Rebuild a run's report from its spec and response cache
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run spec JSON
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    /// Run directory (default: <cache-dir>/<timestamp>-<hash8>)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Evaluate only the first N instances
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GridArg {
    /// Both formats x four granularities x zero/few-shot
    Default,
    /// Both formats x four granularities, few-shot, ambiguous subset
    Ambiguous,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[arg(long, value_enum, default_value = "default")]
    grid: GridArg,
    /// Base spec supplying data, backend and seeds
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    /// Few-shot exemplar count
    #[arg(long, default_value_t = framescope::evalkit::FEW_SHOT_K)]
    shots: usize,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, value_name = "FILE")]
    a: PathBuf,
    #[arg(long, value_name = "FILE")]
    b: PathBuf,
    #[arg(long, default_value = "A")]
    name_a: String,
    #[arg(long, default_value = "B")]
    name_b: String,
    /// Print the full comparison, with instance ids, as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Run directory holding spec.json and cache.jsonl
    #[arg(long, value_name = "DIR")]
    cache: PathBuf,
    /// Where to write the rebuilt report (default: <cache>/replay)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print report JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum DefprobeCmd {
    /// Ask a model to define every frame from its name alone
    Generate(GenerateArgs),
    /// Evaluate def_eval prompts with gold or generated definitions
    Eval(DefEvalArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Generator model name sent to the endpoint
    #[arg(long)]
    model: String,
    /// Lexicon release
    #[arg(long, default_value = "fn17")]
    lexicon: LexiconVersion,
    /// Output JSONL (default: <data-root>/definitions/<model>.jsonl)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DefEvalArgs {
    /// gold or generated:<model>
    #[arg(long)]
    source: DefinitionSource,
    /// Run spec; its format is forced to def_eval
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Used without --spec
    #[arg(long, default_value = "fn17")]
    dataset: Dataset,
    /// Used without --spec
    #[arg(long, default_value = "test")]
    split: Split,
    /// Used without --spec
    #[arg(long, default_value_t = 0)]
    shots: usize,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    limit: Option<usize>,
}

fn resolve_config(global: &GlobalArgs) -> anyhow::Result<AppConfig> {
    let file = global.config.clone().or_else(|| std::env::var_os("FRAMESCOPE_CONFIG").map(PathBuf::from));
    let flags = ConfigLayer {
        data_root: global.data_root.clone(),
        cache_dir: global.cache_dir.clone(),
        profiles: Default::default(),
        default_profile: global.profile.clone(),
        seeds: global.seeds.clone(),
        log_level: global.log_level.clone(),
    };
    AppConfig::resolve(file.as_deref(), std::env::vars(), flags)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = resolve_config(&cli.global)?;
    env_logger::Builder::new().parse_filters(&config.log_level).target(env_logger::Target::Stderr).init();
    log::debug!("resolved config: {}", serde_json::to_string(&config)?);
    let config = commands::Ctx { config, profile_flag: cli.global.profile.clone() };
    match cli.command {
        Command::Corpus(CorpusCmd::Convert(a)) => commands::corpus_convert(&config, a),
        Command::Lexicon(LexiconCmd::Lookup(a)) => commands::lexicon_lookup(&config, a),
        Command::Prompt(PromptCmd::Render(a)) => commands::prompt_render(&config, a),
        Command::Eval(EvalCmd::Run(a)) => commands::eval_run(&config, a),
        Command::Eval(EvalCmd::Ablate(a)) => commands::eval_ablate(&config, a),
        Command::Eval(EvalCmd::Compare(a)) => commands::eval_compare(a),
        Command::Eval(EvalCmd::Report(a)) => commands::eval_report(&config, a),
        Command::Defprobe(DefprobeCmd::Generate(a)) => commands::defprobe_generate(&config, a),
        Command::Defprobe(DefprobeCmd::Eval(a)) => commands::defprobe_eval(&config, a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().filter_map(|c| c.downcast_ref::<std::io::Error>()).any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}
