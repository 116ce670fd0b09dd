//! Command implementations behind the `attn` binary.
//!
//! Settings come from built-in defaults, then the TOML file given with
//! `--config`, then command-line flags; later sources win.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classify::{
    classify_name_in_context, classify_name_in_text, estimate_cost, evaluate_classifier, read_label_file,
    remote_request, write_label_file, ClassifierContext, Evaluation, LabelRow, LabelSet, LabelSource,
    LabeledUtterance, NatureLexicon, Pricing, RemoteClassifier, RemoteConfig, TokenUsage,
};
use crate::corpus::{describe_corpus, load_transcripts, preprocess, CorpusSummary, Roster, SessionRecord};
use crate::metrics::Denominator;
use crate::studies::{
    build_corpus, emit_report, read_report, render_tables, run_study, Aggregation, Analysis, StudyConfig, StudyId,
    StudyReport,
};
use crate::synth::{
    generate, null_scenario, paper_scenario, truth_check, GeneratorConfig, SamplingMode, Tolerances, TruthRecord,
};
use crate::{Error, Result};

/// Overrides the remote classifier endpoint from the config file and the
/// `remote:URL` classifier choice.
pub const ENDPOINT_ENV: &str = "ATTN_CLASSIFIER_URL";

pub const LABELS_FILE: &str = "labels.csv";
pub const SUMMARY_FILE: &str = "corpus_summary.json";
pub const EVALUATION_FILE: &str = "evaluation.json";

/// Which labeler produces recipient and nature labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifierChoice {
    NameText,
    NameContext,
    Remote(String),
    Gold,
}

impl ClassifierChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierChoice::NameText => "name_text",
            ClassifierChoice::NameContext => "name_context",
            ClassifierChoice::Remote(_) => "remote",
            ClassifierChoice::Gold => "gold",
        }
    }

    fn source(&self) -> LabelSource {
        match self {
            ClassifierChoice::NameText => LabelSource::HeuristicText,
            ClassifierChoice::NameContext => LabelSource::HeuristicContext,
            ClassifierChoice::Remote(_) => LabelSource::Remote,
            ClassifierChoice::Gold => LabelSource::Gold,
        }
    }
}

impl FromStr for ClassifierChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<ClassifierChoice> {
        match s {
            "name_text" => Ok(ClassifierChoice::NameText),
            "name_context" => Ok(ClassifierChoice::NameContext),
            "gold" => Ok(ClassifierChoice::Gold),
            "remote" => Ok(ClassifierChoice::Remote(String::new())),
            _ => match s.strip_prefix("remote:") {
                Some(url) if !url.is_empty() => Ok(ClassifierChoice::Remote(url.to_string())),
                _ => Err(Error::Config(format!(
                    "unknown classifier `{s}`; expected name_text, name_context, remote:URL or gold"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Effects sized to the published estimates.
    #[default]
    Paper,
    /// No planted effects.
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub scenario: Scenario,
    pub n_pairs: usize,
    pub sampling: SamplingMode,
    /// Full generator settings; replaces `scenario`, `n_pairs` and
    /// `sampling` when given. The run seed still applies.
    pub generator: Option<GeneratorConfig>,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            scenario: Scenario::Paper,
            n_pairs: 1000,
            sampling: SamplingMode::Iid,
            generator: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub transcripts: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub gold_labels: Option<PathBuf>,
    /// Labels used by `run-studies`; falls back to `gold_labels`.
    pub labels: Option<PathBuf>,
    /// name_text, name_context, remote:URL or gold.
    pub classifier: Option<String>,
    pub denominator: Denominator,
    pub study: StudyConfig,
    pub studies: Vec<StudyId>,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub truth: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub remote: RemoteConfig,
    pub lexicon: NatureLexicon,
    pub synth: SynthSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            transcripts: None,
            roster: None,
            gold_labels: None,
            labels: None,
            classifier: None,
            denominator: Denominator::default(),
            study: StudyConfig::default(),
            studies: StudyId::ALL.to_vec(),
            out: PathBuf::from("out"),
            seed: 0,
            jobs: None,
            truth: None,
            tolerances: Tolerances::default(),
            remote: RemoteConfig::default(),
            lexicon: NatureLexicon::default(),
            synth: SynthSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The configured classifier. A remote endpoint comes from the
    /// environment if set, else from `remote:URL`, else from `[remote]`.
    pub fn classifier_choice(&self, env_endpoint: Option<String>) -> Result<ClassifierChoice> {
        let raw = self
            .classifier
            .as_deref()
            .ok_or_else(|| Error::Config("no classifier chosen".into()))?;
        Ok(match raw.parse()? {
            ClassifierChoice::Remote(url) => ClassifierChoice::Remote(
                env_endpoint
                    .filter(|u| !u.is_empty())
                    .or((!url.is_empty()).then_some(url))
                    .unwrap_or_else(|| self.remote.endpoint.clone()),
            ),
            other => other,
        })
    }

    fn ensure_out(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out)
            .map_err(|e| Error::Config(format!("output directory {}: {e}", self.out.display())))?;
        Ok(&self.out)
    }
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    let p = path
        .as_deref()
        .ok_or_else(|| Error::Config(format!("no {what} path given")))?;
    if !p.exists() {
        return Err(Error::InvalidInput(format!("{what} file {} does not exist", p.display())));
    }
    Ok(p)
}

fn load_inputs(cfg: &RunConfig) -> Result<(Vec<SessionRecord>, Roster)> {
    let sessions = load_transcripts(required(&cfg.transcripts, "transcripts")?)?;
    let roster = Roster::load(required(&cfg.roster, "roster")?)?;
    Ok((sessions, roster))
}

fn kept_sessions(cfg: &RunConfig) -> Result<Vec<SessionRecord>> {
    let (sessions, roster) = load_inputs(cfg)?;
    Ok(preprocess(sessions, &roster).into_iter().filter(SessionRecord::kept).collect())
}

fn source_of(annotator_id: &str) -> LabelSource {
    match annotator_id {
        "name_text" => LabelSource::HeuristicText,
        "name_context" => LabelSource::HeuristicContext,
        "remote" => LabelSource::Remote,
        _ => LabelSource::Gold,
    }
}

fn label_set_from_file(path: &Path) -> Result<LabelSet> {
    let rows = read_label_file(path)?;
    LabelSet::new(rows.iter().map(|r| {
        LabeledUtterance::new(r.session_id.clone(), r.utterance_index, r.recipient, r.nature, source_of(&r.annotator_id))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub n_sessions: usize,
    pub n_kept: usize,
    pub exclusions: BTreeMap<String, usize>,
    pub kept: CorpusSummary,
}

impl IngestSummary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sessions: {} (kept {})", self.n_sessions, self.n_kept);
        for (reason, n) in &self.exclusions {
            let _ = writeln!(out, "excluded {reason}: {n}");
        }
        let _ = writeln!(out, "{:<12}{:>14}{:>12}{:>12}", "", "total", "mean", "sd");
        for (name, m) in [
            ("duration_s", &self.kept.duration_s),
            ("words", &self.kept.words),
            ("utterances", &self.kept.utterances),
        ] {
            let sd = m.sd.map_or("-".to_string(), |v| format!("{v:.2}"));
            let _ = writeln!(out, "{name:<12}{:>14.2}{:>12.2}{sd:>12}", m.total, m.mean);
        }
        out
    }
}

/// Parses, links, trims and filters the corpus and summarizes what is kept.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestSummary> {
    let (sessions, roster) = load_inputs(cfg)?;
    let processed = preprocess(sessions, &roster);
    let mut exclusions = BTreeMap::new();
    for s in &processed {
        if let Some(r) = s.exclusion {
            *exclusions.entry(r.as_str().to_string()).or_insert(0) += 1;
        }
    }
    let n_sessions = processed.len();
    let kept: Vec<SessionRecord> = processed.into_iter().filter(SessionRecord::kept).collect();
    let summary = IngestSummary {
        n_sessions,
        n_kept: kept.len(),
        exclusions,
        kept: describe_corpus(&kept)?,
    };
    let out = cfg.ensure_out()?;
    fs::write(out.join(SUMMARY_FILE), format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
    Ok(summary)
}

/// Labels every kept utterance with the configured classifier and writes
/// the label file. Returns its path and the number of labels.
pub fn cmd_classify(cfg: &RunConfig) -> Result<(PathBuf, usize)> {
    let choice = cfg.classifier_choice(std::env::var(ENDPOINT_ENV).ok())?;
    let sessions = kept_sessions(cfg)?;
    let mut targets = Vec::new();
    for s in &sessions {
        for (ctx, u) in ClassifierContext::for_session(&s.utterances).into_iter().zip(&s.utterances) {
            targets.push((s.session_id.as_str(), u.index, ctx));
        }
    }
    let labels: Vec<LabeledUtterance> = match &choice {
        ClassifierChoice::NameText | ClassifierChoice::NameContext => targets
            .iter()
            .map(|(sid, idx, ctx)| {
                let recipient = if choice == ClassifierChoice::NameText {
                    classify_name_in_text(&ctx.target)
                } else {
                    classify_name_in_context(ctx)
                };
                LabeledUtterance::new(*sid, *idx, recipient, cfg.lexicon.label(&ctx.target), choice.source())
            })
            .collect(),
        ClassifierChoice::Gold => {
            let gold = label_set_from_file(required(&cfg.gold_labels, "gold labels")?)?;
            targets
                .iter()
                .map(|(sid, idx, _)| {
                    gold.get(sid, *idx).cloned().ok_or_else(|| Error::Unlabeled {
                        session_id: sid.to_string(),
                        index: *idx,
                    })
                })
                .collect::<Result<_>>()?
        }
        ClassifierChoice::Remote(endpoint) => {
            let client = RemoteClassifier::new(RemoteConfig {
                endpoint: endpoint.clone(),
                ..cfg.remote.clone()
            })?;
            let requests: Vec<_> = targets.iter().map(|(sid, idx, ctx)| remote_request(sid, *idx, ctx)).collect();
            info!("classifying {} utterances at {endpoint}", requests.len());
            client.classify_many(&requests)?
        }
    };
    let set = LabelSet::new(labels)?;
    let path = cfg.ensure_out()?.join(LABELS_FILE);
    write_label_file(&path, &set.to_rows(choice.name()))?;
    Ok((path, set.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSettings {
    pub pricing: Pricing,
    pub per_transcript: TokenUsage,
    pub n_transcripts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub recipient: Evaluation,
    pub nature: Evaluation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_cost: Option<f64>,
}

/// Scores predictions against gold labels, matched by session and
/// utterance index. Every prediction needs a gold label.
pub fn cmd_evaluate(predictions: &Path, gold: &Path, cost: Option<&CostSettings>, out: &Path) -> Result<EvaluationReport> {
    let pred = read_label_file(predictions)?;
    if pred.is_empty() {
        return Err(Error::InsufficientData(format!("{} holds no predictions", predictions.display())));
    }
    let gold_rows = read_label_file(gold)?;
    let gold_by_key: BTreeMap<(&str, usize), &LabelRow> =
        gold_rows.iter().map(|r| ((r.session_id.as_str(), r.utterance_index), r)).collect();
    let mut matched = Vec::with_capacity(pred.len());
    for p in &pred {
        let g = gold_by_key.get(&(p.session_id.as_str(), p.utterance_index)).ok_or_else(|| {
            Error::InvalidInput(format!(
                "prediction for session {}, utterance {} has no gold label",
                p.session_id, p.utterance_index
            ))
        })?;
        matched.push((p, *g));
    }
    let recipient = evaluate_classifier(
        &matched.iter().map(|(p, _)| p.recipient).collect::<Vec<_>>(),
        &matched.iter().map(|(_, g)| g.recipient).collect::<Vec<_>>(),
    )?;
    let nature = evaluate_classifier(
        &matched.iter().map(|(p, _)| p.nature).collect::<Vec<_>>(),
        &matched.iter().map(|(_, g)| g.nature).collect::<Vec<_>>(),
    )?;
    let estimated_cost = cost
        .map(|c| estimate_cost(&[c.per_transcript], c.pricing, c.n_transcripts))
        .transpose()?;
    let report = EvaluationReport {
        n: matched.len(),
        recipient,
        nature,
        estimated_cost,
    };
    fs::create_dir_all(out)?;
    fs::write(out.join(EVALUATION_FILE), format!("{}\n", serde_json::to_string_pretty(&report)?))?;
    Ok(report)
}

/// Runs the configured studies, writes their reports and, when a truth
/// record is configured, checks the estimates against it.
pub fn cmd_run_studies(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (sessions, roster) = load_inputs(cfg)?;
    let labels_path = match (&cfg.labels, &cfg.gold_labels) {
        (Some(_), _) => required(&cfg.labels, "labels")?,
        (None, Some(_)) => required(&cfg.gold_labels, "gold labels")?,
        (None, None) => return Err(Error::Config("no labels path given".into())),
    };
    let labels = label_set_from_file(labels_path)?;
    let corpus = build_corpus(sessions, &roster, &labels, cfg.denominator)?;
    // All studies run before anything is written.
    let reports = cfg
        .studies
        .iter()
        .map(|&study| run_study(study, &corpus, &cfg.study))
        .collect::<Result<Vec<_>>>()?;
    let out = cfg.ensure_out()?;
    let mut written = Vec::new();
    for report in &reports {
        written.extend(emit_report(report, out)?);
    }
    if let Some(truth_path) = &cfg.truth {
        let truth = TruthRecord::from_json(&fs::read_to_string(truth_path)?)?;
        let check = truth_check(&truth, &reports, &cfg.tolerances)?;
        let path = out.join(format!("{}.truth_check.txt", truth.run_id));
        fs::write(&path, check.render())?;
        written.push(path);
        let failures = check.failures().count();
        if failures > 0 {
            return Err(Error::TruthCheckFailed {
                failures,
                total: check.verdicts.len(),
            });
        }
    }
    Ok(written)
}

/// Generator settings after applying the run seed.
pub fn generator_config(cfg: &RunConfig) -> GeneratorConfig {
    let mut g = match &cfg.synth.generator {
        Some(g) => g.clone(),
        None => {
            let mut g = match cfg.synth.scenario {
                Scenario::Paper => paper_scenario(cfg.seed, cfg.synth.n_pairs),
                Scenario::Null => null_scenario(cfg.seed, cfg.synth.n_pairs),
            };
            g.sampling = cfg.synth.sampling;
            g
        }
    };
    g.seed = cfg.seed;
    g
}

/// Writes a synthetic corpus with gold labels and its truth record.
pub fn cmd_synth(cfg: &RunConfig) -> Result<(TruthRecord, Vec<PathBuf>)> {
    let corpus = generate(&generator_config(cfg))?;
    let paths = corpus.write(cfg.ensure_out()?)?;
    Ok((corpus.truth, paths))
}

fn render_report(report: &StudyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {} (run {}) ==", report.study, report.run_id);
    for (key, analysis) in &report.analyses {
        match analysis {
            Analysis::Gap(g) => {
                let t = &g.test;
                let _ = writeln!(
                    out,
                    "{key}: {:+.3} pp [{:.3}, {:.3}] t={:.3} p={:.4} pairs={}{}",
                    t.mean_difference,
                    t.ci_low,
                    t.ci_high,
                    t.statistic,
                    t.p_value,
                    g.n_pairs,
                    if g.low_n { " low_n" } else { "" }
                );
            }
            Analysis::Bound(b) => {
                let _ = writeln!(
                    out,
                    "{key}: gap {:+.3} pp, ambiguity range {:.3} pp, residual {:+.3} pp",
                    b.gap_pp, b.ambiguity_range_pp, b.residual_gap_pp
                );
            }
            Analysis::Describe(s) => {
                let _ = writeln!(
                    out,
                    "{key}: mean {:.4} sd {} n {}",
                    s.mean,
                    s.sd.map_or("-".to_string(), |v| format!("{v:.4}")),
                    s.n
                );
            }
            Analysis::Regression(_) => {}
        }
    }
    out.push_str(&render_tables(report));
    for n in &report.notices {
        let _ = writeln!(out, "notice: {n}");
    }
    out
}

/// Renders report files; directories contribute every report they hold.
pub fn cmd_report(paths: &[PathBuf]) -> Result<String> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|f| {
                let name = f.file_name().and_then(|n| n.to_str()).unwrap_or("");
                StudyId::ALL.iter().any(|s| name.ends_with(&format!(".{}.json", s.as_str())))
            });
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::InvalidInput("no report files found".into()));
    }
    let mut out = String::new();
    for f in files {
        out.push_str(&render_report(&read_report(&f)?));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Parser)]
#[command(name = "attn", version, about = "Tutor attention accounting and analyses")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// error, warn, info, debug or trace; also accepts env_logger filters.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    #[arg(long)]
    pub roster: Option<PathBuf>,
}

fn parse_snake<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_denominator(s: &str) -> std::result::Result<Denominator, String> {
    parse_snake(s)
}

fn parse_aggregation(s: &str) -> std::result::Result<Aggregation, String> {
    parse_snake(s)
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    parse_snake(s)
}

fn parse_study(s: &str) -> std::result::Result<StudyId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and filter a corpus and print its summary.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Label every kept utterance.
    Classify {
        #[command(flatten)]
        input: InputArgs,
        /// name_text, name_context, remote:URL or gold.
        #[arg(long)]
        classifier: Option<String>,
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Score predicted labels against gold labels.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Price per million input tokens; enables the cost estimate.
        #[arg(long, requires_all = ["output_price", "input_tokens", "output_tokens"])]
        input_price: Option<f64>,
        #[arg(long)]
        output_price: Option<f64>,
        /// Tokens sent per transcript.
        #[arg(long)]
        input_tokens: Option<u64>,
        #[arg(long)]
        output_tokens: Option<u64>,
        #[arg(long, default_value_t = 100.0)]
        n_transcripts: f64,
    },
    /// Run the analyses and write their reports.
    RunStudies {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Comma-separated subset of study1, study2, study3, robustness.
        #[arg(long, value_delimiter = ',', value_parser = parse_study)]
        studies: Option<Vec<StudyId>>,
        #[arg(long, value_parser = parse_denominator)]
        denominator: Option<Denominator>,
        #[arg(long, value_parser = parse_aggregation)]
        aggregation: Option<Aggregation>,
        /// Truth record to check the estimates against.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Default truth-check tolerance in percentage points.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Generate a synthetic corpus with planted effects.
    Synth {
        #[arg(long, value_parser = parse_scenario)]
        scenario: Option<Scenario>,
        #[arg(long)]
        pairs: Option<usize>,
        /// Realize target shares exactly instead of sampling labels.
        #[arg(long)]
        exact: bool,
    },
    /// Print report files or directories of reports.
    Report { paths: Vec<PathBuf> },
}

fn apply_input(cfg: &mut RunConfig, input: &InputArgs) {
    if let Some(t) = &input.transcripts {
        cfg.transcripts = Some(t.clone());
    }
    if let Some(r) = &input.roster {
        cfg.roster = Some(r.clone());
    }
}

/// Resolves the run configuration: defaults, then the file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    match &cli.command {
        Command::Ingest { input } => apply_input(&mut cfg, input),
        Command::Classify { input, classifier, gold } => {
            apply_input(&mut cfg, input);
            if let Some(c) = classifier {
                cfg.classifier = Some(c.clone());
            }
            if let Some(g) = gold {
                cfg.gold_labels = Some(g.clone());
            }
        }
        Command::RunStudies {
            input,
            labels,
            studies,
            denominator,
            aggregation,
            truth,
            tolerance,
        } => {
            apply_input(&mut cfg, input);
            if let Some(l) = labels {
                cfg.labels = Some(l.clone());
            }
            if let Some(s) = studies {
                cfg.studies = s.clone();
            }
            if let Some(d) = denominator {
                cfg.denominator = *d;
            }
            if let Some(a) = aggregation {
                cfg.study.aggregation = *a;
            }
            if let Some(t) = truth {
                cfg.truth = Some(t.clone());
            }
            if let Some(t) = tolerance {
                cfg.tolerances.default_pp = *t;
            }
        }
        Command::Synth { scenario, pairs, exact } => {
            if let Some(s) = scenario {
                cfg.synth.scenario = *s;
            }
            if let Some(n) = pairs {
                cfg.synth.n_pairs = *n;
            }
            if *exact {
                cfg.synth.sampling = SamplingMode::Exact;
            }
        }
        Command::Evaluate { gold, .. } => {
            if let Some(g) = gold {
                cfg.gold_labels = Some(g.clone());
            }
        }
        Command::Report { .. } => {}
    }
    Ok(cfg)
}

/// Executes one parsed command line; the returned text goes to stdout.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = resolve_config(cli)?;
    if let Some(j) = cfg.jobs {
        // Only the first call in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let mut out = String::new();
    match &cli.command {
        Command::Ingest { .. } => out = cmd_ingest(&cfg)?.render(),
        Command::Classify { .. } => {
            let (path, n) = cmd_classify(&cfg)?;
            let _ = writeln!(out, "{n} labels written to {}", path.display());
        }
        Command::Evaluate {
            predictions,
            input_price,
            output_price,
            input_tokens,
            output_tokens,
            n_transcripts,
            ..
        } => {
            let gold = required(&cfg.gold_labels, "gold labels")?;
            let cost = match (input_price, output_price, input_tokens, output_tokens) {
                (Some(ip), Some(op), Some(it), Some(ot)) => Some(CostSettings {
                    pricing: Pricing {
                        input_per_million: *ip,
                        output_per_million: *op,
                    },
                    per_transcript: TokenUsage {
                        input_tokens: *it,
                        output_tokens: *ot,
                    },
                    n_transcripts: *n_transcripts,
                }),
                _ => None,
            };
            let r = cmd_evaluate(predictions, gold, cost.as_ref(), cfg.ensure_out()?)?;
            let _ = writeln!(
                out,
                "n={} recipient macro_f1={:.4} accuracy={:.4} nature macro_f1={:.4} accuracy={:.4}",
                r.n, r.recipient.macro_f1, r.recipient.accuracy, r.nature.macro_f1, r.nature.accuracy
            );
            if let Some(c) = r.estimated_cost {
                let _ = writeln!(out, "estimated cost for {n_transcripts} transcripts: {c:.2}");
            }
        }
        Command::RunStudies { .. } => {
            for p in cmd_run_studies(&cfg)? {
                let _ = writeln!(out, "{}", p.display());
            }
        }
        Command::Synth { .. } => {
            let (truth, paths) = cmd_synth(&cfg)?;
            let _ = writeln!(out, "run_id {}", truth.run_id);
            for p in paths {
                let _ = writeln!(out, "{}", p.display());
            }
        }
        Command::Report { paths } => {
            let paths = if paths.is_empty() { vec![cfg.out.clone()] } else { paths.clone() };
            out = cmd_report(&paths)?;
        }
    }
    Ok(out)
}

/// Entry point of the binary: exit status 0 on success, 1 on any error,
/// 2 on usage errors.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log_level).try_init();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
