//! Command-line interface: train the parser, parse documents, score
//! predictions, and inspect stage-by-stage decisions for one connective.
//!
//! Exit codes: 0 on success, 2 for I/O and format problems, 3 when a
//! training stage has no usable data, 4 when a model file was written by
//! an incompatible version.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use discourse::arguments::{self, identify_arguments};
use discourse::connective::{self, scan_candidates};
use discourse::corpus::{
    read_document, read_lexicon, read_relations, read_relations_standalone, write_relations,
    ConnectiveLexiconEntry, DiscourseRelation, Document,
};
use discourse::eval::{
    baseline1_parse, evaluate, render_json, render_text, train_baseline1, Baseline1Stats,
    MatchMode,
};
use discourse::maxent::MODEL_FORMAT_VERSION;
use discourse::pipeline::{
    self, load_models, parse_document, save_models, train_all, ParserConfig, TrainedModels,
};
use discourse::sense;
use discourse::syntax;

#[derive(Parser)]
#[command(
    name = "discourse",
    about = "A shallow discourse parser: explicit connectives, their arguments \
             and senses, and implicit relations between adjacent sentences."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train all pipeline stages on documents with gold relations.
    Train {
        /// Directory of document JSON files (and, by default, lexicon.txt).
        #[arg(long)]
        docs: PathBuf,
        /// Directory of gold relation JSON files, one per document stem.
        #[arg(long)]
        gold: PathBuf,
        /// Output directory for the model bundle.
        #[arg(long)]
        out: PathBuf,
        /// Optional key=value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Parse documents into relation files using a trained bundle.
    Parse {
        /// Directory of document JSON files.
        #[arg(long)]
        docs: PathBuf,
        /// Model bundle directory written by `train`.
        #[arg(long)]
        models: PathBuf,
        /// Output directory for relation JSON files.
        #[arg(long)]
        out: PathBuf,
        /// Use the frequency baseline instead of the trained pipeline.
        #[arg(long)]
        baseline1: bool,
    },
    /// Score predicted relation files against gold ones.
    Eval {
        /// Directory of predicted relation files.
        #[arg(long)]
        pred: PathBuf,
        /// Directory of gold relation files.
        #[arg(long)]
        gold: PathBuf,
        /// Accept arguments that overlap at least 70% in both directions.
        #[arg(long)]
        partial: bool,
    },
    /// Show every stage's decision for one connective candidate.
    Inspect {
        /// A document JSON file.
        #[arg(long)]
        doc: PathBuf,
        /// Model bundle directory written by `train`.
        #[arg(long)]
        models: PathBuf,
        /// Candidate number in scan order, starting at 0.
        #[arg(long)]
        connective: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Io(String),
    Training(String),
    Version(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 2,
            CliError::Training(_) => 3,
            CliError::Version(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Training(m) | CliError::Version(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            docs,
            gold,
            out,
            config,
        } => cmd_train(&docs, &gold, &out, config.as_deref()),
        Command::Parse {
            docs,
            models,
            out,
            baseline1,
        } => cmd_parse(&docs, &models, &out, baseline1),
        Command::Eval {
            pred,
            gold,
            partial,
        } => cmd_eval(&pred, &gold, partial),
        Command::Inspect {
            doc,
            models,
            connective,
        } => cmd_inspect(&doc, &models, connective),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.code())
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Files the tool itself writes into a prediction directory; never treated
/// as relation files.
const REPORT_FILES: [&str; 2] = ["report.json", "report.txt"];

/// The `.json` files of a directory as sorted (stem, path) pairs.
fn json_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("cannot read directory {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry =
            entry.map_err(|e| CliError::Io(format!("cannot list {}: {e}", dir.display())))?;
        let path = entry.path();
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if path.extension().is_some_and(|e| e == "json")
            && !REPORT_FILES.contains(&name.as_ref())
        {
            let stem = path
                .file_stem()
                .expect("a .json path always has a stem")
                .to_string_lossy()
                .into_owned();
            files.push((stem, path));
        }
    }
    if files.is_empty() {
        return Err(CliError::Io(format!(
            "no .json files found in {}",
            dir.display()
        )));
    }
    files.sort();
    Ok(files)
}

/// Pairs two directories of JSON files by file stem; any stem present on
/// only one side is an error.
fn aligned_stems(
    left: &Path,
    right: &Path,
    left_kind: &str,
    right_kind: &str,
) -> Result<Vec<(String, PathBuf, PathBuf)>, CliError> {
    let lefts = json_files(left)?;
    let rights: BTreeMap<String, PathBuf> = json_files(right)?.into_iter().collect();
    let mut missing: Vec<String> = Vec::new();
    let mut pairs = Vec::new();
    for (stem, path) in &lefts {
        match rights.get(stem) {
            Some(other) => pairs.push((stem.clone(), path.clone(), other.clone())),
            None => missing.push(format!("{stem} has a {left_kind} file but no {right_kind} file")),
        }
    }
    let left_stems: BTreeMap<&str, ()> = lefts.iter().map(|(s, _)| (s.as_str(), ())).collect();
    for stem in rights.keys() {
        if !left_stems.contains_key(stem.as_str()) {
            missing.push(format!("{stem} has a {right_kind} file but no {left_kind} file"));
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Io(missing.join("; ")));
    }
    Ok(pairs)
}

fn load_document(path: &Path) -> Result<Document, CliError> {
    let text = read_file(path)?;
    read_document(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Reads the configuration file: `key=value` lines, `#` comments. The
/// `lexicon` key names the connective lexicon; its path is resolved
/// relative to the configuration file. All other keys go to the parser
/// configuration. Without a file (or a `lexicon` key) the lexicon is
/// `lexicon.txt` inside the document directory.
fn load_config(
    config_path: Option<&Path>,
    docs: &Path,
) -> Result<(ParserConfig, PathBuf), CliError> {
    let mut config = ParserConfig::default();
    let mut lexicon = docs.join(pipeline::LEXICON_FILE);
    if let Some(path) = config_path {
        let text = read_file(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Io(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "lexicon" {
                lexicon = base.join(value);
            } else {
                config.set(key, value).map_err(|e| {
                    CliError::Io(format!("{}:{}: {e}", path.display(), lineno + 1))
                })?;
            }
        }
    }
    config
        .validate()
        .map_err(|e| CliError::Io(format!("invalid configuration: {e}")))?;
    Ok((config, lexicon))
}

fn load_lexicon(path: &Path) -> Result<Vec<ConnectiveLexiconEntry>, CliError> {
    let text = read_file(path)?;
    read_lexicon(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Loads a model bundle plus its lexicon and the configuration echoed in
/// its manifest.
fn load_bundle(
    dir: &Path,
) -> Result<(TrainedModels, Vec<ConnectiveLexiconEntry>, ParserConfig), CliError> {
    let models = load_models(dir).map_err(|e| {
        if e.is_version_mismatch() {
            CliError::Version(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    })?;
    let lexicon = load_lexicon(&dir.join(pipeline::LEXICON_FILE))?;
    let manifest_path = dir.join(pipeline::MANIFEST_FILE);
    let manifest: serde_json::Value = serde_json::from_str(&read_file(&manifest_path)?)
        .map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
    let mut config = ParserConfig::default();
    if let Some(settings) = manifest.get("config").and_then(|v| v.as_object()) {
        for (key, value) in settings {
            let value = value.as_str().ok_or_else(|| {
                CliError::Io(format!(
                    "{}: configuration value for {key} is not a string",
                    manifest_path.display()
                ))
            })?;
            config.set(key, value).map_err(|e| {
                CliError::Io(format!("{}: {e}", manifest_path.display()))
            })?;
        }
    }
    Ok((models, lexicon, config))
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

fn cmd_train(
    docs: &Path,
    gold: &Path,
    out: &Path,
    config_path: Option<&Path>,
) -> Result<(), CliError> {
    let (config, lexicon_path) = load_config(config_path, docs)?;
    let lexicon = load_lexicon(&lexicon_path)?;

    let mut corpus = Vec::new();
    let mut inputs = BTreeMap::new();
    for (stem, doc_path, gold_path) in aligned_stems(docs, gold, "document", "gold")? {
        let doc_text = read_file(&doc_path)?;
        let gold_text = read_file(&gold_path)?;
        let doc = read_document(&doc_text)
            .map_err(|e| CliError::Io(format!("{}: {e}", doc_path.display())))?;
        let relations = read_relations(&gold_text, &doc)
            .map_err(|e| CliError::Io(format!("{}: {e}", gold_path.display())))?;
        inputs.insert(
            stem,
            serde_json::json!({
                "doc_sha256": sha256_hex(&doc_text),
                "gold_sha256": sha256_hex(&gold_text),
            }),
        );
        corpus.push((doc, relations));
    }

    let (models, diagnostics) =
        train_all(&corpus, &lexicon, &config).map_err(|e| CliError::Training(e.to_string()))?;
    for diagnostic in &diagnostics {
        eprintln!("note: {diagnostic}");
    }

    fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    save_models(out, &models, &lexicon)
        .map_err(|e| CliError::Io(format!("cannot write models to {}: {e}", out.display())))?;

    let baseline = train_baseline1(&corpus, &lexicon);
    let mut baseline_json =
        serde_json::to_string_pretty(&baseline).expect("baseline statistics always serialize");
    baseline_json.push('\n');
    write_file(&out.join(pipeline::BASELINE_FILE), &baseline_json)?;

    let manifest = serde_json::json!({
        "model_format_version": MODEL_FORMAT_VERSION,
        "config": config.summary(),
        "documents": corpus.len(),
        "inputs": inputs,
    });
    let mut manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifests always serialize");
    manifest_json.push('\n');
    write_file(&out.join(pipeline::MANIFEST_FILE), &manifest_json)?;

    println!(
        "trained 5 models on {} documents; bundle written to {}",
        corpus.len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// parse
// ---------------------------------------------------------------------------

fn cmd_parse(docs: &Path, models_dir: &Path, out: &Path, baseline1: bool) -> Result<(), CliError> {
    let (models, lexicon, config) = load_bundle(models_dir)?;
    let baseline: Option<Baseline1Stats> = if baseline1 {
        let path = models_dir.join(pipeline::BASELINE_FILE);
        let stats = serde_json::from_str(&read_file(&path)?)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Some(stats)
    } else {
        None
    };

    fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    let mut documents = 0usize;
    let mut total_relations = 0usize;
    for (stem, path) in json_files(docs)? {
        let doc = load_document(&path)?;
        let relations: Vec<DiscourseRelation> = match &baseline {
            Some(stats) => baseline1_parse(&doc, &lexicon, stats),
            None => {
                let (relations, diagnostics) = parse_document(&doc, &lexicon, &models, &config);
                for diagnostic in diagnostics {
                    eprintln!("note: {diagnostic}");
                }
                relations
            }
        };
        total_relations += relations.len();
        documents += 1;
        write_file(&out.join(format!("{stem}.json")), &write_relations(&relations))?;
    }
    println!(
        "parsed {documents} documents into {total_relations} relations; output in {}",
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn cmd_eval(pred: &Path, gold: &Path, partial: bool) -> Result<(), CliError> {
    let mode = if partial {
        MatchMode::Partial
    } else {
        MatchMode::Exact
    };
    let mut pairs = Vec::new();
    for (stem, pred_path, gold_path) in aligned_stems(pred, gold, "prediction", "gold")? {
        let _ = stem;
        let predicted = read_relations_standalone(&read_file(&pred_path)?)
            .map_err(|e| CliError::Io(format!("{}: {e}", pred_path.display())))?;
        let golden = read_relations_standalone(&read_file(&gold_path)?)
            .map_err(|e| CliError::Io(format!("{}: {e}", gold_path.display())))?;
        pairs.push((predicted, golden));
    }
    let report = evaluate(&pairs, mode);
    let text = render_text(&report);
    print!("{text}");
    write_file(&pred.join("report.txt"), &text)?;
    write_file(&pred.join("report.json"), &render_json(&report))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// inspect
// ---------------------------------------------------------------------------

fn cmd_inspect(doc_path: &Path, models_dir: &Path, index: usize) -> Result<(), CliError> {
    let doc = load_document(doc_path)?;
    let (models, lexicon, config) = load_bundle(models_dir)?;
    let candidates = scan_candidates(&doc, &lexicon);
    let Some(cand) = candidates.get(index) else {
        return Err(CliError::Io(format!(
            "document {} has {} connective candidates; index {index} is out of range",
            doc.id,
            candidates.len()
        )));
    };

    println!(
        "candidate {index}: '{}' (tokens {:?}, sentence {}, category {})",
        cand.text(&doc),
        cand.span.indices(),
        cand.sentence,
        cand.entry.category
    );

    println!("\nstage 1: connective identification");
    let features = connective::connective_features(&doc, cand);
    for feature in features.iter() {
        println!("  {feature}");
    }
    let p = models.connective.prob_of(&features, connective::DISCOURSE);
    let decision = if p > config.threshold { "discourse" } else { "not discourse" };
    println!("  P(discourse) = {p:.4} vs threshold {} -> {decision}", config.threshold);

    println!("\nstage 2: argument identification");
    let conn_head = arguments::span_head(&doc, &cand.span);
    for (name, model, candidates) in [
        (
            "Arg1",
            &models.arg1,
            arguments::arg1_candidates(&doc, &cand.span, config.step_bound),
        ),
        ("Arg2", &models.arg2, arguments::arg2_candidates(&doc, &cand.span)),
    ] {
        println!("  {name} head candidates:");
        for &token in &candidates {
            let features =
                arguments::argument_features(&doc, &cand.span, Some(cand.entry.category), token);
            let p = model.prob_of(&features, arguments::HEAD);
            println!(
                "    token {token} '{}': P(head) = {p:.4}, {} steps",
                doc.token(token).text,
                syntax::step_distance(&doc, token, conn_head)
            );
        }
    }
    match identify_arguments(&doc, cand, &models.arg1, &models.arg2, config.step_bound) {
        Ok(extracted) => {
            for note in &extracted.notes {
                println!("  note: {note}");
            }
            println!("  Arg1 = {:?} '{}'", extracted.arg1.indices(), extracted.arg1.words(&doc));
            println!("  Arg2 = {:?} '{}'", extracted.arg2.indices(), extracted.arg2.words(&doc));
        }
        Err(reason) => println!("  no arguments: {reason}"),
    }

    println!("\nstage 3: sense classification");
    let features =
        sense::explicit_sense_features(&doc, &cand.span, Some(cand.entry.category));
    for feature in features.iter() {
        println!("  {feature}");
    }
    let probabilities = models.explicit_sense.predict(&features);
    for (label, probability) in models.explicit_sense.labels().iter().zip(&probabilities) {
        println!("  P({label}) = {probability:.4}");
    }
    let class = sense::classify_explicit(&doc, &cand.span, Some(cand.entry.category), &models.explicit_sense);
    println!("  sense = {class}");
    Ok(())
}
