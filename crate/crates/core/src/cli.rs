//! Command-line driver.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors.
//! Warnings go to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::Config;
use crate::corpus::read_corpus;
use crate::error::{Error, Result};
use crate::generate::{paraphrase, ParaphraseSet, TEMPLATE_CAP};
use crate::lattice::SlottedLattice;
use crate::model::{train, Provenance, TrainSummary, TrainedModel};
use crate::synth;

#[derive(Debug, Parser)]
#[command(name = "paralattice", version, about = "Sentence-level paraphrase induction from comparable corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from two comparable corpora.
    Train {
        #[arg(long)]
        corpus_a: PathBuf,
        #[arg(long)]
        corpus_b: PathBuf,
        /// Configuration file; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 uses every core). Results do not depend on it.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Paraphrase sentences, one per line.
    Paraphrase {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Print one paraphrase per line instead of JSON records.
        #[arg(long)]
        plain: bool,
    },
    /// Print parts of a trained model.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        /// One of lattices, pairs, templates, clusters.
        #[arg(long)]
        what: String,
    },
    /// Write a seeded synthetic pair of corpora.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_a: PathBuf,
        #[arg(long)]
        out_b: PathBuf,
        /// Ground-truth manifest; defaults to `<out-a>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    Lattices,
    Pairs,
    Templates,
    Clusters,
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattices" => Ok(Selector::Lattices),
            "pairs" => Ok(Selector::Pairs),
            "templates" => Ok(Selector::Templates),
            "clusters" => Ok(Selector::Clusters),
            other => Err(Error::UnknownSelector(other.to_string())),
        }
    }
}

/// Parses arguments and runs one command. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_data_error() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Train {
            corpus_a,
            corpus_b,
            config,
            out: model_path,
            workers,
        } => {
            let config = match config {
                Some(p) => Config::from_path(&p)?,
                None => Config::default(),
            };
            let summary = cmd_train(&corpus_a, &corpus_b, &config, &model_path, workers, err)?;
            writeln!(out, "{summary}")?;
            Ok(())
        }
        Command::Paraphrase { model, input, plain } => {
            let model = TrainedModel::load(&model)?;
            let text = std::fs::read_to_string(&input)?;
            let coverage = cmd_paraphrase(&model, &text, plain, out)?;
            writeln!(err, "{coverage}")?;
            Ok(())
        }
        Command::Inspect { model, what } => {
            let selector: Selector = what.parse()?;
            let model = TrainedModel::load(&model)?;
            out.write_all(cmd_inspect(&model, selector).as_bytes())?;
            Ok(())
        }
        Command::Synth {
            seed,
            spec,
            out_a,
            out_b,
            manifest,
        } => {
            let manifest = manifest.unwrap_or_else(|| {
                let mut p = out_a.clone().into_os_string();
                p.push(".manifest.json");
                PathBuf::from(p)
            });
            cmd_synth(seed, &spec, &out_a, &out_b, &manifest, err)
        }
    }
}

fn load_corpus(path: &Path) -> Result<(Vec<u8>, Vec<crate::corpus::Article>)> {
    let bytes = std::fs::read(path)?;
    let articles = read_corpus(BufReader::new(bytes.as_slice()), &path.display().to_string())?;
    Ok((bytes, articles))
}

/// Trains and saves a model, writing warnings to `err`.
pub fn cmd_train(
    corpus_a: &Path,
    corpus_b: &Path,
    config: &Config,
    model_path: &Path,
    workers: usize,
    err: &mut dyn Write,
) -> Result<TrainSummary> {
    let (bytes_a, articles_a) = load_corpus(corpus_a)?;
    let (bytes_b, articles_b) = load_corpus(corpus_b)?;
    let provenance = Provenance::for_inputs(&bytes_a, &bytes_b);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let output = pool.install(|| train(&articles_a, &articles_b, config, provenance))?;
    for w in &output.warnings {
        writeln!(err, "warning: {w}")?;
    }
    output.model.save(model_path)?;
    Ok(output.model.summary())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coverage {
    pub matched: usize,
    pub total: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }
}

impl std::fmt::Display for Coverage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "coverage: {}/{} ({:.1}%)",
            self.matched,
            self.total,
            100.0 * self.fraction()
        )
    }
}

#[derive(Serialize)]
struct Record<'a> {
    line: usize,
    #[serde(flatten)]
    set: &'a ParaphraseSet,
}

/// Paraphrases each non-blank line of `input`.
pub fn cmd_paraphrase(model: &TrainedModel, input: &str, plain: bool, out: &mut dyn Write) -> Result<Coverage> {
    let mut coverage = Coverage { matched: 0, total: 0 };
    for (i, line) in BufReader::new(input.as_bytes()).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let set = paraphrase(line.trim(), model)?;
        coverage.total += 1;
        if set.matched() {
            coverage.matched += 1;
        }
        if plain {
            for o in &set.outputs {
                writeln!(out, "{o}")?;
            }
        } else {
            writeln!(out, "{}", serde_json::to_string(&Record { line: i + 1, set: &set })?)?;
        }
    }
    Ok(coverage)
}

fn render_lattice(sl: &SlottedLattice, out: &mut String) {
    let source = match (sl.corpus, sl.cluster_id) {
        (Some(c), Some(k)) => format!("corpus {c}, cluster {k}, "),
        _ => String::new(),
    };
    let _ = writeln!(out, "lattice {} ({source}{} sentences)", sl.id, sl.sentence_count);
    for n in sl.topological_order().unwrap_or_default() {
        let node = &sl.nodes[n];
        let next: Vec<String> = sl.successors(n).map(|s| s.to_string()).collect();
        let arrow = if next.is_empty() {
            String::new()
        } else {
            format!(" -> {}", next.join(" "))
        };
        let _ = writeln!(
            out,
            "  [{}] {} {} (visits {}){arrow}",
            n, node.kind, node.label, node.visits
        );
    }
}

/// Human-readable dump of one part of a model.
pub fn cmd_inspect(model: &TrainedModel, what: Selector) -> String {
    let mut out = String::new();
    match what {
        Selector::Lattices => {
            for sl in &model.lattices {
                render_lattice(sl, &mut out);
            }
        }
        Selector::Pairs => {
            for p in &model.pairs {
                let map: Vec<String> = p.slot_map.iter().map(|(a, b)| format!("{a}->{b}")).collect();
                let _ = writeln!(
                    out,
                    "{} <-> {} score={:.4} support={} slots: {}",
                    p.source,
                    p.target,
                    p.score,
                    p.support,
                    map.join(" ")
                );
            }
        }
        Selector::Templates => {
            for sl in &model.lattices {
                let t = sl.enumerate_templates(TEMPLATE_CAP);
                let _ = writeln!(out, "{}:", sl.id);
                for template in &t.templates {
                    let _ = writeln!(out, "  {template}");
                }
                if t.truncated {
                    let _ = writeln!(out, "  ... (truncated at {TEMPLATE_CAP})");
                }
            }
        }
        Selector::Clusters => {
            for c in &model.clusters {
                let _ = writeln!(
                    out,
                    "corpus {} cluster {}: {} sentences -> {}",
                    c.corpus, c.id, c.size, c.lattice
                );
            }
        }
    }
    if out.is_empty() {
        out.push_str("(none)\n");
    }
    out
}

/// Writes both synthetic corpora and the manifest.
pub fn cmd_synth(seed: u64, spec: &Path, out_a: &Path, out_b: &Path, manifest: &Path, err: &mut dyn Write) -> Result<()> {
    let spec = synth::parse_spec(&std::fs::read_to_string(spec)?)?;
    let generated = synth::generate(seed, &spec)?;
    for w in &generated.warnings {
        writeln!(err, "warning: {w}")?;
    }
    std::fs::write(out_a, synth::render_corpus(&generated.corpus_a))?;
    std::fs::write(out_b, synth::render_corpus(&generated.corpus_b))?;
    let mut json = serde_json::to_string_pretty(&generated.manifest)?;
    json.push('\n');
    std::fs::write(manifest, json)?;
    Ok(())
}
