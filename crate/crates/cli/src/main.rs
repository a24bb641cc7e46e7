use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stylo_core::cluster::{AcMode, Linkage};
use stylo_core::corpus::{filter_corpus, load_corpus, read_manifest, Corpus};
use stylo_core::evaluate::{eta_table, format_p_value, write_eta_csv, write_sweep_csv, Truth};
use stylo_core::features::{
    build_matrix, candidate_function_words, default_function_words, read_word_list, FeatureKind, FeatureMatrix,
    FeatureSpec,
};
use stylo_core::metrics::DistanceChoice;
use stylo_core::numfmt::format_sig;
use stylo_core::pipeline::{
    analyze_matrix, sweep_with_reference, write_file, write_json, AnalysisOptions, ClusterConfig, SelectionMode,
    DEFAULT_SWEEP_CUTOFFS,
};
use stylo_core::selection::{feature_diagnostics, select_top_frequency, SelectionReport};
use stylo_core::synth::{generate, SynthConfig};
use stylo_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "stylo", version, about = "Stylometric authorship clustering for annotated verse corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a relative-frequency feature matrix
    Extract {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Report which features pass selection
    Select {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        selection: SelectArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Ward clustering with dendrogram, assignment and summary outputs
    Cluster {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        selection: SelectArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Correlation ratio of each selected feature with the k-cut
    Eta {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        selection: SelectArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
        /// Rows echoed to stdout
        #[arg(long, default_value_t = 10)]
        show: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Purity under frequency cutoffs, plus the reliability-selection row
    Sweep {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        selection: SelectArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
        /// Comma-separated percentages
        #[arg(long, value_delimiter = ',', default_values_t = default_cutoff_percents())]
        cutoffs: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Most frequent word forms, as a starting point for a function-word list
    Candidates {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 250)]
        top: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a synthetic annotated corpus
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        authors: usize,
        #[arg(long, default_value_t = 6)]
        docs_per_author: usize,
        #[arg(long, default_value_t = 1.0)]
        separation: f64,
        #[arg(long, default_value_t = 5000)]
        min_doc_tokens: usize,
        #[arg(long, default_value_t = 8000)]
        max_doc_tokens: usize,
        #[arg(long, default_value = "synth")]
        out: PathBuf,
    },
}

fn default_cutoff_percents() -> Vec<f64> {
    DEFAULT_SWEEP_CUTOFFS.iter().map(|f| f * 100.0).collect()
}

#[derive(Args, Debug, Clone, Serialize)]
struct CorpusArgs {
    /// Corpus manifest CSV
    #[arg(long)]
    manifest: PathBuf,
    /// Drop documents with fewer tokens
    #[arg(long, default_value_t = 5000)]
    min_tokens: usize,
    /// Drop authors with fewer surviving documents
    #[arg(long, default_value_t = 3)]
    min_plays: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct InputArgs {
    /// Corpus manifest CSV; also supplies truth labels
    #[arg(long, required_unless_present = "matrix")]
    manifest: Option<PathBuf>,
    /// Precomputed relative-frequency matrix CSV
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    min_tokens: usize,
    #[arg(long, default_value_t = 3)]
    min_plays: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct FeatureArgs {
    /// lemma, rhyme, form, affix, pos3 or fw
    #[arg(long, default_value = "fw")]
    #[serde(serialize_with = "as_display")]
    features: FeatureKind,
    /// Function-word list, one form per line (bundled French list by default)
    #[arg(long)]
    fw_list: Option<PathBuf>,
    /// POS n-gram length
    #[arg(long, default_value_t = 3)]
    ngram: usize,
    /// Minimum word length for affix features
    #[arg(long, default_value_t = 4)]
    affix_min_len: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SelectArgs {
    /// reliable, all, or top:<pct>
    #[arg(long = "select", default_value = "reliable")]
    #[serde(serialize_with = "as_display")]
    mode: SelectionMode,
    /// Two-sided normal quantile
    #[arg(long, default_value_t = 1.645)]
    z: f64,
    /// Error margin as a multiple of the feature standard deviation
    #[arg(long, default_value_t = 2.0)]
    margin: f64,
    /// Sample size the required size is compared with (defaults to the shortest document)
    #[arg(long)]
    min_doc_len: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ClusterArgs {
    /// delta, minmax, manhattan or euclidean
    #[arg(long, default_value = "delta")]
    #[serde(serialize_with = "as_display")]
    distance: DistanceChoice,
    /// ward2 (squared-distance Ward) or ward1
    #[arg(long, default_value = "ward2")]
    #[serde(serialize_with = "as_display")]
    linkage: Linkage,
    /// Number of clusters (defaults to the number of authors)
    #[arg(long)]
    k: Option<usize>,
    /// Report the literal agglomerative coefficient instead of the normalized one
    #[arg(long)]
    literal_ac: bool,
}

fn as_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Serialize)]
struct RunRecord<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: Vec<String>,
    config: &'a T,
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn write_run_record<T: Serialize>(out: &Path, command: &str, config: &T) -> Result<()> {
    let record = RunRecord {
        tool: "stylo",
        version: env!("CARGO_PKG_VERSION"),
        command,
        argv: std::env::args().skip(1).collect(),
        config,
    };
    write_json(&out.join("run.json"), &record)
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn feature_spec(args: &FeatureArgs) -> Result<FeatureSpec> {
    let mut spec = match (args.features, &args.fw_list) {
        (FeatureKind::FunctionWord, Some(path)) => FeatureSpec::function_words(read_word_list(path)?),
        (FeatureKind::FunctionWord, None) => FeatureSpec::function_words(default_function_words()),
        (kind, _) => FeatureSpec::new(kind),
    };
    spec.ngram_n = args.ngram;
    spec.min_affix_word_len = args.affix_min_len;
    spec.validate()?;
    Ok(spec)
}

fn load_filtered(manifest: &Path, min_tokens: usize, min_plays: usize) -> Result<Corpus> {
    let corpus = load_corpus(manifest)?;
    let kept = filter_corpus(&corpus, min_tokens, min_plays)?;
    eprintln!("{} of {} documents kept", kept.len(), corpus.len());
    Ok(kept)
}

fn analysis_options(features: FeatureSpec, sel: &SelectArgs, cl: Option<&ClusterArgs>) -> AnalysisOptions {
    let mut opts = AnalysisOptions::new(features);
    opts.selection = sel.mode;
    opts.confidence_z = sel.z;
    opts.margin_multiplier = sel.margin;
    opts.min_doc_len = sel.min_doc_len;
    if let Some(cl) = cl {
        opts.cluster = ClusterConfig {
            distance: cl.distance,
            linkage: cl.linkage,
            ac_mode: if cl.literal_ac { AcMode::Literal } else { AcMode::Normalized },
        };
        opts.k = cl.k;
    }
    opts
}

/// Matrix plus truth labels from either a manifest or a matrix file.
fn matrix_input(input: &InputArgs, spec: &FeatureSpec) -> Result<(FeatureMatrix, Option<Truth>)> {
    match (&input.matrix, &input.manifest) {
        (Some(path), manifest) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let matrix = FeatureMatrix::read_csv(file).map_err(|e| match e {
                Error::InvalidMatrix(m) => Error::format(path, m),
                other => other,
            })?;
            let truth = match manifest {
                Some(m) => {
                    let records = read_manifest(m)?;
                    Some(records.into_iter().map(|r| (r.id, r.author)).collect::<Truth>())
                }
                None => None,
            };
            let truth = truth.map(|t| t.into_iter().filter(|(id, _)| matrix.doc_ids.contains(id)).collect::<Truth>());
            Ok((matrix, truth))
        }
        (None, Some(manifest)) => {
            let corpus = load_filtered(manifest, input.min_tokens, input.min_plays)?;
            let matrix = build_matrix(&corpus, spec)?;
            Ok((matrix, Some(corpus.authors())))
        }
        (None, None) => Err(Error::InvalidArgument("either --manifest or --matrix is required".into())),
    }
}

fn check_matrix_selection(input: &InputArgs, sel: &SelectArgs) -> Result<()> {
    if input.matrix.is_some() && sel.mode == SelectionMode::Reliable && sel.min_doc_len.is_none() {
        return Err(Error::InvalidArgument(
            "reliable selection on a matrix file needs --min-doc-len (sample sizes are not stored in the CSV)".into(),
        ));
    }
    Ok(())
}

fn resolve_corpus(mut c: CorpusArgs) -> CorpusArgs {
    c.manifest = absolute(&c.manifest);
    c
}

fn resolve_input(mut i: InputArgs) -> InputArgs {
    i.manifest = i.manifest.as_deref().map(absolute);
    i.matrix = i.matrix.as_deref().map(absolute);
    i
}

fn resolve_features(mut f: FeatureArgs) -> FeatureArgs {
    f.fw_list = f.fw_list.as_deref().map(absolute);
    f
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract { corpus, features, out } => {
            let (corpus, features, out) = (resolve_corpus(corpus), resolve_features(features), absolute(&out));
            prepare_out(&out)?;
            let spec = feature_spec(&features)?;
            let docs = load_filtered(&corpus.manifest, corpus.min_tokens, corpus.min_plays)?;
            let matrix = build_matrix(&docs, &spec)?;
            let mut buf = Vec::new();
            matrix.write_csv(&mut buf)?;
            write_file(&out.join("matrix.csv"), &buf)?;
            write_run_record(
                &out,
                "extract",
                &serde_json::json!({ "corpus": corpus, "features": features, "out": out }),
            )?;
            println!("{} docs, {} features", matrix.n_docs(), matrix.n_features());
        }
        Command::Select { corpus, features, selection, out } => {
            let (corpus, features, out) = (resolve_corpus(corpus), resolve_features(features), absolute(&out));
            prepare_out(&out)?;
            let spec = feature_spec(&features)?;
            let docs = load_filtered(&corpus.manifest, corpus.min_tokens, corpus.min_plays)?;
            let matrix = build_matrix(&docs, &spec)?;
            let opts = analysis_options(spec, &selection, None);
            let params = opts.selection_params(&matrix)?;
            let mut per_feature = feature_diagnostics(&matrix, &params)?;
            match selection.mode {
                SelectionMode::Reliable => {}
                SelectionMode::All => per_feature.iter_mut().for_each(|d| d.retained = !d.degenerate),
                SelectionMode::TopFraction(f) => {
                    let keep = select_top_frequency(&matrix, f)?;
                    for (j, d) in per_feature.iter_mut().enumerate() {
                        d.retained = keep.contains(&j) && !d.degenerate;
                    }
                }
            }
            let retained: Vec<String> = per_feature.iter().filter(|d| d.retained).map(|d| d.feature.clone()).collect();
            let report = SelectionReport { retained, per_feature };
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            write_file(&out.join("selection.csv"), &buf)?;
            write_run_record(
                &out,
                "select",
                &serde_json::json!({ "corpus": corpus, "features": features, "selection": selection,
                    "min_doc_len_used": params.min_doc_len, "out": out }),
            )?;
            println!(
                "{} of {} features retained (min sample size {})",
                report.retained.len(),
                matrix.n_features(),
                params.min_doc_len
            );
            if report.retained.is_empty() {
                return Err(Error::SelectionEmpty);
            }
        }
        Command::Cluster { input, features, selection, cluster, out } => {
            let (input, features, out) = (resolve_input(input), resolve_features(features), absolute(&out));
            check_matrix_selection(&input, &selection)?;
            prepare_out(&out)?;
            let spec = feature_spec(&features)?;
            let (matrix, truth) = matrix_input(&input, &spec)?;
            let opts = analysis_options(spec, &selection, Some(&cluster));
            let analysis = analyze_matrix(matrix, &opts, truth.as_ref())?;
            analysis.write_cluster_outputs(&out, truth.as_ref())?;
            write_run_record(
                &out,
                "cluster",
                &serde_json::json!({ "input": input, "features": features, "selection": selection,
                    "cluster": cluster, "out": out }),
            )?;
            let s = analysis.summary();
            let purity = s.purity.map(format_sig).unwrap_or_else(|| "n/a".into());
            println!("{} features, AC {}, purity {}, k {}", s.n_features, format_sig(s.ac), purity, s.k);
        }
        Command::Eta { input, features, selection, cluster, show, out } => {
            let (input, features, out) = (resolve_input(input), resolve_features(features), absolute(&out));
            check_matrix_selection(&input, &selection)?;
            prepare_out(&out)?;
            let spec = feature_spec(&features)?;
            let (matrix, truth) = matrix_input(&input, &spec)?;
            let opts = analysis_options(spec, &selection, Some(&cluster));
            let analysis = analyze_matrix(matrix, &opts, truth.as_ref())?;
            let rows = eta_table(&analysis.selected, &analysis.run.assignment)?;
            let mut buf = Vec::new();
            write_eta_csv(&rows, &mut buf)?;
            write_file(&out.join("eta.csv"), &buf)?;
            let mut buf = Vec::new();
            analysis.run.assignment.write_csv(&mut buf)?;
            write_file(&out.join("assignment.csv"), &buf)?;
            write_run_record(
                &out,
                "eta",
                &serde_json::json!({ "input": input, "features": features, "selection": selection,
                    "cluster": cluster, "out": out }),
            )?;
            for r in rows.iter().take(show) {
                println!("{}\t{:.2}\t{}", r.feature, r.eta_squared, format_p_value(r.p_value));
            }
        }
        Command::Sweep { corpus, features, selection, cluster, cutoffs, out } => {
            let (corpus, features, out) = (resolve_corpus(corpus), resolve_features(features), absolute(&out));
            prepare_out(&out)?;
            let spec = feature_spec(&features)?;
            let docs = load_filtered(&corpus.manifest, corpus.min_tokens, corpus.min_plays)?;
            let matrix = build_matrix(&docs, &spec)?;
            let opts = analysis_options(spec, &selection, Some(&cluster));
            let fractions: Vec<f64> = cutoffs.iter().map(|p| p / 100.0).collect();
            if fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
                return Err(Error::InvalidArgument("cutoffs must lie in (0, 100]".into()));
            }
            let rows = sweep_with_reference(&matrix, &opts, &docs.authors(), &fractions)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            write_file(&out.join("sweep.csv"), &buf)?;
            write_run_record(
                &out,
                "sweep",
                &serde_json::json!({ "corpus": corpus, "features": features, "selection": selection,
                    "cluster": cluster, "cutoffs": cutoffs, "out": out }),
            )?;
            print!("{}", String::from_utf8_lossy(&buf));
        }
        Command::Candidates { corpus, top, out } => {
            let (corpus, out) = (resolve_corpus(corpus), absolute(&out));
            prepare_out(&out)?;
            let docs = load_filtered(&corpus.manifest, corpus.min_tokens, corpus.min_plays)?;
            let ranked = candidate_function_words(&docs, top)?;
            let mut text = String::from("form,count\n");
            for (form, count) in &ranked {
                text.push_str(&format!("{form},{count}\n"));
            }
            write_file(&out.join("candidates.csv"), text.as_bytes())?;
            write_run_record(&out, "candidates", &serde_json::json!({ "corpus": corpus, "top": top, "out": out }))?;
            println!("{} candidate forms", ranked.len());
        }
        Command::Synth { seed, authors, docs_per_author, separation, min_doc_tokens, max_doc_tokens, out } => {
            let out = absolute(&out);
            let config = SynthConfig {
                min_tokens: min_doc_tokens,
                max_tokens: max_doc_tokens,
                ..SynthConfig::new(seed, authors, docs_per_author, separation)
            };
            let corpus = generate(&config)?;
            prepare_out(&out)?;
            corpus.write_to(&out)?;
            write_run_record(&out, "synth", &serde_json::json!({ "synth": config, "out": out }))?;
            println!("{} documents by {} authors written to {}", corpus.records.len(), authors, out.display());
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("STYLO_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("STYLO_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::InvalidArgument("STYLO_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
