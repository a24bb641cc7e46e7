//! The six feature families and document × feature matrices.
//!
//! Lexical families (lemmas, rhyme lemmas, word forms, affixes, function
//! words) ignore proper names; POS n-grams run over every retained token,
//! across verse boundaries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::numfmt::format_sig;

/// Occurrence counts keyed by feature name.
pub type FeatureCounts = BTreeMap<String, u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Lemma,
    RhymeLemma,
    WordForm,
    Affix,
    PosNgram,
    FunctionWord,
}

impl FeatureKind {
    pub fn cli_name(self) -> &'static str {
        match self {
            FeatureKind::Lemma => "lemma",
            FeatureKind::RhymeLemma => "rhyme",
            FeatureKind::WordForm => "form",
            FeatureKind::Affix => "affix",
            FeatureKind::PosNgram => "pos3",
            FeatureKind::FunctionWord => "fw",
        }
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "lemma" => FeatureKind::Lemma,
            "rhyme" => FeatureKind::RhymeLemma,
            "form" => FeatureKind::WordForm,
            "affix" => FeatureKind::Affix,
            "pos3" | "pos" => FeatureKind::PosNgram,
            "fw" => FeatureKind::FunctionWord,
            other => return Err(format!("unknown feature family `{other}`")),
        })
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub ngram_n: usize,
    pub min_affix_word_len: usize,
    pub function_words: Vec<String>,
}

impl FeatureSpec {
    pub const DEFAULT_NGRAM: usize = 3;
    pub const DEFAULT_MIN_AFFIX_LEN: usize = 4;

    /// Spec with default parameters. Use [`FeatureSpec::function_words`] for
    /// the function-word family, which needs a list.
    pub fn new(kind: FeatureKind) -> Self {
        FeatureSpec {
            kind,
            ngram_n: Self::DEFAULT_NGRAM,
            min_affix_word_len: Self::DEFAULT_MIN_AFFIX_LEN,
            function_words: Vec::new(),
        }
    }

    pub fn pos_ngrams(n: usize) -> Self {
        FeatureSpec { ngram_n: n, ..Self::new(FeatureKind::PosNgram) }
    }

    pub fn function_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        FeatureSpec { function_words: set.into_iter().collect(), ..Self::new(FeatureKind::FunctionWord) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ngram_n == 0 {
            return Err(Error::InvalidArgument("ngram_n must be at least 1".into()));
        }
        if self.min_affix_word_len == 0 {
            return Err(Error::InvalidArgument("min_affix_word_len must be at least 1".into()));
        }
        if self.kind == FeatureKind::FunctionWord && self.function_words.is_empty() {
            return Err(Error::InvalidArgument("function-word list is empty".into()));
        }
        Ok(())
    }
}

fn count<I, S>(items: I) -> FeatureCounts
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut counts = FeatureCounts::new();
    for item in items {
        *counts.entry(item.into()).or_default() += 1;
    }
    counts
}

pub fn extract_lemmas(doc: &Document) -> FeatureCounts {
    count(doc.lexical_tokens().map(|t| t.lemma.as_str()))
}

/// Lemma of the last token of each verse. A proper name in rhyme position
/// contributes nothing.
pub fn extract_rhyme_lemmas(doc: &Document) -> FeatureCounts {
    count(doc.verses().iter().map(|v| v.rhyme_token()).filter(|t| !t.is_proper_name()).map(|t| t.lemma.as_str()))
}

pub fn extract_forms(doc: &Document) -> FeatureCounts {
    count(doc.lexical_tokens().map(|t| t.form.as_str()))
}

/// The edge affixes of one word form.
///
/// Words of at least `min_word_len` characters yield `^abc` and `xyz$`;
/// every word yields the interword-space types `_ab` and `yz_`, shortened
/// to the available characters for one-letter words.
pub fn affixes_of(form: &str, min_word_len: usize) -> Vec<String> {
    let chars: Vec<char> = form.chars().collect();
    let len = chars.len();
    if len == 0 {
        return Vec::new();
    }
    let head = |n: usize| chars[..n.min(len)].iter().collect::<String>();
    let tail = |n: usize| chars[len - n.min(len)..].iter().collect::<String>();
    let mut out = Vec::with_capacity(4);
    if len >= min_word_len {
        out.push(format!("^{}", head(3)));
        out.push(format!("{}$", tail(3)));
    }
    out.push(format!("_{}", head(2)));
    out.push(format!("{}_", tail(2)));
    out
}

pub fn extract_affixes(doc: &Document, min_word_len: usize) -> FeatureCounts {
    count(doc.lexical_tokens().flat_map(|t| affixes_of(&t.form, min_word_len)))
}

/// Contiguous POS tag n-grams over the whole document, joined with `.`.
pub fn extract_pos_ngrams(doc: &Document, n: usize) -> FeatureCounts {
    let tags: Vec<&str> = doc.tokens().map(|t| t.pos.as_str()).collect();
    if n == 0 || tags.len() < n {
        return FeatureCounts::new();
    }
    count(tags.windows(n).map(|w| w.join(".")))
}

/// Counts of the listed function words, matched on surface form. Every
/// list entry is present in the result, zero when absent.
pub fn extract_function_words(doc: &Document, words: &[String]) -> FeatureCounts {
    let mut counts: FeatureCounts = words.iter().map(|w| (w.clone(), 0)).collect();
    for t in doc.lexical_tokens() {
        if let Some(c) = counts.get_mut(&t.form) {
            *c += 1;
        }
    }
    counts
}

/// Counts for one document plus the family's sample size, the denominator
/// of its relative frequencies.
///
/// Sample sizes: lexical tokens for lemmas, forms and function words;
/// contributing verses for rhyme lemmas; emitted affixes for affixes;
/// n-gram windows for POS n-grams.
pub fn extract(doc: &Document, spec: &FeatureSpec) -> (FeatureCounts, u64) {
    match spec.kind {
        FeatureKind::Lemma => {
            let c = extract_lemmas(doc);
            let n = c.values().sum();
            (c, n)
        }
        FeatureKind::RhymeLemma => {
            let c = extract_rhyme_lemmas(doc);
            let n = c.values().sum();
            (c, n)
        }
        FeatureKind::WordForm => {
            let c = extract_forms(doc);
            let n = c.values().sum();
            (c, n)
        }
        FeatureKind::Affix => {
            let c = extract_affixes(doc, spec.min_affix_word_len);
            let n = c.values().sum();
            (c, n)
        }
        FeatureKind::PosNgram => {
            let c = extract_pos_ngrams(doc, spec.ngram_n);
            let n = c.values().sum();
            (c, n)
        }
        FeatureKind::FunctionWord => {
            let c = extract_function_words(doc, &spec.function_words);
            (c, doc.lexical_tokens().count() as u64)
        }
    }
}

/// Most frequent lexical forms across the corpus, for manual curation into
/// a function-word list. Ties go to the lexicographically smaller form.
pub fn candidate_function_words(corpus: &Corpus, top_k: usize) -> Result<Vec<(String, u64)>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    let mut totals: HashMap<&str, u64> = HashMap::new();
    for doc in corpus.documents() {
        for t in doc.lexical_tokens() {
            *totals.entry(t.form.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, u64)> = totals.into_iter().map(|(f, c)| (f.to_string(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_k);
    Ok(ranked)
}

static DEFAULT_FUNCTION_WORDS: &str = include_str!("../data/french_function_words.txt");

fn parse_word_list(text: &str) -> Vec<String> {
    let set: BTreeSet<String> =
        text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::to_string).collect();
    set.into_iter().collect()
}

/// The bundled French function-word list (110 forms).
pub fn default_function_words() -> Vec<String> {
    parse_word_list(DEFAULT_FUNCTION_WORDS)
}

/// Reads a word list: one form per line, `#` comments allowed.
pub fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let words = parse_word_list(&text);
    if words.is_empty() {
        return Err(Error::format(path, "word list is empty"));
    }
    Ok(words)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    RawCount,
    RelativeFrequency,
    ZScore,
    Tfsd,
    L2NormalizedZScore,
}

/// Documents × features. Rows follow `doc_ids`, columns `feature_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub doc_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub values: Array2<f64>,
    pub scale: Scale,
    /// Per-document relative-frequency denominators, when known.
    pub sample_sizes: Option<Vec<u64>>,
}

impl FeatureMatrix {
    pub fn new(doc_ids: Vec<String>, feature_names: Vec<String>, values: Array2<f64>, scale: Scale) -> Result<Self> {
        if values.nrows() != doc_ids.len() || values.ncols() != feature_names.len() {
            return Err(Error::InvalidMatrix(format!(
                "shape {:?} does not match {} documents × {} features",
                values.shape(),
                doc_ids.len(),
                feature_names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite value".into()));
        }
        Ok(FeatureMatrix { doc_ids, feature_names, values, scale, sample_sizes: None })
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            doc_ids: self.doc_ids.clone(),
            feature_names: columns.iter().map(|&j| self.feature_names[j].clone()).collect(),
            values: self.values.select(Axis(1), columns),
            scale: self.scale,
            sample_sizes: self.sample_sizes.clone(),
        }
    }

    /// Keeps the named columns, in matrix order.
    pub fn select_features(&self, names: &[String]) -> FeatureMatrix {
        let wanted: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        let cols: Vec<usize> =
            (0..self.n_features()).filter(|&j| wanted.contains(self.feature_names[j].as_str())).collect();
        self.select_columns(&cols)
    }

    /// Corpus-wide occurrence total of each feature.
    ///
    /// Exact counts are recovered when sample sizes are known; otherwise the
    /// column sums of the stored values stand in.
    pub fn feature_totals(&self) -> Vec<f64> {
        match (&self.sample_sizes, self.scale) {
            (Some(sizes), Scale::RelativeFrequency) => (0..self.n_features())
                .map(|j| self.column(j).iter().zip(sizes).map(|(v, &n)| (v * n as f64).round()).sum())
                .collect(),
            _ => self.values.sum_axis(Axis(0)).to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["doc_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in self.doc_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|&v| format_sig(v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Reads a matrix CSV written by [`FeatureMatrix::write_csv`]; values
    /// are taken as relative frequencies with unknown sample sizes.
    pub fn read_csv<R: Read>(input: R) -> Result<FeatureMatrix> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("doc_id") {
            return Err(Error::InvalidMatrix("first column must be `doc_id`".into()));
        }
        let feature_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut doc_ids = Vec::new();
        let mut flat = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            doc_ids.push(rec[0].to_string());
            for field in rec.iter().skip(1) {
                let v: f64 = field.trim().parse().map_err(|_| Error::InvalidMatrix(format!("bad number `{field}`")))?;
                flat.push(v);
            }
        }
        let values = Array2::from_shape_vec((doc_ids.len(), feature_names.len()), flat)
            .map_err(|e| Error::InvalidMatrix(e.to_string()))?;
        FeatureMatrix::new(doc_ids, feature_names, values, Scale::RelativeFrequency)
    }
}

/// Raw counts for every document, columns sorted by feature name.
pub fn build_count_matrix(corpus: &Corpus, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let per_doc: Vec<(FeatureCounts, u64)> = corpus.documents().par_iter().map(|d| extract(d, spec)).collect();
    let names: BTreeSet<&String> = per_doc.iter().flat_map(|(c, _)| c.keys()).collect();
    let feature_names: Vec<String> = names.into_iter().cloned().collect();
    let index: HashMap<&str, usize> = feature_names.iter().enumerate().map(|(j, n)| (n.as_str(), j)).collect();
    let mut values = Array2::zeros((corpus.len(), feature_names.len()));
    for (i, (counts, _)) in per_doc.iter().enumerate() {
        for (name, &c) in counts {
            values[[i, index[name.as_str()]]] = c as f64;
        }
    }
    let mut m = FeatureMatrix::new(corpus.doc_ids(), feature_names, values, Scale::RawCount)?;
    m.sample_sizes = Some(per_doc.iter().map(|(_, n)| *n).collect());
    Ok(m)
}

/// Relative-frequency matrix: counts divided by each document's sample
/// size. A document without any feature keeps an all-zero row.
pub fn build_matrix(corpus: &Corpus, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    let mut m = build_count_matrix(corpus, spec)?;
    let sizes = m.sample_sizes.clone().expect("set by build_count_matrix");
    for (mut row, &n) in m.values.axis_iter_mut(Axis(0)).zip(&sizes) {
        if n > 0 {
            row.mapv_inplace(|c| c / n as f64);
        }
    }
    m.scale = Scale::RelativeFrequency;
    Ok(m)
}
