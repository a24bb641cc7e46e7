//! Seeded synthetic verse corpora with controllable authorial signal.
//!
//! Every author draws tokens from a multinomial over a shared vocabulary: a
//! high-frequency function-word core, a Zipfian tail of content lemmas (with
//! inflected forms) and a few author-specific proper names. Author weights
//! are the shared base weights tilted by `exp(separation · g)`, with `g`
//! standard normal per author and word, so `separation = 0` gives every
//! author the same distribution.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{parse_document, Corpus, ManifestRecord, TextForm};
use crate::error::{Error, Result};
use crate::features::default_function_words;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub authors: usize,
    pub docs_per_author: usize,
    pub separation: f64,
    /// Lower bound on tokens per document after normalization.
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub content_lemmas: usize,
}

impl SynthConfig {
    pub fn new(seed: u64, authors: usize, docs_per_author: usize, separation: f64) -> Self {
        SynthConfig {
            seed,
            authors,
            docs_per_author,
            separation,
            min_tokens: 5000,
            max_tokens: 8000,
            content_lemmas: 1500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.authors < 2 || self.docs_per_author < 2 {
            return Err(Error::InvalidArgument(
                "synthetic corpora need at least 2 authors with 2 documents each".into(),
            ));
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(Error::InvalidArgument("separation must be a finite non-negative number".into()));
        }
        if self.min_tokens == 0 || self.max_tokens < self.min_tokens || self.content_lemmas == 0 {
            return Err(Error::InvalidArgument("invalid token or vocabulary bounds".into()));
        }
        Ok(())
    }
}

const FUNCTION_TAGS: [&str; 8] = ["DETdef", "PRE", "CONcoo", "CONsub", "ADVgen", "ADVneg", "VERaux", "PROrel"];
const CONTENT_TAGS: [&str; 4] = ["NOMcom", "VERcjg", "ADJqua", "ADVgen"];
const SUFFIXES: [&str; 3] = ["s", "ent", "ait"];
const ONSETS: [&str; 16] = ["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "ch", "pr", "tr"];
const NUCLEI: [&str; 8] = ["a", "e", "i", "o", "u", "ou", "ai", "é"];
const CODAS: [&str; 5] = ["", "", "r", "n", "l"];
/// Share of probability mass on function words.
const FUNCTION_MASS: f64 = 0.45;
const PROPER_MASS: f64 = 0.01;
const NAMES_PER_AUTHOR: usize = 3;

#[derive(Debug, Clone)]
struct Entry {
    forms: Vec<String>,
    lemma: String,
    pos: &'static str,
    weight: f64,
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
        w.push_str(NUCLEI[rng.random_range(0..NUCLEI.len())]);
        w.push_str(CODAS[rng.random_range(0..CODAS.len())]);
    }
    w
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn shared_vocabulary(config: &SynthConfig, rng: &mut ChaCha8Rng) -> (Vec<Entry>, BTreeSet<String>) {
    let function_words = default_function_words();
    let mut taken: BTreeSet<String> = function_words.iter().cloned().collect();
    let mut entries = Vec::new();
    let fw_norm: f64 = (0..function_words.len()).map(|r| 1.0 / (r as f64 + 1.0).powf(0.8)).sum();
    // shuffle ranks so frequency does not follow alphabetical order
    let mut ranks: Vec<usize> = (0..function_words.len()).collect();
    for i in (1..ranks.len()).rev() {
        let j = rng.random_range(0..=i);
        ranks.swap(i, j);
    }
    for (i, w) in function_words.iter().enumerate() {
        entries.push(Entry {
            forms: vec![w.clone()],
            lemma: w.clone(),
            pos: FUNCTION_TAGS[i % FUNCTION_TAGS.len()],
            weight: FUNCTION_MASS / (ranks[i] as f64 + 1.0).powf(0.8) / fw_norm,
        });
    }
    let content_norm: f64 = (0..config.content_lemmas).map(|r| 1.0 / (r as f64 + 1.0)).sum();
    let content_mass = 1.0 - FUNCTION_MASS - PROPER_MASS;
    for r in 0..config.content_lemmas {
        let lemma = loop {
            let w = pseudo_word(rng);
            let clashes = SUFFIXES.iter().any(|s| taken.contains(&format!("{w}{s}")));
            if !clashes && taken.insert(w.clone()) {
                break w;
            }
        };
        let n_forms = rng.random_range(1..=3);
        let mut forms = vec![lemma.clone()];
        for s in SUFFIXES.iter().take(n_forms - 1) {
            let f = format!("{lemma}{s}");
            taken.insert(f.clone());
            forms.push(f);
        }
        entries.push(Entry {
            forms,
            lemma,
            pos: CONTENT_TAGS[rng.random_range(0..CONTENT_TAGS.len())],
            weight: content_mass / (r as f64 + 1.0) / content_norm,
        });
    }
    (entries, taken)
}

/// A generated corpus held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub records: Vec<ManifestRecord>,
    /// Token-file text per record.
    pub token_files: Vec<String>,
    pub function_words: Vec<String>,
}

/// Generates a corpus; identical configs give identical output.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (shared, mut taken) = shared_vocabulary(config, &mut rng);

    let mut records = Vec::new();
    let mut token_files = Vec::new();
    for a in 0..config.authors {
        let author = format!("A{:02}", a + 1);
        let mut vocab = shared.clone();
        for e in &mut vocab {
            let g: f64 = rng.sample(StandardNormal);
            e.weight *= (config.separation * g).exp();
        }
        for _ in 0..NAMES_PER_AUTHOR {
            let name = loop {
                let w = pseudo_word(&mut rng);
                if taken.insert(w.clone()) {
                    break w;
                }
            };
            let cap = capitalize(&name);
            vocab.push(Entry { forms: vec![cap.clone()], lemma: cap, pos: "NOMpro", weight: 0.0 });
        }
        let common: f64 = vocab.iter().map(|e| e.weight).sum();
        let n_names = NAMES_PER_AUTHOR as f64;
        for e in &mut vocab {
            if e.pos == "NOMpro" {
                e.weight = PROPER_MASS / n_names;
            } else {
                e.weight *= (1.0 - PROPER_MASS) / common;
            }
        }
        let sampler = WeightedIndex::new(vocab.iter().map(|e| e.weight)).expect("positive weights");

        for d in 0..config.docs_per_author {
            let id = format!("{author}_{:02}", d + 1);
            let target = rng.random_range(config.min_tokens..=config.max_tokens);
            let mut text = String::new();
            let mut produced = 0usize;
            while produced < target {
                let verse_len = rng.random_range(6..=12);
                for t in 0..verse_len {
                    let e = &vocab[sampler.sample(&mut rng)];
                    let form = &e.forms[rng.random_range(0..e.forms.len())];
                    let shown = if t == 0 { capitalize(form) } else { form.clone() };
                    text.push_str(&format!("{shown}\t{}\t{}\n", e.lemma, e.pos));
                }
                produced += verse_len;
                if rng.random_bool(0.3) {
                    text.push_str(if rng.random_bool(0.5) { ",\t,\tPONfbl\n" } else { ".\t.\tPONfrt\n" });
                }
                text.push('\n');
            }
            records.push(ManifestRecord {
                id: id.clone(),
                title: format!("Synthetic play {} by {author}", d + 1),
                author: author.clone(),
                genre: "comedie".into(),
                form: TextForm::Verse,
                acts: 5,
                year: Some(1640 + (a * 7 + d * 3) as i32 % 40),
                path: format!("tokens/{id}.tsv"),
            });
            token_files.push(text);
        }
    }
    Ok(SynthCorpus { records, token_files, function_words: default_function_words() })
}

impl SynthCorpus {
    /// Parses the generated token files without touching the disk.
    pub fn to_corpus(&self) -> Result<Corpus> {
        let docs = self
            .records
            .iter()
            .zip(&self.token_files)
            .map(|(r, t)| parse_document(t, r.meta()))
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(docs)
    }

    /// Alleged author per document id.
    pub fn truth(&self) -> crate::evaluate::Truth {
        self.records.iter().map(|r| (r.id.clone(), r.author.clone())).collect()
    }

    /// Writes `manifest.csv`, `tokens/<id>.tsv` and `function_words.txt`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let tokens = dir.join("tokens");
        fs::create_dir_all(&tokens).map_err(|e| Error::io(&tokens, e))?;
        for (r, t) in self.records.iter().zip(&self.token_files) {
            let path = dir.join(&r.path);
            fs::write(&path, t).map_err(|e| Error::io(&path, e))?;
        }
        crate::corpus::write_manifest(&dir.join("manifest.csv"), &self.records)?;
        let fw_path = dir.join("function_words.txt");
        let mut list = self.function_words.join("\n");
        list.push('\n');
        fs::write(&fw_path, list).map_err(|e| Error::io(&fw_path, e))?;
        Ok(())
    }
}
