//! Annotated corpus ingestion, token normalization and corpus filtering.
//!
//! Token files hold one token per line as `FORM<TAB>LEMMA<TAB>POS`. A blank
//! line closes a verse and lines starting with `#` are comments. A manifest
//! CSV (`id,title,author,genre,form,acts,year,path`) lists the documents of
//! a corpus; `path` is resolved relative to the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// POS tag prefix marking proper names.
pub const PROPER_NAME_TAG: &str = "NOMpro";

// Unicode punctuation except the apostrophe, which carries French elision.
static PUNCTUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[\p{P}--']").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub form: String,
    pub lemma: String,
    pub pos: String,
}

impl AnnotatedToken {
    pub fn is_proper_name(&self) -> bool {
        self.pos.starts_with(PROPER_NAME_TAG)
    }
}

/// Outcome of [`normalize_token`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Keep(AnnotatedToken),
    Drop,
}

impl Normalized {
    /// The token as seen by lexical extractors, where proper names are dropped.
    pub fn lexical(&self) -> Option<&AnnotatedToken> {
        match self {
            Normalized::Keep(t) if !t.is_proper_name() => Some(t),
            _ => None,
        }
    }

    /// The token as seen by POS sequence extraction, where proper names are kept.
    pub fn morphosyntactic(&self) -> Option<&AnnotatedToken> {
        match self {
            Normalized::Keep(t) => Some(t),
            Normalized::Drop => None,
        }
    }
}

fn clean(raw: &str) -> String {
    let lowered = raw.trim().to_lowercase().replace(['\u{2019}', '\u{02bc}'], "'");
    PUNCTUATION.replace_all(&lowered, "").into_owned()
}

/// Lowercases form and lemma and strips punctuation (apostrophes excepted).
///
/// Tokens whose form or lemma is empty after stripping are dropped. Proper
/// names survive here; lexical extraction skips them through
/// [`Normalized::lexical`] while POS sequences keep them.
pub fn normalize_token(raw_form: &str, lemma: &str, pos: &str) -> Normalized {
    let form = clean(raw_form);
    let lemma = clean(lemma);
    if form.is_empty() || lemma.is_empty() {
        return Normalized::Drop;
    }
    Normalized::Keep(AnnotatedToken { form, lemma, pos: pos.trim().to_string() })
}

/// One verse line. The last token sits in rhyme position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verse {
    tokens: Vec<AnnotatedToken>,
}

impl Verse {
    /// Returns `None` for an empty token sequence.
    pub fn new(tokens: Vec<AnnotatedToken>) -> Option<Self> {
        if tokens.is_empty() {
            None
        } else {
            Some(Verse { tokens })
        }
    }

    pub fn tokens(&self) -> &[AnnotatedToken] {
        &self.tokens
    }

    pub fn rhyme_token(&self) -> &AnnotatedToken {
        self.tokens.last().expect("verse is non-empty")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextForm {
    Verse,
    Prose,
    Mixed,
}

impl FromStr for TextForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "verse" => Ok(TextForm::Verse),
            "prose" => Ok(TextForm::Prose),
            "mixed" => Ok(TextForm::Mixed),
            other => Err(format!("unknown text form `{other}`")),
        }
    }
}

impl fmt::Display for TextForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TextForm::Verse => "verse",
            TextForm::Prose => "prose",
            TextForm::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub id: String,
    pub title: String,
    pub alleged_author: String,
    pub genre: String,
    pub form: TextForm,
    pub act_count: u32,
    pub year: Option<i32>,
}

impl DocumentMeta {
    /// Minimal metadata, mostly useful for tests and synthetic data.
    pub fn new(id: impl Into<String>, author: impl Into<String>) -> Self {
        DocumentMeta {
            id: id.into(),
            title: String::new(),
            alleged_author: author.into(),
            genre: "comedie".to_string(),
            form: TextForm::Verse,
            act_count: 5,
            year: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub meta: DocumentMeta,
    verses: Vec<Verse>,
    token_count: usize,
}

impl Document {
    pub fn new(meta: DocumentMeta, verses: Vec<Verse>) -> Self {
        let token_count = verses.iter().map(Verse::len).sum();
        Document { meta, verses, token_count }
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }

    pub fn verses(&self) -> &[Verse] {
        &self.verses
    }

    /// Total tokens, proper names included.
    pub fn token_count(&self) -> usize {
        self.token_count
    }

    /// Every retained token in reading order, proper names included.
    pub fn tokens(&self) -> impl Iterator<Item = &AnnotatedToken> {
        self.verses.iter().flat_map(|v| v.tokens.iter())
    }

    /// Tokens visible to lexical features (proper names removed).
    pub fn lexical_tokens(&self) -> impl Iterator<Item = &AnnotatedToken> {
        self.tokens().filter(|t| !t.is_proper_name())
    }

    /// Serializes the token stream in the token-file format.
    pub fn write_tokens<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, verse) in self.verses.iter().enumerate() {
            if i > 0 {
                out.write_all(b"\n")?;
            }
            for t in &verse.tokens {
                writeln!(out, "{}\t{}\t{}", t.form, t.lemma, t.pos)?;
            }
        }
        Ok(())
    }

    pub fn to_token_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_tokens(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("tokens are UTF-8")
    }
}

/// Parses a token stream into a document, normalizing every token.
///
/// Blank lines close verses; an unterminated trailing verse is kept. A
/// verse whose tokens were all dropped disappears.
pub fn parse_document(text: &str, meta: DocumentMeta) -> Result<Document> {
    let mut verses = Vec::new();
    let mut current = Vec::new();
    let mut records = 0usize;
    for (idx, raw_line) in text.split('\n').enumerate() {
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            if let Some(v) = Verse::new(std::mem::take(&mut current)) {
                verses.push(v);
            }
            continue;
        }
        records += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected FORM<TAB>LEMMA<TAB>POS, found {} field(s)", fields.len()),
            });
        }
        if let Normalized::Keep(t) = normalize_token(fields[0], fields[1], fields[2]) {
            current.push(t);
        }
    }
    if let Some(v) = Verse::new(current) {
        verses.push(v);
    }
    if records == 0 || verses.is_empty() {
        return Err(Error::EmptyDocument);
    }
    Ok(Document::new(meta, verses))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &documents {
            if !seen.insert(d.id()) {
                return Err(Error::DuplicateId(d.id().to_string()));
            }
        }
        Ok(Corpus { documents })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.meta.id.clone()).collect()
    }

    /// Alleged author per document id.
    pub fn authors(&self) -> BTreeMap<String, String> {
        self.documents.iter().map(|d| (d.meta.id.clone(), d.meta.alleged_author.clone())).collect()
    }

    pub fn shortest_document(&self) -> Option<usize> {
        self.documents.iter().map(Document::token_count).min()
    }
}

/// Drops documents under `min_tokens`, then every author left with fewer
/// than `min_plays_per_author` documents, until nothing changes.
pub fn filter_corpus(corpus: &Corpus, min_tokens: usize, min_plays_per_author: usize) -> Result<Corpus> {
    if min_plays_per_author == 0 {
        return Err(Error::InvalidArgument("min_plays_per_author must be at least 1".into()));
    }
    let mut kept: Vec<&Document> = corpus.documents.iter().filter(|d| d.token_count >= min_tokens).collect();
    loop {
        let mut per_author: BTreeMap<&str, usize> = BTreeMap::new();
        for d in &kept {
            *per_author.entry(d.meta.alleged_author.as_str()).or_default() += 1;
        }
        let before = kept.len();
        kept.retain(|d| per_author[d.meta.alleged_author.as_str()] >= min_plays_per_author);
        if kept.len() == before {
            break;
        }
    }
    if kept.is_empty() {
        return Err(Error::NoDocumentsSurvive);
    }
    Ok(Corpus { documents: kept.into_iter().cloned().collect() })
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub title: String,
    pub author: String,
    pub genre: String,
    pub form: TextForm,
    pub acts: u32,
    pub year: Option<i32>,
    pub path: String,
}

impl ManifestRecord {
    pub fn meta(&self) -> DocumentMeta {
        DocumentMeta {
            id: self.id.clone(),
            title: self.title.clone(),
            alleged_author: self.author.clone(),
            genre: self.genre.clone(),
            form: self.form,
            act_count: self.acts,
            year: self.year,
        }
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let expected = ["id", "title", "author", "genre", "form", "acts", "year", "path"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::format(path, format!("manifest header must be `{}`", expected.join(","))));
    }
    let mut records = Vec::new();
    for row in reader.deserialize() {
        let rec: ManifestRecord = row.map_err(|e| Error::format(path, e.to_string()))?;
        records.push(rec);
    }
    Ok(records)
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for rec in records {
        writer.serialize(rec)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a manifest and parses every listed token file.
pub fn load_corpus(manifest: &Path) -> Result<Corpus> {
    let records = read_manifest(manifest)?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let documents = records
        .par_iter()
        .map(|rec| {
            let path = base.join(&rec.path);
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            parse_document(&text, rec.meta()).map_err(|e| match e {
                Error::Parse { .. } | Error::EmptyDocument => Error::format(&path, e.to_string()),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(documents)
}
