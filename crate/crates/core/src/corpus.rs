//! Corpus ingestion: tokenization, generic-token masking and cross-corpus
//! article pairing.
//!
//! Masking replaces dates, numbers and proper names with the generic tokens
//! `DATE`, `NUM` and `NAME`. The replaced spans are kept in a
//! [`MaskEntry`] record so that the original token sequence can always be
//! reconstructed. Words keep their original surface; comparisons go through
//! [`Token::key`], which lowercases after masking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_LABEL: &str = "NUM";
pub const DATE_LABEL: &str = "DATE";
pub const NAME_LABEL: &str = "NAME";

/// Default for [`NameLexicon`] construction.
pub const DEFAULT_MIN_NAME_COUNT: usize = 2;

const MONTHS: &[&str] = &[
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
    "Jan.",
    "Feb.",
    "Mar.",
    "Apr.",
    "Jun.",
    "Jul.",
    "Aug.",
    "Sep.",
    "Sept.",
    "Oct.",
    "Nov.",
    "Dec.",
];

const WEEKDAYS: &[&str] = &[
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];

const LEADING_PUNCT: &[char] = &['"', '\'', '(', '[', '{', '`'];
const TRAILING_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', ')', ']', '}'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CorpusId {
    A,
    B,
}

impl fmt::Display for CorpusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusId::A => f.write_str("A"),
            CorpusId::B => f.write_str("B"),
        }
    }
}

impl FromStr for CorpusId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(CorpusId::A),
            "B" | "b" => Ok(CorpusId::B),
            other => Err(format!("unknown corpus id `{other}` (expected A or B)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Num,
    Date,
    Name,
}

impl TokenKind {
    pub fn is_generic(self) -> bool {
        !matches!(self, TokenKind::Word)
    }

    pub fn label(self) -> Option<&'static str> {
        match self {
            TokenKind::Word => None,
            TokenKind::Num => Some(NUM_LABEL),
            TokenKind::Date => Some(DATE_LABEL),
            TokenKind::Name => Some(NAME_LABEL),
        }
    }
}

/// True for the three generic labels produced by masking.
pub fn is_generic_label(label: &str) -> bool {
    matches!(label, NUM_LABEL | DATE_LABEL | NAME_LABEL)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sentence_initial: bool,
}

impl Token {
    pub fn word(surface: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            kind: TokenKind::Word,
            sentence_initial: false,
        }
    }

    fn generic(kind: TokenKind, sentence_initial: bool) -> Self {
        Token {
            surface: kind.label().expect("generic kind").to_string(),
            kind,
            sentence_initial,
        }
    }

    /// Comparison key used by clustering and alignment.
    pub fn key(&self) -> String {
        match self.kind.label() {
            Some(label) => label.to_string(),
            None => self.surface.to_lowercase(),
        }
    }

    pub fn is_capitalized(&self) -> bool {
        self.surface
            .chars()
            .next()
            .is_some_and(|c| c.is_uppercase() && c.is_alphabetic())
    }

    pub fn is_punctuation(&self) -> bool {
        self.surface.chars().all(|c| !c.is_alphanumeric())
    }
}

/// One masked span: `index` points into the masked token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub index: usize,
    pub kind: TokenKind,
    pub original: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub article_id: String,
    pub corpus: CorpusId,
    pub position: usize,
    pub tokens: Vec<Token>,
    pub mask_record: Vec<MaskEntry>,
}

impl Sentence {
    /// An unmasked sentence built from raw text.
    pub fn from_raw(
        corpus: CorpusId,
        article_id: &str,
        position: usize,
        raw: &str,
    ) -> Result<Self> {
        Ok(Sentence {
            id: sentence_id(corpus, article_id, position),
            article_id: article_id.to_string(),
            corpus,
            position,
            tokens: tokenize(raw)?,
            mask_record: Vec::new(),
        })
    }

    pub fn keys(&self) -> Vec<String> {
        self.tokens.iter().map(Token::key).collect()
    }

    fn mask_entry(&self, index: usize) -> Option<&MaskEntry> {
        self.mask_record
            .binary_search_by_key(&index, |e| e.index)
            .ok()
            .map(|i| &self.mask_record[i])
    }

    /// Original tokens behind the masked token at `index`.
    pub fn original_tokens(&self, index: usize) -> Vec<Token> {
        match self.mask_entry(index) {
            Some(entry) => entry.original.clone(),
            None => vec![self.tokens[index].clone()],
        }
    }

    /// Reconstructs the pre-mask token sequence.
    pub fn unmask(&self) -> Vec<Token> {
        (0..self.tokens.len())
            .flat_map(|i| self.original_tokens(i))
            .collect()
    }

    pub fn text(&self) -> String {
        render_surfaces(self.unmask().iter().map(|t| t.surface.as_str()))
    }
}

pub fn sentence_id(corpus: CorpusId, article_id: &str, position: usize) -> String {
    format!("{corpus}/{article_id}/{position:04}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub corpus: CorpusId,
    pub date: Option<NaiveDate>,
    pub topic_id: Option<String>,
    pub sentences: Vec<Sentence>,
}

/// Proper-name lexicon: capitalized token runs seen mid-sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "LexiconRepr", into = "LexiconRepr")]
pub struct NameLexicon {
    entries: BTreeMap<String, usize>,
    max_len: usize,
}

#[derive(Serialize, Deserialize)]
struct LexiconRepr {
    entries: BTreeMap<String, usize>,
}

impl From<LexiconRepr> for NameLexicon {
    fn from(r: LexiconRepr) -> Self {
        NameLexicon::from_entries(r.entries)
    }
}

impl From<NameLexicon> for LexiconRepr {
    fn from(l: NameLexicon) -> Self {
        LexiconRepr { entries: l.entries }
    }
}

impl NameLexicon {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, usize)>) -> Self {
        let entries: BTreeMap<String, usize> = entries.into_iter().collect();
        let max_len = entries
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0);
        NameLexicon { entries, max_len }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, run: &str) -> Option<usize> {
        self.entries.get(run).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, usize)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn longest_match(&self, tokens: &[Token], start: usize) -> usize {
        let limit = self.max_len.min(tokens.len() - start);
        (1..=limit)
            .rev()
            .find(|&len| {
                let window = &tokens[start..start + len];
                window.iter().all(|t| t.kind == TokenKind::Word)
                    && self.entries.contains_key(&join_surfaces(window))
            })
            .unwrap_or(0)
    }
}

fn join_surfaces(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits one sentence on whitespace, peeling leading and trailing
/// punctuation into separate tokens. The first token is flagged
/// sentence-initial.
pub fn tokenize(raw: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    for chunk in raw.split_whitespace() {
        let mut rest = chunk;
        while let Some(c) = rest.chars().next() {
            if LEADING_PUNCT.contains(&c) && rest.len() > c.len_utf8() {
                tokens.push(Token::word(c.to_string()));
                rest = &rest[c.len_utf8()..];
            } else {
                break;
            }
        }
        let mut trailing = Vec::new();
        while let Some(c) = rest.chars().next_back() {
            if TRAILING_PUNCT.contains(&c) && rest.len() > c.len_utf8() {
                // Keep abbreviation dots such as "Sept." attached.
                if c == '.' && is_abbreviation(rest) {
                    break;
                }
                trailing.push(Token::word(c.to_string()));
                rest = &rest[..rest.len() - c.len_utf8()];
            } else {
                break;
            }
        }
        tokens.push(Token::word(rest));
        tokens.extend(trailing.into_iter().rev());
    }
    match tokens.first_mut() {
        Some(first) => first.sentence_initial = true,
        None => return Err(Error::EmptySentence),
    }
    Ok(tokens)
}

fn is_abbreviation(chunk: &str) -> bool {
    MONTHS.contains(&chunk) && chunk.ends_with('.')
}

fn number_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?$").expect("valid number pattern")
    })
}

pub fn is_number(surface: &str) -> bool {
    number_pattern().is_match(surface)
}

fn is_month(surface: &str) -> bool {
    MONTHS.contains(&surface)
}

fn is_weekday(surface: &str) -> bool {
    WEEKDAYS.contains(&surface)
}

/// Length of the date span starting at `start` (0 when none).
fn date_match(tokens: &[Token], start: usize) -> usize {
    let word = |i: usize| {
        tokens
            .get(i)
            .filter(|t| t.kind == TokenKind::Word)
            .map(|t| t.surface.as_str())
    };
    let Some(first) = word(start) else {
        return 0;
    };
    if is_month(first) {
        return if word(start + 1).is_some_and(is_number) { 2 } else { 1 };
    }
    if is_weekday(first) {
        return 1;
    }
    if is_number(first) && word(start + 1).is_some_and(is_month) {
        return 2;
    }
    0
}

/// Builds the proper-name lexicon from unmasked articles.
///
/// Runs are maximal sequences of capitalized tokens that exclude the
/// sentence-initial token; only the maximal run is counted at a position.
pub fn build_name_lexicon(articles: &[Article], min_name_count: usize) -> NameLexicon {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for sentence in articles.iter().flat_map(|a| &a.sentences) {
        let tokens = &sentence.tokens;
        let mut i = 1;
        while i < tokens.len() {
            if tokens[i].kind == TokenKind::Word && tokens[i].is_capitalized() {
                let start = i;
                while i < tokens.len()
                    && tokens[i].kind == TokenKind::Word
                    && tokens[i].is_capitalized()
                {
                    i += 1;
                }
                *counts.entry(join_surfaces(&tokens[start..i])).or_default() += 1;
            } else {
                i += 1;
            }
        }
    }
    NameLexicon::from_entries(counts.into_iter().filter(|(_, c)| *c >= min_name_count))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaskOptions {
    /// Also mask capitalized mid-sentence runs missing from the lexicon.
    pub mask_unseen_names: bool,
}

/// Replaces numbers, dates and lexicon names with generic tokens,
/// longest match first, left to right.
pub fn mask(sentence: &Sentence, lexicon: &NameLexicon) -> Sentence {
    mask_with(sentence, lexicon, MaskOptions::default())
}

pub fn mask_with(sentence: &Sentence, lexicon: &NameLexicon, options: MaskOptions) -> Sentence {
    let src = &sentence.tokens;
    let mut tokens = Vec::with_capacity(src.len());
    let mut record = Vec::new();
    let mut i = 0;
    while i < src.len() {
        if src[i].kind.is_generic() {
            // Already masked: carry the existing record entry over.
            let mut entry = sentence
                .mask_entry(i)
                .cloned()
                .unwrap_or_else(|| MaskEntry {
                    index: i,
                    kind: src[i].kind,
                    original: vec![src[i].clone()],
                });
            entry.index = tokens.len();
            record.push(entry);
            tokens.push(src[i].clone());
            i += 1;
            continue;
        }
        let date_len = date_match(src, i);
        let mut name_len = lexicon.longest_match(src, i);
        if name_len == 0 && options.mask_unseen_names && i > 0 {
            name_len = src[i..]
                .iter()
                .take_while(|t| t.kind == TokenKind::Word && t.is_capitalized())
                .count();
        }
        let num_len = usize::from(is_number(&src[i].surface));
        // Ties prefer DATE, then NAME.
        let (kind, len) = [
            (TokenKind::Date, date_len),
            (TokenKind::Name, name_len),
            (TokenKind::Num, num_len),
        ]
        .into_iter()
        .fold((TokenKind::Word, 0), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        });
        if len == 0 {
            tokens.push(src[i].clone());
            i += 1;
        } else {
            record.push(MaskEntry {
                index: tokens.len(),
                kind,
                original: src[i..i + len].to_vec(),
            });
            tokens.push(Token::generic(kind, src[i].sentence_initial));
            i += len;
        }
    }
    Sentence {
        tokens,
        mask_record: record,
        ..sentence.clone()
    }
}

pub type ArticlePairs = BTreeSet<(String, String)>;

/// Pairs articles across corpora written on the same day on the same topic.
pub fn pair_articles(corpus_a: &[Article], corpus_b: &[Article]) -> Result<ArticlePairs> {
    fn key(a: &Article) -> Result<(NaiveDate, &str)> {
        let date = a.date.ok_or_else(|| Error::MetadataMissing {
            article: a.id.clone(),
            field: "date",
        })?;
        let topic = a.topic_id.as_deref().ok_or_else(|| Error::MetadataMissing {
            article: a.id.clone(),
            field: "topic",
        })?;
        Ok((date, topic))
    }
    let mut by_key: BTreeMap<(NaiveDate, &str), Vec<&str>> = BTreeMap::new();
    for b in corpus_b {
        by_key.entry(key(b)?).or_default().push(&b.id);
    }
    let mut pairs = ArticlePairs::new();
    for a in corpus_a {
        if let Some(bs) = by_key.get(&key(a)?) {
            pairs.extend(bs.iter().map(|b| (a.id.clone(), b.to_string())));
        }
    }
    Ok(pairs)
}

/// One line of corpus input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub corpus_id: String,
    pub article_id: String,
    #[serde(default)]
    pub date: String,
    #[serde(default)]
    pub topic_id: String,
    pub sentence_index: usize,
    pub text: String,
}

impl CorpusRecord {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.corpus_id, self.article_id, self.date, self.topic_id, self.sentence_index, self.text
        )
    }
}

fn parse_tsv_record(line: &str) -> std::result::Result<CorpusRecord, String> {
    let fields: Vec<&str> = line.splitn(6, '\t').collect();
    if fields.len() != 6 {
        return Err(format!("expected 6 tab-separated fields, found {}", fields.len()));
    }
    Ok(CorpusRecord {
        corpus_id: fields[0].to_string(),
        article_id: fields[1].to_string(),
        date: fields[2].to_string(),
        topic_id: fields[3].to_string(),
        sentence_index: fields[4]
            .trim()
            .parse()
            .map_err(|_| format!("sentence_index `{}` is not a non-negative integer", fields[4]))?,
        text: fields[5].to_string(),
    })
}

/// Reads a corpus in the tab-separated format, or JSON lines when a line
/// starts with `{`. Blank lines and `#` comments are skipped.
pub fn read_corpus(reader: impl BufRead, source_name: &str) -> Result<Vec<Article>> {
    let mut articles: BTreeMap<String, Article> = BTreeMap::new();
    let mut seen_any = false;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        seen_any = true;
        let record = if trimmed.trim_start().starts_with('{') {
            serde_json::from_str::<CorpusRecord>(trimmed).map_err(|e| e.to_string())
        } else {
            parse_tsv_record(trimmed)
        }
        .map_err(|m| Error::parse(source_name, lineno, m))?;
        add_record(&mut articles, record).map_err(|m| Error::parse(source_name, lineno, m))?;
    }
    if !seen_any {
        return Err(Error::EmptyCorpus(source_name.to_string()));
    }
    let mut out: Vec<Article> = articles.into_values().collect();
    for a in &mut out {
        a.sentences.sort_by_key(|s| s.position);
    }
    Ok(out)
}

fn add_record(
    articles: &mut BTreeMap<String, Article>,
    r: CorpusRecord,
) -> std::result::Result<(), String> {
    let corpus: CorpusId = r.corpus_id.parse()?;
    if r.article_id.is_empty() || r.article_id.chars().any(char::is_whitespace) {
        return Err(format!("invalid article id `{}`", r.article_id));
    }
    let date = match r.date.trim() {
        "" => None,
        d => Some(
            NaiveDate::parse_from_str(d, "%Y-%m-%d")
                .map_err(|_| format!("date `{d}` is not YYYY-MM-DD"))?,
        ),
    };
    let topic = Some(r.topic_id.trim().to_string()).filter(|t| !t.is_empty());
    let sentence = Sentence::from_raw(corpus, &r.article_id, r.sentence_index, &r.text)
        .map_err(|e| e.to_string())?;
    let article = articles
        .entry(r.article_id.clone())
        .or_insert_with(|| Article {
            id: r.article_id.clone(),
            corpus,
            date,
            topic_id: topic.clone(),
            sentences: Vec::new(),
        });
    if article.corpus != corpus || article.date != date || article.topic_id != topic {
        return Err(format!(
            "article {} has inconsistent corpus/date/topic metadata",
            r.article_id
        ));
    }
    if article.sentences.iter().any(|s| s.position == r.sentence_index) {
        return Err(format!(
            "duplicate sentence_index {} in article {}",
            r.sentence_index, r.article_id
        ));
    }
    article.sentences.push(sentence);
    Ok(())
}

/// Joins surfaces with single spaces, attaching closing punctuation to the
/// previous word.
pub fn render_surfaces<'a>(surfaces: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    let mut attach_next = false;
    for s in surfaces {
        let closing = s.chars().all(|c| TRAILING_PUNCT.contains(&c)) && s != "\"" && s != "'";
        if !out.is_empty() && !closing && !attach_next {
            out.push(' ');
        }
        out.push_str(s);
        attach_next = s.len() == 1 && LEADING_PUNCT.contains(&s.chars().next().unwrap_or(' '));
    }
    out
}
