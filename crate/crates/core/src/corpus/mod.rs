//! Corpus ingestion and the statistics built on top of it.

pub mod bm25;
pub mod lm;
pub mod nouns;
pub mod pairs;
pub mod select;
pub mod text;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use bm25::{Bm25Index, Bm25Params};
pub use pairs::{PostResponsePair, Split};
use text::{lemma, split_sentences, tokenize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub paragraphs: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, paragraphs: Vec<String>) -> Self {
        Document {
            id: id.into(),
            text: paragraphs.join("\n"),
            paragraphs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    PlainText,
    PairList,
}

/// A sentence of the corpus with its location.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sentence {
    pub doc: usize,
    pub paragraph: usize,
    pub text: String,
    pub lemmas: Vec<String>,
}

/// Lemma document frequencies with a smoothed IDF.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct IdfTable {
    n_docs: u64,
    df: BTreeMap<String, u64>,
}

impl IdfTable {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut table = IdfTable::default();
        for t in texts {
            table.add(t);
        }
        table
    }

    pub fn add(&mut self, text: &str) {
        self.n_docs += 1;
        let unique: BTreeSet<String> = tokenize(text).iter().map(|t| lemma(t)).collect();
        for l in unique {
            *self.df.entry(l).or_insert(0) += 1;
        }
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn df(&self, lemma: &str) -> u64 {
        self.df.get(lemma).copied().unwrap_or(0)
    }

    /// `ln((1 + N) / (1 + df)) + 1`; unseen lemmas get the largest value.
    pub fn idf(&self, lemma: &str) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df(lemma) as f64)).ln() + 1.0
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.df.keys().map(String::as_str)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
    pairs: Vec<PostResponsePair>,
    token_freq: BTreeMap<String, u64>,
    lemma_freq: BTreeMap<String, u64>,
    /// (document index, paragraph position) for every paragraph, in order.
    paragraphs: Vec<(usize, usize)>,
    sentences: Vec<Sentence>,
    lemma_sentences: BTreeMap<String, Vec<usize>>,
    idf: IdfTable,
    bm25: Bm25Index<f64>,
}

impl Corpus {
    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        Self::build(documents, Vec::new())
    }

    pub fn from_pairs(pairs: Vec<PostResponsePair>) -> Result<Self> {
        let documents = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Document::new(
                    format!("pair{i:06}"),
                    vec![p.post.clone(), p.golden_response.clone()],
                )
            })
            .collect();
        Self::build(documents, pairs)
    }

    fn build(documents: Vec<Document>, pairs: Vec<PostResponsePair>) -> Result<Self> {
        if documents.iter().all(|d| d.paragraphs.is_empty()) {
            return Err(Error::EmptyCorpus);
        }
        let mut token_freq = BTreeMap::new();
        let mut lemma_freq = BTreeMap::new();
        let mut paragraphs = Vec::new();
        let mut sentences = Vec::new();
        let mut lemma_sentences: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut idf = IdfTable::default();
        let mut units = Vec::new();

        for (d, doc) in documents.iter().enumerate() {
            for (p, para) in doc.paragraphs.iter().enumerate() {
                let pid = paragraphs.len();
                paragraphs.push((d, p));
                idf.add(para);
                units.push((doc.id.clone(), p, para.as_str()));
                for tok in tokenize(para) {
                    *lemma_freq.entry(lemma(&tok)).or_insert(0) += 1;
                    *token_freq.entry(tok).or_insert(0) += 1;
                }
                for s in split_sentences(para) {
                    let lemmas: Vec<String> = tokenize(&s).iter().map(|t| lemma(t)).collect();
                    let sid = sentences.len();
                    let unique: BTreeSet<&String> = lemmas.iter().collect();
                    for l in unique {
                        lemma_sentences.entry(l.clone()).or_default().push(sid);
                    }
                    sentences.push(Sentence {
                        doc: d,
                        paragraph: pid,
                        text: s,
                        lemmas,
                    });
                }
            }
        }
        if token_freq.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let bm25 = Bm25Index::build(units, Bm25Params::default());
        Ok(Corpus {
            documents,
            pairs,
            token_freq,
            lemma_freq,
            paragraphs,
            sentences,
            lemma_sentences,
            idf,
            bm25,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn pairs(&self) -> &[PostResponsePair] {
        &self.pairs
    }

    pub fn token_frequency(&self, token: &str) -> u64 {
        self.token_freq.get(&token.to_lowercase()).copied().unwrap_or(0)
    }

    pub fn lemma_frequency(&self, lemma: &str) -> u64 {
        self.lemma_freq.get(lemma).copied().unwrap_or(0)
    }

    pub fn token_frequencies(&self) -> &BTreeMap<String, u64> {
        &self.token_freq
    }

    pub fn total_tokens(&self) -> u64 {
        self.token_freq.values().sum()
    }

    pub fn paragraph_count(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn paragraph(&self, pid: usize) -> &str {
        let (d, p) = self.paragraphs[pid];
        &self.documents[d].paragraphs[p]
    }

    pub fn paragraph_location(&self, pid: usize) -> (usize, usize) {
        self.paragraphs[pid]
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    /// Indices of sentences whose lemmas include `lemma`, in corpus order.
    pub fn sentences_with(&self, lemma: &str) -> &[usize] {
        self.lemma_sentences.get(lemma).map_or(&[], Vec::as_slice)
    }

    /// Sentence indices belonging to paragraph `pid`, in order.
    pub fn sentences_of_paragraph(&self, pid: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.sentences.partition_point(|s| s.paragraph < pid);
        (start..self.sentences.len()).take_while(move |&i| self.sentences[i].paragraph == pid)
    }

    pub fn idf(&self) -> &IdfTable {
        &self.idf
    }

    pub fn bm25(&self) -> &Bm25Index<f64> {
        &self.bm25
    }

    /// Every paragraph text, in corpus order.
    pub fn paragraph_texts(&self) -> impl Iterator<Item = &str> {
        self.paragraphs
            .iter()
            .map(|&(d, p)| self.documents[d].paragraphs[p].as_str())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Malformed {
                line: e.line(),
                message: e.to_string(),
            })
    }
}

/// Reads a corpus file. Plain text holds one document per line, unless blank
/// lines are present: then each blank-line separated block is a document and
/// each of its lines a paragraph.
pub fn ingest_corpus(path: &Path, format: Format) -> Result<Corpus> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let lines = decode_lines(&bytes)?;
    match format {
        Format::PlainText => Corpus::from_documents(parse_plain(&lines)),
        Format::PairList => Corpus::from_pairs(pairs::parse_pair_lines(&lines)?),
    }
}

pub fn decode_lines(bytes: &[u8]) -> Result<Vec<String>> {
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, raw)| {
            let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
            std::str::from_utf8(raw)
                .map(str::to_string)
                .map_err(|e| Error::Malformed {
                    line: i + 1,
                    message: format!("invalid UTF-8: {e}"),
                })
        })
        .collect()
}

pub fn parse_plain(lines: &[String]) -> Vec<Document> {
    let has_blocks = {
        let first = lines.iter().position(|l| !l.trim().is_empty());
        let last = lines.iter().rposition(|l| !l.trim().is_empty());
        match (first, last) {
            (Some(a), Some(b)) => lines[a..b].iter().any(|l| l.trim().is_empty()),
            _ => false,
        }
    };
    let mut docs = Vec::new();
    if has_blocks {
        let mut block = Vec::new();
        for line in lines.iter().chain(std::iter::once(&String::new())) {
            if line.trim().is_empty() {
                if !block.is_empty() {
                    docs.push(Document::new(format!("doc{:06}", docs.len()), std::mem::take(&mut block)));
                }
            } else {
                block.push(line.trim().to_string());
            }
        }
    } else {
        for line in lines.iter().filter(|l| !l.trim().is_empty()) {
            docs.push(Document::new(format!("doc{:06}", docs.len()), vec![line.trim().to_string()]));
        }
    }
    docs
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents).unwrap();
        f
    }

    #[test]
    fn three_lines_three_documents() {
        let f = write_tmp(b"The cat sat.\nThe dog ran.\nA bird sang.\n");
        let c = ingest_corpus(f.path(), Format::PlainText).unwrap();
        assert_eq!(c.documents().len(), 3);
        assert_eq!(c.token_frequency("the"), 2);
    }

    #[test]
    fn blank_lines_make_blocks() {
        let f = write_tmp(b"First para.\nSecond para.\n\nOther doc.\n");
        let c = ingest_corpus(f.path(), Format::PlainText).unwrap();
        assert_eq!(c.documents().len(), 2);
        assert_eq!(c.documents()[0].paragraphs.len(), 2);
        assert_eq!(c.documents()[0].text, "First para.\nSecond para.");
        assert_eq!(c.paragraph_count(), 3);
    }

    #[test]
    fn empty_and_invalid_inputs() {
        let f = write_tmp(b"\n  \n");
        assert!(matches!(ingest_corpus(f.path(), Format::PlainText), Err(Error::EmptyCorpus)));
        let f = write_tmp(b"ok line\n\xff\xfe\n");
        match ingest_corpus(f.path(), Format::PlainText) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sentence_index_finds_lemmas() {
        let docs = vec![Document::new("a", vec!["Bananas are yellow. Apples are red.".into()])];
        let c = Corpus::from_documents(docs).unwrap();
        assert_eq!(c.sentences().len(), 2);
        assert_eq!(c.sentences_with(&lemma("banana")), &[0]);
        assert_eq!(c.sentences_of_paragraph(0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn idf_orders_rare_above_common() {
        let t = IdfTable::from_texts(["a cat", "a dog", "a cat and a bird"]);
        assert!(t.idf("bird") > t.idf("cat"));
        assert!(t.idf("unknown") >= t.idf("bird"));
    }
}
