//! Tokenization, sentence splitting and the suffix-stripping lemmatizer.
//!
//! Tokens are maximal runs of alphanumeric characters (an apostrophe between
//! two letters stays inside the token, so `banana's` is one token). Every
//! token is lowercased. Punctuation is dropped.

use std::collections::HashSet;
use std::sync::OnceLock;

/// A token together with its byte range in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
    pub lower: String,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

pub fn tokenize_spans(text: &str) -> Vec<TokenSpan> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if !c.is_alphanumeric() {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            if c.is_alphanumeric() {
                j += 1;
            } else if is_apostrophe(c) && j + 1 < chars.len() && chars[j + 1].1.is_alphanumeric() {
                j += 2;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
        out.push(TokenSpan {
            start,
            end,
            lower: text[start..end].to_lowercase(),
        });
        i = j;
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_spans(text).into_iter().map(|t| t.lower).collect()
}

/// Splits on runs of `.`, `!` or `?` followed by whitespace or end of text.
/// Fragments without any token are dropped.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') {
            while let Some(&n) = chars.peek() {
                if matches!(n, '.' | '!' | '?') {
                    current.push(n);
                    chars.next();
                } else {
                    break;
                }
            }
            if chars.peek().is_none_or(|n| n.is_whitespace()) {
                push_sentence(&mut out, &mut current);
            }
        }
    }
    push_sentence(&mut out, &mut current);
    out
}

fn push_sentence(out: &mut Vec<String>, current: &mut String) {
    let s = current.trim();
    if !tokenize_spans(s).is_empty() {
        out.push(s.to_string());
    }
    current.clear();
}

pub fn sentence_count(text: &str) -> usize {
    split_sentences(text).len()
}

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "don't", "down", "during", "each",
    "either", "else", "even", "ever", "every", "few", "for", "from", "further", "had", "has",
    "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
    "i", "i'm", "if", "in", "into", "is", "isn't", "it", "it's", "its", "itself", "just", "me",
    "might", "more", "most", "much", "must", "my", "myself", "neither", "no", "nor", "not", "now",
    "of", "off", "often", "on", "once", "one", "only", "or", "other", "our", "ours", "ourselves",
    "out", "over", "own", "quite", "rather", "really", "same", "shall", "she", "should", "so",
    "some", "such", "than", "that", "that's", "the", "their", "theirs", "them", "themselves",
    "then", "there", "these", "they", "this", "those", "though", "through", "to", "too", "under",
    "until", "up", "upon", "us", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "whose", "why", "will", "with", "within", "without", "would", "yet",
    "you", "your", "yours", "yourself", "yourselves", "also", "many", "usually", "always",
    "never", "still", "well", "yes", "okay", "ok", "oh", "lot", "lots", "thing", "things",
    "get", "got", "go", "goes", "going", "make", "makes", "made", "say", "says", "said",
    "think", "thought", "know", "like", "let", "lets", "let's", "thats", "im", "dont", "it'd",
    "you're", "they're", "we're", "i've", "you've", "i'd", "can't", "won't", "didn't", "doesn't",
];

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token.to_lowercase().as_str())
}

/// A token carries content when it contains a letter and is not a stopword.
pub fn is_content(token: &str) -> bool {
    token.chars().any(char::is_alphabetic) && !is_stopword(token)
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

fn undouble(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !is_vowel(b[n - 1]) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        stem[..n - 1].to_string()
    } else {
        stem.to_string()
    }
}

/// One application of the first matching rule, or `None` when no rule fires.
fn strip_once(w: &str) -> Option<String> {
    for suffix in ["'s", "\u{2019}s"] {
        if let Some(stem) = w.strip_suffix(suffix) {
            if !stem.is_empty() {
                return Some(stem.to_string());
            }
        }
    }
    if !w.bytes().all(|b| b.is_ascii_lowercase()) {
        return None;
    }
    let n = w.len();
    if n >= 5 && w.ends_with("ies") {
        return Some(w[..n - 2].to_string());
    }
    if w.ends_with("sses") {
        return Some(w[..n - 2].to_string());
    }
    if n >= 5 && ["xes", "zes", "ches", "shes"].iter().any(|s| w.ends_with(s)) {
        return Some(w[..n - 2].to_string());
    }
    if n >= 4 && w.ends_with('s') && !["ss", "us", "is"].iter().any(|s| w.ends_with(s)) {
        return Some(w[..n - 1].to_string());
    }
    if n >= 6 && w.ends_with("ing") && w.as_bytes()[..n - 3].iter().copied().any(is_vowel) {
        return Some(undouble(&w[..n - 3]));
    }
    if n >= 5 && w.ends_with("ed") && !w.ends_with("eed") && w.as_bytes()[..n - 2].iter().copied().any(is_vowel) {
        return Some(undouble(&w[..n - 2]));
    }
    if n >= 4 && w.ends_with('e') && !w.ends_with("ee") {
        return Some(w[..n - 1].to_string());
    }
    if n >= 3 && w.ends_with('y') && !is_vowel(w.as_bytes()[n - 2]) {
        return Some(format!("{}i", &w[..n - 1]));
    }
    None
}

/// Lowercased stem used for morphological-variation equivalence.
///
/// The rule table is applied until nothing fires, so the function is
/// idempotent by construction.
pub fn lemma(token: &str) -> String {
    // Every rule shortens the word except y -> i, which leaves a word no
    // rule matches, so the loop terminates.
    let mut w = token.to_lowercase();
    while let Some(next) = strip_once(&w) {
        if next == w {
            break;
        }
        w = next;
    }
    w
}

/// Lemmas of all tokens in `text`, in order.
pub fn lemmas(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| lemma(t)).collect()
}

/// Lemmas of content tokens only.
pub fn content_lemmas(text: &str) -> Vec<String> {
    tokenize(text)
        .iter()
        .filter(|t| is_content(t))
        .map(|t| lemma(t))
        .collect()
}
