use std::collections::BTreeSet;
use std::sync::OnceLock;

use crate::error::{Error, Result};

static ENGLISH_LIST: &str = include_str!("english_stop_words.txt");

/// The 318-word English stop list used by common TF-IDF vectorizers.
pub fn english_stop_words() -> &'static BTreeSet<String> {
    static WORDS: OnceLock<BTreeSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| ENGLISH_LIST.lines().map(str::to_owned).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum StopWords {
    #[default]
    None,
    English,
    Custom(BTreeSet<String>),
}

impl StopWords {
    fn contains(&self, token: &str) -> bool {
        match self {
            StopWords::None => false,
            StopWords::English => english_stop_words().contains(token),
            StopWords::Custom(set) => set.contains(token),
        }
    }
}

/// Tokenization settings shared by vocabulary fitting, transformation and
/// corpus statistics.
///
/// Tokens are maximal runs of word characters (Unicode alphanumerics and
/// `_`) at least `min_token_len` characters long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub min_token_len: usize,
    pub stop_words: StopWords,
    pub ngram_range: (usize, usize),
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            min_token_len: 2,
            stop_words: StopWords::None,
            ngram_range: (1, 1),
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.ngram_range;
        if lo < 1 || hi < lo {
            return Err(Error::Config(format!(
                "ngram_range must satisfy 1 <= lo <= hi, got ({lo}, {hi})"
            )));
        }
        if self.min_token_len < 1 {
            return Err(Error::Config("min_token_len must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical one-line description, used for hashing and persistence.
    pub fn canonical(&self) -> String {
        let stop = match &self.stop_words {
            StopWords::None => "none".to_string(),
            StopWords::English => "english".to_string(),
            StopWords::Custom(set) => {
                let words: Vec<&str> = set.iter().map(String::as_str).collect();
                format!("custom:{}", words.join(","))
            }
        };
        format!(
            "lowercase={};min_token_len={};ngram_range={},{};stop_words={}",
            self.lowercase, self.min_token_len, self.ngram_range.0, self.ngram_range.1, stop
        )
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    cfg: TokenizerConfig,
}

impl Tokenizer {
    pub fn new(cfg: TokenizerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Tokenizer { cfg })
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.cfg
    }

    /// Uni-gram tokens with stop words removed.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        let lowered;
        let text = if self.cfg.lowercase {
            lowered = text.to_lowercase();
            lowered.as_str()
        } else {
            text
        };
        let mut out = Vec::new();
        let mut start = None;
        let mut len = 0usize;
        let flush = |start: Option<usize>, end: usize, len: usize, out: &mut Vec<String>| {
            if let Some(s) = start {
                if len >= self.cfg.min_token_len {
                    let tok = &text[s..end];
                    if !self.cfg.stop_words.contains(tok) {
                        out.push(tok.to_owned());
                    }
                }
            }
        };
        for (i, c) in text.char_indices() {
            if is_word_char(c) {
                if start.is_none() {
                    start = Some(i);
                    len = 0;
                }
                len += 1;
            } else {
                flush(start, i, len, &mut out);
                start = None;
            }
        }
        flush(start, text.len(), len, &mut out);
        out
    }

    /// Terms for the vocabulary: n-grams over the token stream, joined by a
    /// single space.
    pub fn terms(&self, text: &str) -> Vec<String> {
        let tokens = self.tokens(text);
        let (lo, hi) = self.cfg.ngram_range;
        if (lo, hi) == (1, 1) {
            return tokens;
        }
        let mut out = Vec::new();
        for n in lo..=hi {
            if n > tokens.len() {
                break;
            }
            for window in tokens.windows(n) {
                out.push(window.join(" "));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(cfg: TokenizerConfig) -> Tokenizer {
        Tokenizer::new(cfg).unwrap()
    }

    #[test]
    fn default_drops_single_characters() {
        let t = tok(TokenizerConfig::default());
        assert_eq!(t.tokens("A b-cd, Éfg_h 42 x"), vec!["cd", "éfg_h", "42"]);
    }

    #[test]
    fn single_char_tokens_when_configured() {
        let t = tok(TokenizerConfig {
            min_token_len: 1,
            ..Default::default()
        });
        assert_eq!(t.tokens("a b a"), vec!["a", "b", "a"]);
    }

    #[test]
    fn english_stop_words_removed() {
        assert_eq!(english_stop_words().len(), 318);
        let t = tok(TokenizerConfig {
            stop_words: StopWords::English,
            ..Default::default()
        });
        assert_eq!(t.tokens("The cat and the hat"), vec!["cat", "hat"]);
    }

    #[test]
    fn ngrams_after_stop_words() {
        let t = tok(TokenizerConfig {
            ngram_range: (1, 3),
            stop_words: StopWords::English,
            ..Default::default()
        });
        assert_eq!(
            t.terms("red the fox runs"),
            vec!["red", "fox", "runs", "red fox", "fox runs", "red fox runs"]
        );
        let bigrams = tok(TokenizerConfig {
            ngram_range: (2, 2),
            ..Default::default()
        });
        assert!(bigrams.terms("single").is_empty());
    }

    #[test]
    fn rejects_bad_ngram_range() {
        for range in [(0, 1), (2, 1)] {
            let cfg = TokenizerConfig {
                ngram_range: range,
                ..Default::default()
            };
            assert!(Tokenizer::new(cfg).is_err());
        }
    }

    #[test]
    fn case_preserved_without_lowercase() {
        let t = tok(TokenizerConfig {
            lowercase: false,
            ..Default::default()
        });
        assert_eq!(t.tokens("Hello WORLD"), vec!["Hello", "WORLD"]);
    }
}
