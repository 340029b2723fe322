//! Deterministic text cleaning and whitespace tokenization.
//!
//! Cleaning steps run in a fixed order: lowercase, hashtag removal,
//! punctuation removal, whitespace collapse, stopword removal. URLs are left
//! alone (apart from losing their punctuation).

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static PUNCT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r##"[\p{P}!"#$%&'()*+,\-./:;<=>?@\[\\\]^_`{|}~]"##).unwrap());

const EN_V1: &str = include_str!("stopwords_en_v1.txt");

static EN_V1_SET: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| EN_V1.lines().map(str::trim).filter(|l| !l.is_empty()).collect());

/// Bundled stopword lists, identified by a versioned id.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopwordList {
    /// 179-entry English list.
    #[default]
    #[serde(rename = "en-179-v1")]
    EnglishV1,
}

impl StopwordList {
    pub fn id(self) -> &'static str {
        match self {
            StopwordList::EnglishV1 => "en-179-v1",
        }
    }

    pub fn words(self) -> &'static HashSet<&'static str> {
        match self {
            StopwordList::EnglishV1 => &EN_V1_SET,
        }
    }

    pub fn from_id(id: &str) -> Option<StopwordList> {
        (id == "en-179-v1").then_some(StopwordList::EnglishV1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HashtagMode {
    /// Drop the whole `#tag` token.
    #[default]
    DropToken,
    /// Drop only the `#` and keep the tag word.
    DropSymbol,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    pub lowercase: bool,
    pub strip_hashtags: bool,
    pub hashtag_mode: HashtagMode,
    pub strip_punctuation: bool,
    pub remove_stopwords: bool,
    pub stopword_list: StopwordList,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            lowercase: true,
            strip_hashtags: true,
            hashtag_mode: HashtagMode::DropToken,
            strip_punctuation: true,
            remove_stopwords: true,
            stopword_list: StopwordList::EnglishV1,
        }
    }
}

impl CleanConfig {
    /// Every step disabled; cleaning only collapses whitespace.
    pub fn identity() -> Self {
        CleanConfig {
            lowercase: false,
            strip_hashtags: false,
            hashtag_mode: HashtagMode::DropToken,
            strip_punctuation: false,
            remove_stopwords: false,
            stopword_list: StopwordList::EnglishV1,
        }
    }

    /// Short description stored alongside artifacts built from cleaned text.
    pub fn id(&self) -> String {
        let flag = |on: bool| if on { "1" } else { "0" };
        format!(
            "clean:lc{}-ht{}{}-p{}-sw{}:{}",
            flag(self.lowercase),
            flag(self.strip_hashtags),
            match self.hashtag_mode {
                HashtagMode::DropToken => "t",
                HashtagMode::DropSymbol => "s",
            },
            flag(self.strip_punctuation),
            flag(self.remove_stopwords),
            self.stopword_list.id()
        )
    }
}

/// Unicode `P*` characters plus the ASCII symbol set.
pub fn is_punctuation(c: char) -> bool {
    let mut buf = [0u8; 4];
    PUNCT.is_match(c.encode_utf8(&mut buf))
}

pub fn clean_text(raw: &str, cfg: &CleanConfig) -> String {
    let mut text = if cfg.lowercase {
        raw.to_lowercase()
    } else {
        raw.to_string()
    };

    if cfg.strip_hashtags {
        text = match cfg.hashtag_mode {
            HashtagMode::DropToken => text
                .split_whitespace()
                .filter(|t| !t.starts_with('#'))
                .collect::<Vec<_>>()
                .join(" "),
            HashtagMode::DropSymbol => text.replace('#', ""),
        };
    }

    if cfg.strip_punctuation {
        text = PUNCT.replace_all(&text, "").into_owned();
    }

    let stopwords = cfg.stopword_list.words();
    text.split_whitespace()
        .filter(|t| !(cfg.remove_stopwords && stopwords.contains(t)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn tokenize(cleaned: &str) -> Vec<&str> {
    cleaned.split_whitespace().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bundled_list_has_179_entries() {
        assert_eq!(StopwordList::EnglishV1.words().len(), 179);
        for w in ["the", "is", "now"] {
            assert!(StopwordList::EnglishV1.words().contains(w));
        }
    }

    #[test]
    fn ordered_steps() {
        assert_eq!(clean_text("The CURE is #fake NOW!", &CleanConfig::default()), "cure");
    }

    #[test]
    fn empty_and_identity() {
        assert_eq!(clean_text("", &CleanConfig::default()), "");
        assert_eq!(clean_text("covid", &CleanConfig::identity()), "covid");
    }

    #[test]
    fn hashtag_symbol_mode_keeps_word() {
        let cfg = CleanConfig {
            hashtag_mode: HashtagMode::DropSymbol,
            ..CleanConfig::default()
        };
        assert_eq!(clean_text("The CURE is #fake NOW!", &cfg), "cure fake");
    }

    #[test]
    fn urls_survive_as_tokens() {
        let out = clean_text("see https://t.co/abc now", &CleanConfig::default());
        assert_eq!(out, "see httpstcoabc");
    }

    #[test]
    fn unicode_punctuation() {
        assert!(is_punctuation('¿'));
        assert!(is_punctuation('\u{2014}'));
        assert!(is_punctuation('$'));
        assert!(is_punctuation('~'));
        assert!(!is_punctuation('a'));
        assert!(!is_punctuation('é'));
        assert_eq!(clean_text("«vaccine» works…", &CleanConfig::default()), "vaccine works");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("a  b"), vec!["a", "b"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("covid 19 cases"), vec!["covid", "19", "cases"]);
    }

    fn any_config() -> impl Strategy<Value = CleanConfig> {
        (any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()).prop_map(
            |(lc, ht, sym, p, sw)| CleanConfig {
                lowercase: lc,
                strip_hashtags: ht,
                hashtag_mode: if sym { HashtagMode::DropSymbol } else { HashtagMode::DropToken },
                strip_punctuation: p,
                remove_stopwords: sw,
                stopword_list: StopwordList::EnglishV1,
            },
        )
    }

    proptest! {
        #[test]
        fn idempotent(raw in "\\PC{0,60}", cfg in any_config()) {
            let once = clean_text(&raw, &cfg);
            prop_assert_eq!(clean_text(&once, &cfg), once);
        }

        #[test]
        fn no_punctuation_or_stopwords_left(raw in "[a-zA-Z#!?.,' ]{0,60}|\\PC{0,40}") {
            let cfg = CleanConfig::default();
            let out = clean_text(&raw, &cfg);
            prop_assert!(!out.chars().any(is_punctuation));
            for t in tokenize(&out) {
                prop_assert!(!cfg.stopword_list.words().contains(t));
            }
        }

        #[test]
        fn tokens_never_empty(s in "\\PC{0,60}") {
            prop_assert!(tokenize(&s).iter().all(|t| !t.is_empty()));
        }
    }
}
