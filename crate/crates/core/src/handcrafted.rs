//! The 16 statistical word and character features computed on raw post text.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::preprocess::is_punctuation;

pub const DIM: usize = 16;

pub const FEATURE_NAMES: [&str; DIM] = [
    "word_max_len",
    "word_min_len",
    "word_avg_len",
    "word_len_std",
    "upper_initial_count",
    "lower_initial_count",
    "digit_count",
    "letter_count",
    "space_count",
    "punct_count",
    "hashtag_count",
    "vowel_a",
    "vowel_e",
    "vowel_i",
    "vowel_o",
    "vowel_u",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WordStats {
    pub max_len: f64,
    pub min_len: f64,
    pub avg_len: f64,
    pub len_std: f64,
    pub upper_initial: u32,
    pub lower_initial: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CharStats {
    pub digits: u32,
    pub letters: u32,
    pub spaces: u32,
    pub punct: u32,
    pub hashtags: u32,
    /// Case-insensitive counts of a, e, i, o, u.
    pub vowels: [u32; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HandcraftedVector {
    pub words: WordStats,
    pub chars: CharStats,
}

impl HandcraftedVector {
    pub fn to_array(&self) -> [f64; DIM] {
        let w = &self.words;
        let c = &self.chars;
        [
            w.max_len,
            w.min_len,
            w.avg_len,
            w.len_std,
            f64::from(w.upper_initial),
            f64::from(w.lower_initial),
            f64::from(c.digits),
            f64::from(c.letters),
            f64::from(c.spaces),
            f64::from(c.punct),
            f64::from(c.hashtags),
            f64::from(c.vowels[0]),
            f64::from(c.vowels[1]),
            f64::from(c.vowels[2]),
            f64::from(c.vowels[3]),
            f64::from(c.vowels[4]),
        ]
    }
}

/// Word-length aggregates over the whitespace-split raw text. Lengths are in
/// characters and the standard deviation is the population one. A post with
/// no words yields all zeros.
pub fn word_stats(raw: &str) -> WordStats {
    let mut stats = WordStats::default();
    let lengths: Vec<f64> = raw
        .split_whitespace()
        .map(|w| {
            match w.chars().next() {
                Some(c) if c.is_uppercase() => stats.upper_initial += 1,
                Some(c) if c.is_lowercase() => stats.lower_initial += 1,
                _ => {}
            }
            w.chars().count() as f64
        })
        .collect();
    if lengths.is_empty() {
        return stats;
    }
    let n = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / n;
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    stats.max_len = lengths.iter().copied().fold(f64::MIN, f64::max);
    stats.min_len = lengths.iter().copied().fold(f64::MAX, f64::min);
    stats.avg_len = mean;
    stats.len_std = var.sqrt();
    stats
}

/// Character-class counts. Each character lands in at most one bucket; `#`
/// counts as a hashtag and never as punctuation.
pub fn char_stats(raw: &str) -> CharStats {
    let mut s = CharStats::default();
    for c in raw.chars() {
        if c == '#' {
            s.hashtags += 1;
        } else if c.is_numeric() {
            s.digits += 1;
        } else if c.is_alphabetic() {
            s.letters += 1;
            match c.to_ascii_lowercase() {
                'a' => s.vowels[0] += 1,
                'e' => s.vowels[1] += 1,
                'i' => s.vowels[2] += 1,
                'o' => s.vowels[3] += 1,
                'u' => s.vowels[4] += 1,
                _ => {}
            }
        } else if c.is_whitespace() {
            s.spaces += 1;
        } else if is_punctuation(c) {
            s.punct += 1;
        }
    }
    s
}

pub fn handcrafted_vector(raw: &str) -> HandcraftedVector {
    HandcraftedVector {
        words: word_stats(raw),
        chars: char_stats(raw),
    }
}

/// One row of 16 features per text.
pub fn feature_matrix<'a>(texts: impl IntoIterator<Item = &'a str>) -> Array2<f64> {
    let rows: Vec<[f64; DIM]> = texts
        .into_iter()
        .map(|t| handcrafted_vector(t).to_array())
        .collect();
    let mut m = Array2::zeros((rows.len(), DIM));
    for (i, r) in rows.iter().enumerate() {
        m.row_mut(i).assign(&ndarray::ArrayView1::from(&r[..]));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    #[test]
    fn word_stats_example() {
        // lengths {2, 4, 3, 6}: mean 3.75, squared deviations sum to 8.75
        let w = word_stats("Go home now #covid");
        assert_eq!((w.max_len, w.min_len, w.avg_len), (6.0, 2.0, 3.75));
        assert_abs_diff_eq!(w.len_std, (8.75f64 / 4.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(w.len_std, 1.47902, epsilon = 1e-5);
        assert_eq!((w.upper_initial, w.lower_initial), (1, 2));
    }

    #[test]
    fn word_stats_degenerate() {
        assert_eq!(word_stats(""), WordStats::default());
        assert_eq!(word_stats("   "), WordStats::default());
        let w = word_stats("Aa Aa");
        assert_eq!((w.max_len, w.min_len, w.avg_len, w.len_std), (2.0, 2.0, 2.0, 0.0));
        assert_eq!((w.upper_initial, w.lower_initial), (2, 0));
    }

    #[test]
    fn char_stats_examples() {
        let c = char_stats("Go home now #covid");
        assert_eq!(
            c,
            CharStats { digits: 0, letters: 14, spaces: 3, punct: 0, hashtags: 1, vowels: [0, 1, 1, 4, 0] }
        );
        assert_eq!(char_stats(""), CharStats::default());
        assert_eq!(
            char_stats("1!a"),
            CharStats { digits: 1, letters: 1, spaces: 0, punct: 1, hashtags: 0, vowels: [1, 0, 0, 0, 0] }
        );
    }

    #[test]
    fn vector_is_concatenation() {
        assert_eq!(handcrafted_vector("").to_array(), [0.0; DIM]);
        let v = handcrafted_vector("Go home now #covid").to_array();
        let w = word_stats("Go home now #covid");
        assert_eq!(
            &v[..6],
            &[w.max_len, w.min_len, w.avg_len, w.len_std, 1.0, 2.0]
        );
        assert_eq!(&v[6..], &[0.0, 14.0, 3.0, 0.0, 1.0, 0.0, 1.0, 1.0, 4.0, 0.0]);
    }

    #[test]
    fn matrix_shape() {
        let m = feature_matrix(["a", "b c", ""]);
        assert_eq!(m.dim(), (3, DIM));
    }

    proptest! {
        #[test]
        fn bucket_invariants(raw in "\\PC{0,80}") {
            let c = char_stats(&raw);
            prop_assert!(c.vowels.iter().sum::<u32>() <= c.letters);
            let bucketed = c.digits + c.letters + c.spaces + c.punct + c.hashtags;
            prop_assert!(bucketed as usize <= raw.chars().count());
            let w = word_stats(&raw);
            if raw.split_whitespace().next().is_some() {
                prop_assert!(w.min_len <= w.avg_len + 1e-12 && w.avg_len <= w.max_len + 1e-12);
            }
            prop_assert_eq!(handcrafted_vector(&raw).to_array().len(), DIM);
        }

        #[test]
        fn word_order_invariance(words in proptest::collection::vec("[A-Za-z0-9#!]{1,8}", 1..10), seed in any::<u64>()) {
            let mut shuffled = words.clone();
            shuffled.shuffle(&mut crate::seed::rng(seed, "test"));
            let a = handcrafted_vector(&words.join(" "));
            let b = handcrafted_vector(&shuffled.join(" "));
            prop_assert_eq!(a.chars, b.chars);
            prop_assert_eq!(a.words.max_len, b.words.max_len);
            prop_assert_eq!(a.words.min_len, b.words.min_len);
            prop_assert_eq!(a.words.upper_initial, b.words.upper_initial);
            prop_assert_eq!(a.words.lower_initial, b.words.lower_initial);
            prop_assert!((a.words.avg_len - b.words.avg_len).abs() < 1e-12);
            prop_assert!((a.words.len_std - b.words.len_std).abs() < 1e-12);
        }
    }
}
