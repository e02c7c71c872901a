//! Emoji taxonomy and text scanning.
//!
//! The label space is a fixed list of smiley categories keyed by canonical
//! scalar sequences. Canonicalization strips presentation-only scalars
//! (variation selectors, skin-tone modifiers) so that rendering variants of
//! the same smiley land in the same category. ZWJ-joined sequences are a
//! different glyph, not a variant, and count as foreign.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Shipped default taxonomy: 92 single-codepoint face emojis.
const DEFAULT_TAXONOMY: &str = include_str!("data/smileys.tsv");

const ZWJ: char = '\u{200D}';

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sentiment {
    Positive,
    Negative,
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sentiment::Positive => "pos",
            Sentiment::Negative => "neg",
        })
    }
}

#[derive(Debug, Clone)]
pub struct EmojiCategory {
    pub id: usize,
    pub name: String,
    /// Canonical scalar sequence (normalized).
    pub key: String,
    pub base_sentiment: Option<Sentiment>,
    /// Mean signed annotator vote in [-1, 1]; sign agrees with
    /// `base_sentiment` whenever both are present.
    pub zsl_weight: Option<f32>,
}

#[derive(Debug, Clone)]
pub struct EmojiTaxonomy {
    categories: Vec<EmojiCategory>,
    index: HashMap<String, usize>,
}

/// Result of scanning one text for emoji occurrences.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmojiScan {
    /// Distinct taxonomy categories present (deduplicated).
    pub labels: BTreeSet<usize>,
    /// Occurrences that are emoji but not in the taxonomy.
    pub foreign: usize,
    /// Total emoji occurrences before deduplication, foreign included.
    pub occurrences: usize,
}

/// Strip variation selectors (U+FE00..U+FE0F) and skin-tone modifiers
/// (U+1F3FB..U+1F3FF), preserving everything else in order. Never lengthens
/// the input and is idempotent.
pub fn normalize_emoji(seq: &str) -> String {
    seq.chars().filter(|&c| !is_presentation_scalar(c)).collect()
}

fn is_presentation_scalar(c: char) -> bool {
    matches!(u32::from(c), 0xFE00..=0xFE0F | 0x1F3FB..=0x1F3FF)
}

/// Scalars that can open an emoji occurrence. A curated block list, not a
/// full property table; it covers the taxonomy plus the common pictograph
/// ranges so foreign emojis are counted sensibly.
fn is_emoji_base(c: char) -> bool {
    matches!(
        u32::from(c),
        0x231A..=0x231B
            | 0x23E9..=0x23FA
            | 0x2600..=0x27BF
            | 0x2B05..=0x2B07
            | 0x2B1B..=0x2B1C
            | 0x2B50
            | 0x2B55
            | 0x1F000..=0x1F0FF
            | 0x1F1E6..=0x1F1FF
            | 0x1F300..=0x1F3FA
            | 0x1F400..=0x1F64F
            | 0x1F680..=0x1F6FF
            | 0x1F900..=0x1F9FF
            | 0x1FA70..=0x1FAFF
    )
}

impl EmojiTaxonomy {
    /// The embedded 92-smiley default.
    pub fn builtin() -> EmojiTaxonomy {
        EmojiTaxonomy::from_str(DEFAULT_TAXONOMY).expect("embedded taxonomy is valid")
    }

    pub fn load(path: &Path) -> Result<EmojiTaxonomy> {
        let text = std::fs::read(path)?;
        let text = String::from_utf8(text)
            .map_err(|e| Error::Encoding(format!("{}: {e}", path.display())))?;
        EmojiTaxonomy::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<EmojiTaxonomy> {
        let mut categories: Vec<EmojiCategory> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(Error::Parse(format!(
                    "taxonomy line {}: expected 5 tab-separated fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let id: usize = fields[0].parse().map_err(|_| {
                Error::Parse(format!("taxonomy line {}: bad id {:?}", lineno + 1, fields[0]))
            })?;
            if id != categories.len() {
                return Err(Error::Parse(format!(
                    "taxonomy line {}: id {} out of order (expected {})",
                    lineno + 1,
                    id,
                    categories.len()
                )));
            }
            let name = fields[1].trim();
            if name.is_empty() {
                return Err(Error::Parse(format!("taxonomy line {}: empty name", lineno + 1)));
            }
            let mut raw_key = String::new();
            for part in fields[2].split(',') {
                raw_key.push(parse_scalar(part.trim(), lineno + 1)?);
            }
            let key = normalize_emoji(&raw_key);
            if key.is_empty() {
                return Err(Error::Parse(format!(
                    "taxonomy line {}: key normalizes to nothing",
                    lineno + 1
                )));
            }
            let base_sentiment = match fields[3].trim() {
                "pos" => Some(Sentiment::Positive),
                "neg" => Some(Sentiment::Negative),
                "-" => None,
                other => {
                    return Err(Error::Parse(format!(
                        "taxonomy line {}: bad sentiment {other:?}",
                        lineno + 1
                    )))
                }
            };
            let zsl_weight = match fields[4].trim() {
                "-" => None,
                w => {
                    let w: f32 = w.parse().map_err(|_| {
                        Error::Parse(format!("taxonomy line {}: bad weight {w:?}", lineno + 1))
                    })?;
                    if !w.is_finite() || !(-1.0..=1.0).contains(&w) {
                        return Err(Error::Parse(format!(
                            "taxonomy line {}: weight {w} outside [-1, 1]",
                            lineno + 1
                        )));
                    }
                    Some(w)
                }
            };
            if let (Some(s), Some(w)) = (base_sentiment, zsl_weight) {
                let agree = match s {
                    Sentiment::Positive => w > 0.0,
                    Sentiment::Negative => w < 0.0,
                };
                if !agree {
                    return Err(Error::Parse(format!(
                        "taxonomy line {}: weight {w} contradicts sentiment {s}",
                        lineno + 1
                    )));
                }
            }
            if let Some(&first) = index.get(&key) {
                return Err(Error::DuplicateCategory {
                    key: key.clone(),
                    first,
                    second: id,
                });
            }
            index.insert(key.clone(), id);
            categories.push(EmojiCategory {
                id,
                name: name.to_string(),
                key,
                base_sentiment,
                zsl_weight,
            });
        }
        if categories.is_empty() {
            return Err(Error::EmptyTaxonomy);
        }
        Ok(EmojiTaxonomy { categories, index })
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[EmojiCategory] {
        &self.categories
    }

    pub fn category(&self, id: usize) -> &EmojiCategory {
        &self.categories[id]
    }

    /// Id for an already-normalized key.
    pub fn id_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Normalize, then look up.
    pub fn lookup(&self, seq: &str) -> Option<usize> {
        self.id_of(&normalize_emoji(seq))
    }

    /// +1/-1 per category from the base sentiment; error if any category
    /// is unannotated.
    pub fn sentiment_signs(&self) -> Result<Vec<f32>> {
        self.categories
            .iter()
            .map(|c| match c.base_sentiment {
                Some(Sentiment::Positive) => Ok(1.0),
                Some(Sentiment::Negative) => Ok(-1.0),
                None => Err(Error::Annotation(format!(
                    "category {} ({}) has no base sentiment",
                    c.id, c.name
                ))),
            })
            .collect()
    }

    /// Continuous zero-shot weights; error if any category lacks one.
    pub fn zsl_weights(&self) -> Result<Vec<f32>> {
        self.categories
            .iter()
            .map(|c| {
                c.zsl_weight.ok_or_else(|| {
                    Error::Annotation(format!(
                        "category {} ({}) has no zero-shot weight",
                        c.id, c.name
                    ))
                })
            })
            .collect()
    }

    /// SHA-256 over the canonical serialization. Stable across reloads of
    /// equivalent files regardless of comments or whitespace.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for c in &self.categories {
            let key: Vec<String> = c.key.chars().map(|ch| format!("U+{:04X}", ch as u32)).collect();
            let sentiment = c
                .base_sentiment
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".into());
            let weight = c
                .zsl_weight
                .map(|w| format!("{:08X}", w.to_bits()))
                .unwrap_or_else(|| "-".into());
            h.update(
                format!("{}\t{}\t{}\t{}\t{}\n", c.id, c.name, key.join(","), sentiment, weight)
                    .as_bytes(),
            );
        }
        h.finalize().into()
    }
}

fn parse_scalar(lit: &str, lineno: usize) -> Result<char> {
    let hex = lit
        .strip_prefix("U+")
        .ok_or_else(|| Error::Parse(format!("taxonomy line {lineno}: bad scalar {lit:?}")))?;
    let v = u32::from_str_radix(hex, 16)
        .map_err(|_| Error::Parse(format!("taxonomy line {lineno}: bad scalar {lit:?}")))?;
    char::from_u32(v)
        .ok_or_else(|| Error::Parse(format!("taxonomy line {lineno}: U+{v:X} is not a scalar")))
}

/// Scan text for emoji occurrences and resolve them against the taxonomy.
///
/// An occurrence is one base scalar plus trailing presentation scalars;
/// ZWJ-joined runs collapse into a single foreign occurrence. Occurrences
/// are counted before deduplication so callers can apply per-tweet caps.
pub fn extract_emojis(text: &str, taxonomy: &EmojiTaxonomy) -> EmojiScan {
    let mut scan = EmojiScan::default();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if !is_emoji_base(c) {
            continue;
        }
        let mut seq = String::new();
        seq.push(c);
        let mut joined = false;
        loop {
            match chars.peek() {
                Some(&m) if is_presentation_scalar(m) => {
                    seq.push(m);
                    chars.next();
                }
                Some(&ZWJ) => {
                    // Join only if another emoji base follows the joiner.
                    let mut ahead = chars.clone();
                    ahead.next();
                    match ahead.peek() {
                        Some(&b) if is_emoji_base(b) => {
                            chars.next();
                            chars.next();
                            seq.push(ZWJ);
                            seq.push(b);
                            joined = true;
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }
        scan.occurrences += 1;
        if joined {
            scan.foreign += 1;
            continue;
        }
        match taxonomy.id_of(&normalize_emoji(&seq)) {
            Some(id) => {
                scan.labels.insert(id);
            }
            None => scan.foreign += 1,
        }
    }
    scan
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtin_taxonomy_has_92_dense_categories() {
        let tax = EmojiTaxonomy::builtin();
        assert_eq!(tax.category_count(), 92);
        for (i, c) in tax.categories().iter().enumerate() {
            assert_eq!(c.id, i);
            assert_eq!(c.key.chars().count(), 1, "{} is single-scalar", c.name);
            assert!(c.base_sentiment.is_some());
            assert!(c.zsl_weight.is_some());
        }
        // Keys are sorted by codepoint and unique.
        let cps: Vec<u32> = tax
            .categories()
            .iter()
            .map(|c| c.key.chars().next().unwrap() as u32)
            .collect();
        let mut sorted = cps.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(cps, sorted);
    }

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        let a = EmojiTaxonomy::builtin();
        let b = EmojiTaxonomy::builtin();
        assert_eq!(a.digest(), b.digest());
        let trimmed = EmojiTaxonomy::from_str("0\tgrin\tU+1F600\tpos\t1\n").unwrap();
        assert_ne!(a.digest(), trimmed.digest());
    }

    #[test]
    fn comments_and_blank_lines_do_not_change_the_digest() {
        let plain = EmojiTaxonomy::from_str("0\tgrin\tU+1F600\tpos\t1\n").unwrap();
        let commented =
            EmojiTaxonomy::from_str("# heading\n\n0\tgrin\tU+1F600\tpos\t1\n\n# tail\n").unwrap();
        assert_eq!(plain.digest(), commented.digest());
    }

    #[test]
    fn empty_taxonomy_is_rejected() {
        assert!(matches!(
            EmojiTaxonomy::from_str("# only comments\n"),
            Err(Error::EmptyTaxonomy)
        ));
    }

    #[test]
    fn duplicate_keys_are_rejected_even_across_variants() {
        // Second row normalizes to the same scalar as the first.
        let text = "0\tjoy\tU+1F602\tpos\t1\n1\tjoy_vs\tU+1F602,U+FE0F\tpos\t1\n";
        match EmojiTaxonomy::from_str(text) {
            Err(Error::DuplicateCategory { first, second, .. }) => {
                assert_eq!((first, second), (0, 1));
            }
            other => panic!("expected DuplicateCategory, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_are_parse_errors() {
        for bad in [
            "0\tgrin\tU+1F600\tpos\n",              // missing field
            "1\tgrin\tU+1F600\tpos\t1\n",           // id not dense
            "0\tgrin\t1F600\tpos\t1\n",             // missing U+ prefix
            "0\tgrin\tU+ZZZZ\tpos\t1\n",            // bad hex
            "0\tgrin\tU+1F600\tmaybe\t1\n",         // bad sentiment
            "0\tgrin\tU+1F600\tpos\t2.5\n",         // weight out of range
            "0\tgrin\tU+1F600\tpos\t-0.5\n",        // sign contradicts sentiment
            "0\tgrin\tU+1F600\tpos\t0\n",           // zero weight has no sign
            "0\tgrin\tU+FE0F\tpos\t1\n",            // key vanishes under normalization
        ] {
            assert!(
                matches!(EmojiTaxonomy::from_str(bad), Err(Error::Parse(_))),
                "accepted {bad:?}"
            );
        }
    }

    #[test]
    fn normalization_strips_presentation_scalars() {
        assert_eq!(normalize_emoji("\u{1F602}"), "\u{1F602}");
        assert_eq!(normalize_emoji("\u{263A}\u{FE0F}"), "\u{263A}");
        assert_eq!(normalize_emoji("\u{1F44D}\u{1F3FD}"), "\u{1F44D}");
    }

    #[test]
    fn extract_counts_occurrences_before_dedup() {
        let tax = EmojiTaxonomy::builtin();
        let scan = extract_emojis("great day \u{1F602}\u{1F602}", &tax);
        assert_eq!(scan.labels.len(), 1);
        assert!(scan.labels.contains(&tax.lookup("\u{1F602}").unwrap()));
        assert_eq!(scan.foreign, 0);
        assert_eq!(scan.occurrences, 2);
    }

    #[test]
    fn extract_flags_foreign_emoji() {
        let tax = EmojiTaxonomy::builtin();
        let scan = extract_emojis("sailing \u{1F6A2}", &tax);
        assert!(scan.labels.is_empty());
        assert_eq!(scan.foreign, 1);
        assert_eq!(scan.occurrences, 1);
    }

    #[test]
    fn plain_text_has_no_occurrences() {
        let tax = EmojiTaxonomy::builtin();
        assert_eq!(extract_emojis("no emoji here", &tax), EmojiScan::default());
    }

    #[test]
    fn presentation_variants_match_the_same_category() {
        let tax = EmojiTaxonomy::builtin();
        let plain = extract_emojis("\u{1F602}", &tax);
        let styled = extract_emojis("\u{1F602}\u{FE0F}", &tax);
        assert_eq!(plain.labels, styled.labels);
        assert_eq!(styled.occurrences, 1);
    }

    #[test]
    fn zwj_sequences_are_one_foreign_occurrence() {
        let tax = EmojiTaxonomy::builtin();
        // woman + ZWJ + laptop
        let scan = extract_emojis("at work \u{1F469}\u{200D}\u{1F4BB}", &tax);
        assert_eq!(scan.labels.len(), 0);
        assert_eq!(scan.foreign, 1);
        assert_eq!(scan.occurrences, 1);
        // A taxonomy face joined to something is still foreign.
        let scan2 = extract_emojis("\u{1F602}\u{200D}\u{1F602}", &tax);
        assert!(scan2.labels.is_empty());
        assert_eq!(scan2.foreign, 1);
    }

    #[test]
    fn skin_toned_foreign_emoji_is_one_occurrence() {
        let tax = EmojiTaxonomy::builtin();
        let scan = extract_emojis("\u{1F44D}\u{1F3FD}", &tax);
        assert_eq!(scan.foreign, 1);
        assert_eq!(scan.occurrences, 1);
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent_and_never_lengthens(s in "\\PC*") {
            let once = normalize_emoji(&s);
            prop_assert!(once.chars().count() <= s.chars().count());
            prop_assert_eq!(normalize_emoji(&once), once.clone());
        }

        #[test]
        fn extraction_is_total_and_labels_are_in_range(s in "\\PC*") {
            let tax = EmojiTaxonomy::builtin();
            let scan = extract_emojis(&s, &tax);
            prop_assert!(scan.labels.iter().all(|&id| id < tax.category_count()));
            prop_assert!(scan.labels.len() + scan.foreign <= scan.occurrences);
            // Scanning twice gives the same answer.
            prop_assert_eq!(extract_emojis(&s, &tax), scan);
        }
    }
}
