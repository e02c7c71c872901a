//! Tweet-record parsing, the acceptance filter, and per-image samples.
//!
//! The corpus arrives as line-delimited JSON. A record survives filtering
//! only if it is image-bearing, free of urls/hashtags/mentions, not a reply
//! or quote, carries at least one taxonomy emoji, and stays under the
//! per-tweet emoji cap. Accepted records expand into one sample per image.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::emoji::{extract_emojis, EmojiTaxonomy};
use crate::error::{Error, Result};

/// Emoji occurrences (pre-deduplication, foreign included) allowed per tweet.
pub const MAX_EMOJI_OCCURRENCES: usize = 5;

#[derive(Debug, Clone, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub ts: i64,
    pub text: String,
    #[serde(default, rename = "images")]
    pub image_refs: Vec<String>,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<String>,
    #[serde(default, rename = "reply")]
    pub is_reply: bool,
    #[serde(default, rename = "quote")]
    pub is_quote: bool,
}

/// Why a record was dropped. Checks run in this order and the first hit
/// wins, so audit counts are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RejectReason {
    NoImage,
    HasUrl,
    HasHashtag,
    HasMention,
    IsReplyOrQuote,
    NoTaxonomyEmoji,
    TooManyEmojis,
    MalformedRecord,
}

impl RejectReason {
    pub const ALL: [RejectReason; 8] = [
        RejectReason::NoImage,
        RejectReason::HasUrl,
        RejectReason::HasHashtag,
        RejectReason::HasMention,
        RejectReason::IsReplyOrQuote,
        RejectReason::NoTaxonomyEmoji,
        RejectReason::TooManyEmojis,
        RejectReason::MalformedRecord,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::NoImage => "NoImage",
            RejectReason::HasUrl => "HasUrl",
            RejectReason::HasHashtag => "HasHashtag",
            RejectReason::HasMention => "HasMention",
            RejectReason::IsReplyOrQuote => "IsReplyOrQuote",
            RejectReason::NoTaxonomyEmoji => "NoTaxonomyEmoji",
            RejectReason::TooManyEmojis => "TooManyEmojis",
            RejectReason::MalformedRecord => "MalformedRecord",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterVerdict {
    Accept(BTreeSet<usize>),
    Reject(RejectReason),
}

/// Parse one corpus line. Offsets in errors are byte positions within the
/// line.
pub fn parse_record(line: &str) -> Result<TweetRecord> {
    let rec: TweetRecord = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
        offset: e.column().saturating_sub(1),
        msg: e.to_string(),
    })?;
    if rec.id.is_empty() {
        return Err(Error::MalformedRecord {
            offset: 0,
            msg: "empty id".into(),
        });
    }
    if rec.ts < 0 {
        return Err(Error::MalformedRecord {
            offset: 0,
            msg: format!("negative timestamp {}", rec.ts),
        });
    }
    Ok(rec)
}

/// Apply the acceptance checks in their fixed order.
pub fn filter_record(record: &TweetRecord, taxonomy: &EmojiTaxonomy) -> FilterVerdict {
    if record.image_refs.is_empty() {
        return FilterVerdict::Reject(RejectReason::NoImage);
    }
    if !record.urls.is_empty() {
        return FilterVerdict::Reject(RejectReason::HasUrl);
    }
    if !record.hashtags.is_empty() {
        return FilterVerdict::Reject(RejectReason::HasHashtag);
    }
    if !record.mentions.is_empty() {
        return FilterVerdict::Reject(RejectReason::HasMention);
    }
    if record.is_reply || record.is_quote {
        return FilterVerdict::Reject(RejectReason::IsReplyOrQuote);
    }
    let scan = extract_emojis(&record.text, taxonomy);
    if scan.labels.is_empty() {
        return FilterVerdict::Reject(RejectReason::NoTaxonomyEmoji);
    }
    if scan.occurrences > MAX_EMOJI_OCCURRENCES {
        return FilterVerdict::Reject(RejectReason::TooManyEmojis);
    }
    FilterVerdict::Accept(scan.labels)
}

/// One image of one accepted tweet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    /// `<tweet id>#<image ordinal>`; unique within a corpus.
    pub sample_id: String,
    pub image_ref: String,
    pub label_set: BTreeSet<usize>,
    pub timestamp: i64,
    /// Set by the sampler; absent on freshly ingested samples.
    pub window_id: Option<usize>,
}

impl Sample {
    /// Tweet id portion of the sample id.
    pub fn tweet_id(&self) -> &str {
        self.sample_id.rsplit_once('#').map(|(t, _)| t).unwrap_or(&self.sample_id)
    }
}

/// Expand an accepted record into per-image samples.
pub fn records_to_samples(record: &TweetRecord, labels: &BTreeSet<usize>) -> Vec<Sample> {
    record
        .image_refs
        .iter()
        .enumerate()
        .map(|(i, image)| Sample {
            sample_id: format!("{}#{}", record.id, i),
            image_ref: image.clone(),
            label_set: labels.clone(),
            timestamp: record.ts,
            window_id: None,
        })
        .collect()
}

/// Wire format for sample/dataset files (one JSON object per line).
#[derive(Debug, Serialize, Deserialize)]
struct SampleRecord {
    sid: String,
    image: String,
    labels: Vec<usize>,
    ts: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    win: Option<usize>,
}

pub fn write_samples<W: Write>(w: &mut W, samples: &[Sample]) -> Result<()> {
    for s in samples {
        let rec = SampleRecord {
            sid: s.sample_id.clone(),
            image: s.image_ref.clone(),
            labels: s.label_set.iter().copied().collect(),
            ts: s.timestamp,
            win: s.window_id,
        };
        serde_json::to_writer(&mut *w, &rec)
            .map_err(|e| Error::Parse(format!("sample serialization: {e}")))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_samples<R: BufRead>(r: R) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            offset: lineno,
            msg: format!("sample line {}: {e}", lineno + 1),
        })?;
        let labels: BTreeSet<usize> = rec.labels.iter().copied().collect();
        if labels.is_empty() {
            return Err(Error::MalformedRecord {
                offset: lineno,
                msg: format!("sample line {}: empty label set", lineno + 1),
            });
        }
        out.push(Sample {
            sample_id: rec.sid,
            image_ref: rec.image,
            label_set: labels,
            timestamp: rec.ts,
            window_id: rec.win,
        });
    }
    Ok(out)
}

/// Tallies from one ingest pass.
#[derive(Debug, Default, Clone)]
pub struct FilterSummary {
    pub accepted: u64,
    pub samples: u64,
    rejected: std::collections::BTreeMap<RejectReason, u64>,
}

impl FilterSummary {
    pub fn record_reject(&mut self, reason: RejectReason) {
        *self.rejected.entry(reason).or_insert(0) += 1;
    }

    pub fn rejected(&self, reason: RejectReason) -> u64 {
        self.rejected.get(&reason).copied().unwrap_or(0)
    }

    pub fn total_rejected(&self) -> u64 {
        self.rejected.values().sum()
    }
}
