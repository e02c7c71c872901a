//! Temporally balanced dataset construction.
//!
//! The range is cut into fixed UTC-midnight windows. Within each
//! (window, category) cell a reservoir keeps a uniform draw of at most
//! `per_category_cap` distinct source tweets; a tweet selected through any
//! of its cells is retained once with its full label set. Because
//! multi-label tweets ride along through every category they carry, final
//! per-category counts can sit above a single cell's cap; the cap is a
//! per-cell selection bound.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;

use crate::corpus::Sample;
use crate::error::{Error, Result};
use crate::numerics::{tag64, Pcg32};

const DAY_SECS: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub index: usize,
    /// Inclusive start, epoch seconds at UTC midnight.
    pub start_ts: i64,
    /// Exclusive end.
    pub end_ts: i64,
}

impl Window {
    pub fn contains(&self, ts: i64) -> bool {
        ts >= self.start_ts && ts < self.end_ts
    }

    pub fn len_days(&self) -> i64 {
        (self.end_ts - self.start_ts) / DAY_SECS
    }
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub range_start: NaiveDate,
    pub range_end: NaiveDate,
    pub window_days: u32,
    pub per_category_cap: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(range_start: NaiveDate, range_end: NaiveDate, seed: u64) -> Self {
        SamplerConfig {
            range_start,
            range_end,
            window_days: 30,
            per_category_cap: 4000,
            seed,
        }
    }
}

/// Cut [start, end] (inclusive dates) into consecutive windows of
/// `window_days` days; the last window is truncated at the end of the
/// range's final day.
pub fn partition_windows(
    range_start: NaiveDate,
    range_end: NaiveDate,
    window_days: u32,
) -> Result<Vec<Window>> {
    if window_days == 0 {
        return Err(Error::InvalidRange("window_days must be positive".into()));
    }
    if range_end < range_start {
        return Err(Error::InvalidRange(format!(
            "range end {range_end} before start {range_start}"
        )));
    }
    let start_ts = range_start.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
    let end_ts = (range_end + chrono::Days::new(1))
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc()
        .timestamp();
    let step = window_days as i64 * DAY_SECS;
    let mut windows = Vec::new();
    let mut cursor = start_ts;
    while cursor < end_ts {
        windows.push(Window {
            index: windows.len(),
            start_ts: cursor,
            end_ts: (cursor + step).min(end_ts),
        });
        cursor += step;
    }
    Ok(windows)
}

/// Balanced dataset plus per-cell bookkeeping for cap audits.
#[derive(Debug)]
pub struct SampledDataset {
    /// Retained samples, sorted by sample id, with window ids filled in.
    pub samples: Vec<Sample>,
    /// (window, category) -> tweets selected by that cell's reservoir.
    pub cell_selected: BTreeMap<(usize, usize), u64>,
    pub windows: Vec<Window>,
}

struct Reservoir {
    seen: u64,
    kept: Vec<usize>,
    rng: Pcg32,
}

impl Reservoir {
    fn offer(&mut self, tweet: usize, cap: usize) {
        self.seen += 1;
        if self.kept.len() < cap {
            self.kept.push(tweet);
        } else {
            // Algorithm R: the i-th arrival replaces a kept slot with
            // probability cap / i.
            let j = self.rng.below(self.seen as usize);
            if j < cap {
                self.kept[j] = tweet;
            }
        }
    }
}

/// Reservoir-sample tweets per (window, category) cell and return the union.
///
/// Samples sharing a tweet id are grouped (a multi-image tweet is one
/// selection unit); groups are offered to cells in order of first
/// appearance, so the result is a pure function of (input order, config,
/// seed).
pub fn balanced_sample(
    samples: &[Sample],
    category_count: usize,
    cfg: &SamplerConfig,
) -> Result<SampledDataset> {
    let windows = partition_windows(cfg.range_start, cfg.range_end, cfg.window_days)?;
    let range_start_ts = windows[0].start_ts;
    let range_end_ts = windows.last().unwrap().end_ts;
    let step = cfg.window_days as i64 * DAY_SECS;

    struct Tweet {
        labels: BTreeSet<usize>,
        window: usize,
        sample_indices: Vec<usize>,
    }
    let mut tweets: Vec<Tweet> = Vec::new();
    let mut by_id: HashMap<&str, usize> = HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        if s.timestamp < range_start_ts || s.timestamp >= range_end_ts {
            return Err(Error::OutOfRange {
                sample_id: s.sample_id.clone(),
                ts: s.timestamp,
            });
        }
        if let Some(&bad) = s.label_set.iter().find(|&&c| c >= category_count) {
            return Err(Error::Label(format!(
                "sample {} labeled {bad}, taxonomy has {category_count} categories",
                s.sample_id
            )));
        }
        let window = ((s.timestamp - range_start_ts) / step) as usize;
        debug_assert!(windows[window].contains(s.timestamp));
        match by_id.get(s.tweet_id()) {
            Some(&ti) => {
                let t = &mut tweets[ti];
                t.labels.extend(s.label_set.iter().copied());
                t.sample_indices.push(i);
            }
            None => {
                by_id.insert(s.tweet_id(), tweets.len());
                tweets.push(Tweet {
                    labels: s.label_set.clone(),
                    window,
                    sample_indices: vec![i],
                });
            }
        }
    }

    let mut cells: BTreeMap<(usize, usize), Reservoir> = BTreeMap::new();
    for (ti, tweet) in tweets.iter().enumerate() {
        for &c in &tweet.labels {
            let cell = cells.entry((tweet.window, c)).or_insert_with(|| Reservoir {
                seen: 0,
                kept: Vec::new(),
                rng: Pcg32::derive(
                    cfg.seed,
                    &[tag64("cell"), tweet.window as u64, c as u64],
                ),
            });
            cell.offer(ti, cfg.per_category_cap);
        }
    }

    let mut retained: BTreeSet<usize> = BTreeSet::new();
    let mut cell_selected = BTreeMap::new();
    for (&key, reservoir) in &cells {
        cell_selected.insert(key, reservoir.kept.len() as u64);
        retained.extend(reservoir.kept.iter().copied());
    }

    let mut out: Vec<Sample> = Vec::new();
    for &ti in &retained {
        let tweet = &tweets[ti];
        for &si in &tweet.sample_indices {
            let mut s = samples[si].clone();
            s.window_id = Some(tweet.window);
            out.push(s);
        }
    }
    out.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    Ok(SampledDataset {
        samples: out,
        cell_selected,
        windows,
    })
}

/// Per-category sample counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelStats {
    pub counts: Vec<u64>,
    pub total_samples: u64,
    pub total_labels: u64,
}

pub fn label_distribution(samples: &[Sample], category_count: usize) -> Result<LabelStats> {
    let mut counts = vec![0u64; category_count];
    let mut total_labels = 0u64;
    for s in samples {
        for &c in &s.label_set {
            let slot = counts.get_mut(c).ok_or_else(|| {
                Error::Label(format!(
                    "sample {} labeled {c}, taxonomy has {category_count} categories",
                    s.sample_id
                ))
            })?;
            *slot += 1;
            total_labels += 1;
        }
    }
    Ok(LabelStats {
        counts,
        total_samples: samples.len() as u64,
        total_labels,
    })
}

/// Row-conditional co-occurrence: entry (i, j) is P(j present | i present),
/// zero where category i never occurs. Row-major C x C.
pub fn cooccurrence_matrix(samples: &[Sample], category_count: usize) -> Result<Vec<f64>> {
    let mut joint = vec![0u64; category_count * category_count];
    let stats = label_distribution(samples, category_count)?;
    for s in samples {
        for &i in &s.label_set {
            for &j in &s.label_set {
                joint[i * category_count + j] += 1;
            }
        }
    }
    let mut m = vec![0.0f64; category_count * category_count];
    for i in 0..category_count {
        if stats.counts[i] == 0 {
            continue;
        }
        for j in 0..category_count {
            m[i * category_count + j] =
                joint[i * category_count + j] as f64 / stats.counts[i] as f64;
        }
    }
    Ok(m)
}

/// Train/val/test split with per-category targets.
#[derive(Debug)]
pub struct SplitResult {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
    /// Categories with no samples at all (reported, not fatal).
    pub empty_categories: Vec<usize>,
}

/// Greedily draw `val_per_class` and then `test_per_class` samples per
/// category, rarest category first. A drawn multi-label sample counts
/// toward every category it carries. Remaining samples go to train.
pub fn split_dataset(
    samples: &[Sample],
    category_count: usize,
    val_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<SplitResult> {
    let stats = label_distribution(samples, category_count)?;

    // Work over indices sorted by sample id so the draw order does not
    // depend on how the caller ordered the file.
    let mut index: Vec<usize> = (0..samples.len()).collect();
    index.sort_by(|&a, &b| samples[a].sample_id.cmp(&samples[b].sample_id));

    let mut order: Vec<usize> = (0..category_count).collect();
    order.sort_by_key(|&c| (stats.counts[c], c));
    let empty_categories: Vec<usize> =
        order.iter().copied().filter(|&c| stats.counts[c] == 0).collect();

    #[derive(Clone, Copy, PartialEq)]
    enum Slot {
        Free,
        Val,
        Test,
    }
    let mut assigned = vec![Slot::Free; samples.len()];

    for (kind, target, tag) in [
        (Slot::Val, val_per_class, "split-val"),
        (Slot::Test, test_per_class, "split-test"),
    ] {
        if target == 0 {
            continue;
        }
        let mut tally = vec![0usize; category_count];
        for (si, slot) in assigned.iter().enumerate() {
            if *slot == kind {
                for &c in &samples[si].label_set {
                    tally[c] += 1;
                }
            }
        }
        for &c in &order {
            if stats.counts[c] == 0 || tally[c] >= target {
                continue;
            }
            let mut pool: Vec<usize> = index
                .iter()
                .copied()
                .filter(|&si| assigned[si] == Slot::Free && samples[si].label_set.contains(&c))
                .collect();
            let mut rng = Pcg32::derive(seed, &[tag64(tag), c as u64]);
            rng.shuffle(&mut pool);
            for si in pool {
                if tally[c] >= target {
                    break;
                }
                assigned[si] = kind;
                for &l in &samples[si].label_set {
                    tally[l] += 1;
                }
            }
        }
    }

    let mut result = SplitResult {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        empty_categories,
    };
    for &si in &index {
        let s = samples[si].clone();
        match assigned[si] {
            Slot::Free => result.train.push(s),
            Slot::Val => result.val.push(s),
            Slot::Test => result.test.push(s),
        }
    }
    Ok(result)
}
