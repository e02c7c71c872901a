//! `ingest`: filter the raw corpus.
//!
//! Writes `accepted.jsonl` (per-image samples, sorted by sample id),
//! `rejects.tsv` (`<original line>\t<reason>`, input order) and
//! `ingest_summary.csv`. Filtering is per-line and order-independent, so
//! `jobs > 1` splits the corpus across threads and reassembles the
//! verdicts in input order; output bytes do not depend on the job count.

use std::fs;

use smileybench_core::corpus::{self, FilterVerdict, RejectReason, Sample, TweetRecord};
use smileybench_core::emoji::EmojiTaxonomy;
use smileybench_core::Result;

use crate::config::Ctx;

enum Verdict {
    Blank,
    Accepted(TweetRecord, std::collections::BTreeSet<usize>),
    Rejected(String, RejectReason),
}

fn judge(line: &str, tax: &EmojiTaxonomy) -> Verdict {
    if line.trim().is_empty() {
        return Verdict::Blank;
    }
    match corpus::parse_record(line) {
        Err(_) => Verdict::Rejected(line.to_string(), RejectReason::MalformedRecord),
        Ok(rec) => match corpus::filter_record(&rec, tax) {
            FilterVerdict::Accept(labels) => Verdict::Accepted(rec, labels),
            FilterVerdict::Reject(reason) => Verdict::Rejected(line.to_string(), reason),
        },
    }
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let tax = ctx.taxonomy()?;
    let corpus_path = ctx.cfg.require_path("paths.corpus")?;
    let text = fs::read_to_string(&corpus_path)?;
    let lines: Vec<&str> = text.lines().collect();

    let jobs = ctx
        .cfg
        .get_usize("jobs")?
        .unwrap_or(1)
        .clamp(1, lines.len().max(1));
    let verdicts: Vec<Verdict> = if jobs == 1 {
        lines.iter().map(|l| judge(l, &tax)).collect()
    } else {
        let chunk = lines.len().div_ceil(jobs);
        let mut parts: Vec<Vec<Verdict>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = lines
                .chunks(chunk)
                .map(|part| {
                    let tax = &tax;
                    scope.spawn(move || part.iter().map(|l| judge(l, tax)).collect::<Vec<_>>())
                })
                .collect();
            for h in handles {
                parts.push(h.join().expect("ingest worker panicked"));
            }
        });
        parts.into_iter().flatten().collect()
    };

    let mut summary = corpus::FilterSummary::default();
    let mut samples: Vec<Sample> = Vec::new();
    let mut rejects = String::new();
    for v in verdicts {
        match v {
            Verdict::Blank => {}
            Verdict::Accepted(rec, labels) => {
                summary.accepted += 1;
                samples.extend(corpus::records_to_samples(&rec, &labels));
            }
            Verdict::Rejected(line, reason) => {
                summary.record_reject(reason);
                rejects.push_str(&line);
                rejects.push('\t');
                rejects.push_str(reason.as_str());
                rejects.push('\n');
            }
        }
    }
    summary.samples = samples.len() as u64;
    samples.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));

    super::write_dataset(&ctx.out_path("accepted.jsonl"), &samples)?;
    fs::write(ctx.out_path("rejects.tsv"), rejects)?;

    let mut csv = String::from("outcome,count\n");
    csv.push_str(&format!("accepted,{}\n", summary.accepted));
    csv.push_str(&format!("samples,{}\n", summary.samples));
    for reason in RejectReason::ALL {
        let n = summary.rejected(reason);
        if n > 0 {
            csv.push_str(&format!("{},{n}\n", reason.as_str()));
        }
    }
    fs::write(ctx.out_path("ingest_summary.csv"), csv)?;

    eprintln!(
        "ingest: {} records accepted ({} samples), {} rejected",
        summary.accepted,
        summary.samples,
        summary.total_rejected()
    );
    Ok(())
}
