//! One module per subcommand plus the small shared plumbing they lean on.

pub mod analyze;
pub mod eval;
pub mod ingest;
pub mod sample;
pub mod split;
pub mod stats;
pub mod train;
pub mod transfer;
pub mod zsl;

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use smileybench_core::corpus::{self, Sample};
use smileybench_core::ppm;
use smileybench_core::{Error, Result, Tensor};

/// Read a sample/dataset artifact (one JSON object per line).
pub(crate) fn read_dataset(path: &Path) -> Result<Vec<Sample>> {
    let f = fs::File::open(path)?;
    corpus::read_samples(BufReader::new(f))
}

pub(crate) fn write_dataset(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut buf = Vec::new();
    corpus::write_samples(&mut buf, samples)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Target-task labels: `<sample id>\t<class>` lines, `#` comments allowed.
/// A sample id listed twice is ambiguous supervision and rejected.
pub(crate) fn read_label_map(path: &Path) -> Result<BTreeMap<String, usize>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (sid, class) = line.split_once('\t').ok_or_else(|| {
            Error::Parse(format!(
                "{}: line {}: expected `<sample id>\\t<class>`",
                path.display(),
                lineno + 1
            ))
        })?;
        let class: usize = class.trim().parse().map_err(|_| {
            Error::Parse(format!(
                "{}: line {}: class {:?} is not an integer",
                path.display(),
                lineno + 1,
                class.trim()
            ))
        })?;
        if map.insert(sid.trim().to_string(), class).is_some() {
            return Err(Error::Parse(format!(
                "{}: line {}: duplicate sample id {:?}",
                path.display(),
                lineno + 1,
                sid.trim()
            )));
        }
    }
    Ok(map)
}

/// Load every sample's image, flattened, as one row-per-sample matrix.
pub(crate) fn design_matrix(
    samples: &[Sample],
    images_dir: &Path,
    d_x: usize,
) -> Result<Tensor> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut x = Vec::with_capacity(samples.len() * d_x);
    for s in samples {
        let img = ppm::load_ppm(images_dir.join(&s.image_ref))?;
        if img.len() != d_x {
            return Err(Error::Shape(format!(
                "image {} flattens to {} values, model expects {}",
                s.image_ref,
                img.len(),
                d_x
            )));
        }
        x.extend_from_slice(img.data());
    }
    Tensor::new(vec![samples.len(), d_x], x)
}

/// Multi-hot label matrix aligned with `design_matrix` rows.
pub(crate) fn label_matrix(samples: &[Sample], classes: usize) -> Result<Tensor> {
    let mut y = vec![0.0f32; samples.len() * classes];
    for (i, s) in samples.iter().enumerate() {
        for &c in &s.label_set {
            if c >= classes {
                return Err(Error::Label(format!(
                    "sample {}: label {c} out of range for {classes} categories",
                    s.sample_id
                )));
            }
            y[i * classes + c] = 1.0;
        }
    }
    Tensor::new(vec![samples.len(), classes], y)
}

/// Quote a CSV field when it needs it (commas in some category names).
pub(crate) fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_field_quotes_only_when_needed() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn label_map_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.tsv");

        fs::write(&p, "# header\nt1#0\t1\nt2#0\t0\n").unwrap();
        let m = read_label_map(&p).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m["t1#0"], 1);

        fs::write(&p, "t1#0 1\n").unwrap();
        assert!(matches!(read_label_map(&p), Err(Error::Parse(_))));

        fs::write(&p, "t1#0\t1\nt1#0\t0\n").unwrap();
        assert!(matches!(read_label_map(&p), Err(Error::Parse(_))));
    }
}
