//! Binary PPM (P6) images as float tensors.
//!
//! Only 8-bit RGB is supported: magic `P6`, whitespace-separated width,
//! height and a maxval of 255, then `height * width * 3` raw bytes.
//! Decoded pixels land in a rank-3 `[height, width, 3]` tensor scaled to
//! [0, 1]; encoding rounds back to bytes.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Read one whitespace-delimited ASCII token, skipping `#` comments.
fn token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut in_comment = false;
    loop {
        let mut byte = [0u8; 1];
        match r.read_exact(&mut byte) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof && !tok.is_empty() => break,
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                return Err(Error::Parse("truncated image header".into()))
            }
            Err(e) => return Err(e.into()),
        }
        let b = byte[0];
        if in_comment {
            in_comment = b != b'\n';
        } else if b == b'#' {
            in_comment = true;
        } else if b.is_ascii_whitespace() {
            if !tok.is_empty() {
                break;
            }
        } else {
            tok.push(b as char);
        }
    }
    Ok(tok)
}

pub fn decode_ppm<R: BufRead>(r: &mut R) -> Result<Tensor> {
    let magic = token(r)?;
    if magic != "P6" {
        return Err(Error::Parse(format!("expected P6 image, got {magic:?}")));
    }
    let dim = |r: &mut R, what: &str| -> Result<usize> {
        let t = token(r)?;
        t.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad {what} {t:?}")))
    };
    let width = dim(r, "width")?;
    let height = dim(r, "height")?;
    let maxval = dim(r, "maxval")?;
    if maxval != 255 {
        return Err(Error::Parse(format!("unsupported maxval {maxval}, want 255")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Parse("image has zero dimension".into()));
    }
    let mut raw = vec![0u8; height * width * 3];
    r.read_exact(&mut raw)
        .map_err(|_| Error::Parse("truncated image payload".into()))?;
    let data: Vec<f32> = raw.iter().map(|&b| b as f32 / 255.0).collect();
    Tensor::new(vec![height, width, 3], data)
}

pub fn encode_ppm<W: Write>(w: &mut W, image: &Tensor) -> Result<()> {
    if image.rank() != 3 || image.shape()[2] != 3 {
        return Err(Error::Shape(format!(
            "expected [height, width, 3] image, got {:?}",
            image.shape()
        )));
    }
    let (h, wd) = (image.shape()[0], image.shape()[1]);
    write!(w, "P6\n{wd} {h}\n255\n")?;
    let bytes: Vec<u8> = image
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn load_ppm<P: AsRef<Path>>(path: P) -> Result<Tensor> {
    let bytes = fs::read(&path)?;
    decode_ppm(&mut std::io::Cursor::new(bytes))
}

pub fn save_ppm<P: AsRef<Path>>(path: P, image: &Tensor) -> Result<()> {
    let mut out = Vec::new();
    encode_ppm(&mut out, image)?;
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn roundtrip_preserves_bytes() {
        let img = Tensor::new(
            vec![2, 2, 3],
            (0..12).map(|i| i as f32 * 20.0 / 255.0).collect(),
        )
        .unwrap();
        let mut buf = Vec::new();
        encode_ppm(&mut buf, &img).unwrap();
        let back = decode_ppm(&mut Cursor::new(buf.clone())).unwrap();
        assert_eq!(back.shape(), &[2, 2, 3]);
        let mut again = Vec::new();
        encode_ppm(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn header_comments_and_whitespace_are_tolerated() {
        let mut bytes = b"P6 # magic\n# a comment line\n 2\t1 # dims\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 0, 0, 255, 255, 255]);
        let img = decode_ppm(&mut Cursor::new(bytes)).unwrap();
        assert_eq!(img.shape(), &[1, 2, 3]);
        assert_eq!(img.data()[0], 0.0);
        assert_eq!(img.data()[3], 1.0);
    }

    #[test]
    fn values_scale_to_unit_interval() {
        let mut bytes = b"P6\n1 1\n255\n".to_vec();
        bytes.extend_from_slice(&[51, 102, 204]);
        let img = decode_ppm(&mut Cursor::new(bytes)).unwrap();
        assert_eq!(img.data(), &[51.0 / 255.0, 102.0 / 255.0, 204.0 / 255.0]);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let err = decode_ppm(&mut Cursor::new(b"P3\n1 1\n255\n0 0 0".to_vec()));
        assert!(matches!(err, Err(Error::Parse(_))));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0; 5]);
        assert!(matches!(
            decode_ppm(&mut Cursor::new(bytes)),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn non_255_maxval_is_rejected() {
        let bytes = b"P6\n1 1\n65535\n".to_vec();
        assert!(matches!(
            decode_ppm(&mut Cursor::new(bytes)),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let img = Tensor::new(vec![3, 2, 3], vec![0.5; 18]).unwrap();
        save_ppm(&path, &img).unwrap();
        let back = load_ppm(&path).unwrap();
        assert_eq!(back.shape(), &[3, 2, 3]);
        for &v in back.data() {
            assert!((v - 0.5).abs() < 1.0 / 255.0);
        }
    }
}
