//! Dataset generation and loading, binarization, and model serialization.
//!
//! Formats:
//! - datasets are UTF-8 text, one example per line, characters '0'/'1';
//! - model files are JSON with explicit shape fields (format_version, n, m,
//!   W row-major, a, b); serde_json round-trips f64 exactly;
//! - IDX is the big-endian unsigned-byte 3-D image format (magic
//!   0x00000803).

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{RbmError, Result};
use crate::model::{Dataset, ModelParams};
use crate::noise::NoiseSource;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Bars-and-stripes images of side `d`, flattened row-major.
///
/// Exhaustive mode emits all bar patterns then all stripe patterns, with the
/// all-zero and all-one images (reachable via both orientations)
/// deduplicated: 2^(d+1) - 2 distinct examples.
pub fn generate_bars_and_stripes(
    d: usize,
    count: Option<(usize, &mut NoiseSource)>,
) -> Result<Dataset> {
    if d < 2 {
        return Err(RbmError::InvalidArgument(format!(
            "side length must be >= 2, got {d}"
        )));
    }
    let render = |pattern: usize, bars: bool| -> Vec<u8> {
        let mut img = vec![0u8; d * d];
        for r in 0..d {
            for c in 0..d {
                let on = if bars {
                    (pattern >> r) & 1 == 1
                } else {
                    (pattern >> c) & 1 == 1
                };
                img[r * d + c] = on as u8;
            }
        }
        img
    };
    match count {
        None => {
            let mut examples = Vec::new();
            for pattern in 0..1usize << d {
                examples.push(render(pattern, true));
            }
            for pattern in 0..1usize << d {
                // All-zero and all-one stripes duplicate the bar versions.
                if pattern != 0 && pattern != (1 << d) - 1 {
                    examples.push(render(pattern, false));
                }
            }
            Dataset::new(d * d, examples)
        }
        Some((n, src)) => {
            if n == 0 {
                return Err(RbmError::InvalidArgument(
                    "sample count must be >= 1".into(),
                ));
            }
            let examples = (0..n)
                .map(|_| {
                    let bars = src.uniform_open() < 0.5;
                    let pattern = (src.next_u64() as usize) & ((1 << d) - 1);
                    render(pattern, bars)
                })
                .collect();
            Dataset::new(d * d, examples)
        }
    }
}

pub fn load_text_dataset(path: &Path) -> Result<Dataset> {
    let content = fs::read_to_string(path)?;
    let mut examples: Vec<Vec<u8>> = Vec::new();
    let mut width = None;
    for (lineno, line) in content.lines().enumerate() {
        let mut bits = Vec::with_capacity(line.len());
        for ch in line.chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                other => {
                    return Err(RbmError::Parse {
                        line: lineno + 1,
                        msg: format!("invalid character {other:?}, expected '0' or '1'"),
                    })
                }
            }
        }
        match width {
            None => width = Some(bits.len()),
            Some(w) if w != bits.len() => {
                return Err(RbmError::Parse {
                    line: lineno + 1,
                    msg: format!("line length {} differs from {}", bits.len(), w),
                })
            }
            _ => {}
        }
        examples.push(bits);
    }
    let n = width.ok_or_else(|| RbmError::Parse {
        line: 1,
        msg: "empty dataset file".into(),
    })?;
    if n == 0 {
        return Err(RbmError::Parse {
            line: 1,
            msg: "examples must have at least one bit".into(),
        });
    }
    Dataset::new(n, examples)
}

pub fn save_text_dataset(d: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(d.len() * (d.n + 1));
    for ex in &d.examples {
        for &bit in ex {
            out.push(if bit == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write visible configurations in dataset text format (allows zero rows,
/// unlike [`save_text_dataset`]'s Dataset input).
pub fn save_visible_rows(rows: &[Vec<u8>], path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        for &bit in row {
            out.push(if bit == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

const IDX_MAGIC: u32 = 0x0000_0803;

/// Load an IDX unsigned-byte image file and binarize: pixel >= threshold
/// maps to 1.
pub fn load_idx_images(path: &Path, threshold: u8) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 {
        return Err(RbmError::Format(format!(
            "IDX header requires 16 bytes, file has {}",
            bytes.len()
        )));
    }
    let read_u32 = |off: usize| u32::from_be_bytes(bytes[off..off + 4].try_into().unwrap());
    let magic = read_u32(0);
    if magic != IDX_MAGIC {
        return Err(RbmError::Format(format!(
            "bad IDX magic {magic:#010x}, expected {IDX_MAGIC:#010x}"
        )));
    }
    let count = read_u32(4) as usize;
    let rows = read_u32(8) as usize;
    let cols = read_u32(12) as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(RbmError::Format(format!(
            "IDX payload has {} bytes, expected {} for {count} images of {rows}x{cols}",
            bytes.len() - 16,
            expected - 16
        )));
    }
    let n = rows * cols;
    let examples = bytes[16..]
        .chunks(n)
        .map(|img| img.iter().map(|&px| u8::from(px >= threshold)).collect())
        .collect();
    Dataset::new(n, examples)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    n: usize,
    m: usize,
    w: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

pub fn save_model(p: &ModelParams, path: &Path) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        n: p.n_visible(),
        m: p.n_hidden(),
        w: p.w.iter().cloned().collect(),
        a: p.a.to_vec(),
        b: p.b.to_vec(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| RbmError::Format(format!("serialization failed: {e}")))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelParams> {
    let content = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&content).map_err(|e| RbmError::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(RbmError::Version {
            found: file.format_version,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    if file.w.len() != file.n * file.m {
        return Err(RbmError::Parse {
            line: 0,
            msg: format!(
                "W has {} entries, expected n*m = {}",
                file.w.len(),
                file.n * file.m
            ),
        });
    }
    if file.a.len() != file.n || file.b.len() != file.m {
        return Err(RbmError::Parse {
            line: 0,
            msg: format!(
                "bias lengths ({}, {}) do not match (n, m) = ({}, {})",
                file.a.len(),
                file.b.len(),
                file.n,
                file.m
            ),
        });
    }
    let w = Array2::from_shape_vec((file.n, file.m), file.w)
        .expect("length checked above");
    ModelParams::new(w, Array1::from_vec(file.a), Array1::from_vec(file.b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn bars_and_stripes_d2_exhaustive() {
        let d = generate_bars_and_stripes(2, None).unwrap();
        assert_eq!(d.len(), 6);
        let mut unique: Vec<_> = d.examples.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 6);
    }

    #[test]
    fn bars_and_stripes_structure() {
        let d = generate_bars_and_stripes(3, None).unwrap();
        assert_eq!(d.len(), 14);
        for ex in &d.examples {
            let rows_constant = (0..3).all(|r| (1..3).all(|c| ex[3 * r + c] == ex[3 * r]));
            let cols_constant = (0..3).all(|c| (1..3).all(|r| ex[3 * r + c] == ex[c]));
            assert!(rows_constant || cols_constant);
        }
    }

    #[test]
    fn bars_and_stripes_row_major_layout() {
        let d = generate_bars_and_stripes(2, None).unwrap();
        // Bar pattern "rows = (1,0)" flattens to 1,1,0,0.
        assert!(d.examples.contains(&vec![1, 1, 0, 0]));
    }

    #[test]
    fn bars_and_stripes_rejects_small_side() {
        assert!(generate_bars_and_stripes(1, None).is_err());
    }

    #[test]
    fn bars_and_stripes_sampled() {
        let mut src = NoiseSource::new(5, 0);
        let d = generate_bars_and_stripes(3, Some((20, &mut src))).unwrap();
        assert_eq!(d.len(), 20);
        assert_eq!(d.n, 9);
    }

    #[test]
    fn text_dataset_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("data.txt");
        std::fs::write(&path, "01\n10\n").unwrap();
        let d = load_text_dataset(&path).unwrap();
        assert_eq!(d.n, 2);
        assert_eq!(d.examples, vec![vec![0, 1], vec![1, 0]]);
        let path2 = dir.path().join("copy.txt");
        save_text_dataset(&d, &path2).unwrap();
        assert_eq!(load_text_dataset(&path2).unwrap(), d);
    }

    #[test]
    fn text_dataset_rejects_empty() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.txt");
        std::fs::write(&path, "").unwrap();
        assert!(load_text_dataset(&path).is_err());
    }

    #[test]
    fn text_dataset_reports_bad_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "012\n").unwrap();
        match load_text_dataset(&path) {
            Err(RbmError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "01\n011\n").unwrap();
        match load_text_dataset(&path) {
            Err(RbmError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    fn write_idx(path: &Path, count: u32, rows: u32, cols: u32, pixels: &[u8]) {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IDX_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&count.to_be_bytes());
        bytes.extend_from_slice(&rows.to_be_bytes());
        bytes.extend_from_slice(&cols.to_be_bytes());
        bytes.extend_from_slice(pixels);
        std::fs::write(path, bytes).unwrap();
    }

    #[test]
    fn idx_threshold_binarization() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.idx");
        write_idx(&path, 1, 2, 2, &[0, 255, 128, 127]);
        let d = load_idx_images(&path, 128).unwrap();
        assert_eq!(d.examples, vec![vec![0, 1, 1, 0]]);
        let d0 = load_idx_images(&path, 0).unwrap();
        assert_eq!(d0.examples, vec![vec![1, 1, 1, 1]]);
    }

    #[test]
    fn idx_rejects_bad_magic_and_truncation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.idx");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        bytes.extend_from_slice(&[0u8; 12]);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_idx_images(&path, 128),
            Err(RbmError::Format(_))
        ));
        write_idx(&path, 2, 2, 2, &[0u8; 5]); // should be 8 bytes
        assert!(matches!(
            load_idx_images(&path, 128),
            Err(RbmError::Format(_))
        ));
    }

    #[test]
    fn model_round_trip_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = ModelParams {
            w: Array2::from_shape_fn((3, 2), |_| rng.random::<f64>() * 1e3 - 500.0),
            a: Array1::from_shape_fn(3, |_| rng.random::<f64>()),
            b: Array1::from_shape_fn(2, |_| rng.random::<f64>() * 1e-7),
        };
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&p, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, p);
    }

    #[test]
    fn model_version_and_shape_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(
            &path,
            r#"{"format_version":99,"n":1,"m":1,"w":[0.0],"a":[0.0],"b":[0.0]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_model(&path),
            Err(RbmError::Version { found: 99, .. })
        ));
        std::fs::write(
            &path,
            r#"{"format_version":1,"n":2,"m":2,"w":[0.0],"a":[0.0,0.0],"b":[0.0,0.0]}"#,
        )
        .unwrap();
        assert!(matches!(load_model(&path), Err(RbmError::Parse { .. })));
        std::fs::write(&path, "not json").unwrap();
        assert!(matches!(load_model(&path), Err(RbmError::Parse { .. })));
    }
}
