//! Text fixture format for pencils.
//!
//! A pencil file is line oriented and diffable:
//!
//! ```text
//! defpencil-pencil v1
//! n 3
//! encoding dec
//! meta seed 42
//! meta recipe fig3
//! A
//! <row 0: re im re im ...>
//! ...
//! B
//! ...
//! ```
//!
//! `dec` writes shortest round-tripping decimals (Rust's float formatter
//! guarantees read(write(x)) == x bit-exactly, signed zeros included);
//! `hex` writes the raw bit pattern of each double for byte-level
//! auditing.

use crate::error::{PencilError, Result};
use crate::pencil::HermitianPencil;
use crate::{CMat, C64};
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "defpencil-pencil v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Encoding {
    #[default]
    Dec,
    Hex,
}

/// A pencil plus free-form metadata (seed, construction recipe, known
/// gamma, ...). Round trips bit-exactly for finite doubles.
#[derive(Clone, Debug)]
pub struct PencilFile {
    pub pencil: HermitianPencil,
    pub metadata: Vec<(String, String)>,
}

impl PencilFile {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn fmt_f64(x: f64, enc: Encoding) -> String {
    match enc {
        Encoding::Dec => format!("{x}"),
        Encoding::Hex => format!("{:016x}", x.to_bits()),
    }
}

fn parse_f64(tok: &str, enc: Encoding) -> Result<f64> {
    match enc {
        Encoding::Dec => tok
            .parse::<f64>()
            .map_err(|e| PencilError::Parse(format!("bad float {tok:?}: {e}"))),
        Encoding::Hex => u64::from_str_radix(tok, 16)
            .map(f64::from_bits)
            .map_err(|e| PencilError::Parse(format!("bad hex float {tok:?}: {e}"))),
    }
}

/// Serialize to the text format.
pub fn to_string(
    pencil: &HermitianPencil,
    metadata: &[(String, String)],
    encoding: Encoding,
) -> String {
    let n = pencil.dim();
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "n {n}");
    let _ = writeln!(
        s,
        "encoding {}",
        match encoding {
            Encoding::Dec => "dec",
            Encoding::Hex => "hex",
        }
    );
    for (k, v) in metadata {
        let _ = writeln!(s, "meta {k} {v}");
    }
    for (name, m) in [("A", pencil.a()), ("B", pencil.b())] {
        let _ = writeln!(s, "{name}");
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .flat_map(|j| {
                    let z = m[(i, j)];
                    [fmt_f64(z.re, encoding), fmt_f64(z.im, encoding)]
                })
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    }
    s
}

/// Parse the text format.
pub fn from_str(text: &str) -> Result<PencilFile> {
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let magic = lines
        .next()
        .ok_or_else(|| PencilError::Parse("empty pencil file".into()))?;
    if magic.trim() != MAGIC {
        return Err(PencilError::Parse(format!(
            "bad header {magic:?}, expected {MAGIC:?}"
        )));
    }
    let n_line = lines
        .next()
        .ok_or_else(|| PencilError::Parse("missing n line".into()))?;
    let n: usize = n_line
        .trim()
        .strip_prefix("n ")
        .and_then(|x| x.trim().parse().ok())
        .ok_or_else(|| PencilError::Parse(format!("bad dimension line {n_line:?}")))?;
    if n == 0 {
        return Err(PencilError::Parse("dimension must be positive".into()));
    }
    let enc_line = lines
        .next()
        .ok_or_else(|| PencilError::Parse("missing encoding line".into()))?;
    let encoding = match enc_line.trim().strip_prefix("encoding ").map(str::trim) {
        Some("dec") => Encoding::Dec,
        Some("hex") => Encoding::Hex,
        other => {
            return Err(PencilError::Parse(format!("bad encoding line {other:?}")));
        }
    };

    let mut metadata = Vec::new();
    let mut pending: Option<&str> = None;
    for line in lines.by_ref() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("meta ") {
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| PencilError::Parse(format!("bad meta line {t:?}")))?;
            metadata.push((k.to_string(), v.to_string()));
        } else {
            pending = Some(t);
            break;
        }
    }
    if pending != Some("A") {
        return Err(PencilError::Parse(format!(
            "expected matrix marker 'A', got {pending:?}"
        )));
    }

    let read_matrix = |lines: &mut dyn Iterator<Item = &str>| -> Result<CMat> {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| PencilError::Parse(format!("missing matrix row {i}")))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 * n {
                return Err(PencilError::Parse(format!(
                    "row {i} has {} numbers, expected {}",
                    toks.len(),
                    2 * n
                )));
            }
            for j in 0..n {
                m[(i, j)] = C64::new(
                    parse_f64(toks[2 * j], encoding)?,
                    parse_f64(toks[2 * j + 1], encoding)?,
                );
            }
        }
        Ok(m)
    };

    let a = read_matrix(&mut lines)?;
    let marker = lines.next();
    if marker.map(str::trim) != Some("B") {
        return Err(PencilError::Parse(format!(
            "expected matrix marker 'B', got {marker:?}"
        )));
    }
    let b = read_matrix(&mut lines)?;
    let pencil = HermitianPencil::new(a, b)?;
    Ok(PencilFile { pencil, metadata })
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_file(
    path: &Path,
    pencil: &HermitianPencil,
    metadata: &[(String, String)],
    encoding: Encoding,
) -> Result<()> {
    let text = to_string(pencil, metadata, encoding);
    write_atomic(path, text.as_bytes())
}

pub fn read_file(path: &Path) -> Result<PencilFile> {
    let text = std::fs::read_to_string(path)?;
    from_str(&text)
}

/// Shared atomic file write used by every CLI output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp-{}",
            path.file_name().and_then(|f| f.to_str()).unwrap_or("out"),
            std::process::id()
        )),
        None => std::path::PathBuf::from(format!(".defpencil.tmp-{}", std::process::id())),
    };
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomize::generate_test_pencil;

    #[test]
    fn round_trip_is_bit_exact_in_both_encodings() {
        let eigs = [0.1234567890123456, -0.9, 1.0 / 3.0, 5e-300];
        let p = generate_test_pencil(4, &eigs, 7.0, 99).unwrap();
        let meta = vec![("seed".to_string(), "99".to_string())];
        for enc in [Encoding::Dec, Encoding::Hex] {
            let text = to_string(&p, &meta, enc);
            let back = from_str(&text).unwrap();
            assert_eq!(back.pencil.a(), p.a(), "{enc:?} A");
            assert_eq!(back.pencil.b(), p.b(), "{enc:?} B");
            assert_eq!(back.meta("seed"), Some("99"));
        }
    }

    #[test]
    fn signed_zero_round_trips() {
        let mut a = CMat::identity(2, 2);
        a[(0, 1)] = C64::new(-0.0, 0.0);
        a[(1, 0)] = C64::new(-0.0, -0.0);
        let p = HermitianPencil::new(a, CMat::identity(2, 2)).unwrap();
        for enc in [Encoding::Dec, Encoding::Hex] {
            let back = from_str(&to_string(&p, &[], enc)).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(
                        back.pencil.a()[(i, j)].re.to_bits(),
                        p.a()[(i, j)].re.to_bits()
                    );
                    assert_eq!(
                        back.pencil.a()[(i, j)].im.to_bits(),
                        p.a()[(i, j)].im.to_bits()
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(from_str("").is_err());
        assert!(from_str("wrong header\nn 2\nencoding dec\nA\n").is_err());
        assert!(from_str("defpencil-pencil v1\nn 0\nencoding dec\nA\n").is_err());
        let truncated = "defpencil-pencil v1\nn 2\nencoding dec\nA\n1 0 0 0\n";
        assert!(from_str(truncated).is_err());
        // Non-Hermitian content is rejected by the pencil constructor.
        let bad = "defpencil-pencil v1\nn 1\nencoding dec\nA\n0 1\nB\n1 0\n";
        assert!(from_str(bad).is_err());
    }

    #[test]
    fn file_round_trip_via_tempdir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.pencil");
        let p = generate_test_pencil(3, &[0.1, 0.5, 0.9], 2.0, 5).unwrap();
        write_file(
            &path,
            &p,
            &[("recipe".into(), "test".into())],
            Encoding::Dec,
        )
        .unwrap();
        let back = read_file(&path).unwrap();
        assert_eq!(back.pencil.a(), p.a());
        assert_eq!(back.meta("recipe"), Some("test"));
    }
}
