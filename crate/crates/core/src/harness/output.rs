//! Deterministic artifact emission with all-or-nothing writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A named output file held in memory until emission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    pub fn text(name: impl Into<String>, contents: String) -> Self {
        Self { name: name.into(), contents: contents.into_bytes() }
    }

    pub fn json<T: serde::Serialize>(name: impl Into<String>, value: &T) -> Self {
        let mut s = serde_json::to_string_pretty(value).expect("report serialises");
        s.push('\n');
        Self::text(name, s)
    }

    pub fn binary(name: impl Into<String>, contents: Vec<u8>) -> Self {
        Self { name: name.into(), contents }
    }
}

/// Row-by-row CSV builder. Floats use the shortest representation that
/// round-trips, so equal inputs give equal bytes.
#[derive(Debug, Clone)]
pub struct Csv {
    out: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Self { out, columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self, name: impl Into<String>) -> Artifact {
        Artifact::text(name, self.out)
    }
}

/// Shortest round-trip form of `v`; exponent notation outside
/// `[1e-4, 1e16)` in magnitude, and negative zero prints as `0`.
pub fn num(v: f64) -> String {
    let v = v + 0.0;
    let mut s = String::new();
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        write!(s, "{v:e}").expect("write to string");
    } else {
        write!(s, "{v}").expect("write to string");
    }
    s
}

/// Writes every artifact into `dir`. Files are staged under temporary names
/// and renamed only once all of them are written; on failure the staged files
/// are removed and nothing is left behind.
pub fn emit_outputs(artifacts: &[Artifact], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(artifacts.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for a in artifacts {
        if a.name.contains('/') || a.name.contains('\\') || a.name.starts_with('.') {
            cleanup(&staged);
            return Err(Error::Config(format!("artifact name '{}' is not a plain file name", a.name)));
        }
        let target = dir.join(&a.name);
        let tmp = dir.join(format!(".{}.partial", a.name));
        let written = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(&a.contents)?;
            f.sync_all()
        });
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            cleanup(&staged);
            return Err(Error::io(&tmp, e));
        }
        staged.push((tmp, target));
    }
    let mut done = Vec::with_capacity(staged.len());
    for (i, (tmp, target)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, target) {
            cleanup(&staged[i..]);
            for path in &done {
                let _ = fs::remove_file(path);
            }
            return Err(Error::io(target, e));
        }
        done.push(target.clone());
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_and_overwrites() {
        let dir = tempfile::tempdir().unwrap();
        let a = [Artifact::text("a.csv", "x\n1\n".into()), Artifact::text("b.json", "{}\n".into())];
        let paths = emit_outputs(&a, dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(fs::read_to_string(dir.path().join("a.csv")).unwrap(), "x\n1\n");
        emit_outputs(&a[..1], dir.path()).unwrap();
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 2);
    }

    #[test]
    fn unwritable_directory_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"").unwrap();
        // A path below a regular file cannot be created.
        let err = emit_outputs(&[Artifact::text("a.csv", String::new())], &blocker.join("out")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn csv_formatting_is_round_trip() {
        let mut c = Csv::new(&["t", "v"]);
        c.row(&[num(0.1), num(1.0 / 3.0)]);
        let a = c.finish("x.csv");
        let text = String::from_utf8(a.contents).unwrap();
        let v: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
        for x in [9.157e-18, -2.5e20, 1e-4, 123.25, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(-0.0), "0");
    }
}
