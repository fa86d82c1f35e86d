//! Output staging. Every artifact is written to a temporary file next to
//! its destination and only renamed into place by [`Artifacts::commit`], so
//! a failed run leaves no partial outputs behind.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the manifest's directory when inside it.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub config: Option<String>,
    pub config_hash: Option<String>,
    pub threads: usize,
    pub started_utc: String,
    pub finished_utc: String,
    pub outputs: Vec<OutputEntry>,
}

struct Staged {
    dest: PathBuf,
    file: NamedTempFile,
    sha256: String,
    bytes: u64,
}

/// Writer that hashes and counts everything passing through it.
struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub struct Artifacts {
    dir: PathBuf,
    staged: Vec<Staged>,
    started: SystemTime,
}

impl Artifacts {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
            started: SystemTime::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Stages an artifact produced by `fill`; relative paths resolve
    /// against the output directory.
    pub fn add_with(&mut self, path: impl AsRef<Path>, fill: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
        let dest = self.dir.join(path.as_ref());
        let parent = dest.parent().map(Path::to_path_buf).unwrap_or_else(|| self.dir.clone());
        std::fs::create_dir_all(&parent)?;
        let file = NamedTempFile::new_in(&parent)?;
        let mut w = HashingWriter {
            inner: BufWriter::new(file.reopen()?),
            hasher: Sha256::new(),
            bytes: 0,
        };
        fill(&mut w)?;
        w.flush()?;
        let HashingWriter { inner, hasher, bytes } = w;
        inner.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        self.staged.retain(|s| s.dest != dest);
        self.staged.push(Staged {
            dest,
            file,
            sha256: hex::encode(hasher.finalize()),
            bytes,
        });
        Ok(())
    }

    pub fn add_bytes(&mut self, path: impl AsRef<Path>, data: &[u8]) -> CliResult<()> {
        self.add_with(path, |w| Ok(w.write_all(data)?))
    }

    pub fn add_json<T: Serialize + ?Sized>(&mut self, path: impl AsRef<Path>, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.add_bytes(path, &text)
    }

    /// Stages a CSV table with a header row.
    pub fn add_csv<R, I>(&mut self, path: impl AsRef<Path>, header: &[&str], rows: I) -> CliResult<()>
    where
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
        I: IntoIterator<Item = R>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let data = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.add_bytes(path, &data)
    }

    /// Moves every staged file into place, then writes the manifest under
    /// `manifest_name` in the output directory.
    pub fn commit(
        self,
        manifest_name: &str,
        command: Vec<String>,
        config: Option<(&str, &str)>,
    ) -> CliResult<RunManifest> {
        let mut outputs = Vec::with_capacity(self.staged.len());
        let mut staged = self.staged;
        staged.sort_by(|a, b| a.dest.cmp(&b.dest));
        for s in staged {
            let path = s
                .dest
                .strip_prefix(&self.dir)
                .map(|p| p.to_string_lossy().replace('\\', "/"))
                .unwrap_or_else(|_| s.dest.to_string_lossy().into_owned());
            s.file.persist(&s.dest).map_err(|e| e.error)?;
            outputs.push(OutputEntry {
                path,
                sha256: s.sha256,
                bytes: s.bytes,
            });
        }
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config: config.map(|c| c.0.to_string()),
            config_hash: config.map(|c| c.1.to_string()),
            threads: rayon::current_num_threads(),
            started_utc: rfc3339(self.started),
            finished_utc: rfc3339(SystemTime::now()),
            outputs,
        };
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&text)?;
        tmp.persist(self.dir.join(manifest_name)).map_err(|e| e.error)?;
        Ok(manifest)
    }
}

fn rfc3339(t: SystemTime) -> String {
    OffsetDateTime::from(t).format(&Rfc3339).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nothing_lands_before_commit() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path()).unwrap();
        a.add_bytes("sub/x.txt", b"hello").unwrap();
        assert!(!dir.path().join("sub/x.txt").exists());
        drop(a);
        assert!(!dir.path().join("sub/x.txt").exists());
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 0);
    }

    #[test]
    fn manifest_lists_every_output_with_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path()).unwrap();
        a.add_bytes("b.txt", b"abc").unwrap();
        a.add_csv("a.csv", &["x", "y"], [["1", "2"]]).unwrap();
        let m = a.commit("run.manifest.json", vec!["t".into()], None).unwrap();
        assert_eq!(m.outputs.len(), 2);
        assert_eq!(m.outputs[0].path, "a.csv");
        assert_eq!(
            m.outputs[1].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(std::fs::read_to_string(dir.path().join("a.csv")).unwrap(), "x,y\n1,2\n");
        assert!(dir.path().join("run.manifest.json").exists());
    }
}
