//! Output files, CSV formatting and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Files produced by one experiment, held in memory until the run
/// succeeds.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_json(&mut self, name: impl Into<String>, value: &impl Serialize) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("records serialize");
        bytes.push(b'\n');
        self.add(name, bytes);
    }

    pub fn files(&self) -> &[(String, Vec<u8>)] {
        &self.files
    }
}

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// A CSV table with LF line endings.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes every file into `dir`. If any write fails, the files already
/// written are removed again, along with `dir` if this call created it.
pub fn write_all(dir: &Path, outputs: &Outputs) -> io::Result<Vec<FileRecord>> {
    let created = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut records = Vec::new();
    for (name, bytes) in outputs.files() {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            remove_partial(dir, &written, created);
            return Err(e);
        }
        written.push(path);
        records.push(FileRecord {
            name: name.clone(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
    }
    Ok(records)
}

pub fn remove_partial(dir: &Path, written: &[PathBuf], created: bool) {
    for p in written {
        let _ = fs::remove_file(p);
    }
    if created {
        let _ = fs::remove_dir(dir);
    }
}
