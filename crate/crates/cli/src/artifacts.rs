//! Output directory staged in a sibling temp directory and moved into place
//! only once every file has been written.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use qball::io::fmt_f64;

/// A staged artifact directory. Dropping it without [`Artifacts::commit`]
/// removes the staging area and leaves the target untouched.
#[derive(Debug)]
pub struct Artifacts {
    staging: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl Artifacts {
    pub fn stage(target: &Path) -> io::Result<Self> {
        let name = target
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into());
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let staging = parent.join(format!(".{name}.tmp-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        Ok(Self {
            staging,
            target: target.to_path_buf(),
            committed: false,
        })
    }

    /// Writes `contents` to `name` (relative, may contain subdirectories).
    pub fn write(&self, name: &str, contents: &str) -> io::Result<()> {
        let path = self.staging.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, contents)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.staging.join(name).exists()
    }

    /// Replaces the target with the staged directory.
    pub fn commit(mut self) -> io::Result<PathBuf> {
        if self.target.exists() {
            let old = self.staging.with_extension("old");
            if old.exists() {
                fs::remove_dir_all(&old)?;
            }
            fs::rename(&self.target, &old)?;
            fs::rename(&self.staging, &self.target)?;
            fs::remove_dir_all(&old)?;
        } else {
            fs::rename(&self.staging, &self.target)?;
        }
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

/// A single CSV cell.
pub enum Cell<'a> {
    F(f64),
    I(usize),
    B(bool),
    S(&'a str),
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Comma-separated table with a fixed header.
pub struct Csv {
    width: usize,
    text: String,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            width: columns.len(),
            text: format!("{}\n", columns.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) {
        assert_eq!(cells.len(), self.width, "row width must match the header");
        let parts: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::F(x) => fmt_f64(*x),
                Cell::I(k) => k.to_string(),
                Cell::B(b) => b.to_string(),
                Cell::S(s) => quote(s),
            })
            .collect();
        self.text.push_str(&parts.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Ordered `key=value` report.
#[derive(Default)]
pub struct KeyValues {
    text: String,
}

impl KeyValues {
    pub fn f(&mut self, key: &str, x: f64) -> &mut Self {
        self.s(key, &fmt_f64(x))
    }

    pub fn s(&mut self, key: &str, value: &str) -> &mut Self {
        // Values stay on one line.
        let value = value.replace('\n', " ");
        self.text.push_str(&format!("{key}={value}\n"));
        self
    }

    pub fn finish(&self) -> String {
        self.text.clone()
    }
}
