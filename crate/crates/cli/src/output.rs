use std::fmt::Display;
use std::fs;
use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use manet_energy::rng::RNG_ALGORITHM;
use manet_energy::TOOL_VERSION;

/// Output directory, created on first use.
pub fn directory(dir: Option<&Path>) -> Result<PathBuf> {
    let dir = dir.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// `file` inside `dir`; anything that could escape the directory is refused.
pub fn inside(dir: &Path, file: &Path) -> Result<PathBuf> {
    let plain = !file.as_os_str().is_empty()
        && file.components().all(|c| matches!(c, Component::Normal(_)));
    if !plain {
        bail!("--out must be a relative path inside the output directory, got {}", file.display());
    }
    Ok(dir.join(file))
}

/// Writes through a temporary sibling so a failed run leaves no partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let name = path.file_name().context("output path has no file name")?;
    let tmp = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
    let result = fs::write(&tmp, contents).and_then(|()| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

/// `#` comment lines recording how a file was produced.
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn new(command: &str) -> Self {
        Self {
            lines: vec![
                format!("# tool={TOOL_VERSION}"),
                format!("# rng={RNG_ALGORITHM}"),
                format!("# command={command}"),
            ],
        }
    }

    pub fn param(mut self, key: &str, value: impl Display) -> Self {
        self.lines.push(format!("# {key}={value}"));
        self
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

pub fn join<T: Display>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}
