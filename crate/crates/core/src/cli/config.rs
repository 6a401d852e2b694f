//! Flat `key=value` configuration, resolved manifests and run directories.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Keys that choose where a run is written rather than what it computes;
/// accepted in config files but left out of the manifest.
const PLACEMENT_KEYS: [&str; 2] = ["out", "tag"];

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// ignored; surrounding whitespace is trimmed; duplicate keys are errors.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected key=value, got {line:?}",
                n + 1
            )));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {k:?}", n + 1)));
        }
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Fully resolved parameters of one command invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub command: String,
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    /// Config-file text: `command=` first, then keys in sorted order.
    pub fn text(&self) -> String {
        let mut out = format!("command={}\n", self.command);
        for (k, v) in &self.entries {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    /// First 12 hex digits of the SHA-256 of [`Manifest::text`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.text().as_bytes()))[..12].to_string()
    }
}

/// Merges flags over config-file values over defaults, recording every
/// resolved value.
pub(crate) struct Resolver {
    command: &'static str,
    file: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub(crate) fn new(command: &'static str, config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(p) => read_config(p)?,
            None => BTreeMap::new(),
        };
        if let Some(c) = file.get("command") {
            if c != command {
                return Err(Error::Config(format!("config was written for {c:?}, not {command:?}")));
            }
        }
        Ok(Self {
            command,
            file,
            consumed: BTreeSet::from(["command".to_string()]),
            resolved: BTreeMap::new(),
        })
    }

    fn lookup<T: FromStr>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.consumed.insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::Config(format!("{key}={raw}: {e}"))),
            None => Ok(None),
        }
    }

    pub(crate) fn value<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let v = self.lookup(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub(crate) fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T::Err: Display,
    {
        let v = self.lookup(key, flag)?.ok_or_else(|| {
            Error::Config(format!(
                "{} needs --{} (or {key}= in the config file)",
                self.command,
                key.replace('_', "-")
            ))
        })?;
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// A value computed by the command (such as a file digest). A config
    /// file that states it must agree.
    pub(crate) fn derived(&mut self, key: &str, value: String) -> Result<()> {
        self.consumed.insert(key.to_string());
        if let Some(stated) = self.file.get(key) {
            if *stated != value {
                return Err(Error::Config(format!(
                    "{key} is {value} but the config states {stated}"
                )));
            }
        }
        self.resolved.insert(key.to_string(), value);
        Ok(())
    }

    /// Placement settings, which stay out of the manifest.
    pub(crate) fn placement(&mut self, out: Option<PathBuf>, tag: Option<String>) -> Result<(PathBuf, String)> {
        let out = self.lookup("out", out)?.unwrap_or_else(|| PathBuf::from("runs"));
        let tag = self.lookup("tag", tag)?.unwrap_or_else(|| self.command.to_string());
        if tag.is_empty() || tag.contains(['/', '\\']) {
            return Err(Error::Config(format!("tag {tag:?} must be a nonempty plain name")));
        }
        Ok((out, tag))
    }

    pub(crate) fn finish(self) -> Result<Manifest> {
        let unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.consumed.contains(*k) && !PLACEMENT_KEYS.contains(&k.as_str()))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys for {}: {unknown:?}", self.command)));
        }
        Ok(Manifest {
            command: self.command.to_string(),
            entries: self.resolved,
        })
    }
}

pub(crate) fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Output directory `<out>/<tag>-<manifest hash>`.
///
/// Files written through it are removed again, together with the directory
/// if this run created it, unless [`RunDir::finish`] is called.
pub struct RunDir {
    path: PathBuf,
    created: bool,
    written: Vec<PathBuf>,
    finished: bool,
}

pub const MANIFEST_FILE: &str = "manifest.txt";

impl RunDir {
    /// Creates the directory and writes the manifest. An existing directory
    /// is reused only if it holds the identical manifest.
    pub fn create(out: &Path, tag: &str, manifest: &Manifest) -> Result<Self> {
        let path = out.join(format!("{tag}-{}", manifest.hash()));
        let text = manifest.text();
        let created = if path.exists() {
            let existing = fs::read_to_string(path.join(MANIFEST_FILE)).unwrap_or_default();
            if existing != text {
                return Err(Error::Config(format!(
                    "{} exists but holds a different manifest",
                    path.display()
                )));
            }
            false
        } else {
            fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
            true
        };
        let mut dir = Self {
            path,
            created,
            written: Vec::new(),
            finished: false,
        };
        dir.write(MANIFEST_FILE, text.as_bytes())?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Registers `name` for cleanup and returns its full path.
    pub fn track(&mut self, name: &str) -> PathBuf {
        let p = self.path.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.track(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    pub fn finish(mut self) -> PathBuf {
        self.finished = true;
        self.path.clone()
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if self.finished {
            return;
        }
        if self.created {
            let _ = fs::remove_dir_all(&self.path);
        } else {
            for p in &self.written {
                if p.file_name().is_some_and(|n| n != MANIFEST_FILE) {
                    let _ = fs::remove_file(p);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let m = parse_config("# comment\n\n epochs = 5 \nscheme=6h\n").unwrap();
        assert_eq!(m.get("epochs").unwrap(), "5");
        assert_eq!(m.get("scheme").unwrap(), "6h");
        assert!(parse_config("a=1\na=2").is_err());
        assert!(parse_config("novalue").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        fs::write(&cfg, "epochs=5\nalpha=0.01\n").unwrap();
        let mut r = Resolver::new("train", Some(&cfg)).unwrap();
        assert_eq!(r.value("epochs", Some(7usize), 200).unwrap(), 7);
        assert_eq!(r.value("alpha", None, 0.001).unwrap(), 0.01);
        assert_eq!(r.value("gamma", None, 0.9).unwrap(), 0.9);
        let m = r.finish().unwrap();
        assert_eq!(m.text(), "command=train\nalpha=0.01\nepochs=7\ngamma=0.9\n");
        assert_eq!(parse_config(&m.text()).unwrap().len(), 4);
    }

    #[test]
    fn unknown_and_mismatched_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        fs::write(&cfg, "epochs=5\nbogus=1\n").unwrap();
        let mut r = Resolver::new("train", Some(&cfg)).unwrap();
        r.value("epochs", None, 1usize).unwrap();
        assert!(matches!(r.finish(), Err(Error::Config(_))));
        fs::write(&cfg, "command=evaluate\n").unwrap();
        assert!(Resolver::new("train", Some(&cfg)).is_err());
    }

    #[test]
    fn unfinished_run_directory_is_removed() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest {
            command: "x".into(),
            entries: BTreeMap::new(),
        };
        let path = {
            let mut run = RunDir::create(dir.path(), "t", &m).unwrap();
            run.write("a.csv", b"1").unwrap();
            run.path().to_path_buf()
        };
        assert!(!path.exists());
        let run = RunDir::create(dir.path(), "t", &m).unwrap();
        let kept = run.finish();
        assert!(kept.join(MANIFEST_FILE).exists());
        // reusing the same manifest is allowed
        let again = RunDir::create(dir.path(), "t", &m).unwrap();
        again.finish();
    }
}
