use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use stable_superprocess::config::ConfigMap;
use stable_superprocess::{Error, VERSION};

/// The only directory commands write into.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    /// Writes `contents` to `root/name` through a temporary file, so a
    /// failed run never leaves a partial artifact. `name` must be a plain
    /// file name.
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Error> {
        let plain = Path::new(name).file_name().is_some_and(|n| n == name) && !name.starts_with('.');
        if !plain {
            return Err(Error::Config(format!("'{name}' is not a plain file name")));
        }
        std::fs::create_dir_all(&self.root)?;
        let target = self.root.join(name);
        let partial = self.root.join(format!(".{name}.partial"));
        std::fs::write(&partial, contents)?;
        std::fs::rename(&partial, &target)?;
        Ok(target)
    }
}

/// Effective configuration of a command: the user's keys overlaid with the
/// resolved values (defaults included), led by the command and version.
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str, config: &ConfigMap, resolved: Vec<(String, String)>) -> Self {
        let mut merged: BTreeMap<String, String> =
            config.entries().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        merged.extend(resolved);
        let mut entries = vec![
            ("version".to_string(), VERSION.to_string()),
            ("command".to_string(), command.to_string()),
        ];
        entries.extend(merged);
        Self { entries }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.entries
    }

    /// `key = value` lines for `#` comments.
    pub fn lines(&self) -> Vec<String> {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }

    pub fn comment_block(&self) -> String {
        self.lines().iter().map(|l| format!("# {l}\n")).collect()
    }
}
