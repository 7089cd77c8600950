use std::path::{Path, PathBuf};

/// Environment variable holding extra library directories, colon-separated.
pub const LIBRARY_PATH_VAR: &str = "FAC_LIBRARY_PATH";

/// Ordered list of directories searched for `<name>.facl`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchPath {
    pub dirs: Vec<PathBuf>,
}

impl SearchPath {
    pub fn new<I, P>(dirs: I) -> SearchPath
    where
        I: IntoIterator<Item = P>,
        P: Into<PathBuf>,
    {
        SearchPath {
            dirs: dirs.into_iter().map(Into::into).collect(),
        }
    }

    /// Explicit directories first, then the entries of `env` (the value of
    /// `FAC_LIBRARY_PATH`, if set).
    pub fn with_env(explicit: &[PathBuf], env: Option<&str>) -> SearchPath {
        let mut dirs = explicit.to_vec();
        if let Some(v) = env {
            dirs.extend(v.split(':').filter(|s| !s.is_empty()).map(PathBuf::from));
        }
        SearchPath { dirs }
    }

    /// [`SearchPath::with_env`] reading the real environment.
    pub fn from_process_env(explicit: &[PathBuf]) -> SearchPath {
        let env = std::env::var(LIBRARY_PATH_VAR).ok();
        SearchPath::with_env(explicit, env.as_deref())
    }

    pub fn file_name(lib: &str) -> String {
        format!("{lib}.facl")
    }

    /// First directory holding `<lib>.facl`.
    pub fn locate(&self, lib: &str) -> Option<PathBuf> {
        let file = SearchPath::file_name(lib);
        self.dirs.iter().map(|d| d.join(&file)).find(|p| is_file(p))
    }
}

fn is_file(p: &Path) -> bool {
    p.metadata().map(|m| m.is_file()).unwrap_or(false)
}
