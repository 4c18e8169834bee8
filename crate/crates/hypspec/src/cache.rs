//! On-disk spectrum cache keyed by group fingerprint and cutoff.

use std::path::{Path, PathBuf};

use hypspec_core::spectrum::{GroupPresentation, LengthSpectrum};

use crate::formats::{read_spectrum, write_spectrum};
use crate::manifest::RunManifest;
use crate::{Error, Result};

pub const CACHE_ENV: &str = "HYPSPEC_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct SpectrumCache {
    dir: PathBuf,
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `explicit`, else `$HYPSPEC_CACHE_DIR`, else `./.hypspec-cache`.
    pub fn resolve(explicit: Option<&Path>) -> Self {
        if let Some(p) = explicit {
            return Self::new(p);
        }
        match std::env::var_os(CACHE_ENV) {
            Some(p) if !p.is_empty() => Self::new(p),
            _ => Self::new(".hypspec-cache"),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Cutoff enters the key through its exact bit pattern.
    pub fn path_for(&self, grp: &GroupPresentation, cutoff: f64) -> PathBuf {
        self.dir.join(format!("{}-{:016x}.spectrum", hex::encode(grp.fingerprint()), cutoff.to_bits()))
    }

    /// A complete cached spectrum for this group and cutoff, if present.
    /// Unreadable or partial entries count as misses.
    pub fn load(&self, grp: &GroupPresentation, cutoff: f64) -> Option<LengthSpectrum> {
        let path = self.path_for(grp, cutoff);
        if !path.exists() {
            return None;
        }
        match read_spectrum(&path, Some(&grp.fingerprint())) {
            Ok(s) if !s.is_partial() => Some(s),
            Ok(_) => None,
            Err(e) => {
                log::warn!("ignoring cache entry {}: {e}", path.display());
                None
            }
        }
    }

    pub fn store(
        &self,
        grp: &GroupPresentation,
        spec: &LengthSpectrum,
        manifest: Option<&RunManifest>,
    ) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(grp, spec.cutoff);
        write_spectrum(&path, spec, manifest)?;
        Ok(path)
    }
}
