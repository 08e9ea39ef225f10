//! On-disk evaluation cache: one JSON object per line, append only.
//!
//! ```json
//! {"config":"3f0c...","genome":[0,1,...],"result":{"id":4,"status":"ok","accuracy":0.8}}
//! ```
//!
//! Lines written under a different configuration fingerprint are ignored
//! on load, so one file can serve several spaces. Only successful results
//! are stored; failures are retried in later runs.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use cellspace_core::{
    CachedEvaluator, DigitGenome, EvalCache, EvaluationRequest, EvaluationResult, Evaluator,
    EvaluatorError, GenomeLayout,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheLine {
    pub config: String,
    pub genome: Vec<u32>,
    pub result: EvaluationResult,
}

/// Append handle for a cache file. Safe to share between threads.
#[derive(Debug)]
pub struct CacheFile {
    path: PathBuf,
    config: String,
    writer: Mutex<File>,
}

impl CacheFile {
    pub fn open(path: &Path, config_fingerprint: &str) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(CacheFile {
            path: path.to_path_buf(),
            config: config_fingerprint.to_string(),
            writer: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Reads every usable entry for this configuration.
    pub fn load(&self, layout: &GenomeLayout) -> io::Result<EvalCache> {
        let mut cache = EvalCache::new();
        let reader = BufReader::new(File::open(&self.path)?);
        let mut skipped = 0usize;
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = match serde_json::from_str::<CacheLine>(&line) {
                Ok(e) => e,
                Err(e) => {
                    log::warn!(
                        "{}:{}: skipping corrupt cache line: {e}",
                        self.path.display(),
                        n + 1
                    );
                    skipped += 1;
                    continue;
                }
            };
            if entry.config != self.config || !entry.result.is_ok() {
                continue;
            }
            match DigitGenome::new(entry.genome, layout) {
                Ok(g) => {
                    cache.insert(g, entry.result);
                }
                Err(e) => {
                    log::warn!(
                        "{}:{}: skipping cache line: {e}",
                        self.path.display(),
                        n + 1
                    );
                    skipped += 1;
                }
            }
        }
        if skipped > 0 {
            log::warn!("{}: {skipped} cache line(s) skipped", self.path.display());
        }
        Ok(cache)
    }

    /// Appends the successful results among `entries`, one write per line.
    pub fn append<'a>(
        &self,
        entries: impl IntoIterator<Item = (&'a DigitGenome, &'a EvaluationResult)>,
    ) -> io::Result<usize> {
        let mut written = 0;
        let mut file = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        for (genome, result) in entries {
            if !result.is_ok() {
                continue;
            }
            let line = CacheLine {
                config: self.config.clone(),
                genome: genome.digits().to_vec(),
                result: result.clone(),
            };
            let mut text = serde_json::to_string(&line).expect("cache line serializes");
            text.push('\n');
            file.write_all(text.as_bytes())?;
            written += 1;
        }
        file.flush()?;
        Ok(written)
    }
}

/// [`CachedEvaluator`] that also writes new results to a [`CacheFile`].
pub struct PersistentEvaluator<E> {
    inner: CachedEvaluator<E>,
    file: CacheFile,
}

impl<E> PersistentEvaluator<E> {
    /// Loads the existing entries of `file` and wraps `inner`.
    pub fn open(inner: E, file: CacheFile, layout: &GenomeLayout) -> io::Result<Self> {
        let cache = file.load(layout)?;
        log::info!(
            "{}: {} cached result(s) loaded",
            file.path().display(),
            cache.len()
        );
        Ok(PersistentEvaluator {
            inner: CachedEvaluator::with_cache(inner, cache),
            file,
        })
    }

    pub fn cached(&self) -> &CachedEvaluator<E> {
        &self.inner
    }
}

impl<E: Evaluator> Evaluator for PersistentEvaluator<E> {
    fn evaluate(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Result<Vec<EvaluationResult>, EvaluatorError> {
        let results = self.inner.evaluate(requests)?;
        let fresh = self.inner.drain_new();
        if let Err(e) = self.file.append(fresh.iter().map(|(g, r)| (g, r))) {
            log::warn!(
                "{}: cannot append to cache: {e}",
                self.file.path().display()
            );
        }
        Ok(results)
    }
}
