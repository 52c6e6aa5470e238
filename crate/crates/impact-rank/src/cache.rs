//! On-disk cache of percentile maps, keyed by corpus, benchmark, metric and age.
//! The directory comes from `IMPACT_RANK_CACHE`; without it nothing is cached.

use std::path::PathBuf;

use impact_rank_core::corpus::BenchmarkSpec;
use impact_rank_core::percentile::PercentileMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::sha256_hex;

pub const CACHE_ENV: &str = "IMPACT_RANK_CACHE";

#[derive(Debug, Clone, Default)]
pub struct PercentileCache {
    dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct Key<'a, M: Serialize> {
    corpus: &'a str,
    benchmark: &'a BenchmarkSpec,
    metric: &'a M,
    age: (u32, u32),
}

impl PercentileCache {
    pub fn from_env() -> Self {
        Self {
            dir: std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
        }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()) }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn dir(&self) -> Option<&PathBuf> {
        self.dir.as_ref()
    }

    fn path<M: Serialize>(&self, corpus_hash: &str, bench: &BenchmarkSpec, metric: &M, age: (u32, u32)) -> Option<PathBuf> {
        let key = Key {
            corpus: corpus_hash,
            benchmark: bench,
            metric,
            age,
        };
        let json = serde_json::to_string(&key).expect("serializable key");
        self.dir.as_ref().map(|d| d.join(format!("{}.json", sha256_hex(json.as_bytes()))))
    }

    /// Returns the cached map or computes and stores it. `age` is `(t, 0)` for
    /// single-age metrics and `(t1, t2)` for future works. Unreadable entries
    /// are recomputed.
    pub fn get_or_compute<M: Serialize>(
        &self,
        corpus_hash: &str,
        bench: &BenchmarkSpec,
        metric: &M,
        age: (u32, u32),
        compute: impl FnOnce() -> Result<PercentileMap>,
    ) -> Result<PercentileMap> {
        let Some(path) = self.path(corpus_hash, bench, metric, age) else {
            return compute();
        };
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(map) = serde_json::from_str(&text) {
                return Ok(map);
            }
        }
        let map = compute()?;
        let dir = path.parent().expect("cache file has a parent");
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_string(&map).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(map)
    }
}
