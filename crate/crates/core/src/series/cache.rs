use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use crate::catalog::FileId;
use crate::model::{Recording, Sample};

pub const DEFAULT_CACHE_BYTES: usize = 1 << 30;

enum Slot {
    /// Some thread is decoding this file; others wait for it.
    Loading,
    Ready {
        recording: Arc<Recording>,
        bytes: usize,
        last_used: u64,
    },
}

#[derive(Default)]
struct Inner {
    slots: HashMap<FileId, Slot>,
    held_bytes: usize,
    tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub entries: usize,
    pub held_bytes: usize,
    pub budget_bytes: usize,
    pub hits: u64,
    pub decodes: u64,
    pub evictions: u64,
}

/// Decoded recordings kept in memory under a byte budget, evicting the
/// least recently used. Concurrent requests for the same file share a
/// single decode.
pub struct SeriesCache {
    budget_bytes: usize,
    inner: Mutex<Inner>,
    loaded: Condvar,
    hits: AtomicU64,
    decodes: AtomicU64,
    evictions: AtomicU64,
}

/// Approximate resident size of a decoded recording.
pub fn recording_bytes(recording: &Recording) -> usize {
    std::mem::size_of::<Recording>() + recording.len() * std::mem::size_of::<Sample>()
}

impl Default for SeriesCache {
    fn default() -> Self {
        SeriesCache::new(DEFAULT_CACHE_BYTES)
    }
}

impl SeriesCache {
    pub fn new(budget_bytes: usize) -> SeriesCache {
        SeriesCache {
            budget_bytes,
            inner: Mutex::default(),
            loaded: Condvar::new(),
            hits: AtomicU64::new(0),
            decodes: AtomicU64::new(0),
            evictions: AtomicU64::new(0),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Returns the cached recording for `key`, calling `load` on a miss.
    ///
    /// A recording larger than the whole budget is returned but not kept.
    pub fn get_or_load<E>(
        &self,
        key: FileId,
        load: impl FnOnce() -> Result<Recording, E>,
    ) -> Result<Arc<Recording>, E> {
        let mut inner = self.lock();
        loop {
            inner.tick += 1;
            let tick = inner.tick;
            match inner.slots.get_mut(&key) {
                Some(Slot::Ready { recording, last_used, .. }) => {
                    *last_used = tick;
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(Arc::clone(recording));
                }
                Some(Slot::Loading) => {
                    inner = self.loaded.wait(inner).unwrap_or_else(|e| e.into_inner());
                }
                None => break,
            }
        }
        inner.slots.insert(key, Slot::Loading);
        drop(inner);

        let result = load();
        self.decodes.fetch_add(1, Ordering::Relaxed);
        let mut inner = self.lock();
        inner.slots.remove(&key);
        let out = match result {
            Ok(recording) => {
                let recording = Arc::new(recording);
                let bytes = recording_bytes(&recording);
                if bytes <= self.budget_bytes {
                    self.evict_for(&mut inner, bytes);
                    inner.tick += 1;
                    let last_used = inner.tick;
                    inner.held_bytes += bytes;
                    inner.slots.insert(
                        key,
                        Slot::Ready {
                            recording: Arc::clone(&recording),
                            bytes,
                            last_used,
                        },
                    );
                }
                Ok(recording)
            }
            Err(e) => Err(e),
        };
        drop(inner);
        self.loaded.notify_all();
        out
    }

    fn evict_for(&self, inner: &mut Inner, incoming: usize) {
        while inner.held_bytes + incoming > self.budget_bytes {
            let victim = inner
                .slots
                .iter()
                .filter_map(|(k, s)| match s {
                    Slot::Ready { last_used, bytes, .. } => Some((*last_used, *k, *bytes)),
                    Slot::Loading => None,
                })
                .min();
            let Some((_, key, bytes)) = victim else { break };
            inner.slots.remove(&key);
            inner.held_bytes -= bytes;
            self.evictions.fetch_add(1, Ordering::Relaxed);
        }
    }

    /// Drops a cached entry, e.g. after its file was deleted.
    pub fn invalidate(&self, key: FileId) {
        let mut inner = self.lock();
        if let Some(Slot::Ready { bytes, .. }) = inner.slots.get(&key) {
            let bytes = *bytes;
            inner.slots.remove(&key);
            inner.held_bytes -= bytes;
        }
    }

    pub fn stats(&self) -> CacheStats {
        let inner = self.lock();
        CacheStats {
            entries: inner.slots.values().filter(|s| matches!(s, Slot::Ready { .. })).count(),
            held_bytes: inner.held_bytes,
            budget_bytes: self.budget_bytes,
            hits: self.hits.load(Ordering::Relaxed),
            decodes: self.decodes.load(Ordering::Relaxed),
            evictions: self.evictions.load(Ordering::Relaxed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn rec(n: usize) -> Recording {
        let samples = (0..n).map(|i| Sample::with_pupils(i as f64, Some(3.0), None)).collect();
        Recording::new(samples, 1000.0).unwrap()
    }

    #[test]
    fn second_request_is_a_hit() {
        let cache = SeriesCache::default();
        let a = cache.get_or_load(1, || Ok::<_, Infallible>(rec(10))).unwrap();
        let b = cache.get_or_load(1, || -> Result<Recording, Infallible> { panic!("decoded twice") }).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let stats = cache.stats();
        assert_eq!((stats.hits, stats.decodes, stats.entries), (1, 1, 1));
    }

    #[test]
    fn budget_is_respected_with_lru_eviction() {
        let size = recording_bytes(&rec(100));
        let cache = SeriesCache::new(2 * size);
        cache.get_or_load(1, || Ok::<_, Infallible>(rec(100))).unwrap();
        cache.get_or_load(2, || Ok::<_, Infallible>(rec(100))).unwrap();
        cache.get_or_load(1, || Ok::<_, Infallible>(rec(100))).unwrap();
        cache.get_or_load(3, || Ok::<_, Infallible>(rec(100))).unwrap();
        let stats = cache.stats();
        assert!(stats.held_bytes <= stats.budget_bytes);
        assert_eq!(stats.entries, 2);
        assert_eq!(stats.evictions, 1);
        // 2 was least recently used
        cache.get_or_load(1, || -> Result<Recording, Infallible> { panic!("1 was evicted") }).unwrap();
        let before = cache.stats().decodes;
        cache.get_or_load(2, || Ok::<_, Infallible>(rec(100))).unwrap();
        assert_eq!(cache.stats().decodes, before + 1);
    }

    #[test]
    fn oversized_entries_are_not_retained() {
        let cache = SeriesCache::new(16);
        cache.get_or_load(1, || Ok::<_, Infallible>(rec(100))).unwrap();
        assert_eq!(cache.stats().entries, 0);
        assert_eq!(cache.stats().held_bytes, 0);
    }

    #[test]
    fn failed_load_is_not_cached() {
        let cache = SeriesCache::default();
        assert!(cache.get_or_load(1, || Err::<Recording, _>("bad")).is_err());
        assert!(cache.get_or_load(1, || Ok::<_, &str>(rec(1))).is_ok());
        assert_eq!(cache.stats().decodes, 2);
    }

    #[test]
    fn concurrent_requests_share_one_decode() {
        let cache = Arc::new(SeriesCache::default());
        let threads: Vec<_> = (0..8)
            .map(|_| {
                let cache = Arc::clone(&cache);
                std::thread::spawn(move || {
                    cache
                        .get_or_load(5, || {
                            std::thread::sleep(std::time::Duration::from_millis(30));
                            Ok::<_, Infallible>(rec(1000))
                        })
                        .unwrap()
                })
            })
            .collect();
        for t in threads {
            assert_eq!(t.join().unwrap().len(), 1000);
        }
        assert_eq!(cache.stats().decodes, 1);
        assert_eq!(cache.stats().hits, 7);
    }
}
