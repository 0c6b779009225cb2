use std::sync::Arc;

use pupilclean_core::catalog::Catalog;
use pupilclean_core::series::{SeriesCache, SeriesService};
use pupilclean_core::workers::{CatalogRunner, Job, PoolConfig, PoolOptions, WorkerPool};
use pupilclean_core::ColumnMapping;

use crate::config::ServiceConfig;

/// Shared handles behind every request.
#[derive(Clone)]
pub struct AppState {
    pub catalog: Arc<Catalog>,
    pub pool: Arc<WorkerPool>,
    pub series: Arc<SeriesService>,
    pub mapping: Arc<ColumnMapping>,
    pub default_sample_rate_hz: Option<f64>,
}

impl AppState {
    /// Opens the catalog under the storage root and starts the worker pool.
    pub fn open(config: &ServiceConfig) -> Result<AppState, String> {
        let catalog = Arc::new(Catalog::open(&config.storage_root).map_err(|e| e.to_string())?);
        let pool_config = PoolConfig {
            max_workers: config.workers,
            ..PoolConfig::detect()
        };
        let workers = pool_config.workers().map_err(|e| e.to_string())?;
        let sink = Arc::clone(&catalog);
        let options = PoolOptions {
            first_job_id: Some(catalog.next_job_id()),
            on_update: Some(Arc::new(move |job: &Job| {
                if let Err(e) = sink.put_job(job) {
                    log::error!("could not persist job {}: {e}", job.id);
                }
            })),
        };
        let runner = Arc::new(CatalogRunner::new(Arc::clone(&catalog)));
        let pool = WorkerPool::with_options(workers, runner, options).map_err(|e| e.to_string())?;
        log::info!(
            "catalog at {}, {workers} worker(s) on {} core(s)",
            config.storage_root.display(),
            pool_config.core_count
        );
        let series = SeriesService::new(Arc::clone(&catalog), SeriesCache::new(config.cache_budget_bytes));
        Ok(AppState {
            catalog,
            pool: Arc::new(pool),
            series: Arc::new(series),
            mapping: Arc::new(config.mapping.clone()),
            default_sample_rate_hz: config.default_sample_rate_hz,
        })
    }
}
