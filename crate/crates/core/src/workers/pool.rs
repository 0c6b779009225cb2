use std::collections::{HashMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::{Job, JobId, JobKind, JobRunner, JobSpec, JobState, WorkerError};
use crate::filters::{validate_chain, Severity};
use crate::model::ChannelSet;

/// Called with a snapshot after every job state change, in order.
pub type JobHook = Arc<dyn Fn(&Job) + Send + Sync>;

#[derive(Clone, Default)]
pub struct PoolOptions {
    /// Id handed to the first submitted job.
    pub first_job_id: Option<JobId>,
    pub on_update: Option<JobHook>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    pub workers: usize,
    pub running: usize,
    pub queued: usize,
    /// Highest number of jobs ever running at once.
    pub peak_running: usize,
    pub succeeded: usize,
    pub failed: usize,
}

struct State {
    jobs: HashMap<JobId, Job>,
    queue: VecDeque<JobId>,
    next_id: JobId,
    running: usize,
    peak_running: usize,
    succeeded: usize,
    failed: usize,
    shutdown: bool,
}

struct Shared {
    state: Mutex<State>,
    work: Condvar,
    changed: Condvar,
    runner: Arc<dyn JobRunner>,
    hook: Option<JobHook>,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn publish(&self, job: &Job) {
        if let Some(hook) = &self.hook {
            hook(job);
        }
    }
}

/// Fixed-size FIFO thread pool.
pub struct WorkerPool {
    shared: Arc<Shared>,
    workers: usize,
    threads: Vec<JoinHandle<()>>,
}

impl WorkerPool {
    pub fn new(workers: usize, runner: Arc<dyn JobRunner>) -> Result<WorkerPool, WorkerError> {
        Self::with_options(workers, runner, PoolOptions::default())
    }

    pub fn with_options(
        workers: usize,
        runner: Arc<dyn JobRunner>,
        options: PoolOptions,
    ) -> Result<WorkerPool, WorkerError> {
        if workers == 0 {
            return Err(WorkerError::NoCores);
        }
        let shared = Arc::new(Shared {
            state: Mutex::new(State {
                jobs: HashMap::new(),
                queue: VecDeque::new(),
                next_id: options.first_job_id.unwrap_or(1),
                running: 0,
                peak_running: 0,
                succeeded: 0,
                failed: 0,
                shutdown: false,
            }),
            work: Condvar::new(),
            changed: Condvar::new(),
            runner,
            hook: options.on_update,
        });
        let threads = (0..workers)
            .map(|i| {
                let shared = Arc::clone(&shared);
                std::thread::Builder::new()
                    .name(format!("pupilclean-worker-{i}"))
                    .spawn(move || worker_loop(&shared))
                    .expect("spawn worker thread")
            })
            .collect();
        Ok(WorkerPool {
            shared,
            workers,
            threads,
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Queues a job and returns its id immediately.
    ///
    /// Chains with validation errors and inputs the runner cannot resolve are
    /// rejected here, so they never enter the queue.
    pub fn submit(&self, spec: JobSpec) -> Result<JobId, WorkerError> {
        if let JobKind::Clean { chain } = &spec.kind {
            let errors: Vec<_> = validate_chain(chain, ChannelSet::all())
                .into_iter()
                .filter(|w| w.severity == Severity::Error)
                .collect();
            if !errors.is_empty() {
                return Err(WorkerError::InvalidChain(errors));
            }
        }
        self.shared
            .runner
            .check_input(&spec.input)
            .map_err(WorkerError::UnknownInput)?;
        let mut state = self.shared.lock();
        if state.shutdown {
            return Err(WorkerError::ShuttingDown);
        }
        let id = state.next_id;
        state.next_id += 1;
        let job = Job::new(id, spec);
        self.shared.publish(&job);
        state.jobs.insert(id, job);
        state.queue.push_back(id);
        drop(state);
        self.shared.work.notify_one();
        Ok(id)
    }

    /// Snapshot of a job.
    pub fn job(&self, id: JobId) -> Option<Job> {
        self.shared.lock().jobs.get(&id).cloned()
    }

    pub fn jobs(&self) -> Vec<Job> {
        let mut jobs: Vec<Job> = self.shared.lock().jobs.values().cloned().collect();
        jobs.sort_by_key(|j| j.id);
        jobs
    }

    pub fn stats(&self) -> PoolStats {
        let state = self.shared.lock();
        PoolStats {
            workers: self.workers,
            running: state.running,
            queued: state.queue.len(),
            peak_running: state.peak_running,
            succeeded: state.succeeded,
            failed: state.failed,
        }
    }

    /// Removes a job that has not started; it ends up failed.
    pub fn cancel(&self, id: JobId) -> Result<Job, WorkerError> {
        let mut state = self.shared.lock();
        let job = state.jobs.get(&id).ok_or(WorkerError::UnknownJob(id))?;
        if job.state != JobState::Queued {
            return Err(WorkerError::NotQueued(id));
        }
        state.queue.retain(|&q| q != id);
        let job = state.jobs.get_mut(&id).expect("present");
        job.mark_failed("cancelled before start".into());
        let snapshot = job.clone();
        state.failed += 1;
        self.shared.publish(&snapshot);
        drop(state);
        self.shared.changed.notify_all();
        Ok(snapshot)
    }

    /// Blocks until the job reaches a terminal state.
    pub fn wait(&self, id: JobId) -> Result<Job, WorkerError> {
        let mut state = self.shared.lock();
        loop {
            let job = state.jobs.get(&id).ok_or(WorkerError::UnknownJob(id))?;
            if job.state.is_terminal() {
                return Ok(job.clone());
            }
            state = self.shared.changed.wait(state).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Blocks until nothing is queued or running.
    pub fn wait_idle(&self) {
        let mut state = self.shared.lock();
        while !state.queue.is_empty() || state.running > 0 {
            state = self.shared.changed.wait(state).unwrap_or_else(|e| e.into_inner());
        }
    }
}

impl Drop for WorkerPool {
    /// Lets running jobs finish; jobs still queued are abandoned.
    fn drop(&mut self) {
        self.shared.lock().shutdown = true;
        self.shared.work.notify_all();
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

fn worker_loop(shared: &Shared) {
    loop {
        let mut state = shared.lock();
        let id = loop {
            if state.shutdown {
                return;
            }
            if let Some(id) = state.queue.pop_front() {
                break id;
            }
            state = shared.work.wait(state).unwrap_or_else(|e| e.into_inner());
        };
        state.running += 1;
        state.peak_running = state.peak_running.max(state.running);
        let job = state.jobs.get_mut(&id).expect("queued job is tracked");
        job.mark_running();
        let snapshot = job.clone();
        shared.publish(&snapshot);
        drop(state);

        let result = catch_unwind(AssertUnwindSafe(|| shared.runner.run(&snapshot)))
            .unwrap_or_else(|_| Err("worker panicked while running the job".into()));

        let mut state = shared.lock();
        state.running -= 1;
        let job = state.jobs.get_mut(&id).expect("running job is tracked");
        let succeeded = match result {
            Ok(outcome) => {
                job.mark_succeeded(outcome);
                true
            }
            Err(message) => {
                log::warn!("job {id} failed: {message}");
                job.mark_failed(message);
                false
            }
        };
        let snapshot = job.clone();
        if succeeded {
            state.succeeded += 1;
        } else {
            state.failed += 1;
        }
        shared.publish(&snapshot);
        drop(state);
        shared.changed.notify_all();
    }
}
