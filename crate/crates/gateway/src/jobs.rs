//! Background job execution with bounded concurrency.

use std::collections::HashMap;
use std::io;
use std::sync::{Arc, Mutex};

use stacksim::design::{Design, Violation};
use stacksim::dse::SweepConfig;
use tokio::sync::Semaphore;

use crate::output::{self, RunOutput};
use crate::store::{content_id, now, DesignRecord, JobKind, JobRecord, JobState, Store};

pub const INTERRUPTED: &str = "interrupted by service restart";

pub struct JobManager {
    store: Store,
    jobs: Mutex<HashMap<String, JobRecord>>,
    permits: Arc<Semaphore>,
    config: SweepConfig,
}

impl JobManager {
    /// Loads persisted jobs; those that never finished are marked failed.
    pub fn recover(store: Store, workers: usize, config: SweepConfig) -> io::Result<Arc<JobManager>> {
        let mut jobs = HashMap::new();
        for mut rec in store.jobs()? {
            if !rec.state.is_finished() {
                rec.state = JobState::Failed;
                rec.error = Some(INTERRUPTED.into());
                rec.updated = now();
                store.save_job(&rec)?;
            }
            jobs.insert(rec.id.clone(), rec);
        }
        Ok(Arc::new(JobManager {
            store,
            jobs: Mutex::new(jobs),
            permits: Arc::new(Semaphore::new(workers.max(1))),
            config,
        }))
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn get(&self, id: &str) -> Option<JobRecord> {
        self.jobs.lock().unwrap().get(id).cloned()
    }

    pub fn result(&self, job: &JobRecord) -> io::Result<Option<RunOutput>> {
        match &job.result_id {
            Some(rid) if job.state == JobState::Done => self.store.result(rid),
            _ => Ok(None),
        }
    }

    /// Validates the design and queues a job on a snapshot of its document.
    /// Nothing is recorded when validation fails.
    pub fn submit(self: &Arc<Self>, design: &DesignRecord, kind: JobKind) -> Result<JobRecord, Vec<Violation>> {
        let resolved = Design::from_document(&design.document)?;
        let t = now();
        let rec = JobRecord {
            id: uuid::Uuid::new_v4().to_string(),
            design_id: design.id.clone(),
            design_revision: design.revision,
            kind,
            state: JobState::Queued,
            progress: 0.0,
            result_id: None,
            error: None,
            created: t,
            updated: t,
        };
        {
            let mut jobs = self.jobs.lock().unwrap();
            if let Err(e) = self.store.save_job(&rec) {
                eprintln!("warning: could not persist job {}: {e}", rec.id);
            }
            jobs.insert(rec.id.clone(), rec.clone());
        }
        let rid = content_id(kind, &design.document);
        tokio::spawn(Arc::clone(self).run(rec.id.clone(), kind, resolved, rid));
        Ok(rec)
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut JobRecord)) {
        let mut jobs = self.jobs.lock().unwrap();
        if let Some(rec) = jobs.get_mut(id) {
            f(rec);
            rec.updated = now();
            if let Err(e) = self.store.save_job(rec) {
                eprintln!("warning: could not persist job {id}: {e}");
            }
        }
    }

    fn advance(&self, id: &str, fraction: f64) {
        let current = self.get(id).map_or(0.0, |r| r.progress);
        if fraction > current {
            self.update(id, |r| r.progress = r.progress.max(fraction));
        }
    }

    async fn run(self: Arc<Self>, id: String, kind: JobKind, design: Design, rid: String) {
        let Ok(_permit) = Arc::clone(&self.permits).acquire_owned().await else { return };
        self.update(&id, |r| r.state = JobState::Running);
        let outcome = match self.store.result(&rid) {
            Ok(Some(_)) => Ok(()),
            _ => {
                let me = Arc::clone(&self);
                let job = id.clone();
                let rid = rid.clone();
                let config = self.config;
                tokio::task::spawn_blocking(move || {
                    let out = match kind {
                        JobKind::Simulate => output::simulate(&design, &config).map(|(o, _)| o).map_err(|e| e.to_string()),
                        JobKind::Sweep => {
                            let progress = |done: usize, total: usize| me.advance(&job, done as f64 / total.max(1) as f64);
                            output::sweep(&design, &config, &progress).map_err(|e| e.to_string())
                        }
                    }?;
                    me.store.save_result(&rid, &out).map_err(|e| format!("could not store result: {e}"))
                })
                .await
                .unwrap_or_else(|e| Err(format!("job aborted: {e}")))
            }
        };
        self.update(&id, |r| match outcome {
            Ok(()) => {
                r.state = JobState::Done;
                r.progress = 1.0;
                r.result_id = Some(rid);
            }
            Err(e) => {
                r.state = JobState::Failed;
                r.error = Some(e);
            }
        });
    }
}
