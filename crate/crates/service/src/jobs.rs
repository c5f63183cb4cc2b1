use std::collections::{HashMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Finished jobs retained before least-recently-used eviction.
pub const DEFAULT_RETENTION: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobKind {
    Simulation,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    /// Milliseconds since the Unix epoch.
    pub submitted_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<u64>,
    pub request: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub enum Lookup {
    Found(JobRecord),
    Evicted,
    Unknown,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn format_id(n: u64) -> String {
    format!("job-{n:012}")
}

fn parse_id(id: &str) -> Option<u64> {
    id.strip_prefix("job-")?.parse().ok()
}

struct Inner {
    jobs: HashMap<u64, JobRecord>,
    /// Recency order of retained job numbers, least recent first.
    recency: VecDeque<u64>,
    next: u64,
    journal: Option<File>,
}

impl Inner {
    fn touch(&mut self, n: u64) {
        if let Some(pos) = self.recency.iter().position(|x| *x == n) {
            self.recency.remove(pos);
        }
        self.recency.push_back(n);
    }

    fn record(&mut self, job: &JobRecord) {
        if let Some(f) = &mut self.journal {
            // journaling is best effort; the in-memory store stays authoritative
            if let Ok(line) = serde_json::to_string(job) {
                let _ = writeln!(f, "{line}");
                let _ = f.flush();
            }
        }
    }
}

/// In-memory job table with LRU retention and an optional append-only journal.
pub struct JobStore {
    inner: Mutex<Inner>,
    retention: usize,
}

impl JobStore {
    pub fn new(retention: usize) -> Self {
        Self {
            inner: Mutex::new(Inner {
                jobs: HashMap::new(),
                recency: VecDeque::new(),
                next: 1,
                journal: None,
            }),
            retention: retention.max(1),
        }
    }

    /// Opens (or creates) a journal, replaying the latest snapshot of each job.
    /// Jobs that never finished are marked failed.
    pub fn with_journal(retention: usize, path: &Path) -> std::io::Result<Self> {
        let store = Self::new(retention);
        let mut restored: Vec<JobRecord> = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            let mut latest: HashMap<u64, JobRecord> = HashMap::new();
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                if let Ok(job) = serde_json::from_str::<JobRecord>(&line) {
                    if let Some(n) = parse_id(&job.id) {
                        latest.insert(n, job);
                    }
                }
            }
            restored = latest.into_values().collect();
            restored.sort_by_key(|j| parse_id(&j.id));
        }
        let journal = OpenOptions::new().create(true).append(true).open(path)?;
        {
            let mut inner = store.inner.lock().expect("job store lock");
            inner.journal = Some(journal);
            for mut job in restored {
                let n = parse_id(&job.id).expect("parsed above");
                if matches!(job.status, JobStatus::Queued | JobStatus::Running) {
                    job.status = JobStatus::Failed;
                    job.finished_at = Some(now_ms());
                    job.error = Some("interrupted by service restart".into());
                    inner.record(&job);
                }
                inner.next = inner.next.max(n + 1);
                inner.jobs.insert(n, job);
                inner.touch(n);
            }
        }
        store.evict();
        Ok(store)
    }

    pub fn submit(&self, kind: JobKind, request: Value) -> JobRecord {
        let mut inner = self.inner.lock().expect("job store lock");
        let n = inner.next;
        inner.next += 1;
        let job = JobRecord {
            id: format_id(n),
            kind,
            status: JobStatus::Queued,
            submitted_at: now_ms(),
            finished_at: None,
            request,
            result: None,
            error: None,
        };
        inner.record(&job);
        inner.jobs.insert(n, job.clone());
        inner.touch(n);
        drop(inner);
        self.evict();
        job
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut JobRecord)) {
        let Some(n) = parse_id(id) else { return };
        let mut inner = self.inner.lock().expect("job store lock");
        if let Some(job) = inner.jobs.get_mut(&n) {
            f(job);
            let snapshot = job.clone();
            inner.record(&snapshot);
        }
    }

    pub fn start(&self, id: &str) {
        self.update(id, |j| j.status = JobStatus::Running);
    }

    pub fn finish(&self, id: &str, outcome: Result<Value, String>) {
        self.update(id, |j| {
            j.finished_at = Some(now_ms());
            match outcome {
                Ok(v) => {
                    j.status = JobStatus::Done;
                    j.result = Some(v);
                }
                Err(e) => {
                    j.status = JobStatus::Failed;
                    j.error = Some(e);
                }
            }
        });
        self.evict();
    }

    pub fn get(&self, id: &str) -> Lookup {
        let Some(n) = parse_id(id) else {
            return Lookup::Unknown;
        };
        let mut inner = self.inner.lock().expect("job store lock");
        match inner.jobs.get(&n).cloned() {
            Some(job) => {
                inner.touch(n);
                Lookup::Found(job)
            }
            None if n > 0 && n < inner.next => Lookup::Evicted,
            None => Lookup::Unknown,
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("job store lock").jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops least-recently-used finished jobs beyond the retention limit.
    fn evict(&self) {
        let mut inner = self.inner.lock().expect("job store lock");
        while inner.jobs.len() > self.retention {
            let victim = inner.recency.iter().copied().find(|n| {
                inner
                    .jobs
                    .get(n)
                    .is_some_and(|j| matches!(j.status, JobStatus::Done | JobStatus::Failed))
            });
            let Some(n) = victim else { break };
            inner.jobs.remove(&n);
            if let Some(pos) = inner.recency.iter().position(|x| *x == n) {
                inner.recency.remove(pos);
            }
        }
    }
}

/// Journal path helper for callers holding an optional path.
pub fn open_store(retention: usize, journal: Option<&PathBuf>) -> std::io::Result<JobStore> {
    match journal {
        Some(p) => JobStore::with_journal(retention, p),
        None => Ok(JobStore::new(retention)),
    }
}
