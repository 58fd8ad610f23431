//! Replica fan-out.
//!
//! Replica `k` of a run labelled `label` always draws from
//! `RngStream::for_replica(derive_seed(seed, label), k)`. Results come back in
//! replica order and are reduced sequentially, so the worker count never
//! changes a reported number.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::rng::{derive_seed, RngStream, UniformSource};

#[derive(Debug)]
pub struct MonteCarlo {
    seed: u64,
    threads: usize,
    streams_used: AtomicU64,
}

impl Clone for MonteCarlo {
    fn clone(&self) -> Self {
        Self {
            seed: self.seed,
            threads: self.threads,
            streams_used: AtomicU64::new(self.streams_used()),
        }
    }
}

impl MonteCarlo {
    pub fn new(seed: u64, threads: usize) -> Self {
        Self {
            seed,
            threads: threads.max(1),
            streams_used: AtomicU64::new(0),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Total replica streams handed out so far.
    pub fn streams_used(&self) -> u64 {
        self.streams_used.load(Ordering::Relaxed)
    }

    /// Run `replicas` independent replicas of `f` and return their results
    /// in replica order.
    pub fn run<T, F>(&self, label: &str, replicas: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, UniformSource) -> T + Sync + Send,
    {
        self.streams_used.fetch_add(replicas, Ordering::Relaxed);
        let master = derive_seed(self.seed, label);
        let job = |k: u64| f(k, RngStream::for_replica(master, k).generator());
        if self.threads == 1 {
            return (0..replicas).map(job).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(self.threads).build() {
            Ok(pool) => pool.install(|| (0..replicas).into_par_iter().map(job).collect()),
            Err(_) => (0..replicas).map(job).collect(),
        }
    }
}
