//! Bounded-range max-priority queue over node IDs.
//!
//! Scores are discretized into integer buckets via a scaling factor; each
//! bucket is a dynamic array, a location map tracks every node's bucket and
//! position, and a top pointer follows the highest non-empty bucket. Insert
//! and increase-key are amortized O(1) (append, or pop-and-swap plus
//! append); extract-max pops from the top bucket and walks the pointer down
//! to the next occupied bucket, which is rare-worst-case O(B). Keys only
//! ever rise, so decrease-key does not exist and is rejected loudly.

use std::collections::HashMap;

use crate::{NodeId, Real};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BucketPqError {
    #[error("bucket count must be >= 1")]
    BadBucketCount,
    #[error("discretization factor must be > 0")]
    BadDiscFactor,
    #[error("node {0} is already in the queue")]
    DuplicateInsert(NodeId),
    #[error("node {0} is not in the queue")]
    NotInQueue(NodeId),
    #[error("key decrease rejected for node {node}: bucket {from} -> {to}; buffer scores must be monotone")]
    KeyDecrease { node: NodeId, from: usize, to: usize },
    #[error("extract from empty queue")]
    Empty,
}

/// Number of buckets needed for scores in `[0, s_max]`: `ceil(s_max * disc) + 1`.
/// With this sizing the clamp in the index map is reachable only through
/// floating-point edge cases.
pub fn bucket_count_for<F: Real>(s_max: F, disc_factor: F) -> usize {
    let b = (s_max * disc_factor).ceil().to_usize().unwrap_or(0);
    b + 1
}

#[derive(Debug, Clone)]
pub struct BucketPq<F> {
    buckets: Vec<Vec<NodeId>>,
    location: HashMap<NodeId, (u32, u32)>,
    top: Option<usize>,
    len: usize,
    disc_factor: F,
}

impl<F: Real> BucketPq<F> {
    pub fn new(b_count: usize, disc_factor: F) -> Result<Self, BucketPqError> {
        if b_count == 0 {
            return Err(BucketPqError::BadBucketCount);
        }
        if !(disc_factor > F::zero()) {
            return Err(BucketPqError::BadDiscFactor);
        }
        Ok(Self {
            buckets: vec![Vec::new(); b_count],
            location: HashMap::new(),
            top: None,
            len: 0,
            disc_factor,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn b_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.location.contains_key(&v)
    }

    /// Current bucket of a queued node.
    pub fn bucket_of(&self, v: NodeId) -> Option<usize> {
        self.location.get(&v).map(|&(b, _)| b as usize)
    }

    /// Discretized bucket index: `min(round(s * disc_factor), B - 1)`,
    /// rounding half away from zero.
    pub fn bucket_index(&self, s: F) -> usize {
        debug_assert!(s.is_finite() && s >= F::zero(), "scores must be finite and non-negative");
        let scaled = (s * self.disc_factor).round();
        let idx = scaled.to_usize().unwrap_or(usize::MAX);
        idx.min(self.buckets.len() - 1)
    }

    pub fn insert(&mut self, v: NodeId, s: F) -> Result<(), BucketPqError> {
        if self.location.contains_key(&v) {
            return Err(BucketPqError::DuplicateInsert(v));
        }
        self.push_to_bucket(v, self.bucket_index(s));
        self.len += 1;
        Ok(())
    }

    /// Moves `v` to the bucket of its new, never-lower score. Pops the last
    /// element of the old bucket, swaps it into `v`'s slot, then re-appends
    /// `v` at the target bucket.
    pub fn increase_key(&mut self, v: NodeId, s: F) -> Result<(), BucketPqError> {
        let Some(&(b, p)) = self.location.get(&v) else {
            return Err(BucketPqError::NotInQueue(v));
        };
        let new_b = self.bucket_index(s);
        if new_b < b as usize {
            return Err(BucketPqError::KeyDecrease { node: v, from: b as usize, to: new_b });
        }
        let bucket = &mut self.buckets[b as usize];
        let last = bucket.pop().expect("location map points into bucket");
        if (p as usize) < bucket.len() {
            bucket[p as usize] = last;
            self.location.insert(last, (b, p));
        } else {
            debug_assert_eq!(last, v);
        }
        self.location.remove(&v);
        self.push_to_bucket(v, new_b);
        Ok(())
    }

    /// Removes and returns a node whose discretized key is maximal (the last
    /// element of the top bucket; ties within a bucket pop LIFO).
    pub fn extract_max(&mut self) -> Result<NodeId, BucketPqError> {
        let top = self.top.ok_or(BucketPqError::Empty)?;
        let v = self.buckets[top].pop().expect("top points at a non-empty bucket");
        self.location.remove(&v);
        self.len -= 1;
        if self.len == 0 {
            self.top = None;
        } else {
            let mut t = top;
            while self.buckets[t].is_empty() {
                t -= 1; // some lower bucket is occupied because len > 0
            }
            self.top = Some(t);
        }
        Ok(v)
    }

    fn push_to_bucket(&mut self, v: NodeId, b: usize) {
        let bucket = &mut self.buckets[b];
        bucket.push(v);
        self.location.insert(v, (b as u32, bucket.len() as u32 - 1));
        self.top = Some(self.top.map_or(b, |t| t.max(b)));
    }

    /// Internal consistency check used by tests: the location map and bucket
    /// contents must mirror each other exactly and `top` must be the highest
    /// occupied bucket.
    #[doc(hidden)]
    pub fn check_consistency(&self) -> bool {
        let mut count = 0;
        for (b, bucket) in self.buckets.iter().enumerate() {
            for (p, &v) in bucket.iter().enumerate() {
                count += 1;
                if self.location.get(&v) != Some(&(b as u32, p as u32)) {
                    return false;
                }
            }
        }
        if count != self.len || self.location.len() != self.len {
            return false;
        }
        let highest = (0..self.buckets.len()).rev().find(|&b| !self.buckets[b].is_empty());
        highest == self.top
    }
}
