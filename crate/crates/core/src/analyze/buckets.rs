use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tuple sizes `lo..=hi`; `hi = None` is open-ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelismBucket {
    pub label: String,
    pub lo: u32,
    pub hi: Option<u32>,
}

impl ParallelismBucket {
    pub fn contains(&self, size: u32) -> bool {
        size >= self.lo && self.hi.is_none_or(|hi| size <= hi)
    }
}

/// Buckets that partition `[2, ∞)` in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParallelismBucket>", into = "Vec<ParallelismBucket>")]
pub struct BucketSet {
    buckets: Vec<ParallelismBucket>,
}

impl Default for BucketSet {
    /// `2, 3-4, 5-7, 8+`.
    fn default() -> Self {
        BucketSet::parse("2,3-4,5-7,8+").expect("default buckets are valid")
    }
}

impl TryFrom<Vec<ParallelismBucket>> for BucketSet {
    type Error = Error;

    fn try_from(buckets: Vec<ParallelismBucket>) -> Result<Self> {
        BucketSet::new(buckets)
    }
}

impl From<BucketSet> for Vec<ParallelismBucket> {
    fn from(b: BucketSet) -> Self {
        b.buckets
    }
}

impl BucketSet {
    pub fn new(buckets: Vec<ParallelismBucket>) -> Result<Self> {
        let mut next = 2u32;
        for (i, b) in buckets.iter().enumerate() {
            if b.lo != next {
                return Err(Error::config(format!(
                    "bucket {:?} starts at {} but {} is uncovered or overlapping",
                    b.label, b.lo, next
                )));
            }
            match b.hi {
                Some(hi) if hi < b.lo => {
                    return Err(Error::config(format!("bucket {:?} is empty", b.label)))
                }
                Some(hi) => next = hi + 1,
                None if i + 1 != buckets.len() => {
                    return Err(Error::config(format!(
                        "open-ended bucket {:?} must be last",
                        b.label
                    )))
                }
                None => return Ok(BucketSet { buckets }),
            }
        }
        Err(Error::config(
            "buckets must cover [2, ∞); end with an open bucket such as 8+",
        ))
    }

    /// Parse `2,3-4,5-7,8+`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |item: &str| Error::config(format!("bad bucket {item:?} in {spec:?}"));
        let mut buckets = Vec::new();
        for item in spec.split(',').map(str::trim) {
            let (lo, hi) = if let Some(lo) = item.strip_suffix('+') {
                (lo.parse().map_err(|_| bad(item))?, None)
            } else if let Some((lo, hi)) = item.split_once('-') {
                (
                    lo.parse().map_err(|_| bad(item))?,
                    Some(hi.parse().map_err(|_| bad(item))?),
                )
            } else {
                let v = item.parse().map_err(|_| bad(item))?;
                (v, Some(v))
            };
            buckets.push(ParallelismBucket {
                label: item.to_string(),
                lo,
                hi,
            });
        }
        BucketSet::new(buckets)
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParallelismBucket> {
        self.buckets.iter()
    }

    pub fn get(&self, i: usize) -> &ParallelismBucket {
        &self.buckets[i]
    }

    /// Bucket index for a tuple size; `None` below 2.
    pub fn index_of(&self, size: u32) -> Option<usize> {
        if size < 2 {
            return None;
        }
        // Few buckets; a scan beats a search.
        self.buckets.iter().position(|b| b.contains(size))
    }

    pub fn spec(&self) -> String {
        self.buckets
            .iter()
            .map(|b| b.label.as_str())
            .collect::<Vec<_>>()
            .join(",")
    }
}
