//! Project-level train/validation/test partitioning.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, ProcessedExample};

/// Shares of projects for train, validation, and test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.90,
            valid: 0.05,
            test: 0.05,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let all = [self.train, self.valid, self.test];
        if all.iter().any(|r| !(r.is_finite() && *r > 0.0))
            || (all.iter().sum::<f64>() - 1.0).abs() > 1e-6
        {
            return Err(CorpusError::Config(format!(
                "split ratios must be positive and sum to 1, got {}/{}/{}",
                self.train, self.valid, self.test
            )));
        }
        Ok(())
    }

    /// Project counts per split: validation and test get `round(n * r)` but at
    /// least one project each, and train takes the rest.
    pub fn project_counts(&self, n: usize) -> Result<[usize; 3], CorpusError> {
        self.validate()?;
        if n < 3 {
            return Err(CorpusError::TooFewProjects(n));
        }
        let share = |r: f64| ((n as f64 * r).round() as usize).max(1);
        let (valid, test) = (share(self.valid), share(self.test));
        if valid + test >= n {
            return Err(CorpusError::Config(format!(
                "{n} projects leave none for training at ratios {}/{}/{}",
                self.train, self.valid, self.test
            )));
        }
        Ok([n - valid - test, valid, test])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitCorpus {
    pub train: Vec<ProcessedExample>,
    pub valid: Vec<ProcessedExample>,
    pub test: Vec<ProcessedExample>,
    pub seed: u64,
    /// Reinstated examples dropped because their project fell outside train.
    pub dropped_reinstated: usize,
}

impl SplitCorpus {
    pub fn project_sets(&self) -> [BTreeSet<&str>; 3] {
        fn ids(xs: &[ProcessedExample]) -> BTreeSet<&str> {
            xs.iter().map(|x| x.project_id.as_str()).collect()
        }
        [ids(&self.train), ids(&self.valid), ids(&self.test)]
    }
}

/// Shuffles the sorted project ids with `seed` and deals them out by
/// [`SplitRatios::project_counts`]. Examples keep their input order within
/// each split.
///
/// Reinstated examples only ever land in train. One whose project is drawn
/// for validation or test is dropped, which keeps the project sets disjoint.
pub fn split_by_project(
    records: Vec<ProcessedExample>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitCorpus, CorpusError> {
    let mut projects: Vec<&str> = records
        .iter()
        .map(|r| r.project_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let counts = ratios.project_counts(projects.len())?;
    projects.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut which: BTreeMap<String, usize> = BTreeMap::new();
    for (i, p) in projects.iter().enumerate() {
        let part = if i < counts[0] {
            0
        } else if i < counts[0] + counts[1] {
            1
        } else {
            2
        };
        which.insert(p.to_string(), part);
    }
    let mut out = SplitCorpus {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
        seed,
        dropped_reinstated: 0,
    };
    for r in records {
        match (which[&r.project_id], r.reinstated) {
            (0, _) => out.train.push(r),
            (_, true) => out.dropped_reinstated += 1,
            (1, false) => out.valid.push(r),
            _ => out.test.push(r),
        }
    }
    Ok(out)
}

/// One representative per distinct `(code_tokens, comment_tokens)` pair, in
/// first-seen order, marked as train-only.
pub fn reinstate_unique_autogen(removed: Vec<ProcessedExample>) -> Vec<ProcessedExample> {
    let mut seen: HashSet<(Vec<String>, Vec<String>)> = HashSet::new();
    let mut out = Vec::new();
    for mut r in removed {
        if seen.insert((r.code_tokens.clone(), r.comment_tokens.clone())) {
            r.reinstated = true;
            out.push(r);
        }
    }
    out
}
