//! Ordered bookkeeping for the reversible rule.
//!
//! Arms are split into the `m` best by upper index and the rest, and the
//! best `m` are additionally ordered by lower index. Each pull changes one
//! arm's indices, so an update costs `O(log N)`.

use std::cmp::Ordering;
use std::collections::BTreeSet;

/// Larger value first, ties to the lower arm index.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Desc(pub f64, pub usize);

/// Smaller value first, ties to the lower arm index.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Asc(pub f64, pub usize);

impl Ord for Desc {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Desc {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Desc {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Desc {}

impl Ord for Asc {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Asc {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Asc {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Asc {}

/// Indices of the `m` largest values, ties to the lower index, returned in
/// ascending index order.
pub fn top_m_indices(values: &[f64], m: usize) -> Vec<usize> {
    let mut keys: Vec<Desc> = values.iter().enumerate().map(|(j, &v)| Desc(v, j)).collect();
    let m = m.min(keys.len());
    if m < keys.len() && m > 0 {
        keys.select_nth_unstable(m - 1);
    }
    let mut top: Vec<usize> = keys[..m].iter().map(|k| k.1).collect();
    top.sort_unstable();
    top
}

#[derive(Debug, Clone)]
pub(crate) struct TopSplit {
    m: usize,
    upper: Vec<f64>,
    lower: Vec<f64>,
    in_top: Vec<bool>,
    top: BTreeSet<Desc>,
    rest: BTreeSet<Desc>,
    top_by_lower: BTreeSet<Asc>,
}

impl TopSplit {
    pub fn new(m: usize, upper: Vec<f64>, lower: Vec<f64>) -> Self {
        assert!(m >= 1 && m <= upper.len() && upper.len() == lower.len());
        let n = upper.len();
        let mut split = Self {
            m,
            upper,
            lower,
            in_top: vec![false; n],
            top: BTreeSet::new(),
            rest: BTreeSet::new(),
            top_by_lower: BTreeSet::new(),
        };
        let mut keys: Vec<Desc> = split.upper.iter().enumerate().map(|(j, &u)| Desc(u, j)).collect();
        keys.sort_unstable();
        for (rank, key) in keys.into_iter().enumerate() {
            if rank < m {
                split.insert_top(key);
            } else {
                split.rest.insert(key);
            }
        }
        split
    }

    fn insert_top(&mut self, key: Desc) {
        let j = key.1;
        self.in_top[j] = true;
        self.top_by_lower.insert(Asc(self.lower[j], j));
        self.top.insert(key);
    }

    fn remove_top(&mut self, key: Desc) {
        let j = key.1;
        self.in_top[j] = false;
        self.top_by_lower.remove(&Asc(self.lower[j], j));
        self.top.remove(&key);
    }

    /// Arm with the smallest lower index among the current top `m`.
    pub fn pick(&self) -> usize {
        self.top_by_lower.first().expect("top set is never empty").1
    }

    #[cfg(test)]
    pub fn top(&self) -> impl Iterator<Item = usize> + '_ {
        self.top.iter().map(|k| k.1)
    }

    pub fn update(&mut self, arm: usize, upper: f64, lower: f64) {
        let old = Desc(self.upper[arm], arm);
        if self.in_top[arm] {
            self.remove_top(old);
        } else {
            self.rest.remove(&old);
        }
        self.upper[arm] = upper;
        self.lower[arm] = lower;
        self.rest.insert(Desc(upper, arm));
        while self.top.len() < self.m {
            let best = self.rest.pop_first().expect("enough arms to fill the top set");
            self.insert_top(best);
        }
        if let (Some(&worst_top), Some(&best_rest)) = (self.top.last(), self.rest.first()) {
            if best_rest < worst_top {
                self.remove_top(worst_top);
                self.rest.remove(&best_rest);
                self.insert_top(best_rest);
                self.rest.insert(worst_top);
            }
        }
    }
}
