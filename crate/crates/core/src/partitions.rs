//! Enumeration of set partitions as restricted growth strings.
//!
//! A restricted growth string (RGS) labels element `i` with a block index
//! no larger than one plus the largest label among elements `0..i`, so
//! every unlabeled partition has exactly one representation and blocks are
//! ordered by their smallest element.

use alloc::vec;
use alloc::vec::Vec;

/// Partitions of `0..n` into exactly `k` blocks, each of size at least
/// `min_block`, in lexicographic RGS order.
#[derive(Debug, Clone)]
pub struct SetPartitions {
    n: usize,
    k: usize,
    min_block: usize,
    labels: Vec<usize>,
    counts: Vec<usize>,
    used: usize,
    state: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Fresh,
    Running,
    Done,
}

impl SetPartitions {
    pub fn new(n: usize, k: usize, min_block: usize) -> Self {
        Self {
            n,
            k,
            min_block: min_block.max(1),
            labels: vec![0; n],
            counts: vec![0; k],
            used: 0,
            state: State::Fresh,
        }
    }

    /// Advances to the next partition and borrows its labels.
    pub fn next_labels(&mut self) -> Option<&[usize]> {
        let ok = match self.state {
            State::Done => false,
            State::Fresh => {
                self.state = State::Running;
                self.n > 0 && self.k > 0 && self.fill_from(0)
            }
            State::Running => self.advance(),
        };
        if ok {
            Some(&self.labels)
        } else {
            self.state = State::Done;
            None
        }
    }

    /// Whether the assigned prefix `0..=pos` can still be completed.
    fn feasible(&self, pos: usize) -> bool {
        let remaining = self.n - pos - 1;
        let deficit: usize = self.counts[..self.used]
            .iter()
            .map(|&c| self.min_block.saturating_sub(c))
            .sum();
        deficit + (self.k - self.used) * self.min_block <= remaining
    }

    fn assign(&mut self, pos: usize, label: usize) {
        self.labels[pos] = label;
        self.counts[label] += 1;
        if label == self.used {
            self.used += 1;
        }
    }

    fn unassign(&mut self, pos: usize) {
        let label = self.labels[pos];
        self.counts[label] -= 1;
        if self.counts[label] == 0 {
            // Only the newest block can empty out when removing from the end.
            self.used -= 1;
        }
    }

    /// Lexicographically smallest feasible completion of positions `from..n`.
    fn fill_from(&mut self, from: usize) -> bool {
        for pos in from..self.n {
            let top = self.used.min(self.k - 1);
            let mut placed = false;
            for label in 0..=top {
                self.assign(pos, label);
                if self.feasible(pos) {
                    placed = true;
                    break;
                }
                self.unassign(pos);
            }
            if !placed {
                return false;
            }
        }
        true
    }

    fn advance(&mut self) -> bool {
        let mut pos = self.n;
        while pos > 1 {
            pos -= 1;
            let old = self.labels[pos];
            self.unassign(pos);
            let top = self.used.min(self.k - 1);
            for label in (old + 1)..=top {
                self.assign(pos, label);
                if self.feasible(pos) && self.fill_from(pos + 1) {
                    return true;
                }
                // fill_from cannot fail after a feasible prefix, but keep the
                // state consistent regardless.
                self.unassign(pos);
            }
        }
        false
    }
}

impl Iterator for SetPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        self.next_labels().map(<[usize]>::to_vec)
    }
}

/// Number of partitions of an `n`-set into exactly `k` blocks of size at
/// least `min_block`, saturating at `u128::MAX`.
///
/// Uses the recurrence on the block holding the last element: either it has
/// more than `min_block` members (remove the element) or exactly
/// `min_block` (choose its companions).
pub fn count_partitions(n: usize, k: usize, min_block: usize) -> u128 {
    let m = min_block.max(1);
    let mut table = vec![vec![0u128; k + 1]; n + 1];
    table[0][0] = 1;
    for i in 1..=n {
        for j in 1..=k.min(i) {
            let grow = (j as u128).saturating_mul(table[i - 1][j]);
            let fresh = if i >= m {
                crate::math::binomial(i - 1, m - 1).saturating_mul(table[i - m][j - 1])
            } else {
                0
            };
            table[i][j] = grow.saturating_add(fresh);
        }
    }
    table[n][k]
}
