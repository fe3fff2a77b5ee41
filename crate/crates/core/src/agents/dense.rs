//! Flat, directly indexed action-value storage used while training when
//! every state of the horizon fits in memory. Hash lookups dominate the
//! cost of a training step otherwise.

use super::qtable::{QEntry, QTable};
use crate::env::RecState;

/// States up to this many are stored densely (about 400 MB of entries).
const DENSE_STATE_LIMIT: usize = 1 << 23;

/// Slot layout: states are grouped by their recommendation counts
/// `(lr, cr, rr)`; inside a group the click counts index a
/// `(lr + 1) * (cr + 1) * (rr + 1)` block.
pub(crate) struct DenseTable {
    side: usize,
    base: Vec<usize>,
    entries: Vec<QEntry>,
}

impl DenseTable {
    /// Storage for every state with at most `horizon` recommendations, or
    /// `None` when that would exceed the memory limit.
    pub(crate) fn for_horizon(horizon: u32) -> Option<Self> {
        let h = horizon as usize;
        let side = h + 1;
        let mut base = vec![usize::MAX; side * side * side];
        let mut next = 0usize;
        for lr in 0..=h {
            for cr in 0..=h - lr {
                for rr in 0..=h - lr - cr {
                    base[(lr * side + cr) * side + rr] = next;
                    next = next.checked_add((lr + 1) * (cr + 1) * (rr + 1))?;
                    if next > DENSE_STATE_LIMIT {
                        return None;
                    }
                }
            }
        }
        Some(DenseTable { side, base, entries: vec![QEntry::default(); next] })
    }

    #[inline]
    fn index(&self, s: &RecState) -> usize {
        let (lr, cr, rr) = (usize::from(s.lr), usize::from(s.cr), usize::from(s.rr));
        let block = self.base[(lr * self.side + cr) * self.side + rr];
        debug_assert!(block != usize::MAX, "state {s} beyond the horizon");
        block + usize::from(s.lc) + (lr + 1) * (usize::from(s.cc) + (cr + 1) * usize::from(s.rc))
    }

    #[inline]
    pub(crate) fn values(&self, s: &RecState) -> [f64; 3] {
        self.entries[self.index(s)].q
    }

    #[inline]
    pub(crate) fn entry_mut(&mut self, s: RecState) -> &mut QEntry {
        let i = self.index(&s);
        &mut self.entries[i]
    }

    /// The states that were updated at least once, as a sparse table.
    pub(crate) fn into_qtable(self) -> QTable {
        let mut q = QTable::new();
        let h = self.side - 1;
        for lr in 0..=h {
            for cr in 0..=h - lr {
                for rr in 0..=h - lr - cr {
                    for rc in 0..=rr {
                        for cc in 0..=cr {
                            for lc in 0..=lr {
                                let s = RecState::new([lr, lc, cr, cc, rr, rc].map(|x| x as u16));
                                let e = self.entries[self.index(&s)];
                                if e.visits.iter().any(|&v| v > 0) {
                                    *q.entry_mut(s) = e;
                                }
                            }
                        }
                    }
                }
            }
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn slots_are_a_bijection() {
        let t = DenseTable::for_horizon(5).unwrap();
        let mut seen = HashSet::new();
        for lr in 0..=5u16 {
            for cr in 0..=5 - lr {
                for rr in 0..=5 - lr - cr {
                    for (lc, cc, rc) in
                        (0..=lr).flat_map(|a| (0..=cr).flat_map(move |b| (0..=rr).map(move |c| (a, b, c))))
                    {
                        let i = t.index(&RecState::new([lr, lc, cr, cc, rr, rc]));
                        assert!(i < t.entries.len());
                        assert!(seen.insert(i));
                    }
                }
            }
        }
        assert_eq!(seen.len(), t.entries.len());
        // all nonnegative 6-tuples with sum at most 5
        assert_eq!(t.entries.len(), 462);
    }

    #[test]
    fn large_horizons_fall_back() {
        assert_eq!(DenseTable::for_horizon(30).unwrap().entries.len(), 1_947_792);
        assert!(DenseTable::for_horizon(60).is_none());
    }

    #[test]
    fn only_updated_states_are_exported() {
        let mut t = DenseTable::for_horizon(4).unwrap();
        let s = RecState::new([2, 1, 0, 0, 1, 1]);
        t.entry_mut(s).q = [0.5, 0.0, 0.0];
        let e = t.entry_mut(s);
        e.visits[0] = 1;
        t.entry_mut(RecState::ZERO).q = [1.0, 0.0, 0.0];
        let q = t.into_qtable();
        assert_eq!(q.len(), 1);
        assert_eq!(q.values(&s), [0.5, 0.0, 0.0]);
    }
}
