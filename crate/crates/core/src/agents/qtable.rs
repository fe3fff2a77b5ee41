use rustc_hash::FxHashMap as HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{RecState, SourceAction};
use crate::error::Error;

pub const QTABLE_FORMAT: &str = "qtable-v1";

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QEntry {
    pub q: [f64; 3],
    pub visits: [u64; 3],
}

/// Tabular action values keyed by state. States never stored read as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    entries: HashMap<RecState, QEntry>,
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self, s: &RecState) -> [f64; 3] {
        self.entries.get(s).map_or([0.0; 3], |e| e.q)
    }

    pub fn value(&self, s: &RecState, a: SourceAction) -> f64 {
        self.values(s)[a.index()]
    }

    pub fn visits(&self, s: &RecState, a: SourceAction) -> u64 {
        self.entries.get(s).map_or(0, |e| e.visits[a.index()])
    }

    pub fn total_visits(&self) -> u64 {
        self.entries.values().flat_map(|e| e.visits).sum()
    }

    pub fn entry(&self, s: &RecState) -> Option<&QEntry> {
        self.entries.get(s)
    }

    pub(crate) fn entry_mut(&mut self, s: RecState) -> &mut QEntry {
        self.entries.entry(s).or_default()
    }

    /// Overwrites the values of a state, keeping its visit counts.
    pub fn set_values(&mut self, s: RecState, q: [f64; 3]) {
        self.entry_mut(s).q = q;
    }

    pub fn greedy_action(&self, s: &RecState) -> SourceAction {
        SourceAction::from_index(argmax(&self.values(s))).expect("argmax is below 3")
    }

    pub fn max_value(&self, s: &RecState) -> f64 {
        let v = self.values(s);
        v[0].max(v[1]).max(v[2])
    }

    /// Stored states in lexicographic order.
    pub fn sorted_states(&self) -> Vec<RecState> {
        let mut states: Vec<RecState> = self.entries.keys().copied().collect();
        states.sort_unstable();
        states
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RecState, &QEntry)> {
        self.entries.iter()
    }

    /// Applies `f` to every stored value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> QTable {
        let entries = self.entries.iter().map(|(s, e)| (*s, QEntry { q: e.q.map(&f), visits: e.visits })).collect();
        QTable { entries }
    }

    pub fn to_json(&self) -> String {
        let file = QTableFile {
            format: QTABLE_FORMAT.to_string(),
            entries: self
                .sorted_states()
                .into_iter()
                .map(|s| {
                    let e = self.entries[&s];
                    QTableRow { state: s, q: e.q, visits: e.visits }
                })
                .collect(),
        };
        let mut text = serde_json::to_string(&file).expect("qtable serialises");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let file: QTableFile = serde_json::from_str(text)?;
        if file.format != QTABLE_FORMAT {
            return Err(Error::Format(format!("expected format {QTABLE_FORMAT}, found {}", file.format)));
        }
        let mut entries = HashMap::with_capacity_and_hasher(file.entries.len(), Default::default());
        for row in file.entries {
            let s = row.state;
            if s.lc > s.lr || s.cc > s.cr || s.rc > s.rr {
                return Err(Error::Format(format!("invalid state {s} in qtable")));
            }
            if entries.insert(s, QEntry { q: row.q, visits: row.visits }).is_some() {
                return Err(Error::Format(format!("duplicate state {s} in qtable")));
            }
        }
        Ok(QTable { entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct QTableFile {
    format: String,
    entries: Vec<QTableRow>,
}

#[derive(Serialize, Deserialize)]
struct QTableRow {
    state: RecState,
    q: [f64; 3],
    visits: [u64; 3],
}

/// One Q-learning backup. Terminal transitions do not bootstrap.
#[allow(clippy::too_many_arguments)]
pub fn q_update(
    q: &mut QTable,
    s: RecState,
    a: SourceAction,
    r: f64,
    s_next: &RecState,
    terminal: bool,
    alpha: f64,
    gamma: f64,
) {
    let target = if terminal { r } else { r + gamma * q.max_value(s_next) };
    let e = q.entry_mut(s);
    let i = a.index();
    e.q[i] += alpha * (target - e.q[i]);
    e.visits[i] += 1;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const S: RecState = RecState::ZERO;

    fn next() -> RecState {
        RecState::new([1, 1, 0, 0, 0, 0])
    }

    #[test]
    fn zero_bootstrap() {
        let mut q = QTable::new();
        q_update(&mut q, S, SourceAction::Left, 1.0, &next(), false, 0.1, 0.999);
        assert_relative_eq!(q.value(&S, SourceAction::Left), 0.1);
        assert_eq!(q.visits(&S, SourceAction::Left), 1);
    }

    #[test]
    fn terminal_overwrite() {
        let mut q = QTable::new();
        q.set_values(next(), [5.0, 5.0, 5.0]);
        q_update(&mut q, S, SourceAction::Centre, 1.0, &next(), true, 1.0, 0.999);
        assert_eq!(q.value(&S, SourceAction::Centre), 1.0);
    }

    #[test]
    fn hand_evaluated_backup() {
        let mut q = QTable::new();
        q.set_values(S, [0.5, 0.0, 0.0]);
        q.set_values(next(), [0.2, 0.8, 0.1]);
        q_update(&mut q, S, SourceAction::Left, 0.0, &next(), false, 0.1, 0.999);
        assert_relative_eq!(q.value(&S, SourceAction::Left), 0.52992, epsilon = 1e-12);
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
        assert_eq!(argmax(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(argmax(&[0.2, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[0.2, 0.2, 0.7]), 2);
    }

    #[test]
    fn json_rejects_other_formats() {
        assert!(QTable::from_json(r#"{"format":"qtable-v0","entries":[]}"#).is_err());
        assert!(QTable::from_json(
            r#"{"format":"qtable-v1","entries":[{"state":[0,1,0,0,0,0],"q":[0,0,0],"visits":[0,0,0]}]}"#
        )
        .is_err());
    }

    #[test]
    fn json_is_sorted_and_round_trips() {
        let mut q = QTable::new();
        q.set_values(RecState::new([2, 0, 0, 0, 0, 0]), [0.3, 0.1, 0.2]);
        q.set_values(RecState::new([0, 0, 1, 1, 0, 0]), [1.0 / 3.0, 0.0, -0.5]);
        q_update(&mut q, S, SourceAction::Right, 1.0, &next(), false, 0.1, 0.999);
        let text = q.to_json();
        let first = text.find("[0,0,0,0,0,0]").unwrap();
        let second = text.find("[0,0,1,1,0,0]").unwrap();
        let third = text.find("[2,0,0,0,0,0]").unwrap();
        assert!(first < second && second < third);
        assert_eq!(QTable::from_json(&text).unwrap(), q);
    }
}
