use serde::Serialize;

use crate::env::{RecState, SourceAction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: u32,
    pub state: RecState,
    pub action: SourceAction,
    pub reward: u8,
    pub clicked: bool,
}

/// Everything that happened in one episode so far, with per-source totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EpisodeHistory {
    pub profile: String,
    records: Vec<StepRecord>,
    recommendations: [u32; 3],
    clicks: [u32; 3],
}

impl EpisodeHistory {
    pub fn new(profile: impl Into<String>) -> Self {
        EpisodeHistory { profile: profile.into(), ..Self::default() }
    }

    /// Builds a history whose per-source totals are given directly, as if
    /// those recommendations had been made. Records are synthesised in
    /// source order.
    pub fn from_totals(recommendations: [u32; 3], clicks: [u32; 3]) -> Self {
        let mut h = EpisodeHistory::new("");
        let mut state = RecState::ZERO;
        for a in SourceAction::ALL {
            let i = a.index();
            assert!(clicks[i] <= recommendations[i], "more clicks than recommendations");
            for k in 0..recommendations[i] {
                let clicked = k < clicks[i];
                let t = h.len() as u32;
                h.push(StepRecord { t, state, action: a, reward: u8::from(clicked), clicked });
                state = state.advance(a, clicked);
            }
        }
        h
    }

    pub fn push(&mut self, record: StepRecord) {
        let i = record.action.index();
        self.recommendations[i] += 1;
        self.clicks[i] += u32::from(record.clicked);
        self.records.push(record);
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn recommendations(&self, a: SourceAction) -> u32 {
        self.recommendations[a.index()]
    }

    pub fn clicks(&self, a: SourceAction) -> u32 {
        self.clicks[a.index()]
    }

    /// Empirical click rate of a source in this episode; 0 if never tried.
    pub fn mean_reward(&self, a: SourceAction) -> f64 {
        let n = self.recommendations[a.index()];
        if n == 0 {
            0.0
        } else {
            f64::from(self.clicks[a.index()]) / f64::from(n)
        }
    }

    pub fn total_reward(&self) -> u32 {
        self.clicks.iter().sum()
    }
}
