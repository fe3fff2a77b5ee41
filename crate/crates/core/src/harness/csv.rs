use std::fmt::Write as _;
use std::path::Path;

use super::EvalResult;
use crate::error::Error;

pub const CSV_HEADER: &str = "t,p_left,p_centre,p_right,cum_reward_mean,cum_reward_ci95";

/// One row per time-step, `t` counted from 0. Floats use the shortest
/// representation that round-trips.
pub fn render_csv(result: &EvalResult) -> String {
    let mut out = String::with_capacity(64 * (result.horizon() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for t in 0..result.horizon() {
        let [l, c, r] = result.action_freq[t];
        writeln!(out, "{t},{l},{c},{r},{},{}", result.cum_reward_mean[t], result.cum_reward_ci95[t])
            .expect("writing to a string");
    }
    out
}

pub fn emit_csv(result: &EvalResult, path: &Path) -> Result<(), Error> {
    std::fs::write(path, render_csv(result))?;
    Ok(())
}
