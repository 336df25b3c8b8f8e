use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EditMode;

/// Ablation switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Flags {
    pub revert_enabled: bool,
    pub imagination_enabled: bool,
    pub gen_vision_enabled: bool,
    pub eval_vision_enabled: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            revert_enabled: true,
            imagination_enabled: true,
            gen_vision_enabled: true,
            eval_vision_enabled: true,
        }
    }
}

/// Optional caps on backend usage. `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub max_generator_calls: Option<u64>,
    pub max_evaluator_queries: Option<u64>,
    pub max_executor_runs: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub depth: usize,
    pub branch: usize,
    pub schedule: Vec<EditMode>,
    pub retries: u32,
    pub eval_retries: u32,
    pub seed: u64,
    pub flags: Flags,
    pub max_parallel: usize,
    #[serde(default)]
    pub budget: Budget,
}

impl SearchConfig {
    /// `depth` x `branch` with the alternating tweak/leap schedule.
    pub fn new(depth: usize, branch: usize) -> Self {
        Self {
            depth,
            branch,
            schedule: Self::alternating_schedule(depth),
            retries: 2,
            eval_retries: 2,
            seed: 0,
            flags: Flags::default(),
            max_parallel: 1,
            budget: Budget::default(),
        }
    }

    /// Entry `i` (1-based) is tweak iff `i` is odd.
    pub fn alternating_schedule(depth: usize) -> Vec<EditMode> {
        (0..depth)
            .map(|i| {
                if i % 2 == 0 {
                    EditMode::Tweak
                } else {
                    EditMode::Leap
                }
            })
            .collect()
    }

    pub fn with_schedule(mut self, mode: Option<EditMode>) -> Self {
        self.schedule = match mode {
            Some(m) => vec![m; self.depth],
            None => Self::alternating_schedule(self.depth),
        };
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_config(self)
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self::new(4, 8)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

pub fn validate_config(cfg: &SearchConfig) -> Result<(), ConfigError> {
    let err = |field, reason: String| Err(ConfigError { field, reason });
    if cfg.depth < 1 {
        return err("depth", "must be at least 1".into());
    }
    if cfg.branch < 1 {
        return err("branch", "must be at least 1".into());
    }
    if cfg.schedule.len() != cfg.depth {
        return err(
            "schedule",
            format!(
                "has {} entries but depth is {}",
                cfg.schedule.len(),
                cfg.depth
            ),
        );
    }
    if cfg.max_parallel < 1 {
        return err("max_parallel", "must be at least 1".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_four_by_eight_is_valid() {
        let cfg = SearchConfig::new(4, 8);
        assert_eq!(validate_config(&cfg), Ok(()));
        assert_eq!(
            cfg.schedule,
            vec![
                EditMode::Tweak,
                EditMode::Leap,
                EditMode::Tweak,
                EditMode::Leap
            ]
        );
    }

    #[test]
    fn zero_branch_rejected() {
        let cfg = SearchConfig::new(4, 0);
        assert_eq!(validate_config(&cfg).unwrap_err().field, "branch");
    }

    #[test]
    fn schedule_length_mismatch_rejected() {
        let mut cfg = SearchConfig::new(3, 2);
        cfg.schedule.truncate(2);
        assert_eq!(validate_config(&cfg).unwrap_err().field, "schedule");
    }

    #[test]
    fn zero_depth_and_parallel_rejected() {
        assert_eq!(
            validate_config(&SearchConfig::new(0, 2)).unwrap_err().field,
            "depth"
        );
        let mut cfg = SearchConfig::new(1, 1);
        cfg.max_parallel = 0;
        assert_eq!(validate_config(&cfg).unwrap_err().field, "max_parallel");
    }

    proptest! {
        #[test]
        fn alternating_schedule_parity(depth in 1usize..64) {
            let s = SearchConfig::alternating_schedule(depth);
            prop_assert_eq!(s.len(), depth);
            for (i, m) in s.iter().enumerate() {
                let one_based = i + 1;
                prop_assert_eq!(*m == EditMode::Tweak, one_based % 2 == 1);
            }
        }
    }
}
