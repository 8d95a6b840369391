//! Level promotion from recent task completions.

use std::collections::VecDeque;

use crate::terrain::CurriculumLevel;

/// Episodes in the moving window.
pub const PROMOTION_WINDOW: usize = 50;
/// Completion rate the window must exceed to promote.
pub const PROMOTION_THRESHOLD: f64 = 0.7;

/// Next level given the most recent completion flags (newest last). Promotes
/// by one when the window is full and its completion rate exceeds `p`.
pub fn curriculum_advance(recent: &[bool], level: CurriculumLevel, k: usize, p: f64) -> CurriculumLevel {
    if k == 0 || recent.len() < k {
        return level;
    }
    let window = &recent[recent.len() - k..];
    let rate = window.iter().filter(|&&c| c).count() as f64 / k as f64;
    if rate > p {
        level.promoted()
    } else {
        level
    }
}

/// Running curriculum state. The window is cleared after each promotion so
/// every level is judged on its own episodes.
#[derive(Debug, Clone)]
pub struct Curriculum {
    level: CurriculumLevel,
    window: VecDeque<bool>,
    k: usize,
    p: f64,
}

impl Curriculum {
    pub fn new(level: CurriculumLevel) -> Self {
        Self::with_rule(level, PROMOTION_WINDOW, PROMOTION_THRESHOLD)
    }

    pub fn with_rule(level: CurriculumLevel, k: usize, p: f64) -> Self {
        Self { level, window: VecDeque::with_capacity(k + 1), k, p }
    }

    pub fn level(&self) -> CurriculumLevel {
        self.level
    }

    /// Records one finished episode and returns the level to use next.
    pub fn record(&mut self, completed: bool) -> CurriculumLevel {
        self.window.push_back(completed);
        while self.window.len() > self.k {
            self.window.pop_front();
        }
        let recent: Vec<bool> = self.window.iter().copied().collect();
        let next = curriculum_advance(&recent, self.level, self.k, self.p);
        if next != self.level {
            self.level = next;
            self.window.clear();
        }
        self.level
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvl(l: u32) -> CurriculumLevel {
        CurriculumLevel::new(l, 3).unwrap()
    }

    #[test]
    fn rule() {
        assert_eq!(curriculum_advance(&[false; 50], lvl(1), 50, 0.7), lvl(1));
        assert_eq!(curriculum_advance(&[true; 50], lvl(1), 50, 0.7), lvl(2));
        assert_eq!(curriculum_advance(&[true; 49], lvl(1), 50, 0.7), lvl(1));
        assert_eq!(curriculum_advance(&[true; 50], lvl(3), 50, 0.7), lvl(3));
        // exactly at the threshold does not promote
        let mut mixed = vec![true; 35];
        mixed.extend([false; 15]);
        assert_eq!(curriculum_advance(&mixed, lvl(0), 50, 0.7), lvl(0));
    }

    #[test]
    fn running_state_promotes_once_per_window() {
        let mut c = Curriculum::with_rule(lvl(0), 4, 0.5);
        let levels: Vec<u32> = (0..12).map(|_| c.record(true).level()).collect();
        assert_eq!(levels, [0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3]);
    }
}
