//! Element-level locks for speculative operator execution.
//!
//! One atomic word per tet. Cavities are acquired all-or-nothing in
//! ascending element order; failure releases everything taken so far and
//! the operation retargets other data. Frozen elements are born locked and
//! can never be acquired.

use std::sync::atomic::{AtomicU32, Ordering};

const FREE: u32 = 0;
const HELD: u32 = 1;
const FROZEN: u32 = 2;

pub struct CavityLocks {
    words: Vec<AtomicU32>,
}

impl CavityLocks {
    pub fn new<F: Fn(usize) -> bool>(n: usize, frozen: F) -> Self {
        let words = (0..n)
            .map(|i| AtomicU32::new(if frozen(i) { FROZEN } else { FREE }))
            .collect();
        Self { words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Acquire every element or none. `cavity` must be sorted ascending;
    /// acquiring in canonical order keeps concurrent attempts deadlock-free.
    pub fn try_lock_cavity(&self, cavity: &[u32]) -> bool {
        debug_assert!(cavity.windows(2).all(|w| w[0] < w[1]));
        for (k, &t) in cavity.iter().enumerate() {
            let ok = self.words[t as usize]
                .compare_exchange(FREE, HELD, Ordering::Acquire, Ordering::Relaxed)
                .is_ok();
            if !ok {
                self.rollback(&cavity[..k]);
                return false;
            }
        }
        true
    }

    /// Release held elements (frozen words are untouched).
    pub fn rollback(&self, cavity: &[u32]) {
        for &t in cavity {
            let _ = self.words[t as usize].compare_exchange(
                HELD,
                FREE,
                Ordering::Release,
                Ordering::Relaxed,
            );
        }
    }

    pub fn is_frozen(&self, t: u32) -> bool {
        self.words[t as usize].load(Ordering::Relaxed) == FROZEN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_cavities_both_succeed() {
        let locks = CavityLocks::new(8, |_| false);
        std::thread::scope(|s| {
            let a = s.spawn(|| locks.try_lock_cavity(&[0, 1, 2]));
            let b = s.spawn(|| locks.try_lock_cavity(&[4, 5, 6]));
            assert!(a.join().unwrap());
            assert!(b.join().unwrap());
        });
    }

    #[test]
    fn identical_cavity_exactly_one_wins() {
        // Stress: many rounds, two threads, same cavity; count wins.
        for _ in 0..200 {
            let locks = CavityLocks::new(4, |_| false);
            let wins: Vec<bool> = std::thread::scope(|s| {
                let handles: Vec<_> = (0..2)
                    .map(|_| s.spawn(|| locks.try_lock_cavity(&[0, 1, 2, 3])))
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });
            assert_eq!(wins.iter().filter(|w| **w).count(), 1);
        }
    }

    #[test]
    fn frozen_always_fails_and_failure_releases() {
        let locks = CavityLocks::new(4, |i| i == 2);
        assert!(!locks.try_lock_cavity(&[0, 1, 2]));
        // 0 and 1 must have been released by the rollback.
        assert!(locks.try_lock_cavity(&[0, 1]));
        assert!(locks.is_frozen(2));
        assert!(!locks.is_frozen(0));
    }
}
