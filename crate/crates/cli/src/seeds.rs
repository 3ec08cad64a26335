//! Per-task seeds: `SHA-256(master ‖ task ‖ index)` truncated to 64 bits,
//! so each task's stream is fixed no matter how tasks are scheduled.

use sha2::{Digest, Sha256};

pub fn task_seed(master: u64, task: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((task.len() as u64).to_le_bytes());
    h.update(task.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_separate_tasks_and_indices() {
        let a = task_seed(7, "kappa", 0);
        assert_eq!(a, task_seed(7, "kappa", 0));
        assert_ne!(a, task_seed(7, "kappa", 1));
        assert_ne!(a, task_seed(8, "kappa", 0));
        assert_ne!(a, task_seed(7, "kappa2", 0));
        // the length prefix keeps task/index boundaries unambiguous
        assert_ne!(task_seed(0, "a", 0), task_seed(0, "", 0));
    }
}
