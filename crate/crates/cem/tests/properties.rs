mod common;

#[test]
fn key_set_permutation_invariance() {
    common::suite_permutation().unwrap();
}

#[test]
fn ps_uniqueness_after_every_opcode() {
    common::suite_ps_uniqueness().unwrap();
}

#[test]
fn eval_determinism() {
    common::suite_determinism().unwrap();
}

#[test]
fn context_removal_cascade() {
    common::suite_removal().unwrap();
}

#[test]
fn run_idempotence_on_halted_states() {
    common::suite_idempotence().unwrap();
}
