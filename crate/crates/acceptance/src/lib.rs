//! Acceptance checks for `hetcate` live in `tests/acceptance.rs`; run them
//! with `cargo test -p hetcate-acceptance`. This crate has no library code.
