//! End-to-end acceptance checks for `sarg-core`.
//!
//! The checks live in `tests/acceptance.rs` and print one pass/fail line per
//! criterion. Run them with `cargo test -p sarg-validation --test acceptance`.
