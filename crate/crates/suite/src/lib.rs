//! Holds no code. The acceptance checks live in `tests/acceptance.rs` and run
//! with `cargo test -p contest-suite --test acceptance`.
