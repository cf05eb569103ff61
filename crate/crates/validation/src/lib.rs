//! Holds the `acceptance` test target, which prints one `criterion N:
//! PASS|FAIL` line per acceptance criterion. Run it with
//! `cargo test --release -p qball-validation --test acceptance`.
