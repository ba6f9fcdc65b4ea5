//! Holds the `acceptance` test target. Run it last with
//! `cargo test -p m4-suite --test acceptance`.
