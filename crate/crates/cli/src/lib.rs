//! Std-side companion to `faltertide-core`: JSON file formats, report
//! assembly, and the subcommand implementations behind the `faltertide`
//! binary.

pub mod commands;
pub mod formats;
pub mod report;

use formats::InputError;

/// Fixed default seed so unseeded runs are reproducible.
pub const DEFAULT_SEED: u64 = 0xFA17E71DE;

/// Default bound on stutter-expansion depth for flexible quantifiers.
pub const DEFAULT_FLEX_BOUND: usize = 1;

fn env_parsed<T: std::str::FromStr>(name: &str) -> Result<Option<T>, InputError>
where
    T::Err: std::fmt::Display,
{
    match std::env::var(name) {
        Ok(raw) => raw
            .parse()
            .map(Some)
            .map_err(|e| InputError::new(name, format!("`{raw}`: {e}"))),
        Err(_) => Ok(None),
    }
}

/// Seed resolution: flag, then `FALTERTIDE_SEED`, then the fixed default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, InputError> {
    match flag {
        Some(s) => Ok(s),
        None => Ok(env_parsed("FALTERTIDE_SEED")?.unwrap_or(DEFAULT_SEED)),
    }
}

/// Flex-bound resolution: flag, then `FALTERTIDE_FLEX_BOUND`, then default.
pub fn resolve_flex_bound(flag: Option<usize>) -> Result<usize, InputError> {
    match flag {
        Some(b) => Ok(b),
        None => Ok(env_parsed("FALTERTIDE_FLEX_BOUND")?.unwrap_or(DEFAULT_FLEX_BOUND)),
    }
}
