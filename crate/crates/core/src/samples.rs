//! Bundled example programs.

pub const BASE7: &str = include_str!("../programs/base7.py");
pub const JOSEPHUS: &str = include_str!("../programs/josephus.py");
pub const PERMUTATIONS: &str = include_str!("../programs/permutations.py");

/// Looks up a bundled program by short name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "base7" => Some(BASE7),
        "josephus" => Some(JOSEPHUS),
        "permutations" => Some(PERMUTATIONS),
        _ => None,
    }
}

pub const BUNDLED_NAMES: &[&str] = &["base7", "josephus", "permutations"];

/// Line offset under which a bundled program is usually shown. The base-7
/// program sits at line 38 of its original file.
pub fn bundled_line_offset(name: &str) -> u32 {
    match name {
        "base7" => 37,
        _ => 0,
    }
}
