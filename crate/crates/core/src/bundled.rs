//! Architecture files shipped with the crate.

use crate::config::parse_architecture;
use crate::model::ArchitectureSpec;

pub const TOY4: &str = include_str!("../configs/toy4.toml");
pub const ASCEND910: &str = include_str!("../configs/ascend910.toml");
pub const MICRO150: &str = include_str!("../configs/micro150.toml");
pub const MULTIGPU: &str = include_str!("../configs/multigpu.toml");

/// `(file name, contents)` for every bundled architecture.
pub const ALL: [(&str, &str); 4] = [
    ("toy4.toml", TOY4),
    ("ascend910.toml", ASCEND910),
    ("micro150.toml", MICRO150),
    ("multigpu.toml", MULTIGPU),
];

/// Directory holding the bundled `.toml` files in a source checkout.
pub fn config_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn parse(text: &str) -> ArchitectureSpec {
    parse_architecture(text).expect("bundled architecture is valid")
}

pub fn toy4() -> ArchitectureSpec {
    parse(TOY4)
}

pub fn ascend910() -> ArchitectureSpec {
    parse(ASCEND910)
}

pub fn micro150() -> ArchitectureSpec {
    parse(MICRO150)
}

pub fn multigpu() -> ArchitectureSpec {
    parse(MULTIGPU)
}

pub fn all() -> Vec<ArchitectureSpec> {
    ALL.iter().map(|(_, text)| parse(text)).collect()
}
