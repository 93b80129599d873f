//! Global caps for bounded searches, overridable via FOLDLAB_MAX_DEPTH.

use std::sync::OnceLock;

static MAX_DEPTH: OnceLock<u32> = OnceLock::new();

/// Cap applied to every bounded search (link enumeration depth, conjugator
/// search, expression search). Defaults to 8.
pub fn max_depth() -> u32 {
    *MAX_DEPTH.get_or_init(|| {
        std::env::var("FOLDLAB_MAX_DEPTH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(8)
    })
}
