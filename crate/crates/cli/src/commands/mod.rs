pub mod analyze;
pub mod bench;
pub mod estimate;
pub mod oracle;
pub mod weight;

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use crate::inputs::write_output;

/// Pretty JSON with a trailing newline, to a file or stdout.
pub fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_output(out, &text)
}
