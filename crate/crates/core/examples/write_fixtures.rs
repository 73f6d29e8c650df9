//! Regenerates the bundled config and traces under `data/`.

use std::fs;
use std::path::Path;

use hand_twin::default_hand;
use hand_twin::teleop::{opposition_trace, sample_trace, write_trace, Mapping};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::create_dir_all(&dir)?;
    let desc = default_hand();
    let mapping = Mapping::default();
    fs::write(dir.join("default_hand.json"), desc.to_json())?;
    fs::write(dir.join("sample_trace.jsonl"), write_trace(&sample_trace(&desc, &mapping)))?;
    let (frames, segments) = opposition_trace(&desc, &mapping)?;
    fs::write(dir.join("opposition_trace.jsonl"), write_trace(&frames))?;
    fs::write(dir.join("opposition_segments.json"), serde_json::to_string_pretty(&segments)? + "\n")?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
