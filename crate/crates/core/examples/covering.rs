//! Load a framework file, build a finite piece of its covering framework
//! and recover the gain framework as the quotient.

use std::path::PathBuf;

use rum_spectrum::cli::load_framework;
use rum_spectrum::geometry::{build_covering, quotient_gain_framework};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/frameworks/frieze_l2_braced.json")
    });
    let loaded = load_framework(&path)?;
    let fw = &loaded.framework;
    let cover = build_covering(fw, loaded.placement.as_ref(), 2)?;
    println!("{} vertices and {} bars on the window of radius 2", cover.vertices.len(), cover.bars.len());
    for v in cover.vertices.iter().take(5) {
        println!("  {} at {:?}", v.id, v.point);
    }
    let back = quotient_gain_framework(&cover, fw.tau(), fw.dy())?;
    for e in back.edges() {
        println!("  {} : {} -> {} gain {}", e.id, back.vertices()[e.source], back.vertices()[e.range], e.gain);
    }
    Ok(())
}
