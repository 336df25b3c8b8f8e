//! On-disk layout of a finished run:
//!
//! ```text
//! trace.json            SearchTrace with relative image paths filled in
//! initial.png
//! imagined_<k>.png      when the intent carried imagined images
//! iter_<tt>/cand_<ss>.png
//! iter_<tt>/winner.png
//! final_program.txt
//! final.png
//! ```
//!
//! Multi-program runs write `multi_trace.json`, `final.png`,
//! `final_program_<i>.txt`, and one `round_<r>_domain_<i>/` directory per
//! sub-refinement with the single-run layout above.

use std::fs;
use std::io;
use std::path::Path;

use super::{MultiOutput, RefineOutput};
use crate::model::{Intent, MultiTrace, SearchTrace};

fn io_err(e: impl std::fmt::Display) -> io::Error {
    io::Error::other(e.to_string())
}

fn write_trace_images(dir: &Path, trace: &SearchTrace) -> io::Result<SearchTrace> {
    let mut trace = trace.clone();
    if let Some(s) = &trace.initial_state {
        s.image.write_png(&dir.join("initial.png")).map_err(io_err)?;
    }
    for it in &mut trace.iterations {
        let sub = format!("iter_{:02}", it.index);
        fs::create_dir_all(dir.join(&sub))?;
        for c in &mut it.candidates {
            if let Some(s) = &c.state {
                let rel = format!("{sub}/cand_{:02}.png", c.slot);
                s.image.write_png(&dir.join(&rel)).map_err(io_err)?;
                c.image = Some(rel);
            }
        }
        if let Some(s) = &it.winner_state {
            let rel = format!("{sub}/winner.png");
            s.image.write_png(&dir.join(&rel)).map_err(io_err)?;
            it.winner_image = Some(rel);
        }
    }
    Ok(trace)
}

fn write_imagined(dir: &Path, intent: &Intent) -> io::Result<()> {
    for (k, img) in intent.imagined_images().iter().enumerate() {
        img.write_png(&dir.join(format!("imagined_{k}.png"))).map_err(io_err)?;
    }
    Ok(())
}

/// Writes a single-program run and returns the trace as stored.
pub fn write_run_dir(dir: &Path, out: &RefineOutput) -> io::Result<SearchTrace> {
    fs::create_dir_all(dir)?;
    let trace = write_trace_images(dir, &out.trace)?;
    write_imagined(dir, &out.intent)?;
    fs::write(dir.join("trace.json"), trace.to_json().map_err(io_err)?)?;
    fs::write(dir.join("final_program.txt"), out.best.source())?;
    out.state.image.write_png(&dir.join("final.png")).map_err(io_err)?;
    Ok(trace)
}

/// Writes a multi-program run and returns the trace as stored.
pub fn write_multi_run_dir(dir: &Path, out: &MultiOutput) -> io::Result<MultiTrace> {
    fs::create_dir_all(dir)?;
    let mut trace = out.trace.clone();
    for sub in &mut trace.sub_refinements {
        let d = dir.join(format!("round_{}_domain_{}", sub.round, sub.domain_index));
        fs::create_dir_all(&d)?;
        sub.trace = write_trace_images(&d, &sub.trace)?;
        fs::write(d.join("trace.json"), sub.trace.to_json().map_err(io_err)?)?;
    }
    write_imagined(dir, &out.intent)?;
    let json = serde_json::to_string_pretty(&trace).map_err(io_err)?;
    fs::write(dir.join("multi_trace.json"), json)?;
    for (i, p) in out.programs.iter().enumerate() {
        fs::write(dir.join(format!("final_program_{i}.txt")), p.source())?;
    }
    out.state.image.write_png(&dir.join("final.png")).map_err(io_err)?;
    Ok(trace)
}
