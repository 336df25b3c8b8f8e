use std::io::{self, BufRead, Write};

use super::wire::{to_line, Hello, Request, Response, PROTOCOL_VERSION};
use super::{ExecError, Executor};
use crate::dsl::RenderParams;
use crate::model::Program;

pub const CAPABILITIES: &[&str] = &["render", "toy_texture", "toy_post"];

/// Handles one protocol message and returns the reply line (with newline).
pub fn handle_message(line: &str, executor: &dyn Executor) -> String {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            return to_line(&Response::failure(
                None,
                &ExecError::protocol(format!("malformed frame: {e}")),
            ))
        }
    };
    let id = value.get("id").and_then(|v| v.as_u64());
    let request: Request = match serde_json::from_value(value) {
        Ok(r) => r,
        Err(e) => {
            return to_line(&Response::failure(
                id,
                &ExecError::protocol(format!("bad request: {e}")),
            ))
        }
    };
    match request {
        Request::Hello { protocol, .. } => {
            if protocol != PROTOCOL_VERSION {
                return to_line(&Response::failure(
                    None,
                    &ExecError::protocol(format!(
                        "unsupported protocol {protocol}, server speaks {PROTOCOL_VERSION}"
                    )),
                ));
            }
            to_line(&Hello::new(CAPABILITIES))
        }
        Request::Render {
            id,
            programs,
            width,
            height,
            seed,
        } => {
            let programs: Result<Vec<Program>, _> = programs
                .into_iter()
                .map(|p| Program::initial(p.domain, p.source))
                .collect();
            let result = match programs {
                Ok(programs) if !programs.is_empty() => executor
                    .execute(&programs, &RenderParams::new(width, height, seed))
                    .and_then(|s| Response::success(id, &s.image)),
                Ok(_) => Err(ExecError::protocol("render request without programs")),
                Err(e) => Err(ExecError::new(super::ExecErrorKind::Parse, e.to_string())),
            };
            to_line(&result.unwrap_or_else(|e| Response::failure(Some(id), &e)))
        }
    }
}

/// Serves the protocol until the reader reaches end of input.
pub fn serve<R: BufRead, W: Write>(reader: R, mut writer: W, executor: &dyn Executor) -> io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writer.write_all(handle_message(&line, executor).as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}
