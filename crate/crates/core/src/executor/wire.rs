//! Executor wire protocol, version 1.
//!
//! Newline-delimited JSON, UTF-8, one message per line. The client opens with
//!
//! ```json
//! {"op":"hello","protocol":1,"capabilities":["render"]}
//! ```
//!
//! and the server answers with its own `hello`. Render requests and replies:
//!
//! ```json
//! {"id":7,"op":"render","programs":[{"domain":"toy_texture","source":"output rgb(1,0,0)"}],"width":64,"height":64,"seed":0}
//! {"id":7,"ok":true,"image_png_b64":"iVBORw0..."}
//! {"id":7,"ok":false,"error":{"kind":"runtime","message":"..."}}
//! ```
//!
//! Over HTTP the same bodies are POSTed to `/render`, one message per request.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{ExecError, ExecErrorKind};
use crate::model::DomainTag;
use crate::raster::Raster;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireProgram {
    pub domain: DomainTag,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Hello {
        protocol: u32,
        #[serde(default)]
        capabilities: Vec<String>,
    },
    Render {
        id: u64,
        programs: Vec<WireProgram>,
        width: u32,
        height: u32,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hello {
    pub op: String,
    pub protocol: u32,
    #[serde(default)]
    pub capabilities: Vec<String>,
}

impl Hello {
    pub fn new(capabilities: &[&str]) -> Self {
        Self {
            op: "hello".into(),
            protocol: PROTOCOL_VERSION,
            capabilities: capabilities.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireError {
    pub kind: ExecErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    /// `None` only when the request could not be parsed far enough to read it.
    pub id: Option<u64>,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_png_b64: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

impl Response {
    pub fn success(id: u64, image: &Raster) -> Result<Self, ExecError> {
        let png = image
            .to_png()
            .map_err(|e| ExecError::internal(e.to_string()))?;
        Ok(Self {
            id: Some(id),
            ok: true,
            image_png_b64: Some(STANDARD.encode(png)),
            error: None,
        })
    }

    pub fn failure(id: Option<u64>, err: &ExecError) -> Self {
        Self {
            id,
            ok: false,
            image_png_b64: None,
            error: Some(WireError {
                kind: err.kind,
                message: err.message.clone(),
            }),
        }
    }

    /// Checks the id echo and decodes the payload.
    pub fn into_result(self, expected_id: u64) -> Result<Raster, ExecError> {
        if self.id != Some(expected_id) {
            return Err(ExecError::protocol(format!(
                "response id {:?} does not match request id {expected_id}",
                self.id
            )));
        }
        if self.ok {
            let b64 = self
                .image_png_b64
                .ok_or_else(|| ExecError::protocol("ok response without image_png_b64"))?;
            let png = STANDARD
                .decode(b64.trim())
                .map_err(|e| ExecError::protocol(format!("bad base64 image: {e}")))?;
            Raster::from_png(&png).map_err(|e| ExecError::protocol(e.to_string()))
        } else {
            let e = self
                .error
                .ok_or_else(|| ExecError::protocol("error response without error object"))?;
            Err(ExecError::new(e.kind, e.message))
        }
    }
}

/// Serializes a message as one line (with trailing newline).
pub fn to_line<T: Serialize>(msg: &T) -> String {
    let mut s = serde_json::to_string(msg).expect("wire messages always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_names_are_exact() {
        let req = Request::Render {
            id: 3,
            programs: vec![WireProgram {
                domain: DomainTag::ToyTexture,
                source: "output rgb(1,0,0)".into(),
            }],
            width: 2,
            height: 1,
            seed: 9,
        };
        let v: serde_json::Value = serde_json::from_str(&to_line(&req)).unwrap();
        assert_eq!(v["op"], "render");
        assert_eq!(v["id"], 3);
        assert_eq!(v["programs"][0]["domain"], "toy_texture");
        assert_eq!(v["width"], 2);
        assert_eq!(v["seed"], 9);

        let hello: serde_json::Value = serde_json::from_str(&to_line(&Hello::new(&["render"]))).unwrap();
        assert_eq!(hello, serde_json::json!({"op":"hello","protocol":1,"capabilities":["render"]}));

        let fail = Response::failure(Some(3), &ExecError::new(ExecErrorKind::Runtime, "boom"));
        let v: serde_json::Value = serde_json::from_str(&to_line(&fail)).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"id":3,"ok":false,"error":{"kind":"runtime","message":"boom"}})
        );
    }

    #[test]
    fn lines_have_no_embedded_newlines() {
        let req = Request::Render {
            id: 1,
            programs: vec![WireProgram {
                domain: DomainTag::ToyTexture,
                source: "a = 1\noutput a\n".into(),
            }],
            width: 1,
            height: 1,
            seed: 0,
        };
        let line = to_line(&req);
        assert_eq!(line.matches('\n').count(), 1);
    }

    #[test]
    fn id_mismatch_is_protocol_error() {
        let r = Raster::filled(1, 1, [1, 2, 3]).unwrap();
        let resp = Response::success(4, &r).unwrap();
        assert_eq!(
            resp.clone().into_result(5).unwrap_err().kind,
            ExecErrorKind::Protocol
        );
        assert_eq!(resp.into_result(4).unwrap(), r);
    }
}
