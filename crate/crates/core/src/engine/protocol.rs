//! JSON message protocol shared by the socket and HTTP transports.
//!
//! Requests and replies are single JSON objects carrying `"v": 1`. A
//! request may carry an `"id"`, echoed in the reply. Failures reply with
//! `{"v":1,"error":{"code":..,"message":..}}` and leave sessions intact.

use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::{Correction, Engine, EngineError, Event, SessionView, TrainKind};
use crate::ink::Stroke;
use crate::structure::HeuristicRule;

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum Request {
    CreateSession,
    AddStroke {
        session: String,
        stroke: Stroke,
    },
    DeleteStroke {
        session: String,
        stroke_id: String,
    },
    Correct {
        session: String,
        target: Target,
        value: Value,
        #[serde(default)]
        add_class: bool,
    },
    Snapshot {
        session: String,
    },
    Train {
        kind: TrainKind,
    },
}

/// A stroke id, `{"stroke": id}`, or the literal `"rules"`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Target {
    Name(String),
    Stroke { stroke: String },
}

#[derive(Debug)]
pub struct ProtocolError {
    pub code: String,
    pub message: String,
}

impl ProtocolError {
    fn new(code: &str, message: impl Into<String>) -> Self {
        Self { code: code.into(), message: message.into() }
    }
}

impl From<EngineError> for ProtocolError {
    fn from(e: EngineError) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

fn envelope(id: Option<&Value>, body: Value) -> Value {
    let mut out = Map::new();
    out.insert("v".into(), json!(PROTOCOL_VERSION));
    if let Some(id) = id {
        out.insert("id".into(), id.clone());
    }
    if let Value::Object(fields) = body {
        out.extend(fields);
    }
    Value::Object(out)
}

pub fn error_reply(id: Option<&Value>, e: &ProtocolError) -> Value {
    envelope(id, json!({ "error": { "code": e.code, "message": e.message } }))
}

fn view_body(view: &SessionView) -> Value {
    serde_json::to_value(view).expect("views serialize")
}

fn correction(target: Target, value: Value, add_class: bool) -> Result<Correction, ProtocolError> {
    match target {
        Target::Name(t) if t == "rules" => {
            let rule: HeuristicRule = serde_json::from_value(value)
                .map_err(|e| ProtocolError::new("invalid_request", format!("value is not a heuristic rule: {e}")))?;
            Ok(Correction::Rule { rule })
        }
        Target::Name(stroke_id) | Target::Stroke { stroke: stroke_id } => match value {
            Value::String(label) => Ok(Correction::Label { stroke_id, label, add_class }),
            _ => Err(ProtocolError::new("invalid_request", "a stroke correction needs a label string as value")),
        },
    }
}

fn dispatch(engine: &Engine, request: Request) -> Result<Value, ProtocolError> {
    Ok(match request {
        Request::CreateSession => {
            let v = engine.create_session();
            json!({ "session": v.session, "revision": v.revision })
        }
        Request::AddStroke { session, stroke } => view_body(&engine.handle(&session, Event::StrokeAdded(stroke))?.view),
        Request::DeleteStroke { session, stroke_id } => {
            view_body(&engine.handle(&session, Event::StrokeDeleted(stroke_id))?.view)
        }
        Request::Correct { session, target, value, add_class } => {
            let c = correction(target, value, add_class)?;
            let outcome = engine.handle(&session, Event::CorrectionApplied(c))?;
            let mut body = view_body(&outcome.view);
            if outcome.retrain_scheduled {
                body["retrain"] = json!("scheduled");
            }
            body
        }
        Request::Snapshot { session } => view_body(&engine.snapshot(&session)?),
        Request::Train { kind } => json!({ "training": engine.train(kind)? }),
    })
}

/// Handles one request document and returns the reply document.
pub fn handle_message(engine: &Engine, text: &str) -> Value {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return error_reply(None, &ProtocolError::new("parse_error", e.to_string())),
    };
    let id = value.get("id").cloned();
    let reply = match value.get("v").and_then(Value::as_u64) {
        Some(PROTOCOL_VERSION) => serde_json::from_value::<Request>(value)
            .map_err(|e| ProtocolError::new("invalid_request", e.to_string()))
            .and_then(|r| dispatch(engine, r)),
        Some(other) => Err(ProtocolError::new("unsupported_version", format!("protocol version {other} is not supported"))),
        None => Err(ProtocolError::new("invalid_request", "missing protocol version \"v\"")),
    };
    match reply {
        Ok(body) => envelope(id.as_ref(), body),
        Err(e) => error_reply(id.as_ref(), &e),
    }
}

/// HTTP status for a reply produced by [`handle_message`].
pub fn http_status(reply: &Value) -> u16 {
    match reply.pointer("/error/code").and_then(Value::as_str) {
        None => 200,
        Some("parse_error" | "invalid_request" | "unsupported_version" | "invalid_stroke" | "invalid_rule") => 400,
        Some("unknown_session" | "unknown_stroke") => 404,
        Some("duplicate_stroke" | "unknown_label" | "no_training_data") => 409,
        Some("shutting_down") => 503,
        Some(_) => 500,
    }
}
