use std::time::Duration;

use serde_json::{json, Value};

use crate::types::{ChatRequest, ChatResponse, Message, Role, Tier, ToolCall};
use crate::{ChatModel, GatewayError};

/// Client for the common chat-completions JSON dialect.
pub struct LiveClient {
    agent: ureq::Agent,
    base_url: String,
    api_key: Option<String>,
    model_assistant: String,
    model_buttons: String,
}

impl LiveClient {
    pub fn new(
        base_url: &str,
        api_key: Option<String>,
        model_assistant: &str,
        model_buttons: &str,
        timeout: Duration,
    ) -> LiveClient {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        LiveClient {
            agent,
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            model_assistant: model_assistant.to_string(),
            model_buttons: model_buttons.to_string(),
        }
    }

    fn model_for(&self, tier: Tier) -> &str {
        match tier {
            Tier::Assistant => &self.model_assistant,
            Tier::Buttons => &self.model_buttons,
        }
    }

    pub fn wire_request(&self, req: &ChatRequest) -> Value {
        let messages: Vec<Value> = req.messages.iter().map(wire_message).collect();
        let mut body = json!({
            "model": self.model_for(req.tier),
            "temperature": req.temperature.value(),
            "messages": messages,
        });
        if !req.tools.is_empty() {
            body["tools"] = req
                .tools
                .iter()
                .map(|t| {
                    json!({"type": "function", "function": {
                        "name": t.name, "description": t.description, "parameters": t.parameters,
                    }})
                })
                .collect();
        }
        body
    }
}

fn wire_message(m: &Message) -> Value {
    let role = match m.role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
        Role::Tool => "tool",
    };
    let mut v = json!({"role": role, "content": m.content});
    if !m.tool_calls.is_empty() {
        v["tool_calls"] = m
            .tool_calls
            .iter()
            .map(|c| {
                json!({"id": c.id, "type": "function", "function": {
                    "name": c.name, "arguments": c.arguments.to_string(),
                }})
            })
            .collect();
    }
    if let Some(id) = &m.tool_call_id {
        v["tool_call_id"] = json!(id);
    }
    v
}

/// Normalizes a chat-completions reply body.
pub fn parse_wire_response(body: &Value) -> Result<ChatResponse, GatewayError> {
    let malformed = |what: &str| GatewayError::Provider {
        status: None,
        detail: format!("unexpected response shape: {what}"),
    };
    let message = body
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .ok_or_else(|| malformed("missing choices[0].message"))?;
    let text = message
        .get("content")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    let mut tool_calls = Vec::new();
    if let Some(calls) = message.get("tool_calls").and_then(Value::as_array) {
        for (i, call) in calls.iter().enumerate() {
            let function = call.get("function").ok_or_else(|| malformed("tool call without function"))?;
            let name = function
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| malformed("tool call without name"))?;
            let arguments = match function.get("arguments") {
                Some(Value::String(s)) => {
                    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.clone()))
                }
                Some(v) => v.clone(),
                None => json!({}),
            };
            let id = call
                .get("id")
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| format!("call_{i}"));
            tool_calls.push(ToolCall { id, name: name.to_string(), arguments });
        }
    }
    Ok(ChatResponse { text, tool_calls })
}

impl ChatModel for LiveClient {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        req.validate()?;
        let url = format!("{}/chat/completions", self.base_url);
        let mut call = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call.send_json(self.wire_request(req)).map_err(transport_error)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(transport_error)?;
        if !(200..300).contains(&status) {
            return Err(GatewayError::Provider {
                status: Some(status),
                detail: truncate(&text, 500),
            });
        }
        let body: Value = serde_json::from_str(&text).map_err(|e| GatewayError::Provider {
            status: Some(status),
            detail: format!("response is not JSON: {e}"),
        })?;
        parse_wire_response(&body)
    }
}

fn transport_error(e: ureq::Error) -> GatewayError {
    match e {
        ureq::Error::Timeout(_) => GatewayError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => GatewayError::Timeout,
        other => GatewayError::Provider { status: None, detail: other.to_string() },
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}
