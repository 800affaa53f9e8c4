//! Transport to a chat-completion endpoint.

use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde_json::json;

use crate::config::EndpointConfig;
use crate::{ClientError, RequestError};

/// Something that turns a prompt into a raw model response.
pub trait ChatBackend: Sync {
    fn complete(&self, prompt: &str, seed: u64) -> Result<String, RequestError>;

    /// Cheap reachability check run once before any request.
    fn preflight(&self) -> Result<(), ClientError> {
        Ok(())
    }
}

/// Chat-completion endpoint spoken to over HTTP.
///
/// Sends `{"model", "messages": [{"role": "user", "content"}], "temperature",
/// "max_tokens", "seed"}` and reads `choices[0].message.content`.
#[derive(Debug)]
pub struct HttpBackend {
    config: EndpointConfig,
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, ClientError> {
        config.validate()?;
        let url = config.chat_url()?.to_string();
        let api_key = config.api_key()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            config,
            url,
            api_key,
            agent,
        })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, prompt: &str, seed: u64) -> Result<String, RequestError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "seed": seed,
        });
        let mut request = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send(body.to_string())
            .map_err(|e| RequestError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| RequestError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(RequestError::Status(status, text.chars().take(200).collect()));
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| RequestError::BadResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| RequestError::BadResponse("no choices[0].message.content".into()))
    }

    fn preflight(&self) -> Result<(), ClientError> {
        let url = self.config.chat_url()?;
        let host = url.host_str().unwrap_or_default().to_owned();
        let port = url.port_or_known_default().unwrap_or(80);
        let unreachable = |reason: String| ClientError::EndpointUnreachable {
            url: self.config.base_url.clone(),
            reason,
        };
        let addrs: Vec<_> = (host.as_str(), port)
            .to_socket_addrs()
            .map_err(|e| unreachable(e.to_string()))?
            .collect();
        let timeout = self.config.timeout().min(Duration::from_secs(10));
        let mut last = String::from("no address");
        for addr in addrs {
            match TcpStream::connect_timeout(&addr, timeout) {
                Ok(_) => return Ok(()),
                Err(e) => last = e.to_string(),
            }
        }
        Err(unreachable(last))
    }
}
