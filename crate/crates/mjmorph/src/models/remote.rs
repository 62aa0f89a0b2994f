//! External model seats: a JSON-lines subprocess protocol and an HTTP POST
//! protocol.
//!
//! Subprocess wire format, one JSON object per line on stdio:
//! request `{"id":1,"k":5,"source":"..."}`, response
//! `{"id":1,"predictions":[{"label":"is|prime","score":0.93},...]}`.
//! Responses may arrive in any order and are matched by id. The HTTP seat
//! POSTs the same request body to `/predict` and expects the same response
//! body with status 200.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{ModelUnavailable, Prediction};

#[derive(Debug, Serialize)]
struct Request<'a> {
    id: u64,
    k: usize,
    source: &'a str,
}

#[derive(Debug, Deserialize)]
struct Response {
    id: u64,
    predictions: Vec<ResponseEntry>,
}

#[derive(Debug, Deserialize)]
struct ResponseEntry {
    label: String,
    score: f64,
}

fn response_to_prediction(resp: Response, k: usize) -> Result<Prediction, ModelUnavailable> {
    Prediction::normalize(
        resp.predictions
            .into_iter()
            .map(|e| (e.label, e.score))
            .collect(),
        k,
    )
}

/// A running prediction child process. One request is in flight at a time;
/// the reader thread decouples stdout so reads can time out.
pub struct SubprocessClient {
    child: Child,
    stdin: std::process::ChildStdin,
    lines: mpsc::Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
}

impl SubprocessClient {
    /// Spawns `command` through `sh -c` and wires up the line reader.
    pub fn spawn(command: &str, timeout_ms: u64) -> Result<SubprocessClient, ModelUnavailable> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| ModelUnavailable::new(format!("cannot spawn `{command}`: {e}")))?;
        let stdin = child
            .stdin
            .take()
            .ok_or_else(|| ModelUnavailable::new("child stdin unavailable"))?;
        let stdout = child
            .stdout
            .take()
            .ok_or_else(|| ModelUnavailable::new("child stdout unavailable"))?;
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessClient {
            child,
            stdin,
            lines: rx,
            timeout: Duration::from_millis(timeout_ms),
            next_id: 1,
        })
    }

    pub fn predict(&mut self, source: &str, k: usize) -> Result<Prediction, ModelUnavailable> {
        let id = self.next_id;
        self.next_id += 1;
        let request = Request { id, k, source };
        let mut line = serde_json::to_string(&request).expect("request serialization is total");
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| ModelUnavailable::new(format!("write to child failed: {e}")))?;

        let deadline = Instant::now() + self.timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(ModelUnavailable::new("timed out waiting for response"));
            }
            match self.lines.recv_timeout(remaining) {
                Ok(Ok(text)) => {
                    let resp: Response = serde_json::from_str(&text).map_err(|e| {
                        ModelUnavailable::new(format!("malformed response line: {e}"))
                    })?;
                    if resp.id == id {
                        return response_to_prediction(resp, k);
                    }
                    // A stale id from an earlier timed-out request: skip it.
                }
                Ok(Err(e)) => {
                    return Err(ModelUnavailable::new(format!("read from child failed: {e}")))
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    return Err(ModelUnavailable::new("timed out waiting for response"))
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => {
                    return Err(ModelUnavailable::new("child closed its stdout"))
                }
            }
        }
    }
}

impl Drop for SubprocessClient {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// POSTs one prediction request to an HTTP endpoint. A bare host URL gets
/// `/predict` appended; a URL that already carries a path is used verbatim.
pub fn http_predict(
    url: &str,
    source: &str,
    k: usize,
    timeout_ms: u64,
) -> Result<Prediction, ModelUnavailable> {
    let full_url = if has_explicit_path(url) {
        url.to_string()
    } else {
        format!("{}/predict", url.trim_end_matches('/'))
    };
    let request = Request { id: 1, k, source };
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_millis(timeout_ms))
        .build();
    let response = agent
        .post(&full_url)
        .set("content-type", "application/json")
        .send_string(&serde_json::to_string(&request).expect("request serialization is total"))
        .map_err(|e| ModelUnavailable::new(format!("POST {full_url} failed: {e}")))?;
    if response.status() != 200 {
        return Err(ModelUnavailable::new(format!(
            "POST {full_url} returned status {}",
            response.status()
        )));
    }
    let body = response
        .into_string()
        .map_err(|e| ModelUnavailable::new(format!("cannot read response body: {e}")))?;
    let resp: Response = serde_json::from_str(&body)
        .map_err(|e| ModelUnavailable::new(format!("malformed response body: {e}")))?;
    response_to_prediction(resp, k)
}

fn has_explicit_path(url: &str) -> bool {
    let without_scheme = url
        .trim_start_matches("http://")
        .trim_start_matches("https://");
    without_scheme
        .find('/')
        .is_some_and(|i| i + 1 < without_scheme.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_subprocess_round_trip() {
        // A tiny inline responder: reads request lines, answers with two
        // labels, highest score depending on the source text.
        let script = r#"python3 -c '
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    out = {"id": req["id"], "predictions": [
        {"label": "alpha", "score": 0.9},
        {"label": "beta", "score": 0.4},
    ]}
    print(json.dumps(out), flush=True)
'"#;
        let mut client = SubprocessClient::spawn(script, 10_000).unwrap();
        let p = client.predict("int f() {\n}\n", 5).unwrap();
        assert_eq!(p.top1(), "alpha");
        assert_eq!(p.entries.len(), 2);
        // Ids advance per request.
        let p2 = client.predict("int g() {\n}\n", 1).unwrap();
        assert_eq!(p2.entries.len(), 1);
    }

    #[test]
    fn dead_command_is_model_unavailable() {
        // The shell spawns fine but the command exits immediately, so the
        // first predict sees a closed pipe or no response.
        let mut client = match SubprocessClient::spawn("false", 500) {
            Ok(c) => c,
            Err(_) => return,
        };
        assert!(client.predict("int f() {\n}\n", 5).is_err());
    }

    #[test]
    fn slow_child_times_out() {
        let script = "python3 -c 'import time,sys; time.sleep(30)'";
        let mut client = SubprocessClient::spawn(script, 200).unwrap();
        let err = client.predict("int f() {\n}\n", 5).unwrap_err();
        assert!(err.detail.contains("timed out") || err.detail.contains("closed"));
    }

    #[test]
    fn malformed_child_output_is_model_unavailable() {
        let script = "python3 -c 'import sys; sys.stdin.readline(); print(\"not json\", flush=True)'";
        let mut client = SubprocessClient::spawn(script, 5_000).unwrap();
        assert!(client.predict("int f() {\n}\n", 5).is_err());
    }

    #[test]
    fn http_round_trip_and_errors() {
        use std::io::{Read, Write};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = [0u8; 4096];
            let _ = stream.read(&mut buf);
            let body = r#"{"id":1,"predictions":[{"label":"is|prime","score":0.93},{"label":"skip","score":0.02}]}"#;
            let response = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                body.len(),
                body
            );
            let _ = stream.write_all(response.as_bytes());
        });
        let p = http_predict(&format!("http://{addr}"), "boolean isPrime(int n) {\n}\n", 5, 5_000)
            .unwrap();
        assert_eq!(p.top1(), "is|prime");
        handle.join().unwrap();

        // Nothing listens on a fresh ephemeral port after the listener drops.
        let dead = TcpListener::bind("127.0.0.1:0").unwrap();
        let dead_addr = dead.local_addr().unwrap();
        drop(dead);
        assert!(http_predict(&format!("http://{dead_addr}"), "x", 5, 500).is_err());
    }

    #[test]
    fn url_path_handling() {
        assert!(!has_explicit_path("http://127.0.0.1:8000"));
        assert!(!has_explicit_path("http://127.0.0.1:8000/"));
        assert!(has_explicit_path("http://127.0.0.1:8000/api/v1"));
    }
}
