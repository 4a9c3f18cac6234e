//! Golden request/response fixtures for the remote oracle wire protocol.

use std::path::{Path, PathBuf};
use std::time::Duration;

use dist_align::oracle::RemoteOracle;
use dist_align::{BackendKind, Error, Oracle, OracleConfig, WeightVector};
use serde::Deserialize;
use serde_json::Value;

use super::mock_http::{MockServer, Scripted};

#[derive(Debug, Deserialize)]
pub struct Fixture {
    #[serde(skip)]
    pub name: String,
    pub request: Request,
    pub response: Response,
    pub expect: Expect,
}

#[derive(Debug, Deserialize)]
pub struct Request {
    pub weights: Vec<f64>,
    pub prompt: String,
    pub labels: Vec<String>,
    pub num_samples: u64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
pub struct Response {
    pub status: u16,
    pub body: Value,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Expect {
    Counts { counts: Vec<u64> },
    Failure { error: String, attempts: usize },
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/protocol")
}

pub fn load_all() -> Vec<Fixture> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .expect("fixture directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let mut f: Fixture = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            f.name = p.file_stem().unwrap().to_string_lossy().into_owned();
            f
        })
        .collect()
}

/// Replays one fixture against a scripted server and checks both the bytes
/// the client sent and what it made of the reply.
pub fn check(f: &Fixture) -> Result<(), String> {
    let server = MockServer::start(vec![Scripted::new(f.response.status, f.response.body.to_string())]);
    let oracle = RemoteOracle::new(server.url(), f.request.prompt.clone(), f.request.labels.clone())
        .map_err(|e| e.to_string())?
        .with_retry(RemoteOracle::MAX_ATTEMPTS, Duration::from_millis(5));
    let cfg = OracleConfig::new(BackendKind::Remote, f.request.num_samples, f.request.seed).map_err(|e| e.to_string())?;
    let a = WeightVector::new(f.request.weights.clone()).map_err(|e| e.to_string())?;
    let result = Oracle::<f64>::evaluate(&oracle, &a, &cfg);

    let received = server.received();
    let first = received.first().ok_or("server saw no request")?;
    if first.method != "POST" || first.path != "/evaluate" {
        return Err(format!("unexpected {} {}", first.method, first.path));
    }
    if first.content_type.as_deref() != Some("application/json") {
        return Err(format!("content type {:?}", first.content_type));
    }
    let sent: Value = serde_json::from_str(&first.body).map_err(|e| format!("request is not JSON: {e}"))?;
    let expected = serde_json::json!({
        "weights": f.request.weights,
        "prompt": f.request.prompt,
        "labels": f.request.labels,
        "num_samples": f.request.num_samples,
        "seed": f.request.seed,
    });
    if sent != expected {
        return Err(format!("request body {sent} != {expected}"));
    }
    if received.iter().any(|r| r.body != first.body) {
        return Err("retries changed the request body".into());
    }

    match (&f.expect, result) {
        (Expect::Counts { counts }, Ok(got)) if got.counts() == counts.as_slice() && received.len() == 1 => Ok(()),
        (Expect::Failure { error, attempts }, Err(e)) => {
            let kind = match e {
                Error::Protocol(_) => "protocol",
                Error::OracleUnavailable(_) => "unavailable",
                _ => "other",
            };
            if kind != error {
                return Err(format!("expected {error} error, got {e}"));
            }
            if received.len() != *attempts {
                return Err(format!("expected {attempts} attempts, server saw {}", received.len()));
            }
            Ok(())
        }
        (_, r) => Err(format!("unexpected outcome {r:?} after {} requests", received.len())),
    }
}
