//! The remote reward backend against a local one-shot HTTP responder:
//! demonstrates the chat-completion wire format, score extraction from a
//! prose-wrapped payload, and out-of-range clamping, all offline.
//!
//! Run with: cargo run --example remote_scoring

use std::io::{Read, Write};
use std::net::TcpListener;

use ideaflow::backends::remote::RemoteRewardModel;
use ideaflow::backends::{BackendConfig, BackendKind, RewardBackend};
use ideaflow::evolve::{Idea, Operator, Provenance};

fn serve_once(listener: &TcpListener, content: &str) {
    let (mut stream, _) = listener.accept().unwrap();
    let mut buf = [0u8; 65536];
    let _ = stream.read(&mut buf);
    let body = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string();
    let response = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(response.as_bytes()).unwrap();
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let port = listener.local_addr()?.port();

    // novelty arrives wrapped in prose; feasibility is out of range and
    // gets clamped to the 1-5 scale with a warning
    let handle = std::thread::spawn(move || {
        serve_once(
            &listener,
            "Here is my verdict: {\"novelty_score\": 4.4} — quite original.",
        );
        serve_once(&listener, "{\"feasibility_score\": 6.8}");
    });

    let cfg = BackendConfig {
        kind: BackendKind::Remote,
        base_url: Some(format!("http://127.0.0.1:{port}/v1/chat/completions")),
        model_name: Some("demo-model".into()),
        temperature: 0.2,
        max_retries: 3,
        backoff_base_secs: 0.05,
        ..Default::default()
    };
    let reward = RemoteRewardModel::new(&cfg)?;

    let idea = Idea {
        id: "demo".into(),
        motivation: "cut redundant reasoning steps".into(),
        method: "cache validated sub-derivations behind checkable interfaces".into(),
        experimental_plan: "ablate the cache on multi-step benchmarks".into(),
        auxiliary: None,
        genome: None,
        provenance: Provenance {
            operator: Operator::Initial,
            parent_ids: vec![],
            trajectory_ids: vec![],
            generation: 0,
        },
    };
    let response = reward.score_idea(&idea)?;
    handle.join().unwrap();

    println!("novelty:     {}", response.novelty_score);
    println!("feasibility: {} (clamped from 6.8)", response.feasibility_score);
    println!("\nraw payloads:\n{}", response.raw_text);
    Ok(())
}
