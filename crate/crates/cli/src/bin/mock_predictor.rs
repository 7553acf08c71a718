//! Test double for the predictor wire protocol.
//!
//! Scores `loud = min(1, 10·rms)` and `soft = 1 - loud`, with switches for
//! reordering, per-request errors, out-of-range scores, malformed output,
//! early exit and slow replies.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::mpsc;
use std::time::Duration;

use clap::Parser;
use lime_audio::predictor::{Handshake, Reply, Request, PROTOCOL_VERSION};

#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = 16000)]
    rate: u32,
    #[arg(long, default_value_t = 16000)]
    length: usize,
    /// Answer buffered requests in reverse order, up to this many at a time.
    #[arg(long, default_value_t = 1)]
    reverse: usize,
    /// Reply with an error to this request id.
    #[arg(long)]
    error_on: Option<u64>,
    /// Multiply every score by this factor.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Emit a garbage line after this many replies.
    #[arg(long)]
    malformed_after: Option<usize>,
    /// Exit without replying once this many replies were sent.
    #[arg(long)]
    exit_after: Option<usize>,
    #[arg(long, default_value_t = 0)]
    sleep_ms: u64,
    /// Advertise this protocol version instead of the supported one.
    #[arg(long)]
    protocol: Option<u32>,
}

fn reply(args: &Args, line: &str) -> Reply {
    let request: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => {
            return Reply::Error {
                id: 0,
                error: format!("bad request: {e}"),
            }
        }
    };
    if args.error_on == Some(request.id) {
        return Reply::Error {
            id: request.id,
            error: "refused by --error-on".into(),
        };
    }
    match request.samples() {
        Ok(x) => {
            let rms = (x.iter().map(|&s| s as f64 * s as f64).sum::<f64>() / x.len().max(1) as f64).sqrt();
            let loud = (10.0 * rms).min(1.0);
            Reply::Scores {
                id: request.id,
                scores: BTreeMap::from([
                    ("loud".to_string(), loud * args.scale),
                    ("soft".to_string(), (1.0 - loud) * args.scale),
                ]),
            }
        }
        Err(e) => Reply::Error {
            id: request.id,
            error: e,
        },
    }
}

fn main() {
    let args = Args::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let handshake = Handshake {
        protocol: args.protocol.unwrap_or(PROTOCOL_VERSION),
        input_rate: args.rate,
        input_length: args.length,
        tags: vec!["loud".into(), "soft".into()],
    };
    writeln!(out, "{}", serde_json::to_string(&handshake).unwrap()).unwrap();
    out.flush().unwrap();

    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in std::io::stdin().lock().lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let mut sent = 0usize;
    let mut buffer: Vec<String> = Vec::new();
    loop {
        let next = rx.recv_timeout(Duration::from_millis(20));
        let closed = matches!(next, Err(mpsc::RecvTimeoutError::Disconnected));
        if let Ok(line) = next {
            buffer.push(line);
            if buffer.len() < args.reverse {
                continue;
            }
        }
        for line in buffer.drain(..).rev() {
            if args.exit_after == Some(sent) {
                return;
            }
            if args.malformed_after == Some(sent) {
                writeln!(out, "this is not json").unwrap();
                out.flush().unwrap();
            }
            std::thread::sleep(Duration::from_millis(args.sleep_ms));
            writeln!(out, "{}", serde_json::to_string(&reply(&args, &line)).unwrap()).unwrap();
            out.flush().unwrap();
            sent += 1;
        }
        if closed {
            return;
        }
    }
}
