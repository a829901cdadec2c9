#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread::JoinHandle;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sheetrefine"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("SHEETREFINE_GEN_ENDPOINT").output().expect("spawn sheetrefine")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

pub fn list(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|rd| rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

/// Mutual information from an explicit joint probability table, independent of
/// the library: `sum p(x,y) log2(p(x,y) / (p(x) p(y)))`.
pub fn brute_force_mi(a: &[u8], b: &[u8], bins: usize) -> f64 {
    let n = a.len() as f64;
    let bin = |v: u8| ((v as usize * bins) / 256).min(bins - 1);
    let mut table = vec![vec![0.0f64; bins]; bins];
    for (&x, &y) in a.iter().zip(b) {
        table[bin(x)][bin(y)] += 1.0 / n;
    }
    let px: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let py: Vec<f64> = (0..bins).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let p = table[i][j];
            if p > 0.0 {
                mi += p * (p / (px[i] * py[j])).log2();
            }
        }
    }
    mi
}

/// One-connection-per-response HTTP stub.
pub struct MockServer {
    pub url: String,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(responses: Vec<(u16, &'static str, Vec<u8>)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/generate", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            for (status, content_type, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut req = vec![0u8; len];
                reader.read_exact(&mut req).unwrap();
                let mut stream = reader.into_inner();
                let head = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                    body.len()
                );
                stream.write_all(head.as_bytes()).unwrap();
                stream.write_all(&body).unwrap();
            }
        });
        Self { url, handle: Some(handle) }
    }

    pub fn join(mut self) {
        self.handle.take().unwrap().join().unwrap();
    }
}
