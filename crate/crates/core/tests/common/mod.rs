#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sheetrefine_core::GrayImage;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_u8(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.gen()).collect()
}

pub fn random_gray(rng: &mut ChaCha8Rng, w: u32, h: u32) -> GrayImage {
    GrayImage::from_u8(w, h, &random_u8(rng, (w * h) as usize)).unwrap()
}

/// MI straight from an explicit joint probability table, using the
/// `sum p(x,y) log2(p(x,y) / (p(x) p(y)))` form. Shares no code with the library.
pub fn brute_force_mi(a: &[u8], b: &[u8], bins: usize) -> f64 {
    assert_eq!(a.len(), b.len());
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

/// Entropy of the binned intensities, also computed from scratch.
pub fn brute_force_entropy(a: &[u8], bins: usize) -> f64 {
    let n = a.len() as f64;
    let mut counts = vec![0usize; bins];
    for &v in a {
        counts[((v as usize * bins) / 256).min(bins - 1)] += 1;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Textbook bilinear resampling with pixel-centre alignment, written
/// independently of the library for cross-checking.
pub fn reference_bilinear(src: &[f64], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f64> {
    let sample = |x: f64, y: f64| -> f64 {
        let x = x.max(0.0).min((sw - 1) as f64);
        let y = y.max(0.0).min((sh - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(sw - 1), (y0 + 1).min(sh - 1));
        let (tx, ty) = (x - x0 as f64, y - y0 as f64);
        let p = |xx: usize, yy: usize| src[yy * sw + xx];
        (1.0 - tx) * (1.0 - ty) * p(x0, y0) + tx * (1.0 - ty) * p(x1, y0) + (1.0 - tx) * ty * p(x0, y1) + tx * ty * p(x1, y1)
    };
    let mut out = Vec::with_capacity(dw * dh);
    for y in 0..dh {
        for x in 0..dw {
            let sx = (x as f64 + 0.5) * sw as f64 / dw as f64 - 0.5;
            let sy = (y as f64 + 0.5) * sh as f64 / dh as f64 - 0.5;
            out.push(sample(sx, sy));
        }
    }
    out
}

pub mod mock_http {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};
    use std::thread::JoinHandle;

    pub struct Canned {
        pub status: u16,
        pub content_type: &'static str,
        pub body: Vec<u8>,
    }

    /// Serves the canned responses in order, one per connection, and records
    /// each request body.
    pub struct MockServer {
        pub url: String,
        pub bodies: Arc<Mutex<Vec<String>>>,
        handle: Option<JoinHandle<()>>,
    }

    impl MockServer {
        pub fn start(responses: Vec<Canned>) -> Self {
            let listener = TcpListener::bind("127.0.0.1:0").unwrap();
            let url = format!("http://{}/generate", listener.local_addr().unwrap());
            let bodies = Arc::new(Mutex::new(Vec::new()));
            let seen = Arc::clone(&bodies);
            let handle = std::thread::spawn(move || {
                for canned in responses {
                    let (stream, _) = listener.accept().unwrap();
                    let mut reader = BufReader::new(stream);
                    let mut len = 0usize;
                    loop {
                        let mut line = String::new();
                        reader.read_line(&mut line).unwrap();
                        let lower = line.to_ascii_lowercase();
                        if let Some(v) = lower.strip_prefix("content-length:") {
                            len = v.trim().parse().unwrap();
                        }
                        if line == "\r\n" || line.is_empty() {
                            break;
                        }
                    }
                    let mut body = vec![0u8; len];
                    reader.read_exact(&mut body).unwrap();
                    seen.lock().unwrap().push(String::from_utf8_lossy(&body).into_owned());
                    let mut stream = reader.into_inner();
                    let head = format!(
                        "HTTP/1.1 {} X\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                        canned.status,
                        canned.content_type,
                        canned.body.len()
                    );
                    stream.write_all(head.as_bytes()).unwrap();
                    stream.write_all(&canned.body).unwrap();
                    stream.flush().unwrap();
                }
            });
            Self { url, bodies, handle: Some(handle) }
        }

        pub fn join(mut self) -> Vec<String> {
            self.handle.take().unwrap().join().unwrap();
            self.bodies.lock().unwrap().clone()
        }
    }
}
