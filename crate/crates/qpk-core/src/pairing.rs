//! Cantor pairing, used wherever product carriers and pair-built posets need
//! a single index space.

/// Cantor pairing function.
pub fn pair(a: u64, b: u64) -> u64 {
    let s = a + b;
    s * (s + 1) / 2 + b
}

pub fn unpair(n: u64) -> (u64, u64) {
    // s = floor((sqrt(8n+1) - 1) / 2), robust against isqrt rounding
    let mut s = (((8 * n + 1) as f64).sqrt() as u64).saturating_sub(1) / 2;
    while (s + 1) * (s + 2) / 2 <= n {
        s += 1;
    }
    while s * (s + 1) / 2 > n {
        s -= 1;
    }
    let b = n - s * (s + 1) / 2;
    (s - b, b)
}

/// Smallest cutoff c such that every pair with both components <= m
/// has code < c.
pub fn pair_cutoff(m: u64) -> u64 {
    pair(m, m) + 1
}

/// Encodes a nonempty tuple as `pair(len-1, payload)` with a right-nested
/// payload. Components and length stay small at desk scale.
pub fn encode_tuple(t: &[u64]) -> u64 {
    assert!(!t.is_empty());
    let mut payload = *t.last().unwrap();
    for &x in t[..t.len() - 1].iter().rev() {
        payload = pair(x, payload);
    }
    pair(t.len() as u64 - 1, payload)
}

pub fn decode_tuple(code: u64) -> Vec<u64> {
    let (len_minus_1, mut payload) = unpair(code);
    let len = len_minus_1 as usize + 1;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len - 1 {
        let (x, rest) = unpair(payload);
        out.push(x);
        payload = rest;
    }
    out.push(payload);
    out
}
