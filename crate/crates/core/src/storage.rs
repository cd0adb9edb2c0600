//! Systematic `(n, k)` MDS erasure code over GF(2⁸) and node repair.
//!
//! The generator is `V · V_top⁻¹` where `V[i][j] = (i+1)^j` is the `n × k`
//! Vandermonde matrix on evaluation points `1..=n` and `V_top` its first `k`
//! rows. Any `k` rows of `V` are invertible, so any `k` shares reconstruct.
//!
//! The file is padded with zero bytes to a multiple of `k` and cut into `k`
//! contiguous chunks; share `i` is row `i` of the generator applied bytewise
//! across the chunks, so shares `0..k` are the chunks themselves.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Arithmetic in GF(2⁸) modulo `x⁸ + x⁴ + x³ + x + 1`.
pub mod gf256 {
    pub const POLY: u16 = 0x11B;

    struct Tables {
        exp: [u8; 512],
        log: [u8; 256],
    }

    const TABLES: Tables = build();

    const fn build() -> Tables {
        let mut exp = [0u8; 512];
        let mut log = [0u8; 256];
        let mut x: u16 = 1;
        let mut i = 0;
        while i < 255 {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            // multiply by the generator 3 = x + 1
            x ^= x << 1;
            if x & 0x100 != 0 {
                x ^= POLY;
            }
            i += 1;
        }
        while i < 512 {
            exp[i] = exp[i - 255];
            i += 1;
        }
        Tables { exp, log }
    }

    pub fn add(a: u8, b: u8) -> u8 {
        a ^ b
    }

    pub fn mul(a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            return 0;
        }
        TABLES.exp[TABLES.log[a as usize] as usize + TABLES.log[b as usize] as usize]
    }

    /// Multiplicative inverse; `inv(0)` panics.
    pub fn inv(a: u8) -> u8 {
        assert!(a != 0, "zero has no inverse in GF(256)");
        TABLES.exp[255 - TABLES.log[a as usize] as usize]
    }

    pub fn pow(a: u8, e: u32) -> u8 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        TABLES.exp[(TABLES.log[a as usize] as u32 * e % 255) as usize]
    }

    /// Inverts a square matrix by Gauss–Jordan elimination.
    pub fn invert(m: &[Vec<u8>]) -> Option<Vec<Vec<u8>>> {
        let n = m.len();
        let mut a: Vec<Vec<u8>> = m.to_vec();
        let mut inv_m: Vec<Vec<u8>> = (0..n)
            .map(|i| (0..n).map(|j| (i == j) as u8).collect())
            .collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[r][col] != 0)?;
            a.swap(col, pivot);
            inv_m.swap(col, pivot);
            let s = inv(a[col][col]);
            for j in 0..n {
                a[col][j] = mul(a[col][j], s);
                inv_m[col][j] = mul(inv_m[col][j], s);
            }
            for r in 0..n {
                if r != col && a[r][col] != 0 {
                    let f = a[r][col];
                    for j in 0..n {
                        a[r][j] ^= mul(f, a[col][j]);
                        inv_m[r][j] ^= mul(f, inv_m[col][j]);
                    }
                }
            }
        }
        Some(inv_m)
    }

    pub fn matmul(a: &[Vec<u8>], b: &[Vec<u8>]) -> Vec<Vec<u8>> {
        a.iter()
            .map(|row| {
                (0..b[0].len())
                    .map(|j| row.iter().zip(b).fold(0, |acc, (&x, brow)| acc ^ mul(x, brow[j])))
                    .collect()
            })
            .collect()
    }
}

pub const MAX_NODES: usize = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageConfig {
    pub n: usize,
    pub k: usize,
    /// Repair degree: helpers contacted when a node is rebuilt.
    pub d: usize,
}

impl StorageConfig {
    /// Requires `1 ≤ k ≤ n ≤ 255` and `k ≤ d ≤ n − 1`; when `n = k` no repair
    /// is possible and `d` must equal `k`.
    pub fn new(n: usize, k: usize, d: usize) -> Result<Self> {
        let cfg = StorageConfig { n, k, d };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let StorageConfig { n, k, d } = *self;
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
        }
        if n > MAX_NODES {
            return Err(Error::InvalidParameter(format!("GF(256) supports at most {MAX_NODES} nodes, got {n}")));
        }
        let d_ok = if n == k { d == k } else { k <= d && d < n };
        if !d_ok {
            return Err(Error::InvalidParameter(format!("need k <= d <= n - 1, got n = {n}, k = {k}, d = {d}")));
        }
        Ok(())
    }

    /// Row `i` of the systematic generator.
    fn generator_row(&self, i: usize) -> Vec<u8> {
        generator(self.n, self.k)[i].clone()
    }
}

/// `n × k` systematic generator matrix.
pub fn generator(n: usize, k: usize) -> Vec<Vec<u8>> {
    let vander: Vec<Vec<u8>> = (1..=n)
        .map(|p| (0..k).map(|j| gf256::pow(p as u8, j as u32)).collect())
        .collect();
    let top_inv = gf256::invert(&vander[..k]).expect("Vandermonde on distinct points is invertible");
    gf256::matmul(&vander, &top_inv)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeContent {
    pub node_id: usize,
    /// Zero bytes appended to the file before splitting.
    pub pad_len: usize,
    pub fragment: Vec<u8>,
}

fn combine(row: &[u8], chunks: &[&[u8]], len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for (&g, chunk) in row.iter().zip(chunks) {
        if g == 0 {
            continue;
        }
        for (o, &b) in out.iter_mut().zip(chunk.iter()) {
            *o ^= gf256::mul(g, b);
        }
    }
    out
}

pub fn mds_encode(file: &[u8], cfg: &StorageConfig) -> Result<Vec<NodeContent>> {
    cfg.validate()?;
    let pad_len = (cfg.k - file.len() % cfg.k) % cfg.k;
    let mut padded = file.to_vec();
    padded.resize(file.len() + pad_len, 0);
    let len = padded.len() / cfg.k;
    let chunks: Vec<&[u8]> = padded.chunks(len.max(1)).collect();
    let chunks = if len == 0 { vec![&[][..]; cfg.k] } else { chunks };
    Ok(generator(cfg.n, cfg.k)
        .iter()
        .enumerate()
        .map(|(node_id, row)| NodeContent {
            node_id,
            pad_len,
            fragment: combine(row, &chunks, len),
        })
        .collect())
}

/// Picks the `k` lowest-id distinct shares and checks they are consistent.
fn select_shares<'a>(shares: &'a [NodeContent], cfg: &StorageConfig) -> Result<Vec<&'a NodeContent>> {
    cfg.validate()?;
    let mut sorted: Vec<&NodeContent> = shares.iter().collect();
    sorted.sort_by_key(|s| s.node_id);
    sorted.dedup_by_key(|s| s.node_id);
    if let Some(bad) = sorted.iter().find(|s| s.node_id >= cfg.n) {
        return Err(Error::MalformedShare(format!("node id {} outside 0..{}", bad.node_id, cfg.n)));
    }
    if sorted.len() < cfg.k {
        return Err(Error::InsufficientShares {
            needed: cfg.k,
            available: sorted.len(),
        });
    }
    sorted.truncate(cfg.k);
    let first = sorted[0];
    if sorted
        .iter()
        .any(|s| s.fragment.len() != first.fragment.len() || s.pad_len != first.pad_len)
    {
        return Err(Error::InconsistentShares("share lengths or padding differ".into()));
    }
    if first.pad_len >= cfg.k || (first.fragment.is_empty() && first.pad_len != 0) {
        return Err(Error::MalformedShare(format!("padding {} is invalid for k = {}", first.pad_len, cfg.k)));
    }
    Ok(sorted)
}

/// Data chunks recovered from the selected shares.
fn recover_chunks(selected: &[&NodeContent], cfg: &StorageConfig) -> Vec<Vec<u8>> {
    let g = generator(cfg.n, cfg.k);
    let sub: Vec<Vec<u8>> = selected.iter().map(|s| g[s.node_id].clone()).collect();
    let dec = gf256::invert(&sub).expect("any k generator rows are independent");
    let frags: Vec<&[u8]> = selected.iter().map(|s| s.fragment.as_slice()).collect();
    let len = frags[0].len();
    dec.iter().map(|row| combine(row, &frags, len)).collect()
}

/// Rebuilds the file from any `k` distinct shares. Corrupted shares are not
/// detected; they yield a different file.
pub fn mds_reconstruct(shares: &[NodeContent], cfg: &StorageConfig) -> Result<Vec<u8>> {
    let selected = select_shares(shares, cfg)?;
    let pad_len = selected[0].pad_len;
    let mut file: Vec<u8> = recover_chunks(&selected, cfg).concat();
    file.truncate(file.len() - pad_len);
    Ok(file)
}

/// Regenerates node `lost` from at least `k` helper shares.
pub fn repair_node(lost: usize, helpers: &[NodeContent], cfg: &StorageConfig) -> Result<NodeContent> {
    cfg.validate()?;
    if lost >= cfg.n {
        return Err(Error::InvalidParameter(format!("lost node {lost} outside 0..{}", cfg.n)));
    }
    if helpers.iter().any(|h| h.node_id == lost) {
        return Err(Error::InvalidParameter(format!("helpers include the lost node {lost}")));
    }
    let selected = select_shares(helpers, cfg)?;
    let chunks = recover_chunks(&selected, cfg);
    let refs: Vec<&[u8]> = chunks.iter().map(|c| c.as_slice()).collect();
    Ok(NodeContent {
        node_id: lost,
        pad_len: selected[0].pad_len,
        fragment: combine(&cfg.generator_row(lost), &refs, selected[0].fragment.len()),
    })
}

pub const SHARE_MAGIC: [u8; 2] = *b"ST";
pub const SHARE_VERSION: u8 = 1;
pub const SHARE_HEADER_LEN: usize = 8;

/// Share file header: magic `ST`, version, `n`, `k`, `pad_len`, `node_id`, reserved zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShareHeader {
    pub n: u8,
    pub k: u8,
    pub pad_len: u8,
    pub node_id: u8,
}

pub fn encode_share_file(share: &NodeContent, cfg: &StorageConfig) -> Result<Vec<u8>> {
    cfg.validate()?;
    if share.node_id >= cfg.n || share.pad_len >= cfg.k {
        return Err(Error::MalformedShare("share does not fit the configuration".into()));
    }
    let mut out = Vec::with_capacity(SHARE_HEADER_LEN + share.fragment.len());
    out.extend_from_slice(&SHARE_MAGIC);
    out.extend_from_slice(&[
        SHARE_VERSION,
        cfg.n as u8,
        cfg.k as u8,
        share.pad_len as u8,
        share.node_id as u8,
        0,
    ]);
    out.extend_from_slice(&share.fragment);
    Ok(out)
}

pub fn decode_share_file(bytes: &[u8]) -> Result<(ShareHeader, NodeContent)> {
    if bytes.len() < SHARE_HEADER_LEN {
        return Err(Error::MalformedShare(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if bytes[..2] != SHARE_MAGIC {
        return Err(Error::MalformedShare("bad magic".into()));
    }
    if bytes[2] != SHARE_VERSION {
        return Err(Error::MalformedShare(format!("unsupported version {}", bytes[2])));
    }
    let header = ShareHeader {
        n: bytes[3],
        k: bytes[4],
        pad_len: bytes[5],
        node_id: bytes[6],
    };
    if header.k == 0 || header.k > header.n || header.node_id >= header.n || header.pad_len >= header.k {
        return Err(Error::MalformedShare(format!("inconsistent header {header:?}")));
    }
    let share = NodeContent {
        node_id: header.node_id as usize,
        pad_len: header.pad_len as usize,
        fragment: bytes[SHARE_HEADER_LEN..].to_vec(),
    };
    Ok((header, share))
}
