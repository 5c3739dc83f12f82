//! Flat binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes   b"GOEE"
//! version u32       1
//! hlen    u32       length of the JSON header
//! header  hlen      {"kind": "recursive" | "baseline", "backbone": BackboneConfig}
//! count   u64       number of tensors
//! count x { len u64, len x f64 (IEEE-754 bits) }
//! ```
//!
//! Tensors follow the network's `tensors()` order, so a round trip is
//! bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackboneConfig, BaselineEENetwork, NetError, RecursiveEENetwork, Result};

const MAGIC: &[u8; 4] = b"GOEE";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Recursive(RecursiveEENetwork),
    Baseline(BaselineEENetwork),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    Recursive,
    Baseline,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: Kind,
    backbone: BackboneConfig,
}

pub fn write_checkpoint<W: Write>(mut w: W, ckpt: &Checkpoint) -> Result<()> {
    let (header, tensors) = match ckpt {
        Checkpoint::Recursive(n) => (
            Header { kind: Kind::Recursive, backbone: n.config.clone() },
            n.tensors(),
        ),
        Checkpoint::Baseline(n) => (
            Header { kind: Kind::Baseline, backbone: n.config.clone() },
            n.tensors(),
        ),
    };
    let header = serde_json::to_vec(&header).map_err(|e| NetError::Checkpoint(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    w.write_all(&(tensors.len() as u64).to_le_bytes())?;
    for t in tensors {
        w.write_all(&(t.len() as u64).to_le_bytes())?;
        for v in t {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NetError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(NetError::Checkpoint(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let hlen = read_u32(&mut r)? as usize;
    let mut header = vec![0u8; hlen];
    r.read_exact(&mut header)?;
    let header: Header =
        serde_json::from_slice(&header).map_err(|e| NetError::Checkpoint(e.to_string()))?;
    let mut ckpt = match header.kind {
        Kind::Recursive => Checkpoint::Recursive(RecursiveEENetwork::new(header.backbone, 0)?),
        Kind::Baseline => Checkpoint::Baseline(BaselineEENetwork::new(header.backbone, 0)?),
    };
    let count = read_u64(&mut r)? as usize;
    let slots = match &mut ckpt {
        Checkpoint::Recursive(n) => n.tensors_mut(),
        Checkpoint::Baseline(n) => n.tensors_mut(),
    };
    if slots.len() != count {
        return Err(NetError::Checkpoint(format!(
            "expected {} tensors, found {count}",
            slots.len()
        )));
    }
    for (i, slot) in slots.into_iter().enumerate() {
        let len = read_u64(&mut r)? as usize;
        if len != slot.len() {
            return Err(NetError::Checkpoint(format!(
                "tensor {i}: expected {} values, found {len}",
                slot.len()
            )));
        }
        let mut b = [0u8; 8];
        for v in slot.iter_mut() {
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(NetError::Checkpoint("trailing bytes".into()));
    }
    Ok(ckpt)
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), ckpt)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut net = RecursiveEENetwork::new(BackboneConfig::new(3, vec![4, 5, 2], 3), 8).unwrap();
        // values that a lossy text format would mangle
        net.first_head.bias[0] = f64::from_bits(0x3ff0_0000_0000_0001);
        net.final_head.bias[1] = -0.0;
        let ckpt = Checkpoint::Recursive(net);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &ckpt).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        let (Checkpoint::Recursive(a), Checkpoint::Recursive(b)) = (&ckpt, &back) else {
            panic!("kind changed");
        };
        for (x, y) in a.tensors().iter().zip(b.tensors()) {
            let xb: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u64> = y.iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb);
        }
        assert_eq!(a.config, b.config);
        let mut again = Vec::new();
        write_checkpoint(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_corruption() {
        let net = BaselineEENetwork::new(BackboneConfig::new(2, vec![3, 3], 2), 1).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &Checkpoint::Baseline(net)).unwrap();
        assert!(read_checkpoint(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(bad.as_slice()).is_err());
        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(read_checkpoint(trailing.as_slice()).is_err());
        assert!(read_checkpoint(buf.as_slice()).is_ok());
    }
}
