//! Weight file layout (all integers `u32`, all values `f32`, little-endian):
//!
//! ```text
//! magic "SQNW" | version | m c_in conv_out hidden0 hidden1 hidden2 out_dim | layer count
//! per layer: outputs inputs | weights (row-major outputs × inputs) | bias (outputs)
//! ```
//! Layers are stored in forward order: 1×1 conv, three dense, head.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Arch, Dense, Network};
use crate::error::NetError;

const MAGIC: &[u8; 4] = b"SQNW";
pub const FORMAT_VERSION: u32 = 1;

fn fmt_err(e: std::io::Error) -> NetError {
    NetError::Format(format!("read failed: {e}"))
}

pub fn write_weights<W: Write>(net: &Network<f32>, mut w: W) -> std::io::Result<()> {
    let a = net.arch();
    w.write_all(MAGIC)?;
    let header = [
        FORMAT_VERSION,
        a.m as u32,
        a.c_in as u32,
        a.conv_out as u32,
        a.hidden[0] as u32,
        a.hidden[1] as u32,
        a.hidden[2] as u32,
        a.out_dim as u32,
        net.layers().len() as u32,
    ];
    for x in header {
        w.write_all(&x.to_le_bytes())?;
    }
    for l in net.layers() {
        w.write_all(&(l.outputs as u32).to_le_bytes())?;
        w.write_all(&(l.inputs as u32).to_le_bytes())?;
        for v in l.weights.iter().chain(&l.bias) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NetError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(fmt_err)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f32>, NetError> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf).map_err(fmt_err)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Parses a weight file. When `expected` is given, the stored arch must match it.
pub fn read_weights<R: Read>(mut r: R, expected: Option<&Arch>) -> Result<Network<f32>, NetError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(fmt_err)?;
    if &magic != MAGIC {
        return Err(NetError::Format("not a weight file (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(NetError::Format(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let mut dims = [0usize; 7];
    for d in &mut dims {
        *d = read_u32(&mut r)? as usize;
    }
    let arch = Arch {
        m: dims[0],
        c_in: dims[1],
        conv_out: dims[2],
        hidden: [dims[3], dims[4], dims[5]],
        out_dim: dims[6],
    };
    arch.validate()?;
    if let Some(want) = expected {
        if *want != arch {
            return Err(NetError::Shape {
                expected: format!("{want:?}"),
                found: format!("{arch:?}"),
            });
        }
    }
    let n_layers = read_u32(&mut r)? as usize;
    if n_layers != arch.layer_shapes().len() {
        return Err(NetError::Format(format!("unexpected layer count {n_layers}")));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for &(o, i) in &arch.layer_shapes() {
        let (outputs, inputs) = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
        if (outputs, inputs) != (o, i) {
            return Err(NetError::Shape {
                expected: format!("{o}x{i}"),
                found: format!("{outputs}x{inputs}"),
            });
        }
        let weights = read_f32s(&mut r, o * i)?;
        let bias = read_f32s(&mut r, o)?;
        layers.push(Dense { inputs, outputs, weights, bias });
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(fmt_err)?;
    if !rest.is_empty() {
        return Err(NetError::Format(format!("{} trailing bytes", rest.len())));
    }
    Network::from_layers(arch, layers)
}

pub fn save_weights(net: &Network<f32>, path: &Path) -> Result<(), NetError> {
    let io_err = |source| NetError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    write_weights(net, BufWriter::new(file)).map_err(io_err)
}

pub fn load_weights(path: &Path, expected: Option<&Arch>) -> Result<Network<f32>, NetError> {
    let file = File::open(path).map_err(|source| NetError::Io { path: path.to_path_buf(), source })?;
    read_weights(BufReader::new(file), expected)
}
