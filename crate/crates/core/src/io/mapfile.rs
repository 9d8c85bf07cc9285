//! Correlation-map container: magic `ABCM`, u16 version, u32 header length,
//! a JSON header, then the row-major f64 (little-endian) values followed by
//! the per-site standard errors when the header says `has_stderr`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{ImageBuffer, Luma};

use crate::correlator::CorrelationMap;
use crate::error::{Error, Result};

const MAP_MAGIC: &[u8; 4] = b"ABCM";
const MAP_VERSION: u16 = 1;

pub fn encode_map<W: Write>(map: &CorrelationMap, mut w: W) -> std::io::Result<()> {
    let mut header = serde_json::to_value(map).map_err(std::io::Error::other)?;
    header["has_stderr"] = serde_json::Value::Bool(map.stderr.is_some());
    let header = serde_json::to_vec(&header).map_err(std::io::Error::other)?;
    w.write_all(MAP_MAGIC)?;
    w.write_all(&MAP_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    for v in &map.values {
        w.write_all(&v.to_le_bytes())?;
    }
    if let Some(se) = &map.stderr {
        for v in se {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn decode_map<R: Read>(mut r: R) -> Result<CorrelationMap> {
    let mut head = [0u8; 10];
    r.read_exact(&mut head)
        .map_err(|_| Error::Format("truncated map header".into()))?;
    if &head[0..4] != MAP_MAGIC {
        return Err(Error::Format("not a correlation map (bad magic)".into()));
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != MAP_VERSION {
        return Err(Error::Format(format!("unsupported map version {version}")));
    }
    let hlen = u32::from_le_bytes(head[6..10].try_into().unwrap()) as usize;
    let mut header = vec![0u8; hlen];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated map header".into()))?;
    let value: serde_json::Value =
        serde_json::from_slice(&header).map_err(|e| Error::Format(e.to_string()))?;
    let has_stderr = value["has_stderr"].as_bool().unwrap_or(false);
    let mut map: CorrelationMap =
        serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
    let n = map.width * map.height;
    let mut read_array = || -> Result<Vec<f64>> {
        let mut buf = vec![0u8; n * 8];
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format("truncated map data".into()))?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    map.values = read_array()?;
    if has_stderr {
        map.stderr = Some(read_array()?);
    }
    Ok(map)
}

pub fn write_map(map: &CorrelationMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    encode_map(map, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn read_map(path: &Path) -> Result<CorrelationMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_map(BufReader::new(file))
}

/// Linear scaling used for a PNG preview: `pixel = (value - min) / (max - min) * 65535`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PngScaling {
    pub min: f64,
    pub max: f64,
}

/// Writes a min-max scaled 16-bit grayscale preview and a `<png>.txt`
/// sidecar recording the scaling.
pub fn write_png_preview(map: &CorrelationMap, path: &Path) -> Result<PngScaling> {
    let min = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = map.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if max > min { max - min } else { 1.0 };
    let img =
        ImageBuffer::<Luma<u16>, Vec<u16>>::from_fn(map.width as u32, map.height as u32, |x, y| {
            let v = map.get(x as usize, y as usize);
            Luma([(((v - min) / span) * 65535.0).round().clamp(0.0, 65535.0) as u16])
        });
    img.save(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    let sidecar = path.with_extension("png.txt");
    let text = format!(
        "order = {}\nmin = {:e}\nmax = {:e}\npitch_nm = {}\norigin_nm = [{}, {}]\nscaling = \"(value - min) / (max - min) * 65535\"\n",
        map.order, min, max, map.pitch_nm, map.origin_nm[0], map.origin_nm[1]
    );
    std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))?;
    Ok(PngScaling { min, max })
}
