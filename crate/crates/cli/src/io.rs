//! Output formats: `rho.otm`, `kappa.txt`, `log.csv`, `rho.vti`, and
//! atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use opentm_core::{ConductivityTensor, Dims};

use crate::error::{CliError, CliResult};

pub const OTM_MAGIC: &[u8; 4] = b"OTM1";
pub const LOG_HEADER: &str = "iter,g,volfrac,vstar,vcycles,ms";

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| CliError::format(path, "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

/// Creates `dir` if needed and checks that files can be created in it.
pub fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let probe = dir.join(format!(".probe-{}", std::process::id()));
    fs::write(&probe, b"").map_err(|e| CliError::io(dir, e))?;
    fs::remove_file(&probe).map_err(|e| CliError::io(dir, e))
}

pub fn encode_otm(dims: Dims, rho: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * rho.len());
    out.extend_from_slice(OTM_MAGIC);
    for n in dims.as_array() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &r in rho {
        out.extend_from_slice(&(r as f32).to_le_bytes());
    }
    out
}

/// Parses an OTM1 buffer into its dimensions and densities.
pub fn decode_otm(bytes: &[u8]) -> Result<(Dims, Vec<f32>), String> {
    if bytes.len() < 16 || &bytes[..4] != OTM_MAGIC {
        return Err("missing OTM1 header".into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let dims = Dims::new(word(0), word(1), word(2)).map_err(|e| e.to_string())?;
    let payload = &bytes[16..];
    let expected = dims
        .len()
        .checked_mul(4)
        .ok_or_else(|| "dimensions overflow".to_string())?;
    if payload.len() != expected {
        return Err(format!(
            "payload is {} bytes, expected {expected} for {}x{}x{}",
            payload.len(),
            dims.nx,
            dims.ny,
            dims.nz
        ));
    }
    let rho: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = rho.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(format!("density {} at index {i} is outside [0, 1]", rho[i]));
    }
    Ok((dims, rho))
}

pub fn write_otm(path: &Path, dims: Dims, rho: &[f64]) -> CliResult<()> {
    write_atomic(path, &encode_otm(dims, rho))
}

pub fn read_otm(path: &Path) -> CliResult<(Dims, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_otm(&bytes).map_err(|m| CliError::format(path, m))
}

/// Three lines of three space-separated entries.
pub fn format_kappa(t: &ConductivityTensor) -> String {
    let m = t.to_matrix();
    let mut s = String::new();
    for row in m {
        let _ = writeln!(s, "{} {} {}", row[0], row[1], row[2]);
    }
    s
}

pub fn parse_kappa(text: &str) -> Result<[[f64; 3]; 3], String> {
    let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if rows.len() != 3 {
        return Err(format!("expected 3 rows, found {}", rows.len()));
    }
    let mut m = [[0.0; 3]; 3];
    for (i, row) in rows.iter().enumerate() {
        let vals: Vec<f64> = row
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1)))
            .collect::<Result<_, _>>()?;
        if vals.len() != 3 {
            return Err(format!("row {} has {} entries", i + 1, vals.len()));
        }
        m[i].copy_from_slice(&vals);
    }
    Ok(m)
}

/// One `log.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub g: f64,
    pub volfrac: f64,
    pub vstar: f64,
    pub vcycles: usize,
    pub ms: f64,
}

pub fn format_log(rows: &[LogRow]) -> String {
    let mut s = String::from(LOG_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{:e},{},{},{},{:.3}", r.iter, r.g, r.volfrac, r.vstar, r.vcycles, r.ms);
    }
    s
}

pub fn parse_log(text: &str) -> Result<Vec<LogRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(LOG_HEADER) {
        return Err("unexpected log header".into());
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(format!("row '{l}' has {} fields", f.len()));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|e| format!("{l}: {e}"));
            let int = |i: usize| f[i].parse::<usize>().map_err(|e| format!("{l}: {e}"));
            Ok(LogRow {
                iter: int(0)?,
                g: num(1)?,
                volfrac: num(2)?,
                vstar: num(3)?,
                vcycles: int(4)?,
                ms: num(5)?,
            })
        })
        .collect()
}

/// VTK XML ImageData with one cell scalar, ASCII encoded, on the unit cube.
pub fn format_vti(dims: Dims, rho: &[f64]) -> String {
    let [nx, ny, nz] = dims.as_array();
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\"?>");
    let _ = writeln!(
        s,
        "<VTKFile type=\"ImageData\" version=\"0.1\" byte_order=\"LittleEndian\">"
    );
    let _ = writeln!(
        s,
        "  <ImageData WholeExtent=\"0 {nx} 0 {ny} 0 {nz}\" Origin=\"0 0 0\" Spacing=\"{} {} {}\">",
        1.0 / nx as f64,
        1.0 / ny as f64,
        1.0 / nz as f64
    );
    let _ = writeln!(s, "    <Piece Extent=\"0 {nx} 0 {ny} 0 {nz}\">");
    let _ = writeln!(s, "      <CellData Scalars=\"density\">");
    let _ = writeln!(
        s,
        "        <DataArray type=\"Float32\" Name=\"density\" format=\"ascii\">"
    );
    for chunk in rho.chunks(nx.max(1)) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{}", *v as f32)).collect();
        let _ = writeln!(s, "          {}", line.join(" "));
    }
    let _ = writeln!(s, "        </DataArray>");
    let _ = writeln!(s, "      </CellData>");
    let _ = writeln!(s, "    </Piece>");
    let _ = writeln!(s, "  </ImageData>");
    let _ = writeln!(s, "</VTKFile>");
    s
}

/// Paths of the files a run writes into `dir`.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub rho: PathBuf,
    pub kappa: PathBuf,
    pub log: PathBuf,
    pub vti: PathBuf,
    pub manifest: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        OutputPaths {
            rho: dir.join("rho.otm"),
            kappa: dir.join("kappa.txt"),
            log: dir.join("log.csv"),
            vti: dir.join("rho.vti"),
            manifest: dir.join("manifest.json"),
        }
    }
}
