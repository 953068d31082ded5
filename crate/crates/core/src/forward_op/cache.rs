//! Binary operator cache: `"FSTB"`, `u32` version, `u64` rows, `u64` cols,
//! then the matrix row-major as little-endian `f64`. A JSON sidecar next to
//! it records hashes of the inputs the matrix was assembled from.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::operator::{assemble, ForwardOperator};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::fault_model::{FaultGeometry, ObservationGrid, SlipBasis};
use crate::kernels::LameParams;

pub const MAGIC: &[u8; 4] = b"FSTB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheSidecar {
    pub version: u32,
    pub rows: u64,
    pub cols: u64,
    pub geometry_hash: String,
    pub grid_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheStatus {
    Hit,
    Miss,
    Stale,
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            w.write_all(&m[(r, c)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[..4] != MAGIC {
        return Err(Error::Cache(format!("{}: not an operator cache", path.display())));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let body = &bytes[24..];
    if body.len() != rows * cols * 8 {
        return Err(Error::Cache(format!("expected {} bytes of data, found {}", rows * cols * 8, body.len())));
    }
    let vals = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    Ok(DMatrix::from_row_iterator(rows, cols, vals))
}

fn sha_json<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("serializable");
    hex::encode(Sha256::digest(bytes))
}

/// Hash of everything other than the observation grid that determines the matrix.
pub fn geometry_hash(lame: &LameParams, geom: &FaultGeometry, quad: &QuadratureRule, basis: &SlipBasis) -> String {
    sha_json(&(lame, geom, quad.spec(), basis))
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Loads the operator from `path` when its sidecar hashes match, otherwise
/// assembles it and rewrites the cache.
pub fn assemble_cached(
    lame: &LameParams,
    geom: &FaultGeometry,
    grid: &ObservationGrid,
    quad: &QuadratureRule,
    basis: &SlipBasis,
    path: &Path,
) -> Result<(ForwardOperator, CacheStatus)> {
    let expected = CacheSidecar {
        version: VERSION,
        rows: grid.data_len() as u64,
        cols: basis.len() as u64,
        geometry_hash: geometry_hash(lame, geom, quad, basis),
        grid_hash: grid.fingerprint(),
    };
    let side = sidecar_path(path);
    let mut status = CacheStatus::Miss;
    if path.exists() && side.exists() {
        let found: std::result::Result<CacheSidecar, _> = serde_json::from_slice(&fs::read(&side)?);
        match found {
            Ok(found) if found == expected => match read_matrix(path) {
                Ok(matrix) if matrix.shape() == (grid.data_len(), basis.len()) => {
                    info!("loaded operator from {}", path.display());
                    let mut op = assemble_shell(lame, geom, grid, quad, basis)?;
                    op.matrix = matrix;
                    return Ok((op, CacheStatus::Hit));
                }
                Ok(_) => warn!("cache {} has the wrong shape; reassembling", path.display()),
                Err(e) => warn!("cache {} unreadable ({e}); reassembling", path.display()),
            },
            Ok(_) => warn!("cache {} was built from different inputs; reassembling", path.display()),
            Err(e) => warn!("cache sidecar {} unreadable ({e}); reassembling", side.display()),
        }
        status = CacheStatus::Stale;
    }
    let op = assemble(lame, geom, grid, quad, basis)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_matrix(path, &op.matrix)?;
    fs::write(&side, serde_json::to_vec_pretty(&expected)?)?;
    Ok((op, status))
}

fn assemble_shell(
    lame: &LameParams,
    geom: &FaultGeometry,
    grid: &ObservationGrid,
    quad: &QuadratureRule,
    basis: &SlipBasis,
) -> Result<ForwardOperator> {
    let geometry = FaultGeometry::new(geom.a, geom.b, geom.d, geom.rect, geom.depth_min)?;
    Ok(ForwardOperator {
        matrix: DMatrix::zeros(0, 0),
        geometry,
        grid: grid.clone(),
        quad: quad.clone(),
        lame: *lame,
        basis: *basis,
    })
}
