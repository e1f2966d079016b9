//! CSV energy reports and binary field dumps.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use crate::diagnostics::EnergyReport;
use crate::grid::Grid;
use crate::stepper::State;

pub const CSV_HEADER: [&str; 16] = [
    "t",
    "dt",
    "E",
    "ginzburg_landau",
    "chemical",
    "dissipation",
    "boundary_term",
    "source_work",
    "identity_residual",
    "mass_phi_1",
    "mass_phi_2",
    "mass_phi_3",
    "mass_healthy",
    "mass_sigma_1",
    "div_residual",
    "picard_iters",
];

pub fn report_record(r: &EnergyReport) -> Vec<String> {
    let f = |x: f64| format!("{x:e}");
    vec![
        f(r.t),
        f(r.dt),
        f(r.energy),
        f(r.ginzburg_landau),
        f(r.chemical),
        f(r.dissipation),
        f(r.boundary_term),
        f(r.source_work),
        f(r.identity_residual),
        f(r.mass_phi[0]),
        f(r.mass_phi[1]),
        f(r.mass_phi[2]),
        f(r.mass_healthy),
        f(r.mass_sigma),
        f(r.div_residual),
        r.picard_iters.to_string(),
    ]
}

pub struct CsvReport {
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvReport {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        writer.write_record(CSV_HEADER).map_err(io::Error::other)?;
        Ok(Self { writer })
    }

    pub fn push(&mut self, r: &EnergyReport) -> io::Result<()> {
        self.writer.write_record(report_record(r)).map_err(io::Error::other)
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

pub const DUMP_MAGIC: &[u8; 4] = b"MCHB";
pub const DUMP_VERSION: u32 = 1;
/// Component order of a state dump.
pub const STATE_COMPONENTS: [&str; 11] = [
    "phi_1", "phi_2", "phi_3", "mu_1", "mu_2", "mu_3", "sigma", "n_sigma", "v_x", "v_y", "p",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Dump {
    pub nx: usize,
    pub ny: usize,
    pub seed: u64,
    pub comps: Vec<Vec<f64>>,
}

/// Header: magic, version, nx, ny, component count, reserved word, seed
/// (all little endian), then each component in row-major order.
pub fn write_dump(path: &Path, grid: &Grid, comps: &[&[f64]], seed: u64) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DUMP_MAGIC)?;
    for v in [DUMP_VERSION, grid.nx as u32, grid.ny as u32, comps.len() as u32, 0] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&seed.to_le_bytes())?;
    for c in comps {
        if c.len() != grid.len() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "component size mismatch"));
        }
        for v in c.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn write_state_dump(path: &Path, st: &State, seed: u64) -> io::Result<()> {
    let comps: Vec<&[f64]> = vec![
        &st.phi[0], &st.phi[1], &st.phi[2], &st.mu[0], &st.mu[1], &st.mu[2], &st.sigma,
        &st.n_sigma, &st.vx, &st.vy, &st.p,
    ];
    write_dump(path, &st.grid, &comps, seed)
}

pub fn read_dump(path: &Path) -> io::Result<Dump> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    if bytes.len() < 32 || &bytes[..4] != DUMP_MAGIC {
        return Err(bad("not a field dump"));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    if word(4) != DUMP_VERSION as usize {
        return Err(bad("unsupported dump version"));
    }
    let (nx, ny, nc) = (word(8), word(12), word(16));
    let seed = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
    if bytes.len() != 32 + 8 * nx * ny * nc {
        return Err(bad("truncated dump"));
    }
    let comps = (0..nc)
        .map(|c| {
            (0..nx * ny)
                .map(|k| {
                    let o = 32 + 8 * (c * nx * ny + k);
                    f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap())
                })
                .collect()
        })
        .collect();
    Ok(Dump { nx, ny, seed, comps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(8, 9, 1.0, 1.0).unwrap();
        let a: Vec<f64> = (0..g.len()).map(|k| k as f64 * 0.5 - 3.0).collect();
        let b: Vec<f64> = (0..g.len()).map(|k| (k as f64).sin()).collect();
        let path = dir.path().join("f.bin");
        write_dump(&path, &g, &[&a, &b], 42).unwrap();
        let d = read_dump(&path).unwrap();
        assert_eq!((d.nx, d.ny, d.seed), (8, 9, 42));
        assert_eq!(d.comps, vec![a, b]);
        let raw = std::fs::read(&path).unwrap();
        assert_eq!(raw.len(), 32 + 2 * 72 * 8);
    }

    #[test]
    fn header_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let rep = CsvReport::create(&path).unwrap();
        rep.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.trim_end(),
            "t,dt,E,ginzburg_landau,chemical,dissipation,boundary_term,source_work,identity_residual,\
             mass_phi_1,mass_phi_2,mass_phi_3,mass_healthy,mass_sigma_1,div_residual,picard_iters"
        );
    }
}
