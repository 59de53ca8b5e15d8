//! ℓ̂*(n) tables on disk.
//!
//! Tables are cached under a content hash of everything that determines
//! them (master seed, skeleton, scales, replica count), so a table written
//! by `rtrw calibrate` is picked up by a later `rtrw run` with the same
//! seed and skeleton.

use std::io::Write;
use std::path::{Path, PathBuf};

use rtrw_core::skeleton::SkeletonSpec;
use rtrw_core::verify::{
    calibration_stream, estimate_ell_star, CalibrationRow, Calibrator, VerifyError,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One CSV row; the column names are part of the file format.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    n: u64,
    replicas: usize,
    escape: f64,
    escape_se: f64,
    ell_star: f64,
    ell_star_se: f64,
}

pub fn write_csv<W: Write>(rows: &[CalibrationRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow {
            n: r.n,
            replicas: r.replicas,
            escape: r.escape,
            escape_se: r.escape_std_error,
            ell_star: r.ell_star,
            ell_star_se: r.ell_star_std_error,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> csv::Result<Vec<CalibrationRow>> {
    csv::Reader::from_path(path)?
        .deserialize()
        .map(|row| {
            let r: CsvRow = row?;
            Ok(CalibrationRow {
                n: r.n,
                replicas: r.replicas,
                escape: r.escape,
                escape_std_error: r.escape_se,
                ell_star: r.ell_star,
                ell_star_std_error: r.ell_star_se,
            })
        })
        .collect()
}

pub fn cache_key(master_seed: u64, skeleton: &SkeletonSpec, ns: &[u64], replicas: usize) -> String {
    let mut h = Sha256::new();
    h.update(b"rtrw-calibration-v1\n");
    h.update(master_seed.to_le_bytes());
    h.update(serde_json::to_vec(skeleton).expect("skeleton specs serialize"));
    for n in ns {
        h.update(n.to_le_bytes());
    }
    h.update((replicas as u64).to_le_bytes());
    format!("{:x}", h.finalize())
}

/// Calibrator backed by a directory of CSV tables.
pub struct DiskCalibrator {
    master_seed: u64,
    dir: PathBuf,
}

impl DiskCalibrator {
    pub fn new(master_seed: u64, dir: impl Into<PathBuf>) -> Self {
        Self {
            master_seed,
            dir: dir.into(),
        }
    }

    pub fn path_for(&self, skeleton: &SkeletonSpec, ns: &[u64], replicas: usize) -> PathBuf {
        self.dir
            .join(format!("{}.csv", cache_key(self.master_seed, skeleton, ns, replicas)))
    }

    fn store(&self, path: &Path, rows: &[CalibrationRow]) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension("csv.tmp");
        let file = std::fs::File::create(&tmp)?;
        write_csv(rows, file).map_err(std::io::Error::other)?;
        std::fs::rename(&tmp, path)
    }
}

impl Calibrator for DiskCalibrator {
    fn calibrate(
        &self,
        skeleton: &SkeletonSpec,
        ns: &[u64],
        replicas: usize,
    ) -> Result<Vec<CalibrationRow>, VerifyError> {
        let path = self.path_for(skeleton, ns, replicas);
        if let Ok(rows) = read_csv(&path) {
            if rows.iter().map(|r| r.n).eq(ns.iter().copied()) {
                return Ok(rows);
            }
        }
        let rows = estimate_ell_star(
            &skeleton.build()?,
            ns,
            replicas,
            calibration_stream(self.master_seed, skeleton),
        )?;
        self.store(&path, &rows).map_err(|e| {
            VerifyError::Calibration(format!("cannot write {}: {e}", path.display()))
        })?;
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![CalibrationRow {
            n: 1000,
            replicas: 777,
            escape: 1.0 / 3.0,
            escape_std_error: 0.1 + 0.2,
            ell_star: 3.0000000000000004,
            ell_star_std_error: 1e-17,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&rows, std::fs::File::create(&path).unwrap()).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,replicas,escape,escape_se,ell_star,ell_star_se\n"));
    }

    #[test]
    fn cache_hit_matches_a_fresh_estimate() {
        let dir = tempfile::tempdir().unwrap();
        let skeleton = SkeletonSpec::Simple { dimension: 2 };
        let cal = DiskCalibrator::new(9, dir.path());
        let fresh = cal.calibrate(&skeleton, &[10, 100], 500).unwrap();
        let path = cal.path_for(&skeleton, &[10, 100], 500);
        assert!(path.exists());
        assert_eq!(cal.calibrate(&skeleton, &[10, 100], 500).unwrap(), fresh);
        // A different seed is a different table.
        assert_ne!(DiskCalibrator::new(10, dir.path()).path_for(&skeleton, &[10, 100], 500), path);
    }

    #[test]
    fn drift_table_is_exactly_one() {
        let dir = tempfile::tempdir().unwrap();
        let rows = DiskCalibrator::new(1, dir.path())
            .calibrate(&SkeletonSpec::Drift { dimension: 1 }, &[1, 10, 1000], 50)
            .unwrap();
        for r in rows {
            assert_eq!(r.ell_star, 1.0);
            assert_eq!(r.ell_star_std_error, 0.0);
        }
    }
}
