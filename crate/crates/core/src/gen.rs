//! Random MaxW instances on top of job-shop bases.
//!
//! For each operator, windows are drawn until the accumulated required rest
//! reaches `ceil(gd * H)`:
//!
//! 1. length `L` uniform in `[3, floor(0.2 * H)]`
//! 2. start `u` uniform in `[0, H - L]`
//! 3. rest share `p ~ Normal(ld, ld / 4)`, clamped to `[0, 1]`
//! 4. `rest = floor(p * L + 0.5)`, emitted as `(L - rest, [u, u + L))`
//!
//! Draws come from one ChaCha8 stream seeded with `seed`, operators in
//! increasing order and the three draws in the order above. Suite members get
//! `seed = first 8 bytes (LE) of SHA-256("<base>|<gd>|<ld>|<master seed>")`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{required_rest, validate_instance, Instance, MaxWConstraint, RawInstance, RawTask};
use crate::num::ShiftTime;
use crate::solver::greedy_schedule;

/// Density values of the benchmark grid.
pub const DENSITIES: [f64; 3] = [0.1, 0.25, 0.4];

pub const MIN_WINDOW: usize = 3;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error("base instance `{0}` already has MaxW constraints")]
    HasMaxw(String),
    #[error("operator {operator}: {draws} draws without reaching the rest target (seed {seed})")]
    RetryCap { operator: usize, draws: usize, seed: u64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenParams {
    /// Global rest density over the horizon.
    pub gd: f64,
    /// Mean rest share inside a window.
    pub ld: f64,
    pub seed: u64,
    pub horizon: usize,
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if !(self.gd > 0.0 && self.gd < 1.0) {
            return Err(GenError::Params(format!("gd must lie in (0, 1), got {}", self.gd)));
        }
        if !(self.ld > 0.0 && self.ld < 1.0) {
            return Err(GenError::Params(format!("ld must lie in (0, 1), got {}", self.ld)));
        }
        if self.horizon < 15 {
            return Err(GenError::Params(format!("horizon must be at least 15, got {}", self.horizon)));
        }
        Ok(())
    }

    pub fn max_window(&self) -> usize {
        (0.2 * self.horizon as f64).floor() as usize
    }

    /// Rest shifts each operator must accumulate.
    pub fn target(&self) -> usize {
        (self.gd * self.horizon as f64).ceil() as usize
    }

    /// Draw limit per operator: ten times the expected number of windows.
    pub fn retry_cap(&self) -> usize {
        let mean_len = (MIN_WINDOW + self.max_window()) as f64 / 2.0;
        let expected = (self.target() as f64 / (self.ld * mean_len)).ceil() as usize;
        10 * expected.max(1)
    }
}

/// One window draw: `(length, start, clamped rest share)`.
fn draw(rng: &mut ChaCha8Rng, params: &GenParams, normal: &Normal<f64>) -> (usize, usize, f64) {
    let len = rng.random_range(MIN_WINDOW..=params.max_window());
    let start = rng.random_range(0..=params.horizon - len);
    let p = normal.sample(rng).clamp(0.0, 1.0);
    (len, start, p)
}

/// Rounds half up.
fn rest_shifts(p: f64, len: usize) -> usize {
    (p * len as f64 + 0.5).floor() as usize
}

/// Appends random MaxW constraints to a base instance.
pub fn generate_maxw<T: ShiftTime>(base: &Instance<T>, params: &GenParams) -> Result<Instance<T>, GenError> {
    params.validate()?;
    if !base.maxw().is_empty() {
        return Err(GenError::HasMaxw(base.name.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(params.ld, params.ld / 4.0).expect("positive deviation");
    let target = params.target();
    let cap = params.retry_cap();
    let mut maxw = Vec::new();
    for operator in 0..base.num_operators {
        let mut acc = 0;
        let mut draws = 0;
        while acc < target {
            draws += 1;
            if draws > cap {
                return Err(GenError::RetryCap {
                    operator,
                    draws: cap,
                    seed: params.seed,
                });
            }
            let (len, start, p) = draw(&mut rng, params, &normal);
            let rest = rest_shifts(p, len);
            maxw.push(MaxWConstraint::new(
                operator,
                T::of(len - rest),
                T::of(start),
                T::of(start + len),
            ));
            acc += rest;
        }
    }
    let mut raw = base.to_raw();
    raw.maxw = maxw;
    raw.name = format!("{}_gd{}_ld{}", base.name, params.gd, params.ld);
    Ok(validate_instance(raw).expect("generated constraints are well formed"))
}

/// Clamped rest shares of `n` draws, for checking the distribution.
pub fn sample_rest_shares(params: &GenParams, n: usize) -> Vec<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(params.ld, params.ld / 4.0).expect("positive deviation");
    (0..n)
        .map(|_| {
            let (len, _, p) = draw(&mut rng, params, &normal);
            (len, p)
        })
        .collect()
}

/// Stable per-instance seed.
pub fn instance_seed(base: &str, gd: f64, ld: f64, master_seed: u64) -> u64 {
    let digest = Sha256::digest(format!("{base}|{gd}|{ld}|{master_seed}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Greedy makespan of the base, at least 15 shifts.
pub fn default_horizon<T: ShiftTime>(base: &Instance<T>) -> usize {
    greedy_schedule(&base.without_maxw())
        .map(|s| s.makespan())
        .unwrap_or(0)
        .max(15)
}

/// `{0.1, 0.25, 0.4}` squared, `gd` major.
pub fn density_grid() -> Vec<(f64, f64)> {
    DENSITIES
        .iter()
        .flat_map(|&gd| DENSITIES.iter().map(move |&ld| (gd, ld)))
        .collect()
}

/// Random job shop: every job visits distinct operators in random order
/// with durations uniform in `[1, max_duration]`.
pub fn random_jobshop<T: ShiftTime>(
    name: &str,
    jobs: usize,
    operators: usize,
    tasks_per_job: usize,
    max_duration: usize,
    seed: u64,
) -> Instance<T> {
    assert!(tasks_per_job <= operators && max_duration >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs = (0..jobs)
        .map(|_| {
            let mut ops = (0..operators).collect::<Vec<_>>();
            for i in (1..ops.len()).rev() {
                ops.swap(i, rng.random_range(0..=i));
            }
            ops.into_iter()
                .take(tasks_per_job)
                .map(|operator| RawTask {
                    operator,
                    duration: T::of(rng.random_range(1..=max_duration)),
                })
                .collect()
        })
        .collect();
    validate_instance(RawInstance {
        name: name.to_string(),
        jobs,
        num_operators: operators,
        maxw: Vec::new(),
    })
    .expect("random instance is valid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub instance: String,
    pub gd: f64,
    pub ld: f64,
    pub seed: u64,
    pub num_constraints: usize,
    pub total_required_rest: u64,
}

/// Augments every base at every density pair, in memory.
pub fn generate_suite_instances<T: ShiftTime>(
    bases: &[Instance<T>],
    grid: &[(f64, f64)],
    master_seed: u64,
    horizon: Option<usize>,
) -> Result<Vec<(ManifestRow, Instance<T>)>, GenError> {
    let mut out = Vec::new();
    for base in bases {
        let horizon = horizon.unwrap_or_else(|| default_horizon(base));
        for &(gd, ld) in grid {
            let seed = instance_seed(&base.name, gd, ld, master_seed);
            let inst = generate_maxw(base, &GenParams { gd, ld, seed, horizon })?;
            let row = ManifestRow {
                instance: format!("{}.txt", inst.name),
                gd,
                ld,
                seed,
                num_constraints: inst.maxw().len(),
                total_required_rest: inst.maxw().iter().map(|c| required_rest(c).idx() as u64).sum(),
            };
            out.push((row, inst));
        }
    }
    Ok(out)
}

/// Writes the suite and `manifest.csv` into `dir`.
pub fn generate_suite<T: ShiftTime>(
    bases: &[Instance<T>],
    grid: &[(f64, f64)],
    master_seed: u64,
    horizon: Option<usize>,
    dir: &Path,
) -> Result<Vec<ManifestRow>, GenError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| GenError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let suite = generate_suite_instances(bases, grid, master_seed, horizon)?;
    for (row, inst) in &suite {
        let path = dir.join(&row.instance);
        fs::write(&path, inst.to_raw().to_text()).map_err(io(&path))?;
    }
    let rows = suite.into_iter().map(|(r, _)| r).collect::<Vec<_>>();
    write_manifest(&dir.join("manifest.csv"), &rows)?;
    Ok(rows)
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<(), GenError> {
    let csv_err = |source| GenError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if rows.is_empty() {
        w.write_record([
            "instance",
            "gd",
            "ld",
            "seed",
            "num_constraints",
            "total_required_rest",
        ])
        .map_err(csv_err)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| GenError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, GenError> {
    let csv_err = |source| GenError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<Vec<_>, _>>().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Instance<i64> {
        random_jobshop("b", 3, 3, 3, 4, 7)
    }

    #[test]
    fn params_validation() {
        let ok = GenParams { gd: 0.25, ld: 0.1, seed: 1, horizon: 100 };
        assert!(ok.validate().is_ok());
        assert_eq!(ok.max_window(), 20);
        assert_eq!(ok.target(), 25);
        assert!(GenParams { gd: 0.0, ..ok }.validate().is_err());
        assert!(GenParams { ld: 1.0, ..ok }.validate().is_err());
        assert!(GenParams { horizon: 14, ..ok }.validate().is_err());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let p = GenParams { gd: 0.25, ld: 0.1, seed: 42, horizon: 100 };
        let a = generate_maxw(&base(), &p).unwrap();
        let b = generate_maxw(&base(), &p).unwrap();
        assert_eq!(a.to_raw().to_text(), b.to_raw().to_text());
        let c = generate_maxw(&base(), &GenParams { seed: 43, ..p }).unwrap();
        assert_ne!(a.maxw(), c.maxw());
    }

    #[test]
    fn small_target_stops_at_first_rest() {
        // ceil(0.01 * 50) = 1 rest shift per operator
        let p = GenParams { gd: 0.01, ld: 0.5, seed: 3, horizon: 50 };
        let inst = generate_maxw(&base(), &p).unwrap();
        for k in 0..3 {
            let mine = inst.maxw().iter().filter(|c| c.operator == k).collect::<Vec<_>>();
            let (last, earlier) = mine.split_last().unwrap();
            assert!(required_rest(*last) >= 1);
            assert!(earlier.iter().all(|c| required_rest(*c) == 0));
        }
    }

    #[test]
    fn rejects_bases_with_constraints() {
        let p = GenParams { gd: 0.25, ld: 0.25, seed: 1, horizon: 30 };
        let once = generate_maxw(&base(), &p).unwrap();
        assert!(matches!(generate_maxw(&once, &p), Err(GenError::HasMaxw(_))));
    }

    #[test]
    fn retry_cap_aborts() {
        // tiny windows and low density: almost every draw rounds to zero rest
        let p = GenParams { gd: 0.4, ld: 0.1, seed: 5, horizon: 15 };
        assert!(matches!(generate_maxw(&base(), &p), Err(GenError::RetryCap { .. })));
    }

    #[test]
    fn grid_has_nine_pairs() {
        let g = density_grid();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], (0.1, 0.1));
        assert_eq!(g[8], (0.4, 0.4));
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(instance_seed("ft06", 0.1, 0.25, 7), instance_seed("ft06", 0.1, 0.25, 7));
        assert_ne!(instance_seed("ft06", 0.1, 0.25, 7), instance_seed("ft06", 0.25, 0.1, 7));
    }

    #[test]
    fn random_jobshop_shape() {
        let b = base();
        assert_eq!(b.num_jobs(), 3);
        for j in 0..3 {
            let mut ops = b.job(j).iter().map(|t| t.operator).collect::<Vec<_>>();
            ops.sort();
            assert_eq!(ops, vec![0, 1, 2]);
        }
        assert!(default_horizon(&b) >= 15);
    }
}
