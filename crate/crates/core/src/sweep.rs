//! Distance sweeps, storage-time curves and bisection for crossover distances.

use std::str::FromStr;

use serde::Serialize;

use crate::config::ConfigDocument;
use crate::engine::symmetric_summary;
use crate::error::{Error, Result};
use crate::params::SystemConfig;
use crate::rates::{evaluate, Protocol, RateBreakdown};
use crate::stats::par_map;

/// A `START:STOP:STEP` distance grid in km, inclusive of `STOP` when it lands on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && start >= 0.0) {
            return Err(Error::Parse(format!("grid bounds {start}:{stop} must be finite and >= 0")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Parse(format!("grid step {step} must be > 0")));
        }
        if stop < start {
            return Err(Error::Parse(format!("grid stop {stop} is below start {start}")));
        }
        Ok(Grid { start, stop, step })
    }

    /// Number of points, without allocating them.
    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(Error::Parse(format!("grid `{s}` is not START:STOP:STEP")));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("grid `{s}`: `{t}` is not a number")))
        };
        Grid::new(num(a)?, num(b)?, num(c)?)
    }
}

/// One distance of a sweep, with one breakdown per requested protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub distance_km: f64,
    pub results: Vec<RateBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub config: ConfigDocument,
    pub preset: Option<String>,
    pub curve: Option<String>,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch when the sweep was run.
    pub generated_unix_s: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub protocols: Vec<Protocol>,
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

fn check_distances(distances: &[f64]) -> Result<()> {
    if distances.is_empty() {
        return Err(Error::domain("distances", 0.0, "grid must not be empty"));
    }
    for w in distances.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::domain("distances", w[1], "grid must be strictly increasing"));
        }
    }
    Ok(())
}

// No wall clock on bare wasm, where `SystemTime::now` panics.
#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
fn now_unix() -> u64 {
    0
}

#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Evaluates every protocol at every total distance, with `fraction_a` of
/// each distance on leg A.
pub fn sweep_with_split(
    config: &SystemConfig,
    protocols: &[Protocol],
    distances: &[f64],
    fraction_a: f64,
) -> Result<SweepResult> {
    check_distances(distances)?;
    if !(0.0..=1.0).contains(&fraction_a) {
        return Err(Error::domain("fraction_a", fraction_a, "must lie in [0, 1]"));
    }
    let rows: Vec<Result<SweepRow>> = par_map(distances, |&l| {
            let at = |e: Error| Error::AtDistance {
                distance_km: l,
                source: Box::new(e),
            };
            let c = config
                .with_distances(l * fraction_a, l * (1.0 - fraction_a))
                .map_err(at)?;
            let results = protocols
                .iter()
                .map(|&p| evaluate(&c, p))
                .collect::<Result<Vec<_>>>()
                .map_err(at)?;
            Ok(SweepRow {
                distance_km: l,
                results,
            })
    });
    Ok(SweepResult {
        protocols: protocols.to_vec(),
        rows: rows.into_iter().collect::<Result<_>>()?,
        metadata: SweepMetadata {
            config: ConfigDocument::from(config),
            preset: None,
            curve: None,
            seed: None,
            generated_unix_s: now_unix(),
        },
    })
}

/// Symmetric sweep, `L_A = L_B = L/2`.
pub fn sweep(config: &SystemConfig, protocols: &[Protocol], distances: &[f64]) -> Result<SweepResult> {
    sweep_with_split(config, protocols, distances, 0.5)
}

/// Mean storage time of the early memory next to the one-way light time `L/c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoragePoint {
    pub distance_km: f64,
    pub eta: f64,
    pub n_load: f64,
    pub storage_time: f64,
    pub light_time: f64,
}

/// A labelled storage-time curve with the configuration it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StorageCurve {
    pub label: Option<String>,
    pub config: ConfigDocument,
    pub points: Vec<StoragePoint>,
}

pub fn storage_time_curve(config: &SystemConfig, distances: &[f64]) -> Result<Vec<StoragePoint>> {
    check_distances(distances)?;
    distances
        .iter()
        .map(|&l| {
            let s = symmetric_summary(&config.with_total_distance(l)?).map_err(|e| Error::AtDistance {
                distance_km: l,
                source: Box::new(e),
            })?;
            Ok(StoragePoint {
                distance_km: l,
                eta: s.eta,
                n_load: s.n_load,
                storage_time: s.storage_time,
                light_time: light_time(config, l),
            })
        })
        .collect()
}

/// `L/c` in seconds for `L` in km.
pub fn light_time(config: &SystemConfig, distance_km: f64) -> f64 {
    distance_km * 1e3 / config.geometry.light_speed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverKind {
    RateCrossover,
    StorageTimeCrossover,
    RateCutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverReport {
    pub kind: CrossoverKind,
    pub objective: String,
    pub location_km: f64,
    /// Final interval holding the sign change.
    pub bracket: (f64, f64),
    /// Bracket handed to the search.
    pub initial_bracket: (f64, f64),
    pub tolerance: f64,
    pub iterations: u32,
}

/// Bisects `objective` on `bracket` until the interval is no wider than `tol`
/// and reports the midpoint.
pub fn find_crossover<F>(
    kind: CrossoverKind,
    name: &str,
    objective: F,
    bracket: (f64, f64),
    tol: f64,
) -> Result<CrossoverReport>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::domain("bracket", hi, "upper end must exceed lower end"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tol", tol, "must be > 0"));
    }
    let mut f_lo = objective(lo)?;
    let f_hi = objective(hi)?;
    let bracket_error = || Error::Bracket {
        objective: name.to_string(),
        lo: bracket.0,
        hi: bracket.1,
        f_lo,
        f_hi,
    };
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        return Err(bracket_error());
    }
    let mut iterations = 0;
    if f_lo == 0.0 {
        hi = lo;
    } else if f_hi == 0.0 {
        lo = hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = objective(mid)?;
        iterations += 1;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
        } else if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(CrossoverReport {
        kind,
        objective: name.to_string(),
        location_km: 0.5 * (lo + hi),
        bracket: (lo, hi),
        initial_bracket: bracket,
        tolerance: tol,
        iterations,
    })
}

/// `T_st(L) − L/c` under the symmetric split.
pub fn storage_time_objective(config: &SystemConfig) -> impl Fn(f64) -> Result<f64> + '_ {
    move |l| {
        let s = symmetric_summary(&config.with_total_distance(l)?)?;
        Ok(s.storage_time - light_time(config, l))
    }
}

/// `R_first(L) − R_second(L)` in bits/s, each clamped at zero.
pub fn rate_difference_objective(
    config: &SystemConfig,
    first: Protocol,
    second: Protocol,
) -> impl Fn(f64) -> Result<f64> + '_ {
    move |l| {
        let c = config.with_total_distance(l)?;
        Ok(evaluate(&c, first)?.clamped_rate_per_second() - evaluate(&c, second)?.clamped_rate_per_second())
    }
}

/// Signed key rate per pulse of `protocol`; its root is the cut-off distance.
pub fn rate_objective(config: &SystemConfig, protocol: Protocol) -> impl Fn(f64) -> Result<f64> + '_ {
    move |l| Ok(evaluate(&config.with_total_distance(l)?, protocol)?.rate_per_pulse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_parsing() {
        assert_eq!("0:10:5".parse::<Grid>().unwrap().points(), vec![0.0, 5.0, 10.0]);
        assert_eq!("0:0.3:0.1".parse::<Grid>().unwrap().points().len(), 4);
        assert_eq!("2:2:1".parse::<Grid>().unwrap().points(), vec![2.0]);
        assert!("0:10".parse::<Grid>().is_err());
        assert!("0:10:0".parse::<Grid>().is_err());
        assert!("10:0:1".parse::<Grid>().is_err());
        assert!("a:1:1".parse::<Grid>().is_err());
    }

    #[test]
    fn single_point_sweep_equals_point_evaluation() {
        let c = SystemConfig::default();
        let s = sweep(&c, &[Protocol::MaMdiDirect, Protocol::Bb84], &[80.0]).unwrap();
        assert_eq!(s.rows.len(), 1);
        let point = evaluate(&c.with_total_distance(80.0).unwrap(), Protocol::MaMdiDirect).unwrap();
        assert_eq!(s.rows[0].results[0], point);
    }

    #[test]
    fn sweep_rejects_bad_grids_and_names_distance() {
        let c = SystemConfig::default();
        assert!(sweep(&c, &[Protocol::Bb84], &[]).is_err());
        assert!(sweep(&c, &[Protocol::Bb84], &[1.0, 1.0]).is_err());
        let mut bad = c;
        bad.source.kind = crate::params::SourceKind::Decoy;
        bad.source.mu = 0.0;
        match sweep(&bad, &[Protocol::Bb84], &[10.0, 20.0]) {
            Err(Error::AtDistance { distance_km, .. }) => assert_eq!(distance_km, 10.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_rows_reproducible() {
        let c = SystemConfig::default();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 10.0).collect();
        let a = sweep(&c, &Protocol::ALL, &grid).unwrap();
        let b = sweep(&c, &Protocol::ALL, &grid).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn linear_crossover() {
        let r = find_crossover(CrossoverKind::RateCrossover, "linear", |l| Ok(l - 100.0), (0.0, 200.0), 1e-6).unwrap();
        assert!((r.location_km - 100.0).abs() < 1e-6);
        assert!(r.iterations <= (200.0f64 / 1e-6).log2().ceil() as u32);
        assert!(matches!(
            find_crossover(CrossoverKind::RateCrossover, "flat", |_| Ok(1.0), (0.0, 1.0), 1e-3),
            Err(Error::Bracket { .. })
        ));
    }

    proptest! {
        #[test]
        fn bisection_iteration_bound(root in 1.0f64..999.0, lo in 0.0f64..1.0, span in 1000.0f64..2000.0, tol in 1e-6f64..1.0) {
            let r = find_crossover(CrossoverKind::RateCutoff, "line", |l| Ok(root - l), (lo, lo + span), tol).unwrap();
            prop_assert!(r.iterations <= (span / tol).log2().ceil() as u32);
            prop_assert!(r.bracket.1 - r.bracket.0 <= tol);
            prop_assert!((r.location_km - root).abs() <= tol);
        }
    }
}
