use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};

/// One learning-curve row, written at every checkpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub episode: u64,
    /// Fraction of training episodes since the previous checkpoint that
    /// reached success.
    pub success_rate: f64,
    pub epsilon: f64,
    /// Mean minibatch loss since the previous checkpoint; NaN if none ran.
    pub mean_loss: f64,
}

/// Outcome of training one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    pub curve: Vec<CurvePoint>,
    /// NaN when the curve has fewer than two points.
    pub auc: f64,
    /// Greedy-validation frequency of each macro duration, index `d − 1`.
    pub durations: Vec<f64>,
    /// Greedy validation success of the best checkpoint; NaN without one.
    pub final_success: f64,
    pub wall_clock: Duration,
    pub checkpoint: Option<PathBuf>,
}

impl RunMetrics {
    pub fn empty(seed: u64) -> Self {
        Self {
            seed,
            curve: Vec::new(),
            auc: f64::NAN,
            durations: Vec::new(),
            final_success: f64::NAN,
            wall_clock: Duration::ZERO,
            checkpoint: None,
        }
    }
}

/// Trapezoidal area under `values` over `episodes`, divided by the span.
pub fn auc(episodes: &[f64], values: &[f64]) -> Result<f64> {
    if episodes.len() != values.len() {
        return Err(Error::invalid("episode and value counts differ"));
    }
    if episodes.len() < 2 {
        return Err(Error::invalid("AUC needs at least two checkpoints"));
    }
    if episodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("checkpoint episodes must increase strictly"));
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("curve values must lie in [0,1]"));
    }
    let area: f64 = episodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(e, v)| (e[1] - e[0]) * (v[0] + v[1]) / 2.0)
        .sum();
    Ok(area / (episodes[episodes.len() - 1] - episodes[0]))
}

/// AUC of a learning curve, NaN when it is too short.
pub fn curve_auc(curve: &[CurvePoint]) -> f64 {
    let e: Vec<f64> = curve.iter().map(|p| p.episode as f64).collect();
    let v: Vec<f64> = curve.iter().map(|p| p.success_rate).collect();
    auc(&e, &v).unwrap_or(f64::NAN)
}

/// Share of timesteps spent inside macros of each duration.
///
/// Each trajectory lists the duration of the active macro at every
/// timestep. The result has `max(max_duration, longest seen)` entries,
/// index `d − 1`, and is empty when there are no timesteps.
pub fn duration_histogram(trajectories: &[Vec<u32>], max_duration: u32) -> Vec<f64> {
    let longest = trajectories.iter().flatten().copied().max().unwrap_or(0);
    let mut counts = vec![0u64; max_duration.max(longest) as usize];
    let mut total = 0u64;
    for &d in trajectories.iter().flatten() {
        if d > 0 {
            counts[d as usize - 1] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Vec::new();
    }
    counts.into_iter().map(|c| c as f64 / total as f64).collect()
}

pub const CURVE_HEADER: [&str; 4] = ["episode", "success_rate", "epsilon", "mean_loss"];
pub const DURATION_HEADER: [&str; 2] = ["duration", "frequency"];
pub const SUMMARY_HEADER: [&str; 3] = ["seed", "auc", "final_success"];

pub fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed-{seed}"))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `summary.csv` under `dir` and, per seed, `learning_curve.csv` and
/// `durations.csv` under `dir/seed-<seed>/`. Summary rows are sorted by seed.
pub fn emit_csv(metrics: &[RunMetrics], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sorted: Vec<&RunMetrics> = metrics.iter().collect();
    sorted.sort_by_key(|m| m.seed);
    for m in &sorted {
        let sd = seed_dir(dir, m.seed);
        fs::create_dir_all(&sd).map_err(|e| Error::io(&sd, e))?;
        write_rows(
            &sd.join("learning_curve.csv"),
            &CURVE_HEADER,
            m.curve.iter().map(|p| {
                vec![
                    p.episode.to_string(),
                    p.success_rate.to_string(),
                    p.epsilon.to_string(),
                    p.mean_loss.to_string(),
                ]
            }),
        )?;
        write_rows(
            &sd.join("durations.csv"),
            &DURATION_HEADER,
            m.durations
                .iter()
                .enumerate()
                .map(|(k, f)| vec![(k + 1).to_string(), f.to_string()]),
        )?;
    }
    write_rows(
        &dir.join("summary.csv"),
        &SUMMARY_HEADER,
        sorted
            .iter()
            .map(|m| vec![m.seed.to_string(), m.auc.to_string(), m.final_success.to_string()]),
    )
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let got = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::parse(1, format!("{}: unexpected header", path.display())));
    }
    r.records()
        .map(|rec| {
            rec.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| csv_err(path, e))
        })
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, row: usize, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::parse(row + 2, format!("{}: bad value `{v}`", path.display())))
}

pub fn read_learning_curve(path: &Path) -> Result<Vec<CurvePoint>> {
    read_rows(path, &CURVE_HEADER)?
        .iter()
        .enumerate()
        .map(|(k, r)| {
            Ok(CurvePoint {
                episode: field(path, k, &r[0])?,
                success_rate: field(path, k, &r[1])?,
                epsilon: field(path, k, &r[2])?,
                mean_loss: field(path, k, &r[3])?,
            })
        })
        .collect()
}

pub fn read_durations(path: &Path) -> Result<Vec<f64>> {
    read_rows(path, &DURATION_HEADER)?
        .iter()
        .enumerate()
        .map(|(k, r)| field(path, k, &r[1]))
        .collect()
}

/// `(seed, auc, final_success)` rows.
pub fn read_summary(path: &Path) -> Result<Vec<(u64, f64, f64)>> {
    read_rows(path, &SUMMARY_HEADER)?
        .iter()
        .enumerate()
        .map(|(k, r)| Ok((field(path, k, &r[0])?, field(path, k, &r[1])?, field(path, k, &r[2])?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn auc_examples() {
        let e = [0.0, 250.0, 500.0, 1000.0];
        assert_eq!(auc(&e, &[1.0; 4]).unwrap(), 1.0);
        assert_eq!(auc(&e, &[0.0; 4]).unwrap(), 0.0);
        let ramp: Vec<f64> = e.iter().map(|x| x / 1000.0).collect();
        assert!((auc(&e, &ramp).unwrap() - 0.5).abs() < 1e-12);
        assert!(auc(&[1.0], &[1.0]).is_err());
        assert!(auc(&[], &[]).is_err());
        assert!(auc(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(auc(&[0.0, 1.0], &[1.0, 1.5]).is_err());
    }

    #[test]
    fn histogram_examples() {
        let mut ep = vec![10u32; 10];
        ep.extend(vec![1u32; 90]);
        let h = duration_histogram(&[ep], 10);
        assert_eq!(h.len(), 10);
        assert!((h[9] - 0.1).abs() < 1e-12);
        assert!((h[0] - 0.9).abs() < 1e-12);

        let h = duration_histogram(&[vec![1; 37]], 5);
        assert_eq!(h, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(duration_histogram(&[], 5).is_empty());
        assert!(duration_histogram(&[vec![], vec![]], 5).is_empty());
    }

    fn sample_metrics(seed: u64) -> RunMetrics {
        RunMetrics {
            seed,
            curve: vec![
                CurvePoint { episode: 250, success_rate: 0.25, epsilon: 0.9, mean_loss: f64::NAN },
                CurvePoint { episode: 500, success_rate: 0.1 + 0.2, epsilon: 1.0 / 3.0, mean_loss: 1e-300 },
            ],
            auc: 0.275,
            durations: vec![0.7, 0.1, 0.2],
            final_success: 0.95,
            wall_clock: Duration::from_millis(5),
            checkpoint: None,
        }
    }

    #[test]
    fn csv_round_trip_and_ordering() {
        let dir = tempfile::tempdir().unwrap();
        let ms = vec![sample_metrics(7), sample_metrics(3)];
        emit_csv(&ms, dir.path()).unwrap();

        let summary = read_summary(&dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.iter().map(|r| r.0).collect::<Vec<_>>(), vec![3, 7]);
        assert_eq!(summary[0].1, 0.275);

        let sd = seed_dir(dir.path(), 7);
        let curve = read_learning_curve(&sd.join("learning_curve.csv")).unwrap();
        assert_eq!(curve.len(), 2);
        assert!(curve[0].mean_loss.is_nan());
        assert_eq!(curve[1], ms[0].curve[1]);
        assert_eq!(curve[0].success_rate, 0.25);
        assert_eq!(read_durations(&sd.join("durations.csv")).unwrap(), ms[0].durations);
    }

    #[test]
    fn empty_metrics_give_header_only_files() {
        let dir = tempfile::tempdir().unwrap();
        emit_csv(&[RunMetrics::empty(1)], dir.path()).unwrap();
        let sd = seed_dir(dir.path(), 1);
        let text = fs::read_to_string(sd.join("learning_curve.csv")).unwrap();
        assert_eq!(text, "episode,success_rate,epsilon,mean_loss\n");
        let text = fs::read_to_string(sd.join("durations.csv")).unwrap();
        assert_eq!(text, "duration,frequency\n");
        let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(text, "seed,auc,final_success\n1,NaN,NaN\n");

        let dir2 = tempfile::tempdir().unwrap();
        emit_csv(&[], dir2.path()).unwrap();
        let text = fs::read_to_string(dir2.path().join("summary.csv")).unwrap();
        assert_eq!(text, "seed,auc,final_success\n");
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let target = blocker.join("out");
        let err = emit_csv(&[sample_metrics(1)], &target).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("file"), "{err}");
    }

    proptest! {
        #[test]
        fn histogram_sums_to_one(eps in proptest::collection::vec(proptest::collection::vec(1u32..12, 0..50), 1..6)) {
            let h = duration_histogram(&eps, 10);
            let total: usize = eps.iter().map(Vec::len).sum();
            if total == 0 {
                prop_assert!(h.is_empty());
            } else {
                prop_assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                // timestep-weighted mean of per-episode histograms
                let width = h.len();
                let mut mix = vec![0.0; width];
                for ep in eps.iter().filter(|e| !e.is_empty()) {
                    let part = duration_histogram(std::slice::from_ref(ep), width as u32);
                    for (m, p) in mix.iter_mut().zip(&part) {
                        *m += p * ep.len() as f64 / total as f64;
                    }
                }
                for (a, b) in h.iter().zip(&mix) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn auc_stays_in_unit_interval(vals in proptest::collection::vec(0.0f64..=1.0, 2..20)) {
            let e: Vec<f64> = (0..vals.len()).map(|k| (k * 250) as f64).collect();
            let a = auc(&e, &vals).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        }
    }
}
