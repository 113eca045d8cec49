use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::geometry::Vec3;

/// Outcome for one user across all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct UserResult {
    pub user: usize,
    pub position: Vec3,
    /// Base stations used, nearest first.
    pub bs_used: Vec<usize>,
    /// Distance to the nearest base station used.
    pub distance: f64,
    /// Line of sight to at least one base station used.
    pub los: bool,
    /// RMS error over successful trials; `None` if every trial failed.
    pub rms_error: Option<f64>,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkClass {
    Los,
    Nlos,
    All,
}

impl LinkClass {
    fn admits(self, los: bool) -> bool {
        match self {
            LinkClass::Los => los,
            LinkClass::Nlos => !los,
            LinkClass::All => true,
        }
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkClass::Los => "LOS",
            LinkClass::Nlos => "NLOS",
            LinkClass::All => "all",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceBin {
    /// Under 10 m.
    Near,
    /// 10 m to under 25 m.
    Mid,
    /// 25 m and beyond.
    Far,
    All,
}

impl DistanceBin {
    pub fn of(distance: f64) -> Self {
        if distance < 10.0 {
            DistanceBin::Near
        } else if distance < 25.0 {
            DistanceBin::Mid
        } else {
            DistanceBin::Far
        }
    }

    fn admits(self, distance: f64) -> bool {
        self == DistanceBin::All || self == DistanceBin::of(distance)
    }
}

impl fmt::Display for DistanceBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceBin::Near => "<10m",
            DistanceBin::Mid => "10-25m",
            DistanceBin::Far => ">=25m",
            DistanceBin::All => "all",
        })
    }
}

/// Per-user RMS errors of one run and their aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStats {
    pub bs_count: usize,
    pub sigma_aod: f64,
    pub sigma_tof: f64,
    users: Vec<UserResult>,
    cdf: Vec<f64>,
}

impl ErrorStats {
    pub fn new(bs_count: usize, sigma_aod: f64, sigma_tof: f64, users: Vec<UserResult>) -> Self {
        let mut cdf: Vec<f64> = users.iter().filter_map(|u| u.rms_error).collect();
        cdf.sort_by(f64::total_cmp);
        Self {
            bs_count,
            sigma_aod,
            sigma_tof,
            users,
            cdf,
        }
    }

    pub fn users(&self) -> &[UserResult] {
        &self.users
    }

    /// Per-user RMS errors in ascending order.
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn failed_trials(&self) -> usize {
        self.users.iter().map(|u| u.failed_trials).sum()
    }

    /// Mean per-user RMS error over users in the given class and bin.
    pub fn mean(&self, class: LinkClass, bin: DistanceBin) -> Option<f64> {
        let errors: Vec<f64> = self.select(class, bin).collect();
        (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64)
    }

    pub fn count(&self, class: LinkClass, bin: DistanceBin) -> usize {
        self.select(class, bin).count()
    }

    fn select(&self, class: LinkClass, bin: DistanceBin) -> impl Iterator<Item = f64> + '_ {
        self.users
            .iter()
            .filter(move |u| class.admits(u.los) && bin.admits(u.distance))
            .filter_map(|u| u.rms_error)
    }

    /// Linearly interpolated percentile of the per-user errors, `p` in
    /// [0, 100].
    pub fn percentile(&self, p: f64) -> Option<f64> {
        percentile_of_sorted(&self.cdf, p)
    }

    /// Like [`ErrorStats::percentile`], restricted to a class and bin.
    pub fn percentile_in(&self, class: LinkClass, bin: DistanceBin, p: f64) -> Option<f64> {
        let mut errors: Vec<f64> = self.select(class, bin).collect();
        errors.sort_by(f64::total_cmp);
        percentile_of_sorted(&errors, p)
    }

    pub fn median(&self) -> Option<f64> {
        self.percentile(50.0)
    }

    pub fn max(&self) -> Option<f64> {
        self.cdf.last().copied()
    }
}

fn percentile_of_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64))
}

#[derive(Serialize)]
struct CdfRow {
    error_m: f64,
    cumulative_fraction: f64,
}

/// Writes the empirical CDF as `error_m,cumulative_fraction` rows.
pub fn export_cdf<W: Write>(stats: &ErrorStats, sink: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(["error_m", "cumulative_fraction"])?;
    let n = stats.cdf.len();
    for (i, &error_m) in stats.cdf.iter().enumerate() {
        w.serialize(CdfRow {
            error_m,
            cumulative_fraction: (i + 1) as f64 / n as f64,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct UserRow {
    bs_count: usize,
    user: usize,
    x: f64,
    y: f64,
    z: f64,
    los: bool,
    distance_m: f64,
    bs_used: String,
    rms_error_m: Option<f64>,
    failed_trials: usize,
}

/// One row per (run, user).
pub fn write_per_user_csv<W: Write>(runs: &[ErrorStats], sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for stats in runs {
        for u in &stats.users {
            w.serialize(UserRow {
                bs_count: stats.bs_count,
                user: u.user,
                x: u.position.x,
                y: u.position.y,
                z: u.position.z,
                los: u.los,
                distance_m: u.distance,
                bs_used: u.bs_used.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" "),
                rms_error_m: u.rms_error,
                failed_trials: u.failed_trials,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryRow {
    bs_count: usize,
    class: String,
    distance_bin: String,
    users: usize,
    mean_error_cm: Option<f64>,
    median_error_cm: Option<f64>,
    p90_error_cm: Option<f64>,
    max_error_cm: Option<f64>,
}

/// Error statistics in centimeters per base-station count, link class and
/// distance bin.
pub fn write_summary_csv<W: Write>(runs: &[ErrorStats], sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let cm = |v: Option<f64>| v.map(|m| m * 100.0);
    for stats in runs {
        for class in [LinkClass::Los, LinkClass::Nlos, LinkClass::All] {
            for bin in [DistanceBin::Near, DistanceBin::Mid, DistanceBin::Far, DistanceBin::All] {
                w.serialize(SummaryRow {
                    bs_count: stats.bs_count,
                    class: class.to_string(),
                    distance_bin: bin.to_string(),
                    users: stats.count(class, bin),
                    mean_error_cm: cm(stats.mean(class, bin)),
                    median_error_cm: cm(stats.percentile_in(class, bin, 50.0)),
                    p90_error_cm: cm(stats.percentile_in(class, bin, 90.0)),
                    max_error_cm: cm(stats.percentile_in(class, bin, 100.0)),
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
