//! Run, study and diag orchestration: the reproducibility surface behind
//! the `tricam` binary.
//!
//! A run writes three kinds of artifacts into its output directory:
//!
//! - `diagnostics.csv` — one row per observer call, fixed column order
//!   (see [`crate::diagnostics::CSV_HEADER`]), with a comment line carrying
//!   the manifest hash. Byte-identical for identical configurations.
//! - `snapshot_t*.csv` / `.bin` — optional field snapshots `(x, a, c, b,
//!   u, w)` at requested times (binary: `TRICAMS1` magic, little-endian
//!   f64).
//! - `run_manifest.txt` — resolved configuration, code version, wall
//!   clock. Wall-clock time never enters data files.

use crate::config::{RunConfig, SnapshotFormat, StudyConfig, SweepAxis};
use crate::diagnostics::{
    self, growth_envelope, DiagnosticsRecord, FieldTag, MomentumField, NormTag, Sample,
};
use crate::dynamics::{self, State};
use crate::error::{Error, Result};
use crate::field::{Field, Grid1D};
use crate::initdata::{admissible_profiles, lift_pair, peakon_field, PeakonKind, PeakonParams};
use crate::tolerances as tol;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

/// Everything a finished run leaves behind, in memory and on disk.
#[derive(Debug)]
pub struct RunArtifacts {
    pub final_state: State,
    pub samples: Vec<Sample>,
    pub records: Vec<DiagnosticsRecord>,
    pub out_dir: PathBuf,
    pub diagnostics_csv: PathBuf,
    pub manifest_hash: u64,
}

/// Snapshot of all fields at one time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub grid: Grid1D,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"TRICAMS1";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Execute one run: build data, evolve, stream diagnostics to CSV, write
/// snapshots and the manifest. On blow-up the partial artifacts are kept
/// and the error is propagated.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let profile = cfg.profile()?;
    let (u0, w0) = admissible_profiles(&profile, grid)?;
    let (a0, c0) = lift_pair(&u0, &w0)?;
    let s0 = State::new(0.0, a0, c0)?;
    let opts = cfg.solver_options();
    let hash = cfg.manifest_hash();

    fs::create_dir_all(&cfg.out)?;
    write_manifest(cfg)?;
    let csv_path = cfg.out.join("diagnostics.csv");
    let mut csv = BufWriter::new(fs::File::create(&csv_path)?);
    writeln!(csv, "# tricam diagnostics v1")?;
    writeln!(csv, "# manifest-hash: {hash:016x}")?;
    writeln!(csv, "{}", diagnostics::CSV_HEADER)?;

    let mut samples: Vec<Sample> = Vec::new();
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut io_failure: Option<Error> = None;
    let epsilon = cfg.epsilon;

    // segment boundaries: snapshot times, then t_end
    let mut boundaries = cfg.snapshot_times.clone();
    boundaries.sort_by(f64::total_cmp);
    boundaries.dedup();
    if boundaries.last() != Some(&cfg.t_end) {
        boundaries.push(cfg.t_end);
    }

    let mut current = s0;
    let mut last_observed_t = f64::NEG_INFINITY;
    let evolve_result = (|| -> Result<()> {
        for &boundary in &boundaries {
            let reached = dynamics::evolve(
                &current,
                boundary,
                cfg.time_step(),
                &opts,
                |state, b| {
                    // segment starts re-observe the previous endpoint
                    if state.t() <= last_observed_t {
                        return;
                    }
                    last_observed_t = state.t();
                    let sample = Sample::new(state.clone(), b.clone());
                    match DiagnosticsRecord::measure(&sample, epsilon) {
                        Ok(rec) => {
                            if io_failure.is_none() {
                                if let Err(e) = writeln!(csv, "{}", rec.csv_row()) {
                                    io_failure = Some(e.into());
                                }
                            }
                            records.push(rec);
                        }
                        Err(e) => {
                            if io_failure.is_none() {
                                io_failure = Some(e);
                            }
                        }
                    }
                    samples.push(sample);
                },
            )?;
            current = reached;
            if cfg.snapshot_times.contains(&boundary) {
                let b = dynamics::recover_b(current.a(), current.c(), cfg.backend)?;
                let snap = make_snapshot(&current, &b)?;
                write_snapshot(&snap, cfg, hash)?;
            }
        }
        Ok(())
    })();

    csv.flush()?;
    if let Some(e) = io_failure {
        return Err(e);
    }
    evolve_result?;

    Ok(RunArtifacts {
        final_state: current,
        samples,
        records,
        out_dir: cfg.out.clone(),
        diagnostics_csv: csv_path,
        manifest_hash: hash,
    })
}

fn write_manifest(cfg: &RunConfig) -> Result<()> {
    let path = cfg.out.join("run_manifest.txt");
    let wall = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let body = format!(
        "# tricam run manifest\nversion = {}\nmanifest-hash = {:016x}\nwall-clock-epoch = {}\n\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.manifest_hash(),
        wall,
        cfg.manifest()
    );
    fs::write(path, body)?;
    Ok(())
}

fn make_snapshot(state: &State, b: &Field) -> Result<Snapshot> {
    let u = dynamics::compute_u(state.a())?;
    let w = dynamics::compute_w(state.c())?;
    Ok(Snapshot {
        t: state.t(),
        grid: state.grid(),
        a: state.a().values().to_vec(),
        c: state.c().values().to_vec(),
        b: b.values().to_vec(),
        u: u.values().to_vec(),
        w: w.values().to_vec(),
    })
}

fn snapshot_path(cfg: &RunConfig, t: f64) -> PathBuf {
    let ext = match cfg.snapshot_format {
        SnapshotFormat::Csv => "csv",
        SnapshotFormat::Binary => "bin",
    };
    cfg.out.join(format!("snapshot_t{t:.6}.{ext}"))
}

fn write_snapshot(snap: &Snapshot, cfg: &RunConfig, hash: u64) -> Result<()> {
    let path = snapshot_path(cfg, snap.t);
    match cfg.snapshot_format {
        SnapshotFormat::Csv => write_snapshot_csv(snap, &path, hash),
        SnapshotFormat::Binary => write_snapshot_binary(snap, &path),
    }
}

fn write_snapshot_csv(snap: &Snapshot, path: &Path, hash: u64) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# tricam snapshot v1 t={}", fmt(snap.t))?;
    writeln!(f, "# manifest-hash: {hash:016x}")?;
    writeln!(f, "x,a,c,b,u,w")?;
    for (i, x) in snap.grid.points().enumerate() {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            fmt(x),
            fmt(snap.a[i]),
            fmt(snap.c[i]),
            fmt(snap.b[i]),
            fmt(snap.u[i]),
            fmt(snap.w[i]),
        )?;
    }
    f.flush()?;
    Ok(())
}

fn write_snapshot_binary(snap: &Snapshot, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    f.write_all(SNAPSHOT_MAGIC)?;
    f.write_all(&(snap.grid.n() as u64).to_le_bytes())?;
    f.write_all(&snap.t.to_le_bytes())?;
    f.write_all(&snap.grid.x_min().to_le_bytes())?;
    f.write_all(&snap.grid.x_max().to_le_bytes())?;
    for column in [&snap.a, &snap.c, &snap.b, &snap.u, &snap.w] {
        for v in column.iter() {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

/// Read a snapshot, auto-detecting the binary magic.
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut file = fs::File::open(path)?;
    let mut magic = [0u8; 8];
    let got = file.read(&mut magic)?;
    drop(file);
    if got == 8 && &magic == SNAPSHOT_MAGIC {
        read_snapshot_binary(path)
    } else {
        read_snapshot_csv(path)
    }
}

fn read_snapshot_binary(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path)?;
    let need_header = 8 + 8 + 3 * 8;
    if bytes.len() < need_header {
        return Err(Error::SnapshotFormat("binary snapshot truncated".into()));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let t = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let x_min = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let x_max = f64::from_le_bytes(bytes[32..40].try_into().unwrap());
    let expected = need_header + 5 * n * 8;
    if bytes.len() != expected {
        return Err(Error::SnapshotFormat(format!(
            "binary snapshot length {} does not match header (expected {expected})",
            bytes.len()
        )));
    }
    let grid = Grid1D::new(x_min, x_max, n, true)?;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(5);
    let mut off = need_header;
    for _ in 0..5 {
        let mut col = Vec::with_capacity(n);
        for _ in 0..n {
            col.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        cols.push(col);
    }
    let w = cols.pop().unwrap();
    let u = cols.pop().unwrap();
    let b = cols.pop().unwrap();
    let c = cols.pop().unwrap();
    let a = cols.pop().unwrap();
    Ok(Snapshot {
        t,
        grid,
        a,
        c,
        b,
        u,
        w,
    })
}

fn read_snapshot_csv(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path)?;
    let mut t = 0.0f64;
    let mut xs = Vec::new();
    let mut cols: [Vec<f64>; 5] = Default::default();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        if line.starts_with('#') {
            if let Some(pos) = line.find("t=") {
                t = line[pos + 2..]
                    .trim()
                    .parse()
                    .map_err(|_| parse_err("bad snapshot time".into()))?;
            }
            continue;
        }
        if !saw_header {
            if line.trim() != "x,a,c,b,u,w" {
                return Err(parse_err(format!(
                    "expected snapshot header 'x,a,c,b,u,w', got '{line}'"
                )));
            }
            saw_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(format!("expected 6 columns, got {}", fields.len())));
        }
        let mut parsed = [0.0f64; 6];
        for (k, raw) in fields.iter().enumerate() {
            parsed[k] = raw
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("cannot parse '{raw}'")))?;
        }
        xs.push(parsed[0]);
        for k in 0..5 {
            cols[k].push(parsed[k + 1]);
        }
    }
    if xs.len() < crate::field::MIN_GRID_POINTS {
        return Err(Error::SnapshotFormat(format!(
            "snapshot holds only {} rows",
            xs.len()
        )));
    }
    let dx = xs[1] - xs[0];
    if dx <= 0.0 {
        return Err(Error::SnapshotFormat("x column is not increasing".into()));
    }
    for w in xs.windows(2) {
        if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs().max(1.0) {
            return Err(Error::SnapshotFormat("x column is not uniform".into()));
        }
    }
    let n = xs.len();
    let grid = Grid1D::new(xs[0], xs[0] + n as f64 * dx, n, true)?;
    let [a, c, b, u, w] = cols;
    Ok(Snapshot {
        t,
        grid,
        a,
        c,
        b,
        u,
        w,
    })
}

/// One named offline check on a stored snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagCheck {
    Sign,
    Slope,
    Elliptic,
    H2Gap,
    L1Identity,
}

impl DiagCheck {
    pub const ALL: [DiagCheck; 5] = [
        DiagCheck::Sign,
        DiagCheck::Slope,
        DiagCheck::Elliptic,
        DiagCheck::H2Gap,
        DiagCheck::L1Identity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DiagCheck::Sign => "sign",
            DiagCheck::Slope => "slope",
            DiagCheck::Elliptic => "elliptic",
            DiagCheck::H2Gap => "h2-gap",
            DiagCheck::L1Identity => "l1-identity",
        }
    }
}

impl std::str::FromStr for DiagCheck {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sign" => Ok(Self::Sign),
            "slope" => Ok(Self::Slope),
            "elliptic" => Ok(Self::Elliptic),
            "h2-gap" => Ok(Self::H2Gap),
            "l1-identity" => Ok(Self::L1Identity),
            other => Err(Error::Config {
                key: "checks".into(),
                message: format!("unknown check '{other}'"),
            }),
        }
    }
}

/// Outcome of one offline check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub check: DiagCheck,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
}

/// Report of [`cmd_diag`].
#[derive(Debug, Clone)]
pub struct DiagReport {
    pub snapshot_t: f64,
    pub outcomes: Vec<CheckOutcome>,
}

impl DiagReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn render(&self) -> String {
        let mut out = format!("diag report for snapshot at t = {}\n", self.snapshot_t);
        for o in &self.outcomes {
            out.push_str(&format!(
                "{:<12} {}  measured = {:.3e}  threshold = {:.3e}\n",
                o.check.name(),
                if o.pass { "PASS" } else { "FAIL" },
                o.measured,
                o.threshold,
            ));
        }
        out
    }
}

/// Recompute the requested diagnostics from a stored snapshot.
///
/// Checks run against the *stored* columns: a corrupted `u` column fails
/// the sign check even though `u` could be recomputed from `a`.
pub fn cmd_diag(path: &Path, checks: &[DiagCheck]) -> Result<DiagReport> {
    let snap = read_snapshot(path)?;
    let grid = snap.grid;
    let a = Field::new(grid, snap.a.clone())?;
    let c = Field::new(grid, snap.c.clone())?;
    let b = Field::new(grid, snap.b.clone())?;
    let u = Field::new(grid, snap.u.clone())?;
    let w = Field::new(grid, snap.w.clone())?;

    let mut outcomes = Vec::new();
    for check in checks {
        let outcome = match check {
            DiagCheck::Sign => {
                let floor_u = -tol::SIGN_FLOOR_REL * u.sup_norm();
                let floor_w = -tol::SIGN_FLOOR_REL * w.sup_norm();
                let measured = (u.min_value() - floor_u).min(w.min_value() - floor_w);
                CheckOutcome {
                    check: *check,
                    pass: measured >= 0.0,
                    measured: u.min_value().min(w.min_value()),
                    threshold: floor_u.min(floor_w),
                }
            }
            DiagCheck::Slope => {
                let a_x = a.derivative()?;
                let c_x = c.derivative()?;
                let excess = a_x
                    .zip_with(&a, |dx, v| dx.abs() - v)
                    .max_value()
                    .max(c_x.zip_with(&c, |dx, v| dx.abs() - v).max_value());
                let threshold = tol::SLOPE_EXCESS_REL * a.sup_norm().max(c.sup_norm());
                CheckOutcome {
                    check: *check,
                    pass: excess <= threshold,
                    measured: excess,
                    threshold,
                }
            }
            DiagCheck::Elliptic => {
                let r = dynamics::elliptic_source(&a, &c)?;
                let b_xx = b.second_derivative()?;
                let resid = b
                    .scale(4.0)
                    .add_scaled(&b_xx, -1.0)
                    .add_scaled(&r, -1.0)
                    .sup_norm()
                    / (1.0 + r.sup_norm());
                CheckOutcome {
                    check: *check,
                    pass: resid <= tol::ELLIPTIC_RESIDUAL_REL,
                    measured: resid,
                    threshold: tol::ELLIPTIC_RESIDUAL_REL,
                }
            }
            DiagCheck::H2Gap => {
                let a_x = a.derivative()?;
                let c_x = c.derivative()?;
                let form1 = u.zip_with(&c_x, |p, q| p * q).integrate()?;
                let form2 = -w.zip_with(&a_x, |p, q| p * q).integrate()?;
                let gap = (form1 - form2).abs();
                CheckOutcome {
                    check: *check,
                    pass: gap <= tol::H2_FORM_GAP_ABS,
                    measured: gap,
                    threshold: tol::H2_FORM_GAP_ABS,
                }
            }
            DiagCheck::L1Identity => {
                // only meaningful while the stored momenta are nonnegative
                // (up to one FFT roundtrip of noise)
                if u.min_value() >= -tol::ROUNDOFF_SIGN_FLOOR_REL * u.sup_norm()
                    && w.min_value() >= -tol::ROUNDOFF_SIGN_FLOOR_REL * w.sup_norm()
                {
                    let gap_a = (a.integrate()? - u.integrate()?).abs();
                    let gap_c = (c.integrate()? - w.integrate()?).abs();
                    let scale = u.lp_norm(1.0)?.max(w.lp_norm(1.0)?).max(1.0);
                    let measured = gap_a.max(gap_c) / scale;
                    CheckOutcome {
                        check: *check,
                        pass: measured <= tol::L1_IDENTITY_REL,
                        measured,
                        threshold: tol::L1_IDENTITY_REL,
                    }
                } else {
                    // hypothesis u, w >= 0 not met: vacuously true
                    CheckOutcome {
                        check: *check,
                        pass: true,
                        measured: 0.0,
                        threshold: tol::L1_IDENTITY_REL,
                    }
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(DiagReport {
        snapshot_t: snap.t,
        outcomes,
    })
}

/// Metrics and verdicts of one sweep member.
#[derive(Debug, Clone)]
pub struct StudyMember {
    pub value: f64,
    /// Run failure, if the member did not complete.
    pub failure: Option<String>,
    /// Terminal L2 error against the study's reference run.
    pub terminal_error: Option<f64>,
    /// `‖a0^n - a0‖_{H1}` against the exact peaked ansatz (moll axis).
    pub h1_distance: Option<f64>,
    pub h1_drift: f64,
    pub h2_drift: f64,
    pub h2_gap: f64,
    pub sign_defect_rel: f64,
    pub slope_defect_rel: f64,
    pub elliptic_max: f64,
    pub tv_ax_max: f64,
    /// Running ceiling of `‖u(t)‖_{L1}`; `2x` this value dominates
    /// `TV(a_x)` for admissible runs.
    pub l1_u_max: f64,
    pub envelope_margin: f64,
    pub l1_identity_gap: f64,
    pub verdicts: Vec<(&'static str, bool)>,
}

impl StudyMember {
    pub fn pass(&self) -> bool {
        self.failure.is_none() && self.verdicts.iter().all(|(_, ok)| *ok)
    }
}

/// Aggregate result of [`cmd_study`].
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub axis: SweepAxis,
    pub members: Vec<StudyMember>,
    /// Pairwise convergence-order estimates (dt and grid axes).
    pub orders: Vec<f64>,
    pub summary_csv: PathBuf,
    pub report_txt: PathBuf,
}

impl StudyReport {
    pub fn overall_pass(&self) -> bool {
        self.members.iter().all(|m| m.pass())
    }

    /// Mean of the pairwise order estimates.
    pub fn mean_order(&self) -> Option<f64> {
        if self.orders.is_empty() {
            None
        } else {
            Some(self.orders.iter().sum::<f64>() / self.orders.len() as f64)
        }
    }
}

/// Run metrics needed by the study layer, measured from the collected
/// records and samples of one finished run.
pub fn run_metrics(artifacts: &RunArtifacts) -> Result<StudyMemberMetrics> {
    let records = &artifacts.records;
    if records.is_empty() {
        return Err(Error::TrajectoryTooShort { need: 1, got: 0 });
    }
    let first = &records[0];
    let rel = |x: f64, x0: f64| (x - x0).abs() / x0.abs().max(1e-30);

    let mut h1_drift = 0.0f64;
    let mut h2_drift = 0.0f64;
    let mut h2_gap = 0.0f64;
    let mut sign_defect = 0.0f64;
    let mut slope_defect = 0.0f64;
    let mut elliptic_max = 0.0f64;
    let mut tv_ax_max = 0.0f64;
    let mut l1_u_max = 0.0f64;
    let mut l1_gap = 0.0f64;
    for rec in records {
        h1_drift = h1_drift.max(rel(rec.h1, first.h1));
        h2_drift = h2_drift.max(rel(rec.h2_form1, first.h2_form1));
        h2_gap = h2_gap.max((rec.h2_form1 - rec.h2_form2).abs());
        let sup_u = rec.norms[&(FieldTag::U, NormTag::Sup)].max(1e-30);
        let sup_w = rec.norms[&(FieldTag::W, NormTag::Sup)].max(1e-30);
        sign_defect = sign_defect
            .max((-rec.min_u).max(0.0) / sup_u)
            .max((-rec.min_w).max(0.0) / sup_w);
        let sup_a = rec.norms[&(FieldTag::A, NormTag::Sup)].max(1e-30);
        let sup_c = rec.norms[&(FieldTag::C, NormTag::Sup)].max(1e-30);
        slope_defect = slope_defect
            .max(rec.slope_excess_a.max(0.0) / sup_a)
            .max(rec.slope_excess_c.max(0.0) / sup_c);
        elliptic_max = elliptic_max.max(rec.elliptic_residual);
        tv_ax_max = tv_ax_max.max(rec.tv_ax);
        l1_u_max = l1_u_max.max(rec.norms[&(FieldTag::U, NormTag::L1)]);
        let sign_floor_u = -tol::ROUNDOFF_SIGN_FLOOR_REL * sup_u;
        let sign_floor_w = -tol::ROUNDOFF_SIGN_FLOOR_REL * sup_w;
        if rec.min_u >= sign_floor_u && rec.min_w >= sign_floor_w {
            let scale = rec.norms[&(FieldTag::U, NormTag::L1)]
                .max(rec.norms[&(FieldTag::W, NormTag::L1)])
                .max(1.0);
            l1_gap = l1_gap
                .max(
                    (rec.norms[&(FieldTag::A, NormTag::L1)]
                        - rec.norms[&(FieldTag::U, NormTag::L1)])
                        .abs()
                        / scale,
                )
                .max(
                    (rec.norms[&(FieldTag::C, NormTag::L1)]
                        - rec.norms[&(FieldTag::W, NormTag::L1)])
                        .abs()
                        / scale,
                );
        }
    }

    // envelopes for both momenta at p = 1 and p = 2
    let mut envelope_margin = f64::NEG_INFINITY;
    let mut envelope_ok = true;
    for field in [MomentumField::U, MomentumField::W] {
        for p in [1.0, 2.0] {
            let env = growth_envelope(&artifacts.samples, field, p)?;
            envelope_margin = envelope_margin.max(env.max_violation());
            envelope_ok &= env.holds(tol::ENVELOPE_SLACK_REL);
        }
    }

    Ok(StudyMemberMetrics {
        h1_drift,
        h2_drift,
        h2_gap,
        sign_defect_rel: sign_defect,
        slope_defect_rel: slope_defect,
        elliptic_max,
        tv_ax_max,
        l1_u_max,
        envelope_margin,
        envelope_ok,
        l1_identity_gap: l1_gap,
    })
}

/// Raw metric bundle of one run (no verdicts yet).
#[derive(Debug, Clone, Copy)]
pub struct StudyMemberMetrics {
    pub h1_drift: f64,
    pub h2_drift: f64,
    pub h2_gap: f64,
    pub sign_defect_rel: f64,
    pub slope_defect_rel: f64,
    pub elliptic_max: f64,
    pub tv_ax_max: f64,
    pub l1_u_max: f64,
    pub envelope_margin: f64,
    pub envelope_ok: bool,
    pub l1_identity_gap: f64,
}

fn member_verdicts(m: &StudyMemberMetrics) -> Vec<(&'static str, bool)> {
    vec![
        ("h1-conservation", m.h1_drift <= tol::CONSERVATION_DRIFT_REL),
        ("h2-conservation", m.h2_drift <= tol::CONSERVATION_DRIFT_REL),
        ("h2-form-gap", m.h2_gap <= tol::H2_FORM_GAP_ABS),
        ("sign", m.sign_defect_rel <= tol::SIGN_FLOOR_REL),
        ("slope", m.slope_defect_rel <= tol::SLOPE_EXCESS_REL),
        ("elliptic", m.elliptic_max <= tol::ELLIPTIC_RESIDUAL_REL),
        ("envelope", m.envelope_ok),
        ("l1-identity", m.l1_identity_gap <= tol::L1_IDENTITY_REL),
    ]
}

/// L2 distance between the final states of a member and the reference,
/// subsampling the reference when the grids differ.
fn terminal_error(member: &State, reference: &State) -> Result<f64> {
    let gm = member.grid();
    let gr = reference.grid();
    if !gr.n().is_multiple_of(gm.n()) {
        return Err(Error::Config {
            key: "values".into(),
            message: "reference grid does not subsample onto member grid".into(),
        });
    }
    let stride = gr.n() / gm.n();
    let diff2 = |f: &Field, r: &Field| -> f64 {
        let fv = f.values();
        let rv = r.values();
        let mut acc = 0.0;
        for i in 0..gm.n() {
            let d = fv[i] - rv[i * stride];
            acc += d * d;
        }
        (acc * gm.dx()).sqrt()
    };
    Ok(diff2(member.a(), reference.a()) + diff2(member.c(), reference.c()))
}

/// Execute a sweep: per-member runs (optionally in parallel), a reference
/// run for error normalization on the dt and grid axes, convergence-order
/// estimation, and a summary table with one verdict line per invariant.
/// Member failures are recorded and do not abort the remaining members.
pub fn cmd_study(study: &StudyConfig) -> Result<StudyReport> {
    study.validate()?;
    fs::create_dir_all(&study.base.out)?;

    let member_cfgs: Vec<RunConfig> = study.values.iter().map(|&v| study.member(v)).collect();

    // run members
    let results: Vec<std::result::Result<RunArtifacts, String>> = if study.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = member_cfgs
                .iter()
                .map(|cfg| scope.spawn(move || cmd_run(cfg).map_err(|e| e.to_string())))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("study worker panicked"))
                .collect()
        })
    } else {
        member_cfgs
            .iter()
            .map(|cfg| cmd_run(cfg).map_err(|e| e.to_string()))
            .collect()
    };

    // reference run where the axis needs one; a failed reference only
    // suppresses the error column, it does not abort the sweep
    let reference: Option<RunArtifacts> = match study.sweep {
        SweepAxis::TimeStep => {
            let mut cfg = study.base.clone();
            cfg.dt = Some(study.values[0] / 8.0);
            cfg.out = study.base.out.join("reference");
            cmd_run(&cfg).ok()
        }
        SweepAxis::GridResolution => {
            let mut cfg = study.base.clone();
            cfg.grid_n = 2 * *study.values.last().unwrap() as usize;
            cfg.out = study.base.out.join("reference");
            cmd_run(&cfg).ok()
        }
        SweepAxis::MollificationIndex => None,
    };

    let mut members = Vec::new();
    for (idx, result) in results.iter().enumerate() {
        let value = study.values[idx];
        match result {
            Err(msg) => members.push(StudyMember {
                value,
                failure: Some(msg.clone()),
                terminal_error: None,
                h1_distance: None,
                h1_drift: f64::NAN,
                h2_drift: f64::NAN,
                h2_gap: f64::NAN,
                sign_defect_rel: f64::NAN,
                slope_defect_rel: f64::NAN,
                elliptic_max: f64::NAN,
                tv_ax_max: f64::NAN,
                l1_u_max: f64::NAN,
                envelope_margin: f64::NAN,
                l1_identity_gap: f64::NAN,
                verdicts: vec![("completed", false)],
            }),
            Ok(artifacts) => {
                let metrics = run_metrics(artifacts)?;
                let terminal = match &reference {
                    Some(r) => Some(terminal_error(&artifacts.final_state, &r.final_state)?),
                    None => None,
                };
                let h1_distance = if study.sweep == SweepAxis::MollificationIndex {
                    Some(initial_h1_distance(&member_cfgs[idx], artifacts)?)
                } else {
                    None
                };
                let mut verdicts = member_verdicts(&metrics);
                verdicts.insert(0, ("completed", true));
                members.push(StudyMember {
                    value,
                    failure: None,
                    terminal_error: terminal,
                    h1_distance,
                    h1_drift: metrics.h1_drift,
                    h2_drift: metrics.h2_drift,
                    h2_gap: metrics.h2_gap,
                    sign_defect_rel: metrics.sign_defect_rel,
                    slope_defect_rel: metrics.slope_defect_rel,
                    elliptic_max: metrics.elliptic_max,
                    tv_ax_max: metrics.tv_ax_max,
                    l1_u_max: metrics.l1_u_max,
                    envelope_margin: metrics.envelope_margin,
                    l1_identity_gap: metrics.l1_identity_gap,
                    verdicts,
                });
            }
        }
    }

    // pairwise convergence orders from terminal errors
    let mut orders = Vec::new();
    for w in members.windows(2) {
        if let (Some(e0), Some(e1)) = (w[0].terminal_error, w[1].terminal_error) {
            if e0 > 0.0 && e1 > 0.0 {
                let h0 = effective_resolution(study.sweep, w[0].value);
                let h1_ = effective_resolution(study.sweep, w[1].value);
                orders.push((e1 / e0).ln() / (h1_ / h0).ln());
            }
        }
    }

    let summary_csv = study.base.out.join("summary.csv");
    let report_txt = study.base.out.join("study_report.txt");
    write_study_outputs(study, &members, &orders, &summary_csv, &report_txt)?;

    Ok(StudyReport {
        axis: study.sweep,
        members,
        orders,
        summary_csv,
        report_txt,
    })
}

/// The "mesh parameter" a sweep value represents: dt for time-step sweeps,
/// dx ∝ 1/n for grid sweeps.
fn effective_resolution(axis: SweepAxis, value: f64) -> f64 {
    match axis {
        SweepAxis::TimeStep => value,
        SweepAxis::GridResolution => 1.0 / value,
        SweepAxis::MollificationIndex => 1.0 / value,
    }
}

/// `‖a0^n - a0‖_{H1}` of a member's actual initial lift against the exact
/// peaked ansatz sampled on the same grid.
fn initial_h1_distance(cfg: &RunConfig, artifacts: &RunArtifacts) -> Result<f64> {
    let grid = artifacts.samples[0].state.grid();
    let exact = peakon_field(
        &PeakonParams::new(PeakonKind::AComponent, cfg.peakons_a.clone()),
        grid,
    )?;
    let a0 = artifacts.samples[0].state.a();
    a0.add_scaled(&exact, -1.0).h1_norm()
}

fn write_study_outputs(
    study: &StudyConfig,
    members: &[StudyMember],
    orders: &[f64],
    summary_csv: &Path,
    report_txt: &Path,
) -> Result<()> {
    let hash = study.base.manifest_hash();
    let mut csv = BufWriter::new(fs::File::create(summary_csv)?);
    writeln!(csv, "# tricam study summary v1 axis={}", study.sweep)?;
    writeln!(csv, "# manifest-hash: {hash:016x}")?;
    writeln!(
        csv,
        "value,terminal_error,h1_distance,h1_drift,h2_drift,h2_gap,sign_defect,slope_defect,\
         elliptic_max,tv_ax_max,l1_u_max,envelope_margin,l1_identity_gap,pass"
    )?;
    for m in members {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            m.value,
            m.terminal_error.map_or("nan".into(), fmt),
            m.h1_distance.map_or("nan".into(), fmt),
            fmt(m.h1_drift),
            fmt(m.h2_drift),
            fmt(m.h2_gap),
            fmt(m.sign_defect_rel),
            fmt(m.slope_defect_rel),
            fmt(m.elliptic_max),
            fmt(m.tv_ax_max),
            fmt(m.l1_u_max),
            fmt(m.envelope_margin),
            fmt(m.l1_identity_gap),
            m.pass(),
        )?;
    }
    csv.flush()?;

    let mut txt = String::new();
    txt.push_str(&format!(
        "tricam study report\naxis = {}\nvalues = {:?}\n\n",
        study.sweep, study.values
    ));
    for m in members {
        txt.push_str(&format!("== value {} ==\n", m.value));
        if let Some(f) = &m.failure {
            txt.push_str(&format!("run FAILED: {f}\n\n"));
            continue;
        }
        if let Some(e) = m.terminal_error {
            txt.push_str(&format!("terminal error vs reference: {e:.6e}\n"));
        }
        if let Some(d) = m.h1_distance {
            txt.push_str(&format!("initial-data H1 distance:   {d:.6e}\n"));
        }
        txt.push_str(&format!("max TV(a_x) over run:       {:.6e}\n", m.tv_ax_max));
        for (name, ok) in &m.verdicts {
            txt.push_str(&format!(
                "  {:<16} {}\n",
                name,
                if *ok { "PASS" } else { "FAIL" }
            ));
        }
        txt.push('\n');
    }
    if !orders.is_empty() {
        let mean = orders.iter().sum::<f64>() / orders.len() as f64;
        txt.push_str(&format!(
            "pairwise convergence orders: {orders:?}\nmean order: {mean:.3}\n"
        ));
    }
    txt.push_str(&format!(
        "\noverall: {}\n",
        if members.iter().all(|m| m.pass()) {
            "PASS"
        } else {
            "FAIL"
        }
    ));
    fs::write(report_txt, txt)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("tricam-run-test-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn quick_cfg(tag: &str) -> RunConfig {
        RunConfig {
            grid_n: 256,
            t_end: 0.1,
            dt: Some(0.01),
            stride: 5,
            moll_n: 1, // resolvable at n = 256
            out: temp_dir(tag).join("run"),
            ..RunConfig::default()
        }
    }

    #[test]
    fn zero_run_produces_all_zero_columns() {
        let mut cfg = quick_cfg("zero");
        cfg.profile_name = "zero".into();
        let artifacts = cmd_run(&cfg).unwrap();
        assert!(!artifacts.records.is_empty());
        for rec in &artifacts.records {
            assert_eq!(rec.h1, 0.0);
            assert_eq!(rec.b_sup, 0.0);
            assert_eq!(rec.tv_ax, 0.0);
        }
        let text = fs::read_to_string(&artifacts.diagnostics_csv).unwrap();
        assert!(text.starts_with("# tricam diagnostics v1"));
        assert!(text.contains("# manifest-hash:"));
    }

    #[test]
    fn runs_are_byte_identical() {
        let mut cfg1 = quick_cfg("det1");
        cfg1.profile_name = "gaussian-bump".into();
        let a1 = cmd_run(&cfg1).unwrap();
        let mut cfg2 = cfg1.clone();
        cfg2.out = temp_dir("det2").join("run");
        let a2 = cmd_run(&cfg2).unwrap();
        let t1 = fs::read_to_string(&a1.diagnostics_csv).unwrap();
        let t2 = fs::read_to_string(&a2.diagnostics_csv).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn snapshot_roundtrip_both_formats() {
        for format in [SnapshotFormat::Csv, SnapshotFormat::Binary] {
            let mut cfg = quick_cfg(&format!("snap-{format}"));
            cfg.snapshot_times = vec![0.05];
            cfg.snapshot_format = format;
            let artifacts = cmd_run(&cfg).unwrap();
            let ext = match format {
                SnapshotFormat::Csv => "csv",
                SnapshotFormat::Binary => "bin",
            };
            let path = cfg.out.join(format!("snapshot_t{:.6}.{ext}", 0.05));
            let snap = read_snapshot(&path).unwrap();
            assert_eq!(snap.grid.n(), 256);
            assert!((snap.t - 0.05).abs() < 1e-12);
            // stored fields match the in-memory trajectory at that time
            let sample = artifacts
                .samples
                .iter()
                .find(|s| (s.state.t() - 0.05).abs() < 1e-12)
                .unwrap();
            let max_gap = snap
                .a
                .iter()
                .zip(sample.state.a().values())
                .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()));
            assert!(max_gap < 1e-12);
        }
    }

    #[test]
    fn diag_passes_on_good_snapshot_and_fails_on_corrupt() {
        let mut cfg = quick_cfg("diag");
        // smooth data keeps the slope floor at roundoff on a coarse grid
        cfg.profile_name = "gaussian-bump".into();
        cfg.snapshot_times = vec![0.1];
        let _ = cmd_run(&cfg).unwrap();
        let path = cfg.out.join("snapshot_t0.100000.csv");
        let report = cmd_diag(&path, &DiagCheck::ALL).unwrap();
        assert!(report.all_pass(), "{}", report.render());

        // inject one negative spike into the u column
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mid = lines.len() / 2;
        let mut fields: Vec<String> = lines[mid].split(',').map(String::from).collect();
        fields[4] = "-1.0e0".into();
        lines[mid] = fields.join(",");
        fs::write(&path, lines.join("\n")).unwrap();
        let report = cmd_diag(&path, &[DiagCheck::Sign]).unwrap();
        assert!(!report.all_pass());
    }

    #[test]
    fn diag_accepts_zero_field_snapshot() {
        let mut cfg = quick_cfg("diag-zero");
        cfg.profile_name = "zero".into();
        cfg.snapshot_times = vec![0.1];
        let _ = cmd_run(&cfg).unwrap();
        let report = cmd_diag(&cfg.out.join("snapshot_t0.100000.csv"), &DiagCheck::ALL).unwrap();
        assert!(report.all_pass(), "{}", report.render());
    }

    #[test]
    fn diag_rejects_malformed_snapshot() {
        let dir = temp_dir("diag-bad");
        let path = dir.join("garbage.csv");
        fs::write(&path, "not,a,snapshot\n1,2,3\n").unwrap();
        assert!(cmd_diag(&path, &DiagCheck::ALL).is_err());
    }

    #[test]
    fn blowup_preserves_partial_artifacts() {
        let mut cfg = quick_cfg("blowup");
        cfg.blowup_cap = 1e-9; // below any nonzero data
        let err = cmd_run(&cfg).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
        let text = fs::read_to_string(cfg.out.join("diagnostics.csv")).unwrap();
        // header plus the initial observation survived
        assert!(text.lines().count() >= 4);
    }

    #[test]
    fn small_dt_study_estimates_fourth_order() {
        let mut base = quick_cfg("study-dt");
        base.grid_n = 128;
        base.t_end = 0.2;
        base.stride = 50;
        base.profile_name = "gaussian-bump".into();
        let study = StudyConfig {
            base: base.clone(),
            sweep: SweepAxis::TimeStep,
            values: vec![0.0125, 0.025, 0.05],
            parallel: false,
        };
        let report = cmd_study(&study).unwrap();
        let order = report.mean_order().unwrap();
        assert!(
            (order - 4.0).abs() < 0.5,
            "estimated order {order:.2}, orders {:?}",
            report.orders
        );
        assert!(report.summary_csv.exists());
        assert!(report.report_txt.exists());
    }

    #[test]
    fn moll_study_reports_decreasing_h1_distance() {
        let mut base = quick_cfg("study-moll");
        base.grid_n = 1024;
        base.t_end = 0.05;
        base.stride = 5;
        let study = StudyConfig {
            base,
            sweep: SweepAxis::MollificationIndex,
            values: vec![1.0, 2.0, 4.0],
            parallel: false,
        };
        let report = cmd_study(&study).unwrap();
        // all members complete; the sharper ones are intentionally
        // under-resolved at this toy grid, so production verdicts are not
        // asserted here (the acceptance suite runs the cascade at scale)
        assert!(report.members.iter().all(|m| m.failure.is_none()));
        let d: Vec<f64> = report
            .members
            .iter()
            .map(|m| m.h1_distance.unwrap())
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2], "distances {d:?}");
        // norm columns written
        let text = fs::read_to_string(&report.summary_csv).unwrap();
        assert!(text.contains("h1_distance"));
    }

    #[test]
    fn grid_study_errors_decay_and_parallel_runs() {
        let mut base = quick_cfg("study-grid");
        base.t_end = 0.1;
        base.stride = 10;
        base.profile_name = "gaussian-bump".into();
        let study = StudyConfig {
            base,
            sweep: SweepAxis::GridResolution,
            values: vec![64.0, 128.0, 256.0],
            parallel: true,
        };
        let report = cmd_study(&study).unwrap();
        assert!(report.overall_pass());
        let errs: Vec<f64> = report
            .members
            .iter()
            .map(|m| m.terminal_error.unwrap())
            .collect();
        // spectral refinement: errors fall fast until the time-error floor
        assert!(errs[1] < errs[0], "{errs:?}");
        assert!(errs[2] < errs[1] || errs[2] < 1e-9, "{errs:?}");
    }

    #[test]
    fn study_records_member_failures_and_continues() {
        let mut base = quick_cfg("study-fail");
        base.grid_n = 128;
        base.t_end = 0.05;
        base.profile_name = "gaussian-bump".into();
        base.blowup_cap = 1e-9; // every member blows up immediately
        let study = StudyConfig {
            base,
            sweep: SweepAxis::TimeStep,
            values: vec![0.01, 0.02, 0.04],
            parallel: false,
        };
        let report = cmd_study(&study).unwrap();
        assert_eq!(report.members.len(), 3);
        assert!(report.members.iter().all(|m| m.failure.is_some()));
        assert!(!report.overall_pass());
    }
}
