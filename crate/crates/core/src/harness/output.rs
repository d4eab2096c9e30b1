//! CSV and legacy VTK writers. Numbers are written with 17 significant digits.

use crate::assembly::Discretization;
use crate::dynamics::ErrorSample;
use crate::error::Result;
use crate::spectrum::SpectrumReport;
use std::fmt::Write as _;
use std::path::Path;

/// Round-trip exact scientific formatting.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn errors_csv(rows: &[ErrorSample]) -> String {
    let mut s = String::from("t,l2_u,linf_u,l2_theta,linf_theta\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f(r.t),
            fmt_f(r.l2_u),
            fmt_f(r.linf_u),
            fmt_f(r.l2_theta),
            fmt_f(r.linf_theta)
        );
    }
    s
}

pub fn spectrum_csv(reports: &[SpectrumReport], count: usize) -> String {
    let mut s = String::from("mass_kind,omega_max_sq,dt_crit");
    for i in 1..=count {
        let _ = write!(s, ",min_eig_{i}");
    }
    s.push('\n');
    for r in reports {
        let _ = write!(s, "{},{},{}", r.mass_kind.name(), fmt_f(r.omega_max_sq), fmt_f(r.dt_crit));
        for i in 0..count {
            s.push(',');
            if let Some(v) = r.min_eigs.get(i) {
                s.push_str(&fmt_f(*v));
            }
        }
        s.push('\n');
    }
    s
}

/// Legacy ASCII structured grid of `u3` on an `n × n` lattice over the
/// parametric grid; points outside the trimmed domain carry `NaN`.
pub fn vtk_snapshot(disc: &Discretization, coeffs: &[f64], n: usize, t: f64) -> Result<String> {
    let (lo, hi) = disc.space.domain();
    let mut pts = String::new();
    let mut vals = String::new();
    for j in 0..n {
        for i in 0..n {
            let xi = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / (n - 1) as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / (n - 1) as f64,
            ];
            let x = disc.chart.point(xi);
            let _ = writeln!(pts, "{} {} {}", fmt_f(x[0]), fmt_f(x[1]), fmt_f(x[2]));
            let e = disc.space.element_index(disc.space.find_element(xi)?);
            let v = if disc.region.contains(xi) && disc.mesh.is_active(e) {
                disc.field_at(coeffs, e, xi)?.u[2]
            } else {
                f64::NAN
            };
            let _ = writeln!(vals, "{}", if v.is_nan() { "NaN".to_string() } else { fmt_f(v) });
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "u3 at t = {}", fmt_f(t));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_GRID");
    let _ = writeln!(s, "DIMENSIONS {n} {n} 1");
    let _ = writeln!(s, "POINTS {} double", n * n);
    s.push_str(&pts);
    let _ = writeln!(s, "POINT_DATA {}", n * n);
    let _ = writeln!(s, "SCALARS u3 double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    s.push_str(&vals);
    Ok(s)
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}
