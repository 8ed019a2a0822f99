//! Grid certificate for the majorization, boundary, concavity and
//! superharmonicity properties of `U`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{u, SpecialFnConfig};
use crate::error::{Error, Result};

const MAJORIZATION_SLACK: f64 = 1e-8;
const BOUNDARY_SLACK: f64 = 1e-8;
const CONCAVITY_SLACK: f64 = 1e-8;
const LAPLACIAN_SLACK: f64 = 1e-6;
/// Circle average minus centre value is `h²/4` times the Laplacian, so this
/// matches the five-point slack in Laplacian units.
const MEAN_VALUE_SLACK: f64 = LAPLACIAN_SLACK / 4.0;
const MEAN_VALUE_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub h: f64,
}

impl CertificateGrid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, h: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max, h].iter().all(|v| v.is_finite());
        if !finite || !(h > 0.0) || x_max <= x_min || y_max <= y_min {
            return Err(Error::Config(format!(
                "bad certificate rectangle [{x_min}, {x_max}]×[{y_min}, {y_max}] with h = {h}"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max, h })
    }

    fn counts(&self) -> (usize, usize) {
        let nx = ((self.x_max - self.x_min) / self.h + 1e-9).floor() as usize + 1;
        let ny = ((self.y_max - self.y_min) / self.h + 1e-9).floor() as usize + 1;
        (nx, ny)
    }

    fn x(&self, i: isize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    fn y(&self, j: isize) -> f64 {
        self.y_min + j as f64 * self.h
    }
}

impl Default for CertificateGrid {
    fn default() -> Self {
        Self { x_min: -3.0, x_max: 3.0, y_min: -1.0, y_max: 3.0, h: 0.05 }
    }
}

/// Outcome of one property over the grid. `worst_slack` is the smallest
/// margin `tolerance − violation` seen (negative means failure).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    pub tolerance: f64,
    pub checked: usize,
    pub worst_slack: f64,
    pub worst_point: [f64; 2],
    pub violations: Vec<[f64; 2]>,
}

impl PropertyCheck {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: true,
            tolerance,
            checked: 0,
            worst_slack: f64::INFINITY,
            worst_point: [f64::NAN, f64::NAN],
            violations: Vec::new(),
        }
    }

    /// `excess` is the quantity that must stay at or below `tolerance`.
    fn record(&mut self, excess: f64, point: [f64; 2]) {
        self.checked += 1;
        let slack = self.tolerance - excess;
        if slack < self.worst_slack || self.worst_slack.is_nan() {
            self.worst_slack = slack;
            self.worst_point = point;
        }
        if !(slack >= 0.0) {
            self.pass = false;
            self.violations.push(point);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub grid: CertificateGrid,
    pub abs_tol: f64,
    pub points: usize,
    pub excluded: usize,
    pub majorization: PropertyCheck,
    pub boundary: PropertyCheck,
    pub concavity: PropertyCheck,
    /// Five-point stencil `U(x±h, y) + U(x, y±h) − 4U(x, y)`.
    pub superharmonicity: PropertyCheck,
    /// Trapezoidal mean of `U` on the circle of radius `h` minus `U(x, y)`;
    /// exact to rounding wherever `U` is harmonic on the closed disk.
    pub mean_value: PropertyCheck,
    /// Largest `|U + |x||` over the grid.
    pub bounded_max: f64,
    pub bounded_point: [f64; 2],
    /// Largest `|Δ_h U|·h²` over grid points where `U` is harmonic.
    pub harmonic_residual_max: f64,
}

impl CertificateReport {
    pub fn pass(&self) -> bool {
        self.properties().iter().all(|p| p.pass) && self.bounded_max.is_finite()
    }

    pub fn properties(&self) -> [&PropertyCheck; 5] {
        [
            &self.majorization,
            &self.boundary,
            &self.concavity,
            &self.superharmonicity,
            &self.mean_value,
        ]
    }

    /// Turns a failed certificate into [`Error::CertificateFailure`] naming
    /// the first failing property and its worst point.
    pub fn into_result(self) -> Result<Self> {
        if let Some(p) = self.properties().into_iter().find(|p| !p.pass) {
            return Err(Error::CertificateFailure {
                property: p.name.clone(),
                violations: p.violations.len(),
                x: p.worst_point[0],
                y: p.worst_point[1],
                slack: p.worst_slack,
            });
        }
        if !self.bounded_max.is_finite() {
            return Err(Error::CertificateFailure {
                property: "bounded".into(),
                violations: 1,
                x: self.bounded_point[0],
                y: self.bounded_point[1],
                slack: f64::NEG_INFINITY,
            });
        }
        Ok(self)
    }
}

/// Distance from `(x, y)` to `{y = 0} ∪ {(0, s) : s ≥ 1}`.
fn seam_distance(x: f64, y: f64) -> f64 {
    let to_axis = y.abs();
    let to_slit = if y >= 1.0 { x.abs() } else { x.hypot(y - 1.0) };
    to_axis.min(to_slit)
}

/// Evaluates `U` on the grid padded by one node on every side and runs the
/// checks at every node farther than `h` from the non-smooth set.
pub fn certify_special_function(cfg: &SpecialFnConfig, grid: &CertificateGrid) -> Result<CertificateReport> {
    let (nx, ny) = grid.counts();
    let (px, py) = (nx + 2, ny + 2);
    let values: Vec<f64> = (0..px * py)
        .into_par_iter()
        .map(|k| {
            let i = (k % px) as isize - 1;
            let j = (k / px) as isize - 1;
            u(grid.x(i), grid.y(j), cfg)
        })
        .collect::<Result<_>>()?;
    let h = grid.h;
    let exclusion = h * (1.0 + 1e-9);
    let circle: Vec<(f64, f64)> = (0..MEAN_VALUE_NODES)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / MEAN_VALUE_NODES as f64;
            (h * t.cos(), h * t.sin())
        })
        .collect();
    let means: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (x, y) = (grid.x((k % nx) as isize), grid.y((k / nx) as isize));
            if seam_distance(x, y) <= exclusion {
                return Ok(None);
            }
            let mut sum = 0.0;
            for &(dx, dy) in &circle {
                sum += u(x + dx, y + dy, cfg)?;
            }
            Ok(Some(sum / MEAN_VALUE_NODES as f64))
        })
        .collect::<Result<_>>()?;
    let at = |i: usize, j: usize| values[(j + 1) * px + (i + 1)];
    let at_signed = |i: isize, j: isize| values[((j + 1) as usize) * px + (i + 1) as usize];

    let mut majorization = PropertyCheck::new("majorization", MAJORIZATION_SLACK);
    let mut boundary = PropertyCheck::new("boundary", BOUNDARY_SLACK);
    let mut concavity = PropertyCheck::new("concavity", CONCAVITY_SLACK);
    let mut superharmonicity = PropertyCheck::new("superharmonicity", LAPLACIAN_SLACK);
    let mut mean_value = PropertyCheck::new("mean_value", MEAN_VALUE_SLACK);
    let mut excluded = 0;
    let mut bounded_max = 0.0_f64;
    let mut bounded_point = [grid.x_min, grid.y_min];
    let mut harmonic_residual_max = 0.0_f64;

    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (grid.x(i as isize), grid.y(j as isize));
            let v = at(i, j);
            let b = (v + x.abs()).abs();
            if !(b <= bounded_max) {
                bounded_max = b;
                bounded_point = [x, y];
            }
            if seam_distance(x, y) <= exclusion {
                excluded += 1;
                continue;
            }
            let p = [x, y];
            let below = if y <= 0.0 { 1.0 } else { 0.0 };
            majorization.record(below - x.abs() - v, p);
            if (y - 1.0).abs() < 1e-9 * h {
                boundary.record(v, p);
            }
            let (si, sj) = (i as isize, j as isize);
            let dxx = at_signed(si - 1, sj) + at_signed(si + 1, sj) - 2.0 * v;
            concavity.record(dxx, p);
            let lap = dxx + at_signed(si, sj - 1) + at_signed(si, sj + 1) - 2.0 * v;
            superharmonicity.record(lap, p);
            if let Some(mean) = means[j * nx + i] {
                mean_value.record(mean - v, p);
            }
            if y > 0.0 {
                harmonic_residual_max = harmonic_residual_max.max(lap.abs());
            }
        }
    }

    Ok(CertificateReport {
        grid: *grid,
        abs_tol: cfg.abs_tol(),
        points: nx * ny,
        excluded,
        majorization,
        boundary,
        concavity,
        superharmonicity,
        mean_value,
        bounded_max,
        bounded_point,
        harmonic_residual_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seam_distance_cases() {
        assert_eq!(seam_distance(0.5, -0.5), 0.5);
        assert_eq!(seam_distance(0.2, 2.0), 0.2);
        assert_eq!(seam_distance(0.0, 0.5), 0.5);
        assert!((seam_distance(0.3, 0.9) - 0.1_f64.hypot(0.3).min(0.9)).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(CertificateGrid::new(0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(CertificateGrid::new(1.0, 0.0, 0.0, 1.0, 0.1).is_err());
        let g = CertificateGrid::default();
        assert_eq!(g.counts(), (121, 81));
    }

    #[test]
    fn coarse_grid_pointwise_checks_pass() {
        let cfg = SpecialFnConfig::new(1e-11, 4000).unwrap();
        let grid = CertificateGrid::new(-1.0, 1.0, -0.5, 1.5, 0.25).unwrap();
        let report = certify_special_function(&cfg, &grid).unwrap();
        assert!(report.majorization.pass && report.boundary.pass && report.concavity.pass);
        assert!(report.mean_value.pass, "{:?}", report.mean_value);
        assert!(report.boundary.checked > 0);
        assert!(report.excluded > 0);
    }

    #[test]
    fn five_point_residual_is_fourth_order_truncation() {
        // U is harmonic near (0, 0.4); the stencil residual must shrink 16x
        // per halving of h, while the circle mean stays at rounding level
        let cfg = SpecialFnConfig::new(1e-12, 4000).unwrap();
        let f = |a: f64, b: f64| u(a, b, &cfg).unwrap();
        let (x, y) = (0.0, 0.4);
        let stencil = |h: f64| f(x - h, y) + f(x + h, y) + f(x, y - h) + f(x, y + h) - 4.0 * f(x, y);
        let ratio = stencil(0.05) / stencil(0.025);
        assert!((ratio - 16.0).abs() < 0.5, "{ratio}");
    }

    #[test]
    fn report_failure_converts_to_error() {
        let cfg = SpecialFnConfig::new(1e-11, 4000).unwrap();
        let grid = CertificateGrid::new(-1.0, 1.0, -0.5, 1.5, 0.25).unwrap();
        let report = certify_special_function(&cfg, &grid).unwrap();
        // the coarse five-point stencil sees truncation error near the corner
        assert!(!report.superharmonicity.pass);
        assert!(matches!(
            report.into_result(),
            Err(Error::CertificateFailure { ref property, .. }) if property == "superharmonicity"
        ));
    }

    #[test]
    fn failing_check_becomes_error() {
        let mut check = PropertyCheck::new("concavity", 1e-8);
        check.record(1.0, [0.5, 0.5]);
        check.record(-1.0, [0.1, 0.1]);
        assert!(!check.pass);
        assert_eq!(check.violations, vec![[0.5, 0.5]]);
        assert_eq!(check.worst_point, [0.5, 0.5]);
    }
}
