//! Angular and endpoint error between flow fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectories::Patch;
use crate::video_io::FlowField;

/// Angle between the space-time vectors `(u, v, 1)`, in degrees.
pub fn angular_error(est: (f64, f64), gt: (f64, f64)) -> f64 {
    angular_error_rad(est, gt).to_degrees()
}

pub fn angular_error_rad(est: (f64, f64), gt: (f64, f64)) -> f64 {
    let dot = est.0 * gt.0 + est.1 * gt.1 + 1.0;
    let ne = (est.0 * est.0 + est.1 * est.1 + 1.0).sqrt();
    let ng = (gt.0 * gt.0 + gt.1 * gt.1 + 1.0).sqrt();
    (dot / (ne * ng)).clamp(-1.0, 1.0).acos()
}

pub fn endpoint_error(est: (f64, f64), gt: (f64, f64)) -> f64 {
    (est.0 - gt.0).hypot(est.1 - gt.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Degrees,
    Radians,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchError {
    pub patch: Patch,
    pub ae: f64,
    pub ee: f64,
    pub pixel_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mean_ae: f64,
    pub mean_ee: f64,
    pub pixel_count: usize,
    pub ae_unit: AngleUnit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_patch: Option<Vec<PatchError>>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str = "N,range,AE,EE";

    /// Row for a patch-size sweep table.
    pub fn csv_row(&self, patch_size: usize, range: usize) -> String {
        format!(
            "{patch_size},{range},{:.4},{:.4}",
            self.mean_ae, self.mean_ee
        )
    }

    /// Same report with AE in `unit`.
    pub fn in_unit(mut self, unit: AngleUnit) -> Self {
        let conv = |x: f64| match (self.ae_unit, unit) {
            (AngleUnit::Degrees, AngleUnit::Radians) => x.to_radians(),
            (AngleUnit::Radians, AngleUnit::Degrees) => x.to_degrees(),
            _ => x,
        };
        self.mean_ae = conv(self.mean_ae);
        if let Some(pp) = &mut self.per_patch {
            for p in pp {
                p.ae = conv(p.ae);
            }
        }
        self.ae_unit = unit;
        self
    }
}

fn check_dims(est: &FlowField, gt: &FlowField) -> Result<()> {
    if est.dims() != gt.dims() {
        return Err(Error::Shape(format!(
            "estimate is {}x{}, ground truth is {}x{}",
            est.width(),
            est.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok(())
}

/// Sums of (AE, EE, count) over jointly valid pixels of a rectangle.
fn accumulate(
    est: &FlowField,
    gt: &FlowField,
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
) -> (f64, f64, usize) {
    let (mut ae, mut ee, mut n) = (0.0, 0.0, 0);
    for y in y0..y1 {
        for x in x0..x1 {
            if let (Some(e), Some(g)) = (est.get(x, y), gt.get(x, y)) {
                let e = (f64::from(e.0), f64::from(e.1));
                let g = (f64::from(g.0), f64::from(g.1));
                ae += angular_error(e, g);
                ee += endpoint_error(e, g);
                n += 1;
            }
        }
    }
    (ae, ee, n)
}

/// Unweighted per-pixel means over pixels valid in both fields.
pub fn evaluate_field(est: &FlowField, gt: &FlowField) -> Result<EvalReport> {
    check_dims(est, gt)?;
    let (ae, ee, n) = accumulate(est, gt, 0, 0, est.width(), est.height());
    if n == 0 {
        return Err(Error::NoValidPixels);
    }
    Ok(EvalReport {
        mean_ae: ae / n as f64,
        mean_ee: ee / n as f64,
        pixel_count: n,
        ae_unit: AngleUnit::Degrees,
        per_patch: None,
    })
}

/// [`evaluate_field`] plus per-patch means. Patches without a jointly valid
/// pixel are left out of the table.
pub fn evaluate_patches(est: &FlowField, gt: &FlowField, patches: &[Patch]) -> Result<EvalReport> {
    let mut report = evaluate_field(est, gt)?;
    let (w, h) = (est.width() as i64, est.height() as i64);
    let mut rows = Vec::new();
    for &p in patches {
        let x0 = p.x.clamp(0, w) as usize;
        let y0 = p.y.clamp(0, h) as usize;
        let x1 = (p.x + p.width as i64).clamp(0, w) as usize;
        let y1 = (p.y + p.height as i64).clamp(0, h) as usize;
        let (ae, ee, n) = accumulate(est, gt, x0, y0, x1, y1);
        if n > 0 {
            rows.push(PatchError {
                patch: p,
                ae: ae / n as f64,
                ee: ee / n as f64,
                pixel_count: n,
            });
        }
    }
    report.per_patch = Some(rows);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(angular_error((0.0, 0.0), (0.0, 0.0)), 0.0);
        assert!((angular_error((1.0, 0.0), (0.0, 1.0)) - 60.0).abs() < 1e-9);
        assert!(angular_error((3.0, 4.0), (3.0, 4.0)).abs() < 1e-9);
        assert_eq!(endpoint_error((3.0, 4.0), (0.0, 0.0)), 5.0);
        assert!((endpoint_error((1.0, 1.0), (-1.0, -1.0)) - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identical_fields() {
        let f = FlowField::constant(6, 5, 1.5, -2.0);
        let r = evaluate_field(&f, &f).unwrap();
        assert_eq!((r.mean_ae, r.mean_ee, r.pixel_count), (0.0, 0.0, 30));
    }

    #[test]
    fn half_and_half() {
        let gt = FlowField::zeros(4, 2);
        let mut est = FlowField::zeros(4, 2);
        for x in 0..4 {
            est.set(x, 1, 2.0, 0.0);
        }
        assert_eq!(evaluate_field(&est, &gt).unwrap().mean_ee, 1.0);
    }

    #[test]
    fn masks_and_shapes() {
        let mut gt = FlowField::zeros(3, 3);
        for y in 0..3 {
            for x in 0..3 {
                gt.invalidate(x, y);
            }
        }
        let est = FlowField::zeros(3, 3);
        assert!(matches!(
            evaluate_field(&est, &gt),
            Err(Error::NoValidPixels)
        ));
        assert!(matches!(
            evaluate_field(&est, &FlowField::zeros(3, 4)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn shrinking_mask_only_changes_aggregation() {
        let gt = FlowField::zeros(2, 1);
        let mut est = FlowField::zeros(2, 1);
        est.set(0, 0, 3.0, 4.0);
        est.set(1, 0, 1.0, 0.0);
        assert_eq!(evaluate_field(&est, &gt).unwrap().mean_ee, 3.0);
        est.invalidate(1, 0);
        assert_eq!(evaluate_field(&est, &gt).unwrap().mean_ee, 5.0);
    }

    #[test]
    fn per_patch_and_units() {
        let gt = FlowField::zeros(4, 2);
        let mut est = FlowField::zeros(4, 2);
        est.set(3, 0, 1.0, 0.0);
        let patches = [Patch::square(0, 0, 2), Patch::square(2, 0, 2)];
        let r = evaluate_patches(&est, &gt, &patches).unwrap();
        let pp = r.per_patch.as_ref().unwrap();
        assert_eq!(pp[0].ee, 0.0);
        assert_eq!(pp[1].ee, 0.25);
        let rad = r.clone().in_unit(AngleUnit::Radians);
        assert!((rad.mean_ae - r.mean_ae.to_radians()).abs() < 1e-15);
        assert_eq!(
            r.csv_row(81, 12),
            format!("81,12,{:.4},{:.4}", r.mean_ae, r.mean_ee)
        );
    }
}
