use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{median_error, threshold_curve, ErrorMode, FrameError, FrameScore};
use crate::Result;

/// Thresholds called out in summaries, millimeters.
pub const HIGHLIGHT_THRESHOLDS: [f64; 3] = [20.0, 50.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold_mm: f64,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: ErrorMode,
    pub frame_count: usize,
    pub failures: usize,
    pub median_error_mm: Option<f64>,
    pub highlights: Vec<CurvePoint>,
    pub curve: Vec<CurvePoint>,
    pub frames: Vec<FrameScore>,
}

impl EvalReport {
    pub fn new(mode: ErrorMode, frames: Vec<FrameScore>, thresholds: Vec<f64>) -> Result<Self> {
        let errors: Vec<FrameError> = frames.iter().map(|f| f.error).collect();
        let points = |ts: &[f64]| -> Result<Vec<CurvePoint>> {
            Ok(threshold_curve(&errors, ts)?
                .into_iter()
                .zip(ts)
                .map(|(proportion, t)| CurvePoint { threshold_mm: *t, proportion })
                .collect())
        };
        Ok(Self {
            mode,
            frame_count: frames.len(),
            failures: errors.iter().filter(|e| **e == FrameError::Failure).count(),
            median_error_mm: median_error(&errors),
            highlights: points(&HIGHLIGHT_THRESHOLDS)?,
            curve: points(&thresholds)?,
            frames,
        })
    }

    pub fn proportion_at(&self, threshold: f64) -> Result<f64> {
        let errors: Vec<FrameError> = self.frames.iter().map(|f| f.error).collect();
        Ok(threshold_curve(&errors, &[threshold])?[0])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// `threshold_mm,proportion` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold_mm,proportion\n");
        for p in &self.curve {
            writeln!(s, "{},{}", p.threshold_mm, p.proportion).unwrap();
        }
        s
    }

    /// Proportion-below-threshold plot.
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (480.0, 320.0, 40.0);
        let max_t = self.curve.last().map_or(200.0, |p| p.threshold_mm).max(1.0);
        let x = |t: f64| pad + t / max_t * (w - 2.0 * pad);
        let y = |p: f64| h - pad - p * (h - 2.0 * pad);
        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
        writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<path d="M{x0} {y0} H{x1} M{x0} {y0} V{y1}" stroke="black" fill="none"/>"#,
            x0 = x(0.0),
            y0 = y(0.0),
            x1 = x(max_t),
            y1 = y(1.0)
        )
        .unwrap();
        for t in HIGHLIGHT_THRESHOLDS.iter().filter(|t| **t <= max_t) {
            writeln!(
                s,
                r##"<line x1="{xt:.2}" y1="{y0}" x2="{xt:.2}" y2="{y1}" stroke="#bbb" stroke-dasharray="4 3"/><text x="{xt:.2}" y="{ty}" font-size="11" text-anchor="middle">{t}</text>"##,
                xt = x(*t),
                y0 = y(0.0),
                y1 = y(1.0),
                ty = y(0.0) + 14.0
            )
            .unwrap();
        }
        let pts: Vec<String> = self.curve.iter().map(|p| format!("{:.2},{:.2}", x(p.threshold_mm), y(p.proportion))).collect();
        writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##, pts.join(" ")).unwrap();
        let mode = match self.mode {
            ErrorMode::Max => "max",
            ErrorMode::Mean => "mean",
        };
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{mode} joint error threshold (mm)</text>"#,
            w / 2.0,
            h - 6.0
        )
        .unwrap();
        writeln!(s, r#"<text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})" text-anchor="middle">proportion of frames</text>"#, h / 2.0, h / 2.0).unwrap();
        s.push_str("</svg>\n");
        s
    }
}
