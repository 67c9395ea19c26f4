//! Minimal deterministic SVG line plots for convergence histories.

use std::fmt::Write as _;

use crate::trace::Trace;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: &str, x: &[f64], y: &[f64]) -> Self {
        Series {
            label: label.to_string(),
            points: x.iter().copied().zip(y.iter().copied()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Debug)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y_scale: Scale,
    pub series: Vec<Series>,
    /// Slope of a dashed guide line in log-log coordinates.
    pub guide_slope: Option<f64>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    y_scale: Scale,
}

impl Frame {
    fn tx(&self, x: f64) -> f64 {
        LEFT + (x.log10() - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn ty(&self, y: f64) -> f64 {
        let v = match self.y_scale {
            Scale::Log => y.log10(),
            Scale::Linear => y,
        };
        HEIGHT - BOTTOM - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn usable(p: &(f64, f64), scale: Scale) -> bool {
    p.0 > 0.0 && p.0.is_finite() && p.1.is_finite() && (scale == Scale::Linear || p.1 > 0.0)
}

impl Plot {
    fn frame(&self) -> Frame {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for p in s.points.iter().filter(|p| usable(p, self.y_scale)) {
                let y = match self.y_scale {
                    Scale::Log => p.1.log10(),
                    Scale::Linear => p.1,
                };
                xs = (xs.0.min(p.0.log10()), xs.1.max(p.0.log10()));
                ys = (ys.0.min(y), ys.1.max(y));
            }
        }
        if !xs.0.is_finite() {
            xs = (0.0, 1.0);
            ys = (0.0, 1.0);
        }
        let (x0, x1) = (xs.0.floor(), xs.1.ceil().max(xs.0.floor() + 1.0));
        let (y0, y1) = match self.y_scale {
            Scale::Log => (ys.0.floor(), ys.1.ceil().max(ys.0.floor() + 1.0)),
            Scale::Linear => {
                let pad = 0.05 * (ys.1 - ys.0).max(1e-12);
                (ys.0 - pad, ys.1 + pad)
            }
        };
        Frame {
            x0,
            x1,
            y0,
            y1,
            y_scale: self.y_scale,
        }
    }

    pub fn to_svg(&self) -> String {
        let f = self.frame();
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            escape(&self.title)
        );
        let (pl, pr, pt, pb) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            r#"<rect x="{pl:.2}" y="{pt:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            pr - pl,
            pb - pt
        );

        for e in (f.x0 as i32)..=(f.x1 as i32) {
            let x = f.tx(10f64.powi(e));
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{pt:.2}" x2="{x:.2}" y2="{pb:.2}" stroke="#dddddd"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#,
                pb + 16.0
            );
        }
        match f.y_scale {
            Scale::Log => {
                for e in (f.y0 as i32)..=(f.y1 as i32) {
                    let y = f.ty(10f64.powi(e));
                    let _ = writeln!(
                        s,
                        r##"<line x1="{pl:.2}" y1="{y:.2}" x2="{pr:.2}" y2="{y:.2}" stroke="#dddddd"/>"##
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
                        pl - 6.0,
                        y + 4.0
                    );
                }
            }
            Scale::Linear => {
                for i in 0..=4 {
                    let v = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
                    let y = f.ty(v);
                    let _ = writeln!(
                        s,
                        r##"<line x1="{pl:.2}" y1="{y:.2}" x2="{pr:.2}" y2="{y:.2}" stroke="#dddddd"/>"##
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.4}</text>"#,
                        pl - 6.0,
                        y + 4.0
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (pl + pr) / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (pt + pb) / 2.0,
            (pt + pb) / 2.0,
            escape(&self.y_label)
        );

        if let (Some(slope), Scale::Log) = (self.guide_slope, f.y_scale) {
            if let Some(&(xa, ya)) = self
                .series
                .first()
                .and_then(|se| se.points.iter().find(|p| usable(p, Scale::Log)))
            {
                let xb = 10f64.powf(f.x1);
                let yb = ya * (xb / xa).powf(slope);
                let _ = writeln!(
                    s,
                    r##"<line class="guide" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#555555" stroke-dasharray="6 4"/>"##,
                    f.tx(xa),
                    f.ty(ya),
                    f.tx(xb),
                    f.ty(yb)
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}">slope {slope}</text>"#,
                    pr + 8.0,
                    TOP + 18.0 * (self.series.len() as f64 + 1.0)
                );
            }
        }

        for (i, se) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = se
                .points
                .iter()
                .filter(|p| usable(p, f.y_scale))
                .map(|&(x, y)| format!("{:.3},{:.3}", f.tx(x), f.ty(y)))
                .collect();
            if !pts.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                );
            }
            let ly = TOP + 18.0 * (i as f64 + 0.5);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/>"#,
                pr + 8.0,
                pr + 28.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                pr + 32.0,
                ly + 4.0,
                escape(&se.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Square roots of the estimators and of the error quantity against the
/// vertex count, with an `N^(-1/2)` guide.
pub fn estimator_plot(trace: &Trace) -> Plot {
    let n = trace.column(|r| r.n as f64);
    let sqrt = |v: Vec<f64>| v.into_iter().map(f64::sqrt).collect::<Vec<_>>();
    let mut series = vec![
        Series::new("eta_hat", &n, &sqrt(trace.column(|r| r.eta_hat_sq))),
        Series::new("eta", &n, &sqrt(trace.column(|r| r.eta_sq))),
    ];
    let res = trace.column(|r| r.eta_res_sq);
    if res.iter().any(|v| v.is_finite()) {
        series.push(Series::new("eta_res", &n, &sqrt(res)));
    }
    series.push(Series::new("rho", &n, &sqrt(trace.column(|r| r.rho_sq))));
    Plot {
        title: "estimators and error".into(),
        x_label: "N".into(),
        y_label: "square root of squared quantity".into(),
        y_scale: Scale::Log,
        series,
        guide_slope: Some(-0.5),
    }
}

/// Primal and dual energies against the vertex count.
pub fn energy_plot(trace: &Trace) -> Plot {
    let n = trace.column(|r| r.n as f64);
    Plot {
        title: "primal and dual energies".into(),
        x_label: "N".into(),
        y_label: "energy".into(),
        y_scale: Scale::Linear,
        series: vec![
            Series::new("I(u_k)", &n, &trace.column(|r| r.i_primal)),
            Series::new("D(z_k)", &n, &trace.column(|r| r.d_dual)),
        ],
        guide_slope: None,
    }
}
