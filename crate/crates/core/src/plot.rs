//! History and forecast CSV schemas plus static SVG rendering.
//!
//! Plots are generated from the CSV contents alone and contain no
//! timestamps or other run-varying bytes, so rerunning on identical input
//! produces byte-identical files.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::training::{EpochStats, ForecastRow};

pub fn write_history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for e in history {
        out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_loss));
    }
    out
}

pub fn parse_history_csv(text: &str) -> Result<Vec<EpochStats>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "epoch,train_loss,val_loss" => {}
        _ => return Err(Error::format("expected header 'epoch,train_loss,val_loss'", Some(1))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| Error::format(format!("bad {what}: '{line}'"), Some(i + 1));
        if parts.len() != 3 {
            return Err(bad("column count"));
        }
        rows.push(EpochStats {
            epoch: parts[0].trim().parse().map_err(|_| bad("epoch"))?,
            train_loss: parts[1].trim().parse().map_err(|_| bad("train_loss"))?,
            val_loss: parts[2].trim().parse().map_err(|_| bad("val_loss"))?,
        });
    }
    Ok(rows)
}

pub fn write_forecast_csv(rows: &[ForecastRow]) -> String {
    let mut out = String::from("date,predicted,actual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.date.format("%Y-%m-%d"),
            r.predicted,
            r.actual
        ));
    }
    out
}

pub fn parse_forecast_csv(text: &str) -> Result<Vec<ForecastRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "date,predicted,actual" => {}
        _ => return Err(Error::format("expected header 'date,predicted,actual'", Some(1))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| Error::format(format!("bad {what}: '{line}'"), Some(i + 1));
        if parts.len() != 3 {
            return Err(bad("column count"));
        }
        rows.push(ForecastRow {
            date: NaiveDate::parse_from_str(parts[0].trim(), "%Y-%m-%d")
                .map_err(|_| bad("date"))?,
            predicted: parts[1].trim().parse().map_err(|_| bad("predicted"))?,
            actual: parts[2].trim().parse().map_err(|_| bad("actual"))?,
        });
    }
    Ok(rows)
}

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 54.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Frame {
        // Pad the value axis so flat series still render inside the frame.
        let span = y_max - y_min;
        let pad = if span > 0.0 { 0.05 * span } else { 0.5 * y_max.abs().max(1e-9) };
        Frame { x_min, x_max, y_min: y_min - pad, y_max: y_max + pad }
    }

    fn x(&self, v: f64) -> f64 {
        let t = if self.x_max > self.x_min {
            (v - self.x_min) / (self.x_max - self.x_min)
        } else {
            0.5
        };
        MARGIN_LEFT + t * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let t = (v - self.y_min) / (self.y_max - self.y_min);
        HEIGHT - MARGIN_BOTTOM - t * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 10_000.0 || v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let coords: Vec<String> =
        points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
        coords.join(" ")
    )
}

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    values: &'a [f64],
}

fn chart(title: &str, x_label: &str, x_ticks: &[(f64, String)], series: &[Series]) -> String {
    let y_min = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let y_max = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let frame = Frame::new(0.0, (n.max(2) - 1) as f64, y_min, y_max);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0
    ));

    // Horizontal gridlines with value labels.
    for k in 0..=5 {
        let v = frame.y_min + (frame.y_max - frame.y_min) * k as f64 / 5.0;
        let y = frame.y(v);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            WIDTH - MARGIN_RIGHT
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0,
            format_tick(v)
        ));
    }

    // X ticks.
    for (pos, label) in x_ticks {
        let x = frame.x(*pos);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#999999\" stroke-width=\"1\"/>\n",
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>\n",
            HEIGHT - MARGIN_BOTTOM + 20.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{x_label}</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0
    ));

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{:.2}\" \
         stroke=\"black\" stroke-width=\"1\"/>\n",
        HEIGHT - MARGIN_BOTTOM
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
         stroke=\"black\" stroke-width=\"1\"/>\n",
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM
    ));

    for s in series {
        let pts: Vec<(f64, f64)> = s
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| (frame.x(i as f64), frame.y(v)))
            .collect();
        svg.push_str(&polyline(&pts, s.color));
    }

    // Legend, top right.
    for (k, s) in series.iter().enumerate() {
        let y = MARGIN_TOP + 16.0 * k as f64;
        let x = WIDTH - MARGIN_RIGHT - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"{}\" stroke-width=\"2\"/>\n",
            y - 4.0,
            x + 24.0,
            y - 4.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{y:.2}\">{}</text>\n",
            x + 30.0,
            s.label
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn index_ticks(n: usize, labels: impl Fn(usize) -> String) -> Vec<(f64, String)> {
    if n == 0 {
        return Vec::new();
    }
    let step = (n.max(2) - 1).div_ceil(6).max(1);
    let mut ticks: Vec<(f64, String)> =
        (0..n).step_by(step).map(|i| (i as f64, labels(i))).collect();
    if ticks.last().map(|(p, _)| *p) != Some((n - 1) as f64) {
        ticks.push(((n - 1) as f64, labels(n - 1)));
    }
    ticks
}

/// Loss-vs-epoch curves for the training and validation series.
pub fn loss_curve_svg(history: &[EpochStats]) -> Result<String> {
    if history.is_empty() {
        return Err(Error::argument("history is empty, nothing to plot"));
    }
    let train: Vec<f64> = history.iter().map(|e| e.train_loss).collect();
    let val: Vec<f64> = history.iter().map(|e| e.val_loss).collect();
    let ticks = index_ticks(history.len(), |i| history[i].epoch.to_string());
    Ok(chart(
        "Training and validation loss",
        "epoch",
        &ticks,
        &[
            Series { label: "train loss", color: "#4477aa", values: &train },
            Series { label: "validation loss", color: "#ee7733", values: &val },
        ],
    ))
}

/// Predicted-vs-actual close overlay across the forecast horizon.
pub fn overlay_svg(rows: &[ForecastRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::argument("forecast is empty, nothing to plot"));
    }
    let predicted: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    let actual: Vec<f64> = rows.iter().map(|r| r.actual).collect();
    let ticks = index_ticks(rows.len(), |i| rows[i].date.format("%Y-%m-%d").to_string());
    Ok(chart(
        "Predicted and actual close price",
        "date",
        &ticks,
        &[
            Series { label: "actual", color: "#4477aa", values: &actual },
            Series { label: "predicted", color: "#ee7733", values: &predicted },
        ],
    ))
}
