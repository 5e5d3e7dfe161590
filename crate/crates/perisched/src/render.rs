//! Static SVG renderers: a Gantt chart over one hyperperiod per resource,
//! and the packing view with sub-bin partition lines. Output is a plain
//! string and is byte-deterministic for a given input.

use std::fmt::Write as _;

use crate::model::{Instance, Schedule, Time};
use crate::packing::PlacedRect;

const CELL: f64 = 8.0;
const BAND: f64 = 28.0;
const GAP: f64 = 14.0;
const MARGIN: f64 = 30.0;

fn chain_color(chain: usize) -> String {
    // Fixed hue stride keeps neighbouring chains distinguishable.
    format!("hsl({},65%,62%)", (chain * 47) % 360)
}

fn svg_open(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"monospace\" font-size=\"10\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
}

/// Renders one horizontal band per resource covering `[0, hyperperiod)`;
/// every occurrence of every task is drawn and labelled with its chain.
pub fn render_gantt(instance: &Instance, schedule: &Schedule) -> String {
    let hyper = instance.period_set().hyperperiod();
    let m = instance.num_resources();
    let scale = (CELL * 120.0 / hyper as f64).min(CELL);
    let width = 2.0 * MARGIN + hyper as f64 * scale;
    let height = 2.0 * MARGIN + m as f64 * (BAND + GAP);
    let mut out = String::new();
    svg_open(&mut out, width, height);

    for r in 0..m {
        let y = MARGIN + r as f64 * (BAND + GAP);
        let _ = writeln!(
            out,
            "<text x=\"2\" y=\"{:.1}\">R{}</text>",
            y + BAND / 2.0 + 3.0,
            r + 1
        );
        let _ = writeln!(
            out,
            "<rect x=\"{MARGIN}\" y=\"{y:.1}\" width=\"{:.1}\" height=\"{BAND}\" \
             fill=\"none\" stroke=\"black\"/>",
            hyper as f64 * scale
        );
    }

    let mut blocks: Vec<(usize, Time, Time, usize, String)> = Vec::new();
    for (id, task) in instance.tasks().iter().enumerate() {
        let t = instance.period_of(crate::model::TaskId(id));
        let s = schedule.start[id];
        for j in 0..hyper / t {
            let a = (s % hyper + j * t) % hyper;
            let label = instance.label(crate::model::TaskId(id));
            if a + task.proc_time <= hyper {
                blocks.push((task.resource, a, task.proc_time, task.chain, label));
            } else {
                let head = hyper - a;
                blocks.push((task.resource, a, head, task.chain, label.clone()));
                blocks.push((task.resource, 0, task.proc_time - head, task.chain, label));
            }
        }
    }
    blocks.sort();
    for (r, a, p, chain, label) in blocks {
        let x = MARGIN + a as f64 * scale;
        let y = MARGIN + r as f64 * (BAND + GAP);
        let bw = p as f64 * scale;
        let _ = writeln!(
            out,
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{bw:.1}\" height=\"{BAND}\" \
             fill=\"{}\" stroke=\"black\" stroke-width=\"0.5\"/>",
            chain_color(chain)
        );
        if bw >= 18.0 {
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\">{label}</text>",
                x + 2.0,
                y + BAND / 2.0 + 3.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Renders each resource's w x H packing. Horizontal partition lines mark
/// the sub-bin grid of every height class; thicker lines belong to taller
/// classes.
pub fn render_packing(instance: &Instance, packings: &[Vec<PlacedRect>]) -> String {
    let ps = instance.period_set();
    let (w, h_total) = (ps.w(), ps.height());
    let cell_x = (CELL * 80.0 / w as f64).min(CELL).max(2.0);
    let cell_y = (CELL * 2.0).min(240.0 / h_total as f64).max(4.0);
    let bin_w = w as f64 * cell_x;
    let bin_h = h_total as f64 * cell_y;
    let width = 2.0 * MARGIN + bin_w;
    let height = MARGIN + packings.len() as f64 * (bin_h + GAP + MARGIN);
    let mut out = String::new();
    svg_open(&mut out, width, height);

    for (r, rects) in packings.iter().enumerate() {
        let y0 = MARGIN + r as f64 * (bin_h + GAP + MARGIN);
        let _ = writeln!(
            out,
            "<text x=\"{MARGIN}\" y=\"{:.1}\">resource {}</text>",
            y0 - 4.0,
            r + 1
        );
        for rect in rects {
            let x = MARGIN + rect.x as f64 * cell_x;
            let y = y0 + rect.y as f64 * cell_y;
            let task = instance.task(rect.task);
            let _ = writeln!(
                out,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{:.1}\" height=\"{:.1}\" \
                 fill=\"{}\" stroke=\"black\" stroke-width=\"0.5\"/>",
                rect.width as f64 * cell_x,
                rect.height as f64 * cell_y,
                chain_color(task.chain)
            );
            if rect.width as f64 * cell_x >= 18.0 {
                let _ = writeln!(
                    out,
                    "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
                    x + 2.0,
                    y + rect.height as f64 * cell_y / 2.0 + 3.0,
                    instance.label(rect.task)
                );
            }
        }
        // Sub-bin partition lines, taller classes drawn heavier.
        for j in (0..ps.rho()).rev() {
            let h_j = ps.rect_height(j);
            let stroke = 0.4 + 0.4 * (ps.rho() - j) as f64;
            let mut row = 0;
            while row <= h_total {
                let y = y0 + row as f64 * cell_y;
                let _ = writeln!(
                    out,
                    "<line x1=\"{MARGIN}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
                     stroke=\"black\" stroke-width=\"{stroke:.1}\"/>",
                    MARGIN + bin_w
                );
                row += h_j;
            }
        }
        let _ = writeln!(
            out,
            "<rect x=\"{MARGIN}\" y=\"{y0:.1}\" width=\"{bin_w:.1}\" height=\"{bin_h:.1}\" \
             fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>"
        );
    }
    out.push_str("</svg>\n");
    out
}
