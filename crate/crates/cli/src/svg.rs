//! Direct SVG emission: circles, polylines and a plain frame, fixed decimal
//! formatting so repeated runs produce byte-identical files.

use lanecast::geometry::Point2;

pub struct SvgCanvas {
    width: f64,
    height: f64,
    min_x: f64,
    min_y: f64,
    scale: f64,
    body: String,
}

impl SvgCanvas {
    /// Canvas mapping the world box onto `width` pixels (height follows the
    /// aspect ratio), y axis pointing up.
    pub fn new(min: Point2, max: Point2, width: f64) -> Self {
        let pad = 0.05 * (max.x - min.x).max(max.y - min.y).max(1.0);
        let (min_x, min_y) = (min.x - pad, min.y - pad);
        let (max_x, max_y) = (max.x + pad, max.y + pad);
        let scale = width / (max_x - min_x);
        let height = (max_y - min_y) * scale;
        Self {
            width,
            height,
            min_x,
            min_y,
            scale,
            body: String::new(),
        }
    }

    fn tx(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.min_x) * self.scale,
            self.height - (p.y - self.min_y) * self.scale,
        )
    }

    pub fn circle(&mut self, center: Point2, radius_px: f64, fill: &str, opacity: f64) {
        let (x, y) = self.tx(center);
        self.body.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{radius_px:.2}\" fill=\"{fill}\" opacity=\"{opacity:.2}\"/>\n"
        ));
    }

    pub fn polyline(&mut self, points: &[Point2], stroke: &str, width_px: f64, opacity: f64) {
        if points.len() < 2 {
            return;
        }
        let coords: Vec<String> = points
            .iter()
            .map(|&p| {
                let (x, y) = self.tx(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        self.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width_px:.2}\" opacity=\"{opacity:.2}\"/>\n",
            coords.join(" ")
        ));
    }

    pub fn cross(&mut self, center: Point2, half_px: f64, stroke: &str) {
        let (x, y) = self.tx(center);
        self.body.push_str(&format!(
            "<path d=\"M {x0:.2} {y:.2} L {x1:.2} {y:.2} M {x:.2} {y0:.2} L {x:.2} {y1:.2}\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>\n",
            x0 = x - half_px,
            x1 = x + half_px,
            y0 = y - half_px,
            y1 = y + half_px,
        ));
    }

    pub fn caption(&mut self, text: &str) {
        self.body.push_str(&format!(
            "<text x=\"8\" y=\"16\" font-family=\"monospace\" font-size=\"12\" fill=\"#333\">{text}</text>\n"
        ));
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n\
             <rect width=\"{w:.2}\" height=\"{h:.2}\" fill=\"white\" stroke=\"#ccc\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// World bounds covering a set of point groups.
pub fn bounds<'a>(groups: impl IntoIterator<Item = &'a [Point2]>) -> (Point2, Point2) {
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for group in groups {
        for p in group {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
    }
    if !min.x.is_finite() {
        (Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0))
    } else {
        (min, max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_wellformed_deterministic_svg() {
        let draw = || {
            let mut c = SvgCanvas::new(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0), 200.0);
            c.circle(Point2::new(0.0, 0.0), 3.0, "red", 1.0);
            c.polyline(
                &[Point2::new(-1.0, 0.0), Point2::new(1.0, 0.5)],
                "#888",
                1.0,
                0.8,
            );
            c.cross(Point2::new(0.5, 0.5), 4.0, "blue");
            c.caption("fixture");
            c.finish()
        };
        let a = draw();
        assert_eq!(a, draw());
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(a.contains("<circle"));
        assert!(a.contains("<polyline"));
    }
}
