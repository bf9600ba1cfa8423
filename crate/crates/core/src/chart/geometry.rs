use serde::{Deserialize, Serialize};

/// Axis-aligned box in SVG user units, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Rect {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// Width and height of the intersection, each clamped at zero.
    pub fn overlap_extent(&self, o: &Rect) -> (f64, f64) {
        let w = self.right().min(o.right()) - self.x.max(o.x);
        let h = self.bottom().min(o.bottom()) - self.y.max(o.y);
        (w.max(0.0), h.max(0.0))
    }

    /// True when the intersection is thicker than `eps` in both directions.
    pub fn intersects(&self, o: &Rect, eps: f64) -> bool {
        let (w, h) = self.overlap_extent(o);
        w > eps && h > eps
    }

    pub fn contains(&self, o: &Rect, eps: f64) -> bool {
        o.x >= self.x - eps && o.y >= self.y - eps && o.right() <= self.right() + eps && o.bottom() <= self.bottom() + eps
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn touching_boxes_do_not_intersect() {
        let a = Rect::new(0.0, 0.0, 10.0, 10.0);
        assert!(!a.intersects(&Rect::new(10.0, 0.0, 5.0, 5.0), 0.01));
        assert!(a.intersects(&Rect::new(9.0, 9.0, 5.0, 5.0), 0.01));
        assert!(a.contains(&Rect::new(1.0, 1.0, 2.0, 2.0), 0.0));
        assert!(!a.contains(&Rect::new(9.0, 9.0, 2.0, 2.0), 0.0));
    }
}
