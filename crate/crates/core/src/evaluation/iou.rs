use crate::model::BoundingBox;

/// Intersection over union of two boxes, in `[0, 1]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x.max(b.x);
    let ih = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn identical() {
        let a = bx(3.5, 1.0, 10.0, 7.0);
        assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn disjoint() {
        assert_eq!(iou(&bx(0.0, 0.0, 10.0, 10.0), &bx(20.0, 20.0, 5.0, 5.0)), 0.0);
        // touching edges share no area
        assert_eq!(iou(&bx(0.0, 0.0, 10.0, 10.0), &bx(10.0, 0.0, 5.0, 5.0)), 0.0);
    }

    #[test]
    fn half_shifted() {
        // 50 / (100 + 100 - 50)
        let v = iou(&bx(0.0, 0.0, 10.0, 10.0), &bx(5.0, 0.0, 10.0, 10.0));
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn contained() {
        let v = iou(&bx(0.0, 0.0, 10.0, 10.0), &bx(2.0, 2.0, 5.0, 5.0));
        assert!((v - 0.25).abs() < 1e-15);
    }
}
