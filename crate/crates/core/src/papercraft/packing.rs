//! Shelf packing of axis-aligned rectangles.

/// Places rectangles `(w, h)` left to right on shelves of a strip of width
/// `bin_width`, tallest first. Returns the lower-left corner of each
/// rectangle (input order) and the used height, or `None` if some
/// rectangle is wider than the strip.
pub fn shelf_pack(sizes: &[(f64, f64)], bin_width: f64) -> Option<(Vec<(f64, f64)>, f64)> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].1.total_cmp(&sizes[a].1).then(a.cmp(&b)));
    let mut pos = vec![(0.0, 0.0); sizes.len()];
    let (mut x, mut y, mut shelf_h) = (0.0f64, 0.0f64, 0.0f64);
    for i in order {
        let (w, h) = sizes[i];
        if w > bin_width {
            return None;
        }
        if x + w > bin_width {
            y += shelf_h;
            x = 0.0;
            shelf_h = 0.0;
        }
        pos[i] = (x, y);
        x += w;
        shelf_h = shelf_h.max(h);
    }
    Some((pos, y + shelf_h))
}

/// Largest `s` in `(0, hi]` for which `fits(s)` holds, assuming `fits` is
/// monotone. Returns `None` if nothing fits.
pub fn largest_fitting_scale(hi: f64, fits: impl Fn(f64) -> bool) -> Option<f64> {
    if fits(hi) {
        return Some(hi);
    }
    let mut lo = hi;
    for _ in 0..200 {
        lo *= 0.5;
        if fits(lo) {
            break;
        }
    }
    if !fits(lo) {
        return None;
    }
    let mut top = lo * 2.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + top);
        if fits(mid) {
            lo = mid;
        } else {
            top = mid;
        }
    }
    Some(lo)
}
