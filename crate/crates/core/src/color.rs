//! Subtractive CMY color algebra.
//!
//! Colors are linear reflectances of white paper: `(1, 1, 1)` is bare paper,
//! each ink absorbs exactly one additive channel, and overlapping inks multiply.
//! A red, green or blue filter transmits only its own channel, so a structure
//! printed in the matching ink turns black while everything else fades into
//! the filter color.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorRgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl ColorRgb {
    pub const WHITE: ColorRgb = ColorRgb { r: 1.0, g: 1.0, b: 1.0 };
    pub const BLACK: ColorRgb = ColorRgb { r: 0.0, g: 0.0, b: 0.0 };

    /// Builds a color, clamping every channel into `[0, 1]`.
    pub fn new(r: f64, g: f64, b: f64) -> Self {
        ColorRgb {
            r: r.clamp(0.0, 1.0),
            g: g.clamp(0.0, 1.0),
            b: b.clamp(0.0, 1.0),
        }
    }

    pub fn channels(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_channels(c: [f64; 3]) -> Self {
        ColorRgb::new(c[0], c[1], c[2])
    }

    pub fn channel(&self, i: usize) -> f64 {
        self.channels()[i]
    }

    pub fn multiply(&self, other: &ColorRgb) -> ColorRgb {
        ColorRgb {
            r: self.r * other.r,
            g: self.g * other.g,
            b: self.b * other.b,
        }
    }

    /// Ink density per channel, `1 - reflectance`.
    pub fn ink(&self) -> [f64; 3] {
        [1.0 - self.r, 1.0 - self.g, 1.0 - self.b]
    }

    pub fn max_abs_diff(&self, other: &ColorRgb) -> f64 {
        (self.r - other.r)
            .abs()
            .max((self.g - other.g).abs())
            .max((self.b - other.b).abs())
    }
}

impl Default for ColorRgb {
    fn default() -> Self {
        ColorRgb::WHITE
    }
}

/// The three printable inks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hue {
    Cyan,
    Magenta,
    Yellow,
}

impl Hue {
    pub const ALL: [Hue; 3] = [Hue::Cyan, Hue::Magenta, Hue::Yellow];

    pub fn color(self) -> ColorRgb {
        match self {
            Hue::Cyan => ColorRgb { r: 0.0, g: 1.0, b: 1.0 },
            Hue::Magenta => ColorRgb { r: 1.0, g: 0.0, b: 1.0 },
            Hue::Yellow => ColorRgb { r: 1.0, g: 1.0, b: 0.0 },
        }
    }

    /// Index of the additive channel this ink absorbs.
    pub fn absorbed_channel(self) -> usize {
        match self {
            Hue::Cyan => 0,
            Hue::Magenta => 1,
            Hue::Yellow => 2,
        }
    }

    /// The filter under which this hue appears black.
    pub fn matched_filter(self) -> FilterKind {
        match self {
            Hue::Cyan => FilterKind::Red,
            Hue::Magenta => FilterKind::Green,
            Hue::Yellow => FilterKind::Blue,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Hue::Cyan => "cyan",
            Hue::Magenta => "magenta",
            Hue::Yellow => "yellow",
        }
    }
}

impl fmt::Display for Hue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Hue {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cyan" | "c" => Ok(Hue::Cyan),
            "magenta" | "m" => Ok(Hue::Magenta),
            "yellow" | "y" => Ok(Hue::Yellow),
            other => Err(invalid(format!("unknown hue `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Red,
    Green,
    Blue,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Red, FilterKind::Green, FilterKind::Blue];

    pub fn pass_channel(self) -> usize {
        match self {
            FilterKind::Red => 0,
            FilterKind::Green => 1,
            FilterKind::Blue => 2,
        }
    }

    pub fn matched_hue(self) -> Hue {
        match self {
            FilterKind::Red => Hue::Cyan,
            FilterKind::Green => Hue::Magenta,
            FilterKind::Blue => Hue::Yellow,
        }
    }

    /// What bare paper looks like through the filter.
    pub fn color(self) -> ColorRgb {
        let mut c = [0.0; 3];
        c[self.pass_channel()] = 1.0;
        ColorRgb::from_channels(c)
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Red => "red",
            FilterKind::Green => "green",
            FilterKind::Blue => "blue",
        }
    }
}

impl FromStr for FilterKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "red" => Ok(FilterKind::Red),
            "green" => Ok(FilterKind::Green),
            "blue" => Ok(FilterKind::Blue),
            other => Err(invalid(format!("unknown filter `{other}`"))),
        }
    }
}

/// Channel-wise product; the empty product is white.
pub fn composite(colors: &[ColorRgb]) -> ColorRgb {
    colors
        .iter()
        .fold(ColorRgb::WHITE, |acc, c| acc.multiply(c))
}

/// Lays `ink` over `base` with partial coverage `alpha`.
pub fn blend_with_opacity(base: ColorRgb, ink: Hue, alpha: f64) -> Result<ColorRgb> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("opacity {alpha} outside [0, 1]")));
    }
    Ok(blend_color(base, ink.color(), alpha))
}

/// Same attenuation rule for an arbitrary (e.g. shaded) ink color.
pub fn blend_color(base: ColorRgb, ink: ColorRgb, alpha: f64) -> ColorRgb {
    let f = |b: f64, h: f64| b * (1.0 - alpha * (1.0 - h));
    ColorRgb::new(f(base.r, ink.r), f(base.g, ink.g), f(base.b, ink.b))
}

/// Keeps only the filter's pass channel.
pub fn apply_filter(color: ColorRgb, filter: FilterKind) -> ColorRgb {
    let mut c = [0.0; 3];
    let p = filter.pass_channel();
    c[p] = color.channel(p);
    ColorRgb::from_channels(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(r: f64, g: f64, b: f64) -> ColorRgb {
        ColorRgb::new(r, g, b)
    }

    #[test]
    fn pairwise_and_triple_composites() {
        let cyan = Hue::Cyan.color();
        let magenta = Hue::Magenta.color();
        let yellow = Hue::Yellow.color();
        assert_eq!(composite(&[cyan, magenta]), c(0.0, 0.0, 1.0));
        assert_eq!(composite(&[cyan, yellow]), c(0.0, 1.0, 0.0));
        assert_eq!(composite(&[magenta, yellow]), c(1.0, 0.0, 0.0));
        assert_eq!(composite(&[cyan, magenta, yellow]), ColorRgb::BLACK);
        assert_eq!(composite(&[]), ColorRgb::WHITE);
    }

    #[test]
    fn opacity_blending() {
        let w = ColorRgb::WHITE;
        assert_eq!(blend_with_opacity(w, Hue::Cyan, 1.0).unwrap(), c(0.0, 1.0, 1.0));
        assert_eq!(blend_with_opacity(w, Hue::Cyan, 0.5).unwrap(), c(0.5, 1.0, 1.0));
        assert_eq!(
            blend_with_opacity(c(0.0, 1.0, 1.0), Hue::Yellow, 1.0).unwrap(),
            c(0.0, 1.0, 0.0)
        );
        assert_eq!(blend_with_opacity(w, Hue::Magenta, 0.0).unwrap(), w);
        assert!(blend_with_opacity(w, Hue::Cyan, 1.5).is_err());
        assert!(blend_with_opacity(w, Hue::Cyan, -0.1).is_err());
    }

    #[test]
    fn filters() {
        assert_eq!(apply_filter(Hue::Cyan.color(), FilterKind::Red), ColorRgb::BLACK);
        assert_eq!(apply_filter(Hue::Yellow.color(), FilterKind::Blue), ColorRgb::BLACK);
        assert_eq!(apply_filter(ColorRgb::WHITE, FilterKind::Red), c(1.0, 0.0, 0.0));
    }

    #[test]
    fn matched_filter_isolation() {
        for hue in Hue::ALL {
            let matched = hue.matched_filter();
            assert_eq!(matched.matched_hue(), hue);
            assert_eq!(hue.absorbed_channel(), matched.pass_channel());
            assert_eq!(apply_filter(hue.color(), matched), ColorRgb::BLACK);
            for f in FilterKind::ALL.into_iter().filter(|f| *f != matched) {
                assert_eq!(apply_filter(hue.color(), f), f.color());
            }
        }
    }

    #[test]
    fn hue_has_exactly_one_zero_channel() {
        for hue in Hue::ALL {
            let ch = hue.color().channels();
            assert_eq!(ch.iter().filter(|v| **v == 0.0).count(), 1);
            assert_eq!(ch[hue.absorbed_channel()], 0.0);
        }
    }

    fn color() -> impl Strategy<Value = ColorRgb> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(r, g, b)| c(r, g, b))
    }

    fn filter() -> impl Strategy<Value = FilterKind> {
        prop_oneof![
            Just(FilterKind::Red),
            Just(FilterKind::Green),
            Just(FilterKind::Blue)
        ]
    }

    proptest! {
        #[test]
        fn composite_is_commutative_and_darkening(a in color(), b in color(), d in color()) {
            let ab = composite(&[a, b]);
            prop_assert_eq!(ab, composite(&[b, a]));
            let left = composite(&[composite(&[a, b]), d]);
            let right = composite(&[a, composite(&[b, d])]);
            prop_assert!(left.max_abs_diff(&right) <= 1e-15);
            for (x, y) in ab.channels().iter().zip(a.channels()) {
                prop_assert!(*x <= y);
            }
            prop_assert_eq!(composite(&[a, ColorRgb::WHITE]), a);
        }

        #[test]
        fn filter_pass_channel_is_product(a in color(), b in color(), f in filter()) {
            let p = f.pass_channel();
            let out = apply_filter(composite(&[a, b]), f);
            prop_assert_eq!(out.channel(p), a.channel(p) * b.channel(p));
            let once = apply_filter(a, f);
            prop_assert_eq!(apply_filter(once, f), once);
            prop_assert_eq!(once.channel(p), a.channel(p));
        }
    }
}
