//! sRGB colors, WCAG luminance and contrast, and hue-preserving contrast repair.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ColorError {
    #[error("unparsable color {0:?}")]
    UnparsableColor(String),
    #[error("contrast {target:.2}:1 cannot be reached against this background")]
    Unreachable { target: f64 },
}

/// An sRGB color with channels in `[0, 255]`.
///
/// Channels are real-valued so that repaired colors keep their hue exactly;
/// parsed CSS literals are always integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Rgb {
    pub const BLACK: Rgb = Rgb {
        r: 0.0,
        g: 0.0,
        b: 0.0,
    };
    pub const WHITE: Rgb = Rgb {
        r: 255.0,
        g: 255.0,
        b: 255.0,
    };

    pub fn new(r: f64, g: f64, b: f64) -> Self {
        Rgb {
            r: r.clamp(0.0, 255.0),
            g: g.clamp(0.0, 255.0),
            b: b.clamp(0.0, 255.0),
        }
    }

    pub fn from_u8(r: u8, g: u8, b: u8) -> Self {
        Rgb::new(r as f64, g as f64, b as f64)
    }

    pub fn is_integral(&self) -> bool {
        [self.r, self.g, self.b]
            .iter()
            .all(|c| (c - c.round()).abs() < 1e-9)
    }

    /// CSS literal: `#rrggbb` for integral colors, `rgb(...)` with three decimals otherwise.
    pub fn to_css(&self) -> String {
        if self.is_integral() {
            format!(
                "#{:02x}{:02x}{:02x}",
                self.r.round() as u8,
                self.g.round() as u8,
                self.b.round() as u8
            )
        } else {
            format!(
                "rgb({}, {}, {})",
                fmt_channel(self.r),
                fmt_channel(self.g),
                fmt_channel(self.b)
            )
        }
    }

    pub fn chroma(&self) -> f64 {
        let max = self.r.max(self.g).max(self.b);
        let min = self.r.min(self.g).min(self.b);
        (max - min) / 255.0
    }
}

fn fmt_channel(c: f64) -> String {
    let s = format!("{:.3}", c);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_css())
    }
}

/// A color with straight (non-premultiplied) alpha in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rgba {
    pub rgb: Rgb,
    pub alpha: f64,
}

impl Rgba {
    pub fn opaque(rgb: Rgb) -> Self {
        Rgba { rgb, alpha: 1.0 }
    }

    pub fn over(&self, backdrop: Rgb) -> Rgb {
        let a = self.alpha;
        Rgb::new(
            self.rgb.r * a + backdrop.r * (1.0 - a),
            self.rgb.g * a + backdrop.g * (1.0 - a),
            self.rgb.b * a + backdrop.b * (1.0 - a),
        )
    }
}

const NAMED_COLORS: &[(&str, (u8, u8, u8))] = &[
    ("black", (0, 0, 0)),
    ("silver", (192, 192, 192)),
    ("gray", (128, 128, 128)),
    ("grey", (128, 128, 128)),
    ("white", (255, 255, 255)),
    ("maroon", (128, 0, 0)),
    ("red", (255, 0, 0)),
    ("purple", (128, 0, 128)),
    ("fuchsia", (255, 0, 255)),
    ("green", (0, 128, 0)),
    ("lime", (0, 255, 0)),
    ("olive", (128, 128, 0)),
    ("yellow", (255, 255, 0)),
    ("navy", (0, 0, 128)),
    ("blue", (0, 0, 255)),
    ("teal", (0, 128, 128)),
    ("aqua", (0, 255, 255)),
];

/// Parses a CSS color literal, keeping its alpha.
pub fn parse_color_alpha(text: &str) -> Result<Rgba, ColorError> {
    let bad = || ColorError::UnparsableColor(text.to_string());
    let s = text.trim().to_ascii_lowercase();
    if s == "transparent" {
        return Ok(Rgba {
            rgb: Rgb::BLACK,
            alpha: 0.0,
        });
    }
    if let Some(hex) = s.strip_prefix('#') {
        if !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let digit = |i: usize| u8::from_str_radix(&hex[i..i + 1], 16).unwrap();
        let pair = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).unwrap();
        return match hex.len() {
            3 | 4 => {
                let rgb = Rgb::from_u8(digit(0) * 17, digit(1) * 17, digit(2) * 17);
                let alpha = if hex.len() == 4 {
                    (digit(3) * 17) as f64 / 255.0
                } else {
                    1.0
                };
                Ok(Rgba { rgb, alpha })
            }
            6 | 8 => {
                let rgb = Rgb::from_u8(pair(0), pair(2), pair(4));
                let alpha = if hex.len() == 8 {
                    pair(6) as f64 / 255.0
                } else {
                    1.0
                };
                Ok(Rgba { rgb, alpha })
            }
            _ => Err(bad()),
        };
    }
    let func = s
        .strip_prefix("rgba(")
        .or_else(|| s.strip_prefix("rgb("))
        .and_then(|rest| rest.strip_suffix(')'));
    if let Some(args) = func {
        let parts: Vec<&str> = args
            .split(|c: char| c == ',' || c == '/' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(bad());
        }
        let channel = |p: &str| -> Result<f64, ColorError> {
            match p.strip_suffix('%') {
                Some(pct) => pct.parse::<f64>().map(|v| v * 2.55).map_err(|_| bad()),
                None => p.parse::<f64>().map_err(|_| bad()),
            }
        };
        let rgb = Rgb::new(channel(parts[0])?, channel(parts[1])?, channel(parts[2])?);
        let alpha = match parts.get(3) {
            Some(a) => match a.strip_suffix('%') {
                Some(pct) => pct.parse::<f64>().map_err(|_| bad())? / 100.0,
                None => a.parse::<f64>().map_err(|_| bad())?,
            },
            None => 1.0,
        };
        return Ok(Rgba {
            rgb,
            alpha: alpha.clamp(0.0, 1.0),
        });
    }
    NAMED_COLORS
        .iter()
        .find(|(name, _)| *name == s)
        .map(|(_, (r, g, b))| Rgba::opaque(Rgb::from_u8(*r, *g, *b)))
        .ok_or_else(bad)
}

/// Parses a CSS color literal; translucent colors are composited over white.
pub fn parse_color(text: &str) -> Result<Rgb, ColorError> {
    parse_color_alpha(text).map(|c| c.over(Rgb::WHITE))
}

fn linearize(channel: f64) -> f64 {
    let v = channel / 255.0;
    if v <= 0.03928 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// WCAG relative luminance in `[0, 1]`.
pub fn relative_luminance(c: Rgb) -> f64 {
    0.2126 * linearize(c.r) + 0.7152 * linearize(c.g) + 0.0722 * linearize(c.b)
}

fn ratio_from_luminance(la: f64, lb: f64) -> f64 {
    let (light, dark) = if la >= lb { (la, lb) } else { (lb, la) };
    (light + 0.05) / (dark + 0.05)
}

/// WCAG contrast ratio, symmetric and within `[1, 21]`.
pub fn contrast_ratio(a: Rgb, b: Rgb) -> f64 {
    ratio_from_luminance(relative_luminance(a), relative_luminance(b))
}

/// Hue in degrees `[0, 360)`, saturation and lightness in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsl {
    pub h: f64,
    pub s: f64,
    pub l: f64,
}

pub fn rgb_to_hsl(c: Rgb) -> Hsl {
    let (r, g, b) = (c.r / 255.0, c.g / 255.0, c.b / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = (max + min) / 2.0;
    let d = max - min;
    if d == 0.0 {
        return Hsl { h: 0.0, s: 0.0, l };
    }
    let s = d / (1.0 - (2.0 * l - 1.0).abs());
    let h = if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    Hsl {
        h: h.rem_euclid(360.0),
        s: s.clamp(0.0, 1.0),
        l,
    }
}

pub fn hsl_to_rgb(hsl: Hsl) -> Rgb {
    let Hsl { h, s, l } = hsl;
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    Rgb::new((r1 + m) * 255.0, (g1 + m) * 255.0, (b1 + m) * 255.0)
}

/// Smallest lightness-only change to `fg` that reaches `target` against `bg`.
///
/// Hue and saturation are held fixed in HSL. Both directions are searched by
/// bisection; when both reach the target the smaller lightness change wins
/// (ties go darker).
pub fn repair_contrast(fg: Rgb, bg: Rgb, target: f64) -> Result<Rgb, ColorError> {
    if contrast_ratio(fg, bg) >= target {
        return Ok(fg);
    }
    let hsl = rgb_to_hsl(fg);
    let meets = |l: f64| contrast_ratio(hsl_to_rgb(Hsl { l, ..hsl }), bg) >= target;

    // Feasible lightness values form [0, a] below and [b, 1] above the input.
    let darker = meets(0.0).then(|| {
        let (mut ok, mut bad) = (0.0, hsl.l);
        for _ in 0..60 {
            let mid = (ok + bad) / 2.0;
            if meets(mid) {
                ok = mid;
            } else {
                bad = mid;
            }
        }
        ok
    });
    let lighter = meets(1.0).then(|| {
        let (mut bad, mut ok) = (hsl.l, 1.0);
        for _ in 0..60 {
            let mid = (ok + bad) / 2.0;
            if meets(mid) {
                ok = mid;
            } else {
                bad = mid;
            }
        }
        ok
    });
    let l = match (darker, lighter) {
        (Some(d), Some(u)) => {
            if (hsl.l - d) <= (u - hsl.l) {
                d
            } else {
                u
            }
        }
        (Some(d), None) => d,
        (None, Some(u)) => u,
        (None, None) => return Err(ColorError::Unreachable { target }),
    };
    Ok(hsl_to_rgb(Hsl { l, ..hsl }))
}

/// Contrast thresholds applied to normal and large text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastThresholds {
    pub normal: f64,
    pub large: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdProfile {
    /// WCAG AA: 4.5:1 for normal text, 3:1 for large text.
    #[serde(rename = "AA")]
    #[default]
    Aa,
    /// A flat 3:1 bound for all text.
    #[serde(rename = "paper3to1")]
    ThreeToOne,
}

impl ThresholdProfile {
    pub fn thresholds(self) -> ContrastThresholds {
        match self {
            ThresholdProfile::Aa => ContrastThresholds {
                normal: 4.5,
                large: 3.0,
            },
            ThresholdProfile::ThreeToOne => ContrastThresholds {
                normal: 3.0,
                large: 3.0,
            },
        }
    }
}

impl std::str::FromStr for ThresholdProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aa" => Ok(ThresholdProfile::Aa),
            "paper3to1" | "3to1" => Ok(ThresholdProfile::ThreeToOne),
            other => Err(format!("unknown threshold profile {other:?}")),
        }
    }
}

/// Large text per WCAG: at least 24px, or at least 18.66px when bold.
pub fn is_large_text(font_size_px: f64, font_weight: f64) -> bool {
    font_size_px >= 24.0 || (font_size_px >= 18.66 && font_weight >= 700.0)
}
