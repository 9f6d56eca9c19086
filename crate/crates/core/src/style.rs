//! A deliberately small cascade: inline styles, `<style>` rules with a single
//! id, class or tag selector, inheritance of color and font, and nearest
//! ancestor background.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{parse_color_alpha, Rgb, Rgba};
use crate::dom::{DomTree, Element, Node, NodePath};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StyleError {
    #[error("background is an image or gradient")]
    Unresolvable,
    #[error("node is not part of this tree")]
    NodeNotInTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedStyle {
    pub foreground: Rgb,
    pub background: Rgb,
    pub font_size_px: f64,
    pub font_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Id(String),
    Class(String),
    Tag(String),
}

impl Selector {
    fn parse(s: &str) -> Option<Selector> {
        let s = s.trim();
        let valid = |name: &str| {
            !name.is_empty()
                && name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        };
        if let Some(id) = s.strip_prefix('#') {
            valid(id).then(|| Selector::Id(id.to_string()))
        } else if let Some(class) = s.strip_prefix('.') {
            valid(class).then(|| Selector::Class(class.to_string()))
        } else {
            valid(s).then(|| Selector::Tag(s.to_ascii_lowercase()))
        }
    }

    fn matches(&self, el: &Element) -> bool {
        match self {
            Selector::Id(id) => el.attr("id") == Some(id.as_str()),
            Selector::Class(class) => el
                .attr("class")
                .is_some_and(|c| c.split_whitespace().any(|t| t == class)),
            Selector::Tag(tag) => el.tag == *tag,
        }
    }

    /// Cascade tier; higher wins.
    fn tier(&self) -> u8 {
        match self {
            Selector::Tag(_) => 0,
            Selector::Class(_) => 1,
            Selector::Id(_) => 2,
        }
    }
}

pub type Declaration = (String, String);

/// Splits `a: b; c: d` into lowercase property names and trimmed values.
pub fn parse_declarations(style: &str) -> Vec<Declaration> {
    style
        .split(';')
        .filter_map(|decl| {
            let (name, value) = decl.split_once(':')?;
            let name = name.trim().to_ascii_lowercase();
            let value = value.trim().trim_end_matches("!important").trim();
            (!name.is_empty() && !value.is_empty()).then(|| (name, value.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StyleRule {
    pub selector: Selector,
    pub declarations: Vec<Declaration>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stylesheet {
    pub rules: Vec<StyleRule>,
}

impl Stylesheet {
    /// Collects the rules of every `<style>` element in the document. Rules with
    /// selectors outside the supported subset are skipped, as are at-rules.
    pub fn from_tree(tree: &DomTree) -> Self {
        let mut sheet = Stylesheet::default();
        for e in tree.elements() {
            if e.element.tag == "style" {
                sheet.add_source(&e.element.direct_text());
            }
        }
        sheet
    }

    pub fn add_source(&mut self, css: &str) {
        let css = strip_comments(css);
        let mut rest = css.as_str();
        while let Some(open) = rest.find('{') {
            let prelude = rest[..open].trim();
            let Some(close) = matching_brace(&rest[open..]).map(|c| open + c) else {
                break;
            };
            let body = &rest[open + 1..close];
            rest = &rest[close + 1..];
            if prelude.starts_with('@') {
                continue;
            }
            let declarations = parse_declarations(body);
            for sel in prelude.split(',') {
                if let Some(selector) = Selector::parse(sel) {
                    self.rules.push(StyleRule {
                        selector,
                        declarations: declarations.clone(),
                    });
                }
            }
        }
    }

    /// Declarations that apply to `el`, lowest priority first: tag rules,
    /// class rules, id rules, then the inline `style` attribute.
    pub fn declarations_for(&self, el: &Element) -> Vec<Declaration> {
        let mut out = Vec::new();
        for tier in 0..=2 {
            for rule in &self.rules {
                if rule.selector.tier() == tier && rule.selector.matches(el) {
                    out.extend(rule.declarations.iter().cloned());
                }
            }
        }
        if let Some(inline) = el.attr("style") {
            out.extend(parse_declarations(inline));
        }
        out
    }

    pub fn declares(&self, el: &Element, property: &str) -> bool {
        self.declarations_for(el).iter().any(|(n, _)| n == property)
    }
}

fn strip_comments(css: &str) -> String {
    let mut out = String::with_capacity(css.len());
    let mut rest = css;
    while let Some(start) = rest.find("/*") {
        out.push_str(&rest[..start]);
        match rest[start + 2..].find("*/") {
            Some(end) => rest = &rest[start + 2 + end + 2..],
            None => {
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn matching_brace(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Background {
    Color(Rgba),
    Image,
    None,
}

fn parse_background(value: &str) -> Background {
    let v = value.to_ascii_lowercase();
    if v.contains("url(") || v.contains("gradient(") {
        return Background::Image;
    }
    // Shorthand: take the first token that parses as a color.
    for token in split_css_tokens(&v) {
        if let Ok(c) = parse_color_alpha(&token) {
            return Background::Color(c);
        }
    }
    Background::None
}

/// Whitespace split that keeps parenthesized groups together.
fn split_css_tokens(v: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0;
    for c in v.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth -= 1;
                cur.push(c);
            }
            c if c.is_whitespace() && depth == 0 => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn ua_font_size(tag: &str) -> Option<f64> {
    match tag {
        "h1" => Some(32.0),
        "h2" => Some(24.0),
        "h3" => Some(18.72),
        "h4" => Some(16.0),
        "h5" => Some(13.28),
        "h6" => Some(10.72),
        _ => None,
    }
}

fn ua_bold(tag: &str) -> bool {
    matches!(
        tag,
        "h1" | "h2" | "h3" | "h4" | "h5" | "h6" | "b" | "strong" | "th"
    )
}

fn parse_font_size(value: &str, parent_px: f64) -> Option<f64> {
    let v = value.trim().to_ascii_lowercase();
    let keyword = match v.as_str() {
        "xx-small" => Some(9.0),
        "x-small" => Some(10.0),
        "small" => Some(13.0),
        "medium" => Some(16.0),
        "large" => Some(18.0),
        "x-large" => Some(24.0),
        "xx-large" => Some(32.0),
        "smaller" => Some(parent_px / 1.2),
        "larger" => Some(parent_px * 1.2),
        _ => None,
    };
    if keyword.is_some() {
        return keyword;
    }
    let num = |suffix: &str| {
        v.strip_suffix(suffix)
            .and_then(|n| n.trim().parse::<f64>().ok())
    };
    if let Some(px) = num("px") {
        Some(px)
    } else if let Some(pt) = num("pt") {
        Some(pt * 4.0 / 3.0)
    } else if let Some(rem) = num("rem") {
        Some(rem * 16.0)
    } else if let Some(em) = num("em") {
        Some(em * parent_px)
    } else {
        num("%").map(|pct| pct / 100.0 * parent_px)
    }
}

fn parse_font_weight(value: &str, parent: f64) -> Option<f64> {
    match value.trim().to_ascii_lowercase().as_str() {
        "normal" => Some(400.0),
        "bold" => Some(700.0),
        "bolder" => Some(if parent < 600.0 { 700.0 } else { 900.0 }),
        "lighter" => Some(if parent > 500.0 { 400.0 } else { 100.0 }),
        other => other.parse::<f64>().ok(),
    }
}

/// Resolves styles against one document's stylesheet.
#[derive(Debug, Clone)]
pub struct StyleResolver {
    pub sheet: Stylesheet,
}

impl StyleResolver {
    pub fn new(tree: &DomTree) -> Self {
        StyleResolver {
            sheet: Stylesheet::from_tree(tree),
        }
    }

    pub fn resolve(&self, tree: &DomTree, path: &NodePath) -> Result<ResolvedStyle, StyleError> {
        let target = tree.get(path).ok_or(StyleError::NodeNotInTree)?;
        let mut chain = tree.ancestors(path);
        chain.push(target);

        let mut fg = Rgba::opaque(Rgb::BLACK);
        let mut bg = Rgb::WHITE;
        let mut over_image = false;
        let mut size = 16.0;
        let mut weight = 400.0;
        for el in chain {
            if let Some(px) = ua_font_size(&el.tag) {
                size = px;
            }
            if ua_bold(&el.tag) {
                weight = 700.0;
            }
            for (name, value) in self.sheet.declarations_for(el) {
                match name.as_str() {
                    "color" => {
                        if let Ok(c) = parse_color_alpha(&value) {
                            fg = c;
                        }
                    }
                    "background" | "background-color" => match parse_background(&value) {
                        Background::Color(c) => {
                            bg = c.over(bg);
                            if c.alpha >= 1.0 {
                                over_image = false;
                            }
                        }
                        Background::Image => over_image = true,
                        Background::None => {}
                    },
                    "background-image" => {
                        if parse_background(&value) == Background::Image {
                            over_image = true;
                        }
                    }
                    "font-size" => {
                        if let Some(px) = parse_font_size(&value, size) {
                            size = px.max(0.0);
                        }
                    }
                    "font-weight" => {
                        if let Some(w) = parse_font_weight(&value, weight) {
                            weight = w;
                        }
                    }
                    "font" => {
                        for token in split_css_tokens(&value) {
                            let token = token.split('/').next().unwrap_or_default().to_string();
                            if let Some(w) = parse_font_weight(&token, weight) {
                                weight = w;
                            } else if let Some(px) = parse_font_size(&token, size) {
                                size = px.max(0.0);
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        if over_image {
            return Err(StyleError::Unresolvable);
        }
        Ok(ResolvedStyle {
            foreground: fg.over(bg),
            background: bg,
            font_size_px: size,
            font_weight: weight,
        })
    }
}

/// One-shot resolution; builds the document stylesheet on every call.
pub fn resolve_effective_style(
    tree: &DomTree,
    path: &NodePath,
) -> Result<ResolvedStyle, StyleError> {
    StyleResolver::new(tree).resolve(tree, path)
}

/// Sets one property in an element's inline style, keeping other declarations.
pub fn set_inline_property(el: &mut Element, property: &str, value: &str) {
    let mut decls = el.attr("style").map(parse_declarations).unwrap_or_default();
    match decls.iter_mut().find(|(n, _)| n == property) {
        Some(slot) => slot.1 = value.to_string(),
        None => decls.push((property.to_string(), value.to_string())),
    }
    let style = decls
        .iter()
        .map(|(n, v)| format!("{n}: {v}"))
        .collect::<Vec<_>>()
        .join("; ");
    el.set_attr("style", style);
}

/// True when some element of the subtree rooted at `el` declares `property`.
pub fn subtree_declares(sheet: &Stylesheet, el: &Element, property: &str) -> bool {
    sheet.declares(el, property)
        || el
            .children
            .iter()
            .any(|c| matches!(c, Node::Element(child) if subtree_declares(sheet, child, property)))
}
