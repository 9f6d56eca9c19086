//! The ten WCAG2 checks and checker-style reports.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{contrast_ratio, is_large_text, ContrastThresholds, ThresholdProfile};
use crate::dom::{DomTree, Element, ElementRef, XPath};
use crate::style::{subtree_declares, StyleResolver};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Snippets longer than this are cut and suffixed with `...`.
pub const SNIPPET_MAX_CHARS: usize = 120;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("no reports to summarize")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Vision,
    Language,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    TextContrastSufficient,
    ImgAltValid,
    StyleColorMisuse,
    CaptionTrackExists,
    SvgGraphicsLabelled,
    AriaContentInLandmark,
    HtmlLangExists,
    PageTitleExists,
    SkipMainExists,
    TextBlockHeading,
}

impl RuleId {
    pub const ALL: [RuleId; 10] = [
        RuleId::TextContrastSufficient,
        RuleId::ImgAltValid,
        RuleId::StyleColorMisuse,
        RuleId::CaptionTrackExists,
        RuleId::SvgGraphicsLabelled,
        RuleId::AriaContentInLandmark,
        RuleId::HtmlLangExists,
        RuleId::PageTitleExists,
        RuleId::SkipMainExists,
        RuleId::TextBlockHeading,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            RuleId::TextContrastSufficient => "text_contrast_sufficient",
            RuleId::ImgAltValid => "img_alt_valid",
            RuleId::StyleColorMisuse => "style_color_misuse",
            RuleId::CaptionTrackExists => "caption_track_exists",
            RuleId::SvgGraphicsLabelled => "svg_graphics_labelled",
            RuleId::AriaContentInLandmark => "aria_content_in_landmark",
            RuleId::HtmlLangExists => "html_lang_exists",
            RuleId::PageTitleExists => "page_title_exists",
            RuleId::SkipMainExists => "skip_main_exists",
            RuleId::TextBlockHeading => "text_block_heading",
        }
    }

    pub fn from_slug(slug: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.slug() == slug)
    }

    pub fn category(self) -> Category {
        match self {
            RuleId::TextContrastSufficient
            | RuleId::ImgAltValid
            | RuleId::StyleColorMisuse
            | RuleId::CaptionTrackExists
            | RuleId::SvgGraphicsLabelled => Category::Vision,
            _ => Category::Language,
        }
    }

    /// Documentation slug printed on the `Help:` line.
    pub fn help(self) -> String {
        format!("docs/rules/{}.md", self.slug())
    }

    fn index(self) -> usize {
        RuleId::ALL.iter().position(|r| *r == self).unwrap_or(0)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub profile: ThresholdProfile,
    pub contrast: ContrastThresholds,
    /// A text block with more words than this needs a preceding heading.
    pub text_block_words: usize,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig::with_profile(ThresholdProfile::Aa)
    }
}

impl RuleConfig {
    pub fn with_profile(profile: ThresholdProfile) -> Self {
        RuleConfig {
            profile,
            contrast: profile.thresholds(),
            text_block_words: 60,
        }
    }

    pub fn contrast_threshold(&self, font_size_px: f64, font_weight: f64) -> f64 {
        if is_large_text(font_size_px, font_weight) {
            self.contrast.large
        } else {
            self.contrast.normal
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: RuleId,
    pub category: Category,
    pub xpath: XPath,
    pub snippet: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub doc_id: String,
    pub total: usize,
    pub counts: BTreeMap<RuleId, usize>,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn new(doc_id: impl Into<String>, violations: Vec<Violation>) -> Self {
        let mut counts: BTreeMap<RuleId, usize> = RuleId::ALL.iter().map(|r| (*r, 0)).collect();
        for v in &violations {
            *counts.entry(v.rule).or_default() += 1;
        }
        ViolationReport {
            doc_id: doc_id.into(),
            total: violations.len(),
            counts,
            violations,
        }
    }

    pub fn count(&self, rule: RuleId) -> usize {
        self.counts.get(&rule).copied().unwrap_or(0)
    }

    pub fn category_count(&self, category: Category) -> usize {
        self.counts
            .iter()
            .filter(|(r, _)| r.category() == category)
            .map(|(_, n)| n)
            .sum()
    }

    /// The checker's plain-text block format, one block per violation.
    pub fn to_text(&self) -> String {
        self.violations
            .iter()
            .map(|v| {
                format!(
                    "Level: violation\nXPath: {}\nSnippet: {}\nHelp: {}\n- Message: {}\n",
                    v.xpath,
                    v.snippet,
                    v.rule.help(),
                    v.message
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Versioned<'a> {
            schema_version: u32,
            #[serde(flatten)]
            report: &'a ViolationReport,
        }
        let mut s = serde_json::to_string_pretty(&Versioned {
            schema_version: REPORT_SCHEMA_VERSION,
            report: self,
        })
        .expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn snippet(el: &Element) -> String {
    let tag = el.start_tag().replace(['\n', '\r'], " ");
    if tag.chars().count() <= SNIPPET_MAX_CHARS {
        tag
    } else {
        let mut cut: String = tag.chars().take(SNIPPET_MAX_CHARS - 3).collect();
        cut.push_str("...");
        cut
    }
}

const NOT_RENDERED: &[&str] = &[
    "head", "script", "style", "noscript", "template", "title", "svg", "option",
];
const LANDMARK_TAGS: &[&str] = &["header", "nav", "main", "footer", "aside"];
const SECTIONING: &[&str] = &["body", "section", "article", "aside", "nav"];
pub const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];
const FORM_CONTROLS: &[&str] = &["input", "select", "textarea"];

/// Landmark roles accepted for body-level content.
pub const LANDMARK_ROLES: [&str; 8] = [
    "banner",
    "navigation",
    "main",
    "contentinfo",
    "complementary",
    "search",
    "form",
    "region",
];

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Shared per-document state for running the rules.
pub struct Checker<'a> {
    pub tree: &'a DomTree,
    pub cfg: &'a RuleConfig,
    pub resolver: StyleResolver,
    pub elements: Vec<ElementRef<'a>>,
}

impl<'a> Checker<'a> {
    pub fn new(tree: &'a DomTree, cfg: &'a RuleConfig) -> Self {
        Checker {
            tree,
            cfg,
            resolver: StyleResolver::new(tree),
            elements: tree.elements(),
        }
    }

    fn in_unrendered(&self, e: &ElementRef<'_>) -> bool {
        NOT_RENDERED.contains(&e.element.tag.as_str())
            || self
                .tree
                .ancestors(&e.path)
                .iter()
                .any(|a| NOT_RENDERED.contains(&a.tag.as_str()))
    }

    /// The control a label describes: `for` target, else a nested control.
    pub fn labelled_control(&self, label: &ElementRef<'_>) -> Option<&ElementRef<'a>> {
        if let Some(id) = label.element.nonempty_attr("for") {
            return self.elements.iter().find(|e| {
                FORM_CONTROLS.contains(&e.element.tag.as_str()) && e.element.attr("id") == Some(id)
            });
        }
        self.elements.iter().find(|e| {
            label.path.is_ancestor_of(&e.path) && FORM_CONTROLS.contains(&e.element.tag.as_str())
        })
    }

    /// Message when `rule` is violated at `e`, `None` otherwise.
    pub fn violation_at(&self, rule: RuleId, e: &ElementRef<'_>) -> Option<String> {
        let el = e.element;
        let is_root = e.path.depth() == 0;
        match rule {
            RuleId::TextContrastSufficient => {
                if !el.has_direct_text() || self.in_unrendered(e) {
                    return None;
                }
                let style = self.resolver.resolve(self.tree, &e.path).ok()?;
                let ratio = contrast_ratio(style.foreground, style.background);
                let threshold = self
                    .cfg
                    .contrast_threshold(style.font_size_px, style.font_weight);
                (ratio < threshold).then(|| {
                    format!(
                        "Text contrast of {:.2} with its background is less than the required {:.1}:1 for text of size {}px and weight of {}",
                        ratio,
                        threshold,
                        fmt_num(style.font_size_px),
                        fmt_num(style.font_weight)
                    )
                })
            }
            RuleId::ImgAltValid => {
                if el.tag != "img" {
                    return None;
                }
                match el.attr("alt") {
                    None => Some("The image has no alt attribute".to_string()),
                    Some(alt) if alt.trim().is_empty() => {
                        let role = el.attr("role").map(str::trim).unwrap_or("");
                        (!role.eq_ignore_ascii_case("presentation")).then(|| {
                            "The image has an empty alt text and is not marked as decorative"
                                .to_string()
                        })
                    }
                    Some(_) => None,
                }
            }
            RuleId::StyleColorMisuse => {
                if el.tag != "label" {
                    return None;
                }
                let control = self.labelled_control(e)?;
                if !control.element.has_attr("required")
                    || control
                        .element
                        .attr("aria-required")
                        .is_some_and(|v| v.trim().eq_ignore_ascii_case("true"))
                {
                    return None;
                }
                let text = el.text_content().to_lowercase();
                if text.contains('*') || text.contains("required") {
                    return None;
                }
                subtree_declares(&self.resolver.sheet, el, "color").then(|| {
                    "Required field is indicated by color alone; add a text or symbol cue"
                        .to_string()
                })
            }
            RuleId::CaptionTrackExists => {
                if el.tag != "video" {
                    return None;
                }
                let captioned = el.element_children().any(|c| {
                    c.tag == "track"
                        && c.attr("kind").is_some_and(|k| {
                            let k = k.trim().to_ascii_lowercase();
                            k == "captions" || k == "subtitles"
                        })
                });
                (!captioned)
                    .then(|| "The video element has no captions or subtitles track".to_string())
            }
            RuleId::SvgGraphicsLabelled => {
                if el.tag != "svg" {
                    return None;
                }
                let labelled = el.nonempty_attr("aria-label").is_some()
                    || el.nonempty_attr("aria-labelledby").is_some()
                    || el
                        .element_children()
                        .any(|c| c.tag == "title" && !c.text_content().trim().is_empty());
                (!labelled).then(|| "The svg graphic has no accessible name".to_string())
            }
            RuleId::AriaContentInLandmark => {
                if !(el.tag == "div" || el.tag == "section") {
                    return None;
                }
                let ancestors = self.tree.ancestors(&e.path);
                let parent_is_body = ancestors.last().is_some_and(|p| p.tag == "body");
                if !parent_is_body
                    || el.nonempty_attr("role").is_some()
                    || el.text_content().trim().is_empty()
                    || ancestors
                        .iter()
                        .any(|a| LANDMARK_TAGS.contains(&a.tag.as_str()))
                {
                    return None;
                }
                Some("Content is not contained within a landmark element".to_string())
            }
            RuleId::HtmlLangExists => (is_root && el.nonempty_attr("lang").is_none())
                .then(|| "Page has no lang attribute on the <html> element".to_string()),
            RuleId::PageTitleExists => {
                if !is_root {
                    return None;
                }
                let titled = el.element_children().any(|head| {
                    head.tag == "head"
                        && head
                            .element_children()
                            .any(|t| t.tag == "title" && !t.text_content().trim().is_empty())
                });
                (!titled).then(|| "Page has no <head> with a non-empty <title>".to_string())
            }
            RuleId::SkipMainExists => {
                if !is_root {
                    return None;
                }
                let has_main = self.elements.iter().any(|x| {
                    x.element.tag == "main"
                        || x.element
                            .attr("role")
                            .is_some_and(|r| r.trim().eq_ignore_ascii_case("main"))
                });
                (!has_main).then(|| "Page has no main landmark to skip to".to_string())
            }
            RuleId::TextBlockHeading => {
                if self.in_unrendered(e) || HEADINGS.contains(&el.tag.as_str()) {
                    return None;
                }
                let words = word_count(&el.direct_text());
                if words <= self.cfg.text_block_words {
                    return None;
                }
                let container = self.section_container(e);
                let headed = self.elements[..e.order].iter().any(|h| {
                    HEADINGS.contains(&h.element.tag.as_str()) && container.is_ancestor_of(&h.path)
                });
                (!headed).then(|| {
                    format!("Text block of {words} words has no preceding heading in its section")
                })
            }
        }
    }

    /// Nearest sectioning ancestor of `e`, or the root.
    fn section_container(&self, e: &ElementRef<'_>) -> crate::dom::NodePath {
        let mut path = e.path.clone();
        while let Some(parent) = path.parent() {
            let tag = &self.tree.get(&parent).expect("ancestor exists").tag;
            path = parent;
            if SECTIONING.contains(&tag.as_str()) {
                break;
            }
        }
        path
    }

    fn make(&self, rule: RuleId, e: &ElementRef<'_>, message: String) -> Violation {
        Violation {
            rule,
            category: rule.category(),
            xpath: e.xpath.clone(),
            snippet: snippet(e.element),
            message,
        }
    }

    pub fn check_rule(&self, rule: RuleId) -> Vec<Violation> {
        self.elements
            .iter()
            .filter_map(|e| self.violation_at(rule, e).map(|m| self.make(rule, e, m)))
            .collect()
    }

    pub fn check_all(&self) -> Vec<Violation> {
        let mut found: Vec<(usize, usize, Violation)> = Vec::new();
        for e in &self.elements {
            for rule in RuleId::ALL {
                if let Some(m) = self.violation_at(rule, e) {
                    found.push((e.order, rule.index(), self.make(rule, e, m)));
                }
            }
        }
        found.sort_by_key(|(order, rule, _)| (*order, *rule));
        found.into_iter().map(|(_, _, v)| v).collect()
    }

    /// Re-evaluates a rule at the node an XPath points to.
    pub fn holds_at(&self, rule: RuleId, xpath: &XPath) -> bool {
        self.elements
            .iter()
            .find(|e| &e.xpath == xpath)
            .is_some_and(|e| self.violation_at(rule, e).is_some())
    }
}

fn fmt_num(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{:.2}", v)
    }
}

pub fn check_rule(rule: RuleId, tree: &DomTree, cfg: &RuleConfig) -> Vec<Violation> {
    Checker::new(tree, cfg).check_rule(rule)
}

pub fn check_document(doc_id: &str, tree: &DomTree, cfg: &RuleConfig) -> ViolationReport {
    ViolationReport::new(doc_id, Checker::new(tree, cfg).check_all())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub total_violations: usize,
    pub avg_per_doc: f64,
    /// Share of all violations, per rule.
    pub per_rule_percent: BTreeMap<RuleId, f64>,
    /// Share within the rule's own category, as the dataset table normalizes it.
    pub per_rule_category_percent: BTreeMap<RuleId, f64>,
    pub vision_percent: f64,
    pub language_percent: f64,
}

pub fn summarize(reports: &[ViolationReport]) -> Result<CorpusStats, RuleError> {
    if reports.is_empty() {
        return Err(RuleError::EmptyCorpus);
    }
    let mut counts: BTreeMap<RuleId, usize> = RuleId::ALL.iter().map(|r| (*r, 0)).collect();
    for report in reports {
        for (rule, n) in &report.counts {
            *counts.entry(*rule).or_default() += n;
        }
    }
    let total: usize = counts.values().sum();
    let pct = |n: usize, d: usize| {
        if d == 0 {
            0.0
        } else {
            100.0 * n as f64 / d as f64
        }
    };
    let in_category = |c: Category| -> usize {
        counts
            .iter()
            .filter(|(r, _)| r.category() == c)
            .map(|(_, n)| n)
            .sum()
    };
    let vision = in_category(Category::Vision);
    let language = in_category(Category::Language);
    Ok(CorpusStats {
        documents: reports.len(),
        total_violations: total,
        avg_per_doc: total as f64 / reports.len() as f64,
        per_rule_percent: counts.iter().map(|(r, n)| (*r, pct(*n, total))).collect(),
        per_rule_category_percent: counts
            .iter()
            .map(|(r, n)| (*r, pct(*n, in_category(r.category()))))
            .collect(),
        vision_percent: pct(vision, total),
        language_percent: pct(language, total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(s: &str) -> DomTree {
        DomTree::parse_str(s).unwrap()
    }

    fn rules_hit(html: &str) -> Vec<RuleId> {
        let t = tree(html);
        check_document("t", &t, &RuleConfig::default())
            .violations
            .iter()
            .map(|v| v.rule)
            .collect()
    }

    const COMPLIANT: &str = r#"<!DOCTYPE html><html lang="en"><head><title>Shop</title></head><body><header><h1>Shop</h1></header><main><h2>Items</h2><p>A short paragraph.</p><img src="car.png" alt="a red car"></main></body></html>"#;

    #[test]
    fn lang_rule_example() {
        let t = tree("<html><body><p>x</p></body></html>");
        let v = check_rule(RuleId::HtmlLangExists, &t, &RuleConfig::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].xpath.to_string(), "/html[1]");
        assert_eq!(v[0].category, Category::Language);
    }

    #[test]
    fn img_with_alt_passes() {
        let t = tree(r#"<img src="a.png" alt="a red car">"#);
        assert!(check_rule(RuleId::ImgAltValid, &t, &RuleConfig::default()).is_empty());
        let t = tree(
            r#"<img src="a.png"><img src="b.png" alt=" "><img src="c.png" alt="" role="presentation">"#,
        );
        assert_eq!(
            check_rule(RuleId::ImgAltValid, &t, &RuleConfig::default()).len(),
            2
        );
    }

    #[test]
    fn low_contrast_paragraph() {
        let t = tree(r#"<p style="color:#999">text</p>"#);
        let v = check_rule(RuleId::TextContrastSufficient, &t, &RuleConfig::default());
        assert_eq!(v.len(), 1);
        assert!(v[0].message.starts_with("Text contrast of 2.85"));
        // The flat 3:1 profile still rejects 2.85.
        let cfg = RuleConfig::with_profile(ThresholdProfile::ThreeToOne);
        assert_eq!(
            check_rule(RuleId::TextContrastSufficient, &t, &cfg).len(),
            1
        );
    }

    #[test]
    fn large_text_uses_lower_threshold() {
        // #767676 on white is about 4.54; #888 about 3.54.
        let t = tree(r#"<h1 style="color:#888">Big</h1><p style="color:#888">small</p>"#);
        let v = check_rule(RuleId::TextContrastSufficient, &t, &RuleConfig::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].xpath.to_string(), "/html[1]/body[1]/p[1]");
    }

    #[test]
    fn compliant_page_is_clean() {
        let t = tree(COMPLIANT);
        assert_eq!(check_document("ok", &t, &RuleConfig::default()).total, 0);
    }

    #[test]
    fn seeded_lang_title_main() {
        let html = r#"<html><body><header><h1>Hi</h1></header><nav><a href="/">Home</a></nav></body></html>"#;
        let t = tree(html);
        let r = check_document("s", &t, &RuleConfig::default());
        assert_eq!(r.total, 3);
        assert_eq!(r.count(RuleId::HtmlLangExists), 1);
        assert_eq!(r.count(RuleId::PageTitleExists), 1);
        assert_eq!(r.count(RuleId::SkipMainExists), 1);
    }

    #[test]
    fn empty_body_missing_title() {
        let r = rules_hit("<html lang=en><body></body></html>");
        assert!(r.contains(&RuleId::PageTitleExists));
    }

    #[test]
    fn caption_and_svg_rules() {
        let hits = rules_hit(
            r#"<main><video src="a.mp4"><track kind="chapters" src="c.vtt"></video><svg><path d="M0"/></svg></main>"#,
        );
        assert!(hits.contains(&RuleId::CaptionTrackExists));
        assert!(hits.contains(&RuleId::SvgGraphicsLabelled));
        let hits = rules_hit(
            r#"<main><video src="a.mp4"><track kind="Captions" src="c.vtt"></video><svg><title>Logo</title></svg></main>"#,
        );
        assert!(!hits.contains(&RuleId::CaptionTrackExists));
        assert!(!hits.contains(&RuleId::SvgGraphicsLabelled));
    }

    #[test]
    fn landmark_rule_only_body_children_with_text() {
        let hits = rules_hit(
            r#"<body><div>text</div><div role="region" aria-label="x">t</div><div><img src="a.png" alt="a"></div><main><div>t</div></main></body>"#,
        );
        assert_eq!(
            hits.iter()
                .filter(|r| **r == RuleId::AriaContentInLandmark)
                .count(),
            1
        );
    }

    #[test]
    fn color_only_required_label() {
        let html = r#"<main><form><label for="e" style="color:#b00">Email</label><input id="e" required></form></main>"#;
        assert!(rules_hit(html).contains(&RuleId::StyleColorMisuse));
        let starred = html.replace("Email<", "Email *<");
        assert!(!rules_hit(&starred).contains(&RuleId::StyleColorMisuse));
        let announced = html.replace("required>", "required aria-required=\"true\">");
        assert!(!rules_hit(&announced).contains(&RuleId::StyleColorMisuse));
        let uncolored = html.replace(r#" style="color:#b00""#, "");
        assert!(!rules_hit(&uncolored).contains(&RuleId::StyleColorMisuse));
    }

    #[test]
    fn text_block_needs_heading() {
        let long = "word ".repeat(61);
        let html = format!("<main><section><p>{long}</p></section></main>");
        assert!(rules_hit(&html).contains(&RuleId::TextBlockHeading));
        let headed = format!("<main><section><h3>Topic</h3><p>{long}</p></section></main>");
        assert!(!rules_hit(&headed).contains(&RuleId::TextBlockHeading));
        let exactly = format!("<main><p>{}</p></main>", "word ".repeat(60));
        assert!(!rules_hit(&exactly).contains(&RuleId::TextBlockHeading));
        // A heading in another section does not count.
        let elsewhere =
            format!("<main><section><h2>A</h2></section><section><p>{long}</p></section></main>");
        assert!(rules_hit(&elsewhere).contains(&RuleId::TextBlockHeading));
    }

    #[test]
    fn report_text_block_format() {
        let t = tree("<html><body><p>x</p></body></html>");
        let cfg = RuleConfig::default();
        let r = ViolationReport::new("d", check_rule(RuleId::HtmlLangExists, &t, &cfg));
        assert_eq!(
            r.to_text(),
            "Level: violation\nXPath: /html[1]\nSnippet: <html>\nHelp: docs/rules/html_lang_exists.md\n- Message: Page has no lang attribute on the <html> element\n"
        );
    }

    #[test]
    fn snippets_are_truncated() {
        let long = "x".repeat(300);
        let el = Element::new("div").with_attr("class", long);
        let s = snippet(&el);
        assert_eq!(s.chars().count(), SNIPPET_MAX_CHARS);
        assert!(s.ends_with("..."));
    }

    #[test]
    fn document_order_and_totals() {
        let r = check_document(
            "d",
            &tree(r#"<body><img src="a.png"><p style="color:#aaa">x</p></body>"#),
            &RuleConfig::default(),
        );
        assert_eq!(r.total, r.violations.len());
        assert_eq!(r.total, r.counts.values().sum::<usize>());
        let rules: Vec<_> = r.violations.iter().map(|v| v.rule).collect();
        assert_eq!(
            rules,
            [
                RuleId::HtmlLangExists,
                RuleId::PageTitleExists,
                RuleId::SkipMainExists,
                RuleId::ImgAltValid,
                RuleId::TextContrastSufficient
            ]
        );
    }

    fn report_with(doc: &str, rules: &[RuleId]) -> ViolationReport {
        let xp: XPath = "/html[1]".parse().unwrap();
        ViolationReport::new(
            doc,
            rules
                .iter()
                .map(|r| Violation {
                    rule: *r,
                    category: r.category(),
                    xpath: xp.clone(),
                    snippet: String::new(),
                    message: String::new(),
                })
                .collect(),
        )
    }

    #[test]
    fn summarize_examples() {
        let a = report_with("a", &[RuleId::HtmlLangExists; 4]);
        let b = report_with("b", &[RuleId::ImgAltValid; 6]);
        assert_eq!(summarize(&[a, b]).unwrap().avg_per_doc, 5.0);

        let mut rules = vec![RuleId::ImgAltValid; 3];
        rules.extend([RuleId::HtmlLangExists; 7]);
        let s = summarize(&[report_with("c", &rules)]).unwrap();
        assert!((s.vision_percent - 30.0).abs() < 1e-12);
        assert!((s.vision_percent + s.language_percent - 100.0).abs() < 0.01);
        assert!((s.per_rule_category_percent[&RuleId::ImgAltValid] - 100.0).abs() < 1e-12);

        let s = summarize(&[report_with("e", &[])]).unwrap();
        assert_eq!(
            (s.avg_per_doc, s.vision_percent, s.language_percent),
            (0.0, 0.0, 0.0)
        );
        assert!(s.per_rule_percent.values().all(|p| *p == 0.0));
        assert_eq!(summarize(&[]), Err(RuleError::EmptyCorpus));
    }

    #[test]
    fn json_report_is_versioned() {
        let r = report_with("a", &[RuleId::SkipMainExists]);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["counts"]["skip_main_exists"], 1);
        assert_eq!(v["violations"][0]["xpath"], "/html[1]");
    }
}
