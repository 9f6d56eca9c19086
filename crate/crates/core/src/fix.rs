//! Deterministic per-rule repairs and the detect/fix loop.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{contrast_ratio, repair_contrast};
use crate::dom::{DomTree, Element, Node, NodePath, XPath};
use crate::rules::{
    check_document, Checker, RuleConfig, RuleId, Violation, ViolationReport, HEADINGS,
};
use crate::style::{set_inline_property, StyleResolver};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixError {
    #[error("violation {rule} at {xpath} no longer resolves")]
    StaleViolation { rule: RuleId, xpath: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    SetAttribute,
    InsertElement,
    ReplaceColor,
    AppendText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixAction {
    pub rule: RuleId,
    pub xpath: XPath,
    pub description: String,
    pub edit: EditKind,
    /// Companion file the edit references, e.g. a caption track stub.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sidecar: Option<String>,
}

/// The image an alt text is requested for.
#[derive(Debug, Clone)]
pub struct ImageSource {
    pub src: String,
    /// `src` resolved against the asset root, when one is configured.
    pub path: Option<PathBuf>,
}

pub trait CaptionProvider: Send + Sync {
    /// Nonempty caption, or `None` when unavailable.
    fn caption(&self, image: &ImageSource) -> Option<String>;
}

/// Runs `program [args..] <image path>` and reads the caption from stdout.
#[derive(Debug, Clone)]
pub struct CommandCaptioner {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandCaptioner {
    /// Splits a command line on whitespace.
    pub fn from_command_line(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(CommandCaptioner {
            program,
            args: parts.collect(),
        })
    }
}

impl CaptionProvider for CommandCaptioner {
    fn caption(&self, image: &ImageSource) -> Option<String> {
        let target = image
            .path
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_else(|| image.src.clone());
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(target)
            .output()
            .ok()?;
        if !out.status.success() {
            return None;
        }
        let text = String::from_utf8_lossy(&out.stdout).trim().to_string();
        (!text.is_empty()).then_some(text)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TitleStrategy {
    /// First heading text, then the document id.
    #[default]
    FirstHeading,
    DocId,
}

#[derive(Clone)]
pub struct FixConfig {
    pub rules: RuleConfig,
    pub default_lang: String,
    /// Overrides the size-dependent threshold when set.
    pub contrast_target: Option<f64>,
    pub max_iterations: usize,
    pub caption_provider: Option<Arc<dyn CaptionProvider>>,
    pub asset_root: Option<PathBuf>,
    pub title_strategy: TitleStrategy,
}

impl Default for FixConfig {
    fn default() -> Self {
        FixConfig {
            rules: RuleConfig::default(),
            default_lang: "en".to_string(),
            contrast_target: None,
            max_iterations: 5,
            caption_provider: None,
            asset_root: None,
            title_strategy: TitleStrategy::default(),
        }
    }
}

impl fmt::Debug for FixConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixConfig")
            .field("rules", &self.rules)
            .field("default_lang", &self.default_lang)
            .field("contrast_target", &self.contrast_target)
            .field("max_iterations", &self.max_iterations)
            .field("caption_provider", &self.caption_provider.is_some())
            .field("asset_root", &self.asset_root)
            .field("title_strategy", &self.title_strategy)
            .finish()
    }
}

const PHRASING: &[&str] = &[
    "p", "span", "a", "em", "strong", "b", "i", "u", "small", "code", "label", "abbr", "cite", "q",
    "mark", "sub", "sup", "button", "font",
];
const NOT_MAIN: &[&str] = &[
    "header", "nav", "footer", "aside", "script", "style", "noscript", "template",
];

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Alt text words from an image URL: `red-car.png` gives `red car`.
pub fn filename_words(src: &str) -> Option<String> {
    let path = src.split(['?', '#']).next().unwrap_or_default();
    if path.starts_with("data:") {
        return None;
    }
    let name = path.rsplit('/').next().unwrap_or_default();
    let mut pieces: Vec<&str> = name.split(['-', '_', '.']).collect();
    if name.contains('.') {
        pieces.pop();
    }
    let words: Vec<String> = pieces
        .into_iter()
        .filter(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphabetic()))
        .map(str::to_ascii_lowercase)
        .collect();
    (!words.is_empty()).then(|| words.join(" "))
}

/// First sentence of `text`, cut to at most `max_words` words.
pub fn first_sentence(text: &str, max_words: usize) -> String {
    let mut words = Vec::new();
    for w in text.split_whitespace() {
        words.push(w);
        if words.len() == max_words || w.ends_with(['.', '!', '?']) {
            break;
        }
    }
    let s = words.join(" ");
    s.trim_end_matches(['.', '!', '?', ',', ';', ':'])
        .to_string()
}

fn heading_text(tree: &DomTree) -> Option<String> {
    tree.elements()
        .into_iter()
        .filter(|e| HEADINGS.contains(&e.element.tag.as_str()))
        .map(|e| collapse_ws(&e.element.text_content()))
        .find(|t| !t.is_empty())
}

fn title_for(tree: &DomTree, doc_id: &str, strategy: TitleStrategy) -> String {
    let heading = match strategy {
        TitleStrategy::FirstHeading => heading_text(tree),
        TitleStrategy::DocId => None,
    };
    heading
        .or_else(|| (!doc_id.trim().is_empty()).then(|| doc_id.trim().to_string()))
        .unwrap_or_else(|| "Untitled page".to_string())
}

fn append_text(el: &mut Element, text: &str) {
    if let Some(Node::Text(last)) = el.children.last_mut() {
        last.push_str(text);
    } else {
        el.children.push(Node::Text(text.to_string()));
    }
}

fn landmark_role(tag: &str) -> &'static str {
    match tag {
        "nav" => "navigation",
        "header" => "banner",
        "footer" => "contentinfo",
        "aside" => "complementary",
        "main" => "main",
        "form" => "form",
        _ => "region",
    }
}

fn word_weight(el: &Element) -> usize {
    el.text_content().split_whitespace().count()
}

/// Applies the repair for one violation to a copy of `tree`.
///
/// Returns the tree unchanged with no action when the repair needs input that
/// is not available (no caption, no usable filename, unreachable contrast).
pub fn fix_violation(
    tree: &DomTree,
    v: &Violation,
    doc_id: &str,
    cfg: &FixConfig,
) -> Result<(DomTree, Option<FixAction>), FixError> {
    let path = tree
        .resolve_path(&v.xpath)
        .map_err(|_| FixError::StaleViolation {
            rule: v.rule,
            xpath: v.xpath.to_string(),
        })?;
    let mut out = tree.clone();
    let action = |edit: EditKind, description: String| FixAction {
        rule: v.rule,
        xpath: v.xpath.clone(),
        description,
        edit,
        sidecar: None,
    };
    let act = match v.rule {
        RuleId::HtmlLangExists => {
            let lang = cfg.default_lang.clone();
            out.root.set_attr("lang", lang.clone());
            Some(action(
                EditKind::SetAttribute,
                format!("set lang=\"{lang}\""),
            ))
        }
        RuleId::PageTitleExists => {
            let title = title_for(tree, doc_id, cfg.title_strategy);
            let root = &mut out.root;
            let head_idx = root
                .children
                .iter()
                .position(|c| matches!(c, Node::Element(e) if e.tag == "head"));
            let title_el = Element::new("title").with_text(title.clone());
            match head_idx {
                Some(i) => {
                    let head = root.children[i]
                        .as_element_mut()
                        .expect("head is an element");
                    match head
                        .children
                        .iter_mut()
                        .filter_map(Node::as_element_mut)
                        .find(|c| c.tag == "title")
                    {
                        Some(existing) => existing.children = vec![Node::Text(title.clone())],
                        None => head.children.insert(0, Node::Element(title_el)),
                    }
                }
                None => {
                    let at = root
                        .children
                        .iter()
                        .position(|c| matches!(c, Node::Element(_)))
                        .unwrap_or(root.children.len());
                    let head = Element::new("head").with_child(title_el);
                    root.children.insert(at, Node::Element(head));
                }
            }
            Some(action(
                EditKind::InsertElement,
                format!("insert <title>{title}</title>"),
            ))
        }
        RuleId::SkipMainExists => {
            wrap_main(&mut out.root).map(|d| action(EditKind::InsertElement, d))
        }
        RuleId::AriaContentInLandmark => {
            let el = out.get_mut(&path).expect("path resolved");
            let role = landmark_role(&el.tag);
            el.set_attr("role", role);
            let mut desc = format!("set role=\"{role}\"");
            if role == "region" && el.nonempty_attr("aria-label").is_none() {
                let label = el
                    .descendants()
                    .into_iter()
                    .filter(|d| HEADINGS.contains(&d.tag.as_str()))
                    .map(|d| collapse_ws(&d.text_content()))
                    .find(|t| !t.is_empty())
                    .unwrap_or_else(|| first_words(&el.text_content(), 5));
                desc.push_str(&format!(" aria-label=\"{label}\""));
                el.set_attr("aria-label", label);
            }
            Some(action(EditKind::SetAttribute, desc))
        }
        RuleId::TextBlockHeading => insert_heading(&mut out, &path)
            .map(|text| action(EditKind::InsertElement, format!("insert <h2>{text}</h2>"))),
        RuleId::ImgAltValid => {
            let el = out.get_mut(&path).expect("path resolved");
            let src = el.attr("src").unwrap_or_default().to_string();
            let source = ImageSource {
                path: cfg.asset_root.as_ref().map(|r| asset_path(r, &src)),
                src: src.clone(),
            };
            let alt = cfg
                .caption_provider
                .as_ref()
                .and_then(|p| p.caption(&source))
                .map(|c| collapse_ws(&c))
                .filter(|c| !c.is_empty())
                .or_else(|| filename_words(&src));
            alt.map(|alt| {
                el.set_attr("alt", alt.clone());
                action(EditKind::SetAttribute, format!("set alt=\"{alt}\""))
            })
        }
        RuleId::TextContrastSufficient => {
            let resolver = StyleResolver::new(tree);
            match resolver.resolve(tree, &path) {
                Ok(style) => {
                    let target = cfg.contrast_target.unwrap_or_else(|| {
                        cfg.rules
                            .contrast_threshold(style.font_size_px, style.font_weight)
                    });
                    // small headroom so the three-decimal CSS literal still clears the target
                    let padded = (target + 0.005).min(21.0);
                    let repaired = repair_contrast(style.foreground, style.background, padded)
                        .or_else(|_| repair_contrast(style.foreground, style.background, target));
                    match repaired {
                        Ok(c) => {
                            let css = c.to_css();
                            let el = out.get_mut(&path).expect("path resolved");
                            set_inline_property(el, "color", &css);
                            Some(action(
                                EditKind::ReplaceColor,
                                format!(
                                    "color {} -> {} (contrast {:.2})",
                                    style.foreground.to_css(),
                                    css,
                                    contrast_ratio(c, style.background)
                                ),
                            ))
                        }
                        Err(_) => None,
                    }
                }
                Err(_) => None,
            }
        }
        RuleId::StyleColorMisuse => {
            let control_path = {
                let checker = Checker::new(tree, &cfg.rules);
                let label = checker
                    .elements
                    .iter()
                    .find(|e| e.path == path)
                    .expect("path resolved");
                checker.labelled_control(label).map(|c| c.path.clone())
            };
            match control_path {
                Some(cp) => {
                    append_text(out.get_mut(&path).expect("path resolved"), " *");
                    out.get_mut(&cp)
                        .expect("control resolved")
                        .set_attr("aria-required", "true");
                    Some(action(
                        EditKind::AppendText,
                        "append \" *\" to label and set aria-required=\"true\" on its control"
                            .to_string(),
                    ))
                }
                None => None,
            }
        }
        RuleId::CaptionTrackExists => {
            let order = tree
                .elements()
                .iter()
                .filter(|e| e.element.tag == "video" && e.path < path)
                .count()
                + 1;
            let el = out.get_mut(&path).expect("path resolved");
            let media = el.nonempty_attr("src").map(str::to_string).or_else(|| {
                el.element_children()
                    .find(|c| c.tag == "source")
                    .and_then(|s| s.nonempty_attr("src").map(str::to_string))
            });
            let stem = media
                .as_deref()
                .and_then(media_stem)
                .unwrap_or_else(|| format!("{}-video{order}", sanitize_id(doc_id)));
            let sidecar = format!("{stem}.vtt");
            let track = Element::new("track")
                .with_attr("kind", "captions")
                .with_attr("src", sidecar.clone())
                .with_attr("srclang", cfg.default_lang.clone());
            el.children.push(Node::Element(track));
            let mut a = action(
                EditKind::InsertElement,
                format!("insert <track kind=\"captions\" src=\"{sidecar}\">"),
            );
            a.sidecar = Some(sidecar);
            Some(a)
        }
        RuleId::SvgGraphicsLabelled => svg_label(tree, &path).map(|label| {
            out.get_mut(&path)
                .expect("path resolved")
                .set_attr("aria-label", label.clone());
            action(
                EditKind::SetAttribute,
                format!("set aria-label=\"{label}\""),
            )
        }),
    };
    match act {
        Some(a) => Ok((out, Some(a))),
        None => Ok((tree.clone(), None)),
    }
}

fn first_words(text: &str, n: usize) -> String {
    text.split_whitespace()
        .take(n)
        .collect::<Vec<_>>()
        .join(" ")
}

fn sanitize_id(s: &str) -> String {
    let cleaned: String = s
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "page".to_string()
    } else {
        cleaned
    }
}

fn media_stem(src: &str) -> Option<String> {
    let path = src.split(['?', '#']).next()?;
    let name = path.rsplit('/').next()?;
    let stem = match name.rfind('.') {
        Some(i) if i > 0 => &name[..i],
        _ => name,
    };
    (!stem.is_empty()).then(|| sanitize_id(stem))
}

fn wrap_main(root: &mut Element) -> Option<String> {
    let body_idx = root
        .children
        .iter()
        .position(|c| matches!(c, Node::Element(e) if e.tag == "body"));
    let Some(bi) = body_idx else {
        root.children.push(Node::Element(
            Element::new("body").with_child(Element::new("main")),
        ));
        return Some("insert <body><main></main></body>".to_string());
    };
    let body = root.children[bi]
        .as_element_mut()
        .expect("body is an element");
    let mut best: Option<(usize, usize)> = None;
    for (i, c) in body.children.iter().enumerate() {
        if let Node::Element(e) = c {
            if NOT_MAIN.contains(&e.tag.as_str()) {
                continue;
            }
            let w = word_weight(e);
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((i, w));
            }
        }
    }
    match best {
        Some((i, _)) => {
            let child = std::mem::replace(&mut body.children[i], Node::Comment(String::new()));
            let tag = child
                .as_element()
                .map(|e| e.tag.clone())
                .unwrap_or_default();
            let mut main = Element::new("main");
            main.children.push(child);
            body.children[i] = Node::Element(main);
            Some(format!("wrap <{tag}> in <main>"))
        }
        None => {
            let has_text = body
                .children
                .iter()
                .any(|c| matches!(c, Node::Text(t) if !t.trim().is_empty()));
            let mut main = Element::new("main");
            if has_text {
                main.children = std::mem::take(&mut body.children);
                body.children.push(Node::Element(main));
                Some("wrap body content in <main>".to_string())
            } else {
                body.children.push(Node::Element(main));
                Some("append <main></main>".to_string())
            }
        }
    }
}

/// Inserts an `h2` before the text block, outside any paragraph or inline ancestor.
fn insert_heading(tree: &mut DomTree, path: &NodePath) -> Option<String> {
    let block = tree.get(path)?;
    let text = first_sentence(&block.direct_text(), 8);
    if text.is_empty() {
        return None;
    }
    let mut anchor = path.clone();
    loop {
        let parent = anchor.parent()?;
        if parent.depth() == 0 {
            // the block is body or head; nothing to put a heading before
            return None;
        }
        let ptag = &tree.get(&parent)?.tag;
        if PHRASING.contains(&ptag.as_str()) {
            anchor = parent;
        } else {
            break;
        }
    }
    let parent = anchor.parent()?;
    let idx = *anchor.0.last()?;
    let h2 = Element::new("h2").with_text(text.clone());
    tree.get_mut(&parent)?
        .children
        .insert(idx, Node::Element(h2));
    Some(text)
}

/// Label for an svg: nearest heading (preceding first), else a referenced filename.
fn svg_label(tree: &DomTree, path: &NodePath) -> Option<String> {
    let elements = tree.elements();
    let pos = elements.iter().position(|e| &e.path == path)?;
    let is_heading = |e: &&crate::dom::ElementRef<'_>| HEADINGS.contains(&e.element.tag.as_str());
    let text_of = |e: &crate::dom::ElementRef<'_>| collapse_ws(&e.element.text_content());
    let before = elements[..pos]
        .iter()
        .rev()
        .filter(is_heading)
        .map(text_of)
        .find(|t| !t.is_empty());
    let after = || {
        elements[pos + 1..]
            .iter()
            .filter(|e| !path.is_ancestor_of(&e.path))
            .filter(is_heading)
            .map(text_of)
            .find(|t| !t.is_empty())
    };
    if let Some(t) = before.or_else(after) {
        return Some(t);
    }
    let svg = elements[pos].element;
    svg.descendants().into_iter().find_map(|d| {
        if d.tag != "use" && d.tag != "image" {
            return None;
        }
        let href = d
            .nonempty_attr("href")
            .or_else(|| d.nonempty_attr("xlink:href"))?;
        match href.split_once('#') {
            Some((_, frag)) if !frag.is_empty() => filename_words(frag),
            _ => filename_words(href),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedFix {
    pub violation: Violation,
    pub reason: String,
}

/// One detect/fix pass: the report it started from and what it changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixRound {
    pub report: ViolationReport,
    pub actions: Vec<FixAction>,
    pub rejected: Vec<RejectedFix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixOutcome {
    pub tree: DomTree,
    pub history: Vec<FixRound>,
    pub final_report: ViolationReport,
}

impl FixOutcome {
    pub fn actions(&self) -> impl Iterator<Item = &FixAction> {
        self.history.iter().flat_map(|r| r.actions.iter())
    }

    pub fn sidecars(&self) -> Vec<&str> {
        self.actions()
            .filter_map(|a| a.sidecar.as_deref())
            .collect()
    }
}

fn regresses(before: &ViolationReport, after: &ViolationReport) -> bool {
    after.total >= before.total
        || RuleId::ALL
            .iter()
            .any(|r| after.count(*r) > before.count(*r))
}

/// Repeats check and fix-all until clean, stalled, or out of iterations.
///
/// Within a round fixes run in reverse document order so earlier XPaths stay
/// valid. A fix that does not lower the total, or raises any rule's count, is
/// rolled back.
pub fn fix_to_fixed_point(tree: &DomTree, doc_id: &str, cfg: &FixConfig) -> FixOutcome {
    let mut current = tree.clone();
    let mut history = Vec::new();
    for _ in 0..cfg.max_iterations.max(1) {
        let report = check_document(doc_id, &current, &cfg.rules);
        if report.total == 0 {
            history.push(FixRound {
                report,
                actions: Vec::new(),
                rejected: Vec::new(),
            });
            break;
        }
        let mut live = report.clone();
        let mut actions = Vec::new();
        let mut rejected = Vec::new();
        for v in report.violations.iter().rev() {
            if !live
                .violations
                .iter()
                .any(|w| w.rule == v.rule && w.xpath == v.xpath)
            {
                continue;
            }
            let reject = |reason: &str| RejectedFix {
                violation: v.clone(),
                reason: reason.to_string(),
            };
            match fix_violation(&current, v, doc_id, cfg) {
                Ok((candidate, Some(action))) => {
                    let after = check_document(doc_id, &candidate, &cfg.rules);
                    if regresses(&live, &after) {
                        rejected.push(reject("rolled back: fix did not reduce violations"));
                    } else {
                        current = candidate;
                        live = after;
                        actions.push(action);
                    }
                }
                Ok((_, None)) => rejected.push(reject("no fix available")),
                Err(e) => rejected.push(reject(&e.to_string())),
            }
        }
        let progressed = !actions.is_empty();
        history.push(FixRound {
            report,
            actions,
            rejected,
        });
        if !progressed {
            break;
        }
    }
    let final_report = check_document(doc_id, &current, &cfg.rules);
    FixOutcome {
        tree: current,
        history,
        final_report,
    }
}

/// Resolves an asset reference relative to a document directory.
pub fn asset_path(root: &Path, src: &str) -> PathBuf {
    root.join(src.split(['?', '#']).next().unwrap_or_default())
}
