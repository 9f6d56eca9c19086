//! Error-tolerant HTML parsing, serialization and indexed XPath addressing.
//!
//! The parser is deliberately small: it recovers from unclosed tags, synthesizes
//! missing `html`/`body` wrappers and keeps attribute order, comments and the
//! doctype intact. It does not implement full HTML5 tree construction (no
//! foster parenting, no `tbody` insertion, no templates).

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomError {
    #[error("input contains no element content")]
    EmptyInput,
    #[error("node is not part of this tree")]
    NodeNotInTree,
    #[error("no node at path {0}")]
    PathNotFound(String),
    #[error("invalid xpath {0:?}")]
    InvalidXPath(String),
}

/// Elements that never take children.
pub const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

/// Elements whose content is stored as opaque, unescaped text.
const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style"];

/// Elements whose content is text only, but entity-decoded and escaped on output.
const ESCAPABLE_RAW_TEXT_ELEMENTS: &[&str] = &["title", "textarea"];

const HEAD_CONTENT: &[&str] = &["title", "meta", "link", "base", "style", "script"];

pub fn is_void(tag: &str) -> bool {
    VOID_ELEMENTS.contains(&tag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Element,
    Text,
    Comment,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Element(Element),
    Text(String),
    Comment(String),
}

impl Node {
    pub fn kind(&self) -> NodeKind {
        match self {
            Node::Element(_) => NodeKind::Element,
            Node::Text(_) => NodeKind::Text,
            Node::Comment(_) => NodeKind::Comment,
        }
    }

    pub fn as_element(&self) -> Option<&Element> {
        match self {
            Node::Element(el) => Some(el),
            _ => None,
        }
    }

    pub fn as_element_mut(&mut self) -> Option<&mut Element> {
        match self {
            Node::Element(el) => Some(el),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Element {
    pub tag: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<Node>,
    /// Byte range of the element in the original input, when it came from a parse.
    pub source_span: Option<Range<usize>>,
}

// Spans are provenance only; two elements are equal when their content is.
impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag
            && self.attributes == other.attributes
            && self.children == other.children
    }
}

impl Element {
    pub fn new(tag: impl Into<String>) -> Self {
        Element {
            tag: tag.into().to_ascii_lowercase(),
            attributes: Vec::new(),
            children: Vec::new(),
            source_span: None,
        }
    }

    pub fn with_attr(mut self, name: &str, value: impl Into<String>) -> Self {
        self.set_attr(name, value);
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.children.push(Node::Text(text.into()));
        self
    }

    pub fn with_child(mut self, child: Element) -> Self {
        self.children.push(Node::Element(child));
        self
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn has_attr(&self, name: &str) -> bool {
        self.attr(name).is_some()
    }

    /// Attribute value with surrounding whitespace removed, `None` when absent or blank.
    pub fn nonempty_attr(&self, name: &str) -> Option<&str> {
        self.attr(name).map(str::trim).filter(|v| !v.is_empty())
    }

    /// Replaces the value in place, or appends the attribute when absent.
    pub fn set_attr(&mut self, name: &str, value: impl Into<String>) {
        let value = value.into();
        match self.attributes.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.attributes.push((name.to_ascii_lowercase(), value)),
        }
    }

    pub fn remove_attr(&mut self, name: &str) -> Option<String> {
        let pos = self.attributes.iter().position(|(n, _)| n == name)?;
        Some(self.attributes.remove(pos).1)
    }

    pub fn is_void(&self) -> bool {
        is_void(&self.tag)
    }

    pub fn element_children(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(Node::as_element)
    }

    /// Concatenation of the direct text children.
    pub fn direct_text(&self) -> String {
        self.children
            .iter()
            .filter_map(|c| match c {
                Node::Text(t) => Some(t.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn has_direct_text(&self) -> bool {
        self.children
            .iter()
            .any(|c| matches!(c, Node::Text(t) if !t.trim().is_empty()))
    }

    /// All descendant text in document order, excluding script and style bodies.
    pub fn text_content(&self) -> String {
        let mut out = String::new();
        self.collect_text(&mut out);
        out
    }

    fn collect_text(&self, out: &mut String) {
        if RAW_TEXT_ELEMENTS.contains(&self.tag.as_str()) {
            return;
        }
        for child in &self.children {
            match child {
                Node::Text(t) => out.push_str(t),
                Node::Element(el) => el.collect_text(out),
                Node::Comment(_) => {}
            }
        }
    }

    /// Serialized start tag, the form checker snippets use.
    pub fn start_tag(&self) -> String {
        let mut out = String::new();
        write_start_tag(self, &mut out);
        out
    }

    pub fn descendants(&self) -> Vec<&Element> {
        let mut out = Vec::new();
        let mut stack: Vec<&Element> = self.element_children().collect();
        stack.reverse();
        while let Some(el) = stack.pop() {
            out.push(el);
            let start = stack.len();
            stack.extend(el.element_children());
            stack[start..].reverse();
        }
        out
    }

    pub fn element_count(&self) -> usize {
        1 + self
            .element_children()
            .map(Element::element_count)
            .sum::<usize>()
    }
}

/// Child-index route from the root element, counting every node kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn child(&self, index: usize) -> Self {
        let mut steps = self.0.clone();
        steps.push(index);
        NodePath(steps)
    }

    pub fn parent(&self) -> Option<NodePath> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodePath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_ancestor_of(&self, other: &NodePath) -> bool {
        other.0.len() > self.0.len() && other.0.starts_with(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XPathStep {
    pub tag: String,
    /// 1-based position among same-tag element siblings.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XPath {
    pub steps: Vec<XPathStep>,
}

impl fmt::Display for XPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            write!(f, "/{}[{}]", step.tag, step.index)?;
        }
        Ok(())
    }
}

impl FromStr for XPath {
    type Err = DomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DomError::InvalidXPath(s.to_string());
        let rest = s.strip_prefix('/').ok_or_else(bad)?;
        let mut steps = Vec::new();
        for part in rest.split('/') {
            let (tag, idx) = part.split_once('[').ok_or_else(bad)?;
            let idx = idx.strip_suffix(']').ok_or_else(bad)?;
            let index: usize = idx.parse().map_err(|_| bad())?;
            if tag.is_empty() || index == 0 {
                return Err(bad());
            }
            steps.push(XPathStep {
                tag: tag.to_ascii_lowercase(),
                index,
            });
        }
        Ok(XPath { steps })
    }
}

impl serde::Serialize for XPath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for XPath {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An element located in a tree.
#[derive(Debug, Clone)]
pub struct ElementRef<'a> {
    pub element: &'a Element,
    pub path: NodePath,
    pub xpath: XPath,
    /// Pre-order position among all elements; the root is 0.
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomTree {
    pub doctype: Option<String>,
    pub root: Element,
}

impl DomTree {
    pub fn parse(input: &[u8]) -> Result<DomTree, DomError> {
        parse_html(input)
    }

    pub fn parse_str(input: &str) -> Result<DomTree, DomError> {
        parse_html(input.as_bytes())
    }

    pub fn serialize(&self) -> String {
        serialize(self)
    }

    /// Every element in document (pre-)order, with its path and XPath.
    pub fn elements(&self) -> Vec<ElementRef<'_>> {
        let mut out = Vec::new();
        let root_xpath = XPath {
            steps: vec![XPathStep {
                tag: self.root.tag.clone(),
                index: 1,
            }],
        };
        walk(&self.root, NodePath::root(), root_xpath, &mut out);
        out
    }

    pub fn get(&self, path: &NodePath) -> Option<&Element> {
        let mut cur = &self.root;
        for &i in &path.0 {
            cur = cur.children.get(i)?.as_element()?;
        }
        Some(cur)
    }

    pub fn get_mut(&mut self, path: &NodePath) -> Option<&mut Element> {
        let mut cur = &mut self.root;
        for &i in &path.0 {
            cur = cur.children.get_mut(i)?.as_element_mut()?;
        }
        Some(cur)
    }

    /// Ancestors of the element at `path`, root first, excluding the element itself.
    pub fn ancestors(&self, path: &NodePath) -> Vec<&Element> {
        let mut out = Vec::with_capacity(path.depth());
        let mut cur = &self.root;
        for &i in &path.0 {
            out.push(cur);
            match cur.children.get(i).and_then(Node::as_element) {
                Some(next) => cur = next,
                None => break,
            }
        }
        out
    }

    pub fn xpath_at(&self, path: &NodePath) -> Result<XPath, DomError> {
        let mut steps = vec![XPathStep {
            tag: self.root.tag.clone(),
            index: 1,
        }];
        let mut cur = &self.root;
        for &i in &path.0 {
            let child = cur
                .children
                .get(i)
                .and_then(Node::as_element)
                .ok_or(DomError::NodeNotInTree)?;
            let index = 1 + cur.children[..i]
                .iter()
                .filter_map(Node::as_element)
                .filter(|s| s.tag == child.tag)
                .count();
            steps.push(XPathStep {
                tag: child.tag.clone(),
                index,
            });
            cur = child;
        }
        Ok(XPath { steps })
    }

    /// Locates `node` by identity; text nodes are addressed through their parent.
    pub fn path_of(&self, node: &Element) -> Result<NodePath, DomError> {
        fn find(cur: &Element, target: *const Element, path: &mut Vec<usize>) -> bool {
            if std::ptr::eq(cur, target) {
                return true;
            }
            for (i, child) in cur.children.iter().enumerate() {
                if let Node::Element(el) = child {
                    path.push(i);
                    if find(el, target, path) {
                        return true;
                    }
                    path.pop();
                }
            }
            false
        }
        let mut path = Vec::new();
        if find(&self.root, node, &mut path) {
            Ok(NodePath(path))
        } else {
            Err(DomError::NodeNotInTree)
        }
    }

    pub fn xpath_of(&self, node: &Element) -> Result<XPath, DomError> {
        let path = self.path_of(node)?;
        self.xpath_at(&path)
    }

    /// XPath of the parent element of a text node.
    pub fn xpath_of_text(&self, text: &Node) -> Result<XPath, DomError> {
        fn find(cur: &Element, target: *const Node, path: &mut Vec<usize>) -> bool {
            for (i, child) in cur.children.iter().enumerate() {
                if std::ptr::eq(child, target) {
                    return true;
                }
                if let Node::Element(el) = child {
                    path.push(i);
                    if find(el, target, path) {
                        return true;
                    }
                    path.pop();
                }
            }
            false
        }
        let mut path = Vec::new();
        if find(&self.root, text, &mut path) {
            self.xpath_at(&NodePath(path))
        } else {
            Err(DomError::NodeNotInTree)
        }
    }

    pub fn resolve_path(&self, xpath: &XPath) -> Result<NodePath, DomError> {
        let not_found = || DomError::PathNotFound(xpath.to_string());
        let (first, rest) = xpath.steps.split_first().ok_or_else(not_found)?;
        if first.tag != self.root.tag || first.index != 1 {
            return Err(not_found());
        }
        let mut cur = &self.root;
        let mut path = Vec::with_capacity(rest.len());
        for step in rest {
            let (pos, el) = cur
                .children
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.as_element().map(|e| (i, e)))
                .filter(|(_, e)| e.tag == step.tag)
                .nth(step.index - 1)
                .ok_or_else(not_found)?;
            path.push(pos);
            cur = el;
        }
        Ok(NodePath(path))
    }

    pub fn resolve_xpath(&self, xpath: &XPath) -> Result<&Element, DomError> {
        let path = self.resolve_path(xpath)?;
        self.get(&path)
            .ok_or_else(|| DomError::PathNotFound(xpath.to_string()))
    }

    pub fn find_first(&self, tag: &str) -> Option<ElementRef<'_>> {
        self.elements().into_iter().find(|e| e.element.tag == tag)
    }

    pub fn element_count(&self) -> usize {
        self.root.element_count()
    }
}

fn walk<'a>(el: &'a Element, path: NodePath, xpath: XPath, out: &mut Vec<ElementRef<'a>>) {
    out.push(ElementRef {
        element: el,
        path: path.clone(),
        xpath: xpath.clone(),
        order: out.len(),
    });
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for (i, child) in el.children.iter().enumerate() {
        if let Node::Element(c) = child {
            let index = match seen.iter_mut().find(|(t, _)| *t == c.tag) {
                Some(slot) => {
                    slot.1 += 1;
                    slot.1
                }
                None => {
                    seen.push((c.tag.as_str(), 1));
                    1
                }
            };
            let mut cx = xpath.clone();
            cx.steps.push(XPathStep {
                tag: c.tag.clone(),
                index,
            });
            walk(c, path.child(i), cx, out);
        }
    }
}

// ---------------------------------------------------------------------------
// Tokenizer

#[derive(Debug)]
enum Token {
    Doctype(String),
    Comment(String),
    Text(String),
    StartTag {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
        start: usize,
        end: usize,
    },
    EndTag {
        name: String,
        end: usize,
    },
}

struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    raw_until: Option<(String, bool)>,
}

impl<'a> Tokenizer<'a> {
    fn new(src: &'a str) -> Self {
        Tokenizer {
            src,
            pos: 0,
            raw_until: None,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn next_token(&mut self) -> Option<Token> {
        if self.pos >= self.src.len() {
            return None;
        }
        if let Some((tag, escapable)) = self.raw_until.take() {
            let rest = self.rest();
            let close = find_ci(rest, &format!("</{tag}"));
            let end = close.unwrap_or(rest.len());
            let body = &rest[..end];
            self.pos += end;
            if !body.is_empty() {
                let text = if escapable {
                    decode_entities(body)
                } else {
                    body.to_string()
                };
                return Some(Token::Text(text));
            }
        }
        let rest = self.rest();
        if rest.starts_with("<!--") {
            let body_start = self.pos + 4;
            let (body, consumed) = match self.src[body_start..].find("-->") {
                Some(i) => (&self.src[body_start..body_start + i], 4 + i + 3),
                None => (&self.src[body_start..], rest.len()),
            };
            self.pos += consumed;
            return Some(Token::Comment(body.to_string()));
        }
        if rest.starts_with("<!") || rest.starts_with("<?") {
            let (body, consumed) = match rest.find('>') {
                Some(i) => (&rest[2..i], i + 1),
                None => (&rest[2..], rest.len()),
            };
            self.pos += consumed;
            if rest.starts_with("<!")
                && body.len() >= 7
                && body[..7].eq_ignore_ascii_case("doctype")
            {
                return Some(Token::Doctype(body.trim().to_string()));
            }
            let mut text = String::new();
            if rest.starts_with("<?") {
                text.push('?');
            }
            text.push_str(body);
            return Some(Token::Comment(text));
        }
        if rest.starts_with("</") && rest[2..].starts_with(|c: char| c.is_ascii_alphabetic()) {
            let name_len = rest[2..]
                .find(|c: char| c.is_whitespace() || c == '/' || c == '>')
                .unwrap_or(rest.len() - 2);
            let name = rest[2..2 + name_len].to_ascii_lowercase();
            let consumed = rest.find('>').map(|i| i + 1).unwrap_or(rest.len());
            self.pos += consumed;
            return Some(Token::EndTag {
                name,
                end: self.pos,
            });
        }
        if rest.starts_with('<') && rest[1..].starts_with(|c: char| c.is_ascii_alphabetic()) {
            return Some(self.start_tag());
        }
        // Text run up to the next markup candidate.
        let mut end = rest.len();
        let bytes = rest.as_bytes();
        for i in 1..bytes.len() {
            if bytes[i] == b'<' {
                let next = &rest[i..];
                if next.starts_with("<!")
                    || next.starts_with("<?")
                    || (next.starts_with("</")
                        && next[2..].starts_with(|c: char| c.is_ascii_alphabetic()))
                    || next[1..].starts_with(|c: char| c.is_ascii_alphabetic())
                {
                    end = i;
                    break;
                }
            }
        }
        self.pos += end;
        Some(Token::Text(decode_entities(&rest[..end])))
    }

    fn start_tag(&mut self) -> Token {
        let start = self.pos;
        let src = self.src;
        let mut i = self.pos + 1;
        let bytes = src.as_bytes();
        while i < bytes.len()
            && !(bytes[i].is_ascii_whitespace() || bytes[i] == b'/' || bytes[i] == b'>')
        {
            i += 1;
        }
        let name = src[self.pos + 1..i].to_ascii_lowercase();
        let mut attrs: Vec<(String, String)> = Vec::new();
        let mut self_closing = false;
        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i >= bytes.len() {
                break;
            }
            match bytes[i] {
                b'>' => {
                    i += 1;
                    break;
                }
                b'/' => {
                    i += 1;
                    if i < bytes.len() && bytes[i] == b'>' {
                        self_closing = true;
                        i += 1;
                        break;
                    }
                    continue;
                }
                _ => {}
            }
            let name_start = i;
            while i < bytes.len()
                && !(bytes[i].is_ascii_whitespace()
                    || bytes[i] == b'='
                    || bytes[i] == b'>'
                    || bytes[i] == b'/')
            {
                i += 1;
            }
            if i == name_start {
                // Stray '=' with no name.
                i += 1;
                continue;
            }
            let attr_name = src[name_start..i].to_ascii_lowercase();
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            let mut value = String::new();
            if j < bytes.len() && bytes[j] == b'=' {
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'"' || bytes[j] == b'\'') {
                    let quote = bytes[j] as char;
                    let vstart = j + 1;
                    let vend = src[vstart..]
                        .find(quote)
                        .map(|k| vstart + k)
                        .unwrap_or(src.len());
                    value = decode_entities(&src[vstart..vend]);
                    i = (vend + 1).min(src.len());
                } else {
                    let vstart = j;
                    while j < bytes.len() && !(bytes[j].is_ascii_whitespace() || bytes[j] == b'>') {
                        j += 1;
                    }
                    value = decode_entities(&src[vstart..j]);
                    i = j;
                }
            }
            if !attrs.iter().any(|(n, _)| *n == attr_name) {
                attrs.push((attr_name, value));
            }
        }
        self.pos = i.min(src.len());
        if !self_closing {
            if RAW_TEXT_ELEMENTS.contains(&name.as_str()) {
                self.raw_until = Some((name.clone(), false));
            } else if ESCAPABLE_RAW_TEXT_ELEMENTS.contains(&name.as_str()) {
                self.raw_until = Some((name.clone(), true));
            }
        }
        Token::StartTag {
            name,
            attrs,
            self_closing,
            start,
            end: self.pos,
        }
    }
}

fn find_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.len() > h.len() {
        return None;
    }
    (0..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest.find(';').filter(|&i| i <= 10).and_then(|semi| {
            let name = &rest[1..semi];
            let ch = match name {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some('\u{a0}'),
                _ => {
                    let code = if let Some(hex) =
                        name.strip_prefix("#x").or_else(|| name.strip_prefix("#X"))
                    {
                        u32::from_str_radix(hex, 16).ok()
                    } else if let Some(dec) = name.strip_prefix('#') {
                        dec.parse::<u32>().ok()
                    } else {
                        None
                    };
                    code.and_then(char::from_u32).filter(|&c| c != '\0')
                }
            };
            ch.map(|c| (c, semi + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

// ---------------------------------------------------------------------------
// Tree construction

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    BeforeHead,
    InHead,
    AfterHead,
    InBody,
}

struct Builder {
    stack: Vec<Element>,
    mode: Mode,
    doctype: Option<String>,
    saw_content: bool,
}

/// Tags that implicitly close an open `<p>`.
const CLOSES_P: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "details",
    "dd",
    "div",
    "dl",
    "dt",
    "fieldset",
    "figcaption",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hr",
    "li",
    "main",
    "menu",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "ul",
];

const SCOPE_BOUNDARY: &[&str] = &[
    "applet", "button", "caption", "html", "body", "marquee", "object", "table", "td", "th",
    "template",
];

const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

impl Builder {
    fn new() -> Self {
        Builder {
            stack: vec![Element::new("html")],
            mode: Mode::BeforeHead,
            doctype: None,
            saw_content: false,
        }
    }

    fn top(&mut self) -> &mut Element {
        self.stack.last_mut().expect("html is always open")
    }

    fn pop(&mut self, end: Option<usize>) {
        if self.stack.len() <= 1 {
            return;
        }
        let mut el = self.stack.pop().expect("checked length");
        if let (Some(span), Some(end)) = (el.source_span.as_mut(), end) {
            span.end = end;
        }
        self.top().children.push(Node::Element(el));
    }

    fn append_text(&mut self, text: String) {
        let top = self.top();
        if let Some(Node::Text(prev)) = top.children.last_mut() {
            prev.push_str(&text);
        } else {
            top.children.push(Node::Text(text));
        }
    }

    fn body_floor(&self) -> usize {
        // Index of the lowest stack entry an end tag may close.
        if self.mode == Mode::InBody {
            2
        } else {
            1
        }
    }

    fn ensure_body(&mut self) {
        if self.mode == Mode::InBody {
            return;
        }
        while self.stack.len() > 1 {
            self.pop(None);
        }
        self.stack.push(Element::new("body"));
        self.mode = Mode::InBody;
    }

    fn ensure_head(&mut self) {
        if self.mode == Mode::BeforeHead {
            self.stack.push(Element::new("head"));
            self.mode = Mode::InHead;
        }
    }

    /// Pops up to and including the topmost open `target`, unless a boundary
    /// element is met first.
    fn close_in_scope(&mut self, targets: &[&str], boundaries: &[&str]) {
        let floor = self.body_floor();
        let mut idx = None;
        for i in (floor..self.stack.len()).rev() {
            let tag = self.stack[i].tag.as_str();
            if targets.contains(&tag) {
                idx = Some(i);
                break;
            }
            if boundaries.contains(&tag) {
                break;
            }
        }
        if let Some(i) = idx {
            while self.stack.len() > i {
                self.pop(None);
            }
        }
    }

    fn implied_end_tags(&mut self, tag: &str) {
        match tag {
            "li" => self.close_in_scope(
                &["li"],
                &["ul", "ol", "menu", "table", "td", "th", "button"],
            ),
            "dd" | "dt" => {
                self.close_in_scope(&["dd", "dt"], &["dl", "table", "td", "th", "button"])
            }
            "tr" => self.close_in_scope(&["tr"], &["table", "tbody", "thead", "tfoot"]),
            "td" | "th" => self.close_in_scope(&["td", "th"], &["tr", "table"]),
            "thead" | "tbody" | "tfoot" => {
                self.close_in_scope(&["thead", "tbody", "tfoot"], &["table"]);
                self.close_in_scope(&["tr"], &["table"]);
            }
            "option" => self.close_in_scope(&["option"], &["select", "datalist", "optgroup"]),
            "optgroup" => self.close_in_scope(&["option", "optgroup"], &["select"]),
            _ => {}
        }
        if HEADINGS.contains(&tag) {
            let top = self.stack.last().map(|e| e.tag.as_str()).unwrap_or("");
            if HEADINGS.contains(&top) {
                self.pop(None);
            }
        }
        if CLOSES_P.contains(&tag) {
            self.close_in_scope(&["p"], SCOPE_BOUNDARY);
        }
    }

    fn merge_attrs(el: &mut Element, attrs: Vec<(String, String)>) {
        for (n, v) in attrs {
            if !el.has_attr(&n) {
                el.attributes.push((n, v));
            }
        }
    }

    fn feed(&mut self, token: Token) {
        match token {
            Token::Doctype(d) => {
                if self.doctype.is_none() && !self.saw_content {
                    self.doctype = Some(d);
                }
            }
            Token::Comment(c) => self.top().children.push(Node::Comment(c)),
            Token::Text(t) => {
                let at_top_level = self.stack.len() <= 2
                    && matches!(
                        self.stack.last().map(|e| e.tag.as_str()),
                        Some("html" | "head")
                    );
                if self.mode != Mode::InBody && at_top_level {
                    if t.trim().is_empty() {
                        if self.stack.len() == 2 {
                            self.append_text(t);
                        }
                        return;
                    }
                    self.ensure_body();
                }
                if !t.trim().is_empty() {
                    self.saw_content = true;
                }
                self.append_text(t);
            }
            Token::StartTag {
                name,
                attrs,
                self_closing,
                start,
                end,
            } => {
                self.saw_content = true;
                match name.as_str() {
                    "html" => {
                        Self::merge_attrs(&mut self.stack[0], attrs);
                        return;
                    }
                    "head" => {
                        if self.mode == Mode::BeforeHead {
                            let mut head = Element::new("head");
                            head.attributes = attrs;
                            head.source_span = Some(start..end);
                            self.stack.push(head);
                            self.mode = Mode::InHead;
                        }
                        return;
                    }
                    "body" => {
                        if self.mode == Mode::InBody {
                            Self::merge_attrs(&mut self.stack[1], attrs);
                        } else {
                            self.ensure_body();
                            let body = self.top();
                            body.attributes = attrs;
                            body.source_span = Some(start..end);
                        }
                        return;
                    }
                    _ => {}
                }
                let head_level = matches!(self.mode, Mode::BeforeHead | Mode::InHead)
                    && HEAD_CONTENT.contains(&name.as_str())
                    && matches!(
                        self.stack.last().map(|e| e.tag.as_str()),
                        Some("html" | "head")
                    );
                if head_level {
                    self.ensure_head();
                } else {
                    self.ensure_body();
                    self.implied_end_tags(&name);
                }
                let mut el = Element::new(name);
                el.attributes = attrs;
                el.source_span = Some(start..end);
                if self_closing || el.is_void() {
                    self.top().children.push(Node::Element(el));
                } else {
                    self.stack.push(el);
                }
            }
            Token::EndTag { name, end } => match name.as_str() {
                "html" | "body" => {}
                "head" => {
                    if self.mode == Mode::InHead {
                        while self.stack.len() > 1 {
                            self.pop(Some(end));
                        }
                        self.mode = Mode::AfterHead;
                    }
                }
                _ if is_void(&name) => {}
                _ => {
                    let floor = if self.mode == Mode::InHead {
                        2
                    } else {
                        self.body_floor()
                    };
                    if let Some(i) = (floor..self.stack.len())
                        .rev()
                        .find(|&i| self.stack[i].tag == name)
                    {
                        while self.stack.len() > i + 1 {
                            self.pop(None);
                        }
                        self.pop(Some(end));
                    }
                }
            },
        }
    }

    fn finish(mut self, len: usize) -> Result<DomTree, DomError> {
        while self.stack.len() > 1 {
            self.pop(Some(len));
        }
        if !self.saw_content {
            return Err(DomError::EmptyInput);
        }
        let mut root = self.stack.pop().expect("html root");
        root.source_span = Some(0..len);
        Ok(DomTree {
            doctype: self.doctype,
            root,
        })
    }
}

/// Parses bytes as UTF-8 HTML (invalid sequences replaced) into a tree.
pub fn parse_html(input: &[u8]) -> Result<DomTree, DomError> {
    let text = String::from_utf8_lossy(input);
    let mut tokenizer = Tokenizer::new(&text);
    let mut builder = Builder::new();
    while let Some(token) = tokenizer.next_token() {
        builder.feed(token);
    }
    builder.finish(text.len())
}

// ---------------------------------------------------------------------------
// Serialization

pub fn escape_text(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
}

fn escape_attr(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
}

fn write_start_tag(el: &Element, out: &mut String) {
    out.push('<');
    out.push_str(&el.tag);
    for (name, value) in &el.attributes {
        out.push(' ');
        out.push_str(name);
        out.push_str("=\"");
        escape_attr(value, out);
        out.push('"');
    }
    out.push('>');
}

pub fn write_element(el: &Element, out: &mut String) {
    write_start_tag(el, out);
    if el.is_void() {
        return;
    }
    let raw = RAW_TEXT_ELEMENTS.contains(&el.tag.as_str());
    for child in &el.children {
        match child {
            Node::Element(c) => write_element(c, out),
            Node::Text(t) if raw => out.push_str(t),
            Node::Text(t) => escape_text(t, out),
            Node::Comment(c) => {
                out.push_str("<!--");
                out.push_str(c);
                out.push_str("-->");
            }
        }
    }
    out.push_str("</");
    out.push_str(&el.tag);
    out.push('>');
}

pub fn serialize(tree: &DomTree) -> String {
    let mut out = String::new();
    if let Some(d) = &tree.doctype {
        out.push_str("<!");
        out.push_str(d);
        out.push('>');
    }
    write_element(&tree.root, &mut out);
    out
}
