//! Parametrized source trees: build, verify, serialize, render.
//!
//! A tree level is connector -> code -> link. Connectors carry parameters
//! that propagate to every level below them; links record the indentation
//! depth for their attached connectors; rendering substitutes `${name}`
//! tokens with the nearest-scope value.

use serde_json::{Map, Value};
use thiserror::Error;

use crate::template::{BodyItem, CommentStyle, Template};

pub const DEFAULT_INDENT_WIDTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pst {
    pub root: PstConnector,
    pub indent_width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PstConnector {
    pub id: String,
    /// Originating file; serialized as `_param:__file__`.
    pub source_name: String,
    pub params: Vec<(String, String)>,
    pub body: Vec<PstItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PstItem {
    Code(String),
    Link(PstLink),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PstLink {
    pub id: String,
    /// Indentation levels, serialized as `_param:__indent__`.
    pub indent_levels: usize,
    pub params: Vec<(String, String)>,
    pub attached: Vec<PstConnector>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PstError {
    #[error("template `{template}` has no connector `{id}`")]
    UnknownConnector { template: String, id: String },
    #[error("connector `{id}` of template `{template}` matches no link in the tree")]
    UnmatchedConnector { template: String, id: String },
    #[error("unresolved parameter `${{{name}}}` at {path}")]
    UnresolvedParam { path: String, name: String },
    #[error("JSON schema error at {path}: {detail}")]
    Schema { path: String, detail: String },
}

/// Address of a link inside a tree: alternating body-item and attached
/// indices, always ending on a body item that is a link.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LinkAddr {
    pub(crate) steps: Vec<AddrStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum AddrStep {
    Body(usize),
    Attached(usize),
}

impl LinkAddr {
    /// True if `other` addresses this link or a link below it.
    pub(crate) fn contains(&self, other: &LinkAddr) -> bool {
        other.steps.len() >= self.steps.len() && other.steps[..self.steps.len()] == self.steps[..]
    }

    /// Address of a link inside the `att_idx`-th connector attached here,
    /// at body position `body_idx`.
    pub(crate) fn child(&self, att_idx: usize, body_idx: usize) -> LinkAddr {
        let mut steps = self.steps.clone();
        steps.push(AddrStep::Attached(att_idx));
        steps.push(AddrStep::Body(body_idx));
        LinkAddr { steps }
    }
}

/// A link slot listed by `open_links`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenLink {
    pub path: String,
    pub id: String,
    pub(crate) addr: LinkAddr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

/// A verification finding. Findings are data, not errors; an empty list
/// means the tree verified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    UnresolvedParam { path: String, name: String },
    EmptyLink { path: String, id: String },
}

impl Finding {
    pub fn severity(&self) -> Severity {
        match self {
            Finding::UnresolvedParam { .. } => Severity::Error,
            Finding::EmptyLink { .. } => Severity::Warning,
        }
    }
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::UnresolvedParam { path, name } => {
                write!(f, "error: unresolved parameter `${{{name}}}` at {path}")
            }
            Finding::EmptyLink { path, id } => {
                write!(f, "warning: link `{id}` at {path} has no attachments")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderOptions {
    /// Emit trace-comment tags around connectors and links.
    pub verbose: bool,
    pub comment_style: CommentStyle,
    pub indent_width: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            verbose: false,
            comment_style: CommentStyle::c(),
            indent_width: DEFAULT_INDENT_WIDTH,
        }
    }
}

fn materialize(section: &crate::template::ConnectorSection, source_name: &str, indent_width: usize) -> PstConnector {
    let mut body = Vec::new();
    for item in &section.body {
        match item {
            BodyItem::Code(line) => body.push(PstItem::Code(line.clone())),
            BodyItem::Param { .. } => {}
            BodyItem::Link { id, leading_ws, .. } => body.push(PstItem::Link(PstLink {
                id: id.clone(),
                indent_levels: leading_ws.len() / indent_width.max(1),
                params: Vec::new(),
                attached: Vec::new(),
            })),
        }
    }
    PstConnector {
        id: section.id.clone(),
        source_name: source_name.to_string(),
        params: section.params(),
        body,
    }
}

/// Creates a tree whose root is the named section of `template`.
pub fn new_tree(template: &Template, connector_id: &str, indent_width: usize) -> Result<Pst, PstError> {
    let section = template
        .section(connector_id)
        .ok_or_else(|| PstError::UnknownConnector {
            template: template.source_name.clone(),
            id: connector_id.to_string(),
        })?;
    Ok(Pst {
        root: materialize(section, &template.source_name, indent_width),
        indent_width,
    })
}

fn collect_links(
    connector: &PstConnector,
    path: &str,
    addr: &LinkAddr,
    out: &mut Vec<OpenLink>,
) {
    for (body_idx, item) in connector.body.iter().enumerate() {
        if let PstItem::Link(link) = item {
            let mut link_addr = addr.clone();
            link_addr.steps.push(AddrStep::Body(body_idx));
            let link_path = format!("{path}/{}", link.id);
            out.push(OpenLink {
                path: link_path.clone(),
                id: link.id.clone(),
                addr: link_addr.clone(),
            });
            for (att_idx, child) in link.attached.iter().enumerate() {
                let mut child_addr = link_addr.clone();
                child_addr.steps.push(AddrStep::Attached(att_idx));
                let child_path = format!("{link_path}[{att_idx}]");
                collect_links(child, &child_path, &child_addr, out);
            }
        }
    }
}

/// Every link in the tree, depth-first in document order. Links with
/// attachments are still listed; links accept any number of connectors.
pub fn open_links(tree: &Pst) -> Vec<OpenLink> {
    let mut out = Vec::new();
    collect_links(&tree.root, &tree.root.id, &LinkAddr::default(), &mut out);
    out
}

pub(crate) fn link_ref<'t>(tree: &'t Pst, addr: &LinkAddr) -> &'t PstLink {
    let mut connector = &tree.root;
    let mut steps = addr.steps.iter().peekable();
    loop {
        let Some(AddrStep::Body(body_idx)) = steps.next().copied() else {
            panic!("link address must alternate body/attached steps");
        };
        let PstItem::Link(link) = &connector.body[body_idx] else {
            panic!("link address points at a code line");
        };
        match steps.next().copied() {
            None => return link,
            Some(AddrStep::Attached(att_idx)) => connector = &link.attached[att_idx],
            Some(other) => panic!("unexpected address step {other:?}"),
        }
    }
}

fn link_mut<'t>(tree: &'t mut Pst, addr: &LinkAddr) -> &'t mut PstLink {
    let mut connector = &mut tree.root;
    let mut steps = addr.steps.iter().peekable();
    loop {
        let Some(AddrStep::Body(body_idx)) = steps.next().copied() else {
            panic!("link address must alternate body/attached steps");
        };
        let PstItem::Link(link) = &mut connector.body[body_idx] else {
            panic!("link address points at a code line");
        };
        match steps.next().copied() {
            None => return link,
            Some(AddrStep::Attached(att_idx)) => connector = &mut link.attached[att_idx],
            Some(other) => panic!("unexpected address step {other:?}"),
        }
    }
}

/// Attaches every section of `template` to every matching link in the tree
/// (fan-out; an independent copy per site). Returns (connector id, number of
/// sites) per section, in template order.
pub fn attach(tree: &mut Pst, template: &Template) -> Result<Vec<(String, usize)>, PstError> {
    attach_within(tree, template, None)
}

/// Like `attach`, but restricted to the link at `scope` and the subtree
/// below it. `None` means the whole tree.
pub(crate) fn attach_within(
    tree: &mut Pst,
    template: &Template,
    scope: Option<&LinkAddr>,
) -> Result<Vec<(String, usize)>, PstError> {
    let mut report = Vec::new();
    for section in &template.sections {
        let sites: Vec<LinkAddr> = open_links(tree)
            .into_iter()
            .filter(|l| l.id == section.id)
            .filter(|l| scope.map_or(true, |s| s.contains(&l.addr)))
            .map(|l| l.addr)
            .collect();
        if sites.is_empty() {
            return Err(PstError::UnmatchedConnector {
                template: template.source_name.clone(),
                id: section.id.clone(),
            });
        }
        for addr in &sites {
            let instance = materialize(section, &template.source_name, tree.indent_width);
            link_mut(tree, addr).attached.push(instance);
        }
        report.push((section.id.clone(), sites.len()));
    }
    Ok(report)
}

/// `${name}` references in a code line. A `$` not followed by `{`, or a
/// `${` with no closing `}`, is literal text.
fn param_refs(line: &str) -> Vec<&str> {
    let mut refs = Vec::new();
    let mut rest = line;
    while let Some(start) = rest.find("${") {
        let after = &rest[start + 2..];
        match after.find('}') {
            Some(end) => {
                refs.push(&after[..end]);
                rest = &after[end + 1..];
            }
            None => break,
        }
    }
    refs
}

struct Scope<'a> {
    frames: Vec<&'a [(String, String)]>,
}

impl<'a> Scope<'a> {
    fn lookup(&self, name: &str) -> Option<&'a str> {
        // nearest enclosing definition wins (shadowing allowed)
        for frame in self.frames.iter().rev() {
            if let Some((_, v)) = frame.iter().rev().find(|(n, _)| n == name) {
                return Some(v);
            }
        }
        None
    }
}

fn verify_connector<'a>(connector: &'a PstConnector, path: &str, scope: &mut Scope<'a>, findings: &mut Vec<Finding>) {
    scope.frames.push(&connector.params);
    for item in &connector.body {
        match item {
            PstItem::Code(line) => {
                for name in param_refs(line) {
                    if scope.lookup(name).is_none() {
                        findings.push(Finding::UnresolvedParam {
                            path: path.to_string(),
                            name: name.to_string(),
                        });
                    }
                }
            }
            PstItem::Link(link) => {
                let link_path = format!("{path}/{}", link.id);
                if link.attached.is_empty() {
                    findings.push(Finding::EmptyLink {
                        path: link_path.clone(),
                        id: link.id.clone(),
                    });
                }
                scope.frames.push(&link.params);
                for (att_idx, child) in link.attached.iter().enumerate() {
                    let child_path = format!("{link_path}[{att_idx}]");
                    verify_connector(child, &child_path, scope, findings);
                }
                scope.frames.pop();
            }
        }
    }
    scope.frames.pop();
}

/// Checks that every `${name}` token resolves and flags empty links.
pub fn verify(tree: &Pst) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut scope = Scope { frames: Vec::new() };
    verify_connector(&tree.root, &tree.root.id, &mut scope, &mut findings);
    findings
}

fn connector_json(connector: &PstConnector, with_file: bool, wrap_id: bool) -> Value {
    let mut inner = Map::new();
    if with_file && !wrap_id {
        inner.insert(
            "_param:__file__".to_string(),
            Value::String(connector.source_name.clone()),
        );
    }
    for (name, value) in &connector.params {
        inner.insert(format!("_param:{name}"), Value::String(value.clone()));
    }
    let code: Vec<Value> = connector
        .body
        .iter()
        .map(|item| match item {
            PstItem::Code(line) => Value::String(line.clone()),
            PstItem::Link(link) => {
                let mut obj = Map::new();
                obj.insert(
                    "_param:__indent__".to_string(),
                    Value::Number(serde_json::Number::from(link.indent_levels as u64)),
                );
                for (name, value) in &link.params {
                    obj.insert(format!("_param:{name}"), Value::String(value.clone()));
                }
                obj.insert(
                    format!("_link:{}", link.id),
                    Value::Array(
                        link.attached
                            .iter()
                            .map(|c| connector_json(c, true, false))
                            .collect(),
                    ),
                );
                Value::Object(obj)
            }
        })
        .collect();
    inner.insert("_code".to_string(), Value::Array(code));

    if wrap_id {
        let mut outer = Map::new();
        outer.insert(
            "_param:__file__".to_string(),
            Value::String(connector.source_name.clone()),
        );
        outer.insert(format!("_connector:{}", connector.id), Value::Object(inner));
        Value::Object(outer)
    } else {
        Value::Object(inner)
    }
}

/// Canonical JSON document for the tree. `__file__`/`__indent__` first, then
/// user parameters in declaration order, then `_connector`/`_code`/`_link`.
pub fn to_json(tree: &Pst) -> Value {
    connector_json(&tree.root, true, true)
}

/// The canonical serialized form: 2-space indent, key order preserved,
/// trailing newline.
pub fn to_json_string(tree: &Pst) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(tree)).expect("tree serializes");
    s.push('\n');
    s
}

fn parse_connector_obj(
    obj: &Map<String, Value>,
    id: &str,
    path: &str,
) -> Result<PstConnector, PstError> {
    let mut source_name = String::new();
    let mut params = Vec::new();
    let mut body = Vec::new();
    let mut saw_code = false;
    for (key, value) in obj {
        if key == "_param:__file__" {
            source_name = value
                .as_str()
                .ok_or_else(|| PstError::Schema {
                    path: format!("{path}.{key}"),
                    detail: "expected string".to_string(),
                })?
                .to_string();
        } else if let Some(name) = key.strip_prefix("_param:") {
            let v = value.as_str().ok_or_else(|| PstError::Schema {
                path: format!("{path}.{key}"),
                detail: "expected string".to_string(),
            })?;
            params.push((name.to_string(), v.to_string()));
        } else if key == "_code" {
            saw_code = true;
            let items = value.as_array().ok_or_else(|| PstError::Schema {
                path: format!("{path}._code"),
                detail: "expected array".to_string(),
            })?;
            for (idx, item) in items.iter().enumerate() {
                let item_path = format!("{path}._code[{idx}]");
                match item {
                    Value::String(line) => body.push(PstItem::Code(line.clone())),
                    Value::Object(link_obj) => body.push(PstItem::Link(parse_link_obj(
                        link_obj, &item_path,
                    )?)),
                    _ => {
                        return Err(PstError::Schema {
                            path: item_path,
                            detail: "expected string or link object".to_string(),
                        })
                    }
                }
            }
        } else {
            return Err(PstError::Schema {
                path: format!("{path}.{key}"),
                detail: "unexpected key".to_string(),
            });
        }
    }
    if !saw_code {
        return Err(PstError::Schema {
            path: path.to_string(),
            detail: "missing `_code`".to_string(),
        });
    }
    Ok(PstConnector {
        id: id.to_string(),
        source_name,
        params,
        body,
    })
}

fn parse_link_obj(obj: &Map<String, Value>, path: &str) -> Result<PstLink, PstError> {
    let mut indent_levels = 0usize;
    let mut params = Vec::new();
    let mut link: Option<(String, Vec<PstConnector>)> = None;
    for (key, value) in obj {
        if key == "_param:__indent__" {
            indent_levels = value.as_u64().ok_or_else(|| PstError::Schema {
                path: format!("{path}.{key}"),
                detail: "expected non-negative integer".to_string(),
            })? as usize;
        } else if let Some(name) = key.strip_prefix("_param:") {
            let v = value.as_str().ok_or_else(|| PstError::Schema {
                path: format!("{path}.{key}"),
                detail: "expected string".to_string(),
            })?;
            params.push((name.to_string(), v.to_string()));
        } else if let Some(id) = key.strip_prefix("_link:") {
            if link.is_some() {
                return Err(PstError::Schema {
                    path: format!("{path}.{key}"),
                    detail: "multiple `_link` keys".to_string(),
                });
            }
            let arr = value.as_array().ok_or_else(|| PstError::Schema {
                path: format!("{path}.{key}"),
                detail: "expected array".to_string(),
            })?;
            let mut attached = Vec::new();
            for (idx, item) in arr.iter().enumerate() {
                let item_path = format!("{path}.{key}[{idx}]");
                let obj = item.as_object().ok_or_else(|| PstError::Schema {
                    path: item_path.clone(),
                    detail: "expected connector object".to_string(),
                })?;
                attached.push(parse_connector_obj(obj, id, &item_path)?);
            }
            link = Some((id.to_string(), attached));
        } else {
            return Err(PstError::Schema {
                path: format!("{path}.{key}"),
                detail: "unexpected key".to_string(),
            });
        }
    }
    let (id, attached) = link.ok_or_else(|| PstError::Schema {
        path: path.to_string(),
        detail: "missing `_link` key".to_string(),
    })?;
    Ok(PstLink {
        id,
        indent_levels,
        params,
        attached,
    })
}

/// Rebuilds a tree from its canonical JSON document.
pub fn from_json(document: &Value, indent_width: usize) -> Result<Pst, PstError> {
    let obj = document.as_object().ok_or_else(|| PstError::Schema {
        path: "$".to_string(),
        detail: "expected object".to_string(),
    })?;
    let mut source_name = String::new();
    let mut root: Option<PstConnector> = None;
    for (key, value) in obj {
        if key == "_param:__file__" {
            source_name = value
                .as_str()
                .ok_or_else(|| PstError::Schema {
                    path: format!("$.{key}"),
                    detail: "expected string".to_string(),
                })?
                .to_string();
        } else if let Some(id) = key.strip_prefix("_connector:") {
            if root.is_some() {
                return Err(PstError::Schema {
                    path: format!("$.{key}"),
                    detail: "multiple `_connector` keys".to_string(),
                });
            }
            let inner = value.as_object().ok_or_else(|| PstError::Schema {
                path: format!("$.{key}"),
                detail: "expected object".to_string(),
            })?;
            root = Some(parse_connector_obj(inner, id, &format!("$.{key}"))?);
        } else {
            return Err(PstError::Schema {
                path: format!("$.{key}"),
                detail: "unexpected key".to_string(),
            });
        }
    }
    let mut root = root.ok_or_else(|| PstError::Schema {
        path: "$".to_string(),
        detail: "missing `_connector` key".to_string(),
    })?;
    root.source_name = source_name;
    Ok(Pst { root, indent_width })
}

fn substitute(line: &str, scope: &Scope<'_>, path: &str) -> Result<String, PstError> {
    let mut out = String::with_capacity(line.len());
    let mut rest = line;
    while let Some(start) = rest.find("${") {
        let after = &rest[start + 2..];
        match after.find('}') {
            Some(end) => {
                let name = &after[..end];
                let value = scope.lookup(name).ok_or_else(|| PstError::UnresolvedParam {
                    path: path.to_string(),
                    name: name.to_string(),
                })?;
                out.push_str(&rest[..start]);
                // single pass: replacement text is not re-scanned
                out.push_str(value);
                rest = &after[end + 1..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn push_line(out: &mut String, prefix: &str, content: &str) {
    // a blank content line stays blank, without trailing indentation
    if !content.is_empty() {
        out.push_str(prefix);
        out.push_str(content);
    }
    out.push('\n');
}

fn render_connector<'a>(
    connector: &'a PstConnector,
    prefix: &str,
    path: &str,
    scope: &mut Scope<'a>,
    opts: &RenderOptions,
    out: &mut String,
) -> Result<(), PstError> {
    let tok = &opts.comment_style.line_token;
    if opts.verbose {
        push_line(
            out,
            prefix,
            &format!(
                "{tok}<_connector:{} file=\"{}\">",
                connector.id, connector.source_name
            ),
        );
    }
    scope.frames.push(&connector.params);
    let mut result = Ok(());
    'body: for item in &connector.body {
        match item {
            PstItem::Code(line) => {
                let substituted = match substitute(line, scope, path) {
                    Ok(s) => s,
                    Err(e) => {
                        result = Err(e);
                        break 'body;
                    }
                };
                push_line(out, prefix, &substituted);
            }
            PstItem::Link(link) => {
                let child_prefix =
                    format!("{prefix}{}", " ".repeat(link.indent_levels * opts.indent_width));
                let link_path = format!("{path}/{}", link.id);
                if opts.verbose {
                    push_line(out, &child_prefix, &format!("{tok}<_link:{}>", link.id));
                }
                scope.frames.push(&link.params);
                for (att_idx, child) in link.attached.iter().enumerate() {
                    let child_path = format!("{link_path}[{att_idx}]");
                    if let Err(e) =
                        render_connector(child, &child_prefix, &child_path, scope, opts, out)
                    {
                        scope.frames.pop();
                        result = Err(e);
                        break 'body;
                    }
                }
                scope.frames.pop();
                if opts.verbose {
                    push_line(out, &child_prefix, &format!("{tok}</_link:{}>", link.id));
                }
            }
        }
    }
    scope.frames.pop();
    result?;
    if opts.verbose {
        push_line(out, prefix, &format!("{tok}</_connector:{}>", connector.id));
    }
    Ok(())
}

/// Renders the tree to source text. Unresolved parameters are a hard error
/// here; run `verify` first for a full report.
pub fn render(tree: &Pst, opts: &RenderOptions) -> Result<String, PstError> {
    let mut out = String::new();
    let mut scope = Scope { frames: Vec::new() };
    render_connector(&tree.root, "", &tree.root.id, &mut scope, opts, &mut out)?;
    Ok(out)
}
