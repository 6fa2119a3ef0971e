//! Template files: annotated source with directive lines embedded in comments.
//!
//! A template is ordinary source text plus three directive forms placed on
//! comment lines of their own:
//!
//! ```text
//! //_connector:ID          starts a new connector section
//! //_link:ID               a slot where matching connectors attach
//! //_param:NAME = VALUE    a parameter visible to lower tree levels
//! ```
//!
//! The directive token must immediately follow the comment token (`//_link:`
//! yes, `// _link:` no). Everything else passes through verbatim; no host
//! language parsing happens here.

use std::path::Path;

use thiserror::Error;

/// Names injected by the toolkit; user templates may not declare them.
pub const RESERVED_PARAMS: [&str; 2] = ["__file__", "__indent__"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentStyle {
    pub name: String,
    pub line_token: String,
}

impl CommentStyle {
    pub fn new(name: &str, line_token: &str) -> Self {
        assert!(
            !line_token.is_empty() && !line_token.contains(char::is_whitespace),
            "comment token must be non-empty and whitespace-free"
        );
        CommentStyle {
            name: name.to_string(),
            line_token: line_token.to_string(),
        }
    }

    pub fn c() -> Self {
        CommentStyle::new("c", "//")
    }

    pub fn fortran() -> Self {
        CommentStyle::new("fortran", "!")
    }

    /// Default styles for a source file, inferred from its extension.
    /// Unknown extensions scan for both C and Fortran comment tokens.
    pub fn for_path(path: &Path) -> Vec<CommentStyle> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        match ext.as_str() {
            "c" | "h" | "cc" | "cpp" | "cxx" | "hpp" | "cu" | "cuh" => vec![CommentStyle::c()],
            "f" | "f90" | "f95" | "f03" | "f08" | "for" => vec![CommentStyle::fortran()],
            _ => vec![CommentStyle::c(), CommentStyle::fortran()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectiveKind {
    Connector,
    Link,
    Param,
}

/// A recognized directive line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub kind: DirectiveKind,
    /// Connector/link id, or parameter name.
    pub id_or_name: String,
    /// Parameter value; present iff `kind == Param`.
    pub value: Option<String>,
    /// Whitespace preceding the comment token.
    pub leading_ws: String,
    /// 1-based line number in the source file.
    pub source_line: usize,
}

/// Result of classifying one physical line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScannedLine {
    Code(String),
    Directive(Directive),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("{file}:{line}: malformed directive: {detail}")]
    MalformedDirective {
        file: String,
        line: usize,
        detail: String,
    },
    #[error("{file}:{line}: _param directive has no `=`")]
    ParamMissingEquals { file: String, line: usize },
    #[error("{file}: template contains no _connector directive")]
    NoConnector { file: String },
    #[error("{file}:{line}: duplicate connector id `{id}`")]
    DuplicateConnector {
        file: String,
        line: usize,
        id: String,
    },
    #[error("{file}:{line}: {kind} directive before the first connector")]
    StrayDirective {
        file: String,
        line: usize,
        kind: String,
    },
    #[error("{file}:{line}: parameter name `{name}` is reserved")]
    ReservedParam {
        file: String,
        line: usize,
        name: String,
    },
}

/// One item of a connector section's body, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BodyItem {
    /// Verbatim source line.
    Code(String),
    /// Parameter declaration; `raw` keeps the original line for reconstruction.
    Param {
        name: String,
        value: String,
        raw: String,
    },
    /// Attachment slot; `raw` keeps the original line.
    Link {
        id: String,
        leading_ws: String,
        raw: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectorSection {
    pub id: String,
    /// The original `_connector` directive line.
    pub header_raw: String,
    pub body: Vec<BodyItem>,
}

impl ConnectorSection {
    /// All parameters declared in this section, in declaration order.
    pub fn params(&self) -> Vec<(String, String)> {
        self.body
            .iter()
            .filter_map(|item| match item {
                BodyItem::Param { name, value, .. } => Some((name.clone(), value.clone())),
                _ => None,
            })
            .collect()
    }

    /// Ids of the links in this section, in source order.
    pub fn link_ids(&self) -> Vec<String> {
        self.body
            .iter()
            .filter_map(|item| match item {
                BodyItem::Link { id, .. } => Some(id.clone()),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    /// File identity, recorded in trees as the `__file__` parameter.
    pub source_name: String,
    /// Lines before the first connector; kept for reconstruction and line
    /// accounting, never attached to trees.
    pub header: Vec<String>,
    pub sections: Vec<ConnectorSection>,
}

impl Template {
    pub fn section(&self, id: &str) -> Option<&ConnectorSection> {
        self.sections.iter().find(|s| s.id == id)
    }

    /// A copy containing only the named sections, keeping template order.
    pub fn select_sections(&self, ids: &[String]) -> Template {
        Template {
            source_name: self.source_name.clone(),
            header: self.header.clone(),
            sections: self
                .sections
                .iter()
                .filter(|s| ids.iter().any(|id| *id == s.id))
                .cloned()
                .collect(),
        }
    }

    /// Reassembles the template text: directive and code lines in source
    /// order.
    pub fn reconstruct(&self) -> String {
        let mut out = String::new();
        for line in &self.header {
            out.push_str(line);
            out.push('\n');
        }
        for section in &self.sections {
            out.push_str(&section.header_raw);
            out.push('\n');
            for item in &section.body {
                let line = match item {
                    BodyItem::Code(text) => text,
                    BodyItem::Param { raw, .. } => raw,
                    BodyItem::Link { raw, .. } => raw,
                };
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Classifies one physical line (no trailing newline) as code or directive.
///
/// A line is a directive iff it consists of optional whitespace, a comment
/// token from `styles`, then `_connector:`/`_link:`/`_param:` immediately
/// after the token. A directive owns its whole line.
pub fn scan_line(
    line: &str,
    styles: &[CommentStyle],
    source_name: &str,
    source_line: usize,
) -> Result<ScannedLine, TemplateError> {
    let trimmed = line.trim_start();
    let leading_ws = &line[..line.len() - trimmed.len()];

    for style in styles {
        let Some(after_token) = trimmed.strip_prefix(style.line_token.as_str()) else {
            continue;
        };
        let (kind, rest) = if let Some(r) = after_token.strip_prefix("_connector:") {
            (DirectiveKind::Connector, r)
        } else if let Some(r) = after_token.strip_prefix("_link:") {
            (DirectiveKind::Link, r)
        } else if let Some(r) = after_token.strip_prefix("_param:") {
            (DirectiveKind::Param, r)
        } else {
            // A comment, but not a directive.
            return Ok(ScannedLine::Code(line.to_string()));
        };

        match kind {
            DirectiveKind::Connector | DirectiveKind::Link => {
                let id = rest.trim_end();
                if !is_identifier(id) {
                    return Err(TemplateError::MalformedDirective {
                        file: source_name.to_string(),
                        line: source_line,
                        detail: format!("invalid identifier `{id}`"),
                    });
                }
                return Ok(ScannedLine::Directive(Directive {
                    kind,
                    id_or_name: id.to_string(),
                    value: None,
                    leading_ws: leading_ws.to_string(),
                    source_line,
                }));
            }
            DirectiveKind::Param => {
                let Some((name, value)) = rest.split_once('=') else {
                    return Err(TemplateError::ParamMissingEquals {
                        file: source_name.to_string(),
                        line: source_line,
                    });
                };
                let name = name.trim();
                if !is_identifier(name) {
                    return Err(TemplateError::MalformedDirective {
                        file: source_name.to_string(),
                        line: source_line,
                        detail: format!("invalid parameter name `{name}`"),
                    });
                }
                return Ok(ScannedLine::Directive(Directive {
                    kind,
                    id_or_name: name.to_string(),
                    // Empty values are legal: a parameter may expand to nothing.
                    value: Some(value.trim().to_string()),
                    leading_ws: leading_ws.to_string(),
                    source_line,
                }));
            }
        }
    }

    Ok(ScannedLine::Code(line.to_string()))
}

/// Parses a full template file into connector sections.
///
/// Lines before the first connector are treated as file header and ignored;
/// a `_param` or `_link` directive there is an error.
pub fn parse_template(
    text: &str,
    source_name: &str,
    styles: &[CommentStyle],
) -> Result<Template, TemplateError> {
    let mut header: Vec<String> = Vec::new();
    let mut sections: Vec<ConnectorSection> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        match scan_line(line, styles, source_name, lineno)? {
            ScannedLine::Directive(d) => match d.kind {
                DirectiveKind::Connector => {
                    if sections.iter().any(|s| s.id == d.id_or_name) {
                        return Err(TemplateError::DuplicateConnector {
                            file: source_name.to_string(),
                            line: lineno,
                            id: d.id_or_name,
                        });
                    }
                    sections.push(ConnectorSection {
                        id: d.id_or_name,
                        header_raw: line.to_string(),
                        body: Vec::new(),
                    });
                }
                DirectiveKind::Link => {
                    let Some(section) = sections.last_mut() else {
                        return Err(TemplateError::StrayDirective {
                            file: source_name.to_string(),
                            line: lineno,
                            kind: "_link".to_string(),
                        });
                    };
                    section.body.push(BodyItem::Link {
                        id: d.id_or_name,
                        leading_ws: d.leading_ws,
                        raw: line.to_string(),
                    });
                }
                DirectiveKind::Param => {
                    let Some(section) = sections.last_mut() else {
                        return Err(TemplateError::StrayDirective {
                            file: source_name.to_string(),
                            line: lineno,
                            kind: "_param".to_string(),
                        });
                    };
                    if RESERVED_PARAMS.contains(&d.id_or_name.as_str()) {
                        return Err(TemplateError::ReservedParam {
                            file: source_name.to_string(),
                            line: lineno,
                            name: d.id_or_name,
                        });
                    }
                    section.body.push(BodyItem::Param {
                        name: d.id_or_name,
                        value: d.value.unwrap_or_default(),
                        raw: line.to_string(),
                    });
                }
            },
            ScannedLine::Code(code) => {
                if let Some(section) = sections.last_mut() {
                    section.body.push(BodyItem::Code(code));
                } else {
                    header.push(code);
                }
            }
        }
    }

    if sections.is_empty() {
        return Err(TemplateError::NoConnector {
            file: source_name.to_string(),
        });
    }
    Ok(Template {
        source_name: source_name.to_string(),
        header,
        sections,
    })
}
