//! Composable code generation from annotated source templates.
//!
//! Templates are ordinary source files annotated with comment directives:
//! `_connector` names an attachable section, `_link` marks a slot where
//! connectors of other templates may attach, and `_param` declares a value
//! substituted into `${name}` tokens at render time. Composed templates form
//! a parametrized source tree ([`pst`]) that serializes to canonical JSON
//! and renders to compilable source.
//!
//! Larger builds are driven by a control-flow graph ([`cfg`]) constructed
//! through a recipe ([`recipe`]) and executed by the [`driver`], which grows
//! the tree one node at a time in blocking traversal order. [`metrics`]
//! quantifies the resulting code reduction and [`cli`] exposes the whole
//! chain as a command-line tool.

pub mod cfg;
pub mod cli;
pub mod driver;
pub mod metrics;
pub mod pst;
pub mod recipe;
pub mod template;

pub use cfg::{FlowGraph, Handle, NodeSpec, PairFamily, Violation};
pub use driver::{build, BuildOutcome};
pub use pst::{attach, new_tree, render, to_json, to_json_string, Pst, RenderOptions};
pub use recipe::{load_manifest_file, Recipe};
pub use template::{parse_template, CommentStyle, Template};
