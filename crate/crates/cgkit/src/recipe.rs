//! Recipes: user-facing construction of control-flow graphs.
//!
//! A recipe couples a flow graph with the template registry its code-gen
//! nodes refer to. Graphs are built either through the embedded API (node
//! constructors, begin-end pair factories, reusable subgraph functions) or
//! from a declarative TOML manifest.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::cfg::{
    FlowGraph, GraphError, Handle, NodeAction, NodeKind, NodeSpec, PairFamily, PairId, PairRole,
};
use crate::pst::DEFAULT_INDENT_WIDTH;
use crate::template::{parse_template, CommentStyle, Template, TemplateError};

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("node `{node}` depends on undeclared name `{dep}`")]
    UnknownDependency { node: String, dep: String },
    #[error("manifest schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Render settings carried by a manifest.
#[derive(Debug, Clone)]
pub struct RenderConfig {
    pub comment_style: CommentStyle,
    pub indent_width: usize,
    pub verbose: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            comment_style: CommentStyle::c(),
            indent_width: DEFAULT_INDENT_WIDTH,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Recipe {
    pub graph: FlowGraph,
    templates: HashMap<String, Template>,
    /// Root template binding (template name, connector id), when declared.
    pub root_binding: Option<(String, String)>,
    pub render: RenderConfig,
}

impl Recipe {
    pub fn new() -> Self {
        Recipe::default()
    }

    pub fn register_template(&mut self, name: &str, template: Template) {
        self.templates.insert(name.to_string(), template);
    }

    pub fn template(&self, name: &str) -> Result<&Template, RecipeError> {
        self.templates
            .get(name)
            .ok_or_else(|| RecipeError::UnknownTemplate(name.to_string()))
    }

    pub fn template_names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn templates(&self) -> impl Iterator<Item = &Template> {
        self.templates.values()
    }

    pub fn root(&self) -> Handle {
        self.graph.root()
    }

    pub fn add(
        &mut self,
        node: NodeSpec,
        deps: impl Into<crate::cfg::Deps>,
    ) -> Result<Handle, RecipeError> {
        Ok(self.graph.add(node, deps)?)
    }

    /// Checks graph validity and that every code-gen action resolves in the
    /// template registry.
    pub fn seal(&mut self) -> Result<(), RecipeError> {
        for handle in self.graph.handles().collect::<Vec<_>>() {
            let action = self.graph.node(handle).action.clone();
            match action {
                NodeAction::CodeGen { template, .. } | NodeAction::Region { template, .. } => {
                    self.template(&template)?;
                }
                NodeAction::None => {}
            }
        }
        self.graph
            .validate()
            .map_err(|violations| RecipeError::Schema(format!("invalid graph: {violations:?}")))?;
        Ok(())
    }
}

/// Region payload for a begin node: template name + connector section that
/// contains the region's interior link.
#[derive(Debug, Clone)]
pub struct RegionRef {
    pub template: String,
    pub connector: String,
}

impl RegionRef {
    pub fn new(template: &str, connector: &str) -> Self {
        RegionRef {
            template: template.to_string(),
            connector: connector.to_string(),
        }
    }
}

/// Creates a partner-linked begin/end node pair for a loop or
/// concurrent-data region.
pub fn loop_pair(
    family: PairFamily,
    begin_name: &str,
    end_name: &str,
    region: RegionRef,
) -> (NodeSpec, NodeSpec) {
    let pair = PairId::fresh();
    let begin = NodeSpec {
        name: begin_name.to_string(),
        kind: NodeKind::BeginEnd {
            role: PairRole::Begin,
            family,
            pair,
        },
        action: NodeAction::Region {
            template: region.template,
            connector: region.connector,
        },
    };
    let end = NodeSpec {
        name: end_name.to_string(),
        kind: NodeKind::BeginEnd {
            role: PairRole::End,
            family,
            pair,
        },
        action: NodeAction::None,
    };
    (begin, end)
}

/// Node bundle for the block-initialization subgraph.
#[derive(Debug, Clone)]
pub struct BlockInitNodes {
    pub shock_det: NodeSpec,
    pub init_soln: NodeSpec,
    pub null: NodeSpec,
}

/// Fan-out/fan-in diamond: shock detection and solution initialization both
/// depend on the entry; a null node joins them. Returns the join handle.
pub fn subgraph_block_init(
    recipe: &mut Recipe,
    entry: Handle,
    nodes: BlockInitNodes,
) -> Result<Handle, RecipeError> {
    let shock_det = recipe.add(nodes.shock_det, entry)?;
    let init_soln = recipe.add(nodes.init_soln, entry)?;
    recipe.add(nodes.null, vec![shock_det, init_soln])
}

/// Node bundle for the intra-stage calculation subgraph.
#[derive(Debug, Clone)]
pub struct IntraStageNodes {
    pub grv_accel: NodeSpec,
    pub calc_lims: NodeSpec,
    pub calc_flux: NodeSpec,
    pub flux_buff: NodeSpec,
    pub upd_soln: NodeSpec,
    pub calc_eos: NodeSpec,
    pub null: NodeSpec,
}

/// Chain gravity-acceleration -> limits -> fluxes, then branch into flux
/// buffering and solution update -> EOS; a null node joins the branches.
/// Seven nodes, eight edges. Returns the join handle.
pub fn subgraph_intra_stage(
    recipe: &mut Recipe,
    entry: Handle,
    nodes: IntraStageNodes,
) -> Result<Handle, RecipeError> {
    let grv_accel = recipe.add(nodes.grv_accel, entry)?;
    let calc_lims = recipe.add(nodes.calc_lims, grv_accel)?;
    let calc_flux = recipe.add(nodes.calc_flux, calc_lims)?;
    let flux_buff = recipe.add(nodes.flux_buff, calc_flux)?;
    let upd_soln = recipe.add(nodes.upd_soln, calc_flux)?;
    let calc_eos = recipe.add(nodes.calc_eos, upd_soln)?;
    recipe.add(nodes.null, vec![flux_buff, calc_eos])
}

// ---------------------------------------------------------------------------
// Declarative manifest
// ---------------------------------------------------------------------------

/// Declarative recipe document (TOML). See the repository README for the
/// schema; field names here are the stable external interface.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub render: ManifestRender,
    pub root: ManifestRoot,
    #[serde(default)]
    pub templates: Vec<ManifestTemplate>,
    #[serde(default)]
    pub nodes: Vec<ManifestNode>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ManifestRender {
    /// "c", "fortran", or a literal comment token.
    pub comment_style: Option<String>,
    pub indent_width: Option<usize>,
    #[serde(default)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRoot {
    pub template: String,
    pub connector: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestTemplate {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestNode {
    pub name: String,
    /// "codegen", "begin", "end", or "null".
    pub kind: String,
    /// Begin/end pairs are matched by this key.
    pub pair: Option<String>,
    /// "loop" (default) or "concurrent" for begin nodes.
    pub family: Option<String>,
    pub template: Option<String>,
    /// Connector selection: codegen may list several; begin takes one.
    #[serde(default)]
    pub connectors: Vec<String>,
    pub connector: Option<String>,
    /// Dependencies by node name; "root" refers to the implicit root.
    pub deps: Vec<String>,
}

pub fn comment_style_from_name(name: &str) -> CommentStyle {
    match name {
        "c" => CommentStyle::c(),
        "fortran" => CommentStyle::fortran(),
        token => CommentStyle::new(token, token),
    }
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self, RecipeError> {
        toml::from_str(text).map_err(|e| RecipeError::Schema(e.to_string()))
    }
}

fn read_template(path: &Path, style: &CommentStyle) -> Result<Template, RecipeError> {
    let text = std::fs::read_to_string(path).map_err(|source| RecipeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let source_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("template")
        .to_string();
    Ok(parse_template(&text, &source_name, &[style.clone()])?)
}

/// Builds a recipe from a manifest: templates parsed and registered, nodes
/// added in declaration order with declared dependencies, begin/end pairs
/// instantiated from paired declarations.
pub fn load_manifest(manifest: &Manifest, base_dir: &Path) -> Result<Recipe, RecipeError> {
    let mut recipe = Recipe::new();
    recipe.render = RenderConfig {
        comment_style: manifest
            .render
            .comment_style
            .as_deref()
            .map(comment_style_from_name)
            .unwrap_or_else(CommentStyle::c),
        indent_width: manifest.render.indent_width.unwrap_or(DEFAULT_INDENT_WIDTH),
        verbose: manifest.render.verbose,
    };

    for tpl in &manifest.templates {
        let path = base_dir.join(&tpl.path);
        let template = read_template(&path, &recipe.render.comment_style)?;
        recipe.register_template(&tpl.name, template);
    }
    recipe.template(&manifest.root.template).map_err(|_| {
        RecipeError::UnknownTemplate(manifest.root.template.clone())
    })?;
    recipe.root_binding = Some((manifest.root.template.clone(), manifest.root.connector.clone()));

    // Match begin/end declarations into partner pairs first.
    let mut pair_ids: HashMap<String, PairId> = HashMap::new();
    for node in &manifest.nodes {
        if node.kind == "begin" || node.kind == "end" {
            let key = node.pair.as_ref().ok_or_else(|| {
                RecipeError::Schema(format!("node `{}` needs a `pair` key", node.name))
            })?;
            pair_ids.entry(key.clone()).or_insert_with(PairId::fresh);
        }
    }
    for (key, _) in &pair_ids {
        let begins = manifest
            .nodes
            .iter()
            .filter(|n| n.kind == "begin" && n.pair.as_deref() == Some(key))
            .count();
        let ends = manifest
            .nodes
            .iter()
            .filter(|n| n.kind == "end" && n.pair.as_deref() == Some(key))
            .count();
        if begins != 1 || ends != 1 {
            return Err(RecipeError::Schema(format!(
                "pair `{key}` must have exactly one begin and one end (found {begins}/{ends})"
            )));
        }
    }

    let mut handles: HashMap<String, Handle> = HashMap::new();
    handles.insert("root".to_string(), recipe.root());
    for node in &manifest.nodes {
        if handles.contains_key(&node.name) {
            return Err(RecipeError::Schema(format!(
                "duplicate node name `{}`",
                node.name
            )));
        }
        let template_of = |node: &ManifestNode| -> Result<String, RecipeError> {
            let name = node.template.as_ref().ok_or_else(|| {
                RecipeError::Schema(format!("node `{}` needs a `template` key", node.name))
            })?;
            recipe.template(name)?;
            Ok(name.clone())
        };
        let spec = match node.kind.as_str() {
            "codegen" => NodeSpec {
                name: node.name.clone(),
                kind: NodeKind::CodeGen,
                action: NodeAction::CodeGen {
                    template: template_of(node)?,
                    connectors: node.connectors.clone(),
                },
            },
            "begin" => {
                let family = match node.family.as_deref().unwrap_or("loop") {
                    "loop" => PairFamily::Loop,
                    "concurrent" => PairFamily::ConcurrentData,
                    other => {
                        return Err(RecipeError::Schema(format!(
                            "node `{}`: unknown family `{other}`",
                            node.name
                        )))
                    }
                };
                let connector = node.connector.clone().ok_or_else(|| {
                    RecipeError::Schema(format!("node `{}` needs a `connector` key", node.name))
                })?;
                NodeSpec {
                    name: node.name.clone(),
                    kind: NodeKind::BeginEnd {
                        role: PairRole::Begin,
                        family,
                        pair: pair_ids[node.pair.as_ref().unwrap()],
                    },
                    action: NodeAction::Region {
                        template: template_of(node)?,
                        connector,
                    },
                }
            }
            "end" => {
                let family = match node.family.as_deref().unwrap_or("loop") {
                    "loop" => PairFamily::Loop,
                    "concurrent" => PairFamily::ConcurrentData,
                    other => {
                        return Err(RecipeError::Schema(format!(
                            "node `{}`: unknown family `{other}`",
                            node.name
                        )))
                    }
                };
                NodeSpec {
                    name: node.name.clone(),
                    kind: NodeKind::BeginEnd {
                        role: PairRole::End,
                        family,
                        pair: pair_ids[node.pair.as_ref().unwrap()],
                    },
                    action: NodeAction::None,
                }
            }
            "null" => NodeSpec::null(&node.name),
            other => {
                return Err(RecipeError::Schema(format!(
                    "node `{}`: unknown kind `{other}`",
                    node.name
                )))
            }
        };
        let mut deps = Vec::new();
        for dep in &node.deps {
            let handle = handles.get(dep).ok_or_else(|| RecipeError::UnknownDependency {
                node: node.name.clone(),
                dep: dep.clone(),
            })?;
            deps.push(*handle);
        }
        let handle = recipe.add(spec, deps)?;
        handles.insert(node.name.clone(), handle);
    }
    Ok(recipe)
}

/// Convenience: read and load a manifest file; paths are resolved relative
/// to the manifest's directory.
pub fn load_manifest_file(path: &Path) -> Result<Recipe, RecipeError> {
    let text = std::fs::read_to_string(path).map_err(|source| RecipeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest = Manifest::from_toml(&text)?;
    let base_dir = path.parent().unwrap_or(Path::new("."));
    load_manifest(&manifest, base_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::NodeKind;

    fn call(name: &str) -> NodeSpec {
        NodeSpec::code_gen(name, "tpl", &[])
    }

    #[test]
    fn loop_pair_members_are_partners() {
        let (begin, end) = loop_pair(
            PairFamily::Loop,
            "loop_begin",
            "loop_end",
            RegionRef::new("tpl", "body"),
        );
        let (NodeKind::BeginEnd { pair: pb, .. }, NodeKind::BeginEnd { pair: pe, .. }) =
            (&begin.kind, &end.kind)
        else {
            panic!("expected begin-end kinds");
        };
        assert_eq!(pb, pe);
    }

    #[test]
    fn loop_pair_wired_in_sequence_validates() {
        // hLB<-hS; X<-hLB; Y<-hX; hLE<-hY
        let mut recipe = Recipe::new();
        let (begin, end) = loop_pair(
            PairFamily::Loop,
            "lb",
            "le",
            RegionRef::new("tpl", "body"),
        );
        let s = recipe.add(call("S"), recipe.root()).unwrap();
        let lb = recipe.add(begin, s).unwrap();
        let x = recipe.add(call("X"), lb).unwrap();
        let y = recipe.add(call("Y"), x).unwrap();
        let _le = recipe.add(end, y).unwrap();
        assert!(recipe.graph.validate().is_ok());
    }

    #[test]
    fn concurrent_pair_traversal_order() {
        let mut recipe = Recipe::new();
        let (begin, end) = loop_pair(
            PairFamily::ConcurrentData,
            "cb",
            "ce",
            RegionRef::new("tpl", "body"),
        );
        let b = recipe.add(begin, recipe.root()).unwrap();
        let n = recipe.add(call("N"), b).unwrap();
        let _e = recipe.add(end, n).unwrap();
        recipe.graph.validate().unwrap();
        let names: Vec<String> = recipe
            .graph
            .traverse()
            .unwrap()
            .iter()
            .map(|h| recipe.graph.node(*h).name.clone())
            .collect();
        assert_eq!(names, vec!["root", "cb", "N", "ce"]);
    }

    #[test]
    fn block_init_shape() {
        let mut recipe = Recipe::new();
        let entry = recipe.root();
        let before_nodes = recipe.graph.len();
        let before_edges = recipe.graph.edge_count();
        let exit = subgraph_block_init(
            &mut recipe,
            entry,
            BlockInitNodes {
                shock_det: call("shock_det"),
                init_soln: call("init_soln"),
                null: NodeSpec::null("join"),
            },
        )
        .unwrap();
        assert_eq!(recipe.graph.len() - before_nodes, 3);
        assert_eq!(recipe.graph.edge_count() - before_edges, 4);
        recipe.graph.validate().unwrap();
        let order = recipe.graph.traverse().unwrap();
        let names: Vec<String> = order
            .iter()
            .map(|h| recipe.graph.node(*h).name.clone())
            .collect();
        assert_eq!(names, vec!["root", "shock_det", "init_soln", "join"]);
        assert_eq!(recipe.graph.node(exit).name, "join");
    }

    #[test]
    fn intra_stage_shape() {
        let mut recipe = Recipe::new();
        let entry = recipe.root();
        let before_nodes = recipe.graph.len();
        let before_edges = recipe.graph.edge_count();
        let exit = subgraph_intra_stage(
            &mut recipe,
            entry,
            IntraStageNodes {
                grv_accel: call("grv_accel"),
                calc_lims: call("calc_lims"),
                calc_flux: call("calc_flux"),
                flux_buff: call("flux_buff"),
                upd_soln: call("upd_soln"),
                calc_eos: call("calc_eos"),
                null: NodeSpec::null("join"),
            },
        )
        .unwrap();
        assert_eq!(recipe.graph.len() - before_nodes, 7);
        assert_eq!(recipe.graph.edge_count() - before_edges, 8);
        recipe.graph.validate().unwrap();
        let order = recipe.graph.traverse().unwrap();
        assert_eq!(order.last().copied(), Some(exit));
    }

    /// Two invocations with fresh node specs produce the same shape under
    /// insertion-order relabeling.
    #[test]
    fn subgraphs_are_pure() {
        let shape = |recipe: &Recipe, offset: usize| -> (Vec<String>, String) {
            let text = recipe.graph.export_text();
            let edges: Vec<String> = text
                .lines()
                .filter(|l| l.starts_with("edge"))
                .map(|l| {
                    let mut parts = l.split_whitespace().skip(1);
                    let u: usize = parts.next().unwrap().parse().unwrap();
                    let v: usize = parts.next().unwrap().parse().unwrap();
                    format!("{}-{}", u.saturating_sub(offset), v.saturating_sub(offset))
                })
                .collect();
            (edges, text)
        };
        let mut a = Recipe::new();
        let root_a = a.root();
        subgraph_intra_stage(
            &mut a,
            root_a,
            IntraStageNodes {
                grv_accel: call("g"),
                calc_lims: call("l"),
                calc_flux: call("f"),
                flux_buff: call("b"),
                upd_soln: call("u"),
                calc_eos: call("e"),
                null: NodeSpec::null("n"),
            },
        )
        .unwrap();
        let mut b = Recipe::new();
        let root_b = b.root();
        subgraph_intra_stage(
            &mut b,
            root_b,
            IntraStageNodes {
                grv_accel: call("g"),
                calc_lims: call("l"),
                calc_flux: call("f"),
                flux_buff: call("b"),
                upd_soln: call("u"),
                calc_eos: call("e"),
                null: NodeSpec::null("n"),
            },
        )
        .unwrap();
        assert_eq!(shape(&a, 0).0, shape(&b, 0).0);
    }

    #[test]
    fn manifest_errors() {
        let missing_template = r#"
[root]
template = "driver"
connector = "driver"

[[nodes]]
name = "a"
kind = "codegen"
template = "nope"
deps = ["root"]
"#;
        let manifest = Manifest::from_toml(missing_template).unwrap();
        let err = load_manifest(&manifest, Path::new(".")).unwrap_err();
        assert!(matches!(err, RecipeError::UnknownTemplate(_)));
    }

    #[test]
    fn manifest_unknown_dependency() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("d.c"), "//_connector:driver\nx;\n").unwrap();
        let text = r#"
[root]
template = "driver"
connector = "driver"

[[templates]]
name = "driver"
path = "d.c"

[[nodes]]
name = "a"
kind = "codegen"
template = "driver"
deps = ["ghost"]
"#;
        let manifest = Manifest::from_toml(text).unwrap();
        let err = load_manifest(&manifest, dir.path()).unwrap_err();
        assert!(matches!(err, RecipeError::UnknownDependency { .. }));
    }
}
