//! Graph-driven tree construction: traverse a validated recipe graph and
//! execute each node's code-generation operation against a growing tree.

use thiserror::Error;

use crate::cfg::{GraphError, NodeAction, NodeKind, NodeSpec, PairRole};
use crate::pst::{attach_within, new_tree, LinkAddr, Pst, PstError, PstItem};
use crate::recipe::{Recipe, RecipeError};
use crate::template::Template;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("recipe has no root template binding")]
    MissingRootBinding,
    #[error("graph must be validated before building (call seal)")]
    NotValidated,
    #[error("region connector `{connector}` matches {sites} links; a region needs exactly one site")]
    RegionFanOut { connector: String, sites: usize },
    #[error("region connector `{connector}` contains {links} interior links; expected exactly one")]
    RegionLinkCount { connector: String, links: usize },
    #[error("end node closed a region that was never opened")]
    ContextUnderflow,
    #[error("build finished with {depth} open region(s)")]
    UnbalancedBuild { depth: usize },
    #[error(transparent)]
    Recipe(#[from] RecipeError),
    #[error(transparent)]
    Pst(#[from] PstError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One log entry per tree-mutating node visit. Root and null nodes are
/// suppressed; the log mirrors the graph's content nodes in visit order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildLogEntry {
    pub node: String,
    pub operation: String,
}

impl std::fmt::Display for BuildLogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.node, self.operation)
    }
}

/// Build state threaded through the traversal.
#[derive(Debug)]
pub struct BuildContext {
    pub tree: Pst,
    /// Open attachment contexts; `None` is the whole-tree root context.
    link_stack: Vec<Option<LinkAddr>>,
    pub log: Vec<BuildLogEntry>,
}

#[derive(Debug)]
pub struct BuildOutcome {
    pub tree: Pst,
    pub log: Vec<BuildLogEntry>,
}

/// A failed build, carrying the offending node, the log so far, and the
/// partial tree serialized as JSON for inspection.
#[derive(Debug)]
pub struct BuildFailure {
    pub node: Option<String>,
    pub error: DriverError,
    pub log: Vec<BuildLogEntry>,
    pub partial_json: Option<String>,
}

impl std::fmt::Display for BuildFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.node {
            Some(node) => write!(f, "build failed at node `{node}`: {}", self.error),
            None => write!(f, "build failed: {}", self.error),
        }
    }
}

impl std::error::Error for BuildFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Human-readable visit log plus failure details, for debugging.
pub fn build_report(outcome: &Result<BuildOutcome, BuildFailure>) -> String {
    let mut out = String::new();
    let log = match outcome {
        Ok(o) => &o.log,
        Err(f) => &f.log,
    };
    for entry in log {
        out.push_str(&format!("{entry}\n"));
    }
    if let Err(failure) = outcome {
        out.push_str(&format!("{failure}\n"));
        if let Some(json) = &failure.partial_json {
            out.push_str("partial tree:\n");
            out.push_str(json);
        }
    }
    out
}

fn single_section(template: &Template, id: &str) -> Template {
    template.select_sections(&[id.to_string()])
}

impl BuildContext {
    /// Attaches one section at the innermost context whose subtree has a
    /// matching link, searching outward. Returns (context depth, sites).
    fn attach_section(
        &mut self,
        template: &Template,
        section_id: &str,
    ) -> Result<usize, DriverError> {
        let fragment = single_section(template, section_id);
        for context in self.link_stack.iter().rev() {
            match attach_within(&mut self.tree, &fragment, context.as_ref()) {
                Ok(report) => return Ok(report[0].1),
                Err(PstError::UnmatchedConnector { .. }) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(PstError::UnmatchedConnector {
            template: template.source_name.clone(),
            id: section_id.to_string(),
        }
        .into())
    }

    /// Attaches a region section at its unique site and pushes the region's
    /// interior link as the new innermost context.
    fn open_region(&mut self, template: &Template, connector: &str) -> Result<(), DriverError> {
        let fragment = single_section(template, connector);
        let section = fragment.section(connector).ok_or_else(|| {
            PstError::UnknownConnector {
                template: template.source_name.clone(),
                id: connector.to_string(),
            }
        })?;
        let interior_links = section.link_ids();
        if interior_links.len() != 1 {
            return Err(DriverError::RegionLinkCount {
                connector: connector.to_string(),
                links: interior_links.len(),
            });
        }
        // find the unique site first so fan-out is a clean error, not a
        // half-applied attach
        let scope = self.link_stack.last().cloned().flatten();
        let sites: Vec<LinkAddr> = crate::pst::open_links(&self.tree)
            .into_iter()
            .filter(|l| l.id == connector)
            .filter(|l| scope.as_ref().map_or(true, |s| s.contains(&l.addr)))
            .map(|l| l.addr)
            .collect();
        match sites.len() {
            1 => {}
            0 => {
                // fall back to outer contexts, still requiring uniqueness
                return match self.attach_region_outward(&fragment, connector) {
                    Ok(addr) => {
                        self.link_stack.push(Some(addr));
                        Ok(())
                    }
                    Err(e) => Err(e),
                };
            }
            n => {
                return Err(DriverError::RegionFanOut {
                    connector: connector.to_string(),
                    sites: n,
                })
            }
        }
        let addr = attach_region_at(&mut self.tree, &fragment, &sites[0])?;
        self.link_stack.push(Some(addr));
        Ok(())
    }

    fn attach_region_outward(
        &mut self,
        fragment: &Template,
        connector: &str,
    ) -> Result<LinkAddr, DriverError> {
        for context in self.link_stack.iter().rev().skip(1) {
            let scope = context.clone();
            let sites: Vec<LinkAddr> = crate::pst::open_links(&self.tree)
                .into_iter()
                .filter(|l| l.id == connector)
                .filter(|l| scope.as_ref().map_or(true, |s| s.contains(&l.addr)))
                .map(|l| l.addr)
                .collect();
            match sites.len() {
                0 => continue,
                1 => return attach_region_at(&mut self.tree, fragment, &sites[0]),
                n => {
                    return Err(DriverError::RegionFanOut {
                        connector: connector.to_string(),
                        sites: n,
                    })
                }
            }
        }
        Err(PstError::UnmatchedConnector {
            template: fragment.source_name.clone(),
            id: connector.to_string(),
        }
        .into())
    }
}

/// Attaches `fragment` (single section) at exactly `site` and returns the
/// address of the interior link of the newly attached instance.
fn attach_region_at(
    tree: &mut Pst,
    fragment: &Template,
    site: &LinkAddr,
) -> Result<LinkAddr, DriverError> {
    attach_within(tree, fragment, Some(site))?;
    // the new instance is the last attachment at the site
    let (att_idx, body_idx) = {
        let link = crate::pst::link_ref(tree, site);
        let att_idx = link.attached.len() - 1;
        let instance = &link.attached[att_idx];
        let body_idx = instance
            .body
            .iter()
            .position(|item| matches!(item, PstItem::Link(_)))
            .expect("region section has one interior link");
        (att_idx, body_idx)
    };
    Ok(site.child(att_idx, body_idx))
}

fn visit(
    ctx: &mut Option<BuildContext>,
    recipe: &Recipe,
    node: &NodeSpec,
    indent_width: usize,
) -> Result<(), DriverError> {
    match (&node.kind, &node.action) {
        (NodeKind::Root, _) => {
            let (template_name, connector) = recipe
                .root_binding
                .as_ref()
                .ok_or(DriverError::MissingRootBinding)?;
            let template = recipe.template(template_name)?;
            let tree = new_tree(template, connector, indent_width)?;
            *ctx = Some(BuildContext {
                tree,
                link_stack: vec![None],
                log: Vec::new(),
            });
        }
        (NodeKind::CodeGen, NodeAction::CodeGen {
            template,
            connectors,
        }) => {
            let ctx = ctx.as_mut().expect("root visited first");
            let template = recipe.template(template)?;
            let section_ids: Vec<String> = if connectors.is_empty() {
                template.sections.iter().map(|s| s.id.clone()).collect()
            } else {
                connectors.clone()
            };
            let mut parts = Vec::new();
            for id in &section_ids {
                let sites = ctx.attach_section(template, id)?;
                parts.push(format!("{id} x{sites}"));
            }
            ctx.log.push(BuildLogEntry {
                node: node.name.clone(),
                operation: format!(
                    "attach {} [{}]",
                    template.source_name,
                    parts.join(", ")
                ),
            });
        }
        (
            NodeKind::BeginEnd {
                role: PairRole::Begin,
                ..
            },
            NodeAction::Region {
                template,
                connector,
            },
        ) => {
            let ctx = ctx.as_mut().expect("root visited first");
            let template = recipe.template(template)?;
            ctx.open_region(template, connector)?;
            ctx.log.push(BuildLogEntry {
                node: node.name.clone(),
                operation: format!("open region {connector} from {}", template.source_name),
            });
        }
        (
            NodeKind::BeginEnd {
                role: PairRole::End,
                ..
            },
            _,
        ) => {
            let ctx = ctx.as_mut().expect("root visited first");
            if ctx.link_stack.len() <= 1 {
                return Err(DriverError::ContextUnderflow);
            }
            ctx.link_stack.pop();
            ctx.log.push(BuildLogEntry {
                node: node.name.clone(),
                operation: "close region".to_string(),
            });
        }
        (NodeKind::Null, _) => {}
        (kind, action) => {
            // a begin node without a region payload is a recipe bug
            return Err(DriverError::Recipe(RecipeError::Schema(format!(
                "node `{}` has kind {kind:?} with incompatible action {action:?}",
                node.name
            ))));
        }
    }
    Ok(())
}

/// Runs the full chain: traverse the recipe's validated graph and execute
/// each node against the tree. The recipe must be sealed and carry a root
/// binding (`[root]` in a manifest, or `root_binding` set via the API).
pub fn build(recipe: &Recipe) -> Result<BuildOutcome, BuildFailure> {
    let indent_width = recipe.render.indent_width;
    let order = recipe.graph.traverse().map_err(|e| BuildFailure {
        node: None,
        error: DriverError::Graph(e),
        log: Vec::new(),
        partial_json: None,
    })?;
    let mut ctx: Option<BuildContext> = None;
    for handle in order {
        let node = recipe.graph.node(handle);
        if let Err(error) = visit(&mut ctx, recipe, node, indent_width) {
            let (log, partial_json) = match ctx {
                Some(c) => (c.log, Some(crate::pst::to_json_string(&c.tree))),
                None => (Vec::new(), None),
            };
            return Err(BuildFailure {
                node: Some(node.name.clone()),
                error,
                log,
                partial_json,
            });
        }
    }
    let ctx = ctx.expect("traversal visits the root");
    if ctx.link_stack.len() != 1 {
        let depth = ctx.link_stack.len() - 1;
        let partial_json = Some(crate::pst::to_json_string(&ctx.tree));
        return Err(BuildFailure {
            node: None,
            error: DriverError::UnbalancedBuild { depth },
            log: ctx.log,
            partial_json,
        });
    }
    Ok(BuildOutcome {
        tree: ctx.tree,
        log: ctx.log,
    })
}
