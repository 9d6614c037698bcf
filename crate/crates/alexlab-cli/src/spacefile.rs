//! On-disk space format and reconstruction.
//!
//! A space file is a single JSON document carrying coordinates, weights,
//! and either a generator block (exact backing) or an edge list (graph
//! backing). Exact distances are recomputed from the generator on load,
//! so the file stays small and diff-friendly.

use alexlab::generators::{make_space, SpaceKind};
use alexlab::measure::MeasuredSpace;
use alexlab::metric_core::FiniteMetricSpace;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceFile {
    pub name: String,
    pub n: usize,
    pub backing: String,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<SpaceKind>,
}

impl SpaceFile {
    pub fn from_measured(name: &str, ms: &MeasuredSpace) -> Self {
        let base = ms.base();
        SpaceFile {
            name: name.to_string(),
            n: ms.n(),
            backing: base.backing_name().to_string(),
            points: base.points().to_vec(),
            edges: base.graph_edges().map(|e| e.to_vec()),
            weights: ms.weights().to_vec(),
            generator: ms.generator().map(|g| g.kind().clone()),
        }
    }

    pub fn to_pretty_json(&self) -> Result<String> {
        let mut doc = serde_json::to_string_pretty(self)?;
        doc.push('\n');
        Ok(doc)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("space file is not valid JSON for the documented schema")
    }

    /// Rebuild the measured space. Exact backings require the generator
    /// block (coordinates alone do not determine the metric); graph
    /// backings require the edge list.
    pub fn into_measured(self) -> Result<(String, MeasuredSpace)> {
        let generator = match self.generator {
            Some(kind) => Some(make_space(kind)?),
            None => None,
        };
        let base = match self.backing.as_str() {
            "exact" => {
                let space = generator
                    .as_ref()
                    .context("exact backing requires a generator block")?;
                if space.dimension() != self.n {
                    bail!(
                        "space file declares n = {} but the generator has dimension {}",
                        self.n,
                        space.dimension()
                    );
                }
                FiniteMetricSpace::from_exact_points(space, self.points)?
            }
            "graph" => {
                let edges = self
                    .edges
                    .as_deref()
                    .context("graph backing requires an edge list")?;
                FiniteMetricSpace::build_from_graph(self.points, edges, self.n)?
            }
            other => bail!("unknown backing {other:?}; expected \"exact\" or \"graph\""),
        };
        let ms = MeasuredSpace::new(base, self.weights, generator)?;
        Ok((self.name, ms))
    }
}
