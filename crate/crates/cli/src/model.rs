//! JSON model files.
//!
//! Complex numbers are `[re, im]` pairs; stacks are lists of levels, level
//! `l` holding `k_1 ⋯ k_l` pairs. Field order is fixed by the struct
//! definitions, and numbers are written in shortest round-trip form, so the
//! same model always serializes to the same bytes.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lfdecouple::decouple::{DecoupledModel, GridSpec, ModelKind, SampleTensor, WeightStack};
use lfdecouple::lagrange::NodeSet;
use lfdecouple::{Complex64, Error};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

pub type Pair = [f64; 2];

fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

fn complex(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pairs(v: &[Complex64]) -> Vec<Pair> {
    v.iter().copied().map(pair).collect()
}

fn complexes(v: &[Pair]) -> Vec<Complex64> {
    v.iter().map(complex).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    pub ord_tol: f64,
    pub seed: u64,
    /// Function evaluations used to build the model.
    pub sample_count: usize,
    pub function_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    /// `"polynomial"` or `"rational"`.
    pub kind: String,
    pub variables: Vec<String>,
    pub nodes: Vec<Vec<Pair>>,
    pub anchors: Vec<usize>,
    pub num_stack: Vec<Vec<Pair>>,
    pub den_stack: Vec<Vec<Pair>>,
    /// Grid samples, variable 1 slowest.
    pub samples: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_nodes: Option<Vec<Vec<Pair>>>,
    pub metadata: Metadata,
}

impl ModelFile {
    pub fn from_model(
        model: &DecoupledModel,
        left_nodes: Option<&[NodeSet]>,
        metadata: Metadata,
    ) -> Self {
        let grid = model.grid();
        ModelFile {
            format_version: FORMAT_VERSION,
            kind: match model.kind() {
                ModelKind::Polynomial => "polynomial",
                ModelKind::Rational => "rational",
            }
            .to_string(),
            variables: grid.variables().to_vec(),
            nodes: grid.nodes().iter().map(|n| pairs(n.as_slice())).collect(),
            anchors: grid.anchors().to_vec(),
            num_stack: model
                .num_stack()
                .levels()
                .iter()
                .map(|l| pairs(l))
                .collect(),
            den_stack: model
                .den_stack()
                .levels()
                .iter()
                .map(|l| pairs(l))
                .collect(),
            samples: pairs(model.samples().values()),
            left_nodes: left_nodes.map(|sets| sets.iter().map(|n| pairs(n.as_slice())).collect()),
            metadata,
        }
    }

    /// Rebuilds the model, checking every shape against the node counts.
    pub fn to_model(&self) -> Result<DecoupledModel> {
        if self.format_version != FORMAT_VERSION {
            bail!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                self.format_version
            );
        }
        let kind = match self.kind.as_str() {
            "polynomial" => ModelKind::Polynomial,
            "rational" => ModelKind::Rational,
            other => bail!("unknown model kind {other:?}"),
        };
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeSet::new(complexes(n)))
            .collect::<lfdecouple::Result<Vec<_>>>()?;
        let grid = GridSpec::with_anchors(self.variables.clone(), nodes, self.anchors.clone())?;
        let shape = grid.shape().clone();
        let stack = |levels: &[Vec<Pair>]| {
            WeightStack::new(&shape, levels.iter().map(|l| complexes(l)).collect())
        };
        let num = stack(&self.num_stack)?;
        let den = stack(&self.den_stack)?;
        let samples = SampleTensor::new(shape.clone(), complexes(&self.samples))?;
        Ok(DecoupledModel::from_parts(
            grid,
            kind,
            num,
            den,
            samples,
            self.metadata.sample_count,
        )?)
    }

    pub fn left_node_sets(&self) -> Result<Option<Vec<NodeSet>>> {
        match &self.left_nodes {
            None => Ok(None),
            Some(sets) => Ok(Some(
                sets.iter()
                    .map(|n| NodeSet::new(complexes(n)))
                    .collect::<lfdecouple::Result<Vec<_>>>()?,
            )),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("model file serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Shape(format!("malformed model file {}: {e}", path.display())))?;
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lfdecouple::decouple::{decouple_polynomial, reconstruct};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn polya(p: &[Complex64]) -> Complex64 {
        p[0] * p[1] + p[0] * p[2] + p[1] * p[2]
    }

    fn metadata() -> Metadata {
        Metadata {
            tool_version: "test".into(),
            ord_tol: 1e-8,
            seed: 1,
            sample_count: 8,
            function_count: 7,
            expr: None,
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let grid = GridSpec::from_reals(&[&[1.0, 2.0], &[1.0, 2.0], &[0.5, 2.0]]).unwrap();
        let model = decouple_polynomial(&polya, &grid).unwrap();
        let file = ModelFile::from_model(&model, None, metadata());
        let back: ModelFile = serde_json::from_str(&file.to_json()).unwrap();
        assert_eq!(back, file);
        let rebuilt = back.to_model().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p: Vec<Complex64> = (0..3)
                .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let a = reconstruct(&model, &p).unwrap();
            let b = reconstruct(&rebuilt, &p).unwrap();
            assert_eq!(
                (a.re.to_bits(), a.im.to_bits()),
                (b.re.to_bits(), b.im.to_bits())
            );
        }
        assert_eq!(file.to_json(), back.to_json());
    }

    #[test]
    fn stack_length_mismatch_is_rejected() {
        let grid = GridSpec::from_reals(&[&[1.0, 2.0], &[1.0, 2.0]]).unwrap();
        let f = |p: &[Complex64]| p[0] + p[1];
        let model = decouple_polynomial(&f, &grid).unwrap();
        let mut file = ModelFile::from_model(&model, None, metadata());
        file.num_stack[1].pop();
        assert!(file.to_model().is_err());
        let mut file = ModelFile::from_model(&model, None, metadata());
        file.format_version = 99;
        assert!(file.to_model().is_err());
    }
}
