//! Pattern files: JSON documents carrying phenotype and genotype patches as
//! base64 little-endian f32.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::snapshot::f32_bytes;
use crate::error::{Error, Result};
use crate::field::{delta_sum, Dims, StackedField};
use crate::genome::{GeneSchema, Genotype, N_CHANNELS, N_GENES};

pub const FORMAT: &str = "lenia-evo-pattern";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub x: usize,
    pub y: usize,
}

/// Output of the dropper tool.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternSample {
    /// Patch center in world coordinates.
    pub center: Position,
    pub radius: usize,
    /// `3 × (2r+1)²`.
    pub phenotype: StackedField,
    /// `135 × (2r+1)²`.
    pub genotype: StackedField,
    /// Mean genotype over the disk pixels whose genes all exceed ε.
    pub averaged: Option<Genotype>,
}

impl PatternSample {
    pub fn to_pattern_file(&self, schema: &GeneSchema, world: Dims) -> PatternFile {
        let r = self.radius as isize;
        let (x, y) = world.wrap(self.center.x as isize - r, self.center.y as isize - r);
        let mut file = PatternFile::new(&self.phenotype, schema);
        file.genotype = Some(encode(self.genotype.as_slice()));
        file.averaged_genotype = self.averaged.as_ref().map(|g| g.as_slice().to_vec());
        file.position = Some(Position { x, y });
        file
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternFile {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub genes: usize,
    pub schema: GeneSchema,
    /// Base64 of `channels × width × height` f32 LE, `(c, x, y)` order.
    pub phenotype: String,
    /// Base64 of `genes × width × height` f32 LE, `(p, k, x, y)` order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genotype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaged_genotype: Option<Vec<f32>>,
    /// Top-left corner in world coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Position>,
}

fn encode(values: &[f32]) -> String {
    STANDARD.encode(f32_bytes(values))
}

fn decode(text: &str, dims: Dims, layers: usize, what: &str) -> Result<StackedField> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| Error::Pattern(format!("{what}: {e}")))?;
    if bytes.len() != dims.len() * layers * 4 {
        return Err(Error::Pattern(format!(
            "{what}: expected {} bytes for {layers} layers of {dims}, got {}",
            dims.len() * layers * 4,
            bytes.len()
        )));
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Pattern(format!("{what}: values outside [0, 1]")));
    }
    StackedField::from_vec(dims, layers, data)
}

impl PatternFile {
    pub fn new(phenotype: &StackedField, schema: &GeneSchema) -> Self {
        let dims = phenotype.dims();
        PatternFile {
            format: FORMAT.to_string(),
            version: 1,
            name: None,
            width: dims.width,
            height: dims.height,
            channels: phenotype.layer_count(),
            genes: N_GENES,
            schema: schema.clone(),
            phenotype: encode(phenotype.as_slice()),
            genotype: None,
            averaged_genotype: None,
            position: None,
        }
    }

    pub fn with_genotype(phenotype: &StackedField, genotype: &Genotype, schema: &GeneSchema) -> Self {
        let mut f = PatternFile::new(phenotype, schema);
        f.averaged_genotype = Some(genotype.as_slice().to_vec());
        f
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.width, self.height)
    }

    pub fn phenotype(&self) -> Result<StackedField> {
        decode(&self.phenotype, self.dims(), self.channels, "phenotype")
    }

    pub fn genotype_patch(&self) -> Result<Option<StackedField>> {
        self.genotype
            .as_deref()
            .map(|g| decode(g, self.dims(), self.genes, "genotype"))
            .transpose()
    }

    pub fn averaged(&self) -> Result<Option<Genotype>> {
        self.averaged_genotype
            .clone()
            .map(|g| Genotype::new(g).map_err(|e| Error::Pattern(e.to_string())))
            .transpose()
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::Pattern(format!("unknown format {:?}", self.format)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Pattern("empty patch".into()));
        }
        if self.channels != N_CHANNELS || self.genes != N_GENES {
            return Err(Error::Pattern(format!(
                "expected {N_CHANNELS} channels and {N_GENES} genes"
            )));
        }
        self.phenotype()?;
        self.genotype_patch()?;
        self.averaged()?;
        Ok(())
    }

    /// Converts to a seed. A full genotype patch is pasted verbatim; otherwise
    /// the averaged genotype is spread over the dilated phenotype support.
    pub fn to_seed(&self, default_position: Position) -> Result<Seed> {
        self.validate()?;
        let genes = match (self.genotype_patch()?, self.averaged()?) {
            (Some(patch), _) => SeedGenes::Patch(patch),
            (None, Some(g)) => SeedGenes::Uniform(g),
            (None, None) => return Err(Error::Pattern("pattern carries no genotype".into())),
        };
        Ok(Seed {
            phenotype: self.phenotype()?,
            genes,
            position: self.position.unwrap_or(default_position),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: PatternFile = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pattern serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        PatternFile::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeedGenes {
    Uniform(Genotype),
    Patch(StackedField),
}

/// A phenotype patch, its genes, and where its top-left corner goes.
#[derive(Clone, Debug, PartialEq)]
pub struct Seed {
    pub phenotype: StackedField,
    pub genes: SeedGenes,
    pub position: Position,
}

impl Seed {
    pub fn uniform(phenotype: StackedField, genotype: Genotype, x: usize, y: usize) -> Self {
        Seed {
            phenotype,
            genes: SeedGenes::Uniform(genotype),
            position: Position { x, y },
        }
    }

    pub fn support(&self, epsilon: f32) -> Vec<bool> {
        delta_sum(&self.phenotype, epsilon).as_slice().to_vec()
    }
}
