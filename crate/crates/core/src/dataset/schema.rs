use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::taxonomy::{Taxonomy, TaxonomyDoc};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    #[serde(alias = "qi")]
    QuasiIdentifier,
    Sensitive,
    #[serde(alias = "class")]
    ClassLabel,
    Ignored,
}

#[derive(Debug, Clone)]
pub enum Domain {
    Interval { min: f64, max: f64 },
    Taxonomy(Arc<Taxonomy>),
    /// Flat label set for non-QI categorical attributes. `None` means the labels
    /// are collected from the data at load time and sorted.
    Nominal(Option<Vec<String>>),
}

#[derive(Debug, Clone)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    pub role: Role,
    pub domain: Domain,
}

impl Attribute {
    pub fn numeric(name: &str, role: Role, min: f64, max: f64) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
            role,
            domain: Domain::Interval { min, max },
        }
    }

    pub fn taxonomy(name: &str, role: Role, taxonomy: Arc<Taxonomy>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Categorical,
            role,
            domain: Domain::Taxonomy(taxonomy),
        }
    }

    pub fn nominal(name: &str, role: Role, labels: Option<Vec<String>>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Categorical,
            role,
            domain: Domain::Nominal(labels),
        }
    }

    /// Ordered value labels of a categorical attribute.
    pub fn labels(&self) -> Option<Vec<String>> {
        match &self.domain {
            Domain::Taxonomy(t) => Some((0..t.leaf_count()).map(|i| t.leaf_label(i).to_string()).collect()),
            Domain::Nominal(labels) => labels.clone(),
            Domain::Interval { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let schema = Schema { attributes };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for attr in &self.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
            match (&attr.kind, &attr.domain) {
                (AttributeKind::Numeric, Domain::Interval { min, max }) => {
                    if !(min.is_finite() && max.is_finite() && min <= max) {
                        return Err(Error::Schema(format!(
                            "attribute `{}`: invalid domain [{min}, {max}]",
                            attr.name
                        )));
                    }
                }
                (AttributeKind::Categorical, Domain::Taxonomy(_)) => {}
                (AttributeKind::Categorical, Domain::Nominal(_)) => {
                    if attr.role == Role::QuasiIdentifier {
                        return Err(Error::Schema(format!(
                            "categorical quasi-identifier `{}` needs a taxonomy",
                            attr.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "attribute `{}`: domain does not match kind",
                        attr.name
                    )))
                }
            }
            if attr.kind == AttributeKind::Numeric && matches!(attr.role, Role::Sensitive | Role::ClassLabel) {
                return Err(Error::Schema(format!(
                    "attribute `{}`: sensitive and class-label attributes must be categorical",
                    attr.name
                )));
            }
        }
        for role in [Role::Sensitive, Role::ClassLabel] {
            if self.attributes.iter().filter(|a| a.role == role).count() > 1 {
                return Err(Error::Schema(format!("more than one {role:?} attribute")));
            }
        }
        Ok(())
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, idx: usize) -> &Attribute {
        &self.attributes[idx]
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.attributes.iter().map(|a| a.name.clone()).collect()
    }

    /// Schema indices of the quasi-identifiers, in schema order.
    pub fn quasi_identifiers(&self) -> Vec<usize> {
        self.with_role(Role::QuasiIdentifier)
    }

    pub fn sensitive(&self) -> Option<usize> {
        self.with_role(Role::Sensitive).first().copied()
    }

    pub fn class_label(&self) -> Option<usize> {
        self.with_role(Role::ClassLabel).first().copied()
    }

    fn with_role(&self, role: Role) -> Vec<usize> {
        (0..self.attributes.len())
            .filter(|&i| self.attributes[i].role == role)
            .collect()
    }

    pub(crate) fn attribute_mut(&mut self, idx: usize) -> &mut Attribute {
        &mut self.attributes[idx]
    }
}

/// Per-attribute split generation strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitStrategy {
    Explicit(Vec<f64>),
    EquiWidth(u32),
    Quantile(u32),
    Taxonomy,
}

/// Strategies indexed by schema position; `None` for attributes without one.
#[derive(Debug, Clone, Default)]
pub struct SplitGenSpec {
    pub strategies: Vec<Option<SplitStrategy>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TaxonomySource {
    Inline(TaxonomyDoc),
    File(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeDoc {
    name: String,
    kind: AttributeKind,
    role: Role,
    #[serde(default)]
    domain: Option<[f64; 2]>,
    #[serde(default)]
    taxonomy: Option<String>,
    #[serde(default)]
    values: Option<Vec<String>>,
    #[serde(default)]
    splits: Option<SplitStrategy>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    #[serde(default)]
    taxonomies: BTreeMap<String, TaxonomySource>,
    attributes: Vec<AttributeDoc>,
}

/// Schema plus split specification, as read from one JSON config document.
#[derive(Debug, Clone)]
pub struct Config {
    pub schema: Schema,
    pub splits: SplitGenSpec,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent())
    }

    /// Parses a config document; taxonomy file references resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let doc: ConfigDoc = serde_json::from_str(text)?;
        let mut taxonomies = BTreeMap::new();
        for (name, source) in &doc.taxonomies {
            let tax = match source {
                TaxonomySource::Inline(d) => Taxonomy::from_doc(d)?,
                TaxonomySource::File(f) => {
                    let p = base.map(|b| b.join(f)).unwrap_or_else(|| f.into());
                    Taxonomy::load(&p)?
                }
            };
            taxonomies.insert(name.clone(), Arc::new(tax));
        }

        let mut attributes = Vec::with_capacity(doc.attributes.len());
        let mut strategies = Vec::with_capacity(doc.attributes.len());
        for a in doc.attributes {
            let attr = match a.kind {
                AttributeKind::Numeric => {
                    let [min, max] = a.domain.ok_or_else(|| {
                        Error::Schema(format!("numeric attribute `{}` needs a domain", a.name))
                    })?;
                    Attribute::numeric(&a.name, a.role, min, max)
                }
                AttributeKind::Categorical => match (&a.taxonomy, &a.values) {
                    (Some(t), _) => {
                        let tax = taxonomies.get(t).ok_or_else(|| {
                            Error::Schema(format!("attribute `{}`: unknown taxonomy `{t}`", a.name))
                        })?;
                        Attribute::taxonomy(&a.name, a.role, tax.clone())
                    }
                    (None, values) => Attribute::nominal(&a.name, a.role, values.clone()),
                },
            };
            let strategy = match (a.role, a.splits) {
                (Role::QuasiIdentifier, None) if a.kind == AttributeKind::Categorical => {
                    Some(SplitStrategy::Taxonomy)
                }
                (Role::QuasiIdentifier, s) => s,
                _ => None,
            };
            attributes.push(attr);
            strategies.push(strategy);
        }
        Ok(Config {
            schema: Schema::new(attributes)?,
            splits: SplitGenSpec { strategies },
        })
    }
}
