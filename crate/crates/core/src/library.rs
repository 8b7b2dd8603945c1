//! Imported primitives and the collection a mapper draws from.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigUint;
use thiserror::Error;

use crate::ir::{self, IrError, OutputDef, Port};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub width: u32,
    pub default: BigUint,
}

/// A primitive's interface plus one expression per output over input and
/// parameter variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveSemantics {
    pub name: String,
    pub inputs: Vec<Port>,
    pub params: Vec<Param>,
    pub outputs: Vec<OutputDef>,
}

impl PrimitiveSemantics {
    /// Inputs followed by parameters, as variables visible to the outputs.
    pub fn symbol_env(&self) -> BTreeMap<String, u32> {
        self.inputs
            .iter()
            .map(|p| (p.name.clone(), p.width))
            .chain(self.params.iter().map(|p| (p.name.clone(), p.width)))
            .collect()
    }

    pub fn input(&self, name: &str) -> Option<&Port> {
        self.inputs.iter().find(|p| p.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&OutputDef> {
        self.outputs.iter().find(|o| o.name == name)
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn validate(&self) -> Result<(), IrError> {
        ir::check_unique(
            self.inputs
                .iter()
                .map(|p| p.name.as_str())
                .chain(self.params.iter().map(|p| p.name.as_str()))
                .chain(self.outputs.iter().map(|o| o.name.as_str())),
        )?;
        for p in &self.params {
            if p.width == 0 {
                return Err(IrError::ZeroWidth {
                    node: alloc::format!("parameter {}", p.name),
                });
            }
            if p.default.bits() > u64::from(p.width) {
                return Err(IrError::ConstOutOfRange {
                    width: p.width,
                    value: alloc::string::ToString::to_string(&p.default),
                });
            }
        }
        let env = self.symbol_env();
        for o in &self.outputs {
            ir::validate(&o.expr, &env, false)?;
        }
        Ok(())
    }
}

/// Pin roles of a cell, for templates that cannot infer them from the
/// interface alone.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Roles {
    pub sum: Option<String>,
    pub cout: Option<String>,
    pub cin: Option<String>,
    pub operands: Vec<String>,
    pub product: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateDescriptor {
    pub primitive: String,
    pub roles: Roles,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LibraryError {
    #[error("duplicate primitive `{0}`")]
    DuplicatePrimitive(String),
    #[error("descriptor names primitive `{descriptor}` but is attached to `{primitive}`")]
    DescriptorMismatch { primitive: String, descriptor: String },
    #[error("descriptor for `{primitive}` refers to unknown port `{port}`")]
    UnknownRolePort { primitive: String, port: String },
    #[error("primitive `{name}` is invalid: {source}")]
    InvalidPrimitive { name: String, source: IrError },
}

/// Name-indexed primitives with optional template descriptors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Library {
    primitives: BTreeMap<String, PrimitiveSemantics>,
    descriptors: BTreeMap<String, TemplateDescriptor>,
}

impl Library {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prim: PrimitiveSemantics, descriptor: Option<TemplateDescriptor>) -> Result<(), LibraryError> {
        if self.primitives.contains_key(&prim.name) {
            return Err(LibraryError::DuplicatePrimitive(prim.name));
        }
        prim.validate().map_err(|source| LibraryError::InvalidPrimitive {
            name: prim.name.clone(),
            source,
        })?;
        if let Some(desc) = &descriptor {
            if desc.primitive != prim.name {
                return Err(LibraryError::DescriptorMismatch {
                    primitive: prim.name.clone(),
                    descriptor: desc.primitive.clone(),
                });
            }
            let r = &desc.roles;
            let named = r
                .sum
                .iter()
                .chain(&r.cout)
                .chain(&r.cin)
                .chain(&r.operands)
                .chain(&r.product);
            for port in named {
                if prim.input(port).is_none() && prim.output(port).is_none() {
                    return Err(LibraryError::UnknownRolePort {
                        primitive: prim.name.clone(),
                        port: port.clone(),
                    });
                }
            }
        }
        if let Some(desc) = descriptor {
            self.descriptors.insert(prim.name.clone(), desc);
        }
        self.primitives.insert(prim.name.clone(), prim);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&PrimitiveSemantics> {
        self.primitives.get(name)
    }

    pub fn descriptor(&self, name: &str) -> Option<&TemplateDescriptor> {
        self.descriptors.get(name)
    }

    /// Primitives in name order.
    pub fn primitives(&self) -> impl Iterator<Item = &PrimitiveSemantics> {
        self.primitives.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.primitives.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// A copy restricted to the given names; unknown names are ignored.
    pub fn subset<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Library {
        let mut out = Library::new();
        for n in names {
            if let Some(p) = self.primitives.get(n) {
                out.primitives.insert(n.into(), p.clone());
                if let Some(d) = self.descriptors.get(n) {
                    out.descriptors.insert(n.into(), d.clone());
                }
            }
        }
        out
    }
}
