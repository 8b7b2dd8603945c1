//! Reference Verilog models of the shipped primitive family.

use alloc::string::ToString;
use alloc::vec;

use crate::library::{Library, Roles, TemplateDescriptor};
use crate::verilog;

pub const LUT2: &str = include_str!("../models/lut2.v");
pub const LUT4: &str = include_str!("../models/lut4.v");
pub const LUT6: &str = include_str!("../models/lut6.v");
pub const CARRY1: &str = include_str!("../models/carry1.v");
pub const MULT8X8: &str = include_str!("../models/mult8x8.v");

/// `(file stem, source)` for every model, in library order.
pub const ALL: &[(&str, &str)] = &[
    ("lut2", LUT2),
    ("lut4", LUT4),
    ("lut6", LUT6),
    ("carry1", CARRY1),
    ("mult8x8", MULT8X8),
];

pub fn carry1_descriptor() -> TemplateDescriptor {
    TemplateDescriptor {
        primitive: "CARRY1".to_string(),
        roles: Roles {
            sum: Some("S".to_string()),
            cout: Some("COUT".to_string()),
            cin: Some("CIN".to_string()),
            operands: vec!["A".to_string(), "B".to_string()],
            product: None,
        },
    }
}

pub fn mult8x8_descriptor() -> TemplateDescriptor {
    TemplateDescriptor {
        primitive: "MULT8X8".to_string(),
        roles: Roles {
            operands: vec!["A".to_string(), "B".to_string()],
            product: Some("P".to_string()),
            ..Roles::default()
        },
    }
}

/// Imports every model. Panics only if a shipped model is broken, which the
/// test suite rules out.
pub fn default_library() -> Library {
    let mut lib = Library::new();
    for (stem, src) in ALL {
        let prim = verilog::import_primitive(src).expect("shipped model imports");
        let desc = match *stem {
            "carry1" => Some(carry1_descriptor()),
            "mult8x8" => Some(mult8x8_descriptor()),
            _ => None,
        };
        lib.insert(prim, desc).expect("shipped models are distinct");
    }
    lib
}
