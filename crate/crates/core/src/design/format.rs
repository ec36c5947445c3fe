//! The JSON design file format.

use serde_json::error::Category as JsonCategory;

use super::{validate_design, GameDesign, ValidationReport};

#[derive(Debug, Clone, thiserror::Error)]
pub enum DesignError {
    #[error("malformed design document: {0}")]
    Parse(String),
    #[error("design document does not match the schema: {0}")]
    Schema(String),
    #[error("design is invalid ({} error(s))", .0.errors().count())]
    Validation(ValidationReport),
}

impl DesignError {
    pub fn code(&self) -> &'static str {
        match self {
            DesignError::Parse(_) => "PARSE_ERROR",
            DesignError::Schema(_) => "SCHEMA_ERROR",
            DesignError::Validation(_) => "VALIDATION_ERROR",
        }
    }

    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            DesignError::Validation(r) => Some(r),
            _ => None,
        }
    }
}

/// Parses and validates a design document.
pub fn load_design(text: &str) -> Result<GameDesign, DesignError> {
    let design: GameDesign = serde_json::from_str(text).map_err(|e| match e.classify() {
        JsonCategory::Data => DesignError::Schema(e.to_string()),
        _ => DesignError::Parse(e.to_string()),
    })?;
    check_numbers(&design)?;
    let report = validate_design(&design);
    if !report.valid {
        return Err(DesignError::Validation(report));
    }
    Ok(design)
}

fn check_numbers(d: &GameDesign) -> Result<(), DesignError> {
    let check = |v: f64, what: String| {
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(DesignError::Schema(format!("{what} must be a finite non-negative number, got {v}")))
        }
    };
    for r in &d.resources {
        check(r.capacity, format!("resources[{}].capacity", r.id))?;
    }
    for a in &d.actions {
        for c in &a.costs {
            check(c.amount, format!("actions[{}].costs[{}].amount", a.id, c.resource))?;
        }
    }
    for s in &d.states {
        check(s.importance, format!("states[{}].importance", s.id))?;
    }
    for (i, t) in d.taps.iter().enumerate() {
        check(t.amount, format!("taps[{i}].amount"))?;
    }
    for (i, t) in d.drains.iter().enumerate() {
        check(t.amount, format!("drains[{i}].amount"))?;
    }
    for (i, c) in d.converters.iter().enumerate() {
        check(c.from_amount, format!("converters[{i}].fromAmount"))?;
        check(c.to_amount, format!("converters[{i}].toAmount"))?;
    }
    Ok(())
}

/// Serializes a valid design in canonical order. Identical designs (up to
/// list order) produce byte-identical text.
pub fn save_design(design: &GameDesign) -> Result<String, DesignError> {
    let report = validate_design(design);
    if !report.valid {
        return Err(DesignError::Validation(report));
    }
    let mut text = serde_json::to_string_pretty(&design.canonicalized()).expect("designs always serialize");
    text.push('\n');
    Ok(text)
}
