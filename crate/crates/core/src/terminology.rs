//! CUDA / OpenCL vocabulary mapping.

use crate::error::{Error, Result};

/// One row of the vocabulary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermEntry {
    pub cuda: &'static str,
    pub opencl: &'static str,
}

pub const TERMS: &[TermEntry] = &[
    TermEntry {
        cuda: "thread",
        opencl: "work-item",
    },
    TermEntry {
        cuda: "thread block",
        opencl: "work-group",
    },
    TermEntry {
        cuda: "grid",
        opencl: "ND-range",
    },
];

/// Returns the other framework's name for `term`, matched case-insensitively
/// against both columns.
pub fn terminology_lookup(term: &str) -> Result<&'static str> {
    let key = term.trim();
    TERMS
        .iter()
        .find_map(|e| {
            if e.cuda.eq_ignore_ascii_case(key) {
                Some(e.opencl)
            } else if e.opencl.eq_ignore_ascii_case(key) {
                Some(e.cuda)
            } else {
                None
            }
        })
        .ok_or_else(|| Error::UnknownTerm {
            term: term.to_string(),
            known: known_terms(),
        })
}

/// Every term from both columns.
pub fn known_terms() -> Vec<String> {
    TERMS
        .iter()
        .flat_map(|e| [e.cuda.to_string(), e.opencl.to_string()])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_directions() {
        assert_eq!(terminology_lookup("thread").unwrap(), "work-item");
        assert_eq!(terminology_lookup("work-group").unwrap(), "thread block");
        assert_eq!(terminology_lookup("Thread Block").unwrap(), "work-group");
        assert_eq!(terminology_lookup("nd-range").unwrap(), "grid");
    }

    #[test]
    fn unknown_term_lists_known() {
        match terminology_lookup("warp") {
            Err(Error::UnknownTerm { term, known }) => {
                assert_eq!(term, "warp");
                assert!(known.contains(&"work-item".to_string()));
            }
            other => panic!("expected unknown-term error, got {other:?}"),
        }
    }

    #[test]
    fn columns_are_disjoint() {
        let known = known_terms();
        for (i, a) in known.iter().enumerate() {
            for b in &known[i + 1..] {
                assert!(!a.eq_ignore_ascii_case(b));
            }
        }
    }
}
