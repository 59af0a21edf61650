use std::fmt;

use serde::{Deserialize, Serialize};

/// Non-fatal finding reported while analyzing. Renders as `WARN <file>:<line> <message>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    pub message: String,
}

impl Diagnostic {
    pub fn new(file: impl Into<String>, line: u32, message: impl Into<String>) -> Self {
        Diagnostic {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WARN {}:{} {}", self.file, self.line, self.message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_warn_line() {
        let d = Diagnostic::new("src/A.java", 12, "unparsed statement");
        assert_eq!(d.to_string(), "WARN src/A.java:12 unparsed statement");
    }
}
