//! Canonical JSON rendering shared by every exported document.

use serde::Serialize;

/// Serializes `value` with object keys sorted, two-space indentation and a
/// trailing newline, so equal values always produce equal bytes.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    // serde_json's Value map is a BTreeMap without the preserve_order feature
    let tree = serde_json::to_value(value).expect("domain types serialize to JSON");
    let mut out = serde_json::to_string_pretty(&tree).expect("JSON value renders");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_are_sorted_and_newline_terminated() {
        let mut m = HashMap::new();
        m.insert("zeta", 1);
        m.insert("alpha", 2);
        let s = to_canonical_json(&m);
        assert_eq!(s, "{\n  \"alpha\": 2,\n  \"zeta\": 1\n}\n");
    }
}
