use super::formula::quote;
use super::{parse_constraints, Constraint};
use crate::ingest::CASE_TYPE;

/// Coherence table for the consistency rule: for every level `l`,
/// `priority = l` holds exactly when `impact = l` and `urgency = l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyTable {
    pub priority: String,
    pub impact: String,
    pub urgency: String,
    pub levels: Vec<String>,
}

impl Default for ConsistencyTable {
    fn default() -> Self {
        ConsistencyTable {
            priority: "priority".into(),
            impact: "impact".into(),
            urgency: "urgency".into(),
            levels: ["high", "medium", "low"].map(String::from).to_vec(),
        }
    }
}

impl ConsistencyTable {
    fn formula(&self) -> String {
        if self.levels.is_empty() {
            return "G true".into();
        }
        let eq = |attr: &str, level: &str| format!("attr({}) = {}", quote(attr), quote(level));
        let rows: Vec<String> = self
            .levels
            .iter()
            .map(|l| {
                let p = eq(&self.priority, l);
                let iu = format!("({} & {})", eq(&self.impact, l), eq(&self.urgency, l));
                format!("({p} -> {iu}) & ({iu} -> {p})")
            })
            .collect();
        format!("G ({})", rows.join(" & "))
    }
}

/// The five incident-management rules, one per family, scoped to `case`
/// objects as produced by XES ingestion:
///
/// * safety: every event has a type and a timestamp;
/// * cardinality: at most 3 `Escalate` events before the first event with
///   lifecycle `Resolved`;
/// * liveness: the case reaches lifecycle `Closed`, and every `Reopen` is
///   followed by a `Closed`;
/// * fairness: no `Status Change` happens before the first
///   `Operator Update`;
/// * consistency: priority agrees with impact and urgency per the table.
pub fn bpic13_pack_with(table: &ConsistencyTable) -> Vec<Constraint> {
    let scope = CASE_TYPE;
    let text = format!(
        "safety known_and_timed on {scope}: G (etype != \"\" & has(\"timestamp\"))\n\
         cardinality escalation_cap on {scope}: count(etype = \"Escalate\" before attr(\"lifecycle\") = \"Resolved\") <= 3\n\
         liveness eventually_closed on {scope}: F attr(\"lifecycle\") = \"Closed\" & G (etype = \"Reopen\" -> F attr(\"lifecycle\") = \"Closed\")\n\
         fairness update_before_status on {scope}: !(!etype = \"Operator Update\" U (etype = \"Status Change\" & !etype = \"Operator Update\"))\n\
         consistency priority_coherence on {scope}: {}\n",
        table.formula()
    );
    parse_constraints(&text).expect("builtin pack parses")
}

pub fn builtin_bpic13_pack() -> Vec<Constraint> {
    bpic13_pack_with(&ConsistencyTable::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{render_constraints, Family};

    #[test]
    fn five_rules_one_per_family() {
        let pack = builtin_bpic13_pack();
        let families: Vec<Family> = pack.iter().map(|c| c.family).collect();
        assert_eq!(
            families,
            [
                Family::Safety,
                Family::Cardinality,
                Family::Liveness,
                Family::Fairness,
                Family::Consistency
            ]
        );
    }

    #[test]
    fn rendering_round_trips() {
        let pack = builtin_bpic13_pack();
        assert_eq!(parse_constraints(&render_constraints(&pack)).unwrap(), pack);
    }

    #[test]
    fn custom_levels() {
        let table = ConsistencyTable { levels: vec!["1".into(), "2".into()], ..Default::default() };
        let rule = &bpic13_pack_with(&table)[4];
        assert!(rule.to_string().contains("attr(\"urgency\") = \"2\""));
    }
}
