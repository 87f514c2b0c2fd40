//! The two bundled case studies: a maintainability network for four NASA
//! projects and a security network for Tomcat 6.

use serde::{Deserialize, Serialize};

use super::calibrate::{calibrate_effort, EffortCalibration};
use super::metrics::{FindingCounts, MetricAggregates};
use crate::engine::dist::uniform_edges;
use crate::engine::{
    compile, BayesianNetwork, CompiledNetwork, Distribution, Observation, PartitionEntry, Sign,
};
use crate::error::Result;
use crate::model::{Activity, Attribute, Entity, Fact, Impact, QualityModel, Relation};
use crate::netgen::{
    self, tnormal_table, GoalDocument, GoalSpec, IndicatorNpt, IndicatorSpec, NptConfig, Polarity,
    Scale, Selection,
};
use crate::scenarios::Scenario;

/// Values a case is expected to reproduce, kept with the bundle for tests
/// and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedResult {
    pub scenario: String,
    pub predicted_mean: f64,
    pub predicted_sd: Option<f64>,
    pub observed: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CaseBundle {
    pub name: String,
    pub model: QualityModel,
    pub goal: GoalDocument,
    pub network: BayesianNetwork,
    pub compiled: CompiledNetwork,
    pub scenarios: Vec<Scenario>,
    pub target: String,
    pub expected: Vec<ExpectedResult>,
}

impl CaseBundle {
    pub fn scenario(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    /// Ids of the indicators attached to fact nodes.
    pub fn fact_indicators(&self) -> Vec<String> {
        self.goal
            .indicators
            .iter()
            .filter(|i| self.model.fact(&i.attached_to).is_some())
            .map(|i| i.id.clone())
            .collect()
    }
}

fn entity(id: &str, name: &str, parent: Option<&str>) -> Entity {
    Entity {
        id: id.into(),
        name: name.into(),
        parent: parent.map(Into::into),
        relation: parent.map(|_| Relation::PartOf),
    }
}

fn attribute(id: &str, name: &str) -> Attribute {
    Attribute {
        id: id.into(),
        name: name.into(),
        description: String::new(),
    }
}

fn fact(entity: &str, attribute: &str, description: &str) -> Fact {
    Fact {
        id: format!("{entity}.{attribute}"),
        entity: entity.into(),
        attribute: attribute.into(),
        description: description.into(),
        assessment_note: String::new(),
    }
}

fn activity(id: &str, name: &str, parent: Option<&str>) -> Activity {
    Activity {
        id: id.into(),
        name: name.into(),
        parent: parent.map(Into::into),
    }
}

fn impact(fact: &str, activity: &str, sign: Sign, justification: &str) -> Impact {
    Impact {
        fact: fact.into(),
        activity: activity.into(),
        sign,
        justification: justification.into(),
    }
}

fn states() -> Vec<String> {
    NptConfig::default().ranked_states
}

fn indicator(
    id: &str,
    name: &str,
    attached_to: &str,
    edges: Vec<f64>,
    unit: &str,
    polarity: Polarity,
    table: Vec<PartitionEntry>,
) -> IndicatorSpec {
    IndicatorSpec {
        id: id.into(),
        name: name.into(),
        attached_to: attached_to.into(),
        scale: Scale {
            edges,
            unit: unit.into(),
        },
        polarity,
        npt: IndicatorNpt::Partitioned { table },
    }
}

// ---------------------------------------------------------------------------
// Maintainability

pub const EFFORT_RANGE: (f64, f64) = (0.0, 70.0);
pub const EFFORT_BINS: usize = 14;
pub const EFFORT_PRIOR_MEAN: f64 = 27.0;
pub const EFFORT_PRIOR_SD: f64 = 12.1;

/// Declared NPT assumptions of the maintainability indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct MaintainabilityAssumptions {
    /// `(mean, variance)` for low, medium, high comment appropriateness.
    pub comment_ratio: [(f64, f64); 3],
    /// `(mean, variance)` of average cyclomatic complexity for low, medium,
    /// high regularity.
    pub avg_cc: [(f64, f64); 3],
    /// `(mean, variance)` of average module size for low, medium, high extent.
    pub module_size: [(f64, f64); 3],
    /// Distance between adjacent effort state means.
    pub effort_spread: f64,
}

impl Default for MaintainabilityAssumptions {
    fn default() -> Self {
        MaintainabilityAssumptions {
            comment_ratio: [(0.01, 0.03), (0.1, 0.05), (0.25, 0.1)],
            avg_cc: [(10.0, 36.0), (6.0, 36.0), (3.0, 36.0)],
            module_size: [(20.0, 64.0), (60.0, 64.0), (150.0, 64.0)],
            effort_spread: 20.0,
        }
    }
}

pub fn maintainability_model() -> QualityModel {
    QualityModel {
        entities: vec![
            entity("situation", "Situation", None),
            entity("system", "System", Some("situation")),
            entity("source-code", "Source Code", Some("system")),
            entity("module", "Module", Some("source-code")),
            entity("implementation", "Implementation", Some("source-code")),
            entity("comment", "Comment", Some("source-code")),
        ],
        attributes: vec![
            attribute("extent", "Extent"),
            attribute("regularity", "Regularity"),
            attribute("appropriateness", "Appropriateness"),
        ],
        facts: vec![
            fact("module", "extent", "Size of a module"),
            fact("implementation", "regularity", "Absence of unnecessarily nested branches"),
            fact("comment", "appropriateness", "Comments describe the associated code"),
        ],
        activities: vec![
            activity("maintenance", "Maintenance", None),
            activity("analysis", "Analysis", Some("maintenance")),
            activity("comprehension", "Comprehension", Some("analysis")),
            activity("code_reading", "Code Reading", Some("comprehension")),
            activity("quality_assurance", "Quality Assurance", Some("maintenance")),
            activity("testing", "Testing", Some("quality_assurance")),
            activity("implementation", "Implementation", Some("maintenance")),
            activity("modification", "Modification", Some("implementation")),
        ],
        impacts: vec![
            impact(
                "module.extent",
                "code_reading",
                Sign::Negative,
                "The larger the module, the longer it takes to read it.",
            ),
            impact(
                "implementation.regularity",
                "testing",
                Sign::Positive,
                "Irregular, deeply nested structure makes test coverage harder.",
            ),
            impact(
                "comment.appropriateness",
                "modification",
                Sign::Positive,
                "Appropriate comments describe the code they belong to.",
            ),
        ],
    }
}

fn effort_indicator(cal: &EffortCalibration) -> IndicatorSpec {
    let (lo, hi) = EFFORT_RANGE;
    indicator(
        "change_effort",
        "Average change effort",
        "maintenance",
        uniform_edges(lo, hi, EFFORT_BINS),
        "person-hours",
        Polarity::Inverse,
        tnormal_table(&states(), &cal.params(), lo, hi),
    )
}

pub fn maintainability_goal(a: &MaintainabilityAssumptions, cal: &EffortCalibration) -> GoalDocument {
    let model = maintainability_model();
    let goal = GoalSpec {
        goal: "Planning of future maintenance efforts".into(),
        question: "What will be the maintenance effort per change request?".into(),
        metric: "average effort per change request".into(),
        target_activity: "maintenance".into(),
        activity_indicator: effort_indicator(cal),
    };
    let selection = Selection::everything(&model, "maintenance").expect("maintenance exists");
    let s = states();
    let indicators = vec![
        indicator(
            "comment_ratio",
            "Comment ratio",
            "comment.appropriateness",
            uniform_edges(0.0, 1.0, 100),
            "ratio",
            Polarity::Direct,
            tnormal_table(&s, &a.comment_ratio, 0.0, 1.0),
        ),
        indicator(
            "avg_cc",
            "Average cyclomatic complexity",
            "implementation.regularity",
            uniform_edges(0.0, 20.0, 40),
            "decisions per module",
            Polarity::Inverse,
            tnormal_table(&s, &a.avg_cc, 0.0, 20.0),
        ),
        indicator(
            "avg_module_size",
            "Average module size",
            "module.extent",
            uniform_edges(0.0, 300.0, 60),
            "LOC",
            Polarity::Direct,
            tnormal_table(&s, &a.module_size, 0.0, 300.0),
        ),
    ];
    GoalDocument::new(goal, selection, indicators, NptConfig::default())
}

/// Observations of the four NASA projects: comment ratio, average
/// cyclomatic complexity, average module size.
pub const MAINTAINABILITY_OBSERVATIONS: [(&str, f64, f64, f64); 4] = [
    ("CM1", 0.25, 5.18, 33.47),
    ("KC1", 0.02, 2.84, 20.39),
    ("KC3", 0.08, 3.45, 16.92),
    ("KC4", 0.00, 10.05, 203.49),
];

/// Reference predictions `(mean, sd)` and observed average change effort.
pub const MAINTAINABILITY_RESULTS: [(&str, f64, f64, f64); 4] = [
    ("CM1", 15.9, 8.5, 6.0),
    ("KC1", 19.4, 9.8, 21.7),
    ("KC3", 19.2, 9.8, 24.8),
    ("KC4", 36.1, 12.1, 12.1),
];

pub fn maintainability_scenarios() -> Vec<Scenario> {
    MAINTAINABILITY_OBSERVATIONS
        .iter()
        .map(|&(name, cr, cc, size)| {
            Scenario::from_values(
                name,
                [("comment_ratio", cr), ("avg_cc", cc), ("avg_module_size", size)],
            )
        })
        .collect()
}

pub fn maintainability_case_with(a: &MaintainabilityAssumptions) -> Result<CaseBundle> {
    let model = maintainability_model();
    // the effort NPT is calibrated against the network without it
    let placeholder = EffortCalibration::initial(a.effort_spread);
    let draft = netgen::derive_network(&model, &maintainability_goal(a, &placeholder))?;
    let cal = calibrate_effort(&draft, "maintenance", a.effort_spread)?;
    let goal = maintainability_goal(a, &cal);
    let network = netgen::derive_network(&model, &goal)?;
    let compiled = compile(&network)?;
    let mut expected = vec![ExpectedResult {
        scenario: "prior".into(),
        predicted_mean: EFFORT_PRIOR_MEAN,
        predicted_sd: Some(EFFORT_PRIOR_SD),
        observed: None,
    }];
    expected.extend(MAINTAINABILITY_RESULTS.iter().map(|&(name, m, sd, obs)| ExpectedResult {
        scenario: name.into(),
        predicted_mean: m,
        predicted_sd: Some(sd),
        observed: Some(obs),
    }));
    Ok(CaseBundle {
        name: "maintainability".into(),
        model,
        goal,
        network,
        compiled,
        scenarios: maintainability_scenarios(),
        target: "change_effort".into(),
        expected,
    })
}

pub fn maintainability_case() -> CaseBundle {
    maintainability_case_with(&MaintainabilityAssumptions::default())
        .expect("bundled maintainability case builds")
}

// ---------------------------------------------------------------------------
// Security

pub const DENSITY_PRIOR_MEAN: f64 = 0.0054;

/// Declared NPT assumptions of the security indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityAssumptions {
    /// Exponential means of a finding density for low, medium, high fact states.
    pub finding_means: [f64; 3],
    /// `(mean, variance)` of vulnerability density for low, medium, high
    /// attack feasibility.
    pub vulnerability_density: [(f64, f64); 3],
}

impl Default for SecurityAssumptions {
    fn default() -> Self {
        SecurityAssumptions {
            finding_means: [1.2, 0.4, 0.1],
            vulnerability_density: [(0.003, 1e-5), (0.0054, 1e-5), (0.009, 1e-5)],
        }
    }
}

pub fn security_model() -> QualityModel {
    let neg = Sign::Negative;
    QualityModel {
        entities: vec![
            entity("situation", "Situation", None),
            entity("system", "System", Some("situation")),
            entity("source-code", "Source Code", Some("system")),
            entity("object", "Object", Some("source-code")),
            entity("field", "Field", Some("source-code")),
            entity("finalizer", "Finalizer", Some("source-code")),
            entity("web-interface", "Web Interface", Some("system")),
            entity("cookie", "Cookie", Some("web-interface")),
            entity("dynamic-web-page", "Dynamic Web Page", Some("web-interface")),
        ],
        attributes: vec![
            attribute("immutability", "Immutability"),
            attribute("locality", "Locality"),
            attribute("sanitation", "Sanitation"),
        ],
        facts: vec![
            fact("object", "immutability", "Objects cannot be changed by callers"),
            fact("field", "locality", "Static fields are not reachable from other packages"),
            fact("field", "immutability", "Static fields do not hold mutable objects"),
            fact("finalizer", "locality", "finalize is declared protected"),
            fact("cookie", "sanitation", "Cookie values are protected against modification"),
            fact("dynamic-web-page", "sanitation", "Output data is sanitised"),
        ],
        activities: vec![
            activity("attack", "Attack", None),
            activity("abuse_of_functionality", "Abuse of Functionality", Some("attack")),
            activity("functionality_misuse", "Functionality Misuse", Some("abuse_of_functionality")),
            activity("injection", "Injection", Some("attack")),
            activity("format_string_injection", "Format String Injection", Some("injection")),
            activity(
                "embedding_scripts_non_script",
                "Embedding Scripts in Non-Script Elements",
                Some("injection"),
            ),
            activity("script_in_http_headers", "Embedding Script in HTTP Headers", Some("embedding_scripts_non_script")),
            activity(
                "script_in_query_strings",
                "Embedding Scripts in HTTP Query Strings",
                Some("embedding_scripts_non_script"),
            ),
            activity("xss_in_error_pages", "XSS in Error Pages", Some("embedding_scripts_non_script")),
            activity("resource_manipulation", "Resource Manipulation", Some("attack")),
            activity("variable_manipulation", "Variable Manipulation", Some("resource_manipulation")),
        ],
        impacts: vec![
            impact("object.immutability", "variable_manipulation", neg, "Callers can change mutable objects."),
            impact("field.locality", "variable_manipulation", neg, "Mutable static fields can be changed from other packages."),
            impact("field.immutability", "variable_manipulation", neg, "Static fields referencing mutable objects can be changed."),
            impact("finalizer.locality", "functionality_misuse", neg, "A public finalize can release resources early."),
            impact("cookie.sanitation", "format_string_injection", neg, "Unprotected cookie values allow modification of critical data."),
            impact("dynamic-web-page.sanitation", "script_in_http_headers", neg, "Unsanitised output can carry scripts."),
            impact("dynamic-web-page.sanitation", "script_in_query_strings", neg, "Unsanitised output can carry scripts."),
            impact("dynamic-web-page.sanitation", "xss_in_error_pages", neg, "Unsanitised output can carry scripts."),
        ],
    }
}

/// Metric tag and the fact it indicates.
pub const SECURITY_INDICATORS: [(&str, &str, &str); 6] = [
    ("oji", "OJI density", "object.immutability"),
    ("fdl", "FDL density", "field.locality"),
    ("fdi", "FDI density", "field.immutability"),
    ("fzl", "FZL density", "finalizer.locality"),
    ("cos", "COS density", "cookie.sanitation"),
    ("dws", "DWS density", "dynamic-web-page.sanitation"),
];

pub const TOMCAT_DENSITIES: [(&str, f64); 6] = [
    ("oji", 1.14),
    ("fdl", 1.63),
    ("fdi", 0.06),
    ("fzl", 0.03),
    ("cos", 0.00),
    ("dws", 0.00),
];

/// Tomcat 6.0 size baseline and vulnerabilities rated important or moderate.
pub const TOMCAT_SLOC: u64 = 151_509;
pub const TOMCAT_VULNERABILITIES: u64 = 11;
/// Vulnerability density as reported, next to the value recomputed from
/// the counts above (0.0726).
pub const TOMCAT_REPORTED_DENSITY: f64 = 0.070;

pub fn security_goal(a: &SecurityAssumptions) -> GoalDocument {
    let model = security_model();
    let s = states();
    let density_table = tnormal_table(&s, &a.vulnerability_density, 0.0, 0.02);
    let goal = GoalSpec {
        goal: "Planning of further security improvements".into(),
        question: "How many vulnerabilities are there in relation to the software size?".into(),
        metric: "vulnerability density".into(),
        target_activity: "attack".into(),
        activity_indicator: indicator(
            "vulnerability_density",
            "Vulnerability density",
            "attack",
            uniform_edges(0.0, 0.02, 20),
            "vulnerabilities per KSLOC",
            Polarity::Direct,
            density_table,
        ),
    };
    let selection = Selection::everything(&model, "attack").expect("attack exists");
    let indicators = SECURITY_INDICATORS
        .iter()
        .map(|&(id, name, fact)| {
            let table = s
                .iter()
                .zip(a.finding_means)
                .map(|(state, mean)| PartitionEntry {
                    state: state.clone(),
                    distribution: Distribution::exponential(mean, 0.0, 4.0),
                })
                .collect();
            indicator(
                id,
                name,
                fact,
                uniform_edges(0.0, 4.0, 16),
                "findings per KSLOC",
                Polarity::Inverse,
                table,
            )
        })
        .collect();
    GoalDocument::new(goal, selection, indicators, NptConfig::default())
}

pub fn security_case_with(a: &SecurityAssumptions) -> Result<CaseBundle> {
    let model = security_model();
    let goal = security_goal(a);
    let network = netgen::derive_network(&model, &goal)?;
    let compiled = compile(&network)?;
    Ok(CaseBundle {
        name: "security".into(),
        model,
        goal,
        network,
        compiled,
        scenarios: vec![Scenario::from_values("Tomcat", TOMCAT_DENSITIES)],
        target: "vulnerability_density".into(),
        expected: vec![
            ExpectedResult {
                scenario: "prior".into(),
                predicted_mean: DENSITY_PRIOR_MEAN,
                predicted_sd: None,
                observed: None,
            },
            ExpectedResult {
                scenario: "Tomcat".into(),
                predicted_mean: 0.006,
                predicted_sd: Some(0.003),
                observed: Some(TOMCAT_REPORTED_DENSITY),
            },
        ],
    })
}

pub fn security_case() -> CaseBundle {
    security_case_with(&SecurityAssumptions::default()).expect("bundled security case builds")
}

/// Scenario for the maintainability network from aggregated metrics.
pub fn metrics_scenario(name: &str, agg: &MetricAggregates) -> Scenario {
    Scenario::from_values(
        name,
        [
            ("comment_ratio", agg.comment_ratio),
            ("avg_cc", agg.avg_cyclomatic_complexity),
            ("avg_module_size", agg.avg_module_size),
        ],
    )
}

/// Scenario for the security network from pattern-finding counts.
pub fn findings_scenario(name: &str, findings: &FindingCounts) -> Result<Scenario> {
    let densities = findings.densities()?;
    Ok(Scenario::new(
        name,
        densities
            .into_iter()
            .map(|(tag, d)| (tag.to_ascii_lowercase(), Observation::Value(d)))
            .collect(),
    ))
}

/// File name and contents of every bundled case file.
pub fn case_files() -> Vec<(String, String)> {
    let mut files = Vec::new();
    for case in [maintainability_case(), security_case()] {
        files.push((format!("{}.model", case.name), crate::model::serialize_model(&case.model)));
        files.push((format!("{}.goal", case.name), case.goal.to_text()));
        files.push((format!("{}.net", case.name), case.network.to_text()));
        for s in &case.scenarios {
            files.push((format!("{}.scen", s.name.to_ascii_lowercase()), s.to_text()));
        }
    }
    files
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn bundled_models_are_valid() {
        assert!(validate(&maintainability_model()).findings.is_empty());
        assert!(validate(&security_model()).findings.is_empty());
    }

    #[test]
    fn security_network_shape() {
        let case = security_case();
        assert_eq!(case.compiled.len(), 11 + 6 + 7);
        assert_eq!(case.fact_indicators().len(), 6);
    }

    #[test]
    fn findings_become_lowercase_observations() {
        let f = FindingCounts {
            counts: [("OJI".to_string(), 173)].into(),
            sloc: TOMCAT_SLOC,
        };
        let s = findings_scenario("t", &f).unwrap();
        assert!(s.observations.contains_key("oji"));
    }
}
