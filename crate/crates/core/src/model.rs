//! Activity-based quality models: entities and their attributes form
//! facts, facts impact activities, and both entities and activities are
//! organized in trees.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::engine::Sign;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "abqm-v1";

/// Meaning of the edge from an entity to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    PartOf,
    IsA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entity {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Relation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attribute {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fact {
    pub id: String,
    pub entity: String,
    pub attribute: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub assessment_note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Activity {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impact {
    pub fact: String,
    pub activity: String,
    pub sign: Sign,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityModel {
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub attributes: Vec<Attribute>,
    #[serde(default)]
    pub facts: Vec<Fact>,
    #[serde(default)]
    pub activities: Vec<Activity>,
    #[serde(default)]
    pub impacts: Vec<Impact>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    DuplicateId,
    DanglingReference,
    RelationWithoutParent,
    ParentWithoutRelation,
    EntityRoot,
    EntityCycle,
    ActivityRoot,
    ActivityCycle,
    DuplicateFact,
    DuplicateImpact,
    ImpactCycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub rule: Rule,
    pub ids: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, rule: Rule, ids: Vec<String>, message: String) {
        self.findings.push(Finding { rule, ids, message });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} findings", self.findings.len())?;
        for finding in &self.findings {
            writeln!(
                f,
                "  [{}] {} ({})",
                serde_json::to_value(finding.rule).unwrap().as_str().unwrap_or(""),
                finding.message,
                finding.ids.join(", ")
            )?;
        }
        Ok(())
    }
}

/// One impact found under an activity subtree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectedImpact {
    pub fact: String,
    pub sign: Sign,
    pub activity: String,
}

/// Fact-by-activity sign matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactMatrix {
    /// `(id, name)` in activity-tree order.
    pub activities: Vec<(String, String)>,
    /// `(id, label)` in fact-tree order.
    pub facts: Vec<(String, String)>,
    /// `cells[fact][activity]`.
    pub cells: Vec<Vec<Option<Sign>>>,
}

impl ImpactMatrix {
    pub fn non_blank(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }

    pub fn cell(&self, fact: &str, activity: &str) -> Option<Sign> {
        let r = self.facts.iter().position(|(id, _)| id == fact)?;
        let c = self.activities.iter().position(|(id, _)| id == activity)?;
        self.cells[r][c]
    }

    /// Comma-separated rendering: header row of activity names, first
    /// column of fact labels.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec!["fact".to_string()];
        header.extend(self.activities.iter().map(|(_, n)| n.clone()));
        w.write_record(&header)?;
        for (row, (_, label)) in self.cells.iter().zip(&self.facts) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(|c| c.map_or("", Sign::symbol).to_string()));
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format: String,
    #[serde(flatten)]
    model: QualityModel,
}

fn check_unique<'a>(kind: &'static str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(())
}

fn check_ref(set: &HashSet<&str>, from: String, kind: &'static str, id: &str) -> Result<()> {
    if set.contains(id) {
        Ok(())
    } else {
        Err(Error::DanglingReference {
            from,
            kind,
            id: id.to_string(),
        })
    }
}

/// Parses an `abqm-v1` document.
pub fn parse_model(document: &str) -> Result<QualityModel> {
    let doc: ModelDocument = serde_json::from_str(document)?;
    if doc.format != MODEL_FORMAT {
        return Err(Error::FormatVersion {
            expected: MODEL_FORMAT.into(),
            found: doc.format,
        });
    }
    let m = doc.model;
    check_unique("entity", m.entities.iter().map(|e| e.id.as_str()))?;
    check_unique("attribute", m.attributes.iter().map(|a| a.id.as_str()))?;
    check_unique("fact", m.facts.iter().map(|f| f.id.as_str()))?;
    check_unique("activity", m.activities.iter().map(|a| a.id.as_str()))?;

    let entities: HashSet<&str> = m.entities.iter().map(|e| e.id.as_str()).collect();
    let attributes: HashSet<&str> = m.attributes.iter().map(|a| a.id.as_str()).collect();
    let facts: HashSet<&str> = m.facts.iter().map(|f| f.id.as_str()).collect();
    let activities: HashSet<&str> = m.activities.iter().map(|a| a.id.as_str()).collect();
    for e in &m.entities {
        if let Some(p) = &e.parent {
            check_ref(&entities, format!("entity `{}`", e.id), "entity", p)?;
        }
    }
    for f in &m.facts {
        check_ref(&entities, format!("fact `{}`", f.id), "entity", &f.entity)?;
        check_ref(&attributes, format!("fact `{}`", f.id), "attribute", &f.attribute)?;
    }
    for a in &m.activities {
        if let Some(p) = &a.parent {
            check_ref(&activities, format!("activity `{}`", a.id), "activity", p)?;
        }
    }
    for i in &m.impacts {
        let from = format!("impact `{}` -> `{}`", i.fact, i.activity);
        check_ref(&facts, from.clone(), "fact", &i.fact)?;
        check_ref(&activities, from, "activity", &i.activity)?;
    }
    Ok(m)
}

/// Canonical `abqm-v1` serialization.
pub fn serialize_model(model: &QualityModel) -> String {
    let doc = ModelDocument {
        format: MODEL_FORMAT.into(),
        model: model.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("model serializes") + "\n"
}

/// Nodes of a parent-pointer forest that lie on or lead into a cycle.
fn cyclic_nodes<'a>(parents: &BTreeMap<&'a str, Option<&'a str>>) -> BTreeSet<&'a str> {
    let mut cyclic = BTreeSet::new();
    for &start in parents.keys() {
        let mut seen = HashSet::new();
        let mut cur = Some(start);
        while let Some(c) = cur {
            if !seen.insert(c) {
                cyclic.insert(c);
                break;
            }
            cur = parents.get(c).copied().flatten();
        }
    }
    // walk each detected cycle once to collect all members
    let mut members = BTreeSet::new();
    for &c in &cyclic {
        let mut cur = c;
        loop {
            members.insert(cur);
            match parents.get(cur).copied().flatten() {
                Some(p) if p != c => cur = p,
                _ => break,
            }
        }
    }
    members
}

fn check_tree(
    report: &mut ValidationReport,
    what: &str,
    root_rule: Rule,
    cycle_rule: Rule,
    parents: &BTreeMap<&str, Option<&str>>,
) {
    if parents.is_empty() {
        return;
    }
    let roots: Vec<String> = parents
        .iter()
        .filter(|(_, p)| p.is_none())
        .map(|(id, _)| id.to_string())
        .collect();
    if roots.len() != 1 {
        report.push(
            root_rule,
            roots.clone(),
            format!("{what} tree must have exactly one root, found {}", roots.len()),
        );
    }
    let cycle = cyclic_nodes(parents);
    if !cycle.is_empty() {
        report.push(
            cycle_rule,
            cycle.iter().map(|s| s.to_string()).collect(),
            format!("{what} hierarchy contains a cycle"),
        );
    }
}

/// Checks every structural rule and reports violations as data.
pub fn validate(model: &QualityModel) -> ValidationReport {
    let mut report = ValidationReport::default();

    for (kind, ids) in [
        ("entity", model.entities.iter().map(|e| e.id.as_str()).collect::<Vec<_>>()),
        ("attribute", model.attributes.iter().map(|a| a.id.as_str()).collect()),
        ("fact", model.facts.iter().map(|f| f.id.as_str()).collect()),
        ("activity", model.activities.iter().map(|a| a.id.as_str()).collect()),
    ] {
        let mut seen = HashSet::new();
        for id in ids {
            if !seen.insert(id) {
                report.push(Rule::DuplicateId, vec![id.into()], format!("duplicate {kind} id"));
            }
        }
    }

    let entities: HashSet<&str> = model.entities.iter().map(|e| e.id.as_str()).collect();
    let attributes: HashSet<&str> = model.attributes.iter().map(|a| a.id.as_str()).collect();
    let facts: HashSet<&str> = model.facts.iter().map(|f| f.id.as_str()).collect();
    let activities: HashSet<&str> = model.activities.iter().map(|a| a.id.as_str()).collect();
    let mut dangling = |ids: Vec<String>, message: String| {
        report.push(Rule::DanglingReference, ids, message);
    };
    for e in &model.entities {
        if let Some(p) = e.parent.as_deref().filter(|p| !entities.contains(p)) {
            dangling(vec![e.id.clone(), p.into()], "entity parent does not exist".into());
        }
    }
    for f in &model.facts {
        if !entities.contains(f.entity.as_str()) {
            dangling(vec![f.id.clone(), f.entity.clone()], "fact entity does not exist".into());
        }
        if !attributes.contains(f.attribute.as_str()) {
            dangling(vec![f.id.clone(), f.attribute.clone()], "fact attribute does not exist".into());
        }
    }
    for a in &model.activities {
        if let Some(p) = a.parent.as_deref().filter(|p| !activities.contains(p)) {
            dangling(vec![a.id.clone(), p.into()], "activity parent does not exist".into());
        }
    }
    for i in &model.impacts {
        if !facts.contains(i.fact.as_str()) {
            dangling(vec![i.fact.clone()], "impact fact does not exist".into());
        }
        if !activities.contains(i.activity.as_str()) {
            dangling(vec![i.activity.clone()], "impact activity does not exist".into());
        }
    }

    for e in &model.entities {
        match (&e.parent, &e.relation) {
            (None, Some(_)) => report.push(
                Rule::RelationWithoutParent,
                vec![e.id.clone()],
                "root entity must not declare a relation".into(),
            ),
            (Some(_), None) => report.push(
                Rule::ParentWithoutRelation,
                vec![e.id.clone()],
                "entity with a parent must declare part-of or is-a".into(),
            ),
            _ => {}
        }
    }

    let entity_parents: BTreeMap<&str, Option<&str>> = model
        .entities
        .iter()
        .map(|e| (e.id.as_str(), e.parent.as_deref()))
        .collect();
    check_tree(&mut report, "entity", Rule::EntityRoot, Rule::EntityCycle, &entity_parents);
    let activity_parents: BTreeMap<&str, Option<&str>> = model
        .activities
        .iter()
        .map(|a| (a.id.as_str(), a.parent.as_deref()))
        .collect();
    check_tree(
        &mut report,
        "activity",
        Rule::ActivityRoot,
        Rule::ActivityCycle,
        &activity_parents,
    );

    let mut pairs: HashMap<(&str, &str), &str> = HashMap::new();
    for f in &model.facts {
        if let Some(first) = pairs.insert((f.entity.as_str(), f.attribute.as_str()), f.id.as_str()) {
            report.push(
                Rule::DuplicateFact,
                vec![first.into(), f.id.clone()],
                format!("entity `{}` has attribute `{}` twice", f.entity, f.attribute),
            );
        }
    }
    let mut impact_pairs = HashSet::new();
    for i in &model.impacts {
        if !impact_pairs.insert((i.fact.as_str(), i.activity.as_str())) {
            report.push(
                Rule::DuplicateImpact,
                vec![i.fact.clone(), i.activity.clone()],
                "more than one impact for the same fact and activity".into(),
            );
        }
    }

    let hierarchy_cyclic = report
        .findings
        .iter()
        .any(|f| matches!(f.rule, Rule::EntityCycle | Rule::ActivityCycle));
    if !hierarchy_cyclic {
        if let Some(node) = combined_cycle(model) {
            report.push(
                Rule::ImpactCycle,
                vec![node],
                "hierarchy and impact edges form a cycle".into(),
            );
        }
    }
    report
}

/// Cycle search over the union of hierarchy edges (child to parent) and
/// impact edges (fact to activity).
fn combined_cycle(model: &QualityModel) -> Option<String> {
    let mut edges: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut add = |from: String, to: String| {
        edges.entry(to.clone()).or_default();
        edges.entry(from).or_default().push(to);
    };
    for e in &model.entities {
        if let Some(p) = &e.parent {
            add(format!("entity:{}", e.id), format!("entity:{p}"));
        }
    }
    for a in &model.activities {
        if let Some(p) = &a.parent {
            add(format!("activity:{}", a.id), format!("activity:{p}"));
        }
    }
    for f in &model.facts {
        add(format!("fact:{}", f.id), format!("entity:{}", f.entity));
    }
    for i in &model.impacts {
        add(format!("fact:{}", i.fact), format!("activity:{}", i.activity));
    }
    let mut indegree: BTreeMap<&str, usize> = edges.keys().map(|k| (k.as_str(), 0)).collect();
    for tos in edges.values() {
        for t in tos {
            *indegree.get_mut(t.as_str()).unwrap() += 1;
        }
    }
    let mut ready: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
    while let Some(n) = ready.pop() {
        for t in &edges[n] {
            let d = indegree.get_mut(t.as_str()).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(t.as_str());
            }
        }
    }
    let stuck = indegree.iter().find(|(_, d)| **d > 0).map(|(k, _)| k.to_string());
    stuck
}

fn require_valid(model: &QualityModel) -> Result<()> {
    let report = validate(model);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidModel(report.findings.len()))
    }
}

/// Preorder over a parent-pointer tree, children in declaration order.
fn preorder<'a>(items: impl Iterator<Item = (&'a str, Option<&'a str>)>) -> Vec<&'a str> {
    let items: Vec<_> = items.collect();
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut roots = Vec::new();
    for &(id, parent) in &items {
        match parent {
            Some(p) => children.entry(p).or_default().push(id),
            None => roots.push(id),
        }
    }
    let mut out = Vec::with_capacity(items.len());
    let mut stack: Vec<&str> = roots.into_iter().rev().collect();
    while let Some(n) = stack.pop() {
        out.push(n);
        if let Some(cs) = children.get(n) {
            stack.extend(cs.iter().rev());
        }
    }
    out
}

impl QualityModel {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn attribute(&self, id: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.id == id)
    }

    pub fn fact(&self, id: &str) -> Option<&Fact> {
        self.facts.iter().find(|f| f.id == id)
    }

    pub fn activity(&self, id: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.id == id)
    }

    /// `[Entity | Attribute]` label of a fact.
    pub fn fact_label(&self, fact: &Fact) -> String {
        let entity = self.entity(&fact.entity).map_or(fact.entity.as_str(), |e| e.name.as_str());
        let attribute = self
            .attribute(&fact.attribute)
            .map_or(fact.attribute.as_str(), |a| a.name.as_str());
        format!("[{entity} | {attribute}]")
    }

    pub fn entity_order(&self) -> Vec<&str> {
        preorder(self.entities.iter().map(|e| (e.id.as_str(), e.parent.as_deref())))
    }

    pub fn activity_order(&self) -> Vec<&str> {
        preorder(self.activities.iter().map(|a| (a.id.as_str(), a.parent.as_deref())))
    }

    /// Facts ordered by the entity tree, then declaration order.
    pub fn fact_order(&self) -> Vec<&Fact> {
        self.entity_order()
            .into_iter()
            .flat_map(|e| self.facts.iter().filter(move |f| f.entity == e))
            .collect()
    }

    /// The activity and all of its descendants, in preorder.
    pub fn activity_subtree(&self, root: &str) -> Result<Vec<&str>> {
        if self.activity(root).is_none() {
            return Err(Error::UnknownActivity(root.to_string()));
        }
        let order = self.activity_order();
        let mut inside: HashSet<&str> = HashSet::from([root]);
        let mut out = Vec::new();
        for id in order {
            let parent = self.activity(id).and_then(|a| a.parent.as_deref());
            if id == root || parent.is_some_and(|p| inside.contains(p)) {
                inside.insert(id);
                out.push(id);
            }
        }
        Ok(out)
    }
}

/// Copies facts down `is-a` edges. A child that already has a fact for an
/// attribute keeps its own. Inherited facts get the id `child.attribute`.
pub fn resolve_inheritance(model: &QualityModel) -> Result<QualityModel> {
    require_valid(model)?;
    let mut out = model.clone();
    let mut ids: HashSet<String> = out.facts.iter().map(|f| f.id.clone()).collect();
    for entity_id in model.entity_order() {
        let entity = model.entity(entity_id).unwrap();
        let (Some(parent), Some(Relation::IsA)) = (&entity.parent, entity.relation) else {
            continue;
        };
        let inherited: Vec<Fact> = out
            .facts
            .iter()
            .filter(|f| &f.entity == parent)
            .filter(|pf| {
                !out.facts
                    .iter()
                    .any(|f| f.entity == entity.id && f.attribute == pf.attribute)
            })
            .cloned()
            .collect();
        for pf in inherited {
            let base = format!("{}.{}", entity.id, pf.attribute);
            let mut id = base.clone();
            let mut n = 2;
            while ids.contains(&id) {
                id = format!("{base}~{n}");
                n += 1;
            }
            ids.insert(id.clone());
            out.facts.push(Fact {
                id,
                entity: entity.id.clone(),
                attribute: pf.attribute.clone(),
                description: pf.description.clone(),
                assessment_note: pf.assessment_note.clone(),
            });
        }
    }
    Ok(out)
}

/// Impacts on `activity` and, when `recursive`, on every descendant.
/// Ordered depth-first by activity, then by fact id.
pub fn collect_impacts(
    model: &QualityModel,
    activity: &str,
    recursive: bool,
) -> Result<Vec<CollectedImpact>> {
    let scope = if recursive {
        model.activity_subtree(activity)?
    } else {
        model
            .activity(activity)
            .ok_or_else(|| Error::UnknownActivity(activity.to_string()))?;
        vec![activity]
    };
    let mut out = Vec::new();
    for a in scope {
        let mut here: Vec<&Impact> = model.impacts.iter().filter(|i| i.activity == a).collect();
        here.sort_by(|x, y| x.fact.cmp(&y.fact));
        out.extend(here.into_iter().map(|i| CollectedImpact {
            fact: i.fact.clone(),
            sign: i.sign,
            activity: i.activity.clone(),
        }));
    }
    Ok(out)
}

pub fn export_matrix(model: &QualityModel) -> Result<ImpactMatrix> {
    require_valid(model)?;
    let activities: Vec<(String, String)> = model
        .activity_order()
        .into_iter()
        .map(|id| (id.to_string(), model.activity(id).unwrap().name.clone()))
        .collect();
    let facts: Vec<&Fact> = model.fact_order();
    let col: HashMap<&str, usize> = activities
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (id.as_str(), i))
        .collect();
    let mut cells = vec![vec![None; activities.len()]; facts.len()];
    for (r, f) in facts.iter().enumerate() {
        for i in model.impacts.iter().filter(|i| i.fact == f.id) {
            cells[r][col[i.activity.as_str()]] = Some(i.sign);
        }
    }
    Ok(ImpactMatrix {
        activities,
        facts: facts
            .iter()
            .map(|f| (f.id.clone(), model.fact_label(f)))
            .collect(),
        cells,
    })
}
