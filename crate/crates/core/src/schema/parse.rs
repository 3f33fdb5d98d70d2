use std::str::FromStr;

use serde_json::{Map, Value};

use super::*;
use crate::validation::issue::{index, join};
use crate::validation::{IssueCode, Layer, ValidationIssue};

/// Parses JSON text, reporting a syntax error as `JSON_MALFORMED`.
pub fn parse_record_str(text: &str) -> Result<BmrRecord, Vec<ValidationIssue>> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        vec![ValidationIssue::error(
            Layer::Syntactic,
            IssueCode::JsonMalformed,
            "$",
            format!("line {} column {}: {e}", e.line(), e.column()),
        )]
    })?;
    parse_record(&value)
}

/// Converts a generic JSON value into a typed record, collecting every
/// problem rather than stopping at the first.
pub fn parse_record(value: &Value) -> Result<BmrRecord, Vec<ValidationIssue>> {
    let mut w = Walker::default();
    let record = w.record(value);
    match record {
        Some(r) if w.issues.is_empty() => Ok(r),
        _ => Err(w.issues),
    }
}

#[derive(Default)]
struct Walker {
    issues: Vec<ValidationIssue>,
}

impl Walker {
    fn push(&mut self, code: IssueCode, path: String, message: impl Into<String>) {
        let layer = match code {
            IssueCode::BadFieldType | IssueCode::BadContentKind | IssueCode::RowWidthMismatch => {
                Layer::Syntactic
            }
            _ => Layer::Structural,
        };
        self.issues.push(ValidationIssue::error(layer, code, path, message));
    }

    fn missing(&mut self, path: String, what: &str) {
        self.push(IssueCode::MissingField, path, what.to_string());
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        match v {
            Value::Object(m) => Some(m),
            _ => {
                self.missing(path.to_string(), "expected an object");
                None
            }
        }
    }

    fn required<'a>(&mut self, m: &'a Map<String, Value>, key: &str, path: &str) -> Option<&'a Value> {
        let v = m.get(key);
        if v.is_none() {
            self.missing(join(path, key), "required key is absent");
        }
        v
    }

    fn string(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<String> {
        match self.required(m, key, path)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.missing(join(path, key), "expected a string");
                None
            }
        }
    }

    fn nonempty_string(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<String> {
        let s = self.string(m, key, path)?;
        if s.trim().is_empty() {
            self.missing(join(path, key), "must not be empty");
            return None;
        }
        Some(s)
    }

    /// `Ok(None)` for absent or null, `Err(())` when present with the wrong type.
    fn opt_string(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Result<Option<String>, ()> {
        match m.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => {
                self.missing(join(path, key), "expected a string");
                Err(())
            }
        }
    }

    fn opt_array<'a>(&mut self, m: &'a Map<String, Value>, key: &str, path: &str) -> Result<Option<&'a Vec<Value>>, ()> {
        match m.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Array(a)) => Ok(Some(a)),
            Some(_) => {
                self.missing(join(path, key), "expected an array");
                Err(())
            }
        }
    }

    fn array<'a>(&mut self, m: &'a Map<String, Value>, key: &str, path: &str) -> Option<&'a Vec<Value>> {
        match self.required(m, key, path)? {
            Value::Array(a) => Some(a),
            _ => {
                self.missing(join(path, key), "expected an array");
                None
            }
        }
    }

    fn string_list(&mut self, items: &[Value], path: &str) -> Option<Vec<String>> {
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, v) in items.iter().enumerate() {
            match v {
                Value::String(s) => out.push(s.clone()),
                _ => {
                    self.missing(index(path, i), "expected a string");
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn id(&mut self, m: &Map<String, Value>, kind: IdKind, path: &str) -> Option<String> {
        let id = self.string(m, "id", path)?;
        if id_suffix(kind, &id).is_none() {
            self.push(
                IssueCode::BadIdFormat,
                join(path, "id"),
                format!("{id:?} does not match {}-<positive integer>", kind.prefix()),
            );
            return None;
        }
        Some(id)
    }

    fn field(&mut self, v: &Value, path: &str) -> Option<Field> {
        let m = self.object(v, path)?;
        let type_path = join(path, "type");
        let types = match m.get("type") {
            None => {
                self.missing(type_path, "required key is absent");
                None
            }
            Some(Value::Array(a)) if !a.is_empty() => {
                let mut types = Vec::with_capacity(a.len());
                let mut ok = true;
                for (i, t) in a.iter().enumerate() {
                    match t.as_str().map(FieldType::from_str) {
                        Some(Ok(ft)) => types.push(ft),
                        _ => {
                            self.push(
                                IssueCode::BadFieldType,
                                index(&type_path, i),
                                format!("{t} is not a legal field type"),
                            );
                            ok = false;
                        }
                    }
                }
                ok.then_some(types)
            }
            Some(other) => {
                self.push(
                    IssueCode::BadFieldType,
                    type_path,
                    format!("expected a non-empty array of field types, got {other}"),
                );
                None
            }
        };
        let value = self.required(m, "value", path).cloned();
        Some(Field {
            types: types?,
            value: value?,
            extra: extras(m, &["type", "value"]),
        })
    }

    fn header(&mut self, v: &Value, path: &str) -> Option<Header> {
        let m = self.object(v, path)?;
        let get = |w: &mut Self, key: &str| {
            let fv = w.required(m, key, path)?;
            w.field(fv, &join(path, key))
        };
        let completion_date = get(self, "completion_date");
        let expiry_date = get(self, "expiry_date");
        let name = get(self, "name");
        let quantity = get(self, "quantity");
        let sku = get(self, "sku");
        let start_date = get(self, "start_date");
        Some(Header {
            completion_date: completion_date?,
            expiry_date: expiry_date?,
            name: name?,
            quantity: quantity?,
            sku: sku?,
            start_date: start_date?,
            extra: extras(m, &Header::KEYS),
        })
    }

    fn group(&mut self, v: &Value, path: &str) -> Option<Group> {
        let m = self.object(v, path)?;
        let id = self.id(m, IdKind::Group, path);
        let name = self
            .required(m, "group_name", path)
            .and_then(|fv| self.field(fv, &join(path, "group_name")));
        Some(Group {
            id: id?,
            group_name: name?,
            extra: extras(m, &["id", "group_name"]),
        })
    }

    fn phase(&mut self, v: &Value, path: &str) -> Option<Phase> {
        let m = self.object(v, path)?;
        let id = self.id(m, IdKind::Phase, path);
        let group_id = self.string(m, "group_id", path);
        let name = self
            .required(m, "phase_name", path)
            .and_then(|fv| self.field(fv, &join(path, "phase_name")));
        Some(Phase {
            id: id?,
            group_id: group_id?,
            phase_name: name?,
            extra: extras(m, &["id", "group_id", "phase_name"]),
        })
    }

    fn step(&mut self, v: &Value, path: &str) -> Option<Step> {
        let m = self.object(v, path)?;
        let id = self.id(m, IdKind::Step, path);
        let phase_id = self.string(m, "phase_id", path);
        let group_id = self.string(m, "group_id", path);
        let step_name = self
            .required(m, "step_name", path)
            .and_then(|fv| self.field(fv, &join(path, "step_name")));
        let step_type = self
            .required(m, "step_type", path)
            .and_then(|fv| self.field(fv, &join(path, "step_type")));
        let content_path = join(path, "content");
        let content = self.array(m, "content", path).and_then(|items| {
            let parsed: Vec<_> = items
                .iter()
                .enumerate()
                .map(|(i, c)| self.content(c, &index(&content_path, i)))
                .collect();
            parsed.into_iter().collect::<Option<Vec<_>>>()
        });
        Some(Step {
            id: id?,
            phase_id: phase_id?,
            group_id: group_id?,
            step_name: step_name?,
            step_type: step_type?,
            content: content?,
            extra: extras(m, &["id", "phase_id", "group_id", "step_name", "step_type", "content"]),
        })
    }

    fn content(&mut self, v: &Value, path: &str) -> Option<Content> {
        let m = self.object(v, path)?;
        let kind = match m.get("type") {
            None => {
                self.missing(join(path, "type"), "required key is absent");
                None
            }
            Some(t) => match t.as_str().map(ContentKind::from_str) {
                Some(Ok(k)) => Some(k),
                _ => {
                    self.push(
                        IssueCode::BadContentKind,
                        join(path, "type"),
                        format!("{t} is not a legal content type"),
                    );
                    None
                }
            },
        };
        let text = self.string(m, "text", path);
        let mut ok = true;

        let items = match self.opt_array(m, "items", path) {
            Ok(Some(a)) => {
                let list = self.string_list(a, &join(path, "items"));
                ok &= list.is_some();
                list
            }
            Ok(None) => None,
            Err(()) => {
                ok = false;
                None
            }
        };

        let fields = match self.opt_array(m, "fields", path) {
            Ok(Some(a)) => {
                let fp = join(path, "fields");
                let parsed: Vec<_> = a
                    .iter()
                    .enumerate()
                    .map(|(i, f)| self.form_field(f, &index(&fp, i)))
                    .collect();
                let list = parsed.into_iter().collect::<Option<Vec<_>>>();
                ok &= list.is_some();
                list
            }
            Ok(None) => None,
            Err(()) => {
                ok = false;
                None
            }
        };

        let calculation = match m.get("calculation") {
            None | Some(Value::Null) => None,
            Some(c) => {
                let calc = self.calculation(c, &join(path, "calculation"));
                ok &= calc.is_some();
                calc
            }
        };

        let headers = match self.opt_array(m, "headers", path) {
            Ok(Some(a)) => {
                let list = self.string_list(a, &join(path, "headers"));
                ok &= list.is_some();
                list
            }
            Ok(None) => None,
            Err(()) => {
                ok = false;
                None
            }
        };

        let rows = match self.opt_array(m, "rows", path) {
            Ok(Some(a)) => {
                let rp = join(path, "rows");
                let expected = headers.as_ref().map(Vec::len).or_else(|| {
                    a.first().and_then(Value::as_array).map(Vec::len)
                });
                let mut rows = Vec::with_capacity(a.len());
                for (i, r) in a.iter().enumerate() {
                    match r {
                        Value::Array(cells) => {
                            if let Some(n) = expected {
                                if cells.len() != n {
                                    self.push(
                                        IssueCode::RowWidthMismatch,
                                        index(&rp, i),
                                        format!("row has {} cells, expected {n}", cells.len()),
                                    );
                                    ok = false;
                                }
                            }
                            rows.push(cells.clone());
                        }
                        _ => {
                            self.missing(index(&rp, i), "expected an array of cells");
                            ok = false;
                        }
                    }
                }
                Some(rows)
            }
            Ok(None) => None,
            Err(()) => {
                ok = false;
                None
            }
        };

        let link = match m.get("link") {
            None | Some(Value::Null) => None,
            Some(l) => {
                let lp = join(path, "link");
                let parsed = self.object(l, &lp).and_then(|lm| {
                    let link_text = self.string(lm, "link_text", &lp);
                    let url = self.string(lm, "url", &lp);
                    Some(Link {
                        link_text: link_text?,
                        url: url?,
                        extra: extras(lm, &["link_text", "url"]),
                    })
                });
                ok &= parsed.is_some();
                parsed
            }
        };

        let attachment = match m.get("attachment") {
            None | Some(Value::Null) => None,
            Some(a) => {
                let parsed = self.attachment(a, &join(path, "attachment"));
                ok &= parsed.is_some();
                parsed
            }
        };

        let references = match self.opt_array(m, "references", path) {
            Ok(Some(a)) => {
                let rp = join(path, "references");
                let parsed: Vec<_> = a
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let p = index(&rp, i);
                        let rm = self.object(r, &p)?;
                        let text = self.string(rm, "text", &p)?;
                        let target = self.opt_string(rm, "target", &p).ok()?;
                        Some(ReferenceNote { text, target })
                    })
                    .collect();
                let list = parsed.into_iter().collect::<Option<Vec<_>>>();
                ok &= list.is_some();
                list
            }
            Ok(None) => None,
            Err(()) => {
                ok = false;
                None
            }
        };

        // kind-specific requirements
        if let Some(kind) = kind {
            let need = |present: bool, key: &str, w: &mut Self| {
                if !present {
                    w.missing(join(path, key), &format!("required for {kind} content"));
                }
                present
            };
            ok &= match kind {
                ContentKind::Table => need(m.get("headers").is_some_and(|c| !c.is_null()), "headers", self),
                ContentKind::DataForm => {
                    let present = fields.as_ref().is_some_and(|f| !f.is_empty())
                        || m.get("fields").and_then(Value::as_array).is_some_and(|a| !a.is_empty());
                    need(present, "fields", self)
                }
                ContentKind::Calculation => need(m.get("calculation").is_some_and(|c| !c.is_null()), "calculation", self),
                ContentKind::BulletList | ContentKind::NumberedList => {
                    need(m.get("items").is_some_and(|c| !c.is_null()), "items", self)
                }
                ContentKind::Link => need(m.get("link").is_some_and(|c| !c.is_null()), "link", self),
                ContentKind::Attachments => {
                    need(m.get("attachment").is_some_and(|c| !c.is_null()), "attachment", self)
                }
                _ => true,
            };
        }

        if !ok {
            return None;
        }
        Some(Content {
            kind: kind?,
            text: text?,
            items,
            fields,
            calculation,
            headers,
            rows,
            link,
            attachment,
            references,
            extra: extras(
                m,
                &[
                    "type",
                    "text",
                    "items",
                    "fields",
                    "calculation",
                    "headers",
                    "rows",
                    "link",
                    "attachment",
                    "references",
                ],
            ),
        })
    }

    fn form_field(&mut self, v: &Value, path: &str) -> Option<FormField> {
        let m = self.object(v, path)?;
        let label = self.nonempty_string(m, "label", path);
        let value = match m.get("value") {
            None => {
                self.missing(join(path, "value"), "required key is absent");
                None
            }
            Some(Value::Null) => Some(None),
            Some(Value::String(s)) => Some(Some(s.clone())),
            Some(_) => {
                self.missing(join(path, "value"), "expected a string or null");
                None
            }
        };
        let unit = self.opt_string(m, "unit", path);
        let limits = self.opt_string(m, "limits", path);
        let notes = self.opt_string(m, "notes", path);
        Some(FormField {
            label: label?,
            value: value?,
            unit: unit.ok()?,
            limits: limits.ok()?,
            notes: notes.ok()?,
            extra: extras(m, &["label", "value", "unit", "limits", "notes"]),
        })
    }

    fn calculation(&mut self, v: &Value, path: &str) -> Option<Calculation> {
        let m = self.object(v, path)?;
        let formula = self.string(m, "formula", path);
        let vp = join(path, "variables");
        let variables = self.array(m, "variables", path).and_then(|vars| {
            let parsed: Vec<_> = vars
                .iter()
                .enumerate()
                .map(|(i, var)| self.variable(var, &index(&vp, i)))
                .collect();
            parsed.into_iter().collect::<Option<Vec<_>>>()
        });
        let result = match m.get("result") {
            None | Some(Value::Null) => Some(None),
            Some(r) => {
                let rp = join(path, "result");
                self.object(r, &rp).and_then(|rm| {
                    let value = self.required(rm, "value", &rp).cloned();
                    let unit = self.opt_string(rm, "unit", &rp);
                    Some(Some(CalcResult {
                        value: value?,
                        unit: unit.ok()?,
                        extra: extras(rm, &["value", "unit"]),
                    }))
                })
            }
        };
        let notes = self.opt_string(m, "notes", path);
        Some(Calculation {
            formula: formula?,
            variables: variables?,
            result: result?,
            notes: notes.ok()?,
            extra: extras(m, &["formula", "variables", "result", "notes"]),
        })
    }

    fn variable(&mut self, v: &Value, path: &str) -> Option<Variable> {
        let m = self.object(v, path)?;
        let name = self.nonempty_string(m, "name", path);
        let description = self.string(m, "description", path);
        let unit = self.opt_string(m, "unit", path);
        let value = m.get("value").filter(|v| !v.is_null()).cloned();
        Some(Variable {
            name: name?,
            description: description?,
            value,
            unit: unit.ok()?,
            extra: extras(m, &["name", "description", "value", "unit"]),
        })
    }

    fn attachment(&mut self, v: &Value, path: &str) -> Option<Attachment> {
        let m = self.object(v, path)?;
        let name = self.string(m, "name", path);
        let kind = match self.string(m, "kind", path) {
            Some(k) => match AttachmentKind::from_str(&k) {
                Ok(kind) => Some(kind),
                Err(e) => {
                    self.missing(join(path, "kind"), &e);
                    None
                }
            },
            None => None,
        };
        let reference = self.opt_string(m, "reference", path);
        Some(Attachment {
            name: name?,
            kind: kind?,
            reference: reference.ok()?,
            extra: extras(m, &["name", "kind", "reference"]),
        })
    }

    fn list<T>(
        &mut self,
        m: &Map<String, Value>,
        key: &str,
        mut each: impl FnMut(&mut Self, &Value, &str) -> Option<T>,
    ) -> Option<Vec<T>> {
        let items = self.array(m, key, "")?;
        let parsed: Vec<_> = items
            .iter()
            .enumerate()
            .map(|(i, v)| each(self, v, &index(key, i)))
            .collect();
        parsed.into_iter().collect()
    }

    fn record(&mut self, v: &Value) -> Option<BmrRecord> {
        let m = self.object(v, "$")?;
        let header = self.required(m, "header", "").and_then(|h| self.header(h, "header"));
        let groups = self.list(m, "groups", Self::group);
        let phases = self.list(m, "phases", Self::phase);
        let steps = self.list(m, "steps", Self::step);
        Some(BmrRecord {
            header: header?,
            groups: groups?,
            phases: phases?,
            steps: steps?,
            extra: extras(m, &["header", "groups", "phases", "steps"]),
        })
    }
}

fn extras(m: &Map<String, Value>, known: &[&str]) -> Map<String, Value> {
    m.iter()
        .filter(|(k, _)| !known.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    fn field(t: &str, v: Value) -> Value {
        json!({"type": [t], "value": v})
    }

    fn header() -> Value {
        json!({
            "completion_date": field("date", Value::Null),
            "expiry_date": field("date", Value::Null),
            "name": field("text", json!("X")),
            "quantity": field("numeric", Value::Null),
            "sku": field("text", json!("S-1")),
            "start_date": field("date", Value::Null),
        })
    }

    fn codes(issues: &[ValidationIssue]) -> Vec<(IssueCode, &str)> {
        issues.iter().map(|i| (i.code, i.path.as_str())).collect()
    }

    #[test]
    fn empty_record_is_valid() {
        let v = json!({"header": header(), "groups": [], "phases": [], "steps": []});
        let r = parse_record(&v).unwrap();
        assert!(r.groups.is_empty() && r.phases.is_empty() && r.steps.is_empty());
        assert_eq!(r.to_value(), v);
    }

    #[test]
    fn row_width_mismatch_reported_at_row() {
        let v = json!({
            "header": header(), "groups": [], "phases": [],
            "steps": [{
                "id": "step-1", "phase_id": "phase-1", "group_id": "group-1",
                "step_name": field("text", json!("s")), "step_type": field("text", Value::Null),
                "content": [
                    {"type": "paragraph", "text": "p"},
                    {"type": "table", "text": "t", "headers": ["a", "b", "c"],
                     "rows": [["1", "2", "3"], ["1", "2", "3"], ["1", "2"]]}
                ]
            }]
        });
        let issues = parse_record(&v).unwrap_err();
        assert_eq!(codes(&issues), [(IssueCode::RowWidthMismatch, "steps[0].content[1].rows[2]")]);
    }

    #[test]
    fn collects_every_issue() {
        let v = json!({
            "header": {"name": field("string", json!("x"))},
            "groups": [{"id": "grp1", "group_name": field("text", json!("g"))}],
            "phases": [],
            "steps": [{
                "id": "step-1", "phase_id": "phase-1", "group_id": "group-1",
                "step_name": field("text", json!("s")), "step_type": field("text", Value::Null),
                "content": [{"type": "heading", "text": "h"}]
            }]
        });
        let issues = parse_record(&v).unwrap_err();
        let got = codes(&issues);
        assert!(got.contains(&(IssueCode::MissingField, "header.completion_date")));
        assert!(got.contains(&(IssueCode::BadFieldType, "header.name.type[0]")));
        assert!(got.contains(&(IssueCode::BadIdFormat, "groups[0].id")));
        assert!(got.contains(&(IssueCode::BadContentKind, "steps[0].content[0].type")));
        assert_eq!(got.iter().filter(|(c, _)| *c == IssueCode::MissingField).count(), 5);
    }

    #[test]
    fn kind_requirements_enforced() {
        let step = |content: Value| {
            json!({"header": header(), "groups": [], "phases": [], "steps": [{
                "id": "step-1", "phase_id": "phase-1", "group_id": "group-1",
                "step_name": field("text", json!("s")), "step_type": field("text", Value::Null),
                "content": [content]
            }]})
        };
        for (content, key) in [
            (json!({"type": "table", "text": ""}), "headers"),
            (json!({"type": "data_form", "text": "", "fields": []}), "fields"),
            (json!({"type": "calculation", "text": ""}), "calculation"),
            (json!({"type": "bullet_list", "text": ""}), "items"),
            (json!({"type": "link", "text": ""}), "link"),
            (json!({"type": "attachments", "text": ""}), "attachment"),
        ] {
            let issues = parse_record(&step(content)).unwrap_err();
            assert_eq!(
                codes(&issues),
                [(IssueCode::MissingField, format!("steps[0].content[0].{key}").as_str())]
            );
        }
    }

    #[test]
    fn unknown_keys_are_preserved() {
        let v = json!({
            "header": header(), "groups": [{"id": "group-1", "group_name": field("text", json!("g")), "color": "red"}],
            "phases": [], "steps": [], "source": "ocr"
        });
        let r = parse_record(&v).unwrap();
        assert_eq!(r.groups[0].extra["color"], "red");
        assert_eq!(r.to_value(), v);
    }

    #[test]
    fn malformed_text_is_json_malformed() {
        let issues = parse_record_str("{\"a\":1,}").unwrap_err();
        assert_eq!(issues[0].code, IssueCode::JsonMalformed);
    }

    #[test]
    fn non_object_root() {
        let issues = parse_record(&json!([1])).unwrap_err();
        assert_eq!(codes(&issues), [(IssueCode::MissingField, "$")]);
    }
}
