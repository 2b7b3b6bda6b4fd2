use std::collections::BTreeMap;

use serde_json::Value;

use crate::{ClientError, ClientErrorKind, RevisionScore, ScoreOutcome};

const PROBABILITY_SUM_TOLERANCE: f64 = 1e-6;

/// Parse a v3 scores body into one outcome per requested revision.
///
/// ```json
/// {"enwiki": {"scores": {"12345": {"damaging": {"score": {
///     "prediction": false, "probability": {"false": 0.93, "true": 0.07}}}}}}}
/// ```
///
/// A model entry of the form `{"error": {"type": .., "message": ..}}`
/// becomes a `RevisionError` for that revision only. A body that is not a
/// scores document fails every requested revision with `MalformedBody`.
pub fn parse_scores(
    body: &str,
    context: &str,
    model: &str,
    rev_ids: &[u64],
) -> BTreeMap<u64, ScoreOutcome> {
    let fail_all = |detail: String| {
        rev_ids
            .iter()
            .map(|&id| {
                (
                    id,
                    Err(ClientError::new(
                        ClientErrorKind::MalformedBody,
                        Some(id),
                        detail.clone(),
                    )),
                )
            })
            .collect()
    };

    let doc: Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(e) => return fail_all(format!("response is not JSON: {e}")),
    };
    let Some(scores) = doc
        .get(context)
        .and_then(|c| c.get("scores"))
        .and_then(Value::as_object)
    else {
        return fail_all(format!("response has no {context}.scores object"));
    };

    rev_ids
        .iter()
        .map(|&id| {
            let outcome = match scores.get(&id.to_string()).and_then(|r| r.get(model)) {
                Some(entry) => parse_entry(id, entry),
                None => Err(ClientError::new(
                    ClientErrorKind::MalformedBody,
                    Some(id),
                    format!("no {model} entry for revision {id} in response"),
                )),
            };
            (id, outcome)
        })
        .collect()
}

fn parse_entry(rev_id: u64, entry: &Value) -> ScoreOutcome {
    if let Some(err) = entry.get("error") {
        let kind = err.get("type").and_then(Value::as_str).unwrap_or("error");
        let message = err.get("message").and_then(Value::as_str).unwrap_or("");
        return Err(ClientError::revision(rev_id, format!("{kind}: {message}")));
    }
    let malformed = |what: &str| {
        ClientError::new(
            ClientErrorKind::MalformedBody,
            Some(rev_id),
            what.to_string(),
        )
    };

    let score = entry
        .get("score")
        .ok_or_else(|| malformed("entry has neither score nor error"))?;
    let prediction = score
        .get("prediction")
        .and_then(Value::as_bool)
        .ok_or_else(|| malformed("missing boolean prediction"))?;
    let probability = score
        .get("probability")
        .ok_or_else(|| malformed("missing probability"))?;
    let p = |key: &str| {
        probability
            .get(key)
            .and_then(Value::as_f64)
            .filter(|v| (0.0..=1.0).contains(v))
            .ok_or_else(|| malformed(&format!("probability.{key} missing or outside [0, 1]")))
    };
    let p_true = p("true")?;
    let p_false = p("false")?;
    if (p_true + p_false - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(malformed(&format!(
            "probabilities sum to {} instead of 1",
            p_true + p_false
        )));
    }
    Ok(RevisionScore {
        rev_id,
        prediction,
        p_true,
        p_false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const RECORDED: &str = r#"{"enwiki":{"scores":{"12345":{"damaging":{"score":{"prediction":false,"probability":{"false":0.93,"true":0.07}}}}}}}"#;

    #[test]
    fn maps_recorded_fields() {
        let out = parse_scores(RECORDED, "enwiki", "damaging", &[12345]);
        assert_eq!(
            out[&12345],
            Ok(RevisionScore {
                rev_id: 12345,
                prediction: false,
                p_true: 0.07,
                p_false: 0.93
            })
        );
    }

    #[test]
    fn isolates_revision_errors() {
        let body = r#"{"enwiki":{"scores":{
            "1":{"damaging":{"score":{"prediction":true,"probability":{"false":0.2,"true":0.8}}}},
            "2":{"damaging":{"error":{"type":"RevisionNotFound","message":"gone"}}}}}}"#;
        let out = parse_scores(body, "enwiki", "damaging", &[1, 2]);
        assert_eq!(out[&1].as_ref().unwrap().p_true, 0.8);
        let e = out[&2].as_ref().unwrap_err();
        assert_eq!(e.kind, ClientErrorKind::RevisionError);
        assert_eq!(e.rev_id, Some(2));
        assert!(e.detail.contains("RevisionNotFound"));
    }

    #[test]
    fn missing_revision_and_bad_bodies() {
        let out = parse_scores(RECORDED, "enwiki", "damaging", &[12345, 999]);
        assert!(out[&12345].is_ok());
        assert_eq!(
            out[&999].as_ref().unwrap_err().kind,
            ClientErrorKind::MalformedBody
        );

        for body in ["not json", "{}", r#"{"enwiki":{}}"#] {
            let out = parse_scores(body, "enwiki", "damaging", &[1, 2]);
            assert_eq!(out.len(), 2);
            assert!(out
                .values()
                .all(|o| o.as_ref().unwrap_err().kind == ClientErrorKind::MalformedBody));
        }
    }

    #[test]
    fn rejects_inconsistent_probabilities() {
        let body = r#"{"enwiki":{"scores":{"7":{"damaging":{"score":{"prediction":false,"probability":{"false":0.5,"true":0.4}}}}}}}"#;
        let out = parse_scores(body, "enwiki", "damaging", &[7]);
        assert_eq!(
            out[&7].as_ref().unwrap_err().kind,
            ClientErrorKind::MalformedBody
        );
    }
}
