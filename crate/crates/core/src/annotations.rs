//! Material classes and the newline-delimited JSON annotation format.
//!
//! Each line is `{"image": "<relative path>", "class": "<name>",
//! "polygon": [x1, y1, x2, y2, ...]}`. Bad lines are collected with their
//! line number instead of aborting the whole file.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// The fifteen material categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialClass {
    Animal,
    Ceramic,
    Fabric,
    Flora,
    Food,
    Gem,
    Glass,
    Ground,
    Liquid,
    Metal,
    Paper,
    Skin,
    Sky,
    Stone,
    Wood,
}

impl MaterialClass {
    pub const ALL: [MaterialClass; 15] = [
        MaterialClass::Animal,
        MaterialClass::Ceramic,
        MaterialClass::Fabric,
        MaterialClass::Flora,
        MaterialClass::Food,
        MaterialClass::Gem,
        MaterialClass::Glass,
        MaterialClass::Ground,
        MaterialClass::Liquid,
        MaterialClass::Metal,
        MaterialClass::Paper,
        MaterialClass::Skin,
        MaterialClass::Sky,
        MaterialClass::Stone,
        MaterialClass::Wood,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MaterialClass::Animal => "animal",
            MaterialClass::Ceramic => "ceramic",
            MaterialClass::Fabric => "fabric",
            MaterialClass::Flora => "flora",
            MaterialClass::Food => "food",
            MaterialClass::Gem => "gem",
            MaterialClass::Glass => "glass",
            MaterialClass::Ground => "ground",
            MaterialClass::Liquid => "liquid",
            MaterialClass::Metal => "metal",
            MaterialClass::Paper => "paper",
            MaterialClass::Skin => "skin",
            MaterialClass::Sky => "sky",
            MaterialClass::Stone => "stone",
            MaterialClass::Wood => "wood",
        }
    }
}

impl fmt::Display for MaterialClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaterialClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.trim().to_lowercase();
        Self::ALL
            .into_iter()
            .find(|c| c.name() == lower)
            .ok_or_else(|| format!("unknown class '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub image: String,
    pub class: MaterialClass,
    pub polygon: Vec<(f64, f64)>,
}

impl AnnotationRecord {
    /// One JSON line, the inverse of [`parse_annotations`].
    pub fn to_json_line(&self) -> String {
        let flat: Vec<f64> = self.polygon.iter().flat_map(|(x, y)| [*x, *y]).collect();
        serde_json::json!({
            "image": self.image,
            "class": self.class,
            "polygon": flat,
        })
        .to_string()
    }
}

/// A rejected line; `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MalformedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedAnnotations {
    pub records: Vec<AnnotationRecord>,
    pub rejected: Vec<MalformedRecord>,
}

fn parse_line(line: &str) -> Result<AnnotationRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("record is not a JSON object")?;
    let image = obj
        .get("image")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .ok_or("missing or empty \"image\"")?;
    let class: MaterialClass = obj
        .get("class")
        .and_then(Value::as_str)
        .ok_or("missing \"class\"")?
        .parse()?;
    let coords = obj
        .get("polygon")
        .and_then(Value::as_array)
        .ok_or("missing \"polygon\" array")?;
    if coords.len() % 2 != 0 {
        return Err(format!("odd coordinate count ({})", coords.len()));
    }
    let nums = coords
        .iter()
        .map(|v| v.as_f64().filter(|f| f.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or("polygon coordinates must be finite numbers")?;
    if nums.len() < 6 {
        return Err(format!("polygon needs at least 3 vertices, got {}", nums.len() / 2));
    }
    Ok(AnnotationRecord {
        image: image.to_string(),
        class,
        polygon: nums.chunks_exact(2).map(|c| (c[0], c[1])).collect(),
    })
}

/// Parses every non-blank line; invalid lines are reported, not fatal.
pub fn parse_annotations(bytes: &[u8]) -> ParsedAnnotations {
    let mut out = ParsedAnnotations::default();
    let text = String::from_utf8_lossy(bytes);
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.rejected.push(MalformedRecord { line: i + 1, reason }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_folds_case() {
        let parsed = parse_annotations(br#"{"image":"a.png","class":"Fabric","polygon":[0,0,4,0,4,4]}"#);
        assert!(parsed.rejected.is_empty());
        let r = &parsed.records[0];
        assert_eq!(r.class, MaterialClass::Fabric);
        assert_eq!(r.polygon, vec![(0.0, 0.0), (4.0, 0.0), (4.0, 4.0)]);
        assert_eq!(r.image, "a.png");
    }

    #[test]
    fn rejects_with_line_numbers() {
        let text = concat!(
            r#"{"image":"a.png","class":"sky","polygon":[0,0,4,0,4]}"#,
            "\n\n",
            r#"{"image":"b.png","class":"velvet","polygon":[0,0,4,0,4,4]}"#,
            "\n",
            r#"{"image":"c.png","class":"WOOD","polygon":[0,0,4,0,4,4]}"#,
            "\nnot json\n",
        );
        let parsed = parse_annotations(text.as_bytes());
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].class, MaterialClass::Wood);
        let lines: Vec<usize> = parsed.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![1, 3, 5]);
        assert!(parsed.rejected[0].reason.contains("odd coordinate count"));
        assert!(parsed.rejected[1].reason.contains("unknown class"));
    }

    #[test]
    fn too_few_vertices() {
        let parsed = parse_annotations(br#"{"image":"a.png","class":"gem","polygon":[0,0,1,1]}"#);
        assert_eq!(parsed.rejected.len(), 1);
    }

    #[test]
    fn json_line_round_trip() {
        let r = AnnotationRecord {
            image: "x/y.png".into(),
            class: MaterialClass::Glass,
            polygon: vec![(0.5, 1.0), (3.25, 1.0), (2.0, 4.0)],
        };
        let parsed = parse_annotations(r.to_json_line().as_bytes());
        assert_eq!(parsed.records, vec![r]);
    }

    #[test]
    fn class_names_are_sorted_canonical() {
        let names: Vec<&str> = MaterialClass::ALL.iter().map(|c| c.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(" Sky ".parse::<MaterialClass>(), Ok(MaterialClass::Sky));
    }
}
