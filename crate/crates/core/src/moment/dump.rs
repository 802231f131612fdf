use super::{CellValue, MomentTemplate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDump {
    pub row: Vec<String>,
    pub col: Vec<String>,
    pub class: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coordinate: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variable: Option<usize>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub conjugate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateDump {
    pub side: usize,
    pub real: bool,
    pub variables: Vec<Vec<String>>,
    pub cells: Vec<CellDump>,
}

/// Cell-by-cell listing used for golden files.
pub fn dump_template(t: &MomentTemplate) -> TemplateDump {
    let words = |idx: usize| -> Vec<String> {
        t.decode(idx)
            .iter()
            .enumerate()
            .map(|(s, &i)| t.basis.words[s][i].to_string())
            .collect()
    };
    let mut cells = Vec::with_capacity(t.side * t.side);
    for r in 0..t.side {
        for c in 0..t.side {
            let (class, coordinate, variable, conjugate) = match t.cell(r, c) {
                CellValue::Zero => ("zero", None, None, false),
                CellValue::Fixed(k) => ("fixed", Some(k), None, false),
                CellValue::Open { var, conj } => ("open", None, Some(var), conj),
            };
            cells.push(CellDump {
                row: words(r),
                col: words(c),
                class: class.into(),
                coordinate,
                variable,
                conjugate,
            });
        }
    }
    let variables = (0..t.num_variables())
        .map(|v| t.variable_words(v).iter().map(|w| w.to_string()).collect())
        .collect();
    TemplateDump {
        side: t.side,
        real: t.real,
        variables,
        cells,
    }
}

impl TemplateDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump serialises")
    }
}
