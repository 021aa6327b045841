//! The three-stage attrition from the broad mesra layer to the balanced
//! inferential cohort.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::maps::{meter_display_name, RETAINED_METERS, UNKNOWN};
use crate::corpus::MesraRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub retained_meters: BTreeSet<String>,
    pub min_cell_mesras: usize,
    pub require_form: bool,
    pub require_meter: bool,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            retained_meters: RETAINED_METERS.iter().map(|(k, _)| k.to_string()).collect(),
            min_cell_mesras: 2000,
            require_form: true,
            require_meter: true,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.min_cell_mesras < 1 {
            return Err(Error::Config("min_cell_mesras must be at least 1".into()));
        }
        if self.retained_meters.is_empty() {
            return Err(Error::Config("retained_meters is empty".into()));
        }
        Ok(())
    }

    fn has_usable_metadata(&self, r: &MesraRecord) -> bool {
        (!self.require_meter || r.meter != UNKNOWN) && (!self.require_form || r.form != UNKNOWN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub mesras: usize,
    pub poems: usize,
    pub poets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeterShare {
    pub meter: String,
    pub name: String,
    pub stage2_mesras: usize,
    /// Share of all rows with usable metadata (any meter, retained or not).
    pub stage2_share_of_usable: f64,
    pub stage3_mesras: usize,
    pub stage3_share: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedCell {
    pub poet_id: String,
    pub meter: String,
    pub mesras: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttritionReport {
    pub spec: CohortSpec,
    pub stages: Vec<StageCount>,
    /// Rows with usable meter/form metadata, before the meter whitelist.
    pub usable_metadata_mesras: usize,
    /// Retained meters' combined share of `usable_metadata_mesras`.
    pub retained_share_of_usable: f64,
    pub meters: Vec<MeterShare>,
    pub dropped_cells: Vec<DroppedCell>,
    /// Rows rejected during ingestion (before stage 1).
    pub rejected_rows: usize,
    pub duplicate_rows: usize,
}

fn stage_count(stage: &str, records: &[&MesraRecord]) -> StageCount {
    let poems: BTreeSet<(&str, &str)> = records.iter().map(|r| (r.poet_id.as_str(), r.poem_id.as_str())).collect();
    let poets: BTreeSet<&str> = records.iter().map(|r| r.poet_id.as_str()).collect();
    StageCount {
        stage: stage.to_string(),
        mesras: records.len(),
        poems: poems.len(),
        poets: poets.len(),
    }
}

fn share(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Filter records into the inferential cohort and account for every drop.
///
/// Stage 1 counts everything; stage 2 keeps rows with usable metadata in a
/// retained meter; stage 3 drops poet-meter cells below the support
/// threshold. The cohort comes back sorted by (poet, poem, line).
pub fn build_cohort(records: Vec<MesraRecord>, spec: &CohortSpec) -> Result<(Vec<MesraRecord>, AttritionReport)> {
    spec.validate()?;
    let all: Vec<&MesraRecord> = records.iter().collect();
    let s1 = stage_count("broad", &all);

    let usable: Vec<&MesraRecord> = all.iter().copied().filter(|r| spec.has_usable_metadata(r)).collect();
    let stage2: Vec<&MesraRecord> = usable
        .iter()
        .copied()
        .filter(|r| spec.retained_meters.contains(&r.meter))
        .collect();
    let s2 = stage_count("retained_meters", &stage2);

    let mut cells: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for r in &stage2 {
        *cells.entry((r.poet_id.as_str(), r.meter.as_str())).or_default() += 1;
    }
    let dropped_cells: Vec<DroppedCell> = cells
        .iter()
        .filter(|(_, &n)| n < spec.min_cell_mesras)
        .map(|(&(p, m), &n)| DroppedCell {
            poet_id: p.to_string(),
            meter: m.to_string(),
            mesras: n,
        })
        .collect();
    let keep = |r: &MesraRecord| cells[&(r.poet_id.as_str(), r.meter.as_str())] >= spec.min_cell_mesras;
    let stage3: Vec<&MesraRecord> = stage2.iter().copied().filter(|r| keep(r)).collect();
    let s3 = stage_count("support_threshold", &stage3);

    let mut meters = Vec::new();
    for m in &spec.retained_meters {
        let n2 = stage2.iter().filter(|r| &r.meter == m).count();
        let n3 = stage3.iter().filter(|r| &r.meter == m).count();
        meters.push(MeterShare {
            meter: m.clone(),
            name: meter_display_name(m).to_string(),
            stage2_mesras: n2,
            stage2_share_of_usable: share(n2, usable.len()),
            stage3_mesras: n3,
            stage3_share: share(n3, stage3.len()),
        });
    }

    let report = AttritionReport {
        spec: spec.clone(),
        usable_metadata_mesras: usable.len(),
        retained_share_of_usable: share(stage2.len(), usable.len()),
        stages: vec![s1, s2, s3],
        meters,
        dropped_cells,
        rejected_rows: 0,
        duplicate_rows: 0,
    };
    if stage3.is_empty() {
        return Err(Error::EmptyCohort(format!(
            "{} mesras in, {} after meter/form filter, 0 after the {}-mesra cell threshold",
            report.stages[0].mesras, report.stages[1].mesras, spec.min_cell_mesras
        )));
    }

    let mask: Vec<bool> = records
        .iter()
        .map(|r| spec.has_usable_metadata(r) && spec.retained_meters.contains(&r.meter) && keep(r))
        .collect();
    let mut cohort: Vec<MesraRecord> = records
        .into_iter()
        .zip(mask)
        .filter_map(|(r, k)| k.then_some(r))
        .collect();
    cohort.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok((cohort, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(poet: &str, poem: usize, line: u32, meter: &str, form: &str) -> MesraRecord {
        MesraRecord::new(
            poet.into(),
            false,
            poem.to_string(),
            line,
            None,
            meter.into(),
            form.into(),
            "a".into(),
            &["a"],
            &[],
            "#",
        )
    }

    fn cell(poet: &str, meter: &str, n: usize, form: &str) -> Vec<MesraRecord> {
        (0..n).map(|i| rec(poet, i / 10, (i % 10) as u32, meter, form)).collect()
    }

    #[test]
    fn threshold_boundary_drops_1999() {
        let spec = CohortSpec::default();
        let mut rows = cell("a", "M01", 2000, "ghazal");
        rows.extend(cell("b", "M01", 1999, "ghazal"));
        let (cohort, report) = build_cohort(rows, &spec).unwrap();
        assert_eq!(cohort.len(), 2000);
        assert_eq!(
            report.dropped_cells,
            vec![DroppedCell { poet_id: "b".into(), meter: "M01".into(), mesras: 1999 }]
        );
        assert_eq!(report.stages.iter().map(|s| s.mesras).collect::<Vec<_>>(), [3999, 3999, 2000]);
    }

    #[test]
    fn metadata_and_whitelist_filters() {
        let spec = CohortSpec {
            min_cell_mesras: 1,
            ..CohortSpec::default()
        };
        let rows = vec![
            rec("a", 0, 0, "M01", "ghazal"),
            rec("a", 0, 1, "OTHER", "ghazal"),
            rec("a", 0, 2, UNKNOWN, "ghazal"),
            rec("a", 0, 3, "M02", UNKNOWN),
        ];
        let (cohort, report) = build_cohort(rows, &spec).unwrap();
        assert_eq!(cohort.len(), 1);
        assert_eq!(report.usable_metadata_mesras, 2);
        assert!((report.retained_share_of_usable - 0.5).abs() < 1e-15);

        let lax = CohortSpec {
            require_form: false,
            ..spec
        };
        let rows = vec![rec("a", 0, 3, "M02", UNKNOWN)];
        assert_eq!(build_cohort(rows, &lax).unwrap().0.len(), 1);
    }

    #[test]
    fn empty_cohort_is_an_error() {
        let err = build_cohort(cell("a", "M01", 10, "ghazal"), &CohortSpec::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyCohort(_)));
    }

    #[test]
    fn invalid_spec() {
        let spec = CohortSpec {
            min_cell_mesras: 0,
            ..CohortSpec::default()
        };
        assert!(build_cohort(vec![], &spec).is_err());
    }
}
