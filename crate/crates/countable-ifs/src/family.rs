//! Countable indexed families of contracting similarities.
//!
//! A family is a finite list of branches; branch `b` contributes maps
//! F_{b,i} for i = 1, 2, ... (optionally capped), with coefficients given
//! either by expressions in `i` or by a closed-form rule. Computations
//! run on the truncation to indices i <= N.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::contraction::MapDescriptor;
use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::rational::{self, parse_rational, pow_u32, q};

/// How one branch produces coefficients from the index.
#[derive(Debug, Clone)]
enum Coefficients {
    Exprs { ratio: Expr, translation: Vec<Expr> },
    /// Constant ratio with translation base^i. Covers geometric
    /// translations, which the expression grammar cannot write.
    Power { ratio: BigRational, base: BigRational },
}

#[derive(Debug, Clone)]
pub struct Branch {
    coeffs: Coefficients,
    /// Branches modelling a single fixed map set this to 1.
    max_index: Option<u32>,
}

impl Branch {
    pub fn from_exprs(ratio: Expr, translation: Vec<Expr>, max_index: Option<u32>) -> Branch {
        Branch { coeffs: Coefficients::Exprs { ratio, translation }, max_index }
    }

    fn eval(&self, i: u32) -> Result<(BigRational, Vec<BigRational>)> {
        match &self.coeffs {
            Coefficients::Exprs { ratio, translation } => {
                let r = ratio.eval(i)?;
                let b = translation.iter().map(|e| e.eval(i)).collect::<Result<_>>()?;
                Ok((r, b))
            }
            Coefficients::Power { ratio, base } => Ok((ratio.clone(), vec![pow_u32(base, i)])),
        }
    }

    fn cap(&self) -> u32 {
        self.max_index.unwrap_or(u32::MAX)
    }
}

/// Identifies one materialized map: branch position and index i >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MapKey {
    pub branch: usize,
    pub index: u32,
}

pub struct Family {
    name: String,
    dimension: usize,
    branches: Vec<Branch>,
    truncation: u32,
    declared_sup_ratio: Option<f64>,
    cache: RwLock<HashMap<MapKey, Arc<MapDescriptor>>>,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Family")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("branches", &self.branches.len())
            .field("truncation", &self.truncation)
            .field("declared_sup_ratio", &self.declared_sup_ratio)
            .finish()
    }
}

/// On-disk family description. `ratio` and each `translation` entry are
/// expressions in `i`; `max_index` caps a branch (1 for a fixed map).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub dimension: usize,
    pub truncation: u32,
    pub declared_sup_ratio: Option<f64>,
    pub branches: Vec<BranchConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchConfig {
    pub ratio: String,
    pub translation: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_index: Option<u32>,
}

impl Family {
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        branches: Vec<Branch>,
        truncation: u32,
        declared_sup_ratio: Option<f64>,
    ) -> Result<Family> {
        if dimension == 0 {
            return Err(Error::InvalidFamily("dimension must be >= 1".into()));
        }
        if branches.is_empty() {
            return Err(Error::InvalidFamily("a family needs at least one branch".into()));
        }
        if truncation == 0 {
            return Err(Error::InvalidFamily("truncation N must be >= 1".into()));
        }
        for (bi, branch) in branches.iter().enumerate() {
            if branch.max_index == Some(0) {
                return Err(Error::InvalidFamily(format!("branch {bi}: max_index must be >= 1")));
            }
            if let Coefficients::Exprs { translation, .. } = &branch.coeffs {
                if translation.len() != dimension {
                    return Err(Error::InvalidFamily(format!(
                        "branch {bi}: translation has {} components, dimension is {dimension}",
                        translation.len()
                    )));
                }
            } else if dimension != 1 {
                return Err(Error::InvalidFamily(format!(
                    "branch {bi}: closed-form branches are one-dimensional"
                )));
            }
        }
        Ok(Family {
            name: name.into(),
            dimension,
            branches,
            truncation,
            declared_sup_ratio,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn from_config(name: impl Into<String>, cfg: &FamilyConfig) -> Result<Family> {
        let branches = cfg
            .branches
            .iter()
            .map(|b| {
                let ratio = expr::parse(&b.ratio)?;
                let translation =
                    b.translation.iter().map(|t| expr::parse(t)).collect::<std::result::Result<_, _>>()?;
                Ok(Branch::from_exprs(ratio, translation, b.max_index))
            })
            .collect::<Result<Vec<_>>>()?;
        Family::new(name, cfg.dimension, branches, cfg.truncation, cfg.declared_sup_ratio)
    }

    pub fn from_json(name: impl Into<String>, json: &str) -> Result<Family> {
        let cfg: FamilyConfig = serde_json::from_str(json)?;
        Family::from_config(name, &cfg)
    }

    /// Builtin catalog: EX1, EX2, DYADIC and GEO(q).
    pub fn builtin(spec: &str) -> Result<Family> {
        let spec = spec.trim();
        let parse_branch = |ratio: &str, translation: &[&str], cap: Option<u32>| -> Result<Branch> {
            let r = expr::parse(ratio)?;
            let t = translation.iter().map(|s| expr::parse(s)).collect::<std::result::Result<_, _>>()?;
            Ok(Branch::from_exprs(r, t, cap))
        };
        match spec.to_ascii_uppercase().as_str() {
            "EX1" => Family::new(
                "EX1",
                1,
                vec![parse_branch("i/(i+1)", &["1/(i+1)^2"], None)?],
                DEFAULT_TRUNCATION,
                Some(1.0),
            ),
            "EX2" => Family::new(
                "EX2",
                1,
                vec![
                    parse_branch("-i/(i+1)", &["(2*i+1)/i"], None)?,
                    parse_branch("-i/(i+1)", &["1/(i+1)"], None)?,
                ],
                DEFAULT_TRUNCATION,
                Some(1.0),
            ),
            "DYADIC" => Family::new(
                "DYADIC",
                1,
                vec![
                    parse_branch("1/2", &["0"], Some(1))?,
                    parse_branch("1/2", &["1/2"], Some(1))?,
                ],
                DEFAULT_TRUNCATION,
                Some(0.5),
            ),
            s if s.starts_with("GEO(") && s.ends_with(')') => {
                let inner = &spec[4..spec.len() - 1];
                let ratio = parse_rational(inner)
                    .map_err(|_| Error::UnknownFamily(spec.to_string()))?;
                if rational::abs(&ratio) >= BigRational::one() || ratio.is_zero() {
                    return Err(Error::InvalidFamily(format!(
                        "GEO ratio must satisfy 0 < |q| < 1, got {inner}"
                    )));
                }
                let declared = rational::to_f64(&rational::abs(&ratio));
                Family::new(
                    format!("GEO({inner})"),
                    1,
                    vec![Branch { coeffs: Coefficients::Power { ratio, base: q(1, 2) }, max_index: None }],
                    DEFAULT_TRUNCATION,
                    Some(declared),
                )
            }
            _ => Err(Error::UnknownFamily(spec.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn declared_sup_ratio(&self) -> Option<f64> {
        self.declared_sup_ratio
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Same family with a different truncation. The cache is not carried
    /// over; materialized maps do not depend on N.
    pub fn with_truncation(&self, truncation: u32) -> Result<Family> {
        Family::new(
            self.name.clone(),
            self.dimension,
            self.branches.clone(),
            truncation,
            self.declared_sup_ratio,
        )
    }

    /// Materializes one map, memoized. Checks |r| < 1 exactly and, when a
    /// sup ratio is declared, |r| <= declared + 1e-12.
    pub fn map(&self, key: MapKey) -> Result<Arc<MapDescriptor>> {
        if key.index == 0 {
            return Err(Error::InvalidWord("map index is 1-based".into()));
        }
        let branch = self
            .branches
            .get(key.branch)
            .ok_or_else(|| Error::InvalidFamily(format!("no branch {}", key.branch)))?;
        if key.index > branch.cap() {
            return Err(Error::InvalidFamily(format!(
                "branch {} is capped at index {}",
                key.branch,
                branch.cap()
            )));
        }
        if let Some(hit) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let (ratio, translation) = branch.eval(key.index)?;
        let map = MapDescriptor::labeled(ratio, translation, key.branch, key.index)?;
        if let Some(declared) = self.declared_sup_ratio {
            let r = map.ratio_f64().abs();
            if r > declared + 1e-12 {
                return Err(Error::DeclaredRatioExceeded {
                    branch: key.branch,
                    index: key.index,
                    ratio: r,
                    declared,
                });
            }
        }
        let map = Arc::new(map);
        self.cache.write().expect("cache lock").insert(key, map.clone());
        Ok(map)
    }

    /// Keys of the truncated family, index-major: all branches at i = 1,
    /// then i = 2, ... This is the enumeration order of the countable
    /// union, and positions in it are the 1-based alphabet letters.
    pub fn alphabet(&self) -> Vec<MapKey> {
        let mut keys = Vec::new();
        for i in 1..=self.truncation {
            for (b, branch) in self.branches.iter().enumerate() {
                if i <= branch.cap() {
                    keys.push(MapKey { branch: b, index: i });
                }
            }
        }
        keys
    }

    /// All truncated maps in alphabet order.
    pub fn maps(&self) -> Result<Vec<Arc<MapDescriptor>>> {
        self.alphabet().into_iter().map(|k| self.map(k)).collect()
    }

    /// Exact fixed points of the truncated maps, alphabet order.
    pub fn fixed_points_exact(&self) -> Result<Vec<(MapKey, Vec<BigRational>)>> {
        self.alphabet()
            .into_iter()
            .map(|k| Ok((k, self.map(k)?.fixed_point())))
            .collect()
    }

    /// The truncated fixed-point set as a deduplicated cloud.
    pub fn fixed_point_set(&self) -> Result<PointCloud> {
        let pts = self
            .alphabet()
            .into_iter()
            .map(|k| Ok(self.map(k)?.fixed_point_f64()))
            .collect::<Result<Vec<_>>>()?;
        PointCloud::from_points(self.dimension, pts)
    }

    /// Max |r_i| over the truncation, with the declared value and a flag
    /// for a visible truncation gap (> 0.01).
    pub fn sup_ratio(&self) -> Result<SupRatioReport> {
        let empirical = self
            .maps()?
            .iter()
            .map(|m| m.ratio_f64().abs())
            .fold(0.0f64, f64::max);
        let declared = self.declared_sup_ratio;
        let truncation_gap = declared.map(|d| d - empirical > 0.01 + 1e-12).unwrap_or(false);
        Ok(SupRatioReport { empirical, declared, truncation_gap })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupRatioReport {
    pub empirical: f64,
    pub declared: Option<f64>,
    /// True when the truncated maximum is more than 0.01 away from the
    /// declared supremum, i.e. the truncation hides the tail.
    pub truncation_gap: bool,
}

pub const DEFAULT_TRUNCATION: u32 = 100;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_int;

    #[test]
    fn ex1_materializes_the_stated_coefficients() {
        let fam = Family::builtin("EX1").unwrap();
        let m = fam.map(MapKey { branch: 0, index: 1 }).unwrap();
        assert_eq!(m.ratio(), &q(1, 2));
        assert_eq!(m.translation(), &[q(1, 4)]);
        let m4 = fam.map(MapKey { branch: 0, index: 4 }).unwrap();
        assert_eq!(m4.ratio(), &q(4, 5));
        assert_eq!(m4.translation(), &[q(1, 25)]);
    }

    #[test]
    fn ex1_fixed_points_are_reciprocals() {
        let fam = Family::builtin("EX1").unwrap().with_truncation(200).unwrap();
        for (key, fp) in fam.fixed_points_exact().unwrap() {
            assert_eq!(fp, vec![q(1, key.index as i64 + 1)]);
        }
    }

    #[test]
    fn ex2_has_two_branches_with_shared_ratio() {
        let fam = Family::builtin("EX2").unwrap();
        let a = fam.map(MapKey { branch: 0, index: 1 }).unwrap();
        let b = fam.map(MapKey { branch: 1, index: 1 }).unwrap();
        assert_eq!(a.ratio(), &q(-1, 2));
        assert_eq!(a.translation(), &[q_int(3)]);
        assert_eq!(b.ratio(), &q(-1, 2));
        assert_eq!(b.translation(), &[q(1, 2)]);
    }

    #[test]
    fn ex2_truncated_fixed_point_set() {
        // recomputed through b/(1-r): F_1 -> 2, F_2 -> 3/2,
        // second branch: 1/3 and 1/5
        let fam = Family::builtin("EX2").unwrap().with_truncation(2).unwrap();
        let exact: Vec<_> = fam.fixed_points_exact().unwrap();
        let values: Vec<_> = exact.iter().map(|(_, fp)| fp[0].clone()).collect();
        assert_eq!(values, vec![q_int(2), q(1, 3), q(3, 2), q(1, 5)]);

        let cloud = fam.fixed_point_set().unwrap();
        let got: Vec<f64> = cloud.iter().map(|p| p[0]).collect();
        assert_eq!(got, vec![0.2, 1.0 / 3.0, 1.5, 2.0]);
    }

    #[test]
    fn dyadic_is_two_fixed_maps() {
        let fam = Family::builtin("DYADIC").unwrap().with_truncation(50).unwrap();
        let keys = fam.alphabet();
        assert_eq!(keys, vec![MapKey { branch: 0, index: 1 }, MapKey { branch: 1, index: 1 }]);
        // flattened position 2 is the upper half map
        let m = fam.map(keys[1]).unwrap();
        assert_eq!(m.ratio(), &q(1, 2));
        assert_eq!(m.translation(), &[q(1, 2)]);
        let cloud = fam.fixed_point_set().unwrap();
        let got: Vec<f64> = cloud.iter().map(|p| p[0]).collect();
        assert_eq!(got, vec![0.0, 1.0]);
    }

    #[test]
    fn geo_family_has_geometric_translations() {
        let fam = Family::builtin("GEO(1/3)").unwrap();
        let m = fam.map(MapKey { branch: 0, index: 3 }).unwrap();
        assert_eq!(m.ratio(), &q(1, 3));
        assert_eq!(m.translation(), &[q(1, 8)]);
        let rep = fam.sup_ratio().unwrap();
        assert!((rep.empirical - 1.0 / 3.0).abs() < 1e-15);
        assert!(!rep.truncation_gap);
        assert!(Family::builtin("GEO(1)").is_err());
        assert!(Family::builtin("GEO(x)").is_err());
    }

    #[test]
    fn ex1_sup_ratio_reports_truncation_gap() {
        let fam = Family::builtin("EX1").unwrap().with_truncation(99).unwrap();
        let rep = fam.sup_ratio().unwrap();
        assert_eq!(rep.empirical, 0.99);
        assert_eq!(rep.declared, Some(1.0));
        assert!(!rep.truncation_gap);

        let fam = Family::builtin("EX1").unwrap().with_truncation(20).unwrap();
        assert!(fam.sup_ratio().unwrap().truncation_gap);
    }

    #[test]
    fn ex1_keeps_the_half_interval_invariant() {
        // F_i([0, 1/2]) inside [0, 1/2], checked exactly per endpoint
        let n = 2_000u32;
        let fam = Family::builtin("EX1").unwrap().with_truncation(n).unwrap();
        let lo = vec![q_int(0)];
        let hi = vec![q(1, 2)];
        for key in fam.alphabet() {
            let m = fam.map(key).unwrap();
            let a = m.apply_exact(&lo);
            let b = m.apply_exact(&hi);
            assert!(a[0] >= q_int(0) && a[0] <= q(1, 2), "i = {}", key.index);
            assert!(b[0] >= q_int(0) && b[0] <= q(1, 2), "i = {}", key.index);
        }
    }

    #[test]
    fn alphabet_interleaves_branches_index_major() {
        let fam = Family::builtin("EX2").unwrap().with_truncation(3).unwrap();
        let keys = fam.alphabet();
        assert_eq!(
            keys,
            vec![
                MapKey { branch: 0, index: 1 },
                MapKey { branch: 1, index: 1 },
                MapKey { branch: 0, index: 2 },
                MapKey { branch: 1, index: 2 },
                MapKey { branch: 0, index: 3 },
                MapKey { branch: 1, index: 3 },
            ]
        );
    }

    #[test]
    fn config_json_round_trips() {
        let json = r#"{
            "dimension": 1,
            "truncation": 10,
            "declared_sup_ratio": 1.0,
            "branches": [
                { "ratio": "i/(i+1)", "translation": ["1/(i+1)^2"] }
            ]
        }"#;
        let fam = Family::from_json("custom", json).unwrap();
        assert_eq!(fam.truncation(), 10);
        let m = fam.map(MapKey { branch: 0, index: 2 }).unwrap();
        assert_eq!(m.ratio(), &q(2, 3));

        let cfg = FamilyConfig {
            dimension: 1,
            truncation: 5,
            declared_sup_ratio: None,
            branches: vec![BranchConfig {
                ratio: "1/2".into(),
                translation: vec!["i".into()],
                max_index: Some(2),
            }],
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: FamilyConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.branches[0].max_index, Some(2));
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        assert!(Family::from_json(
            "bad",
            r#"{"dimension": 2, "truncation": 3, "declared_sup_ratio": null,
                "branches": [{"ratio": "1/2", "translation": ["0"]}]}"#
        )
        .is_err());
        assert!(Family::from_json(
            "bad",
            r#"{"dimension": 1, "truncation": 0, "declared_sup_ratio": null,
                "branches": [{"ratio": "1/2", "translation": ["0"]}]}"#
        )
        .is_err());
    }

    #[test]
    fn non_contractive_index_is_rejected_lazily() {
        // ratio (i+1)/2 is fine at i = 1 but not at i = 2
        let fam = Family::from_json(
            "grow",
            r#"{"dimension": 1, "truncation": 5, "declared_sup_ratio": null,
                "branches": [{"ratio": "-1*(i+1)/(i+3)", "translation": ["1"]}]}"#,
        )
        .unwrap();
        assert!(fam.map(MapKey { branch: 0, index: 1 }).is_ok());
        let fam2 = Family::from_json(
            "grow2",
            r#"{"dimension": 1, "truncation": 5, "declared_sup_ratio": null,
                "branches": [{"ratio": "i/2", "translation": ["1"]}]}"#,
        )
        .unwrap();
        assert!(fam2.map(MapKey { branch: 0, index: 1 }).is_ok());
        match fam2.map(MapKey { branch: 0, index: 2 }) {
            Err(Error::NotContractive { index: 2, .. }) => {}
            other => panic!("expected NotContractive, got {other:?}"),
        }
        assert!(fam2.maps().is_err());
    }

    #[test]
    fn declared_bound_is_enforced() {
        let fam = Family::from_json(
            "tight",
            r#"{"dimension": 1, "truncation": 5, "declared_sup_ratio": 0.4,
                "branches": [{"ratio": "1/2", "translation": ["0"]}]}"#,
        )
        .unwrap();
        match fam.map(MapKey { branch: 0, index: 1 }) {
            Err(Error::DeclaredRatioExceeded { .. }) => {}
            other => panic!("expected DeclaredRatioExceeded, got {other:?}"),
        }
    }

    #[test]
    fn materialization_is_cached() {
        let fam = Family::builtin("EX1").unwrap();
        let a = fam.map(MapKey { branch: 0, index: 7 }).unwrap();
        let b = fam.map(MapKey { branch: 0, index: 7 }).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn division_by_zero_in_coefficients_is_reported() {
        let fam = Family::from_json(
            "degenerate",
            r#"{"dimension": 1, "truncation": 5, "declared_sup_ratio": null,
                "branches": [{"ratio": "1/(i-2)", "translation": ["0"]}]}"#,
        )
        .unwrap();
        match fam.map(MapKey { branch: 0, index: 2 }) {
            Err(Error::DivisionByZero { index: 2 }) => {}
            other => panic!("expected DivisionByZero, got {other:?}"),
        }
    }
}
