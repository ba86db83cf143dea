//! PETSc-style option tokens parsed into a split tree.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unsupported option `{0}`")]
    UnknownOption(String),
    #[error("option `{0}` expects a value")]
    MissingValue(String),
    #[error("option `{option}` has unsupported value `{value}`")]
    BadValue { option: String, value: String },
    #[error("option `{0}` is required")]
    Required(String),
    #[error("field groups {groups:?} do not partition {n} fields")]
    NotAPartition { groups: Vec<Vec<usize>>, n: usize },
    #[error("a schur split needs exactly 2 field groups, found {0}")]
    SchurArity(usize),
    #[error("option `{0}` given twice")]
    Duplicate(String),
    #[error("unknown method `{0}` (expected scale or field)")]
    UnknownMethod(String),
}

/// The two four-field preconditioners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Groups `{u1, p1}` and `{u2, p2}`: one Schur factorization per network.
    Scale,
    /// Groups `{u1, u2}` and `{p1, p2}`: one Schur factorization over both.
    Field,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Scale, Method::Field];

    pub fn name(self) -> &'static str {
        match self {
            Method::Scale => "scale",
            Method::Field => "field",
        }
    }

    /// The option tokens describing this method.
    pub fn options(self) -> Vec<String> {
        let text = match self {
            Method::Scale => SCALE_SPLIT,
            Method::Field => FIELD_SPLIT,
        };
        text.split_whitespace().map(str::to_string).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().trim_end_matches("-split").trim_end_matches("_split") {
            "scale" | "1" => Ok(Method::Scale),
            "field" | "2" => Ok(Method::Field),
            _ => Err(ConfigError::UnknownMethod(s.to_string())),
        }
    }
}

const SCALE_SPLIT: &str = "
-ksp_type gmres
-pc_type fieldsplit
-pc_fieldsplit_0_fields 0,1
-pc_fieldsplit_1_fields 2,3
-pc_fieldsplit_type additive
-fieldsplit_0_ksp_type preonly
-fieldsplit_0_pc_type fieldsplit
-fieldsplit_0_pc_fieldsplit_type schur
-fieldsplit_0_pc_fieldsplit_schur_fact_type full
-fieldsplit_0_pc_fieldsplit_schur_precondition selfp
-fieldsplit_0_fieldsplit_0_ksp_type preonly
-fieldsplit_0_fieldsplit_0_pc_type bjacobi
-fieldsplit_0_fieldsplit_1_ksp_type preonly
-fieldsplit_0_fieldsplit_1_pc_type hypre
-fieldsplit_1_ksp_type preonly
-fieldsplit_1_pc_type fieldsplit
-fieldsplit_1_pc_fieldsplit_type schur
-fieldsplit_1_pc_fieldsplit_schur_fact_type full
-fieldsplit_1_pc_fieldsplit_schur_precondition selfp
-fieldsplit_1_fieldsplit_0_ksp_type preonly
-fieldsplit_1_fieldsplit_0_pc_type bjacobi
-fieldsplit_1_fieldsplit_1_ksp_type preonly
-fieldsplit_1_fieldsplit_1_pc_type hypre
";

const FIELD_SPLIT: &str = "
-ksp_type gmres
-pc_type fieldsplit
-pc_fieldsplit_0_fields 0,2
-pc_fieldsplit_1_fields 1,3
-pc_fieldsplit_type schur
-pc_fieldsplit_schur_fact_type full
-pc_fieldsplit_schur_precondition selfp
-fieldsplit_0_ksp_type preonly
-fieldsplit_0_pc_type bjacobi
-fieldsplit_1_ksp_type preonly
-fieldsplit_1_pc_type fieldsplit
-fieldsplit_1_pc_fieldsplit_type additive
-fieldsplit_1_fieldsplit_0_ksp_type preonly
-fieldsplit_1_fieldsplit_0_pc_type hypre
-fieldsplit_1_fieldsplit_1_ksp_type preonly
-fieldsplit_1_fieldsplit_1_pc_type hypre
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitType {
    Additive,
    SchurFull,
}

/// Preconditioner of one node of the tree.
#[derive(Debug, Clone, PartialEq)]
pub enum PcSpec {
    None,
    /// `bjacobi`/`ilu`: ILU(0) of the node's matrix.
    Ilu0,
    /// `hypre`/`gamg`/`amg`: one AMG V-cycle.
    Amg,
    FieldSplit(SplitSpec),
}

/// A fieldsplit node. Groups index the node's own fields (the global
/// fields at the root, the parent group's members below it).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub groups: Vec<Vec<usize>>,
    pub split_type: SplitType,
    pub children: Vec<PcSpec>,
}

/// Outer Krylov settings and the preconditioner tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rtol: f64,
    pub restart: usize,
    pub max_iter: usize,
    pub pc: PcSpec,
}

impl SolverConfig {
    pub fn for_method(method: Method) -> Self {
        parse_options(&method.options()).expect("built-in option sets are valid")
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    /// Parse whitespace-separated tokens, ignoring `#` comments.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let tokens: Vec<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .map(str::to_string)
            .collect();
        parse_options(&tokens)
    }
}

/// Key/value pairs with consumption tracking.
struct Options {
    map: BTreeMap<String, String>,
}

impl Options {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }
}

fn tokenize<S: AsRef<str>>(tokens: &[S]) -> Result<Options, ConfigError> {
    let mut map = BTreeMap::new();
    let mut it = tokens.iter().map(AsRef::as_ref).peekable();
    while let Some(tok) = it.next() {
        let Some(key) = tok.strip_prefix('-') else {
            return Err(ConfigError::UnknownOption(tok.to_string()));
        };
        let value = match it.peek() {
            Some(v) if !v.starts_with('-') => it.next().unwrap().to_string(),
            _ => return Err(ConfigError::MissingValue(tok.to_string())),
        };
        if map.insert(key.to_string(), value).is_some() {
            return Err(ConfigError::Duplicate(tok.to_string()));
        }
    }
    Ok(Options { map })
}

fn parse_num<T: FromStr>(key: &str, value: String) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue { option: format!("-{key}"), value })
}

/// Parse the supported option grammar into a validated [`SolverConfig`].
pub fn parse_options<S: AsRef<str>>(tokens: &[S]) -> Result<SolverConfig, ConfigError> {
    let mut o = tokenize(tokens)?;
    match o.take("ksp_type").as_deref() {
        None | Some("gmres") | Some("fgmres") => {}
        Some(other) => {
            return Err(ConfigError::BadValue { option: "-ksp_type".into(), value: other.into() });
        }
    }
    let rtol = o.take("ksp_rtol").map(|v| parse_num("ksp_rtol", v)).transpose()?.unwrap_or(1e-7);
    let restart = o.take("ksp_gmres_restart").map(|v| parse_num("ksp_gmres_restart", v)).transpose()?.unwrap_or(30);
    let max_iter = o.take("ksp_max_it").map(|v| parse_num("ksp_max_it", v)).transpose()?.unwrap_or(1000);
    if !(rtol > 0.0 && rtol < 1.0) {
        return Err(ConfigError::BadValue { option: "-ksp_rtol".into(), value: rtol.to_string() });
    }
    if restart == 0 {
        return Err(ConfigError::BadValue { option: "-ksp_gmres_restart".into(), value: "0".into() });
    }
    let pc = parse_pc(&mut o, "", 4, true)?;
    if let Some(key) = o.map.keys().next() {
        return Err(ConfigError::UnknownOption(format!("-{key}")));
    }
    Ok(SolverConfig { rtol, restart, max_iter, pc })
}

fn parse_pc(o: &mut Options, prefix: &str, n_fields: usize, root: bool) -> Result<PcSpec, ConfigError> {
    if !root {
        let key = format!("{prefix}ksp_type");
        if let Some(v) = o.take(&key) {
            if v != "preonly" {
                return Err(ConfigError::BadValue { option: format!("-{key}"), value: v });
            }
        }
    }
    let key = format!("{prefix}pc_type");
    let pc_type = o.take(&key).unwrap_or_else(|| if root { "none".into() } else { "bjacobi".into() });
    match pc_type.as_str() {
        "none" => Ok(PcSpec::None),
        "bjacobi" | "ilu" => Ok(PcSpec::Ilu0),
        "hypre" | "gamg" | "amg" | "ml" => Ok(PcSpec::Amg),
        "fieldsplit" => parse_split(o, prefix, n_fields).map(PcSpec::FieldSplit),
        _ => Err(ConfigError::BadValue { option: format!("-{key}"), value: pc_type }),
    }
}

fn parse_split(o: &mut Options, prefix: &str, n_fields: usize) -> Result<SplitSpec, ConfigError> {
    let mut groups = Vec::new();
    loop {
        let key = format!("{prefix}pc_fieldsplit_{}_fields", groups.len());
        let Some(v) = o.take(&key) else { break };
        let g: Vec<usize> = v
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| ConfigError::BadValue { option: format!("-{key}"), value: v.clone() })?;
        groups.push(g);
    }
    if groups.is_empty() {
        groups = (0..n_fields).map(|f| vec![f]).collect();
    }
    let mut seen = vec![0usize; n_fields];
    for &f in groups.iter().flatten() {
        if f >= n_fields {
            return Err(ConfigError::NotAPartition { groups, n: n_fields });
        }
        seen[f] += 1;
    }
    if seen.iter().any(|&c| c != 1) || groups.iter().any(Vec::is_empty) {
        return Err(ConfigError::NotAPartition { groups, n: n_fields });
    }

    let key = format!("{prefix}pc_fieldsplit_type");
    let split_type = match o.take(&key).as_deref() {
        Some("additive") => SplitType::Additive,
        Some("schur") => SplitType::SchurFull,
        Some(v) => return Err(ConfigError::BadValue { option: format!("-{key}"), value: v.into() }),
        None => return Err(ConfigError::Required(format!("-{key}"))),
    };
    let fact = format!("{prefix}pc_fieldsplit_schur_fact_type");
    let pre = format!("{prefix}pc_fieldsplit_schur_precondition");
    if split_type == SplitType::SchurFull {
        if groups.len() != 2 {
            return Err(ConfigError::SchurArity(groups.len()));
        }
        if let Some(v) = o.take(&fact).filter(|v| v != "full") {
            return Err(ConfigError::BadValue { option: format!("-{fact}"), value: v });
        }
        if let Some(v) = o.take(&pre).filter(|v| v != "selfp") {
            return Err(ConfigError::BadValue { option: format!("-{pre}"), value: v });
        }
    }
    let children = groups
        .iter()
        .enumerate()
        .map(|(i, g)| parse_pc(o, &format!("{prefix}fieldsplit_{i}_"), g.len(), false))
        .collect::<Result<_, _>>()?;
    Ok(SplitSpec { groups, split_type, children })
}
