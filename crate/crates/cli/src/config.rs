use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use pilotwave::conditional::CorrelationMode;
use pilotwave::wavefield::{UnitSystem, Units};
use toml::{Table, Value};

use crate::schema;

const SI_HBAR: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Evolve,
    Trajectories,
    Cwf,
    Observable,
    WeakValue,
    StrongMeasure,
    Correlate,
    Work,
    Dwell,
    Current,
    Unravel,
    Diagnose,
}

impl Kind {
    pub const ALL: [Kind; 12] = [
        Kind::Evolve,
        Kind::Trajectories,
        Kind::Cwf,
        Kind::Observable,
        Kind::WeakValue,
        Kind::StrongMeasure,
        Kind::Correlate,
        Kind::Work,
        Kind::Dwell,
        Kind::Current,
        Kind::Unravel,
        Kind::Diagnose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Evolve => "evolve",
            Kind::Trajectories => "trajectories",
            Kind::Cwf => "cwf",
            Kind::Observable => "observable",
            Kind::WeakValue => "weakvalue",
            Kind::StrongMeasure => "strongmeasure",
            Kind::Correlate => "correlate",
            Kind::Work => "work",
            Kind::Dwell => "dwell",
            Kind::Current => "current",
            Kind::Unravel => "unravel",
            Kind::Diagnose => "diagnose",
        }
    }

    fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    fn uses_wavefunction(self) -> bool {
        !matches!(self, Kind::StrongMeasure | Kind::Unravel)
    }

    fn needs_time(self) -> bool {
        matches!(self, Kind::Evolve | Kind::Trajectories | Kind::Cwf | Kind::Correlate | Kind::Work | Kind::Dwell | Kind::Current)
    }

    fn accepts_time(self) -> bool {
        self.needs_time() || matches!(self, Kind::Observable | Kind::Diagnose)
    }

    fn needs_ensemble(self) -> bool {
        matches!(self, Kind::Trajectories | Kind::Correlate | Kind::Work | Kind::Dwell | Kind::Current)
    }

    fn accepts_ensemble(self) -> bool {
        self.needs_ensemble() || self == Kind::Observable
    }

    /// Required grid dimension, if fixed.
    fn dimension(self) -> Option<usize> {
        match self {
            Kind::Cwf | Kind::Diagnose => Some(2),
            Kind::WeakValue | Kind::Current => Some(1),
            _ => None,
        }
    }

    /// Kind-specific sections.
    fn sections(self) -> &'static [&'static str] {
        match self {
            Kind::Cwf => &["cwf"],
            Kind::Observable => &["observable"],
            Kind::WeakValue => &["weak", "pointer"],
            Kind::StrongMeasure => &["levels", "pointer"],
            Kind::Correlate => &["correlate"],
            Kind::Work => &["work"],
            Kind::Dwell => &["dwell"],
            Kind::Current => &["current"],
            Kind::Unravel => &["collision", "unravel"],
            Kind::Diagnose => &["diagnose"],
            _ => &[],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operators addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorName {
    X,
    Y,
    P,
    Py,
    H,
    Kinetic,
}

impl OperatorName {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "x" => OperatorName::X,
            "y" => OperatorName::Y,
            "p" => OperatorName::P,
            "py" => OperatorName::Py,
            "H" => OperatorName::H,
            "kinetic" => OperatorName::Kinetic,
            _ => return None,
        })
    }

    fn axis(self) -> usize {
        match self {
            OperatorName::Y | OperatorName::Py => 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub axes: Vec<AxisConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Free,
    Harmonic { omega: f64, center: f64 },
    Barrier { height: f64, left: f64, right: f64 },
    Linear { slope: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    pub x: Shape,
    pub y: Shape,
    pub coupling: f64,
    /// `(amplitude, frequency)`.
    pub drive: Option<(f64, f64)>,
    /// `(width, strength)`.
    pub absorber: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub center: [f64; 2],
    pub width: [f64; 2],
    pub momentum: [f64; 2],
    pub chirp: [f64; 2],
    pub cross: f64,
    pub cross_phase: f64,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Packets(Vec<Packet>),
    Snapshot(PathBuf),
    /// The n-th eigenstate of the 1D Hamiltonian at t = 0.
    Eigenstate(usize),
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub size: usize,
    pub substeps: usize,
    pub crossing_pairs: usize,
    pub histogram_bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerSettings {
    pub center: f64,
    pub width: f64,
    pub strength: f64,
    pub window: f64,
    pub mass: Option<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CollisionModel {
    PartialSwap { theta: f64, drift: f64 },
    Custom { ancilla: Vec<Complex64>, unitary: Vec<Vec<Complex64>>, basis: Option<Vec<Vec<Complex64>>>, hamiltonian: Option<Vec<Vec<Complex64>>> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Evolve,
    Trajectories,
    Cwf {
        starts: Vec<[f64; 2]>,
        mode: CorrelationMode,
    },
    Observable {
        operator: OperatorName,
        step: usize,
    },
    WeakValue {
        operator: OperatorName,
        pointer: PointerSettings,
        bin_center: f64,
        bin_width: f64,
        runs: usize,
        comparison_factor: f64,
        max_bin_width: f64,
    },
    StrongMeasure {
        state: Vec<Complex64>,
        operator: Vec<Vec<Complex64>>,
        pointer: PointerSettings,
        runs: usize,
        repeat: usize,
    },
    Correlate {
        b: OperatorName,
        f: OperatorName,
        t1_step: usize,
        t2_step: usize,
    },
    Work {
        from_step: usize,
        to_step: usize,
    },
    Dwell {
        region: Vec<(f64, f64)>,
    },
    Current {
        length: f64,
        permittivity: f64,
        charge: f64,
        surfaces: Vec<f64>,
    },
    Unravel {
        model: CollisionModel,
        interval: f64,
        recycle: bool,
        records: usize,
        horizon: f64,
        state: Vec<Complex64>,
        oracle: bool,
        oracle_cap: usize,
    },
    Diagnose {
        ys: Vec<f64>,
        energy_scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tolerances {
    pub ewf_correlation: Option<f64>,
    pub ewf_dispersion: Option<f64>,
    pub ewf_support: Option<f64>,
    pub pointer_separation: Option<f64>,
    pub pointer_overlap: Option<f64>,
    pub weakness: Option<f64>,
}

/// Fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: Kind,
    pub seed: u64,
    pub output: PathBuf,
    pub units: Units,
    pub grid: Option<GridConfig>,
    pub masses: Vec<f64>,
    pub potential: PotentialConfig,
    pub initial: InitialState,
    pub time: Option<TimeConfig>,
    pub ensemble: Option<EnsembleConfig>,
    pub task: Task,
    pub tolerances: Tolerances,
    /// Non-fatal remarks, such as sections the kind ignores.
    pub warnings: Vec<String>,
}

impl ScenarioConfig {
    pub fn dim(&self) -> usize {
        self.grid.as_ref().map_or(0, |g| g.axes.len())
    }

    pub fn hbar(&self) -> f64 {
        self.units.hbar
    }
}

/// Every problem found in a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Issues {
    errors: Vec<String>,
    warnings: Vec<String>,
    kind: &'static str,
}

impl Issues {
    fn push(&mut self, msg: String) {
        self.errors.push(msg);
    }
}

/// A section being read; absent sections read as empty.
#[derive(Clone)]
struct Sec<'a> {
    /// Path shown in messages.
    label: String,
    /// Path in the schema.
    schema: String,
    table: Option<&'a Table>,
}

fn describe(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a float",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a datetime",
        Value::Array(_) => "an array",
        Value::Table(_) => "a table",
    }
}

impl<'a> Sec<'a> {
    fn root(table: &'a Table) -> Self {
        Sec { label: String::new(), schema: String::new(), table: Some(table) }
    }

    fn join(base: &str, key: &str) -> String {
        if base.is_empty() {
            key.to_string()
        } else {
            format!("{base}.{key}")
        }
    }

    fn name(&self, key: &str) -> String {
        Self::join(&self.label, key)
    }

    fn present(&self) -> bool {
        self.table.is_some()
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn child(&self, key: &str, is: &mut Issues) -> Sec<'a> {
        let table = match self.get(key) {
            Some(Value::Table(t)) => Some(t),
            Some(v) => {
                is.push(format!("{}: expected a table, found {}", self.name(key), describe(v)));
                None
            }
            None => None,
        };
        Sec { label: self.name(key), schema: Self::join(&self.schema, key), table }
    }

    fn check_unknown(&self, is: &mut Issues) {
        let Some(t) = self.table else { return };
        let allowed = schema::allowed(&self.schema);
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                let msg = match schema::nearest(k, &allowed) {
                    Some(n) => format!("{}: unknown key; did you mean '{}'?", self.name(k), Self::join(&self.label, n)),
                    None => format!("{}: unknown key", self.name(k)),
                };
                is.push(msg);
            }
        }
    }

    fn opt<T>(&self, is: &mut Issues, key: &str, expect: &str, conv: impl Fn(&Value) -> Option<T>) -> Option<T> {
        let v = self.get(key)?;
        let out = conv(v);
        if out.is_none() {
            is.push(format!("{}: expected {expect}, found {}", self.name(key), describe(v)));
        }
        out
    }

    fn req<T>(&self, is: &mut Issues, key: &str, expect: &str, conv: impl Fn(&Value) -> Option<T>) -> Option<T> {
        if self.get(key).is_none() {
            is.push(format!("{}: required for kind '{}'", self.name(key), is.kind));
            return None;
        }
        self.opt(is, key, expect, conv)
    }
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) if f.is_finite() => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn uint(v: &Value) -> Option<usize> {
    v.as_integer().and_then(|i| usize::try_from(i).ok())
}

fn text(v: &Value) -> Option<String> {
    v.as_str().map(str::to_string)
}

fn flag(v: &Value) -> Option<bool> {
    v.as_bool()
}

fn nums(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(num).collect()
}

fn cnum(v: &Value) -> Option<Complex64> {
    if let Some(re) = num(v) {
        return Some(Complex64::new(re, 0.0));
    }
    match nums(v)?.as_slice() {
        [re, im] => Some(Complex64::new(*re, *im)),
        _ => None,
    }
}

fn cvec(v: &Value) -> Option<Vec<Complex64>> {
    let out: Vec<Complex64> = v.as_array()?.iter().map(cnum).collect::<Option<_>>()?;
    (!out.is_empty()).then_some(out)
}

fn cmat(v: &Value) -> Option<Vec<Vec<Complex64>>> {
    let rows: Vec<Vec<Complex64>> = v.as_array()?.iter().map(cvec).collect::<Option<_>>()?;
    let n = rows.len();
    (n > 0 && rows.iter().all(|r| r.len() == n)).then_some(rows)
}

fn axis(v: &Value) -> Option<AxisConfig> {
    match v.as_array()?.as_slice() {
        [a, b, n] => Some(AxisConfig { min: num(a)?, max: num(b)?, points: uint(n)? }),
        _ => None,
    }
}

fn point2(v: &Value) -> Option<[f64; 2]> {
    match nums(v)?.as_slice() {
        [a, b] => Some([*a, *b]),
        _ => None,
    }
}

fn points2(v: &Value) -> Option<Vec<[f64; 2]>> {
    let out: Vec<[f64; 2]> = v.as_array()?.iter().map(point2).collect::<Option<_>>()?;
    (!out.is_empty()).then_some(out)
}

/// Region intervals: one `[lo, hi]` or a list of them.
fn intervals(v: &Value) -> Option<Vec<(f64, f64)>> {
    if let Some([a, b]) = point2(v) {
        return Some(vec![(a, b)]);
    }
    Some(points2(v)?.into_iter().map(|[a, b]| (a, b)).collect())
}

/// A per-axis value: a scalar in 1D or an array with one entry per axis.
fn per_axis(dim: usize) -> impl Fn(&Value) -> Option<[f64; 2]> {
    move |v| {
        if let Some(s) = num(v) {
            return (dim <= 1).then_some([s, 0.0]);
        }
        let xs = nums(v)?;
        match (dim, xs.as_slice()) {
            (1, [a]) => Some([*a, 0.0]),
            (2, [a, b]) => Some([*a, *b]),
            _ => None,
        }
    }
}

fn positive(is: &mut Issues, name: String, v: Option<f64>) {
    if let Some(v) = v {
        if !(v > 0.0) {
            is.push(format!("{name}: must be positive, got {v}"));
        }
    }
}

fn non_negative(is: &mut Issues, name: String, v: Option<f64>) {
    if let Some(v) = v {
        if v < 0.0 {
            is.push(format!("{name}: must be non-negative, got {v}"));
        }
    }
}

fn at_least(is: &mut Issues, name: String, v: Option<usize>, min: usize) {
    if let Some(v) = v {
        if v < min {
            is.push(format!("{name}: must be at least {min}, got {v}"));
        }
    }
}

fn operator_name(is: &mut Issues, sec: &Sec, key: &str, required: bool, default: OperatorName, dim: usize) -> Option<OperatorName> {
    let raw = if required {
        sec.req(is, key, "a string", text)?
    } else {
        match sec.opt(is, key, "a string", text) {
            Some(s) => s,
            None => return Some(default),
        }
    };
    match OperatorName::parse(&raw) {
        Some(op) if op.axis() < dim.max(1) => Some(op),
        Some(_) => {
            is.push(format!("{}: operator '{raw}' needs a 2D grid", sec.name(key)));
            None
        }
        None => {
            let names = ["x", "y", "p", "py", "H", "kinetic"];
            let hint = schema::nearest(&raw, &names).map(|n| format!("; did you mean '{n}'?")).unwrap_or_default();
            is.push(format!("{}: unknown operator '{raw}' (expected one of x, y, p, py, H, kinetic){hint}", sec.name(key)));
            None
        }
    }
}

fn read_units(root: &Sec, is: &mut Issues) -> Units {
    let units = root.child("units", is);
    units.check_unknown(is);
    let natural = units.child("natural", is);
    let si = units.child("si", is);
    natural.check_unknown(is);
    si.check_unknown(is);
    match (natural.present(), si.present()) {
        (true, true) => {
            is.push("units: both [units.natural] and [units.si] are given; choose one unit system".to_string());
            Units::default()
        }
        (false, true) => {
            let hbar = si.opt(is, "hbar", "a number", num).unwrap_or(SI_HBAR);
            positive(is, si.name("hbar"), Some(hbar));
            Units { system: UnitSystem::Si, hbar }
        }
        _ => Units::default(),
    }
}

fn read_grid(root: &Sec, is: &mut Issues, kind: Kind) -> Option<GridConfig> {
    let sec = root.child("grid", is);
    sec.check_unknown(is);
    let x = sec.req(is, "x", "[min, max, points]", axis);
    let y = sec.opt(is, "y", "[min, max, points]", axis);
    let mut axes = Vec::new();
    for (name, a) in [("x", x), ("y", y)] {
        if let Some(a) = a {
            if !(a.max > a.min) {
                is.push(format!("{}: max must exceed min", sec.name(name)));
            }
            at_least(is, sec.name(name), Some(a.points), pilotwave::wavefield::MIN_POINTS);
            axes.push(a);
        }
    }
    let x = x?;
    if y.is_none() && sec.get("y").is_some() {
        return None;
    }
    let grid = GridConfig { axes: if y.is_some() { axes } else { vec![x] } };
    if let Some(d) = kind.dimension() {
        if grid.axes.len() != d {
            is.push(format!("grid: kind '{kind}' needs a {d}D grid, got {}D", grid.axes.len()));
        }
    }
    Some(grid)
}

fn read_shape(sec: &Sec, is: &mut Issues) -> Shape {
    sec.check_unknown(is);
    let shape = sec.opt(is, "shape", "a string", text).unwrap_or_else(|| "free".into());
    match shape.as_str() {
        "free" => Shape::Free,
        "harmonic" => {
            let omega = sec.req(is, "omega", "a number", num);
            positive(is, sec.name("omega"), omega);
            Shape::Harmonic { omega: omega.unwrap_or(0.0), center: sec.opt(is, "center", "a number", num).unwrap_or(0.0) }
        }
        "barrier" => {
            let height = sec.req(is, "height", "a number", num).unwrap_or(0.0);
            let left = sec.req(is, "left", "a number", num).unwrap_or(0.0);
            let right = sec.req(is, "right", "a number", num).unwrap_or(0.0);
            if right < left {
                is.push(format!("{}: right edge lies left of the left edge", sec.label));
            }
            Shape::Barrier { height, left, right }
        }
        "linear" => Shape::Linear { slope: sec.req(is, "slope", "a number", num).unwrap_or(0.0) },
        other => {
            let names = ["free", "harmonic", "barrier", "linear"];
            let hint = schema::nearest(other, &names).map(|n| format!("; did you mean '{n}'?")).unwrap_or_default();
            is.push(format!("{}: unknown shape '{other}'{hint}", sec.name("shape")));
            Shape::Free
        }
    }
}

fn read_potential(root: &Sec, is: &mut Issues, dim: usize) -> PotentialConfig {
    let sec = root.child("potential", is);
    sec.check_unknown(is);
    let x = read_shape(&sec.child("x", is), is);
    let ysec = sec.child("y", is);
    let y = read_shape(&ysec, is);
    let coupling = sec.opt(is, "coupling", "a number", num).unwrap_or(0.0);
    if dim < 2 && (ysec.present() || coupling != 0.0) {
        is.push("potential: y-potential and coupling need a 2D grid".to_string());
    }
    let drive_sec = sec.child("drive", is);
    drive_sec.check_unknown(is);
    let drive = if drive_sec.present() {
        let a = drive_sec.req(is, "amplitude", "a number", num);
        let w = drive_sec.req(is, "frequency", "a number", num);
        a.zip(w)
    } else {
        None
    };
    let abs_sec = sec.child("absorber", is);
    abs_sec.check_unknown(is);
    let absorber = if abs_sec.present() {
        let w = abs_sec.req(is, "width", "a number", num);
        let s = abs_sec.req(is, "strength", "a number", num);
        positive(is, abs_sec.name("width"), w);
        non_negative(is, abs_sec.name("strength"), s);
        w.zip(s)
    } else {
        None
    };
    PotentialConfig { x, y, coupling, drive, absorber }
}

fn read_packet(sec: &Sec, is: &mut Issues, dim: usize) -> Option<Packet> {
    sec.check_unknown(is);
    let expect = if dim == 2 { "[x, y]" } else { "a number" };
    let center = sec.req(is, "center", expect, per_axis(dim));
    let width = sec.req(is, "width", expect, per_axis(dim));
    let momentum = sec.opt(is, "momentum", expect, per_axis(dim)).unwrap_or([0.0; 2]);
    let chirp = sec.opt(is, "chirp", expect, per_axis(dim)).unwrap_or([0.0; 2]);
    let cross = sec.opt(is, "cross", "a number", num).unwrap_or(0.0);
    let cross_phase = sec.opt(is, "cross_phase", "a number", num).unwrap_or(0.0);
    let amplitude = sec.opt(is, "amplitude", "a number or [re, im]", cnum).unwrap_or(Complex64::new(1.0, 0.0));
    if dim < 2 && (cross != 0.0 || cross_phase != 0.0) {
        is.push(format!("{}: cross terms need a 2D grid", sec.label));
    }
    if let Some(w) = width {
        for &s in &w[..dim.max(1)] {
            positive(is, sec.name("width"), Some(s));
        }
    }
    Some(Packet { center: center?, width: width?, momentum, chirp, cross, cross_phase, amplitude })
}

fn read_initial(root: &Sec, is: &mut Issues, kind: Kind, dim: usize) -> InitialState {
    let snapshot = root.opt(is, "snapshot", "a string", text);
    let eigen = root.opt(is, "eigenstate", "a non-negative integer", uint);
    let raw = root.get("initial");
    if !kind.uses_wavefunction() {
        if raw.is_some() || snapshot.is_some() || eigen.is_some() {
            is.warnings.push(format!("initial state is ignored by kind '{kind}'"));
        }
        return InitialState::Absent;
    }
    if let Some(n) = eigen {
        if raw.is_some() || snapshot.is_some() {
            is.push("initial: give only one of [[initial]] packets, snapshot and eigenstate".to_string());
            return InitialState::Absent;
        }
        if dim != 1 {
            is.push("eigenstate: only available on 1D grids".to_string());
            return InitialState::Absent;
        }
        return InitialState::Eigenstate(n);
    }
    match (raw, snapshot) {
        (Some(_), Some(_)) => {
            is.push("initial: give only one of [[initial]] packets, snapshot and eigenstate".to_string());
            InitialState::Absent
        }
        (None, Some(path)) => InitialState::Snapshot(PathBuf::from(path)),
        (None, None) => {
            is.push(format!("initial: required for kind '{kind}' (or set snapshot or eigenstate)"));
            InitialState::Absent
        }
        (Some(v), None) => {
            let tables: Vec<&Table> = match v {
                Value::Table(t) => vec![t],
                Value::Array(a) if !a.is_empty() && a.iter().all(Value::is_table) => a.iter().filter_map(Value::as_table).collect(),
                other => {
                    is.push(format!("initial: expected a table or an array of tables, found {}", describe(other)));
                    return InitialState::Absent;
                }
            };
            let many = tables.len() > 1;
            let packets: Vec<Option<Packet>> = tables
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let label = if many { format!("initial[{i}]") } else { "initial".to_string() };
                    read_packet(&Sec { label, schema: "initial".into(), table: Some(t) }, is, dim)
                })
                .collect();
            match packets.into_iter().collect::<Option<Vec<_>>>() {
                Some(p) => InitialState::Packets(p),
                None => InitialState::Absent,
            }
        }
    }
}

fn read_time(root: &Sec, is: &mut Issues, kind: Kind) -> Option<TimeConfig> {
    let sec = root.child("time", is);
    sec.check_unknown(is);
    if !kind.accepts_time() {
        if sec.present() {
            is.warnings.push(format!("section [time] is ignored by kind '{kind}'"));
        }
        return None;
    }
    if !kind.needs_time() && !sec.present() {
        return None;
    }
    let dt = sec.req(is, "dt", "a number", num);
    let steps = sec.req(is, "steps", "a non-negative integer", uint);
    let record_every = sec.opt(is, "record_every", "a non-negative integer", uint).unwrap_or(1);
    positive(is, sec.name("dt"), dt);
    at_least(is, sec.name("record_every"), Some(record_every), 1);
    Some(TimeConfig { dt: dt?, steps: steps?, record_every: record_every.max(1) })
}

fn read_ensemble(root: &Sec, is: &mut Issues, kind: Kind) -> Option<EnsembleConfig> {
    let sec = root.child("ensemble", is);
    sec.check_unknown(is);
    if !kind.accepts_ensemble() {
        if sec.present() {
            is.warnings.push(format!("section [ensemble] is ignored by kind '{kind}'"));
        }
        return None;
    }
    if !kind.needs_ensemble() && !sec.present() {
        return None;
    }
    let size = sec.req(is, "size", "a positive integer", uint);
    at_least(is, sec.name("size"), size, 1);
    let substeps = sec.opt(is, "substeps", "a positive integer", uint).unwrap_or(4);
    at_least(is, sec.name("substeps"), Some(substeps), 1);
    let crossing_pairs = sec.opt(is, "crossing_pairs", "a non-negative integer", uint).unwrap_or(1000);
    let histogram_bins = sec.opt(is, "histogram_bins", "a positive integer", uint).unwrap_or(60);
    at_least(is, sec.name("histogram_bins"), Some(histogram_bins), 1);
    Some(EnsembleConfig { size: size?, substeps, crossing_pairs, histogram_bins })
}

fn read_pointer(root: &Sec, is: &mut Issues) -> Option<PointerSettings> {
    let sec = root.child("pointer", is);
    sec.check_unknown(is);
    let width = sec.req(is, "width", "a number", num);
    let strength = sec.req(is, "strength", "a number", num);
    let window = sec.opt(is, "window", "a number", num).unwrap_or(1.0);
    let mass = sec.opt(is, "mass", "a number", num);
    let steps = sec.opt(is, "steps", "a positive integer", uint).unwrap_or(200);
    positive(is, sec.name("width"), width);
    positive(is, sec.name("window"), Some(window));
    positive(is, sec.name("mass"), mass);
    at_least(is, sec.name("steps"), Some(steps), 1);
    Some(PointerSettings { center: sec.opt(is, "center", "a number", num).unwrap_or(0.0), width: width?, strength: strength?, window, mass, steps })
}

fn square(is: &mut Issues, name: String, m: &Option<Vec<Vec<Complex64>>>, d: usize) {
    if let Some(m) = m {
        if m.len() != d {
            is.push(format!("{name}: expected a {d}×{d} matrix, got {}×{}", m.len(), m.len()));
        }
    }
}

fn read_collision(root: &Sec, is: &mut Issues) -> Option<(CollisionModel, f64, bool)> {
    let sec = root.child("collision", is);
    sec.check_unknown(is);
    let model = sec.opt(is, "model", "a string", text).unwrap_or_else(|| "partial_swap".into());
    let interval = sec.req(is, "interval", "a number", num);
    positive(is, sec.name("interval"), interval);
    let recycle = sec.opt(is, "recycle", "a boolean", flag).unwrap_or(false);
    let model = match model.as_str() {
        "partial_swap" => {
            let theta = sec.req(is, "theta", "a number", num);
            let drift = sec.opt(is, "drift", "a number", num).unwrap_or(0.0);
            CollisionModel::PartialSwap { theta: theta?, drift }
        }
        "custom" => {
            let ancilla = sec.req(is, "ancilla", "an array of complex numbers", cvec);
            let unitary = sec.req(is, "unitary", "a square complex matrix", cmat);
            let basis = sec.opt(is, "basis", "a square complex matrix", cmat);
            let hamiltonian = sec.opt(is, "hamiltonian", "a square complex matrix", cmat);
            let ancilla = ancilla?;
            let unitary = unitary?;
            let d_a = ancilla.len();
            if unitary.len() % d_a != 0 {
                is.push(format!("{}: dimension {} is not a multiple of the ancilla dimension {d_a}", sec.name("unitary"), unitary.len()));
                return None;
            }
            let d_s = unitary.len() / d_a;
            square(is, sec.name("basis"), &basis, d_a);
            square(is, sec.name("hamiltonian"), &hamiltonian, d_s);
            CollisionModel::Custom { ancilla, unitary, basis, hamiltonian }
        }
        other => {
            is.push(format!("{}: unknown model '{other}' (expected partial_swap or custom)", sec.name("model")));
            return None;
        }
    };
    Some((model, interval?, recycle))
}

fn read_task(root: &Sec, is: &mut Issues, kind: Kind, dim: usize, time: Option<&TimeConfig>) -> Option<Task> {
    let steps = time.map(|t| t.steps);
    let step_in_range = |is: &mut Issues, name: String, s: usize| {
        if s > steps.unwrap_or(0) {
            is.push(format!("{name}: step {s} exceeds the {} time steps", steps.unwrap_or(0)));
        }
    };
    let task = match kind {
        Kind::Evolve => Task::Evolve,
        Kind::Trajectories => Task::Trajectories,
        Kind::Cwf => {
            let sec = root.child("cwf", is);
            sec.check_unknown(is);
            let starts = sec.req(is, "starts", "an array of [x, y] points", points2);
            let mode = match sec.opt(is, "mode", "a string", text).as_deref() {
                None | Some("convective") => CorrelationMode::Convective,
                Some("channels") => CorrelationMode::Channels,
                Some(other) => {
                    is.push(format!("{}: unknown mode '{other}' (expected convective or channels)", sec.name("mode")));
                    CorrelationMode::Convective
                }
            };
            Task::Cwf { starts: starts?, mode }
        }
        Kind::Observable => {
            let sec = root.child("observable", is);
            sec.check_unknown(is);
            let operator = operator_name(is, &sec, "operator", true, OperatorName::X, dim);
            let step = sec.opt(is, "step", "a non-negative integer", uint).unwrap_or(0);
            step_in_range(is, sec.name("step"), step);
            Task::Observable { operator: operator?, step }
        }
        Kind::WeakValue => {
            let sec = root.child("weak", is);
            sec.check_unknown(is);
            let operator = operator_name(is, &sec, "operator", false, OperatorName::P, dim);
            let bin_center = sec.req(is, "bin_center", "a number", num);
            let bin_width = sec.req(is, "bin_width", "a number", num);
            let runs = sec.req(is, "runs", "a positive integer", uint);
            let comparison_factor = sec.opt(is, "comparison_factor", "a number", num).unwrap_or(2.0);
            let max_bin_width = sec.opt(is, "max_bin_width", "a number", num).unwrap_or(0.5);
            positive(is, sec.name("bin_width"), bin_width);
            at_least(is, sec.name("runs"), runs, 1);
            if comparison_factor <= 1.0 {
                is.push(format!("{}: must exceed 1, got {comparison_factor}", sec.name("comparison_factor")));
            }
            let pointer = read_pointer(root, is);
            Task::WeakValue {
                operator: operator?,
                pointer: pointer?,
                bin_center: bin_center?,
                bin_width: bin_width?,
                runs: runs?,
                comparison_factor,
                max_bin_width,
            }
        }
        Kind::StrongMeasure => {
            let sec = root.child("levels", is);
            sec.check_unknown(is);
            let state = sec.req(is, "state", "an array of complex numbers", cvec);
            let operator = sec.req(is, "operator", "a square complex matrix", cmat);
            let runs = sec.opt(is, "runs", "a positive integer", uint).unwrap_or(1);
            let repeat = sec.opt(is, "repeat", "a non-negative integer", uint).unwrap_or(100);
            at_least(is, sec.name("runs"), Some(runs), 1);
            if let (Some(s), Some(m)) = (&state, &operator) {
                if s.len() != m.len() {
                    is.push(format!("{}: {} levels but the operator is {}×{}", sec.name("state"), s.len(), m.len(), m.len()));
                }
            }
            let pointer = read_pointer(root, is);
            Task::StrongMeasure { state: state?, operator: operator?, pointer: pointer?, runs, repeat: repeat.min(runs) }
        }
        Kind::Correlate => {
            let sec = root.child("correlate", is);
            sec.check_unknown(is);
            let b = operator_name(is, &sec, "b", true, OperatorName::X, dim);
            let f = operator_name(is, &sec, "f", true, OperatorName::X, dim);
            let t1_step = sec.opt(is, "t1_step", "a non-negative integer", uint).unwrap_or(0);
            let t2_step = sec.req(is, "t2_step", "a non-negative integer", uint);
            if let Some(t2) = t2_step {
                step_in_range(is, sec.name("t2_step"), t2);
                if t1_step > t2 {
                    is.push(format!("{}: t1_step {t1_step} lies after t2_step {t2}", sec.label));
                }
            }
            Task::Correlate { b: b?, f: f?, t1_step, t2_step: t2_step? }
        }
        Kind::Work => {
            let sec = root.child("work", is);
            sec.check_unknown(is);
            let from_step = sec.opt(is, "from_step", "a non-negative integer", uint).unwrap_or(0);
            let to_step = sec.opt(is, "to_step", "a non-negative integer", uint).unwrap_or(steps.unwrap_or(0));
            step_in_range(is, sec.name("to_step"), to_step);
            if from_step > to_step {
                is.push(format!("{}: from_step {from_step} lies after to_step {to_step}", sec.label));
            }
            Task::Work { from_step, to_step }
        }
        Kind::Dwell => {
            let sec = root.child("dwell", is);
            sec.check_unknown(is);
            let region = sec.req(is, "region", "[lo, hi] or an array of them", intervals);
            if let Some(r) = &region {
                if r.len() != dim {
                    is.push(format!("{}: needs one interval per grid axis ({dim})", sec.name("region")));
                }
            }
            Task::Dwell { region: region? }
        }
        Kind::Current => {
            let sec = root.child("current", is);
            sec.check_unknown(is);
            let length = sec.req(is, "length", "a number", num);
            let permittivity = sec.opt(is, "permittivity", "a number", num).unwrap_or(1.0);
            let charge = sec.opt(is, "charge", "a number", num).unwrap_or(1.0);
            let surfaces = sec.req(is, "surfaces", "an array of numbers", nums);
            positive(is, sec.name("length"), length);
            positive(is, sec.name("permittivity"), Some(permittivity));
            if let (Some(l), Some(s)) = (length, &surfaces) {
                if s.is_empty() || s.iter().any(|x| !(0.0..=l).contains(x)) {
                    is.push(format!("{}: need at least one surface, each within [0, {l}]", sec.name("surfaces")));
                }
            }
            Task::Current { length: length?, permittivity, charge, surfaces: surfaces? }
        }
        Kind::Unravel => {
            let collision = read_collision(root, is);
            let sec = root.child("unravel", is);
            sec.check_unknown(is);
            let records = sec.req(is, "records", "a positive integer", uint);
            let horizon = sec.req(is, "horizon", "a number", num);
            let state = sec.req(is, "state", "an array of complex numbers", cvec);
            let oracle = sec.opt(is, "oracle", "a boolean", flag).unwrap_or(false);
            let oracle_cap = sec.opt(is, "oracle_cap", "a positive integer", uint).unwrap_or(pilotwave::openquantum::DEFAULT_ORACLE_CAP);
            at_least(is, sec.name("records"), records, 1);
            positive(is, sec.name("horizon"), horizon);
            let (model, interval, recycle) = collision?;
            Task::Unravel { model, interval, recycle, records: records?, horizon: horizon?, state: state?, oracle, oracle_cap }
        }
        Kind::Diagnose => {
            let sec = root.child("diagnose", is);
            sec.check_unknown(is);
            let ys = sec.req(is, "ys", "an array of numbers", nums);
            let energy_scale = sec.req(is, "energy_scale", "a number", num);
            positive(is, sec.name("energy_scale"), energy_scale);
            Task::Diagnose { ys: ys?, energy_scale: energy_scale? }
        }
    };
    Some(task)
}

fn read_tolerances(root: &Sec, is: &mut Issues) -> Tolerances {
    let sec = root.child("tolerances", is);
    sec.check_unknown(is);
    let mut get = |key: &str| {
        let v = sec.opt(is, key, "a number", num);
        positive(is, sec.name(key), v);
        v
    };
    Tolerances {
        ewf_correlation: get("ewf_correlation"),
        ewf_dispersion: get("ewf_dispersion"),
        ewf_support: get("ewf_support"),
        pointer_separation: get("pointer_separation"),
        pointer_overlap: get("pointer_overlap"),
        weakness: get("weakness"),
    }
}

/// Parses and validates a scenario file, collecting every problem.
pub fn parse_config(source: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let table: Table = source.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![format!("syntax: {}", e.message())]))?;
    let root = Sec::root(&table);
    let mut is = Issues { errors: Vec::new(), warnings: Vec::new(), kind: "?" };
    root.check_unknown(&mut is);

    let kind = match root.get("kind") {
        None => {
            is.push("kind: required".to_string());
            None
        }
        Some(v) => match v.as_str() {
            Some(s) => match Kind::parse(s) {
                Some(k) => Some(k),
                None => {
                    let names: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
                    let hint = schema::nearest(s, &names).map(|n| format!("; did you mean '{n}'?")).unwrap_or_default();
                    is.push(format!("kind: unknown scenario kind '{s}'{hint}"));
                    None
                }
            },
            None => {
                is.push(format!("kind: expected a string, found {}", describe(v)));
                None
            }
        },
    };
    let seed = root.opt(&mut is, "seed", "a non-negative integer", |v| v.as_integer().and_then(|i| u64::try_from(i).ok())).unwrap_or(0);
    let output = root.opt(&mut is, "output", "a string", text).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
    let units = read_units(&root, &mut is);
    let tolerances = read_tolerances(&root, &mut is);
    let Some(kind) = kind else {
        return Err(ConfigErrors(is.errors));
    };
    is.kind = kind.name();

    let grid = if kind.uses_wavefunction() {
        read_grid(&root, &mut is, kind)
    } else {
        if root.get("grid").is_some() {
            is.warnings.push(format!("section [grid] is ignored by kind '{kind}'"));
        }
        None
    };
    let dim = grid.as_ref().map_or(1, |g| g.axes.len());
    let sys = root.child("system", &mut is);
    sys.check_unknown(&mut is);
    let masses = sys.opt(&mut is, "masses", "an array of numbers", nums).unwrap_or_else(|| vec![1.0; dim]);
    if masses.len() != dim {
        is.push(format!("system.masses: expected {dim} entries, got {}", masses.len()));
    }
    for &m in &masses {
        positive(&mut is, "system.masses".into(), Some(m));
    }
    let potential = read_potential(&root, &mut is, dim);
    let initial = read_initial(&root, &mut is, kind, dim);
    let time = read_time(&root, &mut is, kind);
    let ensemble = read_ensemble(&root, &mut is, kind);
    let task = read_task(&root, &mut is, kind, dim, time.as_ref());

    for other in Kind::ALL.iter().filter(|k| **k != kind).flat_map(|k| k.sections()) {
        if !kind.sections().contains(other) && root.get(other).is_some() {
            let w = format!("section [{other}] is ignored by kind '{kind}'");
            if !is.warnings.contains(&w) {
                is.warnings.push(w);
            }
        }
    }

    if !is.errors.is_empty() {
        return Err(ConfigErrors(is.errors));
    }
    Ok(ScenarioConfig {
        kind,
        seed,
        output,
        units,
        grid,
        masses,
        potential,
        initial,
        time,
        ensemble,
        task: task.expect("task is present when no error was recorded"),
        tolerances,
        warnings: is.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EVOLVE: &str = r#"
kind = "evolve"
[grid]
x = [-20.0, 20.0, 401]
[[initial]]
center = -2.0
width = 1.0
momentum = 1.5
[time]
dt = 0.01
steps = 10
"#;

    #[test]
    fn minimal_evolve_config_is_valid() {
        let cfg = parse_config(EVOLVE).unwrap();
        assert_eq!(cfg.kind, Kind::Evolve);
        assert_eq!(cfg.dim(), 1);
        assert_eq!(cfg.masses, vec![1.0]);
        assert_eq!(cfg.units, Units::default());
        assert_eq!(cfg.time.unwrap().steps, 10);
        assert!(matches!(&cfg.initial, InitialState::Packets(p) if p.len() == 1 && p[0].momentum[0] == 1.5));
    }

    #[test]
    fn every_error_is_reported() {
        let text = EVOLVE.replace("dt = 0.01", "dt = -1.0\nsteps_ = 3").replace("width = 1.0", "widht = 1.0");
        let errs = parse_config(&text).unwrap_err().0;
        assert!(errs.iter().any(|e| e.contains("time.dt") && e.contains("positive")), "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("time.steps_") && e.contains("'time.steps'")), "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("initial.widht") && e.contains("'initial.width'")), "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("initial.width: required")), "{errs:?}");
    }

    #[test]
    fn unknown_kind_suggests_the_nearest() {
        let errs = parse_config("kind = \"evolv\"").unwrap_err().0;
        assert_eq!(errs.len(), 1);
        assert!(errs[0].contains("'evolve'"));
    }

    #[test]
    fn si_units_default_to_the_physical_constant() {
        let cfg = parse_config(&format!("{EVOLVE}\n[units.si]\n")).unwrap();
        assert_eq!(cfg.units.system, UnitSystem::Si);
        assert_eq!(cfg.units.hbar, SI_HBAR);
    }

    #[test]
    fn unused_sections_only_warn() {
        let cfg = parse_config(&format!("{EVOLVE}\n[ensemble]\nsize = 3\n[weak]\nruns = 3\n")).unwrap();
        assert_eq!(cfg.warnings.len(), 2, "{:?}", cfg.warnings);
    }

    #[test]
    fn complex_values_accept_pairs_and_reals() {
        let text = r#"
kind = "strongmeasure"
[levels]
state = [[0.8, 0.0], 0.6]
operator = [[1, 0], [0, [-1, 0]]]
[pointer]
width = 1.0
strength = 7.0
"#;
        let cfg = parse_config(text).unwrap();
        let Task::StrongMeasure { state, operator, .. } = cfg.task else { panic!() };
        assert_eq!(state[1], Complex64::new(0.6, 0.0));
        assert_eq!(operator[1][1], Complex64::new(-1.0, 0.0));
    }
}
