/// One documented key of a config section.
pub struct Key {
    pub name: &'static str,
    pub ty: &'static str,
    pub doc: &'static str,
}

/// One config section; `path` is empty for the top level.
pub struct Section {
    pub path: &'static str,
    pub doc: &'static str,
    pub keys: &'static [Key],
}

const fn key(name: &'static str, ty: &'static str, doc: &'static str) -> Key {
    Key { name, ty, doc }
}

const SHAPE_KEYS: &[Key] = &[
    key("shape", "string", "free | harmonic | barrier | linear (default free)"),
    key("omega", "float", "harmonic: angular frequency, U = m ω² (q − center)² / 2"),
    key("center", "float", "harmonic: minimum position (default 0)"),
    key("height", "float", "barrier: height of the rectangular barrier"),
    key("left", "float", "barrier: left edge"),
    key("right", "float", "barrier: right edge"),
    key("slope", "float", "linear: U = slope · q"),
];

const POINTER_KEYS: &[Key] = &[
    key("center", "float", "initial pointer centre (default 0)"),
    key("width", "float", "standard deviation σ_M of the initial pointer density (required)"),
    key("strength", "float", "integrated coupling strength μ (required)"),
    key("window", "float", "coupling window T (default 1)"),
    key("mass", "float", "finite pointer mass; omit for an infinitely massive pointer"),
    key("steps", "integer", "time steps across the window for a finite mass (default 200)"),
];

pub const SECTIONS: &[Section] = &[
    Section {
        path: "",
        doc: "Top level. Exactly one of [units.natural] and [units.si] may appear; natural units are the default.",
        keys: &[
            key("kind", "string", "evolve | trajectories | cwf | observable | weakvalue | strongmeasure | correlate | work | dwell | current | unravel | diagnose (required)"),
            key("seed", "integer", "master seed (default 0; --seed overrides)"),
            key("output", "string", "output directory (default \"out\"; --out overrides)"),
            key("snapshot", "string", "initial state read from a snapshot file instead of [[initial]] packets"),
            key("eigenstate", "integer", "initial state is the n-th eigenstate (0 = ground) of the 1D grid Hamiltonian at t = 0"),
        ],
    },
    Section { path: "units.natural", doc: "ħ = m = 1.", keys: &[] },
    Section {
        path: "units.si",
        doc: "SI quantities; masses, lengths and times in the config are taken in SI.",
        keys: &[key("hbar", "float", "reduced Planck constant (default 1.054571817e-34)")],
    },
    Section {
        path: "grid",
        doc: "Uniform grid with hard walls on the end nodes.",
        keys: &[
            key("x", "[min, max, points]", "first axis (required for wavefunction kinds)"),
            key("y", "[min, max, points]", "second axis; its presence makes the run 2D"),
        ],
    },
    Section {
        path: "system",
        doc: "Particle parameters.",
        keys: &[key("masses", "[float]", "one mass per axis (default 1 each)")],
    },
    Section {
        path: "potential",
        doc: "U = U_x(x) + U_y(y) + coupling · x · y + drive, each part optional.",
        keys: &[
            key("x", "table", "shape of U_x, see [potential.x]"),
            key("y", "table", "shape of U_y, see [potential.y]"),
            key("coupling", "float", "bilinear coupling κ in κ x y (default 0)"),
            key("drive", "table", "time-dependent term, see [potential.drive]"),
            key("absorber", "table", "complex absorbing ramp, see [potential.absorber]"),
        ],
    },
    Section { path: "potential.x", doc: "Potential along the first axis.", keys: SHAPE_KEYS },
    Section { path: "potential.y", doc: "Potential along the second axis.", keys: SHAPE_KEYS },
    Section {
        path: "potential.drive",
        doc: "δU(t, x) = amplitude · x · sin(frequency · t).",
        keys: &[
            key("amplitude", "float", "drive amplitude (required)"),
            key("frequency", "float", "angular frequency (required)"),
        ],
    },
    Section {
        path: "potential.absorber",
        doc: "Quadratic −iW ramp inside `width` of each wall; makes H non-Hermitian.",
        keys: &[
            key("width", "float", "ramp width (required)"),
            key("strength", "float", "ramp height at the wall (required)"),
        ],
    },
    Section {
        path: "initial",
        doc: "Array of Gaussian packets [[initial]] summed into ψ0 and normalized. Per-axis values accept a scalar in 1D. \
              Packet: amplitude · exp(−Σ(q−c)²/(4σ²) − cross (x−cx)(y−cy) + i(Σ k q + Σ chirp (q−c)² + cross_phase x y)).",
        keys: &[
            key("center", "[float]", "packet centre (required)"),
            key("width", "[float]", "density standard deviation σ per axis (required)"),
            key("momentum", "[float]", "wavenumber per axis (default 0)"),
            key("chirp", "[float]", "quadratic phase per axis (default 0)"),
            key("cross", "float", "real correlation coefficient in the exponent (2D, default 0)"),
            key("cross_phase", "float", "bilinear phase coefficient (2D, default 0)"),
            key("amplitude", "complex", "packet weight, a number or [re, im] (default 1)"),
        ],
    },
    Section {
        path: "time",
        doc: "Crank–Nicolson time stepping.",
        keys: &[
            key("dt", "float", "time step (required)"),
            key("steps", "integer", "number of steps (required)"),
            key("record_every", "integer", "write every n-th step to time-series outputs (default 1)"),
        ],
    },
    Section {
        path: "ensemble",
        doc: "Bohmian trajectory ensemble drawn from |ψ0|².",
        keys: &[
            key("size", "integer", "number of trajectories (required)"),
            key("substeps", "integer", "RK4 substeps per wavefunction step (default 4)"),
            key("crossing_pairs", "integer", "trajectory pairs checked for crossings in 1D (default 1000)"),
            key("histogram_bins", "integer", "equal-probability bins of the equivariance histogram (default 60)"),
        ],
    },
    Section {
        path: "cwf",
        doc: "Conditional wavefunctions along trajectories of a 2D run.",
        keys: &[
            key("starts", "[[x, y]]", "initial positions of the conditioning trajectories (required)"),
            key("mode", "string", "convective | channels (default convective)"),
        ],
    },
    Section {
        path: "observable",
        doc: "Local expectation field of one operator.",
        keys: &[
            key("operator", "string", "x | y | p | py | H | kinetic (required)"),
            key("step", "integer", "time step at which the field is evaluated (default 0)"),
        ],
    },
    Section {
        path: "pointer",
        doc: "Von Neumann pointer for weakvalue and strongmeasure runs.",
        keys: POINTER_KEYS,
    },
    Section {
        path: "weak",
        doc: "Weak-value protocol on a 1D state.",
        keys: &[
            key("operator", "string", "x | p | H | kinetic (default p)"),
            key("bin_center", "float", "post-selection bin centre x0 (required)"),
            key("bin_width", "float", "post-selection bin width (required)"),
            key("runs", "integer", "number of runs per strength (required)"),
            key("comparison_factor", "float", "the comparison run uses this multiple of μ (default 2)"),
            key("max_bin_width", "float", "largest admissible bin width (default 0.5)"),
        ],
    },
    Section {
        path: "levels",
        doc: "Discrete system for strongmeasure runs.",
        keys: &[
            key("state", "[complex]", "system state, normalized on read (required)"),
            key("operator", "[[complex]]", "Hermitian measured operator, row major (required)"),
            key("runs", "integer", "number of measurement runs (default 1)"),
            key("repeat", "integer", "runs re-measured to check repeatability (default 100)"),
        ],
    },
    Section {
        path: "correlate",
        doc: "Two-time correlation ⟨𝔅(t2) ℱ(t1)⟩ over trajectories.",
        keys: &[
            key("b", "string", "operator read at t2 (required)"),
            key("f", "string", "operator read at t1 (required)"),
            key("t1_step", "integer", "step of t1 (default 0)"),
            key("t2_step", "integer", "last step of t2; the series runs from t1 (required)"),
        ],
    },
    Section {
        path: "work",
        doc: "Trajectory work from the Hamiltonian local expectation.",
        keys: &[
            key("from_step", "integer", "first step (default 0)"),
            key("to_step", "integer", "last step (default time.steps)"),
        ],
    },
    Section {
        path: "dwell",
        doc: "Expected dwell time in a region.",
        keys: &[key("region", "[[lo, hi]]", "one interval per axis (required)")],
    },
    Section {
        path: "current",
        doc: "Total current between grounded contacts at 0 and length.",
        keys: &[
            key("length", "float", "contact separation L (required)"),
            key("permittivity", "float", "permittivity ε (default 1)"),
            key("charge", "float", "carrier charge e (default 1)"),
            key("surfaces", "[float]", "surface positions for the direct-field estimate (required)"),
        ],
    },
    Section {
        path: "collision",
        doc: "Collision model for unravel runs.",
        keys: &[
            key("model", "string", "partial_swap | custom (default partial_swap)"),
            key("theta", "float", "partial_swap: swap angle (required for partial_swap)"),
            key("interval", "float", "time between collisions (required)"),
            key("drift", "float", "partial_swap: ω in the drift Hamiltonian ω σ_x (default 0)"),
            key("hamiltonian", "[[complex]]", "custom: drift Hamiltonian (default zero)"),
            key("ancilla", "[complex]", "custom: ancilla state (required for custom)"),
            key("unitary", "[[complex]]", "custom: collision unitary on ancilla ⊗ system (required for custom)"),
            key("basis", "[[complex]]", "custom: ancilla readout basis as columns (default identity)"),
            key("recycle", "bool", "also compare against one ancilla that is never reset (default false)"),
        ],
    },
    Section {
        path: "unravel",
        doc: "Unravelled records and their reduced density matrix.",
        keys: &[
            key("records", "integer", "number of records N (required)"),
            key("horizon", "float", "final time (required)"),
            key("state", "[complex]", "initial system state (required)"),
            key("oracle", "bool", "compare against the exact partial-trace oracle (default false; --oracle sets it)"),
            key("oracle_cap", "integer", "largest joint dimension the oracle may build (default 16384)"),
        ],
    },
    Section {
        path: "diagnose",
        doc: "Effective-wavefunction diagnostic of a 2D state at the end of [time] (or at t = 0).",
        keys: &[
            key("ys", "[float]", "conditioning positions (required)"),
            key("energy_scale", "float", "energy scale of the thresholds (required)"),
        ],
    },
    Section {
        path: "tolerances",
        doc: "Overrides of module thresholds.",
        keys: &[
            key("ewf_correlation", "float", "effective-wavefunction correlation threshold (default 1e-3)"),
            key("ewf_dispersion", "float", "effective-wavefunction dispersion threshold (default 1e-3)"),
            key("ewf_support", "float", "slice support fraction (default 1e-6)"),
            key("pointer_separation", "float", "required μ·gap/σ_M (default 5)"),
            key("pointer_overlap", "float", "largest envelope overlap (default 1e-4)"),
            key("weakness", "float", "largest μ·rms(B)/σ_M in the weak protocol (default 0.1)"),
        ],
    },
];

/// Keys admissible at a section path.
pub fn section(path: &str) -> Option<&'static Section> {
    SECTIONS.iter().find(|s| s.path == path)
}

/// Admissible keys of `path`, including its nested section names.
pub fn allowed(path: &str) -> Vec<&'static str> {
    let mut names: Vec<&'static str> = section(path).map(|s| s.keys.iter().map(|k| k.name).collect()).unwrap_or_default();
    for s in SECTIONS.iter().filter(|s| !s.path.is_empty()) {
        let (parent, child) = s.path.rsplit_once('.').unwrap_or(("", s.path));
        if parent == path && !names.contains(&child) {
            names.push(child);
        }
    }
    if path.is_empty() && !names.contains(&"units") {
        names.push("units");
    }
    names
}

/// Nearest admissible key by edit distance, if it is close enough to be a
/// plausible typo.
pub fn nearest<'a>(key: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates.iter().map(|c| (strsim::levenshtein(key, c), *c)).filter(|(d, c)| *d <= 3.max(c.len() / 3)).min().map(|(_, c)| c)
}

/// The documented schema as plain text.
pub fn render() -> String {
    let mut out = String::from("# pilotwave scenario schema\n\nScenario files are TOML. Unknown keys are rejected.\n");
    for s in SECTIONS {
        let title = if s.path.is_empty() { "(top level)".to_string() } else { format!("[{}]", s.path) };
        out.push_str(&format!("\n## {title}\n\n{}\n", s.doc));
        if !s.keys.is_empty() {
            out.push('\n');
        }
        for k in s.keys {
            out.push_str(&format!("- `{}` ({}): {}\n", k.name, k.ty, k.doc));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_sections_are_admissible_keys() {
        assert!(allowed("").contains(&"grid"));
        assert!(allowed("").contains(&"units"));
        assert!(allowed("units").contains(&"si"));
        assert!(allowed("potential").contains(&"absorber"));
        assert!(!allowed("potential").contains(&"units"));
    }

    #[test]
    fn typos_find_their_key() {
        assert_eq!(nearest("szie", &allowed("ensemble")), Some("size"));
        assert_eq!(nearest("bin_centre", &allowed("weak")), Some("bin_center"));
        assert_eq!(nearest("zzzzzzzzzzzz", &allowed("time")), None);
    }
}
