use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use orbitmeter::bowen::{
    closed_form_extremes, empirical_extremes, eta_atoms, generate_itinerary, hypothesis_report, moduli,
    SaddleParams, LABEL_A, LABEL_B, LABEL_TRANSIT,
};
use orbitmeter::cesaro::{mean_oscillation, MeanKind, MeanSpec};
use orbitmeter::eta::{
    eta_packing_lower_bound, nu_g, probability_verdict, total_mass_regions, AverageTrack, CheckpointPacking,
    ConstructionBound, CylinderTrack, EtaEstimate, PackingSource, PremeasureTable, Verdict, DEFAULT_GAMMA,
    DEFAULT_THRESHOLD,
};
use orbitmeter::frequency::{
    digit_block_frequency, geometric_horizons, running_extremes, trace_visit_frequency, EventuallyPeriodic,
    FrequencyTrace,
};
use orbitmeter::markov::{decomposition_check, physicality_check, MixtureSpec};
use orbitmeter::orbit::{
    build_wild_prefix, build_wild_prefix_with_targets, read_rle, verify_checkpoint_bounds, write_rle, GrowthMode,
    LengthSchedule, WildPrefix,
};
use orbitmeter::symbolic::{
    admissible_words, aperiodicity_index, encode_base_b, gauss_value, CylinderSpec, PeriodicWord, Symbol, Tmc,
    Word,
};

use crate::{Command, Format};

/// Longest symbol stream a single run will materialize.
const MAX_PREFIX: u64 = 200_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("malformed JSON in {}: {msg}", path.display())]
    MalformedJson { path: PathBuf, msg: String },
    #[error("invalid config for {command}: {msg}")]
    Config { command: &'static str, msg: String },
    #[error("cannot access {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] orbitmeter::Error),
    #[error("verdict: {0}")]
    Verdict(String),
    #[error("verification failed: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verdict(_) | CliError::Mismatch(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingFile(path.to_path_buf())
        } else {
            CliError::Io { path: path.to_path_buf(), source }
        }
    }
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::MalformedJson { path: path.to_path_buf(), msg: e.to_string() })
}

/// One output file, held in memory until the run is committed.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn format(&self) -> Option<Format> {
        match Path::new(&self.name).extension().and_then(|e| e.to_str()) {
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            _ => None,
        }
    }
}

pub struct Outcome {
    /// Config with every default filled in.
    pub config: Value,
    pub artifacts: Vec<Artifact>,
    pub inputs: Vec<PathBuf>,
    pub summary: String,
    pub passed: bool,
}

#[derive(Default)]
struct Collector {
    artifacts: Vec<Artifact>,
    inputs: Vec<PathBuf>,
}

impl Collector {
    fn json(&mut self, name: &str, value: &impl Serialize) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("json serialization");
        bytes.push(b'\n');
        self.artifacts.push(Artifact { name: name.into(), bytes });
    }

    fn traces(&mut self, name: &str, traces: &[FrequencyTrace]) -> Result<(), CliError> {
        let mut bytes = Vec::new();
        for (i, t) in traces.iter().enumerate() {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            let body = if i == 0 {
                &buf[..]
            } else {
                let cut = buf.iter().position(|&b| b == b'\n').map_or(buf.len(), |p| p + 1);
                &buf[cut..]
            };
            bytes.extend_from_slice(body);
        }
        self.artifacts.push(Artifact { name: name.into(), bytes });
        Ok(())
    }

    fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.artifacts.push(Artifact { name: name.into(), bytes });
    }

    fn finish(self, config: Value, summary: String, passed: bool, emit: &[Format]) -> Outcome {
        let artifacts = self
            .artifacts
            .into_iter()
            .filter(|a| a.format().is_none_or(|f| emit.contains(&f)))
            .collect();
        Outcome { config, artifacts, inputs: self.inputs, summary, passed }
    }
}

fn parse<T: DeserializeOwned + Serialize>(command: Command, raw: Value) -> Result<(T, Value), CliError> {
    let cfg: T =
        serde_json::from_value(raw).map_err(|e| CliError::Config { command: command.name(), msg: e.to_string() })?;
    let resolved = serde_json::to_value(&cfg).expect("config serialization");
    Ok((cfg, resolved))
}

fn invalid(command: Command, msg: impl Into<String>) -> CliError {
    CliError::Config { command: command.name(), msg: msg.into() }
}

pub fn run(command: Command, raw: Value, seed: u64, emit: &[Format]) -> Result<Outcome, CliError> {
    match command {
        Command::WildOrbit => wild_orbit(raw, emit),
        Command::Trace => trace(raw, emit),
        Command::Eta => eta(raw, emit),
        Command::Bowen => bowen(raw, emit),
        Command::Decompose => decompose(raw, seed, emit),
        Command::Physical => physical(raw, seed, emit),
        Command::Cesaro => cesaro(raw, emit),
        Command::Nonnormal => nonnormal(raw, emit),
    }
}

fn word(command: Command, s: &str) -> Result<Word, CliError> {
    s.parse().map_err(|e: orbitmeter::Error| invalid(command, e.to_string()))
}

fn cylinders(command: Command, words: &[String]) -> Result<Vec<CylinderSpec>, CliError> {
    words.iter().map(|w| word(command, w).map(CylinderSpec::from_word)).collect()
}

/// Parameters of a wild prefix built on the fly.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WildParams {
    pub tmc: Tmc,
    pub growth: GrowthMode,
    /// First checkpoint; defaults to the aperiodicity index.
    pub base: Option<u64>,
    /// The prefix runs through the end of segment `through`.
    pub through: u64,
}

impl Default for WildParams {
    fn default() -> Self {
        WildParams { tmc: Tmc::full_shift(2), growth: GrowthMode::Constant(2), base: None, through: 10 }
    }
}

impl WildParams {
    fn build(&self) -> Result<(WildPrefix, LengthSchedule), CliError> {
        let base = match self.base {
            Some(b) => b,
            None => aperiodicity_index(&self.tmc, self.tmc.wielandt_bound())?
                .ok_or_else(|| orbitmeter::Error::Structural("incidence matrix is not aperiodic".into()))?
                as u64,
        };
        let schedule = LengthSchedule::new(base, self.growth)?;
        let horizon = schedule.horizon_through(self.through)?;
        if horizon > MAX_PREFIX {
            return Err(orbitmeter::Error::Resource(format!(
                "prefix of length {horizon} exceeds the limit {MAX_PREFIX}; lower `through`"
            ))
            .into());
        }
        Ok((build_wild_prefix(&self.tmc, &schedule, horizon)?, schedule))
    }
}

/// Where a symbolic orbit comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OrbitSource {
    /// A stream written by `wild-orbit`.
    Rle { path: PathBuf },
    Wild(WildParams),
    /// `preperiod` followed by repetitions of `period`.
    EventuallyPeriodic { preperiod: String, period: String, length: u64 },
}

impl Default for OrbitSource {
    fn default() -> Self {
        OrbitSource::Wild(WildParams::default())
    }
}

struct LoadedOrbit {
    symbols: Vec<Symbol>,
    id: String,
    wild: Option<WildPrefix>,
    periodic: Option<EventuallyPeriodic>,
}

impl OrbitSource {
    fn load(&self, command: Command, tmc: &Tmc, inputs: &mut Vec<PathBuf>) -> Result<LoadedOrbit, CliError> {
        match self {
            OrbitSource::Rle { path } => {
                let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
                let symbols = read_rle(BufReader::new(f))?;
                inputs.push(path.clone());
                let id = path.file_stem().map_or("orbit".into(), |s| s.to_string_lossy().into_owned());
                Ok(LoadedOrbit { symbols, id, wild: None, periodic: None })
            }
            OrbitSource::Wild(p) => {
                let (z, _) = p.build()?;
                Ok(LoadedOrbit { symbols: z.symbols().to_vec(), id: "wild".into(), wild: Some(z), periodic: None })
            }
            OrbitSource::EventuallyPeriodic { preperiod, period, length } => {
                if *length > MAX_PREFIX {
                    return Err(invalid(command, format!("length {length} exceeds the limit {MAX_PREFIX}")));
                }
                let pw = PeriodicWord::new(word(command, period)?, tmc)?;
                let ep = EventuallyPeriodic::new(word(command, preperiod)?, pw);
                let symbols = ep.materialize(*length as usize);
                Ok(LoadedOrbit { symbols, id: "eventually-periodic".into(), wild: None, periodic: Some(ep) })
            }
        }
    }
}

// ---------------------------------------------------------------- wild-orbit

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WildOrbitConfig {
    tmc: Tmc,
    growth: GrowthMode,
    base: Option<u64>,
    through: u64,
    /// Periodic orbits `p_1 ..= p_targets` whose checkpoint bounds are checked.
    targets: u64,
    generations: Vec<usize>,
}

impl Default for WildOrbitConfig {
    fn default() -> Self {
        let w = WildParams::default();
        WildOrbitConfig {
            tmc: w.tmc,
            growth: w.growth,
            base: w.base,
            through: w.through,
            targets: 3,
            generations: vec![1, 2, 3],
        }
    }
}

fn wild_orbit(raw: Value, emit: &[Format]) -> Result<Outcome, CliError> {
    let (cfg, resolved): (WildOrbitConfig, _) = parse(Command::WildOrbit, raw)?;
    if cfg.generations.is_empty() {
        return Err(invalid(Command::WildOrbit, "need at least one cylinder generation"));
    }
    let params = WildParams { tmc: cfg.tmc.clone(), growth: cfg.growth, base: cfg.base, through: cfg.through };
    let (z, schedule) = params.build()?;
    if cfg.targets as usize > z.periodic.len() {
        return Err(invalid(
            Command::WildOrbit,
            format!(
                "a prefix through segment {} reaches only {} periodic orbits; raise `through` or lower `targets`",
                cfg.through,
                z.periodic.len()
            ),
        ));
    }
    let mut reports = Vec::new();
    for h in 1..=cfg.targets {
        for &m in &cfg.generations {
            reports.push(verify_checkpoint_bounds(&z, h, m)?);
        }
    }
    let certified = reports.iter().all(|r| r.certified && !r.vacuous);
    let mut out = Collector::default();
    let mut rle = Vec::new();
    write_rle(z.symbols(), &mut rle)?;
    out.raw("prefix.rle", rle);
    out.raw("checkpoints.json", format!("{}\n", z.sidecar_json()).into_bytes());
    out.json(
        "bounds.json",
        &json!({
            "base": schedule.base,
            "horizon": z.symbols().len(),
            "periodic": z.periodic.iter().map(|p| p.word().to_string()).collect::<Vec<_>>(),
            "reports": reports,
            "certified": certified,
        }),
    );
    let summary = format!(
        "wild prefix of length {} with {} checkpoints; {} of {} bounds certified",
        z.symbols().len(),
        z.checkpoints.len(),
        reports.iter().filter(|r| r.certified && !r.vacuous).count(),
        reports.len()
    );
    Ok(out.finish(resolved, summary, certified, emit))
}

// --------------------------------------------------------------------- trace

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TraceConfig {
    orbit: OrbitSource,
    tmc: Tmc,
    /// Each entry is a union of cylinder bases traced as one target.
    targets: Vec<Vec<String>>,
    first: u64,
    last: Option<u64>,
    gamma: f64,
    burn_in: Option<u64>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            orbit: OrbitSource::default(),
            tmc: Tmc::full_shift(2),
            targets: vec![vec!["0".into()]],
            first: 1,
            last: None,
            gamma: DEFAULT_GAMMA,
            burn_in: None,
        }
    }
}

fn trace(raw: Value, emit: &[Format]) -> Result<Outcome, CliError> {
    let (cfg, resolved): (TraceConfig, _) = parse(Command::Trace, raw)?;
    if !(cfg.gamma > 1.0) {
        return Err(invalid(Command::Trace, format!("gamma must exceed 1, got {}", cfg.gamma)));
    }
    if cfg.targets.is_empty() {
        return Err(invalid(Command::Trace, "need at least one target"));
    }
    let mut out = Collector::default();
    let orbit = cfg.orbit.load(Command::Trace, &cfg.tmc, &mut out.inputs)?;
    let targets: Vec<Vec<CylinderSpec>> =
        cfg.targets.iter().map(|t| cylinders(Command::Trace, t)).collect::<Result<_, _>>()?;
    let depth = targets.iter().flatten().map(|c| c.generation()).max().unwrap_or(0) as u64;
    let available = (orbit.symbols.len() as u64 + 1).saturating_sub(depth.max(1));
    let last = cfg.last.unwrap_or(available);
    if last > available || cfg.first == 0 || cfg.first > last {
        return Err(invalid(
            Command::Trace,
            format!("horizons {}..={last} do not fit an orbit with {available} usable positions", cfg.first),
        ));
    }
    let horizons = geometric_horizons(cfg.first, last, cfg.gamma);
    let burn_in = cfg.burn_in.unwrap_or(last / 10);
    let mut traces = Vec::new();
    let mut summaries = Vec::new();
    for t in &targets {
        let tr = trace_visit_frequency(&orbit.symbols, t, &horizons, &orbit.id)?;
        let osc = running_extremes(&tr, burn_in)?;
        summaries.push(json!({
            "target": tr.target,
            "points": tr.len(),
            "final": tr.last().map(|p| p.value),
            "oscillation": osc,
        }));
        traces.push(tr);
    }
    out.traces("trace.csv", &traces)?;
    out.json(
        "trace.json",
        &json!({ "orbit_id": orbit.id, "orbit_len": orbit.symbols.len(), "horizon": last, "targets": summaries }),
    );
    let summary = format!("{} traces up to n = {last}", traces.len());
    Ok(out.finish(resolved, summary, true, emit))
}

// ----------------------------------------------------------------------- eta

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PackingKind {
    /// The certified per-orbit bound of the construction.
    #[default]
    Construction,
    /// Checkpoint frequencies measured on the wild prefix itself.
    Checkpoints,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PackingConfig {
    host: String,
    periods: Vec<usize>,
    source: PackingKind,
    threshold: f64,
    expect_exceeds: Option<bool>,
}

impl Default for PackingConfig {
    fn default() -> Self {
        PackingConfig {
            host: "0".into(),
            periods: (2..=12).collect(),
            source: PackingKind::Construction,
            threshold: DEFAULT_THRESHOLD,
            expect_exceeds: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EtaConfig {
    orbit: OrbitSource,
    tmc: Tmc,
    targets: Vec<String>,
    generations: Vec<usize>,
    burn_in: Option<u64>,
    horizon: Option<u64>,
    tol: f64,
    expect: Option<Verdict>,
    packing: Option<PackingConfig>,
}

impl Default for EtaConfig {
    fn default() -> Self {
        EtaConfig {
            orbit: OrbitSource::default(),
            tmc: Tmc::full_shift(2),
            targets: vec!["0".into()],
            generations: vec![1, 2, 3, 4],
            burn_in: None,
            horizon: None,
            tol: 0.05,
            expect: None,
            packing: None,
        }
    }
}

fn eta(raw: Value, emit: &[Format]) -> Result<Outcome, CliError> {
    let (cfg, resolved): (EtaConfig, _) = parse(Command::Eta, raw)?;
    let mut gens = cfg.generations.clone();
    gens.sort_unstable();
    gens.dedup();
    if gens.is_empty() || gens[0] == 0 {
        return Err(invalid(Command::Eta, "generations must be positive and nonempty"));
    }
    let mut out = Collector::default();
    let orbit = cfg.orbit.load(Command::Eta, &cfg.tmc, &mut out.inputs)?;
    let targets = cylinders(Command::Eta, &cfg.targets)?;
    let g_max = *gens.last().unwrap();
    let available = (orbit.symbols.len() as u64 + 1).saturating_sub(g_max as u64);
    let horizon = cfg.horizon.unwrap_or(available);
    if horizon > available || horizon < 2 {
        return Err(invalid(Command::Eta, format!("horizon {horizon} does not fit {available} usable positions")));
    }
    let burn_in = cfg.burn_in.unwrap_or(horizon / 10);
    if burn_in >= horizon {
        return Err(invalid(Command::Eta, format!("burn-in {burn_in} must be below the horizon {horizon}")));
    }

    let label = targets.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("+");
    let mut target_trace = FrequencyTrace::new(label, &orbit.id);
    let mut mass_trace = FrequencyTrace::new("whole space", &orbit.id);
    let mut rows: Vec<(EtaEstimate, EtaEstimate)> = Vec::new();
    for &g in &gens {
        if targets.iter().any(|t| t.generation() > g) {
            continue;
        }
        let table = match &orbit.periodic {
            Some(ep) => PremeasureTable::exact(ep, &cfg.tmc, g),
            None => PremeasureTable::from_orbit(&orbit.symbols, &cfg.tmc, g, burn_in, horizon)?,
        };
        let est = nu_g(&table, &targets)?;
        let total = nu_g(&table, &[CylinderSpec::whole_space()])?;
        target_trace.push(g as u64, est.value, est.exact)?;
        mass_trace.push(g as u64, total.value, total.exact)?;
        rows.push((est, total));
    }
    if rows.is_empty() {
        return Err(invalid(Command::Eta, "every generation is coarser than some target"));
    }

    let cells: Vec<CylinderSpec> = admissible_words(&cfg.tmc, 1).into_iter().map(CylinderSpec::from_word).collect();
    let tracks: Vec<CylinderTrack> =
        cells.iter().map(|c| CylinderTrack { orbit: &orbit.symbols, targets: vec![c.clone()] }).collect();
    let refs: Vec<&dyn AverageTrack> = tracks.iter().map(|t| t as &dyn AverageTrack).collect();
    let verdict = probability_verdict(&refs, burn_in, horizon, cfg.tol);
    let mut passed = cfg.expect.is_none_or(|e| e == verdict);

    let packing = match &cfg.packing {
        None => None,
        Some(p) => {
            let host = CylinderSpec::from_word(word(Command::Eta, &p.host)?);
            let mut source: Box<dyn PackingSource + '_> = match (p.source, &orbit.wild) {
                (PackingKind::Construction, _) => Box::new(ConstructionBound),
                (PackingKind::Checkpoints, Some(z)) => Box::new(CheckpointPacking { prefix: z, generation: 1 }),
                (PackingKind::Checkpoints, None) => {
                    return Err(invalid(Command::Eta, "checkpoint packing needs a `wild` orbit source"))
                }
            };
            let rep = eta_packing_lower_bound(&host, &p.periods, &cfg.tmc, source.as_mut(), p.threshold)?;
            passed &= p.expect_exceeds.is_none_or(|e| e == rep.exceeds_threshold);
            Some(rep)
        }
    };

    out.traces("mass.csv", &[target_trace, mass_trace])?;
    out.json(
        "eta.json",
        &json!({
            "orbit_id": orbit.id,
            "burn_in": burn_in,
            "horizon": horizon,
            "estimates": rows.iter().map(|(e, _)| e).collect::<Vec<_>>(),
            "total_mass": rows.iter().map(|(_, t)| t).collect::<Vec<_>>(),
            "verdict": verdict,
            "expected_verdict": cfg.expect,
            "packing": packing,
            "passed": passed,
        }),
    );
    let (last, total) = rows.last().unwrap();
    let summary = format!(
        "eta {} = {} ({}) at generation {}; total mass {}; verdict {verdict}",
        last.target, last.value, last.direction, last.generation, total.value
    );
    Ok(out.finish(resolved, summary, passed, emit))
}

// --------------------------------------------------------------------- bowen

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BowenConfig {
    alpha_plus: f64,
    alpha_minus: f64,
    beta_plus: f64,
    beta_minus: f64,
    phi_a: f64,
    phi_b: f64,
    phi_transit: f64,
    a0: f64,
    transit: u64,
    cycles: usize,
    /// Defaults to the start of the third-to-last cycle.
    burn_in: Option<u64>,
    tol: f64,
    gamma: f64,
}

impl Default for BowenConfig {
    fn default() -> Self {
        BowenConfig {
            alpha_plus: 1.0,
            alpha_minus: 2.0,
            beta_plus: 1.0,
            beta_minus: 2.0,
            phi_a: 1.0,
            phi_b: 0.0,
            phi_transit: 0.5,
            a0: 10.0,
            transit: 1,
            cycles: 25,
            burn_in: None,
            tol: 1e-3,
            gamma: DEFAULT_GAMMA,
        }
    }
}

fn bowen(raw: Value, emit: &[Format]) -> Result<Outcome, CliError> {
    let (cfg, resolved): (BowenConfig, _) = parse(Command::Bowen, raw)?;
    let params = SaddleParams {
        alpha_plus: cfg.alpha_plus,
        alpha_minus: cfg.alpha_minus,
        beta_plus: cfg.beta_plus,
        beta_minus: cfg.beta_minus,
    };
    let m = moduli(&params)?;
    let it = generate_itinerary(&m, cfg.a0, cfg.transit, cfg.cycles)?;
    let burn_in = cfg.burn_in.unwrap_or_else(|| it.cycle_start(cfg.cycles.saturating_sub(3)));
    let empirical = empirical_extremes(&it, cfg.phi_a, cfg.phi_b, cfg.phi_transit, burn_in)?;
    let (closed, atoms) = if m.attracting() {
        (Some(closed_form_extremes(&m, cfg.phi_a, cfg.phi_b)?), Some(eta_atoms(&m)?))
    } else {
        (None, None)
    };
    let cells = [vec![LABEL_A], vec![LABEL_B], vec![LABEL_TRANSIT]];
    let empirical_total = total_mass_regions(&it.runs, &cells, burn_in)?;
    let hypothesis = hypothesis_report(&it, burn_in, cfg.tol)?;
    let passed = match (closed, atoms) {
        (Some(c), Some(a)) => {
            (empirical.sup_tail - c.limsup).abs() <= cfg.tol
                && (empirical.inf_tail - c.liminf).abs() <= cfg.tol
                && (empirical_total.value - a.total).abs() <= cfg.tol
        }
        _ => true,
    };

    let (phi_a, phi_b, phi_t) = (cfg.phi_a, cfg.phi_b, cfg.phi_transit);
    let phi = move |l: u32| match l {
        LABEL_A => phi_a,
        LABEL_B => phi_b,
        _ => phi_t,
    };
    let extra = geometric_horizons(1, it.total_len(), cfg.gamma);
    let tr = it.runs.trace(&phi, &extra, "phi", "bowen")?;

    let mut out = Collector::default();
    out.traces("trace.csv", &[tr])?;
    out.json(
        "bowen.json",
        &json!({
            "alpha_plus": cfg.alpha_plus,
            "alpha_minus": cfg.alpha_minus,
            "beta_plus": cfg.beta_plus,
            "beta_minus": cfg.beta_minus,
            "lambda": m.lambda,
            "sigma": m.sigma,
            "rho": m.rho,
            "attracting": m.attracting(),
            "closed_form": closed,
            "empirical": empirical,
            "masses": atoms.map(|a| [a.mass_a, a.mass_b]),
            "total": atoms.map(|a| a.total),
            "empirical_total": empirical_total.value,
            "hypothesis": hypothesis,
            "steps": it.total_len(),
            "passed": passed,
        }),
    );
    if let Some(c) = closed {
        out.json("ref.json", &json!({ "limsup": c.limsup, "liminf": c.liminf }));
    }
    let summary = match (closed, atoms) {
        (Some(c), Some(a)) => format!(
            "limsup {} (empirical {}), liminf {} (empirical {}), total mass {}",
            c.limsup, empirical.sup_tail, c.liminf, empirical.inf_tail, a.total
        ),
        _ => format!("cycle not attracting (rho = {}); averages converge", m.rho),
    };
    Ok(out.finish(resolved, summary, passed, emit))
}

// ----------------------------------------------------------- decompose / physical

fn default_mixture() -> MixtureSpec {
    MixtureSpec::from_blocks(&[
        (vec![vec![0.9, 0.1], vec![0.2, 0.8]], 0.3),
        (vec![vec![0.5, 0.5], vec![0.7, 0.3]], 0.7),
    ])
    .expect("default mixture")
}

fn state_cylinders(mix: &MixtureSpec, g: usize) -> Vec<CylinderSpec> {
    admissible_words(&Tmc::full_shift(mix.transition().len()), g).into_iter().map(CylinderSpec::from_word).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DecomposeConfig {
    mixture: MixtureSpec,
    samples: usize,
    horizon: u64,
    generation: usize,
    tol_sigma: f64,
    min_pass_fraction: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            mixture: default_mixture(),
            samples: 200,
            horizon: 100_000,
            generation: 2,
            tol_sigma: 4.0,
            min_pass_fraction: 0.95,
        }
    }
}

fn decompose(raw: Value, seed: u64, emit: &[Format]) -> Result<Outcome, CliError> {
    let (cfg, resolved): (DecomposeConfig, _) = parse(Command::Decompose, raw)?;
    if cfg.generation == 0 {
        return Err(invalid(Command::Decompose, "generation must be positive"));
    }
    let cyl = state_cylinders(&cfg.mixture, cfg.generation);
    let rep = decomposition_check(&cfg.mixture, cfg.samples, cfg.horizon, &cyl, cfg.tol_sigma, seed)?;
    let averages_ok = rep.cylinders.iter().all(|c| c.ok);
    let passed = rep.sample_pass_fraction >= cfg.min_pass_fraction && averages_ok;

    let mut csv = String::from("stream,component,max_z,ok\n");
    for s in &rep.samples {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            s.stream,
            s.component,
            orbitmeter::frequency::format_sig17(s.max_z),
            s.ok
        ));
    }
    let mut out = Collector::default();
    out.raw("samples.csv", csv.into_bytes());
    out.json("decompose.json", &json!({ "report": rep, "passed": passed }));
    let summary = format!(
        "{:.1}% of {} samples within {} sigma; mixture averages ok = {averages_ok}",
        100.0 * rep.sample_pass_fraction,
        cfg.samples,
        cfg.tol_sigma
    );
    Ok(out.finish(resolved, summary, passed, emit))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PhysicalConfig {
    mixture: MixtureSpec,
    samples: usize,
    horizon: u64,
    generation: usize,
    tol: f64,
    expect_physical: Option<bool>,
    expect_generalized: Option<bool>,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        PhysicalConfig {
            mixture: default_mixture(),
            samples: 20,
            horizon: 200_000,
            generation: 1,
            tol: 0.05,
            expect_physical: None,
            expect_generalized: None,
        }
    }
}

fn physical(raw: Value, seed: u64, emit: &[Format]) -> Result<Outcome, CliError> {
    let (cfg, resolved): (PhysicalConfig, _) = parse(Command::Physical, raw)?;
    if cfg.generation == 0 {
        return Err(invalid(Command::Physical, "generation must be positive"));
    }
    let cyl = state_cylinders(&cfg.mixture, cfg.generation);
    let rep = physicality_check(&cfg.mixture, cfg.samples, cfg.horizon, &cyl, cfg.tol, seed)?;
    let passed = cfg.expect_physical.is_none_or(|e| e == rep.physical)
        && cfg.expect_generalized.is_none_or(|e| e == rep.generalized_physical);
    let mut out = Collector::default();
    out.json("physical.json", &json!({ "report": rep, "passed": passed }));
    let summary = format!(
        "physical = {}, generalized physical = {}; {:.0}% of samples convergent",
        rep.physical,
        rep.generalized_physical,
        100.0 * rep.fraction_convergent
    );
    Ok(out.finish(resolved, summary, passed, emit))
}

// -------------------------------------------------------------------- cesaro

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum SequenceSource {
    /// Indicator of the first saddle along a sojourn itinerary.
    Bowen { lambda: f64, sigma: f64, a0: f64, transit: u64, cycles: usize },
    /// `center + (-1)^n / sqrt(n + 1)`, whose averages converge.
    Control { center: f64 },
}

impl Default for SequenceSource {
    fn default() -> Self {
        SequenceSource::Bowen { lambda: 2.0, sigma: 2.0, a0: 10.0, transit: 1, cycles: 10 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CesaroConfig {
    source: SequenceSource,
    horizon: usize,
    burn_in: Option<usize>,
    orders: Vec<u32>,
    kinds: Vec<MeanKind>,
    gamma: f64,
    /// Every order above 0 must oscillate at least this much.
    min_amplitude: Option<f64>,
}

impl Default for CesaroConfig {
    fn default() -> Self {
        CesaroConfig {
            source: SequenceSource::default(),
            horizon: 1_000_000,
            burn_in: None,
            orders: vec![0, 1, 2, 3],
            kinds: vec![MeanKind::Cesaro, MeanKind::Hoelder],
            gamma: DEFAULT_GAMMA,
            min_amplitude: None,
        }
    }
}

fn cesaro(raw: Value, emit: &[Format]) -> Result<Outcome, CliError> {
    let (cfg, resolved): (CesaroConfig, _) = parse(Command::Cesaro, raw)?;
    if cfg.horizon as u64 > MAX_PREFIX || cfg.horizon < 2 {
        return Err(invalid(Command::Cesaro, format!("horizon must lie in 2..={MAX_PREFIX}")));
    }
    let seq: Vec<f64> = match cfg.source {
        SequenceSource::Bowen { lambda, sigma, a0, transit, cycles } => {
            let m = orbitmeter::bowen::DerivedModuli::from_ratios(lambda, sigma)?;
            let it = generate_itinerary(&m, a0, transit, cycles)?;
            if it.total_len() < cfg.horizon as u64 {
                return Err(invalid(
                    Command::Cesaro,
                    format!("itinerary has {} steps, fewer than the horizon {}", it.total_len(), cfg.horizon),
                ));
            }
            let mut seq = Vec::with_capacity(cfg.horizon);
            for &(label, len) in it.runs.runs() {
                let take = (len as usize).min(cfg.horizon - seq.len());
                seq.extend(std::iter::repeat_n(if label == LABEL_A { 1.0 } else { 0.0 }, take));
                if seq.len() == cfg.horizon {
                    break;
                }
            }
            seq
        }
        SequenceSource::Control { center } => {
            (0..cfg.horizon).map(|n| center + if n % 2 == 0 { 1.0 } else { -1.0 } / ((n + 1) as f64).sqrt()).collect()
        }
    };
    let burn_in = cfg.burn_in.unwrap_or(cfg.horizon / 10);
    let horizons = geometric_horizons(burn_in.max(1) as u64, cfg.horizon as u64, cfg.gamma);
    let mut traces = Vec::new();
    let mut rows = Vec::new();
    let mut passed = true;
    for &kind in &cfg.kinds {
        for &order in &cfg.orders {
            let spec = MeanSpec { kind, order };
            let means = spec.means(&seq[..cfg.horizon]);
            let osc = mean_oscillation(&seq[..cfg.horizon], kind, order, burn_in, cfg.horizon)?;
            if order > 0 {
                passed &= cfg.min_amplitude.is_none_or(|a| osc.amplitude >= a);
            }
            let name = match kind {
                MeanKind::Cesaro => format!("cesaro_{order}"),
                MeanKind::Hoelder => format!("hoelder_{order}"),
            };
            let mut tr = FrequencyTrace::new(&name, "cesaro");
            for &n in &horizons {
                tr.push(n, means[n as usize - 1], None)?;
            }
            traces.push(tr);
            rows.push(json!({ "kind": kind, "order": order, "oscillation": osc }));
        }
    }
    let mut out = Collector::default();
    out.traces("means.csv", &traces)?;
    out.json("cesaro.json", &json!({ "burn_in": burn_in, "horizon": cfg.horizon, "means": rows, "passed": passed }));
    let summary = rows
        .iter()
        .map(|r| format!("{}_{}: {:.4}", r["kind"].as_str().unwrap_or("?"), r["order"], r["oscillation"]["amplitude"]))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(out.finish(resolved, summary, passed, emit))
}

// ----------------------------------------------------------------- nonnormal

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum Coding {
    /// Symbols are digits in base `base`.
    BaseB { base: u32 },
    /// Symbol `s` is the partial quotient `s + 1`.
    ContinuedFraction,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NonnormalConfig {
    tmc: Tmc,
    /// Periodic orbits copied at successive checkpoints, cyclically.
    targets: Vec<String>,
    growth: GrowthMode,
    base: u64,
    through: u64,
    block: String,
    coding: Coding,
    /// Required gap between the largest and smallest checkpoint frequency.
    min_amplitude: Option<f64>,
}

impl Default for NonnormalConfig {
    fn default() -> Self {
        NonnormalConfig {
            tmc: Tmc::full_shift(2),
            targets: vec!["0".into(), "1".into()],
            growth: GrowthMode::Constant(10),
            base: 1,
            through: 5,
            block: "0".into(),
            coding: Coding::BaseB { base: 2 },
            min_amplitude: None,
        }
    }
}

fn nonnormal(raw: Value, emit: &[Format]) -> Result<Outcome, CliError> {
    let (cfg, resolved): (NonnormalConfig, _) = parse(Command::Nonnormal, raw)?;
    let targets: Vec<PeriodicWord> = cfg
        .targets
        .iter()
        .map(|t| Ok(PeriodicWord::new(word(Command::Nonnormal, t)?, &cfg.tmc)?))
        .collect::<Result<_, CliError>>()?;
    let schedule = LengthSchedule::new(cfg.base, cfg.growth)?;
    let horizon = schedule.horizon_through(cfg.through)?;
    if horizon > MAX_PREFIX {
        return Err(invalid(Command::Nonnormal, format!("prefix of length {horizon} exceeds {MAX_PREFIX}")));
    }
    let z = build_wild_prefix_with_targets(&cfg.tmc, &schedule, &targets, horizon)?;
    let seq = z.symbols();
    let block = word(Command::Nonnormal, &cfg.block)?;
    let coded = match cfg.coding {
        Coding::BaseB { base } => encode_base_b(seq, base)?,
        Coding::ContinuedFraction => {
            let quotients: Vec<u64> = seq.iter().map(|&s| s as u64 + 1).collect();
            gauss_value(&quotients)?
        }
    };

    let mut tr = FrequencyTrace::new(format!("block {block}"), "nonnormal");
    let mut reports = Vec::new();
    for n in 1..=cfg.through {
        let ell = schedule.ell(n + 1)?;
        if ell < block.len() as u64 || ell > seq.len() as u64 {
            continue;
        }
        let f = digit_block_frequency(seq, &block, ell)?;
        tr.push(ell, f.value(), Some(f))?;
        reports.push(json!({ "n": n, "ell": ell, "frequency": f, "value": f.value() }));
    }
    let values: Vec<f64> = tr.points().iter().map(|p| p.value).collect();
    let (hi, lo) = values.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(h, l), &v| (h.max(v), l.min(v)));
    let amplitude = if values.is_empty() { 0.0 } else { hi - lo };
    let passed = cfg.min_amplitude.is_none_or(|a| amplitude >= a);

    let mut out = Collector::default();
    let mut rle = Vec::new();
    write_rle(seq, &mut rle)?;
    out.raw("prefix.rle", rle);
    out.traces("blocks.csv", &[tr])?;
    out.json(
        "nonnormal.json",
        &json!({
            "length": seq.len(),
            "coding": cfg.coding,
            "value": coded.value,
            "truncation_error": coded.truncation_error,
            "block": block.to_string(),
            "checkpoints": reports,
            "max_frequency": hi,
            "min_frequency": lo,
            "amplitude": amplitude,
            "passed": passed,
        }),
    );
    let summary = format!(
        "x = {} (+/- {:.1e}); block {block} frequency oscillates between {lo} and {hi}",
        coded.value, coded.truncation_error
    );
    Ok(out.finish(resolved, summary, passed, emit))
}
