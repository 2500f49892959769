//! Acceptance suite. Runs every criterion in order, prints one `PASS`/`FAIL`
//! line each and exits nonzero if any fails. Arguments not starting with `-`
//! select criteria by substring, e.g. `cargo test --test acceptance -- c08`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use fracdrift_core::harness::{run_preset, Preset, PresetOptions, PresetOutcome};
use fracdrift_core::spectral::{
    fractional_laplacian, riesz_transform, semigroup_step, Field, Grid,
};
use fracdrift_core::tolerances::SPECTRAL_EXACTNESS;

fn out_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name)
}

fn report(id: &str, title: &str, pass: bool, detail: &str) {
    println!(
        "{} {id} {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Runs `preset` once per test binary and caches the outcome.
fn outcome(preset: Preset) -> &'static PresetOutcome {
    static CACHE: OnceLock<std::sync::Mutex<BTreeMap<&'static str, &'static PresetOutcome>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard.entry(preset.name()).or_insert_with(|| {
        let opts = PresetOptions::new(out_dir(preset.name()));
        Box::leak(Box::new(run_preset(preset, &opts).expect("preset runs")))
    })
}

/// Reports every criterion of `preset` whose name starts with one of `prefixes`.
fn criteria(id: &str, title: &str, preset: Preset, prefixes: &[&str]) -> bool {
    let out = outcome(preset);
    let chosen: Vec<_> = out
        .criteria
        .iter()
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .collect();
    assert!(
        !chosen.is_empty(),
        "{preset} has no criteria matching {prefixes:?}"
    );
    let pass = chosen.iter().all(|c| c.pass);
    let detail = chosen
        .iter()
        .map(|c| format!("[{}] {}", c.name, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    report(id, title, pass, &detail);
    pass
}

// Pure-mode oracle. A grid mode with a component at the Nyquist index is shared
// by the wavevectors obtained by flipping that component's sign, so the
// expected result is the average of the analytic answer over those aliases.
fn aliases(k: [i64; 2], n: i64) -> Vec<[f64; 2]> {
    let mut out = vec![[k[0] as f64, k[1] as f64]];
    for a in 0..2 {
        if k[a].abs() == n / 2 {
            let flipped: Vec<_> = out
                .iter()
                .map(|w| {
                    let mut w = *w;
                    w[a] = -w[a];
                    w
                })
                .collect();
            out.extend(flipped);
        }
    }
    out
}

/// Grid samples of `cos` and `sin` of `k·x + phase` for every alias of `k`.
struct ModeBasis {
    xi: Vec<[f64; 2]>,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

impl ModeBasis {
    fn new(grid: Grid, k: [i64; 2], phase: f64) -> Self {
        let kf = grid.fundamental();
        let xi: Vec<[f64; 2]> = aliases(k, grid.points_per_axis() as i64)
            .iter()
            .map(|w| [kf * w[0], kf * w[1]])
            .collect();
        let args: Vec<Vec<f64>> = xi
            .iter()
            .map(|w| {
                (0..grid.len())
                    .map(|i| {
                        let x = grid.point(i);
                        w[0] * x[0] + w[1] * x[1] + phase
                    })
                    .collect()
            })
            .collect();
        let cos = args
            .iter()
            .map(|a| a.iter().map(|t| t.cos()).collect())
            .collect();
        let sin = args
            .iter()
            .map(|a| a.iter().map(|t| t.sin()).collect())
            .collect();
        Self { xi, cos, sin }
    }

    /// Exact image of `cos(k·x + phase)` under a real even symbol `s` (giving
    /// `s cos`) or an odd symbol `-i s` (giving `s sin`).
    fn image(&self, grid: Grid, symbol: impl Fn([f64; 2]) -> f64, odd: bool) -> Field {
        let samples = if odd { &self.sin } else { &self.cos };
        let n = self.xi.len() as f64;
        let mut out = vec![0.0; grid.len()];
        for (w, vals) in self.xi.iter().zip(samples) {
            let s = symbol(*w) / n;
            out.iter_mut().zip(vals).for_each(|(o, v)| *o += s * v);
        }
        Field::from_values(grid, out).unwrap()
    }
}

fn c01_spectral_exactness() -> bool {
    let start = Instant::now();
    let grid = Grid::square(32, 2.0 * PI).unwrap();
    let mut worst = 0.0f64;
    let mut modes = 0;
    // cos(k·x + φ) and cos(-k·x - φ) coincide, so each residue pair {k, -k} is visited once.
    let key = |k: [i64; 2]| [k[0].rem_euclid(32), k[1].rem_euclid(32)];
    for k0 in -16i64..16 {
        for k1 in -16i64..16 {
            if key([k0, k1]) > key([-k0, -k1]) {
                continue;
            }
            for phase in [0.0, 0.5 * PI] {
                let basis = ModeBasis::new(grid, [k0, k1], phase);
                let input = Field::from_values(grid, basis.cos[0].clone()).unwrap();
                if input.max_abs() < 1e-9 {
                    continue;
                }
                let input = input.to_spectral();
                modes += 1;
                let mut check = |got: Field, want: Field| {
                    let err = got.to_physical().sub(&want).unwrap().max_abs();
                    // Images that vanish up to roundoff are measured against the unit input.
                    let scale = want.max_abs();
                    worst = worst.max(if scale > 1e-10 { err / scale } else { err });
                };
                for two_alpha in [0.5, 1.0] {
                    let sym = |xi: [f64; 2]| (xi[0] * xi[0] + xi[1] * xi[1]).powf(0.5 * two_alpha);
                    check(
                        fractional_laplacian(&input, two_alpha).unwrap(),
                        basis.image(grid, sym, false),
                    );
                    let heat = |xi: [f64; 2]| {
                        let n2 = xi[0] * xi[0] + xi[1] * xi[1];
                        (-0.05 * (n2.powf(0.5 * two_alpha) + 0.01 * n2)).exp()
                    };
                    check(
                        semigroup_step(&input, 0.05, two_alpha, 0.01).unwrap(),
                        basis.image(grid, heat, false),
                    );
                }
                for axis in 0..2 {
                    let sym = |xi: [f64; 2]| {
                        let n = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                        if n == 0.0 {
                            0.0
                        } else {
                            xi[axis] / n
                        }
                    };
                    check(
                        riesz_transform(&input, axis).unwrap(),
                        basis.image(grid, sym, true),
                    );
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= SPECTRAL_EXACTNESS && secs < 1.0;
    report(
        "C1",
        "spectral exactness",
        pass,
        &format!("{modes} pure modes on 32², worst relative error {worst:.2e}, {secs:.3} s"),
    );
    pass
}

fn c02_maximum_principle() -> bool {
    criteria(
        "C2",
        "maximum principle",
        Preset::SqgMaxprinciple,
        &["max_principle"],
    )
}

fn c03_positivity_principle() -> bool {
    criteria(
        "C3",
        "positivity principle",
        Preset::SqgMaxprinciple,
        &["positivity"],
    )
}

fn c04_energy_balance() -> bool {
    criteria(
        "C4",
        "energy balance",
        Preset::SqgMaxprinciple,
        &["energy_balance"],
    )
}

fn c05_besov_chain() -> bool {
    criteria(
        "C5",
        "Besov chain",
        Preset::BesovChain,
        &["besov_chain", "cross_terms"],
    )
}

fn c06_distance_power_lemma() -> bool {
    criteria(
        "C6",
        "distance power lemma",
        Preset::BesovChain,
        &["distance_power_lemma"],
    )
}

fn c07_picard_contraction() -> bool {
    criteria("C7", "Picard contraction", Preset::Picard, &["picard"])
}

fn c08_transfer_identity() -> bool {
    criteria("C8", "transfer identity", Preset::Transfer, &["transfer"])
}

fn c09_molecule_ledger() -> bool {
    let out = outcome(Preset::MoleculeLedger);
    for n in &out.notes {
        println!("     Kmin trend: {n}");
    }
    criteria("C9", "molecule ledger", Preset::MoleculeLedger, &["ledger"])
}

fn c10_holder_boundedness() -> bool {
    criteria(
        "C10",
        "Hölder boundedness",
        Preset::LinftyTruncation,
        &["holder_refinement", "duality_bound"],
    )
}

fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn c11_determinism() -> bool {
    let mut details = Vec::new();
    let mut pass = true;
    for preset in [Preset::Picard, Preset::BesovChain, Preset::Transfer] {
        let mut runs = Vec::new();
        for rep in 0..2 {
            let dir = out_dir(&format!("determinism_{}_{rep}", preset.name()));
            run_preset(preset, &PresetOptions::new(&dir)).unwrap();
            runs.push(csv_bytes(&dir));
        }
        let same = !runs[0].is_empty() && runs[0] == runs[1];
        pass &= same;
        details.push(format!(
            "{preset}: {} CSV files {}",
            runs[0].len(),
            if same { "identical" } else { "differ" }
        ));
    }
    report("C11", "determinism", pass, &details.join(", "));
    pass
}

type Check = fn() -> bool;

const CHECKS: [(&str, &str, Check); 11] = [
    ("C1", "c01_spectral_exactness", c01_spectral_exactness),
    ("C2", "c02_maximum_principle", c02_maximum_principle),
    ("C3", "c03_positivity_principle", c03_positivity_principle),
    ("C4", "c04_energy_balance", c04_energy_balance),
    ("C5", "c05_besov_chain", c05_besov_chain),
    ("C6", "c06_distance_power_lemma", c06_distance_power_lemma),
    ("C7", "c07_picard_contraction", c07_picard_contraction),
    ("C8", "c08_transfer_identity", c08_transfer_identity),
    ("C9", "c09_molecule_ledger", c09_molecule_ledger),
    ("C10", "c10_holder_boundedness", c10_holder_boundedness),
    ("C11", "c11_determinism", c11_determinism),
];

fn main() -> std::process::ExitCode {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (id, name, check) in CHECKS {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        match std::panic::catch_unwind(check) {
            Ok(true) => {}
            Ok(false) => failed.push(id),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL {id} {name}: panicked: {msg}");
                failed.push(id);
            }
        }
    }
    println!(
        "acceptance: {} of {ran} criteria passed",
        ran - failed.len()
    );
    if failed.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        std::process::ExitCode::FAILURE
    }
}
