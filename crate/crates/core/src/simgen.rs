//! Synthetic multiple-instance hyperspectral scenes built with the linear
//! mixing model.
//!
//! Pixels are convex combinations of library endmembers with Dirichlet
//! proportions; Gaussian white noise is added once to the assembled scene to
//! reach a requested SNR.

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Bag, BagDataset, BagLabel, Instance};

const SLATE_OWN: f64 = 0.25;
const QUARTZ_OWN: f64 = 0.065;

/// Named spectra sampled on a shared wavelength grid (µm).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLibrary {
    wavelengths: Vec<f64>,
    names: Vec<String>,
    spectra: Vec<Vec<f64>>,
}

impl SpectralLibrary {
    pub fn new(wavelengths: Vec<f64>, entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let d = wavelengths.len();
        if d == 0 {
            return Err(Error::InvalidSimConfig("spectral library has no bands".into()));
        }
        let mut names = Vec::with_capacity(entries.len());
        let mut spectra = Vec::with_capacity(entries.len());
        for (name, s) in entries {
            if s.len() != d {
                return Err(Error::InvalidSimConfig(format!(
                    "spectrum `{name}` has {} bands, expected {d}",
                    s.len()
                )));
            }
            if names.contains(&name) {
                return Err(Error::InvalidSimConfig(format!("duplicate spectrum `{name}`")));
            }
            names.push(name);
            spectra.push(s);
        }
        Ok(Self {
            wavelengths,
            names,
            spectra,
        })
    }

    pub fn dim(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.spectra[i].as_slice())
            .ok_or_else(|| Error::UnknownEndmember(name.to_string()))
    }

    /// Reads `wavelength,<name1>,<name2>,...` with one row per band.
    pub fn from_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::InvalidSimConfig(e.to_string()))?.clone();
        if header.get(0).map(|h| h.to_ascii_lowercase()) != Some("wavelength".into()) {
            return Err(Error::InvalidSimConfig(
                "spectral library header must start with `wavelength`".into(),
            ));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut wavelengths = Vec::new();
        let mut columns = vec![Vec::new(); names.len()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidSimConfig(e.to_string()))?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidSimConfig(format!("line {}: `{s}` is not a number", line + 2))
                })
            };
            wavelengths.push(parse(&rec[0])?);
            for (col, v) in columns.iter_mut().zip(rec.iter().skip(1)) {
                col.push(parse(v)?);
            }
        }
        Self::new(wavelengths, names.into_iter().zip(columns).collect())
    }

    pub fn to_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
        let mut header = vec!["wavelength".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for (b, wl) in self.wavelengths.iter().enumerate() {
            let mut row = vec![format!("{wl:.16e}")];
            row.extend(self.spectra.iter().map(|s| format!("{:.16e}", s[b])));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(())
    }

    /// Smooth synthetic rock-like reflectance spectra on 211 bands spanning
    /// 0.4–2.5 µm. Names: `red_slate`, `verde_antique`, `phyllite`,
    /// `pyroxenite`, `quartz_conglomerate`.
    pub fn builtin() -> Self {
        let wl: Vec<f64> = (0..211).map(|i| 0.4 + 0.01 * i as f64).collect();
        let band = |c: f64, w: f64, depth: f64| move |x: f64| 1.0 - depth * (-0.5 * ((x - c) / w).powi(2)).exp();
        let edge = |c: f64, w: f64| move |x: f64| 1.0 / (1.0 + (-(x - c) / w).exp());
        let bump = |c: f64, w: f64| move |x: f64| (-0.5 * ((x - c) / w).powi(2)).exp();

        let slate_features = |x: f64| {
            (0.06 + 0.20 * edge(0.60, 0.035)(x) + 0.03 * (x - 0.8))
                * band(0.88, 0.09, 0.30)(x)
                * band(1.41, 0.02, 0.06)(x)
                * band(1.91, 0.03, 0.08)(x)
                * band(2.205, 0.025, 0.14)(x)
        };
        let verde_antique = |x: f64| {
            (0.11 + 0.06 * bump(0.54, 0.05)(x) + 0.12 * edge(1.30, 0.15)(x))
                * band(1.05, 0.18, 0.35)(x)
                * band(1.39, 0.015, 0.25)(x)
                * band(2.12, 0.03, 0.10)(x)
                * band(2.32, 0.03, 0.30)(x)
        };
        let phyllite = |x: f64| {
            (0.09 + 0.025 * (x - 0.4) + 0.04 * edge(0.70, 0.10)(x))
                * band(1.41, 0.02, 0.10)(x)
                * band(1.92, 0.04, 0.12)(x)
                * band(2.20, 0.02, 0.18)(x)
                * band(2.35, 0.03, 0.08)(x)
        };
        let pyroxenite = |x: f64| {
            (0.06 + 0.07 * edge(0.60, 0.08)(x) + 0.03 * (x - 0.4))
                * band(0.93, 0.10, 0.35)(x)
                * band(1.98, 0.25, 0.30)(x)
        };
        let quartz_features = |x: f64| {
            (0.28 + 0.14 * edge(0.55, 0.07)(x) + 0.02 * (x - 1.0))
                * band(0.90, 0.10, 0.10)(x)
                * band(1.41, 0.02, 0.08)(x)
                * band(1.92, 0.03, 0.10)(x)
                * band(2.20, 0.025, 0.15)(x)
        };
        // Slate and conglomerate share most of their continuum with the
        // phyllite and pyroxenite analogs.
        let red_slate = |x: f64| SLATE_OWN * slate_features(x) + (1.0 - SLATE_OWN) * (0.6 * phyllite(x) + 0.4 * pyroxenite(x));
        let quartz_conglomerate = |x: f64| {
            QUARTZ_OWN * quartz_features(x) + (1.0 - QUARTZ_OWN) * (0.5 * phyllite(x) + 0.5 * verde_antique(x))
        };
        let sample = |f: &dyn Fn(f64) -> f64| wl.iter().map(|&x| f(x)).collect::<Vec<_>>();
        let entries = vec![
            ("red_slate".to_string(), sample(&red_slate)),
            ("verde_antique".to_string(), sample(&verde_antique)),
            ("phyllite".to_string(), sample(&phyllite)),
            ("pyroxenite".to_string(), sample(&pyroxenite)),
            ("quartz_conglomerate".to_string(), sample(&quartz_conglomerate)),
        ];
        Self::new(wl, entries).expect("built-in library is consistent")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub target_names: Vec<String>,
    pub background_names: Vec<String>,
    pub bags_pos: usize,
    pub bags_neg: usize,
    pub pts_per_bag: usize,
    pub target_pts_per_pos_bag: usize,
    /// Mean proportion of each target in its planted pixels.
    pub target_mean: Vec<f64>,
    pub snr_db: f64,
    /// Background endmembers per bag, positive bags first. `None` gives
    /// every bag all of `background_names`.
    #[serde(default)]
    pub bag_background_subsets: Option<Vec<Vec<String>>>,
    /// Mix each target pixel with a random nonempty subset of its bag's
    /// backgrounds instead of all of them.
    #[serde(default)]
    pub random_background_subset: bool,
    /// Dirichlet concentration scale.
    #[serde(default = "default_dirichlet_scale")]
    pub dirichlet_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_dirichlet_scale() -> f64 {
    10.0
}

impl SimConfig {
    /// Incomplete background knowledge: bags 1–5 carry verde antique,
    /// phyllite and pyroxenite, bags 6–10 phyllite and pyroxenite, bags 11–15
    /// pyroxenite only, negative bags 16–20 phyllite and pyroxenite.
    pub fn incomplete_background(target_mean: f64) -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let mut subsets = Vec::new();
        subsets.extend(std::iter::repeat_n(s(&["verde_antique", "phyllite", "pyroxenite"]), 5));
        subsets.extend(std::iter::repeat_n(s(&["phyllite", "pyroxenite"]), 5));
        subsets.extend(std::iter::repeat_n(s(&["pyroxenite"]), 5));
        subsets.extend(std::iter::repeat_n(s(&["phyllite", "pyroxenite"]), 5));
        Self {
            target_names: s(&["red_slate"]),
            background_names: s(&["verde_antique", "phyllite", "pyroxenite"]),
            bags_pos: 15,
            bags_neg: 5,
            pts_per_bag: 500,
            target_pts_per_pos_bag: 200,
            target_mean: vec![target_mean],
            snr_db: 20.0,
            bag_background_subsets: Some(subsets),
            random_background_subset: false,
            dirichlet_scale: default_dirichlet_scale(),
            seed: 0,
        }
    }

    /// Two targets (red slate, quartz conglomerate) in 5 positive bags, 5
    /// negative bags, all three backgrounds everywhere.
    pub fn multi_target(target_mean: [f64; 2]) -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self {
            target_names: s(&["red_slate", "quartz_conglomerate"]),
            background_names: s(&["verde_antique", "phyllite", "pyroxenite"]),
            bags_pos: 5,
            bags_neg: 5,
            pts_per_bag: 500,
            target_pts_per_pos_bag: 200,
            target_mean: target_mean.to_vec(),
            snr_db: 20.0,
            bag_background_subsets: None,
            random_background_subset: false,
            dirichlet_scale: default_dirichlet_scale(),
            seed: 0,
        }
    }

    /// Parameter-study layout: 5 positive and 5 negative bags of 100 points,
    /// 50 target pixels per positive bag at mean proportion 0.1, each mixed
    /// with a random nonempty subset of the backgrounds.
    pub fn parameter_study() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self {
            target_names: s(&["red_slate"]),
            background_names: s(&["verde_antique", "phyllite", "pyroxenite"]),
            bags_pos: 5,
            bags_neg: 5,
            pts_per_bag: 100,
            target_pts_per_pos_bag: 50,
            target_mean: vec![0.1],
            snr_db: 20.0,
            bag_background_subsets: None,
            random_background_subset: true,
            dirichlet_scale: default_dirichlet_scale(),
            seed: 0,
        }
    }

    pub fn validate(&self, lib: &SpectralLibrary) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSimConfig(m));
        if self.target_names.is_empty() {
            return bad("at least one target endmember is required".into());
        }
        if self.background_names.is_empty() {
            return bad("at least one background endmember is required".into());
        }
        for n in self.target_names.iter().chain(&self.background_names) {
            lib.get(n)?;
        }
        if self.target_mean.len() != self.target_names.len() {
            return bad(format!(
                "target_mean has {} entries for {} targets",
                self.target_mean.len(),
                self.target_names.len()
            ));
        }
        if let Some(m) = self.target_mean.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
            return bad(format!("target_mean entries must lie in (0, 1), got {m}"));
        }
        if self.target_mean.iter().sum::<f64>() >= 1.0 {
            return bad("target_mean entries must sum to less than 1".into());
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db must be finite".into());
        }
        if !(self.dirichlet_scale > 0.0) {
            return bad("dirichlet_scale must be positive".into());
        }
        if self.pts_per_bag == 0 || self.bags_pos + self.bags_neg == 0 {
            return bad("bags must contain instances".into());
        }
        if self.target_pts_per_pos_bag > self.pts_per_bag {
            return bad("target_pts_per_pos_bag exceeds pts_per_bag".into());
        }
        if let Some(subsets) = &self.bag_background_subsets {
            if subsets.len() != self.bags_pos + self.bags_neg {
                return bad(format!(
                    "bag_background_subsets has {} entries for {} bags",
                    subsets.len(),
                    self.bags_pos + self.bags_neg
                ));
            }
            for (i, s) in subsets.iter().enumerate() {
                if s.is_empty() {
                    return bad(format!("bag {i} has an empty background subset"));
                }
                for n in s {
                    if !self.background_names.contains(n) {
                        lib.get(n)?;
                        return bad(format!("bag {i} lists `{n}` which is not in background_names"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Provenance of one simulated pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTruth {
    pub bag_id: String,
    pub index: usize,
    pub is_target: bool,
    /// Endmember names and their (pre-noise) proportions.
    pub proportions: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub dataset: BagDataset<f64>,
    /// One entry per instance in dataset order.
    pub truth: Vec<InstanceTruth>,
}

impl SimulatedData {
    pub fn labels(&self) -> Vec<bool> {
        self.truth.iter().map(|t| t.is_target).collect()
    }

    pub fn instances(&self) -> Vec<Instance<f64>> {
        self.dataset.instances().cloned().collect()
    }
}

/// Dirichlet draw of length `k` whose first coordinate has expectation
/// `mean_target`; the remaining mass splits evenly.
pub fn sample_proportions(rng: &mut impl Rng, k: usize, mean_target: f64) -> Vec<f64> {
    sample_proportions_scaled(rng, k, mean_target, default_dirichlet_scale())
}

pub fn sample_proportions_scaled(rng: &mut impl Rng, k: usize, mean_target: f64, scale: f64) -> Vec<f64> {
    assert!(k >= 2, "need at least two endmembers");
    assert!(mean_target > 0.0 && mean_target < 1.0, "mean_target must lie in (0, 1)");
    let mut conc = vec![scale * (1.0 - mean_target) / (k - 1) as f64; k];
    conc[0] = scale * mean_target;
    dirichlet(rng, &conc)
}

/// Dirichlet draw by normalized Gamma variates.
pub fn dirichlet(rng: &mut impl Rng, concentration: &[f64]) -> Vec<f64> {
    if concentration.len() == 1 {
        return vec![1.0];
    }
    loop {
        let g: Vec<f64> = concentration
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive concentration").sample(rng))
            .collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 {
            return g.into_iter().map(|v| v / total).collect();
        }
    }
}

/// Adds i.i.d. Gaussian noise with variance `mean(x²) / 10^(snr/10)`.
pub fn add_noise_to_snr(clean: &[Vec<f64>], snr_db: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let count: usize = clean.iter().map(Vec::len).sum();
    let power = clean.iter().flatten().map(|v| v * v).sum::<f64>() / count.max(1) as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma).expect("finite noise level");
    clean
        .iter()
        .map(|px| px.iter().map(|v| v + normal.sample(rng)).collect())
        .collect()
}

/// Mixes a pixel from named endmembers.
fn mix(lib: &SpectralLibrary, names: &[&str], props: &[f64]) -> Result<Vec<f64>> {
    let mut px = vec![0.0; lib.dim()];
    for (n, w) in names.iter().zip(props) {
        for (p, s) in px.iter_mut().zip(lib.get(n)?) {
            *p += w * s;
        }
    }
    Ok(px)
}

/// Target pixel proportions. Single targets use [`sample_proportions`];
/// with several targets each gets concentration `c · mean` and the rest of
/// the mass goes evenly to the backgrounds.
fn target_proportions(rng: &mut impl Rng, cfg: &SimConfig, targets: &[usize], n_bg: usize) -> Vec<f64> {
    let c = cfg.dirichlet_scale;
    if targets.len() == 1 && n_bg >= 1 {
        return sample_proportions_scaled(rng, 1 + n_bg, cfg.target_mean[targets[0]], c);
    }
    let t_mass: f64 = targets.iter().map(|&t| cfg.target_mean[t]).sum();
    let mut conc: Vec<f64> = targets.iter().map(|&t| c * cfg.target_mean[t]).collect();
    conc.extend(std::iter::repeat_n(c * (1.0 - t_mass) / n_bg.max(1) as f64, n_bg));
    dirichlet(rng, &conc)
}

fn random_nonempty_subset(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let size = rng.random_range(1..=n);
    let mut idx = index::sample(rng, n, size).into_vec();
    idx.sort_unstable();
    idx
}

/// Builds a bag dataset and its ground truth from `cfg`.
pub fn generate_dataset(lib: &SpectralLibrary, cfg: &SimConfig) -> Result<SimulatedData> {
    cfg.validate(lib)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_bags = cfg.bags_pos + cfg.bags_neg;
    let mut clean: Vec<Vec<f64>> = Vec::with_capacity(n_bags * cfg.pts_per_bag);
    let mut truth = Vec::with_capacity(n_bags * cfg.pts_per_bag);
    let mut layout = Vec::with_capacity(n_bags);

    for b in 0..n_bags {
        let positive = b < cfg.bags_pos;
        let bag_id = format!("bag{b}");
        let bgs: Vec<&str> = match &cfg.bag_background_subsets {
            Some(s) => s[b].iter().map(String::as_str).collect(),
            None => cfg.background_names.iter().map(String::as_str).collect(),
        };
        let n_targets = if positive { cfg.target_pts_per_pos_bag } else { 0 };
        for i in 0..cfg.pts_per_bag {
            let (names, props, is_target) = if i < n_targets {
                let tsel: Vec<usize> = (0..cfg.target_names.len()).collect();
                let bsel: Vec<&str> = if cfg.random_background_subset {
                    random_nonempty_subset(&mut rng, bgs.len()).into_iter().map(|j| bgs[j]).collect()
                } else {
                    bgs.clone()
                };
                let props = target_proportions(&mut rng, cfg, &tsel, bsel.len());
                let mut names: Vec<&str> = tsel.iter().map(|&t| cfg.target_names[t].as_str()).collect();
                names.extend(bsel);
                (names, props, true)
            } else {
                let props = dirichlet(&mut rng, &vec![1.0; bgs.len()]);
                (bgs.clone(), props, false)
            };
            clean.push(mix(lib, &names, &props)?);
            truth.push(InstanceTruth {
                bag_id: bag_id.clone(),
                index: i,
                is_target,
                proportions: names.iter().map(|n| n.to_string()).zip(props).collect(),
            });
        }
        layout.push((bag_id, positive));
    }

    let noisy = add_noise_to_snr(&clean, cfg.snr_db, &mut rng);
    let mut pixels = noisy.into_iter();
    let bags = layout
        .into_iter()
        .map(|(id, positive)| {
            let instances = pixels.by_ref().take(cfg.pts_per_bag).map(Instance::new).collect();
            let label = if positive { BagLabel::Positive } else { BagLabel::Negative };
            Bag::new(id, label, instances)
        })
        .collect();
    Ok(SimulatedData {
        dataset: BagDataset::new(bags),
        truth,
    })
}

/// Spectral angle in degrees.
pub fn spectral_angle_deg(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Names listed in `cfg` that are absent from `lib`.
pub fn unknown_endmembers(lib: &SpectralLibrary, cfg: &SimConfig) -> Vec<String> {
    let known: HashSet<&str> = lib.names().iter().map(String::as_str).collect();
    let mut out: Vec<String> = cfg
        .target_names
        .iter()
        .chain(&cfg.background_names)
        .chain(cfg.bag_background_subsets.iter().flatten().flatten())
        .filter(|n| !known.contains(n.as_str()))
        .cloned()
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_library_shape() {
        let lib = SpectralLibrary::builtin();
        assert_eq!(lib.dim(), 211);
        assert!((lib.wavelengths()[0] - 0.4).abs() < 1e-12);
        assert!((lib.wavelengths()[210] - 2.5).abs() < 1e-12);
        for n in lib.names() {
            assert!(lib.get(n).unwrap().iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn csv_round_trip() {
        let lib = SpectralLibrary::builtin();
        let mut buf = Vec::new();
        lib.to_csv(&mut buf).unwrap();
        let back = SpectralLibrary::from_csv(buf.as_slice()).unwrap();
        assert_eq!(back, lib);
    }

    #[test]
    fn proportions_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = sample_proportions(&mut rng, 4, 0.3);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn table_layout() {
        let mut cfg = SimConfig::incomplete_background(0.3);
        cfg.pts_per_bag = 20;
        cfg.target_pts_per_pos_bag = 8;
        let data = generate_dataset(&SpectralLibrary::builtin(), &cfg).unwrap();
        assert_eq!(data.dataset.bags.len(), 20);
        assert_eq!(data.dataset.n_positive_bags(), 15);
        let first = &data.truth[0];
        let names: Vec<&str> = first.proportions.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["red_slate", "verde_antique", "phyllite", "pyroxenite"]);
        let last_pos = data.truth.iter().find(|t| t.bag_id == "bag12" && t.is_target).unwrap();
        let names: Vec<&str> = last_pos.proportions.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["red_slate", "pyroxenite"]);
        for t in &data.truth {
            let positive_bag = t.bag_id[3..].parse::<usize>().unwrap() < 15;
            assert_eq!(t.is_target, positive_bag && t.index < 8);
        }
    }

    #[test]
    fn unknown_endmember_is_named() {
        let mut cfg = SimConfig::parameter_study();
        cfg.background_names.push("granite".into());
        let err = generate_dataset(&SpectralLibrary::builtin(), &cfg).unwrap_err();
        assert!(err.to_string().contains("granite"));
    }

    #[test]
    fn spectral_angle_examples() {
        assert!(spectral_angle_deg(&[1.0, 0.0], &[2.0, 0.0]).abs() < 1e-12);
        assert!((spectral_angle_deg(&[1.0, 0.0], &[0.0, 3.0]) - 90.0).abs() < 1e-12);
    }
}
