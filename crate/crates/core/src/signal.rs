//! Received-frame synthesis `y = h x + v`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::array::{subarray_responses, HybridConfig};
use crate::error::{Error, Result};
use crate::link::{draw_channel, LinkBudget};
use crate::orbit::{CircularOrbit, Direction, OrbitParams, Position};

/// Zadoff-Chu sequence of `length` with root `root`.
pub fn zadoff_chu(length: usize, root: usize) -> Result<Vec<Complex64>> {
    if length == 0 {
        return Err(Error::Config("pilot length must be at least 1".into()));
    }
    if root.gcd(&length) != 1 {
        return Err(Error::Config(format!(
            "Zadoff-Chu root {root} is not coprime with length {length}"
        )));
    }
    let n = length as f64;
    let u = root as f64;
    let odd = length % 2 == 1;
    Ok((0..length)
        .map(|k| {
            let k = k as f64;
            let arg = if odd { k * (k + 1.0) } else { k * k };
            Complex64::from_polar(1.0, -std::f64::consts::PI * u * arg / n)
        })
        .collect())
}

/// One recording interval: `M` subarray outputs over `N_s` pilot samples,
/// stacked subarray-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame {
    pub t: f64,
    pub y: Vec<Complex64>,
    /// Direction the analog weights were steered to while recording.
    pub pointing: Direction,
    pub num_subarrays: usize,
    /// Ground truth only; estimators must not read it.
    pub obstructed: bool,
}

impl SignalFrame {
    pub fn pilot_len(&self) -> usize {
        self.y.len() / self.num_subarrays
    }

    /// Samples of subarray `m`.
    pub fn subarray(&self, m: usize) -> &[Complex64] {
        let n = self.pilot_len();
        &self.y[m * n..(m + 1) * n]
    }

    /// Snapshot `k`: the `M` subarray outputs at pilot sample `k`.
    pub fn snapshot(&self, k: usize) -> Vec<Complex64> {
        let n = self.pilot_len();
        (0..self.num_subarrays).map(|m| self.y[m * n + k]).collect()
    }

    pub fn energy(&self) -> f64 {
        self.y.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Time-ordered satellite positions in the ground-station frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<(f64, Position)>,
}

impl Trajectory {
    pub fn new(samples: Vec<(f64, Position)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Config("trajectory needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Config("trajectory times must increase strictly".into()));
        }
        Ok(Trajectory { samples })
    }

    /// Samples `position(t)` of a circular orbit on `times`.
    pub fn from_orbit(orbit: &CircularOrbit, gamma: &OrbitParams, times: impl IntoIterator<Item = f64>) -> Result<Self> {
        Trajectory::new(times.into_iter().map(|t| (t, orbit.position(t, gamma))).collect())
    }

    pub fn samples(&self) -> &[(f64, Position)] {
        &self.samples
    }

    pub fn span(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// Text with a header line and rows `t_seconds,x_m,y_m,z_m`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match v {
                Ok(v) if v.len() == 4 => samples.push((v[0], Position::new(v[1], v[2], v[3]))),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected `t_seconds,x_m,y_m,z_m`, got `{line}`"),
                    })
                }
            }
        }
        Trajectory::new(samples)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_seconds,x_m,y_m,z_m\n");
        for (t, p) in &self.samples {
            out.push_str(&format!("{t},{},{},{}\n", p.x, p.y, p.z));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Piecewise-linear position at `t`.
pub fn interpolate_trajectory(traj: &Trajectory, t: f64) -> Result<Position> {
    let (start, end) = traj.span();
    if !(t >= start && t <= end) {
        return Err(Error::OutOfRange { t, start, end });
    }
    let s = &traj.samples;
    let i = s.partition_point(|(ts, _)| *ts <= t);
    if i == s.len() {
        return Ok(s[s.len() - 1].1);
    }
    let (t0, p0) = s[i - 1];
    let (t1, p1) = s[i];
    let w = (t - t0) / (t1 - t0);
    Ok(p0 + (p1 - p0) * w)
}

/// Where the satellite really is.
#[derive(Debug, Clone, PartialEq)]
pub enum TruthSource {
    Orbit { orbit: CircularOrbit, gamma: OrbitParams },
    Trajectory(Trajectory),
}

impl TruthSource {
    pub fn position(&self, t: f64) -> Result<Position> {
        match self {
            TruthSource::Orbit { orbit, gamma } => Ok(orbit.position(t, gamma)),
            TruthSource::Trajectory(traj) => interpolate_trajectory(traj, t),
        }
    }

    pub fn direction(&self, t: f64) -> Result<Direction> {
        Direction::try_new(self.position(t)?, 1.0)
    }

    pub fn is_visible(&self, t: f64) -> bool {
        self.position(t).map(|p| p.z > 0.0).unwrap_or(false)
    }
}

/// Everything about the transmitter and receiver that does not change
/// between frames.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSetup {
    pub hybrid: HybridConfig,
    pub budget: LinkBudget,
    pub pilot: Vec<Complex64>,
    pub noise_precision: f64,
}

pub fn complex_noise<R: Rng + ?Sized>(precision: f64, rng: &mut R) -> Complex64 {
    let sd = (0.5 / precision).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

/// Noiseless part `h x` of a frame; exposed for tests and the SNR check.
pub fn noiseless_frame(
    direction: &Direction,
    pointing: &Direction,
    h: Complex64,
    hybrid: &HybridConfig,
    s: &[Complex64],
) -> Vec<Complex64> {
    let c = subarray_responses(direction, pointing, hybrid);
    let mut y = Vec::with_capacity(c.len() * s.len());
    for cm in &c {
        let g = cm * h;
        y.extend(s.iter().map(|sk| g * sk));
    }
    y
}

/// Synthesises `y = h x + v` at time `t` with the analog weights steered to
/// `pointing`.
pub fn synthesize_frame<R: Rng + ?Sized>(
    t: f64,
    truth: &TruthSource,
    pointing: &Direction,
    setup: &LinkSetup,
    rng: &mut R,
) -> Result<SignalFrame> {
    let position = truth.position(t)?;
    let channel = draw_channel(t, &position, &setup.budget, rng)?;
    let direction = Direction::try_new(position, 1.0)?;
    let mut y = noiseless_frame(&direction, pointing, channel.h, &setup.hybrid, &setup.pilot);
    if setup.noise_precision.is_finite() {
        for v in &mut y {
            *v += complex_noise(setup.noise_precision, rng);
        }
    }
    Ok(SignalFrame {
        t,
        y,
        pointing: *pointing,
        num_subarrays: setup.hybrid.num_subarrays(),
        obstructed: false,
    })
}

/// Replaces the frame with fresh noise when `t` falls inside `window`
/// (inclusive).
pub fn obstruct<R: Rng + ?Sized>(
    frame: SignalFrame,
    window: (f64, f64),
    noise_precision: f64,
    rng: &mut R,
) -> SignalFrame {
    if frame.t < window.0 || frame.t > window.1 {
        return frame;
    }
    let y = (0..frame.y.len()).map(|_| complex_noise(noise_precision, rng)).collect();
    SignalFrame { y, obstructed: true, ..frame }
}

const FRAME_MAGIC: &[u8; 4] = b"LEOF";

/// Appends `frame` in the little-endian dump format:
/// magic `LEOF`, `u32 M`, `u32 N_s`, `f64 t`, `3 x f64` pointing,
/// `u32` flags (bit 0: obstructed), then `M N_s` interleaved `f32` pairs.
pub fn write_frame<W: Write>(w: &mut W, frame: &SignalFrame) -> Result<()> {
    w.write_all(FRAME_MAGIC)?;
    w.write_all(&(frame.num_subarrays as u32).to_le_bytes())?;
    w.write_all(&(frame.pilot_len() as u32).to_le_bytes())?;
    w.write_all(&frame.t.to_le_bytes())?;
    for c in frame.pointing.as_vector().iter() {
        w.write_all(&c.to_le_bytes())?;
    }
    w.write_all(&u32::from(frame.obstructed).to_le_bytes())?;
    for v in &frame.y {
        w.write_all(&(v.re as f32).to_le_bytes())?;
        w.write_all(&(v.im as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Reads the next frame, or `None` at a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<SignalFrame>> {
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    if &magic != FRAME_MAGIC {
        return Err(Error::Parse { line: 0, message: "bad frame magic".into() });
    }
    let mut u4 = [0u8; 4];
    let mut f8 = [0u8; 8];
    r.read_exact(&mut u4)?;
    let m = u32::from_le_bytes(u4) as usize;
    r.read_exact(&mut u4)?;
    let ns = u32::from_le_bytes(u4) as usize;
    r.read_exact(&mut f8)?;
    let t = f64::from_le_bytes(f8);
    let mut p = [0.0; 3];
    for c in &mut p {
        r.read_exact(&mut f8)?;
        *c = f64::from_le_bytes(f8);
    }
    r.read_exact(&mut u4)?;
    let flags = u32::from_le_bytes(u4);
    let mut y = Vec::with_capacity(m * ns);
    for _ in 0..m * ns {
        r.read_exact(&mut u4)?;
        let re = f32::from_le_bytes(u4) as f64;
        r.read_exact(&mut u4)?;
        let im = f32::from_le_bytes(u4) as f64;
        y.push(Complex64::new(re, im));
    }
    let pointing = Direction::try_new(nalgebra::Vector3::new(p[0], p[1], p[2]), 0.5)
        .map_err(|_| Error::Parse { line: 0, message: "pointing is not a unit vector".into() })?;
    Ok(Some(SignalFrame { t, y, pointing, num_subarrays: m, obstructed: flags & 1 == 1 }))
}

pub fn save_frames(path: &Path, frames: &[SignalFrame]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for f in frames {
        write_frame(&mut w, f)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_frames(path: &Path) -> Result<Vec<SignalFrame>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    while let Some(f) = read_frame(&mut r)? {
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{channel_amplitude, noise_precision_for_snr};
    use crate::orbit::CircularOrbit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn truth() -> TruthSource {
        TruthSource::Orbit {
            orbit: CircularOrbit::default(),
            gamma: OrbitParams::new(1.5, 0.4, 3.0 * FRAC_PI_2 - 0.1),
        }
    }

    fn setup(noise_precision: f64) -> LinkSetup {
        LinkSetup {
            hybrid: HybridConfig::default(),
            budget: LinkBudget::default(),
            pilot: zadoff_chu(63, 29).unwrap(),
            noise_precision,
        }
    }

    #[test]
    fn zadoff_chu_properties() {
        for (n, u) in [(63, 29), (64, 5), (7, 3), (1, 1)] {
            let s = zadoff_chu(n, u).unwrap();
            assert!(s.iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
        }
        let s = zadoff_chu(63, 29).unwrap();
        assert!((s[0] - 1.0).norm() < 1e-15);
        for n in [31usize, 61] {
            let s = zadoff_chu(n, 7).unwrap();
            for lag in 1..n {
                let r: Complex64 = (0..n).map(|k| s[k] * s[(k + lag) % n].conj()).sum();
                assert!(r.norm() < 1e-9, "lag {lag}: {}", r.norm());
            }
        }
        assert!(zadoff_chu(63, 21).is_err());
        assert!(zadoff_chu(0, 1).is_err());
    }

    #[test]
    fn noiseless_frame_is_h_times_template() {
        let tr = truth();
        let d = tr.direction(0.0).unwrap();
        let su = setup(f64::INFINITY);
        let f = synthesize_frame(0.0, &tr, &d, &su, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let x = crate::array::beamformed_template(&d, &d, &su.hybrid, &su.pilot);
        let rho = channel_amplitude(0.0, &tr.position(0.0).unwrap(), &su.budget).unwrap();
        let xn: f64 = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!((f.energy().sqrt() - rho * xn).abs() < 1e-9 * rho * xn);
        let h = f.y[0] / x[0];
        for (y, x) in f.y.iter().zip(&x) {
            assert!((y - h * x).norm() < 1e-9 * rho);
        }
    }

    #[test]
    fn noise_only_variance() {
        let su = setup(4.0);
        let tr = truth();
        let d = tr.direction(0.0).unwrap();
        let f = synthesize_frame(0.0, &tr, &d, &su, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut total = 0.0;
        let mut count = 0usize;
        for _ in 0..4 {
            let o = obstruct(f.clone(), (0.0, 0.0), 4.0, &mut rng);
            assert!(o.obstructed);
            total += o.energy();
            count += o.y.len();
        }
        let var = total / count as f64;
        assert!((var - 0.25).abs() < 0.05 * 0.25, "variance {var}");
    }

    #[test]
    fn obstruction_window() {
        let su = setup(1.0);
        let tr = TruthSource::Orbit {
            orbit: CircularOrbit::default(),
            gamma: OrbitParams::new(FRAC_PI_2, 0.0, 3.0 * FRAC_PI_2 + 0.2),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = tr.direction(350.0).unwrap();
        let f = synthesize_frame(350.0, &tr, &d, &su, &mut rng).unwrap();
        let o = obstruct(f.clone(), (319.0, 381.0), 1.0, &mut rng);
        assert!(o.obstructed && o.y != f.y);
        let expected = o.y.len() as f64;
        assert!((o.energy() - expected).abs() < 0.1 * expected);
        let f = synthesize_frame(318.0, &tr, &d, &su, &mut rng).unwrap();
        assert_eq!(obstruct(f.clone(), (319.0, 381.0), 1.0, &mut rng), f);
    }

    #[test]
    fn empirical_snr_matches_target() {
        let tr = truth();
        let p = tr.position(0.0).unwrap();
        let d = tr.direction(0.0).unwrap();
        let mut su = setup(1.0);
        let target_db = -5.0;
        su.noise_precision = noise_precision_for_snr(target_db, 0.0, &p, &su.budget, &su.hybrid, &su.pilot).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frames = 10_000;
        let clean = noiseless_frame(&d, &d, Complex64::new(1.0, 0.0), &su.hybrid, &su.pilot);
        let rho = channel_amplitude(0.0, &p, &su.budget).unwrap();
        let signal: f64 = clean.iter().map(|c| c.norm_sqr()).sum::<f64>() * rho * rho;
        let mut noise = 0.0;
        for _ in 0..frames {
            let f = synthesize_frame(0.0, &tr, &d, &su, &mut rng).unwrap();
            let h = f.y.iter().zip(&clean).map(|(y, c)| y * c.conj()).sum::<Complex64>() / (signal / (rho * rho));
            // residual power after removing the known template with the true amplitude
            let h = Complex64::from_polar(rho, h.arg());
            noise += f.y.iter().zip(&clean).map(|(y, c)| (y - h * c).norm_sqr()).sum::<f64>();
        }
        let snr = signal / (noise / frames as f64);
        assert!((10.0 * snr.log10() - target_db).abs() < 0.2, "{} dB", 10.0 * snr.log10());
    }

    #[test]
    fn energy_decomposition() {
        let tr = truth();
        let d = tr.direction(0.0).unwrap();
        let mut su = setup(1.0);
        let rho = channel_amplitude(0.0, &tr.position(0.0).unwrap(), &su.budget).unwrap();
        let x = crate::array::beamformed_template(&d, &d, &su.hybrid, &su.pilot);
        let x2: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        su.noise_precision = x.len() as f64 / (rho * rho * x2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 2000;
        let mean: f64 = (0..n)
            .map(|_| synthesize_frame(0.0, &tr, &d, &su, &mut rng).unwrap().energy())
            .sum::<f64>()
            / n as f64;
        let expected = rho * rho * x2 + x.len() as f64 / su.noise_precision;
        assert!((mean - expected).abs() < 0.01 * expected);
    }

    #[test]
    fn deterministic_given_seed() {
        let tr = truth();
        let d = tr.direction(0.0).unwrap();
        let su = setup(1e3);
        let a = synthesize_frame(0.0, &tr, &d, &su, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = synthesize_frame(0.0, &tr, &d, &su, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn below_horizon_frames_fail() {
        let tr = TruthSource::Orbit {
            orbit: CircularOrbit::default(),
            gamma: OrbitParams::new(FRAC_PI_2, 0.0, 0.0),
        };
        let su = setup(1.0);
        let r = synthesize_frame(0.0, &tr, &Direction::zenith(), &su, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::BelowHorizon { .. })));
    }

    #[test]
    fn trajectory_interpolation() {
        let orbit = CircularOrbit::default();
        let g = OrbitParams::new(1.5, 0.4, 3.0 * FRAC_PI_2 - 0.1);
        let traj = Trajectory::from_orbit(&orbit, &g, (0..=600).map(|k| k as f64)).unwrap();
        assert_eq!(interpolate_trajectory(&traj, 10.0).unwrap(), orbit.position(10.0, &g));
        let mid = interpolate_trajectory(&traj, 10.5).unwrap();
        let avg = (orbit.position(10.0, &g) + orbit.position(11.0, &g)) / 2.0;
        assert!((mid - avg).norm() < 1e-6);
        let worst = (0..600)
            .map(|k| k as f64 + 0.5)
            .map(|t| (interpolate_trajectory(&traj, t).unwrap() - orbit.position(t, &g)).norm())
            .fold(0.0, f64::max);
        // chord sag of a circle sampled every dt: omega^2 R dt^2 / 8
        let sag = orbit.omega * orbit.omega * orbit.radius / 8.0;
        assert!(worst <= sag * 1.001 && worst > 0.99 * sag, "worst {worst} m, sag {sag} m");
        assert!(matches!(interpolate_trajectory(&traj, 601.0), Err(Error::OutOfRange { .. })));

        // frames from the sampled trajectory match frames from the orbit model
        let su = setup(f64::INFINITY);
        let a = TruthSource::Trajectory(traj.clone());
        let b = TruthSource::Orbit { orbit, gamma: g };
        let d = b.direction(100.0).unwrap();
        let fa = synthesize_frame(100.0, &a, &d, &su, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let fb = synthesize_frame(100.0, &b, &d, &su, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let diff: f64 = fa.y.iter().zip(&fb.y).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-6 * fb.y[0].norm().max(1e-30));
    }

    #[test]
    fn trajectory_text_round_trip() {
        let traj = Trajectory::new(vec![
            (0.0, Position::new(1.0, 2.0, 3.0)),
            (1.5, Position::new(-1.0, 0.5, 7.25)),
        ])
        .unwrap();
        assert_eq!(Trajectory::parse(&traj.to_csv()).unwrap(), traj);
        assert!(Trajectory::parse("t,x,y,z\n0,1,2,3\n").is_err());
        assert!(Trajectory::parse("t,x,y,z\n1,1,2,3\n0,1,2,3\n").is_err());
    }

    #[test]
    fn frame_dump_round_trip() {
        let tr = truth();
        let d = tr.direction(0.0).unwrap();
        let su = setup(1e15);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let frames = vec![
            synthesize_frame(0.0, &tr, &d, &su, &mut rng).unwrap(),
            synthesize_frame(20.0, &tr, &d, &su, &mut rng).unwrap(),
        ];
        let mut buf = Vec::new();
        for f in &frames {
            write_frame(&mut buf, f).unwrap();
        }
        assert_eq!(buf.len(), 2 * (4 + 4 + 4 + 8 + 24 + 4 + 64 * 63 * 8));
        let mut r = buf.as_slice();
        for f in &frames {
            let g = read_frame(&mut r).unwrap().unwrap();
            assert_eq!((g.t, g.num_subarrays, g.pilot_len()), (f.t, 64, 63));
            for (a, b) in g.y.iter().zip(&f.y) {
                assert!((a - b).norm() <= 1e-6 * b.norm());
            }
        }
        assert!(read_frame(&mut r).unwrap().is_none());
    }
}
