//! Synthetic data for demos, tests and desk-scale benchmarks.
//!
//! [`nsl_like_table`] produces records with the 41-feature layout of the
//! NSL-KDD corpus (column names, three categorical columns, skewed counts,
//! byte volumes and two-decimal rates) drawn from a fixed set of traffic
//! profiles per class. It is a stand-in with realistic shape, not a model of
//! the real traffic.

use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bitpack::{ClassTag, PackedMatrix, PackedRow};
use crate::pipeline::RawTable;

/// Random rows of `len` bits, each bit set with probability `density`.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, len: usize, density: f64, tag: ClassTag) -> PackedMatrix {
    let mut m = PackedMatrix::with_capacity(len, tag, n);
    for _ in 0..n {
        let bits: Vec<usize> = (0..len).filter(|_| rng.gen_bool(density)).collect();
        m.push(&PackedRow::pack(bits, len).expect("bits below len"))
            .expect("matching length");
    }
    m
}

#[derive(Clone, Copy)]
enum Feature {
    Protocol,
    Service,
    Flag,
    Bytes,
    Count(u32),
    Binary,
    Rate,
    Constant,
}

use Feature::*;

/// NSL-KDD feature names and the value family each is drawn from.
pub const NSL_COLUMNS: [&str; 41] = [
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
    "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
    "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
    "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
    "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
];

const NSL_FEATURES: [Feature; 41] = [
    Count(5000), Protocol, Service, Flag, Bytes, Bytes, Binary,
    Count(3), Count(3), Count(30), Count(5), Binary, Count(20),
    Binary, Binary, Count(20), Count(10), Count(3),
    Count(5), Constant, Binary, Binary, Count(511),
    Count(511), Rate, Rate, Rate, Rate,
    Rate, Rate, Rate, Count(255),
    Count(255), Rate, Rate,
    Rate, Rate, Rate,
    Rate, Rate, Rate,
];

const PROTOCOLS: [&str; 3] = ["tcp", "udp", "icmp"];
const FLAGS: [&str; 11] = ["SF", "S0", "REJ", "RSTR", "RSTO", "SH", "S1", "S2", "S3", "OTH", "RSTOS0"];
const SERVICES: [&str; 24] = [
    "http", "private", "domain_u", "smtp", "ftp_data", "eco_i", "other", "ecr_i", "telnet",
    "finger", "ftp", "auth", "uucp", "Z39_50", "courier", "bgp", "whois", "imap4", "time",
    "ctf", "nnsp", "iso_tsap", "http_443", "urp_i",
];
const NORMAL_LABEL: &str = "normal";
const ATTACK_LABELS: [&str; 8] = [
    "neptune", "smurf", "satan", "ipsweep", "portsweep", "nmap", "back", "guess_passwd",
];

struct Param {
    zero: f64,
    center: f64,
    spread: f64,
}

struct Profile {
    label: &'static str,
    protocol: usize,
    services: Vec<usize>,
    flags: Vec<usize>,
    params: Vec<Param>,
}

fn make_profile<R: Rng>(rng: &mut R, label: &'static str) -> Profile {
    let protocol = rng.gen_range(0..PROTOCOLS.len());
    let services = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..SERVICES.len())).collect();
    let flags = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..FLAGS.len())).collect();
    let params = NSL_FEATURES
        .iter()
        .map(|_| Param {
            zero: rng.gen_range(0.0..1.0f64).powi(2),
            center: rng.gen_range(0.0..1.0),
            spread: rng.gen_range(0.01..0.15),
        })
        .collect();
    Profile {
        label,
        protocol,
        services,
        flags,
        params,
    }
}

fn draw<R: Rng>(rng: &mut R, feature: Feature, p: &Param, profile: &Profile) -> String {
    let noise: f64 = rand_distr_normal(rng) * p.spread;
    match feature {
        Protocol => PROTOCOLS[profile.protocol].to_string(),
        Service => SERVICES[profile.services[rng.gen_range(0..profile.services.len())]].to_string(),
        Flag => FLAGS[profile.flags[rng.gen_range(0..profile.flags.len())]].to_string(),
        Constant => "0".into(),
        _ if rng.gen_bool(p.zero) => "0".into(),
        Binary => u8::from(rng.gen_bool(p.center)).to_string(),
        Count(max) => {
            let v = ((p.center + noise).clamp(0.0, 1.0) * max as f64).round();
            (v as u32).to_string()
        }
        Rate => format!("{:.2}", (p.center + noise).clamp(0.0, 1.0)),
        Bytes => {
            let v = ((p.center + noise) * 14.0).clamp(0.0, 20.0).exp().round();
            (v as u64).to_string()
        }
    }
}

fn rand_distr_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling in rand_distr for one draw.
    let u1: f64 = rand::distributions::Open01.sample(rng);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `n_rows` NSL-KDD-shaped records with a `class` label column (`normal` or
/// an attack name), roughly half attacks. Deterministic for a given seed.
pub fn nsl_like_table(seed: u64, n_rows: usize) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normals: Vec<Profile> = (0..6).map(|_| make_profile(&mut rng, NORMAL_LABEL)).collect();
    let attacks: Vec<Profile> = ATTACK_LABELS
        .iter()
        .map(|&l| make_profile(&mut rng, l))
        .collect();
    let mut headers: Vec<String> = NSL_COLUMNS.iter().map(|s| s.to_string()).collect();
    headers.push("class".into());
    let records = (0..n_rows)
        .map(|_| {
            let pool = if rng.gen_bool(0.5) { &normals } else { &attacks };
            let profile = &pool[rng.gen_range(0..pool.len())];
            let mut rec: Vec<String> = NSL_FEATURES
                .iter()
                .zip(&profile.params)
                .map(|(&f, p)| draw(&mut rng, f, p, profile))
                .collect();
            rec.push(profile.label.to_string());
            rec
        })
        .collect();
    RawTable { headers, records }
}
