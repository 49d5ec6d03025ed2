//! Synthetic threat-intelligence workload: record generation with a strict
//! public/private split, and the privacy-reducing projection into proposals.

use crate::domain::{
    AttackAttribute, AttributeKey, DomainError, GroundTruthId, LogIndex, NodeId, Proposal, Term,
};
use crate::rng::{stream_seed, DetRng};

/// Value pools the generator draws from. Every pool must be non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationProfile {
    pub attack_methods: Vec<String>,
    pub attack_tools: Vec<String>,
    pub characteristics: Vec<String>,
    pub ttps: Vec<String>,
    pub victim_orgs: Vec<String>,
}

impl Default for GenerationProfile {
    fn default() -> Self {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect();
        GenerationProfile {
            attack_methods: s(&[
                "phishing",
                "sql_injection",
                "credential_stuffing",
                "drive_by_download",
                "brute_force",
                "dns_tunneling",
                "watering_hole",
                "lateral_movement",
            ]),
            attack_tools: s(&[
                "cobalt_strike",
                "mimikatz",
                "metasploit",
                "sliver",
                "empire",
                "custom_loader",
                "xmrig",
                "netcat",
            ]),
            characteristics: s(&[
                "beaconing_300s",
                "dga_domains",
                "smb_scanning",
                "encrypted_c2",
                "credential_dumping",
                "registry_persistence",
                "powershell_obfuscation",
                "data_staging",
            ]),
            ttps: s(&[
                "T1059", "T1566", "T1486", "T1021", "T1041", "T1055", "T1078", "T1190",
            ]),
            victim_orgs: s(&[
                "Meridian Finance Group",
                "Northgate Energy",
                "Halworth Logistics",
                "Cedar Valley Health",
                "Atlas Manufacturing",
                "Pinebrook University",
            ]),
        }
    }
}

impl GenerationProfile {
    pub fn validate(&self) -> Result<(), CtiError> {
        let pools: [(&str, usize); 5] = [
            ("attack_methods", self.attack_methods.len()),
            ("attack_tools", self.attack_tools.len()),
            ("characteristics", self.characteristics.len()),
            ("ttps", self.ttps.len()),
            ("victim_orgs", self.victim_orgs.len()),
        ];
        for (name, len) in pools {
            if len == 0 {
                return Err(CtiError::EmptyPool(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CtiError {
    #[error("generation profile pool '{0}' is empty")]
    EmptyPool(&'static str),
}

/// A full threat record as a member organization would hold it internally.
/// Only `public_attributes` may ever leave the organization; the three
/// private fields must never appear in any persisted consensus artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtiRecord {
    pub ground_truth_id: GroundTruthId,
    /// Exactly the six shareable attributes, in canonical key order.
    pub public_attributes: Vec<AttackAttribute>,
    pub victim_org: String,
    pub internal_asset: String,
    pub analyst_notes: String,
}

impl CtiRecord {
    /// The strings the privacy scan looks for in persisted artifacts.
    #[must_use]
    pub fn private_values(&self) -> [&str; 3] {
        [&self.victim_org, &self.internal_asset, &self.analyst_notes]
    }
}

fn pick<'a>(rng: &mut DetRng, pool: &'a [String]) -> &'a str {
    &pool[rng.next_below(pool.len() as u64) as usize]
}

fn hex_token(rng: &mut DetRng, bytes: usize) -> String {
    let mut out = String::with_capacity(bytes * 2);
    for _ in 0..bytes {
        out.push_str(&format!("{:02x}", rng.next_below(256)));
    }
    out
}

/// Generates the record for workload position `seq` under `seed`.
/// Fully deterministic: the same `(profile, seed, seq)` always yields an
/// identical record, and distinct seeds yield distinct ground-truth ids.
pub fn generate_cti(
    profile: &GenerationProfile,
    seed: u64,
    seq: u64,
) -> Result<CtiRecord, CtiError> {
    profile.validate()?;
    let mut rng = DetRng::new(stream_seed(seed, seq.wrapping_add(0xC71)));
    let ground_truth_id = GroundTruthId(stream_seed(seed, seq) | 1);

    // TEST-NET-3 style source address.
    let attacker_ip = format!(
        "203.0.113.{}",
        rng.next_below(254) + 1
    );
    let method = pick(&mut rng, &profile.attack_methods).to_string();
    let tool = pick(&mut rng, &profile.attack_tools).to_string();
    let characteristic = pick(&mut rng, &profile.characteristics).to_string();
    let ttp = pick(&mut rng, &profile.ttps).to_string();
    // The sample hash embeds the ground-truth id, which makes every record's
    // attribute vector globally unique within and across runs.
    let hash = format!("{:016x}{}", ground_truth_id.0, hex_token(&mut rng, 24));

    let victim_org = pick(&mut rng, &profile.victim_orgs).to_string();
    let org_slug: String = victim_org
        .split_whitespace()
        .next()
        .unwrap_or("org")
        .to_lowercase();
    let internal_asset = format!(
        "host-{:03}.{}.corp.internal",
        rng.next_below(1000),
        org_slug
    );
    let analyst_notes = format!(
        "SOC escalation at {}: {} activity via {} touched {}, containment pending",
        victim_org, method, tool, internal_asset
    );

    let public_attributes = vec![
        AttackAttribute::new(AttributeKey::AttackerIp, attacker_ip),
        AttackAttribute::new(AttributeKey::AttackMethod, method),
        AttackAttribute::new(AttributeKey::AttackTool, tool),
        AttackAttribute::new(AttributeKey::Characteristics, characteristic),
        AttackAttribute::new(AttributeKey::Ttps, ttp),
        AttackAttribute::new(AttributeKey::Hash, hash),
    ];

    Ok(CtiRecord {
        ground_truth_id,
        public_attributes,
        victim_org,
        internal_asset,
        analyst_notes,
    })
}

/// Privacy-reducing projection: a proposal carries exactly the record's six
/// public attributes and nothing else.
pub fn generate_proposal(
    record: &CtiRecord,
    term: Term,
    prev_index: LogIndex,
    origin: NodeId,
) -> Result<Proposal, DomainError> {
    Proposal::new(term, prev_index, record.public_attributes.clone(), origin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let profile = GenerationProfile::default();
        let a = generate_cti(&profile, 42, 7).unwrap();
        let b = generate_cti(&profile, 42, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_seeds_give_distinct_ids() {
        let profile = GenerationProfile::default();
        let a = generate_cti(&profile, 1, 0).unwrap();
        let b = generate_cti(&profile, 2, 0).unwrap();
        assert_ne!(a.ground_truth_id, b.ground_truth_id);
        assert_ne!(a.public_attributes, b.public_attributes);
    }

    #[test]
    fn sequence_positions_are_unique_within_a_seed() {
        let profile = GenerationProfile::default();
        let mut seen = std::collections::BTreeSet::new();
        for seq in 0..500 {
            let r = generate_cti(&profile, 9, seq).unwrap();
            assert!(seen.insert(r.ground_truth_id), "duplicate id at {seq}");
        }
    }

    #[test]
    fn empty_pool_is_rejected() {
        let profile = GenerationProfile {
            ttps: vec![],
            ..GenerationProfile::default()
        };
        assert_eq!(
            generate_cti(&profile, 1, 0).unwrap_err(),
            CtiError::EmptyPool("ttps")
        );
    }

    #[test]
    fn record_has_all_six_keys_in_order() {
        let r = generate_cti(&GenerationProfile::default(), 3, 0).unwrap();
        let keys: Vec<AttributeKey> = r.public_attributes.iter().map(|a| a.key).collect();
        assert_eq!(keys, AttributeKey::ALL.to_vec());
    }

    #[test]
    fn proposal_projection_strips_private_fields() {
        let profile = GenerationProfile::default();
        for seq in 0..1000 {
            let record = generate_cti(&profile, 5, seq).unwrap();
            let proposal =
                generate_proposal(&record, Term(1), LogIndex(0), NodeId::new(0)).unwrap();
            assert_eq!(proposal.entries, record.public_attributes);
            let flat = format!("{proposal:?}");
            for private in record.private_values() {
                assert!(
                    !flat.contains(private),
                    "private value leaked into proposal: {private}"
                );
            }
        }
    }
}
