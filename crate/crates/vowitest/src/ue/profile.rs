//! Vulnerability profiles: a compliance baseline plus the per-issue
//! deviation switches that stand in for the behavioral spread of real
//! devices.

use serde::{Deserialize, Serialize};

use crate::crypto::{TransformId, TransformKind};

use super::UeError;

/// Deviation switches. The compliant baseline is all-false; each shipped
/// single-flag profile enables exactly one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UeFlags {
    /// Accept DES/3DES when the chosen SA names them, even unadvertised.
    pub accept_weak_encr: bool,
    /// Accept HMAC_MD5_96 integrity the same way.
    pub accept_weak_integ: bool,
    /// Accept PRF_HMAC_MD5 the same way.
    pub accept_weak_prf: bool,
    /// The profile's advertised DH list leads with a weak group, and the UE
    /// establishes with it when chosen.
    pub advertise_weak_dh: bool,
    /// Retry INVALID_KE_PAYLOAD with any group the profile advertises,
    /// ignoring the weakness floor.
    pub accept_weak_ke_retry: bool,
    /// Retry INVALID_KE_PAYLOAD with any group at or above downgrade_floor,
    /// advertised or not.
    pub accept_downgrade_ke: bool,
    /// Missing KE payload: continue with an all-zero shared secret.
    pub zero_dh_on_missing_ke: bool,
    /// Missing nonce payload: treat the responder nonce as 16 zero octets.
    pub zero_nonce_on_missing_nonce: bool,
    /// Answer an MD5 digest challenge with an MD5-computed response.
    pub sip_accept_md5: bool,
    /// Echo an unsupported digest algorithm name while computing AKAv1.
    pub sip_copy_algorithm: bool,
    /// Continue registration when the server selects a weak sec-agree pair.
    pub sip_accept_weak_sec: bool,
    /// Stay aborted through wifi off/on cycles after an adversarial abort.
    pub deadlock_on_error: bool,
    /// Re-emit the cached reply when a handled message is replayed.
    pub respond_to_replay: bool,
}

impl UeFlags {
    pub fn all_false(&self) -> bool {
        *self == UeFlags::default()
    }
}

/// Probabilistic response used to exercise the repetition-aggregation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlakeBehavior {
    /// Which adversarial stimulus flakes; only "replay" is defined.
    pub operator: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvertisedTransforms {
    pub encr: Vec<TransformId>,
    pub integ: Vec<TransformId>,
    pub prf: Vec<TransformId>,
    pub dh: Vec<TransformId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeProfile {
    pub name: String,
    pub imsi: String,
    /// "0x" + 32 hex digits.
    pub secret_k: String,
    pub op_key: String,
    pub advertised: AdvertisedTransforms,
    #[serde(default)]
    pub flags: UeFlags,
    /// Weakest DH group accepted on a downgrade retry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downgrade_floor: Option<TransformId>,
    #[serde(default = "default_boot_delay")]
    pub boot_delay_ms: u64,
    #[serde(default = "default_aka_algorithm")]
    pub aka_algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flake: Option<FlakeBehavior>,
}

fn default_boot_delay() -> u64 {
    500
}

fn default_aka_algorithm() -> String {
    "keyed_hash".to_string()
}

fn decode_key(field: &str, text: &str) -> Result<[u8; 16], UeError> {
    let hex_part = text
        .strip_prefix("0x")
        .ok_or_else(|| UeError::SchemaViolation(format!("{field} must start with 0x")))?;
    let bytes = hex::decode(hex_part)
        .map_err(|_| UeError::SchemaViolation(format!("{field} is not valid hex")))?;
    bytes
        .try_into()
        .map_err(|_| UeError::SchemaViolation(format!("{field} must be 16 octets")))
}

impl UeProfile {
    pub fn parse(text: &str) -> Result<Self, UeError> {
        let profile: UeProfile =
            serde_json::from_str(text).map_err(|e| UeError::SchemaViolation(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, UeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UeError::SchemaViolation(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), UeError> {
        if self.imsi.len() != 15 || !self.imsi.bytes().all(|b| b.is_ascii_digit()) {
            return Err(UeError::SchemaViolation(format!(
                "imsi must be 15 decimal digits, got {:?}",
                self.imsi
            )));
        }
        self.secret_k()?;
        self.op_key()?;
        crate::crypto::algorithm_by_name(&self.aka_algorithm)
            .map_err(|e| UeError::SchemaViolation(e.to_string()))?;
        for (list, kind) in [
            (&self.advertised.encr, TransformKind::Encr),
            (&self.advertised.integ, TransformKind::Integ),
            (&self.advertised.prf, TransformKind::Prf),
            (&self.advertised.dh, TransformKind::Dh),
        ] {
            if list.is_empty() {
                return Err(UeError::SchemaViolation(format!("empty advertised {kind} list")));
            }
            if let Some(t) = list.iter().find(|t| t.kind != kind) {
                return Err(UeError::SchemaViolation(format!(
                    "{} listed under advertised {kind}",
                    t.name()
                )));
            }
        }
        if self.flags.all_false() {
            // compliant baseline advertises nothing weak on the IKE side
            let weak = [&self.advertised.encr, &self.advertised.integ, &self.advertised.prf, &self.advertised.dh]
                .iter()
                .flat_map(|l| l.iter())
                .find(|t| t.is_weak());
            if let Some(t) = weak {
                return Err(UeError::SchemaViolation(format!(
                    "profile with no flags advertises weak {}",
                    t.name()
                )));
            }
        }
        if let Some(f) = &self.flake {
            if f.operator != "replay" {
                return Err(UeError::SchemaViolation(format!(
                    "unsupported flake operator {}",
                    f.operator
                )));
            }
            if !(0.0..=1.0).contains(&f.probability) {
                return Err(UeError::SchemaViolation("flake probability out of range".into()));
            }
        }
        Ok(())
    }

    pub fn secret_k(&self) -> Result<[u8; 16], UeError> {
        decode_key("secret_k", &self.secret_k)
    }

    pub fn op_key(&self) -> Result<[u8; 16], UeError> {
        decode_key("op_key", &self.op_key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn compliant_json() -> String {
        r#"{
            "name": "compliant",
            "imsi": "001010123456789",
            "secret_k": "0x00112233445566778899AABBCCDDEEFF",
            "op_key": "0xFFEEDDCCBBAA99887766554433221100",
            "advertised": {
                "encr": ["ENCR_AES_CBC_128"],
                "integ": ["AUTH_HMAC_SHA1_96"],
                "prf": ["PRF_HMAC_SHA1"],
                "dh": ["MODP_2048"]
            },
            "flags": {}
        }"#
        .to_string()
    }

    #[test]
    fn compliant_profile_parses_with_all_flags_false() {
        let p = UeProfile::parse(&compliant_json()).unwrap();
        assert!(p.flags.all_false());
        assert_eq!(p.boot_delay_ms, 500);
        assert_eq!(p.secret_k().unwrap()[0], 0x00);
        assert_eq!(p.op_key().unwrap()[0], 0xFF);
    }

    #[test]
    fn zero_dh_profile_sets_single_flag() {
        let text = compliant_json()
            .replace("\"compliant\"", "\"zero_dh\"")
            .replace("\"flags\": {}", "\"flags\": {\"zero_dh_on_missing_ke\": true}");
        let p = UeProfile::parse(&text).unwrap();
        assert!(p.flags.zero_dh_on_missing_ke);
        let f = UeFlags { zero_dh_on_missing_ke: true, ..Default::default() };
        assert_eq!(p.flags, f);
    }

    #[test]
    fn fourteen_digit_imsi_rejected() {
        let text = compliant_json().replace("001010123456789", "00101012345678");
        assert!(matches!(UeProfile::parse(&text), Err(UeError::SchemaViolation(_))));
    }

    #[test]
    fn unknown_flag_rejected() {
        let text = compliant_json().replace("\"flags\": {}", "\"flags\": {\"accept_anything\": true}");
        assert!(matches!(UeProfile::parse(&text), Err(UeError::SchemaViolation(_))));
    }

    #[test]
    fn compliant_baseline_may_not_advertise_weak() {
        let text = compliant_json().replace("ENCR_AES_CBC_128", "ENCR_DES");
        assert!(matches!(UeProfile::parse(&text), Err(UeError::SchemaViolation(_))));
    }

    #[test]
    fn weak_advertisement_allowed_with_flag() {
        let text = compliant_json()
            .replace("[\"MODP_2048\"]", "[\"MODP_1024\", \"MODP_2048\"]")
            .replace("\"flags\": {}", "\"flags\": {\"advertise_weak_dh\": true}");
        let p = UeProfile::parse(&text).unwrap();
        assert_eq!(p.advertised.dh[0].name(), "MODP_1024");
    }
}
