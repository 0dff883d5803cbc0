//! Transform registry: the algorithm vocabulary shared by the codecs, the
//! simulated UE and the mutation configs.
//!
//! Identifiers match the public IKEv2 transform registries so that logged
//! traffic stays comparable with real traces. The table is intentionally
//! small: it carries exactly the algorithms the harness negotiates or
//! mutates towards.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::Num;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CryptoError;

/// IKEv2 transform type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformKind {
    Encr,
    Prf,
    Integ,
    Dh,
}

impl TransformKind {
    /// Wire value of the transform type (RFC 7296 §3.3.2).
    pub fn wire_type(self) -> u8 {
        match self {
            TransformKind::Encr => 1,
            TransformKind::Prf => 2,
            TransformKind::Integ => 3,
            TransformKind::Dh => 4,
        }
    }

    pub fn from_wire(v: u8) -> Option<Self> {
        match v {
            1 => Some(TransformKind::Encr),
            2 => Some(TransformKind::Prf),
            3 => Some(TransformKind::Integ),
            4 => Some(TransformKind::Dh),
            _ => None,
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TransformKind::Encr => "ENCR",
            TransformKind::Prf => "PRF",
            TransformKind::Integ => "INTEG",
            TransformKind::Dh => "DH",
        };
        f.write_str(s)
    }
}

/// A registered (kind, id) pair. `(kind, id)` and the canonical name are a
/// bijection; construction goes through the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformId {
    pub kind: TransformKind,
    pub id: u16,
}

struct Entry {
    kind: TransformKind,
    id: u16,
    name: &'static str,
    /// Key octets consumed from the key schedule (0 where not applicable).
    key_len: usize,
    /// PRF/INTEG output octets, ENCR block octets, DH modulus octets.
    output_len: usize,
    weak: bool,
}

const ENTRIES: &[Entry] = &[
    Entry { kind: TransformKind::Encr, id: 2, name: "ENCR_DES", key_len: 8, output_len: 8, weak: true },
    Entry { kind: TransformKind::Encr, id: 3, name: "ENCR_3DES", key_len: 24, output_len: 8, weak: true },
    Entry { kind: TransformKind::Encr, id: 12, name: "ENCR_AES_CBC_128", key_len: 16, output_len: 16, weak: false },
    Entry { kind: TransformKind::Prf, id: 1, name: "PRF_HMAC_MD5", key_len: 16, output_len: 16, weak: true },
    Entry { kind: TransformKind::Prf, id: 2, name: "PRF_HMAC_SHA1", key_len: 20, output_len: 20, weak: false },
    Entry { kind: TransformKind::Integ, id: 1, name: "AUTH_HMAC_MD5_96", key_len: 16, output_len: 12, weak: true },
    Entry { kind: TransformKind::Integ, id: 2, name: "AUTH_HMAC_SHA1_96", key_len: 20, output_len: 12, weak: false },
    Entry { kind: TransformKind::Dh, id: 1, name: "MODP_768", key_len: 0, output_len: 96, weak: true },
    Entry { kind: TransformKind::Dh, id: 2, name: "MODP_1024", key_len: 0, output_len: 128, weak: true },
    Entry { kind: TransformKind::Dh, id: 5, name: "MODP_1536", key_len: 0, output_len: 192, weak: true },
    Entry { kind: TransformKind::Dh, id: 14, name: "MODP_2048", key_len: 0, output_len: 256, weak: false },
    Entry { kind: TransformKind::Dh, id: 22, name: "MODP_1024_160PO", key_len: 0, output_len: 128, weak: true },
    Entry { kind: TransformKind::Dh, id: 23, name: "MODP_2048_224PO", key_len: 0, output_len: 256, weak: true },
    Entry { kind: TransformKind::Dh, id: 24, name: "MODP_2048_256PO", key_len: 0, output_len: 256, weak: true },
];

fn entry(kind: TransformKind, id: u16) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.kind == kind && e.id == id)
}

impl TransformId {
    pub fn new(kind: TransformKind, id: u16) -> Option<Self> {
        entry(kind, id).map(|_| TransformId { kind, id })
    }

    pub fn by_name(name: &str) -> Option<Self> {
        ENTRIES
            .iter()
            .find(|e| e.name == name)
            .map(|e| TransformId { kind: e.kind, id: e.id })
    }

    pub fn encr(name: &str) -> Result<Self, CryptoError> {
        Self::checked(name, TransformKind::Encr)
    }

    pub fn prf(name: &str) -> Result<Self, CryptoError> {
        Self::checked(name, TransformKind::Prf)
    }

    pub fn integ(name: &str) -> Result<Self, CryptoError> {
        Self::checked(name, TransformKind::Integ)
    }

    pub fn dh(name: &str) -> Result<Self, CryptoError> {
        Self::checked(name, TransformKind::Dh)
    }

    fn checked(name: &str, kind: TransformKind) -> Result<Self, CryptoError> {
        match Self::by_name(name) {
            Some(t) if t.kind == kind => Ok(t),
            _ if kind == TransformKind::Dh => Err(CryptoError::UnknownGroup(name.to_string())),
            _ => Err(CryptoError::UnknownAlgorithm(name.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        entry(self.kind, self.id).expect("constructed via registry").name
    }

    pub fn key_len(&self) -> usize {
        entry(self.kind, self.id).expect("constructed via registry").key_len
    }

    /// PRF/INTEG output octets, ENCR block octets, DH modulus octets.
    pub fn output_len(&self) -> usize {
        entry(self.kind, self.id).expect("constructed via registry").output_len
    }

    pub fn is_weak(&self) -> bool {
        entry(self.kind, self.id).expect("constructed via registry").weak
    }
}

impl fmt::Display for TransformId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for TransformId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for TransformId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        TransformId::by_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown transform {name}")))
    }
}

/// Iterate all registered transforms of a kind, registry order.
pub fn registered(kind: TransformKind) -> impl Iterator<Item = TransformId> {
    ENTRIES
        .iter()
        .filter(move |e| e.kind == kind)
        .map(|e| TransformId { kind: e.kind, id: e.id })
}

/// MODP group parameters.
///
/// Groups 1/2/5/14 come from RFC 2409/3526; the construction (smallest
/// offset over the binary expansion of pi that yields a safe prime) was
/// re-derived and primality-checked before the constants were frozen here.
/// Groups 22/23/24 are the RFC 5114 prime-order-subgroup sets.
pub struct ModpGroup {
    pub id: u16,
    pub prime_hex: &'static str,
    pub generator_hex: &'static str,
    /// Modulus length in octets; public values are left-padded to this.
    pub modulus_len: usize,
    /// Subgroup order size in bits for the prime-order-subgroup groups.
    pub subgroup_bits: Option<u32>,
}

const MODP_768_PRIME: &str = "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A63A3620FFFFFFFFFFFFFFFF";

const MODP_1024_PRIME: &str = "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7EDEE386BFB5A899FA5AE9F24117C4B1FE649286651ECE65381FFFFFFFFFFFFFFFF";

const MODP_1536_PRIME: &str = "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7EDEE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB9ED529077096966D670C354E4ABC9804F1746C08CA237327FFFFFFFFFFFFFFFF";

const MODP_2048_PRIME: &str = "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7EDEE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3BE39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF6955817183995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

const MODP_1024_160_PRIME: &str = "B10B8F96A080E01DDE92DE5EAE5D54EC52C99FBCFB06A3C69A6A9DCA52D23B616073E28675A23D189838EF1E2EE652C013ECB4AEA906112324975C3CD49B83BFACCBDD7D90C4BD7098488E9C219A73724EFFD6FAE5644738FAA31A4FF55BCCC0A151AF5F0DC8B4BD45BF37DF365C1A65E68CFDA76D4DA708DF1FB2BC2E4A4371";

const MODP_1024_160_GEN: &str = "A4D1CBD5C3FD34126765A442EFB99905F8104DD258AC507FD6406CFF14266D31266FEA1E5C41564B777E690F5504F213160217B4B01B886A5E91547F9E2749F4D7FBD7D3B9A92EE1909D0D2263F80A76A6A24C087A091F531DBF0A0169B6A28AD662A4D18E73AFA32D779D5918D08BC8858F4DCEF97C2A24855E6EEB22B3B2E5";

const MODP_2048_224_PRIME: &str = "AD107E1E9123A9D0D660FAA79559C51FA20D64E5683B9FD1B54B1597B61D0A75E6FA141DF95A56DBAF9A3C407BA1DF15EB3D688A309C180E1DE6B85A1274A0A66D3F8152AD6AC2129037C9EDEFDA4DF8D91E8FEF55B7394B7AD5B7D0B6C12207C9F98D11ED34DBF6C6BA0B2C8BBC27BE6A00E0A0B9C49708B3BF8A317091883681286130BC8985DB1602E714415D9330278273C7DE31EFDC7310F7121FD5A07415987D9ADC0A486DCDF93ACC44328387315D75E198C641A480CD86A1B9E587E8BE60E69CC928B2B9C52172E413042E9B23F10B0E16E79763C9B53DCF4BA80A29E3FB73C16B8E75B97EF363E2FFA31F71CF9DE5384E71B81C0AC4DFFE0C10E64F";

const MODP_2048_224_GEN: &str = "AC4032EF4F2D9AE39DF30B5C8FFDAC506CDEBE7B89998CAF74866A08CFE4FFE3A6824A4E10B9A6F0DD921F01A70C4AFAAB739D7700C29F52C57DB17C620A8652BE5E9001A8D66AD7C17669101999024AF4D027275AC1348BB8A762D0521BC98AE247150422EA1ED409939D54DA7460CDB5F6C6B250717CBEF180EB34118E98D119529A45D6F834566E3025E316A330EFBB77A86F0C1AB15B051AE3D428C8F8ACB70A8137150B8EEB10E183EDD19963DDD9E263E4770589EF6AA21E7F5F2FF381B539CCE3409D13CD566AFBB48D6C019181E1BCFE94B30269EDFE72FE9B6AA4BD7B5A0F1C71CFFF4C19C418E1F6EC017981BC087F2A7065B384B890D3191F2BFA";

const MODP_2048_256_PRIME: &str = "87A8E61DB4B6663CFFBBD19C651959998CEEF608660DD0F25D2CEED4435E3B00E00DF8F1D61957D4FAF7DF4561B2AA3016C3D91134096FAA3BF4296D830E9A7C209E0C6497517ABD5A8A9D306BCF67ED91F9E6725B4758C022E0B1EF4275BF7B6C5BFC11D45F9088B941F54EB1E59BB8BC39A0BF12307F5C4FDB70C581B23F76B63ACAE1CAA6B7902D52526735488A0EF13C6D9A51BFA4AB3AD8347796524D8EF6A167B5A41825D967E144E5140564251CCACB83E6B486F6B3CA3F7971506026C0B857F689962856DED4010ABD0BE621C3A3960A54E710C375F26375D7014103A4B54330C198AF126116D2276E11715F693877FAD7EF09CADB094AE91E1A1597";

const MODP_2048_256_GEN: &str = "3FB32C9B73134D0B2E77506660EDBD484CA7B18F21EF205407F4793A1A0BA12510DBC15077BE463FFF4FED4AAC0BB555BE3A6C1B0C6B47B1BC3773BF7E8C6F62901228F8C28CBB18A55AE31341000A650196F931C77A57F2DDF463E5E9EC144B777DE62AAAB8A8628AC376D282D6ED3864E67982428EBC831D14348F6F2F9193B5045AF2767164E1DFC967C1FB3F2E55A4BD1BFFE83B9C80D052B985D182EA0ADB2A3B7313D3FE14C8484B1E052588B9B7D2BBD2DF016199ECD06E1557CD0915B3353BBB64E0EC377FD028370DF92B52C7891428CDC67EB6184B523D1DB246C32F63078490F00EF8D647D148D47954515E2327CFEF98C582664B4C0F6CC41659";

const GROUPS: &[ModpGroup] = &[
    ModpGroup { id: 1, prime_hex: MODP_768_PRIME, generator_hex: "2", modulus_len: 96, subgroup_bits: None },
    ModpGroup { id: 2, prime_hex: MODP_1024_PRIME, generator_hex: "2", modulus_len: 128, subgroup_bits: None },
    ModpGroup { id: 5, prime_hex: MODP_1536_PRIME, generator_hex: "2", modulus_len: 192, subgroup_bits: None },
    ModpGroup { id: 14, prime_hex: MODP_2048_PRIME, generator_hex: "2", modulus_len: 256, subgroup_bits: None },
    ModpGroup { id: 22, prime_hex: MODP_1024_160_PRIME, generator_hex: MODP_1024_160_GEN, modulus_len: 128, subgroup_bits: Some(160) },
    ModpGroup { id: 23, prime_hex: MODP_2048_224_PRIME, generator_hex: MODP_2048_224_GEN, modulus_len: 256, subgroup_bits: Some(224) },
    ModpGroup { id: 24, prime_hex: MODP_2048_256_PRIME, generator_hex: MODP_2048_256_GEN, modulus_len: 256, subgroup_bits: Some(256) },
];

pub fn modp_group(group: TransformId) -> Result<&'static ModpGroup, CryptoError> {
    if group.kind != TransformKind::Dh {
        return Err(CryptoError::UnknownGroup(group.name().to_string()));
    }
    GROUPS
        .iter()
        .find(|g| g.id == group.id)
        .ok_or_else(|| CryptoError::UnknownGroup(group.name().to_string()))
}

/// Parsed (prime, generator) pairs, cached per group id.
pub fn modp_numbers(group: TransformId) -> Result<(&'static BigUint, &'static BigUint), CryptoError> {
    static CACHE: OnceLock<HashMap<u16, (BigUint, BigUint)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        GROUPS
            .iter()
            .map(|g| {
                let p = BigUint::from_str_radix(g.prime_hex, 16).expect("static prime hex");
                let gen = BigUint::from_str_radix(g.generator_hex, 16).expect("static generator hex");
                (g.id, (p, gen))
            })
            .collect()
    });
    let g = modp_group(group)?;
    let (p, gen) = cache.get(&g.id).expect("all groups cached");
    Ok((p, gen))
}

/// DH group modulus size in bits, used for downgrade-floor comparisons.
pub fn modulus_bits(group: TransformId) -> Result<u32, CryptoError> {
    Ok(modp_group(group)?.modulus_len as u32 * 8)
}
