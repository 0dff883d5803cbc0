//! Authenticated sealing for IKE and the tunneled SIP channel:
//! CBC encryption with trailing pad-length octet, then a truncated-HMAC tag.

use aes::Aes128;
use cbc::cipher::{BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use des::{Des, TdesEde3};
use sha2::{Digest, Sha256};

use super::prf::integ_tag;
use super::registry::{TransformId, TransformKind};
use super::CryptoError;

fn cbc_encrypt(encr: TransformId, key: &[u8], iv: &[u8], data: &mut [u8]) -> Result<(), CryptoError> {
    macro_rules! run {
        ($cipher:ty) => {{
            let mut enc = <cbc::Encryptor<$cipher>>::new_from_slices(key, iv)
                .map_err(|_| CryptoError::KeyLength)?;
            for block in data.chunks_mut(encr.output_len()) {
                enc.encrypt_block_mut(block.into());
            }
        }};
    }
    match encr.name() {
        "ENCR_DES" => run!(Des),
        "ENCR_3DES" => run!(TdesEde3),
        "ENCR_AES_CBC_128" => run!(Aes128),
        other => return Err(CryptoError::UnknownAlgorithm(other.to_string())),
    }
    Ok(())
}

fn cbc_decrypt(encr: TransformId, key: &[u8], iv: &[u8], data: &mut [u8]) -> Result<(), CryptoError> {
    macro_rules! run {
        ($cipher:ty) => {{
            let mut dec = <cbc::Decryptor<$cipher>>::new_from_slices(key, iv)
                .map_err(|_| CryptoError::KeyLength)?;
            for block in data.chunks_mut(encr.output_len()) {
                dec.decrypt_block_mut(block.into());
            }
        }};
    }
    match encr.name() {
        "ENCR_DES" => run!(Des),
        "ENCR_3DES" => run!(TdesEde3),
        "ENCR_AES_CBC_128" => run!(Aes128),
        other => return Err(CryptoError::UnknownAlgorithm(other.to_string())),
    }
    Ok(())
}

/// Deterministic IV: first block of SHA-256 over the seed. The callers feed
/// a per-SA counter so campaign logs replay to identical bytes.
fn derive_iv(encr: TransformId, iv_seed: &[u8]) -> Vec<u8> {
    let digest = Sha256::new().chain_update(b"iv").chain_update(iv_seed).finalize();
    digest[..encr.output_len()].to_vec()
}

/// Seal with additional authenticated data mixed into the tag. Output is
/// IV | ciphertext | tag.
pub fn seal_with_aad(
    encr: TransformId,
    integ: TransformId,
    sk_e: &[u8],
    sk_a: &[u8],
    aad: &[u8],
    plaintext: &[u8],
    iv_seed: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    if encr.kind != TransformKind::Encr {
        return Err(CryptoError::UnknownAlgorithm(encr.name().to_string()));
    }
    if sk_e.len() != encr.key_len() {
        return Err(CryptoError::KeyLength);
    }
    let bs = encr.output_len();
    let iv = derive_iv(encr, iv_seed);

    // zero padding, pad-length octet last
    let pad_len = (bs - (plaintext.len() + 1) % bs) % bs;
    let mut buf = plaintext.to_vec();
    buf.extend(std::iter::repeat(0u8).take(pad_len));
    buf.push(pad_len as u8);
    cbc_encrypt(encr, sk_e, &iv, &mut buf)?;

    let mut out = iv;
    out.append(&mut buf);
    let mut tag_input = aad.to_vec();
    tag_input.extend_from_slice(&out);
    let tag = integ_tag(integ, sk_a, &tag_input)?;
    out.extend_from_slice(&tag);
    Ok(out)
}

/// Inverse of [`seal_with_aad`]; checks the tag before decrypting.
pub fn open_with_aad(
    encr: TransformId,
    integ: TransformId,
    sk_e: &[u8],
    sk_a: &[u8],
    aad: &[u8],
    sealed: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    if encr.kind != TransformKind::Encr {
        return Err(CryptoError::UnknownAlgorithm(encr.name().to_string()));
    }
    if sk_e.len() != encr.key_len() {
        return Err(CryptoError::KeyLength);
    }
    let bs = encr.output_len();
    let tag_len = integ.output_len();
    if sealed.len() < bs + tag_len || (sealed.len() - tag_len) % bs != 0 {
        return Err(CryptoError::IntegrityFailure);
    }
    let (body, tag) = sealed.split_at(sealed.len() - tag_len);
    let mut tag_input = aad.to_vec();
    tag_input.extend_from_slice(body);
    let expect = integ_tag(integ, sk_a, &tag_input)?;
    if expect != tag {
        return Err(CryptoError::IntegrityFailure);
    }

    let (iv, ct) = body.split_at(bs);
    if ct.is_empty() {
        return Err(CryptoError::BadPadding);
    }
    let mut buf = ct.to_vec();
    cbc_decrypt(encr, sk_e, iv, &mut buf)?;
    let pad_len = *buf.last().expect("nonempty") as usize;
    if pad_len + 1 > buf.len() {
        return Err(CryptoError::BadPadding);
    }
    buf.truncate(buf.len() - pad_len - 1);
    Ok(buf)
}

/// Standalone seal: IV | ciphertext | tag with no additional data.
pub fn seal(
    encr: TransformId,
    integ: TransformId,
    sk_e: &[u8],
    sk_a: &[u8],
    plaintext: &[u8],
    iv_seed: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    seal_with_aad(encr, integ, sk_e, sk_a, &[], plaintext, iv_seed)
}

pub fn open(
    encr: TransformId,
    integ: TransformId,
    sk_e: &[u8],
    sk_a: &[u8],
    sealed: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    open_with_aad(encr, integ, sk_e, sk_a, &[], sealed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn pairs() -> Vec<(TransformId, TransformId)> {
        let encrs = ["ENCR_DES", "ENCR_3DES", "ENCR_AES_CBC_128"];
        let integs = ["AUTH_HMAC_MD5_96", "AUTH_HMAC_SHA1_96"];
        encrs
            .iter()
            .flat_map(|e| {
                integs
                    .iter()
                    .map(|i| (TransformId::encr(e).unwrap(), TransformId::integ(i).unwrap()))
            })
            .collect()
    }

    #[test]
    fn round_trip_all_pairs() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for (encr, integ) in pairs() {
            let mut sk_e = vec![0u8; encr.key_len()];
            let mut sk_a = vec![0u8; integ.key_len()];
            rng.fill_bytes(&mut sk_e);
            rng.fill_bytes(&mut sk_a);
            for i in 0..100 {
                let len = rng.gen_range(0..300);
                let mut pt = vec![0u8; len];
                rng.fill_bytes(&mut pt);
                let sealed = seal(encr, integ, &sk_e, &sk_a, &pt, &[i as u8]).unwrap();
                let opened = open(encr, integ, &sk_e, &sk_a, &sealed).unwrap();
                assert_eq!(opened, pt, "{encr}/{integ} len {len}");
            }
        }
    }

    #[test]
    fn single_bit_tampering_always_detected() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let encr = TransformId::encr("ENCR_3DES").unwrap();
        let integ = TransformId::integ("AUTH_HMAC_MD5_96").unwrap();
        let sk_e = vec![9u8; 24];
        let sk_a = vec![5u8; 16];
        let mut rejected = 0usize;
        let trials = 1000;
        for t in 0..trials {
            let mut pt = vec![0u8; 40];
            rng.fill_bytes(&mut pt);
            let mut sealed = seal(encr, integ, &sk_e, &sk_a, &pt, &[t as u8]).unwrap();
            let bit = rng.gen_range(0..sealed.len() * 8);
            sealed[bit / 8] ^= 1 << (bit % 8);
            if open(encr, integ, &sk_e, &sk_a, &sealed).is_err() {
                rejected += 1;
            }
        }
        assert_eq!(rejected, trials);
    }

    #[test]
    fn zero_secret_bundle_opens_for_the_attacker() {
        use crate::crypto::kdf::{derive_ike_keys, KeyLengths};
        let prf = TransformId::prf("PRF_HMAC_SHA1").unwrap();
        let encr = TransformId::encr("ENCR_DES").unwrap();
        let integ = TransformId::integ("AUTH_HMAC_MD5_96").unwrap();
        let lengths = KeyLengths::for_transforms(encr, integ, prf);
        let zero = vec![0u8; 128];
        // the UE derives from the zero secret...
        let ue = derive_ike_keys(prf, &[1; 16], &[2; 16], &zero, &[3; 8], &[4; 8], lengths).unwrap();
        let sealed = seal(encr, integ, &ue.sk_ei, &ue.sk_ai, b"IMSI:001010123456789", b"ctr0").unwrap();
        // ...and the attacker, knowing only public material, recomputes the
        // same bundle and reads the plaintext.
        let attacker =
            derive_ike_keys(prf, &[1; 16], &[2; 16], &zero, &[3; 8], &[4; 8], lengths).unwrap();
        let pt = open(encr, integ, &attacker.sk_ei, &attacker.sk_ai, &sealed).unwrap();
        assert_eq!(pt, b"IMSI:001010123456789");
    }

    #[test]
    fn wrong_key_length_rejected() {
        let encr = TransformId::encr("ENCR_AES_CBC_128").unwrap();
        let integ = TransformId::integ("AUTH_HMAC_SHA1_96").unwrap();
        assert!(matches!(
            seal(encr, integ, &[0u8; 8], &[0u8; 20], b"x", b"iv"),
            Err(CryptoError::KeyLength)
        ));
    }

    #[test]
    fn deterministic_for_fixed_iv_seed() {
        let encr = TransformId::encr("ENCR_AES_CBC_128").unwrap();
        let integ = TransformId::integ("AUTH_HMAC_SHA1_96").unwrap();
        let a = seal(encr, integ, &[1; 16], &[2; 20], b"data", b"iv-seed-1").unwrap();
        let b = seal(encr, integ, &[1; 16], &[2; 20], b"data", b"iv-seed-1").unwrap();
        assert_eq!(a, b);
        let c = seal(encr, integ, &[1; 16], &[2; 20], b"data", b"iv-seed-2").unwrap();
        assert_ne!(a, c);
    }
}
