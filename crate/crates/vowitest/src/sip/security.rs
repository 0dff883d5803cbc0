//! Security-Client / Security-Server mechanism lists (sec-agree syntax).

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityMechanism {
    pub mechanism: String,
    /// Encryption algorithm, e.g. "aes-cbc", "des-cbc", "des-ede3-cbc".
    pub ealg: String,
    /// Integrity algorithm, e.g. "hmac-sha-1-96", "hmac-md5-96".
    pub alg: String,
    pub spi_c: u32,
    pub spi_s: u32,
    pub port_c: u16,
    pub port_s: u16,
}

impl SecurityMechanism {
    pub fn ipsec(ealg: &str, alg: &str) -> Self {
        SecurityMechanism {
            mechanism: "ipsec-3gpp".to_string(),
            ealg: ealg.to_string(),
            alg: alg.to_string(),
            spi_c: 1000,
            spi_s: 1001,
            port_c: 5061,
            port_s: 5062,
        }
    }

    pub fn to_value(&self) -> String {
        format!(
            "{}; ealg={}; alg={}; spi-c={}; spi-s={}; port-c={}; port-s={}",
            self.mechanism, self.ealg, self.alg, self.spi_c, self.spi_s, self.port_c, self.port_s
        )
    }

    pub fn from_value(s: &str) -> Option<Self> {
        let mut parts = s.split(';').map(str::trim);
        let mechanism = parts.next()?.to_string();
        if mechanism.is_empty() || mechanism.contains('=') {
            return None;
        }
        let mut out = SecurityMechanism {
            mechanism,
            ealg: String::new(),
            alg: String::new(),
            spi_c: 0,
            spi_s: 0,
            port_c: 0,
            port_s: 0,
        };
        for p in parts {
            let (k, v) = p.split_once('=')?;
            match k.trim() {
                "ealg" => out.ealg = v.trim().to_string(),
                "alg" => out.alg = v.trim().to_string(),
                "spi-c" => out.spi_c = v.trim().parse().ok()?,
                "spi-s" => out.spi_s = v.trim().parse().ok()?,
                "port-c" => out.port_c = v.trim().parse().ok()?,
                "port-s" => out.port_s = v.trim().parse().ok()?,
                _ => {}
            }
        }
        Some(out)
    }

    /// Render a comma-separated header value from a mechanism list.
    pub fn list_to_value(list: &[SecurityMechanism]) -> String {
        list.iter().map(|m| m.to_value()).collect::<Vec<_>>().join(", ")
    }

    pub fn list_from_value(value: &str) -> Vec<SecurityMechanism> {
        value
            .split(',')
            .filter_map(|item| SecurityMechanism::from_value(item.trim()))
            .collect()
    }
}
